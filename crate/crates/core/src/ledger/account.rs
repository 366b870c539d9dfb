use std::collections::HashMap;
use std::fmt;

use rand::Rng;

use crate::types::{Address, Timestamp, H256};

use super::transaction::{TransactionRecord, TxKind};

const ADDRESS_DOMAIN: &[u8] = b"ethervote/address";

/// The secret behind an account. Signing is a keyed SHA-256 digest, so the
/// same secret is needed to verify a signature.
#[derive(Clone, PartialEq, Eq)]
pub struct AccountSecret(pub [u8; 32]);

impl fmt::Debug for AccountSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AccountSecret(..)")
    }
}

impl AccountSecret {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill(&mut bytes);
        Self(bytes)
    }

    /// The address is the trailing 20 bytes of a domain-separated digest of the secret.
    pub fn address(&self) -> Address {
        let digest = H256::digest_of(&[ADDRESS_DOMAIN, &self.0]);
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest.0[12..]);
        Address(out)
    }

    pub fn sign(&self, message: &[u8]) -> H256 {
        H256::digest_of(&[&self.0, message])
    }
}

/// An unlocked wallet account: address plus the secret that signs for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    address: Address,
    secret: AccountSecret,
}

impl Account {
    pub fn from_secret(secret: AccountSecret) -> Self {
        Self {
            address: secret.address(),
            secret,
        }
    }

    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_secret(AccountSecret::generate(rng))
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn secret(&self) -> &AccountSecret {
        &self.secret
    }

    pub fn sign_transaction(
        &self,
        nonce: u64,
        kind: TxKind,
        payload: Vec<u8>,
        timestamp: Timestamp,
    ) -> TransactionRecord {
        TransactionRecord::new_signed(self.address, &self.secret, nonce, kind, payload, timestamp)
    }
}

/// Secrets of the accounts the simulated node can verify signatures for.
#[derive(Debug, Default, Clone)]
pub struct Keyring {
    secrets: HashMap<Address, AccountSecret>,
}

impl Keyring {
    pub fn enroll(&mut self, account: &Account) {
        self.secrets
            .insert(account.address(), account.secret().clone());
    }

    pub fn get(&self, address: &Address) -> Option<&AccountSecret> {
        self.secrets.get(address)
    }

    pub fn verify(&self, tx: &TransactionRecord) -> bool {
        self.get(&tx.sender)
            .is_some_and(|secret| secret.sign(&tx.signed_bytes()) == tx.signature)
    }
}

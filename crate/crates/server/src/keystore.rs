//! Password-locked accounts held by the service node.

use std::collections::HashMap;

use ethervote_core::{Account, Address, H256};
use rand::distr::{Alphanumeric, SampleString};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const PASSWORD_LEN: usize = 20;

struct Locked {
    account: Account,
    salt: [u8; 16],
    digest: H256,
}

fn password_digest(salt: &[u8], password: &str) -> H256 {
    H256::digest_of(&[b"ethervote/password", salt, password.as_bytes()])
}

/// Accounts and their password digests. Plaintext passwords are never kept.
pub struct Keystore {
    rng: ChaCha20Rng,
    accounts: HashMap<Address, Locked>,
}

impl std::fmt::Debug for Keystore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Keystore")
            .field("accounts", &self.accounts.len())
            .finish_non_exhaustive()
    }
}

impl Keystore {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            accounts: HashMap::new(),
        }
    }

    /// Draws a fresh account and password. Nothing is stored until `insert`.
    pub fn generate(&mut self) -> (Account, String) {
        let account = Account::generate(&mut self.rng);
        let password = Alphanumeric.sample_string(&mut self.rng, PASSWORD_LEN);
        (account, password)
    }

    pub fn insert(&mut self, account: Account, password: &str) {
        // Salts come from the OS so that account derivation stays reproducible.
        let salt: [u8; 16] = rand::random();
        let digest = password_digest(&salt, password);
        self.accounts.insert(
            account.address(),
            Locked {
                account,
                salt,
                digest,
            },
        );
    }

    pub fn unlock(&self, address: &Address, password: &str) -> Option<&Account> {
        let locked = self.accounts.get(address)?;
        (password_digest(&locked.salt, password) == locked.digest).then_some(&locked.account)
    }

    pub fn get(&self, address: &Address) -> Option<&Account> {
        self.accounts.get(address).map(|l| &l.account)
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }
}

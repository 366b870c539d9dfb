use std::fmt;

use serde::Serialize;

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::types::{Address, Timestamp, H256};

use super::account::AccountSecret;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TxKind {
    ContractInit,
    Register,
    OtpIssue,
    VoteCast,
    PhaseAdvance,
}

impl TxKind {
    pub fn tag(self) -> u8 {
        match self {
            TxKind::ContractInit => 1,
            TxKind::Register => 2,
            TxKind::OtpIssue => 3,
            TxKind::VoteCast => 4,
            TxKind::PhaseAdvance => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            1 => TxKind::ContractInit,
            2 => TxKind::Register,
            3 => TxKind::OtpIssue,
            4 => TxKind::VoteCast,
            5 => TxKind::PhaseAdvance,
            _ => return None,
        })
    }
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A signed election transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRecord {
    pub tx_hash: H256,
    pub sender: Address,
    pub nonce: u64,
    pub kind: TxKind,
    pub payload: Vec<u8>,
    pub timestamp: Timestamp,
    pub signature: H256,
}

fn encode_signed_fields(
    enc: &mut Encoder,
    sender: &Address,
    nonce: u64,
    kind: TxKind,
    payload: &[u8],
    timestamp: Timestamp,
) {
    enc.bytes(sender.as_bytes())
        .u64(nonce)
        .tag(kind.tag())
        .bytes(payload)
        .u64(timestamp);
}

impl TransactionRecord {
    pub(crate) fn new_signed(
        sender: Address,
        secret: &AccountSecret,
        nonce: u64,
        kind: TxKind,
        payload: Vec<u8>,
        timestamp: Timestamp,
    ) -> Self {
        let mut tx = TransactionRecord {
            tx_hash: H256::ZERO,
            sender,
            nonce,
            kind,
            payload,
            timestamp,
            signature: H256::ZERO,
        };
        tx.signature = secret.sign(&tx.signed_bytes());
        tx.tx_hash = tx.compute_hash();
        tx
    }

    /// Bytes covered by the signature: every field except the signature.
    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        encode_signed_fields(
            &mut enc,
            &self.sender,
            self.nonce,
            self.kind,
            &self.payload,
            self.timestamp,
        );
        enc.finish()
    }

    /// Full canonical serialization, signature last.
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        encode_signed_fields(
            &mut enc,
            &self.sender,
            self.nonce,
            self.kind,
            &self.payload,
            self.timestamp,
        );
        enc.bytes(self.signature.as_bytes());
        enc.finish()
    }

    pub fn compute_hash(&self) -> H256 {
        H256::digest_of(&[&self.encode()])
    }

    /// Decodes a canonical serialization. The hash is derived from the bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let sender = Address(dec.fixed()?);
        let nonce = dec.u64()?;
        let kind = TxKind::from_tag(dec.tag()?).ok_or(DecodeError::Invalid("transaction kind"))?;
        let payload = dec.bytes()?.to_vec();
        let timestamp = dec.u64()?;
        let signature = H256(dec.fixed()?);
        dec.finish()?;
        Ok(TransactionRecord {
            tx_hash: H256::digest_of(&[bytes]),
            sender,
            nonce,
            kind,
            payload,
            timestamp,
            signature,
        })
    }
}

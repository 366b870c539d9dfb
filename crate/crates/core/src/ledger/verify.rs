use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::types::{Address, H256};

use super::account::Keyring;
use super::store::{decode_chain, ChainEntry};

/// Why a block failed verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// The chain has no genesis block.
    Empty,
    /// A record could not be decoded.
    Malformed(String),
    IndexMismatch,
    BadGenesis,
    BrokenLink,
    BlockHashMismatch,
    TxHashMismatch,
    TxCount,
    ReservedSender,
    NonceGap,
    Timestamp,
    BadSignature,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::Empty => f.write_str("no genesis block"),
            Fault::Malformed(err) => write!(f, "malformed record: {err}"),
            Fault::IndexMismatch => f.write_str("block index out of sequence"),
            Fault::BadGenesis => f.write_str("genesis block is not canonical"),
            Fault::BrokenLink => f.write_str("prev_hash does not match predecessor"),
            Fault::BlockHashMismatch => f.write_str("block hash does not match header"),
            Fault::TxHashMismatch => f.write_str("transaction hash does not match contents"),
            Fault::TxCount => f.write_str("block must hold exactly one transaction"),
            Fault::ReservedSender => f.write_str("transaction signed by the null address"),
            Fault::NonceGap => f.write_str("sender nonce out of sequence"),
            Fault::Timestamp => f.write_str("timestamp out of order"),
            Fault::BadSignature => f.write_str("signature does not verify"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub valid: bool,
    /// Number of blocks examined (including any that failed to decode).
    pub length: u64,
    pub first_bad_index: Option<u64>,
    pub fault: Option<Fault>,
    pub head_hash: Option<H256>,
}

impl VerificationReport {
    fn ok(entries: &[ChainEntry]) -> Self {
        VerificationReport {
            valid: true,
            length: entries.len() as u64,
            first_bad_index: None,
            fault: None,
            head_hash: entries.last().map(|e| e.block.block_hash),
        }
    }

    fn bad(length: u64, index: u64, fault: Fault) -> Self {
        VerificationReport {
            valid: false,
            length,
            first_bad_index: Some(index),
            fault: Some(fault),
            head_hash: None,
        }
    }
}

/// Checks one entry against its predecessor. `nonces` tracks the last nonce
/// seen per sender and is updated on success.
fn check_entry(
    index: u64,
    entry: &ChainEntry,
    prev: Option<&ChainEntry>,
    nonces: &mut HashMap<Address, u64>,
    keyring: Option<&Keyring>,
) -> Result<(), Fault> {
    let block = &entry.block;
    if block.index != index {
        return Err(Fault::IndexMismatch);
    }
    if block.compute_hash() != block.block_hash {
        return Err(Fault::BlockHashMismatch);
    }
    if block.tx_hashes.len() != entry.transactions.len() {
        return Err(Fault::TxCount);
    }
    let Some(prev) = prev else {
        if block.prev_hash != H256::ZERO || !block.tx_hashes.is_empty() {
            return Err(Fault::BadGenesis);
        }
        return Ok(());
    };
    if block.prev_hash != prev.block.block_hash {
        return Err(Fault::BrokenLink);
    }
    if block.timestamp < prev.block.timestamp {
        return Err(Fault::Timestamp);
    }
    if entry.transactions.len() != 1 {
        return Err(Fault::TxCount);
    }
    for (tx, claimed) in entry.transactions.iter().zip(&block.tx_hashes) {
        if tx.compute_hash() != *claimed || tx.tx_hash != *claimed {
            return Err(Fault::TxHashMismatch);
        }
        if tx.sender.is_zero() {
            return Err(Fault::ReservedSender);
        }
        if tx.timestamp != block.timestamp {
            return Err(Fault::Timestamp);
        }
        let last = nonces.get(&tx.sender).copied().unwrap_or(0);
        if tx.nonce != last + 1 {
            return Err(Fault::NonceGap);
        }
        if let Some(keyring) = keyring {
            if !keyring.verify(tx) {
                return Err(Fault::BadSignature);
            }
        }
    }
    for tx in &entry.transactions {
        nonces.insert(tx.sender, tx.nonce);
    }
    Ok(())
}

/// Recomputes every digest and link. Stops at the first faulty block.
/// Signatures are checked only when a keyring is supplied.
pub fn verify_entries(entries: &[ChainEntry], keyring: Option<&Keyring>) -> VerificationReport {
    let length = entries.len() as u64;
    if entries.is_empty() {
        return VerificationReport::bad(0, 0, Fault::Empty);
    }
    let mut nonces = HashMap::new();
    let mut prev = None;
    for (i, entry) in entries.iter().enumerate() {
        if let Err(fault) = check_entry(i as u64, entry, prev, &mut nonces, keyring) {
            return VerificationReport::bad(length, i as u64, fault);
        }
        prev = Some(entry);
    }
    VerificationReport::ok(entries)
}

/// Verifies a serialized chain. Structural decode failures are reported as
/// an invalid block at the record that failed, never as a panic.
pub fn verify_bytes(bytes: &[u8]) -> VerificationReport {
    let decoded = decode_chain(bytes);
    let report = verify_entries(&decoded.entries, None);
    match decoded.failure {
        None => report,
        Some((index, err)) => {
            if !report.valid && !decoded.entries.is_empty() {
                // Entries before `index` decoded, so the digest fault comes first.
                VerificationReport {
                    length: index + 1,
                    ..report
                }
            } else {
                VerificationReport::bad(index + 1, index, Fault::Malformed(err.to_string()))
            }
        }
    }
}

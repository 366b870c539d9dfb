//! Simulated public blockchain.
//!
//! An append-only sequence of blocks, one signed transaction per block, each
//! block committing to its predecessor's hash. The only mutation is
//! [`Ledger::append_transaction`]; there is no API that removes or rewrites a
//! block. A ledger can be mirrored to an append-only file, and a file is only
//! accepted back if it verifies.

mod account;
mod block;
mod store;
mod transaction;
mod verify;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::types::{Address, Timestamp, H256};

pub use account::{Account, AccountSecret, Keyring};
pub use block::{Block, BlockRef};
pub use store::{decode_chain, encode_chain, ChainEntry, DecodedChain};
pub use transaction::{TransactionRecord, TxKind};
pub use verify::{verify_bytes, verify_entries, Fault, VerificationReport};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("signature does not verify for sender {0}")]
    BadSignature(Address),
    #[error("the null address cannot sign transactions")]
    ReservedSender,
    #[error("bad nonce for {sender}: expected {expected}, got {got}")]
    BadNonce {
        sender: Address,
        expected: u64,
        got: u64,
    },
    #[error("transaction hash does not match its contents")]
    HashMismatch,
    #[error("timestamp {got} precedes chain head timestamp {head}")]
    StaleTimestamp { head: Timestamp, got: Timestamp },
    #[error("transaction {0} not found")]
    NotFound(H256),
    #[error("block index {index} out of range (chain length {length})")]
    OutOfRange { index: u64, length: u64 },
    #[error("chain failed verification: {0:?}")]
    Corrupt(VerificationReport),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct Ledger {
    entries: Vec<ChainEntry>,
    /// tx hash -> (block index, position within block)
    by_hash: HashMap<H256, (usize, usize)>,
    nonces: HashMap<Address, u64>,
    keyring: Keyring,
    file: Option<File>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("length", &self.entries.len())
            .field("head", &self.head().block_hash)
            .finish()
    }
}

impl Ledger {
    /// In-memory chain holding only the genesis block.
    pub fn new(genesis_timestamp: Timestamp) -> Self {
        Self::from_verified(vec![ChainEntry {
            block: Block::genesis(genesis_timestamp),
            transactions: Vec::new(),
        }])
    }

    fn from_verified(entries: Vec<ChainEntry>) -> Self {
        let mut by_hash = HashMap::new();
        let mut nonces = HashMap::new();
        for (i, entry) in entries.iter().enumerate() {
            for (j, tx) in entry.transactions.iter().enumerate() {
                by_hash.insert(tx.tx_hash, (i, j));
                nonces.insert(tx.sender, tx.nonce);
            }
        }
        Ledger {
            entries,
            by_hash,
            nonces,
            keyring: Keyring::default(),
            file: None,
        }
    }

    /// Creates a new chain file containing only the genesis block.
    pub fn create(path: &Path, genesis_timestamp: Timestamp) -> Result<Self, LedgerError> {
        let mut ledger = Self::new(genesis_timestamp);
        let mut file = OpenOptions::new().create_new(true).append(true).open(path)?;
        file.write_all(&ledger.entries[0].encode_record())?;
        file.sync_data()?;
        ledger.file = Some(file);
        Ok(ledger)
    }

    /// Opens an existing chain file. The file must pass verification; new
    /// blocks are appended to it from then on.
    pub fn open(path: &Path) -> Result<Self, LedgerError> {
        let bytes = std::fs::read(path)?;
        let mut ledger = Self::from_bytes(&bytes)?;
        ledger.file = Some(OpenOptions::new().append(true).open(path)?);
        Ok(ledger)
    }

    /// Rebuilds an in-memory ledger from a serialized chain.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LedgerError> {
        let report = verify_bytes(bytes);
        if !report.valid {
            return Err(LedgerError::Corrupt(report));
        }
        Ok(Self::from_verified(decode_chain(bytes).entries))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_chain(&self.entries)
    }

    /// Makes `account`'s signatures verifiable by this node.
    pub fn enroll(&mut self, account: &Account) {
        self.keyring.enroll(account);
    }

    pub fn keyring(&self) -> &Keyring {
        &self.keyring
    }

    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> BlockRef {
        self.entries.last().expect("genesis always present").block.block_ref()
    }

    pub fn head_timestamp(&self) -> Timestamp {
        self.entries.last().expect("genesis always present").block.timestamp
    }

    /// Last nonce used by `sender`, 0 if it has never transacted.
    pub fn nonce_of(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonce_of(sender) + 1
    }

    /// Appends `tx` in a new block of its own.
    pub fn append_transaction(&mut self, tx: TransactionRecord) -> Result<BlockRef, LedgerError> {
        if tx.sender.is_zero() {
            return Err(LedgerError::ReservedSender);
        }
        if !self.keyring.verify(&tx) {
            return Err(LedgerError::BadSignature(tx.sender));
        }
        if tx.compute_hash() != tx.tx_hash {
            return Err(LedgerError::HashMismatch);
        }
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::BadNonce {
                sender: tx.sender,
                expected,
                got: tx.nonce,
            });
        }
        let head = self.head();
        let head_timestamp = self.head_timestamp();
        if tx.timestamp < head_timestamp {
            return Err(LedgerError::StaleTimestamp {
                head: head_timestamp,
                got: tx.timestamp,
            });
        }

        let block = Block::new(head.index + 1, head.block_hash, tx.timestamp, vec![tx.tx_hash]);
        let entry = ChainEntry {
            block,
            transactions: vec![tx],
        };
        if let Some(file) = self.file.as_mut() {
            file.write_all(&entry.encode_record())?;
            file.flush()?;
        }

        let block_ref = entry.block.block_ref();
        let tx = &entry.transactions[0];
        self.nonces.insert(tx.sender, tx.nonce);
        self.by_hash
            .insert(tx.tx_hash, (self.entries.len(), 0));
        self.entries.push(entry);
        Ok(block_ref)
    }

    pub fn get_transaction(
        &self,
        tx_hash: &H256,
    ) -> Result<(&TransactionRecord, BlockRef), LedgerError> {
        let &(block, pos) = self
            .by_hash
            .get(tx_hash)
            .ok_or(LedgerError::NotFound(*tx_hash))?;
        let entry = &self.entries[block];
        Ok((&entry.transactions[pos], entry.block.block_ref()))
    }

    pub fn get_block(&self, index: u64) -> Result<&Block, LedgerError> {
        usize::try_from(index)
            .ok()
            .and_then(|i| self.entries.get(i))
            .map(|entry| &entry.block)
            .ok_or(LedgerError::OutOfRange {
                index,
                length: self.len(),
            })
    }

    pub fn entries(&self) -> &[ChainEntry] {
        &self.entries
    }

    /// All transactions in chain order with the block holding each.
    pub fn transactions(&self) -> impl Iterator<Item = (BlockRef, &TransactionRecord)> {
        self.entries.iter().flat_map(|entry| {
            let block_ref = entry.block.block_ref();
            entry.transactions.iter().map(move |tx| (block_ref, tx))
        })
    }

    /// Recomputes every block and transaction digest, link, nonce and
    /// (for enrolled senders) signature.
    pub fn verify_chain(&self) -> VerificationReport {
        verify_entries(&self.entries, Some(&self.keyring))
    }
}

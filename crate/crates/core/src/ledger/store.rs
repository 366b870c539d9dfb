//! On-disk chain format: a concatenation of block records.
//!
//! ```text
//! record   := len:u32be body
//! body     := index prev_hash timestamp tx_count tx_hash* block_hash tx*
//! tx       := field containing the canonical transaction serialization
//! ```
//!
//! Every item inside `body` is a length-prefixed field (see `codec`).

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::types::H256;

use super::block::Block;
use super::transaction::TransactionRecord;

/// A block together with the transactions it commits to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainEntry {
    pub block: Block,
    pub transactions: Vec<TransactionRecord>,
}

/// Upper bound on transactions per decoded block; anything larger is corrupt.
const MAX_TXS_PER_BLOCK: u64 = 1 << 16;

impl ChainEntry {
    pub fn encode_record(&self) -> Vec<u8> {
        let mut body = Encoder::new();
        self.block.encode_header(&mut body);
        body.bytes(self.block.block_hash.as_bytes());
        for tx in &self.transactions {
            body.bytes(&tx.encode());
        }
        let mut record = Encoder::new();
        record.bytes(&body.finish());
        record.finish()
    }

    fn decode_body(body: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(body);
        let index = dec.u64()?;
        let prev_hash = H256(dec.fixed()?);
        let timestamp = dec.u64()?;
        let count = dec.u64()?;
        if count > MAX_TXS_PER_BLOCK {
            return Err(DecodeError::Invalid("transaction count"));
        }
        let tx_hashes = (0..count)
            .map(|_| dec.fixed().map(H256))
            .collect::<Result<Vec<_>, _>>()?;
        let block_hash = H256(dec.fixed()?);
        let transactions = (0..count)
            .map(|_| dec.bytes().and_then(TransactionRecord::decode))
            .collect::<Result<Vec<_>, _>>()?;
        dec.finish()?;
        Ok(ChainEntry {
            block: Block {
                index,
                prev_hash,
                timestamp,
                tx_hashes,
                block_hash,
            },
            transactions,
        })
    }
}

/// Result of structurally decoding a chain file: every record that decoded
/// cleanly, plus the position and cause of the first one that did not.
#[derive(Debug)]
pub struct DecodedChain {
    pub entries: Vec<ChainEntry>,
    pub failure: Option<(u64, DecodeError)>,
}

pub fn decode_chain(bytes: &[u8]) -> DecodedChain {
    let mut dec = Decoder::new(bytes);
    let mut entries = Vec::new();
    while !dec.is_empty() {
        let index = entries.len() as u64;
        match dec.bytes().and_then(ChainEntry::decode_body) {
            Ok(entry) => entries.push(entry),
            Err(err) => {
                return DecodedChain {
                    entries,
                    failure: Some((index, err)),
                }
            }
        }
    }
    DecodedChain {
        entries,
        failure: None,
    }
}

pub fn encode_chain<'a>(entries: impl IntoIterator<Item = &'a ChainEntry>) -> Vec<u8> {
    entries
        .into_iter()
        .flat_map(|entry| entry.encode_record())
        .collect()
}

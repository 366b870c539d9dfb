use serde::Serialize;

use crate::codec::Encoder;
use crate::types::{Timestamp, H256};

/// Block header. Each non-genesis block carries exactly one transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub prev_hash: H256,
    pub timestamp: Timestamp,
    pub tx_hashes: Vec<H256>,
    pub block_hash: H256,
}

/// Position of a block in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BlockRef {
    pub index: u64,
    pub block_hash: H256,
}

impl Block {
    pub fn genesis(timestamp: Timestamp) -> Self {
        Self::new(0, H256::ZERO, timestamp, Vec::new())
    }

    pub fn new(index: u64, prev_hash: H256, timestamp: Timestamp, tx_hashes: Vec<H256>) -> Self {
        let mut block = Block {
            index,
            prev_hash,
            timestamp,
            tx_hashes,
            block_hash: H256::ZERO,
        };
        block.block_hash = block.compute_hash();
        block
    }

    pub(crate) fn encode_header(&self, enc: &mut Encoder) {
        enc.u64(self.index)
            .bytes(self.prev_hash.as_bytes())
            .u64(self.timestamp)
            .u64(self.tx_hashes.len() as u64);
        for hash in &self.tx_hashes {
            enc.bytes(hash.as_bytes());
        }
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_header(&mut enc);
        enc.finish()
    }

    pub fn compute_hash(&self) -> H256 {
        H256::digest_of(&[&self.header_bytes()])
    }

    pub fn block_ref(&self) -> BlockRef {
        BlockRef {
            index: self.index,
            block_hash: self.block_hash,
        }
    }
}

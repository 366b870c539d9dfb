//! Independent checks over a serialized chain.

use std::collections::{BTreeMap, HashSet};

use crate::contract::decode_vote;
use crate::ledger::{decode_chain, TxKind};

/// Counts VoteCast transactions per candidate straight from chain bytes.
/// Returns `None` if the bytes do not decode completely.
pub fn count_votes(chain: &[u8]) -> Option<BTreeMap<u32, u64>> {
    let decoded = decode_chain(chain);
    if decoded.failure.is_some() {
        return None;
    }
    let mut counts = BTreeMap::new();
    for tx in decoded.entries.iter().flat_map(|e| &e.transactions) {
        if tx.kind == TxKind::VoteCast {
            *counts.entry(decode_vote(&tx.payload).ok()?).or_insert(0) += 1;
        }
    }
    Some(counts)
}

/// Returns every needle that occurs as a byte substring of `haystack`.
/// One pass over the haystack per distinct needle length.
pub fn find_plaintexts<'a>(haystack: &[u8], needles: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut by_len: BTreeMap<usize, HashSet<&[u8]>> = BTreeMap::new();
    let needles: Vec<&str> = needles.into_iter().filter(|n| !n.is_empty()).collect();
    for needle in &needles {
        by_len.entry(needle.len()).or_default().insert(needle.as_bytes());
    }
    let mut found = HashSet::new();
    for (len, set) in &by_len {
        for window in haystack.windows(*len) {
            if set.contains(window) {
                found.insert(window);
            }
        }
    }
    needles
        .into_iter()
        .filter(|n| found.contains(n.as_bytes()))
        .collect()
}

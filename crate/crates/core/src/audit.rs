//! Offline audit of a persisted chain: ledger verification followed by a
//! replay of the contract from genesis.

use serde::Serialize;

use crate::contract::replay::replay_entries;
use crate::contract::{decode_vote, ElectionPhase};
use crate::ledger::{decode_chain, verify_bytes, TxKind, VerificationReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainAudit {
    pub verification: VerificationReport,
    /// `None` when the chain could not be replayed (or did not verify).
    pub phase: Option<ElectionPhase>,
    pub replay_error: Option<String>,
    /// Replayed counts equal a direct count of VoteCast transactions and the
    /// number of voters marked as voted.
    pub tally_consistent: bool,
    pub tally: Vec<(String, u64)>,
}

impl ChainAudit {
    pub fn valid(&self) -> bool {
        self.verification.valid && self.replay_error.is_none() && self.tally_consistent
    }
}

pub fn audit_chain(bytes: &[u8]) -> ChainAudit {
    let verification = verify_bytes(bytes);
    let mut audit = ChainAudit {
        verification,
        phase: None,
        replay_error: None,
        tally_consistent: false,
        tally: Vec::new(),
    };
    if !audit.verification.valid {
        return audit;
    }
    let entries = decode_chain(bytes).entries;
    let state = match replay_entries(&entries) {
        Ok(state) => state,
        Err(err) => {
            audit.replay_error = Some(err.to_string());
            return audit;
        }
    };
    let mut direct = vec![0u64; state.counts.len()];
    let mut stray = false;
    for tx in entries.iter().flat_map(|e| &e.transactions) {
        if tx.kind != TxKind::VoteCast {
            continue;
        }
        let slot = decode_vote(&tx.payload).ok().and_then(|id| {
            state
                .config
                .as_ref()
                .and_then(|c| c.candidates.iter().position(|cand| cand.id == id))
        });
        match slot {
            Some(i) => direct[i] += 1,
            None => stray = true,
        }
    }
    audit.tally_consistent =
        !stray && direct == state.counts && state.counts.iter().sum::<u64>() == state.voted_count();
    audit.phase = state.phase;
    if let Some(config) = &state.config {
        audit.tally = config
            .candidates
            .iter()
            .zip(&state.counts)
            .map(|(c, &n)| (c.name.clone(), n))
            .collect();
    }
    audit
}

//! Rebuilds contract state from the chain alone.
//!
//! This walks the transactions from genesis and re-derives every voter
//! record and count, rejecting any transition the contract would never have
//! produced. It shares payload decoding with the live contract but none of
//! its state-update code, so comparing the two catches drift between what
//! the contract holds in memory and what it wrote to the chain.

use thiserror::Error;

use crate::codec::DecodeError;
use crate::ledger::{ChainEntry, TransactionRecord, TxKind};

use super::payload;
use super::state::{ElectionPhase, ElectionState, VoterRecord, VoterStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("block {block}: {reason}")]
pub struct ReplayError {
    pub block: u64,
    pub reason: String,
}

fn fail(block: u64, reason: impl Into<String>) -> ReplayError {
    ReplayError {
        block,
        reason: reason.into(),
    }
}

pub fn replay_entries(entries: &[ChainEntry]) -> Result<ElectionState, ReplayError> {
    let mut state = ElectionState::default();
    for entry in entries {
        for tx in &entry.transactions {
            apply(&mut state, tx).map_err(|reason| fail(entry.block.index, reason))?;
        }
    }
    Ok(state)
}

fn decoded<T>(r: Result<T, DecodeError>) -> Result<T, String> {
    r.map_err(|e| format!("bad payload: {e}"))
}

fn apply(state: &mut ElectionState, tx: &TransactionRecord) -> Result<(), String> {
    if tx.kind == TxKind::ContractInit {
        if state.config.is_some() {
            return Err("second ContractInit".into());
        }
        let config = decoded(payload::decode_config(&tx.payload))?;
        config.validate().map_err(|e| format!("invalid config: {e}"))?;
        if !config.is_trusted(&tx.sender) {
            return Err("ContractInit from untrusted sender".into());
        }
        state.counts = vec![0; config.candidates.len()];
        state.config = Some(config);
        state.phase = Some(ElectionPhase::Setup);
        return Ok(());
    }

    let (Some(config), Some(phase)) = (&state.config, state.phase) else {
        return Err(format!("{} before ContractInit", tx.kind));
    };
    let trusted = config.is_trusted(&tx.sender);

    match tx.kind {
        TxKind::ContractInit => unreachable!(),
        TxKind::PhaseAdvance => {
            let to = decoded(payload::decode_phase(&tx.payload))?;
            if !trusted {
                return Err("PhaseAdvance from untrusted sender".into());
            }
            if phase.next() != Some(to) {
                return Err(format!("illegal phase transition {phase} -> {to}"));
            }
            state.phase = Some(to);
        }
        TxKind::Register => {
            let (voter, commitment) = decoded(payload::decode_register(&tx.payload))?;
            if !trusted || phase != ElectionPhase::Registration {
                return Err("Register outside Registration or from untrusted sender".into());
            }
            if config.is_trusted(&voter) || voter.is_zero() {
                return Err("ineligible voter address".into());
            }
            if state.voters.contains_key(&voter) {
                return Err(format!("{voter} registered twice"));
            }
            if state.voters.values().any(|r| r.commitment == commitment) {
                return Err("identity registered under two addresses".into());
            }
            state.voters.insert(
                voter,
                VoterRecord {
                    address: voter,
                    commitment,
                    status: VoterStatus::Registered,
                },
            );
        }
        TxKind::OtpIssue => {
            let (otp_digest, issued_at) = decoded(payload::decode_otp_issue(&tx.payload))?;
            if phase != ElectionPhase::Voting {
                return Err("OtpIssue outside Voting".into());
            }
            if issued_at != tx.timestamp {
                return Err("OtpIssue timestamp mismatch".into());
            }
            let record = state
                .voters
                .get_mut(&tx.sender)
                .ok_or("OtpIssue for unregistered sender")?;
            if record.status == VoterStatus::Voted {
                return Err("OtpIssue after vote".into());
            }
            record.status = VoterStatus::OtpIssued {
                otp_digest,
                issued_at,
            };
        }
        TxKind::VoteCast => {
            let candidate = decoded(payload::decode_vote(&tx.payload))?;
            if phase != ElectionPhase::Voting {
                return Err("VoteCast outside Voting".into());
            }
            let slot = config
                .candidate_index(candidate)
                .ok_or_else(|| format!("vote for unknown candidate {candidate}"))?;
            let window = config.otp_window_seconds;
            let record = state
                .voters
                .get_mut(&tx.sender)
                .ok_or("VoteCast from unregistered sender")?;
            match record.status {
                VoterStatus::OtpIssued { issued_at, .. } if tx.timestamp <= issued_at + window => {}
                VoterStatus::OtpIssued { .. } => return Err("VoteCast with expired OTP".into()),
                VoterStatus::Registered => return Err("VoteCast without OTP".into()),
                VoterStatus::Voted => return Err("second VoteCast from sender".into()),
            }
            record.status = VoterStatus::Voted;
            state.counts[slot] += 1;
        }
    }
    Ok(())
}

//! The election contract.
//!
//! A state machine over four phases (setup, registration, voting, closed)
//! whose every accepted state change is written to the ledger as a signed
//! transaction. Rejected calls write nothing. The in-memory state is a cache
//! of the chain: [`replay::replay_entries`] rebuilds it from the chain alone.
//!
//! Authentication is two-factor. The first factor is the signing account
//! itself. The second is re-entering the personal data whose commitment was
//! stored at registration, which releases a six-digit OTP through the
//! gateway. The chain stores only `SHA-256(code ∥ address)` and the issue
//! time; the code itself never reaches the ledger.

mod payload;
pub mod replay;
mod state;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gateway::{DeliveryReceipt, GatewayError, OtpGateway};
use crate::identity::{self, IdentityError, PersonalData};
use crate::ledger::{Account, BlockRef, Ledger, LedgerError, TxKind};
use crate::types::{Address, Timestamp, H256};

pub use payload::{
    decode_config, decode_otp_issue, decode_phase, decode_register, decode_vote, encode_config,
    otp_digest,
};
pub use replay::ReplayError;
pub use state::{
    Candidate, CandidateTally, ElectionConfig, ElectionPhase, ElectionState, TallySnapshot,
    VoterRecord, VoterStatus, DEFAULT_OTP_WINDOW_SECONDS,
};

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("election has not been initialized")]
    NotInitialized,
    #[error("election is already initialized")]
    AlreadyInitialized,
    #[error("sender is not a trusted address")]
    Unauthorized,
    #[error("invalid election config: {0}")]
    InvalidConfig(&'static str),
    #[error("election is already closed")]
    AlreadyClosed,
    #[error("operation requires phase {expected}, election is in {actual}")]
    WrongPhase {
        expected: ElectionPhase,
        actual: ElectionPhase,
    },
    #[error("address is already registered")]
    AlreadyRegistered,
    #[error("address cannot be registered as a voter: {0}")]
    InvalidVoter(&'static str),
    #[error("address is not registered")]
    NotRegistered,
    #[error("invalid personal data: {0}")]
    InvalidPersonalData(#[from] IdentityError),
    #[error("personal data does not match the registered commitment")]
    AuthFailed,
    #[error("address has already voted")]
    AlreadyVoted,
    #[error("no OTP has been issued to this address")]
    NoOtpIssued,
    #[error("OTP does not match")]
    OtpInvalid,
    #[error("OTP has expired; authenticate again")]
    OtpExpired,
    #[error("unknown candidate {0}")]
    UnknownCandidate(u32),
    #[error("transaction not found")]
    NotFound,
    #[error("transaction is not a vote")]
    NotAVote,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Ledger(LedgerError),
}

impl From<LedgerError> for ContractError {
    fn from(err: LedgerError) -> Self {
        match err {
            LedgerError::NotFound(_) => ContractError::NotFound,
            other => ContractError::Ledger(other),
        }
    }
}

impl ContractError {
    /// Stable identifier used in reports and API responses.
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::NotInitialized => "NotInitialized",
            ContractError::AlreadyInitialized => "AlreadyInitialized",
            ContractError::Unauthorized => "Unauthorized",
            ContractError::InvalidConfig(_) => "InvalidConfig",
            ContractError::AlreadyClosed => "AlreadyClosed",
            ContractError::WrongPhase { .. } => "WrongPhase",
            ContractError::AlreadyRegistered => "AlreadyRegistered",
            ContractError::InvalidVoter(_) => "InvalidVoter",
            ContractError::NotRegistered => "NotRegistered",
            ContractError::InvalidPersonalData(_) => "InvalidPersonalData",
            ContractError::AuthFailed => "AuthFailed",
            ContractError::AlreadyVoted => "AlreadyVoted",
            ContractError::NoOtpIssued => "NoOtpIssued",
            ContractError::OtpInvalid => "OtpInvalid",
            ContractError::OtpExpired => "OtpExpired",
            ContractError::UnknownCandidate(_) => "UnknownCandidate",
            ContractError::NotFound => "NotFound",
            ContractError::NotAVote => "NotAVote",
            ContractError::Gateway(GatewayError::DuplicateChannel(_)) => "DuplicateChannel",
            ContractError::Gateway(GatewayError::NoDeliveryChannel(_)) => "NoDeliveryChannel",
            ContractError::Ledger(_) => "LedgerRejected",
        }
    }
}

/// Returned for every accepted call. The hash is the caller's receipt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TxReceipt {
    pub tx_hash: H256,
    pub block: BlockRef,
}

/// Result of a successful authentication. The code itself went to the gateway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OtpIssueResult {
    pub receipt: TxReceipt,
    pub delivery: DeliveryReceipt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoteReceiptView {
    pub tx_hash: H256,
    pub block_index: u64,
    pub block_hash: H256,
    pub sender: Address,
    pub candidate_id: u32,
    pub timestamp: Timestamp,
}

pub struct Contract {
    ledger: Ledger,
    state: ElectionState,
    gateway: Arc<OtpGateway>,
    otp_rng: ChaCha20Rng,
}

impl std::fmt::Debug for Contract {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Contract")
            .field("ledger", &self.ledger)
            .field("phase", &self.state.phase)
            .finish_non_exhaustive()
    }
}

impl Contract {
    /// Wraps `ledger`, rebuilding state from whatever it already holds.
    pub fn new(ledger: Ledger, gateway: Arc<OtpGateway>, otp_seed: u64) -> Result<Self, ReplayError> {
        let state = replay::replay_entries(ledger.entries())?;
        Ok(Contract {
            ledger,
            state,
            gateway,
            otp_rng: ChaCha20Rng::seed_from_u64(otp_seed),
        })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn state(&self) -> &ElectionState {
        &self.state
    }

    pub fn gateway(&self) -> &Arc<OtpGateway> {
        &self.gateway
    }

    pub fn phase(&self) -> Option<ElectionPhase> {
        self.state.phase
    }

    pub fn config(&self) -> Option<&ElectionConfig> {
        self.state.config.as_ref()
    }

    pub fn voter(&self, address: &Address) -> Option<&VoterRecord> {
        self.state.voters.get(address)
    }

    /// Lets the node verify signatures from `account`.
    pub fn enroll(&mut self, account: &Account) {
        self.ledger.enroll(account);
    }

    /// Rebuilds state from the chain and compares it with the live state.
    pub fn replay_matches(&self) -> Result<bool, ReplayError> {
        let rebuilt = replay::replay_entries(self.ledger.entries())?;
        Ok(rebuilt.canonical_bytes() == self.state.canonical_bytes() && rebuilt == self.state)
    }

    fn submit(
        &mut self,
        sender: &Account,
        kind: TxKind,
        payload: Vec<u8>,
        now: Timestamp,
    ) -> Result<TxReceipt, ContractError> {
        let nonce = self.ledger.next_nonce(&sender.address());
        let tx = sender.sign_transaction(nonce, kind, payload, now);
        let tx_hash = tx.tx_hash;
        let block = self.ledger.append_transaction(tx)?;
        Ok(TxReceipt { tx_hash, block })
    }

    fn initialized(&self) -> Result<(&ElectionConfig, ElectionPhase), ContractError> {
        match (&self.state.config, self.state.phase) {
            (Some(config), Some(phase)) => Ok((config, phase)),
            _ => Err(ContractError::NotInitialized),
        }
    }

    fn require_phase(&self, expected: ElectionPhase) -> Result<&ElectionConfig, ContractError> {
        let (config, actual) = self.initialized()?;
        if actual != expected {
            return Err(ContractError::WrongPhase { expected, actual });
        }
        Ok(config)
    }

    pub fn init_election(
        &mut self,
        sender: &Account,
        config: ElectionConfig,
        now: Timestamp,
    ) -> Result<TxReceipt, ContractError> {
        if self.state.config.is_some() {
            return Err(ContractError::AlreadyInitialized);
        }
        config.validate().map_err(ContractError::InvalidConfig)?;
        if !config.is_trusted(&sender.address()) {
            return Err(ContractError::Unauthorized);
        }
        let receipt = self.submit(sender, TxKind::ContractInit, payload::encode_config(&config), now)?;
        self.state.counts = vec![0; config.candidates.len()];
        self.state.config = Some(config);
        self.state.phase = Some(ElectionPhase::Setup);
        Ok(receipt)
    }

    pub fn advance_phase(&mut self, sender: &Account, now: Timestamp) -> Result<TxReceipt, ContractError> {
        let (config, phase) = self.initialized()?;
        if !config.is_trusted(&sender.address()) {
            return Err(ContractError::Unauthorized);
        }
        let next = phase.next().ok_or(ContractError::AlreadyClosed)?;
        let receipt = self.submit(sender, TxKind::PhaseAdvance, payload::encode_phase(next), now)?;
        self.state.phase = Some(next);
        Ok(receipt)
    }

    /// Registers `voter` under the commitment of `data`. The phone number is
    /// handed to the gateway registry; only the commitment goes on chain.
    pub fn register_citizen(
        &mut self,
        sender: &Account,
        voter: Address,
        data: &PersonalData,
        now: Timestamp,
    ) -> Result<TxReceipt, ContractError> {
        let config = self.require_phase(ElectionPhase::Registration)?;
        if !config.is_trusted(&sender.address()) {
            return Err(ContractError::Unauthorized);
        }
        if config.is_trusted(&voter) {
            return Err(ContractError::InvalidVoter("trusted addresses cannot vote"));
        }
        if voter.is_zero() {
            return Err(ContractError::InvalidVoter("null address"));
        }
        if self.state.voters.contains_key(&voter) {
            return Err(ContractError::AlreadyRegistered);
        }
        let commitment = identity::commit(data)?;
        // One person, one address.
        if self.state.voters.values().any(|r| r.commitment == commitment) {
            return Err(ContractError::AlreadyRegistered);
        }

        self.gateway.register_channel(voter, &data.phone)?;
        let receipt = match self.submit(
            sender,
            TxKind::Register,
            payload::encode_register(&voter, &commitment),
            now,
        ) {
            Ok(receipt) => receipt,
            Err(err) => {
                self.gateway.remove_channel(&voter);
                return Err(err);
            }
        };
        self.state.voters.insert(
            voter,
            VoterRecord {
                address: voter,
                commitment,
                status: VoterStatus::Registered,
            },
        );
        Ok(receipt)
    }

    /// Second identification factor. On success a fresh OTP replaces any
    /// outstanding one and is delivered through the gateway.
    pub fn authenticate(
        &mut self,
        sender: &Account,
        data: &PersonalData,
        now: Timestamp,
    ) -> Result<OtpIssueResult, ContractError> {
        self.require_phase(ElectionPhase::Voting)?;
        let address = sender.address();
        let record = self
            .state
            .voters
            .get(&address)
            .ok_or(ContractError::NotRegistered)?;
        // Malformed data can never match a stored commitment.
        let matches = identity::commit(data).is_ok_and(|c| c == record.commitment);
        if !matches {
            return Err(ContractError::AuthFailed);
        }
        if record.status == VoterStatus::Voted {
            return Err(ContractError::AlreadyVoted);
        }

        let code = format!("{:06}", self.otp_rng.random_range(0..1_000_000u32));
        let otp_digest = payload::otp_digest(&code, &address);
        let receipt = self.submit(
            sender,
            TxKind::OtpIssue,
            payload::encode_otp_issue(&otp_digest, now),
            now,
        )?;
        if let Some(record) = self.state.voters.get_mut(&address) {
            record.status = VoterStatus::OtpIssued {
                otp_digest,
                issued_at: now,
            };
        }
        let delivery = self.gateway.deliver(address, &code, now)?;
        Ok(OtpIssueResult { receipt, delivery })
    }

    /// Casts a vote. The code is valid on the closed interval
    /// `[issued_at, issued_at + otp_window_seconds]`.
    pub fn cast_vote(
        &mut self,
        sender: &Account,
        candidate_id: u32,
        otp_code: &str,
        now: Timestamp,
    ) -> Result<TxReceipt, ContractError> {
        let config = self.require_phase(ElectionPhase::Voting)?;
        let window = config.otp_window_seconds;
        let slot = config.candidate_index(candidate_id);
        let address = sender.address();
        let record = self
            .state
            .voters
            .get(&address)
            .ok_or(ContractError::NotRegistered)?;
        let (expected_digest, issued_at) = match record.status {
            VoterStatus::Voted => return Err(ContractError::AlreadyVoted),
            VoterStatus::Registered => return Err(ContractError::NoOtpIssued),
            VoterStatus::OtpIssued {
                otp_digest,
                issued_at,
            } => (otp_digest, issued_at),
        };
        let slot = slot.ok_or(ContractError::UnknownCandidate(candidate_id))?;
        if now > issued_at.saturating_add(window) {
            return Err(ContractError::OtpExpired);
        }
        if payload::otp_digest(otp_code, &address) != expected_digest {
            return Err(ContractError::OtpInvalid);
        }

        let receipt = self.submit(sender, TxKind::VoteCast, payload::encode_vote(candidate_id), now)?;
        if let Some(record) = self.state.voters.get_mut(&address) {
            record.status = VoterStatus::Voted;
        }
        self.state.counts[slot] += 1;
        Ok(receipt)
    }

    /// Tally. Trusted addresses may read it at any time; everyone once closed.
    pub fn results(&self, viewer: Option<&Address>) -> Result<TallySnapshot, ContractError> {
        let (config, phase) = self.initialized()?;
        let allowed = phase == ElectionPhase::Closed || viewer.is_some_and(|a| config.is_trusted(a));
        if !allowed {
            return Err(ContractError::Unauthorized);
        }
        let candidates = config
            .candidates
            .iter()
            .zip(&self.state.counts)
            .map(|(c, &votes)| CandidateTally {
                id: c.id,
                name: c.name.clone(),
                votes,
            })
            .collect::<Vec<_>>();
        Ok(TallySnapshot {
            phase,
            total_votes: candidates.iter().map(|c| c.votes).sum(),
            candidates,
        })
    }

    pub fn verify_receipt(&self, tx_hash: &H256) -> Result<VoteReceiptView, ContractError> {
        let (tx, block) = self.ledger.get_transaction(tx_hash)?;
        if tx.kind != TxKind::VoteCast {
            return Err(ContractError::NotAVote);
        }
        let candidate_id = payload::decode_vote(&tx.payload).map_err(|_| ContractError::NotAVote)?;
        Ok(VoteReceiptView {
            tx_hash: tx.tx_hash,
            block_index: block.index,
            block_hash: block.block_hash,
            sender: tx.sender,
            candidate_id,
            timestamp: tx.timestamp,
        })
    }
}

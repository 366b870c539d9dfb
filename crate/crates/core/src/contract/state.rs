use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::identity::IdentityCommitment;
use crate::types::{Address, Timestamp, H256};

pub const DEFAULT_OTP_WINDOW_SECONDS: u64 = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionConfig {
    pub trusted: BTreeSet<Address>,
    pub candidates: Vec<Candidate>,
    pub otp_window_seconds: u64,
}

impl ElectionConfig {
    /// Candidate ids are assigned in list order, starting at 0.
    pub fn new<S: Into<String>>(
        trusted: impl IntoIterator<Item = Address>,
        candidate_names: impl IntoIterator<Item = S>,
        otp_window_seconds: u64,
    ) -> Self {
        ElectionConfig {
            trusted: trusted.into_iter().collect(),
            candidates: candidate_names
                .into_iter()
                .enumerate()
                .map(|(i, name)| Candidate {
                    id: i as u32,
                    name: name.into(),
                })
                .collect(),
            otp_window_seconds,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.trusted.is_empty() {
            return Err("no trusted addresses");
        }
        if self.trusted.contains(&Address::ZERO) {
            return Err("null address cannot be trusted");
        }
        if self.candidates.is_empty() {
            return Err("no candidates");
        }
        let ids: BTreeSet<u32> = self.candidates.iter().map(|c| c.id).collect();
        if ids.len() != self.candidates.len() {
            return Err("duplicate candidate id");
        }
        if self.candidates.iter().any(|c| c.name.trim().is_empty()) {
            return Err("empty candidate name");
        }
        if self.otp_window_seconds == 0 {
            return Err("otp window must be positive");
        }
        Ok(())
    }

    pub fn is_trusted(&self, address: &Address) -> bool {
        self.trusted.contains(address)
    }

    pub(crate) fn candidate_index(&self, id: u32) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElectionPhase {
    Setup,
    Registration,
    Voting,
    Closed,
}

impl ElectionPhase {
    pub fn next(self) -> Option<Self> {
        match self {
            ElectionPhase::Setup => Some(ElectionPhase::Registration),
            ElectionPhase::Registration => Some(ElectionPhase::Voting),
            ElectionPhase::Voting => Some(ElectionPhase::Closed),
            ElectionPhase::Closed => None,
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => ElectionPhase::Setup,
            1 => ElectionPhase::Registration,
            2 => ElectionPhase::Voting,
            3 => ElectionPhase::Closed,
            _ => return None,
        })
    }
}

impl fmt::Display for ElectionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Per-address election status. The OTP metadata exists only while a code
/// is outstanding; `Voted` is terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoterStatus {
    Registered,
    OtpIssued { otp_digest: H256, issued_at: Timestamp },
    Voted,
}

impl VoterStatus {
    fn tag(&self) -> u8 {
        match self {
            VoterStatus::Registered => 0,
            VoterStatus::OtpIssued { .. } => 1,
            VoterStatus::Voted => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VoterStatus::Registered => "Registered",
            VoterStatus::OtpIssued { .. } => "OtpIssued",
            VoterStatus::Voted => "Voted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoterRecord {
    pub address: Address,
    pub commitment: IdentityCommitment,
    pub status: VoterStatus,
}

impl VoterRecord {
    pub fn otp_digest(&self) -> Option<H256> {
        match self.status {
            VoterStatus::OtpIssued { otp_digest, .. } => Some(otp_digest),
            _ => None,
        }
    }

    pub fn otp_issued_at(&self) -> Option<Timestamp> {
        match self.status {
            VoterStatus::OtpIssued { issued_at, .. } => Some(issued_at),
            _ => None,
        }
    }
}

/// Complete contract state. Everything here is derivable from the chain.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ElectionState {
    pub config: Option<ElectionConfig>,
    pub phase: Option<ElectionPhase>,
    pub voters: BTreeMap<Address, VoterRecord>,
    /// Vote counts, parallel to `config.candidates`.
    pub counts: Vec<u64>,
}

impl ElectionState {
    /// Deterministic byte image of the state, for bit-level comparison.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        match &self.config {
            Some(config) => {
                enc.bytes(&super::payload::encode_config(config));
            }
            None => {
                enc.bytes(&[]);
            }
        }
        enc.bytes(&self.phase.map(|p| vec![p.tag()]).unwrap_or_default());
        enc.u64(self.voters.len() as u64);
        for record in self.voters.values() {
            enc.bytes(record.address.as_bytes())
                .bytes(record.commitment.as_bytes())
                .tag(record.status.tag());
            match record.status {
                VoterStatus::OtpIssued {
                    otp_digest,
                    issued_at,
                } => {
                    enc.bytes(otp_digest.as_bytes()).u64(issued_at);
                }
                _ => {
                    enc.bytes(&[]).bytes(&[]);
                }
            }
        }
        enc.u64(self.counts.len() as u64);
        for &count in &self.counts {
            enc.u64(count);
        }
        enc.finish()
    }

    pub fn voted_count(&self) -> u64 {
        self.voters
            .values()
            .filter(|r| r.status == VoterStatus::Voted)
            .count() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateTally {
    pub id: u32,
    pub name: String,
    pub votes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TallySnapshot {
    pub phase: ElectionPhase,
    pub candidates: Vec<CandidateTally>,
    pub total_votes: u64,
}

impl TallySnapshot {
    pub fn votes_for(&self, id: u32) -> Option<u64> {
        self.candidates.iter().find(|c| c.id == id).map(|c| c.votes)
    }
}

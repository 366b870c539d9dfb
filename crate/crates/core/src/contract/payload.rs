//! Transaction payload encodings, one per transaction kind.

use std::collections::BTreeSet;

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::identity::IdentityCommitment;
use crate::types::{Address, Timestamp, H256};

use super::state::{Candidate, ElectionConfig, ElectionPhase};

/// Upper bound when decoding list lengths.
const MAX_ITEMS: u64 = 1 << 16;

pub fn encode_config(config: &ElectionConfig) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.u64(config.trusted.len() as u64);
    for address in &config.trusted {
        enc.bytes(address.as_bytes());
    }
    enc.u64(config.candidates.len() as u64);
    for candidate in &config.candidates {
        enc.u64(u64::from(candidate.id)).bytes(candidate.name.as_bytes());
    }
    enc.u64(config.otp_window_seconds);
    enc.finish()
}

pub fn decode_config(bytes: &[u8]) -> Result<ElectionConfig, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let n_trusted = dec.u64()?;
    if n_trusted > MAX_ITEMS {
        return Err(DecodeError::Invalid("trusted count"));
    }
    let trusted = (0..n_trusted)
        .map(|_| dec.fixed().map(Address))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let n_candidates = dec.u64()?;
    if n_candidates > MAX_ITEMS {
        return Err(DecodeError::Invalid("candidate count"));
    }
    let candidates = (0..n_candidates)
        .map(|_| {
            let id = u32::try_from(dec.u64()?).map_err(|_| DecodeError::Invalid("candidate id"))?;
            let name = std::str::from_utf8(dec.bytes()?)
                .map_err(|_| DecodeError::Invalid("candidate name"))?
                .to_owned();
            Ok(Candidate { id, name })
        })
        .collect::<Result<Vec<_>, DecodeError>>()?;
    let otp_window_seconds = dec.u64()?;
    dec.finish()?;
    Ok(ElectionConfig {
        trusted,
        candidates,
        otp_window_seconds,
    })
}

pub fn encode_register(voter: &Address, commitment: &IdentityCommitment) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(voter.as_bytes()).bytes(commitment.as_bytes());
    enc.finish()
}

pub fn decode_register(bytes: &[u8]) -> Result<(Address, IdentityCommitment), DecodeError> {
    let mut dec = Decoder::new(bytes);
    let voter = Address(dec.fixed()?);
    let commitment = IdentityCommitment(H256(dec.fixed()?));
    dec.finish()?;
    Ok((voter, commitment))
}

pub fn encode_otp_issue(otp_digest: &H256, issued_at: Timestamp) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(otp_digest.as_bytes()).u64(issued_at);
    enc.finish()
}

pub fn decode_otp_issue(bytes: &[u8]) -> Result<(H256, Timestamp), DecodeError> {
    let mut dec = Decoder::new(bytes);
    let digest = H256(dec.fixed()?);
    let issued_at = dec.u64()?;
    dec.finish()?;
    Ok((digest, issued_at))
}

pub fn encode_vote(candidate_id: u32) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.u64(u64::from(candidate_id));
    enc.finish()
}

pub fn decode_vote(bytes: &[u8]) -> Result<u32, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let id = u32::try_from(dec.u64()?).map_err(|_| DecodeError::Invalid("candidate id"))?;
    dec.finish()?;
    Ok(id)
}

pub fn encode_phase(phase: ElectionPhase) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.tag(phase.tag());
    enc.finish()
}

pub fn decode_phase(bytes: &[u8]) -> Result<ElectionPhase, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let phase = ElectionPhase::from_tag(dec.tag()?).ok_or(DecodeError::Invalid("phase tag"))?;
    dec.finish()?;
    Ok(phase)
}

/// OTP commitment stored on chain: SHA-256(code ∥ address bytes).
pub fn otp_digest(code: &str, address: &Address) -> H256 {
    H256::digest_of(&[code.as_bytes(), address.as_bytes()])
}

//! Bearer sessions with sliding expiry.

use std::collections::HashMap;

use ethervote_core::{Address, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const SESSION_TTL_SECONDS: u64 = 30 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionError {
    Unknown,
    Expired,
}

#[derive(Debug, Clone, Copy)]
struct Session {
    address: Address,
    expires_at: Timestamp,
}

#[derive(Debug)]
pub struct Sessions {
    rng: ChaCha20Rng,
    live: HashMap<String, Session>,
}

impl Sessions {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            live: HashMap::new(),
        }
    }

    /// Opens a session for `address`; returns the token and its expiry.
    pub fn open(&mut self, address: Address, now: Timestamp) -> (String, Timestamp) {
        let token = hex::encode(self.rng.random::<[u8; 32]>());
        let expires_at = now + SESSION_TTL_SECONDS;
        self.live.insert(token.clone(), Session { address, expires_at });
        (token, expires_at)
    }

    /// Resolves a token and pushes its expiry forward. A session is usable
    /// strictly before its expiry instant.
    pub fn touch(&mut self, token: &str, now: Timestamp) -> Result<Address, SessionError> {
        let session = self.live.get_mut(token).ok_or(SessionError::Unknown)?;
        if now >= session.expires_at {
            self.live.remove(token);
            return Err(SessionError::Expired);
        }
        session.expires_at = now + SESSION_TTL_SECONDS;
        Ok(session.address)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }
}

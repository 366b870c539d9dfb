//! Off-chain OTP delivery.
//!
//! A contract cannot call out to an SMS provider, so codes leave the system
//! through this gateway, which plays the part of an oracle: the contract
//! pushes `(address, code)` and the gateway resolves the destination from a
//! registry that never touches the ledger. Information flows one way; the
//! contract never reads anything back.
//!
//! Whoever operates the transport sees every code and phone number and is
//! trusted implicitly; nothing here authenticates or audits it.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use thiserror::Error;

use crate::types::{Address, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("a delivery channel is already registered for {0}")]
    DuplicateChannel(Address),
    #[error("no delivery channel registered for {0}")]
    NoDeliveryChannel(Address),
}

/// Where to send codes for one address. Held only in the gateway registry.
#[derive(Clone, PartialEq, Eq)]
pub struct DeliveryChannel {
    pub address: Address,
    phone: String,
}

impl fmt::Debug for DeliveryChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeliveryChannel")
            .field("address", &self.address)
            .field("phone", &mask_phone(&self.phone))
            .finish()
    }
}

/// Keeps the last two characters, masks the rest.
pub fn mask_phone(phone: &str) -> String {
    let chars: Vec<char> = phone.chars().collect();
    let keep = chars.len().min(2);
    let mut masked = "*".repeat(chars.len() - keep);
    masked.extend(&chars[chars.len() - keep..]);
    masked
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeliveryReceipt {
    pub address: Address,
    pub masked_destination: String,
    pub delivered_at: Timestamp,
    pub attempt: u32,
}

/// A message handed to a transport.
pub struct OtpMessage<'a> {
    pub address: Address,
    pub destination: &'a str,
    pub code: &'a str,
}

/// Transport seam. A real SMS sender would implement this.
pub trait OtpTransport: Send + Sync {
    fn send(&self, message: &OtpMessage<'_>);
}

/// In-memory transport. Codes are retained only in test and simulation
/// builds, where [`MockTransport::last_code`] exposes them.
#[derive(Debug, Default)]
pub struct MockTransport {
    #[cfg(any(test, feature = "simulation"))]
    inbox: Mutex<HashMap<Address, Vec<String>>>,
}

impl MockTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

#[cfg(any(test, feature = "simulation"))]
impl MockTransport {
    /// Most recent code delivered to `address`.
    pub fn last_code(&self, address: &Address) -> Option<String> {
        self.inbox.lock().get(address).and_then(|v| v.last().cloned())
    }

    /// Every code delivered so far, for privacy scans.
    pub fn all_codes(&self) -> Vec<String> {
        self.inbox.lock().values().flatten().cloned().collect()
    }
}

impl OtpTransport for MockTransport {
    #[cfg(any(test, feature = "simulation"))]
    fn send(&self, message: &OtpMessage<'_>) {
        self.inbox
            .lock()
            .entry(message.address)
            .or_default()
            .push(message.code.to_owned());
    }

    #[cfg(not(any(test, feature = "simulation")))]
    fn send(&self, _message: &OtpMessage<'_>) {}
}

pub struct OtpGateway {
    channels: RwLock<HashMap<Address, DeliveryChannel>>,
    attempts: Mutex<HashMap<Address, u32>>,
    transport: Arc<dyn OtpTransport>,
}

impl fmt::Debug for OtpGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OtpGateway")
            .field("channels", &self.channels.read().len())
            .finish_non_exhaustive()
    }
}

impl OtpGateway {
    pub fn new(transport: Arc<dyn OtpTransport>) -> Self {
        Self {
            channels: RwLock::new(HashMap::new()),
            attempts: Mutex::new(HashMap::new()),
            transport,
        }
    }

    /// Gateway backed by a fresh [`MockTransport`], returned alongside it.
    pub fn with_mock() -> (Self, Arc<MockTransport>) {
        let transport = Arc::new(MockTransport::new());
        (Self::new(transport.clone()), transport)
    }

    pub fn register_channel(&self, address: Address, phone: &str) -> Result<(), GatewayError> {
        let mut channels = self.channels.write();
        if channels.contains_key(&address) {
            return Err(GatewayError::DuplicateChannel(address));
        }
        channels.insert(
            address,
            DeliveryChannel {
                address,
                phone: phone.to_owned(),
            },
        );
        Ok(())
    }

    /// Rolls back a registration whose ledger write failed.
    pub(crate) fn remove_channel(&self, address: &Address) {
        self.channels.write().remove(address);
    }

    pub fn deliver(
        &self,
        address: Address,
        code: &str,
        now: Timestamp,
    ) -> Result<DeliveryReceipt, GatewayError> {
        let channels = self.channels.read();
        let channel = channels
            .get(&address)
            .ok_or(GatewayError::NoDeliveryChannel(address))?;
        self.transport.send(&OtpMessage {
            address,
            destination: &channel.phone,
            code,
        });
        let attempt = {
            let mut attempts = self.attempts.lock();
            let n = attempts.entry(address).or_insert(0);
            *n += 1;
            *n
        };
        Ok(DeliveryReceipt {
            address,
            masked_destination: mask_phone(&channel.phone),
            delivered_at: now,
            attempt,
        })
    }
}

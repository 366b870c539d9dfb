//! Identity commitments.
//!
//! A citizen's personal data is combined into a fixed canonical form and
//! hashed with SHA-256; only the digest is ever written to the ledger.
//!
//! The commitment is unsalted. Personal data has low entropy, so anyone
//! holding a copy of the chain can confirm a guessed identity against a
//! commitment by brute force. The digest hides data from casual readers,
//! not from a determined attacker.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::types::H256;

/// Separator placed between fields of the canonical form.
pub const SEPARATOR: char = '|';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("personal data field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("personal data field `{0}` contains the separator '|'")]
    SeparatorInField(&'static str),
    #[error("phone number must be '+' followed by 4 to 15 digits")]
    InvalidPhone,
}

/// Citizen data captured at registration and re-entered at authentication.
///
/// `Debug` is redacted so the plaintext never ends up in logs.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalData {
    pub id_number: String,
    pub first_name: String,
    pub last_name: String,
    pub phone: String,
}

impl fmt::Debug for PersonalData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PersonalData(<redacted>)")
    }
}

impl PersonalData {
    pub fn new(
        id_number: impl Into<String>,
        first_name: impl Into<String>,
        last_name: impl Into<String>,
        phone: impl Into<String>,
    ) -> Self {
        Self {
            id_number: id_number.into(),
            first_name: first_name.into(),
            last_name: last_name.into(),
            phone: phone.into(),
        }
    }

    fn fields(&self) -> [(&'static str, &str); 4] {
        [
            ("id_number", &self.id_number),
            ("first_name", &self.first_name),
            ("last_name", &self.last_name),
            ("phone", &self.phone),
        ]
    }

    /// Checks the field invariants without producing the canonical form.
    pub fn validate(&self) -> Result<(), IdentityError> {
        for (name, value) in self.fields() {
            if value.is_empty() {
                return Err(IdentityError::EmptyField(name));
            }
            if value.contains(SEPARATOR) {
                return Err(IdentityError::SeparatorInField(name));
            }
        }
        let digits = self
            .phone
            .strip_prefix('+')
            .ok_or(IdentityError::InvalidPhone)?;
        if !(4..=15).contains(&digits.len()) || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IdentityError::InvalidPhone);
        }
        Ok(())
    }
}

/// UTF-8 bytes of `id_number|first_name|last_name|phone`, each field NFC-normalized.
pub fn canonicalize(data: &PersonalData) -> Result<Vec<u8>, IdentityError> {
    data.validate()?;
    let joined = data
        .fields()
        .iter()
        .map(|(_, value)| value.nfc().collect::<String>())
        .collect::<Vec<_>>()
        .join("|");
    Ok(joined.into_bytes())
}

/// SHA-256 digest binding a citizen's personal data to an address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct IdentityCommitment(pub H256);

impl IdentityCommitment {
    pub fn of_canonical(bytes: &[u8]) -> Self {
        IdentityCommitment(H256::digest_of(&[bytes]))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }
}

pub fn commit(data: &PersonalData) -> Result<IdentityCommitment, IdentityError> {
    canonicalize(data).map(|bytes| IdentityCommitment::of_canonical(&bytes))
}

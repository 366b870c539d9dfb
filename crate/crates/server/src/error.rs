use ethervote_core::ContractError;
use thiserror::Error;

use crate::session::SessionError;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("no session token")]
    SessionRequired,
    #[error("unknown session token")]
    SessionInvalid,
    #[error("session expired")]
    SessionExpired,
    #[error("wrong address or password")]
    InvalidCredentials,
    #[error("no such route")]
    UnknownRoute,
    #[error("method not allowed")]
    MethodNotAllowed,
    #[error(transparent)]
    Contract(#[from] ContractError),
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> Self {
        match err {
            SessionError::Unknown => ApiError::SessionInvalid,
            SessionError::Expired => ApiError::SessionExpired,
        }
    }
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Malformed(_) => "MalformedRequest",
            ApiError::SessionRequired => "SessionRequired",
            ApiError::SessionInvalid => "SessionInvalid",
            ApiError::SessionExpired => "SessionExpired",
            ApiError::InvalidCredentials => "InvalidCredentials",
            ApiError::UnknownRoute => "UnknownRoute",
            ApiError::MethodNotAllowed => "MethodNotAllowed",
            ApiError::Contract(err) => err.code(),
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ApiError::Malformed(_) => 400,
            ApiError::SessionRequired
            | ApiError::SessionInvalid
            | ApiError::SessionExpired
            | ApiError::InvalidCredentials => 401,
            ApiError::UnknownRoute => 404,
            ApiError::MethodNotAllowed => 405,
            ApiError::Contract(err) => contract_status(err),
        }
    }
}

fn contract_status(err: &ContractError) -> u16 {
    use ContractError::*;
    match err {
        Unauthorized | AuthFailed | OtpInvalid => 403,
        NotFound | NotAVote | NotRegistered => 404,
        AlreadyRegistered | AlreadyVoted | AlreadyInitialized | AlreadyClosed | NoOtpIssued => 409,
        OtpExpired => 410,
        NotInitialized
        | WrongPhase { .. }
        | InvalidConfig(_)
        | InvalidVoter(_)
        | InvalidPersonalData(_)
        | UnknownCandidate(_) => 422,
        Gateway(ethervote_core::GatewayError::DuplicateChannel(_)) => 409,
        Gateway(ethervote_core::GatewayError::NoDeliveryChannel(_)) => 502,
        Ledger(_) => 500,
    }
}

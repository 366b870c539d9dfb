//! JSON-over-HTTP facade for the election contract.

pub mod error;
pub mod http;
pub mod keystore;
pub mod service;
pub mod session;

pub use error::ApiError;
pub use http::{router, serve};
pub use keystore::Keystore;
pub use service::{ApiRequest, ApiResponse, ApiService, Bootstrap, Seeds, ServiceConfig, ServiceError};
pub use session::{Sessions, SESSION_TTL_SECONDS};

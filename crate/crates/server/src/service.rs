use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use ethervote_core::contract::{ReplayError, DEFAULT_OTP_WINDOW_SECONDS};
use ethervote_core::ledger::verify_entries;
use ethervote_core::{
    Account, Address, Clock, Contract, ContractError, ElectionConfig, Ledger, LedgerError,
    OtpGateway, OtpTransport, PersonalData, Timestamp, TxReceipt, H256,
};
#[cfg(feature = "simulation")]
use ethervote_core::MockTransport;
use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::error::ApiError;
use crate::keystore::Keystore;
use crate::session::Sessions;

/// Service settings. `chain_path` of `None` keeps the chain in memory.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub chain_path: Option<PathBuf>,
    /// Window used when the init request does not name one.
    pub otp_window_seconds: Option<u64>,
    /// Fixed password for the authority account instead of a generated one.
    pub authority_password: Option<String>,
    /// Seeds every random source, making runs reproducible.
    #[cfg(feature = "simulation")]
    pub seed: Option<u64>,
}

impl ServiceConfig {
    fn seed(&self) -> u64 {
        #[cfg(feature = "simulation")]
        if let Some(seed) = self.seed {
            return seed;
        }
        rand::random()
    }
}

/// Per-component seeds derived from one service seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub keystore: u64,
    pub sessions: u64,
    pub otp: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        Seeds {
            keystore: seed,
            sessions: seed ^ 0x5E55_1011_0000_0000,
            otp: seed.rotate_left(29) ^ 0x0079,
        }
    }
}

/// Credentials of the authority account created at startup.
#[derive(Clone)]
pub struct Bootstrap {
    pub authority: Address,
    pub password: String,
}

impl fmt::Debug for Bootstrap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bootstrap")
            .field("authority", &self.authority)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot load chain: {0}")]
    Ledger(#[from] LedgerError),
    #[error("chain does not replay: {0}")]
    Replay(#[from] ReplayError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: String,
    pub path: String,
    pub bearer: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn get(path: impl Into<String>) -> Self {
        Self {
            method: "GET".into(),
            path: path.into(),
            bearer: None,
            body: Vec::new(),
        }
    }

    pub fn post(path: impl Into<String>, body: &Value) -> Self {
        Self {
            method: "POST".into(),
            path: path.into(),
            bearer: None,
            body: body.to_string().into_bytes(),
        }
    }

    pub fn with_bearer(mut self, token: impl Into<String>) -> Self {
        self.bearer = Some(token.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    pub fn error_code(&self) -> Option<&str> {
        self.body.get("error").and_then(Value::as_str)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginBody {
    address: Address,
    password: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitBody {
    candidates: Vec<String>,
    #[serde(default)]
    trusted: Option<Vec<Address>>,
    #[serde(default)]
    otp_window_seconds: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VoteBody {
    candidate_id: u32,
    code: String,
}

const ROUTES: &[&[&str]] = &[
    &["session"],
    &["authority", "init"],
    &["authority", "phase", "advance"],
    &["authority", "register"],
    &["voter", "authenticate"],
    &["voter", "vote"],
    &["results"],
    &["receipt", "*"],
    &["chain", "verify"],
    &["chain", "block", "*"],
];

fn known_route(segments: &[&str]) -> bool {
    ROUTES.iter().any(|route| {
        route.len() == segments.len()
            && route.iter().zip(segments).all(|(r, s)| *r == "*" || r == s)
    })
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    // The serde message may quote the offending input, so it stays out of responses.
    serde_json::from_slice(body).map_err(|e| ApiError::Malformed(e.to_string()))
}

fn receipt_json(receipt: &TxReceipt) -> Value {
    json!({
        "tx_hash": receipt.tx_hash,
        "block_index": receipt.block.index,
        "block_hash": receipt.block.block_hash,
    })
}

fn extend(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(base), Value::Object(extra)) = (&mut base, extra) {
        base.extend(extra);
    }
    base
}

struct Inner {
    contract: Contract,
    keystore: Keystore,
    sessions: Sessions,
}

impl Inner {
    fn session(&mut self, bearer: Option<&str>, now: Timestamp) -> Result<Account, ApiError> {
        let token = bearer.ok_or(ApiError::SessionRequired)?;
        let address = self.sessions.touch(token, now)?;
        self.keystore
            .get(&address)
            .cloned()
            .ok_or(ApiError::SessionInvalid)
    }
}

/// The HTTP facade, independent of any transport. `handle` maps one request
/// to one response; every mutating call goes through a single lock.
pub struct ApiService {
    inner: Mutex<Inner>,
    clock: Arc<dyn Clock>,
    authority: Address,
    otp_window_seconds: Option<u64>,
    restored: bool,
    #[cfg(feature = "simulation")]
    mock: Option<Arc<MockTransport>>,
}

impl fmt::Debug for ApiService {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApiService")
            .field("authority", &self.authority)
            .field("restored", &self.restored)
            .finish_non_exhaustive()
    }
}

impl ApiService {
    /// Builds a service whose OTPs go to the in-process mock transport.
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<(Self, Bootstrap), ServiceError> {
        let (gateway, mock) = OtpGateway::with_mock();
        #[cfg(not(feature = "simulation"))]
        drop(mock);
        #[allow(unused_mut)]
        let (mut service, bootstrap) = Self::build(config, clock, gateway)?;
        #[cfg(feature = "simulation")]
        {
            service.mock = Some(mock);
        }
        Ok((service, bootstrap))
    }

    pub fn with_transport(
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
        transport: Arc<dyn OtpTransport>,
    ) -> Result<(Self, Bootstrap), ServiceError> {
        Self::build(config, clock, OtpGateway::new(transport))
    }

    fn build(
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
        gateway: OtpGateway,
    ) -> Result<(Self, Bootstrap), ServiceError> {
        let seeds = Seeds::derive(config.seed());
        let now = clock.now();
        let (ledger, restored) = match &config.chain_path {
            Some(path) if path.exists() => (Ledger::open(path)?, true),
            Some(path) => (Ledger::create(path, now)?, false),
            None => (Ledger::new(now), false),
        };
        let mut contract = Contract::new(ledger, Arc::new(gateway), seeds.otp)?;
        let mut keystore = Keystore::new(seeds.keystore);
        let (authority, generated) = keystore.generate();
        let password = config.authority_password.clone().unwrap_or(generated);
        contract.enroll(&authority);
        let address = authority.address();
        keystore.insert(authority, &password);

        let service = ApiService {
            inner: Mutex::new(Inner {
                contract,
                keystore,
                sessions: Sessions::new(seeds.sessions),
            }),
            clock,
            authority: address,
            otp_window_seconds: config.otp_window_seconds,
            restored,
            #[cfg(feature = "simulation")]
            mock: None,
        };
        Ok((
            service,
            Bootstrap {
                authority: address,
                password,
            },
        ))
    }

    pub fn authority(&self) -> Address {
        self.authority
    }

    /// Runs `f` against the contract under the service lock.
    pub fn with_contract<R>(&self, f: impl FnOnce(&Contract) -> R) -> R {
        f(&self.inner.lock().contract)
    }

    pub fn chain_bytes(&self) -> Vec<u8> {
        self.with_contract(|c| c.ledger().to_bytes())
    }

    /// The mock transport's inbox, for simulation builds only.
    #[cfg(feature = "simulation")]
    pub fn mock_transport(&self) -> Option<&Arc<MockTransport>> {
        self.mock.as_ref()
    }

    pub fn handle(&self, request: &ApiRequest) -> ApiResponse {
        let path = request.path.split('?').next().unwrap_or_default();
        let response = match self.route(request, path) {
            Ok(body) => ApiResponse { status: 200, body },
            Err(err) => ApiResponse {
                status: err.status(),
                body: json!({ "error": err.code() }),
            },
        };
        tracing::info!(method = %request.method, path, status = response.status, "request");
        response
    }

    fn route(&self, request: &ApiRequest, path: &str) -> Result<Value, ApiError> {
        let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
        let bearer = request.bearer.as_deref();
        let body = request.body.as_slice();
        let now = self.clock.now();
        let mut inner = self.inner.lock();

        match (request.method.as_str(), segments.as_slice()) {
            ("POST", ["session"]) => {
                let login: LoginBody = parse(body)?;
                if inner.keystore.unlock(&login.address, &login.password).is_none() {
                    return Err(ApiError::InvalidCredentials);
                }
                let (token, expires_at) = inner.sessions.open(login.address, now);
                Ok(json!({ "token": token, "address": login.address, "expires_at": expires_at }))
            }
            ("POST", ["authority", "init"]) => {
                let sender = inner.session(bearer, now)?;
                let init: InitBody = parse(body)?;
                let window = init
                    .otp_window_seconds
                    .or(self.otp_window_seconds)
                    .unwrap_or(DEFAULT_OTP_WINDOW_SECONDS);
                let trusted = init.trusted.unwrap_or_else(|| vec![sender.address()]);
                let config = ElectionConfig::new(trusted, init.candidates, window);
                let receipt = inner.contract.init_election(&sender, config, now)?;
                Ok(extend(receipt_json(&receipt), json!({ "otp_window_seconds": window })))
            }
            ("POST", ["authority", "phase", "advance"]) => {
                let sender = inner.session(bearer, now)?;
                let receipt = inner.contract.advance_phase(&sender, now)?;
                Ok(extend(receipt_json(&receipt), json!({ "phase": inner.contract.phase() })))
            }
            ("POST", ["authority", "register"]) => {
                let sender = inner.session(bearer, now)?;
                let data: PersonalData = parse(body)?;
                let (voter, password) = inner.keystore.generate();
                inner.contract.enroll(&voter);
                let receipt = inner
                    .contract
                    .register_citizen(&sender, voter.address(), &data, now)?;
                let address = voter.address();
                inner.keystore.insert(voter, &password);
                Ok(extend(
                    receipt_json(&receipt),
                    json!({ "voter_address": address, "account_password": password }),
                ))
            }
            ("POST", ["voter", "authenticate"]) => {
                let sender = inner.session(bearer, now)?;
                let data: PersonalData = parse(body)?;
                let issued = inner.contract.authenticate(&sender, &data, now)?;
                let window = inner
                    .contract
                    .config()
                    .map_or(DEFAULT_OTP_WINDOW_SECONDS, |c| c.otp_window_seconds);
                Ok(extend(
                    receipt_json(&issued.receipt),
                    json!({
                        "delivered_to": issued.delivery.masked_destination,
                        "issued_at": now,
                        "expires_at": now + window,
                    }),
                ))
            }
            ("POST", ["voter", "vote"]) => {
                let sender = inner.session(bearer, now)?;
                let vote: VoteBody = parse(body)?;
                let receipt = inner
                    .contract
                    .cast_vote(&sender, vote.candidate_id, &vote.code, now)?;
                Ok(receipt_json(&receipt))
            }
            ("GET", ["results"]) => {
                let viewer = match bearer {
                    Some(_) => Some(inner.session(bearer, now)?.address()),
                    None => None,
                };
                let tally = inner.contract.results(viewer.as_ref())?;
                Ok(json!(tally))
            }
            ("GET", ["receipt", hash]) => {
                let hash = H256::from_hex(hash)
                    .map_err(|e| ApiError::Malformed(format!("tx hash: {e}")))?;
                Ok(json!(inner.contract.verify_receipt(&hash)?))
            }
            ("GET", ["chain", "verify"]) => {
                let ledger = inner.contract.ledger();
                // Accounts are not persisted, so a reloaded chain can only be
                // checked for structure and digests.
                let report = if self.restored {
                    verify_entries(ledger.entries(), None)
                } else {
                    ledger.verify_chain()
                };
                let replay_equivalent = inner.contract.replay_matches().unwrap_or(false);
                Ok(extend(
                    json!(report),
                    json!({
                        "valid": report.valid && replay_equivalent,
                        "replay_equivalent": replay_equivalent,
                        "signatures_checked": !self.restored,
                    }),
                ))
            }
            ("GET", ["chain", "block", index]) => {
                inner.session(bearer, now)?;
                let index: u64 = index
                    .parse()
                    .map_err(|_| ApiError::Malformed("block index".into()))?;
                let entry = usize::try_from(index)
                    .ok()
                    .and_then(|i| inner.contract.ledger().entries().get(i))
                    .ok_or(ContractError::NotFound)?;
                let block = &entry.block;
                let transactions: Vec<Value> = entry
                    .transactions
                    .iter()
                    .map(|tx| {
                        json!({
                            "tx_hash": tx.tx_hash,
                            "sender": tx.sender,
                            "nonce": tx.nonce,
                            "kind": tx.kind,
                            "timestamp": tx.timestamp,
                            "payload": hex::encode(&tx.payload),
                            "signature": tx.signature,
                        })
                    })
                    .collect();
                Ok(json!({
                    "index": block.index,
                    "prev_hash": block.prev_hash,
                    "timestamp": block.timestamp,
                    "block_hash": block.block_hash,
                    "transactions": transactions,
                }))
            }
            (_, segments) if known_route(segments) => Err(ApiError::MethodNotAllowed),
            _ => Err(ApiError::UnknownRoute),
        }
    }
}

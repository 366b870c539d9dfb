//! Drives the same randomized operation sequence through the HTTP facade and
//! straight into a second contract, comparing every outcome and the final chain.

use std::collections::HashMap;
use std::sync::Arc;

use ethervote_core::{
    Account, Clock, Contract, ContractError, ElectionConfig, ElectionPhase, Ledger, ManualClock,
    MockTransport, OtpGateway, PersonalData, H256,
};
use ethervote_server::{ApiRequest, ApiResponse, ApiService, Keystore, Seeds, ServiceConfig, SESSION_TTL_SECONDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

pub const T0: u64 = 1_700_000_000;

#[derive(Debug, Default)]
pub struct FacadeRun {
    pub requests: usize,
    pub contract_calls: usize,
    pub successes: usize,
    pub accepted_votes: usize,
    pub mismatches: Vec<String>,
    pub http_chain: Vec<u8>,
    pub direct_chain: Vec<u8>,
    pub state_equal: bool,
}

impl FacadeRun {
    pub fn equivalent(&self) -> bool {
        self.mismatches.is_empty() && self.state_equal && self.http_chain == self.direct_chain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Actor {
    Authority,
    Voter(usize),
}

/// Status table written out independently of the service's own mapping.
fn expected_status(err: &ContractError) -> u16 {
    match err.code() {
        "Unauthorized" | "AuthFailed" | "OtpInvalid" => 403,
        "NotFound" | "NotAVote" | "NotRegistered" => 404,
        "AlreadyRegistered" | "AlreadyVoted" | "AlreadyInitialized" | "AlreadyClosed" | "NoOtpIssued"
        | "DuplicateChannel" => 409,
        "OtpExpired" => 410,
        "NoDeliveryChannel" => 502,
        "LedgerRejected" => 500,
        _ => 422,
    }
}

fn citizen(i: u32, bad_phone: bool) -> PersonalData {
    let phone = if bad_phone {
        format!("30{i:08}")
    } else {
        format!("+3069{i:08}")
    };
    PersonalData::new(format!("X{i:07}"), format!("Given{i}"), format!("Family{i}"), phone)
}

struct Driver {
    rng: ChaCha20Rng,
    clock: Arc<ManualClock>,
    service: ApiService,
    http_mock: Arc<MockTransport>,
    authority_password: String,
    http_voters: Vec<(String, String)>,
    tokens: HashMap<Actor, (String, u64)>,
    contract: Contract,
    direct_mock: Arc<MockTransport>,
    keystore: Keystore,
    authority: Account,
    voters: Vec<(u32, Account)>,
    tx_hashes: Vec<H256>,
    run: FacadeRun,
}

impl Driver {
    fn new(seed: u64) -> Self {
        let clock = Arc::new(ManualClock::new(T0));
        let config = ServiceConfig {
            seed: Some(seed),
            ..ServiceConfig::default()
        };
        let (service, boot) = ApiService::new(config, clock.clone()).expect("service");
        let http_mock = service.mock_transport().expect("mock").clone();

        let seeds = Seeds::derive(seed);
        let (gateway, direct_mock) = OtpGateway::with_mock();
        let mut contract = Contract::new(Ledger::new(clock.now()), Arc::new(gateway), seeds.otp).expect("contract");
        let mut keystore = Keystore::new(seeds.keystore);
        let (authority, _) = keystore.generate();
        contract.enroll(&authority);

        Driver {
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0xFACADE),
            clock,
            service,
            http_mock,
            authority_password: boot.password,
            http_voters: Vec::new(),
            tokens: HashMap::new(),
            contract,
            direct_mock,
            keystore,
            authority,
            voters: Vec::new(),
            tx_hashes: Vec::new(),
            run: FacadeRun::default(),
        }
    }

    fn mismatch(&mut self, msg: String) {
        self.run.mismatches.push(msg);
    }

    fn send(&mut self, request: ApiRequest) -> ApiResponse {
        self.run.requests += 1;
        self.service.handle(&request)
    }

    fn account(&self, actor: Actor) -> Account {
        match actor {
            Actor::Authority => self.authority.clone(),
            Actor::Voter(i) => self.voters[i].1.clone(),
        }
    }

    /// A token the session model considers live, logging in first if needed.
    fn token(&mut self, actor: Actor) -> String {
        let now = self.clock.now();
        if let Some((token, last)) = self.tokens.get(&actor).cloned() {
            if now < last + SESSION_TTL_SECONDS {
                self.tokens.insert(actor, (token.clone(), now));
                return token;
            }
        }
        let (address, password) = match actor {
            Actor::Authority => (self.authority.address().to_string(), self.authority_password.clone()),
            Actor::Voter(i) => self.http_voters[i].clone(),
        };
        let response = self.send(ApiRequest::post("/session", &json!({ "address": address, "password": password })));
        let token = response.body["token"].as_str().unwrap_or_default().to_owned();
        if response.status != 200 {
            self.mismatch(format!("login as {actor:?} failed: {}", response.body));
        }
        self.tokens.insert(actor, (token.clone(), now));
        token
    }

    /// Compares one HTTP response with the direct outcome.
    fn compare(&mut self, label: &str, response: &ApiResponse, direct: Result<Value, ContractError>) {
        self.run.contract_calls += 1;
        match direct {
            Ok(expected) => {
                self.run.successes += 1;
                if response.status != 200 {
                    self.mismatch(format!("{label}: direct ok, http {} {}", response.status, response.body));
                    return;
                }
                if let Value::Object(fields) = expected {
                    for (key, value) in fields {
                        if response.body.get(&key) != Some(&value) {
                            self.mismatch(format!("{label}: field {key} differs: {} vs {value}", response.body));
                        }
                    }
                }
            }
            Err(err) => {
                let want = (expected_status(&err), Some(err.code()));
                if (response.status, response.error_code()) != want {
                    self.mismatch(format!("{label}: direct {err:?}, http {} {}", response.status, response.body));
                }
            }
        }
    }

    fn receipt_value(&mut self, receipt: ethervote_core::TxReceipt) -> Value {
        self.tx_hashes.push(receipt.tx_hash);
        json!({ "tx_hash": receipt.tx_hash, "block_index": receipt.block.index })
    }

    fn random_actor(&mut self) -> Actor {
        if self.voters.is_empty() || self.rng.random_bool(0.08) {
            Actor::Authority
        } else {
            Actor::Voter(self.rng.random_range(0..self.voters.len()))
        }
    }

    /// Usually a voter holding an outstanding code, so that some votes land.
    fn pending_voter(&mut self) -> Option<Actor> {
        if self.rng.random_bool(0.25) {
            return None;
        }
        let now = self.clock.now();
        let window = self.contract.config().map_or(0, |c| c.otp_window_seconds);
        let pending: Vec<usize> = (0..self.voters.len())
            .filter(|&i| {
                self.contract
                    .voter(&self.voters[i].1.address())
                    .and_then(|r| r.otp_issued_at())
                    .is_some_and(|at| now <= at + window)
            })
            .collect();
        if pending.is_empty() {
            return None;
        }
        Some(Actor::Voter(pending[self.rng.random_range(0..pending.len())]))
    }

    fn init(&mut self) {
        let names: Vec<String> = match self.rng.random_range(0..10) {
            0 => Vec::new(),
            n => (0..2 + n % 3).map(|c| format!("Candidate {c}")).collect(),
        };
        let window = 60 + self.rng.random_range(0..5) * 60;
        let token = self.token(Actor::Authority);
        let now = self.clock.now();
        let response = self.send(
            ApiRequest::post("/authority/init", &json!({ "candidates": names, "otp_window_seconds": window }))
                .with_bearer(token),
        );
        let config = ElectionConfig::new([self.authority.address()], names, window);
        let authority = self.authority.clone();
        let direct = self
            .contract
            .init_election(&authority, config, now)
            .map(|r| self.receipt_value(r));
        self.compare("init", &response, direct);
    }

    fn advance(&mut self, actor: Actor) {
        let token = self.token(actor);
        let now = self.clock.now();
        let response = self.send(ApiRequest::post("/authority/phase/advance", &json!({})).with_bearer(token));
        let sender = self.account(actor);
        let direct = self.contract.advance_phase(&sender, now).map(|r| self.receipt_value(r));
        self.compare("advance", &response, direct);
    }

    fn register(&mut self, actor: Actor) {
        let idx = self.rng.random_range(0..80u32);
        let data = citizen(idx, self.rng.random_bool(0.08));
        let token = self.token(actor);
        let now = self.clock.now();
        let response = self.send(
            ApiRequest::post("/authority/register", &serde_json::to_value(&data).unwrap()).with_bearer(token),
        );
        let (voter, _) = self.keystore.generate();
        self.contract.enroll(&voter);
        let sender = self.account(actor);
        let direct = self
            .contract
            .register_citizen(&sender, voter.address(), &data, now)
            .map(|r| self.receipt_value(r));
        let ok = direct.is_ok();
        let direct = direct.map(|mut v| {
            v["voter_address"] = json!(voter.address());
            v
        });
        self.compare("register", &response, direct);
        if ok && response.status == 200 {
            let password = response.body["account_password"].as_str().unwrap_or_default().to_owned();
            self.http_voters.push((voter.address().to_string(), password));
            self.voters.push((idx, voter));
        }
    }

    fn authenticate(&mut self, actor: Actor) {
        let idx = match actor {
            Actor::Voter(i) if self.rng.random_bool(0.85) => self.voters[i].0,
            _ => self.rng.random_range(0..80),
        };
        let data = citizen(idx, false);
        let token = self.token(actor);
        let now = self.clock.now();
        let response = self.send(
            ApiRequest::post("/voter/authenticate", &serde_json::to_value(&data).unwrap()).with_bearer(token),
        );
        let sender = self.account(actor);
        let direct = self
            .contract
            .authenticate(&sender, &data, now)
            .map(|issued| self.receipt_value(issued.receipt));
        self.compare("authenticate", &response, direct);
        let address = sender.address();
        if self.http_mock.last_code(&address) != self.direct_mock.last_code(&address) {
            self.mismatch(format!("codes delivered to {address} differ"));
        }
    }

    fn vote(&mut self, actor: Actor) {
        let sender = self.account(actor);
        let own = self.direct_mock.last_code(&sender.address());
        let code = match (own, self.rng.random_range(0..10)) {
            (Some(code), 0..=7) => code,
            (_, 8) => {
                let other = self.direct_mock.all_codes();
                if other.is_empty() {
                    "000000".to_owned()
                } else {
                    other[self.rng.random_range(0..other.len())].clone()
                }
            }
            _ => format!("{:06}", self.rng.random_range(0..1_000_000)),
        };
        let candidate = self.rng.random_range(0..5u32);
        let token = self.token(actor);
        let now = self.clock.now();
        let response = self.send(
            ApiRequest::post("/voter/vote", &json!({ "candidate_id": candidate, "code": code })).with_bearer(token),
        );
        let direct = self
            .contract
            .cast_vote(&sender, candidate, &code, now)
            .map(|r| self.receipt_value(r));
        if direct.is_ok() {
            self.run.accepted_votes += 1;
        }
        self.compare("vote", &response, direct);
    }

    fn results(&mut self) {
        let viewer = match self.rng.random_range(0..3) {
            0 => None,
            _ => Some(self.random_actor()),
        };
        let mut request = ApiRequest::get("/results");
        if let Some(actor) = viewer {
            request = request.with_bearer(self.token(actor));
        }
        let response = self.send(request);
        let address = viewer.map(|a| self.account(a).address());
        let direct = self.contract.results(address.as_ref()).map(|t| json!(t));
        if let (Ok(expected), 200) = (&direct, response.status) {
            if &response.body != expected {
                self.mismatch(format!("results differ: {} vs {expected}", response.body));
            }
        }
        self.compare("results", &response, direct);
    }

    fn receipt(&mut self) {
        let hash = if self.tx_hashes.is_empty() || self.rng.random_bool(0.2) {
            H256(self.rng.random())
        } else {
            self.tx_hashes[self.rng.random_range(0..self.tx_hashes.len())]
        };
        let response = self.send(ApiRequest::get(format!("/receipt/{hash}")));
        let direct = self.contract.verify_receipt(&hash).map(|v| json!(v));
        if let (Ok(expected), 200) = (&direct, response.status) {
            if &response.body != expected {
                self.mismatch(format!("receipt differs: {} vs {expected}", response.body));
            }
        }
        self.compare("receipt", &response, direct);
    }

    fn verify(&mut self) {
        let response = self.send(ApiRequest::get("/chain/verify"));
        let direct_valid = self.contract.ledger().verify_chain().valid && self.contract.replay_matches() == Ok(true);
        if response.status != 200 || response.body["valid"] != json!(direct_valid) || !direct_valid {
            self.mismatch(format!("chain verify: {} (direct {direct_valid})", response.body));
        }
    }

    /// Requests rejected before any contract call: no session, a forged
    /// session, or an unparsable body.
    fn rejected_at_the_door(&mut self) {
        let paths = ["/authority/init", "/authority/register", "/voter/authenticate", "/voter/vote"];
        let path = paths[self.rng.random_range(0..paths.len())];
        let (request, status) = match self.rng.random_range(0..3) {
            0 => (ApiRequest::post(path, &json!({})), 401),
            1 => (ApiRequest::post(path, &json!({})).with_bearer("deadbeef"), 401),
            _ => {
                let actor = self.random_actor();
                let mut request = ApiRequest::post(path, &json!({})).with_bearer(self.token(actor));
                request.body = b"{\"truncated\":".to_vec();
                (request, 400)
            }
        };
        let response = self.send(request);
        if response.status != status {
            self.mismatch(format!("{path}: expected {status}, got {} {}", response.status, response.body));
        }
    }

    fn step(&mut self) {
        let tick = if self.rng.random_bool(0.03) {
            self.rng.random_range(200..2_500)
        } else {
            self.rng.random_range(0..30)
        };
        self.clock.advance(tick);

        let roll = self.rng.random_range(0..1000);
        match self.contract.phase() {
            None => match roll {
                0..=799 => self.init(),
                _ => self.noise(roll),
            },
            Some(ElectionPhase::Setup) => match roll {
                0..=599 => self.advance(Actor::Authority),
                600..=699 => self.init(),
                _ => self.noise(roll),
            },
            Some(ElectionPhase::Registration) => match roll {
                0..=14 => self.advance(Actor::Authority),
                15..=749 => {
                    let actor = if self.rng.random_bool(0.95) { Actor::Authority } else { self.random_actor() };
                    self.register(actor)
                }
                _ => self.noise(roll),
            },
            Some(ElectionPhase::Voting) => match roll {
                0..=4 => self.advance(Actor::Authority),
                5..=379 => {
                    let actor = self.random_actor();
                    self.authenticate(actor)
                }
                380..=799 => {
                    let actor = self.pending_voter().unwrap_or_else(|| self.random_actor());
                    self.vote(actor)
                }
                _ => self.noise(roll),
            },
            Some(ElectionPhase::Closed) => self.noise(roll),
        }
    }

    fn noise(&mut self, roll: u32) {
        match roll % 9 {
            0 => self.results(),
            1 => self.receipt(),
            2 => self.verify(),
            3 => self.rejected_at_the_door(),
            4 if !self.voters.is_empty() => {
                let actor = Actor::Voter(self.rng.random_range(0..self.voters.len()));
                self.advance(actor)
            }
            4 => self.results(),
            5 => self.register(Actor::Authority),
            6 => {
                let actor = self.random_actor();
                self.authenticate(actor)
            }
            7 => {
                let actor = self.random_actor();
                self.vote(actor)
            }
            _ => self.init(),
        }
    }
}

/// Issues at least `requests` HTTP requests (logins included).
pub fn run_facade(seed: u64, requests: usize) -> FacadeRun {
    let mut driver = Driver::new(seed);
    while driver.run.requests < requests {
        driver.step();
    }
    let (http_chain, http_state) = driver
        .service
        .with_contract(|c| (c.ledger().to_bytes(), c.state().canonical_bytes()));
    driver.run.http_chain = http_chain;
    driver.run.direct_chain = driver.contract.ledger().to_bytes();
    driver.run.state_equal = http_state == driver.contract.state().canonical_bytes();
    driver.run
}

//! Seeded election simulations.
//!
//! A [`Scenario`] is expanded into a deterministic action list and executed
//! single-threaded against a fresh ledger, contract and mock gateway. The
//! run ends with a set of invariant checks whose results are part of the
//! [`RunReport`].

pub mod oracle;
pub mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::contract::{CandidateTally, Contract, ContractError, ElectionConfig};
use crate::gateway::{MockTransport, OtpGateway};
use crate::identity::PersonalData;
use crate::ledger::{Account, Ledger, TxKind};
use crate::types::{Address, Timestamp, H256};

pub use scenario::{Action, ActionKind, Scenario, ScenarioError, Step};

/// Genesis time of every simulated chain.
pub const GENESIS_TIME: Timestamp = 1_700_000_000;
/// Voting opens this many seconds after genesis.
pub const VOTING_OFFSET: u64 = 10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unexpected contract failure during {stage}: {source}")]
    Contract {
        stage: &'static str,
        #[source]
        source: ContractError,
    },
}

fn stage(stage: &'static str) -> impl FnOnce(ContractError) -> SimError {
    move |source| SimError::Contract { stage, source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub voters: usize,
    pub registered: usize,
    pub vote_attempts: u64,
    pub accepted_votes: u64,
    pub vote_rejections: BTreeMap<String, u64>,
    pub auth_attempts: u64,
    pub auth_rejections: BTreeMap<String, u64>,
    pub registration_rejections: BTreeMap<String, u64>,
    pub tally: Vec<CandidateTally>,
    pub chain_length: u64,
    pub head_hash: H256,
    pub chain_valid: bool,
    pub replay_equivalent: bool,
    pub oracle_tally_matches: bool,
    pub receipts_verified: u64,
    pub vote_txs_on_chain: u64,
    pub privacy_clean: bool,
}

impl RunReport {
    /// accepted + rejections == attempts
    pub fn attempts_balance(&self) -> bool {
        self.accepted_votes + self.vote_rejections.values().sum::<u64>() == self.vote_attempts
    }

    pub fn total_tally(&self) -> u64 {
        self.tally.iter().map(|c| c.votes).sum()
    }

    /// Every invariant the harness checks after a run.
    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut failed = Vec::new();
        let mut check = |ok: bool, name| {
            if !ok {
                failed.push(name)
            }
        };
        check(self.chain_valid, "chain verification");
        check(self.replay_equivalent, "replay equivalence");
        check(self.oracle_tally_matches, "tally matches chain count");
        check(self.attempts_balance(), "attempt accounting");
        check(self.total_tally() == self.accepted_votes, "tally equals accepted votes");
        check(self.vote_txs_on_chain == self.accepted_votes, "one VoteCast per accepted vote");
        check(self.receipts_verified == self.accepted_votes, "receipts resolve");
        check(self.accepted_votes <= self.registered as u64, "votes bounded by registered voters");
        check(self.privacy_clean, "no plaintext on chain");
        failed
    }

    pub fn passed(&self) -> bool {
        self.failed_checks().is_empty()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed              {}", self.seed)?;
        writeln!(f, "voters            {} ({} registered)", self.voters, self.registered)?;
        writeln!(f, "vote attempts     {}", self.vote_attempts)?;
        writeln!(f, "accepted votes    {}", self.accepted_votes)?;
        for (code, n) in &self.vote_rejections {
            writeln!(f, "  rejected {code:<16} {n}")?;
        }
        writeln!(f, "auth attempts     {}", self.auth_attempts)?;
        for (code, n) in &self.auth_rejections {
            writeln!(f, "  rejected {code:<16} {n}")?;
        }
        for (code, n) in &self.registration_rejections {
            writeln!(f, "registration rejected {code} {n}")?;
        }
        writeln!(f, "tally")?;
        for c in &self.tally {
            writeln!(f, "  {:<20} {}", c.name, c.votes)?;
        }
        writeln!(f, "chain length      {}", self.chain_length)?;
        writeln!(f, "chain head        {}", self.head_hash)?;
        let failed = self.failed_checks();
        if failed.is_empty() {
            write!(f, "checks            all passed")
        } else {
            write!(f, "checks FAILED     {}", failed.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedVote {
    pub voter: Address,
    pub candidate: u32,
    pub tx_hash: H256,
    pub block_index: u64,
}

/// Everything a run produced, for callers that check more than the report.
#[derive(Debug)]
pub struct SimulationOutcome {
    pub report: RunReport,
    pub chain: Vec<u8>,
    pub accepted: Vec<AcceptedVote>,
    /// Every registered plaintext field (ids, names, phones).
    pub plaintexts: Vec<String>,
    /// Every OTP code the gateway delivered.
    pub otp_codes: Vec<String>,
    pub contract: Contract,
}

const FIRST_NAMES: &[&str] = &["Eleni", "Nikos", "Maria", "Giorgos", "Sofia", "Kostas", "Anna", "Dimitris"];
const LAST_NAMES: &[&str] = &["Papadopoulou", "Georgiou", "Nikolaou", "Vlachos", "Oikonomou", "Karras"];

/// Deterministic citizen data. Every field is long enough that finding it
/// by chance among digest bytes is negligible.
pub fn citizen(seed: u64, index: usize) -> PersonalData {
    let tag = (seed % 9_000) + 1_000;
    PersonalData::new(
        format!("AK{tag:04}{index:06}"),
        format!("{}{index:05}", FIRST_NAMES[index % FIRST_NAMES.len()]),
        format!("{}{index:05}", LAST_NAMES[index % LAST_NAMES.len()]),
        format!("+3069{tag:04}{index:05}"),
    )
}

/// `data` with one character of the last name altered.
pub fn tampered(data: &PersonalData) -> PersonalData {
    let mut wrong = data.clone();
    let last = wrong.last_name.pop().unwrap_or('x');
    wrong.last_name.push(if last == 'z' { 'y' } else { 'z' });
    wrong
}

struct Tally {
    counters: BTreeMap<String, u64>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            counters: BTreeMap::new(),
        }
    }

    fn reject(&mut self, err: &ContractError) {
        *self.counters.entry(err.code().to_owned()).or_insert(0) += 1;
    }
}

pub fn resolve_seed(scenario: &Scenario, seed_override: Option<u64>) -> Result<u64, ScenarioError> {
    seed_override
        .or(scenario.seed)
        .ok_or(ScenarioError::Missing("seed"))
}

pub fn run_scenario(scenario: &Scenario, seed_override: Option<u64>) -> Result<SimulationOutcome, SimError> {
    let seed = resolve_seed(scenario, seed_override)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let transport = Arc::new(MockTransport::new());
    let gateway = Arc::new(OtpGateway::new(transport.clone()));
    let mut contract = Contract::new(Ledger::new(GENESIS_TIME), gateway, seed.rotate_left(17) ^ 0x07B1)
        .expect("empty ledger replays");

    let authority = Account::generate(&mut rng);
    contract.enroll(&authority);
    let voters: Vec<(Account, PersonalData)> = (0..scenario.voters)
        .map(|i| {
            let account = Account::generate(&mut rng);
            contract.enroll(&account);
            (account, citizen(seed, i))
        })
        .collect();

    // Setup and registration.
    let config = ElectionConfig::new([authority.address()], scenario.candidates.clone(), scenario.otp_window);
    contract
        .init_election(&authority, config, GENESIS_TIME + 1)
        .map_err(stage("init"))?;
    contract
        .advance_phase(&authority, GENESIS_TIME + 2)
        .map_err(stage("open registration"))?;

    let mut registration = Tally::new();
    for i in 0..scenario.untrusted_register {
        let intruder = Account::generate(&mut rng);
        contract.enroll(&intruder);
        let target = Account::generate(&mut rng);
        let data = citizen(seed.wrapping_add(1), 1_000_000 + i);
        match contract.register_citizen(&intruder, target.address(), &data, GENESIS_TIME + 3) {
            Ok(_) => {}
            Err(err) => registration.reject(&err),
        }
    }
    let mut registered = 0;
    for (i, (account, data)) in voters.iter().enumerate() {
        if scenario.is_registered(i) {
            contract
                .register_citizen(&authority, account.address(), data, GENESIS_TIME + 3)
                .map_err(stage("registration"))?;
            registered += 1;
        }
    }
    let voting_start = GENESIS_TIME + VOTING_OFFSET;
    contract
        .advance_phase(&authority, GENESIS_TIME + 4)
        .map_err(stage("open voting"))?;

    // Voting.
    let actions = scenario.expand(seed, voting_start);
    let mut last_code: Vec<Option<String>> = vec![None; voters.len()];
    let mut auth = Tally::new();
    let mut votes = Tally::new();
    let mut auth_attempts = 0u64;
    let mut vote_attempts = 0u64;
    let mut accepted = Vec::new();
    let mut clock = voting_start;

    for action in &actions {
        clock = clock.max(action.at);
        let (account, data) = &voters[action.voter];
        let address = account.address();

        let mut authenticate = |contract: &mut Contract, data: &PersonalData| {
            auth_attempts += 1;
            match contract.authenticate(account, data, clock) {
                Ok(_) => {
                    last_code[action.voter] = transport.last_code(&address);
                    Ok(())
                }
                Err(err @ ContractError::Ledger(_)) => Err(stage("authenticate")(err)),
                Err(err) => {
                    auth.reject(&err);
                    Ok(())
                }
            }
        };
        let mut vote = |contract: &mut Contract, candidate: u32, code: &str| -> Result<bool, SimError> {
            vote_attempts += 1;
            match contract.cast_vote(account, candidate, code, clock) {
                Ok(receipt) => {
                    accepted.push(AcceptedVote {
                        voter: address,
                        candidate,
                        tx_hash: receipt.tx_hash,
                        block_index: receipt.block.index,
                    });
                    Ok(true)
                }
                Err(err @ ContractError::Ledger(_)) => Err(stage("vote")(err)),
                Err(err) => {
                    votes.reject(&err);
                    Ok(false)
                }
            }
        };

        match &action.kind {
            ActionKind::Authenticate { correct: true } => authenticate(&mut contract, data)?,
            ActionKind::Authenticate { correct: false } => authenticate(&mut contract, &tampered(data))?,
            ActionKind::Vote { candidate } | ActionKind::Replay { candidate } => {
                let code = last_code[action.voter].clone().unwrap_or_default();
                vote(&mut contract, *candidate, &code)?;
            }
            ActionKind::VoteAgain { candidate } => {
                authenticate(&mut contract, data)?;
                let code = last_code[action.voter].clone().unwrap_or_default();
                vote(&mut contract, *candidate, &code)?;
            }
            ActionKind::Guess { candidate, codes } => {
                for code in codes {
                    if vote(&mut contract, *candidate, code)? {
                        break;
                    }
                }
            }
        }
    }

    contract
        .advance_phase(&authority, clock + 1)
        .map_err(stage("close"))?;
    let tally = contract.results(None).map_err(stage("results"))?;

    // Post-run checks.
    let chain = contract.ledger().to_bytes();
    let chain_valid = contract.ledger().verify_chain().valid;
    let replay_equivalent = contract.replay_matches().unwrap_or(false);
    let oracle_tally_matches = oracle::count_votes(&chain).is_some_and(|counts| {
        tally
            .candidates
            .iter()
            .all(|c| counts.get(&c.id).copied().unwrap_or(0) == c.votes)
            && counts.keys().all(|id| tally.votes_for(*id).is_some())
    });
    let receipts_verified = accepted
        .iter()
        .filter(|v| {
            contract.verify_receipt(&v.tx_hash).is_ok_and(|view| {
                view.sender == v.voter && view.candidate_id == v.candidate && view.block_index == v.block_index
            })
        })
        .count() as u64;
    let vote_txs_on_chain = contract
        .ledger()
        .transactions()
        .filter(|(_, tx)| tx.kind == TxKind::VoteCast)
        .count() as u64;
    let plaintexts: Vec<String> = voters
        .iter()
        .flat_map(|(_, d)| [d.id_number.clone(), d.first_name.clone(), d.last_name.clone(), d.phone.clone()])
        .collect();
    let otp_codes = transport.all_codes();
    let privacy_clean = oracle::find_plaintexts(&chain, plaintexts.iter().map(String::as_str)).is_empty()
        && oracle::find_plaintexts(&chain, otp_codes.iter().map(String::as_str)).is_empty();

    let report = RunReport {
        seed,
        voters: scenario.voters,
        registered,
        vote_attempts,
        accepted_votes: accepted.len() as u64,
        vote_rejections: votes.counters,
        auth_attempts,
        auth_rejections: auth.counters,
        registration_rejections: registration.counters,
        tally: tally.candidates,
        chain_length: contract.ledger().len(),
        head_hash: contract.ledger().head().block_hash,
        chain_valid,
        replay_equivalent,
        oracle_tally_matches,
        receipts_verified,
        vote_txs_on_chain,
        privacy_clean,
    };
    Ok(SimulationOutcome {
        report,
        chain,
        accepted,
        plaintexts,
        otp_codes,
        contract,
    })
}

//! Scenario files.
//!
//! Line-oriented plain text; `#` starts a comment. Directives:
//!
//! ```text
//! seed 42                      # default seed, overridable from the CLI
//! otp_window 300               # seconds (default 300)
//! candidates Alice Bob Carol   # or one `candidate <name>` per line
//! voters 1000                  # population size
//! guess_attempts 3             # codes tried per `guess` step (default 3)
//! interleave on                # shuffle voters that are ready at the same second
//! untrusted_register 5         # registrations attempted by non-trusted accounts
//! script 0..100 auth wait 60 vote vote_again
//! ```
//!
//! `script <range> <steps...>` assigns a step list to voters in `range`
//! (`a..b` half-open, or a single index). Later lines override earlier ones.
//! Voters without a script run `auth wait 60 vote`.
//!
//! Steps:
//!
//! | step            | effect                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | `skip_register` | the authority never registers this voter                      |
//! | `auth`          | authenticate with the correct personal data                   |
//! | `auth_wrong`    | authenticate with one character of the last name altered      |
//! | `wait N`        | idle N seconds; `wait A..B` draws uniformly from `[A, B]`     |
//! | `vote`          | vote for a random candidate with the latest delivered code    |
//! | `vote:<name>`   | vote for the named candidate                                  |
//! | `vote_again`    | try to obtain a new code, then vote again with the last code  |
//! | `replay`        | resubmit the last code with a random candidate                |
//! | `guess`         | submit `guess_attempts` random codes                          |

use std::fmt;
use std::ops::Range;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::contract::DEFAULT_OTP_WINDOW_SECONDS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown candidate `{name}`")]
    UnknownCandidate { line: usize, name: String },
    #[error("scenario is missing `{0}`")]
    Missing(&'static str),
}

/// One scripted step, as written in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    SkipRegister,
    Auth,
    AuthWrong,
    Wait { min: u64, max: u64 },
    Vote { candidate: Option<u32> },
    VoteAgain,
    Replay,
    Guess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub seed: Option<u64>,
    pub otp_window: u64,
    pub candidates: Vec<String>,
    pub voters: usize,
    pub guess_attempts: u32,
    pub interleave: bool,
    pub untrusted_register: usize,
    /// (range, steps) in file order; later entries win.
    pub scripts: Vec<(Range<usize>, Vec<Step>)>,
}

fn default_script() -> Vec<Step> {
    vec![Step::Auth, Step::Wait { min: 60, max: 60 }, Step::Vote { candidate: None }]
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, ScenarioError> {
    s.parse().map_err(|_| ScenarioError::Parse {
        line,
        message: format!("invalid {what} `{s}`"),
    })
}

fn parse_range(line: usize, s: &str) -> Result<(u64, u64), ScenarioError> {
    match s.split_once("..") {
        Some((a, b)) => Ok((parse_num(line, a, "number")?, parse_num(line, b, "number")?)),
        None => {
            let n = parse_num(line, s, "number")?;
            Ok((n, n))
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario {
            seed: None,
            otp_window: DEFAULT_OTP_WINDOW_SECONDS,
            candidates: Vec::new(),
            voters: 0,
            guess_attempts: 3,
            interleave: false,
            untrusted_register: 0,
            scripts: Vec::new(),
        };
        let mut saw_voters = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            let mut words = content.split_whitespace();
            let Some(directive) = words.next() else {
                continue;
            };
            let args: Vec<&str> = words.collect();
            let single = |what: &str| -> Result<&str, ScenarioError> {
                match args.as_slice() {
                    [arg] => Ok(arg),
                    _ => Err(ScenarioError::Parse {
                        line,
                        message: format!("`{what}` takes exactly one argument"),
                    }),
                }
            };
            match directive {
                "seed" => scenario.seed = Some(parse_num(line, single("seed")?, "seed")?),
                "otp_window" => {
                    scenario.otp_window = parse_num(line, single("otp_window")?, "window")?;
                    if scenario.otp_window == 0 {
                        return Err(ScenarioError::Parse {
                            line,
                            message: "otp_window must be positive".into(),
                        });
                    }
                }
                "candidate" => scenario.candidates.push(single("candidate")?.to_owned()),
                "candidates" => scenario.candidates.extend(args.iter().map(|s| s.to_string())),
                "voters" => {
                    scenario.voters = parse_num(line, single("voters")?, "voter count")?;
                    saw_voters = true;
                }
                "guess_attempts" => {
                    scenario.guess_attempts = parse_num(line, single("guess_attempts")?, "count")?
                }
                "untrusted_register" => {
                    scenario.untrusted_register =
                        parse_num(line, single("untrusted_register")?, "count")?
                }
                "interleave" => {
                    scenario.interleave = match single("interleave")? {
                        "on" => true,
                        "off" => false,
                        other => {
                            return Err(ScenarioError::Parse {
                                line,
                                message: format!("interleave expects on/off, got `{other}`"),
                            })
                        }
                    }
                }
                "script" => {
                    let (range, steps) = args.split_first().ok_or(ScenarioError::Parse {
                        line,
                        message: "`script` needs a voter range".into(),
                    })?;
                    let (start, end) = match range.split_once("..") {
                        Some(_) => parse_range(line, range)?,
                        None => {
                            let n = parse_num(line, range, "voter index")?;
                            (n, n + 1)
                        }
                    };
                    let steps = scenario.parse_steps(line, steps)?;
                    scenario
                        .scripts
                        .push((start as usize..end as usize, steps));
                }
                other => {
                    return Err(ScenarioError::Parse {
                        line,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }

        if scenario.candidates.is_empty() {
            return Err(ScenarioError::Missing("candidates"));
        }
        if !saw_voters {
            return Err(ScenarioError::Missing("voters"));
        }
        Ok(scenario)
    }

    fn parse_steps(&self, line: usize, words: &[&str]) -> Result<Vec<Step>, ScenarioError> {
        let mut steps = Vec::new();
        let mut iter = words.iter();
        while let Some(&word) = iter.next() {
            let step = match word {
                "skip_register" => Step::SkipRegister,
                "auth" => Step::Auth,
                "auth_wrong" => Step::AuthWrong,
                "vote" => Step::Vote { candidate: None },
                "vote_again" => Step::VoteAgain,
                "replay" => Step::Replay,
                "guess" => Step::Guess,
                "wait" => {
                    let arg = iter.next().ok_or(ScenarioError::Parse {
                        line,
                        message: "`wait` needs a duration".into(),
                    })?;
                    let (min, max) = parse_range(line, arg)?;
                    if min > max {
                        return Err(ScenarioError::Parse {
                            line,
                            message: format!("empty wait range `{arg}`"),
                        });
                    }
                    Step::Wait { min, max }
                }
                w => match w.strip_prefix("vote:") {
                    Some(name) => {
                        let id = self
                            .candidates
                            .iter()
                            .position(|c| c == name)
                            .ok_or_else(|| ScenarioError::UnknownCandidate {
                                line,
                                name: name.to_owned(),
                            })?;
                        Step::Vote {
                            candidate: Some(id as u32),
                        }
                    }
                    None => {
                        return Err(ScenarioError::Parse {
                            line,
                            message: format!("unknown step `{w}`"),
                        })
                    }
                },
            };
            steps.push(step);
        }
        Ok(steps)
    }

    /// The step list voter `index` runs.
    pub fn script_for(&self, index: usize) -> Vec<Step> {
        self.scripts
            .iter()
            .rev()
            .find(|(range, _)| range.contains(&index))
            .map(|(_, steps)| steps.clone())
            .unwrap_or_else(default_script)
    }

    pub fn is_registered(&self, index: usize) -> bool {
        !self.script_for(index).contains(&Step::SkipRegister)
    }

    /// Expands every voter script into one time-ordered action list. All
    /// randomness (wait lengths, candidate picks, guessed codes, interleaving)
    /// is drawn here, so the sequence depends only on the scenario and seed.
    pub fn expand(&self, seed: u64, voting_start: u64) -> Vec<Action> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5CE7_A210);
        let n_candidates = self.candidates.len() as u32;
        let candidate_ids: Vec<u32> = (0..n_candidates).collect();

        struct Cursor {
            ready_at: u64,
            tiebreak: u64,
            steps: std::vec::IntoIter<Step>,
        }
        let mut cursors: Vec<Cursor> = (0..self.voters)
            .map(|i| Cursor {
                ready_at: voting_start,
                tiebreak: i as u64,
                steps: self.script_for(i).into_iter(),
            })
            .collect();
        if self.interleave {
            for c in &mut cursors {
                c.tiebreak = rng.random();
            }
        }

        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, u64, usize)>> = cursors
            .iter()
            .enumerate()
            .map(|(i, c)| std::cmp::Reverse((c.ready_at, c.tiebreak, i)))
            .collect();
        let mut actions = Vec::new();

        while let Some(std::cmp::Reverse((at, _, voter))) = heap.pop() {
            let cursor = &mut cursors[voter];
            let Some(step) = cursor.steps.next() else {
                continue;
            };
            let kind = match step {
                Step::SkipRegister => None,
                Step::Wait { min, max } => {
                    cursor.ready_at = at + rng.random_range(min..=max);
                    None
                }
                Step::Auth => Some(ActionKind::Authenticate { correct: true }),
                Step::AuthWrong => Some(ActionKind::Authenticate { correct: false }),
                Step::Vote { candidate } => Some(ActionKind::Vote {
                    candidate: candidate
                        .unwrap_or_else(|| *candidate_ids.choose(&mut rng).expect("candidates")),
                }),
                Step::VoteAgain => Some(ActionKind::VoteAgain {
                    candidate: *candidate_ids.choose(&mut rng).expect("candidates"),
                }),
                Step::Replay => Some(ActionKind::Replay {
                    candidate: *candidate_ids.choose(&mut rng).expect("candidates"),
                }),
                Step::Guess => Some(ActionKind::Guess {
                    candidate: *candidate_ids.choose(&mut rng).expect("candidates"),
                    codes: (0..self.guess_attempts)
                        .map(|_| format!("{:06}", rng.random_range(0..1_000_000u32)))
                        .collect(),
                }),
            };
            if let Some(kind) = kind {
                actions.push(Action { at, voter, kind });
            }
            if self.interleave {
                cursor.tiebreak = rng.random();
            }
            heap.push(std::cmp::Reverse((cursor.ready_at, cursor.tiebreak, voter)));
        }
        actions
    }
}

/// A concrete, timestamped voter action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub at: u64,
    pub voter: usize,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    Authenticate { correct: bool },
    Vote { candidate: u32 },
    VoteAgain { candidate: u32 },
    Replay { candidate: u32 },
    Guess { candidate: u32, codes: Vec<String> },
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionKind::Authenticate { correct: true } => f.write_str("auth"),
            ActionKind::Authenticate { correct: false } => f.write_str("auth_wrong"),
            ActionKind::Vote { candidate } => write!(f, "vote({candidate})"),
            ActionKind::VoteAgain { candidate } => write!(f, "vote_again({candidate})"),
            ActionKind::Replay { candidate } => write!(f, "replay({candidate})"),
            ActionKind::Guess { codes, .. } => write!(f, "guess(x{})", codes.len()),
        }
    }
}

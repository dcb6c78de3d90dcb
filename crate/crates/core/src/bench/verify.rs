//! Differential check of the lazy search tree against the oracle engine.

use std::fmt;

use super::engine::{Engine, EngineError, LstEngine, OracleEngine};
use super::workload::{generate, Kind, Params, Workload};
use crate::par;

/// Structural validation runs after every this many ops, and at the end.
pub const VALIDATE_EVERY: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass {
        ops: usize,
    },
    Mismatch {
        index: usize,
        op: String,
        expected: String,
        got: String,
    },
    Violation {
        index: usize,
        details: Vec<String>,
    },
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass { .. })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass { ops } => write!(f, "pass ({ops} ops)"),
            Outcome::Mismatch {
                index,
                op,
                expected,
                got,
            } => {
                write!(
                    f,
                    "mismatch at op {index} `{op}`: oracle `{expected}`, lst `{got}`"
                )
            }
            Outcome::Violation { index, details } => {
                write!(
                    f,
                    "validation failed after op {index}: {}",
                    details.join("; ")
                )
            }
        }
    }
}

pub fn verify(workload: &Workload) -> Result<Outcome, EngineError> {
    let mut lst = LstEngine::new();
    let mut oracle = OracleEngine::default();
    let n = workload.ops.len();
    for (i, op) in workload.ops.iter().enumerate() {
        let expected = oracle.apply(i, op)?;
        let got = lst.apply(i, op)?;
        if expected != got {
            return Ok(Outcome::Mismatch {
                index: i,
                op: op.to_string(),
                expected,
                got,
            });
        }
        if (i + 1) % VALIDATE_EVERY == 0 || i + 1 == n {
            let details = lst.validate();
            if !details.is_empty() {
                return Ok(Outcome::Violation { index: i, details });
            }
        }
    }
    Ok(Outcome::Pass { ops: n })
}

/// Generates and verifies one workload per seed, in parallel when enabled.
pub fn verify_seeds(
    kind: Kind,
    n: usize,
    seeds: Vec<u64>,
) -> Vec<(u64, Result<Outcome, EngineError>)> {
    par::map(seeds, |seed| {
        (
            seed,
            verify(&generate(
                kind,
                Params {
                    n,
                    q: 10,
                    k: 8,
                    seed,
                },
            )),
        )
    })
}

/// Sequential twin of [`verify_seeds`].
pub fn verify_seeds_seq(
    kind: Kind,
    n: usize,
    seeds: Vec<u64>,
) -> Vec<(u64, Result<Outcome, EngineError>)> {
    par::map_seq(seeds, |seed| {
        (
            seed,
            verify(&generate(
                kind,
                Params {
                    n,
                    q: 10,
                    k: 8,
                    seed,
                },
            )),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_workloads_pass() {
        for kind in Kind::ALL {
            let w = generate(
                kind,
                Params {
                    n: 1500,
                    q: 6,
                    k: 16,
                    seed: 11,
                },
            );
            assert_eq!(
                verify(&w).unwrap(),
                Outcome::Pass { ops: w.ops.len() },
                "{kind}"
            );
        }
    }

    #[test]
    fn fault_is_reported_with_index() {
        let mut w = generate(
            Kind::UniformPq,
            Params {
                n: 100,
                q: 0,
                k: 0,
                seed: 1,
            },
        );
        w.ops.insert(40, super::super::workload::Op::Fault);
        match verify(&w).unwrap() {
            Outcome::Mismatch { index, .. } => assert_eq!(index, 41),
            other => panic!("expected mismatch, got {other}"),
        }
    }

    #[test]
    fn batch_paths_agree() {
        let seeds: Vec<u64> = (0..6).collect();
        let a = verify_seeds(Kind::MixedDict, 800, seeds.clone());
        let b = verify_seeds_seq(Kind::MixedDict, 800, seeds);
        assert_eq!(a, b);
        assert!(a.iter().all(|(_, r)| r.as_ref().unwrap().passed()));
    }
}

//! Workload files and generators.
//!
//! One operation per line:
//!
//! ```text
//! INSERT key          DELETE ref          CHANGE_KEY ref key
//! QUERY_RANK r        QUERY_KEY key       SPLIT r
//! MERGE               EXTRACT_K k         SELECT_K k
//! DELETE_MULTI ref…   FAULT
//! ```
//!
//! A `ref` is the 0-based index of the `INSERT` line that created the entry,
//! counting operations only. Lines starting with `#` are comments; the
//! generators record their parameters in the first one. `SPLIT r` keeps ranks
//! `1..=r` active and sets the rest aside until the next `MERGE`. `FAULT`
//! makes the engine under test answer wrongly, to exercise `verify`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Insert(i64),
    Delete(usize),
    ChangeKey(usize, i64),
    QueryRank(usize),
    QueryKey(i64),
    Split(usize),
    Merge,
    ExtractK(usize),
    SelectK(usize),
    DeleteMulti(Vec<usize>),
    Fault,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Insert(_) => "INSERT",
            Op::Delete(_) => "DELETE",
            Op::ChangeKey(..) => "CHANGE_KEY",
            Op::QueryRank(_) => "QUERY_RANK",
            Op::QueryKey(_) => "QUERY_KEY",
            Op::Split(_) => "SPLIT",
            Op::Merge => "MERGE",
            Op::ExtractK(_) => "EXTRACT_K",
            Op::SelectK(_) => "SELECT_K",
            Op::DeleteMulti(_) => "DELETE_MULTI",
            Op::Fault => "FAULT",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            Op::Insert(k) | Op::QueryKey(k) => write!(f, " {k}"),
            Op::Delete(r) | Op::QueryRank(r) | Op::Split(r) | Op::ExtractK(r) | Op::SelectK(r) => {
                write!(f, " {r}")
            }
            Op::ChangeKey(r, k) => write!(f, " {r} {k}"),
            Op::DeleteMulti(rs) => rs.iter().try_for_each(|r| write!(f, " {r}")),
            Op::Merge | Op::Fault => Ok(()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

/// Parsed workload: the header comment and the operations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Workload {
    pub header: Option<String>,
    pub ops: Vec<Op>,
}

impl Workload {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut w = Workload::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if w.header.is_none() && w.ops.is_empty() {
                    w.header = Some(c.trim().to_string());
                }
                continue;
            }
            let err = |msg: String| ParseError { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap();
            let args: Vec<&str> = parts.collect();
            let int = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| err(format!("bad integer `{s}`")))
            };
            let idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("bad index `{s}`")))
            };
            let arity = |n: usize| {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(err(format!(
                        "{name} takes {n} argument(s), got {}",
                        args.len()
                    )))
                }
            };
            let op = match name {
                "INSERT" => arity(1).and_then(|_| int(args[0]).map(Op::Insert))?,
                "DELETE" => arity(1).and_then(|_| idx(args[0]).map(Op::Delete))?,
                "CHANGE_KEY" => {
                    arity(2)?;
                    Op::ChangeKey(idx(args[0])?, int(args[1])?)
                }
                "QUERY_RANK" => arity(1).and_then(|_| idx(args[0]).map(Op::QueryRank))?,
                "QUERY_KEY" => arity(1).and_then(|_| int(args[0]).map(Op::QueryKey))?,
                "SPLIT" => arity(1).and_then(|_| idx(args[0]).map(Op::Split))?,
                "MERGE" => arity(0).map(|_| Op::Merge)?,
                "EXTRACT_K" => arity(1).and_then(|_| idx(args[0]).map(Op::ExtractK))?,
                "SELECT_K" => arity(1).and_then(|_| idx(args[0]).map(Op::SelectK))?,
                "DELETE_MULTI" => {
                    Op::DeleteMulti(args.iter().map(|a| idx(a)).collect::<Result<_, _>>()?)
                }
                "FAULT" => arity(0).map(|_| Op::Fault)?,
                other => return Err(err(format!("unknown operation `{other}`"))),
            };
            w.ops.push(op);
        }
        Ok(w)
    }

    /// Checks the reference and pairing rules: every ref names an earlier
    /// `INSERT`, `SPLIT` and `MERGE` alternate, and between them only queries,
    /// `SELECT_K` and `FAULT` appear. Errors name the 0-based op index.
    pub fn check(&self) -> Result<(), String> {
        let mut split_open = false;
        for (i, op) in self.ops.iter().enumerate() {
            let refs: &[usize] = match op {
                Op::Delete(r) | Op::ChangeKey(r, _) => std::slice::from_ref(r),
                Op::DeleteMulti(rs) => rs,
                _ => &[],
            };
            for &r in refs {
                if r >= i || !matches!(self.ops[r], Op::Insert(_)) {
                    return Err(format!("op {i}: ref {r} does not name an earlier INSERT"));
                }
            }
            match op {
                Op::Split(_) if split_open => {
                    return Err(format!("op {i}: SPLIT while a split is open"))
                }
                Op::Split(_) => split_open = true,
                Op::Merge if !split_open => return Err(format!("op {i}: MERGE without SPLIT")),
                Op::Merge => split_open = false,
                Op::QueryRank(_) | Op::QueryKey(_) | Op::SelectK(_) | Op::Fault => {}
                _ if split_open => {
                    return Err(format!("op {i}: {} between SPLIT and MERGE", op.name()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(h) = &self.header {
            s.push_str("# ");
            s.push_str(h);
            s.push('\n');
        }
        for op in &self.ops {
            s.push_str(&op.to_string());
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    UniformPq,
    RangeCluster,
    MixedDict,
    MultiSelect,
}

impl Kind {
    pub const ALL: [Kind; 4] = [
        Kind::UniformPq,
        Kind::RangeCluster,
        Kind::MixedDict,
        Kind::MultiSelect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::UniformPq => "uniform-pq",
            Kind::RangeCluster => "range-cluster",
            Kind::MixedDict => "mixed-dict",
            Kind::MultiSelect => "multi-select",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown workload kind `{s}`"))
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Generator parameters. `q` and `k` are ignored by kinds that do not use
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub n: usize,
    pub q: usize,
    pub k: usize,
    pub seed: u64,
}

pub fn generate(kind: Kind, p: Params) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let ops = match kind {
        Kind::UniformPq => uniform_pq(&mut rng, p.n),
        Kind::RangeCluster => range_cluster(&mut rng, p.n, p.q.max(1), p.k.max(1)),
        Kind::MixedDict => mixed_dict(&mut rng, p.n),
        Kind::MultiSelect => multi_select(&mut rng, p.n, p.k.max(1)),
    };
    Workload {
        header: Some(format!(
            "lazydict workload kind={kind} n={} q={} k={} seed={}",
            p.n, p.q, p.k, p.seed
        )),
        ops,
    }
}

fn key_space(n: usize) -> i64 {
    (10 * n.max(1)) as i64
}

/// `n` inserts, each followed by a rank-1 query.
fn uniform_pq(rng: &mut ChaCha8Rng, n: usize) -> Vec<Op> {
    let mut ops = Vec::with_capacity(2 * n);
    for _ in 0..n {
        ops.push(Op::Insert(rng.gen_range(0..key_space(n))));
        ops.push(Op::QueryRank(1));
    }
    ops
}

/// `q` batches of `k` consecutive key queries, with the `n` uniformly
/// distributed inserts spread evenly between batches.
fn range_cluster(rng: &mut ChaCha8Rng, n: usize, q: usize, k: usize) -> Vec<Op> {
    let space = key_space(n);
    let mut ops = Vec::with_capacity(n + q * k);
    let mut inserted = 0;
    for b in 0..q {
        let target = n * (b + 1) / q;
        while inserted < target {
            ops.push(Op::Insert(rng.gen_range(0..space)));
            inserted += 1;
        }
        let start = rng.gen_range(0..space);
        for j in 0..k as i64 {
            ops.push(Op::QueryKey(start + j));
        }
    }
    ops
}

/// `n` inserts followed by `n / k` extractions of `k` entries.
fn multi_select(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Op> {
    let mut ops: Vec<Op> = (0..n)
        .map(|_| Op::Insert(rng.gen_range(0..key_space(n))))
        .collect();
    ops.extend((0..n / k).map(|_| Op::ExtractK(k)));
    ops
}

/// Sorted model used to keep generated references valid.
#[derive(Default)]
struct Model {
    sorted: Vec<(i64, usize)>,
}

impl Model {
    fn insert(&mut self, key: i64, r: usize) {
        let i = self.sorted.partition_point(|&e| e < (key, r));
        self.sorted.insert(i, (key, r));
    }

    fn remove(&mut self, r: usize) -> i64 {
        let i = self.sorted.iter().position(|e| e.1 == r).expect("live ref");
        self.sorted.remove(i).0
    }
}

/// `n` operations over the whole operation set, keys drawn from `[0, n)` so
/// duplicates occur.
fn mixed_dict(rng: &mut ChaCha8Rng, n: usize) -> Vec<Op> {
    let space = n.max(2) as i64;
    let mut ops = Vec::with_capacity(n);
    let mut model = Model::default();
    while ops.len() < n {
        let idx = ops.len();
        let len = model.sorted.len();
        let roll = rng.gen_range(0..100);
        if len < 4 || roll < 36 {
            let k = rng.gen_range(0..space);
            model.insert(k, idx);
            ops.push(Op::Insert(k));
        } else if roll < 48 {
            let r = model.sorted[rng.gen_range(0..len)].1;
            model.remove(r);
            ops.push(Op::Delete(r));
        } else if roll < 62 {
            let r = model.sorted[rng.gen_range(0..len)].1;
            let old = model.remove(r);
            let k = if rng.gen_bool(0.5) {
                (old + rng.gen_range(-3..=3)).clamp(0, space - 1)
            } else {
                rng.gen_range(0..space)
            };
            model.insert(k, r);
            ops.push(Op::ChangeKey(r, k));
        } else if roll < 76 {
            ops.push(Op::QueryRank(rng.gen_range(1..=len)));
        } else if roll < 88 {
            ops.push(Op::QueryKey(rng.gen_range(-1..=space)));
        } else if roll < 92 {
            let r = rng.gen_range(0..=len);
            ops.push(Op::Split(r));
            for _ in 0..rng.gen_range(0..4) {
                if r > 0 && rng.gen_bool(0.5) {
                    ops.push(Op::QueryRank(rng.gen_range(1..=r)));
                } else {
                    ops.push(Op::QueryKey(rng.gen_range(0..space)));
                }
            }
            ops.push(Op::Merge);
        } else if roll < 95 {
            let k = rng.gen_range(1..=(len / 8).max(1));
            model.sorted.drain(..k);
            ops.push(Op::ExtractK(k));
        } else if roll < 97 {
            ops.push(Op::SelectK(rng.gen_range(0..=len / 4)));
        } else {
            let mut refs: Vec<usize> = model.sorted.iter().map(|e| e.1).collect();
            refs.shuffle(rng);
            refs.truncate(rng.gen_range(1..=3.min(len)));
            for &r in &refs {
                model.remove(r);
            }
            ops.push(Op::DeleteMulti(refs));
        }
    }
    ops.truncate(n);
    close_split(&mut ops);
    ops
}

/// A truncated tail could leave a split open; close it.
fn close_split(ops: &mut Vec<Op>) {
    let open = ops.iter().fold(false, |open, op| match op {
        Op::Split(_) => true,
        Op::Merge => false,
        _ => open,
    });
    if open {
        ops.push(Op::Merge);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# hdr\nINSERT 5\nINSERT -2\n\nCHANGE_KEY 0 7\nQUERY_RANK 1\nQUERY_KEY 3\nSPLIT 1\nMERGE\nEXTRACT_K 1\nSELECT_K 2\nDELETE_MULTI 0 1\nDELETE 1\nFAULT\n";
        let w = Workload::parse(text).unwrap();
        assert_eq!(w.header.as_deref(), Some("hdr"));
        assert_eq!(w.ops.len(), 12);
        assert_eq!(Workload::parse(&w.to_text()).unwrap(), w);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Workload::parse("INSERT 1\nINSERT x\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Workload::parse("# c\nFROB 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(Workload::parse("QUERY_RANK\n").is_err());
        assert!(Workload::parse("").unwrap().ops.is_empty());
    }

    #[test]
    fn check_rules() {
        let ok = |t: &str| Workload::parse(t).unwrap().check();
        assert!(ok("INSERT 1\nDELETE 0\nSPLIT 0\nQUERY_KEY 1\nMERGE\n").is_ok());
        assert!(ok("INSERT 1\nDELETE 1\n").is_err());
        assert!(ok("INSERT 1\nQUERY_RANK 1\nDELETE 1\n").is_err());
        assert!(ok("MERGE\n").is_err());
        assert!(ok("SPLIT 0\nINSERT 1\n").is_err());
        assert!(ok("SPLIT 0\nSPLIT 0\n").is_err());
    }

    #[test]
    fn generated_workloads_pass_check() {
        for kind in Kind::ALL {
            for seed in 0..5 {
                let w = generate(
                    kind,
                    Params {
                        n: 400,
                        q: 4,
                        k: 8,
                        seed,
                    },
                );
                assert_eq!(w.check(), Ok(()), "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn uniform_pq_shape() {
        let w = generate(
            Kind::UniformPq,
            Params {
                n: 1000,
                q: 0,
                k: 0,
                seed: 1,
            },
        );
        assert_eq!(
            w.ops.iter().filter(|o| matches!(o, Op::Insert(_))).count(),
            1000
        );
        assert_eq!(
            w.ops.iter().filter(|o| **o == Op::QueryRank(1)).count(),
            1000
        );
    }

    #[test]
    fn multi_select_shape() {
        let w = generate(
            Kind::MultiSelect,
            Params {
                n: 1024,
                q: 0,
                k: 64,
                seed: 1,
            },
        );
        assert_eq!(w.ops.iter().filter(|o| **o == Op::ExtractK(64)).count(), 16);
        assert_eq!(w.ops.len(), 1024 + 16);
    }

    #[test]
    fn same_seed_same_bytes() {
        for kind in Kind::ALL {
            let p = Params {
                n: 500,
                q: 5,
                k: 4,
                seed: 9,
            };
            assert_eq!(generate(kind, p).to_text(), generate(kind, p).to_text());
        }
        let a = generate(
            Kind::MixedDict,
            Params {
                n: 500,
                q: 0,
                k: 0,
                seed: 1,
            },
        );
        let b = generate(
            Kind::MixedDict,
            Params {
                n: 500,
                q: 0,
                k: 0,
                seed: 2,
            },
        );
        assert_ne!(a, b);
    }

    #[test]
    fn kind_names() {
        assert_eq!("mixed-dict".parse::<Kind>().unwrap(), Kind::MixedDict);
        assert!("heap".parse::<Kind>().is_err());
    }
}

//! Replaying a workload on one engine and reporting comparison counts.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use super::engine::{Engine, EngineError, EngineKind};
use super::workload::{Op, Workload};

pub const CSV_HEADER: &str = "op_index,op,comparisons,cum_comparisons,n,gaps,B";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub op_index: usize,
    pub op: &'static str,
    pub comparisons: u64,
    pub cum_comparisons: u64,
    pub n: usize,
    pub gaps: usize,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub engine: &'static str,
    pub rows: Vec<Row>,
    pub answers: Vec<String>,
    pub total: u64,
    /// Final size, gap count and `B` of the active structure.
    pub n: usize,
    pub gaps: usize,
    pub b: f64,
    /// Comparisons spent in `EXTRACT_K` and `SELECT_K`, and the matching sum
    /// of `k·log2(n/k)` (at least 1 per op) over those ops.
    pub select_comparisons: u64,
    pub select_bound: f64,
    pub wall: Duration,
}

impl Report {
    /// `total / (B + n)`; 0 for an empty run.
    pub fn b_ratio(&self) -> f64 {
        let d = self.b + self.n as f64;
        if d == 0.0 {
            0.0
        } else {
            self.total as f64 / d
        }
    }

    /// Selection comparisons over `Σ k·log2(n/k)`, if any selection ran.
    pub fn select_ratio(&self) -> Option<f64> {
        (self.select_bound > 0.0).then(|| self.select_comparisons as f64 / self.select_bound)
    }

    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(32 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.3}",
                r.op_index, r.op, r.comparisons, r.cum_comparisons, r.n, r.gaps, r.b
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "engine={} ops={} comparisons={} n={} gaps={} B={:.1} comparisons/(B+n)={:.4}",
            self.engine,
            self.rows.len(),
            self.total,
            self.n,
            self.gaps,
            self.b,
            self.b_ratio()
        );
        if let Some(r) = self.select_ratio() {
            let _ = write!(s, " select/(k*log2(n/k))={r:.4}");
        }
        let _ = write!(s, " wall_ms={:.1}", self.wall.as_secs_f64() * 1e3);
        s
    }
}

/// `k·log2(n/k)`, at least 1.
pub fn select_bound(n: usize, k: usize) -> f64 {
    if k == 0 || n == 0 {
        return 1.0;
    }
    let k = k.min(n) as f64;
    (k * (n as f64 / k).log2()).max(1.0)
}

pub fn run(workload: &Workload, kind: EngineKind) -> Result<Report, EngineError> {
    run_on(workload, kind.build())
}

pub fn run_on(workload: &Workload, mut engine: Box<dyn Engine>) -> Result<Report, EngineError> {
    let start = Instant::now();
    let mut rows = Vec::with_capacity(workload.ops.len());
    let mut answers = Vec::with_capacity(workload.ops.len());
    let mut select_comparisons = 0;
    let mut select_bound_sum = 0.0;
    let mut before = engine.comparisons();
    for (i, op) in workload.ops.iter().enumerate() {
        let n_before = engine.len();
        answers.push(engine.apply(i, op)?);
        let cum = engine.comparisons();
        let spent = cum - before;
        before = cum;
        if let Op::ExtractK(k) | Op::SelectK(k) = op {
            select_comparisons += spent;
            select_bound_sum += select_bound(n_before, *k);
        }
        rows.push(Row {
            op_index: i,
            op: op.name(),
            comparisons: spent,
            cum_comparisons: cum,
            n: engine.len(),
            gaps: engine.gaps(),
            b: engine.b(),
        });
    }
    Ok(Report {
        engine: engine.name(),
        rows,
        answers,
        total: engine.comparisons(),
        n: engine.len(),
        gaps: engine.gaps(),
        b: engine.b(),
        select_comparisons,
        select_bound: select_bound_sum,
        wall: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::workload::{generate, Kind, Params};
    use super::*;

    #[test]
    fn empty_workload_gives_empty_report() {
        let r = run(&Workload::default(), EngineKind::Lst).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.total, 0);
        assert_eq!(r.b_ratio(), 0.0);
        assert_eq!(r.csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_is_deterministic() {
        let w = generate(
            Kind::MixedDict,
            Params {
                n: 2000,
                q: 0,
                k: 0,
                seed: 3,
            },
        );
        let a = run(&w, EngineKind::Lst).unwrap();
        let b = run(&w, EngineKind::Lst).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.answers, b.answers);
    }

    #[test]
    fn uniform_pq_answers_agree() {
        let w = generate(
            Kind::UniformPq,
            Params {
                n: 3000,
                q: 0,
                k: 0,
                seed: 5,
            },
        );
        let o = run(&w, EngineKind::Oracle).unwrap();
        assert_eq!(run(&w, EngineKind::Lst).unwrap().answers, o.answers);
        assert_eq!(run(&w, EngineKind::FibHeap).unwrap().answers, o.answers);
        assert_eq!(o.total, 0);
    }

    #[test]
    fn cumulative_column_adds_up() {
        let w = generate(
            Kind::RangeCluster,
            Params {
                n: 1000,
                q: 10,
                k: 5,
                seed: 1,
            },
        );
        let r = run(&w, EngineKind::Lst).unwrap();
        let sum: u64 = r.rows.iter().map(|x| x.comparisons).sum();
        assert_eq!(sum, r.total);
        assert_eq!(r.rows.last().unwrap().cum_comparisons, r.total);
    }
}

//! `lazydict`: generate workloads, replay them, verify against the oracle and
//! pin bound constants.
//!
//! Exit codes: 0 ok, 1 answer mismatch or regression, 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lazydict::bench::calibrate::{self, Baseline, TOLERANCE};
use lazydict::bench::engine::EngineKind;
use lazydict::bench::report::run;
use lazydict::bench::verify::{verify, verify_seeds};
use lazydict::bench::workload::{generate, Kind, Params, Workload};

#[derive(Parser)]
#[command(
    name = "lazydict",
    version,
    about = "Comparison-counting harness for selectable heaps and lazy search trees"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded workload file.
    Gen {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Query batches (range-cluster).
        #[arg(long, default_value_t = 10)]
        q: usize,
        /// Batch width (range-cluster) or extraction size (multi-select).
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, env = "LAZYDICT_SEED", default_value_t = 1)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a workload and print per-op CSV.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "lst")]
        engine: EngineKind,
        /// CSV file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one answer per op to this file.
        #[arg(long)]
        answers: Option<PathBuf>,
    },
    /// Diff the lazy search tree against the oracle engine.
    Verify {
        files: Vec<PathBuf>,
        /// Generate and verify `count` workloads of this kind instead.
        #[arg(long)]
        kind: Option<Kind>,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// First seed of a generated batch.
        #[arg(long, env = "LAZYDICT_SEED", default_value_t = 1)]
        seed: u64,
    },
    /// Measure the bound constants and write them as a TOML baseline.
    Calibrate {
        #[arg(long, env = "LAZYDICT_SEED", default_value_t = 1)]
        seed: u64,
        /// Baseline file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against this baseline instead of writing one.
        #[arg(long, conflicts_with = "out")]
        check: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Gen {
            kind,
            n,
            q,
            k,
            seed,
            out,
        } => {
            if n == 0 || q == 0 || k == 0 {
                bail!("n, q and k must be positive");
            }
            emit(
                out.as_deref(),
                &generate(kind, Params { n, q, k, seed }).to_text(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            file,
            engine,
            out,
            answers,
        } => {
            let w = load(&file)?;
            let report = run(&w, engine)?;
            emit(out.as_deref(), &report.csv())?;
            if let Some(path) = answers {
                let mut text = report.answers.join("\n");
                text.push('\n');
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!("{}", report.summary());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify {
            files,
            kind,
            n,
            count,
            seed,
        } => verify_cmd(files, kind, n, count, seed),
        Cmd::Calibrate { seed, out, check } => {
            let measured = calibrate::calibrate(seed);
            match check {
                None => {
                    emit(out.as_deref(), &measured.to_toml())?;
                    Ok(ExitCode::SUCCESS)
                }
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let base = Baseline::from_toml(&text)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    Ok(if regressions(&base, &measured) == 0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
            }
        }
    }
}

fn verify_cmd(
    files: Vec<PathBuf>,
    kind: Option<Kind>,
    n: usize,
    count: u64,
    seed: u64,
) -> Result<ExitCode> {
    let mut failed = 0;
    match kind {
        Some(kind) => {
            if !files.is_empty() {
                bail!("give either workload files or --kind, not both");
            }
            for (s, outcome) in verify_seeds(kind, n, (seed..seed + count).collect()) {
                let outcome = outcome?;
                if !outcome.passed() {
                    eprintln!("{kind} n={n} seed={s}: {outcome}");
                    failed += 1;
                }
            }
            eprintln!("{} of {count} {kind} workloads passed", count - failed);
        }
        None => {
            if files.is_empty() {
                bail!("no workload files given");
            }
            for f in &files {
                let outcome = verify(&load(f)?)?;
                eprintln!("{}: {outcome}", f.display());
                failed += u64::from(!outcome.passed());
            }
        }
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn regressions(base: &Baseline, measured: &Baseline) -> usize {
    let mut bad = 0;
    let mut check = |label: String, got: f64, pinned: f64| {
        let ok = got <= TOLERANCE * pinned;
        eprintln!(
            "{} {label}: measured {got:.4}, baseline {pinned:.4}",
            if ok { "ok  " } else { "FAIL" }
        );
        bad += usize::from(!ok);
    };
    for m in &measured.extract {
        match base.extract_for(m.k) {
            Some(b) => check(format!("extract k={}", m.k), m.ratio, b.ratio),
            None => check(format!("extract k={} (no baseline)", m.k), m.ratio, 0.0),
        }
    }
    for m in &measured.b_bound {
        match base.b_for(m.q) {
            Some(b) => check(format!("B-bound q={}", m.q), m.ratio, b.ratio),
            None => check(format!("B-bound q={} (no baseline)", m.q), m.ratio, 0.0),
        }
    }
    check(
        "multi-select".into(),
        measured.multi_select,
        base.multi_select,
    );
    bad
}

fn load(path: &Path) -> Result<Workload> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let w = Workload::parse(&text).with_context(|| path.display().to_string())?;
    if let Err(msg) = w.check() {
        bail!("{}: {msg}", path.display());
    }
    Ok(w)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing standard output")
        }
    }
}

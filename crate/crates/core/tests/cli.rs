use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lazydict(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lazydict"))
        .args(args)
        .env_remove("LAZYDICT_SEED")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = lazydict(&["gen", "--kind", "mixed-dict", "--n", "500", "--seed", "4"]);
    let b = lazydict(&["gen", "--kind", "mixed-dict", "--n", "500", "--seed", "4"]);
    let c = lazydict(&["gen", "--kind", "mixed-dict", "--n", "500", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn seed_comes_from_the_environment() {
    let flag = lazydict(&["gen", "--kind", "uniform-pq", "--n", "50", "--seed", "9"]);
    let env = Command::new(env!("CARGO_BIN_EXE_lazydict"))
        .args(["gen", "--kind", "uniform-pq", "--n", "50"])
        .env("LAZYDICT_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn run_prints_csv_and_summary() {
    let g = lazydict(&[
        "gen",
        "--kind",
        "range-cluster",
        "--n",
        "400",
        "--seed",
        "2",
    ]);
    let text = stdout(&g);
    let ops = text.lines().filter(|l| !l.starts_with('#')).count();
    let path = scratch("range.txt", &text);
    let o = lazydict(&["run", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("op_index,op,comparisons,cum_comparisons,n,gaps,B")
    );
    assert_eq!(lines.count(), ops);
    assert!(stderr(&o).contains("engine=lst"));
}

#[test]
fn engines_give_the_same_answers() {
    let g = lazydict(&["gen", "--kind", "uniform-pq", "--n", "300", "--seed", "3"]);
    let path = scratch("pq.txt", &stdout(&g));
    let mut answers = Vec::new();
    for engine in ["lst", "fibheap", "oracle"] {
        let out = path.with_extension(format!("{engine}.answers"));
        let o = lazydict(&[
            "run",
            path.to_str().unwrap(),
            "--engine",
            engine,
            "--answers",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{engine}: {}", stderr(&o));
        answers.push(fs::read_to_string(out).unwrap());
    }
    assert_eq!(answers[0], answers[2]);
    assert_eq!(answers[1], answers[2]);
}

#[test]
fn empty_workload_gives_header_only() {
    let path = scratch("empty.txt", "# nothing\n");
    let o = lazydict(&["run", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "op_index,op,comparisons,cum_comparisons,n,gaps,B\n"
    );
}

#[test]
fn verify_passes_and_fault_fails_with_index() {
    let text = "INSERT 5\nINSERT 3\nQUERY_RANK 1\nFAULT\nQUERY_RANK 2\n";
    let good = scratch("good.txt", &text.replace("FAULT\n", ""));
    let o = lazydict(&["verify", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let bad = scratch("fault.txt", text);
    let o = lazydict(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mismatch at op 4"), "{}", stderr(&o));
}

#[test]
fn verify_generated_batch() {
    let o = lazydict(&[
        "verify",
        "--kind",
        "mixed-dict",
        "--n",
        "1000",
        "--count",
        "8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("8 of 8"));
}

#[test]
fn malformed_input_exits_two_with_line() {
    let path = scratch("bad.txt", "INSERT 1\nINSERT 2\nINSERT two\n");
    let o = lazydict(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let path = scratch("dangling.txt", "INSERT 1\nDELETE 7\n");
    let o = lazydict(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        lazydict(&["gen", "--kind", "nope", "--n", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(lazydict(&["run", "/does/not/exist"]).status.code(), Some(2));
    assert_eq!(lazydict(&["verify"]).status.code(), Some(2));
}

#[test]
fn fibheap_rejects_dictionary_workloads() {
    let path = scratch("dict.txt", "INSERT 1\nQUERY_KEY 1\n");
    let o = lazydict(&["run", path.to_str().unwrap(), "--engine", "fibheap"]);
    assert_eq!(o.status.code(), Some(2));
}

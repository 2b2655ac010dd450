use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn seismic(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seismic"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn seismic")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = seismic(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str], dir: &Path) -> String {
    let out = seismic(args, dir);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.trim_end().lines().count(),
        1,
        "diagnostic not one line: {err}"
    );
    err
}

fn corpus() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().to_path_buf();
    ok(
        &[
            "generate",
            "--docs",
            "1500",
            "--queries",
            "30",
            "--seed",
            "3",
            "--dim",
            "2000",
            "--docs-output",
            "d.csr",
            "--queries-output",
            "q.csr",
        ],
        &p,
    );
    (dir, p)
}

const BUILD: &[&str] = &[
    "build", "--input", "d.csr", "--output", "d.idx", "--alpha", "0.4", "--beta", "0.2", "--gamma",
    "0.6", "--seed", "11",
];

#[test]
fn full_pipeline() {
    let (_dir, p) = corpus();
    ok(BUILD, &p);
    ok(
        &[
            "knn-graph",
            "--index",
            "d.idx",
            "--kappa",
            "8",
            "--output",
            "d.knn",
        ],
        &p,
    );
    ok(
        &[
            "search",
            "--index",
            "d.idx",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--alpha-q",
            "0.8",
            "--heap-factor",
            "0.9",
            "--output",
            "run.tsv",
        ],
        &p,
    );
    ok(
        &[
            "search",
            "--index",
            "d.idx",
            "--graph",
            "d.knn",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--alpha-q",
            "0.8",
            "--heap-factor",
            "0.9",
            "--output",
            "graph.tsv",
        ],
        &p,
    );
    ok(
        &[
            "ground-truth",
            "--input",
            "d.csr",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--output",
            "gt.bin",
        ],
        &p,
    );

    let tsv = std::fs::read_to_string(p.join("run.tsv")).unwrap();
    let first: Vec<&str> = tsv.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[..2], ["0", "1"]);
    assert_eq!(first[3].split('.').nth(1).unwrap().len(), 6);
    assert_eq!(
        std::fs::metadata(p.join("gt.bin")).unwrap().len(),
        8 + 30 * 10 * 8
    );

    let plain: f64 = ok(
        &[
            "evaluate", "--run", "run.tsv", "--gt", "gt.bin", "--k", "10",
        ],
        &p,
    )
    .trim()
    .parse()
    .unwrap();
    let graph: f64 = ok(
        &[
            "evaluate",
            "--run",
            "graph.tsv",
            "--gt",
            "gt.bin",
            "--k",
            "10",
        ],
        &p,
    )
    .trim()
    .parse()
    .unwrap();
    assert!(plain > 0.8, "accuracy {plain}");
    assert!(graph >= plain);
}

#[test]
fn exact_mode_scores_perfectly() {
    let (_dir, p) = corpus();
    ok(
        &[
            "build",
            "--input",
            "d.csr",
            "--output",
            "e.idx",
            "--alpha",
            "1",
            "--beta",
            "0.2",
            "--gamma",
            "1",
            "--seed",
            "0",
            "--no-quantize",
        ],
        &p,
    );
    ok(
        &[
            "search",
            "--index",
            "e.idx",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--alpha-q",
            "1",
            "--heap-factor",
            "1",
            "--output",
            "run.tsv",
        ],
        &p,
    );
    ok(
        &[
            "ground-truth",
            "--input",
            "d.csr",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--output",
            "gt.bin",
        ],
        &p,
    );
    let acc = ok(
        &[
            "evaluate", "--run", "run.tsv", "--gt", "gt.bin", "--k", "10",
        ],
        &p,
    );
    assert_eq!(acc.trim(), "1.000000");
}

#[test]
fn builds_are_reproducible() {
    let (_dir, p) = corpus();
    ok(BUILD, &p);
    std::fs::rename(p.join("d.idx"), p.join("first.idx")).unwrap();
    ok(BUILD, &p);
    assert_eq!(
        std::fs::read(p.join("first.idx")).unwrap(),
        std::fs::read(p.join("d.idx")).unwrap()
    );
    ok(
        &[
            "knn-graph",
            "--index",
            "d.idx",
            "--kappa",
            "4",
            "--output",
            "a.knn",
            "--exact",
        ],
        &p,
    );
    ok(
        &[
            "knn-graph",
            "--index",
            "d.idx",
            "--kappa",
            "4",
            "--output",
            "b.knn",
            "--exact",
        ],
        &p,
    );
    assert_eq!(
        std::fs::read(p.join("a.knn")).unwrap(),
        std::fs::read(p.join("b.knn")).unwrap()
    );
}

#[test]
fn stats_modes_emit_tsv() {
    let (_dir, p) = corpus();
    let mass = ok(&["stats", "--input", "d.csr", "--mode", "mass"], &p);
    let values: Vec<f64> = mass
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!((values.last().unwrap() - 1.0).abs() < 1e-9);

    let ip = ok(
        &[
            "stats",
            "--input",
            "d.csr",
            "--queries",
            "q.csr",
            "--mode",
            "ip",
            "--alpha",
            "1",
            "--alpha-q",
            "1",
        ],
        &p,
    );
    let row: Vec<&str> = ip.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[2..5], ["1.000000", "1.000000", "1.000000"]);

    let nr = ok(
        &[
            "stats",
            "--input",
            "d.csr",
            "--queries",
            "q.csr",
            "--mode",
            "norm-ratio",
            "--k-far",
            "1",
        ],
        &p,
    );
    assert!(nr.lines().skip(1).all(|l| l.starts_with("1.000000\t")));
}

#[test]
fn bench_reports_latency() {
    let (_dir, p) = corpus();
    ok(BUILD, &p);
    let out = ok(
        &[
            "bench",
            "--index",
            "d.idx",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--alpha-q",
            "0.8",
            "--heap-factor",
            "0.9",
            "--reps",
            "2",
        ],
        &p,
    );
    assert!(out.starts_with("queries\t30\n"));
    assert!(out.contains("p95_us\t"));
}

#[test]
fn errors_are_one_line_and_nonzero() {
    let (_dir, p) = corpus();
    assert!(fail(
        &[
            "build",
            "--input",
            "missing.csr",
            "--output",
            "x",
            "--alpha",
            "0.4",
            "--beta",
            "0.2",
            "--gamma",
            "0.6",
            "--seed",
            "1"
        ],
        &p
    )
    .contains("missing.csr"));
    assert!(fail(
        &[
            "build", "--input", "d.csr", "--output", "x", "--alpha", "1.5", "--beta", "0.2",
            "--gamma", "0.6", "--seed", "1"
        ],
        &p
    )
    .contains("alpha"));
    let bytes = std::fs::read(p.join("d.csr")).unwrap();
    std::fs::write(p.join("cut.csr"), &bytes[..bytes.len() / 3]).unwrap();
    assert!(fail(&["stats", "--input", "cut.csr", "--mode", "mass"], &p).contains("truncated"));
    std::fs::write(p.join("junk.idx"), b"not an index").unwrap();
    fail(
        &[
            "search",
            "--index",
            "junk.idx",
            "--queries",
            "q.csr",
            "--k",
            "10",
            "--alpha-q",
            "0.8",
            "--heap-factor",
            "0.9",
            "--output",
            "r.tsv",
        ],
        &p,
    );
    fail(&["stats", "--input", "d.csr", "--mode", "ip"], &p);
    ok(BUILD, &p);
    fail(
        &[
            "search",
            "--index",
            "d.idx",
            "--queries",
            "q.csr",
            "--k",
            "0",
            "--alpha-q",
            "0.8",
            "--heap-factor",
            "0.9",
            "--output",
            "r.tsv",
        ],
        &p,
    );
}

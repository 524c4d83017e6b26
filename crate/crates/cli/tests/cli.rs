//! End-to-end checks of the command-line surface through the real binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankdrift"))
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

struct Dirs {
    _guard: tempfile::TempDir,
    root: PathBuf,
}

fn dirs() -> Dirs {
    let guard = tempfile::tempdir().unwrap();
    let root = guard.path().to_path_buf();
    Dirs { _guard: guard, root }
}

#[test]
fn empty_input_produces_header_only_tables() {
    let d = dirs();
    let input = d.root.join("empty.tsv");
    fs::write(&input, "").unwrap();
    let out = d.root.join("run");
    let status = binary()
        .args(["score", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let scores = read(&out.join("scores.tsv"));
    assert_eq!(scores.lines().count(), 1);
    assert!(scores.starts_with("window_index\t"));
    let attribution = read(&out.join("attribution.tsv"));
    assert_eq!(attribution.lines().count(), 1);
}

#[test]
fn malformed_line_is_named_and_fails() {
    let d = dirs();
    let input = d.root.join("bad.tsv");
    let mut content = String::new();
    for i in 0..16 {
        content.push_str(&format!("{i}\ta\tb\n"));
    }
    content.push_str("bogus line seventeen\n");
    fs::write(&input, content).unwrap();
    let output = binary()
        .args(["score", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(d.root.join("run"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 17"), "stderr was: {stderr}");
}

#[test]
fn generate_score_eval_round_trip() {
    let d = dirs();
    let gen_dir = d.root.join("gen");
    let run_dir = d.root.join("run");
    let eval_dir = d.root.join("eval");
    assert!(binary()
        .args([
            "generate", "--inject", "w", "--nodes", "120", "--edges", "1500", "--timestamps",
            "400", "--events", "12", "--warmup", "60", "--seed", "11", "--out",
        ])
        .arg(&gen_dir)
        .status()
        .unwrap()
        .success());
    assert!(binary()
        .args(["score", "--window", "1", "--warmup", "60", "--input"])
        .arg(gen_dir.join("edges.tsv"))
        .arg("--out")
        .arg(&run_dir)
        .status()
        .unwrap()
        .success());
    assert!(binary()
        .args(["eval", "--metric", "w", "--ks", "12,30", "--scores"])
        .arg(run_dir.join("scores.tsv"))
        .arg("--labels")
        .arg(gen_dir.join("labels.tsv"))
        .arg("--out")
        .arg(&eval_dir)
        .status()
        .unwrap()
        .success());

    let eval = read(&eval_dir.join("eval.tsv"));
    assert!(eval.starts_with("metric\tk\tvalue\n"));
    let precision_12: f64 = eval
        .lines()
        .find(|l| l.starts_with("precision\t12\t"))
        .and_then(|l| l.rsplit('\t').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&precision_12));

    // The interning table covers every node mentioned in the stream.
    let nodes = read(&run_dir.join("nodes.tsv"));
    assert!(nodes.lines().count() > 100);

    // Attribution rows reference original node names.
    let attribution = read(&run_dir.join("attribution.tsv"));
    assert!(attribution.lines().count() > 1);
}

#[test]
fn identical_flags_give_byte_identical_outputs() {
    let d = dirs();
    for pass in ["a", "b"] {
        let base = d.root.join(pass);
        assert!(binary()
            .args([
                "generate", "--inject", "s", "--nodes", "80", "--edges", "900", "--timestamps",
                "250", "--events", "8", "--warmup", "40", "--seed", "5", "--out",
            ])
            .arg(base.join("gen"))
            .status()
            .unwrap()
            .success());
        assert!(binary()
            .args(["score", "--window", "1", "--warmup", "40", "--input"])
            .arg(base.join("gen/edges.tsv"))
            .arg("--out")
            .arg(base.join("run"))
            .status()
            .unwrap()
            .success());
    }
    for file in ["gen/edges.tsv", "gen/labels.tsv", "run/scores.tsv", "run/attribution.tsv"] {
        let a = read(&d.root.join("a").join(file));
        let b = read(&d.root.join("b").join(file));
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn eval_rejects_misaligned_labels() {
    let d = dirs();
    let gen_dir = d.root.join("gen");
    let run_dir = d.root.join("run");
    assert!(binary()
        .args([
            "generate", "--nodes", "50", "--edges", "600", "--timestamps", "200", "--warmup",
            "30", "--seed", "3", "--out",
        ])
        .arg(&gen_dir)
        .status()
        .unwrap()
        .success());
    assert!(binary()
        .args(["score", "--window", "1", "--warmup", "30", "--input"])
        .arg(gen_dir.join("edges.tsv"))
        .arg("--out")
        .arg(&run_dir)
        .status()
        .unwrap()
        .success());
    // Truncate the label file so scored windows lose their labels.
    let labels = read(&gen_dir.join("labels.tsv"));
    let truncated: String = labels.lines().take(50).map(|l| format!("{l}\n")).collect();
    let short = d.root.join("short_labels.tsv");
    fs::write(&short, truncated).unwrap();
    let output = binary()
        .args(["eval", "--ks", "5", "--scores"])
        .arg(run_dir.join("scores.tsv"))
        .arg("--labels")
        .arg(&short)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("missing"), "stderr was: {stderr}");
}

#[test]
fn deletions_flow_through_scoring() {
    let d = dirs();
    let input = d.root.join("stream.tsv");
    let mut content = String::new();
    content.push_str("0\ta\tb\n0\ta\tc\n0\tb\tc\n");
    content.push_str("1\ta\tb\t0\t-\n");
    content.push_str("2\tb\ta\n");
    fs::write(&input, content).unwrap();
    let out = d.root.join("run");
    assert!(binary()
        .args(["score", "--window", "1", "--warmup", "0", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert_eq!(read(&out.join("scores.tsv")).lines().count(), 4);
}

#[test]
fn window_labels_apply_the_attack_edge_threshold() {
    let d = dirs();
    let input = d.root.join("labeled.tsv");
    let mut content = String::new();
    // Window 0: 50 attack events; window 1: 49; window 2: none.
    for _ in 0..50 {
        content.push_str("0\ta\tb\t1\n");
    }
    for _ in 0..49 {
        content.push_str("1\ta\tb\t1\n");
    }
    content.push_str("2\tb\ta\n");
    fs::write(&input, content).unwrap();
    let out = d.root.join("run");
    assert!(binary()
        .args(["score", "--window", "1", "--warmup", "0", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let labels = read(&out.join("window_labels.tsv"));
    assert_eq!(labels, "window_index\tlabel\n0\t1\n1\t0\n2\t0\n");
}

//! TSV writers for scores, attribution, interning tables, labels, and
//! evaluation results. All numeric formatting is fixed so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use rankdrift::eval::EvalResult;
use rankdrift::pipeline::ScoredWindow;

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn fmt_score(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_scores(path: &Path, windows: &[ScoredWindow], combined: impl Fn(&ScoredWindow) -> f64) -> Result<()> {
    let mut out = String::from(
        "window_index\tt_start\tscore\tscore_s\tscore_w\tl1_d1s\tl1_d2s\tl1_d1w\tl1_d2w\twarmup\n",
    );
    for w in windows {
        let r = &w.record;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.window_index,
            w.t_start,
            fmt_score(combined(w)),
            fmt_score(r.score_structural),
            fmt_score(r.score_weighted),
            fmt_score(r.l1_d1s),
            fmt_score(r.l1_d2s),
            fmt_score(r.l1_d1w),
            fmt_score(r.l1_d2w),
            u8::from(r.warmup),
        )
        .unwrap();
    }
    write_file(path, &out)
}

pub fn write_attribution(path: &Path, windows: &[ScoredWindow], names: &[String]) -> Result<()> {
    let mut out = String::from("window_index\trank\tnode\tscore\tchannel\n");
    for w in windows {
        for (rank, attr) in w.record.top_nodes.iter().enumerate() {
            let name = names
                .get(attr.node as usize)
                .map(String::as_str)
                .unwrap_or("?");
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                w.record.window_index,
                rank + 1,
                name,
                fmt_score(attr.magnitude),
                attr.channel.label(),
            )
            .unwrap();
        }
    }
    write_file(path, &out)
}

pub fn write_nodes(path: &Path, names: &[String]) -> Result<()> {
    let mut out = String::from("id\tnode\n");
    for (id, name) in names.iter().enumerate() {
        writeln!(out, "{id}\t{name}").unwrap();
    }
    write_file(path, &out)
}

pub fn write_window_labels(path: &Path, labels: impl Iterator<Item = (u64, bool)>) -> Result<()> {
    let mut out = String::from("window_index\tlabel\n");
    for (window, label) in labels {
        writeln!(out, "{window}\t{}", u8::from(label)).unwrap();
    }
    write_file(path, &out)
}

pub fn write_edges(path: &Path, events: &[rankdrift::stream::EdgeEvent]) -> Result<()> {
    let mut out = String::from("");
    for e in events {
        writeln!(out, "{}\t{}\t{}\t{}", e.timestamp, e.src, e.dst, u8::from(e.label)).unwrap();
    }
    write_file(path, &out)
}

pub fn render_eval(result: &EvalResult) -> String {
    let mut out = String::from("metric\tk\tvalue\n");
    for p in &result.points {
        writeln!(out, "precision\t{}\t{:.6}", p.k, p.precision).unwrap();
    }
    for p in &result.points {
        writeln!(out, "recall\t{}\t{:.6}", p.k, p.recall).unwrap();
    }
    let t = &result.threshold;
    writeln!(out, "threshold\t-\t{}", fmt_score(t.threshold)).unwrap();
    writeln!(out, "threshold_rate\t-\t{:.6}", t.rate).unwrap();
    writeln!(out, "above_threshold\t-\t{}", t.above).unwrap();
    writeln!(out, "threshold_true_positives\t-\t{}", t.true_positives).unwrap();
    writeln!(out, "threshold_degenerate\t-\t{}", u8::from(t.degenerate)).unwrap();
    writeln!(out, "total_anomalies\t-\t{}", result.total_anomalies).unwrap();
    writeln!(out, "evaluated_windows\t-\t{}", result.table.len()).unwrap();
    out
}

pub fn write_eval(path: &Path, result: &EvalResult) -> Result<()> {
    write_file(path, &render_eval(result))
}

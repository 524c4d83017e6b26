//! Edge-file parsing and node interning.
//!
//! One event per line, fields separated by a single tab or comma:
//! `timestamp src dst [label] [sign]`. Node ids are arbitrary strings,
//! interned to dense integers in first-seen order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};

use rankdrift::stream::{EdgeEvent, Sign};

/// A parsed stream with its interning table.
#[derive(Debug)]
pub struct ParsedStream {
    pub events: Vec<EdgeEvent>,
    /// Dense id -> original name.
    pub names: Vec<String>,
}

impl ParsedStream {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }
}

struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn new() -> Self {
        Interner { ids: HashMap::new(), names: Vec::new() }
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') { line.split('\t').collect() } else { line.split(',').collect() }
}

/// Parses a whole edge file; errors carry the 1-based line number.
pub fn parse_edge_file(path: &Path) -> Result<ParsedStream> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut interner = Interner::new();
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.with_context(|| format!("read error at line {line_no}"))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let event = parse_line(line, &mut interner)
            .with_context(|| format!("{}: malformed line {line_no}", path.display()))?;
        events.push(event);
    }
    Ok(ParsedStream { events, names: interner.names })
}

fn parse_line(line: &str, interner: &mut Interner) -> Result<EdgeEvent> {
    let fields = split_fields(line);
    if fields.len() < 3 || fields.len() > 5 {
        bail!("expected 3 to 5 fields, found {}", fields.len());
    }
    let timestamp: f64 = fields[0]
        .trim()
        .parse()
        .with_context(|| format!("bad timestamp {:?}", fields[0]))?;
    if !timestamp.is_finite() {
        bail!("non-finite timestamp {:?}", fields[0]);
    }
    let src = interner.intern(fields[1].trim());
    let dst = interner.intern(fields[2].trim());
    let label = match fields.get(3).map(|f| f.trim()) {
        None | Some("0") => false,
        Some("1") => true,
        Some(other) => bail!("bad label {other:?}, expected 0 or 1"),
    };
    let sign = match fields.get(4).map(|f| f.trim()) {
        None | Some("+") => Sign::Insert,
        Some("-") => Sign::Delete,
        Some(other) => bail!("bad sign {other:?}, expected + or -"),
    };
    Ok(EdgeEvent { src, dst, timestamp, sign, label })
}

/// Parses a `window_index<TAB>0|1` label file.
pub fn parse_label_file(path: &Path) -> Result<std::collections::BTreeMap<u64, bool>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut labels = std::collections::BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.with_context(|| format!("read error at line {line_no}"))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with("window_index") {
            continue;
        }
        let fields = split_fields(line);
        if fields.len() != 2 {
            bail!("{}: malformed line {line_no}: expected 2 fields", path.display());
        }
        let window: u64 = fields[0]
            .trim()
            .parse()
            .with_context(|| format!("{}: malformed line {line_no}", path.display()))?;
        let label = match fields[1].trim() {
            "0" => false,
            "1" => true,
            other => bail!("{}: malformed line {line_no}: bad label {other:?}", path.display()),
        };
        if labels.insert(window, label).is_some() {
            bail!("{}: duplicate window {window} at line {line_no}", path.display());
        }
    }
    Ok(labels)
}

/// One row of a `scores.tsv` table.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRow {
    pub window_index: u64,
    pub score: f64,
    pub score_structural: f64,
    pub score_weighted: f64,
    pub warmup: bool,
}

/// Parses a score table written by the `score` command; columns are located
/// by header name so column order is not load-bearing.
pub fn parse_score_file(path: &Path) -> Result<Vec<ScoreRow>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.context("read error at line 1")?,
        None => bail!("{}: empty score table", path.display()),
    };
    let columns: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|&c| c == name)
            .with_context(|| format!("{}: missing column {name:?}", path.display()))
    };
    let idx_window = col("window_index")?;
    let idx_score = col("score")?;
    let idx_s = col("score_s")?;
    let idx_w = col("score_w")?;
    let idx_warmup = col("warmup")?;

    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.with_context(|| format!("read error at line {line_no}"))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let field = |i: usize| -> Result<&str> {
            fields
                .get(i)
                .copied()
                .with_context(|| format!("{}: malformed line {line_no}", path.display()))
        };
        let parse_f = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .with_context(|| format!("{}: malformed line {line_no}", path.display()))
        };
        rows.push(ScoreRow {
            window_index: field(idx_window)?
                .parse()
                .with_context(|| format!("{}: malformed line {line_no}", path.display()))?,
            score: parse_f(idx_score)?,
            score_structural: parse_f(idx_s)?,
            score_weighted: parse_f(idx_w)?,
            warmup: field(idx_warmup)? == "1",
        });
    }
    Ok(rows)
}

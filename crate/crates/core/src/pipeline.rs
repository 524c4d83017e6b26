//! End-to-end scoring pipeline: windows a raw event stream, maintains both
//! score vectors incrementally (with periodic batch re-anchoring to bound
//! floating-point drift), and emits one anomaly record per window.

use thiserror::Error;

use crate::metrics::{
    compute_anomaly_score, derivatives, AnomalyRecord, DerivativePair, MetricsError, NodeStats,
};
use crate::score::{batch_scores, update_scores, ScoreKind, ScoreVector, SolveError, SolverConfig};
use crate::stream::{EdgeEvent, GraphState, SnapshotDelta, StreamError, WindowedStream};

/// Which score families the run maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSelection {
    Structural,
    Weighted,
    Both,
}

impl MetricSelection {
    pub fn structural(self) -> bool {
        matches!(self, MetricSelection::Structural | MetricSelection::Both)
    }

    pub fn weighted(self) -> bool {
        matches!(self, MetricSelection::Weighted | MetricSelection::Both)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    /// Tumbling window width in stream time units.
    pub window_width: f64,
    pub solver: SolverConfig,
    /// Windows flagged as warm-up; they seed normalization statistics and
    /// are excluded from evaluation.
    pub warmup_windows: u64,
    /// Attributed nodes per window.
    pub topk: usize,
    /// Every this many windows the incremental vectors are replaced by a
    /// batch recomputation; 0 disables re-anchoring.
    pub rebatch_interval: u64,
    pub metric: MetricSelection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_width: 3600.0,
            solver: SolverConfig::default(),
            warmup_windows: 256,
            topk: 10,
            rebatch_interval: 128,
            metric: MetricSelection::Both,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One scored window.
#[derive(Debug, Clone)]
pub struct ScoredWindow {
    pub t_start: f64,
    pub record: AnomalyRecord,
    /// Ground-truth attack events the window carried.
    pub labeled_events: u64,
}

#[derive(Debug)]
pub struct RunResult {
    pub windows: Vec<ScoredWindow>,
    pub node_count: usize,
}

/// Incremental state for one score kind: the current vector plus the two
/// previous window vectors needed by the derivative stencil.
struct Tracker {
    kind: ScoreKind,
    current: ScoreVector,
    prev: Option<ScoreVector>,
    prev2: Option<ScoreVector>,
}

impl Tracker {
    fn new(state: &GraphState, kind: ScoreKind, cfg: &SolverConfig) -> Result<Self, SolveError> {
        let solved = batch_scores(state, kind, cfg)?;
        Ok(Tracker { kind, current: solved.vector, prev: None, prev2: None })
    }

    fn advance(
        &mut self,
        post: &GraphState,
        delta: &SnapshotDelta,
        cfg: &SolverConfig,
        rebatch: bool,
    ) -> Result<(), SolveError> {
        let incremental = update_scores(post, &self.current, delta, cfg)?.vector;
        let next = if rebatch {
            // Replace the incremental state with a fresh batch solve, but
            // shift the derivative history by the same correction so the
            // re-anchoring itself never shows up as a score jump.
            let mut solved = batch_scores(post, self.kind, cfg)?;
            solved.vector.window_index = delta.window_index as i64;
            let correction: Vec<f64> = solved
                .vector
                .values
                .iter()
                .zip(&incremental.values)
                .map(|(b, i)| b - i)
                .collect();
            for history in [&mut self.prev, &mut self.prev2].into_iter().flatten() {
                for (v, c) in history.values.iter_mut().zip(&correction) {
                    *v += c;
                }
            }
            for (v, c) in self.current.values.iter_mut().zip(&correction) {
                *v += c;
            }
            solved.vector
        } else {
            incremental
        };
        self.prev2 = self.prev.take();
        self.prev = Some(std::mem::replace(&mut self.current, next));
        Ok(())
    }

    /// Derivatives at the current window; the first window is defined to
    /// have zero derivatives, the second a zero second derivative.
    fn derivative_pair(&self, n: usize, dt: f64) -> Result<DerivativePair, MetricsError> {
        match &self.prev {
            None => Ok(DerivativePair::zero(self.kind, self.current.window_index, n)),
            Some(prev) => derivatives(self.prev2.as_ref(), prev, &self.current, dt),
        }
    }
}

/// Runs the full scoring pipeline over an in-memory event stream.
///
/// `n` is the fixed node-universe size; every event must reference ids below
/// it. Derivatives are taken per window step (`dt = 1` window unit).
pub fn run_stream(
    n: usize,
    events: impl IntoIterator<Item = EdgeEvent>,
    cfg: &PipelineConfig,
) -> Result<RunResult, PipelineError> {
    cfg.solver.validate()?;
    let mut ws = WindowedStream::new(n, cfg.window_width)?;
    let mut run = Run::new(n, cfg);
    for event in events {
        for delta in ws.ingest(event)? {
            run.on_window(ws.state(), &delta)?;
        }
    }
    if let Some(delta) = ws.flush() {
        run.on_window(ws.state(), &delta)?;
    }
    run.finish()
}

/// Streaming driver used by [`run_stream`]; exposed so callers holding their
/// own [`WindowedStream`] can score windows as they close.
pub struct Run<'cfg> {
    cfg: &'cfg PipelineConfig,
    n: usize,
    structural: Option<Tracker>,
    weighted: Option<Tracker>,
    stats: NodeStats,
    windows: Vec<ScoredWindow>,
    started: bool,
}

impl<'cfg> Run<'cfg> {
    pub fn new(n: usize, cfg: &'cfg PipelineConfig) -> Self {
        Run {
            cfg,
            n,
            structural: None,
            weighted: None,
            stats: NodeStats::new(n),
            windows: Vec::new(),
            started: false,
        }
    }

    /// Scores one closed window. `post` must be the graph state after the
    /// window's delta was applied.
    pub fn on_window(
        &mut self,
        post: &GraphState,
        delta: &SnapshotDelta,
    ) -> Result<(), PipelineError> {
        if !self.started {
            // Anchor both trackers on the pre-stream graph. The first delta
            // arrives only after the stream produced events, and the empty
            // universe solves in one iteration, so this stays cheap.
            let empty = GraphState::new(self.n);
            if self.cfg.metric.structural() {
                self.structural =
                    Some(Tracker::new(&empty, ScoreKind::Structural, &self.cfg.solver)?);
            }
            if self.cfg.metric.weighted() {
                self.weighted = Some(Tracker::new(&empty, ScoreKind::Weighted, &self.cfg.solver)?);
            }
            self.started = true;
        }
        let rebatch = self.cfg.rebatch_interval > 0
            && delta.window_index > 0
            && delta.window_index % self.cfg.rebatch_interval == 0;

        let dp_structural = match &mut self.structural {
            Some(tracker) => {
                tracker.advance(post, delta, &self.cfg.solver, rebatch)?;
                tracker.derivative_pair(self.n, 1.0)?
            }
            None => DerivativePair::zero(ScoreKind::Structural, delta.window_index as i64, self.n),
        };
        let dp_weighted = match &mut self.weighted {
            Some(tracker) => {
                tracker.advance(post, delta, &self.cfg.solver, rebatch)?;
                tracker.derivative_pair(self.n, 1.0)?
            }
            None => DerivativePair::zero(ScoreKind::Weighted, delta.window_index as i64, self.n),
        };

        let record = compute_anomaly_score(
            &dp_structural,
            &dp_weighted,
            &mut self.stats,
            self.cfg.topk,
            self.cfg.warmup_windows,
        );
        self.windows.push(ScoredWindow {
            t_start: delta.t_start,
            record,
            labeled_events: delta.labeled_events,
        });
        Ok(())
    }

    pub fn finish(self) -> Result<RunResult, PipelineError> {
        Ok(RunResult { windows: self.windows, node_count: self.n })
    }
}

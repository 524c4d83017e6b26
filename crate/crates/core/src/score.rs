//! Node-score vectors over the structural and weighted transition matrices,
//! computed from scratch by power iteration or incrementally from a previous
//! vector and a window's sparse delta.
//!
//! Both solvers realize the damped propagation series
//! `p = (1-c) * sum_k (c A~^T)^k b`. The incremental path propagates only the
//! sparse starting mass induced by the delta, so its cost tracks the change
//! magnitude rather than the graph size.

use thiserror::Error;

use crate::stream::{GraphState, SnapshotDelta};

/// Which transition matrix and starting vector a score vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Unweighted adjacency, uniform starting vector.
    Structural,
    /// Weighted adjacency, out-weight proportional starting vector.
    Weighted,
}

/// Converged nonnegative score vector summing to 1 (within solver tolerance).
#[derive(Debug, Clone)]
pub struct ScoreVector {
    pub kind: ScoreKind,
    /// Index of the window this vector reflects; -1 for the pre-stream state.
    pub window_index: i64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Damping factor in (0, 1).
    pub damping: f64,
    /// L1 convergence threshold.
    pub epsilon: f64,
    /// Safety cap on iterations.
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { damping: 0.5, epsilon: 1e-3, max_iters: 1000 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(SolveError::InvalidConfig(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(SolveError::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("solver did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// A solve outcome: the vector plus how many propagation rounds it took.
#[derive(Debug, Clone)]
pub struct Solved {
    pub vector: ScoreVector,
    pub iterations: usize,
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Full power iteration from the starting vector until the L1 change between
/// successive iterates drops below `epsilon`.
pub fn batch_scores(
    state: &GraphState,
    kind: ScoreKind,
    cfg: &SolverConfig,
) -> Result<Solved, SolveError> {
    cfg.validate()?;
    let n = state.node_count();
    if n == 0 {
        return Ok(Solved {
            vector: ScoreVector { kind, window_index: -1, values: Vec::new() },
            iterations: 0,
        });
    }
    let weighted = kind == ScoreKind::Weighted;
    let start = match kind {
        ScoreKind::Structural => state.uniform_start(),
        ScoreKind::Weighted => state.weighted_start(),
    };
    let hold = 1.0 - cfg.damping;
    let mut current = start.clone();
    let mut next = vec![0.0; n];
    for iteration in 1..=cfg.max_iters {
        for (slot, b) in next.iter_mut().zip(&start) {
            *slot = hold * b;
        }
        state.propagate(weighted, cfg.damping, &current, &mut next);
        let diff = l1_distance(&current, &next);
        std::mem::swap(&mut current, &mut next);
        if diff < cfg.epsilon {
            return Ok(Solved {
                vector: ScoreVector { kind, window_index: -1, values: current },
                iterations: iteration,
            });
        }
    }
    Err(SolveError::NonConvergence { iterations: cfg.max_iters, residual: f64::INFINITY })
}

/// Incremental update from the previous window's converged vector.
///
/// `post` must be the graph state after the window closed and `delta` the
/// delta that closing emitted. The sparse starting mass (the delta applied
/// to the previous vector, plus the starting-vector change for the weighted
/// kind) is propagated through the updated matrix until its L1 falls below
/// `epsilon`. An empty delta returns the previous vector untouched after
/// zero propagation rounds.
pub fn update_scores(
    post: &GraphState,
    prev: &ScoreVector,
    delta: &SnapshotDelta,
    cfg: &SolverConfig,
) -> Result<Solved, SolveError> {
    cfg.validate()?;
    let n = post.node_count();
    debug_assert_eq!(prev.values.len(), n);
    let weighted = prev.kind == ScoreKind::Weighted;

    let mut residual = vec![0.0; n];
    match prev.kind {
        ScoreKind::Structural => {
            delta.delta_structural.apply_to(&prev.values, cfg.damping, &mut residual);
        }
        ScoreKind::Weighted => {
            delta.delta_weighted.apply_to(&prev.values, cfg.damping, &mut residual);
            delta.start_change.add_to(post, 1.0 - cfg.damping, &mut residual);
        }
    }

    if l1_norm(&residual) == 0.0 {
        return Ok(Solved {
            vector: ScoreVector {
                kind: prev.kind,
                window_index: delta.window_index as i64,
                values: prev.values.clone(),
            },
            iterations: 0,
        });
    }

    let mut values = prev.values.clone();
    let mut rounds = 0usize;
    loop {
        for (slot, r) in values.iter_mut().zip(&residual) {
            *slot += r;
        }
        let mass = l1_norm(&residual);
        if mass < cfg.epsilon {
            break;
        }
        if rounds >= cfg.max_iters {
            return Err(SolveError::NonConvergence { iterations: rounds, residual: mass });
        }
        let mut next = vec![0.0; n];
        post.propagate(weighted, cfg.damping, &residual, &mut next);
        residual = next;
        rounds += 1;
    }

    // Cancellation can leave tiny negative entries; clamp and renormalize so
    // downstream derivative math sees a valid score vector.
    let mut clamped = false;
    for v in &mut values {
        if *v < 0.0 {
            *v = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let sum = l1_norm(&values);
        if sum > 0.0 {
            for v in &mut values {
                *v /= sum;
            }
        }
    }

    Ok(Solved {
        vector: ScoreVector {
            kind: prev.kind,
            window_index: delta.window_index as i64,
            values,
        },
        iterations: rounds,
    })
}

//! Test-support utilities: an independent dense linear-system oracle for the
//! score fixed points, and seeded random stream builders shared by the
//! property and acceptance suites.
//!
//! Nothing here is used by the production paths; the oracle solves
//! `(I - c A~^T) p = (1 - c) b` directly so it stays independent of both the
//! power iteration and the incremental propagation it is used to check.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::score::ScoreKind;
use crate::stream::{EdgeEvent, GraphState, NodeId, WindowedStream};

/// Dense transposed transition matrix, `mat[row][col]`.
pub fn dense_transition(state: &GraphState, kind: ScoreKind) -> Vec<Vec<f64>> {
    let n = state.node_count();
    let mut mat = vec![vec![0.0; n]; n];
    for u in 0..n as NodeId {
        let col = match kind {
            ScoreKind::Structural => state.structural_column(u),
            ScoreKind::Weighted => state.weighted_column(u),
        };
        for (v, a) in col {
            mat[v as usize][u as usize] = a;
        }
    }
    mat
}

/// Solves the score fixed point by Gaussian elimination with partial
/// pivoting: `(I - c A~^T) p = (1 - c) b`.
pub fn dense_fixed_point(state: &GraphState, kind: ScoreKind, damping: f64) -> Vec<f64> {
    let n = state.node_count();
    let transition = dense_transition(state, kind);
    let b = match kind {
        ScoreKind::Structural => state.uniform_start(),
        ScoreKind::Weighted => state.weighted_start(),
    };
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 1.0 } else { 0.0 } - damping * transition[i][j];
        }
        a[i][n] = (1.0 - damping) * b[i];
    }
    // Forward elimination.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-14, "singular system");
        for row in (col + 1)..n {
            let f = a[row][col] / p;
            if f != 0.0 {
                for j in col..=n {
                    let sub = f * a[col][j];
                    a[row][j] -= sub;
                }
            }
        }
    }
    // Back substitution.
    let mut p = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for j in (row + 1)..n {
            acc -= a[row][j] * p[j];
        }
        p[row] = acc / a[row][row];
    }
    p
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Insertion events at time `t` giving every node at least one out-edge
/// (no dangling nodes) plus `extra` random edges with weights 1..=3.
pub fn base_graph_events(rng: &mut ChaCha8Rng, n: u32, extra: usize, t: f64) -> Vec<EdgeEvent> {
    let mut events = Vec::new();
    for u in 0..n {
        let mut v = rng.random_range(0..n);
        if v == u {
            v = (v + 1) % n;
        }
        events.push(EdgeEvent::insert(u, v, t));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n);
        if v == u {
            v = (v + 1) % n;
        }
        let copies = rng.random_range(1..=3u64);
        for _ in 0..copies {
            events.push(EdgeEvent::insert(u, v, t));
        }
    }
    events
}

/// A mixed batch of insertions, deletions, and weight bursts at time `t`,
/// consistent with `state` so nothing is rejected at ingest.
pub fn random_window_events(
    rng: &mut ChaCha8Rng,
    state: &GraphState,
    t: f64,
    intensity: usize,
) -> Vec<EdgeEvent> {
    let n = state.node_count() as u32;
    let mut events = Vec::new();
    // Mirror of remaining weights so deletions stay valid within the batch.
    let mut remaining: std::collections::BTreeMap<(NodeId, NodeId), u64> =
        std::collections::BTreeMap::new();
    for u in 0..n {
        for (v, w) in state.neighbors(u) {
            remaining.insert((u, v), w);
        }
    }
    for _ in 0..intensity {
        match rng.random_range(0..4u8) {
            // Plain insertion.
            0 | 1 => {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                events.push(EdgeEvent::insert(u, v, t));
                *remaining.entry((u, v)).or_insert(0) += 1;
            }
            // Weight burst on one pair.
            2 => {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                let copies = rng.random_range(2..=12u64);
                for _ in 0..copies {
                    events.push(EdgeEvent::insert(u, v, t));
                }
                *remaining.entry((u, v)).or_insert(0) += copies;
            }
            // Deletion of an existing edge occurrence.
            _ => {
                let keys: Vec<(NodeId, NodeId)> =
                    remaining.iter().filter(|&(_, &w)| w > 0).map(|(&k, _)| k).collect();
                if keys.is_empty() {
                    continue;
                }
                let (u, v) = keys[rng.random_range(0..keys.len())];
                events.push(EdgeEvent::delete(u, v, t));
                *remaining.get_mut(&(u, v)).unwrap() -= 1;
            }
        }
    }
    events
}

/// Feeds one window's events (all timestamped `t`) and closes the window.
pub fn close_window_with(ws: &mut WindowedStream, events: &[EdgeEvent]) -> crate::stream::SnapshotDelta {
    for ev in events {
        let closed = ws.ingest(*ev).expect("test events must be valid");
        assert!(closed.is_empty(), "test events must stay within one window");
    }
    ws.flush().expect("window must close")
}

/// A single-node structure change: `dm` existing distinct out-edges of one
/// node rerouted in full to fresh destinations, leaving `k` and all
/// out-weight totals unchanged.
pub struct StructureChange {
    pub node: NodeId,
    pub dm: usize,
    pub k: usize,
    pub events: Vec<EdgeEvent>,
}

/// Builds a reroute at time `t` for some node of `state` with spare
/// non-neighbors available; returns `None` when no node qualifies.
pub fn plan_structure_change(
    rng: &mut ChaCha8Rng,
    state: &GraphState,
    t: f64,
) -> Option<StructureChange> {
    let n = state.node_count() as u32;
    let start = rng.random_range(0..n);
    for offset in 0..n {
        let u = (start + offset) % n;
        let k = state.out_degree(u);
        if k == 0 {
            continue;
        }
        let neighbors: Vec<NodeId> = state.neighbors(u).map(|(v, _)| v).collect();
        let fresh: Vec<NodeId> = (0..n)
            .filter(|&v| v != u && !neighbors.contains(&v))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        let dm = rng.random_range(1..=k.min(fresh.len()));
        let mut events = Vec::new();
        let mut fresh_pick = fresh;
        for &old in neighbors.iter().take(dm) {
            let idx = rng.random_range(0..fresh_pick.len());
            let new = fresh_pick.swap_remove(idx);
            let w = state.weight(u, old);
            for _ in 0..w {
                events.push(EdgeEvent::delete(u, old, t));
                events.push(EdgeEvent::insert(u, new, t));
            }
        }
        return Some(StructureChange { node: u, dm, k, events });
    }
    None
}

/// A single-edge weight change: `dm` weight added on one existing out-edge.
pub struct WeightChange {
    pub node: NodeId,
    pub dm: u64,
    pub m_u: u64,
    pub m: u64,
    pub events: Vec<EdgeEvent>,
}

pub fn plan_weight_change(
    rng: &mut ChaCha8Rng,
    state: &GraphState,
    t: f64,
) -> Option<WeightChange> {
    let n = state.node_count() as u32;
    let start = rng.random_range(0..n);
    for offset in 0..n {
        let u = (start + offset) % n;
        if state.out_degree(u) == 0 {
            continue;
        }
        let neighbors: Vec<NodeId> = state.neighbors(u).map(|(v, _)| v).collect();
        let v = neighbors[rng.random_range(0..neighbors.len())];
        let dm = rng.random_range(1..=50u64);
        let events = (0..dm).map(|_| EdgeEvent::insert(u, v, t)).collect();
        return Some(WeightChange {
            node: u,
            dm,
            m_u: state.out_weight(u),
            m: state.effective_total_weight(),
            events,
        });
    }
    None
}

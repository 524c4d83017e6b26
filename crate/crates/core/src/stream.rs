//! Edge-event ingestion, tumbling time windows, and per-window sparse deltas
//! of the normalized adjacency matrices.
//!
//! The stream owner feeds timestamped edge events into a [`WindowedStream`].
//! Events are buffered until their window closes; closing a window applies
//! the net weight changes to the cumulative [`GraphState`] and emits a
//! [`SnapshotDelta`] describing how the column-stochastic transition matrices
//! and the weight-proportional starting vector moved.

use std::collections::BTreeMap;

use thiserror::Error;

/// Dense node identifier produced by interning.
pub type NodeId = u32;

/// Direction of one edge occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Insert,
    Delete,
}

/// One timestamped directed edge occurrence, the unit of the stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvent {
    pub src: NodeId,
    pub dst: NodeId,
    pub timestamp: f64,
    pub sign: Sign,
    /// Ground-truth attack flag carried through for evaluation.
    pub label: bool,
}

impl EdgeEvent {
    pub fn insert(src: NodeId, dst: NodeId, timestamp: f64) -> Self {
        EdgeEvent { src, dst, timestamp, sign: Sign::Insert, label: false }
    }

    pub fn delete(src: NodeId, dst: NodeId, timestamp: f64) -> Self {
        EdgeEvent { src, dst, timestamp, sign: Sign::Delete, label: false }
    }

    pub fn labeled(mut self, label: bool) -> Self {
        self.label = label;
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("event timestamp {got} precedes previous timestamp {prev}")]
    OutOfOrderTimestamp { prev: f64, got: f64 },
    #[error("node id {node} outside universe of {n} nodes")]
    UnknownNode { node: NodeId, n: usize },
    #[error("deletion of edge {src}->{dst} which does not exist")]
    DeleteNonexistentEdge { src: NodeId, dst: NodeId },
    #[error("window width must be positive and finite, got {0}")]
    InvalidWindowWidth(f64),
}

/// Cumulative dynamic graph over a fixed universe of `n` nodes.
///
/// Weights are integer edge-occurrence counts; zero-weight entries are
/// removed so the neighbor set always equals the weight map's key set.
/// A node without out-edges is treated as carrying one implicit self-loop,
/// which keeps both transition matrices column-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    n: usize,
    adj: Vec<BTreeMap<NodeId, u64>>,
    out_weight: Vec<u64>,
    total_weight: u64,
    dangling: usize,
}

impl GraphState {
    pub fn new(n: usize) -> Self {
        GraphState {
            n,
            adj: vec![BTreeMap::new(); n],
            out_weight: vec![0; n],
            total_weight: 0,
            dangling: n,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Distinct out-degree `k_u`.
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.adj[u as usize].len()
    }

    /// Total out-edge weight `m_u`.
    pub fn out_weight(&self, u: NodeId) -> u64 {
        self.out_weight[u as usize]
    }

    /// Global total edge weight `m`.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> u64 {
        self.adj[u as usize].get(&v).copied().unwrap_or(0)
    }

    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.adj[u as usize].iter().map(|(&v, &w)| (v, w))
    }

    pub fn dangling_count(&self) -> usize {
        self.dangling
    }

    /// Out-weight with the implicit self-loop for dangling nodes.
    pub fn effective_out_weight(&self, u: NodeId) -> u64 {
        if self.adj[u as usize].is_empty() { 1 } else { self.out_weight[u as usize] }
    }

    /// Total weight including implicit self-loops of dangling nodes.
    pub fn effective_total_weight(&self) -> u64 {
        self.total_weight + self.dangling as u64
    }

    /// Column `u` of the structural transition matrix (transposed,
    /// column-stochastic): `1/k_u` per distinct neighbor, or a self-loop.
    pub fn structural_column(&self, u: NodeId) -> Vec<(NodeId, f64)> {
        let m = &self.adj[u as usize];
        if m.is_empty() {
            return vec![(u, 1.0)];
        }
        let share = 1.0 / m.len() as f64;
        m.keys().map(|&v| (v, share)).collect()
    }

    /// Column `u` of the weighted transition matrix: `w_uv / m_u`,
    /// or a self-loop for a dangling node.
    pub fn weighted_column(&self, u: NodeId) -> Vec<(NodeId, f64)> {
        let m = &self.adj[u as usize];
        if m.is_empty() {
            return vec![(u, 1.0)];
        }
        let total = self.out_weight[u as usize] as f64;
        m.iter().map(|(&v, &w)| (v, w as f64 / total)).collect()
    }

    /// Uniform starting vector (all `1/n`).
    pub fn uniform_start(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.n]
    }

    /// Out-weight proportional starting vector, `b(i) = m_i / m` with
    /// implicit self-loop weights included.
    pub fn weighted_start(&self) -> Vec<f64> {
        let total = self.effective_total_weight() as f64;
        (0..self.n as NodeId)
            .map(|u| self.effective_out_weight(u) as f64 / total)
            .collect()
    }

    /// Accumulates `damping * A~^T x` into `acc`, where the matrix is the
    /// structural or weighted transition matrix depending on `weighted`.
    pub fn propagate(&self, weighted: bool, damping: f64, x: &[f64], acc: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(acc.len(), self.n);
        for u in 0..self.n {
            let xu = x[u];
            if xu == 0.0 {
                continue;
            }
            let m = &self.adj[u];
            if m.is_empty() {
                acc[u] += damping * xu;
            } else if weighted {
                let f = damping * xu / self.out_weight[u] as f64;
                for (&v, &w) in m {
                    acc[v as usize] += f * w as f64;
                }
            } else {
                let share = damping * xu / m.len() as f64;
                for &v in m.keys() {
                    acc[v as usize] += share;
                }
            }
        }
    }

    fn apply_change(&mut self, u: NodeId, v: NodeId, net: i64) {
        debug_assert_ne!(net, 0);
        let map = &mut self.adj[u as usize];
        let was_empty = map.is_empty();
        if net > 0 {
            let add = net as u64;
            *map.entry(v).or_insert(0) += add;
            self.out_weight[u as usize] += add;
            self.total_weight += add;
            if was_empty {
                self.dangling -= 1;
            }
        } else {
            let sub = (-net) as u64;
            let w = map.get_mut(&v).expect("deletion of missing edge was validated at ingest");
            debug_assert!(*w >= sub);
            *w -= sub;
            if *w == 0 {
                map.remove(&v);
            }
            self.out_weight[u as usize] -= sub;
            self.total_weight -= sub;
            if map.is_empty() {
                self.dangling += 1;
            }
        }
    }
}

/// Sparse column-indexed matrix holding the per-column differences of a
/// transition matrix across one window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumns {
    cols: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
}

impl SparseColumns {
    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn column_count(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, u: NodeId) -> Option<&[(NodeId, f64)]> {
        self.cols.get(&u).map(|c| c.as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (NodeId, &[(NodeId, f64)])> {
        self.cols.iter().map(|(&u, c)| (u, c.as_slice()))
    }

    pub fn insert_column(&mut self, u: NodeId, entries: Vec<(NodeId, f64)>) {
        if !entries.is_empty() {
            self.cols.insert(u, entries);
        }
    }

    /// Matrix L1 norm: maximum column L1 length; 0 for an empty delta.
    pub fn max_column_l1(&self) -> f64 {
        self.cols
            .values()
            .map(|c| c.iter().map(|(_, a)| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Accumulates `scale * M x` into `acc`.
    pub fn apply_to(&self, x: &[f64], scale: f64, acc: &mut [f64]) {
        for (&u, col) in &self.cols {
            let xu = x[u as usize];
            if xu == 0.0 {
                continue;
            }
            let f = scale * xu;
            for &(v, a) in col {
                acc[v as usize] += f * a;
            }
        }
    }

    /// Matrix L1 norm of `self - other`.
    pub fn difference_l1(&self, other: &SparseColumns) -> f64 {
        let mut best = 0.0f64;
        let keys: std::collections::BTreeSet<NodeId> =
            self.cols.keys().chain(other.cols.keys()).copied().collect();
        for u in keys {
            let mut merged: BTreeMap<NodeId, f64> = BTreeMap::new();
            if let Some(col) = self.cols.get(&u) {
                for &(v, a) in col {
                    *merged.entry(v).or_insert(0.0) += a;
                }
            }
            if let Some(col) = other.cols.get(&u) {
                for &(v, a) in col {
                    *merged.entry(v).or_insert(0.0) -= a;
                }
            }
            let l1: f64 = merged.values().map(|a| a.abs()).sum();
            best = best.max(l1);
        }
        best
    }
}

/// Change to the weight-proportional starting vector across one window.
///
/// The vector itself is dense in principle (the global renormalization moves
/// every entry), so it is stored as the old/new effective totals plus the
/// per-node effective weights that changed, and materialized lazily.
#[derive(Debug, Clone, PartialEq)]
pub struct StartVectorChange {
    pub old_total: u64,
    pub new_total: u64,
    /// node -> (old effective out-weight, new effective out-weight)
    pub changed: BTreeMap<NodeId, (u64, u64)>,
}

impl StartVectorChange {
    pub fn unchanged(total: u64) -> Self {
        StartVectorChange { old_total: total, new_total: total, changed: BTreeMap::new() }
    }

    /// True when every materialized entry is exactly zero: either nothing
    /// moved, or all effective weights scaled by the same ratio as the total.
    pub fn is_zero(&self, n: usize) -> bool {
        if self.old_total == self.new_total && self.changed.is_empty() {
            return true;
        }
        if self.changed.len() == n {
            return self.changed.values().all(|&(old, new)| {
                old as u128 * self.new_total as u128 == new as u128 * self.old_total as u128
            });
        }
        false
    }

    /// Materializes the dense difference vector; `post` must be the graph
    /// state after the window was applied.
    pub fn materialize(&self, post: &GraphState) -> Vec<f64> {
        let n = post.node_count();
        if self.is_zero(n) {
            return vec![0.0; n];
        }
        let mut out = vec![0.0; n];
        self.add_to(post, 1.0, &mut out);
        out
    }

    /// Accumulates `scale * (b_new - b_old)` into `acc`.
    pub fn add_to(&self, post: &GraphState, scale: f64, acc: &mut [f64]) {
        let n = post.node_count();
        if self.is_zero(n) {
            return;
        }
        let old_total = self.old_total as f64;
        let new_total = self.new_total as f64;
        for u in 0..n as NodeId {
            let new_eff = post.effective_out_weight(u);
            let old_eff = match self.changed.get(&u) {
                Some(&(old, new)) => {
                    debug_assert_eq!(new, new_eff);
                    old
                }
                None => new_eff,
            };
            acc[u as usize] +=
                scale * (new_eff as f64 / new_total - old_eff as f64 / old_total);
        }
    }

    /// Closed-form L1 summary: the renormalization term plus the direct
    /// per-node weight moves, each taken in absolute value. An upper bound
    /// on the entrywise L1 of the materialized vector.
    pub fn closed_form_l1(&self) -> f64 {
        let new_total = self.new_total as f64;
        let renorm = (self.new_total as i128 - self.old_total as i128).unsigned_abs() as f64
            / new_total;
        let moved: f64 = self
            .changed
            .values()
            .map(|&(old, new)| (new as i128 - old as i128).unsigned_abs() as f64)
            .sum();
        renorm + moved / new_total
    }
}

/// The change one window induced: sparse matrix deltas, the starting-vector
/// change, and L1 magnitude summaries.
#[derive(Debug, Clone)]
pub struct SnapshotDelta {
    pub window_index: u64,
    pub t_start: f64,
    /// Changes to the structural (unweighted) transition matrix.
    pub delta_structural: SparseColumns,
    /// Changes to the weighted transition matrix.
    pub delta_weighted: SparseColumns,
    /// Change to the weight-proportional starting vector.
    pub start_change: StartVectorChange,
    /// Matrix L1 of `delta_structural`.
    pub l1_structural: f64,
    /// Closed-form matrix L1 summary for the weighted delta.
    pub l1_weighted: f64,
    /// Closed-form L1 summary for the starting-vector change.
    pub l1_start: f64,
    /// Raw events the window carried.
    pub event_count: usize,
    /// Events flagged as ground-truth attacks.
    pub labeled_events: u64,
}

impl SnapshotDelta {
    pub fn is_empty(&self) -> bool {
        self.delta_structural.is_empty()
            && self.delta_weighted.is_empty()
            && self.l1_start == 0.0
    }
}

#[derive(Debug, Default)]
struct WindowBuffer {
    /// Net weight change per ordered pair.
    pending: BTreeMap<(NodeId, NodeId), i64>,
    event_count: usize,
    labeled_events: u64,
}

impl WindowBuffer {
    fn clear(&mut self) {
        self.pending.clear();
        self.event_count = 0;
        self.labeled_events = 0;
    }
}

/// Partitions a non-decreasing event stream into tumbling windows of width
/// `dt` and maintains the cumulative graph state.
///
/// Single-writer: one owner mutates the stream sequentially. Emitted
/// [`SnapshotDelta`]s are immutable and safe to hand elsewhere.
pub struct WindowedStream {
    state: GraphState,
    buffer: WindowBuffer,
    dt: f64,
    anchor: Option<f64>,
    current_window: u64,
    last_timestamp: Option<f64>,
}

impl WindowedStream {
    pub fn new(n: usize, dt: f64) -> Result<Self, StreamError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(StreamError::InvalidWindowWidth(dt));
        }
        Ok(WindowedStream {
            state: GraphState::new(n),
            buffer: WindowBuffer::default(),
            dt,
            anchor: None,
            current_window: 0,
            last_timestamp: None,
        })
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    /// Start time of the first window; set by the first event.
    pub fn anchor(&self) -> Option<f64> {
        self.anchor
    }

    pub fn window_width(&self) -> f64 {
        self.dt
    }

    /// Buffers one event, first closing every window that ends at or before
    /// the event's timestamp. Returns the deltas of the closed windows
    /// (empty gap windows included).
    pub fn ingest(&mut self, event: EdgeEvent) -> Result<Vec<SnapshotDelta>, StreamError> {
        let n = self.state.n;
        if (event.src as usize) >= n {
            return Err(StreamError::UnknownNode { node: event.src, n });
        }
        if (event.dst as usize) >= n {
            return Err(StreamError::UnknownNode { node: event.dst, n });
        }
        if let Some(prev) = self.last_timestamp.filter(|&prev| event.timestamp < prev) {
            return Err(StreamError::OutOfOrderTimestamp { prev, got: event.timestamp });
        }
        // Deletions are validated against the graph as the event will see it:
        // the persisted weight plus this window's pending net. Closing the
        // current window applies exactly that pending net, and any gap
        // windows are empty, so the same formula holds when the event opens
        // a new window. Validating before closing keeps errors side-effect
        // free with respect to emitted deltas.
        let key = (event.src, event.dst);
        let pending = self.buffer.pending.get(&key).copied().unwrap_or(0);
        if event.sign == Sign::Delete {
            let available = self.state.weight(event.src, event.dst) as i64 + pending;
            if available < 1 {
                return Err(StreamError::DeleteNonexistentEdge {
                    src: event.src,
                    dst: event.dst,
                });
            }
        }

        self.last_timestamp = Some(event.timestamp);
        let anchor = *self
            .anchor
            .get_or_insert_with(|| (event.timestamp / self.dt).floor() * self.dt);
        let window = ((event.timestamp - anchor) / self.dt).floor() as u64;

        let mut closed = Vec::new();
        while self.current_window < window {
            closed.push(self.close_current());
        }

        let net = match event.sign {
            Sign::Insert => 1,
            Sign::Delete => -1,
        };
        *self.buffer.pending.entry(key).or_insert(0) += net;
        self.buffer.event_count += 1;
        if event.label {
            self.buffer.labeled_events += 1;
        }
        Ok(closed)
    }

    /// Closes the final buffered window, if any event was ever ingested.
    pub fn flush(&mut self) -> Option<SnapshotDelta> {
        self.anchor?;
        Some(self.close_current())
    }

    fn close_current(&mut self) -> SnapshotDelta {
        let anchor = self.anchor.expect("close requires an anchored stream");
        let window_index = self.current_window;
        let t_start = anchor + window_index as f64 * self.dt;

        let old_total_eff = self.state.effective_total_weight();

        // Group net changes per source node, keeping only non-zero nets.
        let mut by_node: BTreeMap<NodeId, Vec<(NodeId, i64)>> = BTreeMap::new();
        for (&(u, v), &net) in &self.buffer.pending {
            if net != 0 {
                by_node.entry(u).or_default().push((v, net));
            }
        }

        let mut delta_structural = SparseColumns::default();
        let mut delta_weighted = SparseColumns::default();
        let mut changed_start: BTreeMap<NodeId, (u64, u64)> = BTreeMap::new();
        let mut l1_weighted = 0.0f64;

        for (&u, changes) in &by_node {
            // Sorted snapshot of the pre-change weights; the implicit
            // self-loop of a dangling node participates with weight 1.
            let old_entries: Vec<(NodeId, u64)> = if self.state.adj[u as usize].is_empty() {
                vec![(u, 1)]
            } else {
                self.state.neighbors(u).collect()
            };
            let old_k = self.state.out_degree(u);
            let old_eff = self.state.effective_out_weight(u);

            for &(v, net) in changes {
                self.state.apply_change(u, v, net);
            }

            let new_entries: Vec<(NodeId, u64)> = if self.state.adj[u as usize].is_empty() {
                vec![(u, 1)]
            } else {
                self.state.neighbors(u).collect()
            };
            let new_k = self.state.out_degree(u);
            let new_eff = self.state.effective_out_weight(u);

            let same_keys = old_k == new_k
                && old_entries.iter().map(|e| e.0).eq(new_entries.iter().map(|e| e.0));
            if !same_keys {
                let old_share = 1.0 / old_entries.len() as f64;
                let new_share = 1.0 / new_entries.len() as f64;
                let col = merge_column_difference(
                    &old_entries,
                    &new_entries,
                    |_| old_share,
                    |_| new_share,
                );
                delta_structural.insert_column(u, col);
            }
            if old_entries != new_entries {
                let old_total = old_eff as f64;
                let new_total = new_eff as f64;
                let col = merge_column_difference(
                    &old_entries,
                    &new_entries,
                    |w| w as f64 / old_total,
                    |w| w as f64 / new_total,
                );
                delta_weighted.insert_column(u, col);
                l1_weighted = l1_weighted.max(closed_form_column_l1(
                    &old_entries,
                    &new_entries,
                    old_eff,
                    new_eff,
                ));
            }
            if old_eff != new_eff {
                changed_start.insert(u, (old_eff, new_eff));
            }
        }

        let start_change = StartVectorChange {
            old_total: old_total_eff,
            new_total: self.state.effective_total_weight(),
            changed: changed_start,
        };
        let l1_structural = delta_structural.max_column_l1();
        let l1_start = start_change.closed_form_l1();

        let delta = SnapshotDelta {
            window_index,
            t_start,
            delta_structural,
            delta_weighted,
            start_change,
            l1_structural,
            l1_weighted,
            l1_start,
            event_count: self.buffer.event_count,
            labeled_events: self.buffer.labeled_events,
        };
        self.buffer.clear();
        self.current_window += 1;
        delta
    }
}

/// Sparse difference of two stochastic columns given as sorted integer
/// weight entries and their normalizers, with exact zeros dropped.
fn merge_column_difference(
    old: &[(NodeId, u64)],
    new: &[(NodeId, u64)],
    old_norm: impl Fn(u64) -> f64,
    new_norm: impl Fn(u64) -> f64,
) -> Vec<(NodeId, f64)> {
    let mut out = Vec::with_capacity(old.len().max(new.len()));
    let mut i = 0;
    let mut j = 0;
    while i < old.len() || j < new.len() {
        let value = match (old.get(i), new.get(j)) {
            (Some(&(vo, wo)), Some(&(vn, wn))) if vo == vn => {
                i += 1;
                j += 1;
                (vo, new_norm(wn) - old_norm(wo))
            }
            (Some(&(vo, wo)), Some(&(vn, _))) if vo < vn => {
                i += 1;
                (vo, -old_norm(wo))
            }
            (Some(&(vo, wo)), None) => {
                i += 1;
                (vo, -old_norm(wo))
            }
            (_, Some(&(vn, wn))) => {
                j += 1;
                (vn, new_norm(wn))
            }
            (None, None) => unreachable!(),
        };
        if value.1 != 0.0 {
            out.push(value);
        }
    }
    out
}

/// Closed-form column L1 for a weighted column change: the renormalization
/// of the old weights plus the direct weight moves, in absolute value.
/// Entries are sorted pre/post weight snapshots (implicit self-loops of
/// dangling nodes included with weight 1).
fn closed_form_column_l1(
    old_entries: &[(NodeId, u64)],
    new_entries: &[(NodeId, u64)],
    old_eff: u64,
    new_eff: u64,
) -> f64 {
    let mut direct = 0.0f64;
    let mut i = 0;
    let mut j = 0;
    while i < old_entries.len() || j < new_entries.len() {
        let moved: i128 = match (old_entries.get(i), new_entries.get(j)) {
            (Some(&(vo, wo)), Some(&(vn, wn))) if vo == vn => {
                i += 1;
                j += 1;
                wn as i128 - wo as i128
            }
            (Some(&(vo, wo)), Some(&(vn, _))) if vo < vn => {
                i += 1;
                -(wo as i128)
            }
            (Some(&(_, wo)), None) => {
                i += 1;
                -(wo as i128)
            }
            (_, Some(&(_, wn))) => {
                j += 1;
                wn as i128
            }
            (None, None) => unreachable!(),
        };
        direct += moved.unsigned_abs() as f64;
    }
    let new_total = new_eff as f64;
    let renorm = (new_eff as i128 - old_eff as i128).unsigned_abs() as f64 / new_total;
    renorm + direct / new_total
}


#[cfg(test)]
mod self_loop_tests {
    use super::*;

    #[test]
    fn self_loops_are_ordinary_edges() {
        let mut ws = WindowedStream::new(3, 1.0).unwrap();
        ws.ingest(EdgeEvent::insert(0, 0, 0.0)).unwrap();
        ws.ingest(EdgeEvent::insert(0, 1, 0.0)).unwrap();
        ws.ingest(EdgeEvent::insert(1, 0, 0.0)).unwrap();
        let delta = ws.flush().unwrap();
        assert_eq!(ws.state().weight(0, 0), 1);
        assert_eq!(ws.state().out_degree(0), 2);
        let col: f64 = ws.state().weighted_column(0).iter().map(|&(_, a)| a).sum();
        assert!((col - 1.0).abs() < 1e-12);
        assert!(!delta.delta_structural.is_empty());
        // Deleting the self-loop is a structure change back to one neighbor.
        ws.ingest(EdgeEvent::delete(0, 0, 1.0)).unwrap();
        ws.flush().unwrap();
        assert_eq!(ws.state().out_degree(0), 1);
    }
}

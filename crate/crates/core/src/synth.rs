//! Seeded synthetic temporal-graph generation, anomaly injection scenarios,
//! and ground-truth window labeling.
//!
//! The generator grows a directed multigraph by preferential attachment:
//! endpoints are drawn from a mix of the uniform distribution and the
//! degree-proportional endpoint pool, so hubs emerge and new edges drift
//! toward them over time. Everything is deterministic given the seed.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::stream::{EdgeEvent, NodeId};

/// Probability of drawing an endpoint uniformly instead of from the
/// degree-proportional pool.
const UNIFORM_MIX: f64 = 0.3;

/// Probability of re-emitting an existing edge pair instead of sampling new
/// endpoints. Streams of repeated interactions dominate real traffic, and
/// the repeats are what give the weighted channel its texture.
const REPEAT_MIX: f64 = 0.6;

/// One benign weight burst (an existing pair re-occurring many times in one
/// window) per this many base events.
const BURST_EVERY: u64 = 800;

/// One benign novelty clique (a handful of nodes exchanging fresh edges in
/// one window) per this many base events.
const FAN_EVERY: u64 = 1300;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("clique of {clique} nodes does not fit a graph of {nodes} nodes")]
    CliqueLargerThanGraph { clique: usize, nodes: u32 },
    #[error("{0} injection timestamps requested but only {1} eligible windows exist")]
    TooManyInjectionWindows(usize, u64),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    pub n_nodes: u32,
    pub n_base_edges: u64,
    pub n_timestamps: u64,
    pub seed: u64,
    /// Exponent applied to `degree + 1` when sampling endpoints; 1.0 uses the
    /// fast endpoint-pool path.
    pub skew: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { n_nodes: 1000, n_base_edges: 8100, n_timestamps: 2700, seed: 7, skew: 1.0 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_nodes == 0 {
            return Err(SynthError::InvalidConfig("n_nodes must be positive".into()));
        }
        if self.n_timestamps == 0 {
            return Err(SynthError::InvalidConfig("n_timestamps must be positive".into()));
        }
        if !(self.skew > 0.0) || !self.skew.is_finite() {
            return Err(SynthError::InvalidConfig(format!(
                "skew must be positive and finite, got {}",
                self.skew
            )));
        }
        Ok(())
    }
}

/// Preferential sampler over endpoint participation: nodes that appear in
/// many edges (either side) keep attracting new ones.
struct EndpointSampler {
    n: u32,
    skew: f64,
    pool: Vec<NodeId>,
    /// Role-specific degree, used only by the skewed path.
    degree: Vec<u64>,
}

impl EndpointSampler {
    fn new(n: u32, skew: f64) -> Self {
        EndpointSampler { n, skew, pool: Vec::new(), degree: vec![0; n as usize] }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> NodeId {
        if self.skew == 1.0 {
            if self.pool.is_empty() || rng.random::<f64>() < UNIFORM_MIX {
                rng.random_range(0..self.n)
            } else {
                self.pool[rng.random_range(0..self.pool.len())]
            }
        } else {
            if rng.random::<f64>() < UNIFORM_MIX {
                return rng.random_range(0..self.n);
            }
            let total: f64 =
                self.degree.iter().map(|&d| ((d + 1) as f64).powf(self.skew)).sum();
            let mut target = rng.random::<f64>() * total;
            for (i, &d) in self.degree.iter().enumerate() {
                target -= ((d + 1) as f64).powf(self.skew);
                if target <= 0.0 {
                    return i as NodeId;
                }
            }
            self.n - 1
        }
    }

    fn record(&mut self, node: NodeId) {
        self.pool.push(node);
        self.degree[node as usize] += 1;
    }
}

/// What the generator emits at one scheduled slot.
enum Slot {
    /// Activation sweep edge from a fixed source.
    Sweep(NodeId),
    /// One preferential/repeat-sampled edge.
    Sample,
    /// Benign re-occurrence burst of this many copies of an existing pair.
    Burst(u64),
    /// Benign novelty fan: this many fresh out-edges from one node.
    Fan(u64),
}

/// Deterministic timestamp-sorted stream of insertion events with a skewed
/// degree distribution and no injected anomalies.
///
/// The texture has four ingredients: an activation sweep over the leading
/// tenth of the stream (no node sits dormant with a degenerate score
/// history), preferential/repeat sampling (hubs emerge, established pairs
/// re-occur, novelty drifts toward hubs), plus occasional benign weight
/// bursts and novelty fans, the background tail any real stream carries.
pub fn generate_stream(cfg: &GeneratorConfig) -> Result<Vec<EdgeEvent>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = cfg.n_base_edges;
    let span = cfg.n_timestamps;

    // Split the event budget: sweep, background specials, sampled rest.
    let sweep = (cfg.n_nodes as u64).min(budget);
    let mut remaining = budget - sweep;
    let sweep_span = (span / 10).max(1);
    let mut burst_sizes: Vec<u64> =
        (0..budget / BURST_EVERY).map(|_| rng.random_range(50..=90u64)).collect();
    // Fan entries hold the member count; a fan emits f*(f-1) edges.
    let mut fan_sizes: Vec<u64> = (0..budget / FAN_EVERY)
        .map(|_| rng.random_range(6..=8u64).min(cfg.n_nodes as u64))
        .collect();
    loop {
        let special: u64 = burst_sizes.iter().sum::<u64>()
            + fan_sizes.iter().map(|f| f * (f - 1)).sum::<u64>();
        if special <= remaining {
            remaining -= special;
            break;
        }
        if burst_sizes.pop().is_none() && fan_sizes.pop().is_none() {
            break;
        }
    }
    let sampled = remaining;

    // Schedule slots chronologically; ties keep this construction order.
    let mut schedule: Vec<(u64, Slot)> = Vec::new();
    for u in 0..sweep as u32 {
        let t = (u as u128 * sweep_span as u128 / sweep.max(1) as u128) as u64;
        schedule.push((t, Slot::Sweep(u)));
    }
    for j in 0..sampled {
        let t = (j as u128 * span as u128 / sampled.max(1) as u128) as u64;
        schedule.push((t, Slot::Sample));
    }
    for size in burst_sizes {
        schedule.push((rng.random_range(sweep_span..span), Slot::Burst(size)));
    }
    for size in fan_sizes {
        schedule.push((rng.random_range(sweep_span..span), Slot::Fan(size)));
    }
    schedule.sort_by_key(|&(t, _)| t);

    let mut sampler = EndpointSampler::new(cfg.n_nodes, cfg.skew);
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen: std::collections::BTreeSet<(NodeId, NodeId)> = std::collections::BTreeSet::new();
    let mut events = Vec::with_capacity(budget as usize);
    let emit = |events: &mut Vec<EdgeEvent>,
                    sampler: &mut EndpointSampler,
                    pairs: &mut Vec<(NodeId, NodeId)>,
                    seen: &mut std::collections::BTreeSet<(NodeId, NodeId)>,
                    src: NodeId,
                    dst: NodeId,
                    t: u64| {
        sampler.record(src);
        sampler.record(dst);
        pairs.push((src, dst));
        seen.insert((src, dst));
        events.push(EdgeEvent::insert(src, dst, t as f64));
    };

    for (t, slot) in schedule {
        match slot {
            Slot::Sweep(u) => {
                let mut dst = sampler.sample(&mut rng);
                if dst == u {
                    dst = (u + 1) % cfg.n_nodes;
                }
                emit(&mut events, &mut sampler, &mut pairs, &mut seen, u, dst, t);
            }
            Slot::Sample => {
                let (src, dst) = if !pairs.is_empty() && rng.random::<f64>() < REPEAT_MIX {
                    // Re-occurrence of an existing edge, frequency-proportional.
                    pairs[rng.random_range(0..pairs.len())]
                } else {
                    let src = sampler.sample(&mut rng);
                    let mut dst = sampler.sample(&mut rng);
                    let mut guard = 0;
                    while dst == src && guard < 16 {
                        dst = sampler.sample(&mut rng);
                        guard += 1;
                    }
                    if dst == src {
                        dst = (src + 1) % cfg.n_nodes;
                    }
                    (src, dst)
                };
                emit(&mut events, &mut sampler, &mut pairs, &mut seen, src, dst, t);
            }
            Slot::Burst(size) => {
                let (src, dst) = if pairs.is_empty() {
                    (0, 1 % cfg.n_nodes)
                } else {
                    pairs[rng.random_range(0..pairs.len())]
                };
                for _ in 0..size {
                    emit(&mut events, &mut sampler, &mut pairs, &mut seen, src, dst, t);
                }
            }
            Slot::Fan(members) => {
                // A handful of nodes exchanging edges all-to-all in one
                // window, the benign cousin of a coordinated event.
                let mut chosen: Vec<NodeId> = Vec::with_capacity(members as usize);
                while (chosen.len() as u64) < members.min(cfg.n_nodes as u64) {
                    let v = rng.random_range(0..cfg.n_nodes);
                    if !chosen.contains(&v) {
                        chosen.push(v);
                    }
                }
                for &a in &chosen {
                    for &b in &chosen {
                        if a != b {
                            emit(&mut events, &mut sampler, &mut pairs, &mut seen, a, b, t);
                        }
                    }
                }
            }
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionKind {
    /// Bidirectional clique among randomly chosen nodes (structure anomaly).
    Structure,
    /// Burst of parallel edges between one random pair (weight anomaly).
    Weight,
}

#[derive(Debug, Clone, Copy)]
pub struct InjectionPlan {
    pub kind: InjectionKind,
    /// Number of injected timestamps.
    pub n_events: usize,
    /// Clique size for structure injections.
    pub clique_size: usize,
    /// Parallel-edge count for weight injections.
    pub burst_weight: u64,
    pub seed: u64,
    /// Timestamps are drawn uniformly without replacement from windows at or
    /// after this index.
    pub warmup_windows: u64,
}

impl InjectionPlan {
    pub fn structure(seed: u64) -> Self {
        InjectionPlan {
            kind: InjectionKind::Structure,
            n_events: 50,
            clique_size: 8,
            burst_weight: 70,
            seed,
            warmup_windows: 300,
        }
    }

    pub fn weight(seed: u64) -> Self {
        InjectionPlan { kind: InjectionKind::Weight, ..InjectionPlan::structure(seed) }
    }
}

/// One injected anomaly: the window it lands in and the nodes involved.
#[derive(Debug, Clone)]
pub struct InjectionRecord {
    pub window: u64,
    pub nodes: Vec<NodeId>,
}

/// An injected stream with per-window ground-truth labels.
#[derive(Debug, Clone)]
pub struct Injected {
    pub events: Vec<EdgeEvent>,
    /// One label per window `0..n_timestamps`.
    pub labels: Vec<bool>,
    pub records: Vec<InjectionRecord>,
}

/// Draws `k` distinct values from `range` by partial Fisher-Yates shuffle.
fn sample_distinct(rng: &mut ChaCha8Rng, range: std::ops::Range<u64>, k: usize) -> Vec<u64> {
    let mut values: Vec<u64> = range.collect();
    assert!(k <= values.len());
    for i in 0..k {
        let j = rng.random_range(i..values.len());
        values.swap(i, j);
    }
    values.truncate(k);
    values
}

/// Merges labeled attack events into the base stream at the planned
/// timestamps and labels the receiving windows anomalous.
pub fn inject(
    base: &[EdgeEvent],
    plan: &InjectionPlan,
    n_nodes: u32,
    n_timestamps: u64,
) -> Result<Injected, SynthError> {
    if plan.kind == InjectionKind::Structure && plan.clique_size as u64 > n_nodes as u64 {
        return Err(SynthError::CliqueLargerThanGraph {
            clique: plan.clique_size,
            nodes: n_nodes,
        });
    }
    let eligible = n_timestamps.saturating_sub(plan.warmup_windows);
    if plan.n_events as u64 > eligible {
        return Err(SynthError::TooManyInjectionWindows(plan.n_events, eligible));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut windows = sample_distinct(&mut rng, plan.warmup_windows..n_timestamps, plan.n_events);
    windows.sort_unstable();

    let mut labels = vec![false; n_timestamps as usize];
    let mut records = Vec::with_capacity(windows.len());
    let mut attacks: Vec<EdgeEvent> = Vec::new();
    for &t in &windows {
        labels[t as usize] = true;
        match plan.kind {
            InjectionKind::Structure => {
                let members: Vec<NodeId> =
                    sample_distinct(&mut rng, 0..n_nodes as u64, plan.clique_size)
                        .into_iter()
                        .map(|v| v as NodeId)
                        .collect();
                for &u in &members {
                    for &v in &members {
                        if u != v {
                            attacks.push(EdgeEvent::insert(u, v, t as f64).labeled(true));
                        }
                    }
                }
                records.push(InjectionRecord { window: t, nodes: members });
            }
            InjectionKind::Weight => {
                let pair = sample_distinct(&mut rng, 0..n_nodes as u64, 2);
                let (u, v) = (pair[0] as NodeId, pair[1] as NodeId);
                for _ in 0..plan.burst_weight {
                    attacks.push(EdgeEvent::insert(u, v, t as f64).labeled(true));
                }
                records.push(InjectionRecord { window: t, nodes: vec![u, v] });
            }
        }
    }

    // Stable merge by timestamp, base events first on ties.
    let mut events = Vec::with_capacity(base.len() + attacks.len());
    let mut ai = attacks.into_iter().peekable();
    for ev in base {
        while let Some(attack) = ai.peek() {
            if attack.timestamp < ev.timestamp {
                events.push(ai.next().unwrap());
            } else {
                break;
            }
        }
        events.push(*ev);
    }
    events.extend(ai);

    Ok(Injected { events, labels, records })
}

/// Labels each window anomalous when it carries at least `min_attack_edges`
/// ground-truth attack events. Windows are anchored the same way the
/// scoring stream anchors them: at the first event's window.
pub fn label_windows(events: &[EdgeEvent], dt: f64, min_attack_edges: u64) -> BTreeMap<u64, bool> {
    let mut out = BTreeMap::new();
    let Some(first) = events.first() else {
        return out;
    };
    let anchor = (first.timestamp / dt).floor() * dt;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last = 0u64;
    for ev in events {
        let w = ((ev.timestamp - anchor) / dt).floor() as u64;
        last = last.max(w);
        if ev.label {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    for w in 0..=last {
        out.insert(w, counts.get(&w).copied().unwrap_or(0) >= min_attack_edges);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig { n_nodes: 50, n_base_edges: 400, n_timestamps: 100, ..Default::default() };
        let a = generate_stream(&cfg).unwrap();
        let b = generate_stream(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_stream(&GeneratorConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_edge_budget_gives_an_empty_stream() {
        let cfg = GeneratorConfig { n_base_edges: 0, ..Default::default() };
        assert!(generate_stream(&cfg).unwrap().is_empty());
    }

    #[test]
    fn default_stream_has_the_configured_shape() {
        let cfg = GeneratorConfig::default();
        let events = generate_stream(&cfg).unwrap();
        assert_eq!(events.len() as u64, cfg.n_base_edges);
        let max_t = events.iter().map(|e| e.timestamp).fold(0.0, f64::max);
        assert!(max_t < cfg.n_timestamps as f64);
        assert!(events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        assert!(events.iter().all(|e| e.src != e.dst));
        assert!(events.iter().all(|e| !e.label));
    }

    #[test]
    fn degree_distribution_is_skewed() {
        let cfg = GeneratorConfig::default();
        let events = generate_stream(&cfg).unwrap();
        let mut degree = vec![0u64; cfg.n_nodes as usize];
        for e in &events {
            degree[e.src as usize] += 1;
            degree[e.dst as usize] += 1;
        }
        degree.sort_unstable_by(|a, b| b.cmp(a));
        let top = degree[..10].iter().sum::<u64>() as f64;
        let total = degree.iter().sum::<u64>() as f64;
        // Hubs: the ten busiest nodes carry far more than 10/1000 of the mass.
        assert!(top / total > 0.05, "top share {}", top / total);
    }

    #[test]
    fn clique_injection_adds_the_full_bidirectional_clique() {
        let base = vec![EdgeEvent::insert(0, 1, 0.0)];
        let plan = InjectionPlan {
            n_events: 3,
            warmup_windows: 10,
            ..InjectionPlan::structure(5)
        };
        let injected = inject(&base, &plan, 100, 50).unwrap();
        let attacks = injected.events.iter().filter(|e| e.label).count();
        assert_eq!(attacks, 3 * 8 * 7);
        assert_eq!(injected.labels.iter().filter(|&&l| l).count(), 3);
        for record in &injected.records {
            assert_eq!(record.nodes.len(), 8);
        }

        let tiny = InjectionPlan { clique_size: 2, ..plan };
        let injected = inject(&base, &tiny, 100, 50).unwrap();
        assert_eq!(injected.events.iter().filter(|e| e.label).count(), 3 * 2);
    }

    #[test]
    fn default_structure_plan_labels_fifty_windows() {
        let cfg = GeneratorConfig::default();
        let base = generate_stream(&cfg).unwrap();
        let plan = InjectionPlan::structure(5);
        let injected = inject(&base, &plan, cfg.n_nodes, cfg.n_timestamps).unwrap();
        assert_eq!(injected.labels.iter().filter(|&&l| l).count(), 50);
        // Injections stay clear of the warm-up prefix.
        assert!(injected.labels[..300].iter().all(|&l| !l));
    }

    #[test]
    fn clique_must_fit_the_graph() {
        let err = inject(&[], &InjectionPlan::structure(1), 4, 500).unwrap_err();
        assert_eq!(err, SynthError::CliqueLargerThanGraph { clique: 8, nodes: 4 });
    }

    #[test]
    fn weight_injection_bursts_one_ordered_pair() {
        let base = vec![EdgeEvent::insert(0, 1, 0.0)];
        let plan = InjectionPlan { n_events: 4, warmup_windows: 5, ..InjectionPlan::weight(9) };
        let injected = inject(&base, &plan, 100, 60).unwrap();
        assert_eq!(injected.events.iter().filter(|e| e.label).count(), 4 * 70);
        for record in &injected.records {
            assert_eq!(record.nodes.len(), 2);
            assert_ne!(record.nodes[0], record.nodes[1]);
            let burst: Vec<&EdgeEvent> = injected
                .events
                .iter()
                .filter(|e| e.label && e.timestamp == record.window as f64)
                .collect();
            assert_eq!(burst.len(), 70);
            assert!(burst.iter().all(|e| e.src == record.nodes[0] && e.dst == record.nodes[1]));
        }

        let degenerate = InjectionPlan { burst_weight: 0, ..plan };
        let injected = inject(&base, &degenerate, 100, 60).unwrap();
        assert_eq!(injected.events.len(), base.len());
        assert_eq!(injected.labels.iter().filter(|&&l| l).count(), 4);
    }

    #[test]
    fn injection_preserves_the_base_stream() {
        let cfg = GeneratorConfig {
            n_nodes: 60,
            n_base_edges: 500,
            n_timestamps: 200,
            ..Default::default()
        };
        let base = generate_stream(&cfg).unwrap();
        let plan = InjectionPlan { n_events: 10, warmup_windows: 20, ..InjectionPlan::weight(3) };
        let injected = inject(&base, &plan, cfg.n_nodes, cfg.n_timestamps).unwrap();
        let kept: Vec<EdgeEvent> =
            injected.events.iter().copied().filter(|e| !e.label).collect();
        assert_eq!(kept, base);
        assert!(injected.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }

    #[test]
    fn window_labeling_uses_the_attack_edge_threshold() {
        let mut events = Vec::new();
        for i in 0..50 {
            events.push(EdgeEvent::insert(0, 1, 0.0).labeled(i < 50));
        }
        for i in 0..49 {
            events.push(EdgeEvent::insert(0, 1, 1.0).labeled(i < 49));
        }
        events.push(EdgeEvent::insert(0, 1, 2.0));
        let labels = label_windows(&events, 1.0, 50);
        assert_eq!(labels.get(&0), Some(&true));
        assert_eq!(labels.get(&1), Some(&false));
        assert_eq!(labels.get(&2), Some(&false));
    }
}

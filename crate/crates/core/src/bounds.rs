//! Closed-form bounds on change magnitudes and score-derivative norms.
//!
//! These calculators mirror the inequalities the score engine is expected to
//! respect: delta norms induced by single-node changes, and the L1 lengths of
//! the first and second discrete derivatives under given update magnitudes.
//! Property suites compare observed raw derivatives against them.

/// Parameters of a single localized change used by the composite bounds.
#[derive(Debug, Clone, Copy)]
pub struct ChangeProfile {
    /// Size of the change in edges (`dm`).
    pub dm: f64,
    /// Second difference of the change size across windows (`d2m`).
    pub d2m: f64,
    /// Distinct out-degree of the changed node.
    pub k: f64,
    /// Out-weight of the changed node.
    pub m_u: f64,
    /// Global total edge weight.
    pub m: f64,
    /// Window width.
    pub dt: f64,
    /// Damping factor.
    pub c: f64,
}

fn gain(c: f64) -> f64 {
    c / (1.0 - c)
}

/// L1 of the structural delta induced by rerouting `dm` of a node's `k`
/// out-edges: exactly `2 dm / k`.
pub fn structural_delta_l1(dm: f64, k: f64) -> f64 {
    2.0 * dm / k
}

/// Bounds and exact values for the weighted delta induced by adding `dm`
/// weight at a node with out-weight `m_u` in a graph of total weight `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDeltaBounds {
    /// Upper bound on the weighted-matrix delta: `2 dm / m_u`.
    pub matrix_bound: f64,
    /// Upper bound on the starting-vector delta: `2 dm / m`.
    pub start_bound: f64,
    /// Closed-form value of the matrix delta: `2 dm / (m_u + dm)`.
    pub matrix_exact: f64,
    /// Closed-form value of the starting-vector delta: `2 dm / (m + dm)`.
    pub start_exact: f64,
}

pub fn weight_delta_l1(dm: f64, m_u: f64, m: f64) -> WeightDeltaBounds {
    if dm == 0.0 {
        return WeightDeltaBounds {
            matrix_bound: 0.0,
            start_bound: 0.0,
            matrix_exact: 0.0,
            start_exact: 0.0,
        };
    }
    WeightDeltaBounds {
        matrix_bound: 2.0 * dm / m_u,
        start_bound: 2.0 * dm / m,
        matrix_exact: 2.0 * dm / (m_u + dm),
        start_exact: 2.0 * dm / (m + dm),
    }
}

/// Bound on the first derivative of the structural score:
/// `(c/(1-c)) * l1_delta / dt`.
pub fn structural_d1_bound(c: f64, l1_delta: f64, dt: f64) -> f64 {
    gain(c) * l1_delta / dt
}

/// Bound on the second derivative of the structural score given the two
/// consecutive update magnitudes and the L1 of their matrix difference.
pub fn structural_d2_bound(c: f64, l1_old: f64, l1_new: f64, l1_diff: f64, dt: f64) -> f64 {
    let g = gain(c);
    (g * l1_diff + g * g * (l1_new * l1_new + l1_old * l1_old)) / (dt * dt)
}

/// Bound on the first derivative of the weighted score:
/// `((c/(1-c)) * l1_matrix + l1_start) / dt`.
pub fn weighted_d1_bound(c: f64, l1_matrix: f64, l1_start: f64, dt: f64) -> f64 {
    (gain(c) * l1_matrix + l1_start) / dt
}

/// Bound on the second derivative of the weighted score. `structural_part`
/// is the [`structural_d2_bound`] evaluated on the weighted matrix deltas.
pub fn weighted_d2_bound(
    structural_part: f64,
    l1_start_diff: f64,
    l1_matrix_new: f64,
    l1_start_new: f64,
    c: f64,
    dt: f64,
) -> f64 {
    structural_part + (l1_start_diff + gain(c) * l1_matrix_new * l1_start_new) / (dt * dt)
}

/// Derivative bounds for a sudden structure change described by `profile`.
/// Returns `(d1_bound, d2_bound)`.
pub fn structural_change_bounds(profile: &ChangeProfile) -> (f64, f64) {
    let g = gain(profile.c);
    let per_edge = 2.0 / profile.k;
    let rate = profile.dm / profile.dt;
    let rate2 = profile.d2m / (profile.dt * profile.dt);
    let b1 = structural_d1_bound(profile.c, structural_delta_l1(profile.dm, profile.k), profile.dt);
    let b2 = g * per_edge * rate2 + 2.0 * g * g * per_edge * per_edge * rate * rate;
    (b1, b2)
}

/// Derivative bounds for a sudden edge-weight change described by `profile`.
/// Returns `(d1_bound, d2_bound)`.
pub fn weight_change_bounds(profile: &ChangeProfile) -> (f64, f64) {
    let g = gain(profile.c);
    let rate = profile.dm / profile.dt;
    let rate2 = profile.d2m / (profile.dt * profile.dt);
    let deltas = weight_delta_l1(profile.dm, profile.m_u, profile.m);
    let b1 = weighted_d1_bound(profile.c, deltas.matrix_bound, deltas.start_bound, profile.dt);
    let b2 = g * (2.0 / profile.k) * rate2
        + (2.0 / profile.m) * rate2
        + 2.0 * g * g * (2.0 / profile.k) * (2.0 / profile.k) * rate * rate
        + g * (2.0 / profile.m_u) * (2.0 / profile.m) * rate * rate;
    (b1, b2)
}

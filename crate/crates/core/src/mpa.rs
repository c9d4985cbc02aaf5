//! Mixed preferential attachment urn engine.
//!
//! A bi-populated growth process: each step one new node arrives (minority
//! with probability `r`) and forms exactly one edge. The tentative neighbour
//! is degree-proportional; the connection succeeds with a probability from
//! the 2x2 mixing matrix encoding in-group preference, retrying until an
//! edge forms. Three variants differ in how the tentative neighbour is
//! drawn:
//!
//! * baseline - globally degree-proportional;
//! * demographic parity - group first (minority with probability `r`), then
//!   degree-proportional within the group;
//! * dynamic - globally degree-proportional followed by a rejection filter
//!   whose retention probabilities depend on the current minority degree
//!   share and steer it to the arrival rate.
//!
//! Alongside the process sit closed-form calculators for the limiting
//! minority degree share of the baseline and parity variants, the rejection
//! filter probabilities, and per-group power-law tail exponents.
//!
//! The degree-proportional draw uses an endpoint list: every edge pushes
//! both of its endpoints, so a uniform index into the list is a
//! degree-weighted node draw, O(1) per step.

use rand::Rng;
use thiserror::Error;

use crate::population::Group;
use crate::rng::{salt, stream, SimRng};

/// Retention filtering shuts off when the degree share is this close to the
/// target rate; at the target any continuous policy is admissible.
pub const ALPHA_GUARD: f64 = 1e-9;
/// Rejection loops are probabilistically finite; this caps them anyway.
const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum MpaError {
    #[error("minority arrival rate {0} outside (0, 0.5]")]
    InvalidRate(f64),
    #[error("mixing probability {name} = {value} outside {range}")]
    InvalidMixing {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("initial total degree {0} must be even and at least 2")]
    InvalidInitialDegree(u64),
    #[error("rejection sampling exceeded {MAX_REJECTIONS} iterations in one step")]
    RejectionLoopExceeded,
    #[error("denominator vanished at r={r}, p0={p0}, p1={p1}, alpha={alpha}")]
    SingularDenominator { r: f64, p0: f64, p1: f64, alpha: f64 },
    #[error("degree share is at the target rate; no retention filter applies")]
    AlphaAtTarget,
    #[error("no sign change for the limit equation at r={r}, p0={p0}, p1={p1}")]
    NoFixedPoint { r: f64, p0: f64, p1: f64 },
    #[error("state needs positive total degree")]
    EmptyState,
}

/// Process variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MpaVariant {
    #[default]
    Baseline,
    DemographicParity,
    Dynamic,
}

impl MpaVariant {
    pub fn tag(self) -> &'static str {
        match self {
            MpaVariant::Baseline => "baseline",
            MpaVariant::DemographicParity => "dp",
            MpaVariant::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpaConfig {
    pub minority_rate: f64,
    /// In-group connection probability for majority sources.
    pub p0: f64,
    /// In-group connection probability for minority sources.
    pub p1: f64,
    /// Total degree of the initial graph (even, >= 2).
    pub d0: u64,
    pub variant: MpaVariant,
    pub t_max: u64,
    pub seed: u64,
    /// Record the degree share every this many steps (the final step is
    /// always recorded).
    pub record_stride: u64,
}

impl Default for MpaConfig {
    fn default() -> Self {
        Self {
            minority_rate: 0.35,
            p0: 0.7,
            p1: 0.7,
            d0: 100,
            variant: MpaVariant::Baseline,
            t_max: 200_000,
            seed: 1,
            record_stride: 1000,
        }
    }
}

impl MpaConfig {
    pub fn validate(&self) -> Result<(), MpaError> {
        if !(self.minority_rate > 0.0 && self.minority_rate <= 0.5) {
            return Err(MpaError::InvalidRate(self.minority_rate));
        }
        let open = |name: &'static str, value: f64| {
            if !(value > 0.0 && value < 1.0) {
                Err(MpaError::InvalidMixing {
                    name,
                    value,
                    range: "(0, 1)",
                })
            } else {
                Ok(())
            }
        };
        match self.variant {
            // The dynamic filter needs mixing probabilities bounded away
            // from 0 and 1; the other variants tolerate the closed ends.
            MpaVariant::Dynamic => {
                open("p0", self.p0)?;
                open("p1", self.p1)?;
            }
            _ => {
                for (name, value) in [("p0", self.p0), ("p1", self.p1)] {
                    if !(0.0..=1.0).contains(&value) || value.is_nan() {
                        return Err(MpaError::InvalidMixing {
                            name,
                            value,
                            range: "[0, 1]",
                        });
                    }
                }
            }
        }
        if self.d0 < 2 || !self.d0.is_multiple_of(2) {
            return Err(MpaError::InvalidInitialDegree(self.d0));
        }
        Ok(())
    }
}

/// Urn state: group labels, per-node degrees and the endpoint lists backing
/// degree-proportional draws.
#[derive(Debug, Clone)]
pub struct MpaState {
    groups: Vec<Group>,
    degrees: Vec<u32>,
    endpoints: Vec<u32>,
    group_endpoints: [Vec<u32>; 2],
    /// Group draws (parity variant) that landed on a group with no degree
    /// mass and were resampled.
    pub empty_group_draws: u64,
    /// Steps where the dynamic filter was skipped because the share sat at
    /// the target rate.
    pub guard_steps: u64,
}

impl MpaState {
    /// Deterministic initial graph: a cycle over d0/2 nodes (d0 = 2 is a
    /// single edge between two nodes), labels interleaved at the minority
    /// rate with at least one node per group. The limits this engine
    /// verifies are initial-graph independent, so the construction only
    /// needs to be reproducible and degenerate-free.
    pub fn init(config: &MpaConfig) -> Result<Self, MpaError> {
        config.validate()?;
        let nodes = (config.d0 / 2).max(2) as usize;
        let per_node_degree = if config.d0 == 2 { 1 } else { 2 };
        let minority_target =
            (((nodes as f64) * config.minority_rate).round() as usize).clamp(1, nodes - 1);
        // Bresenham-style interleaving spreads minority labels evenly.
        let mut groups = Vec::with_capacity(nodes);
        let mut acc = 0usize;
        for _ in 0..nodes {
            acc += minority_target;
            if acc >= nodes {
                acc -= nodes;
                groups.push(Group::Minority);
            } else {
                groups.push(Group::Majority);
            }
        }
        let degrees = vec![per_node_degree as u32; nodes];
        Ok(Self::from_parts(groups, degrees))
    }

    /// Builds a state from explicit labels and degrees.
    pub fn from_parts(groups: Vec<Group>, degrees: Vec<u32>) -> Self {
        assert_eq!(groups.len(), degrees.len());
        let mut endpoints = Vec::new();
        let mut group_endpoints = [Vec::new(), Vec::new()];
        for (node, (&d, &g)) in degrees.iter().zip(groups.iter()).enumerate() {
            for _ in 0..d {
                endpoints.push(node as u32);
                group_endpoints[g.index()].push(node as u32);
            }
        }
        Self {
            groups,
            degrees,
            endpoints,
            group_endpoints,
            empty_group_draws: 0,
            guard_steps: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.groups.len()
    }

    pub fn total_degree(&self) -> u64 {
        self.endpoints.len() as u64
    }

    pub fn minority_degree(&self) -> u64 {
        self.group_endpoints[Group::Minority.index()].len() as u64
    }

    /// Minority share of all degrees.
    pub fn alpha(&self) -> f64 {
        self.minority_degree() as f64 / self.total_degree() as f64
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    fn mixing(p0: f64, p1: f64, source: Group, dest: Group) -> f64 {
        match (source, dest) {
            (Group::Majority, Group::Majority) => p0,
            (Group::Majority, Group::Minority) => 1.0 - p0,
            (Group::Minority, Group::Majority) => 1.0 - p1,
            (Group::Minority, Group::Minority) => p1,
        }
    }

    fn draw_source_group(rate: f64, rng: &mut SimRng) -> Group {
        if rng.gen::<f64>() < rate {
            Group::Minority
        } else {
            Group::Majority
        }
    }

    fn insert(&mut self, source_group: Group, neighbor: u32) {
        let node = self.groups.len() as u32;
        self.groups.push(source_group);
        self.degrees.push(1);
        self.degrees[neighbor as usize] += 1;
        self.endpoints.push(node);
        self.endpoints.push(neighbor);
        self.group_endpoints[source_group.index()].push(node);
        self.group_endpoints[self.groups[neighbor as usize].index()].push(neighbor);
    }

    /// One arrival with globally degree-proportional tentative neighbours.
    pub fn step_baseline(&mut self, config: &MpaConfig, rng: &mut SimRng) -> Result<(), MpaError> {
        if self.endpoints.is_empty() {
            return Err(MpaError::EmptyState);
        }
        let source = Self::draw_source_group(config.minority_rate, rng);
        for _ in 0..MAX_REJECTIONS {
            let v = self.endpoints[rng.gen_range(0..self.endpoints.len())];
            let accept = Self::mixing(config.p0, config.p1, source, self.groups[v as usize]);
            if rng.gen::<f64>() < accept {
                self.insert(source, v);
                return Ok(());
            }
        }
        Err(MpaError::RejectionLoopExceeded)
    }

    /// One arrival with group-first destination sampling: the destination
    /// group is minority with probability `r`, the member within it is
    /// degree-proportional. A draw of a group with no degree mass is
    /// recorded and resampled.
    pub fn step_dp(&mut self, config: &MpaConfig, rng: &mut SimRng) -> Result<(), MpaError> {
        if self.endpoints.is_empty() {
            return Err(MpaError::EmptyState);
        }
        let source = Self::draw_source_group(config.minority_rate, rng);
        for _ in 0..MAX_REJECTIONS {
            let dest_group = Self::draw_source_group(config.minority_rate, rng);
            let pool = &self.group_endpoints[dest_group.index()];
            if pool.is_empty() {
                self.empty_group_draws += 1;
                continue;
            }
            let v = pool[rng.gen_range(0..pool.len())];
            let accept = Self::mixing(config.p0, config.p1, source, dest_group);
            if rng.gen::<f64>() < accept {
                self.insert(source, v);
                return Ok(());
            }
        }
        Err(MpaError::RejectionLoopExceeded)
    }

    /// One arrival with the state-dependent rejection filter: tentative
    /// neighbours are retained with the probabilities from
    /// [`retention_probs`] (frozen at this step's degree share), then the
    /// usual mixing acceptance applies; any failure restarts the draw.
    pub fn step_dynamic(&mut self, config: &MpaConfig, rng: &mut SimRng) -> Result<(), MpaError> {
        if self.endpoints.is_empty() {
            return Err(MpaError::EmptyState);
        }
        let retention = match retention_probs(
            config.minority_rate,
            config.p0,
            config.p1,
            self.alpha(),
        ) {
            Ok(q) => Some(q),
            Err(MpaError::AlphaAtTarget) => {
                self.guard_steps += 1;
                None
            }
            Err(e) => return Err(e),
        };
        let source = Self::draw_source_group(config.minority_rate, rng);
        for _ in 0..MAX_REJECTIONS {
            let v = self.endpoints[rng.gen_range(0..self.endpoints.len())];
            let dest_group = self.groups[v as usize];
            if let Some(q) = &retention {
                if rng.gen::<f64>() >= q.get(source, dest_group) {
                    continue;
                }
            }
            let accept = Self::mixing(config.p0, config.p1, source, dest_group);
            if rng.gen::<f64>() < accept {
                self.insert(source, v);
                return Ok(());
            }
        }
        Err(MpaError::RejectionLoopExceeded)
    }

    pub fn step(&mut self, config: &MpaConfig, rng: &mut SimRng) -> Result<(), MpaError> {
        match config.variant {
            MpaVariant::Baseline => self.step_baseline(config, rng),
            MpaVariant::DemographicParity => self.step_dp(config, rng),
            MpaVariant::Dynamic => self.step_dynamic(config, rng),
        }
    }
}

/// Retention probabilities of the dynamic filter, clamped into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionProbs {
    pub q00: f64,
    pub q01: f64,
    pub q10: f64,
    pub q11: f64,
}

impl RetentionProbs {
    pub fn get(&self, source: Group, dest: Group) -> f64 {
        match (source, dest) {
            (Group::Majority, Group::Majority) => self.q00,
            (Group::Majority, Group::Minority) => self.q01,
            (Group::Minority, Group::Majority) => self.q10,
            (Group::Minority, Group::Minority) => self.q11,
        }
    }
}

/// Raw retention probabilities steering the degree share toward `r`:
/// in-group retentions are computed first, clamped into [0, 1], and the
/// cross-group retentions are their complements (so all four land in
/// [0, 1] simultaneously). Errs with [`MpaError::AlphaAtTarget`] inside the
/// guard band around `alpha == r`, where the formulas are singular and the
/// caller should skip filtering for the step.
pub fn retention_probs(r: f64, p0: f64, p1: f64, alpha: f64) -> Result<RetentionProbs, MpaError> {
    if (alpha - r).abs() <= ALPHA_GUARD {
        return Err(MpaError::AlphaAtTarget);
    }
    let q00_raw = (1.0 - r) * (alpha * (p0 - 2.0) + 2.0) / (p0 * (alpha - r));
    let q11_den = alpha * (p1 - r) - p1 * r + r;
    if q11_den == 0.0 {
        return Err(MpaError::SingularDenominator { r, p0, p1, alpha });
    }
    let q11_raw = (1.0 - alpha) * (1.0 - p1) * r / q11_den;
    let q00 = q00_raw.clamp(0.0, 1.0);
    let q11 = q11_raw.clamp(0.0, 1.0);
    Ok(RetentionProbs {
        q00,
        q01: 1.0 - q00,
        q10: 1.0 - q11,
        q11,
    })
}

/// Probability that a baseline-variant source of the majority group ends up
/// connected to a majority member, given the current minority degree share.
pub fn baseline_p00(p0: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * p0 / (p0 + alpha - 2.0 * p0 * alpha)
}

/// Probability that a baseline-variant minority source connects in-group.
pub fn baseline_p11(p1: f64, alpha: f64) -> f64 {
    alpha * p1 / (1.0 - p1 - alpha + 2.0 * p1 * alpha)
}

/// Limiting minority degree share of the baseline process: the unique root
/// in (0, 1) of `2a = r (1 + P11(a)) + (1 - r)(1 - P00(a))`, found by
/// bisection to 1e-12.
pub fn baseline_alpha_limit(r: f64, p0: f64, p1: f64) -> Result<f64, MpaError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(MpaError::InvalidRate(r));
    }
    for (name, value) in [("p0", p0), ("p1", p1)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(MpaError::InvalidMixing {
                name,
                value,
                range: "(0, 1)",
            });
        }
    }
    let f = |alpha: f64| {
        r * (1.0 + baseline_p11(p1, alpha)) + (1.0 - r) * (1.0 - baseline_p00(p0, alpha))
            - 2.0 * alpha
    };
    let mut lo = 1e-9;
    let mut hi = 1.0 - 1e-9;
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(MpaError::NoFixedPoint { r, p0, p1 });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form limiting minority degree share under the group-first
/// (demographic parity) destination sampling.
pub fn dp_alpha_limit(r: f64, p0: f64, p1: f64) -> Result<f64, MpaError> {
    let den1 = 1.0 - r - p1 + 2.0 * r * p1;
    let den0 = r + p0 - 2.0 * r * p0;
    if den1 == 0.0 || den0 == 0.0 {
        return Err(MpaError::SingularDenominator {
            r,
            p0,
            p1,
            alpha: f64::NAN,
        });
    }
    let p11 = r * p1 / den1;
    let p00 = (1.0 - r) * p0 / den0;
    let alpha = 0.5 * (r * p11 - (1.0 - r) * p00 + 1.0);
    // Floating dust only; the expression is a probability.
    Ok(alpha.clamp(0.0, 1.0))
}

/// Per-group power-law tail exponents `1 + 1/c_i` of the baseline process
/// at a given limiting share.
pub fn power_law_exponents(
    r: f64,
    p0: f64,
    p1: f64,
    alpha: f64,
) -> Result<(f64, f64), MpaError> {
    let den0 = p0 + alpha - 2.0 * p0 * alpha;
    let den1 = 1.0 - p1 - alpha + 2.0 * p1 * alpha;
    if den0 == 0.0 || den1 == 0.0 {
        return Err(MpaError::SingularDenominator { r, p0, p1, alpha });
    }
    let c0 = 0.5 * ((1.0 - r) * p0 / den0 + r * (1.0 - p1) / den1);
    let c1 = 0.5 * ((1.0 - r) * (1.0 - p0) / den0 + r * p1 / den1);
    if c0 == 0.0 || c1 == 0.0 {
        return Err(MpaError::SingularDenominator { r, p0, p1, alpha });
    }
    Ok((1.0 + 1.0 / c0, 1.0 + 1.0 / c1))
}

/// A completed run: the recorded share trajectory and the final state.
#[derive(Debug, Clone)]
pub struct MpaRun {
    /// (step, minority degree share) pairs at the configured stride; the
    /// initial state is step 0 and the final step is always present.
    pub trajectory: Vec<(u64, f64)>,
    pub state: MpaState,
}

/// Runs the configured process from the standard initial graph.
/// Deterministic given the seed.
pub fn mpa_run(config: &MpaConfig) -> Result<MpaRun, MpaError> {
    let state = MpaState::init(config)?;
    mpa_run_from(config, state)
}

/// Runs the configured process from an explicit initial state.
pub fn mpa_run_from(config: &MpaConfig, mut state: MpaState) -> Result<MpaRun, MpaError> {
    config.validate()?;
    let mut rng = stream(config.seed, &[salt::MPA, config.variant as u64]);
    let stride = config.record_stride.max(1);
    let mut trajectory = vec![(0, state.alpha())];
    for t in 1..=config.t_max {
        state.step(config, &mut rng)?;
        if t % stride == 0 || t == config.t_max {
            trajectory.push((t, state.alpha()));
        }
    }
    Ok(MpaRun { trajectory, state })
}

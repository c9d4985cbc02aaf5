//! Probabilistic ranking policies.
//!
//! A query ranks D candidates into m slots. The policy is a D x m matrix of
//! probabilities: every slot is filled (columns sum to one) and no candidate
//! appears in more than one slot (rows sum to at most one). The
//! utility-maximizing policy under position bias is a sorted assignment; with
//! one linear parity constraint the optimum is a convex combination of at
//! most two assignments, found here by bisecting the constraint value over
//! the Lagrangian family instead of running a general LP per query.

use rand::Rng;
use thiserror::Error;

use crate::population::Group;
use crate::rng::SimRng;

/// Residual below which a parity constraint counts as satisfied.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Width at which the multiplier bisection stops.
const LAMBDA_TOL: f64 = 1e-10;
const MAX_BISECT_ITERS: u32 = 200;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("need at least one slot")]
    NoSlots,
    #[error("{candidates} candidates cannot fill {slots} slots")]
    TooFewCandidates { candidates: usize, slots: usize },
    #[error("utility vector contains a non-finite value at index {0}")]
    NonFiniteUtility(usize),
    #[error("constraint coefficient length {got} does not match {candidates} candidates")]
    CoefficientLengthMismatch { got: usize, candidates: usize },
    #[error("groups length {got} does not match {candidates} candidates")]
    GroupLengthMismatch { got: usize, candidates: usize },
}

/// Attention weights per slot, decreasing in rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBias {
    v: Vec<f64>,
}

/// Base of the logarithm in the position-bias curve `1 / log(r + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

impl PositionBias {
    pub fn new(slots: usize) -> Result<Self, RankingError> {
        Self::with_base(slots, LogBase::Natural)
    }

    pub fn with_base(slots: usize, base: LogBase) -> Result<Self, RankingError> {
        if slots == 0 {
            return Err(RankingError::NoSlots);
        }
        let v = (1..=slots)
            .map(|r| {
                let x = (r as f64) + 1.0;
                match base {
                    LogBase::Natural => 1.0 / x.ln(),
                    LogBase::Base2 => 1.0 / x.log2(),
                }
            })
            .collect();
        Ok(Self { v })
    }

    /// The first `slots` weights; used when a candidate pool is smaller
    /// than the configured list length.
    pub fn truncated(&self, slots: usize) -> Self {
        Self {
            v: self.v[..slots.min(self.v.len())].to_vec(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    pub fn slots(&self) -> usize {
        self.v.len()
    }
}

/// Column-stochastic policy matrix: entry (d, r) is the probability that
/// candidate d occupies slot r.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingPolicy {
    candidates: usize,
    slots: usize,
    /// Column-major D x m probabilities.
    probs: Vec<f64>,
}

impl RankingPolicy {
    pub fn zeros(candidates: usize, slots: usize) -> Self {
        Self {
            candidates,
            slots,
            probs: vec![0.0; candidates * slots],
        }
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, candidate: usize, slot: usize) -> f64 {
        self.probs[slot * self.candidates + candidate]
    }

    fn set(&mut self, candidate: usize, slot: usize, p: f64) {
        self.probs[slot * self.candidates + candidate] = p;
    }

    fn add(&mut self, candidate: usize, slot: usize, p: f64) {
        self.probs[slot * self.candidates + candidate] += p;
    }

    pub fn column(&self, slot: usize) -> &[f64] {
        &self.probs[slot * self.candidates..(slot + 1) * self.candidates]
    }

    pub fn row_sum(&self, candidate: usize) -> f64 {
        (0..self.slots).map(|r| self.get(candidate, r)).sum()
    }

    pub fn column_sum(&self, slot: usize) -> f64 {
        self.column(slot).iter().sum()
    }

    /// Checks column sums = 1, row sums <= 1 and entries in [0, 1], all
    /// within `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), String> {
        for r in 0..self.slots {
            let s = self.column_sum(r);
            if (s - 1.0).abs() > tol {
                return Err(format!("column {r} sums to {s}"));
            }
        }
        for d in 0..self.candidates {
            let s = self.row_sum(d);
            if s > 1.0 + tol {
                return Err(format!("row {d} sums to {s}"));
            }
        }
        for (i, &p) in self.probs.iter().enumerate() {
            if !(-tol..=1.0 + tol).contains(&p) {
                return Err(format!("entry {i} = {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Expected utility `u' P v`.
    pub fn expected_utility(&self, utilities: &[f64], bias: &PositionBias) -> f64 {
        bias.weights()
            .iter()
            .enumerate()
            .map(|(r, &w)| {
                let col = self.column(r);
                let dot: f64 = col.iter().zip(utilities).map(|(p, u)| p * u).sum();
                dot * w
            })
            .sum()
    }
}

/// One linear parity constraint over a query's candidates, or none.
///
/// Coefficients follow the two-group difference form: positive entries carry
/// 1/|majority| weight, negative entries -1/|minority|, with group sizes
/// counted over the candidate set of this query. Exposure parity weights
/// members directly; utility parity weights them by their ranking score.
#[derive(Debug, Clone, PartialEq)]
pub enum FairnessConstraint {
    None,
    ExposureParity(Vec<f64>),
    UtilityParity(Vec<f64>),
}

impl FairnessConstraint {
    /// Per-capita exposure difference coefficients for the candidate groups.
    pub fn exposure_parity(groups: &[Group]) -> Self {
        let coeffs = group_difference_coefficients(groups, |_| 1.0);
        FairnessConstraint::ExposureParity(coeffs)
    }

    /// Per-capita expected-utility difference coefficients; `utilities` are
    /// the same scores handed to the solver.
    pub fn utility_parity(utilities: &[f64], groups: &[Group]) -> Self {
        let coeffs = group_difference_coefficients(groups, |d| utilities[d]);
        FairnessConstraint::UtilityParity(coeffs)
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            FairnessConstraint::None => None,
            FairnessConstraint::ExposureParity(c) | FairnessConstraint::UtilityParity(c) => {
                Some(c)
            }
        }
    }
}

fn group_difference_coefficients(groups: &[Group], weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let majority = groups.iter().filter(|g| **g == Group::Majority).count();
    let minority = groups.len() - majority;
    groups
        .iter()
        .enumerate()
        .map(|(d, g)| match g {
            Group::Majority => weight(d) / majority as f64,
            Group::Minority => -weight(d) / minority as f64,
        })
        .collect()
}

/// A solved query: the policy, the assignments it mixes and bookkeeping for
/// infeasible-constraint fallbacks.
#[derive(Debug, Clone)]
pub struct PolicySolution {
    pub policy: RankingPolicy,
    /// True when the parity constraint could not be satisfied for this
    /// candidate set (for example a single-group pool) and was dropped.
    pub constraint_dropped: bool,
    /// Achieved constraint value `c' P v`; zero when no constraint applies.
    pub constraint_residual: f64,
    /// The one or two deterministic rankings the policy mixes, with the
    /// weight of the first.
    pub support: PolicySupport,
}

/// Vertex decomposition of a solved policy.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySupport {
    Single(Vec<usize>),
    Mixture {
        first: Vec<usize>,
        second: Vec<usize>,
        first_weight: f64,
    },
}

/// Candidate per slot maximizing `w' P v`: sort by weight descending (ties
/// by candidate id ascending) and fill slots in order of decreasing bias.
fn greedy_assignment(weights: &[f64], slots: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("weights are finite")
            .then(a.cmp(&b))
    };
    if weights.len() > slots {
        order.select_nth_unstable_by(slots - 1, cmp);
        order.truncate(slots);
    }
    order.sort_by(cmp);
    order
}

fn assignment_value(assignment: &[usize], values: &[f64], bias: &PositionBias) -> f64 {
    assignment
        .iter()
        .zip(bias.weights())
        .map(|(&d, &v)| values[d] * v)
        .sum()
}

fn vertex_policy(assignment: &[usize], candidates: usize) -> RankingPolicy {
    let mut policy = RankingPolicy::zeros(candidates, assignment.len());
    for (r, &d) in assignment.iter().enumerate() {
        policy.set(d, r, 1.0);
    }
    policy
}

fn mixture_policy(
    first: &[usize],
    second: &[usize],
    first_weight: f64,
    candidates: usize,
) -> RankingPolicy {
    let mut policy = RankingPolicy::zeros(candidates, first.len());
    for (r, &d) in first.iter().enumerate() {
        policy.add(d, r, first_weight);
    }
    for (r, &d) in second.iter().enumerate() {
        policy.add(d, r, 1.0 - first_weight);
    }
    policy
}

/// Solves the per-query ranking problem.
///
/// Unconstrained, the optimum is the greedy assignment. With a parity
/// constraint `c' P v = 0`, the solver bisects a multiplier: for each
/// lambda the assignment maximizing `(u + lambda c)' P v` is greedy, the
/// constraint value of that assignment is non-decreasing in lambda, and at
/// the sign change the two bracketing assignments are mixed with the unique
/// weight zeroing the constraint. Infeasible constraints (the constraint
/// value cannot reach zero anywhere in the polytope) are dropped and
/// flagged rather than failing the query. Deterministic: no randomness.
pub fn solve_policy(
    utilities: &[f64],
    bias: &PositionBias,
    constraint: &FairnessConstraint,
) -> Result<PolicySolution, RankingError> {
    let candidates = utilities.len();
    let slots = bias.slots();
    if candidates < slots {
        return Err(RankingError::TooFewCandidates { candidates, slots });
    }
    for (i, u) in utilities.iter().enumerate() {
        if !u.is_finite() {
            return Err(RankingError::NonFiniteUtility(i));
        }
    }

    let unconstrained = greedy_assignment(utilities, slots);
    let coeffs = match constraint.coefficients() {
        None => {
            return Ok(PolicySolution {
                policy: vertex_policy(&unconstrained, candidates),
                constraint_dropped: false,
                constraint_residual: 0.0,
                support: PolicySupport::Single(unconstrained),
            })
        }
        Some(c) => {
            if c.len() != candidates {
                return Err(RankingError::CoefficientLengthMismatch {
                    got: c.len(),
                    candidates,
                });
            }
            c
        }
    };

    let dropped = |assignment: Vec<usize>| PolicySolution {
        policy: vertex_policy(&assignment, candidates),
        constraint_dropped: true,
        constraint_residual: f64::NAN,
        support: PolicySupport::Single(assignment),
    };

    // Exact feasibility test: the constraint value over the polytope spans
    // [min over assignments, max over assignments]; zero must lie inside.
    let neg_coeffs: Vec<f64> = coeffs.iter().map(|c| -c).collect();
    let h_max = assignment_value(&greedy_assignment(coeffs, slots), coeffs, bias);
    let h_min = assignment_value(&greedy_assignment(&neg_coeffs, slots), coeffs, bias);
    if h_min > CONSTRAINT_TOL || h_max < -CONSTRAINT_TOL {
        return Ok(dropped(unconstrained));
    }

    let h_at = |lambda: f64| {
        let w: Vec<f64> = utilities
            .iter()
            .zip(coeffs)
            .map(|(u, c)| u + lambda * c)
            .collect();
        let assignment = greedy_assignment(&w, slots);
        let h = assignment_value(&assignment, coeffs, bias);
        (assignment, h)
    };

    let h0 = assignment_value(&unconstrained, coeffs, bias);
    if h0.abs() <= CONSTRAINT_TOL {
        return Ok(PolicySolution {
            policy: vertex_policy(&unconstrained, candidates),
            constraint_dropped: false,
            constraint_residual: h0,
            support: PolicySupport::Single(unconstrained),
        });
    }

    // Bracket the sign change. The constraint value is non-decreasing in
    // lambda, so one direction suffices; feasibility guarantees the bracket
    // exists before the expansion cap.
    let (mut lo, mut hi, mut a_lo, mut a_hi, mut h_lo, mut h_hi);
    if h0 > 0.0 {
        hi = 0.0;
        a_hi = unconstrained;
        h_hi = h0;
        let mut step = 1.0;
        loop {
            lo = hi - step;
            let (a, h) = h_at(lo);
            if h <= 0.0 {
                a_lo = a;
                h_lo = h;
                break;
            }
            step *= 2.0;
            if step > 1e30 {
                return Ok(dropped(greedy_assignment(utilities, slots)));
            }
        }
    } else {
        lo = 0.0;
        a_lo = unconstrained;
        h_lo = h0;
        let mut step = 1.0;
        loop {
            hi = lo + step;
            let (a, h) = h_at(hi);
            if h >= 0.0 {
                a_hi = a;
                h_hi = h;
                break;
            }
            step *= 2.0;
            if step > 1e30 {
                return Ok(dropped(greedy_assignment(utilities, slots)));
            }
        }
    }

    for _ in 0..MAX_BISECT_ITERS {
        if hi - lo <= LAMBDA_TOL || h_hi.abs() <= LAMBDA_TOL || h_lo.abs() <= LAMBDA_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (a, h) = h_at(mid);
        if h >= 0.0 {
            hi = mid;
            a_hi = a;
            h_hi = h;
        } else {
            lo = mid;
            a_lo = a;
            h_lo = h;
        }
    }

    // A vertex exactly on the constraint is the optimum outright; anything
    // short of exact goes through the mixture, which zeroes the residual by
    // construction.
    if h_hi == 0.0 {
        return Ok(PolicySolution {
            policy: vertex_policy(&a_hi, candidates),
            constraint_dropped: false,
            constraint_residual: 0.0,
            support: PolicySupport::Single(a_hi),
        });
    }
    if h_lo == 0.0 {
        return Ok(PolicySolution {
            policy: vertex_policy(&a_lo, candidates),
            constraint_dropped: false,
            constraint_residual: 0.0,
            support: PolicySupport::Single(a_lo),
        });
    }

    // h_lo < 0 < h_hi: the unique mixing weight zeroing the constraint.
    let hi_weight = (-h_lo / (h_hi - h_lo)).clamp(0.0, 1.0);
    let policy = mixture_policy(&a_lo, &a_hi, 1.0 - hi_weight, candidates);
    let residual = (1.0 - hi_weight) * h_lo + hi_weight * h_hi;
    Ok(PolicySolution {
        policy,
        constraint_dropped: false,
        constraint_residual: residual,
        support: PolicySupport::Mixture {
            first: a_lo,
            second: a_hi,
            first_weight: 1.0 - hi_weight,
        },
    })
}

/// A concrete ranking drawn from a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRanking {
    /// Candidate occupying each slot; all distinct.
    pub slots: Vec<usize>,
    /// Columns whose remaining mass was numerically zero and fell back to
    /// a uniform draw over unused candidates.
    pub degenerate_columns: u32,
}

/// Samples slot by slot: each column's probabilities are restricted to
/// candidates not yet placed and rescaled before drawing.
pub fn sample_ranking(policy: &RankingPolicy, rng: &mut SimRng) -> SampledRanking {
    let d = policy.candidates();
    let m = policy.slots();
    let mut used = vec![false; d];
    let mut slots = Vec::with_capacity(m);
    let mut degenerate = 0u32;
    for r in 0..m {
        let col = policy.column(r);
        let total: f64 = col
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(_, p)| p.max(0.0))
            .sum();
        let pick = if total <= 1e-12 {
            degenerate += 1;
            let remaining: Vec<usize> = (0..d).filter(|&i| !used[i]).collect();
            remaining[rng.gen_range(0..remaining.len())]
        } else {
            let x = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &p) in col.iter().enumerate() {
                if used[i] {
                    continue;
                }
                acc += p.max(0.0);
                if x < acc {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave x just above the final accumulator; take
            // the last unused candidate with positive mass.
            chosen.unwrap_or_else(|| {
                (0..d)
                    .rev()
                    .find(|&i| !used[i] && col[i] > 0.0)
                    .expect("column has positive mass")
            })
        };
        used[pick] = true;
        slots.push(pick);
    }
    SampledRanking {
        slots,
        degenerate_columns: degenerate,
    }
}

/// Position-weighted exposure received by each group under a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupExposure {
    pub majority_total: f64,
    pub minority_total: f64,
    pub majority_share: f64,
    pub minority_share: f64,
    /// Difference of per-capita exposures (majority minus minority); NaN
    /// when a group is absent from the candidate set.
    pub per_capita_gap: f64,
}

/// Sums `P(d, r) * v_r` per group and normalizes to shares of the total.
pub fn expected_exposure_by_group(
    policy: &RankingPolicy,
    bias: &PositionBias,
    groups: &[Group],
) -> Result<GroupExposure, RankingError> {
    if groups.len() != policy.candidates() {
        return Err(RankingError::GroupLengthMismatch {
            got: groups.len(),
            candidates: policy.candidates(),
        });
    }
    let mut totals = [0.0f64; 2];
    for (r, &w) in bias.weights().iter().enumerate() {
        let col = policy.column(r);
        for (d, &p) in col.iter().enumerate() {
            totals[groups[d].index()] += p * w;
        }
    }
    let counts = [
        groups.iter().filter(|g| **g == Group::Majority).count(),
        groups.iter().filter(|g| **g == Group::Minority).count(),
    ];
    let sum = totals[0] + totals[1];
    let per_capita_gap = if counts[0] > 0 && counts[1] > 0 {
        totals[0] / counts[0] as f64 - totals[1] / counts[1] as f64
    } else {
        f64::NAN
    };
    Ok(GroupExposure {
        majority_total: totals[0],
        minority_total: totals[1],
        majority_share: totals[0] / sum,
        minority_share: totals[1] / sum,
        per_capita_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    #[allow(clippy::approx_constant)] // 1/ln 2 genuinely is log2(e)
    fn position_bias_closed_forms() {
        let one = PositionBias::new(1).unwrap();
        assert!((one.weights()[0] - 1.0 / 2.0f64.ln()).abs() < 1e-12);
        assert!((one.weights()[0] - 1.4427).abs() < 1e-4);

        let three = PositionBias::new(3).unwrap();
        let expect = [1.4427, 0.9102, 0.7213];
        for (w, e) in three.weights().iter().zip(expect.iter()) {
            assert!((w - e).abs() < 1e-4);
        }
    }

    #[test]
    fn position_bias_strictly_decreasing() {
        let bias = PositionBias::new(100).unwrap();
        for pair in bias.weights().windows(2) {
            assert!(pair[0] > pair[1] && pair[1] > 0.0);
        }
        assert_eq!(PositionBias::new(0).unwrap_err(), RankingError::NoSlots);
    }

    #[test]
    fn base2_option_rescales() {
        let bias = PositionBias::with_base(2, LogBase::Base2).unwrap();
        assert!((bias.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_solution_is_sorted_assignment() {
        let bias = PositionBias::new(2).unwrap();
        let sol = solve_policy(&[0.9, 0.5, 0.1], &bias, &FairnessConstraint::None).unwrap();
        assert_eq!(sol.support, PolicySupport::Single(vec![0, 1]));
        assert_eq!(sol.policy.get(0, 0), 1.0);
        assert_eq!(sol.policy.get(1, 1), 1.0);
        assert!(!sol.constraint_dropped);
    }

    #[test]
    fn singleton_groups_split_evenly_under_exposure_parity() {
        let bias = PositionBias::new(1).unwrap();
        let groups = [Group::Majority, Group::Minority];
        let constraint = FairnessConstraint::exposure_parity(&groups);
        let sol = solve_policy(&[0.8, 0.2], &bias, &constraint).unwrap();
        assert!((sol.policy.get(0, 0) - 0.5).abs() < 1e-9);
        assert!((sol.policy.get(1, 0) - 0.5).abs() < 1e-9);
        assert!(sol.constraint_residual.abs() < CONSTRAINT_TOL);
    }

    #[test]
    fn single_group_pool_drops_constraint() {
        let bias = PositionBias::new(2).unwrap();
        let groups = [Group::Majority; 4];
        let constraint = FairnessConstraint::exposure_parity(&groups);
        let sol = solve_policy(&[0.4, 0.3, 0.2, 0.1], &bias, &constraint).unwrap();
        assert!(sol.constraint_dropped);
        assert_eq!(sol.support, PolicySupport::Single(vec![0, 1]));
    }

    #[test]
    fn dimension_errors() {
        let bias = PositionBias::new(3).unwrap();
        assert_eq!(
            solve_policy(&[1.0, 0.5], &bias, &FairnessConstraint::None).unwrap_err(),
            RankingError::TooFewCandidates {
                candidates: 2,
                slots: 3
            }
        );
        assert_eq!(
            solve_policy(&[1.0, f64::NAN, 0.0], &bias, &FairnessConstraint::None).unwrap_err(),
            RankingError::NonFiniteUtility(1)
        );
    }

    fn random_instance(
        rng: &mut crate::rng::SimRng,
    ) -> (Vec<f64>, Vec<Group>, PositionBias, FairnessConstraint) {
        let d = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=3.min(d));
        let utilities: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let groups: Vec<Group> = (0..d)
            .map(|_| {
                if rng.gen::<bool>() {
                    Group::Majority
                } else {
                    Group::Minority
                }
            })
            .collect();
        let bias = PositionBias::new(m).unwrap();
        let constraint = match rng.gen_range(0..3) {
            0 => FairnessConstraint::None,
            1 => FairnessConstraint::exposure_parity(&groups),
            _ => FairnessConstraint::utility_parity(&utilities, &groups),
        };
        (utilities, groups, bias, constraint)
    }

    #[test]
    fn solved_policies_are_valid_and_never_beat_unconstrained() {
        let mut rng = stream(21, &[]);
        for _ in 0..500 {
            let (utilities, _groups, bias, constraint) = random_instance(&mut rng);
            let sol = solve_policy(&utilities, &bias, &constraint).unwrap();
            sol.policy.validate(1e-9).unwrap();
            let unconstrained =
                solve_policy(&utilities, &bias, &FairnessConstraint::None).unwrap();
            let constrained_value = sol.policy.expected_utility(&utilities, &bias);
            let unconstrained_value = unconstrained.policy.expected_utility(&utilities, &bias);
            assert!(constrained_value <= unconstrained_value + 1e-12);
            if !sol.constraint_dropped {
                if let Some(c) = constraint.coefficients() {
                    let mut h = 0.0;
                    for (r, &w) in bias.weights().iter().enumerate() {
                        for (d, &cd) in c.iter().enumerate() {
                            h += cd * sol.policy.get(d, r) * w;
                        }
                    }
                    assert!(h.abs() <= CONSTRAINT_TOL, "residual {h}");
                }
            }
        }
    }

    #[test]
    fn mixture_decomposition_recovers_policy() {
        let mut rng = stream(22, &[]);
        let mut mixtures = 0;
        for _ in 0..500 {
            let (utilities, _groups, bias, constraint) = random_instance(&mut rng);
            let sol = solve_policy(&utilities, &bias, &constraint).unwrap();
            if let PolicySupport::Mixture {
                first,
                second,
                first_weight,
            } = &sol.support
            {
                mixtures += 1;
                assert!((0.0..=1.0).contains(first_weight));
                let rebuilt = mixture_policy(
                    first,
                    second,
                    *first_weight,
                    sol.policy.candidates(),
                );
                for r in 0..sol.policy.slots() {
                    for d in 0..sol.policy.candidates() {
                        assert!((rebuilt.get(d, r) - sol.policy.get(d, r)).abs() < 1e-15);
                    }
                }
            }
        }
        assert!(mixtures > 0, "no mixed solutions exercised");
    }

    #[test]
    fn solver_is_deterministic() {
        let utilities = [0.3, 0.9, 0.2, 0.7];
        let groups = [
            Group::Majority,
            Group::Minority,
            Group::Majority,
            Group::Minority,
        ];
        let bias = PositionBias::new(2).unwrap();
        let constraint = FairnessConstraint::exposure_parity(&groups);
        let a = solve_policy(&utilities, &bias, &constraint).unwrap();
        let b = solve_policy(&utilities, &bias, &constraint).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.support, b.support);
    }

    #[test]
    fn deterministic_policy_samples_its_permutation() {
        let assignment = vec![2, 0, 3];
        let policy = vertex_policy(&assignment, 4);
        let mut rng = stream(23, &[]);
        for _ in 0..50 {
            let s = sample_ranking(&policy, &mut rng);
            assert_eq!(s.slots, assignment);
            assert_eq!(s.degenerate_columns, 0);
        }
    }

    #[test]
    fn uniform_single_slot_frequencies_pass_chi_square() {
        let mut policy = RankingPolicy::zeros(4, 1);
        for d in 0..4 {
            policy.set(d, 0, 0.25);
        }
        let mut rng = stream(24, &[]);
        let n = 100_000;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[sample_ranking(&policy, &mut rng).slots[0]] += 1;
        }
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum();
        // 99% critical value of chi-square with 3 degrees of freedom.
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn slot_one_marginals_match_first_column() {
        let mut policy = RankingPolicy::zeros(3, 2);
        let col1 = [0.5, 0.3, 0.2];
        let col2 = [0.2, 0.3, 0.5];
        for d in 0..3 {
            policy.set(d, 0, col1[d]);
            policy.set(d, 1, col2[d]);
        }
        let mut rng = stream(25, &[]);
        let n = 100_000usize;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            let s = sample_ranking(&policy, &mut rng);
            counts[s.slots[0]] += 1;
            assert_ne!(s.slots[0], s.slots[1], "slots must be distinct");
        }
        for d in 0..3 {
            let freq = counts[d] as f64 / n as f64;
            let se = (col1[d] * (1.0 - col1[d]) / n as f64).sqrt();
            assert!(
                (freq - col1[d]).abs() <= 3.0 * se,
                "candidate {d}: {freq} vs {} (3se {})",
                col1[d],
                3.0 * se
            );
        }
    }

    #[test]
    fn zero_mass_column_falls_back_to_uniform() {
        let mut policy = RankingPolicy::zeros(2, 2);
        // Both columns put all mass on candidate 0; slot 2 has nothing left.
        policy.set(0, 0, 1.0);
        policy.set(0, 1, 1.0);
        let mut rng = stream(26, &[]);
        let s = sample_ranking(&policy, &mut rng);
        assert_eq!(s.slots, vec![0, 1]);
        assert_eq!(s.degenerate_columns, 1);
    }

    #[test]
    fn exposure_shares_match_direct_sum() {
        let mut rng = stream(27, &[]);
        for _ in 0..50 {
            let (utilities, groups, bias, constraint) = random_instance(&mut rng);
            let sol = solve_policy(&utilities, &bias, &constraint).unwrap();
            let exp = expected_exposure_by_group(&sol.policy, &bias, &groups).unwrap();
            // Independent direct double sum.
            let mut majority = 0.0;
            let mut minority = 0.0;
            for (r, &w) in bias.weights().iter().enumerate() {
                for (d, &g) in groups.iter().enumerate() {
                    let mass = sol.policy.get(d, r) * w;
                    match g {
                        Group::Majority => majority += mass,
                        Group::Minority => minority += mass,
                    }
                }
            }
            assert!((exp.majority_total - majority).abs() < 1e-12);
            assert!((exp.minority_total - minority).abs() < 1e-12);
            let sum = majority + minority;
            assert!((exp.majority_share - majority / sum).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_constrained_policy_has_equal_per_capita_exposure() {
        let mut rng = stream(28, &[]);
        let mut checked = 0;
        for _ in 0..200 {
            let (utilities, groups, bias, _) = random_instance(&mut rng);
            let constraint = FairnessConstraint::exposure_parity(&groups);
            let sol = solve_policy(&utilities, &bias, &constraint).unwrap();
            if sol.constraint_dropped {
                continue;
            }
            let exp = expected_exposure_by_group(&sol.policy, &bias, &groups).unwrap();
            assert!(
                exp.per_capita_gap.abs() <= CONSTRAINT_TOL,
                "gap {}",
                exp.per_capita_gap
            );
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn single_group_pool_has_share_one() {
        let policy = vertex_policy(&[0, 1], 3);
        let bias = PositionBias::new(2).unwrap();
        let groups = [Group::Majority; 3];
        let exp = expected_exposure_by_group(&policy, &bias, &groups).unwrap();
        assert_eq!(exp.majority_share, 1.0);
        assert_eq!(exp.minority_share, 0.0);
        assert!(exp.per_capita_gap.is_nan());
    }

    proptest! {
        /// Sampled rankings always consist of distinct candidates, one per
        /// slot, for arbitrary valid policies built from random mixtures.
        #[test]
        fn sampled_slots_are_distinct(seed in 0u64..500) {
            let mut rng = stream(seed, &[29]);
            let (utilities, _groups, bias, constraint) = random_instance(&mut rng);
            let sol = solve_policy(&utilities, &bias, &constraint).unwrap();
            let s = sample_ranking(&sol.policy, &mut rng);
            let mut sorted = s.slots.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), s.slots.len());
        }
    }
}

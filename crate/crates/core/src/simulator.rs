//! Discrete-time connection-recommendation loop.
//!
//! Each step: members whose waiting time hit zero become sources; every
//! source's non-neighbours are scored, a ranking policy is solved under the
//! configured intervention and sampled, fresh connection probabilities are
//! drawn for the recommended pairs, position-bias-adjusted and thresholded,
//! and the surviving pairs become edges. Sources then draw new waiting
//! times from their updated network sizes.
//!
//! Sources within one step are processed in member-id order against the
//! step-start graph snapshot: edges apply only at the end of the step, so
//! intra-step ordering cannot leak into scores. Per-(step, member) random
//! streams make results independent of scheduling and identical across
//! intervention arms at t = 0.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::graph::{GraphError, SbmParams, SocialGraph};
use crate::metrics::{self, MetricsRecord, MetricsSeries};
use crate::population::{Group, Population, PopulationError};
use crate::ranking::{
    expected_exposure_by_group, sample_ranking, solve_policy, FairnessConstraint, LogBase,
    PositionBias, RankingError,
};
use crate::rng::{mix_seed, salt, stream, SimRng};
use crate::scoring::{
    connection_probability_sampled, scaled_features, score_candidates, FeatureNormalizers,
    ScoringError, ScoringParams,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("population: {0}")]
    Population(#[from] PopulationError),
    #[error("scoring: {0}")]
    Scoring(#[from] ScoringError),
    #[error("ranking: {0}")]
    Ranking(#[from] RankingError),
    #[error("member count {n} must exceed slot count {m}")]
    TooFewMembers { n: usize, m: usize },
    #[error("slot count must be at least 1")]
    NoSlots,
}

/// Which parity constraint, if any, each query's policy carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Intervention {
    #[default]
    None,
    ExposureParity,
    UtilityParity,
}

impl Intervention {
    pub const ALL: [Intervention; 3] = [
        Intervention::None,
        Intervention::ExposureParity,
        Intervention::UtilityParity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Intervention::None => "none",
            Intervention::ExposureParity => "dp",
            Intervention::UtilityParity => "dyn",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "none" => Some(Intervention::None),
            "dp" => Some(Intervention::ExposureParity),
            "dyn" => Some(Intervention::UtilityParity),
            _ => None,
        }
    }
}

/// How an adjusted probability turns into a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectRule {
    /// Connect iff `clip(p * v_r, 0, 1) >= 0.5`; randomness enters only
    /// through the fresh noise in the second scoring call.
    #[default]
    Threshold,
    /// Connect with probability `clip(p * v_r, 0, 1)`.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub t_max: u32,
    /// Recommendation list length.
    pub m: usize,
    pub minority_rate: f64,
    pub covariate_dim: usize,
    pub covariate_var: f64,
    pub sbm: SbmParams,
    pub scoring: ScoringParams,
    pub runs: u32,
    pub base_seed: u64,
    pub connect_rule: ConnectRule,
    pub log_base: LogBase,
    /// Random pairs sampled when freezing the similarity normalizer.
    pub normalizer_pairs: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl SimConfig {
    /// Full-scale configuration: 1000 members, 2500 steps, 20 slots,
    /// 10 runs.
    pub fn paper() -> Self {
        Self {
            n: 1000,
            t_max: 2500,
            m: 20,
            minority_rate: 0.35,
            covariate_dim: 30,
            covariate_var: 0.5,
            sbm: SbmParams {
                p_within_majority: 0.04,
                p_within_minority: 0.032,
                p_cross: 0.023,
            },
            scoring: ScoringParams::default(),
            runs: 10,
            base_seed: 7_2025,
            connect_rule: ConnectRule::Threshold,
            log_base: LogBase::Natural,
            normalizer_pairs: 100_000,
        }
    }

    /// Desk-scale preset for CI-time acceptance runs.
    pub fn desk() -> Self {
        Self {
            n: 200,
            t_max: 500,
            m: 10,
            runs: 3,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.m == 0 {
            return Err(SimError::NoSlots);
        }
        if self.n <= self.m {
            return Err(SimError::TooFewMembers {
                n: self.n,
                m: self.m,
            });
        }
        self.scoring.validate()?;
        Ok(())
    }

    /// Seed for one repetition; arms share it so they start identically.
    pub fn run_seed(&self, run: u32) -> u64 {
        mix_seed(self.base_seed, &[salt::RUN, u64::from(run)])
    }
}

/// Mutable simulation state for one (run, arm).
#[derive(Debug, Clone)]
pub struct SimState {
    pub graph: SocialGraph,
    pub population: Population,
    pub normalizers: FeatureNormalizers,
    /// Steps until each member next queries; zero means "source this step".
    pub waiting: Vec<u32>,
    pub t: u32,
}

/// Waiting time until the next query: the ceiling of an exponential draw
/// whose rate grows with the member's relative network size, so
/// better-connected members query more often.
pub fn sample_waiting_time(network_size: u32, n: usize, rng: &mut SimRng) -> u32 {
    debug_assert!((network_size as usize) < n);
    let rate = 0.001 + 0.02 * f64::from(network_size) / n as f64;
    let exp = Exp::new(rate).expect("positive rate");
    let draw: f64 = exp.sample(rng);
    draw.ceil().max(1.0) as u32
}

/// One query's outcome within a step.
#[derive(Debug, Clone)]
pub struct QueryReport {
    pub source: usize,
    pub constraint_dropped: bool,
    /// Majority share of this query's expected exposure.
    pub majority_exposure_share: f64,
    /// Per-capita exposure difference (majority minus minority); NaN when
    /// the candidate pool is single-group.
    pub per_capita_gap: f64,
    pub degenerate_columns: u32,
    /// Recommended destinations in slot order.
    pub recommended: Vec<usize>,
    /// Destinations whose connection cleared the rule.
    pub connected: Vec<usize>,
}

/// Everything a step did, for metrics and tests.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub queries: Vec<QueryReport>,
    /// Edges that actually flipped adjacency this step, as (source, dest).
    pub new_edges: Vec<(usize, usize)>,
}

/// Initial state for a run: population around suite-level group means, a
/// block-model graph over it, frozen normalizers and initial waiting times
/// drawn from each member's starting network size.
pub fn init_state(config: &SimConfig, run: u32) -> Result<SimState, SimError> {
    config.validate()?;
    let run_seed = config.run_seed(run);
    // Group means are fixed for the whole experiment suite so intervention
    // arms and repetitions stay comparable.
    let group_means = Population::draw_group_means(
        config.covariate_dim,
        &mut stream(config.base_seed, &[salt::GROUP_MEANS]),
    );
    let population = Population::init_with_means(
        config.n,
        config.minority_rate,
        group_means,
        config.covariate_var,
        &mut stream(run_seed, &[salt::POPULATION]),
    )?;
    let graph = SocialGraph::sbm_init(
        config.n,
        &population.group,
        &config.sbm,
        &mut stream(run_seed, &[salt::SBM]),
    )?;
    let normalizers = FeatureNormalizers::estimate(
        &population,
        config.normalizer_pairs,
        &mut stream(run_seed, &[salt::NORMALIZERS]),
    )?;
    let mut wait_rng = stream(run_seed, &[salt::INITIAL_WAITS]);
    let waiting = (0..config.n)
        .map(|v| sample_waiting_time(graph.degrees()[v], config.n, &mut wait_rng))
        .collect();
    Ok(SimState {
        graph,
        population,
        normalizers,
        waiting,
        t: 0,
    })
}

/// Advances the state by one step under the given intervention.
pub fn step(
    state: &mut SimState,
    config: &SimConfig,
    intervention: Intervention,
    run: u32,
) -> Result<StepReport, SimError> {
    let run_seed = config.run_seed(run);
    state.t += 1;
    let t = state.t;
    let n = config.n;

    let mut sources = Vec::new();
    for v in 0..n {
        if state.waiting[v] == 0 {
            sources.push(v);
        } else {
            state.waiting[v] -= 1;
        }
    }

    let full_bias = PositionBias::with_base(config.m, config.log_base)?;
    let mut report = StepReport::default();
    let mut proposed: Vec<(usize, usize)> = Vec::new();

    for &s in &sources {
        let candidates = state.graph.non_neighbors(s);
        if candidates.is_empty() {
            continue;
        }
        let mut rng = stream(run_seed, &[salt::STEP, u64::from(t), s as u64]);
        let scores = score_candidates(
            &state.graph,
            &state.population,
            &config.scoring,
            &state.normalizers,
            s,
            &candidates,
            &mut rng,
        )?;
        let groups: Vec<Group> = candidates
            .iter()
            .map(|&d| state.population.group_of(d))
            .collect();
        let m_eff = config.m.min(candidates.len());
        let bias = full_bias.truncated(m_eff);
        let constraint = match intervention {
            Intervention::None => FairnessConstraint::None,
            Intervention::ExposureParity => FairnessConstraint::exposure_parity(&groups),
            Intervention::UtilityParity => FairnessConstraint::utility_parity(&scores, &groups),
        };
        let solution = solve_policy(&scores, &bias, &constraint)?;
        let exposure = expected_exposure_by_group(&solution.policy, &bias, &groups)?;
        let ranking = sample_ranking(&solution.policy, &mut rng);

        let mut recommended = Vec::with_capacity(ranking.slots.len());
        let mut connected = Vec::new();
        for (slot, &candidate_idx) in ranking.slots.iter().enumerate() {
            let d = candidates[candidate_idx];
            recommended.push(d);
            let features =
                scaled_features(&state.graph, &state.population, &state.normalizers, s, d)?;
            let p = connection_probability_sampled(&features, &config.scoring, &mut rng);
            let adjusted = (p * bias.weights()[slot]).clamp(0.0, 1.0);
            let connects = match config.connect_rule {
                ConnectRule::Threshold => adjusted >= 0.5,
                ConnectRule::Bernoulli => rng.gen::<f64>() < adjusted,
            };
            if connects {
                connected.push(d);
                proposed.push((s, d));
            }
        }
        report.queries.push(QueryReport {
            source: s,
            constraint_dropped: solution.constraint_dropped,
            majority_exposure_share: exposure.majority_share,
            per_capita_gap: exposure.per_capita_gap,
            degenerate_columns: ranking.degenerate_columns,
            recommended,
            connected,
        });
    }

    // Edges land after every source was scored against the snapshot.
    for &(s, d) in &proposed {
        if !state.graph.has_edge(s, d) {
            state.graph.add_edge(s, d)?;
            report.new_edges.push((s, d));
        }
    }

    // New waiting times from updated network sizes.
    for &s in &sources {
        let mut rng = stream(run_seed, &[salt::WAIT, u64::from(t), s as u64]);
        state.waiting[s] = sample_waiting_time(state.graph.degrees()[s], n, &mut rng);
    }

    Ok(report)
}

fn snapshot_record(state: &SimState, report: Option<&StepReport>) -> MetricsRecord {
    let (mean_majority, mean_minority) =
        metrics::mean_degrees(&state.graph, &state.population).unwrap_or((f64::NAN, f64::NAN));
    let share =
        metrics::majority_degree_share(&state.graph, &state.population).unwrap_or(f64::NAN);
    let mut record = MetricsRecord {
        t: state.t,
        mean_degree_majority: mean_majority,
        mean_degree_minority: mean_minority,
        abs_gap: (mean_majority - mean_minority).abs(),
        majority_degree_share: share,
        new_conn_majority_dest_count: 0,
        new_degree_majority_count: 0,
        new_conn_total: 0,
        expected_exposure_majority_sum: 0.0,
        expected_exposure_total: 0,
        constraints_dropped_count: 0,
    };
    if let Some(report) = report {
        for q in &report.queries {
            record.expected_exposure_majority_sum += q.majority_exposure_share;
            record.expected_exposure_total += 1;
            record.constraints_dropped_count += u32::from(q.constraint_dropped);
        }
        for &(s, d) in &report.new_edges {
            record.new_conn_total += 1;
            if state.population.group_of(d) == Group::Majority {
                record.new_conn_majority_dest_count += 1;
            }
            record.new_degree_majority_count +=
                u32::from(state.population.group_of(s) == Group::Majority)
                    + u32::from(state.population.group_of(d) == Group::Majority);
        }
    }
    record
}

/// A finished (run, arm) pair.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: MetricsSeries,
    pub initial_degrees: Vec<u32>,
    pub state: SimState,
}

/// Runs one repetition under one intervention. Deterministic given the
/// config; arms with the same run index share their initial state.
pub fn run(config: &SimConfig, intervention: Intervention, run_idx: u32) -> Result<RunOutput, SimError> {
    run_with(config, intervention, run_idx, |_, _| {})
}

/// [`run`] with a per-step observer (post-step state plus the step report),
/// for callers that stream snapshots or progress while the run advances.
pub fn run_with<F>(
    config: &SimConfig,
    intervention: Intervention,
    run_idx: u32,
    mut observe: F,
) -> Result<RunOutput, SimError>
where
    F: FnMut(&SimState, &StepReport),
{
    let mut state = init_state(config, run_idx)?;
    let initial_degrees = state.graph.degrees().to_vec();
    let mut records = vec![snapshot_record(&state, None)];
    for _ in 0..config.t_max {
        let report = step(&mut state, config, intervention, run_idx)?;
        records.push(snapshot_record(&state, Some(&report)));
        observe(&state, &report);
    }
    Ok(RunOutput {
        series: MetricsSeries {
            run: run_idx,
            intervention: intervention.tag().to_string(),
            records,
        },
        initial_degrees,
        state,
    })
}

//! Logistic connection-probability model.
//!
//! The probability that a recommended pair (source, destination) connects is
//! a logistic function of three features computed from the current graph and
//! the population: the source's network size, the pair's common-connection
//! count, and how far apart the pair's covariates are. The same model is
//! queried twice per recommendation with independent noise: once to produce
//! ranking scores and once to decide whether a shown pair actually connects.

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::graph::{GraphError, SocialGraph};
use crate::population::Population;
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("candidate {candidate} is already connected to member {member}")]
    CandidateIsNeighbor { member: usize, candidate: usize },
    #[error("candidate list contains the source member {0}")]
    CandidateIsSource(usize),
    #[error("noise variance {0} must be non-negative")]
    InvalidNoiseVariance(f64),
    #[error("normalizer {name} = {value} invalid")]
    InvalidNormalizer { name: &'static str, value: f64 },
}

/// Coefficients of the logistic model plus the variance of its Gaussian
/// noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub noise_var: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            beta0: 0.0,
            beta1: 50.0,
            beta2: 50.0,
            beta3: -5.0,
            noise_var: 0.1,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.noise_var < 0.0 || self.noise_var.is_nan() {
            return Err(ScoringError::InvalidNoiseVariance(self.noise_var));
        }
        Ok(())
    }
}

/// Frozen scaling constants mapping raw features into [0, 1].
///
/// Degrees and common-connection counts divide by the member count; the
/// similarity range is estimated once on the initial population and kept
/// fixed so the score scale stays stationary as the graph grows. Values
/// outside the estimated range clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureNormalizers {
    pub network_size_divisor: f64,
    pub common_conn_divisor: f64,
    pub similarity_lo: f64,
    pub similarity_hi: f64,
}

impl FeatureNormalizers {
    pub fn new(
        network_size_divisor: f64,
        common_conn_divisor: f64,
        similarity_lo: f64,
        similarity_hi: f64,
    ) -> Result<Self, ScoringError> {
        if network_size_divisor <= 0.0 || network_size_divisor.is_nan() {
            return Err(ScoringError::InvalidNormalizer {
                name: "network_size_divisor",
                value: network_size_divisor,
            });
        }
        if common_conn_divisor <= 0.0 || common_conn_divisor.is_nan() {
            return Err(ScoringError::InvalidNormalizer {
                name: "common_conn_divisor",
                value: common_conn_divisor,
            });
        }
        if similarity_lo >= similarity_hi || similarity_lo.is_nan() || similarity_hi.is_nan() {
            return Err(ScoringError::InvalidNormalizer {
                name: "similarity_lo",
                value: similarity_lo,
            });
        }
        Ok(Self {
            network_size_divisor,
            common_conn_divisor,
            similarity_lo,
            similarity_hi,
        })
    }

    /// Estimates the similarity range as the min/max similarity over
    /// `pairs` random member pairs, with divisors set to the member count.
    pub fn estimate(
        population: &Population,
        pairs: usize,
        rng: &mut SimRng,
    ) -> Result<Self, ScoringError> {
        use rand::Rng;
        let n = population.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..pairs {
            let s = rng.gen_range(0..n);
            let mut d = rng.gen_range(0..n - 1);
            if d >= s {
                d += 1;
            }
            let sim = population.similarity(s, d);
            lo = lo.min(sim);
            hi = hi.max(sim);
        }
        Self::new(n as f64, n as f64, lo, hi)
    }
}

/// The three scaled model features, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    /// Source degree / divisor.
    pub network_size: f64,
    /// Common-connection count / divisor.
    pub common_conn: f64,
    /// Normalized covariate distance of the pair: 0 for the most similar
    /// pair in the estimation sample, 1 for the least similar. Encoding
    /// distance (rather than similarity) is what makes the negative default
    /// coefficient reward similar pairs.
    pub dissimilarity: f64,
}

/// Scaled features for the pair (s, d) against the current graph.
pub fn scaled_features(
    graph: &SocialGraph,
    population: &Population,
    normalizers: &FeatureNormalizers,
    s: usize,
    d: usize,
) -> Result<Features, ScoringError> {
    let network_size = f64::from(graph.degree(s)?) / normalizers.network_size_divisor;
    let common = f64::from(graph.common_connections(s, d)?) / normalizers.common_conn_divisor;
    let sim = population.similarity(s, d);
    let dissim =
        (normalizers.similarity_hi - sim) / (normalizers.similarity_hi - normalizers.similarity_lo);
    Ok(Features {
        network_size: network_size.clamp(0.0, 1.0),
        common_conn: common.clamp(0.0, 1.0),
        dissimilarity: dissim.clamp(0.0, 1.0),
    })
}

fn logistic(logit: f64) -> f64 {
    let p = 1.0 / (1.0 + (-logit).exp());
    // Keep the result strictly inside (0, 1) even for saturated logits.
    p.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

/// Connection probability for the given features and a fixed noise value.
pub fn connection_probability(features: &Features, params: &ScoringParams, eps: f64) -> f64 {
    let logit = params.beta0
        + params.beta1 * features.network_size
        + params.beta2 * features.common_conn
        + params.beta3 * features.dissimilarity
        + eps;
    logistic(logit)
}

/// Connection probability with noise freshly drawn from N(0, noise_var).
pub fn connection_probability_sampled(
    features: &Features,
    params: &ScoringParams,
    rng: &mut SimRng,
) -> f64 {
    connection_probability(features, params, sample_noise(params, rng))
}

pub fn sample_noise(params: &ScoringParams, rng: &mut SimRng) -> f64 {
    if params.noise_var == 0.0 {
        0.0
    } else {
        Normal::new(0.0, params.noise_var.sqrt())
            .expect("validated variance")
            .sample(rng)
    }
}

/// One ranking score per candidate, each with an independent fresh noise
/// draw. Candidates must be non-neighbours of `s` and must not contain `s`.
pub fn score_candidates(
    graph: &SocialGraph,
    population: &Population,
    params: &ScoringParams,
    normalizers: &FeatureNormalizers,
    s: usize,
    candidates: &[usize],
    rng: &mut SimRng,
) -> Result<Vec<f64>, ScoringError> {
    params.validate()?;
    let mut scores = Vec::with_capacity(candidates.len());
    for &d in candidates {
        if d == s {
            return Err(ScoringError::CandidateIsSource(s));
        }
        if graph.has_edge(s, d) {
            return Err(ScoringError::CandidateIsNeighbor {
                member: s,
                candidate: d,
            });
        }
        let features = scaled_features(graph, population, normalizers, s, d)?;
        scores.push(connection_probability_sampled(&features, params, rng));
    }
    Ok(scores)
}

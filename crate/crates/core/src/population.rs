//! Member groups and covariates.
//!
//! Members split into a majority and a minority group. Each member carries a
//! fixed real covariate vector drawn around a group mean; the similarity
//! between two members is the negative Euclidean distance between their
//! covariates. Populations are immutable after construction.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::rng::SimRng;

/// Demographic group label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Majority,
    Minority,
}

impl Group {
    /// Index into two-element per-group arrays (majority first).
    pub fn index(self) -> usize {
        match self {
            Group::Majority => 0,
            Group::Minority => 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PopulationError {
    #[error("minority rate {0} outside (0, 0.5]")]
    InvalidMinorityRate(f64),
    #[error("covariate variance {0} must be positive")]
    InvalidVariance(f64),
    #[error("population needs at least 2 members, got {0}")]
    TooSmall(usize),
}

/// Immutable member roster: group labels, covariates and the group means
/// the covariates were drawn around.
#[derive(Debug, Clone)]
pub struct Population {
    pub group: Vec<Group>,
    /// Row-major `n x dim` covariates.
    pub covariates: Vec<f64>,
    pub dim: usize,
    pub group_means: [Vec<f64>; 2],
}

impl Population {
    /// Draws fresh group means uniformly from the unit hypercube, then
    /// builds the population around them.
    pub fn init(
        n: usize,
        minority_rate: f64,
        dim: usize,
        covariate_var: f64,
        rng: &mut SimRng,
    ) -> Result<Self, PopulationError> {
        let means = Self::draw_group_means(dim, rng);
        Self::init_with_means(n, minority_rate, means, covariate_var, rng)
    }

    /// Group means from U([0,1]^dim), majority first.
    pub fn draw_group_means(dim: usize, rng: &mut SimRng) -> [Vec<f64>; 2] {
        let draw = |rng: &mut SimRng| (0..dim).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>();
        let majority = draw(rng);
        let minority = draw(rng);
        [majority, minority]
    }

    /// Builds a population around fixed group means. Exactly
    /// `round(n * minority_rate)` members are minority; which members they
    /// are is decided by a seeded shuffle so ids do not encode groups.
    pub fn init_with_means(
        n: usize,
        minority_rate: f64,
        group_means: [Vec<f64>; 2],
        covariate_var: f64,
        rng: &mut SimRng,
    ) -> Result<Self, PopulationError> {
        if n < 2 {
            return Err(PopulationError::TooSmall(n));
        }
        if minority_rate <= 0.0 || minority_rate > 0.5 || minority_rate.is_nan() {
            return Err(PopulationError::InvalidMinorityRate(minority_rate));
        }
        if covariate_var <= 0.0 || covariate_var.is_nan() {
            return Err(PopulationError::InvalidVariance(covariate_var));
        }
        let dim = group_means[0].len();
        assert_eq!(dim, group_means[1].len(), "group mean dimensions differ");

        let minority_count = ((n as f64) * minority_rate).round() as usize;
        let mut group = vec![Group::Majority; n];
        let mut order: Vec<usize> = (0..n).collect();
        // Fisher-Yates with the population stream.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for &member in order.iter().take(minority_count) {
            group[member] = Group::Minority;
        }

        let noise = Normal::new(0.0, covariate_var.sqrt()).expect("positive variance");
        let mut covariates = Vec::with_capacity(n * dim);
        for g in &group {
            let mean = &group_means[g.index()];
            for coord in mean.iter().take(dim) {
                covariates.push(coord + noise.sample(rng));
            }
        }

        Ok(Self {
            group,
            covariates,
            dim,
            group_means,
        })
    }

    pub fn len(&self) -> usize {
        self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.is_empty()
    }

    pub fn covariates_of(&self, member: usize) -> &[f64] {
        &self.covariates[member * self.dim..(member + 1) * self.dim]
    }

    pub fn group_of(&self, member: usize) -> Group {
        self.group[member]
    }

    /// (majority count, minority count).
    pub fn group_sizes(&self) -> (usize, usize) {
        let minority = self
            .group
            .iter()
            .filter(|g| **g == Group::Minority)
            .count();
        (self.group.len() - minority, minority)
    }

    pub fn members_of(&self, which: Group) -> impl Iterator<Item = usize> + '_ {
        self.group
            .iter()
            .enumerate()
            .filter(move |(_, g)| **g == which)
            .map(|(i, _)| i)
    }

    /// Negative Euclidean distance between the two members' covariates.
    /// Symmetric, non-positive, zero only for identical covariates.
    pub fn similarity(&self, s: usize, d: usize) -> f64 {
        let xs = self.covariates_of(s);
        let xd = self.covariates_of(d);
        let sq: f64 = xs
            .iter()
            .zip(xd.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        -sq.sqrt()
    }

    /// CSV export: member_id, group, x_0..x_{dim-1}.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "member_id,group")?;
        for j in 0..self.dim {
            write!(out, ",x_{j}")?;
        }
        writeln!(out)?;
        for (i, g) in self.group.iter().enumerate() {
            let tag = match g {
                Group::Majority => "majority",
                Group::Minority => "minority",
            };
            write!(out, "{i},{tag}")?;
            for x in self.covariates_of(i) {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

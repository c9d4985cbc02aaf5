//! Dynamic undirected social graph.
//!
//! Adjacency is a dense bit matrix (the simulator works at n in the low
//! thousands, where a megabit of rows beats any sparse structure), with a
//! per-member degree cache. Common-neighbour counts come from row
//! intersections on demand; nothing materializes the squared adjacency.

use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::population::Group;
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("member id {id} out of range for n = {n}")]
    MemberOutOfRange { id: usize, n: usize },
    #[error("self-loop requested at member {0}")]
    SelfLoop(usize),
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("graph needs at least 2 members, got {0}")]
    TooSmall(usize),
    #[error("group labels length {got} does not match n = {n}")]
    GroupLengthMismatch { got: usize, n: usize },
}

/// Stochastic block model probabilities for the three group combinations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub p_within_majority: f64,
    pub p_within_minority: f64,
    pub p_cross: f64,
}

impl SbmParams {
    pub fn new(
        p_within_majority: f64,
        p_within_minority: f64,
        p_cross: f64,
    ) -> Result<Self, GraphError> {
        for p in [p_within_majority, p_within_minority, p_cross] {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(GraphError::InvalidProbability(p));
            }
        }
        Ok(Self {
            p_within_majority,
            p_within_minority,
            p_cross,
        })
    }

    fn pair_probability(&self, a: Group, b: Group) -> f64 {
        match (a, b) {
            (Group::Majority, Group::Majority) => self.p_within_majority,
            (Group::Minority, Group::Minority) => self.p_within_minority,
            _ => self.p_cross,
        }
    }
}

/// Symmetric unweighted adjacency over `n` members, no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    degrees: Vec<u32>,
}

impl SocialGraph {
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let words_per_row = n.div_ceil(64);
        Ok(Self {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
            degrees: vec![0; n],
        })
    }

    /// Each unordered pair holds an edge independently with the probability
    /// selected by the pair's group combination.
    pub fn sbm_init(
        n: usize,
        groups: &[Group],
        params: &SbmParams,
        rng: &mut SimRng,
    ) -> Result<Self, GraphError> {
        if groups.len() != n {
            return Err(GraphError::GroupLengthMismatch {
                got: groups.len(),
                n,
            });
        }
        // Re-validate: params may have been built literally.
        let params = SbmParams::new(
            params.p_within_majority,
            params.p_within_minority,
            params.p_cross,
        )?;
        let mut graph = Self::empty(n)?;
        for i in 0..n {
            for j in (i + 1)..n {
                let p = params.pair_probability(groups[i], groups[j]);
                if rng.gen::<f64>() < p {
                    graph.add_edge(i, j)?;
                }
            }
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_member(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.n {
            return Err(GraphError::MemberOutOfRange { id: v, n: self.n });
        }
        Ok(())
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words_per_row..(v + 1) * self.words_per_row]
    }

    /// Unchecked adjacency query; ids must be in range.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> Result<u32, GraphError> {
        self.check_member(v)?;
        Ok(self.degrees[v])
    }

    /// Number of members adjacent to both `s` and `d`: the (s, d) entry of
    /// the squared adjacency matrix, computed by row intersection.
    pub fn common_connections(&self, s: usize, d: usize) -> Result<u32, GraphError> {
        self.check_member(s)?;
        self.check_member(d)?;
        if s == d {
            return Err(GraphError::SelfLoop(s));
        }
        let a = self.row(s);
        let b = self.row(d);
        Ok(a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x & y).count_ones())
            .sum())
    }

    /// Inserts the undirected edge {i, j}. Idempotent: inserting an existing
    /// edge leaves the graph unchanged.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check_member(i)?;
        self.check_member(j)?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if self.has_edge(i, j) {
            return Ok(());
        }
        self.bits[i * self.words_per_row + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words_per_row + i / 64] |= 1 << (i % 64);
        self.degrees[i] += 1;
        self.degrees[j] += 1;
        Ok(())
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.row(v);
        row.iter().enumerate().flat_map(move |(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    /// Members not adjacent to `v`, excluding `v` itself, ascending.
    pub fn non_neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&d| d != v && !self.has_edge(v, d))
            .collect()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().map(|&d| u64::from(d)).sum()
    }

    pub fn edge_count(&self) -> u64 {
        self.total_degree() / 2
    }

    /// Edge-list export: header line `# n=<N>`, then one `i j` pair per
    /// line with i < j.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# n={}", self.n)?;
        for i in 0..self.n {
            for j in self.neighbors(i) {
                if i < j {
                    writeln!(out, "{i} {j}")?;
                }
            }
        }
        Ok(())
    }

    /// Parses the `write_edge_list` format.
    pub fn read_edge_list(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty edge list")?;
        let n: usize = header
            .strip_prefix("# n=")
            .ok_or_else(|| format!("bad header: {header}"))?
            .trim()
            .parse()
            .map_err(|e| format!("bad member count: {e}"))?;
        let mut graph = Self::empty(n).map_err(|e| e.to_string())?;
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let i: usize = it
                .next()
                .ok_or("missing endpoint")?
                .parse()
                .map_err(|e| format!("bad endpoint: {e}"))?;
            let j: usize = it
                .next()
                .ok_or("missing endpoint")?
                .parse()
                .map_err(|e| format!("bad endpoint: {e}"))?;
            graph.add_edge(i, j).map_err(|e| e.to_string())?;
        }
        Ok(graph)
    }

    /// Symmetry, no self-loops, degree-cache consistency. Used by tests and
    /// debug assertions after mutations.
    pub fn check_invariants(&self) -> Result<(), String> {
        for i in 0..self.n {
            if self.has_edge(i, i) {
                return Err(format!("self-loop at {i}"));
            }
            let popcount: u32 = self.row(i).iter().map(|w| w.count_ones()).sum();
            if popcount != self.degrees[i] {
                return Err(format!(
                    "degree cache mismatch at {i}: cache {} vs rows {popcount}",
                    self.degrees[i]
                ));
            }
            for j in 0..self.n {
                if self.has_edge(i, j) != self.has_edge(j, i) {
                    return Err(format!("asymmetry at ({i}, {j})"));
                }
            }
        }
        Ok(())
    }
}

//! Per-step outcome metrics and their CSV form.
//!
//! Everything the report layer plots comes from here: the gap in average
//! network sizes, degree shares, rolling averages of new-connection shares,
//! per-group degree histograms and the uniform-growth counterfactual.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graph::SocialGraph;
use crate::population::{Group, Population};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("group {0:?} has no members")]
    EmptyGroup(Group),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("rolling window must be at least 1")]
    ZeroWindow,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("csv parse error at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// One simulation step's worth of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub t: u32,
    pub mean_degree_majority: f64,
    pub mean_degree_minority: f64,
    pub abs_gap: f64,
    pub majority_degree_share: f64,
    /// New connections this step whose destination member is majority.
    pub new_conn_majority_dest_count: u32,
    /// Endpoints of new edges this step that belong to majority members
    /// (each edge contributes both endpoints).
    pub new_degree_majority_count: u32,
    pub new_conn_total: u32,
    /// Sum over this step's queries of the majority exposure share.
    pub expected_exposure_majority_sum: f64,
    /// Number of queries contributing to the sum above.
    pub expected_exposure_total: u32,
    pub constraints_dropped_count: u32,
}

/// Ordered per-step records for one (intervention, run) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub run: u32,
    pub intervention: String,
    pub records: Vec<MetricsRecord>,
}

/// Absolute difference between the groups' mean degrees.
pub fn gap(graph: &SocialGraph, population: &Population) -> Result<f64, MetricsError> {
    let (majority, minority) = mean_degrees(graph, population)?;
    Ok((majority - minority).abs())
}

/// (majority mean degree, minority mean degree).
pub fn mean_degrees(
    graph: &SocialGraph,
    population: &Population,
) -> Result<(f64, f64), MetricsError> {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (v, g) in population.group.iter().enumerate() {
        sums[g.index()] += f64::from(graph.degrees()[v]);
        counts[g.index()] += 1;
    }
    if counts[0] == 0 {
        return Err(MetricsError::EmptyGroup(Group::Majority));
    }
    if counts[1] == 0 {
        return Err(MetricsError::EmptyGroup(Group::Minority));
    }
    Ok((sums[0] / counts[0] as f64, sums[1] / counts[1] as f64))
}

/// Majority fraction of all degrees.
pub fn majority_degree_share(
    graph: &SocialGraph,
    population: &Population,
) -> Result<f64, MetricsError> {
    let mut majority = 0u64;
    let mut total = 0u64;
    for (v, g) in population.group.iter().enumerate() {
        let d = u64::from(graph.degrees()[v]);
        total += d;
        if *g == Group::Majority {
            majority += d;
        }
    }
    if total == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    Ok(majority as f64 / total as f64)
}

/// Rolling mean with warm-up: element i averages the last
/// `min(i + 1, window)` values.
pub fn rolling_mean(series: &[f64], window: usize) -> Result<Vec<f64>, MetricsError> {
    if window == 0 {
        return Err(MetricsError::ZeroWindow);
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        let len = (i + 1).min(window);
        out.push(sum / len as f64);
    }
    Ok(out)
}

/// Exact (degree, count) pairs per group for degrees >= 1, plus the count
/// of zero-degree members per group.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHistogram {
    /// Ascending (degree, member count) pairs, one vector per group
    /// (majority first).
    pub by_group: [Vec<(u32, u64)>; 2],
    pub zero_degree: [u64; 2],
}

pub fn degree_histogram(degrees: &[u32], groups: &[Group]) -> DegreeHistogram {
    use std::collections::BTreeMap;
    let mut maps: [BTreeMap<u32, u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut zero = [0u64; 2];
    for (&d, g) in degrees.iter().zip(groups) {
        if d == 0 {
            zero[g.index()] += 1;
        } else {
            *maps[g.index()].entry(d).or_insert(0) += 1;
        }
    }
    DegreeHistogram {
        by_group: maps.map(|m| m.into_iter().collect()),
        zero_degree: zero,
    }
}

/// Histogram of the current graph's degrees, split by group.
pub fn degree_histogram_loglog(graph: &SocialGraph, population: &Population) -> DegreeHistogram {
    degree_histogram(graph.degrees(), &population.group)
}

/// Least-squares slope of log(count) against log(degree) over degrees in
/// `[k_lo, k_hi]`, using geometric bins to tame tail noise. Returns None if
/// fewer than three bins have mass. For a power-law tail with exponent b
/// the slope approaches -b.
pub fn tail_slope(hist: &[(u32, u64)], k_lo: u32, k_hi: u32, bins_per_decade: usize) -> Option<f64> {
    if k_lo == 0 || k_hi <= k_lo || bins_per_decade == 0 {
        return None;
    }
    let ratio = 10f64.powf(1.0 / bins_per_decade as f64);
    let mut edges = vec![k_lo as f64];
    while *edges.last().unwrap() < k_hi as f64 {
        let next = edges.last().unwrap() * ratio;
        edges.push(next);
    }
    let mut points = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mass: u64 = hist
            .iter()
            .filter(|(k, _)| (f64::from(*k) >= lo) && (f64::from(*k) < hi))
            .map(|(_, c)| *c)
            .sum();
        if mass > 0 {
            let density = mass as f64 / (hi - lo);
            let center = (lo * hi).sqrt();
            points.push((center.ln(), density.ln()));
        }
    }
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Per-member final degree had each group's total growth been spread
/// evenly over its members.
pub fn counterfactual_uniform_growth(
    initial: &[u32],
    finals: &[u32],
    groups: &[Group],
) -> Result<Vec<f64>, MetricsError> {
    if initial.len() != finals.len() {
        return Err(MetricsError::LengthMismatch(initial.len(), finals.len()));
    }
    if initial.len() != groups.len() {
        return Err(MetricsError::LengthMismatch(initial.len(), groups.len()));
    }
    let mut growth = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for ((a, b), g) in initial.iter().zip(finals).zip(groups) {
        growth[g.index()] += f64::from(*b) - f64::from(*a);
        counts[g.index()] += 1;
    }
    let per_member = [
        if counts[0] > 0 { growth[0] / counts[0] as f64 } else { 0.0 },
        if counts[1] > 0 { growth[1] / counts[1] as f64 } else { 0.0 },
    ];
    Ok(initial
        .iter()
        .zip(groups)
        .map(|(a, g)| f64::from(*a) + per_member[g.index()])
        .collect())
}

impl MetricsRecord {
    pub const CSV_HEADER: &'static str = "t,mean_degree_majority,mean_degree_minority,abs_gap,majority_degree_share,new_conn_majority_dest_count,new_degree_majority_count,new_conn_total,expected_exposure_majority_sum,expected_exposure_total,constraints_dropped_count";

    fn write_row<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.mean_degree_majority,
            self.mean_degree_minority,
            self.abs_gap,
            self.majority_degree_share,
            self.new_conn_majority_dest_count,
            self.new_degree_majority_count,
            self.new_conn_total,
            self.expected_exposure_majority_sum,
            self.expected_exposure_total,
            self.constraints_dropped_count
        )
    }

    fn parse_row(line: &str, line_no: usize) -> Result<Self, MetricsError> {
        let err = |reason: String| MetricsError::Csv {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(err(format!("expected 11 fields, got {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("{e}: {s:?}"))
        }
        Ok(Self {
            t: num(fields[0]).map_err(&err)?,
            mean_degree_majority: num(fields[1]).map_err(&err)?,
            mean_degree_minority: num(fields[2]).map_err(&err)?,
            abs_gap: num(fields[3]).map_err(&err)?,
            majority_degree_share: num(fields[4]).map_err(&err)?,
            new_conn_majority_dest_count: num(fields[5]).map_err(&err)?,
            new_degree_majority_count: num(fields[6]).map_err(&err)?,
            new_conn_total: num(fields[7]).map_err(&err)?,
            expected_exposure_majority_sum: num(fields[8]).map_err(&err)?,
            expected_exposure_total: num(fields[9]).map_err(&err)?,
            constraints_dropped_count: num(fields[10]).map_err(&err)?,
        })
    }
}

impl MetricsSeries {
    /// CSV with a comment header carrying provenance. Rolling averages in
    /// reports warm up over the available prefix, noted here so downstream
    /// readers are not surprised by the first window.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        config_hash: u64,
        seed: u64,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "# intervention={} run={} seed={seed} config_hash={config_hash:016x} rolling_warmup=prefix",
            self.intervention, self.run
        )?;
        writeln!(out, "{}", MetricsRecord::CSV_HEADER)?;
        for r in &self.records {
            r.write_row(&mut out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, MetricsError> {
        let mut run = 0u32;
        let mut intervention = String::new();
        let mut records = Vec::new();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| MetricsError::Csv {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for token in comment.split_whitespace() {
                    if let Some(v) = token.strip_prefix("intervention=") {
                        intervention = v.to_string();
                    } else if let Some(v) = token.strip_prefix("run=") {
                        run = v.parse().map_err(|e| MetricsError::Csv {
                            line: idx + 1,
                            reason: format!("bad run: {e}"),
                        })?;
                    }
                }
                continue;
            }
            if line == MetricsRecord::CSV_HEADER {
                saw_header = true;
                continue;
            }
            if !saw_header {
                return Err(MetricsError::Csv {
                    line: idx + 1,
                    reason: "data before header".into(),
                });
            }
            records.push(MetricsRecord::parse_row(line, idx + 1)?);
        }
        Ok(Self {
            run,
            intervention,
            records,
        })
    }
}

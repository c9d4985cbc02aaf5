//! The `report` subcommand: aggregates per-(arm, run) metrics into tidy
//! per-figure CSVs (mean over runs with standard errors) and simple SVG
//! charts. Missing arms or runs produce a partial report with a warning.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use fairlink::graph::SocialGraph;
use fairlink::metrics::{counterfactual_uniform_growth, MetricsSeries};
use fairlink::population::Group;

use crate::config::FlatConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::read_simulate_manifest;
use crate::svg::{self, Series};

pub fn report(flat: &FlatConfig, in_dir: &Path, out_dir: &Path) -> CliResult<()> {
    let window = flat.report_window()?;
    let manifest = in_dir.join("manifest.txt");
    if !manifest.is_file() {
        return Err(CliError::runtime(format!(
            "{} is not a simulate output directory (no manifest.txt)",
            in_dir.display()
        )));
    }
    let (arms, runs) = read_simulate_manifest(&manifest)?;
    fs::create_dir_all(out_dir)?;

    let mut loaded: Vec<(String, Vec<(u32, MetricsSeries)>)> = Vec::new();
    for arm in &arms {
        let mut series = Vec::new();
        for run in 0..runs {
            let path = in_dir
                .join(format!("run_{run:03}"))
                .join(arm)
                .join("metrics.csv");
            match fs::File::open(&path) {
                Ok(file) => {
                    let parsed = MetricsSeries::read_csv(BufReader::new(file))
                        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
                    series.push((run, parsed));
                }
                Err(_) => eprintln!("warning: missing {}; partial report", path.display()),
            }
        }
        if series.is_empty() {
            eprintln!("warning: no runs found for arm {arm}; skipping");
        } else {
            loaded.push((arm.clone(), series));
        }
    }
    if loaded.is_empty() {
        return Err(CliError::runtime("no metrics found to report on"));
    }

    write_mean_figure(out_dir, "fig_gap.csv", &loaded, |r| Some(r.abs_gap))?;
    write_mean_figure(out_dir, "fig_degree_share.csv", &loaded, |r| {
        r.majority_degree_share.is_finite().then_some(r.majority_degree_share)
    })?;
    write_rolling_figure(out_dir, "fig_dest_share_rolling.csv", &loaded, window, |r| {
        (
            f64::from(r.new_conn_majority_dest_count),
            f64::from(r.new_conn_total),
        )
    })?;
    write_rolling_figure(
        out_dir,
        "fig_new_degree_share_rolling.csv",
        &loaded,
        window,
        |r| {
            (
                f64::from(r.new_degree_majority_count),
                2.0 * f64::from(r.new_conn_total),
            )
        },
    )?;
    write_summary(out_dir, &loaded)?;
    write_histograms_and_counterfactuals(in_dir, out_dir, &loaded)?;
    write_line_charts(out_dir, &loaded)?;
    Ok(())
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

fn write_mean_figure(
    out_dir: &Path,
    name: &str,
    loaded: &[(String, Vec<(u32, MetricsSeries)>)],
    value: impl Fn(&fairlink::metrics::MetricsRecord) -> Option<f64>,
) -> CliResult<()> {
    let mut csv = String::from("arm,t,mean,stderr,runs\n");
    for (arm, series) in loaded {
        let t_len = series.iter().map(|(_, s)| s.records.len()).min().unwrap();
        for t in 0..t_len {
            let vals: Vec<f64> = series
                .iter()
                .filter_map(|(_, s)| value(&s.records[t]))
                .collect();
            if vals.is_empty() {
                csv.push_str(&format!("{arm},{t},,,0\n"));
            } else {
                let (mean, se) = mean_stderr(&vals);
                csv.push_str(&format!("{arm},{t},{mean},{se},{}\n", vals.len()));
            }
        }
    }
    fs::write(out_dir.join(name), csv)?;
    Ok(())
}

/// Rolling share of a (numerator, denominator) pair: the ratio of rolling
/// sums over the window, undefined while the window denominator is zero.
fn rolling_ratio(
    records: &[fairlink::metrics::MetricsRecord],
    window: usize,
    parts: &impl Fn(&fairlink::metrics::MetricsRecord) -> (f64, f64),
) -> Vec<Option<f64>> {
    let mut numer = 0.0;
    let mut denom = 0.0;
    let mut out = Vec::with_capacity(records.len());
    for i in 0..records.len() {
        let (n, d) = parts(&records[i]);
        numer += n;
        denom += d;
        if i >= window {
            let (n_old, d_old) = parts(&records[i - window]);
            numer -= n_old;
            denom -= d_old;
        }
        out.push((denom > 0.0).then(|| numer / denom));
    }
    out
}

fn write_rolling_figure(
    out_dir: &Path,
    name: &str,
    loaded: &[(String, Vec<(u32, MetricsSeries)>)],
    window: usize,
    parts: impl Fn(&fairlink::metrics::MetricsRecord) -> (f64, f64),
) -> CliResult<()> {
    let mut csv = String::from("arm,t,mean,stderr,runs\n");
    for (arm, series) in loaded {
        let rolled: Vec<Vec<Option<f64>>> = series
            .iter()
            .map(|(_, s)| rolling_ratio(&s.records, window, &parts))
            .collect();
        let t_len = rolled.iter().map(Vec::len).min().unwrap();
        for t in 0..t_len {
            let vals: Vec<f64> = rolled.iter().filter_map(|r| r[t]).collect();
            if vals.is_empty() {
                csv.push_str(&format!("{arm},{t},,,0\n"));
            } else {
                let (mean, se) = mean_stderr(&vals);
                csv.push_str(&format!("{arm},{t},{mean},{se},{}\n", vals.len()));
            }
        }
    }
    fs::write(out_dir.join(name), csv)?;
    Ok(())
}

fn write_summary(
    out_dir: &Path,
    loaded: &[(String, Vec<(u32, MetricsSeries)>)],
) -> CliResult<()> {
    let mut csv = String::from(
        "arm,majority_exposure_share,queries,constraints_dropped,terminal_gap_mean,terminal_gap_stderr\n",
    );
    for (arm, series) in loaded {
        let mut share_sum = 0.0;
        let mut queries = 0u64;
        let mut dropped = 0u64;
        let mut terminal = Vec::new();
        for (_, s) in series {
            for r in &s.records {
                share_sum += r.expected_exposure_majority_sum;
                queries += u64::from(r.expected_exposure_total);
                dropped += u64::from(r.constraints_dropped_count);
            }
            terminal.push(s.records.last().unwrap().abs_gap);
        }
        let share = if queries > 0 {
            (share_sum / queries as f64).to_string()
        } else {
            String::new()
        };
        let (gap_mean, gap_se) = mean_stderr(&terminal);
        csv.push_str(&format!(
            "{arm},{share},{queries},{dropped},{gap_mean},{gap_se}\n"
        ));
    }
    fs::write(out_dir.join("summary.csv"), csv)?;
    Ok(())
}

fn load_groups(path: &Path) -> CliResult<Vec<Group>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let mut groups = Vec::new();
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let _id = fields.next();
        match fields.next() {
            Some("majority") => groups.push(Group::Majority),
            Some("minority") => groups.push(Group::Minority),
            other => {
                return Err(CliError::runtime(format!(
                    "{}: bad group field {other:?}",
                    path.display()
                )))
            }
        }
    }
    Ok(groups)
}

fn load_degrees(path: &Path) -> CliResult<Vec<u32>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let graph = SocialGraph::read_edge_list(&text)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok(graph.degrees().to_vec())
}

fn write_histograms_and_counterfactuals(
    in_dir: &Path,
    out_dir: &Path,
    loaded: &[(String, Vec<(u32, MetricsSeries)>)],
) -> CliResult<()> {
    let mut hist_csv = String::from("arm,group,degree,count\n");
    let mut loglog_csv = String::from(
        "arm,run,member_id,group,initial_degree,final_degree,counterfactual_final\n",
    );
    for (arm, series) in loaded {
        let mut counts: [BTreeMap<u32, u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for (run, _) in series {
            let run_dir = in_dir.join(format!("run_{run:03}"));
            let groups = load_groups(&run_dir.join("population.csv"))?;
            let initial = load_degrees(&run_dir.join("initial_graph.edges"))?;
            let final_path = run_dir.join(arm).join("final_graph.edges");
            if !final_path.is_file() {
                eprintln!("warning: missing {}; partial report", final_path.display());
                continue;
            }
            let finals = load_degrees(&final_path)?;
            for (v, &d) in finals.iter().enumerate() {
                *counts[groups[v].index()].entry(d).or_insert(0) += 1;
            }
            let counterfactual = counterfactual_uniform_growth(&initial, &finals, &groups)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            for v in 0..groups.len() {
                let tag = match groups[v] {
                    Group::Majority => "majority",
                    Group::Minority => "minority",
                };
                loglog_csv.push_str(&format!(
                    "{arm},{run},{v},{tag},{},{},{}\n",
                    initial[v], finals[v], counterfactual[v]
                ));
            }
        }
        for (idx, tag) in [(0, "majority"), (1, "minority")] {
            for (degree, count) in &counts[idx] {
                hist_csv.push_str(&format!("{arm},{tag},{degree},{count}\n"));
            }
        }
    }
    fs::write(out_dir.join("fig_histogram.csv"), hist_csv)?;
    fs::write(out_dir.join("fig_loglog_counterfactual.csv"), loglog_csv)?;
    Ok(())
}

type RecordValue = fn(&fairlink::metrics::MetricsRecord) -> f64;

fn write_line_charts(
    out_dir: &Path,
    loaded: &[(String, Vec<(u32, MetricsSeries)>)],
) -> CliResult<()> {
    let figures: [(&str, &str, RecordValue); 2] = [
        ("fig_gap.svg", "Absolute gap in mean network size", |r| {
            r.abs_gap
        }),
        (
            "fig_degree_share.svg",
            "Majority share of all degrees",
            |r| r.majority_degree_share,
        ),
    ];
    for (name, title, value) in figures {
        let series: Vec<Series> = loaded
            .iter()
            .map(|(arm, runs)| {
                let t_len = runs.iter().map(|(_, s)| s.records.len()).min().unwrap();
                let points = (0..t_len)
                    .map(|t| {
                        let mean = runs
                            .iter()
                            .map(|(_, s)| value(&s.records[t]))
                            .sum::<f64>()
                            / runs.len() as f64;
                        (t as f64, mean)
                    })
                    .collect();
                Series { label: arm, points }
            })
            .collect();
        fs::write(out_dir.join(name), svg::line_chart(title, "step", title, &series))?;
    }
    Ok(())
}

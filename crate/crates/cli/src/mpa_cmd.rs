//! The urn-model subcommands: `mpa-simulate` trajectories and the
//! `mpa-limits` analytic heatmap grid.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use fairlink::mpa::{baseline_alpha_limit, dp_alpha_limit, mpa_run, MpaConfig};
use fairlink::rng::{mix_seed, salt};

use crate::config::FlatConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::write_flat_manifest;
use crate::svg;

pub fn mpa_simulate(flat: &FlatConfig, out_dir: &Path) -> CliResult<()> {
    let base = flat.mpa_config()?;
    let runs = flat.mpa_runs()?;
    fs::create_dir_all(out_dir)?;

    let outputs: Vec<String> = (0..runs)
        .into_par_iter()
        .map(|k| -> CliResult<String> {
            let cfg = MpaConfig {
                seed: mix_seed(base.seed, &[salt::RUN, u64::from(k)]),
                ..base.clone()
            };
            let run = mpa_run(&cfg).map_err(|e| CliError::runtime(e.to_string()))?;
            let name = format!("mpa_{}_run_{k:03}.csv", base.variant.tag());
            let mut text = format!(
                "# variant={} r={} p0={} p1={} d0={} seed={} empty_group_draws={} guard_steps={}\nt,alpha\n",
                base.variant.tag(),
                base.minority_rate,
                base.p0,
                base.p1,
                base.d0,
                cfg.seed,
                run.state.empty_group_draws,
                run.state.guard_steps,
            );
            for (t, alpha) in &run.trajectory {
                text.push_str(&format!("{t},{alpha}\n"));
            }
            fs::write(out_dir.join(&name), text)?;
            Ok(name)
        })
        .collect::<CliResult<Vec<_>>>()?;

    write_flat_manifest(
        &out_dir.join("manifest.txt"),
        "mpa-simulate",
        flat,
        &[
            ("variant".into(), base.variant.tag().into()),
            ("runs".into(), runs.to_string()),
            ("base_seed".into(), base.seed.to_string()),
        ],
        &outputs,
    )
}

pub fn mpa_limits(flat: &FlatConfig, out_dir: &Path) -> CliResult<()> {
    let (r, resolution) = flat.limits_params()?;
    fs::create_dir_all(out_dir)?;

    let points: Vec<f64> = (1..=resolution)
        .map(|i| i as f64 / (resolution + 1) as f64)
        .collect();

    let mut csv = String::from("p0,p1,alpha_baseline,alpha_dp,alpha_dp_minus_baseline_distance_to_r\n");
    let mut baseline_cells = vec![vec![f64::NAN; resolution]; resolution];
    let mut dp_cells = vec![vec![f64::NAN; resolution]; resolution];
    let mut delta_cells = vec![vec![f64::NAN; resolution]; resolution];
    for (i, &p0) in points.iter().enumerate() {
        for (j, &p1) in points.iter().enumerate() {
            let baseline = baseline_alpha_limit(r, p0, p1).ok();
            let dp = dp_alpha_limit(r, p0, p1).ok();
            let delta = match (baseline, dp) {
                (Some(b), Some(d)) => Some((d - r).abs() - (b - r).abs()),
                _ => None,
            };
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{p0},{p1},{},{},{}\n",
                fmt(baseline),
                fmt(dp),
                fmt(delta)
            ));
            baseline_cells[i][j] = baseline.unwrap_or(f64::NAN);
            dp_cells[i][j] = dp.unwrap_or(f64::NAN);
            delta_cells[i][j] = delta.unwrap_or(f64::NAN);
        }
    }
    fs::write(out_dir.join("heatmap.csv"), &csv)?;

    let figures = [
        ("limit_baseline.svg", "Limiting minority degree share (baseline)", &baseline_cells),
        ("limit_dp.svg", "Limiting minority degree share (parity intervention)", &dp_cells),
        ("limit_improvement.svg", "Distance-to-rate change (parity minus baseline)", &delta_cells),
    ];
    let mut outputs = vec!["heatmap.csv".to_string()];
    for (name, title, cells) in figures {
        fs::write(out_dir.join(name), svg::heatmap(title, &points, &points, cells))?;
        outputs.push(name.to_string());
    }

    write_flat_manifest(
        &out_dir.join("manifest.txt"),
        "mpa-limits",
        flat,
        &[
            ("r".into(), r.to_string()),
            ("resolution".into(), resolution.to_string()),
        ],
        &outputs,
    )
}

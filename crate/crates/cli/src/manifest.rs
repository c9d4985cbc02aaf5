//! Run manifests: everything needed to reproduce an output directory
//! byte for byte (plus informational timestamps).

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fairlink::population::Population;
use fairlink::rng::{fnv1a64, salt, stream};
use fairlink::simulator::SimConfig;

use crate::config::FlatConfig;
use crate::error::CliResult;

pub fn config_hash(flat: &FlatConfig) -> u64 {
    fnv1a64(flat.to_text().as_bytes())
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn float_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Manifest for a `simulate` invocation.
pub fn write_simulate_manifest(
    path: &Path,
    flat: &FlatConfig,
    config: &SimConfig,
    arms: &[&str],
    outputs: &[String],
) -> CliResult<()> {
    let mut out = String::new();
    out.push_str("# fairlink run manifest\n");
    out.push_str("command = simulate\n");
    out.push_str(&format!("code_version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("created_unix = {}\n", timestamp()));
    out.push_str(&format!("config_hash = {:016x}\n", config_hash(flat)));
    out.push_str(&format!("base_seed = {}\n", config.base_seed));
    out.push_str(&format!("runs = {}\n", config.runs));
    out.push_str(&format!("arms = {}\n", arms.join(",")));
    for run in 0..config.runs {
        out.push_str(&format!("run_seed.{run} = {}\n", config.run_seed(run)));
    }
    // Group means are suite-level state: all arms and runs share them.
    let means = Population::draw_group_means(
        config.covariate_dim,
        &mut stream(config.base_seed, &[salt::GROUP_MEANS]),
    );
    out.push_str(&format!("group_means.majority = {}\n", float_list(&means[0])));
    out.push_str(&format!("group_means.minority = {}\n", float_list(&means[1])));
    for line in flat.to_text().lines() {
        out.push_str(&format!("config.{line}\n"));
    }
    for file in outputs {
        out.push_str(&format!("output = {file}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Manifest for `mpa-simulate` and `mpa-limits`.
pub fn write_flat_manifest(
    path: &Path,
    command: &str,
    flat: &FlatConfig,
    extra: &[(String, String)],
    outputs: &[String],
) -> CliResult<()> {
    let mut out = String::new();
    out.push_str("# fairlink run manifest\n");
    out.push_str(&format!("command = {command}\n"));
    out.push_str(&format!("code_version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("created_unix = {}\n", timestamp()));
    out.push_str(&format!("config_hash = {:016x}\n", config_hash(flat)));
    for (k, v) in extra {
        out.push_str(&format!("{k} = {v}\n"));
    }
    for line in flat.to_text().lines() {
        out.push_str(&format!("config.{line}\n"));
    }
    for file in outputs {
        out.push_str(&format!("output = {file}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads the `arms` and `runs` entries back out of a simulate manifest.
pub fn read_simulate_manifest(path: &Path) -> CliResult<(Vec<String>, u32)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        crate::error::CliError::runtime(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut arms = Vec::new();
    let mut runs = 0u32;
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("arms = ") {
            arms = v.split(',').map(str::to_string).collect();
        } else if let Some(v) = line.strip_prefix("runs = ") {
            runs = v.trim().parse().map_err(|e| {
                crate::error::CliError::runtime(format!("bad runs in manifest: {e}"))
            })?;
        }
    }
    Ok((arms, runs))
}

//! The `simulate` subcommand: all requested intervention arms over all
//! repetitions, with shared per-run seeds so arms start identically.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use fairlink::graph::SocialGraph;
use fairlink::simulator::{init_state, run_with, Intervention, SimConfig};

use crate::config::FlatConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{config_hash, write_simulate_manifest};

pub fn simulate(flat: &FlatConfig, profile: &SimConfig, out_dir: &Path) -> CliResult<()> {
    let config = flat.sim_config(profile)?;
    let arms = flat.interventions()?;
    let snapshot_stride = flat.snapshot_stride()?;
    let hash = config_hash(flat);

    fs::create_dir_all(out_dir)?;

    let runs: Vec<u32> = (0..config.runs).collect();
    let outputs: Vec<Vec<String>> = runs
        .par_iter()
        .map(|&run_idx| run_all_arms(&config, &arms, run_idx, snapshot_stride, hash, out_dir))
        .collect::<CliResult<Vec<_>>>()?;

    let arm_tags: Vec<&str> = arms.iter().map(|a| a.tag()).collect();
    let mut flat_outputs: Vec<String> = outputs.into_iter().flatten().collect();
    flat_outputs.sort();
    write_simulate_manifest(
        &out_dir.join("manifest.txt"),
        flat,
        &config,
        &arm_tags,
        &flat_outputs,
    )?;
    Ok(())
}

fn run_all_arms(
    config: &SimConfig,
    arms: &[Intervention],
    run_idx: u32,
    snapshot_stride: u32,
    hash: u64,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    let run_dir = out_dir.join(format!("run_{run_idx:03}"));
    fs::create_dir_all(&run_dir)?;
    let mut written = Vec::new();

    // Run-level artifacts come from the shared seeded initialization; every
    // arm would reproduce exactly these.
    let initial = init_state(config, run_idx).map_err(|e| CliError::runtime(e.to_string()))?;
    let pop_path = run_dir.join("population.csv");
    let mut buf = Vec::new();
    initial.population.write_csv(&mut buf)?;
    fs::write(&pop_path, buf)?;
    written.push(rel(out_dir, &pop_path));
    let init_path = run_dir.join("initial_graph.edges");
    write_graph(&init_path, &initial.graph)?;
    written.push(rel(out_dir, &init_path));

    for &arm in arms {
        let arm_dir = run_dir.join(arm.tag());
        fs::create_dir_all(&arm_dir)?;

        let mut snapshot_err: Option<std::io::Error> = None;
        let out = run_with(config, arm, run_idx, |state, _| {
            if snapshot_stride > 0 && state.t % snapshot_stride == 0 && snapshot_err.is_none() {
                let path = arm_dir.join(format!("graph_t{:05}.edges", state.t));
                if let Err(e) = write_graph(&path, &state.graph) {
                    snapshot_err = Some(e);
                }
            }
        })
        .map_err(|e| CliError::runtime(e.to_string()))?;
        if let Some(e) = snapshot_err {
            return Err(e.into());
        }
        debug_assert_eq!(out.initial_degrees, initial.graph.degrees());

        let metrics_path = arm_dir.join("metrics.csv");
        let mut buf = Vec::new();
        out.series
            .write_csv(&mut buf, hash, config.run_seed(run_idx))?;
        fs::write(&metrics_path, buf)?;
        written.push(rel(out_dir, &metrics_path));

        let final_path = arm_dir.join("final_graph.edges");
        write_graph(&final_path, &out.state.graph)?;
        written.push(rel(out_dir, &final_path));
    }
    Ok(written)
}

fn rel(base: &Path, path: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .display()
        .to_string()
}

fn write_graph(path: &Path, graph: &SocialGraph) -> std::io::Result<()> {
    let mut buf = Vec::new();
    graph.write_edge_list(&mut buf)?;
    fs::write(path, buf)
}

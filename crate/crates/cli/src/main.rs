//! Experiment orchestration for the fairlink engine.
//!
//! Subcommands: `simulate`, `mpa-simulate`, `mpa-limits`, `report`. Any
//! configuration key can be set on the command line as `--section.key=value`;
//! dedicated flags cover the common ones. Exit codes: 0 success, 1
//! configuration error, 2 runtime error.

mod config;
mod error;
mod manifest;
mod mpa_cmd;
mod report;
mod simulate;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use fairlink::simulator::SimConfig;

use crate::config::{FlatConfig, KNOWN_KEYS};
use crate::error::{CliError, CliResult};

const USAGE: &str = "\
fairlink - fairness-intervention dynamics in connection recommendation

USAGE:
  fairlink <simulate | mpa-simulate | mpa-limits | report> [FLAGS] [--KEY=VALUE...]

FLAGS:
  --config PATH          flat `section.key = value` config file
  --profile NAME         paper (n=1000, t=2500, m=20, 10 runs)
                         or desk (n=200, t=500, m=10, 3 runs); default paper
  --seed N               sets sim.base_seed and mpa.seed
  --runs N               sets sim.runs and mpa.runs
  --jobs N               worker threads (default: all cores)
  --out-dir PATH         output directory (default fairlink_out/<command>)
  --in PATH              input directory for `report`
  --intervention ARM     none | dp | dyn | all (simulate)
  --KEY=VALUE            any config key, e.g. --sim.t_max=100
  -h, --help             this text, plus the config key list

Precedence: profile defaults < --config file < --KEY=VALUE < dedicated flags.
";

struct Args {
    command: String,
    flat: FlatConfig,
    profile: SimConfig,
    out_dir: Option<PathBuf>,
    in_dir: Option<PathBuf>,
    jobs: Option<usize>,
}

fn print_help() {
    println!("{USAGE}");
    println!("CONFIG KEYS:");
    for (key, help) in KNOWN_KEYS {
        println!("  {key:<28} {help}");
    }
}

fn parse_args(argv: &[String]) -> CliResult<Option<Args>> {
    if argv.is_empty() || argv[0] == "-h" || argv[0] == "--help" {
        print_help();
        return Ok(None);
    }
    let command = argv[0].clone();
    if !matches!(
        command.as_str(),
        "simulate" | "mpa-simulate" | "mpa-limits" | "report"
    ) {
        return Err(CliError::config(format!(
            "unknown subcommand {command:?}; expected simulate, mpa-simulate, mpa-limits or report"
        )));
    }

    let mut config_path: Option<PathBuf> = None;
    let mut profile_name = "paper".to_string();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut dedicated: Vec<(String, String)> = Vec::new();
    let mut out_dir = None;
    let mut in_dir = None;
    let mut jobs = None;

    let mut it = argv[1..].iter().peekable();
    let next_value = |it: &mut std::iter::Peekable<std::slice::Iter<String>>,
                          flag: &str|
     -> CliResult<String> {
        it.next()
            .cloned()
            .ok_or_else(|| CliError::config(format!("{flag} needs a value")))
    };
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "-h" | "--help" => {
                print_help();
                return Ok(None);
            }
            "--config" => config_path = Some(PathBuf::from(next_value(&mut it, "--config")?)),
            "--profile" => profile_name = next_value(&mut it, "--profile")?,
            "--seed" => {
                let v = next_value(&mut it, "--seed")?;
                dedicated.push(("sim.base_seed".into(), v.clone()));
                dedicated.push(("mpa.seed".into(), v));
            }
            "--runs" => {
                let v = next_value(&mut it, "--runs")?;
                dedicated.push(("sim.runs".into(), v.clone()));
                dedicated.push(("mpa.runs".into(), v));
            }
            "--jobs" => {
                let v = next_value(&mut it, "--jobs")?;
                jobs = Some(v.parse().map_err(|e| {
                    CliError::config(format!("bad --jobs value {v:?}: {e}"))
                })?);
            }
            "--out-dir" => out_dir = Some(PathBuf::from(next_value(&mut it, "--out-dir")?)),
            "--in" => in_dir = Some(PathBuf::from(next_value(&mut it, "--in")?)),
            "--intervention" => {
                let v = next_value(&mut it, "--intervention")?;
                dedicated.push(("sim.intervention".into(), v));
            }
            other => {
                // Generic --section.key=value override.
                let Some(rest) = other.strip_prefix("--") else {
                    return Err(CliError::config(format!("unexpected argument {other:?}")));
                };
                let Some((key, value)) = rest.split_once('=') else {
                    return Err(CliError::config(format!(
                        "unknown flag {other:?}; config overrides use --section.key=value"
                    )));
                };
                overrides.push((key.to_string(), value.to_string()));
            }
        }
    }

    let profile = match profile_name.as_str() {
        "paper" => SimConfig::paper(),
        "desk" => SimConfig::desk(),
        other => {
            return Err(CliError::config(format!(
                "unknown profile {other:?}; expected paper or desk"
            )))
        }
    };

    let mut flat = FlatConfig::new();
    if let Some(path) = config_path {
        flat.merge_file(&path)?;
    }
    for (k, v) in overrides.into_iter().chain(dedicated) {
        flat.set(&k, &v)?;
    }

    Ok(Some(Args {
        command,
        flat,
        profile,
        out_dir,
        in_dir,
        jobs,
    }))
}

fn dispatch(args: Args) -> CliResult<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    }
    if args.command == "report" {
        let in_dir = args
            .in_dir
            .ok_or_else(|| CliError::config("report needs --in <simulate output dir>"))?;
        let report_dir = args.out_dir.unwrap_or_else(|| in_dir.join("report"));
        return report::report(&args.flat, &in_dir, &report_dir);
    }
    let out_dir = args
        .out_dir
        .unwrap_or_else(|| PathBuf::from("fairlink_out").join(&args.command));
    match args.command.as_str() {
        "simulate" => simulate::simulate(&args.flat, &args.profile, &out_dir),
        "mpa-simulate" => mpa_cmd::mpa_simulate(&args.flat, &out_dir),
        "mpa-limits" => mpa_cmd::mpa_limits(&args.flat, &out_dir),
        _ => unreachable!("validated in parse_args"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match parse_args(&argv) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(args)) => match dispatch(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

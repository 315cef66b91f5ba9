//! `coevo` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};
use coevo::agents::AgentVariant;
use coevo::experiment::{
    aggregate_runs, run_arena, run_experiment, run_sweep, ExperimentConfig, Snapshot, CONFIG_KEYS,
    DEFAULT_TAIL_EPISODES,
};

/// Overrides `out_dir` unless `--out-dir` is given.
const OUT_DIR_ENV: &str = "COEVO_OUT_DIR";

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn config_args(cmd: Command) -> Command {
    let cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key = value config file; flags override it"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads for arenas (output does not depend on it)"),
        );
    CONFIG_KEYS.iter().fold(cmd, |cmd, (key, help)| {
        let mut arg = Arg::new(*key).long(flag_name(key)).value_name("VALUE").help(*help);
        if *key == "side" {
            arg = arg.alias("L");
        }
        cmd.arg(arg)
    })
}

fn cli() -> Command {
    Command::new("coevo")
        .about("Co-evolving cooperation and partner selection on a periodic lattice")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(config_args(Command::new("run").about("train every seed and arena of a config")))
        .subcommand(
            Command::new("aggregate")
                .about("summarise metrics CSVs over their final episodes")
                .arg(
                    Arg::new("paths")
                        .required(true)
                        .num_args(1..)
                        .value_parser(clap::value_parser!(PathBuf)),
                )
                .arg(
                    Arg::new("tail")
                        .long("tail")
                        .value_name("EPISODES")
                        .default_value(DEFAULT_TAIL_EPISODES.to_string())
                        .value_parser(clap::value_parser!(usize)),
                )
                .arg(
                    Arg::new("output")
                        .long("output")
                        .value_name("FILE")
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("write the table here instead of stdout"),
                ),
        )
        .subcommand(
            config_args(Command::new("snapshot").about("train one arena and dump its final lattice"))
                .arg(
                    Arg::new("arena")
                        .long("arena")
                        .value_name("INDEX")
                        .default_value("0")
                        .value_parser(clap::value_parser!(usize)),
                )
                .arg(
                    Arg::new("prefix")
                        .long("prefix")
                        .value_name("PATH")
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("snapshot path without extension (default: <out-dir>/snapshot)"),
                ),
        )
        .subcommand(
            config_args(Command::new("sweep").about("run every combination of b values and variants"))
                .arg(
                    Arg::new("b_values")
                        .long("b-values")
                        .value_name("LIST")
                        .required(true)
                        .value_delimiter(',')
                        .value_parser(clap::value_parser!(f64)),
                )
                .arg(
                    Arg::new("variants")
                        .long("variants")
                        .value_name("LIST")
                        .required(true)
                        .value_delimiter(',')
                        .value_parser(clap::value_parser!(AgentVariant)),
                )
                .arg(Arg::new("quiet").long("quiet").action(ArgAction::SetTrue)),
        )
}

/// Defaults, then the config file, then the environment, then flags.
fn load_config(m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.out_dir = PathBuf::from(dir);
        }
    }
    for (key, _) in CONFIG_KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads(m: &ArgMatches) -> Option<usize> {
    m.get_one::<usize>("threads").copied()
}

fn dispatch(matches: &ArgMatches) -> Result<()> {
    match matches.subcommand() {
        Some(("run", m)) => {
            let cfg = load_config(m)?;
            let report = run_experiment(&cfg, threads(m))?;
            println!("wrote {}", report.metrics.display());
        }
        Some(("aggregate", m)) => {
            let paths: Vec<PathBuf> = m.get_many::<PathBuf>("paths").unwrap_or_default().cloned().collect();
            let tail = *m.get_one::<usize>("tail").expect("defaulted");
            let table = aggregate_runs(&paths, tail)?;
            match m.get_one::<PathBuf>("output") {
                Some(out) => std::fs::write(out, table.to_csv()).with_context(|| format!("writing {}", out.display()))?,
                None => print!("{}", table.to_csv()),
            }
        }
        Some(("snapshot", m)) => {
            let cfg = load_config(m)?;
            let index = *m.get_one::<usize>("arena").expect("defaulted");
            if index >= cfg.arenas {
                bail!("arena {index} out of range (arenas = {})", cfg.arenas);
            }
            let prefix = m
                .get_one::<PathBuf>("prefix")
                .cloned()
                .unwrap_or_else(|| cfg.out_dir.join("snapshot"));
            if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            let (arena, _) = run_arena(&cfg, cfg.seed, index)?;
            let (grid, csv) = Snapshot::of_arena(&arena).write(&prefix)?;
            println!("wrote {} and {}", grid.display(), csv.display());
        }
        Some(("sweep", m)) => {
            let cfg = load_config(m)?;
            let bs: Vec<f64> = m.get_many::<f64>("b_values").unwrap_or_default().copied().collect();
            let variants: Vec<AgentVariant> = m
                .get_many::<AgentVariant>("variants")
                .unwrap_or_default()
                .copied()
                .collect();
            let cells = run_sweep(&cfg, &bs, &variants, threads(m))?;
            if !m.get_flag("quiet") {
                for cell in &cells {
                    let coop = cell.summary.get("coop_frac").map(|s| s.mean);
                    println!("b={:.4} {:<12} coop_frac={}", cell.b, cell.variant.name(), coop.map_or("-".into(), |c| format!("{c:.4}")));
                }
            }
        }
        _ => unreachable!("subcommand is required"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match dispatch(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

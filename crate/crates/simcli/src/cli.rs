//! `fedsim run|compare|partition-stats [--config PATH] [--key value ...]`

use std::{ffi::OsString, io::Write, path::PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};
use fedsim_core::datakit::{partition_stats, write_partition_manifest};
use serde_json::{Map, Value};

use crate::{
    compare::run_comparison,
    config::{default_values, ExperimentConfig, Kind, KEYS},
    experiment::{build_partition, load_dataset, run_experiment},
    metrics::render_metrics_csv,
    SimError, SimResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Run,
    Compare,
    PartitionStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Subcommand,
    pub config: ExperimentConfig,
}

#[derive(Debug)]
pub enum CliError {
    /// Usage problems and `--help`, rendered by clap.
    Usage(clap::Error),
    Sim(SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Sim(e) => e.exit_code(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Sim(e) => write!(f, "error: {e}"),
        }
    }
}

fn display_default(value: &Value) -> String {
    match value {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(display_default)
            .collect::<Vec<_>>()
            .join(","),
        other => other.to_string(),
    }
}

fn value_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Int => "INT",
        Kind::Float => "FLOAT",
        Kind::Text => "NAME",
        Kind::Path => "PATH",
        Kind::IntList => "INTS",
        Kind::FloatList => "FLOATS",
        Kind::TextList => "NAMES",
    }
}

pub fn command() -> Command {
    let defaults = default_values();
    let mut cmd = Command::new("fedsim")
        .about("Federated learning simulator: FedAvg and Per-FedAvg on partitioned data")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("run").about("train one configuration and write its metrics CSV"))
        .subcommand(Command::new("compare").about("run the algorithm x alpha_dir x tau grid"))
        .subcommand(Command::new("partition-stats").about("print per-client class histograms"))
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("JSON object with any of the keys below; flags override it"),
        )
        .after_help(
            "Every key may appear in the --config file. Unknown keys are rejected.\n\
             Exit codes: 0 success, 2 usage or config error, 1 runtime error.",
        );
    for key in KEYS {
        let default = defaults
            .get(key.name)
            .map(display_default)
            .unwrap_or_default();
        cmd = cmd.arg(
            Arg::new(key.name)
                .long(key.name)
                .value_name(value_name(key.kind))
                .action(ArgAction::Set)
                .global(true)
                .allow_hyphen_values(matches!(key.kind, Kind::Float | Kind::FloatList))
                .help(format!("{} [default: {default}]", key.help)),
        );
    }
    cmd
}

fn read_config_file(path: &PathBuf) -> SimResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::config(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(SimError::config(format!(
            "{} must hold a JSON object",
            path.display()
        ))),
        Err(e) => Err(SimError::config(format!(
            "{}: invalid JSON: {e}",
            path.display()
        ))),
    }
}

fn config_from_matches(m: &ArgMatches) -> SimResult<ExperimentConfig> {
    let file = m
        .get_one::<String>("config")
        .map(|p| read_config_file(&PathBuf::from(p)))
        .transpose()?;
    let overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|k| {
            m.get_one::<String>(k.name)
                .map(|v| (k.name.to_string(), v.clone()))
        })
        .collect();
    ExperimentConfig::from_parts(file, &overrides)
}

pub fn parse_cli<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = command()
        .try_get_matches_from(args)
        .map_err(CliError::Usage)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = match name {
        "run" => Subcommand::Run,
        "compare" => Subcommand::Compare,
        _ => Subcommand::PartitionStats,
    };
    Ok(Invocation {
        command,
        config: config_from_matches(sub)?,
    })
}

/// Executes a parsed invocation, writing human-readable output to `out`.
pub fn execute(inv: &Invocation, out: &mut dyn Write) -> SimResult<()> {
    let cfg = &inv.config;
    match inv.command {
        Subcommand::Run => {
            let output = run_experiment(cfg)?;
            if cfg.metrics_path.is_none() {
                out.write_all(render_metrics_csv(&output.rows)?.as_bytes())?;
            }
            let s = &output.summary;
            writeln!(
                out,
                "{} after {} rounds: global {:.4}, personalized {:.4}, headline {:.4}",
                s.algorithm, s.rounds, s.global_acc, s.personalized_acc, s.headline_acc
            )?;
        }
        Subcommand::Compare => {
            let table = run_comparison(
                cfg,
                &cfg.compare_algorithms,
                &cfg.compare_alpha_dirs,
                &cfg.compare_taus,
            )?;
            if let Some(path) = &cfg.comparison_path {
                table.write_csv(path)?;
            }
            out.write_all(table.render().as_bytes())?;
        }
        Subcommand::PartitionStats => {
            let dataset = load_dataset(cfg)?;
            let partition = build_partition(cfg, &dataset)?;
            if let Some(path) = &cfg.manifest_path {
                write_partition_manifest(&partition, path)?;
            }
            write!(out, "{}", partition_stats(&partition, &dataset))?;
        }
    }
    Ok(())
}

/// Parses, executes, and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_cli(args).and_then(|inv| {
        let stdout = std::io::stdout();
        execute(&inv, &mut stdout.lock()).map_err(CliError::from)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algorithm;

    fn parse(args: &[&str]) -> Result<Invocation, CliError> {
        parse_cli(std::iter::once("fedsim").chain(args.iter().copied()))
    }

    #[test]
    fn no_args_is_usage_error() {
        let err = parse(&[]).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_ne!(err.exit_code(), 0);
    }

    #[test]
    fn config_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(
            &path,
            r#"{"seed": 7, "algorithm": "fedavg", "local_lr": 0.05}"#,
        )
        .unwrap();
        let inv = parse(&[
            "run",
            "--config",
            path.to_str().unwrap(),
            "--local_lr",
            "0.2",
        ])
        .unwrap();
        assert_eq!(inv.command, Subcommand::Run);
        assert_eq!(inv.config.seed, 7);
        assert_eq!(inv.config.algorithm, Algorithm::FedAvg);
        assert_eq!(inv.config.local_lr, 0.2);
        // flags before the subcommand work too
        let inv = parse(&["--rounds", "3", "compare"]).unwrap();
        assert_eq!((inv.command, inv.config.rounds), (Subcommand::Compare, 3));
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = parse(&["run", "--local_lr", "banana"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("local_lr"), "{err}");
    }

    #[test]
    fn unknown_flag_and_missing_config() {
        let err = parse(&["run", "--learning_rate", "0.1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse(&["run", "--config", "/nonexistent/exp.json"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/exp.json"));
    }

    #[test]
    fn help_lists_every_key_with_default() {
        let help = command().render_long_help().to_string();
        for key in KEYS {
            assert!(
                help.contains(&format!("--{}", key.name)),
                "missing {}",
                key.name
            );
        }
        assert!(help.contains("[default: 0.01]"));
        assert!(help.contains("(1000 at full scale) [default: 100]"));
        assert!(help.contains("[default: 40]"));
    }

    #[test]
    fn negative_numbers_accepted() {
        assert!(parse(&["run", "--class_separation", "-1"]).is_err_and(|e| e.exit_code() == 2));
        let inv = parse(&["run", "--seed", "3", "--compare_alpha_dirs", "0.1,10"]).unwrap();
        assert_eq!(inv.config.compare_alpha_dirs, vec![0.1, 10.0]);
    }

    #[test]
    fn partition_stats_output() {
        let inv = parse(&[
            "partition-stats",
            "--num_clients",
            "4",
            "--samples_per_class",
            "20",
            "--samples_per_client",
            "30",
        ])
        .unwrap();
        let mut buf = Vec::new();
        execute(&inv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("mean pairwise TV"), "{text}");
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use risfd::config::KEYS;
use risfd::scenario::{run_scenario, ExperimentSpec, Scenario, Scheme};
use risfd::summarize::summarize_dir;
use risfd::units::{parse_list, parse_seeds};
use risfd::Settings;

#[derive(Parser)]
#[command(name = "risfd", version, about = "Secure beamforming for RIS-aided full-duplex links with hardware impairments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every (seed, sweep point, scheme) of a scenario and write CSVs.
    Run {
        /// convergence, ssr_vs_pmax, ssr_vs_kappa, ssr_vs_M, ssr_vs_alpha,
        /// cdf, lr_sweep, gamma_sweep or init_robustness.
        #[arg(long)]
        scenario: String,
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds as a list or range, e.g. `0..5` or `1,4,9`.
        #[arg(long, default_value = "0..5")]
        seeds: String,
        /// Comma-separated schemes; the scenario's defaults when absent.
        #[arg(long)]
        schemes: Option<String>,
        /// Comma-separated sweep values; the scenario's defaults when absent.
        #[arg(long)]
        values: Option<String>,
        #[arg(long, env = risfd::OUTPUT_ENV, default_value = "results")]
        output: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// `key=value` override applied after the file; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Aggregate the CSVs in a directory across seeds.
    Summarize {
        dir: PathBuf,
        /// Directory for the summary files; the input directory when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print every configuration key with its default.
    Keys,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            seeds,
            schemes,
            values,
            output,
            threads,
            overrides,
        } => {
            let scenario = Scenario::from_name(&scenario)?;
            let mut settings = Settings::default();
            if let Some(path) = &config {
                settings.apply_file(path)?;
            }
            settings.apply_overrides(&overrides)?;
            let mut spec = ExperimentSpec::new(scenario, settings, output);
            spec.seeds = parse_seeds(&seeds).with_context(|| format!("invalid seed list `{seeds}`"))?;
            if let Some(s) = schemes {
                spec.schemes = s.split(',').map(|n| Scheme::from_name(n.trim())).collect::<Result<_, _>>()?;
            }
            if let Some(v) = values {
                if scenario.sweep().is_none() {
                    bail!("scenario `{}` has no sweep", scenario.name());
                }
                spec.values = Some(parse_list(&v).with_context(|| format!("invalid value list `{v}`"))?);
            }
            spec.threads = threads;
            let out = run_scenario(&spec)?;
            for f in out.files {
                println!("{}", f.display());
            }
        }
        Command::Summarize { dir, output } => {
            let out = output.unwrap_or_else(|| dir.clone());
            for f in summarize_dir(&dir, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Keys => {
            let s = Settings::default();
            for key in KEYS {
                println!("{key} = {}", s.get(key)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `ucplab`: explicit constants and verification runs from the command line.

mod config;
mod constants_cmd;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use ucplab::experiments::{self as ex, Calibration, ExperimentReport};

use crate::config::{load, parse, parse_calibration, read_value};
use crate::output::{write_outputs, Manifest};

/// Exit status classes.
#[derive(Debug)]
pub enum Failure {
    /// Invalid input or violated precondition (exit 2).
    Input(String),
    /// A computation failed or a checked inequality did not hold (exit 1).
    Numerical(String),
}

impl From<ucplab::Error> for Failure {
    fn from(e: ucplab::Error) -> Self {
        use ucplab::Error as E;
        match e {
            E::InvalidParams(_)
            | E::InvalidRadii(_)
            | E::Domain(_)
            | E::GridMismatch(_)
            | E::OutsideDomain(_)
            | E::DirViolated { .. }
            | E::Asymmetric { .. }
            | E::MuTooSmall { .. }
            | E::RadiiAssumption => Failure::Input(e.to_string()),
            E::DeltaOutOfRange { delta, delta0 } => Failure::Input(format!(
                "precondition of the sampling estimate violated: delta = {delta} must lie in (0, delta0) with delta0 = {delta0:e}; \
                 set isotone_cap = true to evaluate the bound at delta0 instead"
            )),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("io: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ucplab", version, about = "Explicit unique continuation constants and verification experiments")]
struct Cli {
    /// TOML (or .json) config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of seeded experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; UCPLAB_OUT takes precedence.
    #[arg(long, global = true, default_value = "ucplab-out")]
    out: PathBuf,
    /// Calibration constants, `theta=…,cprime=…`.
    #[arg(long, global = true, value_parser = parse_calibration)]
    calibration: Option<(f64, f64)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate all explicit constants for one parameter set.
    Constants,
    /// Run a verification experiment.
    Run {
        experiment: Experiment,
        /// Number of random draws (lemmas, chain-demo, weight points, wegner samples, uncertainty samples).
        #[arg(long)]
        trials: Option<usize>,
        /// Dimension (chain-demo).
        #[arg(long)]
        d: Option<usize>,
        /// Lower step length (chain-demo).
        #[arg(long)]
        a: Option<f64>,
        /// Upper step length (chain-demo).
        #[arg(long)]
        b: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Observe,
    Lift,
    Uncertainty,
    Lemmas,
    Wegner,
    Annuli,
    Weight,
    ExtendDemo,
    ChainDemo,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Observe => "observe",
            Experiment::Lift => "lift",
            Experiment::Uncertainty => "uncertainty",
            Experiment::Lemmas => "lemmas",
            Experiment::Wegner => "wegner",
            Experiment::Annuli => "annuli",
            Experiment::Weight => "weight",
            Experiment::ExtendDemo => "extend-demo",
            Experiment::ChainDemo => "chain-demo",
        }
    }
}

struct Overrides {
    seed: Option<u64>,
    calibration: Option<Calibration>,
    trials: Option<usize>,
    d: Option<usize>,
    a: Option<f64>,
    b: Option<f64>,
}

fn not_applicable(flag: &str, exp: Experiment) -> Failure {
    Failure::Input(format!("--{flag} does not apply to {}", exp.name()))
}

/// Loads, overrides and runs; returns the resolved config and the report.
fn run_experiment(exp: Experiment, path: Option<&Path>, o: &Overrides) -> Result<(Value, ExperimentReport), Failure> {
    fn done<C: Serialize>(cfg: &C, r: ucplab::Result<ExperimentReport>) -> Result<(Value, ExperimentReport), Failure> {
        let v = serde_json::to_value(cfg).map_err(|e| Failure::Numerical(e.to_string()))?;
        Ok((v, r?))
    }
    let chain_only = |flag: &str, set: bool| if set && exp != Experiment::ChainDemo { Err(not_applicable(flag, exp)) } else { Ok(()) };
    chain_only("d", o.d.is_some())?;
    chain_only("a", o.a.is_some())?;
    chain_only("b", o.b.is_some())?;
    match exp {
        Experiment::Observe => {
            let mut c: ex::ObserveConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.calibration = o.calibration.unwrap_or(c.calibration);
            if o.trials.is_some() {
                return Err(not_applicable("trials", exp));
            }
            done(&c, ex::observability_experiment(&c))
        }
        Experiment::Lift => {
            let mut c: ex::LiftConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.calibration = o.calibration.unwrap_or(c.calibration);
            if o.trials.is_some() {
                return Err(not_applicable("trials", exp));
            }
            done(&c, ex::lifting_experiment(&c))
        }
        Experiment::Uncertainty => {
            let mut c: ex::UncertaintyConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.calibration = o.calibration.unwrap_or(c.calibration);
            c.samples = o.trials.unwrap_or(c.samples);
            done(&c, ex::short_interval_uncertainty(&c))
        }
        Experiment::Lemmas => {
            let mut c: ex::LemmaConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.draws = o.trials.unwrap_or(c.draws);
            done(&c, ex::abstract_lemma_tests(&c))
        }
        Experiment::Wegner => {
            let mut c: ex::WegnerConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.samples = o.trials.unwrap_or(c.samples);
            done(&c, ex::wegner_monte_carlo(&c))
        }
        Experiment::Annuli => {
            let mut c: ex::AnnuliConfig = load(path)?;
            c.calibration = o.calibration.unwrap_or(c.calibration);
            if o.trials.is_some() {
                return Err(not_applicable("trials", exp));
            }
            done(&c, ex::three_annuli_empirical(&c))
        }
        Experiment::Weight => {
            let mut c: ex::WeightConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.points = o.trials.unwrap_or(c.points);
            done(&c, ex::carleman_weight(&c))
        }
        Experiment::ExtendDemo => {
            let c: ex::ExtendConfig = load(path)?;
            if o.trials.is_some() {
                return Err(not_applicable("trials", exp));
            }
            done(&c, ex::extend_demo(&c))
        }
        Experiment::ChainDemo => {
            let mut c: ex::ChainDemoConfig = load(path)?;
            c.seed = o.seed.unwrap_or(c.seed);
            c.draws = o.trials.unwrap_or(c.draws);
            if let Some(d) = o.d {
                c.dims = vec![d];
            }
            c.a = o.a.or(c.a);
            c.b = o.b.or(c.b);
            done(&c, ex::chain_demo(&c))
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    match std::env::var_os("UCPLAB_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cli.out.clone(),
    }
}

fn calibration(cli: &Cli) -> Option<Calibration> {
    cli.calibration.map(|(theta, cprime)| Calibration { theta, cprime })
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot configure {n} threads: {e}")))?;
    }
    let out = out_dir(cli);
    let cal = calibration(cli);
    match &cli.command {
        Command::Constants => {
            let path = cli
                .config
                .as_deref()
                .ok_or_else(|| Failure::Input("constants needs --config with d, theta_e and theta_l".into()))?;
            let cfg: constants_cmd::ConstantsConfig = parse(read_value(path)?)?;
            let cal = cal.unwrap_or_default().wide()?;
            let report = constants_cmd::constants_report(&cfg, &cal)?;
            let resolved = serde_json::json!({"constants": cfg, "calibration": {"theta": cal.cutoff_theta.value_f64(), "cprime": cal.cacciopoli_c_prime.value_f64()}});
            let manifest = Manifest::new("constants", cli.config.as_deref(), &resolved, cli.seed, &out);
            write_outputs(&out, &manifest, &[("constants.json", output::pretty(&report))])?;
            println!("wrote {}", out.join("constants.json").display());
            Ok(())
        }
        Command::Run { experiment, trials, d, a, b } => {
            let o = Overrides { seed: cli.seed, calibration: cal, trials: *trials, d: *d, a: *a, b: *b };
            let (resolved, report) = run_experiment(*experiment, cli.config.as_deref(), &o)?;
            let manifest = Manifest::new(&format!("run {}", experiment.name()), cli.config.as_deref(), &resolved, cli.seed, &out);
            let mut files = vec![
                ("report.json", output::pretty(&report)),
                ("cases.csv", report.to_csv()),
                ("config.json", output::pretty(&resolved)),
            ];
            let dat = format!("{}.dat", experiment.name());
            files.push((dat.as_str(), report.to_dat()));
            if *experiment == Experiment::ChainDemo {
                files.push(("path.csv", output::path_csv(&report.summary["witness"])));
            }
            write_outputs(&out, &manifest, &files)?;
            let vacuous = report.cases.len() - report.non_vacuous();
            println!(
                "{}: {} ({} cases, {} vacuous) -> {}",
                report.name,
                if report.pass { "pass" } else { "FAIL" },
                report.cases.len(),
                vacuous,
                out.display()
            );
            if report.pass {
                Ok(())
            } else {
                let ids: Vec<&str> = report.failures().map(|c| c.key.as_str()).collect();
                Err(Failure::Numerical(format!("failing cases: {}", ids.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

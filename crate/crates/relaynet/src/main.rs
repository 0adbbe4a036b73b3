use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use relaynet::exec::Rayon;
use relaynet::runner::{run_experiments, RunError, RunOptions};
use relaynet::spec::{parse, Experiment};
use relaynet::suites::Suite;
use relaynet_core::analytic::{expected_progress_approx, AnalyticParams};
use relaynet_core::Scheme;

#[derive(Parser)]
#[command(
    name = "relaynet",
    version,
    about = "Cooperative relaying experiments in Poisson networks"
)]
struct Cli {
    /// Master seed; overrides the seed of every experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "RELAYNET_WORKERS")]
    workers: Option<usize>,
    /// Directory receiving the CSV files.
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    /// Multiplier applied to every trial count.
    #[arg(long, global = true, default_value_t = 1.0)]
    trials_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a spec file.
    Run { spec: PathBuf },
    /// Run a built-in suite.
    Suite { name: Suite },
    /// Print d̃_m, |W_m| and c_m for one operating point as CSV.
    AnalyticTable {
        #[arg(long, default_value = "IRC", value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long = "M", default_value_t = 2)]
        diversity: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long = "R", default_value_t = 3.0)]
        rate: f64,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        intensity: f64,
    },
}

const VALIDATION: u8 = 1;
const RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if !(cli.trials_scale > 0.0 && cli.trials_scale.is_finite()) {
        eprintln!("error: --trials-scale must be positive, got {}", cli.trials_scale);
        return ExitCode::from(VALIDATION);
    }
    let (label, experiments) = match &cli.command {
        Command::Run { spec } => {
            let text = match std::fs::read_to_string(spec) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", spec.display());
                    return ExitCode::from(VALIDATION);
                }
            };
            (spec.display().to_string(), parse(&text))
        }
        Command::Suite { name } => (format!("suite {name}"), parse(name.source())),
        Command::AnalyticTable {
            scheme,
            diversity,
            p,
            rate,
            alpha,
            intensity,
        } => {
            let mut params = AnalyticParams::new(*scheme, *diversity, *p, *rate, *alpha);
            params.intensity = *intensity;
            return match analytic_table(&params) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    let invalid = matches!(
                        e.downcast_ref::<relaynet_core::Error>(),
                        Some(relaynet_core::Error::InvalidParameter { .. } | relaynet_core::Error::NcDiversity(_))
                    );
                    ExitCode::from(if invalid { VALIDATION } else { RUNTIME })
                }
            };
        }
    };
    let experiments = match experiments {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {label}: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    match run(&cli, &experiments) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME)
        }
    }
}

fn run(cli: &Cli, experiments: &[Experiment]) -> anyhow::Result<()> {
    let workers = cli
        .workers
        .or_else(|| experiments.iter().find_map(|e| e.workers))
        .unwrap_or(0);
    let exec = Rayon::new(workers).context("building the worker pool")?;
    let opts = RunOptions {
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
        trials_scale: cli.trials_scale,
    };
    let summary = run_experiments(experiments, &opts, &exec, |step| eprintln!("running {step}"))
        .map_err(|e: RunError| anyhow::Error::new(e))?;
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    print!("{}", summary.render());
    Ok(())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn analytic_table(params: &AnalyticParams) -> anyhow::Result<()> {
    let table = expected_progress_approx(params)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["m", "d_tilde", "cell_area", "c"])?;
    for m in 0..table.d_tilde.len() {
        w.write_record([
            (m + 1).to_string(),
            table.d_tilde[m].to_string(),
            table.cell_area[m].to_string(),
            table.c[m].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! Executes parsed experiments and writes one CSV per (experiment, scheme,
//! objective).
//!
//! Every row carries the complete operating point, so a row can be read
//! without the spec that produced it. Rows are flushed as soon as they are
//! computed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use relaynet_core::analytic::{expected_progress_approx, AnalyticParams};
use relaynet_core::experiments::{
    default_contention, estimate_progress_rates, optimize_prd, progress_rate_density, Executor, Objective,
    OptimizationResult, OptimizeOptions, SimulationPlan, MIN_TRIALS,
};
use relaynet_core::{NetworkConfig, RelaySelection, Scheme};
use thiserror::Error;

use crate::spec::{Axis, Experiment, Mode};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("experiment `{experiment}`: {source}")]
    Model {
        experiment: String,
        source: relaynet_core::Error,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Overrides applied on top of each experiment.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Multiplies every trial count.
    pub trials_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            out_dir: PathBuf::from("results"),
            trials_scale: 1.0,
        }
    }
}

pub fn scaled_trials(trials: usize, scale: f64) -> usize {
    ((trials as f64 * scale).round() as usize).max(MIN_TRIALS)
}

/// One PRD value shown in the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub experiment: String,
    pub mode: Mode,
    pub axis: Axis,
    pub sweep: f64,
    pub scheme: Scheme,
    pub objective: Objective,
    pub prd: f64,
    pub std_error: f64,
}

#[derive(Debug, Default, Clone)]
pub struct Summary {
    pub observations: Vec<Observation>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Summary {
    /// Headline gains of each scheme over NC.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut groups: BTreeMap<(String, &'static str), Vec<&Observation>> = BTreeMap::new();
        for o in &self.observations {
            groups
                .entry((o.experiment.clone(), o.objective.as_str()))
                .or_default()
                .push(o);
        }
        for ((name, objective), obs) in groups {
            let mode = obs[0].mode;
            let axis = obs[0].axis;
            let _ = writeln!(out, "{name} ({objective})");
            match mode {
                Mode::Optimize => {
                    let mut sweeps: Vec<f64> = obs.iter().map(|o| o.sweep).collect();
                    sweeps.dedup();
                    for s in sweeps {
                        let at: Vec<&&Observation> = obs.iter().filter(|o| o.sweep == s).collect();
                        let nc = at.iter().find(|o| o.scheme == Scheme::Nc).map(|o| o.prd);
                        let _ = write!(out, "  {}={s}:", axis.as_str());
                        for o in &at {
                            let _ = write!(out, " {} {:.5}", o.scheme, o.prd);
                            if let (Some(nc), true) = (nc, o.scheme != Scheme::Nc) {
                                let _ = write!(out, " ({:+.1}%)", 100.0 * (o.prd / nc - 1.0));
                            }
                        }
                        out.push('\n');
                    }
                    // Gains between consecutive diversity orders.
                    if axis == Axis::Diversity {
                        for scheme in Scheme::ALL {
                            let line: Vec<&&Observation> = obs.iter().filter(|o| o.scheme == scheme).collect();
                            for w in line.windows(2) {
                                let _ = writeln!(
                                    out,
                                    "  {scheme} M={} -> M={}: {:+.1}%",
                                    w[0].sweep,
                                    w[1].sweep,
                                    100.0 * (w[1].prd / w[0].prd - 1.0)
                                );
                            }
                        }
                    }
                }
                Mode::Evaluate => {
                    let best = |scheme: Scheme| {
                        obs.iter()
                            .filter(|o| o.scheme == scheme)
                            .max_by(|a, b| a.prd.total_cmp(&b.prd))
                    };
                    let nc = best(Scheme::Nc).map(|o| o.prd);
                    for scheme in Scheme::ALL {
                        if let Some(o) = best(scheme) {
                            let _ = write!(out, "  {scheme}: max {:.5} at {}={}", o.prd, axis.as_str(), o.sweep);
                            if let (Some(nc), true) = (nc, scheme != Scheme::Nc) {
                                let _ = write!(out, " ({:+.1}% over NC)", 100.0 * (o.prd / nc - 1.0));
                            }
                            out.push('\n');
                        }
                    }
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

struct Sink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Sink {
    fn create(path: PathBuf, axis: Axis) -> Result<Self, RunError> {
        let file = File::create(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        let mut sink = Self {
            path,
            writer: csv::Writer::from_writer(file),
        };
        sink.write(&[
            axis.as_str(),
            "scheme",
            "objective",
            "metric",
            "mean",
            "std_error",
            "n",
            "seed",
            "intensity",
            "p",
            "alpha",
            "R",
            "M",
            "window_radius",
            "retry_cap",
            "selection",
        ])?;
        Ok(sink)
    }

    fn write<S: AsRef<[u8]>>(&mut self, record: &[S]) -> Result<(), RunError> {
        let csv_err = |source| RunError::Csv {
            path: self.path.clone(),
            source,
        };
        self.writer.write_record(record).map_err(csv_err)?;
        self.writer.flush().map_err(|source| RunError::Io {
            path: self.path.clone(),
            source,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &mut self,
        sweep: f64,
        cfg: &NetworkConfig,
        objective: Objective,
        metric: &str,
        mean: f64,
        std_error: f64,
        n: usize,
        seed: u64,
    ) -> Result<(), RunError> {
        let selection = match cfg.selection {
            RelaySelection::Argmax => "argmax".to_owned(),
            RelaySelection::Contention(c) => format!("contention:{}:{}", c.bits, c.d_max),
        };
        self.write(&[
            sweep.to_string(),
            cfg.scheme.to_string(),
            objective.as_str().to_owned(),
            metric.to_owned(),
            mean.to_string(),
            std_error.to_string(),
            n.to_string(),
            seed.to_string(),
            cfg.intensity.to_string(),
            cfg.map_p.to_string(),
            cfg.alpha.to_string(),
            cfg.rate.to_string(),
            cfg.diversity.to_string(),
            cfg.window_radius.to_string(),
            cfg.retry_cap.to_string(),
            selection,
        ])
    }
}

/// Runs every experiment in order.
pub fn run_experiments<X: Executor>(
    experiments: &[Experiment],
    opts: &RunOptions,
    exec: &X,
    mut progress: impl FnMut(&str),
) -> Result<Summary, RunError> {
    fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
        path: opts.out_dir.clone(),
        source,
    })?;
    let mut summary = Summary::default();
    for exp in experiments {
        run_one(exp, opts, exec, &mut summary, &mut progress)?;
    }
    Ok(summary)
}

fn csv_path(dir: &Path, exp: &Experiment, scheme: Scheme, objective: Objective) -> PathBuf {
    dir.join(format!("{}_{}_{}.csv", exp.name, scheme, objective.as_str()))
}

fn run_one<X: Executor>(
    exp: &Experiment,
    opts: &RunOptions,
    exec: &X,
    summary: &mut Summary,
    progress: &mut impl FnMut(&str),
) -> Result<(), RunError> {
    let model = |source| RunError::Model {
        experiment: exp.name.clone(),
        source,
    };
    let seed = opts.seed.unwrap_or(exp.seed);
    let trials = scaled_trials(exp.trials, opts.trials_scale);
    let mut sinks: BTreeMap<(Scheme, &'static str), Sink> = BTreeMap::new();
    for &scheme in &exp.schemes {
        for &objective in &exp.objectives {
            let path = csv_path(&opts.out_dir, exp, scheme, objective);
            summary.files.push(path.clone());
            sinks.insert((scheme, objective.as_str()), Sink::create(path, exp.axis)?);
        }
    }
    let config_at = |scheme: Scheme, value: f64| -> Result<NetworkConfig, RunError> {
        let mut cfg = exp.axis.apply(&exp.base, scheme, value);
        if let Some(bits) = exp.contention_auto {
            cfg.selection = RelaySelection::Contention(default_contention(&cfg, bits).map_err(model)?);
        }
        Ok(cfg)
    };
    let mut observe = |sweep: f64, scheme: Scheme, objective: Objective, prd: f64, std_error: f64| {
        summary.observations.push(Observation {
            experiment: exp.name.clone(),
            mode: exp.mode,
            axis: exp.axis,
            sweep,
            scheme,
            objective,
            prd,
            std_error,
        });
    };

    match exp.mode {
        Mode::Evaluate => {
            for &scheme in &exp.schemes {
                for &objective in &exp.objectives {
                    let sink = sinks.get_mut(&(scheme, objective.as_str())).expect("sink per pair");
                    progress(&format!("{} {scheme} {}", exp.name, objective.as_str()));
                    match objective {
                        Objective::Analytic => {
                            for &v in &exp.values {
                                let cfg = config_at(scheme, v)?;
                                let table =
                                    expected_progress_approx(&AnalyticParams::from_config(&cfg)).map_err(model)?;
                                let prd = cfg.rate * cfg.intensity * cfg.map_p * table.increment();
                                sink.row(v, &cfg, objective, "prd", prd, 0.0, 0, seed)?;
                                for (h, d) in table.d_tilde.iter().enumerate() {
                                    sink.row(v, &cfg, objective, &format!("d_{}", h + 1), *d, 0.0, 0, seed)?;
                                }
                                observe(v, scheme, objective, prd, 0.0);
                            }
                        }
                        Objective::Simulated => {
                            // Rate sweeps share episodes across all rates.
                            let batches: Vec<Vec<f64>> = if exp.axis == Axis::Rate && exp.contention_auto.is_none() {
                                vec![exp.values.clone()]
                            } else {
                                exp.values.iter().map(|&v| vec![v]).collect()
                            };
                            for batch in batches {
                                let cfg = config_at(scheme, batch[0])?;
                                let rates: Vec<f64> = batch
                                    .iter()
                                    .map(|&v| config_at(scheme, v).map(|c| c.rate))
                                    .collect::<Result<_, _>>()?;
                                let ests = estimate_progress_rates(&cfg, &rates, trials, seed, exec).map_err(model)?;
                                for (&v, est) in batch.iter().zip(&ests) {
                                    let cfg = config_at(scheme, v)?;
                                    let prd = progress_rate_density(&cfg, est).map_err(model)?;
                                    if prd.anomaly {
                                        summary.warnings.push(format!(
                                            "{} {scheme} {}={v}: negative progress increment beyond noise",
                                            exp.name,
                                            exp.axis.as_str()
                                        ));
                                    }
                                    sink.row(v, &cfg, objective, "prd", prd.prd.mean, prd.prd.std_error, trials, seed)?;
                                    for (h, d) in est.hops.iter().enumerate() {
                                        sink.row(
                                            v,
                                            &cfg,
                                            objective,
                                            &format!("d_{}", h + 1),
                                            d.mean,
                                            d.std_error,
                                            d.n,
                                            seed,
                                        )?;
                                    }
                                    if let RelaySelection::Contention(_) = cfg.selection {
                                        let c = est.contention;
                                        let rate =
                                            |k: u64| if c.rounds == 0 { 0.0 } else { k as f64 / c.rounds as f64 };
                                        sink.row(
                                            v,
                                            &cfg,
                                            objective,
                                            "collision_rate",
                                            rate(c.collisions),
                                            0.0,
                                            c.rounds as usize,
                                            seed,
                                        )?;
                                        sink.row(
                                            v,
                                            &cfg,
                                            objective,
                                            "selection_error_rate",
                                            rate(c.selection_errors),
                                            0.0,
                                            c.rounds as usize,
                                            seed,
                                        )?;
                                    }
                                    observe(v, scheme, objective, prd.prd.mean, prd.prd.std_error);
                                }
                            }
                        }
                    }
                }
            }
        }
        Mode::Optimize => {
            let options = |fixed_p: Option<f64>| OptimizeOptions {
                bounds: exp.search.bounds,
                fixed_p,
                plan: SimulationPlan {
                    seed,
                    coarse_trials: scaled_trials(exp.search.coarse_trials, opts.trials_scale),
                    refine_trials: trials,
                    rate_step: exp.search.rate_step,
                    map_p_step: exp.search.map_p_step,
                    refine_rate_step: exp.search.refine_rate_step,
                },
                ..OptimizeOptions::default()
            };
            for &v in &exp.values {
                for &objective in &exp.objectives {
                    // The NC optimum fixes p for IRC with more than one block.
                    let mut nc: Option<OptimizationResult> = None;
                    for &scheme in &exp.schemes {
                        let cfg = config_at(scheme, v)?;
                        progress(&format!(
                            "{} {}={v} {scheme} {}",
                            exp.name,
                            exp.axis.as_str(),
                            objective.as_str()
                        ));
                        let needs_nc = scheme == Scheme::Nc || (scheme == Scheme::Irc && cfg.diversity > 1);
                        if needs_nc && nc.is_none() {
                            let nc_cfg = config_at(Scheme::Nc, v)?;
                            nc = Some(optimize_prd(objective, &nc_cfg, &options(None), exec).map_err(model)?);
                        }
                        let result = match scheme {
                            Scheme::Nc => nc.clone().expect("computed above"),
                            Scheme::Irc if cfg.diversity > 1 => {
                                let p = nc.as_ref().expect("computed above").map_p;
                                optimize_prd(objective, &cfg, &options(Some(p)), exec).map_err(model)?
                            }
                            _ => optimize_prd(objective, &cfg, &options(None), exec).map_err(model)?,
                        };
                        if let Some(w) = result.warning {
                            summary.warnings.push(format!(
                                "{} {}={v} {scheme} {}: {w:?}",
                                exp.name,
                                exp.axis.as_str(),
                                objective.as_str()
                            ));
                        }
                        let mut at = cfg;
                        at.rate = result.rate;
                        at.map_p = result.map_p;
                        let n = if objective == Objective::Simulated { trials } else { 0 };
                        let sink = sinks.get_mut(&(scheme, objective.as_str())).expect("sink per pair");
                        sink.row(v, &at, objective, "prd", result.prd, result.std_error, n, seed)?;
                        sink.row(v, &at, objective, "R_opt", result.rate, 0.0, n, seed)?;
                        sink.row(v, &at, objective, "p_opt", result.map_p, 0.0, n, seed)?;
                        observe(v, scheme, objective, result.prd, result.std_error);
                    }
                }
            }
        }
    }
    Ok(())
}

//! Experiment files.
//!
//! A file holds one or more `[[experiment]]` tables. Each experiment sweeps a
//! single parameter while the `[experiment.fixed]` table pins the others.
//! Unknown keys are rejected and every diagnostic carries the line and
//! column of the offending value.

use std::fmt;
use std::ops::Range;

use relaynet_core::contention::ContentionConfig;
use relaynet_core::experiments::{Bounds, Objective};
use relaynet_core::{NetworkConfig, RelaySelection, Scheme};
use serde::Deserialize;
use toml::Spanned;

/// Default contention depth when `selection = "contention"`.
pub const DEFAULT_CONTENTION_BITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SpecError {}

impl SpecError {
    fn at(src: &str, span: Range<usize>, message: impl Into<String>) -> Self {
        let (line, column) = line_col(src, span.start);
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

/// 1-based line and column of byte `offset`.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    MapP,
    Rate,
    Alpha,
    Diversity,
}

impl Axis {
    /// Column header and spelling in spec files.
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::MapP => "p",
            Axis::Rate => "R",
            Axis::Alpha => "alpha",
            Axis::Diversity => "M",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "p" => Some(Axis::MapP),
            "R" => Some(Axis::Rate),
            "alpha" => Some(Axis::Alpha),
            "M" => Some(Axis::Diversity),
            _ => None,
        }
    }

    /// `base` with this axis set to `value`; NC always keeps one block.
    pub fn apply(self, base: &NetworkConfig, scheme: Scheme, value: f64) -> NetworkConfig {
        let mut cfg = *base;
        cfg.scheme = scheme;
        match self {
            Axis::MapP => cfg.map_p = value,
            Axis::Rate => cfg.rate = value,
            Axis::Alpha => cfg.alpha = value,
            Axis::Diversity => cfg.diversity = value as usize,
        }
        if scheme == Scheme::Nc {
            cfg.diversity = 1;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// PRD at every sweep point.
    Evaluate,
    /// PRD-maximising `(R, p)` at every sweep point.
    Optimize,
}

/// Settings of the `(R, p)` search in optimize mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub bounds: Bounds,
    pub rate_step: f64,
    pub map_p_step: f64,
    pub refine_rate_step: f64,
    pub coarse_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub mode: Mode,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub objectives: Vec<Objective>,
    pub trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Every field except the swept one.
    pub base: NetworkConfig,
    /// Contention depth whose quantisation scale is derived per operating
    /// point as three times the analytic one-hop progress.
    pub contention_auto: Option<u32>,
    pub search: SearchSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    experiment: Vec<RawExperiment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Spanned<String>,
    mode: Option<Spanned<String>>,
    schemes: Spanned<Vec<Spanned<String>>>,
    objectives: Option<Spanned<Vec<Spanned<String>>>>,
    trials: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    workers: Option<Spanned<i64>>,
    sweep: RawSweep,
    #[serde(default)]
    fixed: RawFixed,
    #[serde(default)]
    optimize: RawOptimize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Spanned<String>,
    values: Option<Spanned<Vec<f64>>>,
    start: Option<Spanned<f64>>,
    stop: Option<Spanned<f64>>,
    step: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    intensity: Option<Spanned<f64>>,
    p: Option<Spanned<f64>>,
    alpha: Option<Spanned<f64>>,
    #[serde(rename = "R")]
    rate: Option<Spanned<f64>>,
    #[serde(rename = "M")]
    diversity: Option<Spanned<i64>>,
    window_radius: Option<Spanned<f64>>,
    retry_cap: Option<Spanned<i64>>,
    selection: Option<Spanned<String>>,
    contention_bits: Option<Spanned<i64>>,
    contention_dmax: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    rate_min: Option<Spanned<f64>>,
    rate_max: Option<Spanned<f64>>,
    p_min: Option<Spanned<f64>>,
    p_max: Option<Spanned<f64>>,
    rate_step: Option<Spanned<f64>>,
    p_step: Option<Spanned<f64>>,
    refine_rate_step: Option<Spanned<f64>>,
    coarse_trials: Option<Spanned<i64>>,
}

/// Parses and validates an experiment file.
pub fn parse(src: &str) -> Result<Vec<Experiment>, SpecError> {
    let raw: RawFile = toml::from_str(src).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        SpecError::at(src, span, e.message().trim_end().to_owned())
    })?;
    let mut out: Vec<Experiment> = Vec::new();
    for exp in raw.experiment {
        let name_span = exp.name.span();
        let experiment = build(src, exp)?;
        if out.iter().any(|e| e.name == experiment.name) {
            return Err(SpecError::at(
                src,
                name_span,
                format!("duplicate experiment name `{}`", experiment.name),
            ));
        }
        out.push(experiment);
    }
    if out.is_empty() {
        return Err(SpecError::at(src, 0..0, "no [[experiment]] tables"));
    }
    Ok(out)
}

fn value<T: Copy>(field: &Option<Spanned<T>>, default: T) -> T {
    field.as_ref().map_or(default, |s| *s.get_ref())
}

fn span_of<T>(field: &Option<Spanned<T>>, fallback: Range<usize>) -> Range<usize> {
    field.as_ref().map_or(fallback, |s| s.span())
}

fn count(src: &str, field: &Option<Spanned<i64>>, name: &str, default: i64, min: i64) -> Result<i64, SpecError> {
    let v = value(field, default);
    if v < min {
        return Err(SpecError::at(
            src,
            span_of(field, 0..0),
            format!("`{name}` = {v} is out of range: expected at least {min}"),
        ));
    }
    Ok(v)
}

fn build(src: &str, exp: RawExperiment) -> Result<Experiment, SpecError> {
    let whole = exp.name.span();
    let name = exp.name.get_ref().clone();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(SpecError::at(
            src,
            whole,
            "`name` must be nonempty and use only letters, digits, `_` and `-`",
        ));
    }
    let mode = match exp.mode.as_ref().map(|m| (m.get_ref().as_str(), m.span())) {
        None | Some(("evaluate", _)) => Mode::Evaluate,
        Some(("optimize", _)) => Mode::Optimize,
        Some((other, span)) => {
            return Err(SpecError::at(
                src,
                span,
                format!("unknown mode `{other}`: expected `evaluate` or `optimize`"),
            ))
        }
    };

    let mut schemes = Vec::new();
    for s in exp.schemes.get_ref() {
        let scheme: Scheme = s.get_ref().parse().map_err(|_| {
            SpecError::at(
                src,
                s.span(),
                format!("unknown scheme `{}`: expected NC, RC or IRC", s.get_ref()),
            )
        })?;
        if schemes.contains(&scheme) {
            return Err(SpecError::at(src, s.span(), format!("scheme `{scheme}` listed twice")));
        }
        schemes.push(scheme);
    }
    if schemes.is_empty() {
        return Err(SpecError::at(src, exp.schemes.span(), "`schemes` is empty"));
    }
    let mut objectives = Vec::new();
    match &exp.objectives {
        None => objectives.push(Objective::Simulated),
        Some(list) => {
            for o in list.get_ref() {
                let obj = match o.get_ref().as_str() {
                    "simulated" => Objective::Simulated,
                    "analytic" => Objective::Analytic,
                    other => {
                        return Err(SpecError::at(
                            src,
                            o.span(),
                            format!("unknown objective `{other}`: expected `simulated` or `analytic`"),
                        ))
                    }
                };
                if objectives.contains(&obj) {
                    return Err(SpecError::at(
                        src,
                        o.span(),
                        format!("objective `{other}` listed twice", other = obj.as_str()),
                    ));
                }
                objectives.push(obj);
            }
            if objectives.is_empty() {
                return Err(SpecError::at(src, list.span(), "`objectives` is empty"));
            }
        }
    }
    let trials = count(
        src,
        &exp.trials,
        "trials",
        10_000,
        relaynet_core::experiments::MIN_TRIALS as i64,
    )? as usize;
    let seed = count(src, &exp.seed, "seed", 1, 0)? as u64;
    let workers = match &exp.workers {
        None => None,
        Some(_) => Some(count(src, &exp.workers, "workers", 0, 0)? as usize),
    };

    let axis_span = exp.sweep.axis.span();
    let axis = Axis::parse(exp.sweep.axis.get_ref()).ok_or_else(|| {
        SpecError::at(
            src,
            axis_span.clone(),
            format!(
                "unknown sweep axis `{}`: expected p, R, alpha or M",
                exp.sweep.axis.get_ref()
            ),
        )
    })?;
    let values = sweep_values(src, &exp.sweep, axis_span.clone())?;

    let (base, contention_auto) = base_config(src, &exp.fixed)?;
    // Every sweep point must yield a valid configuration for every scheme.
    for (i, &v) in values.iter().enumerate() {
        let span = match &exp.sweep.values {
            Some(list) => list.span(),
            None => span_of(&exp.sweep.start, axis_span.clone()),
        };
        if axis == Axis::Diversity && (v < 1.0 || v.fract() != 0.0) {
            return Err(SpecError::at(
                src,
                span,
                format!("sweep value {v} is not a positive integer diversity order"),
            ));
        }
        for &scheme in &schemes {
            let cfg = axis.apply(&base, scheme, v);
            cfg.validate().map_err(|e| {
                SpecError::at(
                    src,
                    span.clone(),
                    format!("sweep value #{} ({} = {v}): {e}", i + 1, axis.as_str()),
                )
            })?;
        }
    }

    let o = &exp.optimize;
    let d = Bounds::default();
    let bounds = Bounds {
        rate: (value(&o.rate_min, d.rate.0), value(&o.rate_max, d.rate.1)),
        map_p: (value(&o.p_min, d.map_p.0), value(&o.p_max, d.map_p.1)),
    };
    if !(bounds.rate.0 > 0.0 && bounds.rate.0 < bounds.rate.1) {
        return Err(SpecError::at(
            src,
            span_of(&o.rate_min, span_of(&o.rate_max, whole.clone())),
            "rate bounds must satisfy 0 < rate_min < rate_max",
        ));
    }
    if !(bounds.map_p.0 > 0.0 && bounds.map_p.0 < bounds.map_p.1 && bounds.map_p.1 < 1.0) {
        return Err(SpecError::at(
            src,
            span_of(&o.p_min, span_of(&o.p_max, whole.clone())),
            "p bounds must satisfy 0 < p_min < p_max < 1",
        ));
    }
    let positive = |field: &Option<Spanned<f64>>, name: &str, default: f64| -> Result<f64, SpecError> {
        let v = value(field, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(SpecError::at(
                src,
                span_of(field, whole.clone()),
                format!("`{name}` = {v} must be positive"),
            ))
        }
    };
    let search = SearchSpec {
        bounds,
        rate_step: positive(&o.rate_step, "rate_step", 0.25)?,
        map_p_step: positive(&o.p_step, "p_step", 0.02)?,
        refine_rate_step: positive(&o.refine_rate_step, "refine_rate_step", 0.125)?,
        coarse_trials: count(
            src,
            &o.coarse_trials,
            "coarse_trials",
            (trials as i64 / 20).max(relaynet_core::experiments::MIN_TRIALS as i64),
            relaynet_core::experiments::MIN_TRIALS as i64,
        )? as usize,
    };

    Ok(Experiment {
        name,
        mode,
        axis,
        values,
        schemes,
        objectives,
        trials,
        seed,
        workers,
        base,
        contention_auto,
        search,
    })
}

fn sweep_values(src: &str, sweep: &RawSweep, axis_span: Range<usize>) -> Result<Vec<f64>, SpecError> {
    match (&sweep.values, &sweep.start, &sweep.stop, &sweep.step) {
        (Some(list), None, None, None) => {
            if list.get_ref().is_empty() {
                return Err(SpecError::at(src, list.span(), "`values` is empty"));
            }
            Ok(list.get_ref().clone())
        }
        (None, Some(start), Some(stop), Some(step)) => {
            let (a, b, h) = (*start.get_ref(), *stop.get_ref(), *step.get_ref());
            if !(h > 0.0 && h.is_finite()) {
                return Err(SpecError::at(
                    src,
                    step.span(),
                    format!("`step` = {h} must be positive"),
                ));
            }
            if a.is_nan() || b.is_nan() || a > b {
                return Err(SpecError::at(
                    src,
                    stop.span(),
                    format!("`stop` = {b} is below `start` = {a}"),
                ));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 10_000 {
                return Err(SpecError::at(src, step.span(), "sweep has more than 10000 points"));
            }
            Ok((0..=n).map(|k| ((a + k as f64 * h) * 1e9).round() / 1e9).collect())
        }
        _ => Err(SpecError::at(
            src,
            axis_span,
            "sweep needs either `values` or all of `start`, `stop` and `step`",
        )),
    }
}

fn base_config(src: &str, f: &RawFixed) -> Result<(NetworkConfig, Option<u32>), SpecError> {
    let mut cfg = NetworkConfig::new(Scheme::Irc, 1);
    cfg.intensity = value(&f.intensity, 1.0);
    cfg.map_p = value(&f.p, cfg.map_p);
    cfg.alpha = value(&f.alpha, cfg.alpha);
    cfg.rate = value(&f.rate, cfg.rate);
    cfg.diversity = count(src, &f.diversity, "M", 1, 1)? as usize;
    cfg.window_radius = value(
        &f.window_radius,
        relaynet_core::netmodel::default_window_radius(cfg.intensity),
    );
    cfg.retry_cap = count(
        src,
        &f.retry_cap,
        "retry_cap",
        i64::from(NetworkConfig::DEFAULT_RETRY_CAP),
        0,
    )? as u32;
    let contention = match f.selection.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
        None | Some(("argmax", _)) => false,
        Some(("contention", _)) => true,
        Some((other, span)) => {
            return Err(SpecError::at(
                src,
                span,
                format!("unknown selection `{other}`: expected `argmax` or `contention`"),
            ))
        }
    };
    let mut auto_bits = None;
    if contention {
        let bits = count(
            src,
            &f.contention_bits,
            "contention_bits",
            i64::from(DEFAULT_CONTENTION_BITS),
            1,
        )?;
        if f.contention_dmax.is_none() {
            auto_bits = Some(bits as u32);
        }
        // A placeholder scale keeps validation meaningful until the
        // analytic default is resolved per operating point.
        let d_max = value(&f.contention_dmax, 1.0);
        let fallback = f.selection.as_ref().map_or(0..0, |s| s.span());
        let cc = ContentionConfig::new(bits as u32, d_max).map_err(|e| {
            SpecError::at(
                src,
                span_of(&f.contention_dmax, span_of(&f.contention_bits, fallback)),
                format!("{e}; contention needs 1 to 52 bits and a positive `contention_dmax`"),
            )
        })?;
        cfg.selection = RelaySelection::Contention(cc);
    }
    // Report the first invalid field at its own location.
    let checks: [(&Option<Spanned<f64>>, &str); 5] = [
        (&f.intensity, "intensity"),
        (&f.p, "p"),
        (&f.alpha, "alpha"),
        (&f.rate, "R"),
        (&f.window_radius, "window_radius"),
    ];
    if let Err(e) = cfg.validate() {
        let span = checks
            .iter()
            .find(|(field, name)| field.is_some() && e.to_string().contains(&format!("`{}`", field_name(name))))
            .and_then(|(field, _)| field.as_ref().map(|s| s.span()))
            .unwrap_or(0..0);
        return Err(SpecError::at(src, span, format!("[fixed]: {e}")));
    }
    Ok((cfg, auto_bits))
}

/// Name the core library uses when reporting a spec field.
fn field_name(spec_name: &str) -> &str {
    match spec_name {
        "p" => "map_p",
        "R" => "rate",
        other => other,
    }
}

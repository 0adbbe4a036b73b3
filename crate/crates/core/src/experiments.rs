//! Monte Carlo estimation of expected progress and PRD, and the search for
//! the PRD-maximising operating point.
//!
//! Episode `i` of a run with master seed `s` always consumes the stream
//! `episode_rng(s, i)`, whatever the rate, MAP or worker count. Changing an
//! operating point therefore reuses the same networks and slot keys, which
//! turns comparisons between grid points into paired comparisons.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::analytic::{expected_progress_approx, AnalyticParams, TableCache};
use crate::contention::ContentionConfig;
use crate::error::{check, Error, Result};
use crate::netmodel::{sample_network, NetworkConfig, Scheme};
use crate::protocol::{run_episode_rates, ContentionStats, EpisodeResult};
use crate::random::episode_rng;

/// Fewest episodes an estimate may rest on.
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub std_error: f64,
    pub n: usize,
    pub ci95: (f64, f64),
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = if n == 0 {
            0.0
        } else {
            samples.iter().sum::<f64>() / n as f64
        };
        let var = if n < 2 {
            0.0
        } else {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        };
        Self::new(mean, libm::sqrt(var / n.max(1) as f64), n)
    }

    pub fn new(mean: f64, std_error: f64, n: usize) -> Self {
        let half = 1.96 * std_error;
        Self {
            mean,
            std_error,
            n,
            ci95: (mean - half, mean + half),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.mean * factor, self.std_error * factor.abs(), self.n)
    }
}

/// Runs episode jobs, returning results in index order.
pub trait Executor {
    fn run<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(job).collect()
    }
}

/// Per-hop progress estimates for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressEstimate {
    /// `d_1 ..= d_M`.
    pub hops: Vec<Estimate>,
    /// Paired `D_M - D_{M-1}` over the same episodes, or `D_1` when `M = 1`.
    pub increment: Estimate,
    pub failed: usize,
    pub contention: ContentionTotals,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContentionTotals {
    pub rounds: u64,
    pub collisions: u64,
    pub selection_errors: u64,
}

impl ContentionTotals {
    fn add(&mut self, s: &ContentionStats) {
        self.rounds += u64::from(s.rounds);
        self.collisions += u64::from(s.collisions);
        self.selection_errors += u64::from(s.selection_errors);
    }
}

impl ProgressEstimate {
    fn from_episodes<'a>(diversity: usize, episodes: impl Iterator<Item = &'a EpisodeResult> + Clone) -> Self {
        let hops = (0..diversity)
            .map(|h| {
                let v: Vec<f64> = episodes.clone().map(|e| e.progress[h]).collect();
                Estimate::from_samples(&v)
            })
            .collect();
        let inc: Vec<f64> = episodes.clone().map(EpisodeResult::increment).collect();
        let mut contention = ContentionTotals::default();
        let mut failed = 0;
        for e in episodes {
            contention.add(&e.contention);
            failed += usize::from(e.failed);
        }
        Self {
            hops,
            increment: Estimate::from_samples(&inc),
            failed,
            contention,
        }
    }
}

/// Estimates `d_1 ..= d_M` at `config.rate` from `trials` fresh networks.
pub fn estimate_progress<X: Executor>(
    config: &NetworkConfig,
    trials: usize,
    seed: u64,
    exec: &X,
) -> Result<ProgressEstimate> {
    let mut all = estimate_progress_rates(config, &[config.rate], trials, seed, exec)?;
    Ok(all.pop().expect("one rate"))
}

/// [`estimate_progress`] at several rates over identical episodes.
pub fn estimate_progress_rates<X: Executor>(
    config: &NetworkConfig,
    rates: &[f64],
    trials: usize,
    seed: u64,
    exec: &X,
) -> Result<Vec<ProgressEstimate>> {
    if trials < MIN_TRIALS {
        return Err(Error::TooFewTrials {
            trials,
            minimum: MIN_TRIALS,
        });
    }
    config.validate()?;
    let runs: Vec<Result<Vec<EpisodeResult>>> = exec.run(trials, |i| {
        let mut rng = episode_rng(seed, i as u64);
        let real = sample_network(config, &mut rng)?;
        run_episode_rates(config, rates, &real, &mut rng)
    });
    let runs: Vec<Vec<EpisodeResult>> = runs.into_iter().collect::<Result<_>>()?;
    Ok((0..rates.len())
        .map(|lane| ProgressEstimate::from_episodes(config.diversity, runs.iter().map(|r| &r[lane])))
        .collect())
}

/// A PRD estimate; `anomaly` flags a paired increment below zero by more
/// than two standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrdEstimate {
    pub prd: Estimate,
    pub anomaly: bool,
}

/// `R λ p d_1` for NC, `R λ p (d_M - d_{M-1})` for cooperative schemes.
pub fn progress_rate_density(config: &NetworkConfig, d: &ProgressEstimate) -> Result<PrdEstimate> {
    if d.hops.len() != config.diversity {
        return Err(Error::HopCount {
            expected: config.diversity,
            got: d.hops.len(),
        });
    }
    let inc = d.increment;
    Ok(PrdEstimate {
        prd: inc.scaled(config.rate * config.intensity * config.map_p),
        anomaly: inc.mean < -2.0 * inc.std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    Simulated,
    Analytic,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Simulated => "simulated",
            Objective::Analytic => "analytic",
        }
    }
}

/// Search box for `(R, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub rate: (f64, f64),
    pub map_p: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            rate: (0.1, 10.0),
            map_p: (0.01, 0.9),
        }
    }
}

/// Budget and grids of the simulated search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    pub seed: u64,
    pub coarse_trials: usize,
    pub refine_trials: usize,
    pub rate_step: f64,
    pub map_p_step: f64,
    /// Rate spacing during refinement, spanning `±rate_step * 2` around the
    /// coarse optimum.
    pub refine_rate_step: f64,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        Self {
            seed: 1,
            coarse_trials: 2_000,
            refine_trials: 40_000,
            rate_step: 0.25,
            map_p_step: 0.02,
            refine_rate_step: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub bounds: Bounds,
    /// Argument tolerance of the analytic golden-section search.
    pub tolerance: f64,
    /// Holds `p` fixed; `None` applies the default protocol, which fixes `p`
    /// at the NC optimum for IRC with `M > 1`.
    pub fixed_p: Option<f64>,
    pub plan: SimulationPlan,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            tolerance: 1e-3,
            fixed_p: None,
            plan: SimulationPlan::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub rate: f64,
    pub map_p: f64,
    pub prd: f64,
    /// Zero for the analytic objective.
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizationWarning {
    /// The simulated PRD has an interior dip deeper than two standard
    /// errors, so the best grid point is returned as is.
    NotUnimodal,
    /// The optimum sits on the edge of the search box.
    AtBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub rate: f64,
    pub map_p: f64,
    pub prd: f64,
    pub std_error: f64,
    pub objective: Objective,
    /// Final-stage evaluations; `prd` is their maximum.
    pub trace: Vec<TracePoint>,
    /// Screening evaluations of the simulated search.
    pub coarse: Vec<TracePoint>,
    pub warning: Option<OptimizationWarning>,
}

/// Maximises PRD over `(R, p)` for `template.scheme` and
/// `template.diversity`.
pub fn optimize_prd<X: Executor>(
    objective: Objective,
    template: &NetworkConfig,
    options: &OptimizeOptions,
    exec: &X,
) -> Result<OptimizationResult> {
    template.validate()?;
    let b = options.bounds;
    check(
        0.0 < b.rate.0 && b.rate.0 < b.rate.1,
        "rate bounds",
        b.rate.0,
        "0 < lower < upper",
    )?;
    check(
        0.0 < b.map_p.0 && b.map_p.0 < b.map_p.1 && b.map_p.1 < 1.0,
        "map_p bounds",
        b.map_p.0,
        "0 < lower < upper < 1",
    )?;
    check(
        options.tolerance > 0.0,
        "tolerance",
        options.tolerance,
        "a positive value",
    )?;
    let fixed_p = match options.fixed_p {
        Some(p) => Some(p),
        None if template.scheme == Scheme::Irc && template.diversity > 1 => {
            let mut nc = *template;
            nc.scheme = Scheme::Nc;
            nc.diversity = 1;
            Some(optimize_prd(objective, &nc, options, exec)?.map_p)
        }
        None => None,
    };
    match objective {
        Objective::Analytic => optimize_analytic(template, options, fixed_p),
        Objective::Simulated => optimize_simulated(template, options, fixed_p, exec),
    }
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`. Returns the
/// best evaluated `(x, f(x))`.
pub fn golden_section_max<E, F>(lo: f64, hi: f64, tol: f64, mut f: F) -> core::result::Result<(f64, f64), E>
where
    F: FnMut(f64) -> core::result::Result<f64, E>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

fn optimize_analytic(
    template: &NetworkConfig,
    options: &OptimizeOptions,
    fixed_p: Option<f64>,
) -> Result<OptimizationResult> {
    let b = options.bounds;
    let mut cache = TableCache::new();
    let mut trace = Vec::new();
    let mut prd_at = |rate: f64, map_p: f64, trace: &mut Vec<TracePoint>| -> Result<f64> {
        let mut params = AnalyticParams::from_config(template);
        params.rate = rate;
        params.map_p = map_p;
        let prd = rate * params.intensity * map_p * cache.get(&params)?.increment();
        trace.push(TracePoint {
            rate,
            map_p,
            prd,
            std_error: 0.0,
        });
        Ok(prd)
    };
    let mut best_rate_for = |map_p: f64, trace: &mut Vec<TracePoint>| {
        golden_section_max(b.rate.0, b.rate.1, options.tolerance, |r| prd_at(r, map_p, trace))
    };
    match fixed_p {
        Some(p) => {
            best_rate_for(p, &mut trace)?;
        }
        None => {
            golden_section_max(b.map_p.0, b.map_p.1, options.tolerance, |p| {
                best_rate_for(p, &mut trace).map(|(_, v)| v)
            })?;
        }
    }
    let best = *trace
        .iter()
        .max_by(|x, y| x.prd.total_cmp(&y.prd))
        .expect("golden section evaluates");
    let tol = 2.0 * options.tolerance;
    let at_edge = |v: f64, (lo, hi): (f64, f64)| v - lo < tol || hi - v < tol;
    let warning = (at_edge(best.rate, b.rate) || (fixed_p.is_none() && at_edge(best.map_p, b.map_p)))
        .then_some(OptimizationWarning::AtBoundary);
    Ok(OptimizationResult {
        rate: best.rate,
        map_p: best.map_p,
        prd: best.prd,
        std_error: 0.0,
        objective: Objective::Analytic,
        trace,
        coarse: Vec::new(),
        warning,
    })
}

/// Points `lo, lo + step, …` not exceeding `hi`.
fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = libm::floor((hi - lo) / step + 1e-9) as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn snap(v: f64) -> f64 {
    libm::round(v * 1e9) / 1e9
}

/// PRD of every rate in `rates` at one `p`, over identical episodes.
fn prd_lanes<X: Executor>(
    template: &NetworkConfig,
    rates: &[f64],
    map_p: f64,
    trials: usize,
    seed: u64,
    exec: &X,
) -> Result<Vec<TracePoint>> {
    let mut cfg = *template;
    cfg.map_p = map_p;
    cfg.rate = rates[0];
    let estimates = estimate_progress_rates(&cfg, rates, trials, seed, exec)?;
    rates
        .iter()
        .zip(&estimates)
        .map(|(&rate, est)| {
            cfg.rate = rate;
            let prd = progress_rate_density(&cfg, est)?.prd;
            Ok(TracePoint {
                rate,
                map_p,
                prd: prd.mean,
                std_error: prd.std_error,
            })
        })
        .collect()
}

fn best_of(points: &[TracePoint]) -> TracePoint {
    *points
        .iter()
        .max_by(|x, y| x.prd.total_cmp(&y.prd))
        .expect("nonempty grid")
}

/// An interior dip deeper than two combined standard errors along a
/// sequence ordered by the swept parameter.
fn has_dip(profile: &[TracePoint]) -> bool {
    let peak = profile
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.prd.total_cmp(&y.1.prd))
        .map_or(0, |(i, _)| i);
    let rise = |pair: &[TracePoint]| pair[1].prd - pair[0].prd;
    // Rising before the peak and falling after it, up to noise.
    let noise = |pair: &[TracePoint]| {
        2.0 * libm::sqrt(pair[0].std_error * pair[0].std_error + pair[1].std_error * pair[1].std_error)
    };
    profile[..=peak].windows(2).any(|w| rise(w) < -noise(w)) || profile[peak..].windows(2).any(|w| rise(w) > noise(w))
}

fn optimize_simulated<X: Executor>(
    template: &NetworkConfig,
    options: &OptimizeOptions,
    fixed_p: Option<f64>,
    exec: &X,
) -> Result<OptimizationResult> {
    let b = options.bounds;
    let plan = options.plan;
    check(plan.rate_step > 0.0, "rate_step", plan.rate_step, "a positive step")?;
    check(plan.map_p_step > 0.0, "map_p_step", plan.map_p_step, "a positive step")?;
    check(
        plan.refine_rate_step > 0.0,
        "refine_rate_step",
        plan.refine_rate_step,
        "a positive step",
    )?;
    let coarse_rates: Vec<f64> = grid(b.rate.0, b.rate.1, plan.rate_step).into_iter().map(snap).collect();
    let p_grid: Vec<f64> = match fixed_p {
        Some(p) => alloc::vec![p],
        None => grid(b.map_p.0, b.map_p.1, plan.map_p_step)
            .into_iter()
            .map(snap)
            .collect(),
    };

    // Screening: ternary search over the p grid, each probe scanning all
    // rates at once.
    let mut coarse_by_p: BTreeMap<usize, Vec<TracePoint>> = BTreeMap::new();
    let mut probe = |k: usize| -> Result<f64> {
        let pts = match coarse_by_p.entry(k) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(prd_lanes(
                template,
                &coarse_rates,
                p_grid[k],
                plan.coarse_trials,
                plan.seed,
                exec,
            )?),
        };
        Ok(best_of(pts).prd)
    };
    let (mut lo, mut hi) = (0usize, p_grid.len() - 1);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if probe(m1)? < probe(m2)? {
            lo = m1 + 1;
        } else {
            hi = m2 - 1;
        }
    }
    for k in lo..=hi {
        probe(k)?;
    }
    let coarse: Vec<TracePoint> = coarse_by_p.values().flatten().copied().collect();
    let profile: Vec<TracePoint> = coarse_by_p.values().map(|pts| best_of(pts)).collect();
    let rate_profile = {
        let best = best_of(&coarse);
        let k = p_grid.iter().position(|&p| p == best.map_p).expect("probed p");
        coarse_by_p[&k].clone()
    };
    let mut warning = (has_dip(&profile) || has_dip(&rate_profile)).then_some(OptimizationWarning::NotUnimodal);
    let start = best_of(&coarse);

    // Refinement on a finer local grid with the full budget.
    let half_width = 2.0 * plan.rate_step;
    let refine_rates: Vec<f64> = grid(
        (start.rate - half_width).max(b.rate.0),
        (start.rate + half_width).min(b.rate.1),
        plan.refine_rate_step,
    )
    .into_iter()
    .map(snap)
    .collect();
    let half_p = plan.map_p_step / 2.0;
    let in_box = |p: f64| p >= b.map_p.0 - 1e-12 && p <= b.map_p.1 + 1e-12;
    let mut refine_ps: Vec<f64> = match fixed_p {
        Some(p) => alloc::vec![p],
        None => [start.map_p - half_p, start.map_p, start.map_p + half_p]
            .into_iter()
            .map(snap)
            .filter(|&p| in_box(p))
            .collect(),
    };
    let mut trace = Vec::new();
    let mut done: Vec<f64> = Vec::new();
    loop {
        for &p in &refine_ps {
            if !done.contains(&p) {
                trace.extend(prd_lanes(
                    template,
                    &refine_rates,
                    p,
                    plan.refine_trials,
                    plan.seed,
                    exec,
                )?);
                done.push(p);
            }
        }
        let best = best_of(&trace);
        if fixed_p.is_some() {
            break;
        }
        // Step once more along p if the optimum sits on the refine edge.
        let lowest = done.iter().copied().fold(f64::INFINITY, f64::min);
        let highest = done.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let next = if best.map_p == lowest {
            snap(lowest - half_p)
        } else if best.map_p == highest {
            snap(highest + half_p)
        } else {
            break;
        };
        if !in_box(next) || done.len() >= 7 {
            break;
        }
        refine_ps = alloc::vec![next];
    }
    let best = best_of(&trace);
    let edge = |v: f64, (lo, hi): (f64, f64), step: f64| v - lo < step / 2.0 || hi - v < step / 2.0;
    if warning.is_none()
        && (edge(best.rate, b.rate, plan.refine_rate_step) || (fixed_p.is_none() && edge(best.map_p, b.map_p, half_p)))
    {
        warning = Some(OptimizationWarning::AtBoundary);
    }
    Ok(OptimizationResult {
        rate: best.rate,
        map_p: best.map_p,
        prd: best.prd,
        std_error: best.std_error,
        objective: Objective::Simulated,
        trace,
        coarse,
        warning,
    })
}

/// Contention with `bits` bits quantising over `[0, 3 d̃_1]`, the default
/// scale for an operating point.
pub fn default_contention(config: &NetworkConfig, bits: u32) -> Result<ContentionConfig> {
    let mut params = AnalyticParams::from_config(config);
    params.scheme = Scheme::Irc;
    params.diversity = 1;
    let d1 = expected_progress_approx(&params)?.d_tilde[0];
    ContentionConfig::new(bits, 3.0 * d1)
}

/// Simulated PRD at given `(R, p)` points sharing one `p`, over identical
/// episodes.
pub fn simulated_prd<X: Executor>(
    template: &NetworkConfig,
    rates: &[f64],
    map_p: f64,
    trials: usize,
    seed: u64,
    exec: &X,
) -> Result<Vec<TracePoint>> {
    check(!rates.is_empty(), "rates", 0.0, "at least one rate")?;
    prd_lanes(template, rates, map_p, trials, seed, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_moments() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = libm::sqrt(5.0 / 3.0);
        assert!((e.std_error - sd / 2.0).abs() < 1e-15);
        assert!((e.ci95.1 - e.mean - 1.96 * e.std_error).abs() < 1e-15);
        assert!((e.mean - e.ci95.0 - 1.96 * e.std_error).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max::<(), _>(0.0, 10.0, 1e-6, |x| Ok(-(x - 3.3) * (x - 3.3))).unwrap();
        assert!((x - 3.3).abs() < 1e-5);
        assert!(fx <= 0.0 && fx > -1e-9);
    }

    fn est(mean: f64, se: f64, m: usize) -> ProgressEstimate {
        ProgressEstimate {
            hops: alloc::vec![Estimate::new(mean, se, 1000); m],
            increment: Estimate::new(mean, se, 1000),
            failed: 0,
            contention: ContentionTotals::default(),
        }
    }

    #[test]
    fn prd_arithmetic() {
        let mut cfg = NetworkConfig::new(Scheme::Nc, 1);
        cfg.rate = 3.0;
        cfg.map_p = 0.3;
        let prd = progress_rate_density(&cfg, &est(0.25, 0.01, 1)).unwrap();
        assert!((prd.prd.mean - 0.225).abs() < 1e-15);
        assert!((prd.prd.std_error - 0.009).abs() < 1e-15);
        assert!(!prd.anomaly);
        assert_eq!(progress_rate_density(&cfg, &est(0.0, 0.0, 1)).unwrap().prd.mean, 0.0);
        assert!(progress_rate_density(&cfg, &est(-0.1, 0.01, 1)).unwrap().anomaly);
        assert!(matches!(
            progress_rate_density(&cfg, &est(0.1, 0.01, 2)),
            Err(Error::HopCount { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn too_few_trials() {
        let cfg = NetworkConfig::new(Scheme::Nc, 1);
        assert_eq!(
            estimate_progress(&cfg, 99, 0, &Sequential),
            Err(Error::TooFewTrials {
                trials: 99,
                minimum: 100
            })
        );
    }

    #[test]
    fn dip_detection() {
        let pt = |prd| TracePoint {
            rate: 1.0,
            map_p: 0.1,
            prd,
            std_error: 0.001,
        };
        assert!(!has_dip(&[pt(0.1), pt(0.2), pt(0.3), pt(0.25)]));
        assert!(has_dip(&[pt(0.1), pt(0.05), pt(0.3), pt(0.25)]));
        assert!(!has_dip(&[pt(0.1), pt(0.099), pt(0.3)]));
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(grid(0.5, 1.5, 0.25).len(), 5);
        assert_eq!(grid(0.01, 0.09, 0.02).len(), 5);
    }
}

//! Closed forms and the recursive approximation of expected multihop
//! progress.
//!
//! With interference from a homogeneous PPP of transmitters and Rayleigh
//! fading, the SIR seen at `v` from a transmitter at `η` satisfies
//! `P(SIR ≥ s) = exp(-a s^δ)` with `a = π λ p G(α) |v - η|²`. Slot terms are
//! independent, so the probability that `m` accumulated terms reach the rate
//! threshold is an iterated one-dimensional integral over these laws. The
//! decoding-cell area integrates that probability over the plane.
//!
//! Cell areas are normalised so that the single-slot area equals the integral
//! of the success probability, `1 / (λ p G(α) θ^δ)` with `θ = 2^R - 1`.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check, Error, Result};
use crate::netmodel::{NetworkConfig, Scheme};
use crate::quadrature::GaussLegendre;
use crate::random::mix64;

/// `G(α) = πδ / sin(πδ)` with `δ = 2/α`.
pub fn spectral_factor(alpha: f64) -> Result<f64> {
    check(
        alpha > 2.0 && alpha.is_finite(),
        "alpha",
        alpha,
        "a finite value above 2",
    )?;
    let delta = 2.0 / alpha;
    Ok(PI * delta / libm::sin(PI * delta))
}

/// How the per-point decode probability is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointProbability {
    /// Gauss-Legendre quadrature over the exact per-slot SIR laws.
    Quadrature { nodes: usize },
    /// Sampling each slot term from its exact law.
    MonteCarlo { samples: u32, seed: u64 },
}

/// Grid and truncation settings for cell-area integration.
///
/// Lengths are in units of `L = 1 / sqrt(λ p G(α) θ^δ)`, the natural length
/// of the single-slot cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationControls {
    pub radial_step: f64,
    /// Angular cells over the upper half plane; the integrand is symmetric
    /// about the progress axis.
    pub angular_steps: usize,
    /// Integration stops once the outermost unit of `L` holds less than this
    /// fraction of the accumulated mass.
    pub tail_tolerance: f64,
    /// Largest radius beyond the transmitter span before giving up.
    pub max_extent: f64,
    pub point: PointProbability,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            radial_step: 0.05,
            angular_steps: 90,
            tail_tolerance: 1e-3,
            max_extent: 12.0,
            point: PointProbability::Quadrature { nodes: 24 },
        }
    }
}

impl IntegrationControls {
    pub fn validate(&self) -> Result<()> {
        check(
            self.radial_step > 0.0 && self.radial_step.is_finite(),
            "radial_step",
            self.radial_step,
            "a positive finite step",
        )?;
        check(
            self.angular_steps >= 1,
            "angular_steps",
            self.angular_steps as f64,
            "at least 1",
        )?;
        check(
            self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0,
            "tail_tolerance",
            self.tail_tolerance,
            "a value in (0, 1)",
        )?;
        check(
            self.max_extent > 0.0,
            "max_extent",
            self.max_extent,
            "a positive extent",
        )?;
        match self.point {
            PointProbability::Quadrature { nodes } => check(nodes >= 1, "quadrature_nodes", nodes as f64, "at least 1"),
            PointProbability::MonteCarlo { samples, .. } => {
                check(samples >= 1, "samples", samples as f64, "at least 1")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub intensity: f64,
    pub map_p: f64,
    pub alpha: f64,
    pub rate: f64,
    pub diversity: usize,
    pub scheme: Scheme,
    pub integration: IntegrationControls,
}

impl AnalyticParams {
    pub fn new(scheme: Scheme, diversity: usize, map_p: f64, rate: f64, alpha: f64) -> Self {
        Self {
            intensity: 1.0,
            map_p,
            alpha,
            rate,
            diversity,
            scheme,
            integration: IntegrationControls::default(),
        }
    }

    pub fn from_config(cfg: &NetworkConfig) -> Self {
        Self {
            intensity: cfg.intensity,
            map_p: cfg.map_p,
            alpha: cfg.alpha,
            rate: cfg.rate,
            diversity: cfg.diversity,
            scheme: cfg.scheme,
            integration: IntegrationControls::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.intensity > 0.0 && self.intensity.is_finite(),
            "intensity",
            self.intensity,
            "a positive finite value",
        )?;
        check(
            self.map_p > 0.0 && self.map_p < 1.0,
            "map_p",
            self.map_p,
            "a value in (0, 1)",
        )?;
        spectral_factor(self.alpha)?;
        check(
            self.rate > 0.0 && self.rate.is_finite(),
            "rate",
            self.rate,
            "a positive finite value",
        )?;
        check(self.diversity >= 1, "diversity", self.diversity as f64, "at least 1")?;
        if self.scheme == Scheme::Nc && self.diversity != 1 {
            return Err(Error::NcDiversity(self.diversity));
        }
        self.integration.validate()
    }

    pub fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    /// `θ = 2^R - 1`, the SIR a single slot needs.
    pub fn threshold(&self) -> f64 {
        libm::exp2(self.rate) - 1.0
    }

    /// `π λ p G(α)`: multiplies `|v - η|²` in the per-slot exponent.
    fn density_factor(&self) -> f64 {
        PI * self.intensity * self.map_p * spectral_factor(self.alpha).expect("validated alpha")
    }

    /// Natural length `L` of the single-slot cell.
    pub fn length_scale(&self) -> f64 {
        libm::sqrt(PI / (self.density_factor() * libm::pow(self.threshold(), self.delta())))
    }
}

/// `|W_1| = 1 / (λ p G(α) (2^R - 1)^δ)`.
pub fn w1_area(params: &AnalyticParams) -> Result<f64> {
    params.validate()?;
    let l = params.length_scale();
    Ok(l * l)
}

/// `P(I_1 ≥ R)` at distance `r` from a lone reference transmitter.
pub fn success_probability(r: f64, params: &AnalyticParams) -> Result<f64> {
    params.validate()?;
    check(r >= 0.0, "r", r, "a nonnegative distance")?;
    let exponent = params.density_factor() * libm::pow(params.threshold(), params.delta()) * r * r;
    Ok(libm::exp(-exponent))
}

/// Probability that a receiver at `(x, y)` decodes after hearing one slot
/// from each transmitter at `(eta_k, 0)`.
pub fn decode_probability(x: f64, y: f64, etas: &[f64], params: &AnalyticParams) -> Result<f64> {
    params.validate()?;
    check(
        !etas.is_empty() && etas.len() <= params.diversity,
        "transmitters",
        etas.len() as f64,
        "between 1 and the diversity order",
    )?;
    let kf = params.density_factor();
    let a: Vec<f64> = etas.iter().map(|&e| kf * ((x - e) * (x - e) + y * y)).collect();
    let mut eval = PointEvaluator::new(params);
    Ok(eval.probability(&a, 0))
}

/// Per-point decode probability given `a_k` for every slot term.
struct PointEvaluator {
    scheme: Scheme,
    delta: f64,
    /// Remaining target: bits for IRC, accumulated SIR for RC and NC.
    target: f64,
    method: PointProbability,
    rule: GaussLegendre,
}

impl PointEvaluator {
    fn new(params: &AnalyticParams) -> Self {
        let target = match params.scheme {
            Scheme::Irc => params.rate,
            Scheme::Rc | Scheme::Nc => params.threshold(),
        };
        let nodes = match params.integration.point {
            PointProbability::Quadrature { nodes } => nodes,
            PointProbability::MonteCarlo { .. } => 1,
        };
        Self {
            scheme: params.scheme,
            delta: params.delta(),
            target,
            method: params.integration.point,
            rule: GaussLegendre::new(nodes),
        }
    }

    fn probability(&mut self, a: &[f64], point_id: u64) -> f64 {
        match self.method {
            PointProbability::Quadrature { .. } => self.tail(a, self.target),
            PointProbability::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(point_id)));
                let mut hits = 0u32;
                for _ in 0..samples {
                    let mut acc = 0.0;
                    for &ak in a {
                        let e = -libm::log1p(-rng.random::<f64>());
                        let sir = self.sir_from_exp(e, ak);
                        acc += match self.scheme {
                            Scheme::Irc => libm::log2(1.0 + sir),
                            Scheme::Rc | Scheme::Nc => sir,
                        };
                    }
                    if acc >= self.target {
                        hits += 1;
                    }
                }
                hits as f64 / samples as f64
            }
        }
    }

    /// SIR whose tail mass `exp(-a s^δ)` equals `exp(-e)`.
    #[inline]
    fn sir_from_exp(&self, e: f64, a: f64) -> f64 {
        if a <= 0.0 {
            return f64::INFINITY;
        }
        libm::pow(e / a, 1.0 / self.delta)
    }

    /// `P(Σ terms ≥ need)` over the terms with coefficients `a`.
    fn tail(&self, a: &[f64], need: f64) -> f64 {
        if need <= 0.0 {
            return 1.0;
        }
        let (&last, rest) = a.split_last().expect("at least one term");
        let sir_needed = match self.scheme {
            Scheme::Irc => libm::exp2(need) - 1.0,
            Scheme::Rc | Scheme::Nc => need,
        };
        let e_star = last * libm::pow(sir_needed, self.delta);
        let alone = libm::exp(-e_star);
        if rest.is_empty() {
            return alone;
        }
        // Last term short of the target: e in [0, e*), substituted u = 1 - e^{-e}.
        let u_max = -libm::expm1(-e_star);
        let mut partial = 0.0;
        for (u, w) in self.rule.on(0.0, u_max) {
            let e = -libm::log1p(-u);
            let sir = self.sir_from_exp(e, last);
            let left = match self.scheme {
                Scheme::Irc => need - libm::log2(1.0 + sir),
                Scheme::Rc | Scheme::Nc => need - sir,
            };
            partial += w * self.tail(rest, left);
        }
        alone + partial
    }
}

/// `|W_m|`: the decode probability after `m` slots from transmitters at
/// `0, d̃_1, …, d̃_{m-1}` integrated over the plane.
pub fn cell_area(m: usize, params: &AnalyticParams, d_tilde_prefix: &[f64]) -> Result<f64> {
    params.validate()?;
    check(
        m >= 1 && m <= params.diversity,
        "m",
        m as f64,
        "between 1 and the diversity order",
    )?;
    if d_tilde_prefix.len() + 1 != m {
        return Err(Error::HopCount {
            expected: m - 1,
            got: d_tilde_prefix.len(),
        });
    }
    let mut etas = Vec::with_capacity(m);
    etas.push(0.0);
    etas.extend_from_slice(d_tilde_prefix);
    integrate_cell(params, &etas)
}

fn integrate_cell(params: &AnalyticParams, etas: &[f64]) -> Result<f64> {
    let ctl = params.integration;
    let l = params.length_scale();
    let kf = params.density_factor();
    let lo = etas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let centre = 0.5 * (lo + hi);
    let half_span = 0.5 * (hi - lo);
    let limit = half_span + ctl.max_extent * l;
    let dr = ctl.radial_step * l;
    let dtheta = PI / ctl.angular_steps as f64;
    let rings_per_unit = libm::ceil(1.0 / ctl.radial_step) as usize;
    let trig: Vec<(f64, f64)> = (0..ctl.angular_steps)
        .map(|j| libm::sincos((j as f64 + 0.5) * dtheta))
        .collect();

    let mut eval = PointEvaluator::new(params);
    let mut a = vec![0.0; etas.len()];
    let mut recent = vec![0.0; rings_per_unit];
    let mut total = 0.0;
    let mut ring = 0usize;
    loop {
        let r = (ring as f64 + 0.5) * dr;
        let mut mass = 0.0;
        for (j, &(s, c)) in trig.iter().enumerate() {
            let x = centre + r * c;
            let y = r * s;
            for (ak, &e) in a.iter_mut().zip(etas) {
                *ak = kf * ((x - e) * (x - e) + y * y);
            }
            let id = (ring as u64) << 20 | j as u64;
            mass += eval.probability(&a, id);
        }
        // Both half planes.
        let mass = 2.0 * mass * r * dr * dtheta;
        total += mass;
        recent[ring % rings_per_unit] = mass;
        ring += 1;
        let outer = r + 0.5 * dr;
        if outer > half_span + l && ring >= rings_per_unit {
            let tail: f64 = recent.iter().sum();
            if total > 0.0 && tail <= ctl.tail_tolerance * total {
                return Ok(total);
            }
            if outer >= limit {
                return Err(Error::Integration {
                    radius: outer,
                    limit,
                    tail_fraction: if total > 0.0 { tail / total } else { 1.0 },
                });
            }
        }
    }
}

/// `1 - (1 - e^{-c}) / c`: the expected maximum of `K ~ Poisson(c)` uniforms
/// on `[0, 1]`, counting an empty draw as 0.
pub fn progress_kernel(c: f64) -> f64 {
    if c < 1e-4 {
        c * (0.5 - c * (1.0 / 6.0 - c / 24.0))
    } else {
        1.0 + libm::expm1(-c) / c
    }
}

/// One recursion step: `(c_m, d̃_m)` from `|W_m|` and `d̃_{m-1}`.
pub fn recursion_step(area: f64, d_prev: f64, intensity: f64, map_p: f64) -> (f64, f64) {
    let side = libm::sqrt(area);
    let c = intensity * (1.0 - map_p) / 2.0 * (area + d_prev * side);
    (c, (side + d_prev) / 2.0 * progress_kernel(c))
}

/// `d̃_m`, `|W_m|` and `c_m` for `m = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTable {
    pub d_tilde: Vec<f64>,
    pub cell_area: Vec<f64>,
    pub c: Vec<f64>,
}

impl AnalyticTable {
    /// `d̃_M - d̃_{M-1}` with `d̃_0 = 0`.
    pub fn increment(&self) -> f64 {
        match self.d_tilde.len() {
            0 => 0.0,
            1 => self.d_tilde[0],
            m => self.d_tilde[m - 1] - self.d_tilde[m - 2],
        }
    }

    /// Recursion over given cell areas.
    pub fn from_areas(areas: &[f64], intensity: f64, map_p: f64) -> Self {
        let mut table = Self {
            d_tilde: Vec::with_capacity(areas.len()),
            cell_area: areas.to_vec(),
            c: Vec::with_capacity(areas.len()),
        };
        let mut d_prev = 0.0;
        for &w in areas {
            let (c, d) = recursion_step(w, d_prev, intensity, map_p);
            table.c.push(c);
            table.d_tilde.push(d);
            d_prev = d;
        }
        table
    }
}

/// Runs the recursion up to `params.diversity`, integrating each new cell
/// around the transmitters placed so far.
pub fn expected_progress_approx(params: &AnalyticParams) -> Result<AnalyticTable> {
    let w1 = w1_area(params)?;
    let mut table = AnalyticTable::from_areas(&[w1], params.intensity, params.map_p);
    for m in 2..=params.diversity {
        let w = cell_area(m, params, &table.d_tilde)?;
        let (c, d) = recursion_step(w, table.d_tilde[m - 2], params.intensity, params.map_p);
        table.cell_area.push(w);
        table.c.push(c);
        table.d_tilde.push(d);
    }
    Ok(table)
}

/// `R λ p (d̃_M - d̃_{M-1})`.
pub fn analytic_prd(params: &AnalyticParams) -> Result<f64> {
    let table = expected_progress_approx(params)?;
    Ok(params.rate * params.intensity * params.map_p * table.increment())
}

type CacheKey = (u64, u64, u64, u64, usize, u8);

/// Memoises tables by exact parameter bits; the integration controls must
/// stay fixed for the lifetime of a cache.
#[derive(Debug, Default, Clone)]
pub struct TableCache {
    tables: BTreeMap<CacheKey, AnalyticTable>,
}

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn get(&mut self, params: &AnalyticParams) -> Result<&AnalyticTable> {
        let key = (
            params.intensity.to_bits(),
            params.map_p.to_bits(),
            params.alpha.to_bits(),
            params.rate.to_bits(),
            params.diversity,
            params.scheme as u8,
        );
        Ok(match self.tables.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(expected_progress_approx(params)?),
        })
    }
}

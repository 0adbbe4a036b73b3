//! Node fields, slotted-ALOHA slots, fading and SIR.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};

use crate::error::{check, Error, Result};
use crate::protocol::RelaySelection;
use crate::random::{role_uniform, FadingField};

/// Windows with fewer expected nodes than this are rejected.
pub const MIN_EXPECTED_NODES: f64 = 100.0;

/// Distances below this are floored before the path loss is applied.
pub const DISTANCE_FLOOR: f64 = 1e-9;

/// Combining scheme used by potential relays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// No cooperation: only the current transmission counts.
    Nc,
    /// Repetition (Chase) combining: SIRs of the received blocks add up.
    Rc,
    /// Incremental redundancy combining: mutual information adds up.
    Irc,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Nc, Scheme::Rc, Scheme::Irc];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Nc => "NC",
            Scheme::Rc => "RC",
            Scheme::Irc => "IRC",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheme;

impl fmt::Display for UnknownScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of NC, RC, IRC")
    }
}

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "NC" | "nc" => Ok(Scheme::Nc),
            "RC" | "rc" => Ok(Scheme::Rc),
            "IRC" | "irc" => Ok(Scheme::Irc),
            _ => Err(UnknownScheme),
        }
    }
}

/// Parameters of one simulated operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// Node intensity λ (nodes per unit area).
    pub intensity: f64,
    /// ALOHA medium-access probability p.
    pub map_p: f64,
    /// Path-loss exponent α.
    pub alpha: f64,
    /// Code rate R in bits/s/Hz.
    pub rate: f64,
    /// Diversity order M: number of codeword blocks a node combines.
    pub diversity: usize,
    pub scheme: Scheme,
    /// Radius of the simulation disc around the source.
    pub window_radius: f64,
    pub seed: u64,
    /// Consecutive retransmissions allowed before an episode gives up.
    pub retry_cap: u32,
    pub selection: RelaySelection,
}

impl NetworkConfig {
    pub const DEFAULT_RETRY_CAP: u32 = 10;

    /// A configuration at λ = 1, p = 0.3, α = 4, R = 3 with the default window.
    pub fn new(scheme: Scheme, diversity: usize) -> Self {
        Self {
            intensity: 1.0,
            map_p: 0.3,
            alpha: 4.0,
            rate: 3.0,
            diversity,
            scheme,
            window_radius: default_window_radius(1.0),
            seed: 0,
            retry_cap: Self::DEFAULT_RETRY_CAP,
            selection: RelaySelection::Argmax,
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
        check(
            self.alpha > 2.0 && self.alpha.is_finite(),
            "alpha",
            self.alpha,
            "a finite value above 2",
        )?;
        check(
            self.rate > 0.0 && self.rate.is_finite(),
            "rate",
            self.rate,
            "a positive finite value",
        )?;
        check(
            self.diversity >= 1,
            "diversity",
            self.diversity as f64,
            "an integer >= 1",
        )?;
        check(
            self.window_radius > 0.0 && self.window_radius.is_finite(),
            "window_radius",
            self.window_radius,
            "a positive finite value",
        )?;
        if self.scheme == Scheme::Nc && self.diversity != 1 {
            return Err(Error::NcDiversity(self.diversity));
        }
        if let RelaySelection::Contention(cfg) = self.selection {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn expected_nodes(&self) -> f64 {
        self.intensity * PI * self.window_radius * self.window_radius
    }
}

/// Default window: radius `20 / sqrt(λ)`, about 1257 expected nodes.
pub fn default_window_radius(intensity: f64) -> f64 {
    20.0 / libm::sqrt(intensity)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn scaled(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Node coordinates of one Poisson draw. The source sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub points: Vec<Point>,
    pub source_index: usize,
}

impl NetworkRealization {
    /// Builds a realization from relay coordinates; the source is prepended
    /// at the origin and gets index 0.
    pub fn from_points(relays: impl IntoIterator<Item = Point>) -> Self {
        let mut points = Vec::new();
        points.push(Point::ORIGIN);
        points.extend(relays);
        Self {
            points,
            source_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Progress of node `i` towards the destination on the positive x-axis.
    #[inline]
    pub fn progress(&self, i: usize) -> f64 {
        self.points[i].x
    }
}

/// Samples a Poisson field in the window disc and adds the source at the
/// origin.
pub fn sample_network<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<NetworkRealization> {
    config.validate()?;
    let expected = config.expected_nodes();
    if expected < MIN_EXPECTED_NODES {
        return Err(Error::WindowTooSmall {
            expected_nodes: expected,
            minimum: MIN_EXPECTED_NODES,
        });
    }
    let count = Poisson::new(expected).expect("positive finite mean").sample(rng) as usize;
    let mut points = Vec::with_capacity(count + 1);
    points.push(Point::ORIGIN);
    for _ in 0..count {
        let r = config.window_radius * libm::sqrt(rng.random::<f64>());
        let theta = 2.0 * PI * rng.random::<f64>();
        points.push(Point::new(r * libm::cos(theta), r * libm::sin(theta)));
    }
    Ok(NetworkRealization {
        points,
        source_index: 0,
    })
}

/// One slot: ALOHA roles plus the fading field.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub key: u64,
    pub forced_tx: usize,
    transmit: Vec<bool>,
    transmitters: Vec<usize>,
    pub fading: FadingField,
}

impl SlotState {
    /// Slot whose randomness is fully determined by `key`.
    pub fn from_key(node_count: usize, map_p: f64, forced_tx: usize, key: u64) -> Self {
        assert!(forced_tx < node_count, "forced transmitter {forced_tx} out of range");
        let transmit: Vec<bool> = (0..node_count)
            .map(|i| i == forced_tx || role_uniform(key, i) < map_p)
            .collect();
        let transmitters = transmit
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| t.then_some(i))
            .collect();
        Self {
            key,
            forced_tx,
            transmit,
            transmitters,
            fading: FadingField::new(key),
        }
    }

    #[inline]
    pub fn is_transmitter(&self, node: usize) -> bool {
        self.transmit[node]
    }

    /// Transmitting nodes in increasing index order, `forced_tx` included.
    pub fn transmitters(&self) -> &[usize] {
        &self.transmitters
    }
}

/// Draws ALOHA roles and fading for a slot in which `forced_tx` transmits.
///
/// Panics if `forced_tx` is not a node of `real`.
pub fn draw_slot<R: RngCore + ?Sized>(
    real: &NetworkRealization,
    config: &NetworkConfig,
    forced_tx: usize,
    rng: &mut R,
) -> SlotState {
    SlotState::from_key(real.len(), config.map_p, forced_tx, rng.next_u64())
}

/// A receiving location together with the key that addresses its fading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub key: u64,
    pub at: Point,
}

impl Receiver {
    const PROBE_BASE: u64 = 1 << 63;

    pub fn node(real: &NetworkRealization, index: usize) -> Self {
        Self {
            key: index as u64,
            at: real.points[index],
        }
    }

    /// A location that is not a node, such as a measurement probe.
    pub fn probe(id: u64, at: Point) -> Self {
        Self {
            key: Self::PROBE_BASE | id,
            at,
        }
    }
}

/// Power-law attenuation `d^-α` with the distance floor applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss {
    Three,
    Four,
    General { half_alpha: f64 },
}

impl PathLoss {
    pub fn new(alpha: f64) -> Self {
        if alpha == 4.0 {
            PathLoss::Four
        } else if alpha == 3.0 {
            PathLoss::Three
        } else {
            PathLoss::General {
                half_alpha: alpha / 2.0,
            }
        }
    }

    #[inline]
    pub fn attenuation(self, dist2: f64) -> f64 {
        let d2 = dist2.max(DISTANCE_FLOOR * DISTANCE_FLOOR);
        match self {
            PathLoss::Four => 1.0 / (d2 * d2),
            PathLoss::Three => 1.0 / (d2 * libm::sqrt(d2)),
            PathLoss::General { half_alpha } => libm::pow(d2, -half_alpha),
        }
    }
}

/// SIR at `rx` for the signal of `tx`, with every other transmitter of the
/// slot interfering. Transmit power is 1 and noise is zero.
///
/// Returns `f64::INFINITY` when nobody else transmits.
pub fn compute_sir(rx: &Receiver, tx: usize, slot: &SlotState, real: &NetworkRealization, alpha: f64) -> f64 {
    let seed = slot.fading.receiver_seed(rx.key);
    let link = |t: usize| (real.points[t], FadingField::gain_at(seed, t));
    sir_from_links(
        rx.at,
        link(tx),
        slot.transmitters().iter().filter(|&&t| t != tx).map(|&t| link(t)),
        alpha,
    )
}

/// SIR from explicit `(position, |h|^2)` links.
pub fn sir_from_links(
    rx: Point,
    desired: (Point, f64),
    interferers: impl IntoIterator<Item = (Point, f64)>,
    alpha: f64,
) -> f64 {
    let loss = PathLoss::new(alpha);
    let power = |(at, gain): (Point, f64)| gain * loss.attenuation(rx.dist2(at));
    let interference: f64 = interferers.into_iter().map(power).sum();
    if interference > 0.0 {
        power(desired) / interference
    } else {
        f64::INFINITY
    }
}

/// `log2(1 + sir)` in bits; an infinite SIR gives infinite information.
#[inline]
pub fn mutual_information(sir: f64) -> f64 {
    libm::log2(1.0 + sir)
}

/// Decision rule shared by every combiner: `sum` is the accumulated MI for
/// IRC and the accumulated SIR for RC/NC.
#[inline]
pub(crate) fn metric_decodes(sum: f64, scheme: Scheme, rate: f64) -> bool {
    match scheme {
        Scheme::Irc => sum >= rate,
        Scheme::Rc | Scheme::Nc => mutual_information(sum) >= rate,
    }
}

/// Decides whether the stored per-block contributions decode at `rate`.
///
/// Contributions are MI values for IRC and SIR values for RC and NC, one per
/// distinct block index.
pub fn accumulate_metric(contributions: &[f64], scheme: Scheme, rate: f64, diversity: usize) -> Result<bool> {
    let limit = if scheme == Scheme::Nc { 1 } else { diversity };
    if contributions.len() > limit {
        return Err(Error::TooManyContributions {
            count: contributions.len(),
            diversity: limit,
        });
    }
    if contributions.is_empty() {
        return Ok(false);
    }
    Ok(metric_decodes(contributions.iter().sum(), scheme, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::episode_rng;
    use alloc::vec;

    fn cfg() -> NetworkConfig {
        NetworkConfig::new(Scheme::Irc, 2)
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = cfg();
        c.alpha = 2.0;
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidParameter { name: "alpha", .. })
        ));
        let mut c = cfg();
        c.map_p = 1.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.intensity = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.diversity = 0;
        assert!(c.validate().is_err());
        let c = NetworkConfig::new(Scheme::Nc, 2);
        assert_eq!(c.validate(), Err(Error::NcDiversity(2)));
    }

    #[test]
    fn tiny_window_is_rejected() {
        let mut c = cfg();
        c.window_radius = 0.1;
        let err = sample_network(&c, &mut episode_rng(1, 0)).unwrap_err();
        match err {
            Error::WindowTooSmall { expected_nodes, .. } => {
                assert!((expected_nodes - 0.01 * PI).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn source_is_at_origin_and_points_in_window() {
        let c = cfg();
        for e in 0..20 {
            let real = sample_network(&c, &mut episode_rng(5, e)).unwrap();
            assert_eq!(real.points[real.source_index], Point::ORIGIN);
            assert!(real
                .points
                .iter()
                .all(|p| p.dist2(Point::ORIGIN) <= c.window_radius * c.window_radius));
        }
    }

    #[test]
    fn forced_transmitter_always_transmits() {
        let real = NetworkRealization::from_points((1..50).map(|i| Point::new(i as f64, 0.0)));
        for key in 0..100u64 {
            let slot = SlotState::from_key(real.len(), 0.01, 7, key);
            assert!(slot.is_transmitter(7));
            assert!(slot.transmitters().contains(&7));
        }
    }

    #[test]
    fn sir_symmetric_pair_is_one() {
        let rx = Point::ORIGIN;
        for alpha in [2.5, 3.0, 4.0, 5.5] {
            let sir = sir_from_links(rx, (Point::new(1.0, 0.0), 1.0), [(Point::new(0.0, -1.0), 1.0)], alpha);
            assert!((sir - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sir_direct_formula() {
        // 2 * 1^-4 / (1 * 2^-4) = 32
        let sir = sir_from_links(
            Point::ORIGIN,
            (Point::new(1.0, 0.0), 2.0),
            [(Point::new(-2.0, 0.0), 1.0)],
            4.0,
        );
        assert!((sir - 32.0).abs() < 1e-12);
    }

    #[test]
    fn compute_sir_uses_slot_fading() {
        let real = NetworkRealization::from_points([Point::new(2.0, 0.0), Point::new(1.0, 0.0)]);
        let slot = SlotState::from_key(real.len(), 1e-12, 0, 9);
        let slot = SlotState {
            transmit: vec![true, true, false],
            transmitters: vec![0, 1],
            ..slot
        };
        let rx = Receiver::node(&real, 2);
        let g0 = slot.fading.gain(0, rx.key);
        let g1 = slot.fading.gain(1, rx.key);
        for alpha in [2.5, 3.0, 4.0] {
            let sir = compute_sir(&rx, 0, &slot, &real, alpha);
            assert!((sir - g0 / g1).abs() < 1e-12 * (g0 / g1));
        }
    }

    #[test]
    fn sir_without_interferers_is_infinite() {
        let real = NetworkRealization::from_points([Point::new(1.0, 0.0)]);
        let slot = SlotState::from_key(real.len(), 1e-12, 0, 1);
        assert_eq!(slot.transmitters(), &[0]);
        let sir = compute_sir(&Receiver::node(&real, 1), 0, &slot, &real, 4.0);
        assert_eq!(sir, f64::INFINITY);
        assert_eq!(mutual_information(sir), f64::INFINITY);
    }

    #[test]
    fn path_loss_fast_paths_match_pow() {
        for d2 in [1e-3, 0.5, 1.0, 4.0, 123.0] {
            for alpha in [3.0, 4.0] {
                let fast = PathLoss::new(alpha).attenuation(d2);
                let slow = libm::pow(d2, -alpha / 2.0);
                assert!((fast - slow).abs() <= 1e-13 * slow);
            }
        }
        // Coincident points are floored, not divided by zero.
        assert!(PathLoss::new(4.0).attenuation(0.0).is_finite());
    }

    #[test]
    fn mutual_information_values() {
        assert_eq!(mutual_information(1.0), 1.0);
        assert_eq!(mutual_information(7.0), 3.0);
        assert_eq!(mutual_information(0.0), 0.0);
    }

    #[test]
    fn accumulate_metric_examples() {
        assert!(accumulate_metric(&[1.5, 1.6], Scheme::Irc, 3.0, 2).unwrap());
        // log2(1 + 3 + 3) = 2.807 < 3
        assert!(!accumulate_metric(&[3.0, 3.0], Scheme::Rc, 3.0, 2).unwrap());
        // log2(8) = 3, inclusive boundary
        assert!(accumulate_metric(&[7.0], Scheme::Nc, 3.0, 1).unwrap());
        assert!(!accumulate_metric(&[], Scheme::Irc, 3.0, 2).unwrap());
        assert_eq!(
            accumulate_metric(&[1.0, 1.0, 1.0], Scheme::Irc, 3.0, 2),
            Err(Error::TooManyContributions { count: 3, diversity: 2 })
        );
        assert!(accumulate_metric(&[1.0, 1.0], Scheme::Nc, 3.0, 2).is_err());
    }

    #[test]
    fn scheme_round_trips_through_strings() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>(), Ok(s));
        }
        assert!("XYZ".parse::<Scheme>().is_err());
    }
}

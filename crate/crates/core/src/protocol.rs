//! The slot-by-slot relaying engine.
//!
//! An episode follows one packet from the source at the origin for `M`
//! transmission slots. Each slot the current forwarding node transmits its
//! codeword block, every node in receive mode stores what it heard, decode
//! flags are refreshed, and the decoder with the most progress becomes the
//! next forwarding relay. `D_h` is the progress reached after the `h`-th
//! transmission.
//!
//! When no eligible decoder exists the same node retransmits the same block
//! in the next slot; that slot adds no progress unless new nodes decode.
//! After `retry_cap` consecutive retransmissions the episode gives up and
//! its progress stays frozen.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::contention::{run_contention, Contender, ContentionConfig};
use crate::error::{Error, Result};
use crate::netmodel::{
    metric_decodes, mutual_information, NetworkConfig, NetworkRealization, PathLoss, Scheme, DISTANCE_FLOOR,
};
use crate::random::{role_uniform, FadingField};

/// Block sent by forwarding node `hop` (the source is hop 0), in `1..=M`.
#[inline]
pub fn block_index(hop: usize, diversity: usize) -> usize {
    hop % diversity + 1
}

/// How decoders pick the next forwarding relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelaySelection {
    /// Exact argmax of progress, ties to the lowest node index.
    Argmax,
    /// Pulse-based P-bit contention.
    Contention(ContentionConfig),
}

/// Sticky per-node reception state for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLedger {
    diversity: usize,
    /// Best contribution per (node, block); NaN when the block was never heard.
    blocks: Vec<f64>,
    decoded: Vec<bool>,
    progress: Vec<f64>,
}

impl NodeLedger {
    /// Fresh ledger in which only the source holds the packet.
    pub fn new(real: &NetworkRealization, diversity: usize) -> Self {
        let n = real.len();
        let mut decoded = vec![false; n];
        decoded[real.source_index] = true;
        Self {
            diversity,
            blocks: vec![f64::NAN; n * diversity],
            decoded,
            progress: real.points.iter().map(|p| p.x).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.decoded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decoded.is_empty()
    }

    pub fn diversity(&self) -> usize {
        self.diversity
    }

    #[inline]
    pub fn progress(&self, node: usize) -> f64 {
        self.progress[node]
    }

    #[inline]
    pub fn is_decoded(&self, node: usize) -> bool {
        self.decoded[node]
    }

    /// Stored contributions of `node`, one per distinct block heard.
    pub fn contributions(&self, node: usize) -> impl Iterator<Item = f64> + '_ {
        self.blocks[node * self.diversity..(node + 1) * self.diversity]
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
    }

    /// Stores `value` for `block` (1-based), keeping the larger of repeated
    /// receptions of the same block.
    #[inline]
    pub fn record(&mut self, node: usize, block: usize, value: f64) {
        let slot = &mut self.blocks[node * self.diversity + block - 1];
        if slot.is_nan() || value > *slot {
            *slot = value;
        }
    }

    /// Re-evaluates the decode flag of `node`. A decoded node stays decoded.
    #[inline]
    pub fn refresh(&mut self, node: usize, scheme: Scheme, rate: f64) -> bool {
        if !self.decoded[node] {
            let sum: f64 = self.contributions(node).sum();
            self.decoded[node] = metric_decodes(sum, scheme, rate);
        }
        self.decoded[node]
    }

    pub fn mark_decoded(&mut self, node: usize) {
        self.decoded[node] = true;
    }

    /// `max(0, largest progress among decoded nodes)`.
    pub fn best_progress(&self) -> f64 {
        self.decoded
            .iter()
            .zip(&self.progress)
            .filter(|(&d, _)| d)
            .fold(0.0, |best, (_, &x)| if x > best { x } else { best })
    }
}

/// Decoded node with the most positive progress that is not `excluded`;
/// ties go to the lowest index.
pub fn select_relay(ledger: &NodeLedger, excluded: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (node, &skip) in excluded.iter().enumerate().take(ledger.len()) {
        let x = ledger.progress(node);
        if ledger.is_decoded(node) && x > 0.0 && !skip && best.is_none_or(|b| x > ledger.progress(b)) {
            best = Some(node);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContentionStats {
    pub rounds: u32,
    /// Rounds that ended with more than one surviving relay.
    pub collisions: u32,
    /// Rounds whose winner differs from the exact argmax.
    pub selection_errors: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// `D_1 ..= D_M`.
    pub progress: Vec<f64>,
    /// Forwarding relays in selection order.
    pub relays: Vec<usize>,
    /// Retransmissions made by the source (entry 0) and by each relay.
    pub retransmissions: Vec<u32>,
    /// The retry cap was exhausted and progress froze.
    pub failed: bool,
    pub contention: ContentionStats,
}

impl EpisodeResult {
    /// `D_M - D_{M-1}`, or `D_1` for a single slot.
    pub fn increment(&self) -> f64 {
        match self.progress.len() {
            0 => 0.0,
            1 => self.progress[0],
            m => self.progress[m - 1] - self.progress[m - 2],
        }
    }
}

/// Runs one episode at `config.rate`.
pub fn run_episode<R: RngCore + ?Sized>(
    config: &NetworkConfig,
    real: &NetworkRealization,
    rng: &mut R,
) -> Result<EpisodeResult> {
    let mut out = run_episode_rates(config, &[config.rate], real, rng)?;
    Ok(out.pop().expect("one lane"))
}

/// Runs the same episode at several code rates.
///
/// All rates see identical slot keys, hence identical roles and fading, and
/// each result equals what [`run_episode`] returns for that rate with the
/// same stream. Slots in which several rates share a transmitter are
/// evaluated once.
pub fn run_episode_rates<R: RngCore + ?Sized>(
    config: &NetworkConfig,
    rates: &[f64],
    real: &NetworkRealization,
    rng: &mut R,
) -> Result<Vec<EpisodeResult>> {
    config.validate()?;
    for &rate in rates {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: rate,
                expected: "a positive finite value",
            });
        }
    }
    let mut engine = Engine::new(config, real);
    let mut lanes: Vec<Lane> = rates.iter().map(|&rate| Lane::new(rate, config, real)).collect();
    for step in 0..config.diversity {
        let key = rng.next_u64();
        if lanes.iter().all(|l| l.done) {
            continue;
        }
        engine.evaluate_slot(key, &lanes);
        for lane in lanes.iter_mut().filter(|l| !l.done) {
            lane.absorb(&engine, config, step);
        }
    }
    Ok(lanes.into_iter().map(|l| l.result).collect())
}

/// Per-rate state of an episode.
struct Lane {
    rate: f64,
    ledger: NodeLedger,
    excluded: Vec<bool>,
    transmitter: usize,
    /// Relay ordinal of the transmitter; the source is 0.
    stage: usize,
    retries: u32,
    best: f64,
    done: bool,
    result: EpisodeResult,
}

impl Lane {
    fn new(rate: f64, config: &NetworkConfig, real: &NetworkRealization) -> Self {
        let mut excluded = vec![false; real.len()];
        excluded[real.source_index] = true;
        Self {
            rate,
            ledger: NodeLedger::new(real, config.diversity),
            excluded,
            transmitter: real.source_index,
            stage: 0,
            retries: 0,
            best: 0.0,
            done: false,
            result: EpisodeResult {
                progress: Vec::with_capacity(config.diversity),
                relays: Vec::new(),
                retransmissions: vec![0],
                failed: false,
                contention: ContentionStats::default(),
            },
        }
    }

    fn absorb(&mut self, engine: &Engine, config: &NetworkConfig, step: usize) {
        let group = engine.group_of(self.transmitter);
        let block = block_index(self.stage, config.diversity);
        for (slot, &node) in engine.candidates.iter().enumerate() {
            let sir = group.sir[slot];
            if sir.is_nan() {
                continue;
            }
            let value = match config.scheme {
                Scheme::Irc => group.mi[slot],
                Scheme::Rc | Scheme::Nc => sir,
            };
            self.ledger.record(node, block, value);
            if !self.ledger.is_decoded(node) && self.ledger.refresh(node, config.scheme, self.rate) {
                let x = self.ledger.progress(node);
                if x > self.best {
                    self.best = x;
                }
            }
        }
        self.result.progress.push(self.best);

        let relay = match config.selection {
            RelaySelection::Argmax => select_relay(&self.ledger, &self.excluded),
            RelaySelection::Contention(cfg) => self.contend(engine, &cfg),
        };
        let last = step + 1 == config.diversity;
        match relay {
            Some(node) => {
                self.excluded[node] = true;
                self.result.relays.push(node);
                self.result.retransmissions.push(0);
                self.transmitter = node;
                self.stage += 1;
                self.retries = 0;
            }
            None if last => {}
            None => {
                self.retries += 1;
                if self.retries > config.retry_cap {
                    self.result.failed = true;
                    self.done = true;
                    self.result.progress.resize(config.diversity, self.best);
                } else {
                    *self.result.retransmissions.last_mut().expect("source stage") += 1;
                }
            }
        }
    }

    fn contend(&mut self, engine: &Engine, cfg: &ContentionConfig) -> Option<usize> {
        let mut contenders: Vec<Contender> = engine
            .candidates
            .iter()
            .filter(|&&n| self.ledger.is_decoded(n) && !self.excluded[n])
            .map(|&n| Contender::new(n, self.ledger.progress(n), cfg).expect("candidates have positive progress"))
            .collect();
        if contenders.is_empty() {
            return None;
        }
        let outcome = run_contention(&mut contenders, cfg);
        let stats = &mut self.result.contention;
        stats.rounds += 1;
        if outcome.survivors > 1 {
            stats.collisions += 1;
        }
        if outcome.winner != select_relay(&self.ledger, &self.excluded) {
            stats.selection_errors += 1;
        }
        outcome.winner
    }
}

/// SIRs of one slot for one forced transmitter, indexed like `candidates`.
/// NaN marks nodes that were transmitting.
struct Group {
    tx: usize,
    sir: Vec<f64>,
    mi: Vec<f64>,
}

/// Slot evaluation shared by all lanes of an episode.
struct Engine<'a> {
    real: &'a NetworkRealization,
    map_p: f64,
    loss: PathLoss,
    scheme: Scheme,
    /// Nodes with positive progress; the only ones that can affect `D` or
    /// become relays.
    candidates: Vec<usize>,
    aloha: Vec<bool>,
    groups: Vec<Group>,
}

impl<'a> Engine<'a> {
    fn new(config: &NetworkConfig, real: &'a NetworkRealization) -> Self {
        let candidates = (0..real.len())
            .filter(|&i| i != real.source_index && real.progress(i) > 0.0)
            .collect();
        Self {
            real,
            map_p: config.map_p,
            loss: PathLoss::new(config.alpha),
            scheme: config.scheme,
            candidates,
            aloha: vec![false; real.len()],
            groups: Vec::new(),
        }
    }

    fn group_of(&self, tx: usize) -> &Group {
        self.groups
            .iter()
            .find(|g| g.tx == tx)
            .expect("slot evaluated for every active transmitter")
    }

    fn evaluate_slot(&mut self, key: u64, lanes: &[Lane]) {
        let points = &self.real.points;
        let mut ax = Vec::new();
        let mut ay = Vec::new();
        let mut ids = Vec::new();
        for (i, role) in self.aloha.iter_mut().enumerate() {
            *role = role_uniform(key, i) < self.map_p;
            if *role {
                ax.push(points[i].x);
                ay.push(points[i].y);
                ids.push(i);
            }
        }
        let mut txs: Vec<usize> = lanes.iter().filter(|l| !l.done).map(|l| l.transmitter).collect();
        txs.sort_unstable();
        txs.dedup();
        let n = self.candidates.len();
        self.groups = txs
            .iter()
            .map(|&tx| Group {
                tx,
                sir: vec![f64::NAN; n],
                mi: Vec::new(),
            })
            .collect();

        let fading = FadingField::new(key);
        let aloha = &self.aloha;
        let floor2 = DISTANCE_FLOOR * DISTANCE_FLOOR;
        match self.loss {
            PathLoss::Four => fill(
                |d2: f64| {
                    let d2 = d2.max(floor2);
                    1.0 / (d2 * d2)
                },
                points,
                &self.candidates,
                aloha,
                (&ax, &ay, &ids),
                &fading,
                &mut self.groups,
            ),
            PathLoss::Three => fill(
                |d2: f64| {
                    let d2 = d2.max(floor2);
                    1.0 / (d2 * libm::sqrt(d2))
                },
                points,
                &self.candidates,
                aloha,
                (&ax, &ay, &ids),
                &fading,
                &mut self.groups,
            ),
            PathLoss::General { half_alpha } => fill(
                |d2: f64| libm::pow(d2.max(floor2), -half_alpha),
                points,
                &self.candidates,
                aloha,
                (&ax, &ay, &ids),
                &fading,
                &mut self.groups,
            ),
        }
        if self.scheme == Scheme::Irc {
            for g in &mut self.groups {
                g.mi = g.sir.iter().map(|&s| mutual_information(s)).collect();
            }
        }
    }
}

#[inline(always)]
fn fill<F: Fn(f64) -> f64>(
    attenuation: F,
    points: &[crate::netmodel::Point],
    candidates: &[usize],
    aloha: &[bool],
    (ax, ay, ids): (&[f64], &[f64], &[usize]),
    fading: &FadingField,
    groups: &mut [Group],
) {
    for (slot, &rx) in candidates.iter().enumerate() {
        if aloha[rx] {
            continue;
        }
        let at = points[rx];
        let seed = fading.receiver_seed(rx as u64);
        let mut total = 0.0;
        for k in 0..ids.len() {
            let dx = at.x - ax[k];
            let dy = at.y - ay[k];
            total += FadingField::gain_at(seed, ids[k]) * attenuation(dx * dx + dy * dy);
        }
        for g in groups.iter_mut() {
            if g.tx == rx {
                continue;
            }
            let txp = points[g.tx];
            let dx = at.x - txp.x;
            let dy = at.y - txp.y;
            let desired = FadingField::gain_at(seed, g.tx) * attenuation(dx * dx + dy * dy);
            let interference = if aloha[g.tx] { total - desired } else { total };
            g.sir[slot] = if interference > 0.0 {
                desired / interference
            } else {
                f64::INFINITY
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{sample_network, Point};
    use crate::random::episode_rng;

    #[test]
    fn block_schedule() {
        for m in 1..6 {
            assert_eq!(block_index(0, m), 1);
        }
        assert_eq!(block_index(4, 3), 2);
        assert_eq!(block_index(8, 3), 3);
        assert_eq!(block_index(1, 3), 2);
        assert_eq!(block_index(2, 3), 3);
        assert_eq!(block_index(3, 3), 1);
    }

    fn ledger_with(progress: &[f64], decoded: &[bool]) -> NodeLedger {
        let real = NetworkRealization::from_points(progress.iter().map(|&x| Point::new(x, 1.0)));
        let mut ledger = NodeLedger::new(&real, 2);
        for (i, &d) in decoded.iter().enumerate() {
            if d {
                ledger.mark_decoded(i + 1);
            }
        }
        ledger
    }

    #[test]
    fn select_relay_argmax() {
        let ledger = ledger_with(&[2.1, 3.7, -0.5], &[true, true, true]);
        let excluded = [true, false, false, false];
        assert_eq!(select_relay(&ledger, &excluded), Some(2));
    }

    #[test]
    fn select_relay_none_without_decoders() {
        let ledger = ledger_with(&[2.1, 3.7], &[false, false]);
        assert_eq!(select_relay(&ledger, &[true, false, false]), None);
        // Only negative-progress decoders: still nobody.
        let ledger = ledger_with(&[-2.0, -0.1], &[true, true]);
        assert_eq!(select_relay(&ledger, &[true, false, false]), None);
    }

    #[test]
    fn select_relay_tie_goes_to_lower_index() {
        let ledger = ledger_with(&[1.0, 2.5, 2.5], &[true, true, true]);
        assert_eq!(select_relay(&ledger, &[true, false, false, false]), Some(2));
        // Excluding the winner moves to the twin.
        assert_eq!(select_relay(&ledger, &[true, false, true, false]), Some(3));
    }

    #[test]
    fn ledger_keeps_best_repeat_and_sticks() {
        let mut ledger = ledger_with(&[1.0], &[false]);
        ledger.record(1, 1, 0.4);
        ledger.record(1, 1, 0.9);
        ledger.record(1, 1, 0.2);
        assert_eq!(ledger.contributions(1).collect::<Vec<_>>(), vec![0.9]);
        assert!(!ledger.refresh(1, Scheme::Irc, 1.5));
        ledger.record(1, 2, 0.7);
        assert!(ledger.refresh(1, Scheme::Irc, 1.5));
        // Decoding is never undone, whatever the rate asked later.
        assert!(ledger.refresh(1, Scheme::Irc, 100.0));
    }

    #[test]
    fn nc_with_diversity_two_is_rejected() {
        let cfg = NetworkConfig::new(Scheme::Nc, 2);
        let real = NetworkRealization::from_points([Point::new(1.0, 0.0)]);
        assert_eq!(
            run_episode(&cfg, &real, &mut episode_rng(0, 0)),
            Err(Error::NcDiversity(2))
        );
    }

    #[test]
    fn progress_is_nondecreasing_and_relays_decoded() {
        let mut cfg = NetworkConfig::new(Scheme::Irc, 4);
        cfg.map_p = 0.1;
        cfg.rate = 2.0;
        for e in 0..30 {
            let mut rng = episode_rng(11, e);
            let real = sample_network(&cfg, &mut rng).unwrap();
            let res = run_episode(&cfg, &real, &mut rng).unwrap();
            assert_eq!(res.progress.len(), 4);
            assert!(res.progress.windows(2).all(|w| w[0] <= w[1]));
            assert!(res.progress.iter().all(|&d| d >= 0.0));
            for &r in &res.relays {
                assert!(real.progress(r) > 0.0);
                assert!(res.progress.last().unwrap() >= &real.progress(r));
            }
        }
    }
}

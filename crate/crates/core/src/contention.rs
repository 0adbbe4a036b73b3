//! Distributed P-bit pulse contention for forwarding-relay selection.
//!
//! Every decoder with positive progress quantizes its progress into a P-bit
//! code. During P time units, read from the most significant bit down, a
//! relay pulses on a 1 bit and listens on a 0 bit; a listening relay that
//! hears any pulse drops out. Whoever is left holds the largest code.

use alloc::vec::Vec;

use crate::error::{check, Error, Result};

/// Largest supported code width; codes stay exactly representable in f64.
pub const MAX_BITS: u32 = 52;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionConfig {
    /// Number of contention time units P.
    pub bits: u32,
    /// Progress mapped to the all-ones code.
    pub d_max: f64,
}

impl ContentionConfig {
    pub fn new(bits: u32, d_max: f64) -> Result<Self> {
        let cfg = Self { bits, d_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            (1..=MAX_BITS).contains(&self.bits),
            "bits",
            self.bits as f64,
            "an integer in 1..=52",
        )?;
        check(
            self.d_max > 0.0 && self.d_max.is_finite(),
            "d_max",
            self.d_max,
            "a positive finite length",
        )
    }

    pub fn max_code(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// Width of one quantization step.
    pub fn resolution(&self) -> f64 {
        self.d_max / self.max_code() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contender {
    pub node: usize,
    pub progress: f64,
    pub code: u64,
    pub active: bool,
}

impl Contender {
    pub fn new(node: usize, progress: f64, cfg: &ContentionConfig) -> Result<Self> {
        Ok(Self {
            node,
            progress,
            code: encode_progress(progress, cfg)?,
            active: true,
        })
    }
}

/// Linear quantization of `progress` over `[0, d_max]`, clamped to the top
/// code.
pub fn encode_progress(progress: f64, cfg: &ContentionConfig) -> Result<u64> {
    if progress.is_nan() || progress <= 0.0 {
        return Err(Error::NonPositiveProgress(progress));
    }
    let max = cfg.max_code();
    let scaled = libm::floor(progress / cfg.d_max * max as f64);
    Ok(if scaled >= max as f64 { max } else { scaled as u64 })
}

/// The pulse pattern of `code`, first time unit first (most significant bit).
pub fn code_bits(code: u64, bits: u32) -> Vec<bool> {
    (0..bits).rev().map(|b| (code >> b) & 1 == 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentionOutcome {
    pub winner: Option<usize>,
    /// Relays still active after the last time unit.
    pub survivors: usize,
    pub slots_used: u32,
}

/// Runs the P time units. Relays with identical codes cannot tell each
/// other apart; the lowest node index among the survivors is reported.
pub fn run_contention(contenders: &mut [Contender], cfg: &ContentionConfig) -> ContentionOutcome {
    for unit in 0..cfg.bits {
        let bit = cfg.bits - 1 - unit;
        let pulsed = contenders.iter().any(|c| c.active && (c.code >> bit) & 1 == 1);
        if pulsed {
            for c in contenders.iter_mut().filter(|c| c.active) {
                if (c.code >> bit) & 1 == 0 {
                    c.active = false;
                }
            }
        }
    }
    let survivors = contenders.iter().filter(|c| c.active).count();
    let winner = contenders.iter().filter(|c| c.active).map(|c| c.node).min();
    ContentionOutcome {
        winner,
        survivors,
        slots_used: cfg.bits,
    }
}

//! Threshold detection and bit error rate of the one-shot OOK link.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamFactory};
use crate::stats::{Bit, LinkParams, ReceptionDistribution, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorConfig {
    threshold: u64,
}

impl DetectorConfig {
    pub fn new(threshold: u64) -> Result<Self> {
        if threshold < 1 {
            return Err(Error::Domain("detection threshold must be at least 1".into()));
        }
        Ok(Self { threshold })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { threshold: 1 }
    }
}

pub fn detect(n_rx: u64, det: &DetectorConfig) -> Bit {
    Bit::from(n_rx >= det.threshold)
}

/// `0.5·(1 - p_r)^N_sys` for equiprobable bits and threshold 1.
pub fn ber_analytic(n_sys: u64, p_r: f64) -> f64 {
    0.5 * (n_sys as f64 * (-p_r).ln_1p()).exp()
}

/// BER for an arbitrary threshold: `0.5·P(N_RX < θ | s = 1)`. A transmitted
/// 0 is never misdetected.
pub fn ber_analytic_threshold(received_given_one: &ReceptionDistribution, det: &DetectorConfig) -> f64 {
    let upper = det.threshold.min(received_given_one.trials + 1);
    let miss: f64 = (0..upper)
        .map(|k| received_given_one.pmf(k).unwrap_or(0.0))
        .sum();
    0.5 * miss.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalBer {
    pub trials: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci95: (f64, f64),
    /// Misdetected transmitted zeros; zero under the model.
    pub false_positives: u64,
    pub zeros_sent: u64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub const Z_95: f64 = 1.959_963_984_540_054;

const TRIALS_PER_BATCH: u64 = 1 << 16;

/// Monte-Carlo BER: equiprobable random bits, binomial reception at `t_s`,
/// threshold detection. Batches of trials draw from independent streams, so
/// the result does not depend on the thread count.
pub fn ber_empirical(
    link: &LinkParams,
    det: &DetectorConfig,
    n_trials: u64,
    streams: &StreamFactory,
) -> Result<EmpiricalBer> {
    if n_trials < 1 {
        return Err(Error::Domain("empirical BER needs at least one trial".into()));
    }
    let given_one = link.distribution(Stage::Received, Bit::One);
    let given_zero = link.distribution(Stage::Received, Bit::Zero);
    let batches = n_trials.div_ceil(TRIALS_PER_BATCH);
    let (errors, false_pos, zeros) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = streams.stream(Purpose::BerTrials, b);
            let len = TRIALS_PER_BATCH.min(n_trials - b * TRIALS_PER_BATCH);
            let mut errors = 0u64;
            let mut false_pos = 0u64;
            let mut zeros = 0u64;
            for _ in 0..len {
                let sent = Bit::from(rng.random_bool(0.5));
                let n_rx = match sent {
                    Bit::One => given_one.sample(&mut rng),
                    Bit::Zero => given_zero.sample(&mut rng),
                };
                let decided = detect(n_rx, det);
                if decided != sent {
                    errors += 1;
                    if sent == Bit::Zero {
                        false_pos += 1;
                    }
                }
                if sent == Bit::Zero {
                    zeros += 1;
                }
            }
            (errors, false_pos, zeros)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(EmpiricalBer {
        trials: n_trials,
        errors,
        ber: errors as f64 / n_trials as f64,
        ci95: wilson_interval(errors, n_trials, Z_95),
        false_positives: false_pos,
        zeros_sent: zeros,
    })
}

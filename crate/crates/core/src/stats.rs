//! Binomial reception statistics.
//!
//! Each of the `N_sys` molecules independently (i) sits in the TX volume,
//! (ii) switches given a transmitted 1, and (iii) is inside the receiver at
//! the sampling time. Every stage thins the same `N_sys` trials, so the
//! number of molecules surviving a stage is `Binomial(N_sys, p)` with `p` the
//! product of the stage probabilities so far.

use rand::Rng;
use rand_distr::{Bernoulli, Binomial, Distribution};

use crate::channel::ChannelModel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::photochem::SwitchingModel;

/// Transmitted OOK symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn as_f64(self) -> f64 {
        match self {
            Bit::Zero => 0.0,
            Bit::One => 1.0,
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl TryFrom<u8> for Bit {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Bit::Zero),
            1 => Ok(Bit::One),
            _ => Err(Error::Domain(format!("bit must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    AtTx,
    Switched,
    Received,
}

/// Trial count above which sampling switches from per-trial Bernoulli draws
/// to BTPE.
pub const BERNOULLI_SAMPLING_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceptionDistribution {
    pub trials: u64,
    pub success_p: f64,
    pub stage: Stage,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!) - ln(sqrt(2πn)·(n/e)^n)` for integer `n >= 1`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let ln_fact: f64 = (2..=n as u64).map(|i| (i as f64).ln()).sum();
        return ln_fact - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x·ln(x/np) + np - x`, accurate when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

impl ReceptionDistribution {
    pub fn new(trials: u64, success_p: f64, stage: Stage) -> Result<Self> {
        if !(0.0..=1.0).contains(&success_p) {
            return Err(Error::Domain(format!(
                "success probability must lie in [0, 1], got {success_p}"
            )));
        }
        Ok(Self {
            trials,
            success_p,
            stage,
        })
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.success_p
    }

    pub fn variance(&self) -> f64 {
        self.trials as f64 * self.success_p * (1.0 - self.success_p)
    }

    /// Natural log of the PMF at `k`, by the saddle-point expansion
    /// (Loader 2000), accurate to a few ulp for any trial count.
    pub fn ln_pmf(&self, k: u64) -> Result<f64> {
        let n = self.trials;
        if k > n {
            return Err(Error::Domain(format!("k = {k} exceeds trials = {n}")));
        }
        let p = self.success_p;
        let q = 1.0 - p;
        if p == 0.0 {
            return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
        }
        if q == 0.0 {
            return Ok(if k == n { 0.0 } else { f64::NEG_INFINITY });
        }
        let nf = n as f64;
        if k == 0 {
            return Ok(nf * (-p).ln_1p());
        }
        if k == n {
            return Ok(nf * p.ln());
        }
        let kf = k as f64;
        let rest = nf - kf;
        let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(rest) - bd0(kf, nf * p) - bd0(rest, nf * q);
        let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
        Ok(lc - 0.5 * lf)
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        Ok(self.ln_pmf(k)?.exp())
    }

    /// Draws one binomial variate. Degenerate laws consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let (n, p) = (self.trials, self.success_p);
        if p == 0.0 || n == 0 {
            return 0;
        }
        if p == 1.0 {
            return n;
        }
        if n <= BERNOULLI_SAMPLING_LIMIT {
            let coin = Bernoulli::new(p).expect("p validated in [0, 1]");
            (0..n).filter(|_| coin.sample(rng)).count() as u64
        } else {
            Binomial::new(n, p)
                .expect("p validated in [0, 1]")
                .sample(rng)
        }
    }
}

/// Probabilities of the three thinning stages for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub n_sys: u64,
    pub p_tx: f64,
    pub p_switch: f64,
    /// `h(t_s)`.
    pub hit_probability: f64,
}

impl LinkParams {
    /// Derives the link from geometry, with `p_switch` taken at the mean TX
    /// occupancy `N_sys·p_TX`.
    pub fn derive(cfg: &SystemConfig, model: &SwitchingModel, channel: &ChannelModel) -> Result<Self> {
        Ok(Self {
            n_sys: cfg.n_sys,
            p_tx: cfg.p_tx(),
            p_switch: model.switch_probability(cfg.expected_n_tx())?,
            hit_probability: channel.hit_probability(cfg.sampling_time()),
        })
    }

    pub fn stage_probability(&self, stage: Stage, s: Bit) -> f64 {
        match stage {
            Stage::AtTx => self.p_tx,
            Stage::Switched => s.as_f64() * self.p_tx * self.p_switch,
            Stage::Received => s.as_f64() * self.p_tx * self.p_switch * self.hit_probability,
        }
    }

    /// `p_r = s·p_TX·p_switch·h(t_s)`.
    pub fn reception_probability(&self, s: Bit) -> f64 {
        self.stage_probability(Stage::Received, s)
    }

    pub fn distribution(&self, stage: Stage, s: Bit) -> ReceptionDistribution {
        ReceptionDistribution {
            trials: self.n_sys,
            success_p: self.stage_probability(stage, s).clamp(0.0, 1.0),
            stage,
        }
    }

    /// Deviation of the switched count from its mean `N_sys·s·p_TX·p_switch`.
    pub fn tx_noise(&self, s: Bit) -> TxNoise {
        let q = self.stage_probability(Stage::Switched, s);
        TxNoise {
            mean: 0.0,
            variance: self.n_sys as f64 * q * (1.0 - q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxNoise {
    pub mean: f64,
    pub variance: f64,
}

pub fn reception_probability(
    cfg: &SystemConfig,
    model: &SwitchingModel,
    channel: &ChannelModel,
    s: Bit,
) -> Result<f64> {
    Ok(LinkParams::derive(cfg, model, channel)?.reception_probability(s))
}

pub fn tx_noise_stats(cfg: &SystemConfig, model: &SwitchingModel, s: Bit) -> Result<TxNoise> {
    let q = s.as_f64() * cfg.p_tx() * model.switch_probability(cfg.expected_n_tx())?;
    Ok(TxNoise {
        mean: 0.0,
        variance: cfg.n_sys as f64 * q * (1.0 - q),
    })
}

/// Total variation distance between the law and an empirical histogram
/// (`counts[k]` = occurrences of `k`), summed over the whole support.
pub fn total_variation(dist: &ReceptionDistribution, counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let mut tv = 0.0;
    for k in 0..=dist.trials {
        let analytic = dist.pmf(k).unwrap_or(0.0);
        let empirical = counts.get(k as usize).copied().unwrap_or(0) as f64 / total as f64;
        tv += (analytic - empirical).abs();
    }
    // observations beyond the support cannot happen, but count them if they do
    let beyond: u64 = counts.iter().skip(dist.trials as usize + 1).sum();
    tv += beyond as f64 / total as f64;
    0.5 * tv
}

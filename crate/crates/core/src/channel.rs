//! One-dimensional advection–diffusion channel between the transmitter and
//! a transparent receiver.
//!
//! A switched molecule starts uniformly in the TX interval at `t = 0`, drifts
//! with velocity `v` and diffuses with `D_A`. The probability `h(t)` of finding
//! it inside the RX interval has the closed form
//!
//! ```text
//! h(t) = 1/(2·l_TX) · Σ_{i=0..3} (-1)^i [a_i·erf(a_i/s) + s/√π·exp(-a_i²/s²)]
//! ```
//!
//! with `s = sqrt(4·D_A·t)` and `a_i ∈ {b_RX - a_TX, b_RX - b_TX, a_RX - b_TX,
//! a_RX - a_TX} - v·t`. [`ChannelModel::hit_probability_quadrature`] evaluates
//! the same quantity as a double integral of the Gaussian point kernel and is
//! kept as a cross-check.

use crate::config::{Interval, SystemConfig};
use crate::error::{Error, Result};
use crate::photochem::SwitchingModel;
use crate::special::{erf, gauss_legendre, GL_ORDER};

/// Half-width of the kernel support used by the quadrature, in standard
/// deviations. `exp(-40²/2)` is far below f64 resolution.
const KERNEL_SUPPORT_SIGMAS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub diff_a: f64,
    pub flow_v: f64,
    pub tx: Interval,
    pub rx: Interval,
}

impl ChannelModel {
    pub fn new(diff_a: f64, flow_v: f64, tx: Interval, rx: Interval) -> Result<Self> {
        if !(diff_a.is_finite() && diff_a > 0.0) {
            return Err(Error::Domain(format!("diff_a must be positive, got {diff_a}")));
        }
        if !(flow_v.is_finite() && flow_v > 0.0) {
            return Err(Error::Domain(format!("flow_v must be positive, got {flow_v}")));
        }
        let tx = Interval::new(tx.lo, tx.hi)?;
        let rx = Interval::new(rx.lo, rx.hi)?;
        Ok(Self {
            diff_a,
            flow_v,
            tx,
            rx,
        })
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Self::new(
            cfg.molecule.diff_a,
            cfg.flow_v,
            cfg.tx.interval(),
            cfg.rx.interval(),
        )
    }

    pub fn sampling_time(&self) -> f64 {
        (self.rx.center() - self.tx.center()) / self.flow_v
    }

    /// The four signed offsets `a_0..a_3` at time `t`.
    pub fn offsets(&self, t: f64) -> [f64; 4] {
        let vt = self.flow_v * t;
        [
            self.rx.hi - self.tx.lo - vt,
            self.rx.hi - self.tx.hi - vt,
            self.rx.lo - self.tx.hi - vt,
            self.rx.lo - self.tx.lo - vt,
        ]
    }

    /// Density at `z_rx` of a molecule released at `z_tx` at time 0.
    pub fn point_kernel(&self, t: f64, z_rx: f64, z_tx: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("point kernel needs t > 0, got {t}")));
        }
        Ok(self.kernel(t, z_rx, z_tx))
    }

    #[inline]
    fn kernel(&self, t: f64, z_rx: f64, z_tx: f64) -> f64 {
        let four_dt = 4.0 * self.diff_a * t;
        let u = z_rx - z_tx - self.flow_v * t;
        (-u * u / four_dt).exp() / (std::f64::consts::PI * four_dt).sqrt()
    }

    /// Probability that a switched molecule is inside the receiver at `t`.
    /// For `t <= 0` this is the fraction of the TX interval overlapping RX.
    pub fn hit_probability(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.tx.overlap(&self.rx) / self.tx.len();
        }
        let s = (4.0 * self.diff_a * t).sqrt();
        let spread = s / std::f64::consts::PI.sqrt();
        let mut sum = 0.0;
        for (i, a) in self.offsets(t).into_iter().enumerate() {
            let x = a / s;
            let term = a * erf(x) + spread * (-x * x).exp();
            if i % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        (sum / (2.0 * self.tx.len())).clamp(0.0, 1.0)
    }

    /// `h(t)` by Gauss–Legendre integration of the point kernel over the
    /// receiver and a uniform release position over the transmitter.
    /// `nodes` is the node count per dimension (at least 16).
    pub fn hit_probability_quadrature(&self, t: f64, nodes: usize) -> f64 {
        if t <= 0.0 {
            return self.tx.overlap(&self.rx) / self.tx.len();
        }
        let panels = (nodes.max(16) / GL_ORDER).max(2);
        let sigma = (2.0 * self.diff_a * t).sqrt();
        let support = KERNEL_SUPPORT_SIGMAS * sigma;
        let vt = self.flow_v * t;

        let inner = |z_tx: f64| {
            let centre = z_tx + vt;
            let lo = self.rx.lo.max(centre - support);
            let hi = self.rx.hi.min(centre + support);
            gauss_legendre(|z_rx| self.kernel(t, z_rx, z_tx), lo, hi, panels)
        };

        // The inner integral switches between 0 and 1 where the kernel
        // crosses an RX edge; resolve those windows separately.
        let mut cuts = vec![self.tx.lo, self.tx.hi];
        for edge in [self.rx.lo - vt, self.rx.hi - vt] {
            cuts.push(edge - support);
            cuts.push(edge + support);
        }
        cuts.retain(|&c| c >= self.tx.lo && c <= self.tx.hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut points"));
        cuts.dedup();

        let segments = cuts.len() - 1;
        let per_segment = (panels / segments).max(1);
        let total: f64 = cuts
            .windows(2)
            .map(|w| gauss_legendre(inner, w[0], w[1], per_segment))
            .sum();
        total / self.tx.len()
    }
}

/// Expected number of state-A molecules in the receiver at `t` after a
/// transmitted 1: `N_sys·p_TX·p_switch·h(t)`, with `p_switch` evaluated at
/// the mean TX occupancy.
pub fn expected_cir(
    cfg: &SystemConfig,
    model: &SwitchingModel,
    channel: &ChannelModel,
    t: f64,
) -> Result<f64> {
    let p_switch = model.switch_probability(cfg.expected_n_tx())?;
    Ok(cfg.n_sys as f64 * cfg.p_tx() * p_switch * channel.hit_probability(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ChannelModel {
        ChannelModel::from_config(&SystemConfig::default()).unwrap()
    }

    #[test]
    fn kernel_rejects_nonpositive_time() {
        let ch = reference();
        assert!(ch.point_kernel(0.0, 0.3, 0.1).is_err());
        assert!(ch.point_kernel(-1.0, 0.3, 0.1).is_err());
    }

    #[test]
    fn kernel_normalised_and_centred() {
        let ch = reference();
        let (t, z_tx) = (20.0, 0.125);
        let sigma = (2.0 * ch.diff_a * t).sqrt();
        assert!((sigma - 6.32e-5).abs() < 1e-7);
        let mean = z_tx + ch.flow_v * t;
        assert!((mean - 0.325).abs() < 1e-12);
        let mass = gauss_legendre(
            |z| ch.point_kernel(t, z, z_tx).unwrap(),
            mean - 40.0 * sigma,
            mean + 40.0 * sigma,
            64,
        );
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        let peak = ch.point_kernel(t, mean, z_tx).unwrap();
        for dz in [1e-7, 1e-6, 1e-5] {
            assert!(ch.point_kernel(t, mean + dz, z_tx).unwrap() < peak);
            assert!(ch.point_kernel(t, mean - dz, z_tx).unwrap() < peak);
        }
    }

    #[test]
    fn hit_probability_reference_values() {
        let ch = reference();
        // mpmath evaluation of the closed form at 50 digits
        assert!((ch.hit_probability(20.0) - 0.99899074699119193598).abs() < 1e-12);
        assert!((ch.hit_probability(15.0) - 0.00043701937223683162822).abs() < 1e-12);
        assert!((ch.hit_probability(19.0) - 0.8).abs() < 1e-12);
        assert!(ch.hit_probability(40.0) < 1e-6);
        assert!(ch.hit_probability(1.0) < 1e-15);
        assert_eq!(ch.hit_probability(0.0), 0.0);
        assert_eq!(ch.hit_probability(1e-300), 0.0);
    }

    #[test]
    fn zero_time_limit_is_overlap_fraction() {
        let ch = ChannelModel::new(
            1e-10,
            0.01,
            Interval::new(0.1, 0.2).unwrap(),
            Interval::new(0.15, 0.3).unwrap(),
        )
        .unwrap();
        assert!((ch.hit_probability(0.0) - 0.5).abs() < 1e-12);
        assert!((ch.hit_probability(1e-9) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn quadrature_tracks_closed_form() {
        let ch = reference();
        for t in [1.0, 15.0, 20.0, 24.5, 40.0] {
            let q = ch.hit_probability_quadrature(t, 512);
            assert!((q - ch.hit_probability(t)).abs() < 1e-9, "t = {t}: {q}");
        }
    }

    #[test]
    fn expected_cir_reference() {
        let cfg = SystemConfig::default();
        let model = SwitchingModel::from_config(&cfg).unwrap();
        let cir = expected_cir(&cfg, &model, &reference(), 20.0).unwrap();
        assert!((cir - 11.25).abs() < 0.01, "{cir}");
        let dark = SwitchingModel::new(&cfg, 0.0).unwrap();
        for t in [1.0, 20.0, 30.0] {
            assert_eq!(expected_cir(&cfg, &dark, &reference(), t).unwrap(), 0.0);
        }
    }
}

//! Photoswitching of state-B molecules at the transmitter.
//!
//! Light at `λ_BA` is absorbed only by state-B molecules in the illuminated
//! block. With photon flux `q`, quantum yield `φ` and the per-molecule
//! absorption scale `a = ln(10)·H·ε/(V_TX·N_Av)`, the state-B population
//! obeys
//!
//! ```text
//! dN_B/dt = -φ·q·(1 - exp(-a·N_B)),   N_B(0) = N_TX
//! ```
//!
//! whose solution is `N_B(t) = ln[1 - e^{-k}(1 - e^{a·N_TX})]/a` with
//! `k = φ·a·q·t`. In the reference system `a·N_TX` is around 1e-13, so every
//! evaluation goes through `log1p`/`expm1`.

use crate::config::{PhysicalConstants, SystemConfig};
use crate::error::{Error, Result};
use crate::special::softplus;

/// Energy of one photon of wavelength `wavelength`, J.
pub fn photon_energy(constants: &PhysicalConstants, wavelength: f64) -> Result<f64> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(constants.planck * constants.light_speed / wavelength)
}

/// Photons per second entering the transmitter volume.
pub fn photon_flux(
    constants: &PhysicalConstants,
    irradiance: f64,
    area: f64,
    wavelength: f64,
) -> Result<f64> {
    if !(irradiance.is_finite() && irradiance >= 0.0) {
        return Err(Error::Domain(format!(
            "irradiance must be non-negative, got {irradiance}"
        )));
    }
    if !(area.is_finite() && area > 0.0) {
        return Err(Error::Domain(format!("area must be positive, got {area}")));
    }
    Ok(irradiance * area / photon_energy(constants, wavelength)?)
}

/// `ln(10)·H·ε/(V_TX·N_Av)`: optical depth contributed by one molecule.
pub fn absorption_scale(
    constants: &PhysicalConstants,
    height: f64,
    molar_absorption: f64,
    tx_volume: f64,
) -> f64 {
    std::f64::consts::LN_10 * height * molar_absorption / (tx_volume * constants.avogadro)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingModel {
    pub photon_energy: f64,
    pub photon_flux: f64,
    pub absorption_scale: f64,
    pub quantum_yield: f64,
    pub irradiation_time: f64,
}

impl SwitchingModel {
    /// Model for the configured geometry at an explicit irradiance.
    pub fn new(cfg: &SystemConfig, irradiance: f64) -> Result<Self> {
        let energy = photon_energy(&cfg.constants, cfg.tx.wavelength_ba)?;
        let flux = photon_flux(
            &cfg.constants,
            irradiance,
            cfg.tx_area(),
            cfg.tx.wavelength_ba,
        )?;
        Ok(Self {
            photon_energy: energy,
            photon_flux: flux,
            absorption_scale: absorption_scale(
                &cfg.constants,
                cfg.duct.height,
                cfg.molecule.molar_absorption,
                cfg.tx_volume(),
            ),
            quantum_yield: cfg.molecule.quantum_yield,
            irradiation_time: cfg.tx.irradiation_time,
        })
    }

    /// Model at the configured "on" irradiance.
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Self::new(cfg, cfg.tx.irradiance_on)
    }

    /// `k = φ·a·q·t`.
    pub fn decay_exponent(&self, t: f64) -> f64 {
        self.quantum_yield * self.absorption_scale * self.photon_flux * t
    }

    /// State-B population after `t` seconds of illumination, starting from
    /// `n_tx`. Real-valued; stays in `[0, n_tx]`.
    pub fn n_b_closed_form(&self, n_tx: f64, t: f64) -> f64 {
        if n_tx <= 0.0 {
            return 0.0;
        }
        let a = self.absorption_scale;
        let x = n_tx * a;
        let k = self.decay_exponent(t.max(0.0));
        let n_b = if x < 700.0 {
            ((-k).exp() * x.exp_m1()).ln_1p() / a
        } else {
            // ln(e^{-k}·expm1(x)) without forming expm1(x)
            let log_term = -k + x + (-(-x).exp_m1()).ln();
            softplus(log_term) / a
        };
        n_b.clamp(0.0, n_tx)
    }

    /// Probability that a given state-B molecule in the block switches to A
    /// during the irradiation time, `1 - N_B(T)/N_TX`.
    pub fn switch_probability(&self, n_tx: f64) -> Result<f64> {
        if !(n_tx.is_finite() && n_tx > 0.0) {
            return Err(Error::Domain(format!(
                "switching probability needs n_tx > 0, got {n_tx}"
            )));
        }
        // 1 - N_B/N = -ln(1 - (1 - e^{-x})(1 - e^{-k}))/x, free of cancellation
        let x = n_tx * self.absorption_scale;
        let k = self.decay_exponent(self.irradiation_time);
        let u = -(-x).exp_m1();
        let w = -(-k).exp_m1();
        Ok((-(-u * w).ln_1p() / x).clamp(0.0, 1.0))
    }

    /// Photon absorption rate `dN_P/dt` at state-B population `n_b`.
    pub fn absorption_rate(&self, n_b: f64) -> f64 {
        -self.photon_flux * (-self.absorption_scale * n_b).exp_m1()
    }

    /// `dN_B/dt`.
    pub fn ode_rhs(&self, n_b: f64) -> f64 {
        -self.quantum_yield * self.absorption_rate(n_b)
    }

    /// Fixed-step RK4 trajectory `[N_B(0), N_B(h), ..., N_B(t_end)]`.
    pub fn ode_trajectory(&self, n_tx: f64, t_end: f64, steps: usize) -> Vec<f64> {
        let steps = steps.max(1);
        let h = t_end / steps as f64;
        let mut y = n_tx;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(y);
        for _ in 0..steps {
            let k1 = self.ode_rhs(y);
            let k2 = self.ode_rhs(y + 0.5 * h * k1);
            let k3 = self.ode_rhs(y + 0.5 * h * k2);
            let k4 = self.ode_rhs(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.push(y);
        }
        out
    }

    /// RK4 integration of the absorption ODE to `t_end`.
    pub fn integrate_beer_lambert_ode(&self, n_tx: f64, t_end: f64, steps: usize) -> f64 {
        *self
            .ode_trajectory(n_tx, t_end, steps)
            .last()
            .expect("trajectory has at least one point")
    }
}

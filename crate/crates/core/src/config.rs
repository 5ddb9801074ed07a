//! Experiment configuration: duct geometry, transmitter/receiver placement,
//! molecule photophysics and simulation controls.
//!
//! The on-disk format is a flat `key = value` document in SI units. Blank
//! lines and `#` comments are ignored, unknown keys are rejected, and every
//! omitted key takes its default value (the GFPD reference system: 1 mm
//! square duct, 0.5 m long, 5 cm transmitter and receiver 20 cm apart).

use std::fmt::Write as _;

use crate::error::{invariant, Error, Result};

/// CODATA 2018 exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s.
    pub planck: f64,
    /// Speed of light in vacuum, m/s.
    pub light_speed: f64,
    /// Avogadro constant, 1/mol.
    pub avogadro: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        planck: 6.626_070_15e-34,
        light_speed: 299_792_458.0,
        avogadro: 6.022_140_76e23,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Closed axial interval `[lo, hi]` in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!(
                "interval [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        (self.hi + self.lo) / 2.0
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            lo: self.lo + offset,
            hi: self.hi + offset,
        }
    }

    /// Length of the intersection with `other`.
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuctGeometry {
    pub height: f64,
    pub width: f64,
    pub sys_length: f64,
}

impl DuctGeometry {
    pub fn volume(&self) -> f64 {
        self.width * self.height * self.sys_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxConfig {
    pub z_a: f64,
    pub z_b: f64,
    /// Irradiance while the transmitter is on (bit 1), W/m².
    pub irradiance_on: f64,
    pub irradiation_time: f64,
    /// Wavelength switching B to A, m.
    pub wavelength_ba: f64,
}

impl TxConfig {
    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.z_a,
            hi: self.z_b,
        }
    }

    pub fn length(&self) -> f64 {
        self.z_b - self.z_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxConfig {
    pub z_a: f64,
    pub z_b: f64,
    /// Fluorescence excitation wavelength; carried as metadata.
    pub wavelength_f_in: f64,
    /// Fluorescence emission wavelength; carried as metadata.
    pub wavelength_f_out: f64,
}

impl RxConfig {
    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.z_a,
            hi: self.z_b,
        }
    }

    pub fn length(&self) -> f64 {
        self.z_b - self.z_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeParams {
    pub diff_a: f64,
    pub diff_b: f64,
    /// Molar absorption coefficient of state B, m²/mol.
    pub molar_absorption: f64,
    pub quantum_yield: f64,
    /// Erasure wavelength A to B; metadata only.
    pub wavelength_ab: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub constants: PhysicalConstants,
    pub duct: DuctGeometry,
    pub tx: TxConfig,
    pub rx: RxConfig,
    pub molecule: MoleculeParams,
    pub flow_v: f64,
    pub n_sys: u64,
    pub pbs_dt: f64,
    pub n_realizations: u64,
    pub seed: u64,
    /// Largest admissible ratio of in-illumination travel to `l_TX`.
    pub static_threshold: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::CODATA,
            duct: DuctGeometry {
                height: 1e-3,
                width: 1e-3,
                sys_length: 0.5,
            },
            tx: TxConfig {
                z_a: 0.1,
                z_b: 0.15,
                irradiance_on: 1e3,
                irradiation_time: 5e-3,
                wavelength_ba: 365e-9,
            },
            rx: RxConfig {
                z_a: 0.3,
                z_b: 0.35,
                wavelength_f_in: 515e-9,
                wavelength_f_out: 529e-9,
            },
            molecule: MoleculeParams {
                diff_a: 1e-10,
                diff_b: 1e-10,
                molar_absorption: 8.3e3,
                quantum_yield: 0.41,
                wavelength_ab: 405e-9,
            },
            flow_v: 0.01,
            n_sys: 1000,
            pbs_dt: 1e-2,
            n_realizations: 10_000,
            seed: 20_210_611,
            static_threshold: 0.01,
        }
    }
}

/// Every recognised key, in serialization order.
pub const KEYS: &[&str] = &[
    "height",
    "width",
    "sys_length",
    "z_a_tx",
    "z_b_tx",
    "irradiance_on",
    "irradiation_time",
    "wavelength_ba",
    "z_a_rx",
    "z_b_rx",
    "wavelength_f_in",
    "wavelength_f_out",
    "diff_a",
    "diff_b",
    "molar_absorption",
    "quantum_yield",
    "wavelength_ab",
    "flow_v",
    "n_sys",
    "pbs_dt",
    "n_realizations",
    "seed",
    "static_threshold",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        Error::Domain(format!("`{key}`: cannot parse `{value}` as a number"))
    })
}

fn parse_count(key: &str, value: &str) -> Result<u64> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    // Accept exact integers written in float notation, e.g. `1e4`.
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9_007_199_254_740_992.0 => Ok(x as u64),
        _ => Err(Error::Domain(format!(
            "`{key}`: cannot parse `{value}` as a non-negative integer"
        ))),
    }
}

impl SystemConfig {
    /// Parses a `key = value` document on top of the defaults and validates it.
    pub fn from_document(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("empty key or value in `{line}`"),
                });
            }
            if seen.contains(&key) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            cfg.assign(key, value).map_err(|e| match e {
                Error::Domain(message) => Error::Parse {
                    line: idx + 1,
                    message,
                },
                other => other,
            })?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a single `key=value` override and revalidates.
    pub fn with_override(mut self, assignment: &str) -> Result<Self> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("override `{assignment}` is not of the form key=value"),
        })?;
        self.assign(key.trim(), value.trim())?;
        self.validate()?;
        Ok(self)
    }

    fn assign(&mut self, key: &str, value: &str) -> Result<()> {
        let f = |v: &str| parse_f64(key, v);
        match key {
            "height" => self.duct.height = f(value)?,
            "width" => self.duct.width = f(value)?,
            "sys_length" => self.duct.sys_length = f(value)?,
            "z_a_tx" => self.tx.z_a = f(value)?,
            "z_b_tx" => self.tx.z_b = f(value)?,
            "irradiance_on" => self.tx.irradiance_on = f(value)?,
            "irradiation_time" => self.tx.irradiation_time = f(value)?,
            "wavelength_ba" => self.tx.wavelength_ba = f(value)?,
            "z_a_rx" => self.rx.z_a = f(value)?,
            "z_b_rx" => self.rx.z_b = f(value)?,
            "wavelength_f_in" => self.rx.wavelength_f_in = f(value)?,
            "wavelength_f_out" => self.rx.wavelength_f_out = f(value)?,
            "diff_a" => self.molecule.diff_a = f(value)?,
            "diff_b" => self.molecule.diff_b = f(value)?,
            "molar_absorption" => self.molecule.molar_absorption = f(value)?,
            "quantum_yield" => self.molecule.quantum_yield = f(value)?,
            "wavelength_ab" => self.molecule.wavelength_ab = f(value)?,
            "flow_v" => self.flow_v = f(value)?,
            "n_sys" => self.n_sys = parse_count(key, value)?,
            "pbs_dt" => self.pbs_dt = f(value)?,
            "n_realizations" => self.n_realizations = parse_count(key, value)?,
            "seed" => self.seed = parse_count(key, value)?,
            "static_threshold" => self.static_threshold = f(value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Value of `key` formatted so that it reparses to the same bits.
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "height" => self.duct.height,
            "width" => self.duct.width,
            "sys_length" => self.duct.sys_length,
            "z_a_tx" => self.tx.z_a,
            "z_b_tx" => self.tx.z_b,
            "irradiance_on" => self.tx.irradiance_on,
            "irradiation_time" => self.tx.irradiation_time,
            "wavelength_ba" => self.tx.wavelength_ba,
            "z_a_rx" => self.rx.z_a,
            "z_b_rx" => self.rx.z_b,
            "wavelength_f_in" => self.rx.wavelength_f_in,
            "wavelength_f_out" => self.rx.wavelength_f_out,
            "diff_a" => self.molecule.diff_a,
            "diff_b" => self.molecule.diff_b,
            "molar_absorption" => self.molecule.molar_absorption,
            "quantum_yield" => self.molecule.quantum_yield,
            "wavelength_ab" => self.molecule.wavelength_ab,
            "flow_v" => self.flow_v,
            "n_sys" => return Some(self.n_sys.to_string()),
            "pbs_dt" => self.pbs_dt,
            "n_realizations" => return Some(self.n_realizations.to_string()),
            "seed" => return Some(self.seed.to_string()),
            "static_threshold" => self.static_threshold,
            _ => return None,
        };
        Some(format!("{v:?}"))
    }

    /// Serializes every key; `from_document(to_document())` is the identity.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 14] = [
            ("height", self.duct.height),
            ("width", self.duct.width),
            ("sys_length", self.duct.sys_length),
            ("irradiation_time", self.tx.irradiation_time),
            ("wavelength_ba", self.tx.wavelength_ba),
            ("wavelength_f_in", self.rx.wavelength_f_in),
            ("wavelength_f_out", self.rx.wavelength_f_out),
            ("diff_a", self.molecule.diff_a),
            ("diff_b", self.molecule.diff_b),
            ("molar_absorption", self.molecule.molar_absorption),
            ("wavelength_ab", self.molecule.wavelength_ab),
            ("flow_v", self.flow_v),
            ("pbs_dt", self.pbs_dt),
            ("static_threshold", self.static_threshold),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invariant(field, format!("{field} > 0 (got {value})")));
            }
        }
        let irr = self.tx.irradiance_on;
        if !(irr.is_finite() && irr >= 0.0) {
            return Err(invariant(
                "irradiance_on",
                format!("irradiance_on >= 0 (got {irr})"),
            ));
        }
        let phi = self.molecule.quantum_yield;
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(invariant(
                "quantum_yield",
                format!("0 < quantum_yield <= 1 (got {phi})"),
            ));
        }
        for (field, value) in [
            ("z_a_tx", self.tx.z_a),
            ("z_b_tx", self.tx.z_b),
            ("z_a_rx", self.rx.z_a),
            ("z_b_rx", self.rx.z_b),
        ] {
            if !value.is_finite() {
                return Err(invariant(field, format!("{field} finite")));
            }
        }
        let l = self.duct.sys_length;
        if !(0.0 <= self.tx.z_a && self.tx.z_a < self.tx.z_b && self.tx.z_b <= l) {
            return Err(invariant(
                "z_b_tx",
                format!(
                    "0 <= z_a_tx < z_b_tx <= sys_length (got [{}, {}] in [0, {l}])",
                    self.tx.z_a, self.tx.z_b
                ),
            ));
        }
        if !(self.rx.z_a < self.rx.z_b && self.rx.z_b <= l) {
            return Err(invariant(
                "z_b_rx",
                format!(
                    "z_a_rx < z_b_rx <= sys_length (got [{}, {}] in [0, {l}])",
                    self.rx.z_a, self.rx.z_b
                ),
            ));
        }
        if self.rx.z_a < self.tx.z_b {
            return Err(invariant(
                "z_a_rx",
                format!(
                    "z_a_rx >= z_b_tx, receiver downstream of transmitter (got {} < {})",
                    self.rx.z_a, self.tx.z_b
                ),
            ));
        }
        if self.distance() <= 0.0 {
            return Err(invariant("z_a_rx", "center distance d > 0"));
        }
        if self.n_sys < 1 {
            return Err(invariant("n_sys", "n_sys >= 1"));
        }
        if self.n_realizations < 1 {
            return Err(invariant("n_realizations", "n_realizations >= 1"));
        }
        Ok(())
    }

    /// `V_TX = W·H·l_TX`.
    pub fn tx_volume(&self) -> f64 {
        self.duct.width * self.duct.height * self.tx.length()
    }

    /// `A_TX = l_TX·W`.
    pub fn tx_area(&self) -> f64 {
        self.tx.length() * self.duct.width
    }

    /// Probability that a uniformly placed molecule sits inside the TX volume.
    pub fn p_tx(&self) -> f64 {
        self.tx_volume() / self.duct.volume()
    }

    /// Distance between the TX and RX centres.
    pub fn distance(&self) -> f64 {
        (self.rx.z_b + self.rx.z_a) / 2.0 - (self.tx.z_b + self.tx.z_a) / 2.0
    }

    /// Sampling time `t_s = d/v`.
    pub fn sampling_time(&self) -> f64 {
        self.distance() / self.flow_v
    }

    /// Mean number of molecules inside the TX volume, `N_sys·p_TX`.
    pub fn expected_n_tx(&self) -> f64 {
        self.n_sys as f64 * self.p_tx()
    }
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<SystemConfig> {
    SystemConfig::from_document(text)
}

/// Outcome of the "molecules are static during illumination" check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// `sqrt(2·D_B·T) + v·T`, m.
    pub lhs: f64,
    /// `l_TX`, m.
    pub rhs: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub ok: bool,
}

pub fn static_assumption(
    diff_b: f64,
    flow_v: f64,
    irradiation_time: f64,
    tx_length: f64,
    threshold: f64,
) -> ValidityReport {
    let lhs = (2.0 * diff_b * irradiation_time).sqrt() + flow_v * irradiation_time;
    let ratio = lhs / tx_length;
    ValidityReport {
        lhs,
        rhs: tx_length,
        ratio,
        threshold,
        ok: ratio < threshold,
    }
}

pub fn validate_static_assumption(cfg: &SystemConfig) -> ValidityReport {
    static_assumption(
        cfg.molecule.diff_b,
        cfg.flow_v,
        cfg.tx.irradiation_time,
        cfg.tx.length(),
        cfg.static_threshold,
    )
}

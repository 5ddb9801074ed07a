//! Experiment drivers behind the `mediamod` command line. Each driver returns
//! a self-describing CSV document: `#` comment lines carrying the command and
//! the fully resolved configuration, then a header row and data rows.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::channel::ChannelModel;
use crate::config::{validate_static_assumption, SystemConfig};
use crate::detect::{ber_analytic, ber_analytic_threshold, ber_empirical, DetectorConfig};
use crate::error::{Error, Result};
use crate::pbs::{grid_index, run_ensemble, PbsEnsemble};
use crate::photochem::SwitchingModel;
use crate::rng::StreamFactory;
use crate::stats::{total_variation, Bit, LinkParams, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SwitchingCurve,
    Cir,
    Pmf,
    Ber,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SwitchingCurve => "switching-curve",
            ExperimentKind::Cir => "cir",
            ExperimentKind::Pmf => "pmf",
            ExperimentKind::Ber => "ber",
            ExperimentKind::Validate => "validate",
        }
    }
}

/// How `h(t_s)` and `p_TX` enter the BER sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BerMode {
    /// Fixed values, independent of geometry.
    Exogenous { hit_probability: f64, p_tx: f64 },
    /// Computed from the configured geometry.
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Irradiance grid, W/m².
    pub powers: Vec<f64>,
    pub n_tx: Vec<f64>,
    /// Time grid, s.
    pub times: Vec<f64>,
    pub n_sys: Vec<u64>,
    pub bit: Bit,
    /// Realizations for PBS-backed output; `None` disables PBS where optional.
    pub pbs_realizations: Option<u64>,
    pub ber_mode: BerMode,
    pub empirical_trials: Option<u64>,
    pub threshold: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            powers: log_grid(1e3, 1e6, 25),
            n_tx: vec![1e2, 1e10, 1e14],
            times: linear_grid(0.0, 40.0, 81),
            n_sys: vec![10, 50, 100],
            bit: Bit::One,
            pbs_realizations: None,
            ber_mode: BerMode::Exogenous {
                hit_probability: 0.999,
                p_tx: 0.1,
            },
            empirical_trials: None,
            threshold: 1,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_increasing("powers", &self.powers)?;
        check_increasing("n_tx", &self.n_tx)?;
        check_increasing("times", &self.times)?;
        let n_sys: Vec<f64> = self.n_sys.iter().map(|&n| n as f64).collect();
        check_increasing("n_sys", &n_sys)?;
        if self.powers.iter().any(|&p| p < 0.0) {
            return Err(Error::Domain("powers must be non-negative".into()));
        }
        if self.n_tx.iter().any(|&n| n <= 0.0) || self.n_sys.contains(&0) {
            return Err(Error::Domain("molecule counts must be positive".into()));
        }
        if self.times.iter().any(|&t| t < 0.0) {
            return Err(Error::Domain("times must be non-negative".into()));
        }
        if let BerMode::Exogenous { hit_probability, p_tx } = self.ber_mode {
            if !(0.0..=1.0).contains(&hit_probability) || !(0.0..=1.0).contains(&p_tx) {
                return Err(Error::Domain("exogenous h and p_tx must lie in [0, 1]".into()));
            }
        }
        DetectorConfig::new(self.threshold)?;
        Ok(())
    }
}

fn check_increasing(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// `n` points from `start` to `stop`, equally spaced in log10.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.log10(), stop.log10());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                stop
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Parses `a,b,c`, `lin:start:stop:n` or `log:start:stop:n`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("cannot parse grid `{text}`"));
    let grid = if let Some(rest) = text.strip_prefix("log:").or_else(|| text.strip_prefix("lin:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        if text.starts_with("log:") {
            if !(start > 0.0 && stop > 0.0) {
                return Err(Error::Domain("log grid bounds must be positive".into()));
            }
            log_grid(start, stop, n)
        } else {
            linear_grid(start, stop, n)
        }
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?
    };
    check_increasing("grid", &grid)?;
    Ok(grid)
}

/// Rounds to `digits` significant digits, for human-facing reports.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Number formatting shared by all CSV output: shortest round-trip digits,
/// scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn preamble(kind: ExperimentKind, cfg: &SystemConfig, extra: &[String]) -> String {
    let mut out = format!("# mediamod {}\n", kind.name());
    for line in extra {
        let _ = writeln!(out, "# {line}");
    }
    for line in cfg.to_document().lines() {
        let _ = writeln!(out, "# config: {line}");
    }
    out
}

fn row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

/// `p_switch` over irradiance for several TX occupancies.
pub fn cmd_switching_curve(cfg: &SystemConfig, spec: &ExperimentSpec) -> Result<String> {
    spec.validate()?;
    let mut out = preamble(ExperimentKind::SwitchingCurve, cfg, &[]);
    out.push_str("power_w_per_m2,n_tx,p_switch\n");
    for &n_tx in &spec.n_tx {
        for &power in &spec.powers {
            let p = SwitchingModel::new(cfg, power)?.switch_probability(n_tx)?;
            out.push_str(&row(&[fmt_num(power), fmt_num(n_tx), fmt_num(p)]));
        }
    }
    Ok(out)
}

/// Expected CIR on the time grid, optionally with a PBS estimate.
pub fn cmd_cir(cfg: &SystemConfig, spec: &ExperimentSpec) -> Result<String> {
    spec.validate()?;
    let model = SwitchingModel::from_config(cfg)?;
    let channel = ChannelModel::from_config(cfg)?;
    let link = LinkParams::derive(cfg, &model, &channel)?;
    let scale = cfg.n_sys as f64 * link.p_tx * link.p_switch;

    let empirical = match spec.pbs_realizations {
        Some(realizations) => {
            for &t in &spec.times {
                grid_index(t, cfg.pbs_dt)?;
            }
            let ens = PbsEnsemble::new(cfg, spec.times.clone()).with_realizations(realizations);
            Some(run_ensemble(cfg, Bit::One, link.p_switch, &ens)?)
        }
        None => None,
    };

    let extra = vec![
        format!("p_switch = {}", fmt_num(link.p_switch)),
        format!("sampling_time_s = {}", fmt_num(cfg.sampling_time())),
    ];
    let mut out = preamble(ExperimentKind::Cir, cfg, &extra);
    out.push_str("t_s,h_analytic,cir_analytic");
    if empirical.is_some() {
        out.push_str(",cir_pbs_mean,cir_pbs_stderr");
    }
    out.push('\n');
    for (j, &t) in spec.times.iter().enumerate() {
        let h = channel.hit_probability(t);
        let mut cells = vec![fmt_num(t), fmt_num(h), fmt_num(scale * h)];
        if let Some(stats) = &empirical {
            let p = stats.mean_cir[j];
            cells.push(fmt_num(p.mean));
            cells.push(fmt_num(p.stderr));
        }
        out.push_str(&row(&cells));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfOutput {
    pub csv: String,
    pub tv_distance: f64,
}

/// Analytic and PBS distribution of `N_RX(t_s)`.
pub fn cmd_pmf(cfg: &SystemConfig, spec: &ExperimentSpec) -> Result<PmfOutput> {
    spec.validate()?;
    let model = SwitchingModel::from_config(cfg)?;
    let channel = ChannelModel::from_config(cfg)?;
    let link = LinkParams::derive(cfg, &model, &channel)?;
    let dist = link.distribution(Stage::Received, spec.bit);

    let realizations = spec.pbs_realizations.unwrap_or(cfg.n_realizations);
    let ens = PbsEnsemble::sampling_only(cfg).with_realizations(realizations);
    let stats = run_ensemble(cfg, spec.bit, link.p_switch, &ens)?;
    let histogram = stats.histogram();
    let tv = total_variation(&dist, &histogram);

    // rows cover every observed count and the analytic bulk
    let mut k_max = histogram.len() as u64 - 1;
    let mut k = (dist.mean().floor() as u64).min(dist.trials);
    while k <= dist.trials && dist.pmf(k)? >= 1e-12 {
        k_max = k_max.max(k);
        k += 1;
    }

    let extra = vec![
        format!("bit = {}", spec.bit.as_f64() as u8),
        format!("p_r = {}", fmt_num(dist.success_p)),
        format!("realizations = {realizations}"),
    ];
    let mut csv = preamble(ExperimentKind::Pmf, cfg, &extra);
    csv.push_str("k,pmf_analytic,pmf_empirical\n");
    for k in 0..=k_max {
        let empirical = histogram.get(k as usize).copied().unwrap_or(0) as f64 / realizations as f64;
        csv.push_str(&row(&[k.to_string(), fmt_num(dist.pmf(k)?), fmt_num(empirical)]));
    }
    let _ = writeln!(csv, "# tv_distance = {}", fmt_num(tv));
    Ok(PmfOutput {
        csv,
        tv_distance: tv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub power: f64,
    pub n_sys: u64,
    pub p_switch: f64,
    pub p_r: f64,
    pub ber_analytic: f64,
    pub empirical: Option<(f64, f64, f64)>,
}

/// BER over irradiance for each `N_sys`, rows grouped by `N_sys`.
pub fn ber_rows(cfg: &SystemConfig, spec: &ExperimentSpec) -> Result<Vec<BerRow>> {
    spec.validate()?;
    let det = DetectorConfig::new(spec.threshold)?;
    let mut rows = Vec::with_capacity(spec.n_sys.len() * spec.powers.len());
    for &n_sys in &spec.n_sys {
        let cfg_n = SystemConfig {
            n_sys,
            ..cfg.clone()
        };
        for &power in &spec.powers {
            let model = SwitchingModel::new(&cfg_n, power)?;
            let link = match spec.ber_mode {
                BerMode::Derived => {
                    let channel = ChannelModel::from_config(&cfg_n)?;
                    LinkParams::derive(&cfg_n, &model, &channel)?
                }
                BerMode::Exogenous {
                    hit_probability,
                    p_tx,
                } => LinkParams {
                    n_sys,
                    p_tx,
                    p_switch: model.switch_probability(n_sys as f64 * p_tx)?,
                    hit_probability,
                },
            };
            let p_r = link.reception_probability(Bit::One);
            let analytic = if det.threshold() == 1 {
                ber_analytic(n_sys, p_r)
            } else {
                ber_analytic_threshold(&link.distribution(Stage::Received, Bit::One), &det)
            };
            let empirical = match spec.empirical_trials {
                Some(trials) => {
                    let streams = StreamFactory::new(cfg.seed.wrapping_add(rows.len() as u64));
                    let e = ber_empirical(&link, &det, trials, &streams)?;
                    Some((e.ber, e.ci95.0, e.ci95.1))
                }
                None => None,
            };
            rows.push(BerRow {
                power,
                n_sys,
                p_switch: link.p_switch,
                p_r,
                ber_analytic: analytic,
                empirical,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_ber(cfg: &SystemConfig, spec: &ExperimentSpec) -> Result<String> {
    let rows = ber_rows(cfg, spec)?;
    let mode = match spec.ber_mode {
        BerMode::Exogenous {
            hit_probability,
            p_tx,
        } => format!(
            "mode = exogenous (h = {}, p_tx = {})",
            fmt_num(hit_probability),
            fmt_num(p_tx)
        ),
        BerMode::Derived => "mode = derived".to_string(),
    };
    let extra = vec![mode, format!("threshold = {}", spec.threshold)];
    let mut out = preamble(ExperimentKind::Ber, cfg, &extra);
    out.push_str("power_w_per_m2,n_sys,p_switch,p_r,ber_analytic");
    if spec.empirical_trials.is_some() {
        out.push_str(",ber_empirical,ci95_lo,ci95_hi");
    }
    out.push('\n');
    for r in &rows {
        let mut cells = vec![
            fmt_num(r.power),
            r.n_sys.to_string(),
            fmt_num(r.p_switch),
            fmt_num(r.p_r),
            fmt_num(r.ber_analytic),
        ];
        if let Some((b, lo, hi)) = r.empirical {
            cells.extend([fmt_num(b), fmt_num(lo), fmt_num(hi)]);
        }
        out.push_str(&row(&cells));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub text: String,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Relative change of `p_switch` between one molecule and `n_tx` molecules.
pub fn independence_margin(model: &SwitchingModel, n_tx: f64) -> Result<f64> {
    let single = model.switch_probability(1.0)?;
    if single == 0.0 {
        return Ok(0.0);
    }
    Ok((model.switch_probability(n_tx)? - single).abs() / single)
}

pub fn cmd_validate(cfg: &SystemConfig) -> Result<ValidationReport> {
    let model = SwitchingModel::from_config(cfg)?;
    let report = validate_static_assumption(cfg);
    let margin = independence_margin(&model, cfg.n_sys as f64)?;
    let on_grid = grid_index(cfg.sampling_time(), cfg.pbs_dt).is_ok();

    let checks = vec![
        Check {
            name: "static_assumption",
            pass: report.ok,
            detail: format!(
                "sqrt(2 D_B T) + v T = {} m vs l_TX = {} m (ratio {}, threshold {})",
                fmt_num(round_sig(report.lhs, 6)),
                fmt_num(round_sig(report.rhs, 12)),
                fmt_num(round_sig(report.ratio, 6)),
                fmt_num(report.threshold)
            ),
        },
        Check {
            name: "n_tx_independence",
            pass: margin < 0.01,
            detail: format!(
                "|p_switch(N_sys) - p_switch(1)| / p_switch(1) = {} (limit 0.01)",
                fmt_num(margin)
            ),
        },
        Check {
            name: "sampling_time_on_grid",
            pass: on_grid,
            detail: format!(
                "t_s = {} s, pbs_dt = {} s",
                fmt_num(round_sig(cfg.sampling_time(), 12)),
                fmt_num(cfg.pbs_dt)
            ),
        },
    ];

    let mut text = String::new();
    let _ = writeln!(text, "derived p_tx = {}", fmt_num(round_sig(cfg.p_tx(), 12)));
    let _ = writeln!(
        text,
        "derived sampling_time_s = {}",
        fmt_num(round_sig(cfg.sampling_time(), 12))
    );
    let _ = writeln!(text, "derived absorption_scale_a = {}", fmt_num(model.absorption_scale));
    let _ = writeln!(text, "derived photon_energy_j = {}", fmt_num(model.photon_energy));
    let _ = writeln!(
        text,
        "derived photon_flux_at_on = {} photons/s (irradiance {} W/m2)",
        fmt_num(model.photon_flux),
        fmt_num(cfg.tx.irradiance_on)
    );
    let _ = writeln!(
        text,
        "derived p_switch = {}",
        fmt_num(model.switch_probability(cfg.expected_n_tx())?)
    );
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "check {}: {} [{verdict}]", c.name, c.detail);
    }
    Ok(ValidationReport { checks, text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let g = parse_grid("log:1e3:1e6:4").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 1e3);
        assert_eq!(g[3], 1e6);
        assert!((g[1] - 1e4).abs() < 1e-9);
        assert_eq!(parse_grid("lin:0:40:5").unwrap(), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert!(parse_grid("3,2").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("log:0:1:3").is_err());
        assert!(parse_grid("lin:0:1").is_err());
    }

    #[test]
    fn default_power_grid() {
        let spec = ExperimentSpec::new(ExperimentKind::Ber);
        assert_eq!(spec.powers.len(), 25);
        assert_eq!(spec.powers[0], 1e3);
        assert_eq!(spec.powers[24], 1e6);
        spec.validate().unwrap();
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(20.0), "20");
        assert_eq!(fmt_num(0.1126), "0.1126");
        assert_eq!(fmt_num(6.1e-6), "6.1e-6");
        assert_eq!(fmt_num(1e17), "1e17");
    }

    #[test]
    fn switching_curve_single_row() {
        let cfg = SystemConfig::default();
        let spec = ExperimentSpec {
            powers: vec![0.0, 1e3],
            n_tx: vec![100.0],
            ..ExperimentSpec::new(ExperimentKind::SwitchingCurve)
        };
        let csv = cmd_switching_curve(&cfg, &spec).unwrap();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "power_w_per_m2,n_tx,p_switch");
        assert_eq!(rows[1], "0,100,0");
        let p: f64 = rows[2].split(',').nth(2).unwrap().parse().unwrap();
        assert!((p - 0.1126).abs() < 5e-4);
    }

    #[test]
    fn validate_reference_and_fast_flow() {
        let report = cmd_validate(&SystemConfig::default()).unwrap();
        assert!(report.passed(), "{}", report.text);
        assert!(report.text.contains("sampling_time_s = 20"), "{}", report.text);
        let fast = SystemConfig::default().with_override("flow_v=1").unwrap();
        let report = cmd_validate(&fast).unwrap();
        assert!(!report.passed());
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert!(failed.contains(&"static_assumption"));
    }
}

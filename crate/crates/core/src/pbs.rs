//! Particle-based Monte-Carlo simulation of the full link.
//!
//! Molecules live on the duct axis. A realization places `N_sys` state-B
//! molecules uniformly in `[0, L_sys]`, switches those inside the TX interval
//! with probability `s·p_switch` at `t = 0`, then advances every molecule by
//! exact Gaussian increments `v·dt + sqrt(2·D·dt)·g` and counts state-A
//! molecules inside the receiver on a time grid.
//!
//! Randomness is keyed by (seed, realization) for placement and switching and
//! by (seed, realization, molecule) for propagation, so results do not depend
//! on the worker count and skipping state-B molecules does not perturb the
//! state-A trajectories.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{Interval, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{molecule_stream_index, Purpose, Stream, StreamFactory};
use crate::stats::Bit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoleculeState {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Molecule {
    pub z: f64,
    pub state: MoleculeState,
}

/// Drift and diffusion shared by all molecules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub flow_v: f64,
    pub diff_a: f64,
    pub diff_b: f64,
}

impl Propagation {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            flow_v: cfg.flow_v,
            diff_a: cfg.molecule.diff_a,
            diff_b: cfg.molecule.diff_b,
        }
    }

    pub fn diffusion(&self, state: MoleculeState) -> f64 {
        match state {
            MoleculeState::A => self.diff_a,
            MoleculeState::B => self.diff_b,
        }
    }
}

impl Molecule {
    pub fn advance<R: Rng + ?Sized>(&mut self, prop: &Propagation, dt: f64, rng: &mut R) {
        let g: f64 = rng.sample(StandardNormal);
        let sd = (2.0 * prop.diffusion(self.state) * dt).sqrt();
        self.z += prop.flow_v * dt + sd * g;
    }
}

pub fn init_population<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<Molecule> {
    let length = cfg.duct.sys_length;
    (0..cfg.n_sys)
        .map(|_| Molecule {
            z: rng.random::<f64>() * length,
            state: MoleculeState::B,
        })
        .collect()
}

/// Switches state-B molecules inside `tx` to A, each with probability
/// `s·p_switch`. Returns the number switched.
pub fn apply_modulation<R: Rng + ?Sized>(
    pop: &mut [Molecule],
    tx: &Interval,
    s: Bit,
    p_switch: f64,
    rng: &mut R,
) -> Result<usize> {
    let p = s.as_f64() * p_switch;
    let coin = Bernoulli::new(p).map_err(|_| {
        Error::Domain(format!("switching probability must lie in [0, 1], got {p_switch}"))
    })?;
    let mut switched = 0;
    for m in pop.iter_mut() {
        if m.state == MoleculeState::B && tx.contains(m.z) && coin.sample(rng) {
            m.state = MoleculeState::A;
            switched += 1;
        }
    }
    Ok(switched)
}

/// Advances every molecule by one step of length `dt`, drawing from a single
/// stream in population order.
pub fn step<R: Rng + ?Sized>(
    pop: &mut [Molecule],
    prop: &Propagation,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    for m in pop.iter_mut() {
        m.advance(prop, dt, rng);
    }
    Ok(())
}

/// State-A molecules inside the receiver. Counting does not disturb them.
pub fn count_state_a_in_rx(pop: &[Molecule], rx: &Interval) -> usize {
    pop.iter()
        .filter(|m| m.state == MoleculeState::A && rx.contains(m.z))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracking {
    /// Step every molecule.
    Full,
    /// Step only molecules switched to A; state-B molecules never reach the
    /// count, and per-molecule streams keep the counts identical to `Full`.
    SwitchedOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbsEnsemble {
    pub realizations: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub record_grid: Vec<f64>,
    pub tracking: Tracking,
}

impl PbsEnsemble {
    /// Ensemble from the configuration, recording on `record_grid` and
    /// running to the later of its last point and `t_s`.
    pub fn new(cfg: &SystemConfig, record_grid: Vec<f64>) -> Self {
        let last = record_grid.last().copied().unwrap_or(0.0);
        Self {
            realizations: cfg.n_realizations,
            dt: cfg.pbs_dt,
            horizon: last.max(cfg.sampling_time()),
            seed: cfg.seed,
            record_grid,
            tracking: Tracking::SwitchedOnly,
        }
    }

    /// Stops at `t_s`; only the reception count is produced.
    pub fn sampling_only(cfg: &SystemConfig) -> Self {
        Self::new(cfg, Vec::new())
    }

    pub fn with_realizations(mut self, realizations: u64) -> Self {
        self.realizations = realizations;
        self
    }

    pub fn with_tracking(mut self, tracking: Tracking) -> Self {
        self.tracking = tracking;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirPoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean_cir: Vec<CirPoint>,
    /// Relative frequency of each observed `N_RX(t_s)`.
    pub pmf_at_ts: BTreeMap<u64, f64>,
    /// `N_RX(t_s)` for each realization, in realization order.
    pub n_rx_at_ts: Vec<u64>,
    /// Molecules switched at `t = 0`, per realization.
    pub switched: Vec<u64>,
}

impl EnsembleStats {
    /// Histogram of `N_RX(t_s)` indexed by count.
    pub fn histogram(&self) -> Vec<u64> {
        let max = self.n_rx_at_ts.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0u64; max + 1];
        for &n in &self.n_rx_at_ts {
            h[n as usize] += 1;
        }
        h
    }
}

/// Converts a time to a step index, rejecting off-grid times.
pub fn grid_index(t: f64, dt: f64) -> Result<u64> {
    let steps = t / dt;
    let idx = steps.round();
    if !(t >= 0.0) || (steps - idx).abs() > 1e-6 * idx.max(1.0) {
        return Err(Error::OffGrid { time: t, dt });
    }
    Ok(idx as u64)
}

struct RealizationOutcome {
    counts: Vec<u32>,
    n_rx_at_ts: u64,
    switched: u64,
}

fn run_realization(
    cfg: &SystemConfig,
    s: Bit,
    p_switch: f64,
    ens: &PbsEnsemble,
    record_steps: &[u64],
    ts_step: u64,
    total_steps: u64,
    streams: &StreamFactory,
    index: u64,
) -> Result<RealizationOutcome> {
    let prop = Propagation::from_config(cfg);
    let rx = cfg.rx.interval();
    let mut rng = streams.stream(Purpose::Realization, index);
    let mut pop = init_population(cfg, &mut rng);
    let switched = apply_modulation(&mut pop, &cfg.tx.interval(), s, p_switch, &mut rng)? as u64;

    let mut walkers: Vec<(Molecule, f64, Stream)> = pop
        .into_iter()
        .enumerate()
        .filter(|(_, m)| ens.tracking == Tracking::Full || m.state == MoleculeState::A)
        .map(|(i, m)| {
            let sd = (2.0 * prop.diffusion(m.state) * ens.dt).sqrt();
            let stream = streams.stream(
                Purpose::Propagation,
                molecule_stream_index(index, i as u64),
            );
            (m, sd, stream)
        })
        .collect();

    let drift = prop.flow_v * ens.dt;
    let count = |walkers: &[(Molecule, f64, Stream)]| {
        walkers
            .iter()
            .filter(|(m, _, _)| m.state == MoleculeState::A && rx.contains(m.z))
            .count()
    };

    let mut counts = Vec::with_capacity(record_steps.len());
    let mut next_record = 0;
    let mut n_rx_at_ts = 0;
    for step in 0..=total_steps {
        if step > 0 {
            for (m, sd, stream) in walkers.iter_mut() {
                let g: f64 = stream.sample(StandardNormal);
                m.z += drift + *sd * g;
            }
        }
        if step == ts_step {
            n_rx_at_ts = count(&walkers) as u64;
        }
        while next_record < record_steps.len() && record_steps[next_record] == step {
            counts.push(count(&walkers) as u32);
            next_record += 1;
        }
    }
    Ok(RealizationOutcome {
        counts,
        n_rx_at_ts,
        switched,
    })
}

/// Runs all realizations and aggregates the CIR, the distribution of
/// `N_RX(t_s)` and the raw counts. Deterministic in `ens.seed`.
pub fn run_ensemble(
    cfg: &SystemConfig,
    s: Bit,
    p_switch: f64,
    ens: &PbsEnsemble,
) -> Result<EnsembleStats> {
    if !(ens.dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {}", ens.dt)));
    }
    if ens.realizations < 1 || ens.realizations >= (1 << 32) {
        return Err(Error::Domain(format!(
            "realizations must lie in [1, 2^32), got {}",
            ens.realizations
        )));
    }
    if cfg.n_sys >= (1 << 32) {
        return Err(Error::Domain("particle simulation supports n_sys < 2^32".into()));
    }
    if !(0.0..=1.0).contains(&p_switch) {
        return Err(Error::Domain(format!(
            "switching probability must lie in [0, 1], got {p_switch}"
        )));
    }
    let t_s = cfg.sampling_time();
    let ts_step = grid_index(t_s, ens.dt)?;
    let record_steps = ens
        .record_grid
        .iter()
        .map(|&t| grid_index(t, ens.dt))
        .collect::<Result<Vec<_>>>()?;
    if record_steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("record grid must be strictly increasing".into()));
    }
    let total_steps = grid_index(ens.horizon, ens.dt).unwrap_or_else(|_| (ens.horizon / ens.dt).ceil() as u64);
    if total_steps < ts_step || record_steps.last().is_some_and(|&l| l > total_steps) {
        return Err(Error::Domain(format!(
            "horizon {} s must cover t_s = {t_s} s and the record grid",
            ens.horizon
        )));
    }

    let streams = StreamFactory::new(ens.seed);
    let outcomes = (0..ens.realizations)
        .into_par_iter()
        .map(|r| {
            run_realization(
                cfg,
                s,
                p_switch,
                ens,
                &record_steps,
                ts_step,
                total_steps,
                &streams,
                r,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let r = ens.realizations as f64;
    let mean_cir = ens
        .record_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mean = outcomes.iter().map(|o| o.counts[j] as f64).sum::<f64>() / r;
            let var = if ens.realizations > 1 {
                outcomes
                    .iter()
                    .map(|o| (o.counts[j] as f64 - mean).powi(2))
                    .sum::<f64>()
                    / (r - 1.0)
            } else {
                0.0
            };
            CirPoint {
                t,
                mean,
                stderr: (var / r).sqrt(),
            }
        })
        .collect();

    let n_rx_at_ts: Vec<u64> = outcomes.iter().map(|o| o.n_rx_at_ts).collect();
    let mut tally: BTreeMap<u64, u64> = BTreeMap::new();
    for &n in &n_rx_at_ts {
        *tally.entry(n).or_default() += 1;
    }
    let pmf_at_ts = tally.into_iter().map(|(k, c)| (k, c as f64 / r)).collect();

    Ok(EnsembleStats {
        mean_cir,
        pmf_at_ts,
        n_rx_at_ts,
        switched: outcomes.iter().map(|o| o.switched).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn streams() -> StreamFactory {
        StreamFactory::new(99)
    }

    #[test]
    fn population_placement() {
        let cfg = SystemConfig::default();
        let pop = init_population(&cfg, &mut streams().stream(Purpose::Realization, 0));
        assert_eq!(pop.len(), 1000);
        assert!(pop.iter().all(|m| (0.0..=0.5).contains(&m.z) && m.state == MoleculeState::B));
        let inside = pop.iter().filter(|m| cfg.tx.interval().contains(m.z)).count() as f64;
        // Binomial(1000, 0.1): sd ≈ 9.49
        assert!((inside - 100.0).abs() < 3.0 * 9.49, "{inside}");
        let again = init_population(&cfg, &mut streams().stream(Purpose::Realization, 0));
        assert_eq!(pop, again);

        let single = SystemConfig {
            n_sys: 1,
            ..SystemConfig::default()
        };
        let pop = init_population(&single, &mut streams().stream(Purpose::Realization, 0));
        assert_eq!(pop.len(), 1);
        assert_eq!(pop[0].state, MoleculeState::B);
    }

    #[test]
    fn modulation_respects_bit_and_interval() {
        let cfg = SystemConfig::default();
        let tx = cfg.tx.interval();
        let mut rng = streams().stream(Purpose::Realization, 1);
        let base = init_population(&cfg, &mut rng);
        let inside = base.iter().filter(|m| tx.contains(m.z)).count();

        let mut pop = base.clone();
        assert_eq!(apply_modulation(&mut pop, &tx, Bit::Zero, 1.0, &mut rng).unwrap(), 0);
        let mut pop = base.clone();
        assert_eq!(apply_modulation(&mut pop, &tx, Bit::One, 1.0, &mut rng).unwrap(), inside);
        assert!(pop
            .iter()
            .all(|m| (m.state == MoleculeState::A) == tx.contains(m.z)));
        assert!(apply_modulation(&mut pop, &tx, Bit::One, 1.5, &mut rng).is_err());
    }

    #[test]
    fn step_moves_by_drift_and_diffusion() {
        let prop = Propagation {
            flow_v: 0.01,
            diff_a: 1e-10,
            diff_b: 1e-10,
        };
        let dt = 1e-2;
        let n = 100_000;
        let mut pop = vec![
            Molecule {
                z: 0.0,
                state: MoleculeState::A
            };
            n
        ];
        step(&mut pop, &prop, dt, &mut streams().stream(Purpose::Propagation, 0)).unwrap();
        let mean = pop.iter().map(|m| m.z).sum::<f64>() / n as f64;
        let var = pop.iter().map(|m| (m.z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = (2e-12f64).sqrt();
        assert!((sd - 1.414e-6).abs() < 1e-9);
        assert!((mean - 1e-4).abs() < 3.0 * sd / (n as f64).sqrt());
        assert!((var.sqrt() / sd - 1.0).abs() < 0.01);
        assert!(step(&mut pop, &prop, 0.0, &mut streams().stream(Purpose::Propagation, 0)).is_err());
    }

    #[test]
    fn counting_is_non_destructive() {
        let rx = SystemConfig::default().rx.interval();
        let pop = vec![
            Molecule {
                z: 0.325,
                state: MoleculeState::A,
            },
            Molecule {
                z: 0.325,
                state: MoleculeState::B,
            },
            Molecule {
                z: 0.2,
                state: MoleculeState::A,
            },
        ];
        assert_eq!(count_state_a_in_rx(&pop, &rx), 1);
        assert_eq!(count_state_a_in_rx(&pop, &rx), 1);
        let all_b: Vec<_> = pop
            .iter()
            .map(|m| Molecule {
                state: MoleculeState::B,
                ..*m
            })
            .collect();
        assert_eq!(count_state_a_in_rx(&all_b, &rx), 0);
    }

    #[test]
    fn grid_index_rejects_off_grid_times() {
        assert_eq!(grid_index(20.0, 0.01).unwrap(), 2000);
        assert_eq!(grid_index(19.999999999999996, 0.01).unwrap(), 2000);
        assert!(matches!(grid_index(20.005, 0.01), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn off_grid_sampling_time_rejected() {
        let cfg = SystemConfig::default().with_override("pbs_dt=0.03").unwrap();
        let ens = PbsEnsemble::sampling_only(&cfg).with_realizations(2);
        assert!(matches!(
            run_ensemble(&cfg, Bit::One, 0.5, &ens),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn tracking_modes_agree_exactly() {
        let cfg = SystemConfig::default();
        let grid = vec![0.0, 10.0, 19.0, 20.0, 21.0];
        let fast = PbsEnsemble::new(&cfg, grid.clone()).with_realizations(8);
        let full = fast.clone().with_tracking(Tracking::Full);
        let a = run_ensemble(&cfg, Bit::One, 0.5, &fast).unwrap();
        let b = run_ensemble(&cfg, Bit::One, 0.5, &full).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_bit_yields_no_arrivals() {
        let cfg = SystemConfig::default();
        let ens = PbsEnsemble::new(&cfg, vec![0.0, 20.0]).with_realizations(50);
        let stats = run_ensemble(&cfg, Bit::Zero, 0.9, &ens).unwrap();
        assert!(stats.n_rx_at_ts.iter().all(|&n| n == 0));
        assert!(stats.mean_cir.iter().all(|p| p.mean == 0.0));
        assert_eq!(stats.pmf_at_ts.get(&0), Some(&1.0));
    }
}

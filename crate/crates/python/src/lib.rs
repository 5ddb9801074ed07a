//! Python bindings: `import mediamod_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mediamod::detect::{ber_empirical as run_ber_empirical, DetectorConfig};
use mediamod::pbs::{run_ensemble as run_pbs, PbsEnsemble};
use mediamod::rng::StreamFactory;
use mediamod::{ber_analytic as ber_closed_form, Bit, ChannelModel, LinkParams, ReceptionDistribution, Stage};

fn py_err(e: mediamod::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bit(value: u8) -> PyResult<Bit> {
    Bit::try_from(value).map_err(py_err)
}

/// Resolved system configuration.
#[pyclass(name = "Config", module = "mediamod_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: mediamod::SystemConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, optionally followed by `key=value` overrides.
    #[new]
    #[pyo3(signature = (overrides = Vec::new()))]
    fn new(overrides: Vec<String>) -> PyResult<Self> {
        let mut inner = mediamod::SystemConfig::default();
        for o in &overrides {
            inner = inner.with_override(o).map_err(py_err)?;
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        mediamod::load_config(text)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    fn with_override(&self, assignment: &str) -> PyResult<Self> {
        self.inner
            .clone()
            .with_override(assignment)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .get(key)
            .ok_or_else(|| PyValueError::new_err(format!("unknown configuration key `{key}`")))
    }

    fn to_document(&self) -> String {
        self.inner.to_document()
    }

    #[getter]
    fn p_tx(&self) -> f64 {
        self.inner.p_tx()
    }

    #[getter]
    fn sampling_time(&self) -> f64 {
        self.inner.sampling_time()
    }

    #[getter]
    fn expected_n_tx(&self) -> f64 {
        self.inner.expected_n_tx()
    }

    #[getter]
    fn n_sys(&self) -> u64 {
        self.inner.n_sys
    }

    /// `(lhs, rhs, ratio, ok)` of the static-molecule check.
    fn static_assumption(&self) -> (f64, f64, f64, bool) {
        let r = mediamod::validate_static_assumption(&self.inner);
        (r.lhs, r.rhs, r.ratio, r.ok)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(n_sys={}, irradiance_on={:?}, flow_v={:?}, seed={})",
            self.inner.n_sys, self.inner.tx.irradiance_on, self.inner.flow_v, self.inner.seed
        )
    }
}

/// Photoswitching at the transmitter for one irradiance.
#[pyclass(name = "SwitchingModel", module = "mediamod_py", frozen)]
struct PySwitchingModel {
    inner: mediamod::SwitchingModel,
}

#[pymethods]
impl PySwitchingModel {
    #[new]
    #[pyo3(signature = (config, irradiance = None))]
    fn new(config: &PyConfig, irradiance: Option<f64>) -> PyResult<Self> {
        let p = irradiance.unwrap_or(config.inner.tx.irradiance_on);
        mediamod::SwitchingModel::new(&config.inner, p)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn switch_probability(&self, n_tx: f64) -> PyResult<f64> {
        self.inner.switch_probability(n_tx).map_err(py_err)
    }

    fn n_b(&self, n_tx: f64, t: f64) -> f64 {
        self.inner.n_b_closed_form(n_tx, t)
    }

    #[pyo3(signature = (n_tx, t_end, steps = 10_000))]
    fn n_b_ode(&self, n_tx: f64, t_end: f64, steps: usize) -> f64 {
        self.inner.integrate_beer_lambert_ode(n_tx, t_end, steps)
    }

    #[getter]
    fn photon_flux(&self) -> f64 {
        self.inner.photon_flux
    }

    #[getter]
    fn absorption_scale(&self) -> f64 {
        self.inner.absorption_scale
    }
}

/// Advection-diffusion channel between TX and RX.
#[pyclass(name = "Channel", module = "mediamod_py", frozen)]
struct PyChannel {
    inner: ChannelModel,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        ChannelModel::from_config(&config.inner)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn hit_probability(&self, t: f64) -> f64 {
        self.inner.hit_probability(t)
    }

    #[pyo3(signature = (t, nodes = 2048))]
    fn hit_probability_quadrature(&self, t: f64, nodes: usize) -> f64 {
        self.inner.hit_probability_quadrature(t, nodes)
    }

    #[getter]
    fn sampling_time(&self) -> f64 {
        self.inner.sampling_time()
    }
}

/// Expected received count at `t` after a transmitted 1.
#[pyfunction]
#[pyo3(signature = (config, t, irradiance = None))]
fn expected_cir(config: &PyConfig, t: f64, irradiance: Option<f64>) -> PyResult<f64> {
    let model = PySwitchingModel::new(config, irradiance)?;
    let channel = ChannelModel::from_config(&config.inner).map_err(py_err)?;
    mediamod::expected_cir(&config.inner, &model.inner, &channel, t).map_err(py_err)
}

/// `(n_sys, p_tx, p_switch, h(t_s))` derived from the configuration.
#[pyfunction]
#[pyo3(signature = (config, irradiance = None))]
fn link_params(config: &PyConfig, irradiance: Option<f64>) -> PyResult<(u64, f64, f64, f64)> {
    let model = PySwitchingModel::new(config, irradiance)?;
    let channel = ChannelModel::from_config(&config.inner).map_err(py_err)?;
    let l = LinkParams::derive(&config.inner, &model.inner, &channel).map_err(py_err)?;
    Ok((l.n_sys, l.p_tx, l.p_switch, l.hit_probability))
}

#[pyfunction]
fn binomial_pmf(n: u64, p: f64, k: u64) -> PyResult<f64> {
    ReceptionDistribution::new(n, p, Stage::Received)
        .and_then(|d| d.pmf(k))
        .map_err(py_err)
}

#[pyfunction]
fn ber_analytic(n_sys: u64, p_r: f64) -> f64 {
    ber_closed_form(n_sys, p_r)
}

/// Monte-Carlo BER for a link with reception probability `p_r`.
#[pyfunction]
#[pyo3(signature = (n_sys, p_r, trials, seed = 0, threshold = 1))]
fn ber_empirical<'py>(
    py: Python<'py>,
    n_sys: u64,
    p_r: f64,
    trials: u64,
    seed: u64,
    threshold: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let link = LinkParams {
        n_sys,
        p_tx: 1.0,
        p_switch: 1.0,
        hit_probability: p_r,
    };
    let det = DetectorConfig::new(threshold).map_err(py_err)?;
    let streams = StreamFactory::new(seed);
    let e = py
        .detach(|| run_ber_empirical(&link, &det, trials, &streams))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("trials", e.trials)?;
    d.set_item("errors", e.errors)?;
    d.set_item("ber", e.ber)?;
    d.set_item("ci95", e.ci95)?;
    d.set_item("false_positives", e.false_positives)?;
    Ok(d)
}

/// Particle-based ensemble. Returns the mean CIR on `times` and the raw
/// `N_RX(t_s)` per realization.
#[pyfunction]
#[pyo3(signature = (config, bit_value = 1, realizations = None, times = Vec::new(), irradiance = None))]
fn run_ensemble<'py>(
    py: Python<'py>,
    config: &PyConfig,
    bit_value: u8,
    realizations: Option<u64>,
    times: Vec<f64>,
    irradiance: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = bit(bit_value)?;
    let model = PySwitchingModel::new(config, irradiance)?;
    let p_switch = model
        .inner
        .switch_probability(config.inner.expected_n_tx())
        .map_err(py_err)?;
    let ens = PbsEnsemble::new(&config.inner, times)
        .with_realizations(realizations.unwrap_or(config.inner.n_realizations));
    let cfg = config.inner.clone();
    let stats = py
        .detach(|| run_pbs(&cfg, s, p_switch, &ens))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("t", stats.mean_cir.iter().map(|c| c.t).collect::<Vec<_>>())?;
    d.set_item("mean", stats.mean_cir.iter().map(|c| c.mean).collect::<Vec<_>>())?;
    d.set_item("stderr", stats.mean_cir.iter().map(|c| c.stderr).collect::<Vec<_>>())?;
    d.set_item("n_rx_at_ts", stats.n_rx_at_ts)?;
    d.set_item("switched", stats.switched)?;
    d.set_item("p_switch", p_switch)?;
    Ok(d)
}

#[pymodule]
fn mediamod_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySwitchingModel>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(expected_cir, m)?)?;
    m.add_function(wrap_pyfunction!(link_params, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(ber_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(ber_empirical, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    Ok(())
}

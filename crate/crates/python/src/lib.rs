//! Python bindings: trace simulation, density fits, predictors and the
//! evaluation sweep. Configs are passed as JSON strings with the same keys as
//! the CLI config file.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sbsse_core::channel::{simulate as simulate_trace, NetworkConfig, TraceBundle};
use sbsse_core::density::amise::{amise_curves as curves, AmiseConfig};
use sbsse_core::density::{isj_bandwidth as isj, kde_fit, BandwidthChoice, BandwidthMethod};
use sbsse_core::error::Error;
use sbsse_core::eval::{self, run_sweep as sweep, SweepConfig};
use sbsse_core::predict::{self, Method, PredictorConfig};
use sbsse_core::series::{IpvSeries, SampleMatrix};

create_exception!(sbsse, SbsseError, PyException);

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => SbsseError::new_err(e.to_string()),
    }
}

fn from_json<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    match json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(T::default()),
    }
}

/// Simulated interference trace.
#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: TraceBundle,
}

#[pymethods]
impl PyTrace {
    /// Reads a trace CSV written by `simulate` or the CLI.
    #[staticmethod]
    fn read_csv(path: &str, noise_power_w: f64) -> PyResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| err(e.into()))?;
        let inner = TraceBundle::read_csv(std::io::BufReader::new(f), noise_power_w).map_err(err)?;
        Ok(Self { inner })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.inner.write_csv(std::io::BufWriter::new(f)).map_err(err)
    }

    /// Interference power per TTI in watts.
    #[getter]
    fn ipv(&self) -> Vec<f64> {
        self.inner.ipv.values().to_vec()
    }

    #[getter]
    fn sinr(&self) -> Vec<f64> {
        self.inner.sinr.clone()
    }

    #[getter]
    fn noise_power_w(&self) -> f64 {
        self.inner.noise_power_w
    }

    fn signal_power(&self, t: usize) -> PyResult<f64> {
        if t >= self.inner.len() {
            return Err(PyValueError::new_err(format!("TTI {t} outside a trace of {}", self.inner.len())));
        }
        Ok(self.inner.signal_power(t))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Trace(len={}, cells={})", self.inner.len(), self.inner.ues_per_cell.len())
    }
}

/// Simulates a trace. `config` is the JSON `network` section.
#[pyfunction]
#[pyo3(signature = (config=None, seed=None))]
fn simulate(config: Option<&str>, seed: Option<u64>) -> PyResult<PyTrace> {
    let mut cfg: NetworkConfig = from_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(PyTrace { inner: simulate_trace(&cfg).map_err(err)? })
}

/// Fitted maximum-quantile predictor on a log10 IPV joint density.
#[pyclass(name = "MqPredictor", frozen)]
struct PyMqPredictor {
    inner: predict::MqPredictor,
}

#[pymethods]
impl PyMqPredictor {
    /// Fits `method` (mq-ecdf, mq-kde, mq-sbsse or mq-lcsb) on IPVs in watts.
    #[new]
    #[pyo3(signature = (ipv, method="mq-sbsse", n_prev=1, subsets=None))]
    fn new(ipv: Vec<f64>, method: &str, n_prev: usize, subsets: Option<usize>) -> PyResult<Self> {
        let method: Method = method.parse().map_err(err)?;
        if !method.is_mq() {
            return Err(PyValueError::new_err(format!("{method} is not a maximum-quantile method")));
        }
        let cfg = PredictorConfig { method, n_prev, subsets, training_len: ipv.len(), ..Default::default() };
        let series = IpvSeries::new(ipv, 0).map_err(err)?;
        Ok(Self { inner: predict::MqPredictor::fit(&series, &cfg).map_err(err)? })
    }

    /// Outage IPV given the most recent IPVs, newest first. Falls back to the
    /// unconditional marginal when the conditioning value has no support.
    fn predict(&self, recent: Vec<f64>, epsilon: f64) -> PyResult<f64> {
        Ok(self.inner.predict_or_marginal(&recent, epsilon).map_err(err)?.ipv)
    }

    fn predict_unconditional(&self, epsilon: f64) -> PyResult<f64> {
        self.inner.predict_unconditional(epsilon).map_err(err)
    }

    /// Fit summary: subset sizes, bandwidths and iteration count.
    fn info<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let i = self.inner.info();
        let d = PyDict::new(py);
        d.set_item("method", self.inner.method().as_str())?;
        d.set_item("grid_points", i.grid_points)?;
        d.set_item("rows", i.rows)?;
        d.set_item("subset_sizes", i.subset_sizes.clone())?;
        d.set_item("bandwidths", i.bandwidths.clone())?;
        d.set_item("n_it", i.n_it)?;
        d.set_item("converged", i.converged)?;
        Ok(d)
    }
}

/// ISJ bandwidth of 1-D data; returns `(h, used_fallback)`.
#[pyfunction]
fn isj_bandwidth(data: Vec<f64>) -> PyResult<(f64, bool)> {
    let bw = isj(&data).map_err(err)?;
    Ok((bw.h, bw.method == BandwidthMethod::GaussianReference))
}

/// 1-D KDE on its default grid; returns `(grid, density, h)`.
#[pyfunction]
#[pyo3(signature = (data, bandwidth=None))]
fn kde(data: Vec<f64>, bandwidth: Option<f64>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let samples = SampleMatrix::from_values(&data).map_err(err)?;
    let choice = bandwidth.map_or(BandwidthChoice::Auto, BandwidthChoice::Fixed);
    let fit = kde_fit(&samples, choice).map_err(err)?;
    Ok((fit.density.grid().axis(0), fit.density.values().to_vec(), fit.bandwidth))
}

/// Log-normal outage IPV from training IPVs in watts.
#[pyfunction]
fn lognormal_predict(ipv: Vec<f64>, epsilon: f64) -> PyResult<f64> {
    let series = IpvSeries::new(ipv, 0).map_err(err)?;
    predict::lognormal_predict(&series, epsilon).map_err(err)
}

/// Runs OLLA-LPP over a whole IPV sequence with a constant signal power and
/// returns the predicted outage IPVs for TTIs `1..`.
#[pyfunction]
#[pyo3(signature = (ipv, signal_power, noise_power, epsilon, alpha=0.1, delta_ack_db=0.01))]
fn olla_lpp(
    ipv: Vec<f64>,
    signal_power: f64,
    noise_power: f64,
    epsilon: f64,
    alpha: f64,
    delta_ack_db: f64,
) -> PyResult<Vec<f64>> {
    if ipv.len() < 2 {
        return Err(PyValueError::new_err("need at least two IPVs"));
    }
    let mut state = predict::OllaLppState::new(ipv[0]);
    let mut ack = true;
    let mut out = Vec::with_capacity(ipv.len() - 1);
    for t in 1..ipv.len() {
        let (p, next) = predict::olla_lpp_predict(
            &state, ipv[t - 1], ack, signal_power, noise_power, alpha, delta_ack_db, epsilon,
        );
        state = next;
        ack = p.ipv >= ipv[t];
        out.push(p.ipv);
    }
    Ok(out)
}

#[pyfunction]
fn reliability_theta(predicted: Vec<f64>, actual: Vec<f64>) -> PyResult<f64> {
    eval::reliability_theta(&predicted, &actual).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sinr, violated, epsilon, blocklength=eval::DEFAULT_BLOCKLENGTH))]
fn spectral_efficiency(sinr: f64, violated: bool, epsilon: f64, blocklength: u64) -> f64 {
    eval::spectral_efficiency(sinr, violated, epsilon, blocklength)
}

/// Sweeps methods over epsilons and training lengths. `methods` holds method
/// names; `config` is the JSON `sweep` section. Returns one dict per record.
#[pyfunction]
#[pyo3(signature = (trace, methods, config=None, seed=0))]
fn run_sweep<'py>(
    py: Python<'py>,
    trace: &PyTrace,
    methods: Vec<String>,
    config: Option<&str>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg: SweepConfig = from_json(config)?;
    let methods = methods
        .iter()
        .map(|m| Ok(PredictorConfig { method: m.parse().map_err(err)?, ..Default::default() }))
        .collect::<PyResult<Vec<_>>>()?;
    let records = sweep(&trace.inner, &methods, &cfg, seed).map_err(err)?;
    records
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("method", r.method)?;
            d.set_item("epsilon", r.epsilon)?;
            d.set_item("L", r.training_len)?;
            d.set_item("seed", r.seed)?;
            d.set_item("theta", r.theta)?;
            d.set_item("avg_se", r.avg_se)?;
            d.set_item("op_count", r.op_count)?;
            Ok(d)
        })
        .collect()
}

/// AMISE curves; returns `(bandwidth, kde, sbsse_h1_fixed, sbsse_h2_fixed)`.
#[pyfunction]
#[pyo3(signature = (config=None))]
#[allow(clippy::type_complexity)]
fn amise_curves(config: Option<&str>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let cfg: AmiseConfig = from_json(config)?;
    let rows = curves(&cfg).map_err(err)?;
    Ok((
        rows.iter().map(|r| r.bandwidth).collect(),
        rows.iter().map(|r| r.amise_kde).collect(),
        rows.iter().map(|r| r.amise_sbsse_h1_fixed).collect(),
        rows.iter().map(|r| r.amise_sbsse_h2_fixed).collect(),
    ))
}

#[pymodule]
fn sbsse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SbsseError", m.py().get_type::<SbsseError>())?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyMqPredictor>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(isj_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(kde, m)?)?;
    m.add_function(wrap_pyfunction!(lognormal_predict, m)?)?;
    m.add_function(wrap_pyfunction!(olla_lpp, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_theta, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(amise_curves, m)?)?;
    Ok(())
}

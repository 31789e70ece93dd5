//! Python bindings: fields, flows, ensembles, the experiment estimators and
//! the config-driven runner.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use displab::experiments::{
    counterexample_scaling as ce_scaling, lee_inequality_check as lee_check, lee_optimal_alpha, maximal_ratio,
    smoothing_estimate as smoothing, strichartz_scaling as strichartz, tail_scaling as tails, CounterexampleGrid,
    SmoothingData, StrichartzCorpus,
};
use displab::propagators::{self, FlowConfig, NonlinearitySpec, Scheme};
use displab::random::{self, TorusEnsembleSpec};
use displab::resonance::{self, ResonanceQuery, ShellRange};
use displab::spectral::{inverse_transform, FrequencyBox, SpectralField};
use displab::{Complex64, Error};

create_exception!(displab, BlowUpError, PyException, "Numerical blow-up of a truncated flow.");
create_exception!(displab, ResourceError, PyException, "A work guard was exceeded.");

fn err(e: Error) -> PyErr {
    match e {
        Error::Precondition(_) | Error::Structure(_) | Error::DegenerateFit(_) => PyValueError::new_err(e.to_string()),
        Error::BlowUp { .. } => BlowUpError::new_err(e.to_string()),
        Error::Resource(_) => ResourceError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ok<T>(r: displab::Result<T>) -> PyResult<T> {
    r.map_err(err)
}

/// Parses a snake_case enum name such as `"wick_cubic"`.
fn named<T: DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} '{name}'")))
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(o) => {
            let dict = PyDict::new(py);
            for (k, x) in o {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

/// Fourier coefficients on the box `|n_j| ≤ half_width` of `T^dim`.
#[pyclass(name = "SpectralField", module = "displab")]
#[derive(Clone)]
struct PyField {
    inner: SpectralField,
}

#[pymethods]
impl PyField {
    /// Zero field, or the given coefficients in box order (row-major in d = 2).
    #[new]
    #[pyo3(signature = (dim, half_width, coeffs = None))]
    fn new(dim: usize, half_width: usize, coeffs: Option<Vec<Complex64>>) -> PyResult<Self> {
        let fb = ok(FrequencyBox::new(dim, half_width))?;
        let inner = match coeffs {
            Some(c) => ok(SpectralField::from_coeffs(fb, c))?,
            None => SpectralField::zeros(fb),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, half_width, mode, value = Complex64::new(1.0, 0.0)))]
    fn single_mode(dim: usize, half_width: usize, mode: (i64, i64), value: Complex64) -> PyResult<Self> {
        let fb = ok(FrequencyBox::new(dim, half_width))?;
        Ok(Self { inner: ok(SpectralField::single_mode(fb, [mode.0, mode.1], value))? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.freq_box().dim()
    }

    #[getter]
    fn half_width(&self) -> usize {
        self.inner.freq_box().half_width()
    }

    fn modes(&self) -> Vec<(i64, i64)> {
        self.inner.freq_box().modes().map(|n| (n[0], n[1])).collect()
    }

    fn coeffs(&self) -> Vec<Complex64> {
        self.inner.coeffs().to_vec()
    }

    fn coeff(&self, mode: (i64, i64)) -> Complex64 {
        self.inner.coeff([mode.0, mode.1])
    }

    fn l2_norm(&self) -> f64 {
        self.inner.sobolev_norm(0.0)
    }

    fn sobolev_norm(&self, s: f64) -> f64 {
        self.inner.sobolev_norm(s)
    }

    fn project_ball(&self, radius: u64) -> Self {
        Self { inner: self.inner.project_ball(radius) }
    }

    fn project_annulus(&self, radius: u64) -> PyResult<Self> {
        Ok(Self { inner: ok(self.inner.project_annulus(radius))? })
    }

    /// `(N, energy)` for each dyadic shell.
    fn shell_energies(&self) -> Vec<(u64, f64)> {
        self.inner.shell_energies().into_iter().map(|s| (s.shell, s.energy)).collect()
    }

    /// Samples on a uniform grid with `points_per_axis` points per axis.
    fn to_grid(&self, points_per_axis: usize) -> PyResult<Vec<Complex64>> {
        Ok(ok(inverse_transform(&self.inner, points_per_axis))?.into_samples())
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        Ok(Self { inner: ok(self.inner.sub(&other.inner))? })
    }

    fn __repr__(&self) -> String {
        format!("SpectralField(dim={}, half_width={}, l2={})", self.dim(), self.half_width(), self.l2_norm())
    }
}

fn flow_config(n: u64, kind: &str, sign: &str, scheme: &str, dt: Option<f64>) -> PyResult<FlowConfig> {
    let spec = NonlinearitySpec::new(named("nonlinearity", kind)?, named("sign", sign)?);
    let scheme: Scheme = named("scheme", scheme)?;
    ok(FlowConfig::new(n, spec, dt.unwrap_or(FlowConfig::max_dt(n)), scheme, 1))
}

/// `e^{itΔ} f`.
#[pyfunction]
fn linear_flow(f: &PyField, t: f64) -> PyField {
    PyField { inner: propagators::linear_flow(&f.inner, t) }
}

/// `e^{im·x} f`.
#[pyfunction]
fn modulate(f: &PyField, m: (i64, i64)) -> PyResult<PyField> {
    Ok(PyField { inner: ok(propagators::modulate(&f.inner, [m.0, m.1]))? })
}

#[pyfunction]
#[pyo3(signature = (f, kind = "wick_cubic", sign = "defocusing"))]
fn nonlinearity_eval(f: &PyField, kind: &str, sign: &str) -> PyResult<PyField> {
    let spec = NonlinearitySpec::new(named("nonlinearity", kind)?, named("sign", sign)?);
    Ok(PyField { inner: ok(propagators::nonlinearity_eval(&f.inner, spec))? })
}

/// Truncated flow `Φ^N_t f` up to `t_final`; returns `(state, time, max relative mass drift)`.
#[pyfunction]
#[pyo3(signature = (f, truncation_n, t_final, kind = "wick_cubic", sign = "defocusing", scheme = "strang_splitting", dt = None))]
fn evolve(
    py: Python<'_>,
    f: &PyField,
    truncation_n: u64,
    t_final: f64,
    kind: &str,
    sign: &str,
    scheme: &str,
    dt: Option<f64>,
) -> PyResult<(PyField, f64, f64)> {
    let config = flow_config(truncation_n, kind, sign, scheme, dt)?;
    let f0 = f.inner.clone();
    py.allow_threads(move || {
        let m0 = f0.project_ball(truncation_n).l2_norm_sq();
        let mut drift = 0.0f64;
        let stepper = propagators::evolve_with(&f0, config, t_final, |_, s| {
            if m0 > 0.0 {
                drift = drift.max((s.l2_norm_sq() - m0).abs() / m0);
            }
        })?;
        Ok((PyField { inner: stepper.state().clone() }, stepper.time(), drift))
    })
    .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dim, alpha, cutoff_k, master_seed, trial = 0))]
fn sample_torus_data(dim: usize, alpha: f64, cutoff_k: usize, master_seed: u64, trial: u64) -> PyResult<PyField> {
    let spec = ok(TorusEnsembleSpec::new(dim, alpha, cutoff_k, master_seed))?;
    Ok(PyField { inner: ok(random::sample_torus_data(&spec, trial))? })
}

/// `[(cell, ψ_cell(ξ))]` for the cells with nonzero weight.
#[pyfunction]
#[pyo3(signature = (xi, dim = 1))]
fn psi_weights(xi: (f64, f64), dim: usize) -> Vec<((i64, i64), f64)> {
    random::psi_weights([xi.0, xi.1], dim).into_iter().map(|(c, w)| ((c[0], c[1]), w)).collect()
}

#[pyfunction]
#[pyo3(signature = (n_list, kappa, points_per_n = 8, subdivisions = 8))]
fn counterexample_scaling<'py>(
    py: Python<'py>,
    n_list: Vec<u64>,
    kappa: f64,
    points_per_n: usize,
    subdivisions: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = CounterexampleGrid { points_per_n, subdivisions };
    let report = py.allow_threads(|| ce_scaling(&n_list, kappa, &grid)).map_err(err)?;
    dict(py, &report)
}

/// Maximal ratio of `f` on the time lattice of spacing `D`.
#[pyfunction]
#[pyo3(signature = (f, spacing, points_per_n = 8, subdivisions = 8))]
fn counterexample_ratio<'py>(
    py: Python<'py>,
    f: &PyField,
    spacing: u64,
    points_per_n: usize,
    subdivisions: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = CounterexampleGrid { points_per_n, subdivisions };
    dict(py, &ok(maximal_ratio(&f.inner, spacing, &grid))?)
}

#[pyfunction]
#[pyo3(signature = (dim, n_list, p = None, random = 6, master_seed = 0))]
fn strichartz_scaling<'py>(
    py: Python<'py>,
    dim: usize,
    n_list: Vec<u64>,
    p: Option<f64>,
    random: usize,
    master_seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = p.unwrap_or(displab::experiments::strichartz_admissible_p(dim));
    let corpus = StrichartzCorpus { random, master_seed };
    let report = py.allow_threads(|| strichartz(dim, &n_list, p, &corpus)).map_err(err)?;
    dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (dim, alpha, cutoff_k, master_seed, n_list, p, t, samples))]
#[allow(clippy::too_many_arguments)]
fn tail_scaling<'py>(
    py: Python<'py>,
    dim: usize,
    alpha: f64,
    cutoff_k: usize,
    master_seed: u64,
    n_list: Vec<u64>,
    p: f64,
    t: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = ok(TorusEnsembleSpec::new(dim, alpha, cutoff_k, master_seed))?;
    let points = py.allow_threads(|| tails(&spec, &n_list, p, t, samples)).map_err(err)?;
    dict(py, &points)
}

/// Smoothing of a fixed datum with nominal regularity `regularity`.
#[pyfunction]
#[pyo3(signature = (f, regularity, truncation_n, t_probe, kind = "wick_cubic", sign = "defocusing", scheme = "strang_splitting"))]
#[allow(clippy::too_many_arguments)]
fn smoothing_estimate<'py>(
    py: Python<'py>,
    f: &PyField,
    regularity: f64,
    truncation_n: u64,
    t_probe: f64,
    kind: &str,
    sign: &str,
    scheme: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let config = flow_config(truncation_n, kind, sign, scheme, None)?;
    let data = SmoothingData::Deterministic { field: f.inner.clone(), regularity };
    let report = py.allow_threads(|| smoothing(&data, &config, t_probe, 1)).map_err(err)?;
    dict(py, &report)
}

fn shells(list: &[u64]) -> Vec<ShellRange> {
    list.iter().map(|&n| ShellRange::Dyadic(n)).collect()
}

/// `#S` for dyadic shells `(N₁, N₂, N₃)` (balls `|n_j| ≤ N_j` with `ball`), optionally with `n_slot` fixed.
#[pyfunction]
#[pyo3(signature = (dim, mu, shell_list, fixed = None, exclusions = true, ball = false))]
fn count_s<'py>(
    py: Python<'py>,
    dim: usize,
    mu: i64,
    shell_list: Vec<u64>,
    fixed: Option<(usize, (i64, i64))>,
    exclusions: bool,
    ball: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let ranges = if ball { shell_list.iter().map(|&n| ShellRange::Ball(n)).collect() } else { shells(&shell_list) };
    let mut q = ResonanceQuery { shells: ranges, ..ResonanceQuery::cubic(dim, mu, [ShellRange::Dyadic(1); 3]) };
    q.exclusions = exclusions;
    if let Some((slot, v)) = fixed {
        q = q.with_fixed(slot, [v.0, v.1]);
    }
    let report = py.allow_threads(|| resonance::count_s(&q)).map_err(err)?;
    dict(py, &report)
}

/// `max_{n,n₂} #R_{n,n₂}` with `n` in the `N₁` shell.
#[pyfunction]
#[pyo3(signature = (dim, mu, shell_list))]
fn max_count_r<'py>(py: Python<'py>, dim: usize, mu: i64, shell_list: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    let s = shells(&shell_list);
    let mut q = ResonanceQuery { shells: s.clone(), ..ResonanceQuery::cubic(dim, mu, [ShellRange::Dyadic(1); 3]) };
    if let Some(&first) = s.first() {
        q = q.with_output_shell(first);
    }
    let report = py.allow_threads(|| resonance::max_count_r(&q)).map_err(err)?;
    dict(py, &report)
}

/// `(lhs, rhs, holds)` for samples `φ(j/M)` of a periodic function; the minimizing `α` when absent.
#[pyfunction]
#[pyo3(signature = (phi, p, alpha = None))]
fn lee_inequality_check<'py>(py: Python<'py>, phi: Vec<Complex64>, p: f64, alpha: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let alpha = match alpha {
        Some(a) => a,
        None => ok(lee_optimal_alpha(&phi, p))?,
    };
    dict(py, &ok(lee_check(&phi, p, alpha))?)
}

/// Validation problems of a TOML experiment config (empty when runnable).
#[pyfunction]
fn validate_config(toml_text: &str) -> PyResult<Vec<String>> {
    let cfg = displab_cli::ExperimentConfig::from_toml(toml_text).map_err(PyValueError::new_err)?;
    Ok(cfg.validate())
}

/// Runs a TOML experiment config and returns its manifest.
#[pyfunction]
#[pyo3(signature = (toml_text, output_dir = None))]
fn run_config<'py>(py: Python<'py>, toml_text: &str, output_dir: Option<std::path::PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = displab_cli::ExperimentConfig::from_toml(toml_text).map_err(PyValueError::new_err)?;
    let overrides = displab_cli::apply_overrides(&mut cfg, None, output_dir);
    let manifest = py.allow_threads(|| displab_cli::run(&cfg, overrides)).map_err(|e| match e {
        displab_cli::RunError::Module { error, .. } => err(error),
        displab_cli::RunError::Validation(v) => PyValueError::new_err(v.join("; ")),
        other => PyRuntimeError::new_err(other.to_string()),
    })?;
    dict(py, &manifest)
}

#[pymodule]
#[pyo3(name = "displab")]
fn displab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add("BlowUpError", m.py().get_type::<BlowUpError>())?;
    m.add("ResourceError", m.py().get_type::<ResourceError>())?;
    m.add_function(wrap_pyfunction!(linear_flow, m)?)?;
    m.add_function(wrap_pyfunction!(modulate, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinearity_eval, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(sample_torus_data, m)?)?;
    m.add_function(wrap_pyfunction!(psi_weights, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(strichartz_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(tail_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(count_s, m)?)?;
    m.add_function(wrap_pyfunction!(max_count_r, m)?)?;
    m.add_function(wrap_pyfunction!(lee_inequality_check, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings: signals, kernels and the main operations on them.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ptv::continuous::{self, ContinuousSpec, DiscretizeOptions, Harmonic};
use ptv::inverse::InverseOptions;
use ptv::spectrum;

create_exception!(ptv, PtvError, PyException, "Raised for every library error; the message starts with the error kind.");

fn err(e: ptv::PtvError) -> PyErr {
    PtvError::new_err(format!("{}: {e}", e.name()))
}

/// A multichannel discrete-time signal.
#[pyclass(name = "Signal", module = "ptv")]
struct PySignal {
    inner: ptv::Signal,
}

#[pymethods]
impl PySignal {
    #[new]
    #[pyo3(signature = (channels, sample_period_s=1.0, origin_index=0))]
    fn new(channels: Vec<Vec<f64>>, sample_period_s: f64, origin_index: i64) -> PyResult<Self> {
        Ok(Self {
            inner: ptv::Signal::new(sample_period_s, channels, origin_index).map_err(err)?,
        })
    }

    #[getter]
    fn sample_period_s(&self) -> f64 {
        self.inner.sample_period_s()
    }

    #[getter]
    fn origin_index(&self) -> i64 {
        self.inner.origin_index()
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn channels(&self) -> Vec<Vec<f64>> {
        self.inner.channels().to_vec()
    }

    fn delay(&self, d: i64) -> Self {
        Self {
            inner: self.inner.delay(d),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ptv::io::read_signal(path.as_ref()).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ptv::io::write_signal(path.as_ref(), &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Signal(channels={}, len={}, sample_period_s={}, origin_index={})",
            self.inner.n_channels(),
            self.inner.len(),
            self.inner.sample_period_s(),
            self.inner.origin_index()
        )
    }
}

/// Periodic kernel with taps indexed `[i][j][p][m]`.
#[pyclass(name = "Kernel", module = "ptv")]
struct PyKernel {
    inner: ptv::PeriodicKernel,
}

fn kernel(inner: ptv::PeriodicKernel) -> PyKernel {
    PyKernel { inner }
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (n_out, n_in, period, lag_min, lag_max, taps, sample_period_s=None))]
    fn new(
        n_out: usize,
        n_in: usize,
        period: usize,
        lag_min: i64,
        lag_max: i64,
        taps: Vec<f64>,
        sample_period_s: Option<f64>,
    ) -> PyResult<Self> {
        ptv::PeriodicKernel::new(n_out, n_in, period, lag_min, lag_max, taps, sample_period_s)
            .map(kernel)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (dim, period=1))]
    fn identity(dim: usize, period: usize) -> PyResult<Self> {
        ptv::PeriodicKernel::identity(dim, period).map(kernel).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(kernel)
            .map_err(|e| err(e.into()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        ptv::io::read_kernel(path.as_ref()).map(kernel).map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ptv::io::write_kernel(path.as_ref(), &self.inner).map_err(err)
    }

    #[getter]
    fn n_out(&self) -> usize {
        self.inner.n_out()
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.inner.n_in()
    }

    #[getter]
    fn period(&self) -> usize {
        self.inner.period()
    }

    #[getter]
    fn lag_min(&self) -> i64 {
        self.inner.lag_min()
    }

    #[getter]
    fn lag_max(&self) -> i64 {
        self.inner.lag_max()
    }

    #[getter]
    fn sample_period_s(&self) -> Option<f64> {
        self.inner.sample_period_s()
    }

    fn taps(&self) -> Vec<f64> {
        self.inner.taps().to_vec()
    }

    fn tap(&self, i: usize, j: usize, p: usize, m: i64) -> f64 {
        self.inner.tap(i, j, p, m)
    }

    fn trimmed(&self) -> Self {
        kernel(self.inner.trimmed())
    }

    #[pyo3(signature = (signal, threads=1))]
    fn apply(&self, py: Python<'_>, signal: &PySignal, threads: usize) -> PyResult<PySignal> {
        let x = signal.inner.clone();
        let k = &self.inner;
        py.detach(|| k.apply_threaded(&x, threads.max(1)))
            .map(|inner| PySignal { inner })
            .map_err(err)
    }

    fn max_abs_diff(&self, other: &PyKernel) -> PyResult<f64> {
        self.inner.max_abs_diff(&other.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel({}x{}, period={}, lags=[{}, {}])",
            self.inner.n_out(),
            self.inner.n_in(),
            self.inner.period(),
            self.inner.lag_min(),
            self.inner.lag_max()
        )
    }
}

/// Continuous-time periodic system description.
#[pyclass(name = "ContinuousSpec", module = "ptv")]
struct PySpec {
    inner: ContinuousSpec,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| err(e.into()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn multiplexer(n_inputs: usize, period_s: f64) -> PyResult<Self> {
        continuous::build_multiplexer(n_inputs, period_s)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// `harmonics` is a list of `(k, re, im)` Fourier coefficients.
    #[staticmethod]
    fn modulator(harmonics: Vec<(i64, f64, f64)>, period_s: f64) -> PyResult<Self> {
        let hs = harmonics.into_iter().map(|(k, re, im)| Harmonic { k, re, im }).collect();
        continuous::build_modulator(hs, period_s)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn sine(period_s: f64) -> PyResult<Self> {
        Self::modulator_from(continuous::sine_harmonics(), period_s)
    }

    #[staticmethod]
    fn cosine(period_s: f64) -> PyResult<Self> {
        Self::modulator_from(continuous::cosine_harmonics(), period_s)
    }

    #[staticmethod]
    fn lti(taps: Vec<f64>, tap_period_s: f64) -> PyResult<Self> {
        continuous::build_lti(taps, tap_period_s)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn period_s(&self) -> f64 {
        self.inner.period_s
    }

    /// `(value, truncated)`.
    fn variation_band(&self) -> (u32, bool) {
        let vb = continuous::variation_band(&self.inner);
        (vb.value, vb.truncated)
    }

    #[pyo3(signature = (sample_period_s, lag_min=0, lag_max=0, tail_tolerance=continuous::DEFAULT_TAIL_TOL))]
    fn discretize(&self, sample_period_s: f64, lag_min: i64, lag_max: i64, tail_tolerance: f64) -> PyResult<PyKernel> {
        continuous::discretize(
            &self.inner,
            sample_period_s,
            (lag_min, lag_max),
            DiscretizeOptions { tail_tolerance },
        )
        .map(kernel)
        .map_err(err)
    }
}

impl PySpec {
    fn modulator_from(hs: Vec<Harmonic>, period_s: f64) -> PyResult<Self> {
        continuous::build_modulator(hs, period_s)
            .map(|inner| Self { inner })
            .map_err(err)
    }
}

#[pyfunction]
fn series(h: &PyKernel, g: &PyKernel) -> PyResult<PyKernel> {
    ptv::series(&h.inner, &g.inner).map(kernel).map_err(err)
}

#[pyfunction]
fn parallel(h: &PyKernel, g: &PyKernel) -> PyResult<PyKernel> {
    ptv::parallel(&h.inner, &g.inner).map(kernel).map_err(err)
}

/// Reduces a circuit JSON file to one kernel.
#[pyfunction]
fn reduce_circuit(path: &str) -> PyResult<PyKernel> {
    let (c, opts) = ptv::io::read_circuit(path.as_ref()).map_err(err)?;
    ptv::reduce_circuit(&c, &opts).map(kernel).map_err(err)
}

/// Rows `(i, j, k, f, re, im)` of the hybrid spectrum.
#[pyfunction]
#[pyo3(signature = (k, grid=None))]
fn hybrid_spectrum(k: &PyKernel, grid: Option<usize>) -> PyResult<Vec<(usize, usize, i64, f64, f64, f64)>> {
    let l = grid.unwrap_or_else(|| spectrum::default_grid_size(&k.inner));
    let spec = ptv::hybrid_transform(&k.inner, l).map_err(err)?;
    Ok(spec.rows().collect())
}

#[pyfunction]
#[pyo3(signature = (k, input_band=0.0, tolerance=spectrum::DEFAULT_ENERGY_TOL))]
fn bandwidth<'py>(py: Python<'py>, k: &PyKernel, input_band: f64, tolerance: f64) -> PyResult<Bound<'py, PyDict>> {
    let ts = k.inner.sample_period_s().unwrap_or(1.0);
    let spec = ptv::hybrid_transform(&k.inner, spectrum::default_grid_size(&k.inner)).map_err(err)?;
    let a = spectrum::variation_band_estimate(&spec, tolerance).map_err(err)?;
    let b_lin = spectrum::linear_band_estimate(&spec, tolerance).map_err(err)? / ts;
    let b_y = spectrum::output_band(input_band, a as f64, k.inner.period() as f64 * ts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("A", a)?;
    d.set_item("B_linear", b_lin)?;
    d.set_item("B_x", input_band)?;
    d.set_item("B_y", b_y)?;
    d.set_item("nyquist_ok", b_y <= 0.5 / ts)?;
    d.set_item("min_rate", 2.0 * b_y)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (x, tolerance=spectrum::DEFAULT_ENERGY_TOL))]
fn signal_band(x: &PySignal, tolerance: f64) -> PyResult<f64> {
    spectrum::signal_band(&x.inner, tolerance).map_err(err)
}

/// Blocked MIMO of a SISO kernel, as a period-1 kernel.
#[pyfunction]
fn siso_to_mimo(k: &PyKernel) -> PyResult<PyKernel> {
    ptv::siso_to_mimo(&k.inner).map(|m| kernel(m.to_kernel())).map_err(err)
}

#[pyfunction]
fn mimo_to_siso(k: &PyKernel) -> PyResult<PyKernel> {
    let m = ptv::BlockedMimo::from_kernel(&k.inner).map_err(err)?;
    ptv::mimo_to_siso(&m).map(kernel).map_err(err)
}

#[pyfunction]
fn square_to_siso(k: &PyKernel) -> PyResult<PyKernel> {
    ptv::square_to_siso(&k.inner).map(kernel).map_err(err)
}

#[pyfunction]
fn siso_to_square(k: &PyKernel, n: usize) -> PyResult<PyKernel> {
    ptv::siso_to_square(&k.inner, n).map(kernel).map_err(err)
}

/// `(signal, pad_front, pad_back)`.
#[pyfunction]
fn block_signal(x: &PySignal, size: usize) -> PyResult<(PySignal, usize, usize)> {
    let b = ptv::equiv::block_signal(&x.inner, size).map_err(err)?;
    Ok((PySignal { inner: b.signal }, b.pad_front, b.pad_back))
}

#[pyfunction]
fn serialize_signal(x: &PySignal) -> PyResult<PySignal> {
    ptv::equiv::serialize_signal(&x.inner)
        .map(|inner| PySignal { inner })
        .map_err(err)
}

/// `(inverse, report)`.
#[pyfunction]
#[pyo3(signature = (k, residual_tol=ptv::inverse::DEFAULT_RESIDUAL_TOL, cond_limit=ptv::inverse::DEFAULT_COND_LIMIT))]
fn invert<'py>(
    py: Python<'py>,
    k: &PyKernel,
    residual_tol: f64,
    cond_limit: f64,
) -> PyResult<(PyKernel, Bound<'py, PyDict>)> {
    let opts = InverseOptions {
        residual_tol,
        cond_limit,
        ..InverseOptions::default()
    };
    let inv = ptv::invert(&k.inner, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("residual", inv.report.residual)?;
    d.set_item("condition_max", inv.report.condition_max)?;
    d.set_item("fft_size", inv.report.fft_size)?;
    d.set_item("period", inv.report.period)?;
    d.set_item("dims", inv.report.dims.to_vec())?;
    Ok((kernel(inv.inverse), d))
}

#[pyfunction]
#[pyo3(signature = (len, f0, amplitude=1.0, phase=0.0, sample_period_s=1.0))]
fn tone(len: usize, f0: f64, amplitude: f64, phase: f64, sample_period_s: f64) -> PyResult<PySignal> {
    ptv::gen::tone(len, f0, amplitude, phase, sample_period_s)
        .map(|inner| PySignal { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (len, channels=1, band=None, seed=0, sample_period_s=1.0))]
fn noise(len: usize, channels: usize, band: Option<f64>, seed: u64, sample_period_s: f64) -> PyResult<PySignal> {
    ptv::gen::noise(len, channels, band, seed, sample_period_s)
        .map(|inner| PySignal { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (len, f_start, f_end, amplitude=1.0, sample_period_s=1.0))]
fn chirp(len: usize, f_start: f64, f_end: f64, amplitude: f64, sample_period_s: f64) -> PyResult<PySignal> {
    ptv::gen::chirp(len, f_start, f_end, amplitude, sample_period_s)
        .map(|inner| PySignal { inner })
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "ptv")]
fn ptv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PtvError", m.py().get_type::<PtvError>())?;
    m.add_class::<PySignal>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PySpec>()?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(parallel, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(hybrid_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(signal_band, m)?)?;
    m.add_function(wrap_pyfunction!(siso_to_mimo, m)?)?;
    m.add_function(wrap_pyfunction!(mimo_to_siso, m)?)?;
    m.add_function(wrap_pyfunction!(square_to_siso, m)?)?;
    m.add_function(wrap_pyfunction!(siso_to_square, m)?)?;
    m.add_function(wrap_pyfunction!(block_signal, m)?)?;
    m.add_function(wrap_pyfunction!(serialize_signal, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(tone, m)?)?;
    m.add_function(wrap_pyfunction!(noise, m)?)?;
    m.add_function(wrap_pyfunction!(chirp, m)?)?;
    Ok(())
}

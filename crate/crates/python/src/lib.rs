//! Python bindings. Signals cross the boundary as flat row-major lists of
//! length `n * n`; coefficients stay on the Rust side inside `Coefficients`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use dualshear::bench;
use dualshear::cartoon::{self, CartoonSpec};
use dualshear::io;
use dualshear::system::{CoefficientTable, DualizableSystem, ElementKind, SystemConfig};
use dualshear::{LambdaIndex, ShearParam};

fn err(e: dualshear::Error) -> PyErr {
    match e {
        dualshear::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn lambda(cone: u8, j: i32, shear: &str, m: (i64, i64), p: u32) -> PyResult<LambdaIndex> {
    let s: ShearParam = shear.parse().map_err(err)?;
    LambdaIndex::new(cone, j, s, m, p).map_err(err)
}

/// Dualizable shearlet system on an `n x n` periodic grid.
#[pyclass(name = "System", module = "dualshear_py")]
struct PySystem {
    inner: DualizableSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (n=256, order=4, jmax=None))]
    fn new(n: usize, order: u32, jmax: Option<u32>) -> PyResult<Self> {
        let cfg = SystemConfig { n, order, jmax, ..SystemConfig::default() };
        Ok(PySystem { inner: DualizableSystem::new(cfg).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    #[getter]
    fn jmax(&self) -> u32 {
        self.inner.jmax()
    }

    fn shears(&self) -> Vec<String> {
        self.inner.shears().iter().map(|s| s.to_string()).collect()
    }

    fn coefficient_count(&self) -> usize {
        self.inner.coefficient_count()
    }

    /// `(A_hat, B_hat)`: extremes of the frame function on the grid.
    fn frame_bounds(&self) -> (f64, f64) {
        (self.inner.bank().a_hat, self.inner.bank().b_hat)
    }

    fn analyze(&self, f: Vec<f64>) -> PyResult<Coefficients> {
        Ok(Coefficients { inner: self.inner.analyze(&f).map_err(err)? })
    }

    /// Dual synthesis back to pixel samples.
    fn synthesize(&self, c: &Coefficients) -> PyResult<Vec<f64>> {
        self.inner.synthesize_dual(&c.inner).map_err(err)
    }

    /// Real spatial samples of a primal (or dual) element.
    #[pyo3(signature = (cone, j, shear, m1, m2, p, dual=false))]
    #[allow(clippy::too_many_arguments)]
    fn element(&self, cone: u8, j: i32, shear: &str, m1: i64, m2: i64, p: u32, dual: bool) -> PyResult<Vec<f64>> {
        let lam = lambda(cone, j, shear, (m1, m2), p)?;
        let kind = if dual { ElementKind::Dual } else { ElementKind::Primal };
        self.inner.element_spatial(&lam, kind).map_err(err)
    }

    /// Best-N relative error through the dual frame.
    fn nterm_error(&self, f: Vec<f64>, budget: usize) -> PyResult<f64> {
        Ok(bench::nterm_approx(&f, budget, &self.inner).map_err(err)?.1)
    }

    /// `[(N, err)]` for the shearlet system.
    fn nterm_curve(&self, f: Vec<f64>, budgets: Vec<usize>) -> PyResult<Vec<(usize, f64)>> {
        Ok(bench::shearlet_curve(&f, &self.inner, &budgets).map_err(err)?.points)
    }

    /// `[(N, err)]` for the separable wavelet baseline.
    fn tensor_curve(&self, f: Vec<f64>, budgets: Vec<usize>) -> PyResult<Vec<(usize, f64)>> {
        Ok(bench::tensor_curve(&f, &self.inner, &budgets).map_err(err)?.points)
    }
}

/// Analysis output.
#[pyclass(module = "dualshear_py")]
struct Coefficients {
    inner: CoefficientTable,
}

#[pymethods]
impl Coefficients {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    #[pyo3(signature = (cone, j, shear, m1, m2, p))]
    fn get(&self, cone: u8, j: i32, shear: &str, m1: i64, m2: i64, p: u32) -> PyResult<Complex64> {
        let lam = lambda(cone, j, shear, (m1, m2), p)?;
        self.inner.get(&lam).ok_or_else(|| PyValueError::new_err("index outside the table"))
    }

    /// `(cone, j, shear, m1, m2, p)` of flat position `flat`.
    fn index(&self, flat: usize) -> PyResult<(u8, i32, String, i64, i64, u32)> {
        let l = self.inner.lambda_at(flat).ok_or_else(|| PyValueError::new_err("flat index out of range"))?;
        Ok((l.cone, l.j, l.s.to_string(), l.m.0, l.m.1, l.p))
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().copied().collect()
    }

    /// Flat positions of the `budget` largest coefficients (deterministic ties).
    fn top(&self, budget: usize) -> Vec<u32> {
        let mut r = self.inner.ranking();
        r.truncate(budget);
        r
    }

    /// Copy keeping only the `budget` largest coefficients.
    fn keep_top(&self, budget: usize) -> Coefficients {
        let r = self.top(budget);
        Coefficients { inner: self.inner.masked(&r) }
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        io::save_coefficients(&dir, &self.inner, None).map_err(err)
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Coefficients> {
        Ok(Coefficients { inner: io::load_coefficients(&dir).map_err(err)?.0 })
    }
}

/// Cartoon phantom samples; `spec` is spec-file text, default phantom if omitted.
#[pyfunction]
#[pyo3(signature = (n, spec=None))]
fn cartoon_phantom(n: usize, spec: Option<&str>) -> PyResult<Vec<f64>> {
    let s = match spec {
        Some(t) => CartoonSpec::parse(t).map_err(err)?,
        None => CartoonSpec::default_phantom(),
    };
    cartoon::generate(&s, n).map_err(err)
}

/// `(slope, log_corrected_slope)` of a rate curve.
#[pyfunction]
fn rate_fit(points: Vec<(usize, f64)>) -> PyResult<(f64, f64)> {
    let c = bench::RateCurve::new("py", points).map_err(err)?;
    let f = bench::rate_fit(&c).map_err(err)?;
    Ok((f.slope, f.log_corrected_slope))
}

/// `(n, samples)` from a `.pgm` or raw grid with sidecar.
#[pyfunction]
fn load_signal(path: PathBuf) -> PyResult<(usize, Vec<f64>)> {
    let im = io::load_signal(&path).map_err(err)?;
    Ok((im.n, im.data))
}

#[pyfunction]
fn save_signal(path: PathBuf, data: Vec<f64>, n: usize) -> PyResult<()> {
    io::save_signal(&path, &data, n, serde_json::json!({})).map_err(err)
}

#[pymodule]
fn dualshear_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<Coefficients>()?;
    m.add_function(wrap_pyfunction!(cartoon_phantom, m)?)?;
    m.add_function(wrap_pyfunction!(rate_fit, m)?)?;
    m.add_function(wrap_pyfunction!(load_signal, m)?)?;
    m.add_function(wrap_pyfunction!(save_signal, m)?)?;
    m.add("TIE_BREAK_POLICY", dualshear::system::TIE_BREAK_POLICY)?;
    Ok(())
}

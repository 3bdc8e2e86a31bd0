//! Python bindings: configurations, symbols under the `∘`-product, solved
//! dressing triples, WKB phases and free energies.

use std::fmt::Display;

use num_traits::Zero;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use toda::cli::expr::{compile_expr, compile_scalar, parse_expr};
use toda::rhsolver::preset::{c1_data, c1_seed, vacuum};
use toda::rhsolver::{run, verify_seed, Config, DressingTriple, RhData, Seed, TripleDto};
use toda::scalars::Rat;
use toda::symbols::{circ_product, hbar_commutator, HSymbol};
use toda::tau::{extract_v, integrate_f, BernoulliTable, TauGradient};
use toda::verify::verify_all;
use toda::wkb::{exp_to_wkb, exp_to_wkb_bar};

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Config", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: Config,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (n_hbar = 1, xi_hi = 4, xi_lo = None, t_deg = 2, tbar_deg = 0))]
    fn new(n_hbar: u32, xi_hi: i64, xi_lo: Option<i64>, t_deg: u8, tbar_deg: u8) -> PyResult<Self> {
        let inner = Config::new(n_hbar, xi_lo.unwrap_or(-xi_hi), xi_hi, t_deg, tbar_deg).map_err(err)?;
        Ok(PyConfig { inner })
    }

    #[getter]
    fn n_hbar(&self) -> u32 {
        self.inner.n_hbar
    }

    #[getter]
    fn window(&self) -> (i64, i64) {
        (self.inner.xi_lo, self.inner.xi_hi)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(n_hbar={}, xi_lo={}, xi_hi={}, t_deg={}, tbar_deg={})",
            c.n_hbar, c.xi_lo, c.xi_hi, c.t_deg, c.tbar_deg
        )
    }
}

/// Symbol `sum ℏ^n a_{n,m} xi^m`; `*` is the `∘`-product.
#[pyclass(name = "Symbol", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySymbol {
    inner: HSymbol,
}

#[pymethods]
impl PySymbol {
    #[staticmethod]
    fn parse(expr: &str, config: &PyConfig) -> PyResult<Self> {
        let e = parse_expr(expr).map_err(err)?;
        Ok(PySymbol { inner: compile_expr(&e, config.inner.trunc()).map_err(err)? })
    }

    fn __mul__(&self, other: &PySymbol) -> PyResult<Self> {
        Ok(PySymbol { inner: circ_product(&self.inner, &other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &PySymbol) -> PyResult<Self> {
        Ok(PySymbol { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __sub__(&self, other: &PySymbol) -> PyResult<Self> {
        Ok(PySymbol { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn __eq__(&self, other: &PySymbol) -> bool {
        self.inner == other.inner
    }

    /// `(a ∘ b - b ∘ a) / ℏ`.
    fn commutator(&self, other: &PySymbol) -> PyResult<Self> {
        Ok(PySymbol { inner: hbar_commutator(&self.inner, &other.inner).map_err(err)? })
    }

    fn principal(&self) -> Self {
        PySymbol { inner: self.inner.principal() }
    }

    /// The `ℏ^n` coefficient as an order-0 symbol.
    fn order(&self, n: u32) -> Self {
        PySymbol { inner: self.inner.sym_h(n) }
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_dto()).expect("symbol serializes")
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Symbol({})", self.inner)
    }
}

#[pyclass(name = "Triple", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyTriple {
    inner: DressingTriple,
}

#[pymethods]
impl PyTriple {
    #[getter]
    fn n_hbar(&self) -> u32 {
        self.inner.trunc().n_hbar
    }

    fn x(&self, n: u32) -> PySymbol {
        PySymbol { inner: self.inner.x_n(n) }
    }

    fn xbar(&self, n: u32) -> PySymbol {
        PySymbol { inner: self.inner.xbar_n(n) }
    }

    fn phi(&self, n: usize) -> PyResult<String> {
        self.inner.phi.get(n).map(ToString::to_string).ok_or_else(|| err(format!("no phi_{n}")))
    }

    /// `(S_n, Sbar_n)` for every order, as text.
    fn phases(&self) -> PyResult<Vec<(String, String)>> {
        phases(&self.inner).map_err(err)
    }

    fn free_energies(&self) -> PyResult<Vec<String>> {
        free_energies(&self.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_dto()).expect("triple serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let dto: TripleDto = serde_json::from_str(text).map_err(err)?;
        let inner = DressingTriple::from_dto(&dto).ok_or_else(|| err("inconsistent triple"))?;
        Ok(PyTriple { inner })
    }
}

#[pyclass(name = "Solution", frozen)]
pub struct PySolution {
    data: RhData,
    triple: DressingTriple,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn triple(&self) -> PyTriple {
        PyTriple { inner: self.triple.clone() }
    }

    /// `(name, passed, coefficients checked)` for each identity.
    #[pyo3(signature = (flows = 2))]
    fn verify(&self, flows: usize) -> PyResult<Vec<(String, bool, usize)>> {
        let report = verify_all(&self.data, &self.triple, flows, 1).map_err(err)?;
        Ok(report.lines.iter().map(|l| (l.name.clone(), l.ok(), l.checked)).collect())
    }
}

pub fn phases(triple: &DressingTriple) -> Result<Vec<(String, String)>, String> {
    let s = exp_to_wkb(&triple.x).map_err(|e| e.to_string())?;
    let sbar = exp_to_wkb_bar(&triple.xbar, &triple.phi).map_err(|e| e.to_string())?;
    Ok((0..=s.n_hbar()).map(|n| (s.s.sym_h(n).to_string(), sbar.s.sym_h(n).to_string())).collect())
}

pub fn free_energies(triple: &DressingTriple) -> Result<Vec<String>, String> {
    let s = exp_to_wkb(&triple.x).map_err(|e| e.to_string())?;
    let sbar = exp_to_wkb_bar(&triple.xbar, &triple.phi).map_err(|e| e.to_string())?;
    let tables = extract_v(&s, &sbar).map_err(|e| e.to_string())?;
    let grad = TauGradient::from_tables(&tables, &BernoulliTable::new(tables.n_hbar() as usize + 1));
    let tau = integrate_f(&grad).map_err(|e| e.to_string())?;
    if !tau.report.ok() {
        return Err(tau.report.render());
    }
    Ok(tau.f.iter().map(ToString::to_string).collect())
}

fn solve_problem(cfg: &Config, data: RhData, seed: Seed) -> Result<(RhData, DressingTriple), String> {
    let cmp = verify_seed(&data, &seed, cfg.working_trunc()).map_err(|e| e.to_string())?;
    if !cmp.ok() {
        return Err(format!("seed does not solve the dispersionless problem: {:?}", cmp.mismatches.first()));
    }
    let sol = run(cfg, &data, &seed).map_err(|e| e.to_string())?;
    Ok((data, sol.triple))
}

pub fn solve_preset_impl(name: &str, cfg: &Config) -> Result<(RhData, DressingTriple), String> {
    let t = cfg.working_trunc();
    let (data, seed) = match name {
        "c1-string" => (c1_data(t, &Rat::zero()), c1_seed(t, &Rat::zero())),
        "vacuum" => vacuum(t),
        other => return Err(format!("unknown preset '{other}'")),
    };
    solve_problem(cfg, data, seed)
}

/// Solves from expressions `[f, g, fbar, gbar, x0, xbar0, phi0]`.
pub fn solve_exprs_impl(src: [&str; 7], cfg: &Config) -> Result<(RhData, DressingTriple), String> {
    let t = cfg.working_trunc();
    let t0 = t.with_n_hbar(0);
    let parse = |s: &str| parse_expr(s).map_err(|e| format!("'{s}': {e}"));
    let sym = |s: &str, t| compile_expr(&parse(s)?, t).map_err(|e| format!("'{s}': {e}"));
    let data =
        RhData::new(sym(src[0], t)?, sym(src[1], t)?, sym(src[2], t)?, sym(src[3], t)?).map_err(|e| e.to_string())?;
    let phi0 = compile_scalar(&parse(src[6])?, t).map_err(|e| format!("'{}': {e}", src[6]))?;
    let seed = Seed { x0: sym(src[4], t0)?, xbar0: sym(src[5], t0)?, phi0 };
    solve_problem(cfg, data, seed)
}

#[pyfunction]
fn solve_preset(name: &str, config: &PyConfig) -> PyResult<PySolution> {
    let (data, triple) = solve_preset_impl(name, &config.inner).map_err(err)?;
    Ok(PySolution { data, triple })
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn solve(
    f: &str,
    g: &str,
    fbar: &str,
    gbar: &str,
    seed_x0: &str,
    seed_xbar0: &str,
    seed_phi0: &str,
    config: &PyConfig,
) -> PyResult<PySolution> {
    let (data, triple) =
        solve_exprs_impl([f, g, fbar, gbar, seed_x0, seed_xbar0, seed_phi0], &config.inner).map_err(err)?;
    Ok(PySolution { data, triple })
}

#[pymodule]
#[pyo3(name = "toda_hbar")]
fn toda_hbar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySymbol>()?;
    m.add_class::<PyTriple>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_preset, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_hbar: u32) -> Config {
        Config::new(n_hbar, -3, 3, 1, 0).unwrap()
    }

    #[test]
    fn preset_free_energies() {
        let (_, triple) = solve_preset_impl("c1-string", &cfg(2)).unwrap();
        let f = free_energies(&triple).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[1], "0");
        assert!(solve_preset_impl("nonsense", &cfg(1)).is_err());
    }

    #[test]
    fn expressions_match_the_preset() {
        let src = [
            "E",
            "s",
            "(1 - s - hbar)*E",
            "s",
            "0",
            "t[1]*(1 - s)*E + t[2]*(1 - s)^2*E^2 + t[3]*(1 - s)^3*E^3",
            "(1 - s) - (1 - s)*log(1 - s)",
        ];
        let (_, a) = solve_exprs_impl(src, &cfg(1)).unwrap();
        let (_, b) = solve_preset_impl("c1-string", &cfg(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(phases(&a).unwrap()[0].0, "0");
    }

    #[test]
    fn bad_seed_is_rejected() {
        let src = ["E", "s", "(1 - s - hbar)*E", "s", "0", "0", "(1 - s) - (1 - s)*log(1 - s)"];
        assert!(solve_exprs_impl(src, &cfg(1)).unwrap_err().contains("seed"));
    }
}

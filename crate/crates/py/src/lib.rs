//! Python bindings. Reports cross the boundary as the same JSON text the
//! command-line tool prints, so Python callers can `json.loads` them.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use algebroid_hj::dynamics::{self, verify_lifted_curves, CurveSettings};
use algebroid_hj::expr::{parse, Bindings, Expr, Var, VarScope};
use algebroid_hj::hamilton_jacobi::{on_section_points, type1_residual, type2_residuals, Type2Options};
use algebroid_hj::prolongation::{verify_omega, DualPoint};
use algebroid_hj::report::ResidualReport;
use algebroid_hj::sampling::Sampler;
use algebroid_hj::scenario::{self, DEFAULT_HAMILTONIAN};
use algebroid_hj::time_extension::{embed, td_verify, TdKind, TdSettings};
use algebroid_hj::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Eval(_) | Error::SingularOmega { .. } | Error::Integration { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn var_named(name: &str, scope: &VarScope) -> Result<Var, Error> {
    match parse(name, scope)? {
        Expr::Var(v) => Ok(v),
        _ => Err(Error::Precondition(format!("`{name}` is not a variable"))),
    }
}

/// A parsed expression over `x1..xm`, `mu1..mun` and optionally `t`, `e`.
#[pyclass(name = "Expression", frozen, module = "algebroid_hj_py")]
pub struct PyExpression {
    inner: Expr,
    scope: VarScope,
}

#[pymethods]
impl PyExpression {
    #[new]
    #[pyo3(signature = (text, base_dim, rank, time = false))]
    fn new(text: &str, base_dim: usize, rank: usize, time: bool) -> PyResult<Self> {
        let scope = VarScope::new(base_dim, rank, time);
        let inner = parse(text, &scope).map_err(|e| py_err(e.into()))?;
        Ok(Self { inner, scope })
    }

    #[pyo3(signature = (x, mu, t = None, e = None))]
    fn eval(&self, x: Vec<f64>, mu: Vec<f64>, t: Option<f64>, e: Option<f64>) -> PyResult<f64> {
        let mut b = Bindings::new(&x, &mu);
        if let Some(t) = t {
            b = b.with_time(t);
        }
        if let Some(e) = e {
            b = b.with_energy(e);
        }
        self.inner.eval(&b).map_err(|e| py_err(e.into()))
    }

    fn diff(&self, var: &str) -> PyResult<Self> {
        let v = var_named(var, &self.scope).map_err(py_err)?;
        Ok(Self {
            inner: self.inner.differentiate(v),
            scope: self.scope,
        })
    }

    fn variables(&self) -> Vec<String> {
        self.inner.variables().iter().map(|v| v.to_string()).collect()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression('{}')", self.inner)
    }
}

/// A scenario from the built-in catalog or a JSON file.
#[pyclass(name = "Scenario", frozen, module = "algebroid_hj_py")]
pub struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::catalog_entry(name).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::load_scenario(path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::Scenario::from_json(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn base_dim(&self) -> usize {
        self.inner.spec.base_dim()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.spec.rank()
    }

    #[getter]
    fn time_dependent(&self) -> bool {
        self.inner.time_dependent
    }

    #[getter]
    fn sections(&self) -> Vec<String> {
        self.inner.sections.keys().cloned().collect()
    }

    #[getter]
    fn morphisms(&self) -> Vec<String> {
        self.inner.morphisms.keys().cloned().collect()
    }

    #[getter]
    fn hamiltonians(&self) -> Vec<String> {
        self.inner.hamiltonians.keys().cloned().collect()
    }

    /// Algebroid axiom residuals as JSON.
    #[pyo3(signature = (samples = 100, seed = None))]
    fn validate(&self, samples: usize, seed: Option<u64>) -> PyResult<String> {
        let s = &self.inner;
        let seed = seed.unwrap_or(s.seed);
        let pts = Sampler::new(seed).points_in(&s.domain, samples);
        let r = s.spec.validate(&pts, s.tolerances.structure, seed).map_err(py_err)?;
        Ok(r.to_json())
    }

    #[pyo3(signature = (x, mu, hamiltonian = DEFAULT_HAMILTONIAN))]
    fn hamilton_rhs(&self, x: Vec<f64>, mu: Vec<f64>, hamiltonian: &str) -> PyResult<Vec<f64>> {
        let s = &self.inner;
        let h = s.hamiltonian(hamiltonian).map_err(py_err)?;
        dynamics::hamilton_rhs(&s.spec, &h, &DualPoint::new(x, mu)).map_err(py_err)
    }

    /// Returns `(times, states)` with each state flattened as `x + mu`.
    /// Time-dependent scenarios start on the zero level of `e + H` and
    /// report extended states `(t, x, e, mu)`.
    #[pyo3(signature = (x, mu, t1, dt = 1e-2, t0 = 0.0, hamiltonian = DEFAULT_HAMILTONIAN))]
    fn integrate(
        &self,
        x: Vec<f64>,
        mu: Vec<f64>,
        t1: f64,
        dt: f64,
        t0: f64,
        hamiltonian: &str,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let s = &self.inner;
        let p = DualPoint::new(x, mu);
        let traj = if s.time_dependent {
            let ext = s.extended(hamiltonian).map_err(py_err)?;
            let p0 = ext.zero_level(t0, &p).map_err(py_err)?;
            dynamics::integrate(&ext.spec, &ext.k, &p0, t0, t1, dt)
        } else {
            let h = s.hamiltonian(hamiltonian).map_err(py_err)?;
            dynamics::integrate(&s.spec, &h, &p, t0, t1, dt)
        }
        .map_err(py_err)?;
        if let Some(why) = traj.diagnostic {
            return Err(PyRuntimeError::new_err(format!("trajectory truncated: {why}")));
        }
        let states = traj
            .states
            .iter()
            .map(|q| q.x.iter().chain(&q.mu).copied().collect())
            .collect();
        Ok((traj.times, states))
    }

    /// Hamilton-Jacobi residual report as JSON. `theorem` is one of
    /// `lifted`, `type1` or `type2`.
    #[pyo3(signature = (theorem, gamma, epsilon = None, samples = 100, seed = None, alt = false))]
    fn hj(
        &self,
        theorem: &str,
        gamma: &str,
        epsilon: Option<&str>,
        samples: usize,
        seed: Option<u64>,
        alt: bool,
    ) -> PyResult<String> {
        hj_report(&self.inner, theorem, gamma, epsilon, samples, seed, alt)
            .map(|r| r.to_json())
            .map_err(py_err)
    }

    /// Time-dependent residual report as JSON through the extended algebroid.
    #[pyo3(signature = (theorem, gamma, epsilon = None, samples = 100, seed = None, alt = false))]
    fn td(
        &self,
        theorem: &str,
        gamma: &str,
        epsilon: Option<&str>,
        samples: usize,
        seed: Option<u64>,
        alt: bool,
    ) -> PyResult<String> {
        td_report(&self.inner, theorem, gamma, epsilon, samples, seed, alt)
            .map(|r| r.to_json())
            .map_err(py_err)
    }
}

pub fn hj_report(
    s: &scenario::Scenario,
    theorem: &str,
    gamma: &str,
    epsilon: Option<&str>,
    samples: usize,
    seed: Option<u64>,
    alt: bool,
) -> Result<ResidualReport, Error> {
    if s.time_dependent {
        return Err(Error::Precondition(format!("{} is time-dependent; use td", s.name)));
    }
    let seed = seed.unwrap_or(s.seed);
    let def = s.section(gamma)?;
    let h = s.hamiltonian(&def.hamiltonian)?;
    let g = s.section_estar(gamma)?;
    let bx = s.section_domain(gamma)?;
    let mut sampler = Sampler::new(seed);
    match theorem {
        "lifted" | "5" => {
            let xs = sampler.points_in(bx, samples);
            let starts = sampler.points_in(bx, samples.clamp(1, 5));
            verify_lifted_curves(
                &s.spec,
                &h,
                &g,
                &xs,
                &starts,
                CurveSettings::default(),
                s.tolerances.hj,
                seed,
            )
        }
        "type1" => {
            let xs = sampler.points_in(bx, samples);
            type1_residual(&s.spec, &h, &g, &xs, s.tolerances.theorem, seed)
        }
        "type2" => {
            let name = epsilon.ok_or_else(|| Error::Precondition("type2 needs epsilon".into()))?;
            let eps = s.morphism(name)?;
            let pts = on_section_points(&s.spec, &g, &eps, &sampler.points_in(bx, samples))?;
            type2_residuals(
                &s.spec,
                &h,
                &g,
                &eps,
                &pts,
                s.tolerances.theorem,
                seed,
                Type2Options { alt },
            )
        }
        other => Err(Error::UnknownName {
            kind: "theorem",
            name: other.into(),
        }),
    }
}

pub fn td_report(
    s: &scenario::Scenario,
    theorem: &str,
    gamma: &str,
    epsilon: Option<&str>,
    samples: usize,
    seed: Option<u64>,
    alt: bool,
) -> Result<ResidualReport, Error> {
    let seed = seed.unwrap_or(s.seed);
    let kind = match theorem {
        "lifted" | "10" => TdKind::LiftedCurves,
        "type1" => TdKind::Type1,
        "type2" => TdKind::Type2,
        other => {
            return Err(Error::UnknownName {
                kind: "theorem",
                name: other.into(),
            })
        }
    };
    let def = s.section(gamma)?;
    let ext = s.extended(&def.hamiltonian)?;
    let section = s.time_section(gamma)?;
    let t0 = s.time_box.unwrap_or([0.0, 1.0])[0];
    let dual: Vec<DualPoint> = s
        .dual_samples(samples, &mut Sampler::new(seed))
        .iter()
        .map(|p| embed(t0, 0.0, p))
        .collect();
    let omega = verify_omega(&ext.spec, &dual, s.tolerances.omega, seed)?;
    if !omega.pass {
        return Err(Error::Precondition(format!(
            "extended symplectic form cross-check failed (max {:e})",
            omega.max
        )));
    }
    let xs = Sampler::new(seed).points_in(&s.extended_domain(Some(gamma))?, samples);
    let settings = TdSettings {
        tol: match kind {
            TdKind::LiftedCurves => s.tolerances.hj,
            _ => s.tolerances.theorem,
        },
        seed,
        curve: CurveSettings::default(),
        type2: Type2Options { alt },
    };
    let eps = epsilon.map(|e| s.morphism_exprs(e)).transpose()?;
    td_verify(kind, &ext, &section, eps, &xs, settings)
}

#[pyfunction]
fn catalog_names() -> Vec<String> {
    scenario::catalog_names().map(String::from).collect()
}

#[pymodule]
fn algebroid_hj_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    Ok(())
}

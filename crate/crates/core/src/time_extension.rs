//! Time-dependent Hamiltonians through the extended algebroid over `ℝ×M`.
//!
//! The extended bundle adds a basis section `e₀` with anchor `∂/∂t` and
//! vanishing brackets; its dual coordinate `e` is conjugate to time. A
//! Hamiltonian `H(t, x, μ)` becomes the autonomous `K = e + H`, and a
//! time-dependent section `γ_t` lifts to `Γ = (−H(t, x, γ_t), γ_t)`.

use crate::algebroid::{AlgebroidSpec, Layout, OneSectionDiff, SectionEStar, StructureEntry};
use crate::dynamics::{self, base_field_prepared, hamilton_rhs, rk4_fixed, CurveSettings, HamiltonianSpec, Trajectory};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var, VarScope};
use crate::hamilton_jacobi::{on_section_points, type2_residuals, FiberMorphism, Type2Options};
use crate::prolongation::{hamiltonian_section, phi_gamma_prepared, DualPoint};
use crate::report::{ReportBuilder, ResidualReport};

#[derive(Debug, Clone)]
pub struct ExtendedAlgebroid {
    pub inner: AlgebroidSpec,
    /// Base `(t, x)`, fiber `(e, μ)`.
    pub spec: AlgebroidSpec,
    /// `H(t, x, μ)`.
    pub hamiltonian: Expr,
    /// `K = e + H`.
    pub k: HamiltonianSpec,
}

/// Namespace of a time-dependent expression over `inner`: `x`, `μ` and `t`.
pub fn time_scope(inner: &AlgebroidSpec) -> VarScope {
    VarScope::new(inner.base_dim(), inner.rank(), true)
}

fn check_time_scope(inner: &AlgebroidSpec, e: &Expr, what: &str, allow_mu: bool) -> Result<()> {
    let scope = time_scope(inner);
    for v in e.variables() {
        let ok = scope.contains(v) && (allow_mu || !matches!(v, Var::Mu(_)));
        if !ok {
            return Err(Error::InvalidSpec(format!("{what} references undeclared variable {v}")));
        }
    }
    Ok(())
}

/// The extended algebroid of `inner` and `K = e + H`.
pub fn extend(inner: &AlgebroidSpec, h: Expr) -> Result<ExtendedAlgebroid> {
    if inner.layout() != Layout::Plain {
        return Err(Error::InvalidSpec("can only extend a plain algebroid".into()));
    }
    check_time_scope(inner, &h, "Hamiltonian", true)?;
    let (m, n) = (inner.base_dim(), inner.rank());
    let mut anchor = Vec::with_capacity(n + 1);
    let mut time_row = vec![Expr::zero(); m + 1];
    time_row[0] = Expr::one();
    anchor.push(time_row);
    for a in 0..n {
        let mut row = vec![Expr::zero()];
        row.extend((0..m).map(|i| inner.anchor_expr(a, i).clone()));
        anchor.push(row);
    }
    let entries = inner
        .structure_entries()
        .into_iter()
        .map(|e| StructureEntry {
            alpha: e.alpha + 1,
            beta: e.beta + 1,
            gamma: e.gamma + 1,
            expr: e.expr,
        })
        .collect();
    let spec = AlgebroidSpec::with_layout(m + 1, n + 1, Layout::TimeExtended, anchor, entries)?;
    let k = HamiltonianSpec::new(&spec, Expr::add(Expr::var(Var::E), h.clone()))?;
    Ok(ExtendedAlgebroid {
        inner: inner.clone(),
        spec,
        hamiltonian: h,
        k,
    })
}

/// `γ_t(x)`: `n` expressions in `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSection {
    pub components: Vec<Expr>,
}

impl TimeSection {
    pub fn new(inner: &AlgebroidSpec, components: Vec<Expr>) -> Result<Self> {
        if components.len() != inner.rank() {
            return Err(Error::Dimension(format!(
                "time section has {} components, rank is {}",
                components.len(),
                inner.rank()
            )));
        }
        for c in &components {
            check_time_scope(inner, c, "time section", false)?;
        }
        Ok(Self { components })
    }

    /// Time-independent section seen as a family.
    pub fn constant_in_time(gamma: &SectionEStar) -> Self {
        Self {
            components: gamma.components.clone(),
        }
    }
}

impl ExtendedAlgebroid {
    /// `Γ = (−H(t, x, γ_t), γ_t)` on the extended base.
    pub fn lift(&self, gamma: &TimeSection) -> Result<SectionEStar> {
        if gamma.components.len() != self.inner.rank() {
            return Err(Error::Dimension("time section rank mismatch".into()));
        }
        let h_gamma = self.hamiltonian.substitute(&|v| match v {
            Var::Mu(a) => Some(gamma.components[a].clone()),
            _ => None,
        });
        let mut comps = vec![Expr::neg(h_gamma)];
        comps.extend(gamma.components.iter().cloned());
        Ok(SectionEStar::new(comps))
    }

    /// Extended morphism `(e, μ) ↦ (e, ε(t, x, μ))`.
    pub fn extend_morphism(&self, eps: &[Expr]) -> Result<FiberMorphism> {
        for c in eps {
            check_time_scope(&self.inner, c, "fiber morphism", true)?;
        }
        let mut comps = vec![Expr::var(Var::E)];
        comps.extend(eps.iter().cloned());
        FiberMorphism::new(&self.spec, comps)
    }

    /// Extended state over `(t, p)` on the zero level of `K`.
    pub fn zero_level(&self, t: f64, p: &DualPoint) -> Result<DualPoint> {
        let h = self.hamiltonian.eval(&crate::expr::Bindings {
            x: &p.x,
            mu: &p.mu,
            t: Some(t),
            e: None,
        })?;
        Ok(embed(t, -h, p))
    }

    /// Integrates `K` from `p0` (extended coordinates) over a span of length `horizon`.
    pub fn integrate(&self, p0: &DualPoint, horizon: f64, dt: f64) -> Result<Trajectory> {
        dynamics::integrate(&self.spec, &self.k, p0, 0.0, horizon, dt)
    }
}

/// `π(t, e, x, μ) = (t, (x, μ))`.
pub fn project(p: &DualPoint) -> (f64, DualPoint) {
    (p.x[0], DualPoint::new(p.x[1..].to_vec(), p.mu[1..].to_vec()))
}

/// Inverse of `project` once `e` is supplied.
pub fn embed(t: f64, e: f64, p: &DualPoint) -> DualPoint {
    let mut x = vec![t];
    x.extend_from_slice(&p.x);
    let mut mu = vec![e];
    mu.extend_from_slice(&p.mu);
    DualPoint::new(x, mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdKind {
    LiftedCurves,
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdSettings {
    pub tol: f64,
    pub seed: u64,
    pub curve: CurveSettings,
    pub type2: Type2Options,
}

fn inf_norm<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Mismatch `(φ_Γ, Γ)(ξ_K^Γ) − ξ_K∘Γ` split into the full norm and the
/// norm over the inner (non-time) slots.
fn type1_split(ext: &ExtendedAlgebroid, gamma: &OneSectionDiff, xe: &[f64]) -> Result<(f64, f64)> {
    let spec = &ext.spec;
    let q = DualPoint::new(xe.to_vec(), gamma.values_at(spec, xe)?);
    let xi = hamiltonian_section(spec, &ext.k, &q)?;
    let d = phi_gamma_prepared(spec, gamma, &xi.a, xe)?.sub(&xi.to_prolong_vec(spec)?);
    let m1 = spec.base_dim();
    let full = inf_norm(d.b.iter().chain(&d.v));
    let inner = inf_norm(d.b[1..].iter().chain(&d.v[1..m1]).chain(&d.v[m1 + 1..]));
    Ok((full, inner))
}

/// `d/ds Γ(σ) − X_K(Γ(σ))` along `σ̇ = ρ(ξ_K^Γ)`, full and inner norms.
fn lifted_split(ext: &ExtendedAlgebroid, gamma: &OneSectionDiff, xe: &[f64]) -> Result<(f64, f64)> {
    let spec = &ext.spec;
    let q = DualPoint::new(xe.to_vec(), gamma.values_at(spec, xe)?);
    let rhs = hamilton_rhs(spec, &ext.k, &q)?;
    let sigma_dot = base_field_prepared(spec, &ext.k, gamma, xe)?;
    let j = gamma.jacobian_at(spec, xe)?;
    let m1 = spec.base_dim();
    let mut diff: Vec<f64> = (0..m1).map(|i| sigma_dot[i] - rhs[i]).collect();
    for be in 0..spec.rank() {
        let lifted: f64 = (0..m1).map(|i| j[(be, i)] * sigma_dot[i]).sum();
        diff.push(lifted - rhs[m1 + be]);
    }
    let full = inf_norm(&diff);
    let inner = inf_norm(diff[1..m1].iter().chain(&diff[m1 + 1..]));
    Ok((full, inner))
}

fn upper_amax(d: &nalgebra::DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..d.nrows() {
        for b in a + 1..d.ncols() {
            worst = worst.max(d[(a, b)].abs());
        }
    }
    worst
}

/// Runs one of the autonomous verifiers on the extended algebroid with the
/// lifted section. `samples` are points `(t, x)`. Families with an `_inner`
/// suffix drop the time slots and are what an autonomous run reproduces.
pub fn td_verify(
    kind: TdKind,
    ext: &ExtendedAlgebroid,
    gamma: &TimeSection,
    eps: Option<&[Expr]>,
    samples: &[Vec<f64>],
    settings: TdSettings,
) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("td_verify needs samples".into()));
    }
    let spec = &ext.spec;
    let lifted = ext.lift(gamma)?;
    let prepared = spec.prepare_one_section(&lifted)?;
    let skip = |report: &mut ReportBuilder, xe: &[f64], e: Error| -> Result<()> {
        match e {
            Error::Eval(err) => {
                report.skip(format!("sample {xe:?} skipped: {err}"));
                Ok(())
            }
            other => Err(other),
        }
    };
    match kind {
        TdKind::Type1 => {
            let mut report = ReportBuilder::new("td_type1", settings.tol, settings.seed).gate(&["type1"]);
            for xe in samples {
                let run = || -> Result<(f64, f64, f64)> {
                    let (full, inner) = type1_split(ext, &prepared, xe)?;
                    Ok((full, inner, upper_amax(&prepared.d_at(spec, xe)?)))
                };
                match run() {
                    Ok((full, inner, cocycle)) => report.record(
                        xe.clone(),
                        [("type1", full), ("type1_inner", inner), ("cocycle", cocycle)],
                    ),
                    Err(e) => skip(&mut report, xe, e)?,
                }
            }
            Ok(report.finish())
        }
        TdKind::LiftedCurves => {
            let hj = spec.d_function(&ext.k.compose_section(spec, &lifted))?;
            let mut report =
                ReportBuilder::new("td_lifted_curves", settings.tol, settings.seed).gate(&["hj", "lifted"]);
            for xe in samples {
                let run = || -> Result<(f64, f64)> {
                    let b = spec.bindings(xe, &[]);
                    let mut worst = 0.0f64;
                    for c in &hj.components {
                        worst = worst.max(c.eval(&b)?.abs());
                    }
                    Ok((worst, upper_amax(&prepared.d_at(spec, xe)?)))
                };
                match run() {
                    Ok((h, c)) => report.record(xe.clone(), [("hj", h), ("cocycle", c)]),
                    Err(e) => skip(&mut report, xe, e)?,
                }
            }
            for (k, start) in samples.iter().enumerate() {
                let run = rk4_fixed(start.clone(), 0.0, settings.curve.horizon, settings.curve.dt, |_, x| {
                    base_field_prepared(spec, &ext.k, &prepared, x)
                })?;
                if let Some(why) = run.failure {
                    report.note(format!("base curve {k} truncated: {why}"));
                }
                for xe in &run.states {
                    match lifted_split(ext, &prepared, xe) {
                        Ok((full, inner)) => report.record(xe.clone(), [("lifted", full), ("lifted_inner", inner)]),
                        Err(e) => skip(&mut report, xe, e)?,
                    }
                }
            }
            Ok(report.finish())
        }
        TdKind::Type2 => {
            let eps = match eps {
                Some(e) => ext.extend_morphism(e)?,
                None => FiberMorphism::identity(spec),
            };
            let points = on_section_points(spec, &lifted, &eps, samples)?;
            let mut r = type2_residuals(
                spec,
                &ext.k,
                &lifted,
                &eps,
                &points,
                settings.tol,
                settings.seed,
                settings.type2,
            )?;
            r.check = "td_type2".into();
            Ok(r)
        }
    }
}

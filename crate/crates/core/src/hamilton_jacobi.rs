//! Residual checks for Hamilton-Jacobi candidates: the cocycle condition,
//! the Type I equation, symplecticity of fiber morphisms and the two-sided
//! Type II equation.

use nalgebra::{DMatrix, DVector};

use crate::algebroid::{AlgebroidSpec, OneSectionDiff, SectionEStar};
use crate::dynamics::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::prolongation::{
    hamiltonian_section, omega_closed_form, phi_gamma_prepared, random_prolong_vec, DualPoint, ProlongVec,
};
use crate::report::{ReportBuilder, ResidualReport};
use crate::sampling::Sampler;

/// Pairs with `|Ω(v, w)|` above this are rescaled to `Ω(v, w) = 1`.
pub const PAIR_NORMALIZE_FLOOR: f64 = 1e-3;

/// `ε(x, μ) = (x, ε_1(x, μ), .., ε_n(x, μ))`, a fiber map over the identity.
#[derive(Debug, Clone)]
pub struct FiberMorphism {
    pub components: Vec<Expr>,
    // ∂ε_β/∂x_i and ∂ε_β/∂μ_α
    d_base: Vec<Vec<Expr>>,
    d_fiber: Vec<Vec<Expr>>,
}

impl FiberMorphism {
    pub fn new(spec: &AlgebroidSpec, components: Vec<Expr>) -> Result<Self> {
        if components.len() != spec.rank() {
            return Err(Error::Dimension(format!(
                "fiber morphism has {} components, rank is {}",
                components.len(),
                spec.rank()
            )));
        }
        for c in &components {
            if let Some(v) = c
                .variables()
                .into_iter()
                .find(|v| !spec.is_base_var(*v) && !spec.is_fiber_var(*v))
            {
                return Err(Error::InvalidSpec(format!(
                    "fiber morphism references undeclared variable {v}"
                )));
            }
        }
        let d_base = components
            .iter()
            .map(|c| {
                (0..spec.base_dim())
                    .map(|i| c.differentiate(spec.base_var(i)))
                    .collect()
            })
            .collect();
        let d_fiber = components
            .iter()
            .map(|c| (0..spec.rank()).map(|a| c.differentiate(spec.fiber_var(a))).collect())
            .collect();
        Ok(Self {
            components,
            d_base,
            d_fiber,
        })
    }

    pub fn identity(spec: &AlgebroidSpec) -> Self {
        let comps = (0..spec.rank()).map(|a| Expr::var(spec.fiber_var(a))).collect();
        Self::new(spec, comps).expect("identity morphism is well formed")
    }

    pub fn apply(&self, spec: &AlgebroidSpec, p: &DualPoint) -> Result<DualPoint> {
        let b = p.bindings(spec);
        let mu = self
            .components
            .iter()
            .map(|c| c.eval(&b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DualPoint::new(p.x.clone(), mu))
    }

    /// `(E_x, E_μ)`: the fiber rows of the Jacobian of `ε` at `p`.
    pub fn jacobian_at(&self, spec: &AlgebroidSpec, p: &DualPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let b = p.bindings(spec);
        let (m, n) = (spec.base_dim(), spec.rank());
        let mut ex = DMatrix::zeros(n, m);
        let mut emu = DMatrix::zeros(n, n);
        for be in 0..n {
            for i in 0..m {
                ex[(be, i)] = self.d_base[be][i].eval(&b)?;
            }
            for al in 0..n {
                emu[(be, al)] = self.d_fiber[be][al].eval(&b)?;
            }
        }
        Ok((ex, emu))
    }

    /// `𝒯ε(b, v) = (b, Tε·v)`, landing over `ε(p)`.
    pub fn tangent(&self, spec: &AlgebroidSpec, v: &ProlongVec) -> Result<ProlongVec> {
        let (ex, emu) = self.jacobian_at(spec, &v.at)?;
        let vx = DVector::from_column_slice(v.v_x());
        let vmu = DVector::from_column_slice(v.v_mu());
        let new_mu = ex * &vx + emu * vmu;
        let mut out = v.v_x().to_vec();
        out.extend(new_mu.iter());
        Ok(ProlongVec {
            at: self.apply(spec, &v.at)?,
            b: v.b.clone(),
            v: out,
        })
    }

    /// `H∘ε` as an expression in `(x, μ)`.
    pub fn compose(&self, spec: &AlgebroidSpec, h: &Expr) -> Expr {
        h.substitute(&|v| {
            (0..spec.rank())
                .find(|&a| spec.fiber_var(a) == v)
                .map(|a| self.components[a].clone())
        })
    }

    /// Finds `p = (x, μ)` with `ε(p) = (x, target)` by Newton iteration,
    /// starting from `μ = target`.
    pub fn preimage(&self, spec: &AlgebroidSpec, x: &[f64], target: &[f64]) -> Result<DualPoint> {
        let mut p = DualPoint::new(x.to_vec(), target.to_vec());
        for _ in 0..50 {
            let q = self.apply(spec, &p)?;
            let f = DVector::from_iterator(target.len(), q.mu.iter().zip(target).map(|(a, b)| a - b));
            if f.amax() <= 1e-14 * (1.0 + DVector::from_column_slice(target).amax()) {
                return Ok(p);
            }
            let (_, emu) = self.jacobian_at(spec, &p)?;
            let step = emu
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::Precondition("fiber morphism is not invertible along the fiber".into()))?;
            for (m, s) in p.mu.iter_mut().zip(step.iter()) {
                *m -= s;
            }
        }
        Err(Error::Precondition(format!(
            "no preimage of {target:?} over {x:?} under the fiber morphism"
        )))
    }
}

fn eval_or_skip<T>(
    report: &mut ReportBuilder,
    at: &dyn std::fmt::Debug,
    run: impl FnOnce() -> Result<T>,
) -> Result<Option<T>> {
    match run() {
        Ok(v) => Ok(Some(v)),
        Err(Error::Eval(e)) => {
            report.skip(format!("sample {at:?} skipped: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn upper_amax(d: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..d.nrows() {
        for b in a + 1..d.ncols() {
            worst = worst.max(d[(a, b)].abs());
        }
    }
    worst
}

fn require_samples<T>(samples: &[T], what: &str) -> Result<()> {
    if samples.is_empty() {
        Err(Error::Precondition(format!("{what} needs samples")))
    } else {
        Ok(())
    }
}

/// `max_{α<β} |(dγ)_{αβ}|` at each base sample.
pub fn cocycle_residual(
    spec: &AlgebroidSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<ResidualReport> {
    require_samples(samples, "cocycle_residual")?;
    let prepared = spec.prepare_one_section(gamma)?;
    let mut report = ReportBuilder::new("cocycle", tol, seed);
    for x in samples {
        if let Some(r) = eval_or_skip(&mut report, x, || Ok(upper_amax(&prepared.d_at(spec, x)?)))? {
            report.record(x.clone(), [("cocycle", r)]);
        }
    }
    Ok(report.finish())
}

/// `‖d(H∘γ)‖∞` at each base sample.
pub fn hj_residual(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<ResidualReport> {
    require_samples(samples, "hj_residual")?;
    let d = spec.d_function(&h.compose_section(spec, gamma))?;
    let mut report = ReportBuilder::new("hj", tol, seed);
    for x in samples {
        let run = || -> Result<f64> {
            let b = spec.bindings(x, &[]);
            let mut worst = 0.0f64;
            for c in &d.components {
                worst = worst.max(c.eval(&b)?.abs());
            }
            Ok(worst)
        };
        if let Some(r) = eval_or_skip(&mut report, x, run)? {
            report.record(x.clone(), [("hj", r)]);
        }
    }
    Ok(report.finish())
}

fn type1_at(spec: &AlgebroidSpec, h: &HamiltonianSpec, gamma: &OneSectionDiff, x: &[f64]) -> Result<f64> {
    let q = DualPoint::new(x.to_vec(), gamma.values_at(spec, x)?);
    let xi = hamiltonian_section(spec, h, &q)?;
    let lhs = phi_gamma_prepared(spec, gamma, &xi.a, x)?;
    Ok(lhs.distance(&xi.to_prolong_vec(spec)?))
}

/// `‖(φ_γ, γ)(ξ_H^γ) − ξ_H∘γ‖∞` at each base sample. The cocycle and
/// `d(H∘γ)` residuals ride along as ungated families.
pub fn type1_residual(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    tol: f64,
    seed: u64,
) -> Result<ResidualReport> {
    require_samples(samples, "type1_residual")?;
    let prepared = spec.prepare_one_section(gamma)?;
    let dhg = spec.d_function(&h.compose_section(spec, gamma))?;
    let mut report = ReportBuilder::new("type1", tol, seed).gate(&["type1"]);
    for x in samples {
        let run = || -> Result<(f64, f64, f64)> {
            let t1 = type1_at(spec, h, &prepared, x)?;
            let cocycle = upper_amax(&prepared.d_at(spec, x)?);
            let b = spec.bindings(x, &[]);
            let mut hj = 0.0f64;
            for c in &dhg.components {
                hj = hj.max(c.eval(&b)?.abs());
            }
            Ok((t1, cocycle, hj))
        };
        if let Some((t1, cocycle, hj)) = eval_or_skip(&mut report, x, run)? {
            report.record(x.clone(), [("type1", t1), ("cocycle", cocycle), ("hj", hj)]);
        }
    }
    Ok(report.finish())
}

/// `|Ω_{ε(p)}(𝒯ε v, 𝒯ε w) − Ω_p(v, w)|` at one random compatible pair per
/// dual point. Pairs with a non-negligible pairing are scaled so that
/// `Ω_p(v, w) = 1`, which makes the residual a relative defect.
pub fn symplectic_residual(
    spec: &AlgebroidSpec,
    eps: &FiberMorphism,
    points: &[DualPoint],
    tol: f64,
    sampler: &mut Sampler,
) -> Result<ResidualReport> {
    require_samples(points, "symplectic_residual")?;
    let mut report = ReportBuilder::new("symplectic", tol, sampler.seed());
    for p in points {
        let v = random_prolong_vec(spec, p, sampler)?;
        let w = random_prolong_vec(spec, p, sampler)?;
        let run = || -> Result<f64> {
            let omega_p = omega_closed_form(spec, p)?;
            let mut v = v;
            let base = omega_p.pair(&v, &w);
            if base.abs() > PAIR_NORMALIZE_FLOOR {
                let s = 1.0 / base;
                v = ProlongVec {
                    at: v.at,
                    b: v.b.iter().map(|c| c * s).collect(),
                    v: v.v.iter().map(|c| c * s).collect(),
                };
            }
            let base = omega_p.pair(&v, &w);
            let tv = eps.tangent(spec, &v)?;
            let tw = eps.tangent(spec, &w)?;
            let omega_q = omega_closed_form(spec, &tv.at)?;
            Ok((omega_q.pair(&tv, &tw) - base).abs())
        };
        if let Some(r) = eval_or_skip(&mut report, &p.coords(), run)? {
            report.record(p.coords(), [("symplectic", r)]);
        }
    }
    Ok(report.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Type2Options {
    /// Compare `𝒯ε∘ξ_H` instead of `𝒯ε∘ξ_{H∘ε}` on the left of the second family.
    pub alt: bool,
}

/// The two sides of the Type II equivalence at each dual point `p`:
/// `residual_B = ‖(φ_γ, γ)(pr₁ ξ_H(ε(p))) − ξ_H(ε(p))‖∞` and
/// `residual_A = ‖𝒯ε ξ_{H∘ε}(p) − 𝒯̃λ ξ_H(ε(p))‖∞`.
///
/// Symplecticity of `ε` is checked on the same points and reported as the
/// ungated `symplectic` family; a failure adds a note but does not abort.
#[allow(clippy::too_many_arguments)]
pub fn type2_residuals(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &SectionEStar,
    eps: &FiberMorphism,
    points: &[DualPoint],
    tol: f64,
    seed: u64,
    opts: Type2Options,
) -> Result<ResidualReport> {
    require_samples(points, "type2_residuals")?;
    let prepared = spec.prepare_one_section(gamma)?;
    let h_eps = HamiltonianSpec::new(spec, eps.compose(spec, &h.expr))?;
    let sym = symplectic_residual(spec, eps, points, tol, &mut Sampler::new(seed))?;

    let mut report = ReportBuilder::new("type2", tol, seed).gate(&["residual_A", "residual_B"]);
    for p in points {
        let run = || -> Result<(f64, f64)> {
            let q = eps.apply(spec, p)?;
            let xi_q = hamiltonian_section(spec, h, &q)?;
            let xi_q_vec = xi_q.to_prolong_vec(spec)?;
            let lifted = phi_gamma_prepared(spec, &prepared, &xi_q.a, &q.x)?;
            let residual_b = lifted.distance(&xi_q_vec);

            let source = if opts.alt { h } else { &h_eps };
            let xi_p = hamiltonian_section(spec, source, p)?.to_prolong_vec(spec)?;
            let pushed = eps.tangent(spec, &xi_p)?;
            let residual_a = pushed.distance(&lifted);
            Ok((residual_a, residual_b))
        };
        if let Some((a, b)) = eval_or_skip(&mut report, &p.coords(), run)? {
            let mut values = vec![("residual_A", a), ("residual_B", b)];
            if let Some(s) = sym.samples.iter().find(|s| s.point == p.coords()) {
                values.push(("symplectic", s.values["symplectic"]));
            }
            report.record(p.coords(), values);
        }
    }
    if !sym.pass {
        report.note(format!(
            "fiber morphism is not symplectic on these samples (max defect {:e}); the equivalence need not hold",
            sym.max
        ));
    }
    if opts.alt {
        report.note("alt form: left side uses the pushforward of the Hamiltonian section of H");
    }
    let mut out = report.finish();
    out.notes.push(if type2_agree(&out, tol) {
        "equivalence: consistent".to_string()
    } else {
        "equivalence: violated".to_string()
    });
    Ok(out)
}

/// Whether both Type II families pass, or both fail, at `tol`.
pub fn type2_agree(report: &ResidualReport, tol: f64) -> bool {
    (report.family_max("residual_A") <= tol) == (report.family_max("residual_B") <= tol)
}

/// Dual points over `xs` whose image under `ε` lies on the graph of `γ`.
pub fn on_section_points(
    spec: &AlgebroidSpec,
    gamma: &SectionEStar,
    eps: &FiberMorphism,
    xs: &[Vec<f64>],
) -> Result<Vec<DualPoint>> {
    let prepared = spec.prepare_one_section(gamma)?;
    xs.iter()
        .map(|x| eps.preimage(spec, x, &prepared.values_at(spec, x)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::StructureEntry;
    use crate::expr::parse;

    fn canonical(m: usize) -> AlgebroidSpec {
        let anchor = (0..m)
            .map(|a| (0..m).map(|i| Expr::Const(if a == i { 1.0 } else { 0.0 })).collect())
            .collect();
        AlgebroidSpec::new(m, m, anchor, vec![]).unwrap()
    }

    fn heisenberg() -> AlgebroidSpec {
        AlgebroidSpec::new(
            0,
            3,
            vec![vec![]; 3],
            vec![StructureEntry {
                alpha: 0,
                beta: 1,
                gamma: 2,
                expr: Expr::one(),
            }],
        )
        .unwrap()
    }

    fn exprs(spec: &AlgebroidSpec, src: &[&str]) -> Vec<Expr> {
        src.iter().map(|s| parse(s, &spec.scope()).unwrap()).collect()
    }

    fn section(spec: &AlgebroidSpec, src: &[&str]) -> SectionEStar {
        SectionEStar::new(exprs(spec, src))
    }

    fn ham(spec: &AlgebroidSpec, src: &str) -> HamiltonianSpec {
        HamiltonianSpec::new(spec, parse(src, &spec.scope()).unwrap()).unwrap()
    }

    fn morph(spec: &AlgebroidSpec, src: &[&str]) -> FiberMorphism {
        FiberMorphism::new(spec, exprs(spec, src)).unwrap()
    }

    #[test]
    fn heisenberg_cocycles() {
        let spec = heisenberg();
        let r = cocycle_residual(&spec, &section(&spec, &["1", "1", "0"]), &[vec![]], 1e-12, 0).unwrap();
        assert_eq!(r.max, 0.0);
        let r = cocycle_residual(&spec, &section(&spec, &["0", "0", "1"]), &[vec![]], 1e-12, 0).unwrap();
        assert_eq!(r.max, 1.0);
    }

    #[test]
    fn exact_differential_is_cocycle() {
        let spec = canonical(2);
        let g = section(&spec, &["2*x1*x2", "x1^2"]);
        let pts = Sampler::new(5).points_in(&crate::sampling::CoordBox::cube(2, -2.0, 2.0), 20);
        let r = cocycle_residual(&spec, &g, &pts, 1e-10, 5).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn type1_examples() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let good = section(&spec, &["sqrt(2*(1 - x1^2/2))"]);
        let xs: Vec<Vec<f64>> = (0..11).map(|k| vec![-1.0 + 0.15 * k as f64]).collect();
        let r = type1_residual(&spec, &h, &good, &xs, 1e-9, 0).unwrap();
        assert!(r.pass, "{}", r.max);

        let bad = section(&spec, &["x1"]);
        let r = type1_residual(&spec, &h, &bad, &[vec![1.0]], 1e-9, 0).unwrap();
        assert_eq!(r.max, 2.0);

        let heis = heisenberg();
        let free = ham(&heis, "(mu1^2 + mu2^2 + mu3^2)/2");
        let r = type1_residual(&heis, &free, &SectionEStar::zero(3), &[vec![]], 0.0, 0).unwrap();
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn symplectic_examples() {
        let spec = canonical(1);
        let pts: Vec<DualPoint> = (0..20)
            .map(|k| DualPoint::new(vec![-1.0 + 0.1 * k as f64], vec![0.3 * k as f64 - 2.0]))
            .collect();
        let id = FiberMorphism::identity(&spec);
        let r = symplectic_residual(&spec, &id, &pts, 0.0, &mut Sampler::new(1)).unwrap();
        assert_eq!(r.max, 0.0);

        let cubic = morph(&spec, &["mu1 + 3*x1^2"]);
        let r = symplectic_residual(&spec, &cubic, &pts, 1e-9, &mut Sampler::new(1)).unwrap();
        assert!(r.pass, "{}", r.max);

        let scale = morph(&spec, &["2*mu1"]);
        let r = symplectic_residual(&spec, &scale, &pts, 1e-8, &mut Sampler::new(1)).unwrap();
        assert!(!r.pass);
        let normalized = r.values_of("symplectic").filter(|v| (v - 1.0).abs() < 1e-12).count();
        assert!(normalized >= 15, "{normalized}");
    }

    #[test]
    fn type2_collapses_to_type1_for_identity() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let good = section(&spec, &["sqrt(2*(1 - x1^2/2))"]);
        let id = FiberMorphism::identity(&spec);
        let xs: Vec<Vec<f64>> = (0..8).map(|k| vec![-1.0 + 0.2 * k as f64]).collect();
        let pts = on_section_points(&spec, &good, &id, &xs).unwrap();
        let r = type2_residuals(&spec, &h, &good, &id, &pts, 1e-8, 0, Type2Options::default()).unwrap();
        assert!(r.pass, "{:?}", r.families);

        let bad = section(&spec, &["x1"]);
        let p = DualPoint::new(vec![1.0], vec![1.0]);
        let r = type2_residuals(&spec, &h, &bad, &id, &[p], 1e-8, 0, Type2Options::default()).unwrap();
        assert!(r.family_max("residual_A") > 0.5);
        assert!(r.family_max("residual_B") > 0.5);
        assert!(type2_agree(&r, 1e-6));
    }

    #[test]
    fn type2_translated_solution() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let good = section(&spec, &["sqrt(2*(1 - x1^2/2))"]);
        let eps = morph(&spec, &["mu1 + 3*x1^2"]);
        let xs: Vec<Vec<f64>> = (0..8).map(|k| vec![-1.0 + 0.2 * k as f64]).collect();
        let pts = on_section_points(&spec, &good, &eps, &xs).unwrap();
        for (p, x) in pts.iter().zip(&xs) {
            let want = (2.0 - x[0] * x[0]).sqrt() - 3.0 * x[0] * x[0];
            assert!((p.mu[0] - want).abs() < 1e-12);
        }
        let r = type2_residuals(&spec, &h, &good, &eps, &pts, 1e-8, 0, Type2Options::default()).unwrap();
        assert!(r.pass, "{:?}", r.families);
        assert!(r.family("symplectic").unwrap().pass);
    }

    #[test]
    fn constant_hamiltonian_gives_zero_type2() {
        let spec = canonical(1);
        let h = ham(&spec, "3");
        let g = section(&spec, &["x1"]);
        let eps = morph(&spec, &["2*mu1 + x1"]);
        let p = DualPoint::new(vec![0.4], vec![-0.7]);
        let r = type2_residuals(&spec, &h, &g, &eps, &[p], 0.0, 0, Type2Options { alt: true }).unwrap();
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn compose_substitutes_fibers() {
        let spec = canonical(1);
        let eps = morph(&spec, &["mu1 + x1"]);
        let h = parse("mu1^2", &spec.scope()).unwrap();
        let c = eps.compose(&spec, &h);
        let v = c.eval(&spec.bindings(&[2.0], &[1.0])).unwrap();
        assert_eq!(v, 9.0);
    }
}

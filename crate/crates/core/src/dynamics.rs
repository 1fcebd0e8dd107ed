//! Hamilton's equations on `E*`, a fixed-step RK4 integrator, and the
//! two-way check that lifted base curves of a cocycle are Hamiltonian
//! exactly when `d(H∘γ) = 0`.

use std::io::Write;

use crate::algebroid::{AlgebroidSpec, Layout, OneSectionDiff, SectionEStar};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::prolongation::{anchor_transpose_apply, hamiltonian_section_closed_form, DualPoint};
use crate::report::{format_f64, ReportBuilder, ResidualReport};

/// A Hamiltonian `H(x, μ)` with its first derivatives precomputed.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub expr: Expr,
    d_base: Vec<Expr>,
    d_fiber: Vec<Expr>,
}

impl HamiltonianSpec {
    pub fn new(spec: &AlgebroidSpec, expr: Expr) -> Result<Self> {
        if let Some(v) = expr
            .variables()
            .into_iter()
            .find(|v| !spec.is_base_var(*v) && !spec.is_fiber_var(*v))
        {
            return Err(Error::InvalidSpec(format!(
                "Hamiltonian references undeclared variable {v}"
            )));
        }
        let d_base = (0..spec.base_dim())
            .map(|i| expr.differentiate(spec.base_var(i)))
            .collect();
        let d_fiber = (0..spec.rank())
            .map(|a| expr.differentiate(spec.fiber_var(a)))
            .collect();
        Ok(Self { expr, d_base, d_fiber })
    }

    pub fn value_at(&self, spec: &AlgebroidSpec, p: &DualPoint) -> Result<f64> {
        Ok(self.expr.eval(&p.bindings(spec))?)
    }

    /// `(∂H/∂x, ∂H/∂μ)` at `p`.
    pub fn gradient_at(&self, spec: &AlgebroidSpec, p: &DualPoint) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = p.bindings(spec);
        let dx = self.d_base.iter().map(|e| e.eval(&b)).collect::<Result<Vec<_>, _>>()?;
        let dmu = self.d_fiber.iter().map(|e| e.eval(&b)).collect::<Result<Vec<_>, _>>()?;
        Ok((dx, dmu))
    }

    /// `H∘γ` as a base function.
    pub fn compose_section(&self, spec: &AlgebroidSpec, gamma: &SectionEStar) -> Expr {
        self.expr.substitute(&|v| {
            (0..spec.rank())
                .find(|&a| spec.fiber_var(a) == v)
                .map(|a| gamma.components[a].clone())
        })
    }
}

/// Phase-space velocity `(ẋ, μ̇)` with `ẋ = aᵀ ∂H/∂μ` and `μ̇ = B`.
pub fn hamilton_rhs(spec: &AlgebroidSpec, h: &HamiltonianSpec, p: &DualPoint) -> Result<Vec<f64>> {
    let xi = hamiltonian_section_closed_form(spec, h, p)?;
    let a = spec.anchor_at(&p.x)?;
    let mut out = anchor_transpose_apply(&a, &xi.a);
    out.extend(xi.b);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DualPoint>,
    pub step: f64,
    pub scenario: String,
    /// Set when the right-hand side failed and the trajectory was cut short.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DualPoint> {
        self.states.last()
    }

    /// CSV with header `t,x1..xm,mu1..mun,H`; time-extended layouts write
    /// `t,t_state,x1..,e,mu1..,K`. Floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, spec: &AlgebroidSpec, h: &HamiltonianSpec, mut out: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        match spec.layout() {
            Layout::Plain => {
                header.extend((0..spec.base_dim()).map(|i| spec.base_var(i).to_string()));
                header.extend((0..spec.rank()).map(|a| spec.fiber_var(a).to_string()));
                header.push("H".into());
            }
            Layout::TimeExtended => {
                header.push("t_state".into());
                header.extend((1..spec.base_dim()).map(|i| spec.base_var(i).to_string()));
                header.extend((0..spec.rank()).map(|a| spec.fiber_var(a).to_string()));
                header.push("K".into());
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format_f64(*t)];
            row.extend(s.x.iter().chain(&s.mu).map(|v| format_f64(*v)));
            row.push(format_f64(h.value_at(spec, s)?));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Outcome of a fixed-step run: samples so far, plus why it stopped early.
pub(crate) struct Rk4Run {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub failure: Option<String>,
}

/// Classical RK4 with step `dt`; the last step is shortened to land on `t1`.
/// Non-finite states abort with the step index.
pub(crate) fn rk4_fixed<F>(y0: Vec<f64>, t0: f64, t1: f64, dt: f64, mut f: F) -> Result<Rk4Run>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0 && t1 > t0) {
        return Err(Error::Precondition(format!(
            "integration needs dt > 0 and t1 > t0 (dt={dt}, t0={t0}, t1={t1})"
        )));
    }
    let span = t1 - t0;
    let mut full = (span / dt).floor() as usize;
    // a remainder below round-off is not a step
    let remainder = span - full as f64 * dt;
    let partial = remainder > 1e-12 * span.max(1.0);
    if !partial && remainder < 0.0 {
        full = full.saturating_sub(1);
    }
    let total = full + usize::from(partial);

    let mut times = vec![t0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for step in 0..total {
        let t = times[step];
        let t_next = if step + 1 == total {
            t1
        } else {
            t0 + (step + 1) as f64 * dt
        };
        let h = t_next - t;
        let stage = |f: &mut F, tt: f64, yy: &[f64]| f(tt, yy);
        let ks = (|| -> Result<[Vec<f64>; 4]> {
            let k1 = stage(&mut f, t, &y)?;
            let k2 = stage(&mut f, t + h / 2.0, &axpy(&y, &k1, h / 2.0))?;
            let k3 = stage(&mut f, t + h / 2.0, &axpy(&y, &k2, h / 2.0))?;
            let k4 = stage(&mut f, t + h, &axpy(&y, &k3, h))?;
            Ok([k1, k2, k3, k4])
        })();
        let [k1, k2, k3, k4] = match ks {
            Ok(k) => k,
            Err(Error::Eval(e)) => {
                return Ok(Rk4Run {
                    times,
                    states,
                    failure: Some(format!("right-hand side failed at step {step} (t={t}): {e}")),
                })
            }
            Err(e) => return Err(e),
        };
        let next: Vec<f64> = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                step,
                reason: "state became non-finite".into(),
            });
        }
        y = next;
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(Rk4Run {
        times,
        states,
        failure: None,
    })
}

fn split(spec: &AlgebroidSpec, y: &[f64]) -> DualPoint {
    let m = spec.base_dim();
    DualPoint::new(y[..m].to_vec(), y[m..].to_vec())
}

/// Integrates Hamilton's equations from `p0` over `[t0, t1]`.
pub fn integrate(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    p0: &DualPoint,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    if p0.x.len() != spec.base_dim() || p0.mu.len() != spec.rank() {
        return Err(Error::Dimension(format!(
            "start point must have {} base and {} fiber coordinates",
            spec.base_dim(),
            spec.rank()
        )));
    }
    let run = rk4_fixed(p0.coords(), t0, t1, dt, |_, y| hamilton_rhs(spec, h, &split(spec, y)))?;
    Ok(Trajectory {
        times: run.times,
        states: run.states.iter().map(|y| split(spec, y)).collect(),
        step: dt,
        scenario: String::new(),
        diagnostic: run.failure,
    })
}

/// `ρ(ξ_H^γ)` at `x`: `aᵀ(x) ∂H/∂μ(x, γ(x))`.
pub fn base_field_of_gamma(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &SectionEStar,
    x: &[f64],
) -> Result<Vec<f64>> {
    let prepared = spec.prepare_one_section(gamma)?;
    base_field_prepared(spec, h, &prepared, x)
}

pub(crate) fn base_field_prepared(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &OneSectionDiff,
    x: &[f64],
) -> Result<Vec<f64>> {
    let q = DualPoint::new(x.to_vec(), gamma.values_at(spec, x)?);
    let (_, dmu) = h.gradient_at(spec, &q)?;
    let a = spec.anchor_at(x)?;
    Ok(anchor_transpose_apply(&a, &dmu))
}

/// `‖J_γ σ̇ − μ̇‖∞` (plus the trivially zero base part) at `x`.
pub(crate) fn lifted_residual(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &OneSectionDiff,
    x: &[f64],
) -> Result<f64> {
    let q = DualPoint::new(x.to_vec(), gamma.values_at(spec, x)?);
    let rhs = hamilton_rhs(spec, h, &q)?;
    let sigma_dot = base_field_prepared(spec, h, gamma, x)?;
    let j = gamma.jacobian_at(spec, x)?;
    let m = spec.base_dim();
    let mut worst = 0.0f64;
    for i in 0..m {
        worst = worst.max((sigma_dot[i] - rhs[i]).abs());
    }
    for be in 0..spec.rank() {
        let lifted: f64 = (0..m).map(|i| j[(be, i)] * sigma_dot[i]).sum();
        worst = worst.max((lifted - rhs[m + be]).abs());
    }
    Ok(worst)
}

/// Settings for the lifted-curve half of the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSettings {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for CurveSettings {
    fn default() -> Self {
        Self { horizon: 1.0, dt: 1e-2 }
    }
}

/// Two residual families: `hj` = ‖d(H∘γ)‖∞ at `samples`, `lifted` =
/// ‖d/dt γ(σ) − X_H(γ(σ))‖∞ along base curves `σ̇ = ρ(ξ_H^γ)` started at
/// `base_starts`. `cocycle` is reported but does not gate.
#[allow(clippy::too_many_arguments)]
pub fn verify_lifted_curves(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    base_starts: &[Vec<f64>],
    curve: CurveSettings,
    tol: f64,
    seed: u64,
) -> Result<ResidualReport> {
    if samples.is_empty() || base_starts.is_empty() {
        return Err(Error::Precondition(
            "lifted curve check needs samples and base starts".into(),
        ));
    }
    let prepared = spec.prepare_one_section(gamma)?;
    let hj_section = spec.d_function(&h.compose_section(spec, gamma))?;
    let mut report = ReportBuilder::new("lifted_curves", tol, seed).gate(&["hj", "lifted"]);

    for x in samples {
        let run = || -> Result<(f64, f64)> {
            let b = spec.bindings(x, &[]);
            let mut hj = 0.0f64;
            for c in &hj_section.components {
                hj = hj.max(c.eval(&b)?.abs());
            }
            let cocycle = prepared.d_at(spec, x)?.amax();
            Ok((hj, cocycle))
        };
        match run() {
            Ok((hj, cocycle)) => report.record(x.clone(), [("hj", hj), ("cocycle", cocycle)]),
            Err(Error::Eval(e)) => report.skip(format!("sample {x:?} skipped: {e}")),
            Err(e) => return Err(e),
        }
    }

    for (k, start) in base_starts.iter().enumerate() {
        let run = rk4_fixed(start.clone(), 0.0, curve.horizon, curve.dt, |_, x| {
            base_field_prepared(spec, h, &prepared, x)
        })?;
        if let Some(why) = run.failure {
            report.note(format!("base curve {k} truncated: {why}"));
        }
        for x in &run.states {
            match lifted_residual(spec, h, &prepared, x) {
                Ok(r) => report.record(x.clone(), [("lifted", r)]),
                Err(Error::Eval(e)) => report.skip(format!("curve {k} point {x:?} skipped: {e}")),
                Err(e) => return Err(e),
            }
        }
    }

    let mut out = report.finish();
    let hj_pass = out.family("hj").is_some_and(|f| f.pass);
    let lifted_pass = out.family("lifted").is_some_and(|f| f.pass);
    out.notes.push(if hj_pass == lifted_pass {
        "equivalence: consistent".to_string()
    } else if hj_pass {
        "equivalence: violated (HJ residual passes, lifted curves fail)".to_string()
    } else {
        "equivalence: violated (lifted curves pass, HJ residual fails)".to_string()
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::StructureEntry;
    use crate::expr::parse;
    use crate::sampling::{CoordBox, Sampler};

    fn canonical(m: usize) -> AlgebroidSpec {
        let anchor = (0..m)
            .map(|a| (0..m).map(|i| Expr::Const(if a == i { 1.0 } else { 0.0 })).collect())
            .collect();
        AlgebroidSpec::new(m, m, anchor, vec![]).unwrap()
    }

    fn so3() -> AlgebroidSpec {
        let e = |alpha, beta, gamma, v| StructureEntry {
            alpha,
            beta,
            gamma,
            expr: Expr::Const(v),
        };
        AlgebroidSpec::new(
            0,
            3,
            vec![vec![]; 3],
            vec![e(0, 1, 2, 1.0), e(1, 2, 0, 1.0), e(0, 2, 1, -1.0)],
        )
        .unwrap()
    }

    fn ham(spec: &AlgebroidSpec, src: &str) -> HamiltonianSpec {
        HamiltonianSpec::new(spec, parse(src, &spec.scope()).unwrap()).unwrap()
    }

    fn section(spec: &AlgebroidSpec, comps: &[&str]) -> SectionEStar {
        SectionEStar::new(comps.iter().map(|c| parse(c, &spec.scope()).unwrap()).collect())
    }

    #[test]
    fn oscillator_rhs() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let rhs = hamilton_rhs(&spec, &h, &DualPoint::new(vec![1.0], vec![0.0])).unwrap();
        assert_eq!(rhs, vec![0.0, -1.0]);
    }

    #[test]
    fn isotropic_rigid_body_is_at_rest() {
        let spec = so3();
        let h = ham(&spec, "(mu1^2 + mu2^2 + mu3^2)/2");
        let mut s = Sampler::new(3);
        for _ in 0..10 {
            let mu = s.unit_vector(3);
            let rhs = hamilton_rhs(&spec, &h, &DualPoint::new(vec![], mu)).unwrap();
            assert!(rhs.iter().all(|v| v.abs() <= 1e-15));
        }
    }

    #[test]
    fn rigid_body_sign_is_locked() {
        let spec = so3();
        let h = ham(&spec, "(mu1^2 + mu2^2/2 + mu3^2/3)/2");
        let rhs = hamilton_rhs(&spec, &h, &DualPoint::new(vec![], vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(rhs, vec![-1.0, 2.0, -1.0]);
    }

    #[test]
    fn oscillator_returns_after_full_period() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let p0 = DualPoint::new(vec![1.0], vec![0.0]);
        let traj = integrate(&spec, &h, &p0, 0.0, 2.0 * std::f64::consts::PI, 0.01).unwrap();
        assert_eq!(*traj.times.last().unwrap(), 2.0 * std::f64::consts::PI);
        let end = traj.last().unwrap();
        let err = (end.x[0] - 1.0).abs().max(end.mu[0].abs());
        assert!(err <= 1e-8, "{err}");
        assert!(traj.diagnostic.is_none());
    }

    #[test]
    fn constant_hamiltonian_keeps_state() {
        let spec = canonical(2);
        let h = ham(&spec, "2");
        let p0 = DualPoint::new(vec![0.3, -0.1], vec![1.0, 2.0]);
        let traj = integrate(&spec, &h, &p0, 0.0, 1.0, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.states.iter().all(|s| *s == p0));
    }

    #[test]
    fn step_count_and_partial_step() {
        let run = rk4_fixed(vec![0.0], 0.0, 1.0, 0.3, |_, _| Ok(vec![1.0])).unwrap();
        assert_eq!(run.times.len(), 5);
        assert_eq!(*run.times.last().unwrap(), 1.0);
        assert!((run.states.last().unwrap()[0] - 1.0).abs() < 1e-15);
        let run = rk4_fixed(vec![0.0], 0.0, 1.0, 0.1, |_, _| Ok(vec![1.0])).unwrap();
        assert_eq!(run.times.len(), 11);
    }

    #[test]
    fn bad_step_rejected() {
        let spec = canonical(1);
        let h = ham(&spec, "mu1");
        let p0 = DualPoint::new(vec![0.0], vec![0.0]);
        assert!(integrate(&spec, &h, &p0, 0.0, 1.0, 0.0).is_err());
        assert!(integrate(&spec, &h, &p0, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn rhs_failure_truncates() {
        // ẋ = 1, H undefined once x1 > 0.5
        let spec = canonical(1);
        let h = ham(&spec, "mu1 + sqrt(0.5 - x1)");
        let p0 = DualPoint::new(vec![0.0], vec![0.0]);
        let traj = integrate(&spec, &h, &p0, 0.0, 2.0, 0.1).unwrap();
        assert!(traj.diagnostic.is_some());
        assert!(*traj.times.last().unwrap() < 1.0);
    }

    #[test]
    fn blow_up_aborts() {
        let spec = canonical(1);
        let h = ham(&spec, "-exp(exp(x1))");
        let p0 = DualPoint::new(vec![0.0], vec![0.0]);
        // μ̇ = exp(x) exp(exp(x)), ẋ = 0: grows but stays finite at x=0
        assert!(integrate(&spec, &h, &p0, 0.0, 1.0, 0.5).is_ok());
        let p0 = DualPoint::new(vec![7.0], vec![0.0]);
        assert!(matches!(
            integrate(&spec, &h, &p0, 0.0, 1.0, 0.5),
            Err(Error::Integration { step: 0, .. })
        ));
    }

    #[test]
    fn base_field_examples() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let g = section(&spec, &["sqrt(2 - x1^2)"]);
        let v = base_field_of_gamma(&spec, &h, &g, &[0.0]).unwrap();
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-15);

        let la = so3();
        let hl = ham(&la, "(mu1^2 + mu2^2)/2");
        let g = section(&la, &["1", "0", "0"]);
        assert!(base_field_of_gamma(&la, &hl, &g, &[]).unwrap().is_empty());

        let hx = ham(&spec, "x1^2");
        assert_eq!(
            base_field_of_gamma(&spec, &hx, &section(&spec, &["x1"]), &[0.4]).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn lifted_curves_solution_and_non_solution() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let bx = CoordBox::new(vec![[-1.0, 0.5]]).unwrap();
        let samples = Sampler::new(1).points_in(&bx, 30);
        let starts = Sampler::new(2).points_in(&bx, 4);
        let good = section(&spec, &["sqrt(2*(1 - x1^2/2))"]);
        let r = verify_lifted_curves(&spec, &h, &good, &samples, &starts, CurveSettings::default(), 1e-6, 0).unwrap();
        assert!(r.pass, "{:?} {:?}", r.families, r.notes);

        let bad = section(&spec, &["x1"]);
        let r = verify_lifted_curves(
            &spec,
            &h,
            &bad,
            &[vec![1.0]],
            &[vec![1.0]],
            CurveSettings::default(),
            1e-6,
            0,
        )
        .unwrap();
        assert_eq!(r.samples[0].values["hj"], 2.0);
        assert_eq!(r.samples[1].values["lifted"], 2.0);
        assert!(!r.pass);
        assert!(r.notes.iter().any(|n| n == "equivalence: consistent"));
    }

    #[test]
    fn lifted_curves_on_lie_algebra_cocycle() {
        let spec = AlgebroidSpec::new(
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
        .unwrap();
        let h = ham(&spec, "(mu1^2 + mu2^2 + mu3^2)/2 + mu1*mu3");
        let g = section(&spec, &["1", "-2", "0"]);
        let r = verify_lifted_curves(&spec, &h, &g, &[vec![]], &[vec![]], CurveSettings::default(), 1e-12, 0).unwrap();
        assert!(r.pass);
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn csv_layout() {
        let spec = canonical(1);
        let h = ham(&spec, "(mu1^2 + x1^2)/2");
        let traj = integrate(&spec, &h, &DualPoint::new(vec![1.0], vec![0.0]), 0.0, 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&spec, &h, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1,mu1,H"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,5.0000000000000000e-1")
        );
        assert_eq!(text.lines().count(), 4);
    }
}

//! The prolongation algebroid over `E*`, its Liouville and canonical
//! symplectic sections, Hamiltonian sections and the section morphism
//! `(φ_γ, γ)`.
//!
//! All matrices use the ordered basis `(𝒳_1..𝒳_n, 𝒫^1..𝒫^n)` where
//! `𝒳_α = (X_α, ρ(X_α))` has no momentum component and `𝒫^α` is the
//! vertical `∂/∂μ_α`. A prolongation vector `(b, v)` therefore has basis
//! coordinates `(b, v_μ)`; its `v_x` part is fixed by `v_x = aᵀ b`.

use nalgebra::{DMatrix, DVector};

use crate::algebroid::{AlgebroidSpec, OneSectionDiff, SectionEStar};
use crate::dynamics::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::report::{ReportBuilder, ResidualReport};
use crate::sampling::Sampler;

/// Compatibility tolerance for `v_x = aᵀ b`.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

/// Ω is treated as degenerate below this determinant magnitude.
pub const DET_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
}

impl DualPoint {
    pub fn new(x: Vec<f64>, mu: Vec<f64>) -> Self {
        Self { x, mu }
    }

    /// `(x, μ)` flattened.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend_from_slice(&self.mu);
        out
    }

    pub fn bindings<'a>(&'a self, spec: &AlgebroidSpec) -> Bindings<'a> {
        spec.bindings(&self.x, &self.mu)
    }
}

/// Element `(b, v)` of the prolongation at a dual point, `v = (v_x, v_μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongVec {
    pub at: DualPoint,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

impl ProlongVec {
    /// Builds the compatible vector with E-part `b` and momentum velocity `v_mu`.
    pub fn from_parts(spec: &AlgebroidSpec, at: DualPoint, b: Vec<f64>, v_mu: &[f64]) -> Result<Self> {
        let a = spec.anchor_at(&at.x)?;
        let mut v: Vec<f64> = anchor_transpose_apply(&a, &b);
        v.extend_from_slice(v_mu);
        Ok(Self { at, b, v })
    }

    pub fn v_x(&self) -> &[f64] {
        &self.v[..self.at.x.len()]
    }

    pub fn v_mu(&self) -> &[f64] {
        &self.v[self.at.x.len()..]
    }

    /// `‖v_x − aᵀ b‖∞`.
    pub fn compatibility_residual(&self, spec: &AlgebroidSpec) -> Result<f64> {
        let a = spec.anchor_at(&self.at.x)?;
        let want = anchor_transpose_apply(&a, &self.b);
        Ok(self
            .v_x()
            .iter()
            .zip(&want)
            .map(|(u, w)| (u - w).abs())
            .fold(0.0, f64::max))
    }

    /// Componentwise difference; both must sit over the same base point.
    pub fn sub(&self, other: &ProlongVec) -> ProlongVec {
        ProlongVec {
            at: self.at.clone(),
            b: self.b.iter().zip(&other.b).map(|(p, q)| p - q).collect(),
            v: self.v.iter().zip(&other.v).map(|(p, q)| p - q).collect(),
        }
    }

    /// `‖self − other‖∞` over `(b, v)`.
    pub fn distance(&self, other: &ProlongVec) -> f64 {
        self.b
            .iter()
            .zip(&other.b)
            .chain(self.v.iter().zip(&other.v))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Coordinates in the `(𝒳, 𝒫)` basis.
    pub fn basis_coords(&self) -> DVector<f64> {
        let mut c = self.b.clone();
        c.extend_from_slice(self.v_mu());
        DVector::from_vec(c)
    }
}

/// `aᵀ b`: tangent vector `Σ_α b^α a_{α·}`.
pub(crate) fn anchor_transpose_apply(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|i| (0..a.nrows()).map(|al| b[al] * a[(al, i)]).sum())
        .collect()
}

/// Ω at a dual point as a `2n × 2n` matrix in the `(𝒳, 𝒫)` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    pub at: DualPoint,
    pub matrix: DMatrix<f64>,
}

impl OmegaMatrix {
    pub fn rank(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn xx_block(&self) -> DMatrix<f64> {
        let n = self.rank();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn xp_block(&self) -> DMatrix<f64> {
        let n = self.rank();
        self.matrix.view((0, n), (n, n)).into_owned()
    }

    pub fn pp_block(&self) -> DMatrix<f64> {
        let n = self.rank();
        self.matrix.view((n, n), (n, n)).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.clone().determinant()
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.matrix + self.matrix.transpose()).amax()
    }

    /// `Ω(v, w)` for prolongation vectors over this point.
    pub fn pair(&self, v: &ProlongVec, w: &ProlongVec) -> f64 {
        let zv = v.basis_coords();
        let zw = w.basis_coords();
        (zv.transpose() * &self.matrix * zw)[(0, 0)]
    }

    /// `(i_ξ Ω)` on each basis element for basis coordinates `xi`.
    pub fn contract(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.matrix.transpose() * xi
    }
}

/// `Θ(b, v) = Σ μ_α b^α`.
pub fn liouville_pair(w: &ProlongVec) -> f64 {
    w.at.mu.iter().zip(&w.b).map(|(m, b)| m * b).sum()
}

/// Ω from its local closed form:
/// `Ω(𝒳_α,𝒳_β) = Σ c^γ_{αβ} μ_γ`, `Ω(𝒳_α,𝒫^β) = δ`, `Ω(𝒫,𝒫) = 0`.
pub fn omega_closed_form(spec: &AlgebroidSpec, p: &DualPoint) -> Result<OmegaMatrix> {
    let n = spec.rank();
    let c = spec.structure_contracted(&p.x, &p.mu)?;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            m[(a, b)] = c[(a, b)];
        }
        m[(a, n + a)] = 1.0;
        m[(n + a, a)] = -1.0;
    }
    Ok(OmegaMatrix {
        at: p.clone(),
        matrix: m,
    })
}

/// A prolongation section `(Σ f^α X_α, X')` with `f^α` functions on `E*` and
/// `X'` a vector field on `E*` (base components first).
#[derive(Debug, Clone)]
struct ProlongSection {
    e_part: Vec<Expr>,
    field: Vec<Expr>,
}

/// First-principles Ω = −dΘ built from the prolongation bracket and anchor.
///
/// The symbolic matrix is assembled once; `at` only evaluates it.
#[derive(Debug, Clone)]
pub struct OmegaOracle {
    entries: Vec<Vec<Expr>>,
    rank: usize,
}

impl OmegaOracle {
    pub fn new(spec: &AlgebroidSpec) -> Self {
        let n = spec.rank();
        let m = spec.base_dim();
        let coords: Vec<Var> = (0..m)
            .map(|i| spec.base_var(i))
            .chain((0..n).map(|a| spec.fiber_var(a)))
            .collect();

        let apply = |field: &[Expr], f: &Expr| -> Expr {
            Expr::sum(field.iter().zip(&coords).map(|(fk, v)| {
                let d = f.differentiate(*v);
                Expr::mul(fk.clone(), d)
            }))
        };
        let theta = |z: &ProlongSection| -> Expr {
            Expr::sum(
                z.e_part
                    .iter()
                    .enumerate()
                    .map(|(a, f)| Expr::mul(Expr::var(spec.fiber_var(a)), f.clone())),
            )
        };
        let bracket = |z1: &ProlongSection, z2: &ProlongSection| -> ProlongSection {
            let e_part = (0..n)
                .map(|g| {
                    let mut terms = Vec::new();
                    for a in 0..n {
                        for b in 0..n {
                            let c = spec.structure_signed(a, b, g);
                            if c.is_zero() {
                                continue;
                            }
                            terms.push(Expr::mul(Expr::mul(z1.e_part[a].clone(), z2.e_part[b].clone()), c));
                        }
                    }
                    Expr::add(
                        Expr::sum(terms),
                        Expr::sub(apply(&z1.field, &z2.e_part[g]), apply(&z2.field, &z1.e_part[g])),
                    )
                })
                .collect();
            let field = (0..m + n)
                .map(|k| Expr::sub(apply(&z1.field, &z2.field[k]), apply(&z2.field, &z1.field[k])))
                .collect();
            ProlongSection { e_part, field }
        };

        let mut basis = Vec::with_capacity(2 * n);
        for a in 0..n {
            let e_part = (0..n).map(|k| Expr::Const(if k == a { 1.0 } else { 0.0 })).collect();
            let field = (0..m)
                .map(|i| spec.anchor_expr(a, i).clone())
                .chain((0..n).map(|_| Expr::zero()))
                .collect();
            basis.push(ProlongSection { e_part, field });
        }
        for a in 0..n {
            let field = (0..m)
                .map(|_| Expr::zero())
                .chain((0..n).map(|k| Expr::Const(if k == a { 1.0 } else { 0.0 })))
                .collect();
            basis.push(ProlongSection {
                e_part: vec![Expr::zero(); n],
                field,
            });
        }

        let thetas: Vec<Expr> = basis.iter().map(&theta).collect();
        let mut entries = vec![vec![Expr::zero(); 2 * n]; 2 * n];
        for i in 0..2 * n {
            for j in 0..2 * n {
                let d_theta = Expr::sub(
                    Expr::sub(apply(&basis[i].field, &thetas[j]), apply(&basis[j].field, &thetas[i])),
                    theta(&bracket(&basis[i], &basis[j])),
                );
                entries[i][j] = Expr::neg(d_theta);
            }
        }
        Self { entries, rank: n }
    }

    pub fn at(&self, spec: &AlgebroidSpec, p: &DualPoint) -> Result<OmegaMatrix> {
        let b = p.bindings(spec);
        let k = 2 * self.rank;
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self.entries[i][j].eval(&b)?;
            }
        }
        Ok(OmegaMatrix {
            at: p.clone(),
            matrix: m,
        })
    }
}

/// Ω = −dΘ computed from the prolongation bracket; the oracle for
/// [`omega_closed_form`].
pub fn omega_from_bracket(spec: &AlgebroidSpec, p: &DualPoint) -> Result<OmegaMatrix> {
    OmegaOracle::new(spec).at(spec, p)
}

/// Coefficients of `ξ_H = A^α 𝒳_α + B_α 𝒫^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamSectionCoeffs {
    pub at: DualPoint,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl HamSectionCoeffs {
    pub fn basis_coords(&self) -> DVector<f64> {
        let mut c = self.a.clone();
        c.extend_from_slice(&self.b);
        DVector::from_vec(c)
    }

    /// As a prolongation vector `(A, (aᵀA, B))`.
    pub fn to_prolong_vec(&self, spec: &AlgebroidSpec) -> Result<ProlongVec> {
        ProlongVec::from_parts(spec, self.at.clone(), self.a.clone(), &self.b)
    }
}

/// `dH` on the basis: `(ρ(X_β)H, ∂H/∂μ_β)`.
pub fn dh_on_basis(spec: &AlgebroidSpec, h: &HamiltonianSpec, p: &DualPoint) -> Result<DVector<f64>> {
    let (dx, dmu) = h.gradient_at(spec, p)?;
    let a = spec.anchor_at(&p.x)?;
    let n = spec.rank();
    let mut out = DVector::zeros(2 * n);
    for be in 0..n {
        out[be] = (0..spec.base_dim()).map(|i| a[(be, i)] * dx[i]).sum();
        out[n + be] = dmu[be];
    }
    Ok(out)
}

/// Solves `i_ξ Ω = dH` as a linear system.
pub fn hamiltonian_section(spec: &AlgebroidSpec, h: &HamiltonianSpec, p: &DualPoint) -> Result<HamSectionCoeffs> {
    let omega = omega_closed_form(spec, p)?;
    let det = omega.determinant();
    if det.abs() <= DET_FLOOR || !det.is_finite() {
        return Err(Error::SingularOmega { det });
    }
    let rhs = dh_on_basis(spec, h, p)?;
    let xi = omega
        .matrix
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularOmega { det })?;
    let n = spec.rank();
    Ok(HamSectionCoeffs {
        at: p.clone(),
        a: xi.rows(0, n).iter().copied().collect(),
        b: xi.rows(n, n).iter().copied().collect(),
    })
}

/// Closed-form solution of `i_ξ Ω = dH`:
/// `A^β = ∂H/∂μ_β`, `B_β = Σ c^γ_{αβ} μ_γ ∂H/∂μ_α − Σ a_{βi} ∂H/∂x_i`.
pub fn hamiltonian_section_closed_form(
    spec: &AlgebroidSpec,
    h: &HamiltonianSpec,
    p: &DualPoint,
) -> Result<HamSectionCoeffs> {
    let n = spec.rank();
    let (dx, dmu) = h.gradient_at(spec, p)?;
    let a = spec.anchor_at(&p.x)?;
    let c = spec.structure_contracted(&p.x, &p.mu)?;
    let b = (0..n)
        .map(|be| {
            let structural: f64 = (0..n).map(|al| c[(al, be)] * dmu[al]).sum();
            let horizontal: f64 = (0..spec.base_dim()).map(|i| a[(be, i)] * dx[i]).sum();
            structural - horizontal
        })
        .collect();
    Ok(HamSectionCoeffs {
        at: p.clone(),
        a: dmu,
        b,
    })
}

/// `(φ_γ, γ)(e) = (e, (aᵀe, J_γ aᵀe))` over `(x, γ(x))`.
pub fn phi_gamma(spec: &AlgebroidSpec, gamma: &SectionEStar, e: &[f64], x: &[f64]) -> Result<ProlongVec> {
    let prepared = spec.prepare_one_section(gamma)?;
    phi_gamma_prepared(spec, &prepared, e, x)
}

pub(crate) fn phi_gamma_prepared(
    spec: &AlgebroidSpec,
    gamma: &OneSectionDiff,
    e: &[f64],
    x: &[f64],
) -> Result<ProlongVec> {
    if e.len() != spec.rank() {
        return Err(Error::Dimension(format!(
            "E-vector has {} entries, expected {}",
            e.len(),
            spec.rank()
        )));
    }
    let mu = gamma.values_at(spec, x)?;
    let a = spec.anchor_at(x)?;
    let j = gamma.jacobian_at(spec, x)?;
    let v_x = anchor_transpose_apply(&a, e);
    let v_mu: Vec<f64> = (0..spec.rank())
        .map(|be| (0..spec.base_dim()).map(|i| j[(be, i)] * v_x[i]).sum())
        .collect();
    let mut v = v_x;
    v.extend(v_mu);
    Ok(ProlongVec {
        at: DualPoint::new(x.to_vec(), mu),
        b: e.to_vec(),
        v,
    })
}

/// `𝒯̃λ = (φ_γ, γ) ∘ pr₁`; the output sits over `(x, γ(x))`.
pub fn t_tilde_lambda(spec: &AlgebroidSpec, gamma: &SectionEStar, w: &ProlongVec) -> Result<ProlongVec> {
    phi_gamma(spec, gamma, &w.b, &w.at.x)
}

/// Random compatible prolongation vector: `b`, `v_μ` drawn, `v_x = aᵀb`.
pub fn random_prolong_vec(spec: &AlgebroidSpec, at: &DualPoint, sampler: &mut Sampler) -> Result<ProlongVec> {
    let b = sampler.unit_vector(spec.rank());
    let v_mu = sampler.unit_vector(spec.rank());
    ProlongVec::from_parts(spec, at.clone(), b, &v_mu)
}

fn bilinear(d: &DMatrix<f64>, u: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        for j in 0..w.len() {
            s += u[i] * d[(i, j)] * w[j];
        }
    }
    s
}

/// `(φ_γ,γ)*Θ = γ` and `(φ_γ,γ)*Ω = −dγ` at random E-vectors.
pub fn verify_section_pullback(
    spec: &AlgebroidSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    tol: f64,
    sampler: &mut Sampler,
) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("verify_section_pullback needs samples".into()));
    }
    let prepared = spec.prepare_one_section(gamma)?;
    let mut report = ReportBuilder::new("section_pullback", tol, sampler.seed());
    for x in samples {
        let e = sampler.unit_vector(spec.rank());
        let f = sampler.unit_vector(spec.rank());
        let run = || -> Result<(f64, f64)> {
            let pe = phi_gamma_prepared(spec, &prepared, &e, x)?;
            let pf = phi_gamma_prepared(spec, &prepared, &f, x)?;
            let g = prepared.values_at(spec, x)?;
            let gamma_e: f64 = g.iter().zip(&e).map(|(a, b)| a * b).sum();
            let res_theta = (liouville_pair(&pe) - gamma_e).abs();
            let omega = omega_closed_form(spec, &pe.at)?;
            let d = prepared.d_at(spec, x)?;
            let res_omega = (omega.pair(&pe, &pf) + bilinear(&d, &e, &f)).abs();
            Ok((res_theta, res_omega))
        };
        match run() {
            Ok((i, ii)) => report.record(x.clone(), [("pullback_theta", i), ("pullback_omega", ii)]),
            Err(Error::Eval(err)) => report.skip(format!("sample {x:?} skipped: {err}")),
            Err(err) => return Err(err),
        }
    }
    Ok(report.finish())
}

/// Both assertions of the pullback lemma at random compatible pairs over
/// points on the image of `γ`.
pub fn verify_pullback_identities(
    spec: &AlgebroidSpec,
    gamma: &SectionEStar,
    samples: &[Vec<f64>],
    tol: f64,
    sampler: &mut Sampler,
) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("verify_pullback_identities needs samples".into()));
    }
    let prepared = spec.prepare_one_section(gamma)?;
    let mut report = ReportBuilder::new("pullback_identities", tol, sampler.seed());
    for x in samples {
        let draws = (
            sampler.unit_vector(spec.rank()),
            sampler.unit_vector(spec.rank()),
            sampler.unit_vector(spec.rank()),
            sampler.unit_vector(spec.rank()),
        );
        let run = || -> Result<(f64, f64, f64)> {
            let q = DualPoint::new(x.clone(), prepared.values_at(spec, x)?);
            let v = ProlongVec::from_parts(spec, q.clone(), draws.0.clone(), &draws.1)?;
            let w = ProlongVec::from_parts(spec, q.clone(), draws.2.clone(), &draws.3)?;
            let tv = phi_gamma_prepared(spec, &prepared, &v.b, x)?;
            let tw = phi_gamma_prepared(spec, &prepared, &w.b, x)?;
            let omega = omega_closed_form(spec, &q)?;
            let d = prepared.d_at(spec, x)?;
            let dg = bilinear(&d, &v.b, &w.b);
            let assertion_ii = (omega.pair(&tv, &w) - omega.pair(&v, &w.sub(&tw)) + dg).abs();
            let assertion_i = (omega.pair(&tv, &tw) + dg).abs();
            let idempotence = phi_gamma_prepared(spec, &prepared, &tv.b, x)?.distance(&tv);
            Ok((assertion_i, assertion_ii, idempotence))
        };
        match run() {
            Ok((i, ii, idem)) => report.record(
                x.clone(),
                [("assertion_i", i), ("assertion_ii", ii), ("idempotence", idem)],
            ),
            Err(Error::Eval(err)) => report.skip(format!("sample {x:?} skipped: {err}")),
            Err(err) => return Err(err),
        }
    }
    Ok(report.finish())
}

/// Entrywise `|closed form − bracket oracle|` plus antisymmetry and
/// non-degeneracy at each dual point.
pub fn verify_omega(spec: &AlgebroidSpec, points: &[DualPoint], tol: f64, seed: u64) -> Result<ResidualReport> {
    if points.is_empty() {
        return Err(Error::Precondition("verify_omega needs samples".into()));
    }
    let oracle = OmegaOracle::new(spec);
    let mut report = ReportBuilder::new("omega_oracle", tol, seed).gate(&["oracle", "antisymmetry", "degeneracy"]);
    for p in points {
        let run = || -> Result<(f64, f64, f64)> {
            let closed = omega_closed_form(spec, p)?;
            let first = oracle.at(spec, p)?;
            let diff = (&closed.matrix - &first.matrix).amax();
            let det = closed.determinant();
            let degeneracy = if det.abs() > DET_FLOOR { 0.0 } else { f64::INFINITY };
            Ok((diff, closed.antisymmetry_residual(), degeneracy))
        };
        match run() {
            Ok((diff, anti, degen)) => report.record(
                p.coords(),
                [("oracle", diff), ("antisymmetry", anti), ("degeneracy", degen)],
            ),
            Err(Error::Eval(err)) => report.skip(format!("point {:?} skipped: {err}", p.coords())),
            Err(err) => return Err(err),
        }
    }
    Ok(report.finish())
}

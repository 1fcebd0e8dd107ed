//! Lie algebroids in a single chart: anchor matrix `a[α][i]` and structure
//! functions `c^γ_{αβ}` with only `α < β` stored.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var, VarScope};
use crate::report::{ReportBuilder, ResidualReport};

/// How coordinate slots map onto expression variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Base `x1..xm`, fiber `mu1..mun`.
    Plain,
    /// Base `(t, x1..)`, fiber `(e, mu1..)`; slot 0 is the time pair.
    TimeExtended,
}

/// One stored structure function `c^gamma_{alpha beta}` (0-based, `alpha < beta`).
#[derive(Debug, Clone, PartialEq)]
pub struct StructureEntry {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub expr: Expr,
}

/// Section of `E`: `X = Σ X^α X_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionE {
    pub components: Vec<Expr>,
}

/// Section of `E*`: `γ = Σ γ_α X^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionEStar {
    pub components: Vec<Expr>,
}

impl SectionE {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    /// The basis section `X_alpha`.
    pub fn basis(rank: usize, alpha: usize) -> Self {
        Self::new(
            (0..rank)
                .map(|k| Expr::Const(if k == alpha { 1.0 } else { 0.0 }))
                .collect(),
        )
    }
}

impl SectionEStar {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    pub fn zero(rank: usize) -> Self {
        Self::new(vec![Expr::zero(); rank])
    }
}

#[derive(Debug, Clone)]
pub struct AlgebroidSpec {
    base_dim: usize,
    rank: usize,
    layout: Layout,
    /// `anchor[α][i]`
    anchor: Vec<Vec<Expr>>,
    /// Indexed by `pair_index(α, β)`, then `γ`.
    structure: Vec<Vec<Expr>>,
    /// `anchor_grad[α][i][j] = ∂a_{αi}/∂x_j`
    anchor_grad: Vec<Vec<Vec<Expr>>>,
}

fn pair_index(n: usize, alpha: usize, beta: usize) -> usize {
    debug_assert!(alpha < beta && beta < n);
    // rows 0..alpha hold (n-1) + (n-2) + ... entries
    alpha * (2 * n - alpha - 1) / 2 + (beta - alpha - 1)
}

impl AlgebroidSpec {
    pub fn new(base_dim: usize, rank: usize, anchor: Vec<Vec<Expr>>, entries: Vec<StructureEntry>) -> Result<Self> {
        Self::with_layout(base_dim, rank, Layout::Plain, anchor, entries)
    }

    pub fn with_layout(
        base_dim: usize,
        rank: usize,
        layout: Layout,
        anchor: Vec<Vec<Expr>>,
        entries: Vec<StructureEntry>,
    ) -> Result<Self> {
        if layout == Layout::TimeExtended && (base_dim == 0 || rank == 0) {
            return Err(Error::InvalidSpec(
                "time-extended layout needs a time slot in base and fiber".into(),
            ));
        }
        if anchor.len() != rank || anchor.iter().any(|row| row.len() != base_dim) {
            return Err(Error::Dimension(format!("anchor must be {rank}x{base_dim}")));
        }
        let pairs = rank * rank.saturating_sub(1) / 2;
        let mut structure = vec![vec![Expr::zero(); rank]; pairs];
        let mut seen = vec![vec![false; rank]; pairs];
        for e in entries {
            if e.alpha >= e.beta {
                return Err(Error::InvalidSpec(format!(
                    "structure entry ({},{},{}): alpha must be < beta",
                    e.alpha + 1,
                    e.beta + 1,
                    e.gamma + 1
                )));
            }
            if e.beta >= rank || e.gamma >= rank {
                return Err(Error::InvalidSpec(format!(
                    "structure entry ({},{},{}) out of range for rank {rank}",
                    e.alpha + 1,
                    e.beta + 1,
                    e.gamma + 1
                )));
            }
            let k = pair_index(rank, e.alpha, e.beta);
            if seen[k][e.gamma] {
                return Err(Error::InvalidSpec(format!(
                    "duplicate structure entry ({},{},{})",
                    e.alpha + 1,
                    e.beta + 1,
                    e.gamma + 1
                )));
            }
            seen[k][e.gamma] = true;
            structure[k][e.gamma] = e.expr;
        }
        let mut spec = Self {
            base_dim,
            rank,
            layout,
            anchor,
            structure,
            anchor_grad: Vec::new(),
        };
        spec.check_base_only()?;
        spec.anchor_grad = (0..rank)
            .map(|a| {
                (0..base_dim)
                    .map(|i| {
                        (0..base_dim)
                            .map(|j| spec.anchor[a][i].differentiate(spec.base_var(j)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(spec)
    }

    fn check_base_only(&self) -> Result<()> {
        let exprs = self.anchor.iter().flatten().chain(self.structure.iter().flatten());
        for e in exprs {
            for v in e.variables() {
                if !self.is_base_var(v) {
                    return Err(Error::InvalidSpec(format!(
                        "anchor/structure functions may depend only on base coordinates, found {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Expression namespace matching this layout.
    pub fn scope(&self) -> VarScope {
        match self.layout {
            Layout::Plain => VarScope::new(self.base_dim, self.rank, false),
            Layout::TimeExtended => VarScope::new(self.base_dim - 1, self.rank - 1, true),
        }
    }

    pub fn base_var(&self, i: usize) -> Var {
        match (self.layout, i) {
            (Layout::Plain, i) => Var::X(i),
            (Layout::TimeExtended, 0) => Var::T,
            (Layout::TimeExtended, i) => Var::X(i - 1),
        }
    }

    pub fn fiber_var(&self, alpha: usize) -> Var {
        match (self.layout, alpha) {
            (Layout::Plain, a) => Var::Mu(a),
            (Layout::TimeExtended, 0) => Var::E,
            (Layout::TimeExtended, a) => Var::Mu(a - 1),
        }
    }

    pub fn is_base_var(&self, v: Var) -> bool {
        (0..self.base_dim).any(|i| self.base_var(i) == v)
    }

    pub fn is_fiber_var(&self, v: Var) -> bool {
        (0..self.rank).any(|a| self.fiber_var(a) == v)
    }

    /// Bindings for base coordinates `x` and (possibly empty) momenta `mu`.
    pub fn bindings<'a>(&self, x: &'a [f64], mu: &'a [f64]) -> Bindings<'a> {
        match self.layout {
            Layout::Plain => Bindings::new(x, mu),
            Layout::TimeExtended => Bindings {
                x: x.get(1..).unwrap_or(&[]),
                mu: mu.get(1..).unwrap_or(&[]),
                t: x.first().copied(),
                e: mu.first().copied(),
            },
        }
    }

    pub fn anchor_expr(&self, alpha: usize, i: usize) -> &Expr {
        &self.anchor[alpha][i]
    }

    /// `c^gamma_{alpha beta}` with its sign, `None` on the diagonal.
    pub fn structure_expr(&self, alpha: usize, beta: usize, gamma: usize) -> Option<(f64, &Expr)> {
        use std::cmp::Ordering;
        match alpha.cmp(&beta) {
            Ordering::Less => Some((1.0, &self.structure[pair_index(self.rank, alpha, beta)][gamma])),
            Ordering::Greater => Some((-1.0, &self.structure[pair_index(self.rank, beta, alpha)][gamma])),
            Ordering::Equal => None,
        }
    }

    /// Stored entries (α < β, nonzero expression).
    pub fn structure_entries(&self) -> Vec<StructureEntry> {
        let mut out = Vec::new();
        for alpha in 0..self.rank {
            for beta in alpha + 1..self.rank {
                for gamma in 0..self.rank {
                    let e = &self.structure[pair_index(self.rank, alpha, beta)][gamma];
                    if !e.is_zero() {
                        out.push(StructureEntry {
                            alpha,
                            beta,
                            gamma,
                            expr: e.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Signed symbolic `c^gamma_{alpha beta}`.
    pub fn structure_signed(&self, alpha: usize, beta: usize, gamma: usize) -> Expr {
        match self.structure_expr(alpha, beta, gamma) {
            None => Expr::zero(),
            Some((s, e)) if s < 0.0 => Expr::neg(e.clone()),
            Some((_, e)) => e.clone(),
        }
    }

    /// Anchor matrix `a[α][i]` at `x` (rank × base_dim).
    pub fn anchor_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let b = self.bindings(x, &[]);
        let mut out = DMatrix::zeros(self.rank, self.base_dim);
        for a in 0..self.rank {
            for i in 0..self.base_dim {
                out[(a, i)] = self.anchor[a][i].eval(&b)?;
            }
        }
        Ok(out)
    }

    /// `c[(α·n + β)·n + γ]` at `x`, antisymmetric in (α, β) by construction.
    pub fn structure_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.rank;
        let b = self.bindings(x, &[]);
        let mut c = vec![0.0; n * n * n];
        for alpha in 0..n {
            for beta in alpha + 1..n {
                for gamma in 0..n {
                    let v = self.structure[pair_index(n, alpha, beta)][gamma].eval(&b)?;
                    c[(alpha * n + beta) * n + gamma] = v;
                    c[(beta * n + alpha) * n + gamma] = -v;
                }
            }
        }
        Ok(c)
    }

    /// Matrix `C[α][β] = Σ_γ c^γ_{αβ}(x) μ_γ`.
    pub fn structure_contracted(&self, x: &[f64], mu: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.rank;
        let c = self.structure_at(x)?;
        Ok(DMatrix::from_fn(n, n, |a, b| {
            (0..n).map(|g| c[(a * n + b) * n + g] * mu[g]).sum()
        }))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.base_dim {
            return Err(Error::Dimension(format!(
                "base point has {} coordinates, expected {}",
                x.len(),
                self.base_dim
            )));
        }
        Ok(())
    }

    fn check_section(&self, len: usize) -> Result<()> {
        if len != self.rank {
            return Err(Error::Dimension(format!(
                "section has {len} components, expected rank {}",
                self.rank
            )));
        }
        Ok(())
    }

    /// `ρ(X)` at `x` as a tangent vector: `v_i = Σ_α X^α a_{αi}`.
    pub fn anchor_apply(&self, section: &SectionE, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_section(section.components.len())?;
        let b = self.bindings(x, &[]);
        let comps = section
            .components
            .iter()
            .map(|c| c.eval(&b))
            .collect::<Result<Vec<_>, _>>()?;
        let a = self.anchor_at(x)?;
        Ok((0..self.base_dim)
            .map(|i| (0..self.rank).map(|al| comps[al] * a[(al, i)]).sum())
            .collect())
    }

    /// Symbolic `ρ(X)(f) = Σ_i (Σ_α X^α a_{αi}) ∂f/∂x_i`.
    pub fn anchor_derivative(&self, section: &SectionE, f: &Expr) -> Expr {
        Expr::sum((0..self.base_dim).map(|i| {
            let df = f.differentiate(self.base_var(i));
            if df.is_zero() {
                return Expr::zero();
            }
            let coeff =
                Expr::sum((0..self.rank).map(|a| Expr::mul(section.components[a].clone(), self.anchor[a][i].clone())));
            Expr::mul(coeff, df)
        }))
    }

    /// `ρ(X_α)(f)` for a basis section.
    pub fn basis_derivative(&self, alpha: usize, f: &Expr) -> Expr {
        Expr::sum(
            (0..self.base_dim).map(|i| Expr::mul(self.anchor[alpha][i].clone(), f.differentiate(self.base_var(i)))),
        )
    }

    /// Symbolic `[X, Y]`.
    pub fn bracket(&self, x: &SectionE, y: &SectionE) -> Result<SectionE> {
        self.check_section(x.components.len())?;
        self.check_section(y.components.len())?;
        let n = self.rank;
        let components = (0..n)
            .map(|gamma| {
                let mut terms = Vec::new();
                for alpha in 0..n {
                    for beta in 0..n {
                        let c = self.structure_signed(alpha, beta, gamma);
                        if c.is_zero() {
                            continue;
                        }
                        terms.push(Expr::mul(
                            Expr::mul(x.components[alpha].clone(), y.components[beta].clone()),
                            c,
                        ));
                    }
                }
                let structural = Expr::sum(terms);
                let lie = Expr::sub(
                    self.anchor_derivative(x, &y.components[gamma]),
                    self.anchor_derivative(y, &x.components[gamma]),
                );
                Expr::add(structural, lie)
            })
            .collect();
        Ok(SectionE::new(components))
    }

    /// `df` with `(df)_α = Σ_i a_{αi} ∂f/∂x_i`.
    pub fn d_function(&self, f: &Expr) -> Result<SectionEStar> {
        if let Some(v) = f.variables().into_iter().find(|v| !self.is_base_var(*v)) {
            return Err(Error::InvalidSpec(format!(
                "d_function needs a base function, found {v}"
            )));
        }
        Ok(SectionEStar::new(
            (0..self.rank).map(|a| self.basis_derivative(a, f)).collect(),
        ))
    }

    /// Symbolic pieces of `dγ`, reusable across sample points.
    pub fn prepare_one_section(&self, gamma: &SectionEStar) -> Result<OneSectionDiff> {
        self.check_section(gamma.components.len())?;
        let rho_gamma = (0..self.rank)
            .map(|a| gamma.components.iter().map(|g| self.basis_derivative(a, g)).collect())
            .collect();
        let jacobian = gamma
            .components
            .iter()
            .map(|g| (0..self.base_dim).map(|i| g.differentiate(self.base_var(i))).collect())
            .collect();
        Ok(OneSectionDiff {
            components: gamma.components.clone(),
            rho_gamma,
            jacobian,
        })
    }

    /// `(dγ)_{αβ}(x) = ρ(X_α)(γ_β) − ρ(X_β)(γ_α) − Σ c^κ_{αβ} γ_κ`.
    pub fn d_one_section(&self, gamma: &SectionEStar, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        self.prepare_one_section(gamma)?.d_at(self, x)
    }

    /// Jacobi, anchor-morphism and antisymmetry residuals at each sample.
    pub fn validate(&self, samples: &[Vec<f64>], tol: f64, seed: u64) -> Result<ResidualReport> {
        if samples.is_empty() {
            return Err(Error::Precondition("validation needs at least one sample".into()));
        }
        let n = self.rank;
        let m = self.base_dim;
        let basis: Vec<SectionE> = (0..n).map(|a| SectionE::basis(n, a)).collect();
        let mut brackets = vec![vec![SectionE::new(vec![Expr::zero(); n]); n]; n];
        for a in 0..n {
            for b in 0..n {
                brackets[a][b] = self.bracket(&basis[a], &basis[b])?;
            }
        }
        // cyclic sums for α < β < δ
        let mut jacobi = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for d in b + 1..n {
                    let t1 = self.bracket(&brackets[a][b], &basis[d])?;
                    let t2 = self.bracket(&brackets[b][d], &basis[a])?;
                    let t3 = self.bracket(&brackets[d][a], &basis[b])?;
                    for g in 0..n {
                        jacobi.push(Expr::add(
                            Expr::add(t1.components[g].clone(), t2.components[g].clone()),
                            t3.components[g].clone(),
                        ));
                    }
                }
            }
        }

        let mut report = ReportBuilder::new("validate_algebroid", tol, seed);
        for x in samples {
            self.check_point(x)?;
            let eval = || -> Result<(f64, f64, f64)> {
                let bnd = self.bindings(x, &[]);
                let mut jac = 0.0f64;
                for e in &jacobi {
                    jac = jac.max(e.eval(&bnd)?.abs());
                }
                let a = self.anchor_at(x)?;
                let c = self.structure_at(x)?;
                let mut grad = vec![0.0; n * m * m];
                for al in 0..n {
                    for i in 0..m {
                        for j in 0..m {
                            grad[(al * m + i) * m + j] = self.anchor_grad[al][i][j].eval(&bnd)?;
                        }
                    }
                }
                let mut morph = 0.0f64;
                for al in 0..n {
                    for be in 0..n {
                        if al == be {
                            continue;
                        }
                        let rho_bracket = self.anchor_apply(&brackets[al][be], x)?;
                        for i in 0..m {
                            let commutator: f64 = (0..m)
                                .map(|j| {
                                    a[(al, j)] * grad[(be * m + i) * m + j] - a[(be, j)] * grad[(al * m + i) * m + j]
                                })
                                .sum();
                            morph = morph.max((rho_bracket[i] - commutator).abs());
                        }
                    }
                }
                let mut anti = 0.0f64;
                for al in 0..n {
                    for be in 0..n {
                        for g in 0..n {
                            anti = anti.max((c[(al * n + be) * n + g] + c[(be * n + al) * n + g]).abs());
                        }
                    }
                }
                Ok((jac, morph, anti))
            };
            match eval() {
                Ok((jac, morph, anti)) => {
                    report.record(x.clone(), [("jacobi", jac), ("anchor", morph), ("antisymmetry", anti)])
                }
                Err(Error::Eval(e)) => report.skip(format!("sample {x:?} skipped: {e}")),
                Err(e) => return Err(e),
            }
        }
        Ok(report.finish())
    }
}

/// Precomputed derivative expressions of a one-section.
#[derive(Debug, Clone)]
pub struct OneSectionDiff {
    pub components: Vec<Expr>,
    /// `rho_gamma[α][β] = ρ(X_α)(γ_β)`
    pub rho_gamma: Vec<Vec<Expr>>,
    /// `jacobian[β][i] = ∂γ_β/∂x_i`
    pub jacobian: Vec<Vec<Expr>>,
}

impl OneSectionDiff {
    pub fn values_at(&self, spec: &AlgebroidSpec, x: &[f64]) -> Result<Vec<f64>> {
        let b = spec.bindings(x, &[]);
        Ok(self
            .components
            .iter()
            .map(|c| c.eval(&b))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// `J[β][i] = ∂γ_β/∂x_i` at `x`.
    pub fn jacobian_at(&self, spec: &AlgebroidSpec, x: &[f64]) -> Result<DMatrix<f64>> {
        let b = spec.bindings(x, &[]);
        let mut j = DMatrix::zeros(spec.rank(), spec.base_dim());
        for (beta, row) in self.jacobian.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                j[(beta, i)] = e.eval(&b)?;
            }
        }
        Ok(j)
    }

    pub fn d_at(&self, spec: &AlgebroidSpec, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = spec.rank();
        let b = spec.bindings(x, &[]);
        let gamma = self.values_at(spec, x)?;
        let c = spec.structure_at(x)?;
        let mut rho = DMatrix::zeros(n, n);
        for a in 0..n {
            for be in 0..n {
                rho[(a, be)] = self.rho_gamma[a][be].eval(&b)?;
            }
        }
        Ok(DMatrix::from_fn(n, n, |a, be| {
            let structural: f64 = (0..n).map(|k| c[(a * n + be) * n + k] * gamma[k]).sum();
            rho[(a, be)] - rho[(be, a)] - structural
        }))
    }
}

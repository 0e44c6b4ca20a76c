//! Finite-difference elliptic operators and their spectral calculus.
//!
//! Operators are assembled in divergence form `A u = -div(a(x) ∇u)` with
//! centered second-order stencils (3-point in 1D, 5-point in 2D). Neumann
//! problems use cell-centred nodes with reflected ghost values, so every row of
//! the matrix sums to exactly zero and constants are an exact null vector.
//! Dirichlet problems use the interior nodes of a vertex grid.
//!
//! Everything downstream works in the eigenbasis of `A`, orthonormal with
//! respect to the quadrature-weighted inner product `⟨u, v⟩ = Σ w_i u_i v_i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::nonlinearity::expr::{EvalContext, Expression};

/// Default relative clustering tolerance for eigenvalues: `1e-8 · (1 + |λ|)`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::Dirichlet => write!(f, "dirichlet"),
            BoundaryCondition::Neumann => write!(f, "neumann"),
        }
    }
}

/// Nodes and quadrature weights of a 1D interval or 2D rectangle.
///
/// For Dirichlet grids the weights cover the interior nodes only; the
/// trapezoid weights of the (zero-valued) boundary nodes are kept separately in
/// [`SpatialGrid::boundary_weight`] so that the closed grid integrates the
/// constant one to the domain measure.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    bc: Option<BoundaryCondition>,
    lengths: Vec<f64>,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    boundary_weight: f64,
}

impl SpatialGrid {
    pub fn new(bc: BoundaryCondition, lengths: &[f64], shape: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 || lengths.len() != shape.len() {
            return Err(Error::Grid(format!(
                "need 1 or 2 axes with matching lengths and point counts, got {} and {}",
                lengths.len(),
                shape.len()
            )));
        }
        for (&l, &n) in lengths.iter().zip(shape) {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Grid(format!(
                    "domain length must be positive, got {l}"
                )));
            }
            if n < 3 {
                return Err(Error::Grid(format!(
                    "need at least 3 points per axis, got {n}"
                )));
            }
        }
        let spacing: Vec<f64> = lengths
            .iter()
            .zip(shape)
            .map(|(&l, &n)| match bc {
                BoundaryCondition::Dirichlet => l / (n + 1) as f64,
                BoundaryCondition::Neumann => l / n as f64,
            })
            .collect();
        let coord = |axis: usize, i: usize| match bc {
            BoundaryCondition::Dirichlet => (i + 1) as f64 * spacing[axis],
            BoundaryCondition::Neumann => (i as f64 + 0.5) * spacing[axis],
        };
        let cell: f64 = spacing.iter().product();
        let (points, boundary_weight) = if shape.len() == 1 {
            let pts = (0..shape[0]).map(|i| [coord(0, i), 0.0]).collect();
            let bw = match bc {
                BoundaryCondition::Dirichlet => 2.0 * (0.5 * cell),
                BoundaryCondition::Neumann => 0.0,
            };
            (pts, bw)
        } else {
            let (nx, ny) = (shape[0], shape[1]);
            let mut pts = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    pts.push([coord(0, i), coord(1, j)]);
                }
            }
            let bw = match bc {
                // edges carry half cells, corners quarter cells
                BoundaryCondition::Dirichlet => {
                    2.0 * (nx + ny) as f64 * (0.5 * cell) + 4.0 * (0.25 * cell)
                }
                BoundaryCondition::Neumann => 0.0,
            };
            (pts, bw)
        };
        let weights = vec![cell; shape.iter().product()];
        Ok(Self {
            bc: Some(bc),
            lengths: lengths.to_vec(),
            shape: shape.to_vec(),
            spacing,
            points,
            weights,
            boundary_weight,
        })
    }

    /// A grid with arbitrary nodes and positive weights; the measure is the weight sum.
    pub fn custom(points: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Grid(
                "points and weights must be non-empty and equally long".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Grid("weights must be strictly positive".into()));
        }
        let measure: f64 = weights.iter().sum();
        Ok(Self {
            bc: None,
            lengths: vec![measure],
            shape: vec![points.len()],
            spacing: vec![measure / points.len() as f64],
            points,
            weights,
            boundary_weight: 0.0,
        })
    }

    pub fn boundary_condition(&self) -> Option<BoundaryCondition> {
        self.bc
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundary_weight(&self) -> f64 {
        self.boundary_weight
    }

    /// Lebesgue measure ν(Ω) of the domain.
    pub fn measure(&self) -> f64 {
        if self.bc.is_none() {
            return self.weights.iter().sum();
        }
        self.lengths.iter().product()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// Diffusion coefficient `a(x)` of the divergence-form operator.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Constant(f64),
    Expr(Expression),
}

impl Coefficient {
    pub fn eval(&self, at: [f64; 2]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Expr(e) => e.eval(&EvalContext::at_point(at)),
        }
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Constant(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub bc: BoundaryCondition,
    pub lengths: Vec<f64>,
    pub shape: Vec<usize>,
    pub coefficient: Coefficient,
}

impl OperatorSpec {
    pub fn interval(bc: BoundaryCondition, length: f64, n: usize) -> Self {
        Self {
            bc,
            lengths: vec![length],
            shape: vec![n],
            coefficient: Coefficient::default(),
        }
    }

    pub fn rectangle(bc: BoundaryCondition, lengths: [f64; 2], shape: [usize; 2]) -> Self {
        Self {
            bc,
            lengths: lengths.to_vec(),
            shape: shape.to_vec(),
            coefficient: Coefficient::default(),
        }
    }

    pub fn with_coefficient(mut self, coefficient: Coefficient) -> Self {
        self.coefficient = coefficient;
        self
    }
}

/// A discretized self-adjoint operator with its full eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: SpatialGrid,
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, orthonormal in the weighted inner product.
    eigenvectors: DMatrix<f64>,
    /// Index ranges of numerically equal eigenvalues, ascending.
    clusters: Vec<std::ops::Range<usize>>,
}

impl SpectralOperator {
    pub fn build(spec: &OperatorSpec) -> Result<Self> {
        let grid = SpatialGrid::new(spec.bc, &spec.lengths, &spec.shape)?;
        let matrix = assemble(&grid, spec.bc, &spec.coefficient)?;
        Self::from_matrix(matrix, grid)
    }

    /// Wraps an arbitrary matrix that is self-adjoint in the grid's weighted inner product.
    pub fn from_matrix(matrix: DMatrix<f64>, grid: SpatialGrid) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut sym = DMatrix::from_fn(n, n, |i, j| sw[i] * matrix[(i, j)] / sw[j]);
        let sym_t = sym.transpose();
        sym = (sym + sym_t) * 0.5;
        let eig = SymmetricEigen::new(sym);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).clone_owned();
            for (i, s) in sw.iter().enumerate() {
                v[i] /= s;
            }
            canonical_sign(&mut v);
            eigenvectors.set_column(col, &v);
        }

        // Constants are an exact null vector when every row sums to zero.
        let exact_null = grid.boundary_condition() == Some(BoundaryCondition::Neumann)
            && matrix.row_iter().all(|r| r.iter().sum::<f64>() == 0.0);

        let clusters = cluster(&eigenvalues, DEFAULT_RANK_TOL);
        for c in &clusters {
            let mean = eigenvalues[c.clone()].iter().sum::<f64>() / c.len() as f64;
            for k in c.clone() {
                eigenvalues[k] = mean;
            }
        }
        if exact_null && clusters[0].len() == 1 {
            eigenvalues[0] = 0.0;
            let c = 1.0 / grid.weights().iter().sum::<f64>().sqrt();
            eigenvectors.set_column(0, &DVector::from_element(n, c));
        }

        Ok(Self {
            grid,
            matrix,
            eigenvalues,
            eigenvectors,
            clusters,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in ascending order, repeated according to multiplicity.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Distinct eigenvalues `λ_1 < λ_2 < …` with their multiplicities.
    pub fn distinct_eigenvalues(&self) -> Vec<(f64, usize)> {
        self.clusters
            .iter()
            .map(|c| (self.eigenvalues[c.start], c.len()))
            .collect()
    }

    /// The `k`-th distinct eigenvalue, 1-based.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.clusters.len() {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue index {k} outside 1..={}",
                self.clusters.len()
            )));
        }
        Ok(self.eigenvalues[self.clusters[k - 1].start])
    }

    /// `(index, eigenvalue, multiplicity of its cluster)` rows, 1-based index.
    pub fn eigen_table(&self) -> Vec<(usize, f64, usize)> {
        let mut rows = Vec::with_capacity(self.len());
        for c in &self.clusters {
            for k in c.clone() {
                rows.push((k + 1, self.eigenvalues[k], c.len()));
            }
        }
        rows
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.grid.inner(u, v)
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.grid.norm(u)
    }

    /// Modal coordinates `c_k = ⟨u, v_k⟩`.
    pub fn to_modal(&self, u: &DVector<f64>) -> DVector<f64> {
        let wu = DVector::from_iterator(
            u.len(),
            u.iter().zip(self.grid.weights()).map(|(a, w)| a * w),
        );
        self.eigenvectors.tr_mul(&wu)
    }

    pub fn from_modal(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * c
    }

    /// `max_k ‖A v_k − λ_k v_k‖ / (1 + |λ_k|)` in the weighted norm.
    pub fn eigen_residual(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.eigenvectors.column(k).clone_owned();
                let r = &self.matrix * &v - &v * self.eigenvalues[k];
                self.norm(&r) / (1.0 + self.eigenvalues[k].abs())
            })
            .fold(0.0, f64::max)
    }

    /// `max_{ij} |⟨v_i, v_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(self.grid.weights()));
        let gram = self.eigenvectors.transpose() * w * &self.eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `max |(WA)_ij − (WA)_ji|`, zero for operators self-adjoint in the weighted product.
    pub fn symmetry_defect(&self) -> f64 {
        let w = self.grid.weights();
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((w[i] * self.matrix[(i, j)] - w[j] * self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// `e^{shift·t} S_A(t) v`, evaluated spectrally.
    pub fn semigroup_apply(&self, t: f64, shift: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.check_len(v.len())?;
        let mut c = self.to_modal(v);
        for (ck, lk) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= ((shift - lk) * t).exp();
        }
        Ok(self.from_modal(&c))
    }

    /// Matrix of `e^{shift·t} S_A(t)` from the eigendecomposition.
    pub fn semigroup_matrix(&self, t: f64, shift: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let mut scaled = self.eigenvectors.clone();
        for (k, lk) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(((shift - lk) * t).exp());
        }
        let mut vt_w = self.eigenvectors.transpose();
        for (j, w) in self.grid.weights().iter().enumerate() {
            vt_w.column_mut(j).scale_mut(*w);
        }
        Ok(scaled * vt_w)
    }

    /// Matrix of `e^{shift·t} S_A(t)` by scaling-and-squaring on `(shift·I − A)·t`,
    /// independent of the eigendecomposition.
    pub fn semigroup_matrix_expm(&self, t: f64, shift: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let n = self.len();
        let gen = (DMatrix::identity(n, n) * shift - &self.matrix) * t;
        Ok(gen.exp())
    }

    /// Kernel `N_λ = Ker(λI − A)`: the eigenvalue cluster within `rank_tol` of `lambda`.
    pub fn kernel_data(&self, lambda: f64, rank_tol: Option<f64>) -> Result<KernelData> {
        let tol = rank_tol.unwrap_or(DEFAULT_RANK_TOL * (1.0 + lambda.abs()));
        let modes: Vec<usize> = (0..self.len())
            .filter(|&k| (self.eigenvalues[k] - lambda).abs() <= tol)
            .collect();
        if modes.is_empty() {
            let nearest = self
                .eigenvalues
                .iter()
                .copied()
                .min_by(|a, b| (a - lambda).abs().total_cmp(&(b - lambda).abs()))
                .unwrap_or(f64::NAN);
            return Err(Error::NotResonant { lambda, nearest });
        }
        let n = self.len();
        let basis = DMatrix::from_fn(n, modes.len(), |i, j| self.eigenvectors[(i, modes[j])]);
        let mut bt_w = basis.transpose();
        for j in 0..n {
            bt_w.column_mut(j).scale_mut(self.grid.weights()[j]);
        }
        let projector = &basis * &bt_w;
        let exact = self.eigenvalues[modes[0]];
        Ok(KernelData {
            lambda: exact,
            modes,
            basis,
            projector,
            weights: self.grid.weights().to_vec(),
        })
    }

    /// Eigenvalue counts entering the index formula at the resonant value `lambda`.
    pub fn multiplicity_report(&self, lambda: f64, period: f64) -> Result<MultiplicityReport> {
        if !(period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        let kernel = self.kernel_data(lambda, None)?;
        let lambda = kernel.lambda;
        // μ(λ): eigenvalues e^{(λ−λ_j)T} of e^{λT}S(T) lying in (1, ∞), off the kernel.
        let mu_lambda = (0..self.len())
            .filter(|k| !kernel.modes.contains(k))
            .filter(|&k| ((lambda - self.eigenvalues[k]) * period).exp() > 1.0)
            .count();
        let distinct = self.distinct_eigenvalues();
        let k_index = distinct
            .iter()
            .position(|(v, _)| *v == lambda)
            .map(|p| p + 1)
            .unwrap_or(0);
        let d_k: usize = distinct
            .iter()
            .take(k_index.saturating_sub(1))
            .map(|(_, m)| m)
            .sum();
        let dim_n = kernel.dim();
        Ok(MultiplicityReport {
            lambda,
            period,
            k: k_index,
            mu_lambda,
            dim_n,
            d_k,
            parity_dk: parity(d_k),
            parity_mu_dim: parity(mu_lambda + dim_n),
        })
    }

    /// Compares `Ker(λI − A)` with `Ker(I − e^{λT}S(T))`; the latter is counted on
    /// the scaling-and-squaring matrix, not on the eigendecomposition.
    pub fn verify_resonance_conditions(&self, lambda: f64, period: f64) -> Result<ResonanceReport> {
        if !(period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        let tol = DEFAULT_RANK_TOL * (1.0 + lambda.abs());
        let dim_generator = self
            .eigenvalues
            .iter()
            .filter(|&&l| (l - lambda).abs() <= tol)
            .count();

        let translation = self.symmetrized(&self.semigroup_matrix_expm(period, lambda)?);
        let spec = SymmetricEigen::new(translation).eigenvalues;
        let scale = spec.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let tol_s = 1e-8 + 1e3 * f64::EPSILON * scale;
        let dim_translation = spec.iter().filter(|&&m| (m - 1.0).abs() <= tol_s).count();

        let gap = self
            .eigenvalues
            .iter()
            .filter(|&&l| (l - lambda).abs() > tol)
            .map(|&l| (1.0 - ((lambda - l) * period).exp()).abs())
            .fold(f64::INFINITY, f64::min);
        let norm = self.matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let symmetry_defect = self.symmetry_defect();
        let self_adjoint = symmetry_defect <= 1e-12 * norm.max(1.0) * self.grid.weights()[0];
        let a1_holds = dim_generator > 0 && dim_generator == dim_translation;
        Ok(ResonanceReport {
            lambda,
            period,
            dim_generator_kernel: dim_generator,
            dim_translation_kernel: dim_translation,
            a1_holds,
            a3_holds: a1_holds && self_adjoint,
            symmetry_defect,
            gap,
        })
    }

    /// Sign and log-magnitude of `det((I − e^{λT}S(T))|_M)` with `M = N_λ^⊥`,
    /// plus the number of negative eigenvalues of that restriction.
    pub fn restricted_det(&self, lambda: f64, period: f64) -> Result<RestrictedDet> {
        let kernel = self.kernel_data(lambda, None)?;
        let n = self.len();
        let d = kernel.dim();
        let translation = self.symmetrized(&self.semigroup_matrix_expm(period, kernel.lambda)?);
        let b = DMatrix::identity(n, n) - translation;

        // Orthonormal completion of the (scaled) kernel basis.
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut aug = DMatrix::zeros(n, d + n);
        for j in 0..d {
            for i in 0..n {
                aug[(i, j)] = sw[i] * kernel.basis[(i, j)];
            }
        }
        for i in 0..n {
            aug[(i, d + i)] = 1.0;
        }
        let q = aug.qr().q();
        let qm = q.columns(d, n - d).clone_owned();
        let restricted = qm.transpose() * b * &qm;
        let restricted = (&restricted + restricted.transpose()) * 0.5;

        let lu = restricted.clone().lu();
        let mut sign = lu.p().determinant::<f64>();
        let mut log_abs = 0.0;
        let u = lu.u();
        for i in 0..u.nrows() {
            let v = u[(i, i)];
            sign *= v.signum();
            log_abs += v.abs().ln();
        }
        let negative_count = SymmetricEigen::new(restricted)
            .eigenvalues
            .iter()
            .filter(|&&v| v < 0.0)
            .count();
        Ok(RestrictedDet {
            sign: sign as i32,
            log_abs,
            negative_count,
        })
    }

    /// `W^{1/2} M W^{-1/2}`, symmetrized.
    fn symmetrized(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let n = self.len();
        let s = DMatrix::from_fn(n, n, |i, j| sw[i] * m[(i, j)] / sw[j]);
        (&s + s.transpose()) * 0.5
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Eigenspace `N_λ` with its weighted-orthogonal projector `P`.
#[derive(Debug, Clone)]
pub struct KernelData {
    /// The eigenvalue as stored in the operator (use this as the resonant shift).
    pub lambda: f64,
    /// Mode indices into the operator's eigenbasis.
    pub modes: Vec<usize>,
    /// Orthonormal kernel vectors as columns.
    pub basis: DMatrix<f64>,
    pub projector: DMatrix<f64>,
    weights: Vec<f64>,
}

impl KernelData {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    /// Kernel coordinates `⟨u, b_j⟩` of `u`.
    pub fn coordinates(&self, u: &DVector<f64>) -> DVector<f64> {
        let wu = DVector::from_iterator(u.len(), u.iter().zip(&self.weights).map(|(a, w)| a * w));
        self.basis.tr_mul(&wu)
    }

    pub fn embed(&self, coords: &[f64]) -> DVector<f64> {
        &self.basis * DVector::from_column_slice(coords)
    }

    pub fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.projector * u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityReport {
    pub lambda: f64,
    pub period: f64,
    /// 1-based index of `lambda` among the distinct eigenvalues.
    pub k: usize,
    pub mu_lambda: usize,
    pub dim_n: usize,
    pub d_k: usize,
    /// `(−1)^{d_k}`.
    pub parity_dk: i32,
    /// `(−1)^{μ(λ) + dim N_λ}`.
    pub parity_mu_dim: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub lambda: f64,
    pub period: f64,
    pub dim_generator_kernel: usize,
    pub dim_translation_kernel: usize,
    pub a1_holds: bool,
    pub a3_holds: bool,
    pub symmetry_defect: f64,
    /// `min |1 − e^{(λ−λ_j)T}|` over eigenvalues off the kernel.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedDet {
    pub sign: i32,
    pub log_abs: f64,
    pub negative_count: usize,
}

pub(crate) fn parity(n: usize) -> i32 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn cluster(sorted: &[f64], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[start] > rel_tol * (1.0 + sorted[start].abs()) {
            out.push(start..k);
            start = k;
        }
    }
    out
}

fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

fn assemble(grid: &SpatialGrid, bc: BoundaryCondition, coef: &Coefficient) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let shape = grid.shape().to_vec();
    let h = grid.spacing().to_vec();
    let mut a = DMatrix::zeros(n, n);

    let face = |at: [f64; 2]| -> Result<f64> {
        let v = coef.eval(at);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Ellipticity { value: v, at });
        }
        Ok(v)
    };

    let face_offset = if bc == BoundaryCondition::Dirichlet {
        0.5
    } else {
        0.0
    };
    let strides: Vec<usize> = if shape.len() == 1 {
        vec![1]
    } else {
        vec![1, shape[0]]
    };
    for idx in 0..n {
        let p = grid.points()[idx];
        let multi = if shape.len() == 1 {
            vec![idx]
        } else {
            vec![idx % shape[0], idx / shape[0]]
        };
        let mut diag = 0.0;
        for axis in 0..shape.len() {
            let inv_h2 = 1.0 / (h[axis] * h[axis]);
            for dir in [-1i64, 1] {
                // Faces are indexed so that both neighbours evaluate the same point.
                let k = multi[axis] as f64 + if dir > 0 { 1.0 } else { 0.0 };
                let mut at = p;
                at[axis] = (k + face_offset) * h[axis];
                let coeff = face(at)? * inv_h2;
                let neighbour = multi[axis] as i64 + dir;
                if neighbour >= 0 && (neighbour as usize) < shape[axis] {
                    let j = (idx as i64 + dir * strides[axis] as i64) as usize;
                    a[(idx, j)] = -coeff;
                } else if bc == BoundaryCondition::Dirichlet {
                    // zero boundary value: only the diagonal sees this face
                    diag += coeff;
                }
                // Neumann: reflected ghost node, zero flux through the face
            }
        }
        let off: f64 = a.row(idx).iter().sum();
        a[(idx, idx)] = diag - off;
    }
    Ok(a)
}

//! Reaction terms `f(t, x, y)`, their Nemytskii operator and the
//! Landesman–Lazer functional built from the asymptotic limits `f_±`.

pub mod expr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, simpson_rule};
use crate::spectral::{KernelData, SpatialGrid};
use expr::{EvalContext, Expression, Var};

/// Nodal values with `|u| ≤` this threshold belong to neither sign set.
pub const SIGN_SET_THRESHOLD: f64 = 1e-12;

/// Bounded, Lipschitz, `T`-periodic reaction term with optional limits `f_±(t, x)`.
#[derive(Debug, Clone)]
pub struct NonlinearField {
    pub expr: Expression,
    /// Bound `m` with `|f| ≤ m`.
    pub bound: f64,
    /// Lipschitz constant in `y`.
    pub lipschitz: f64,
    pub f_plus: Option<Expression>,
    pub f_minus: Option<Expression>,
    pub period: f64,
}

impl NonlinearField {
    pub fn new(expr: Expression, bound: f64, lipschitz: f64, period: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bound m must be positive, got {bound}"
            )));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        Ok(Self {
            expr,
            bound,
            lipschitz,
            f_plus: None,
            f_minus: None,
            period,
        })
    }

    /// Parses `expr` and the optional limit expressions.
    pub fn parse(
        expr: &str,
        bound: f64,
        lipschitz: f64,
        f_plus: Option<&str>,
        f_minus: Option<&str>,
        period: f64,
    ) -> Result<Self> {
        let field = Self::new(Expression::parse(expr)?, bound, lipschitz, period)?;
        match (f_plus, f_minus) {
            (Some(p), Some(m)) => field.with_limits(Expression::parse(p)?, Expression::parse(m)?),
            (None, None) => Ok(field),
            _ => Err(Error::InvalidArgument(
                "f_plus and f_minus must be given together".into(),
            )),
        }
    }

    pub fn with_limits(mut self, f_plus: Expression, f_minus: Expression) -> Result<Self> {
        if f_plus.uses(Var::Y) || f_minus.uses(Var::Y) {
            return Err(Error::InvalidArgument(
                "limits f_± may not depend on y".into(),
            ));
        }
        self.f_plus = Some(f_plus);
        self.f_minus = Some(f_minus);
        Ok(self)
    }

    /// Catalog entries with analytically known limits: `atan`, `-atan`, `tanh`,
    /// `-tanh` and `y/(1+y^2)`.
    pub fn catalog(name: &str, period: f64) -> Option<Self> {
        use std::f64::consts::FRAC_PI_2;
        let (src, m, l, plus, minus) = match name {
            "atan" => ("atan(y)", FRAC_PI_2, 1.0, "pi/2", "-pi/2"),
            "-atan" => ("-atan(y)", FRAC_PI_2, 1.0, "-pi/2", "pi/2"),
            "tanh" => ("tanh(y)", 1.0, 1.0, "1", "-1"),
            "-tanh" => ("-tanh(y)", 1.0, 1.0, "-1", "1"),
            "y/(1+y^2)" => ("y/(1 + y*y)", 0.5, 1.0, "0", "0"),
            _ => return None,
        };
        Self::parse(src, m, l, Some(plus), Some(minus), period).ok()
    }

    pub fn has_limits(&self) -> bool {
        self.f_plus.is_some() && self.f_minus.is_some()
    }

    pub fn eval(&self, t: f64, x: [f64; 2], y: f64) -> f64 {
        self.expr.eval(&EvalContext {
            t,
            x,
            y,
            period: self.period,
        })
    }

    pub fn limits(&self, t: f64, x: [f64; 2]) -> Option<(f64, f64)> {
        let ctx = EvalContext {
            t,
            x,
            y: 0.0,
            period: self.period,
        };
        Some((
            self.f_plus.as_ref()?.eval(&ctx),
            self.f_minus.as_ref()?.eval(&ctx),
        ))
    }

    /// Checks the bound, Lipschitz, periodicity and limit conditions on samples.
    pub fn validate(&self, grid: &SpatialGrid) -> FieldReport {
        let ts: Vec<f64> = (0..8).map(|i| self.period * i as f64 / 8.0).collect();
        let stride = (grid.len() / 12).max(1);
        let xs: Vec<[f64; 2]> = grid.points().iter().step_by(stride).copied().collect();
        let ys: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.25).collect();
        let scale = self.bound.max(1.0);

        let mut max_abs = 0.0f64;
        let mut max_slope = 0.0f64;
        let mut period_defect = 0.0f64;
        for &t in &ts {
            for &x in &xs {
                let mut prev: Option<(f64, f64)> = None;
                for &y in &ys {
                    let v = self.eval(t, x, y);
                    max_abs = max_abs.max(v.abs());
                    period_defect = period_defect.max((self.eval(t + self.period, x, y) - v).abs());
                    if let Some((py, pv)) = prev {
                        max_slope = max_slope.max((v - pv).abs() / (y - py));
                    }
                    prev = Some((y, v));
                }
                for y in [1e2, 1e3, 1e4, -1e2, -1e3, -1e4] {
                    max_abs = max_abs.max(self.eval(t, x, y).abs());
                }
            }
        }

        let limit_defects = self.has_limits().then(|| {
            [1e1, 1e2, 1e3, 1e4]
                .iter()
                .map(|&big| {
                    let mut worst = 0.0f64;
                    for &t in &ts {
                        for &x in &xs {
                            let (fp, fm) = self.limits(t, x).unwrap_or_default();
                            worst = worst.max((self.eval(t, x, big) - fp).abs());
                            worst = worst.max((self.eval(t, x, -big) - fm).abs());
                        }
                    }
                    worst
                })
                .collect::<Vec<_>>()
        });
        let limits_ok = limit_defects
            .as_ref()
            .map(|d| d.windows(2).all(|w| w[1] <= w[0] + 1e-15) && d[d.len() - 1] <= 1e-3 * scale);

        FieldReport {
            bound_ok: max_abs <= self.bound * (1.0 + 1e-12),
            lipschitz_ok: max_slope <= self.lipschitz * (1.0 + 1e-9),
            periodic_ok: period_defect <= 1e-12 * scale,
            limits_ok,
            max_abs,
            max_slope,
            period_defect,
            limit_defects: limit_defects.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldReport {
    pub bound_ok: bool,
    pub lipschitz_ok: bool,
    pub periodic_ok: bool,
    /// `None` when no limits are declared.
    pub limits_ok: Option<bool>,
    pub max_abs: f64,
    pub max_slope: f64,
    pub period_defect: f64,
    /// `max |f(·,·,±Y) − f_±|` for `Y = 10, 10², 10³, 10⁴`.
    pub limit_defects: Vec<f64>,
}

impl FieldReport {
    pub fn all_ok(&self) -> bool {
        self.bound_ok && self.lipschitz_ok && self.periodic_ok && self.limits_ok.unwrap_or(true)
    }
}

/// `F(t, u)(x) = f(t, x, u(x))` on a grid.
#[derive(Debug, Clone)]
pub struct NemytskiiOperator {
    field: NonlinearField,
    grid: SpatialGrid,
}

impl NemytskiiOperator {
    pub fn new(field: NonlinearField, grid: SpatialGrid) -> Self {
        Self { field, grid }
    }

    pub fn field(&self) -> &NonlinearField {
        &self.field
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn period(&self) -> f64 {
        self.field.period
    }

    /// `m · ν(Ω)^{1/2}`, a bound on `‖F(t, u)‖`.
    pub fn norm_bound(&self) -> f64 {
        self.field.bound * self.grid.measure().sqrt()
    }

    pub fn apply(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        self.apply_into(t, u.as_slice(), out.as_mut_slice());
        out
    }

    pub fn apply_into(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let period = self.field.period;
        for ((o, &y), &x) in out.iter_mut().zip(u).zip(self.grid.points()) {
            *o = self.field.expr.eval(&EvalContext { t, x, y, period });
        }
    }

    /// Value of the Landesman–Lazer functional
    /// `∫_0^T ∫_{u>0} f_+ u + ∫_0^T ∫_{u<0} f_- u` at a unit vector `u`.
    pub fn ll_integrand(&self, u: &DVector<f64>, n_t: usize) -> Result<f64> {
        if !self.field.has_limits() {
            return Err(Error::LlNotApplicable(
                "asymptotic limits f_± are undefined".into(),
            ));
        }
        if u.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                got: u.len(),
            });
        }
        let norm = self.grid.norm(u);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "LL functional needs ‖u‖ = 1, got {norm}"
            )));
        }
        let rule = simpson_rule(0.0, self.field.period, n_t);
        let per_time = rule.iter().map(|&(t, wt)| {
            let space = self
                .grid
                .points()
                .iter()
                .zip(self.grid.weights())
                .zip(u.iter())
                .map(|((&x, &w), &ui)| {
                    if ui.abs() <= SIGN_SET_THRESHOLD {
                        return 0.0;
                    }
                    let (fp, fm) = self.field.limits(t, x).unwrap_or_default();
                    let lim = if ui > 0.0 { fp } else { fm };
                    w * lim * ui
                });
            wt * compensated_sum(space)
        });
        Ok(compensated_sum(per_time))
    }

    /// Samples the LL functional over the unit sphere of the kernel.
    pub fn ll_verdict(
        &self,
        kernel: &KernelData,
        n_sphere: usize,
        n_t: usize,
    ) -> Result<LlVerdict> {
        let directions: Vec<Vec<f64>> = match kernel.dim() {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => {
                let n = n_sphere.max(4);
                (0..n)
                    .map(|j| {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        vec![th.cos(), th.sin()]
                    })
                    .collect()
            }
            d => return Err(Error::UnsupportedKernelDim(d)),
        };
        let values: Vec<f64> = directions
            .iter()
            .map(|d| self.ll_integrand(&kernel.embed(d), n_t))
            .collect::<Result<_>>()?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * self.field.period * self.norm_bound().max(1.0);
        let kind = if min > tol {
            LlKind::HoldsPositive
        } else if max < -tol {
            LlKind::HoldsNegative
        } else {
            LlKind::Fails
        };
        let pick = match kind {
            LlKind::HoldsPositive => argmin(&values, |v| v),
            LlKind::HoldsNegative => argmin(&values, |v| -v),
            LlKind::Fails => argmin(&values, f64::abs),
        };
        Ok(LlVerdict {
            kind,
            witness: directions[pick].clone(),
            witness_value: values[pick],
            min_value: min,
            max_value: max,
            directions: directions.len(),
            sampled: kernel.dim() > 1,
        })
    }

    /// Nodal matrix of `F(t, ·)` at several states; used by tests and benches.
    pub fn apply_columns(&self, t: f64, states: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(states.nrows(), states.ncols());
        for j in 0..states.ncols() {
            let col = states.column(j).clone_owned();
            out.set_column(j, &self.apply(t, &col));
        }
        out
    }
}

fn argmin(values: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if key(v) < key(values[best]) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlKind {
    HoldsPositive,
    HoldsNegative,
    Fails,
}

impl std::fmt::Display for LlKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LlKind::HoldsPositive => "holds_positive",
            LlKind::HoldsNegative => "holds_negative",
            LlKind::Fails => "fails",
        })
    }
}

/// Outcome of sampling the LL functional; `witness` is in kernel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LlVerdict {
    pub kind: LlKind,
    pub witness: Vec<f64>,
    pub witness_value: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub directions: usize,
    /// True when the sphere was sampled rather than exhausted (kernel dimension 2).
    pub sampled: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BoundaryCondition, OperatorSpec, SpectralOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn neumann() -> SpectralOperator {
        SpectralOperator::build(&OperatorSpec::interval(BoundaryCondition::Neumann, PI, 24))
            .unwrap()
    }

    fn nem(field: NonlinearField, op: &SpectralOperator) -> NemytskiiOperator {
        NemytskiiOperator::new(field, op.grid().clone())
    }

    #[test]
    fn apply_examples() {
        let op = neumann();
        let c = nem(
            NonlinearField::parse("0.7", 1.0, 1.0, None, None, 1.0).unwrap(),
            &op,
        );
        assert!(c.apply(0.3, &DVector::zeros(24)).iter().all(|&v| v == 0.7));
        let a = nem(NonlinearField::catalog("atan", 1.0).unwrap(), &op);
        assert!(a.apply(0.0, &DVector::zeros(24)).iter().all(|&v| v == 0.0));
        let big = a.apply(0.0, &DVector::from_element(24, 1e6));
        assert!(big.iter().all(|&v| (v - FRAC_PI_2).abs() < 1e-5));
    }

    #[test]
    fn nemytskii_bound_and_lipschitz_on_random_states() {
        let op = neumann();
        let f = NonlinearField::parse(
            "atan(y) * cos(x) + 0.2*sin(2*pi*t/T)",
            1.8,
            1.0,
            None,
            None,
            1.0,
        )
        .unwrap();
        let n = nem(f, &op);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = DVector::from_fn(24, |_, _| rng.gen_range(-50.0..50.0));
            let v = DVector::from_fn(24, |_, _| rng.gen_range(-50.0..50.0));
            let t = rng.gen_range(0.0..1.0);
            let fu = n.apply(t, &u);
            assert!(op.norm(&fu) <= n.norm_bound() + 1e-12);
            let d = op.norm(&(fu - n.apply(t, &v)));
            assert!(d <= 1.0 * op.norm(&(&u - &v)) + 1e-12);
        }
    }

    #[test]
    fn validation_of_catalog_fields() {
        let op = neumann();
        for name in ["atan", "-atan", "tanh", "y/(1+y^2)"] {
            let f = NonlinearField::catalog(name, 1.0).unwrap();
            let rep = f.validate(op.grid());
            assert!(rep.all_ok(), "{name}: {rep:?}");
            assert_eq!(rep.limits_ok, Some(true));
        }
        let bad = NonlinearField::parse("2*atan(y)", 1.0, 1.0, None, None, 1.0).unwrap();
        let rep = bad.validate(op.grid());
        assert!(!rep.bound_ok && !rep.lipschitz_ok);
        let aperiodic = NonlinearField::parse("0.5*sin(t)", 1.0, 1.0, None, None, 1.0).unwrap();
        assert!(!aperiodic.validate(op.grid()).periodic_ok);
        let wrong = NonlinearField::parse("atan(y)", 2.0, 1.0, Some("1"), Some("-1"), 1.0).unwrap();
        assert_eq!(wrong.validate(op.grid()).limits_ok, Some(false));
    }

    #[test]
    fn limits_may_not_depend_on_y() {
        let r = NonlinearField::parse("atan(y)", 2.0, 1.0, Some("y"), Some("0"), 1.0);
        assert!(r.is_err());
        let r = NonlinearField::parse("atan(y)", 2.0, 1.0, Some("1"), None, 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn ll_integrand_oracles() {
        let op = neumann();
        let kernel = op.kernel_data(0.0, None).unwrap();
        let u = kernel.embed(&[1.0]);
        let abs_int: f64 = op
            .grid()
            .weights()
            .iter()
            .zip(u.iter())
            .map(|(w, v)| w * v.abs())
            .sum();
        for period in [1.0, 2.5] {
            let pos = nem(NonlinearField::catalog("atan", period).unwrap(), &op);
            let v = pos.ll_integrand(&u, 16).unwrap();
            assert!((v - FRAC_PI_2 * period * abs_int).abs() < 1e-12);
            let neg = nem(NonlinearField::catalog("-atan", period).unwrap(), &op);
            assert!(
                (neg.ll_integrand(&u, 16).unwrap() + FRAC_PI_2 * period * abs_int).abs() < 1e-12
            );
            let zero = nem(NonlinearField::catalog("y/(1+y^2)", period).unwrap(), &op);
            assert_eq!(zero.ll_integrand(&u, 16).unwrap(), 0.0);
        }
        let nolim = nem(
            NonlinearField::parse("atan(y)", 2.0, 1.0, None, None, 1.0).unwrap(),
            &op,
        );
        assert!(matches!(
            nolim.ll_integrand(&u, 8),
            Err(Error::LlNotApplicable(_))
        ));
        assert!(pos_err_on_non_unit(&op));
    }

    fn pos_err_on_non_unit(op: &SpectralOperator) -> bool {
        let n = nem(NonlinearField::catalog("atan", 1.0).unwrap(), op);
        n.ll_integrand(&DVector::from_element(op.len(), 3.0), 8)
            .is_err()
    }

    #[test]
    fn odd_limits_give_symmetric_functional() {
        let spec = OperatorSpec::interval(BoundaryCondition::Dirichlet, PI, 30);
        let op = SpectralOperator::build(&spec).unwrap();
        let f = NonlinearField::parse(
            "atan(y)*(1 + 0.5*cos(x)) ",
            FRAC_PI_2 * 1.5,
            1.5,
            Some("pi/2*(1 + 0.5*cos(x))"),
            Some("-pi/2*(1 + 0.5*cos(x))"),
            1.0,
        )
        .unwrap();
        let n = nem(f, &op);
        for k in 0..4 {
            let u = op.eigenvectors().column(k).clone_owned();
            let a = n.ll_integrand(&u, 8).unwrap();
            let b = n.ll_integrand(&(-&u), 8).unwrap();
            assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
        }
    }

    #[test]
    fn time_quadrature_converges() {
        let op = neumann();
        let f = NonlinearField::parse(
            "atan(y) + 0.3*cos(2*pi*t/T)",
            2.0,
            1.0,
            Some("pi/2 + 0.3*cos(2*pi*t/T)"),
            Some("-pi/2 + 0.3*cos(2*pi*t/T) + 0.1*sin(2*pi*t/T)*sin(2*pi*t/T)"),
            1.0,
        )
        .unwrap();
        let n = nem(f, &op);
        let u = op.eigenvectors().column(1).clone_owned();
        let a = n.ll_integrand(&u, 64).unwrap();
        let b = n.ll_integrand(&u, 128).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn verdicts() {
        let op = neumann();
        let kernel = op.kernel_data(0.0, None).unwrap();
        let v = nem(NonlinearField::catalog("atan", 1.0).unwrap(), &op).ll_verdict(&kernel, 64, 8);
        assert_eq!(v.unwrap().kind, LlKind::HoldsPositive);
        let v = nem(NonlinearField::catalog("-atan", 1.0).unwrap(), &op).ll_verdict(&kernel, 64, 8);
        assert_eq!(v.unwrap().kind, LlKind::HoldsNegative);

        // f_+ = π/2 − 2 < 0 and f_- = −π/2 − 2: the functional is negative at +e
        // and (π/2 + 2)·T·∫|u| > 0 at −e, so neither sign is uniform.
        let f = NonlinearField::parse(
            "atan(y) - 2",
            3.6,
            1.0,
            Some("pi/2 - 2"),
            Some("-pi/2 - 2"),
            1.0,
        )
        .unwrap();
        let v = nem(f, &op).ll_verdict(&kernel, 64, 8).unwrap();
        assert_eq!(v.kind, LlKind::Fails);
        let sqrt_nu = PI.sqrt();
        assert!((v.max_value - (FRAC_PI_2 + 2.0) * sqrt_nu).abs() < 1e-12);
        assert!((v.min_value - (FRAC_PI_2 - 2.0) * sqrt_nu).abs() < 1e-12);
    }

    #[test]
    fn verdict_on_double_kernel() {
        let spec = OperatorSpec::rectangle(BoundaryCondition::Dirichlet, [1.0, 1.0], [9, 9]);
        let op = SpectralOperator::build(&spec).unwrap();
        let lam = op.eigenvalue(2).unwrap();
        let kernel = op.kernel_data(lam, None).unwrap();
        let v = nem(NonlinearField::catalog("atan", 1.0).unwrap(), &op)
            .ll_verdict(&kernel, 64, 8)
            .unwrap();
        assert_eq!(v.kind, LlKind::HoldsPositive);
        assert!(v.sampled);
        assert_eq!(v.directions, 64);
        let three = op
            .kernel_data(op.eigenvalue(1).unwrap(), Some(1e9))
            .unwrap();
        let r = nem(NonlinearField::catalog("atan", 1.0).unwrap(), &op).ll_verdict(&three, 64, 8);
        assert!(matches!(r, Err(Error::UnsupportedKernelDim(_))));
    }
}

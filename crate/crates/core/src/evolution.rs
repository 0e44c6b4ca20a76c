//! Mild solutions of `u' = −A u + λ u + ε F(t, u)` by exponential integrators
//! in the eigenbasis of `A`.
//!
//! In modal coordinates `c = Vᵀ W u` the linear part is diagonal with rates
//! `z_k = λ − λ_k`, so each step is exact for the linear flow and the
//! nonlinearity enters through the `φ` functions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nonlinearity::NemytskiiOperator;
use crate::spectral::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// First order: `c⁺ = e^{zh} c + h φ₁(zh) N(t, c)`.
    ExponentialEuler,
    /// Second order two-stage scheme with the stage at `t + h/2`.
    ExponentialMidpoint,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "exponential_euler" => Ok(Scheme::ExponentialEuler),
            "midpoint" | "exponential_midpoint" => Ok(Scheme::ExponentialMidpoint),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::ExponentialEuler => "exponential_euler",
            Scheme::ExponentialMidpoint => "exponential_midpoint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Steps per period; at least 8.
    pub n_steps: usize,
    pub scheme: Scheme,
    /// Trapezoidal corrector sweeps after each step.
    pub picard_iterations: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            n_steps: 256,
            scheme: Scheme::ExponentialMidpoint,
            picard_iterations: 0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 8 {
            return Err(Error::InvalidArgument(format!(
                "n_steps must be at least 8, got {}",
                self.n_steps
            )));
        }
        Ok(())
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }
}

/// `φ₁(z) = (e^z − 1)/z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (e^z − 1 − z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 0.5;
        let mut sum = term;
        for k in 3..20 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Sampled trajectory: nodal states at `times`, with their weighted norms.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    pub epsilon: f64,
    pub shift: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states
            .last()
            .expect("trajectory has the initial state")
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `t,norm,u_0,…,u_{n−1}`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(out, "t,norm")?;
        for i in 0..n {
            write!(out, ",u_{i}")?;
        }
        writeln!(out)?;
        for ((t, s), nrm) in self.times.iter().zip(&self.states).zip(&self.norms) {
            write!(out, "{t:.16e},{nrm:.16e}")?;
            for v in s.iter() {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct StepCoeffs {
    e: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    e_half: Vec<f64>,
    p1_half: Vec<f64>,
}

impl StepCoeffs {
    fn new(rates: &[f64], h: f64) -> Self {
        let map = |f: &dyn Fn(f64) -> f64| rates.iter().map(|&z| f(z)).collect::<Vec<_>>();
        Self {
            e: map(&|z| (z * h).exp()),
            p1: map(&|z| h * phi1(z * h)),
            p2: map(&|z| h * phi2(z * h)),
            e_half: map(&|z| (z * h / 2.0).exp()),
            p1_half: map(&|z| h / 2.0 * phi1(z * h / 2.0)),
        }
    }
}

/// Solver for the mild-solution equation on a set of active modes.
///
/// With all modes active this is the full discretized flow; with a subset it is
/// the Galerkin truncation onto their span.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    op: &'a SpectralOperator,
    nemytskii: &'a NemytskiiOperator,
    epsilon: f64,
    shift: f64,
    period: f64,
    cfg: IntegratorConfig,
    modes: Vec<usize>,
    rates: Vec<f64>,
    basis: DMatrix<f64>,
    /// `basisᵀ W`.
    analysis: DMatrix<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(
        op: &'a SpectralOperator,
        nemytskii: &'a NemytskiiOperator,
        epsilon: f64,
        shift: f64,
        cfg: IntegratorConfig,
    ) -> Result<Self> {
        Self::galerkin(op, nemytskii, epsilon, shift, cfg, (0..op.len()).collect())
    }

    pub fn galerkin(
        op: &'a SpectralOperator,
        nemytskii: &'a NemytskiiOperator,
        epsilon: f64,
        shift: f64,
        cfg: IntegratorConfig,
        modes: Vec<usize>,
    ) -> Result<Self> {
        cfg.validate()?;
        if nemytskii.grid().len() != op.len() {
            return Err(Error::DimensionMismatch {
                expected: op.len(),
                got: nemytskii.grid().len(),
            });
        }
        if modes.is_empty() || modes.iter().any(|&k| k >= op.len()) {
            return Err(Error::InvalidArgument(
                "active modes must be a nonempty subset".into(),
            ));
        }
        let n = op.len();
        let basis = DMatrix::from_fn(n, modes.len(), |i, j| op.eigenvectors()[(i, modes[j])]);
        let mut analysis = basis.transpose();
        for (j, w) in op.grid().weights().iter().enumerate() {
            analysis.column_mut(j).scale_mut(*w);
        }
        let rates = modes.iter().map(|&k| shift - op.eigenvalues()[k]).collect();
        Ok(Self {
            op,
            nemytskii,
            epsilon,
            shift,
            period: nemytskii.period(),
            cfg,
            modes,
            rates,
            basis,
            analysis,
        })
    }

    pub fn operator(&self) -> &'a SpectralOperator {
        self.op
    }

    pub fn nemytskii(&self) -> &'a NemytskiiOperator {
        self.nemytskii
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    /// Active-mode coordinates of a nodal vector.
    pub fn to_modal(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.analysis * u
    }

    pub fn from_modal(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.basis * c
    }

    /// `ε Πᵀ W F(t, Π c)`.
    fn forcing(&self, t: f64, c: &DVector<f64>) -> DVector<f64> {
        if self.epsilon == 0.0 {
            return DVector::zeros(c.len());
        }
        let u = &self.basis * c;
        let f = self.nemytskii.apply(t, &u);
        (&self.analysis * f) * self.epsilon
    }

    fn step(&self, k: &StepCoeffs, t: f64, h: f64, c: &DVector<f64>) -> DVector<f64> {
        let m = c.len();
        if self.epsilon == 0.0 {
            return DVector::from_fn(m, |i, _| k.e[i] * c[i]);
        }
        let n0 = self.forcing(t, c);
        let mut next = match self.cfg.scheme {
            Scheme::ExponentialEuler => DVector::from_fn(m, |i, _| k.e[i] * c[i] + k.p1[i] * n0[i]),
            Scheme::ExponentialMidpoint => {
                let stage = DVector::from_fn(m, |i, _| k.e_half[i] * c[i] + k.p1_half[i] * n0[i]);
                let n1 = self.forcing(t + h / 2.0, &stage);
                DVector::from_fn(m, |i, _| {
                    k.e[i] * c[i] + (k.p1[i] - 2.0 * k.p2[i]) * n0[i] + 2.0 * k.p2[i] * n1[i]
                })
            }
        };
        for _ in 0..self.cfg.picard_iterations {
            let ne = self.forcing(t + h, &next);
            next = DVector::from_fn(m, |i, _| {
                k.e[i] * c[i] + (k.p1[i] - k.p2[i]) * n0[i] + k.p2[i] * ne[i]
            });
        }
        next
    }

    fn steps_for(&self, duration: f64) -> usize {
        ((self.cfg.n_steps as f64) * duration / self.period - 1e-9)
            .ceil()
            .max(1.0) as usize
    }

    /// Modal flow from time `t0` over `duration`, optionally observing every step.
    fn integrate(
        &self,
        c0: &DVector<f64>,
        t0: f64,
        duration: f64,
        mut observe: impl FnMut(f64, &DVector<f64>),
    ) -> Result<DVector<f64>> {
        if duration < 0.0 {
            return Err(Error::NegativeTime(duration));
        }
        if c0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c0.len(),
            });
        }
        if duration == 0.0 {
            return Ok(c0.clone());
        }
        let steps = self.steps_for(duration);
        let h = duration / steps as f64;
        let coeffs = StepCoeffs::new(&self.rates, h);
        let mut c = c0.clone();
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            c = self.step(&coeffs, t, h, &c);
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationAborted {
                    step: s + 1,
                    time: t + h,
                });
            }
            observe(t + h, &c);
        }
        Ok(c)
    }

    /// Modal state after `duration` starting from `c0` at time `t0`.
    pub fn flow_modal(&self, c0: &DVector<f64>, t0: f64, duration: f64) -> Result<DVector<f64>> {
        self.integrate(c0, t0, duration, |_, _| {})
    }

    /// `Ψ_T` in active-mode coordinates.
    pub fn translate_modal(&self, c0: &DVector<f64>) -> Result<DVector<f64>> {
        self.flow_modal(c0, 0.0, self.period)
    }

    /// `Ψ_T(x) = u(T; x)` on nodal vectors (after projection onto the active modes).
    pub fn translate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_nodal(x)?;
        Ok(self.from_modal(&self.translate_modal(&self.to_modal(x))?))
    }

    /// Full trajectory on `[0, t_end]` sampled at every step.
    pub fn solve(&self, x0: &DVector<f64>, t_end: f64) -> Result<Trajectory> {
        self.check_nodal(x0)?;
        let c0 = self.to_modal(x0);
        let u0 = self.from_modal(&c0);
        let mut traj = Trajectory {
            times: vec![0.0],
            norms: vec![self.op.norm(&u0)],
            states: vec![u0],
            epsilon: self.epsilon,
            shift: self.shift,
        };
        self.integrate(&c0, 0.0, t_end, |t, c| {
            let u = self.from_modal(c);
            traj.times.push(t);
            traj.norms.push(self.op.norm(&u));
            traj.states.push(u);
        })?;
        Ok(traj)
    }

    /// Constants `(M, ω, K)` with `‖e^{λt}S(t)‖ ≤ M e^{ωt}` on the active modes and
    /// `‖ε F(t, u)‖ ≤ K`.
    pub fn growth_constants(&self) -> (f64, f64, f64) {
        let omega = self.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (1.0, omega, self.epsilon.abs() * self.nemytskii.norm_bound())
    }

    /// Sup over the trajectory of `‖u_δ(t) − u(t)‖` for `n` random perturbations of
    /// size `delta`, deterministic in `seed`.
    pub fn continuity_probe(
        &self,
        x0: &DVector<f64>,
        t_end: f64,
        delta: f64,
        n: usize,
        seed: u64,
    ) -> Result<f64> {
        let base = self.solve(x0, t_end)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..n {
            let dir = DVector::from_fn(x0.len(), |_, _| standard_normal(&mut rng));
            let dir = &dir * (delta / self.op.norm(&dir));
            let other = self.solve(&(x0 + dir), t_end)?;
            for (a, b) in base.states.iter().zip(&other.states) {
                worst = worst.max(self.op.norm(&(a - b)));
            }
        }
        Ok(worst)
    }

    fn check_nodal(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.op.len() {
            return Err(Error::DimensionMismatch {
                expected: self.op.len(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Gronwall bound `‖u(t)‖ ≤ C₀ e^{t C₁}` on `[0, t₀]` for initial data of norm at most `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriBound {
    pub c0: f64,
    pub c1: f64,
    pub t0: f64,
    pub max_norm: f64,
    /// Samples of the trajectory above the bound.
    pub violations: usize,
}

impl AprioriBound {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks a trajectory against `C₀ = R M e^{|ω|t₀} + t₀ K M e^{|ω|t₀}` and
/// `C₁ = K M e^{|ω|t₀}`, where `‖e^{λt}S(t)‖ ≤ M e^{ωt}` and `‖F(t, u)‖ ≤ K (1 + ‖u‖)`.
pub fn a_priori_bound(traj: &Trajectory, m: f64, omega: f64, k: f64, radius: f64) -> AprioriBound {
    let t0 = traj.times.last().copied().unwrap_or(0.0);
    let growth = m * (omega.abs() * t0).exp();
    let c0 = radius * growth + t0 * k * growth;
    let c1 = k * growth;
    let violations = traj
        .times
        .iter()
        .zip(&traj.norms)
        .filter(|(&t, &nrm)| nrm > c0 * (t * c1).exp() * (1.0 + 1e-12))
        .count();
    AprioriBound { c0, c1, t0, max_norm: traj.max_norm(), violations }
}

/// Box–Muller sample from `N(0, 1)`.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

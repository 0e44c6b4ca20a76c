//! Periodic orbits as fixed points of `Ψ_T`: seeding from zeros of the averaged
//! map, continuation in `ε` and Newton–Picard shooting, plus certificate checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::{IntegratorConfig, Propagator, Trajectory};
use crate::nonlinearity::{LlKind, NemytskiiOperator};
use crate::resonance::{default_radii, degree_of_g, AveragedMap};
use crate::spectral::{KernelData, SpectralOperator};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub integrator: IntegratorConfig,
    /// Target for `‖Ψ_T(x) − x‖`.
    pub tol: f64,
    pub max_newton: usize,
    /// Complement modes in the first Newton subspace.
    pub initial_complement: usize,
    pub epsilon_start: f64,
    /// Continuation gives up when the ε step falls below this.
    pub min_step: f64,
    pub escape_radius: f64,
    /// Simpson intervals for the averaged map.
    pub n_t: usize,
    /// Seed for the random probes of the drift witness.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            tol: 1e-8,
            max_newton: 40,
            initial_complement: 4,
            epsilon_start: 1.0 / 16.0,
            min_step: 1.0 / 1024.0,
            escape_radius: 1e6,
            n_t: 64,
            seed: 0x5eed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if !(self.tol > 0.0) || !(self.epsilon_start > 0.0 && self.epsilon_start <= 1.0) {
            return Err(Error::InvalidArgument(
                "solver needs tol > 0 and epsilon_start in (0, 1]".into(),
            ));
        }
        if !(self.min_step > 0.0) || !(self.escape_radius > 0.0) || self.max_newton == 0 {
            return Err(Error::InvalidArgument(
                "solver needs min_step > 0, escape_radius > 0, max_newton ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fixed point `x*` of `Ψ_T` at `ε = 1` with its diagnostics.
#[derive(Debug, Clone)]
pub struct PeriodicCertificate {
    pub lambda: f64,
    pub period: f64,
    /// Nodal initial state `x* = u(0)`.
    pub state: DVector<f64>,
    /// `‖Ψ_T(x*) − x*‖`.
    pub residual: f64,
    /// `‖u(2T) − u(T)‖`.
    pub periodicity: f64,
    pub tol: f64,
    pub kernel_seed: Vec<f64>,
    /// Kernel coordinates of `x*`.
    pub kernel_coordinates: Vec<f64>,
    pub degree: i32,
    pub ll: Option<LlKind>,
    pub newton_iterations: usize,
    pub continuation_steps: usize,
    pub complement_modes: usize,
    /// `u(t)` over one period.
    pub orbit: Trajectory,
}

/// A zero of `g` in `B(0, radius)`, in kernel coordinates.
pub fn kernel_seed(map: &AveragedMap, radius: f64) -> Result<Vec<f64>> {
    // 1e−8·T·m
    let tol = 1e-2 * map.margin_tol();
    match map.dim() {
        1 => seed_1d(map, radius, tol),
        2 => seed_2d(map, radius, tol),
        d => Err(Error::UnsupportedKernelDim(d)),
    }
}

fn seed_1d(map: &AveragedMap, radius: f64, tol: f64) -> Result<Vec<f64>> {
    let g = |c: f64| map.eval(&[c])[0];
    let n = 256;
    let mut best = f64::INFINITY;
    let mut prev = (-radius, g(-radius));
    for i in 1..=n {
        let c = -radius + 2.0 * radius * i as f64 / n as f64;
        let v = g(c);
        best = best.min(v.abs()).min(prev.1.abs());
        if prev.1 == 0.0 {
            return Ok(vec![prev.0]);
        }
        if v.signum() != prev.1.signum() {
            let (mut a, mut b, fa) = (prev.0, c, prev.1);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = g(m);
                if fm == 0.0 || m == a || m == b {
                    return Ok(vec![m]);
                }
                if fm.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            let m = 0.5 * (a + b);
            if g(m).abs() <= tol {
                return Ok(vec![m]);
            }
            return Err(Error::SeedNotFound { best: g(m).abs() });
        }
        prev = (c, v);
    }
    Err(Error::SeedNotFound { best })
}

fn seed_2d(map: &AveragedMap, radius: f64, tol: f64) -> Result<Vec<f64>> {
    let g = |y: [f64; 2]| {
        let v = map.eval(&y);
        [v[0], v[1]]
    };
    let n = 32;
    let mut starts = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let y = [
                -radius + 2.0 * radius * i as f64 / n as f64,
                -radius + 2.0 * radius * j as f64 / n as f64,
            ];
            if y[0].hypot(y[1]) <= radius {
                let v = g(y);
                starts.push((v[0].hypot(v[1]), y));
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = starts.first().map_or(f64::INFINITY, |s| s.0);
    for &(_, y0) in starts.iter().take(8) {
        let mut y = y0;
        for _ in 0..60 {
            let v = g(y);
            let r = v[0].hypot(v[1]);
            best = best.min(r);
            if r <= tol {
                return Ok(y.to_vec());
            }
            let h = 1e-6 * (1.0 + y[0].hypot(y[1]));
            let a = g([y[0] + h, y[1]]);
            let b = g([y[0], y[1] + h]);
            let j = DMatrix::from_row_slice(
                2,
                2,
                &[
                    (a[0] - v[0]) / h,
                    (b[0] - v[0]) / h,
                    (a[1] - v[1]) / h,
                    (b[1] - v[1]) / h,
                ],
            );
            let Some(d) = j.lu().solve(&DVector::from_column_slice(&[-v[0], -v[1]])) else {
                break;
            };
            y = [y[0] + d[0], y[1] + d[1]];
            if y[0].hypot(y[1]) > 2.0 * radius {
                break;
            }
        }
    }
    Err(Error::SeedNotFound { best })
}

/// Kernel coordinates of `Ψ_T(x) − x` if they agree (to 1e−9) at `n_probe` random
/// states and are nonzero: a forcing whose kernel part ignores the state.
pub fn kernel_drift_witness(
    prop: &Propagator,
    kernel: &KernelData,
    n_probe: usize,
    seed: u64,
) -> Result<Option<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = prop.operator().len();
    let mut first: Option<DVector<f64>> = None;
    for _ in 0..n_probe {
        let scale = rng.gen_range(0.0..10.0);
        let x = DVector::from_fn(n, |_, _| scale * (2.0 * rng.gen::<f64>() - 1.0));
        let drift = kernel.coordinates(&(prop.translate(&x)? - &x));
        match &first {
            None => first = Some(drift),
            Some(d0) => {
                if (&drift - d0).norm() > 1e-9 * (1.0 + d0.norm()) {
                    return Ok(None);
                }
            }
        }
    }
    let scale = prop.period() * prop.nemytskii().field().bound;
    Ok(first
        .filter(|d| d.norm() > 1e-8 * scale)
        .map(|d| d.iter().copied().collect()))
}

struct NewtonOutcome {
    state: DVector<f64>,
    residual: f64,
    iterations: usize,
}

/// Newton on the kernel plus `n_c` complement modes, Picard on the rest.
fn newton_picard(
    prop: &Propagator,
    order: &[usize],
    dim_n: usize,
    n_c: &mut usize,
    c0: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<NewtonOutcome> {
    let n = prop.dim();
    let shift = prop.shift();
    let period = prop.period();
    let eigen = prop.operator().eigenvalues();
    let mut c = c0;
    let mut best = f64::INFINITY;
    let mut last = f64::INFINITY;
    for it in 0..cfg.max_newton {
        let psi = prop.translate_modal(&c)?;
        let r = &psi - &c;
        let res = r.norm();
        best = best.min(res);
        if res <= cfg.tol {
            return Ok(NewtonOutcome {
                state: c,
                residual: res,
                iterations: it,
            });
        }
        let norm = c.norm();
        if norm > cfg.escape_radius || !norm.is_finite() {
            return Err(Error::Escaped {
                norm,
                limit: cfg.escape_radius,
            });
        }
        let slow_tail = order
            .get(dim_n + *n_c)
            .is_some_and(|&k| ((shift - eigen[k]) * period).exp() > 0.5);
        if (slow_tail || res > 0.5 * last) && dim_n + *n_c < n {
            *n_c = (*n_c + 4).min(n - dim_n);
        }
        last = res;

        let sub = &order[..dim_n + *n_c];
        let m = sub.len();
        let h = 1e-6 * (1.0 + norm);
        let mut jac = DMatrix::zeros(m, m);
        for (col, &k) in sub.iter().enumerate() {
            let mut cp = c.clone();
            cp[k] += h;
            let rp = prop.translate_modal(&cp)? - &cp;
            for (row, &i) in sub.iter().enumerate() {
                jac[(row, col)] = (rp[i] - r[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(m, sub.iter().map(|&i| -r[i]));
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(Error::NewtonStagnation {
                epsilon: prop.epsilon(),
                residual: best,
            });
        };
        for (row, &k) in sub.iter().enumerate() {
            c[k] += delta[row];
        }
        if m < n {
            let psi = prop.translate_modal(&c)?;
            for &k in &order[m..] {
                c[k] = psi[k];
            }
        }
    }
    Err(Error::NewtonStagnation {
        epsilon: prop.epsilon(),
        residual: best,
    })
}

pub fn solve_periodic(
    op: &SpectralOperator,
    nemytskii: &NemytskiiOperator,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<PeriodicCertificate> {
    cfg.validate()?;
    let period = nemytskii.period();
    let kernel = op.kernel_data(lambda, None)?;
    let lambda = kernel.lambda;
    let full = Propagator::new(op, nemytskii, 1.0, lambda, cfg.integrator)?;
    let map = AveragedMap::new(nemytskii, kernel.clone(), cfg.n_t)?;

    let degree = match degree_of_g(&map, &default_radii()) {
        Ok(d) if d.value != 0 => d,
        other => {
            if let Some(drift) = kernel_drift_witness(&full, &kernel, 10, cfg.seed)? {
                let drift = drift.iter().map(|v| v * v).sum::<f64>().sqrt();
                return Err(Error::KernelDrift { drift });
            }
            return Err(match other {
                Ok(d) => Error::ZeroDegree { radius: d.radius },
                Err(e) => e,
            });
        }
    };
    let ll = if nemytskii.field().has_limits() && kernel.dim() <= 2 {
        Some(nemytskii.ll_verdict(&kernel, 64, cfg.n_t)?.kind)
    } else {
        None
    };
    let seed = kernel_seed(&map, degree.radius)?;

    let dim_n = kernel.dim();
    let mut order = kernel.modes.clone();
    order.extend((0..op.len()).filter(|k| !kernel.modes.contains(k)));
    let mut n_c = cfg.initial_complement.min(op.len() - dim_n);

    let mut c = full.to_modal(&kernel.embed(&seed));
    let mut done = 0.0f64;
    let mut step = cfg.epsilon_start;
    let mut newton_iterations = 0;
    let mut continuation_steps = 0;
    let mut residual = f64::INFINITY;
    while done < 1.0 {
        let eps = (done + step).min(1.0);
        let prop = full.with_epsilon(eps);
        match newton_picard(&prop, &order, dim_n, &mut n_c, c.clone(), cfg) {
            Ok(out) => {
                c = out.state;
                residual = out.residual;
                newton_iterations += out.iterations;
                continuation_steps += 1;
                done = eps;
                step = done;
            }
            Err(
                Error::NewtonStagnation { .. }
                | Error::Escaped { .. }
                | Error::IntegrationAborted { .. },
            ) => {
                step /= 2.0;
                if step < cfg.min_step {
                    return Err(Error::ContinuationFailed {
                        epsilon: done,
                        min_step: cfg.min_step,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }

    let state = full.from_modal(&c);
    let orbit = full.solve(&state, period)?;
    let u_t = orbit.last().clone();
    let u_2t = full.translate(&u_t)?;
    let periodicity = op.norm(&(u_2t - &u_t));
    Ok(PeriodicCertificate {
        lambda,
        period,
        kernel_coordinates: kernel.coordinates(&state).iter().copied().collect(),
        state,
        residual,
        periodicity,
        tol: cfg.tol,
        kernel_seed: seed,
        degree: degree.value,
        ll,
        newton_iterations,
        continuation_steps,
        complement_modes: n_c,
        orbit,
    })
}

/// Outcome of re-checking a certificate at doubled time resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// `‖u(T) − u(0)‖`.
    pub return_defect: f64,
    /// `max_t ‖u(t + T) − u(t)‖` over the step grid of `[0, T]`.
    pub periodicity: f64,
    pub threshold: f64,
    pub ll_matches: bool,
    pub degree: Option<i32>,
    pub failures: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_certificate(
    op: &SpectralOperator,
    nemytskii: &NemytskiiOperator,
    cert: &PeriodicCertificate,
    integrator: IntegratorConfig,
    n_t: usize,
) -> Result<Verification> {
    let fine = integrator.with_steps(integrator.n_steps * 2);
    let prop = Propagator::new(op, nemytskii, 1.0, cert.lambda, fine)?;
    let traj = prop.solve(&cert.state, 2.0 * cert.period)?;
    let n = fine.n_steps;
    let return_defect = op.norm(&(&traj.states[n] - &traj.states[0]));
    let periodicity = (0..=n)
        .map(|i| op.norm(&(&traj.states[i + n] - &traj.states[i])))
        .fold(0.0, f64::max);
    let threshold = 10.0 * cert.residual.max(cert.tol);

    let kernel = op.kernel_data(cert.lambda, None)?;
    let ll = if nemytskii.field().has_limits() && kernel.dim() <= 2 {
        Some(nemytskii.ll_verdict(&kernel, 64, n_t)?.kind)
    } else {
        None
    };
    let map = AveragedMap::new(nemytskii, kernel, n_t)?;
    let degree = degree_of_g(&map, &default_radii()).ok().map(|d| d.value);

    let mut failures = Vec::new();
    if !(return_defect <= threshold) {
        failures.push(format!(
            "‖u(T) − u(0)‖ = {return_defect:e} exceeds {threshold:e}"
        ));
    }
    if !(periodicity <= threshold) {
        failures.push(format!(
            "‖u(t+T) − u(t)‖ = {periodicity:e} exceeds {threshold:e}"
        ));
    }
    if ll != cert.ll {
        failures.push(format!(
            "LL verdict changed: {:?} vs certified {:?}",
            ll, cert.ll
        ));
    }
    match degree {
        Some(d) if d != 0 => {}
        other => failures.push(format!("degree of g is {other:?}, not a nonzero integer")),
    }
    Ok(Verification {
        return_defect,
        periodicity,
        threshold,
        ll_matches: ll == cert.ll,
        degree,
        failures,
    })
}

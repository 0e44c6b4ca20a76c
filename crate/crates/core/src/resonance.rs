//! The averaged kernel map `g`, Brouwer degrees of low-dimensional maps and the
//! cross-check of the index formula on Galerkin truncations.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::evolution::{IntegratorConfig, Propagator};
use crate::nonlinearity::NemytskiiOperator;
use crate::quadrature::simpson_rule;
use crate::spectral::{KernelData, SpectralOperator};

/// `g(y) = ∫_0^T P F(t, y) dt` in kernel coordinates.
#[derive(Debug, Clone)]
pub struct AveragedMap<'a> {
    nemytskii: &'a NemytskiiOperator,
    kernel: KernelData,
    rule: Vec<(f64, f64)>,
}

impl<'a> AveragedMap<'a> {
    pub fn new(nemytskii: &'a NemytskiiOperator, kernel: KernelData, n_t: usize) -> Result<Self> {
        if kernel.basis.nrows() != nemytskii.grid().len() {
            return Err(Error::DimensionMismatch {
                expected: nemytskii.grid().len(),
                got: kernel.basis.nrows(),
            });
        }
        let rule = simpson_rule(0.0, nemytskii.period(), n_t);
        Ok(Self {
            nemytskii,
            kernel,
            rule,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &KernelData {
        &self.kernel
    }

    pub fn period(&self) -> f64 {
        self.nemytskii.period()
    }

    /// Threshold below which `|g|` on a sphere counts as a boundary zero.
    pub fn margin_tol(&self) -> f64 {
        1e-6 * self.period() * self.nemytskii.field().bound
    }

    pub fn eval(&self, y: &[f64]) -> DVector<f64> {
        let u = self.kernel.embed(y);
        let mut acc = DVector::zeros(self.dim());
        for &(t, w) in &self.rule {
            acc += self.kernel.coordinates(&self.nemytskii.apply(t, &u)) * w;
        }
        acc
    }

    /// `g₀(y) = ∫_0^T ∫_Ω f(t, x, y) dx dt` for a kernel spanned by constants,
    /// obtained from `g` through the identification of `y` with the constant function.
    pub fn g0_scalar(&self, y: f64) -> Result<f64> {
        let b = self.kernel.basis.column(0);
        let beta = b[0];
        if self.dim() != 1 || b.iter().any(|v| (v - beta).abs() > 1e-12 * beta.abs()) {
            return Err(Error::InvalidArgument(
                "g₀ needs a kernel spanned by constants".into(),
            ));
        }
        Ok(self.eval(&[y / beta])[0] / beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeMethod {
    /// `(sign f(R) − sign f(−R))/2`.
    Sign,
    /// Winding number of the image of the circle.
    Winding,
    /// Solid angle swept by the image of a triangulated sphere.
    SolidAngle,
}

impl std::fmt::Display for DegreeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DegreeMethod::Sign => "sign",
            DegreeMethod::Winding => "winding",
            DegreeMethod::SolidAngle => "solid_angle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeResult {
    pub value: i32,
    pub method: DegreeMethod,
    /// Radius of the ball `B(0, R)`.
    pub radius: f64,
    /// `min |f|` over the boundary samples.
    pub boundary_margin: f64,
    pub samples: usize,
}

/// Degree of `f` on `B(0, radius) ⊂ ℝ^dim` for `dim ≤ 3`.
pub fn degree_on_ball<F>(dim: usize, radius: f64, margin_tol: f64, f: F) -> Result<DegreeResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    match dim {
        1 => brouwer_degree_1d(radius, margin_tol, f),
        2 => brouwer_degree_2d(radius, margin_tol, 64, f),
        3 => brouwer_degree_3d(radius, margin_tol, f),
        d => Err(Error::UnsupportedKernelDim(d)),
    }
}

pub fn brouwer_degree_1d<F>(radius: f64, margin_tol: f64, mut f: F) -> Result<DegreeResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let hi = f(&[radius])?[0];
    let lo = f(&[-radius])?[0];
    let margin = hi.abs().min(lo.abs());
    if !(margin > margin_tol) {
        return Err(Error::BoundaryZero { margin });
    }
    let value = ((hi.signum() - lo.signum()) / 2.0) as i32;
    Ok(DegreeResult {
        value,
        method: DegreeMethod::Sign,
        radius,
        boundary_margin: margin,
        samples: 2,
    })
}

const MAX_CIRCLE_SAMPLES: usize = 1 << 16;

pub fn brouwer_degree_2d<F>(
    radius: f64,
    margin_tol: f64,
    initial_samples: usize,
    mut f: F,
) -> Result<DegreeResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut n = initial_samples.max(8);
    // Angles of already evaluated points, keyed by their index at the finest level reached.
    let mut angles: Vec<f64> = Vec::new();
    let mut margin = f64::INFINITY;
    loop {
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            if !angles.is_empty() && j % 2 == 0 {
                next.push(angles[j / 2]);
                continue;
            }
            let th = 2.0 * PI * j as f64 / n as f64;
            let v = f(&[radius * th.cos(), radius * th.sin()])?;
            let r = v[0].hypot(v[1]);
            margin = margin.min(r);
            next.push(v[1].atan2(v[0]));
        }
        angles = next;
        if !(margin > margin_tol) {
            return Err(Error::BoundaryZero { margin });
        }
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for j in 0..n {
            let d = wrap(angles[(j + 1) % n] - angles[j]);
            worst = worst.max(d.abs());
            total += d;
        }
        if worst < PI / 2.0 {
            return Ok(DegreeResult {
                value: (total / (2.0 * PI)).round() as i32,
                method: DegreeMethod::Winding,
                radius,
                boundary_margin: margin,
                samples: n,
            });
        }
        if n >= MAX_CIRCLE_SAMPLES {
            return Err(Error::UnderSampled { samples: n });
        }
        n *= 2;
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Vertex budget for the sphere triangulation.
const MAX_SPHERE_VERTICES: usize = 1 << 16;
const MIN_SPHERE_DEPTH: usize = 2;

/// Degree on a ball in `ℝ³` from the solid angle of the image of a subdivided
/// octahedron. Faces are split until the images of their corners are less than
/// `π/2` apart; edges with hanging midpoints are walked on both sides, so the
/// image surface stays closed.
pub fn brouwer_degree_3d<F>(radius: f64, margin_tol: f64, f: F) -> Result<DegreeResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut mesh = SphereMesh {
        f,
        radius,
        margin_tol,
        margin: f64::INFINITY,
        verts: Vec::new(),
        images: Vec::new(),
        mid: HashMap::new(),
    };
    for v in [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ] {
        mesh.push(v)?;
    }
    let mut leaves = Vec::new();
    for (sx, x) in [(1.0, 0), (-1.0, 1)] {
        for (sy, y) in [(1.0, 2), (-1.0, 3)] {
            for (sz, z) in [(1.0, 4), (-1.0, 5)] {
                let face = if sx * sy * sz > 0.0 {
                    [x, y, z]
                } else {
                    [x, z, y]
                };
                mesh.refine(face, 0, &mut leaves)?;
            }
        }
    }
    let mut total = 0.0;
    let mut ring = Vec::new();
    for &[a, b, c] in &leaves {
        ring.clear();
        mesh.chain(a, b, &mut ring);
        mesh.chain(b, c, &mut ring);
        mesh.chain(c, a, &mut ring);
        let im = &mesh.images;
        for w in ring[1..].windows(2) {
            total += solid_angle(&im[ring[0]], &im[w[0]], &im[w[1]]);
        }
    }
    Ok(DegreeResult {
        value: (total / (4.0 * PI)).round() as i32,
        method: DegreeMethod::SolidAngle,
        radius,
        boundary_margin: mesh.margin,
        samples: mesh.verts.len(),
    })
}

struct SphereMesh<F> {
    f: F,
    radius: f64,
    margin_tol: f64,
    margin: f64,
    verts: Vec<[f64; 3]>,
    images: Vec<[f64; 3]>,
    mid: HashMap<(usize, usize), usize>,
}

impl<F: FnMut(&[f64]) -> Result<Vec<f64>>> SphereMesh<F> {
    fn push(&mut self, v: [f64; 3]) -> Result<usize> {
        if self.verts.len() >= MAX_SPHERE_VERTICES {
            return Err(Error::UnderSampled {
                samples: self.verts.len(),
            });
        }
        let r = self.radius;
        let w = (self.f)(&[r * v[0], r * v[1], r * v[2]])?;
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        self.margin = self.margin.min(n);
        if !(n > self.margin_tol) {
            return Err(Error::BoundaryZero { margin: n });
        }
        self.verts.push(v);
        self.images.push([w[0] / n, w[1] / n, w[2] / n]);
        Ok(self.verts.len() - 1)
    }

    fn midpoint(&mut self, a: usize, b: usize) -> Result<usize> {
        if let Some(&m) = self.mid.get(&(a.min(b), a.max(b))) {
            return Ok(m);
        }
        let (p, q) = (self.verts[a], self.verts[b]);
        let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
        let r = dot(&m, &m).sqrt();
        let idx = self.push([m[0] / r, m[1] / r, m[2] / r])?;
        self.mid.insert((a.min(b), a.max(b)), idx);
        Ok(idx)
    }

    fn refine(
        &mut self,
        face: [usize; 3],
        depth: usize,
        leaves: &mut Vec<[usize; 3]>,
    ) -> Result<()> {
        let im = &self.images;
        let resolved = (0..3).all(|e| dot(&im[face[e]], &im[face[(e + 1) % 3]]) > 0.0);
        if depth >= MIN_SPHERE_DEPTH && resolved {
            leaves.push(face);
            return Ok(());
        }
        let [a, b, c] = face;
        let ab = self.midpoint(a, b)?;
        let bc = self.midpoint(b, c)?;
        let ca = self.midpoint(c, a)?;
        for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            self.refine(child, depth + 1, leaves)?;
        }
        Ok(())
    }

    /// Vertices on the edge from `a` towards `b`, excluding `b`.
    fn chain(&self, a: usize, b: usize, out: &mut Vec<usize>) {
        match self.mid.get(&(a.min(b), a.max(b))) {
            Some(&m) => {
                self.chain(a, m, out);
                self.chain(m, b, out);
            }
            None => out.push(a),
        }
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let cross = [
        b[1] * c[2] - b[2] * c[1],
        b[2] * c[0] - b[0] * c[2],
        b[0] * c[1] - b[1] * c[0],
    ];
    2.0 * dot(a, &cross).atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

/// Radii tried when looking for a ball whose boundary avoids the zeros of `g`.
pub fn default_radii() -> Vec<f64> {
    (0..=10).map(|k| (1u32 << k) as f64).collect()
}

/// One row of a radius sweep: the degree, or why it is undefined at that radius.
#[derive(Debug, Clone)]
pub struct RadiusProbe {
    pub radius: f64,
    pub outcome: std::result::Result<DegreeResult, Error>,
}

/// Degree on every radius; errors other than boundary zeros and under-sampling abort.
pub fn degree_sweep(map: &AveragedMap, radii: &[f64]) -> Result<Vec<RadiusProbe>> {
    let tol = map.margin_tol();
    radii
        .iter()
        .map(|&radius| {
            let outcome = degree_on_ball(map.dim(), radius, tol, |y| {
                Ok(map.eval(y).iter().copied().collect())
            });
            match outcome {
                Err(e @ (Error::BoundaryZero { .. } | Error::UnderSampled { .. })) => {
                    Ok(RadiusProbe {
                        radius,
                        outcome: Err(e),
                    })
                }
                Err(e) => Err(e),
                Ok(d) => Ok(RadiusProbe {
                    radius,
                    outcome: Ok(d),
                }),
            }
        })
        .collect()
}

/// `deg_B(g, B(0, R))` at the smallest radius from which the degree is defined
/// and constant up to the largest radius tried.
pub fn degree_of_g(map: &AveragedMap, radii: &[f64]) -> Result<DegreeResult> {
    let probes = degree_sweep(map, radii)?;
    if probes
        .iter()
        .all(|p| matches!(p.outcome, Err(Error::BoundaryZero { .. })))
    {
        return Err(Error::DegreeUndefined);
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let last = match probes.last().map(|p| &p.outcome) {
        Some(Ok(d)) => *d,
        _ => return Err(Error::NoZeroFreeRadius { r_max }),
    };
    let mut best = last;
    for p in probes.iter().rev() {
        match &p.outcome {
            Ok(d) if d.value == last.value => best = *d,
            _ => break,
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct IndexCheckConfig {
    /// Number of modes in the Galerkin space (raised to `μ + dim N` if smaller).
    pub galerkin_dim: usize,
    pub integrator: IntegratorConfig,
    pub epsilons: Vec<f64>,
    pub n_t: usize,
}

impl Default for IndexCheckConfig {
    fn default() -> Self {
        Self {
            galerkin_dim: 3,
            integrator: IntegratorConfig::default().with_steps(64),
            epsilons: vec![1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0],
            n_t: 64,
        }
    }
}

/// Both sides of `deg(I − Ψ_T, B) = (−1)^{μ+dim N} deg_B(g, B ∩ N)` on a Galerkin space.
#[derive(Debug, Clone)]
pub struct IndexCheck {
    pub lambda: f64,
    pub period: f64,
    pub galerkin_modes: Vec<usize>,
    pub radius: f64,
    pub deg_g: i32,
    pub mu_lambda: usize,
    pub dim_n: usize,
    pub d_k: usize,
    pub parity_mu_dim: i32,
    pub parity_dk: i32,
    /// `(ε, deg(I − Ψ_T))` for every ε of the sweep, ascending in ε.
    pub sweep: Vec<(f64, i32)>,
    /// Left-hand side at the smallest ε.
    pub lhs: i32,
    /// `(−1)^{μ+dim N} deg g`.
    pub rhs: i32,
    /// `(−1)^{d_k} deg g`.
    pub rhs_dk: i32,
}

impl IndexCheck {
    pub fn agrees(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn agrees_dk(&self) -> bool {
        self.lhs == self.rhs_dk
    }

    /// True when every ε of the sweep gives the same degree.
    pub fn stable(&self) -> bool {
        self.sweep.iter().all(|&(_, d)| d == self.lhs)
    }
}

pub fn index_formula_check(
    op: &SpectralOperator,
    nemytskii: &NemytskiiOperator,
    lambda: f64,
    cfg: &IndexCheckConfig,
) -> Result<IndexCheck> {
    let period = nemytskii.period();
    let kernel = op.kernel_data(lambda, None)?;
    let lambda = kernel.lambda;
    let mult = op.multiplicity_report(lambda, period)?;

    let map = AveragedMap::new(nemytskii, kernel.clone(), cfg.n_t)?;
    let deg_g = degree_of_g(&map, &default_radii())?;

    let needed = mult.mu_lambda + mult.dim_n;
    let target = cfg.galerkin_dim.max(needed);
    if target > 3 {
        return Err(Error::UnsupportedKernelDim(target));
    }
    let mut modes = kernel.modes.clone();
    modes.extend(
        (0..op.len())
            .filter(|k| !kernel.modes.contains(k))
            .take(target - kernel.dim()),
    );
    modes.sort_unstable();
    for k in (0..op.len()).filter(|k| !modes.contains(k)) {
        let multiplier = ((lambda - op.eigenvalues()[k]) * period).exp();
        if multiplier > 0.5 {
            return Err(Error::TailNotContracting {
                mode: k,
                multiplier,
            });
        }
    }

    let mut eps = cfg.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    let base = Propagator::galerkin(op, nemytskii, 1.0, lambda, cfg.integrator, modes.clone())?;
    let tol = map.margin_tol();
    let mut sweep = Vec::with_capacity(eps.len());
    for &e in &eps {
        let prop = base.with_epsilon(e);
        // Positive rescaling of each component leaves zeros and degree unchanged and
        // keeps the image of the sphere from being flattened by large multipliers.
        let scale: Vec<f64> = modes
            .iter()
            .map(|&k| {
                if kernel.modes.contains(&k) {
                    1.0 / e.abs().max(f64::MIN_POSITIVE)
                } else {
                    1.0 / (1.0 - ((lambda - op.eigenvalues()[k]) * period).exp()).abs()
                }
            })
            .collect();
        let phi = |c: &[f64]| -> Result<Vec<f64>> {
            let c = DVector::from_column_slice(c);
            let next = prop.translate_modal(&c)?;
            Ok((c - next).iter().zip(&scale).map(|(v, s)| v * s).collect())
        };
        let mut radius = deg_g.radius;
        let d = loop {
            match degree_on_ball(modes.len(), radius, tol, phi) {
                Err(Error::BoundaryZero { .. }) if radius < 1024.0 => radius *= 2.0,
                other => break other?,
            }
        };
        sweep.push((e, d.value));
    }
    let lhs = sweep
        .first()
        .map(|s| s.1)
        .ok_or_else(|| Error::InvalidArgument("index check needs at least one ε".into()))?;
    Ok(IndexCheck {
        lambda,
        period,
        galerkin_modes: modes,
        radius: deg_g.radius,
        deg_g: deg_g.value,
        mu_lambda: mult.mu_lambda,
        dim_n: mult.dim_n,
        d_k: mult.d_k,
        parity_mu_dim: mult.parity_mu_dim,
        parity_dk: mult.parity_dk,
        sweep,
        lhs,
        rhs: mult.parity_mu_dim * deg_g.value,
        rhs_dk: mult.parity_dk * deg_g.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearField;
    use crate::spectral::{BoundaryCondition, OperatorSpec};

    fn ok(v: Vec<f64>) -> Result<Vec<f64>> {
        Ok(v)
    }

    #[test]
    fn degree_1d_cases() {
        let d = brouwer_degree_1d(2.0, 1e-9, |x| ok(vec![x[0] - 0.5])).unwrap();
        assert_eq!(d.value, 1);
        let d = brouwer_degree_1d(2.0, 1e-9, |x| ok(vec![0.3 - x[0]])).unwrap();
        assert_eq!(d.value, -1);
        let d = brouwer_degree_1d(2.0, 1e-9, |x| ok(vec![x[0] * x[0] + 1.0])).unwrap();
        assert_eq!(d.value, 0);
        let e = brouwer_degree_1d(2.0, 1e-9, |x| ok(vec![x[0] - 2.0])).unwrap_err();
        assert!(matches!(e, Error::BoundaryZero { .. }));
    }

    #[test]
    fn degree_2d_of_powers() {
        // z ↦ z^k has degree k, z ↦ z̄^k degree −k.
        for k in -3i32..=3 {
            let d = brouwer_degree_2d(1.5, 1e-9, 16, |p| {
                let (r, th) = (p[0].hypot(p[1]), p[1].atan2(p[0]));
                let rk = r.powi(k.abs());
                ok(vec![rk * (k as f64 * th).cos(), rk * (k as f64 * th).sin()])
            })
            .unwrap();
            assert_eq!(d.value, k);
        }
        let d = brouwer_degree_2d(1.0, 1e-9, 8, |p| ok(vec![p[0] + 3.0, p[1]])).unwrap();
        assert_eq!(d.value, 0);
    }

    #[test]
    fn degree_2d_refines_fast_winding() {
        let d = brouwer_degree_2d(1.0, 1e-9, 64, |p| {
            let th = p[1].atan2(p[0]);
            ok(vec![(40.0 * th).cos(), (40.0 * th).sin()])
        })
        .unwrap();
        assert_eq!(d.value, 40);
        assert!(d.samples >= 128);
    }

    #[test]
    fn degree_3d_of_linear_maps() {
        let d = brouwer_degree_3d(1.0, 1e-9, |p| ok(p.to_vec())).unwrap();
        assert_eq!(d.value, 1);
        let d = brouwer_degree_3d(1.0, 1e-9, |p| ok(vec![-p[0], p[1], p[2]])).unwrap();
        assert_eq!(d.value, -1);
        let d = brouwer_degree_3d(2.0, 1e-9, |p| {
            ok(vec![-p[0], -3.0 * p[1], 0.1 * p[2] + 0.05])
        })
        .unwrap();
        assert_eq!(d.value, 1);
        let d = brouwer_degree_3d(1.0, 1e-9, |p| ok(vec![p[0] + 5.0, p[1], p[2]])).unwrap();
        assert_eq!(d.value, 0);
    }

    fn neumann(n: usize) -> SpectralOperator {
        SpectralOperator::build(&OperatorSpec::interval(BoundaryCondition::Neumann, PI, n)).unwrap()
    }

    #[test]
    fn averaged_map_neumann_atan() {
        let op = neumann(16);
        let nem = NemytskiiOperator::new(
            NonlinearField::catalog("atan", 2.0).unwrap(),
            op.grid().clone(),
        );
        let map = AveragedMap::new(&nem, op.kernel_data(0.0, None).unwrap(), 32).unwrap();
        let s = PI.sqrt();
        for c in [-3.0, -0.5, 0.0, 0.7, 10.0] {
            let g = map.eval(&[c])[0];
            assert!((g - 2.0 * s * (c / s).atan()).abs() < 1e-12, "c = {c}");
            let g0 = map.g0_scalar(c).unwrap();
            assert!((g0 - 2.0 * PI * c.atan()).abs() < 1e-12);
        }
        let d = degree_of_g(&map, &default_radii()).unwrap();
        assert_eq!((d.value, d.radius, d.method), (1, 1.0, DegreeMethod::Sign));
    }

    #[test]
    fn vanishing_map_has_undefined_degree() {
        let op = neumann(8);
        let f = NonlinearField::parse("sin(2*pi*t/T)*atan(y)", 2.0, 1.0, None, None, 1.0).unwrap();
        let nem = NemytskiiOperator::new(f, op.grid().clone());
        let map = AveragedMap::new(&nem, op.kernel_data(0.0, None).unwrap(), 32).unwrap();
        assert!(matches!(
            degree_of_g(&map, &default_radii()),
            Err(Error::DegreeUndefined)
        ));
    }

    #[test]
    fn degree_tracks_zero_location() {
        // Zeros at u ≡ 2000 (outside every ball) and u ≡ 400 (inside only B(0, 1024)).
        let op = neumann(8);
        let f = NonlinearField::parse("atan(y - 2000)", 2.0, 1.0, None, None, 1.0).unwrap();
        let nem = NemytskiiOperator::new(f, op.grid().clone());
        let map = AveragedMap::new(&nem, op.kernel_data(0.0, None).unwrap(), 16).unwrap();
        let d = degree_of_g(&map, &default_radii()).unwrap();
        assert_eq!(d.value, 0);
        let f = NonlinearField::parse("atan(y - 400)", 2.0, 1.0, None, None, 1.0).unwrap();
        let nem = NemytskiiOperator::new(f, op.grid().clone());
        let map = AveragedMap::new(&nem, op.kernel_data(0.0, None).unwrap(), 16).unwrap();
        let d = degree_of_g(&map, &default_radii()).unwrap();
        assert_eq!((d.value, d.radius), (1, 1024.0));
    }

    #[test]
    fn index_check_neumann() {
        let op = neumann(12);
        let nem = NemytskiiOperator::new(
            NonlinearField::catalog("atan", 1.0).unwrap(),
            op.grid().clone(),
        );
        let cfg = IndexCheckConfig {
            epsilons: vec![0.125, 1.0],
            ..Default::default()
        };
        let chk = index_formula_check(&op, &nem, 0.0, &cfg).unwrap();
        assert_eq!(chk.galerkin_modes, vec![0, 1, 2]);
        assert_eq!((chk.deg_g, chk.mu_lambda, chk.dim_n), (1, 0, 1));
        assert_eq!(chk.lhs, -1);
        assert!(chk.agrees() && chk.stable());
    }

    #[test]
    fn index_check_rejects_slow_tail() {
        let op = SpectralOperator::build(&OperatorSpec::interval(
            BoundaryCondition::Neumann,
            20.0,
            12,
        ))
        .unwrap();
        let nem = NemytskiiOperator::new(
            NonlinearField::catalog("atan", 1.0).unwrap(),
            op.grid().clone(),
        );
        let e = index_formula_check(&op, &nem, 0.0, &IndexCheckConfig::default()).unwrap_err();
        assert!(
            matches!(e, Error::TailNotContracting { mode: 3, .. }),
            "{e:?}"
        );
    }
}

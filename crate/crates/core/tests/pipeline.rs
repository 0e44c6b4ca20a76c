use std::f64::consts::PI;

use respo_core::periodic::{solve_periodic, verify_certificate};
use respo_core::resonance::{index_formula_check, IndexCheckConfig};
use respo_core::{
    BoundaryCondition, Coefficient, DVector, Expression, IntegratorConfig, NemytskiiOperator,
    NonlinearField, OperatorSpec, Propagator, SolverConfig, SpectralOperator,
};

fn divergence_form(n: usize) -> SpectralOperator {
    let coef = Coefficient::Expr(Expression::parse("1 + 0.5*sin(x)").unwrap());
    let spec = OperatorSpec::interval(BoundaryCondition::Dirichlet, PI, n).with_coefficient(coef);
    SpectralOperator::build(&spec).unwrap()
}

#[test]
fn index_formula_at_second_dirichlet_eigenvalue() {
    // μ = 1 and dim N = 1 while d_2 = 1: the two parities disagree here.
    let op = divergence_form(16);
    let nem = NemytskiiOperator::new(
        NonlinearField::catalog("atan", 1.0).unwrap(),
        op.grid().clone(),
    );
    let lambda = op.eigenvalue(2).unwrap();
    let cfg = IndexCheckConfig {
        epsilons: vec![1.0 / 16.0, 0.25, 1.0],
        ..Default::default()
    };
    let chk = index_formula_check(&op, &nem, lambda, &cfg).unwrap();
    assert_eq!((chk.mu_lambda, chk.dim_n, chk.d_k), (1, 1, 1));
    assert_eq!(chk.deg_g, 1);
    assert_eq!(chk.lhs, 1);
    assert!(chk.agrees());
    assert!(!chk.agrees_dk());
}

#[test]
fn index_formula_with_double_kernel() {
    let spec = OperatorSpec::rectangle(BoundaryCondition::Dirichlet, [1.0, 1.0], [5, 5]);
    let op = SpectralOperator::build(&spec).unwrap();
    let nem = NemytskiiOperator::new(
        NonlinearField::catalog("-atan", 1.0).unwrap(),
        op.grid().clone(),
    );
    let lambda = op.eigenvalue(2).unwrap();
    let cfg = IndexCheckConfig {
        epsilons: vec![0.125],
        ..Default::default()
    };
    let chk = index_formula_check(&op, &nem, lambda, &cfg).unwrap();
    assert_eq!((chk.mu_lambda, chk.dim_n), (1, 2));
    // −atan on a two-dimensional kernel: g ≈ −c·ϕ(|c|), degree (+1)·(−1)² = 1.
    assert_eq!(chk.deg_g, 1);
    assert_eq!(chk.lhs, chk.rhs);
    assert_eq!(chk.rhs, -1);
}

#[test]
fn time_dependent_forcing_solution_matches_refined_fixed_point() {
    let op = SpectralOperator::build(&OperatorSpec::interval(BoundaryCondition::Neumann, PI, 12))
        .unwrap();
    let f = NonlinearField::parse(
        "0.25 - atan(y) + 0.5*cos(2*pi*t/T)*cos(x)",
        2.5,
        1.0,
        Some("0.25 - pi/2 + 0.5*cos(2*pi*t/T)*cos(x)"),
        Some("0.25 + pi/2 + 0.5*cos(2*pi*t/T)*cos(x)"),
        1.0,
    )
    .unwrap();
    let nem = NemytskiiOperator::new(f, op.grid().clone());
    let cfg = SolverConfig::default();
    let cert = solve_periodic(&op, &nem, 0.0, &cfg).unwrap();
    assert!(cert.residual <= 1e-8, "{}", cert.residual);

    // Oracle: plain iteration of the 4× resolution map, which attracts since g is decreasing.
    let fine = Propagator::new(&op, &nem, 1.0, 0.0, cfg.integrator.with_steps(1024)).unwrap();
    let mut x = cert.state.clone();
    for _ in 0..60 {
        x = fine.translate(&x).unwrap();
    }
    let gap = op.norm(&(&x - &cert.state));
    assert!(gap < 1e-4, "distance to refined orbit {gap}");

    // At 256 steps the doubled-resolution map differs from the solver's map by O(h²) ≈ 1e−6,
    // so the 10×tol re-check revokes the certificate; at 2048 steps it passes.
    let v = verify_certificate(&op, &nem, &cert, cfg.integrator, cfg.n_t).unwrap();
    assert!(!v.passed());
    assert!(v.return_defect > 1e-7 && v.return_defect < 1e-5, "{v:?}");

    let fine_cfg = SolverConfig {
        integrator: cfg.integrator.with_steps(2048),
        ..cfg
    };
    let cert = solve_periodic(&op, &nem, 0.0, &fine_cfg).unwrap();
    let v = verify_certificate(&op, &nem, &cert, fine_cfg.integrator, fine_cfg.n_t).unwrap();
    assert!(v.passed(), "{v:?}");
}

#[test]
fn semigroup_identity_on_random_data() {
    let op = divergence_form(20);
    let x = DVector::from_fn(20, |i, _| ((i * 7 % 11) as f64 - 5.0) / 3.0);
    let lam = op.eigenvalue(3).unwrap();
    let half = op.semigroup_apply(0.4, lam, &x).unwrap();
    let twice = op.semigroup_apply(0.4, lam, &half).unwrap();
    let once = op.semigroup_apply(0.8, lam, &x).unwrap();
    assert!(op.norm(&(twice - &once)) <= 1e-12 * (1.0 + op.norm(&once)));
    let m = op.semigroup_matrix_expm(0.8, lam).unwrap();
    assert!(op.norm(&(&m * &x - &once)) <= 1e-10 * (1.0 + op.norm(&once)));
    let integ = IntegratorConfig::default();
    let nem = NemytskiiOperator::new(
        NonlinearField::catalog("atan", 0.8).unwrap(),
        op.grid().clone(),
    );
    let p = Propagator::new(&op, &nem, 0.0, lam, integ).unwrap();
    assert!(op.norm(&(p.translate(&x).unwrap() - &once)) <= 1e-12 * (1.0 + op.norm(&once)));
}

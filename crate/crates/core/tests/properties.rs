use std::f64::consts::PI;

use proptest::prelude::*;
use respo_core::resonance::{brouwer_degree_2d, brouwer_degree_3d};
use respo_core::{
    AveragedMap, BoundaryCondition, Coefficient, DMatrix, DVector, Expression, NemytskiiOperator,
    NonlinearField, OperatorSpec, SpectralOperator,
};

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Dirichlet),
        Just(BoundaryCondition::Neumann)
    ]
}

fn operator(bc: BoundaryCondition, n: usize, amp: f64) -> SpectralOperator {
    let coef = Coefficient::Expr(Expression::parse(&format!("1 + {amp:?}*cos(2*x)")).unwrap());
    SpectralOperator::build(&OperatorSpec::interval(bc, PI, n).with_coefficient(coef)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_laplacian_spectrum(n in 3usize..40, neumann in any::<bool>()) {
        let bc = if neumann { BoundaryCondition::Neumann } else { BoundaryCondition::Dirichlet };
        let op = SpectralOperator::build(&OperatorSpec::interval(bc, PI, n)).unwrap();
        for (k, &l) in op.eigenvalues().iter().enumerate() {
            let exact = match bc {
                BoundaryCondition::Dirichlet => {
                    let h = PI / (n + 1) as f64;
                    2.0 / (h * h) * (1.0 - ((k + 1) as f64 * PI / (n + 1) as f64).cos())
                }
                BoundaryCondition::Neumann => {
                    let h = PI / n as f64;
                    4.0 / (h * h) * (k as f64 * PI / (2 * n) as f64).sin().powi(2)
                }
            };
            prop_assert!((l - exact).abs() <= 1e-10 * (1.0 + exact));
        }
    }

    #[test]
    fn projector_is_orthogonal(bc in bc_strategy(), n in 6usize..24, amp in 0.0f64..0.8, k in 1usize..4) {
        let op = operator(bc, n, amp);
        let kernel = op.kernel_data(op.eigenvalue(k).unwrap(), None).unwrap();
        let p = &kernel.projector;
        prop_assert!((p * p - p).abs().max() <= 1e-12);
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(op.grid().weights()));
        let wp = &w * p;
        prop_assert!((&wp - wp.transpose()).abs().max() <= 1e-13);
        let v = op.eigenvectors().column(kernel.modes[0]).clone_owned();
        prop_assert!(op.norm(&(kernel.project(&v) - &v)) <= 1e-12);
    }

    #[test]
    fn semigroup_property(bc in bc_strategy(), n in 4usize..20, amp in 0.0f64..0.8, t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let op = operator(bc, n, amp);
        let lam = op.eigenvalue(1).unwrap();
        let x = DVector::from_fn(n, |i, _| (1.3 * i as f64).sin());
        let a = op.semigroup_apply(t + s, lam, &x).unwrap();
        let b = op.semigroup_apply(t, lam, &op.semigroup_apply(s, lam, &x).unwrap()).unwrap();
        prop_assert!(op.norm(&(a - b)) <= 1e-12 * (1.0 + op.norm(&x)));
    }

    #[test]
    fn translation_kernel_matches_generator_kernel(bc in bc_strategy(), n in 4usize..20, amp in 0.0f64..0.8, k in 1usize..4, t in 0.3f64..3.0) {
        let op = operator(bc, n, amp);
        let lam = op.eigenvalue(k).unwrap();
        let rep = op.verify_resonance_conditions(lam, t).unwrap();
        prop_assert!(rep.a1_holds && rep.a3_holds, "{:?}", rep);
        let mult = op.multiplicity_report(lam, t).unwrap();
        prop_assert_eq!(mult.mu_lambda, mult.d_k);
        let det = op.restricted_det(lam, t).unwrap();
        prop_assert_eq!(det.negative_count, mult.mu_lambda);
        prop_assert_eq!(det.sign, if mult.mu_lambda.is_multiple_of(2) { 1 } else { -1 });
    }

    #[test]
    fn linear_degrees_are_determinant_signs(m in proptest::collection::vec(-2.0f64..2.0, 9)) {
        let a3 = DMatrix::from_row_slice(3, 3, &m);
        let det3 = a3.determinant();
        prop_assume!(det3.abs() > 0.05);
        let d = brouwer_degree_3d(1.0, 1e-12, |p| Ok((&a3 * DVector::from_column_slice(p)).iter().copied().collect())).unwrap();
        prop_assert_eq!(d.value, det3.signum() as i32);
        let a2 = DMatrix::from_row_slice(2, 2, &m[..4]);
        let det2 = a2.determinant();
        prop_assume!(det2.abs() > 0.05);
        let d = brouwer_degree_2d(1.0, 1e-12, 16, |p| Ok((&a2 * DVector::from_column_slice(p)).iter().copied().collect())).unwrap();
        prop_assert_eq!(d.value, det2.signum() as i32);
    }

    #[test]
    fn odd_field_gives_odd_averaged_map(c in -50.0f64..50.0, n in 4usize..16, period in 0.2f64..3.0) {
        let op = SpectralOperator::build(&OperatorSpec::interval(BoundaryCondition::Neumann, PI, n)).unwrap();
        let f = NonlinearField::parse("atan(y)*(1 + 0.5*cos(2*pi*t/T))", 2.5, 1.5, None, None, period).unwrap();
        let nem = NemytskiiOperator::new(f, op.grid().clone());
        let map = AveragedMap::new(&nem, op.kernel_data(0.0, None).unwrap(), 16).unwrap();
        let a = map.eval(&[c])[0];
        let b = map.eval(&[-c])[0];
        prop_assert!((a + b).abs() <= 1e-13 * (1.0 + a.abs()));
        prop_assert_eq!(a.signum(), if c == 0.0 { a.signum() } else { c.signum() });
    }

    #[test]
    fn radial_map_in_2d_has_degree_one(p in 0.2f64..4.0, r in 0.5f64..8.0) {
        let d = brouwer_degree_2d(r, 1e-12, 16, |y| {
            let phi = 1.0 + (y[0] * y[0] + y[1] * y[1]).powf(p / 2.0);
            Ok(vec![phi * y[0], phi * y[1]])
        })
        .unwrap();
        prop_assert_eq!(d.value, 1);
    }
}

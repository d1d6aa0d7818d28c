use accel_admm::linalg::Matrix;
use accel_admm::model::{check_saddle, problem_from_json, problem_to_json, ProblemInstance};
use accel_admm::problems::*;

fn declared_vs_estimated(inst: &ProblemInstance<f64>) {
    for (block, declared) in [(inst.x_block(), inst.l_f2()), (inst.y_block(), inst.l_g2())] {
        let (c, _) = block
            .smooth_term
            .least_squares_data()
            .expect("generated smooth terms are least squares");
        let hessian: Matrix<f64> = c.gram();
        let est = hessian.spectral_norm_sq(1e-14, 1_000_000).unwrap().sqrt();
        assert!(
            (est - declared).abs() <= 1e-8 * declared,
            "{est} vs {declared}"
        );
    }
}

#[test]
fn every_kind_passes_the_saddle_check() {
    let specs = [
        GeneratorSpec::new(ProblemKind::Quadratic, 50, 50, 20, 1),
        GeneratorSpec::new(ProblemKind::Quadratic, 50, 50, 20, 2),
        GeneratorSpec::new(ProblemKind::Quadratic, 50, 50, 20, 3),
        GeneratorSpec::new(ProblemKind::LassoConstrained, 20, 15, 8, 1),
        GeneratorSpec::new(ProblemKind::ElasticNetSharing, 15, 15, 6, 1),
        GeneratorSpec::scalar_p0(),
    ];
    for spec in &specs {
        let (inst, r) = generate::<f64>(spec).unwrap();
        let report = check_saddle(&inst, &r, 1000, spec.seed + 100).unwrap();
        assert!(report.is_clean(), "{spec:?}: {:?}", &report.violations[..1]);
        assert!(inst.feasibility(&r.x_star, &r.y_star).unwrap() <= 1e-8);
    }
}

#[test]
fn declared_lipschitz_constants_match_hessians() {
    for kind in [
        ProblemKind::Quadratic,
        ProblemKind::LassoConstrained,
        ProblemKind::ElasticNetSharing,
    ] {
        let mut spec = GeneratorSpec::new(kind, 12, 10, 5, 4);
        spec.l_f2 = 2.5;
        spec.l_g2 = 0.7;
        spec.conditioning = 100.0;
        let (inst, _) = generate::<f64>(&spec).unwrap();
        declared_vs_estimated(&inst);
        assert!((inst.l_f2() - 2.5).abs() < 1e-12 && (inst.l_g2() - 0.7).abs() < 1e-12);
        assert_eq!(inst.mu_g(), spec.mu_g);
    }
}

#[test]
fn reference_solver_agrees_with_kkt() {
    for seed in 1..=3 {
        let (inst, kkt) = generate::<f64>(&GeneratorSpec::new(
            ProblemKind::Quadratic,
            50,
            50,
            20,
            seed,
        ))
        .unwrap();
        let tol = 1e-11;
        let r = reference_solve(&inst, tol).unwrap();
        for (a, b) in [
            (&r.x_star, &kkt.x_star),
            (&r.y_star, &kkt.y_star),
            (&r.lambda_star, &kkt.lambda_star),
        ] {
            assert!(
                a.dist(b) <= 10.0 * tol * (1.0 + b.norm()),
                "seed {seed}: {}",
                a.dist(b)
            );
        }
    }
}

#[test]
fn p0_reference_solve() {
    let inst = scalar_p0::<f64>();
    let r = reference_solve(&inst, 1e-11).unwrap();
    assert!((r.x_star[0] - 1.0).abs() < 1e-10 && (r.y_star[0] - 1.0).abs() < 1e-10);
    assert!((r.lambda_star[0] + 1.0).abs() < 1e-10);
    assert!(reference_solve(&inst, 0.0).is_err());
}

#[test]
fn generation_is_deterministic_and_serializable() {
    let spec = GeneratorSpec::new(ProblemKind::LassoConstrained, 9, 7, 4, 12);
    let (a, ra) = generate::<f64>(&spec).unwrap();
    let (b, rb) = generate::<f64>(&spec).unwrap();
    assert_eq!(ra, rb);
    let text = problem_to_json(&a, Some(&ra)).unwrap();
    assert_eq!(text, problem_to_json(&b, Some(&rb)).unwrap());
    let (c, rc) = problem_from_json::<f64>(&text).unwrap();
    assert_eq!(rc.as_ref(), Some(&ra));
    assert_eq!(c.a(), a.a());
    assert_eq!(c.rhs(), a.rhs());
    let x = ra.x_star.clone();
    assert_eq!(c.x_block().value(&x), a.x_block().value(&x));
}

#[test]
fn oversized_specs_are_rejected() {
    assert!(generate::<f64>(&GeneratorSpec::new(ProblemKind::Quadratic, 3, 3, 7, 0)).is_err());
    let mut spec = GeneratorSpec::new(ProblemKind::Quadratic, 5, 5, 3, 0);
    spec.mu_g = 0.0;
    assert!(generate::<f64>(&spec).is_err());
}

use std::f64::consts::PI;

use plap_core::exponents::ExponentParams;
use plap_core::potential::{two_sided_fit, wolff, RadialMeasure};
use plap_core::radial::{make_grid, GradingKind, RadialFunction, WeightSpec};
use plap_core::solver::{comparison_check, solve_semilinear, GForm, Nonlinearity, ProblemSpec, SolverConfig};
use plap_core::verify::{
    global_certificate, local_estimate_check, reverse_holder_chain, signed_part_certificates, structure_audit,
};

#[test]
fn semilinear_solution_through_the_verifier() {
    let spec = ProblemSpec::prototype(2.0, 3, 1.0, 1.0, Nonlinearity::new(GForm::Power, 0.3, 3.0)).unwrap();
    let cfg = SolverConfig::new(make_grid(200.0, 4096, GradingKind::Geometric).unwrap());
    let report = solve_semilinear(&spec, &cfg).unwrap();
    assert!(report.converged && report.positivity, "{:?}", report.residual_history);
    let u = report.u.clone();

    let envelope = report.envelope.as_ref().unwrap();
    assert!(comparison_check(&u.abs(), envelope, 1e-6).unwrap().is_empty());

    let audit = structure_audit(&spec, &u).unwrap();
    assert!(audit.finite && audit.q_chosen > 3.0);

    let params = ExponentParams::critical(2.0, 3).unwrap();
    let cert = global_certificate(&u, &params).unwrap();
    assert!(cert.certified_by(cert.c_min));
    let (plus, minus) = signed_part_certificates(&u, &params).unwrap();
    assert_eq!(plus.c_min, cert.c_min);
    assert_eq!(minus.c_min, 0.0);

    let chain = reverse_holder_chain(&u, &params, 5).unwrap();
    assert!(chain.bounded);
    assert!(chain.norms.windows(2).all(|w| w[0] > 0.0 && w[1] > 0.0));

    let local = local_estimate_check(&u, 0.0, 1.0, &params).unwrap();
    assert!(local.sup_inner == u.max_abs() && local.ratio.is_finite());
}

/// Name, density, exact value and optional tail exponent.
type Density = (&'static str, fn(f64) -> f64, f64, Option<f64>);

/// At p = 2 and N = 3, `W(0, inf) = int |y|^{-1} dmu = 4 pi int rho w(rho) d rho`.
#[test]
fn wolff_at_origin_matches_newtonian_moments() {
    let grid = make_grid(60.0, 8192, GradingKind::Geometric).unwrap();
    let cases: [Density; 3] = [
        ("gaussian", |r| (-r * r).exp(), 2.0 * PI, None),
        ("exponential", |r| (-r).exp(), 4.0 * PI, None),
        ("algebraic", |r| (1.0 + r * r).powi(-3), PI, Some(6.0)),
    ];
    for (name, f, exact, tail) in cases {
        let mut density = RadialFunction::from_fn(grid.clone(), f).unwrap();
        if let Some(gamma) = tail {
            density = density.with_matched_tail(gamma).unwrap();
        }
        let m = RadialMeasure::new(density, 3).unwrap();
        let w = wolff(&m, 0.0, f64::INFINITY, 2.0, 3).unwrap();
        assert!((w.value - exact).abs() < 1e-4 * exact, "{name}: {} vs {exact}", w.value);
    }
}

#[test]
fn two_sided_ratios_for_the_prototype_measure() {
    for (p, n) in [(2.0, 3), (3.0, 4)] {
        let grid = make_grid(100.0, 2048, GradingKind::Geometric).unwrap();
        let density = WeightSpec::new(1.0, 1.0).unwrap().profile(&grid, n).unwrap();
        let v = plap_core::solver::solve_radial_rhs(&density, p, n, &grid).unwrap().u;
        let m = RadialMeasure::new(density, n).unwrap();
        let fit = two_sided_fit(&v, &m, p, n, &[0.1, 1.0, 10.0, 50.0]).unwrap();
        assert!(fit.c1 > 0.0 && fit.c1 <= fit.c2 && fit.c2 / fit.c1 < 10.0, "{fit:?}");
    }
}

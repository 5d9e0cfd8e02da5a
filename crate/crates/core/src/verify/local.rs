use serde::{Deserialize, Serialize};

use crate::error::{domain, fit, Error, Result};
use crate::exponents::{audit_exponent_choice, critical_sobolev, theta0, ExponentParams};
use crate::potential::{mu_ball, RadialMeasure};
use crate::quad::ball_volume;
use crate::radial::{lr_norm, RadialFunction};
use crate::solver::{Domain, GForm, ProblemSpec};

/// Supremum on `B(x0, r)` against the `beta`-mean on `B(x0, 2r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimateReport {
    pub x0_radius: f64,
    pub r: f64,
    pub sup_inner: f64,
    pub mean_norm: f64,
    /// `sup_inner / max{mean_norm, mean_norm^theta0}`.
    pub ratio: f64,
    /// `1 - N/q`, when `q` is part of the parameters.
    pub delta1: Option<f64>,
    /// `1 - N/beta`.
    pub delta2: f64,
}

/// Local ratio for the ball of radius `r` whose center lies at distance `x0_radius` from the origin.
pub fn local_estimate_check(
    u: &RadialFunction,
    x0_radius: f64,
    r: f64,
    params: &ExponentParams,
) -> Result<LocalEstimateReport> {
    params.validate()?;
    if !(r > 0.0) || !(x0_radius >= 0.0) {
        return domain(format!("need r > 0 and x0 >= 0 (r = {r}, x0 = {x0_radius})"));
    }
    let r_max = u.grid().r_max();
    if x0_radius + 2.0 * r > r_max {
        return Err(Error::Grid(format!("ball B({x0_radius}, {}) leaves the grid [0, {r_max}]", 2.0 * r)));
    }
    let (lo, hi) = ((x0_radius - r).max(0.0), x0_radius + r);
    let sup_inner = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(&x, _)| x >= lo && x <= hi)
        .fold(u.eval(lo).abs().max(u.eval(hi).abs()), |m, (_, v)| m.max(v.abs()));
    let n = params.n;
    let beta = params.beta;
    let density = u.abs().without_tail().map(|_, v| v.powf(beta), None)?;
    let measure = RadialMeasure::new(density, n)?;
    let mass = mu_ball(&measure, x0_radius, 2.0 * r)?;
    let mean_norm = (mass / (ball_volume(n) * (2.0 * r).powi(n as i32))).powf(1.0 / beta);
    let base = mean_norm.max(mean_norm.powf(theta0(params)?));
    let ratio = if sup_inner == 0.0 { 0.0 } else { sup_inner / base };
    let nf = f64::from(n);
    Ok(LocalEstimateReport {
        x0_radius,
        r,
        sup_inner,
        mean_norm,
        ratio,
        delta1: params.q.map(|q| 1.0 - nf / q),
        delta2: 1.0 - nf / beta,
    })
}

/// Coefficients of the structure condition satisfied by `a(x) g(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureAudit {
    pub q_chosen: f64,
    /// `|b_2|_{q/p}`.
    pub b2_norm: f64,
    /// `(|b_3|_{beta/(p-1)}, |b_3|_inf)` with `beta = p*`.
    pub b3_norms: (f64, f64),
    /// `(|a_1|, |a_2|)`, both zero for this operator.
    pub a_norms: (f64, f64),
    pub finite: bool,
}

/// `(b_2, b_3, q)` with `|a g(u)| <= b_2 |u|^{p-1} + b_3`.
///
/// For `p < r < p*` this is `b_2 = c_g |a| |u|^{r-p}`, `b_3 = c_g |a|` and
/// `(r - p) q / p = p*`. Otherwise `|g|` is bounded by a constant multiple of
/// `1 + |s|^{p-1}` and `q = 2N`.
pub(crate) fn structure_coefficients(
    spec: &ProblemSpec,
    u: &RadialFunction,
) -> Result<(RadialFunction, RadialFunction, f64)> {
    let (p, n) = (spec.p, spec.n);
    let nf = f64::from(n);
    let g = spec.g;
    let r = g.r_growth;
    let abs_a = |x: f64| spec.a.weight.eval(x, n);
    let whole = spec.domain == Domain::WholeSpace;
    let a_gamma = nf + spec.a.weight.alpha;
    let with_tail = |f: RadialFunction, gamma: f64| if whole { f.with_matched_tail(gamma) } else { Ok(f.without_tail()) };
    let zero = |_: f64, _: f64| 0.0;
    let (b2, b3, q) = match g.form {
        GForm::Power if r > p => {
            let q = audit_exponent_choice(p, nf, r)?;
            let s = g.arg_scale.powf(r - 1.0);
            let u_gamma = u.tail().map_or(0.0, |t| t.gamma);
            let b2 = u.map(|x, v| g.c_g * s * abs_a(x) * v.abs().powf(r - p), None)?;
            let b2 = with_tail(b2, a_gamma + (r - p) * u_gamma)?;
            let b3 = with_tail(u.map(|x, _| g.c_g * abs_a(x), None)?, a_gamma)?;
            (b2, b3, q)
        }
        GForm::Power => {
            // |s|^{r-1} <= 1 + |s|^{p-1}
            let s = g.arg_scale.powf(p - 1.0);
            let b2 = with_tail(u.map(|x, _| g.c_g * s * abs_a(x), None)?, a_gamma)?;
            let b3 = with_tail(u.map(|x, _| 2.0 * g.c_g * abs_a(x), None)?, a_gamma)?;
            (b2, b3, 2.0 * nf)
        }
        GForm::BoundedPower => {
            let b3 = with_tail(u.map(|x, _| 2.0 * g.c_g * abs_a(x), None)?, a_gamma)?;
            (u.map(zero, None)?, b3, 2.0 * nf)
        }
        GForm::Constant => {
            let b3 = with_tail(u.map(|x, _| g.c_g * abs_a(x), None)?, a_gamma)?;
            (u.map(zero, None)?, b3, 2.0 * nf)
        }
    };
    Ok((b2, b3, q))
}

/// Norms of the structure coefficients of `spec` along the profile `u`.
pub fn structure_audit(spec: &ProblemSpec, u: &RadialFunction) -> Result<StructureAudit> {
    spec.validate()?;
    let (p, n) = (spec.p, spec.n);
    let beta = critical_sobolev(p, n)?;
    let (b2, b3, q_chosen) = structure_coefficients(spec, u)?;
    let b2_norm = lr_norm(&b2, q_chosen / p, n)?.value;
    let b3_norms = (lr_norm(&b3, beta / (p - 1.0), n)?.value, lr_norm(&b3, f64::INFINITY, n)?.value);
    let finite = b2_norm.is_finite() && b3_norms.0.is_finite() && b3_norms.1.is_finite();
    if !finite {
        return fit("structure coefficient norms are not finite");
    }
    Ok(StructureAudit { q_chosen, b2_norm, b3_norms, a_norms: (0.0, 0.0), finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{gauss, sphere_area};
    use crate::radial::{make_grid, GradingKind};
    use crate::solver::{solve_semilinear, Nonlinearity, SolverConfig};

    fn bump() -> RadialFunction {
        let grid = make_grid(20.0, 2048, GradingKind::Geometric).unwrap();
        RadialFunction::from_fn(grid, |r| 3.0 / (1.0 + r * r)).unwrap().with_matched_tail(2.0).unwrap()
    }

    #[test]
    fn constants_have_ratio_at_most_one() {
        let grid = make_grid(10.0, 256, GradingKind::Uniform).unwrap();
        let params = ExponentParams::critical(2.0, 3).unwrap();
        for c in [0.01, 0.5, 1.0, 7.0] {
            let u = RadialFunction::from_fn(grid.clone(), |_| c).unwrap();
            for x0 in [0.0, 2.5] {
                let rep = local_estimate_check(&u, x0, 2.0, &params).unwrap();
                assert!((rep.mean_norm - c).abs() < 1e-10 * c, "{} {c}", rep.mean_norm);
                let expected = c / c.max(c.powf(theta0(&params).unwrap()));
                assert!((rep.ratio - expected).abs() < 1e-9);
                assert!(rep.ratio <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn centered_ball_matches_radial_integral() {
        let u = bump();
        let params = ExponentParams::new(2.0, 3, 4.0).unwrap().with_q(5.0).unwrap();
        let rep = local_estimate_check(&u, 0.0, 1.5, &params).unwrap();
        let x = u.grid().nodes();
        let v = u.values();
        let mut integral = 0.0;
        for j in 0..x.len() - 1 {
            let (a, b) = (x[j], x[j + 1].min(3.0));
            if a >= 3.0 {
                break;
            }
            integral += gauss(12, a, b, |t| {
                let (da, db) = (v[j].abs().powi(4), v[j + 1].abs().powi(4));
                (da + (db - da) * (t - x[j]) / (x[j + 1] - x[j])) * t * t
            });
        }
        let mean = (sphere_area(3) * integral / (ball_volume(3) * 27.0)).powf(0.25);
        assert!((rep.mean_norm - mean).abs() < 1e-8 * mean);
        assert_eq!(rep.sup_inner, 3.0);
        assert_eq!(rep.delta1, Some(0.4));
        assert!((rep.delta2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ball_leaving_grid() {
        let params = ExponentParams::critical(2.0, 3).unwrap();
        assert!(matches!(local_estimate_check(&bump(), 15.0, 3.0, &params), Err(Error::Grid(_))));
    }

    #[test]
    fn ratios_over_doubling_radii() {
        let spec = ProblemSpec::prototype(2.0, 3, 1.0, 1.0, Nonlinearity::new(GForm::Power, 0.5, 4.0)).unwrap();
        let cfg = SolverConfig::new(make_grid(100.0, 2048, GradingKind::Geometric).unwrap());
        let u = solve_semilinear(&spec, &cfg).unwrap().u;
        let params = ExponentParams::critical(2.0, 3).unwrap();
        for x0 in [0.0, 3.0] {
            for r in [1.0, 2.0, 4.0] {
                let rep = local_estimate_check(&u, x0, r, &params).unwrap();
                assert!(rep.ratio.is_finite() && rep.ratio > 0.0 && rep.ratio < 1e3, "{rep:?}");
            }
        }
    }

    #[test]
    fn audit_examples() {
        let g = Nonlinearity::new(GForm::Power, 0.5, 4.0);
        let spec = ProblemSpec::prototype(2.0, 3, 1.0, 1.0, g).unwrap();
        let grid = make_grid(100.0, 2048, GradingKind::Geometric).unwrap();
        let zero = RadialFunction::zero(grid.clone());
        let audit = structure_audit(&spec, &zero).unwrap();
        assert_eq!(audit.q_chosen, 6.0);
        assert_eq!(audit.b2_norm, 0.0);
        assert!(audit.finite);
        let u = solve_semilinear(&spec, &SolverConfig::new(grid)).unwrap().u;
        let audit = structure_audit(&spec, &u).unwrap();
        assert!(audit.finite && audit.b2_norm > 0.0);
        // b_3 = c_g w; its sup is c_g c at the origin
        assert!((audit.b3_norms.1 - 0.5).abs() < 1e-12);
        assert_eq!(audit.a_norms, (0.0, 0.0));
    }

    #[test]
    fn structure_bound_holds_nodewise() {
        let grid = make_grid(50.0, 1024, GradingKind::Geometric).unwrap();
        let u = RadialFunction::from_fn(grid, |r| 2.0 * (-r).exp()).unwrap();
        for (form, r) in [(GForm::Power, 1.5), (GForm::Power, 2.0), (GForm::Power, 4.0), (GForm::BoundedPower, 3.0)] {
            let mut spec = ProblemSpec::prototype(2.0, 3, 1.0, 2.0, Nonlinearity::new(form, 0.7, r)).unwrap();
            spec.g.arg_scale = 0.3;
            let (b2, b3, q) = structure_coefficients(&spec, &u).unwrap();
            assert!(q > 3.0);
            for (i, &x) in u.grid().nodes().iter().enumerate() {
                let v = u.values()[i];
                let lhs = (spec.a.eval(x, 3) * spec.g.eval(v)).abs();
                let rhs = b2.values()[i] * v.abs() + b3.values()[i];
                assert!(lhs <= rhs * (1.0 + 1e-12), "{form:?} {r} at {x}: {lhs} > {rhs}");
            }
        }
    }
}

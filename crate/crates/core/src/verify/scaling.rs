use serde::{Deserialize, Serialize};

use super::certificate::{global_certificate, BoundCertificate};
use super::local::structure_coefficients;
use crate::error::{domain, fit, Result};
use crate::exponents::{critical_sobolev, ExponentParams};
use crate::quad::linear_fit;
use crate::radial::{lr_norm, make_grid, GradingKind, RadialFunction};
use crate::solver::{solve_ball_dirichlet, weak_residual, ProblemSpec};

/// `|f|_{beta/(p-1)} + |f|_inf`.
fn b3_norm(b3: &RadialFunction, beta: f64, p: f64, n: u32) -> Result<f64> {
    let a = lr_norm(b3, beta / (p - 1.0), n)?.value;
    let b = lr_norm(b3, f64::INFINITY, n)?.value;
    if !(a.is_finite() && b.is_finite()) {
        return fit("coefficient norms are not finite");
    }
    Ok(a + b)
}

/// Result of rescaling a solution `u` to `t u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub t: f64,
    /// Residual of `u` for the original data.
    pub original_residual: f64,
    /// Residual of `t u` for the transformed data.
    pub residual: f64,
    /// `t^{p-1} max(original_residual, residual_tol)`.
    pub residual_bound: f64,
    pub residual_ok: bool,
    pub a2_norm: f64,
    pub b3_norm: f64,
    /// `t^{p-1} b3_norm`.
    pub transformed_b3_norm: f64,
    /// `max{1, ||a_2||^{1/p}, ||b_3||^{1/(p-1)}}`.
    pub factor: f64,
    /// Certificate of `t u`.
    pub certificate: BoundCertificate,
}

impl ScalingReport {
    /// The choice of `t` that normalizes the data norms to at most 1.
    pub fn normalizing_t(&self) -> f64 {
        1.0 / self.factor
    }
}

/// Rescales a solution and its data: `v = t u` solves the problem with
/// `c_g -> t^{p-1} c_g` and `g` evaluated at `v / t`.
pub fn scaling_refinement_check(
    spec: &ProblemSpec,
    u: &RadialFunction,
    t: f64,
    residual_tol: f64,
) -> Result<ScalingReport> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("scaling factor must be positive (t = {t})"));
    }
    spec.validate()?;
    let p = spec.p;
    let params = ExponentParams::critical(p, spec.n)?;
    let mut transformed = *spec;
    transformed.g.c_g *= t.powf(p - 1.0);
    transformed.g.arg_scale /= t;
    let v = u.scaled(t);
    let original_residual = weak_residual(u, spec)?;
    let residual = weak_residual(&v, &transformed)?;
    let residual_bound = t.powf(p - 1.0) * original_residual.max(residual_tol);
    let (_, b3, _) = structure_coefficients(spec, u)?;
    let b3_norm = b3_norm(&b3, params.beta, p, spec.n)?;
    let a2_norm = 0.0f64;
    let factor = 1f64.max(a2_norm.powf(1.0 / p)).max(b3_norm.powf(1.0 / (p - 1.0)));
    let mut certificate = global_certificate(&v, &params)?;
    certificate.family_id = format!("scaled-t{t}");
    Ok(ScalingReport {
        t,
        original_residual,
        residual,
        residual_bound,
        residual_ok: residual <= residual_bound * (1.0 + 1e-6) + 1e-14,
        a2_norm,
        b3_norm,
        transformed_b3_norm: t.powf(p - 1.0) * b3_norm,
        factor,
        certificate,
    })
}

/// One Dirichlet problem `-Delta_p u = h` on `B_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallProblem {
    pub h: RadialFunction,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub c: f64,
    pub theta2: f64,
    /// `(D_j, |u_j|_inf)` sorted by `D_j`, zero members left out.
    pub members: Vec<(f64, f64)>,
    pub rms_log_error: f64,
}

/// Fits `|u_j|_inf <= C D_j^theta2` with `D_j = 1 + ||b_3||^{1/(p-1)}` and `b_3 = |h_j|`.
///
/// The slope is the least-squares slope in log-log coordinates; `C` is the
/// smallest constant for which every member lies under the fitted power.
pub fn apriori_ball_check(p: f64, n: u32, family: &[BallProblem]) -> Result<AprioriReport> {
    let beta = critical_sobolev(p, n)?;
    let mut members = Vec::with_capacity(family.len());
    for prob in family {
        let h = if prob.h.grid().r_max() == prob.radius {
            prob.h.clone().without_tail()
        } else {
            let grid = make_grid(prob.radius, prob.h.grid().intervals(), GradingKind::Geometric)?;
            RadialFunction::from_fn(grid, |r| prob.h.eval(r))?
        };
        if h.is_zero() {
            continue;
        }
        let d = 1.0 + b3_norm(&h.abs(), beta, p, n)?.powf(1.0 / (p - 1.0));
        let sup = solve_ball_dirichlet(&h, p, n, prob.radius)?.u.max_abs();
        members.push((d, sup));
    }
    if members.len() < 4 {
        return fit(format!("at least 4 nonzero family members required ({} given)", members.len()));
    }
    members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = members.iter().map(|m| m.0.ln()).collect();
    let ys: Vec<f64> = members.iter().map(|m| m.1.ln()).collect();
    let (_, theta2, rms_log_error) = linear_fit(&xs, &ys);
    let log_c = xs.iter().zip(&ys).map(|(x, y)| y - theta2 * x).fold(f64::NEG_INFINITY, f64::max);
    Ok(AprioriReport { c: log_c.exp(), theta2, members, rms_log_error })
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{fit, Result};
use crate::exponents::{theta0, ExponentParams};
use crate::radial::{lr_norm, RadialFunction};

/// Which argument realizes `max{|u|_beta, |u|_beta^theta0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    LargeNorm,
    SmallNorm,
}

impl Branch {
    /// Small-norm exactly when the base is below 1.
    pub fn of(norm: f64) -> Self {
        if norm < 1.0 {
            Self::SmallNorm
        } else {
            Self::LargeNorm
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LargeNorm => "large-norm",
            Self::SmallNorm => "small-norm",
        })
    }
}

/// Smallest `C` with `|u|_inf <= C max{|u|_beta, |u|_beta^theta0}` for one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub c_min: f64,
    pub theta0: f64,
    pub norm_beta: f64,
    pub sup_norm: f64,
    pub branch: Branch,
    pub family_id: String,
}

impl BoundCertificate {
    /// `max{|u|_beta, |u|_beta^theta0}`.
    pub fn bound_base(&self) -> f64 {
        self.norm_beta.max(self.norm_beta.powf(self.theta0))
    }

    /// Whether the constant `c` certifies this profile.
    pub fn certified_by(&self, c: f64) -> bool {
        self.sup_norm <= c * self.bound_base() + 1e-12
    }
}

/// Certificate for `u` at exponent `params.beta`; `u = 0` gives `c_min = 0`.
pub fn global_certificate(u: &RadialFunction, params: &ExponentParams) -> Result<BoundCertificate> {
    let theta0 = theta0(params)?;
    let sup_norm = lr_norm(u, f64::INFINITY, params.n)?.value;
    let norm_beta = lr_norm(u, params.beta, params.n)?.value;
    if !sup_norm.is_finite() || !norm_beta.is_finite() {
        return fit("norms of the profile are not finite");
    }
    let base = norm_beta.max(norm_beta.powf(theta0));
    let c_min = if sup_norm == 0.0 { 0.0 } else { sup_norm / base };
    if !c_min.is_finite() {
        return fit(format!("sup norm {sup_norm} with vanishing beta norm"));
    }
    Ok(BoundCertificate { c_min, theta0, norm_beta, sup_norm, branch: Branch::of(norm_beta), family_id: String::new() })
}

/// Certificates for `u^+ = max(u, 0)` and `u^- = max(-u, 0)`.
pub fn signed_part_certificates(
    u: &RadialFunction,
    params: &ExponentParams,
) -> Result<(BoundCertificate, BoundCertificate)> {
    Ok((global_certificate(&u.positive_part(), params)?, global_certificate(&u.negative_part(), params)?))
}

/// Uniform constant over a family of certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family_id: String,
    /// `max_s C_min(u_s)`.
    pub c_uniform: f64,
    /// Every member is certified by `c_uniform`.
    pub all_certified: bool,
    /// Sup norms are nondecreasing in the family parameter.
    pub sup_monotone: bool,
    /// Largest over smallest sup norm.
    pub sup_ratio: f64,
}

/// Summarizes certificates listed in increasing order of the family parameter.
pub fn certify_family(family_id: &str, members: &[BoundCertificate]) -> FamilySummary {
    let c_uniform = members.iter().fold(0.0f64, |m, c| m.max(c.c_min));
    let all_certified = members.iter().all(|c| c.certified_by(c_uniform));
    let sup_monotone = members.windows(2).all(|w| w[1].sup_norm >= w[0].sup_norm);
    let sup_ratio = match (members.first(), members.last()) {
        (Some(a), Some(b)) if a.sup_norm > 0.0 => b.sup_norm / a.sup_norm,
        _ => f64::NAN,
    };
    FamilySummary { family_id: family_id.to_string(), c_uniform, all_certified, sup_monotone, sup_ratio }
}

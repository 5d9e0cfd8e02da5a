use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, fit, Result};
use crate::quad::golden_section_min;
use crate::radial::{energy_norm, weighted_norm, RadialFunction, RadialGrid, WeightSpec};

/// A one-parameter family of radial trial profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialFamily {
    /// `(1 + rho^2)^{-s/2}` for `s` in `[lo, hi]`.
    Algebraic { lo: f64, hi: f64 },
    /// `exp(-(rho / lambda)^2)` for `lambda` in `[lo, hi]`, searched in `log lambda`.
    Gaussian { lo: f64, hi: f64 },
    /// `(1 + (rho / lambda)^2)^{-s/2}` at fixed `s` for `lambda` in `[lo, hi]`, searched in `log lambda`.
    Dilation { s: f64, lo: f64, hi: f64 },
    /// `(1 + rho)^{-s}` for `s` in `[lo, hi]`.
    Shifted { lo: f64, hi: f64 },
    /// A single profile.
    Fixed { id: String, profile: RadialFunction },
}

impl TrialFamily {
    /// Algebraic and shifted power profiles, with exponents from just above
    /// the finite-energy threshold `(N - p) / p` up to that threshold plus 6.
    pub fn default_pair(p: f64, n: u32) -> Vec<Self> {
        let lo = (f64::from(n) - p) / p + 0.05;
        let hi = lo + 6.0;
        vec![Self::Algebraic { lo, hi }, Self::Shifted { lo, hi }]
    }

    pub fn id(&self) -> String {
        match self {
            Self::Algebraic { .. } => "algebraic".into(),
            Self::Gaussian { .. } => "gaussian".into(),
            Self::Dilation { .. } => "dilation".into(),
            Self::Shifted { .. } => "shifted".into(),
            Self::Fixed { id, .. } => id.clone(),
        }
    }

    /// Search interval in the coordinate used by the optimizer.
    fn bracket(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Algebraic { lo, hi } | Self::Shifted { lo, hi } => Some((lo, hi)),
            Self::Gaussian { lo, hi } | Self::Dilation { lo, hi, .. } => Some((lo.ln(), hi.ln())),
            Self::Fixed { .. } => None,
        }
    }

    /// Family parameter from the search coordinate.
    fn param(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { .. } | Self::Dilation { .. } => x.exp(),
            _ => x,
        }
    }

    fn profile(&self, x: f64, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
        match self {
            Self::Algebraic { .. } => {
                RadialFunction::from_fn(grid.clone(), |r| (1.0 + r * r).powf(-x / 2.0))?.with_matched_tail(x)
            }
            Self::Gaussian { .. } => {
                let lambda = x.exp();
                RadialFunction::from_fn(grid.clone(), |r| (-(r / lambda).powi(2)).exp())
            }
            Self::Dilation { s, .. } => {
                let lambda = x.exp();
                RadialFunction::from_fn(grid.clone(), |r| (1.0 + (r / lambda).powi(2)).powf(-s / 2.0))?
                    .with_matched_tail(*s)
            }
            Self::Shifted { .. } => RadialFunction::from_fn(grid.clone(), |r| (1.0 + r).powf(-x))?.with_matched_tail(x),
            Self::Fixed { profile, .. } => Ok(profile.clone()),
        }
    }
}

/// Best value found within one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBest {
    pub family_id: String,
    pub param: f64,
    pub value: f64,
    /// The maximizer lies strictly inside the search bracket.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// Largest ratio over all families; a lower bound on the embedding norm.
    pub best: f64,
    pub best_family: String,
    pub families: Vec<FamilyBest>,
}

/// `|u|_{q,w} / ||grad u||_p`, NaN when either side is unusable.
fn rayleigh(u: &RadialFunction, p: f64, q: f64, weight: &WeightSpec, n: u32) -> f64 {
    match (weighted_norm(u, q, weight, n), energy_norm(u, p, n)) {
        (Ok(top), Ok(bottom)) if bottom.value > 0.0 && top.value.is_finite() && bottom.value.is_finite() => {
            top.value / bottom.value
        }
        _ => f64::NAN,
    }
}

const SCAN_POINTS: usize = 24;

fn best_in_family(
    family: &TrialFamily,
    grid: &Arc<RadialGrid>,
    ratio: impl Fn(&RadialFunction) -> f64,
) -> Result<Option<FamilyBest>> {
    let eval = |x: f64| family.profile(x, grid).map(|u| ratio(&u)).unwrap_or(f64::NAN);
    let Some((lo, hi)) = family.bracket() else {
        let value = eval(0.0);
        return Ok(value.is_finite().then(|| FamilyBest { family_id: family.id(), param: 0.0, value, interior: true }));
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return domain(format!("empty search bracket [{lo}, {hi}] for family {}", family.id()));
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SCAN_POINTS).map(|i| eval(lo + step * i as f64)).collect();
    let Some((k, _)) = scan
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
    else {
        return Ok(None);
    };
    let a = lo + step * k.saturating_sub(1) as f64;
    let b = (lo + step * (k + 1) as f64).min(hi);
    let (x, neg) = golden_section_min(a, b, 1e-7, |x| {
        let v = eval(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    });
    let (x, value) = if -neg >= scan[k] { (x, -neg) } else { (lo + step * k as f64, scan[k]) };
    let interior = x > lo + 0.01 * (hi - lo) && x < hi - 0.01 * (hi - lo);
    Ok(Some(FamilyBest { family_id: family.id(), param: family.param(x), value, interior }))
}

/// Lower bound on the norm of `D^{1,p} -> L^q(w)` by maximizing the Rayleigh
/// quotient over each family on `grid`.
///
/// Gaussian widths should stay below `r_max / 8` so that the profile has
/// vanished at the end of the grid.
pub fn embedding_norm(
    p: f64,
    q: f64,
    weight: &WeightSpec,
    n: u32,
    families: &[TrialFamily],
    grid: &Arc<RadialGrid>,
) -> Result<EmbeddingReport> {
    let nf = f64::from(n);
    if !(p > 1.0 && p < nf) || !(q > 1.0 && q < nf * p / (nf - p)) {
        return domain(format!("need 1 < p < N and 1 < q < p* (p = {p}, q = {q}, N = {n})"));
    }
    if families.is_empty() {
        return fit("no trial families");
    }
    let mut results = Vec::with_capacity(families.len());
    for family in families {
        if let Some(best) = best_in_family(family, grid, |u| rayleigh(u, p, q, weight, n))? {
            results.push(best);
        }
    }
    let Some(top) = results.iter().max_by(|a, b| a.value.total_cmp(&b.value)) else {
        return fit("no trial profile has finite energy");
    };
    Ok(EmbeddingReport { best: top.value, best_family: top.family_id.clone(), families: results })
}

/// Smallness condition `c_a c_g ||i_w||^p < 1` evaluated with a lower bound on the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub i_w_norm_lower: f64,
    pub c_a_c_g: f64,
    /// `1 - c_a c_g i_w_norm_lower^p`.
    pub margin: f64,
    pub satisfied: bool,
}

pub fn coercivity_check(c_a: f64, c_g: f64, i_w_lower: f64, p: f64) -> CoercivityReport {
    let c_a_c_g = c_a * c_g;
    let margin = 1.0 - c_a_c_g * i_w_lower.powf(p);
    CoercivityReport { i_w_norm_lower: i_w_lower, c_a_c_g, margin, satisfied: margin > 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{make_grid, GradingKind};

    fn families() -> Vec<TrialFamily> {
        TrialFamily::default_pair(2.0, 3)
    }

    fn grid(n: usize) -> Arc<RadialGrid> {
        make_grid(400.0, n, GradingKind::Geometric).unwrap()
    }

    #[test]
    fn families_agree_and_refine() {
        let w = WeightSpec::new(1.0, 1.0).unwrap();
        let coarse = embedding_norm(2.0, 2.0, &w, 3, &families(), &grid(2048)).unwrap();
        let fine = embedding_norm(2.0, 2.0, &w, 3, &families(), &grid(4096)).unwrap();
        let (a, g) = (&fine.families[0], &fine.families[1]);
        assert!(a.interior && g.interior, "{a:?} {g:?}");
        assert!((a.value - g.value).abs() < 0.05 * a.value, "{a:?} {g:?}");
        assert!((coarse.best - fine.best).abs() < 0.02 * fine.best);
        for (c, f) in coarse.families.iter().zip(&fine.families) {
            assert!((c.value - f.value).abs() < 0.02 * f.value);
        }
    }

    #[test]
    fn single_trial_is_a_lower_bound() {
        let w = WeightSpec::new(1.0, 1.0).unwrap();
        let g = grid(2048);
        let u0 = RadialFunction::from_fn(g.clone(), |r| (1.0 + r * r).powf(-1.0)).unwrap().with_matched_tail(2.0).unwrap();
        let direct = weighted_norm(&u0, 2.0, &w, 3).unwrap().value / energy_norm(&u0, 2.0, 3).unwrap().value;
        let mut fams = families();
        fams.push(TrialFamily::Fixed { id: "u0".into(), profile: u0 });
        let rep = embedding_norm(2.0, 2.0, &w, 3, &fams, &g).unwrap();
        assert!(rep.best >= direct);
        assert_eq!(rep.families[2].value, direct);
    }

    #[test]
    fn weight_homogeneity() {
        let g = grid(1024);
        let fams = [TrialFamily::Algebraic { lo: 0.6, hi: 6.0 }, TrialFamily::Gaussian { lo: 0.05, hi: 40.0 }];
        let q = 3.0;
        let one = embedding_norm(2.0, q, &WeightSpec::new(1.0, 1.0).unwrap(), 3, &fams, &g).unwrap();
        let four = embedding_norm(2.0, q, &WeightSpec::new(1.0, 4.0).unwrap(), 3, &fams, &g).unwrap();
        assert!((four.best - 4f64.powf(1.0 / q) * one.best).abs() < 1e-9 * four.best);
    }

    #[test]
    fn no_finite_energy() {
        let w = WeightSpec::new(1.0, 1.0).unwrap();
        let fams = [TrialFamily::Algebraic { lo: 0.1, hi: 0.4 }];
        assert!(matches!(embedding_norm(2.0, 2.0, &w, 3, &fams, &grid(512)), Err(crate::Error::Fit(_))));
    }

    #[test]
    fn coercivity_arithmetic() {
        let i = 0.8f64;
        let half = coercivity_check(0.5 / i.powi(2), 1.0, i, 2.0);
        assert!((half.margin - 0.5).abs() < 1e-12 && half.satisfied);
        let edge = coercivity_check(1.0, 1.0 / i.powi(2), i, 2.0);
        assert!(edge.margin.abs() < 1e-12);
        let exact = coercivity_check(1.0, 1.0, 1.0, 2.0);
        assert_eq!(exact.margin, 0.0);
        assert!(!exact.satisfied);
        let neg = coercivity_check(2.0, 1.0, 1.0, 3.0);
        assert_eq!(neg.margin, -1.0);
    }
}

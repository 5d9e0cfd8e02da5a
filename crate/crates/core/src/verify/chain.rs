use serde::{Deserialize, Serialize};

use super::certificate::Branch;
use crate::error::{domain, fit, Result};
use crate::exponents::{chain, ExponentParams};
use crate::quad::linear_fit;
use crate::radial::{lr_norm, RadialFunction};

/// Norms along `beta_k = chi^k beta` and the step constants between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub beta_k: Vec<f64>,
    pub norms: Vec<f64>,
    /// `C_k = |u|_{beta_{k+1}} / max{|u|_{beta_k}, |u|_{beta_k}^{1 - p/beta_k}}`.
    pub step_constants: Vec<f64>,
    /// Branch of the max realized at each step.
    pub branches: Vec<Branch>,
    pub fitted_sigma: f64,
    pub fitted_c: f64,
    /// `log` of the envelope intercept, `sigma log C`.
    pub envelope_intercept: f64,
    pub bounded: bool,
}

impl ChainReport {
    /// `(C beta)^{sigma / beta}` with the fitted pair, written through the intercept.
    pub fn envelope(&self, beta: f64) -> f64 {
        ((self.envelope_intercept + self.fitted_sigma * beta.ln()) / beta).exp()
    }
}

/// Walks the chain for `K` steps and fits `log C_k = (sigma / beta_k) log(C beta_k)`.
///
/// The regression gives `sigma`; the intercept is then raised to the smallest
/// value for which every step constant lies under the envelope.
pub fn reverse_holder_chain(u: &RadialFunction, params: &ExponentParams, k: usize) -> Result<ChainReport> {
    if k < 2 {
        return domain(format!("at least two chain steps required (K = {k})"));
    }
    let exps = chain(params, k)?;
    if let Some(b) = exps.beta_k.iter().find(|b| !b.is_finite()) {
        return fit(format!("chain exponent {b} overflows after K = {k} steps"));
    }
    let norms = exps
        .beta_k
        .iter()
        .map(|&b| lr_norm(u, b, params.n).map(|n| n.value))
        .collect::<Result<Vec<_>>>()?;
    if norms.iter().all(|&n| n == 0.0) {
        return Ok(ChainReport {
            beta_k: exps.beta_k,
            norms,
            step_constants: vec![0.0; k],
            branches: vec![Branch::SmallNorm; k],
            fitted_sigma: 0.0,
            fitted_c: 0.0,
            envelope_intercept: f64::NEG_INFINITY,
            bounded: true,
        });
    }
    let mut step_constants = Vec::with_capacity(k);
    let mut branches = Vec::with_capacity(k);
    for i in 0..k {
        let (b, nb) = (exps.beta_k[i], norms[i]);
        let base = nb.max(nb.powf(1.0 - params.p / b));
        step_constants.push(norms[i + 1] / base);
        branches.push(Branch::of(nb));
    }
    let xs: Vec<f64> = exps.beta_k[..k].iter().map(|b| b.ln()).collect();
    let ys: Vec<f64> = exps.beta_k[..k].iter().zip(&step_constants).map(|(b, c)| b * c.ln()).collect();
    let (_, sigma, _) = linear_fit(&xs, &ys);
    let intercept = xs.iter().zip(&ys).map(|(x, y)| y - sigma * x).fold(f64::NEG_INFINITY, f64::max);
    let fitted_c = if sigma != 0.0 { (intercept / sigma).exp() } else { intercept.exp() };
    let bounded = step_constants.iter().all(|c| c.is_finite());
    Ok(ChainReport {
        beta_k: exps.beta_k,
        norms,
        step_constants,
        branches,
        fitted_sigma: sigma,
        fitted_c,
        envelope_intercept: intercept,
        bounded,
    })
}

//! Sobolev and Moser exponent arithmetic.
//!
//! The bootstrapping argument raises integrability along the geometric chain
//! `beta_k = chi^k * beta` with `chi = N / (N - p)`. Each step loses a factor
//! `1 - p / beta_k` in the exponent of the lower norm, so the surviving
//! exponent after infinitely many steps is the convergent product
//!
//! ```text
//! theta0 = prod_{i >= 0} (1 - p / (chi^i * beta))
//! ```
//!
//! and its companion `theta1` with `p - 1` in place of `p`. Products are
//! truncated once an explicit bound on the logarithm of the remainder drops
//! below the requested tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Growth exponent, dimension and integrability exponents of an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub p: f64,
    pub n: u32,
    pub beta: f64,
    /// Integrability exponent of the lower-order coefficients, when relevant.
    pub q: Option<f64>,
}

impl ExponentParams {
    pub fn new(p: f64, n: u32, beta: f64) -> Result<Self> {
        let params = Self { p, n, beta, q: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.q = Some(q);
        self.validate()?;
        Ok(self)
    }

    /// Parameters with `beta` set to the critical Sobolev exponent.
    pub fn critical(p: f64, n: u32) -> Result<Self> {
        Self::new(p, n, critical_sobolev(p, n)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_p_n(self.p, f64::from(self.n))?;
        if !(self.beta > self.p) || !self.beta.is_finite() {
            return domain(format!("beta > p required (beta = {}, p = {})", self.beta, self.p));
        }
        if let Some(q) = self.q {
            if !(q > f64::from(self.n)) {
                return domain(format!("q > N required (q = {q}, N = {})", self.n));
            }
        }
        Ok(())
    }

    /// `chi = N / (N - p)`.
    pub fn chi(&self) -> f64 {
        let n = f64::from(self.n);
        n / (n - self.p)
    }

    pub fn p_star(&self) -> f64 {
        let n = f64::from(self.n);
        n * self.p / (n - self.p)
    }
}

fn check_p_n(p: f64, n: f64) -> Result<()> {
    if !(p > 1.0) || !(p < n) || !p.is_finite() {
        return domain(format!("1 < p < N required (p = {p}, N = {n})"));
    }
    Ok(())
}

/// The critical Sobolev exponent `Np / (N - p)`.
pub fn critical_sobolev(p: f64, n: u32) -> Result<f64> {
    let n = f64::from(n);
    check_p_n(p, n)?;
    Ok(n * p / (n - p))
}

/// Exponent chain of the iteration together with its limiting products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationExponents {
    pub chi: f64,
    /// `beta_k = chi^k * beta` for `k = 0..=K`.
    pub beta_k: Vec<f64>,
    /// Partial products `prod_{i<k} (1 - p / beta_i)` for `k = 0..=K`.
    pub theta_k: Vec<f64>,
    pub theta0: f64,
    pub theta1: f64,
    /// Number of factors kept in the truncated `theta0` product.
    pub truncation_k: usize,
    /// Bound on the absolute error of the truncated `theta0`.
    pub tail_bound: f64,
}

/// A truncated infinite product with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedProduct {
    pub value: f64,
    pub terms: usize,
    pub error_bound: f64,
}

/// Evaluates `prod_{i >= 0} (1 - c / (chi^i * beta))` to absolute accuracy `tol`.
///
/// With `x_i = c / (chi^i beta) <= 1/2` the remainder satisfies
/// `|log prod_{i >= K} (1 - x_i)| <= 2 sum_{i >= K} x_i`, and the sum is geometric.
/// Since every partial product is at most one, that bound also caps the
/// absolute error.
fn geometric_product(c: f64, chi: f64, beta: f64, tol: f64) -> TruncatedProduct {
    let mut value = 1.0;
    let mut x = c / beta;
    let mut terms = 0;
    loop {
        let remainder = 2.0 * x * chi / (chi - 1.0);
        if x <= 0.5 && remainder <= tol {
            return TruncatedProduct { value, terms, error_bound: remainder };
        }
        value *= 1.0 - x;
        x /= chi;
        terms += 1;
    }
}

/// Computes `(theta0, theta1)` to absolute accuracy `tol`.
pub fn theta_products(params: &ExponentParams, tol: f64) -> Result<(f64, f64)> {
    let (t0, t1) = theta_products_detailed(params, tol)?;
    Ok((t0.value, t1.value))
}

pub fn theta_products_detailed(
    params: &ExponentParams,
    tol: f64,
) -> Result<(TruncatedProduct, TruncatedProduct)> {
    params.validate()?;
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive (tol = {tol})"));
    }
    let chi = params.chi();
    let t0 = geometric_product(params.p, chi, params.beta, tol);
    let t1 = geometric_product(params.p - 1.0, chi, params.beta, tol);
    Ok((t0, t1))
}

/// `theta0` at the default tolerance used across the crate.
pub fn theta0(params: &ExponentParams) -> Result<f64> {
    Ok(theta_products(params, THETA_TOL)?.0)
}

pub(crate) const THETA_TOL: f64 = 1e-14;

/// Builds the exponent chain `beta_0, ..., beta_K` and the matching partial products.
pub fn chain(params: &ExponentParams, k: usize) -> Result<IterationExponents> {
    params.validate()?;
    if k < 1 {
        return domain("chain length K >= 1 required");
    }
    let chi = params.chi();
    let mut beta_k = Vec::with_capacity(k + 1);
    let mut theta_k = Vec::with_capacity(k + 1);
    let mut theta = 1.0;
    for i in 0..=k {
        let b = params.beta * chi.powi(i as i32);
        beta_k.push(b);
        theta_k.push(theta);
        theta *= 1.0 - params.p / b;
    }
    let (t0, t1) = theta_products_detailed(params, THETA_TOL)?;
    Ok(IterationExponents {
        chi,
        beta_k,
        theta_k,
        theta0: t0.value,
        theta1: t1.value,
        truncation_k: t0.terms,
        tail_bound: t0.error_bound,
    })
}

/// Picks `q > N` with `(r - p) q / p = p*`, so that `|u|^{r-p}` lies in `L^{q/p}`
/// whenever `u` lies in `L^{p*}`.
pub fn audit_exponent_choice(p: f64, n: f64, r: f64) -> Result<f64> {
    check_p_n(p, n)?;
    let p_star = n * p / (n - p);
    if !(r > p) || !(r < p_star) {
        return domain(format!("p < r < p* required (p = {p}, r = {r}, p* = {p_star})"));
    }
    Ok(p * p_star / (r - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: plain partial product with a fixed number of factors.
    fn partial_product(c: f64, chi: f64, beta: f64, terms: usize) -> f64 {
        (0..terms).map(|i| 1.0 - c / (chi.powi(i as i32) * beta)).product()
    }

    #[test]
    fn critical_exponent_examples() {
        assert_eq!(critical_sobolev(2.0, 4).unwrap(), 4.0);
        assert_eq!(critical_sobolev(2.0, 3).unwrap(), 6.0);
        assert!(matches!(critical_sobolev(3.0, 3), Err(crate::Error::Domain(_))));
        assert!(critical_sobolev(1.0, 3).is_err());
    }

    #[test]
    fn chain_doubles_for_chi_two() {
        let params = ExponentParams::new(2.0, 4, 4.0).unwrap();
        let c = chain(&params, 3).unwrap();
        assert_eq!(c.chi, 2.0);
        assert_eq!(c.beta_k, vec![4.0, 8.0, 16.0, 32.0]);
        assert_eq!(c.theta_k[0], 1.0);
        assert_eq!(c.theta_k[1], 0.5);
        assert!(chain(&params, 0).is_err());
    }

    #[test]
    fn theta0_matches_partial_product_oracle() {
        let params = ExponentParams::new(2.0, 4, 4.0).unwrap();
        let oracle = partial_product(2.0, 2.0, 4.0, 80);
        assert!((oracle - 0.288_788_095_1).abs() < 1e-10);
        let (t0, t1) = theta_products(&params, 1e-14).unwrap();
        assert!((t0 - oracle).abs() < 1e-10);
        assert!(t1 <= 0.75);
        assert!(t0 <= t1);
        let c = chain(&params, 60).unwrap();
        assert!((c.theta_k[60] - c.theta0).abs() < 1e-12);
    }

    #[test]
    fn theta0_tends_to_one_for_large_beta() {
        let params = ExponentParams::new(2.0, 4, 1e6).unwrap();
        let (t0, _) = theta_products(&params, 1e-14).unwrap();
        assert!((1.0 - t0).abs() < 1e-5);
    }

    #[test]
    fn theta_requires_beta_above_p() {
        let params = ExponentParams { p: 2.0, n: 4, beta: 2.0, q: None };
        assert!(theta_products(&params, 1e-10).is_err());
        assert!(ExponentParams::new(2.0, 4, 1.5).is_err());
        assert!(ExponentParams::new(2.0, 4, 4.0).unwrap().with_q(3.0).is_err());
    }

    #[test]
    fn exponent_choice_examples() {
        assert_eq!(audit_exponent_choice(2.0, 3.0, 4.0).unwrap(), 6.0);
        assert_eq!(audit_exponent_choice(2.0, 4.0, 3.0).unwrap(), 8.0);
        assert!(audit_exponent_choice(2.0, 3.0, 6.0).is_err());
        assert!(audit_exponent_choice(2.0, 3.0, 2.0).is_err());
    }

    fn valid_params() -> impl Strategy<Value = ExponentParams> {
        (2u32..9, 0.05f64..0.95, 1.01f64..20.0).prop_map(|(n, frac, scale)| {
            let n_f = f64::from(n);
            let p = 1.0 + frac * (n_f - 1.0);
            ExponentParams { p, n, beta: p * scale, q: None }
        })
    }

    proptest! {
        #[test]
        fn theta_ordering(params in valid_params()) {
            let (t0, t1) = theta_products(&params, 1e-12).unwrap();
            prop_assert!(t0 > 0.0);
            prop_assert!(t0 <= t1);
            prop_assert!(t1 <= 1.0 - (params.p - 1.0) / params.beta + 1e-12);
        }

        #[test]
        fn partial_products_decrease_to_theta0(params in valid_params()) {
            let c = chain(&params, 12).unwrap();
            for (i, w) in c.theta_k.windows(2).enumerate() {
                // strict while the factor is distinguishable from 1 in f64
                if params.p / c.beta_k[i] > 1e-12 {
                    prop_assert!(w[1] < w[0]);
                } else {
                    prop_assert!(w[1] <= w[0]);
                }
            }
            let (tight, _) = theta_products(&params, 1e-15).unwrap();
            prop_assert!(*c.theta_k.last().unwrap() >= tight - 1e-15);
        }

        #[test]
        fn truncation_bound_is_honoured(params in valid_params()) {
            let (t0, _) = theta_products_detailed(&params, 1e-9).unwrap();
            let reference = partial_product(params.p, params.chi(), params.beta, t0.terms + 4000);
            prop_assert!((t0.value - reference).abs() <= t0.error_bound + 1e-13);
        }

        #[test]
        fn last_chain_exponent_is_exact(params in valid_params(), k in 1usize..15) {
            let c = chain(&params, k).unwrap();
            let expected = params.beta * params.chi().powi(k as i32);
            prop_assert!((c.beta_k[k] - expected).abs() <= 1e-15 * expected);
        }

        #[test]
        fn theta0_monotone_in_beta_and_p(params in valid_params()) {
            let t = theta0(&params).unwrap();
            let larger_beta = ExponentParams { beta: params.beta * 1.05, ..params };
            prop_assert!(theta0(&larger_beta).unwrap() > t);
            let n = f64::from(params.n);
            let p2 = params.p + 0.01 * (n - params.p);
            if p2 < params.beta {
                let larger_p = ExponentParams { p: p2, ..params };
                prop_assert!(theta0(&larger_p).unwrap() < t);
            }
        }

        #[test]
        fn exponent_choice_solves_balance(frac in 0.01f64..0.99, n in 3u32..9, pf in 0.1f64..0.9) {
            let n_f = f64::from(n);
            let p = 1.0 + pf * (n_f - 1.0);
            let p_star = n_f * p / (n_f - p);
            let r = p + frac * (p_star - p);
            let q = audit_exponent_choice(p, n_f, r).unwrap();
            prop_assert!(q > n_f);
            prop_assert!(((r - p) * q / p - p_star).abs() <= 1e-12 * p_star);
        }
    }
}

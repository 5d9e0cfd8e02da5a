//! Small quadrature helpers shared by the radial modules.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const MAX_RULE: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]` with `points` nodes (2..=64).
pub(crate) fn gauss_legendre(points: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (0..=MAX_RULE)
            .map(|deg| match GaussLegendre::new(deg) {
                Ok(rule) => rule.into_node_weight_pairs(),
                Err(_) => Vec::new(),
            })
            .collect()
    });
    &rules[points.clamp(2, MAX_RULE)]
}

/// Integrates `f` over `[a, b]` with a fixed Gauss rule.
pub(crate) fn gauss<F: FnMut(f64) -> f64>(points: usize, a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * gauss_legendre(points).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Surface area of the unit sphere in `R^N`.
pub fn sphere_area(n: u32) -> f64 {
    let half = 0.5 * f64::from(n);
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(n: u32) -> f64 {
    sphere_area(n) / f64::from(n)
}

/// Moments of the two linear shape functions against `rho^{N-1}` on `[a, b]`.
///
/// With `L = (b - rho) / (b - a)` and `R = (rho - a) / (b - a)` the fields are
/// `ll = int L L rho^{N-1}`, `lr = int L R rho^{N-1}` and `rr = int R R rho^{N-1}`.
/// The integrands are polynomials, so a Gauss rule of sufficient size is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct IntervalMoments {
    pub ll: f64,
    pub lr: f64,
    pub rr: f64,
}

impl IntervalMoments {
    pub fn new(a: f64, b: f64, n: u32) -> Self {
        let points = rule_size(n + 1);
        let h = b - a;
        let mut m = Self { ll: 0.0, lr: 0.0, rr: 0.0 };
        let half = 0.5 * h;
        let mid = 0.5 * (a + b);
        for &(x, w) in gauss_legendre(points) {
            let rho = mid + half * x;
            let l = (b - rho) / h;
            let r = (rho - a) / h;
            let weight = w * half * rho.powi(n as i32 - 1);
            m.ll += weight * l * l;
            m.lr += weight * l * r;
            m.rr += weight * r * r;
        }
        m
    }

    /// `int rho^{N-1}` over the interval.
    pub fn mass(&self) -> f64 {
        self.ll + 2.0 * self.lr + self.rr
    }

    /// `int L rho^{N-1}`.
    pub fn left(&self) -> f64 {
        self.ll + self.lr
    }

    /// `int R rho^{N-1}`.
    pub fn right(&self) -> f64 {
        self.lr + self.rr
    }
}

/// Number of Gauss points that integrates polynomials of degree `degree` exactly.
pub(crate) fn rule_size(degree: u32) -> usize {
    (degree as usize + 2) / 2
}

/// Minimizes `f` on `[lo, hi]` by golden-section search.
pub(crate) fn golden_section_min<F: FnMut(f64) -> f64>(
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    mut f: F,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= rel_tol * (lo.abs() + hi.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Ordinary least squares fit `y = a + b x`; returns `(a, b, rms residual)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    (intercept, slope, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn moments_are_exact() {
        let m = IntervalMoments::new(1.0, 2.0, 3);
        // int_1^2 rho^2 = 7/3
        assert!((m.mass() - 7.0 / 3.0).abs() < 1e-14);
        // int_1^2 (rho - 1) rho^2 = 17/12
        assert!((m.right() - 17.0 / 12.0).abs() < 1e-14);
        let m = IntervalMoments::new(0.0, 1.0, 9);
        assert!((m.mass() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(-3.0, 5.0, 1e-10, |x| (x - 1.25) * (x - 1.25) + 2.0);
        assert!((x - 1.25).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (a, b, rms) = linear_fit(&xs, &ys);
        assert!((a - 3.0).abs() < 1e-12 && (b + 2.0).abs() < 1e-12 && rms < 1e-12);
    }
}

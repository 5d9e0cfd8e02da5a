//! Radial p-Laplacian solvers.
//!
//! The radial reduction of `-Delta_p u = h` is the flux identity
//! `-(rho^{N-1} phi(u'))' = rho^{N-1} h` with `phi(t) = |t|^{p-2} t`. On a grid
//! the P1 Galerkin system tested against the nodal hats is lower triangular in
//! the interval slopes: with nodal loads `b_i` and cumulative flux
//! `Q_j = b_0 + ... + b_j`,
//!
//! ```text
//! phi(u'_j) * m_j / h_j = -Q_j,    m_j = int_{I_j} rho^{N-1}
//! ```
//!
//! so the slopes are explicit and the profile follows by summing inwards from
//! the value at `r_max`. On the whole space that value is the exterior integral
//! `int_R^inf phi^{-1}(F(s) s^{1-N}) ds`, with the flux `F` continued by the
//! load's power-law tail; on a ball it is zero. The weak residual is measured
//! with the same hats and loads, so it vanishes for the computed profile up to
//! rounding.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, fit, Error, Result};
use crate::exponents::critical_sobolev;
use crate::quad::{gauss, sphere_area, IntervalMoments};
use crate::radial::{make_grid, GradingKind, RadialFunction, RadialGrid, WeightSpec};

/// Relative tolerance on negative cumulative flux accepted by [`solve_radial_rhs`].
pub const FLUX_TOL: f64 = 1e-6;

/// Sign pattern of the coefficient `a(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPattern {
    Positive,
    Negative,
    /// `+` inside the unit ball, `-` outside.
    Alternating,
}

impl SignPattern {
    pub fn at(self, r: f64) -> f64 {
        match self {
            Self::Positive => 1.0,
            Self::Negative => -1.0,
            Self::Alternating if r < 1.0 => 1.0,
            Self::Alternating => -1.0,
        }
    }
}

/// `a(x) = sign(|x|) * c_a / (1 + |x|^{N + alpha})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    /// `alpha` and the multiplier `c_a`.
    pub weight: WeightSpec,
    pub sign: SignPattern,
}

impl Coefficient {
    pub fn eval(&self, r: f64, n: u32) -> f64 {
        self.sign.at(r) * self.weight.eval(r, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GForm {
    /// `g = c_g`.
    Constant,
    /// `g = c_g (1 + |s|^{r-1})`.
    Power,
    /// `g = c_g (1 + |s|^{r-1} / (1 + |s|^{r-1}))`.
    BoundedPower,
}

/// The nonlinearity `g(s) = c_g * base(arg_scale * s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub form: GForm,
    pub c_g: f64,
    pub r_growth: f64,
    /// Argument dilation; 1 except after a scaling transform.
    pub arg_scale: f64,
}

impl Nonlinearity {
    pub fn new(form: GForm, c_g: f64, r_growth: f64) -> Self {
        Self { form, c_g, r_growth, arg_scale: 1.0 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let x = (self.arg_scale * s).abs();
        let base = match self.form {
            GForm::Constant => 1.0,
            GForm::Power => 1.0 + x.powf(self.r_growth - 1.0),
            GForm::BoundedPower => {
                let y = x.powf(self.r_growth - 1.0);
                1.0 + y / (1.0 + y)
            }
        };
        self.c_g * base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Domain {
    WholeSpace,
    Ball { radius: f64 },
}

/// Data of `-Delta_p u = a(x) g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub n: u32,
    pub lambda: f64,
    pub a: Coefficient,
    pub g: Nonlinearity,
    pub domain: Domain,
}

impl ProblemSpec {
    /// Whole-space problem with a positive coefficient.
    pub fn prototype(p: f64, n: u32, alpha: f64, c_a: f64, g: Nonlinearity) -> Result<Self> {
        let spec = Self {
            p,
            n,
            lambda: 1.0,
            a: Coefficient { weight: WeightSpec::new(alpha, c_a)?, sign: SignPattern::Positive },
            g,
            domain: Domain::WholeSpace,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p_star = critical_sobolev(self.p, self.n)?;
        if self.lambda != 1.0 {
            return domain(format!("only lambda = 1 is supported (lambda = {})", self.lambda));
        }
        WeightSpec::new(self.a.weight.alpha, self.a.weight.c)?;
        if !(self.g.c_g > 0.0) || !(self.g.arg_scale > 0.0) {
            return domain(format!("c_g > 0 required (c_g = {})", self.g.c_g));
        }
        if self.g.form != GForm::Constant && !(self.g.r_growth >= 1.0 && self.g.r_growth < p_star) {
            return domain(format!(
                "growth exponent must satisfy 1 <= r < p* = {p_star} (r = {})",
                self.g.r_growth
            ));
        }
        if let Domain::Ball { radius } = self.domain {
            if !(radius > 0.0) {
                return domain(format!("ball radius must be positive (R = {radius})"));
            }
        }
        Ok(())
    }

    /// Nodal values of `a(x) g(u)` with the coefficient's power tail.
    pub fn rhs(&self, u: &RadialFunction) -> Result<RadialFunction> {
        let f = u.map(|r, v| self.a.eval(r, self.n) * self.g.eval(v), None)?;
        match self.domain {
            Domain::WholeSpace => f.with_matched_tail(f64::from(self.n) + self.a.weight.alpha),
            Domain::Ball { .. } => Ok(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_picard: usize,
    /// Mixing parameter of each fixed-point step.
    pub damping: f64,
    pub residual_tol: f64,
    /// `epsilon` in `(u'^2 + epsilon^2)^{(p-2)/2} u'`, used by the residual when `p < 2`.
    /// The flux `|u'|^{p-2} u'` is continuous for every `p > 1`, so the default is 0.
    pub grad_regularization: f64,
    /// History length of Anderson mixing; 0 gives plain damped Picard.
    pub anderson_depth: usize,
    pub grid: Arc<RadialGrid>,
}

impl SolverConfig {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        Self {
            max_picard: 100,
            damping: 0.5,
            residual_tol: 1e-8,
            grad_regularization: 0.0,
            anderson_depth: 5,
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_picard < 1 {
            return domain("max_picard must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return domain(format!("damping must lie in (0, 1] (damping = {})", self.damping));
        }
        if !(self.residual_tol > 0.0) {
            return domain("residual_tol must be positive");
        }
        if !(self.grad_regularization >= 0.0) {
            return domain("grad_regularization must be nonnegative");
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    /// Geometric grid with 4096 intervals on `[0, 100]`.
    fn default() -> Self {
        Self::new(make_grid(100.0, 4096, GradingKind::Geometric).expect("valid default grid"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: RadialFunction,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// `u >= 0` at every node.
    pub positivity: bool,
    pub residual_history: Vec<f64>,
    /// Solution for `|a g(u)|`, which dominates `|u|` by comparison.
    pub envelope: Option<RadialFunction>,
}

fn phi(t: f64, p: f64) -> f64 {
    t.signum() * t.abs().powf(p - 1.0)
}

fn phi_inv(y: f64, p: f64) -> f64 {
    y.signum() * y.abs().powf(1.0 / (p - 1.0))
}

fn check_p_n(p: f64, n: u32) -> Result<()> {
    critical_sobolev(p, n).map(|_| ())
}

/// Exact P1 moments of every interval of a grid.
pub(crate) fn interval_moments(grid: &RadialGrid, n: u32) -> Vec<IntervalMoments> {
    grid.nodes().windows(2).map(|w| IntervalMoments::new(w[0], w[1], n)).collect()
}

/// `b_i = int f_I phi_i rho^{N-1}` for the piecewise-linear interpolant `f_I`.
fn loads(values: &[f64], moments: &[IntervalMoments]) -> Vec<f64> {
    let mut b = vec![0.0; values.len()];
    for (j, m) in moments.iter().enumerate() {
        b[j] += values[j] * m.ll + values[j + 1] * m.lr;
        b[j + 1] += values[j] * m.lr + values[j + 1] * m.rr;
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Decay,
    Dirichlet,
}

/// Output of the flux inverse before packaging.
struct FluxSolution {
    u: RadialFunction,
    cumulative: Vec<f64>,
    flux_at_infinity: f64,
}

/// `int_R^inf phi^{-1}(F(s) s^{1-N}) ds` with `F(s) = F_R + int_R^s t^{N-1} h(t) dt`.
fn exterior_value(flux_r: f64, h: &RadialFunction, p: f64, n: u32) -> Result<(f64, f64)> {
    let r = h.grid().r_max();
    let nf = f64::from(n);
    let kappa = (nf - 1.0) / (p - 1.0);
    let far = |f_inf: f64, s: f64| phi_inv(f_inf, p) * s.powf(1.0 - kappa) / (kappa - 1.0);
    let Some(tail) = h.tail() else {
        return Ok((far(flux_r, r), flux_r));
    };
    let decay = tail.gamma - nf;
    if !(decay > 0.0) {
        return fit(format!(
            "load tail exponent {} does not exceed N = {n}; the flux diverges",
            tail.gamma
        ));
    }
    let sc = h.tail_sign() * tail.coeff / decay;
    let flux = |s: f64| flux_r + sc * (r.powf(-decay) - s.powf(-decay));
    let flux_inf = flux_r + sc * r.powf(-decay);
    let decades = (14.0 / decay).ceil().clamp(6.0, 80.0) as usize;
    let panels_per_decade = 16;
    let step = std::f64::consts::LN_10 / panels_per_decade as f64;
    let mut total = 0.0;
    let log_r = r.ln();
    for k in 0..decades * panels_per_decade {
        let (a, b) = (log_r + k as f64 * step, log_r + (k + 1) as f64 * step);
        total += gauss(8, a, b, |t| {
            let s = t.exp();
            s * phi_inv(flux(s) * s.powf(1.0 - nf), p)
        });
    }
    let s_end = (log_r + (decades * panels_per_decade) as f64 * step).exp();
    total += far(flux_inf, s_end);
    if !total.is_finite() {
        return fit("exterior flux integral is not finite");
    }
    Ok((total, flux_inf))
}

fn flux_inverse(h: &RadialFunction, p: f64, n: u32, boundary: Boundary) -> Result<FluxSolution> {
    let grid = h.grid().clone();
    let x = grid.nodes();
    let moments = interval_moments(&grid, n);
    let b = loads(h.values(), &moments);
    let intervals = grid.intervals();
    let mut cumulative = Vec::with_capacity(intervals);
    let mut q = 0.0;
    for &bj in &b[..intervals] {
        q += bj;
        cumulative.push(q);
    }
    let flux_r = q + b[intervals];
    let (u_end, flux_inf) = match boundary {
        Boundary::Decay => exterior_value(flux_r, h, p, n)?,
        Boundary::Dirichlet => (0.0, flux_r),
    };
    let mut u = vec![0.0; x.len()];
    u[intervals] = u_end;
    for j in (0..intervals).rev() {
        let hj = x[j + 1] - x[j];
        let drop = phi_inv(cumulative[j] * hj / moments[j].mass(), p) * hj;
        u[j] = u[j + 1] + drop;
    }
    let mut out = RadialFunction::from_values(grid, u)?;
    if boundary == Boundary::Decay && out.last_value() != 0.0 {
        out = out.with_matched_tail((f64::from(n) - p) / (p - 1.0))?;
    }
    Ok(FluxSolution { u: out, cumulative, flux_at_infinity: flux_inf })
}

fn check_flux_sign(sol: &FluxSolution) -> Result<()> {
    let scale = sol.cumulative.iter().fold(sol.flux_at_infinity.abs(), |m, q| m.max(q.abs()));
    let worst = sol.cumulative.iter().fold(sol.flux_at_infinity, |m, &q| m.min(q));
    if worst < -FLUX_TOL * scale {
        return domain(format!(
            "right-hand side has negative cumulative flux {worst:e} (scale {scale:e}); \
             signed data must go through the semilinear driver"
        ));
    }
    Ok(())
}

fn direct_report(h: &RadialFunction, sol: FluxSolution, p: f64, n: u32) -> Result<SolveReport> {
    let residual = weak_residual_with_rhs(&sol.u, h, p, n, 0.0)?;
    let positivity = sol.u.values().iter().all(|&v| v >= 0.0);
    Ok(SolveReport {
        u: sol.u,
        iterations: 1,
        residual,
        converged: residual.is_finite(),
        positivity,
        residual_history: vec![residual],
        envelope: None,
    })
}

/// Solves `-Delta_p u = h` on `R^N` with `u -> 0` at infinity.
///
/// `h` is resampled onto `grid` if necessary. Its cumulative flux
/// `int_0^s t^{N-1} h` must stay nonnegative (up to [`FLUX_TOL`] relative);
/// in particular any `h >= 0` is accepted.
pub fn solve_radial_rhs(h: &RadialFunction, p: f64, n: u32, grid: &Arc<RadialGrid>) -> Result<SolveReport> {
    check_p_n(p, n)?;
    let h = h.resample(grid)?;
    let sol = flux_inverse(&h, p, n, Boundary::Decay)?;
    check_flux_sign(&sol)?;
    direct_report(&h, sol, p, n)
}

/// Solves `-Delta_p u = h` on the ball `B_R` with `u(R) = 0`.
///
/// Uses the grid of `h` when it ends at `R`, otherwise a geometric grid on
/// `[0, R]` with the same number of intervals.
pub fn solve_ball_dirichlet(h: &RadialFunction, p: f64, n: u32, radius: f64) -> Result<SolveReport> {
    if !(radius > 0.0) {
        return domain(format!("ball radius must be positive (R = {radius})"));
    }
    check_p_n(p, n)?;
    let h = if h.grid().r_max() == radius {
        h.clone().without_tail()
    } else {
        let grid = make_grid(radius, h.grid().intervals(), GradingKind::Geometric)?;
        RadialFunction::from_fn(grid, |r| h.eval(r))?
    };
    let sol = flux_inverse(&h, p, n, Boundary::Dirichlet)?;
    check_flux_sign(&sol)?;
    direct_report(&h, sol, p, n)
}

fn grid_for(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Arc<RadialGrid>> {
    match spec.domain {
        Domain::WholeSpace => Ok(cfg.grid.clone()),
        Domain::Ball { radius } if radius == cfg.grid.r_max() => Ok(cfg.grid.clone()),
        Domain::Ball { radius } => make_grid(radius, cfg.grid.intervals(), GradingKind::Geometric),
    }
}

fn boundary_of(spec: &ProblemSpec) -> Boundary {
    match spec.domain {
        Domain::WholeSpace => Boundary::Decay,
        Domain::Ball { .. } => Boundary::Dirichlet,
    }
}

/// Signed radial inverse of `a g(u)`.
fn picard_map(spec: &ProblemSpec, u: &RadialFunction) -> Result<RadialFunction> {
    let f = spec.rhs(u)?;
    Ok(flux_inverse(&f, spec.p, spec.n, boundary_of(spec))?.u)
}

/// Anderson mixing over the last few iterates and fixed-point residuals.
struct Anderson {
    depth: usize,
    mixing: f64,
    iterates: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize, mixing: f64) -> Self {
        Self { depth, mixing, iterates: Vec::new(), residuals: Vec::new() }
    }

    fn reset(&mut self) {
        self.iterates.clear();
        self.residuals.clear();
    }

    fn next(&mut self, u: &[f64], image: &[f64]) -> Vec<f64> {
        let res: Vec<f64> = image.iter().zip(u).map(|(g, x)| g - x).collect();
        let plain: Vec<f64> = u.iter().zip(&res).map(|(x, r)| x + self.mixing * r).collect();
        self.iterates.push(u.to_vec());
        self.residuals.push(res.clone());
        if self.iterates.len() > self.depth + 1 {
            self.iterates.remove(0);
            self.residuals.remove(0);
        }
        let m = self.iterates.len() - 1;
        if m == 0 {
            return plain;
        }
        let rows = res.len();
        let d_res = DMatrix::from_fn(rows, m, |i, k| self.residuals[k + 1][i] - self.residuals[k][i]);
        let rhs = DVector::from_column_slice(&res);
        let Ok(coef) = d_res.svd(true, true).solve(&rhs, 1e-12) else {
            return plain;
        };
        let mixed: Vec<f64> = (0..rows)
            .map(|i| {
                let correction: f64 = (0..m)
                    .map(|k| {
                        let dx = self.iterates[k + 1][i] - self.iterates[k][i];
                        let dr = self.residuals[k + 1][i] - self.residuals[k][i];
                        coef[k] * (dx + self.mixing * dr)
                    })
                    .sum();
                plain[i] - correction
            })
            .collect();
        if mixed.iter().all(|v| v.is_finite()) {
            mixed
        } else {
            self.reset();
            plain
        }
    }
}

/// Growth factor over the first Picard image at which the iteration is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 1e12;

/// Fixed-point iteration `u <- S(a g(u))` with the exact signed radial inverse `S`.
///
/// The first step is undamped from `u = 0`; later steps mix with `damping`
/// and, when `anderson_depth > 0`, Anderson extrapolation, restarted from a
/// plain step whenever the residual stalls for more than `anderson_depth`
/// iterations. Each image is
/// tested by [`weak_residual`]; the iteration stops at the first image below
/// `residual_tol`. Running out of iterations is reported, not raised, and so
/// is an iterate that outgrows the first image by [`DIVERGENCE_GROWTH`].
pub fn solve_semilinear(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<SolveReport> {
    spec.validate()?;
    cfg.validate()?;
    let grid = grid_for(spec, cfg)?;
    let mut u = RadialFunction::zero(grid.clone());
    let mut history = Vec::new();
    let mut mixer = Anderson::new(cfg.anderson_depth, cfg.damping);
    let mut last = None;
    let (mut best, mut best_at) = (f64::INFINITY, 0);
    let mut first_sup = 0.0;
    for k in 0..cfg.max_picard {
        let image = picard_map(spec, &u)?;
        let residual = weak_residual_eps(&image, spec, cfg.grad_regularization)?;
        history.push(residual);
        if !residual.is_finite() {
            last = Some((image, k + 1, residual));
            break;
        }
        if residual <= cfg.residual_tol {
            return finish(spec, image, k + 1, residual, true, history);
        }
        if residual < best {
            (best, best_at) = (residual, k);
        }
        let stalled = k - best_at > cfg.anderson_depth;
        if stalled {
            mixer.reset();
            best_at = k;
        }
        let next = if k == 0 {
            image.values().to_vec()
        } else if cfg.anderson_depth == 0 || stalled {
            u.values().iter().zip(image.values()).map(|(x, g)| x + cfg.damping * (g - x)).collect()
        } else {
            mixer.next(u.values(), image.values())
        };
        if k == 0 {
            first_sup = image.max_abs();
        }
        let runaway = next.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_GROWTH * first_sup);
        last = Some((image, k + 1, residual));
        if first_sup > 0.0 && runaway {
            break;
        }
        u = RadialFunction::from_values(grid.clone(), next)?;
    }
    let (image, iterations, residual) = last.expect("at least one iteration");
    finish(spec, image, iterations, residual, false, history)
}

fn finish(
    spec: &ProblemSpec,
    u: RadialFunction,
    iterations: usize,
    residual: f64,
    converged: bool,
    residual_history: Vec<f64>,
) -> Result<SolveReport> {
    let f = spec.rhs(&u)?.abs();
    let envelope = flux_inverse(&f, spec.p, spec.n, boundary_of(spec))?.u;
    let positivity = u.values().iter().all(|&v| v >= 0.0);
    Ok(SolveReport {
        u,
        iterations,
        residual,
        converged,
        positivity,
        residual_history,
        envelope: Some(envelope),
    })
}

/// Largest normalized weak residual over a dyadic family of hats.
///
/// The family holds, for every level `s = 1, 2, 4, ...`, the hats that are
/// piecewise linear between the nodes `i - s`, `i`, `i + s` (with `i` a
/// multiple of `s`, the one at `i = 0` one-sided), all supported inside
/// `[0, r_max]`. For each hat this is `|<-Delta_p u - f, phi>| / ||phi||_X`
/// with both pairings taken over `R^N`; `f` enters through its
/// piecewise-linear interpolant. Coarse hats are combinations of the nodal
/// ones, so every pairing is exact for P1 profiles.
pub fn weak_residual_with_rhs(u: &RadialFunction, f: &RadialFunction, p: f64, n: u32, eps: f64) -> Result<f64> {
    check_p_n(p, n)?;
    let grid = u.grid();
    let f = f.resample(grid)?;
    let x = grid.nodes();
    let v = u.values();
    let moments = interval_moments(grid, n);
    let b = loads(f.values(), &moments);
    let intervals = grid.intervals();
    let mut flux = Vec::with_capacity(intervals);
    for j in 0..intervals {
        let hj = x[j + 1] - x[j];
        let slope = (v[j + 1] - v[j]) / hj;
        let a = if p < 2.0 && eps > 0.0 {
            (slope * slope + eps * eps).powf(0.5 * (p - 2.0)) * slope
        } else {
            phi(slope, p)
        };
        flux.push(a * moments[j].mass() / hj);
    }
    // pairing with the nodal hat i
    let nodal: Vec<f64> = (0..intervals)
        .map(|i| if i > 0 { flux[i - 1] } else { 0.0 } - flux[i] - b[i])
        .collect();
    let nf = f64::from(n);
    let shell = |a: f64, b: f64| (b.powf(nf) - a.powf(nf)) / nf;
    let omega = sphere_area(n);
    let mut worst: f64 = 0.0;
    let mut s = 1;
    while s <= intervals {
        for i in (0..=intervals - s).step_by(s) {
            let mut pairing = 0.0;
            let mut energy = 0.0;
            if i > 0 {
                let a = x[i - s];
                let width = x[i] - a;
                for k in i - s + 1..=i {
                    pairing += (x[k] - a) / width * nodal[k];
                }
                energy += shell(a, x[i]) * width.powf(-p);
            }
            let c = x[i + s];
            let width = c - x[i];
            let first = if i > 0 { i + 1 } else { i };
            for k in first..i + s {
                pairing += (c - x[k]) / width * nodal[k];
            }
            energy += shell(x[i], c) * width.powf(-p);
            let value = omega * pairing.abs() / (omega * energy).powf(1.0 / p);
            if value.is_nan() {
                return fit(format!("weak residual is not finite at node {i}"));
            }
            worst = worst.max(value);
        }
        s *= 2;
    }
    Ok(worst)
}

/// [`weak_residual_with_rhs`] for the right-hand side `a(x) g(u)` of `spec`.
pub fn weak_residual(u: &RadialFunction, spec: &ProblemSpec) -> Result<f64> {
    weak_residual_eps(u, spec, 0.0)
}

fn weak_residual_eps(u: &RadialFunction, spec: &ProblemSpec, eps: f64) -> Result<f64> {
    let f = spec.rhs(u)?;
    weak_residual_with_rhs(u, &f, spec.p, spec.n, eps)
}

/// A node where `|u| > v + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub radius: f64,
    pub u: f64,
    pub v: f64,
}

/// Nodes at which `|u|` exceeds `v + tol`; empty when `|u| <= v` holds on the grid.
pub fn comparison_check(u: &RadialFunction, v: &RadialFunction, tol: f64) -> Result<Vec<Violation>> {
    if !u.grid().same_as(v.grid()) {
        return Err(Error::Grid("comparison needs a common grid".into()));
    }
    Ok(u.grid()
        .nodes()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .enumerate()
        .filter(|(_, (_, (a, b)))| a.abs() > **b + tol)
        .map(|(index, (&radius, (&u, &v)))| Violation { index, radius, u, v })
        .collect())
}

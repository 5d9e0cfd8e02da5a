//! Radial measures, Wolff potentials and decay fits.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{domain, fit, Error, Result};
use crate::exponents::critical_sobolev;
use crate::quad::{ball_volume, gauss, linear_fit, sphere_area, IntervalMoments};
use crate::radial::RadialFunction;

/// Absolutely continuous radial measure `d mu = w_hat dx` on `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    density: RadialFunction,
    n: u32,
    /// `mu(B(0, r_j))` at every grid node.
    cumulative: Vec<f64>,
    total_mass: f64,
    /// Nodes where the density slope changes abruptly; kept as quadrature breaks.
    kinks: Vec<f64>,
}

impl RadialMeasure {
    pub fn new(density: RadialFunction, n: u32) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension N >= 2 required (N = {n})"));
        }
        if density.values().iter().any(|&v| v < 0.0) || (density.tail().is_some() && density.tail_sign() < 0.0) {
            return domain("measure density must be nonnegative");
        }
        let omega = sphere_area(n);
        let x = density.grid().nodes();
        let v = density.values();
        let mut cumulative = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for j in 0..x.len() - 1 {
            let m = IntervalMoments::new(x[j], x[j + 1], n);
            acc += omega * (v[j] * m.left() + v[j + 1] * m.right());
            cumulative.push(acc);
        }
        let kinks = find_kinks(&density);
        let mut measure = Self { density, n, cumulative, total_mass: acc, kinks };
        measure.total_mass = acc + measure.tail_mass(measure.density.grid().r_max())?;
        Ok(measure)
    }

    pub fn density(&self) -> &RadialFunction {
        &self.density
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `mu(R^N \ B(0, s))` for `s >= r_max`.
    fn tail_mass(&self, s: f64) -> Result<f64> {
        let Some(tail) = self.density.tail() else {
            return Ok(0.0);
        };
        let decay = tail.gamma - f64::from(self.n);
        if !(decay > 0.0) {
            return fit(format!(
                "density tail exponent {} does not exceed N = {}; the total mass is infinite",
                tail.gamma, self.n
            ));
        }
        Ok(sphere_area(self.n) * tail.coeff * s.powf(-decay) / decay)
    }

    /// Mass of the centered ball `B(0, t)`.
    pub fn centered_mass(&self, t: f64) -> f64 {
        let grid = self.density.grid();
        let r_max = grid.r_max();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= r_max {
            // tail mass is finite once the measure exists
            return self.total_mass - self.tail_mass(t).unwrap_or(0.0);
        }
        let j = grid.locate(t);
        let x = grid.nodes();
        let (a, b) = (x[j], x[j + 1]);
        let (va, vb) = (self.density.values()[j], self.density.values()[j + 1]);
        let n = self.n;
        let partial = gauss(crate::quad::rule_size(n + 1), a, t, |r| {
            (va + (r - a) / (b - a) * (vb - va)) * r.powi(n as i32 - 1)
        });
        self.cumulative[j] + sphere_area(n) * partial
    }

    /// Fraction of the sphere `|y| = rho` inside `B(x, t)` with `|x| = d > 0`.
    fn cap_fraction(&self, rho: f64, d: f64, t: f64) -> f64 {
        let c = (rho * rho + d * d - t * t) / (2.0 * rho * d);
        if c >= 1.0 {
            return 0.0;
        }
        if c <= -1.0 {
            return 1.0;
        }
        let half = 0.5 * beta_reg(0.5 * (f64::from(self.n) - 1.0), 0.5, 1.0 - c * c);
        if c >= 0.0 {
            half
        } else {
            1.0 - half
        }
    }

    /// `int_lo^hi w_hat(rho) omega rho^{N-1} cap(rho) d rho` over grid-aligned panels.
    fn lens(&self, lo: f64, hi: f64, d: f64, t: f64) -> f64 {
        const MAX_PANELS: usize = 64;
        const POINTS: usize = 8;
        let n = self.n;
        let omega = sphere_area(n);
        let integrand = |rho: f64| {
            self.density.eval(rho) * omega * rho.powi(n as i32 - 1) * self.cap_fraction(rho, d, t)
        };
        let grid = self.density.grid();
        let r_max = grid.r_max();
        let mut total = 0.0;
        let inner_hi = hi.min(r_max);
        if lo < inner_hi {
            let x = grid.nodes();
            let first = grid.locate(lo) + 1;
            let last = grid.locate(inner_hi);
            let inside: Vec<f64> = if last >= first { x[first..=last].to_vec() } else { Vec::new() };
            let stride = inside.len().div_ceil(MAX_PANELS).max(1);
            let mut breaks = vec![lo];
            breaks.extend(inside.iter().step_by(stride).copied().filter(|&r| r > lo && r < inner_hi));
            breaks.extend(self.kinks.iter().copied().filter(|&r| r > lo && r < inner_hi));
            breaks.push(inner_hi);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            for w in breaks.windows(2) {
                total += gauss(POINTS, w[0], w[1], integrand);
            }
        }
        let outer_lo = lo.max(r_max);
        if outer_lo < hi && self.density.tail().is_some() {
            let decades = (hi / outer_lo).log10();
            let panels = ((decades * 16.0).ceil() as usize).max(2);
            let ratio = (hi / outer_lo).powf(1.0 / panels as f64);
            let mut a = outer_lo;
            for _ in 0..panels {
                let b = a * ratio;
                total += gauss(POINTS, a, b.min(hi), integrand);
                a = b;
            }
        }
        total
    }
}

const MAX_KINKS: usize = 64;

fn find_kinks(density: &RadialFunction) -> Vec<f64> {
    let x = density.grid().nodes();
    let v = density.values();
    let slope = |j: usize| (v[j + 1] - v[j]) / (x[j + 1] - x[j]);
    let mut kinks: Vec<(f64, f64)> = (1..x.len() - 1)
        .filter_map(|i| {
            let (a, b) = (slope(i - 1), slope(i));
            let jump = (b - a).abs();
            (jump > 0.5 * (a.abs() + b.abs()) && jump > 0.0).then_some((jump, x[i]))
        })
        .collect();
    if kinks.len() > MAX_KINKS {
        kinks.sort_by(|a, b| b.0.total_cmp(&a.0));
        kinks.truncate(MAX_KINKS);
    }
    let mut out: Vec<f64> = kinks.into_iter().map(|(_, r)| r).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// `mu(B(x, t))` for `|x| = x_radius`.
///
/// Off-center balls split into the shells lying fully inside, which carry
/// centered mass, and a lens in which each shell contributes the cap fraction
/// given by the regularized incomplete beta function.
pub fn mu_ball(m: &RadialMeasure, x_radius: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("ball radius must be nonnegative (t = {t})"));
    }
    if !(x_radius >= 0.0) {
        return domain(format!("distance from the origin must be nonnegative ({x_radius})"));
    }
    if x_radius == 0.0 {
        return Ok(m.centered_mass(t));
    }
    let d = x_radius;
    let inner = if t > d { m.centered_mass(t - d) } else { 0.0 };
    let lens = m.lens((t - d).abs(), t + d, d, t);
    Ok((inner + lens).min(m.total_mass.max(inner)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolffValue {
    pub x_radius: f64,
    /// Upper integration limit; `f64::INFINITY` for the full potential.
    pub r_outer: f64,
    pub value: f64,
    pub quadrature_error: f64,
}

/// Truncation radius of the numerical part of `W(x, inf)`.
fn truncation_radius(x_radius: f64) -> f64 {
    1e4 * x_radius.max(1.0)
}

/// Wolff potential `W(x, R) = int_0^R (mu(B(x,t)) / t^{N-p})^{1/(p-1)} dt / t`.
///
/// Near `t = 0` the integrand follows the power law of `w_hat(x) |B_1| t^N`
/// and is integrated exactly; for `R = inf` the part beyond `T = 10^4 max(1, |x|)`
/// uses the total mass in closed form. `quadrature_error` collects the
/// mismatch of both model pieces against the computed measure.
pub fn wolff(m: &RadialMeasure, x_radius: f64, r_outer: f64, p: f64, n: u32) -> Result<WolffValue> {
    critical_sobolev(p, n)?;
    if n != m.n {
        return domain(format!("measure lives in dimension {}, not {n}", m.n));
    }
    if !(r_outer > 0.0) {
        return domain(format!("outer radius must be positive (R = {r_outer})"));
    }
    if !(x_radius >= 0.0) {
        return domain(format!("distance from the origin must be nonnegative ({x_radius})"));
    }
    if !m.total_mass.is_finite() {
        return fit("total mass is infinite");
    }
    let nf = f64::from(n);
    let e = 1.0 / (p - 1.0);
    let integrand = |t: f64| -> Result<f64> {
        let mass = mu_ball(m, x_radius, t)?;
        Ok((mass * t.powf(p - nf)).powf(e) / t)
    };
    let big_t = truncation_radius(x_radius);
    let end = r_outer.min(big_t);
    let t0 = (1e-8 * x_radius.max(1.0)).min(0.5 * end);

    // head: mu(B(x,t)) ~ w_hat(x) |B_1| t^N
    let k = (m.density.eval(x_radius) * ball_volume(n)).powf(e);
    let head = k * t0.powf(p * e) / (p * e);
    let actual = mu_ball(m, x_radius, t0)?;
    let model = m.density.eval(x_radius) * ball_volume(n) * t0.powf(nf);
    let head_error = if model > 0.0 { head * ((actual / model).powf(e) - 1.0).abs() } else { 0.0 };

    let mut breaks = vec![t0];
    if x_radius == 0.0 {
        breaks.extend(m.density.grid().nodes().iter().copied().filter(|&r| r > t0 && r < end));
        let r_max = m.density.grid().r_max();
        if end > r_max {
            log_breaks(&mut breaks, r_max.max(t0), end, 16);
        }
    } else {
        log_breaks(&mut breaks, t0, end, 40);
        let r_max = m.density.grid().r_max();
        for special in [x_radius, x_radius + r_max, (x_radius - r_max).abs()] {
            if special > t0 && special < end {
                breaks.push(special);
            }
        }
    }
    breaks.push(end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut body = 0.0;
    let mut failure = None;
    for w in breaks.windows(2) {
        body += gauss(8, w[0], w[1], |t| match integrand(t) {
            Ok(v) => v,
            Err(err) => {
                failure = Some(err);
                0.0
            }
        });
    }
    if let Some(err) = failure {
        return Err(err);
    }

    let mut value = head + body;
    let mut quadrature_error = head_error;
    if r_outer > big_t {
        // int_T^R (M / t^{N-p})^{1/(p-1)} dt / t
        let k = (nf - p) * e;
        let span = (big_t.powf(-k) - if r_outer.is_infinite() { 0.0 } else { r_outer.powf(-k) }) / k;
        let tail = m.total_mass.powf(e) * span;
        let lower = mu_ball(m, x_radius, big_t)?.powf(e) * span;
        value += tail;
        quadrature_error += (tail - lower).abs();
    }
    if !value.is_finite() {
        return fit("Wolff potential is not finite");
    }
    Ok(WolffValue { x_radius, r_outer, value, quadrature_error })
}

fn log_breaks(breaks: &mut Vec<f64>, from: f64, to: f64, per_decade: usize) {
    if !(to > from) || from <= 0.0 {
        return;
    }
    let panels = (((to / from).log10() * per_decade as f64).ceil() as usize).max(1);
    let ratio = (to / from).powf(1.0 / panels as f64);
    let mut t = from;
    for _ in 1..panels {
        t *= ratio;
        breaks.push(t);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedFit {
    pub c1: f64,
    pub c2: f64,
    pub sample_radii: Vec<f64>,
    /// `v(x) / W(x, inf)` at each sample radius.
    pub ratio_series: Vec<f64>,
}

/// Ratios `v / W(., inf)` at the sample radii and their extreme values.
pub fn two_sided_fit(v: &RadialFunction, m: &RadialMeasure, p: f64, n: u32, sample_radii: &[f64]) -> Result<TwoSidedFit> {
    if sample_radii.is_empty() {
        return fit("no sample radii");
    }
    let mut ratio_series = Vec::with_capacity(sample_radii.len());
    for &x in sample_radii {
        let w = wolff(m, x, f64::INFINITY, p, n)?;
        let ratio = v.eval(x) / w.value;
        if !(ratio.is_finite() && ratio > 0.0) {
            return fit(format!("ratio v/W at radius {x} is {ratio}"));
        }
        ratio_series.push(ratio);
    }
    let c1 = ratio_series.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = ratio_series.iter().copied().fold(0.0, f64::max);
    Ok(TwoSidedFit { c1, c2, sample_radii: sample_radii.to_vec(), ratio_series })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_fit: f64,
    pub gamma_fit: f64,
    pub window: (f64, f64),
    /// `(N - p) / (p - 1)`.
    pub target_gamma: f64,
    pub rms_log_error: f64,
}

/// Least-squares fit of `log |u| = log C - gamma log r` over the grid nodes in `window`.
pub fn decay_fit(u: &RadialFunction, window: (f64, f64), p: f64, n: u32) -> Result<DecayFit> {
    critical_sobolev(p, n)?;
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= 4.0 * lo) {
        return domain(format!("fit window needs 0 < r_lo and r_hi >= 4 r_lo ({lo}, {hi})"));
    }
    if hi > u.grid().r_max() {
        return Err(Error::Grid(format!("fit window ends at {hi} beyond r_max = {}", u.grid().r_max())));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&r, &v) in u.grid().nodes().iter().zip(u.values()) {
        if r < lo || r > hi {
            continue;
        }
        if !(v > 0.0) {
            return fit(format!("profile is not positive at radius {r}"));
        }
        xs.push(r.ln());
        ys.push(v.ln());
    }
    if xs.len() < 8 {
        return fit(format!("only {} grid nodes in the fit window", xs.len()));
    }
    let (intercept, slope, rms) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        c_fit: intercept.exp(),
        gamma_fit: -slope,
        window,
        target_gamma: (f64::from(n) - p) / (p - 1.0),
        rms_log_error: rms,
    })
}

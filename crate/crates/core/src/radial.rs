//! Radial grids, radial profiles with power-law tails, and the norms built on them.
//!
//! A profile is known at the grid nodes on `[0, r_max]` and interpolated
//! piecewise linearly in between. Beyond `r_max` an optional tail
//! `sign * C * r^{-gamma}` stands in for the unbounded part of `R^N`; the sign
//! is that of the last node value. Norms integrate the grid part with the
//! composite trapezoid rule against `omega_{N-1} rho^{N-1}` and add the tail in
//! closed form, reporting the tail share separately as `truncation_error`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, fit, Error, Result};
use crate::quad::sphere_area;

/// Node placement of a [`RadialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    Uniform,
    /// Spacing grows by a fixed `ratio` from a first interval of at most `r_max / n^2`.
    Geometric { ratio: f64 },
    /// Nodes supplied by the caller, e.g. read back from CSV.
    Explicit,
}

/// Requested grading for [`make_grid`]; the geometric ratio is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradingKind {
    Uniform,
    Geometric,
}

pub const MIN_INTERVALS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Arc<Self>> {
        Self::checked(nodes, Grading::Explicit)
    }

    fn checked(nodes: Vec<f64>, grading: Grading) -> Result<Arc<Self>> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return domain(format!("a grid needs at least {} nodes", MIN_INTERVALS + 1));
        }
        if nodes[0] != 0.0 {
            return domain("the first grid node must be 0");
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|x| x.is_finite()) {
            return domain("grid nodes must be finite and strictly increasing");
        }
        Ok(Arc::new(Self { nodes, grading }))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Index `j` of the interval `[r_j, r_{j+1}]` that contains `r` (clamped).
    pub fn locate(&self, r: f64) -> usize {
        let last = self.intervals() - 1;
        match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    /// Composite trapezoid weights for `int_0^{r_max} f(rho) rho^{N-1} d rho`.
    pub fn trapezoid_weights(&self, n: u32) -> Vec<f64> {
        let x = &self.nodes;
        let m = x.len();
        (0..m)
            .map(|i| {
                let left = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
                let right = if i + 1 < m { x[i + 1] - x[i] } else { 0.0 };
                0.5 * (left + right) * x[i].powi(n as i32 - 1)
            })
            .collect()
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.nodes == other.nodes
    }
}

/// Builds a grid with `n` intervals on `[0, r_max]`.
pub fn make_grid(r_max: f64, n: usize, grading: GradingKind) -> Result<Arc<RadialGrid>> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return domain(format!("r_max must be positive (r_max = {r_max})"));
    }
    if n < MIN_INTERVALS {
        return domain(format!("at least {MIN_INTERVALS} intervals required (n = {n})"));
    }
    match grading {
        GradingKind::Uniform => {
            let h = r_max / n as f64;
            let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            nodes[n] = r_max;
            RadialGrid::checked(nodes, Grading::Uniform)
        }
        GradingKind::Geometric => {
            let h0 = r_max / (n as f64 * n as f64);
            let ratio = geometric_ratio(n);
            let mut nodes = Vec::with_capacity(n + 1);
            let mut r = 0.0;
            let mut h = h0;
            nodes.push(0.0);
            for _ in 0..n {
                r += h;
                h *= ratio;
                nodes.push(r);
            }
            // Rescale away rounding drift so the last node is exactly r_max.
            let scale = r_max / nodes[n];
            for x in nodes.iter_mut() {
                *x *= scale.min(1.0);
            }
            nodes[n] = r_max;
            RadialGrid::checked(nodes, Grading::Geometric { ratio })
        }
    }
}

/// Solves `(q^n - 1) / (q - 1) = n^2` for `q > 1` by bisection on `ln q`.
fn geometric_ratio(n: usize) -> f64 {
    let target = (n as f64).powi(2).ln();
    let log_sum = |lq: f64| {
        // ln((q^n - 1) / (q - 1)) with q = e^lq, evaluated stably
        let nl = n as f64 * lq;
        nl + (-(-nl).exp()).ln_1p() - lq.exp_m1().ln()
    };
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_sum(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// Power-law model `|u(r)| ~ coeff * r^{-gamma}` for `r > r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub coeff: f64,
    pub gamma: f64,
}

impl Tail {
    pub fn new(coeff: f64, gamma: f64) -> Result<Self> {
        if !(coeff >= 0.0) || !coeff.is_finite() || !(gamma >= 0.0) || !gamma.is_finite() {
            return domain(format!("tail needs C >= 0 and gamma >= 0 (C = {coeff}, gamma = {gamma})"));
        }
        Ok(Self { coeff, gamma })
    }

    /// Tail through the point `(r, |value|)` with the given exponent.
    pub fn through(r: f64, value: f64, gamma: f64) -> Self {
        Self { coeff: value.abs() * r.powf(gamma), gamma }
    }

    pub fn magnitude(&self, r: f64) -> f64 {
        self.coeff * r.powf(-self.gamma)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == 0.0
    }

    /// `int_R^inf (C r^{-gamma})^s r^{N-1} dr` divided by `scale^s`, as a logarithm.
    ///
    /// Errors when the integral diverges, i.e. `s gamma <= N`.
    fn log_power_integral(&self, s: f64, n: u32, r_max: f64, scale: f64) -> Result<Option<f64>> {
        if self.is_zero() {
            return Ok(None);
        }
        let decay = s * self.gamma - f64::from(n);
        if !(decay > 0.0) {
            return fit(format!(
                "tail integral diverges: exponent {s} times decay {} does not exceed N = {n}",
                self.gamma
            ));
        }
        Ok(Some(s * (self.coeff / scale).ln() - decay * r_max.ln() - decay.ln()))
    }
}

/// A radial profile on a grid, optionally continued by a power-law tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    tail: Option<Tail>,
}

impl RadialFunction {
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return domain("profile values must be finite");
        }
        Ok(Self { grid, values, tail: None })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid, values)
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n], tail: None }
    }

    /// Attaches a tail after checking it agrees with the last node within 20%.
    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        let tail = Tail::new(tail.coeff, tail.gamma)?;
        let last = self.last_value().abs();
        let model = tail.magnitude(self.grid.r_max());
        let consistent = if last == 0.0 { model == 0.0 } else { (model - last).abs() <= 0.2 * last };
        if !consistent {
            return fit(format!(
                "tail model {model:e} at r_max disagrees with last node value {last:e} by more than 20%"
            ));
        }
        self.tail = if tail.is_zero() { None } else { Some(tail) };
        Ok(self)
    }

    /// Attaches a tail of exponent `gamma` matched exactly to the last node.
    pub fn with_matched_tail(self, gamma: f64) -> Result<Self> {
        let tail = Tail::through(self.grid.r_max(), self.last_value(), gamma);
        self.with_tail(tail)
    }

    pub fn without_tail(mut self) -> Self {
        self.tail = None;
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Sign carried by the tail beyond `r_max`.
    pub fn tail_sign(&self) -> f64 {
        if self.last_value() < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Evaluates the interpolant (or the tail beyond `r_max`).
    pub fn eval(&self, r: f64) -> f64 {
        let r_max = self.grid.r_max();
        if r > r_max {
            return match self.tail {
                Some(t) => self.tail_sign() * t.magnitude(r),
                None => 0.0,
            };
        }
        let j = self.grid.locate(r);
        let x = self.grid.nodes();
        let s = (r - x[j]) / (x[j + 1] - x[j]);
        self.values[j] + s * (self.values[j + 1] - self.values[j])
    }

    /// Resamples onto another grid through [`RadialFunction::eval`]; the tail is kept.
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> Result<Self> {
        if self.grid.same_as(grid) {
            return Ok(self.clone());
        }
        let mut out = Self::from_fn(grid.clone(), |r| self.eval(r))?;
        if let Some(t) = self.tail {
            if grid.r_max() >= self.grid.r_max() {
                out = out.with_matched_tail(t.gamma)?;
            }
        }
        Ok(out)
    }

    /// `t * u`, with the tail coefficient scaled by `|t|`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
            tail: self.tail.map(|tl| Tail { coeff: tl.coeff * t.abs(), gamma: tl.gamma }),
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
            tail: self.tail,
        }
    }

    /// `max(u, 0)`; the tail survives only if it is positive.
    pub fn positive_part(&self) -> Self {
        self.signed_part(1.0)
    }

    /// `max(-u, 0)`.
    pub fn negative_part(&self) -> Self {
        self.signed_part(-1.0)
    }

    fn signed_part(&self, sign: f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| (sign * v).max(0.0)).collect();
        let tail = if self.tail_sign() == sign && values[values.len() - 1] > 0.0 {
            self.tail
        } else {
            None
        };
        Self { grid: self.grid.clone(), values, tail }
    }

    /// Applies `f` nodewise and gives the result the supplied tail.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64, tail: Option<Tail>) -> Result<Self> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        let out = Self::from_values(self.grid.clone(), values)?;
        match tail {
            Some(t) => out.with_tail(t),
            None => Ok(out),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0) && self.tail.is_none()
    }

    /// CSV with a `# tail:` comment line followed by `radius,value` rows.
    pub fn to_csv(&self) -> String {
        let (c, g) = self.tail.map_or((0.0, 0.0), |t| (t.coeff, t.gamma));
        let mut out = String::with_capacity(32 * self.values.len());
        let _ = writeln!(out, "# tail: C={} gamma={}", format_value(c), format_value(g));
        out.push_str("radius,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", format_value(*r), format_value(*v));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut tail = None;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(spec) = comment.trim().strip_prefix("tail:") {
                    tail = Some(parse_tail_comment(spec, lineno + 1)?);
                }
                continue;
            }
            if !header_seen {
                if line != "radius,value" {
                    return domain(format!("line {}: expected header `radius,value`", lineno + 1));
                }
                header_seen = true;
                continue;
            }
            let (r, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Domain(format!("line {}: expected two fields", lineno + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("line {}: {e}", lineno + 1)))
            };
            radii.push(parse(r)?);
            values.push(parse(v)?);
        }
        let grid = RadialGrid::from_nodes(radii)?;
        let f = Self::from_values(grid, values)?;
        match tail {
            Some(t) if !t.is_zero() => f.with_tail(t),
            _ => Ok(f),
        }
    }
}

fn parse_tail_comment(spec: &str, lineno: usize) -> Result<Tail> {
    let mut coeff = None;
    let mut gamma = None;
    for field in spec.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("line {lineno}: malformed tail field `{field}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|e| Error::Domain(format!("line {lineno}: tail field `{field}`: {e}")))?;
        match key {
            "C" => coeff = Some(value),
            "gamma" => gamma = Some(value),
            _ => return domain(format!("line {lineno}: unknown tail field `{key}`")),
        }
    }
    match (coeff, gamma) {
        (Some(c), Some(g)) => Tail::new(c, g),
        _ => domain(format!("line {lineno}: tail comment needs C and gamma")),
    }
}

/// A norm together with the share contributed by the tail model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    /// Lebesgue exponent; `f64::INFINITY` for the supremum norm.
    pub exponent: f64,
    pub value: f64,
    pub truncation_error: f64,
}

/// Weight `c / (1 + |x|^{N + alpha})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub alpha: f64,
    pub c: f64,
}

impl WeightSpec {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(c > 0.0) {
            return domain(format!("weight needs alpha > 0 and c > 0 (alpha = {alpha}, c = {c})"));
        }
        Ok(Self { alpha, c })
    }

    pub fn eval(&self, r: f64, n: u32) -> f64 {
        self.c / (1.0 + r.powf(f64::from(n) + self.alpha))
    }

    /// Tail model `c r^{-(N + alpha)}` of the weight.
    pub fn tail(&self, n: u32) -> Tail {
        Tail { coeff: self.c, gamma: f64::from(n) + self.alpha }
    }

    /// The weight sampled on a grid, tail attached.
    pub fn profile(&self, grid: &Arc<RadialGrid>, n: u32) -> Result<RadialFunction> {
        RadialFunction::from_fn(grid.clone(), |r| self.eval(r, n))?.with_matched_tail(f64::from(n) + self.alpha)
    }
}

/// Scaled power sum `omega * sum_i w_i (|f_i| / scale)^s` plus tail; returns (grid part, tail part).
fn scaled_power_sum(
    values: impl Iterator<Item = f64>,
    weights: &[f64],
    s: f64,
    scale: f64,
    tail_log: Option<f64>,
    omega: f64,
) -> (f64, f64) {
    let grid_part: f64 = values.zip(weights).map(|(v, w)| w * (v.abs() / scale).powf(s)).sum();
    let tail_part = tail_log.map_or(0.0, f64::exp);
    (omega * grid_part, omega * tail_part)
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 2 {
        return domain(format!("dimension N >= 2 required (N = {n})"));
    }
    Ok(())
}

/// `|u|_{r}` on `R^N` for `1 <= r <= inf`.
pub fn lr_norm(u: &RadialFunction, r: f64, n: u32) -> Result<NormValue> {
    check_dimension(n)?;
    if !(r >= 1.0) {
        return domain(format!("Lebesgue exponent r >= 1 required (r = {r})"));
    }
    let r_max = u.grid.r_max();
    let tail_max = u.tail.map_or(0.0, |t| t.magnitude(r_max));
    let grid_max = u.max_abs();
    if r.is_infinite() {
        let value = grid_max.max(tail_max);
        return Ok(NormValue { exponent: r, value, truncation_error: value - grid_max });
    }
    let scale = grid_max.max(tail_max);
    if scale == 0.0 {
        return Ok(NormValue { exponent: r, value: 0.0, truncation_error: 0.0 });
    }
    let tail_log = match u.tail {
        Some(t) => t.log_power_integral(r, n, r_max, scale)?,
        None => None,
    };
    let weights = u.grid.trapezoid_weights(n);
    let (inner, tail) =
        scaled_power_sum(u.values.iter().copied(), &weights, r, scale, tail_log, sphere_area(n));
    let value = scale * (inner + tail).powf(1.0 / r);
    let without_tail = scale * inner.powf(1.0 / r);
    Ok(NormValue { exponent: r, value, truncation_error: value - without_tail })
}

/// `(int w |u|^q dx)^{1/q}` with the weight of [`WeightSpec`].
///
/// The tail uses the leading-order weight `c r^{-(N+alpha)}`.
pub fn weighted_norm(u: &RadialFunction, q: f64, weight: &WeightSpec, n: u32) -> Result<NormValue> {
    check_dimension(n)?;
    if !(q > 1.0) || !q.is_finite() {
        return domain(format!("weighted norm needs 1 < q < inf (q = {q})"));
    }
    let r_max = u.grid.r_max();
    let scale = u.max_abs().max(u.tail.map_or(0.0, |t| t.magnitude(r_max)));
    if scale == 0.0 {
        return Ok(NormValue { exponent: q, value: 0.0, truncation_error: 0.0 });
    }
    let weights: Vec<f64> = u
        .grid
        .trapezoid_weights(n)
        .iter()
        .zip(u.grid.nodes())
        .map(|(w, &r)| w * weight.eval(r, n))
        .collect();
    // Product tail: (C r^{-gamma})^q * c r^{-(N + alpha)} = (c^{1/q} C r^{-(gamma + (N + alpha)/q)})^q.
    let tail_log = match u.tail {
        Some(t) => {
            let nf = f64::from(n);
            let product = Tail {
                coeff: weight.c.powf(1.0 / q) * t.coeff,
                gamma: t.gamma + (nf + weight.alpha) / q,
            };
            product.log_power_integral(q, n, r_max, scale)?
        }
        None => None,
    };
    let (inner, tail) =
        scaled_power_sum(u.values.iter().copied(), &weights, q, scale, tail_log, sphere_area(n));
    let value = scale * (inner + tail).powf(1.0 / q);
    Ok(NormValue { exponent: q, value, truncation_error: value - scale * inner.powf(1.0 / q) })
}

/// Nodal derivative: centered differences inside, one-sided at both ends.
pub fn derivative(u: &RadialFunction) -> Vec<f64> {
    let x = u.grid.nodes();
    let v = &u.values;
    let m = x.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / (x[1] - x[0])
            } else if i == m - 1 {
                (v[i] - v[i - 1]) / (x[i] - x[i - 1])
            } else {
                (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1])
            }
        })
        .collect()
}

/// `(int |grad u|^p dx)^{1/p}`.
pub fn energy_norm(u: &RadialFunction, p: f64, n: u32) -> Result<NormValue> {
    check_dimension(n)?;
    if !(p > 1.0) || !(p < f64::from(n)) {
        return domain(format!("1 < p < N required (p = {p}, N = {n})"));
    }
    let r_max = u.grid.r_max();
    let du = derivative(u);
    // |u'| in the tail is gamma C r^{-gamma-1}.
    let dtail = u
        .tail
        .filter(|t| t.gamma > 0.0)
        .map(|t| Tail { coeff: t.gamma * t.coeff, gamma: t.gamma + 1.0 });
    let scale = du
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()))
        .max(dtail.map_or(0.0, |t| t.magnitude(r_max)));
    if scale == 0.0 {
        return Ok(NormValue { exponent: p, value: 0.0, truncation_error: 0.0 });
    }
    let tail_log = match dtail {
        Some(t) => t.log_power_integral(p, n, r_max, scale)?,
        None => None,
    };
    let weights = u.grid.trapezoid_weights(n);
    let (inner, tail) = scaled_power_sum(du.into_iter(), &weights, p, scale, tail_log, sphere_area(n));
    let value = scale * (inner + tail).powf(1.0 / p);
    Ok(NormValue { exponent: p, value, truncation_error: value - scale * inner.powf(1.0 / p) })
}

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e16)`.
pub fn format_value(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

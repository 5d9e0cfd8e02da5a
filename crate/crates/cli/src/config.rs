//! Flat `section.key = value` scenario files.
//!
//! Every key must be known, may appear once, and must parse into a value that
//! satisfies the invariants of the type it feeds. All problems in a file are
//! reported together, each with its line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use plap_core::exponents::{critical_sobolev, ExponentParams};
use plap_core::radial::{make_grid, GradingKind, WeightSpec};
use plap_core::solver::{Coefficient, Domain, GForm, Nonlinearity, ProblemSpec, SignPattern, SolverConfig};
use serde::Serialize;

/// The eight scenario kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Wolff,
    VerifyChain,
    Certify,
    Embedding,
    Sweep,
    Audit,
    Local,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Self::Solve,
        Self::Wolff,
        Self::VerifyChain,
        Self::Certify,
        Self::Embedding,
        Self::Sweep,
        Self::Audit,
        Self::Local,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Wolff => "wolff",
            Self::VerifyChain => "verify-chain",
            Self::Certify => "certify",
            Self::Embedding => "embedding",
            Self::Sweep => "sweep",
            Self::Audit => "audit",
            Self::Local => "local",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem{})", self.issues.len(), if self.issues.len() == 1 { "" } else { "s" })?;
        for issue in &self.issues {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

/// Parameter varied by `sweep` and `certify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Scale of the right-hand side `s a(x)` in the linear problem.
    S,
    CG,
    CA,
    Alpha,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::S => "s",
            Self::CG => "c_g",
            Self::CA => "c_a",
            Self::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPaths {
    pub dir: PathBuf,
    /// File name of the CSV artifact, defaulting to `<command>.csv`.
    pub csv: Option<String>,
    /// File name of the JSON artifact, defaulting to `<command>.json`.
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub command: Option<Command>,
    pub problem: ProblemSpec,
    pub params: ExponentParams,
    pub solver: SolverConfig,
    pub chain_k: usize,
    pub wolff_radii: Vec<f64>,
    pub wolff_r_outer: f64,
    pub local_x0: f64,
    pub local_radii: Vec<f64>,
    pub embedding_q: f64,
    pub scaling_t: Vec<f64>,
    pub decay_window: (f64, f64),
    pub sweep: Option<Sweep>,
    pub output: OutputPaths,
    /// Every key as written, for the manifest.
    pub entries: BTreeMap<String, String>,
}

impl ScenarioConfig {
    pub fn csv_name(&self, command: Command) -> String {
        self.output.csv.clone().unwrap_or_else(|| format!("{command}.csv"))
    }

    pub fn json_name(&self, command: Command) -> String {
        self.output.json.clone().unwrap_or_else(|| format!("{command}.json"))
    }

    /// `sweep.values`, or the default 13 log-spaced values in `[1e-3, 1e3]`.
    pub fn family_values(&self) -> Vec<f64> {
        self.sweep.as_ref().map_or_else(|| log_spaced(1e-3, 1e3, 13), |s| s.values.clone())
    }
}

pub fn log_spaced(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![from];
    }
    let (a, b) = (from.log10(), to.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

const KEYS: &[&str] = &[
    "command",
    "problem.p",
    "problem.N",
    "problem.alpha",
    "problem.c_a",
    "problem.sign",
    "problem.g",
    "problem.c_g",
    "problem.r",
    "problem.domain",
    "problem.radius",
    "problem.beta",
    "problem.q",
    "grid.r_max",
    "grid.intervals",
    "grid.grading",
    "solver.max_picard",
    "solver.damping",
    "solver.residual_tol",
    "solver.grad_regularization",
    "solver.anderson_depth",
    "chain.K",
    "wolff.x_radius",
    "wolff.R",
    "local.x0",
    "local.r",
    "embedding.q",
    "scaling.t",
    "decay.window",
    "sweep.param",
    "sweep.values",
    "sweep.from",
    "sweep.to",
    "sweep.count",
    "output.dir",
    "output.csv",
    "output.json",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    issues: Vec<Issue>,
}

impl Entries {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue { line, message: message.into() });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(l, _)| *l)
    }

    fn raw(&self, key: &str) -> Option<(usize, String)> {
        self.map.get(key).cloned()
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (line, raw) = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issue(Some(line), format!("`{key}` must be {what}, got `{raw}`"));
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let v = self.parsed::<f64>(key, "a number")?;
        if v.is_nan() {
            let line = self.line(key);
            self.issue(line, format!("`{key}` must be a number, got NaN"));
            return None;
        }
        Some(v)
    }

    fn number_or(&mut self, key: &str, default: f64) -> f64 {
        self.number(key).unwrap_or(default)
    }

    fn positive_or(&mut self, key: &str, default: f64) -> f64 {
        let v = self.number_or(key, default);
        if !(v > 0.0) {
            let line = self.line(key);
            self.issue(line, format!("`{key}` must be positive, got {v}"));
        }
        v
    }

    fn count_or(&mut self, key: &str, default: usize) -> usize {
        self.parsed::<usize>(key, "a nonnegative integer").unwrap_or(default)
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let (line, raw) = self.raw(key)?;
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim) {
            match item.parse::<f64>() {
                Ok(v) if !v.is_nan() => out.push(v),
                _ => {
                    self.issue(Some(line), format!("`{key}` must be a comma-separated list of numbers, got `{item}`"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn positive_list_or(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        let values = self.list(key).unwrap_or_else(|| default.to_vec());
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
            let line = self.line(key);
            self.issue(line, format!("`{key}` values must be positive"));
        }
        values
    }

    fn word(&mut self, key: &str, default: &str, allowed: &[&str]) -> String {
        let Some((line, raw)) = self.raw(key) else {
            return default.to_string();
        };
        if !allowed.contains(&raw.as_str()) {
            self.issue(Some(line), format!("`{key}` must be one of {}, got `{raw}`", allowed.join(" | ")));
            return default.to_string();
        }
        raw
    }
}

fn split_lines(text: &str) -> Entries {
    let mut entries = Entries { map: BTreeMap::new(), issues: Vec::new() };
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            entries.issue(Some(lineno), format!("expected `key = value`, got `{line}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            entries.issue(Some(lineno), format!("unknown key `{key}`"));
            continue;
        }
        if value.is_empty() {
            entries.issue(Some(lineno), format!("`{key}` has no value"));
            continue;
        }
        if let Some((first, _)) = entries.map.get(key) {
            let first = *first;
            entries.issue(Some(lineno), format!("duplicate key `{key}` on lines {first} and {lineno}"));
            continue;
        }
        entries.map.insert(key.to_string(), (lineno, value.to_string()));
    }
    entries
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut e = split_lines(text);
    let entries: BTreeMap<String, String> = e.map.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect();

    let command = e.raw("command").and_then(|(line, raw)| match raw.parse::<Command>() {
        Ok(c) => Some(c),
        Err(msg) => {
            e.issue(Some(line), msg);
            None
        }
    });

    let p = e.number("problem.p");
    let n = e.parsed::<u32>("problem.N", "a positive integer");
    if p.is_none() && e.line("problem.p").is_none() {
        e.issue(None, "missing required key `problem.p`");
    }
    if n.is_none() && e.line("problem.N").is_none() {
        e.issue(None, "missing required key `problem.N`");
    }
    let alpha = e.number_or("problem.alpha", 1.0);
    let c_a = e.number_or("problem.c_a", 1.0);
    let sign = match e.word("problem.sign", "positive", &["positive", "negative", "alternating"]).as_str() {
        "negative" => SignPattern::Negative,
        "alternating" => SignPattern::Alternating,
        _ => SignPattern::Positive,
    };
    let form = match e.word("problem.g", "constant", &["constant", "power", "bounded-power"]).as_str() {
        "power" => GForm::Power,
        "bounded-power" => GForm::BoundedPower,
        _ => GForm::Constant,
    };
    let c_g = e.number_or("problem.c_g", 1.0);
    let r_growth = e.number_or("problem.r", p.unwrap_or(2.0));
    let domain = match e.word("problem.domain", "whole-space", &["whole-space", "ball"]).as_str() {
        "ball" => {
            let radius = e.number("problem.radius");
            if radius.is_none() && e.line("problem.radius").is_none() {
                let line = e.line("problem.domain");
                e.issue(line, "`problem.domain = ball` needs `problem.radius`");
            }
            Domain::Ball { radius: radius.unwrap_or(1.0) }
        }
        _ => Domain::WholeSpace,
    };
    let beta = e.number("problem.beta");
    let q = e.number("problem.q");

    let r_max = e.positive_or("grid.r_max", 100.0);
    let intervals = e.count_or("grid.intervals", 4096);
    let grading = match e.word("grid.grading", "geometric", &["geometric", "uniform"]).as_str() {
        "uniform" => GradingKind::Uniform,
        _ => GradingKind::Geometric,
    };

    let chain_k = e.count_or("chain.K", 8);
    let wolff_radii = e.positive_list_or("wolff.x_radius", &[0.1, 1.0, 10.0]);
    let wolff_r_outer = e.positive_or("wolff.R", f64::INFINITY);
    let local_x0 = e.number_or("local.x0", 0.0);
    if local_x0 < 0.0 {
        let line = e.line("local.x0");
        e.issue(line, "`local.x0` must be nonnegative");
    }
    let local_radii = e.positive_list_or("local.r", &[1.0, 2.0, 4.0]);
    let embedding_q = e.number_or("embedding.q", p.unwrap_or(2.0));
    let scaling_t = e.positive_list_or("scaling.t", &[0.1, 1.0, 10.0]);
    let window = e.positive_list_or("decay.window", &[20.0, 200.0]);
    let decay_window = match window.as_slice() {
        [lo, hi] => (*lo, *hi),
        _ => {
            let line = e.line("decay.window");
            e.issue(line, "`decay.window` needs exactly two values");
            (20.0, 200.0)
        }
    };

    let sweep = parse_sweep(&mut e);

    let output = OutputPaths {
        dir: PathBuf::from(e.raw("output.dir").map_or_else(|| ".".to_string(), |(_, v)| v)),
        csv: e.raw("output.csv").map(|(_, v)| v),
        json: e.raw("output.json").map(|(_, v)| v),
    };
    for key in ["output.csv", "output.json"] {
        if let Some((line, v)) = e.raw(key) {
            if v.contains('/') || v.contains('\\') || v == "." || v == ".." {
                e.issue(Some(line), format!("`{key}` must be a plain file name, got `{v}`"));
            }
        }
    }

    let mut solver = None;
    let mut problem = None;
    let mut params = None;
    if let (Some(p), Some(n)) = (p, n) {
        match critical_sobolev(p, n) {
            Err(err) => {
                let line = e.line("problem.p");
                e.issue(line, format!("{err}: p < N required"));
            }
            Ok(p_star) => {
                match WeightSpec::new(alpha, c_a) {
                    Ok(weight) => {
                        let spec = ProblemSpec {
                            p,
                            n,
                            lambda: 1.0,
                            a: Coefficient { weight, sign },
                            g: Nonlinearity::new(form, c_g, r_growth),
                            domain,
                        };
                        match spec.validate() {
                            Ok(()) => problem = Some(spec),
                            Err(err) => {
                                let key = if err.to_string().contains("growth") {
                                    "problem.r"
                                } else if err.to_string().contains("radius") {
                                    "problem.radius"
                                } else {
                                    "problem.c_g"
                                };
                                let line = e.line(key);
                                e.issue(line, err.to_string());
                            }
                        }
                    }
                    Err(err) => {
                        let line = e.line("problem.alpha").or(e.line("problem.c_a"));
                        e.issue(line, err.to_string());
                    }
                }
                let mut ep = ExponentParams::new(p, n, beta.unwrap_or(p_star));
                if let (Ok(base), Some(q)) = (&ep, q) {
                    ep = base.with_q(q);
                }
                match ep {
                    Ok(ep) => params = Some(ep),
                    Err(err) => {
                        let line = e.line("problem.beta").or(e.line("problem.q"));
                        e.issue(line, err.to_string());
                    }
                }
                if !(embedding_q > 1.0 && embedding_q < p_star) {
                    let line = e.line("embedding.q");
                    e.issue(line, format!("`embedding.q` must satisfy 1 < q < p* = {p_star}, got {embedding_q}"));
                }
            }
        }
    }
    match make_grid(r_max, intervals, grading) {
        Ok(grid) => {
            let mut cfg = SolverConfig::new(grid);
            cfg.max_picard = e.count_or("solver.max_picard", cfg.max_picard);
            cfg.damping = e.number_or("solver.damping", cfg.damping);
            cfg.residual_tol = e.number_or("solver.residual_tol", cfg.residual_tol);
            cfg.grad_regularization = e.number_or("solver.grad_regularization", cfg.grad_regularization);
            cfg.anderson_depth = e.count_or("solver.anderson_depth", cfg.anderson_depth);
            match cfg.validate() {
                Ok(()) => solver = Some(cfg),
                Err(err) => {
                    let line = ["solver.damping", "solver.residual_tol", "solver.max_picard", "solver.grad_regularization"]
                        .iter()
                        .find_map(|k| e.line(k));
                    e.issue(line, err.to_string());
                }
            }
        }
        Err(err) => {
            let line = e.line("grid.intervals").or(e.line("grid.r_max"));
            e.issue(line, err.to_string());
        }
    }

    if !e.issues.is_empty() {
        e.issues.sort_by_key(|i| i.line.unwrap_or(0));
        return Err(ConfigError { issues: e.issues });
    }
    Ok(ScenarioConfig {
        command,
        problem: problem.expect("validated"),
        params: params.expect("validated"),
        solver: solver.expect("validated"),
        chain_k,
        wolff_radii,
        wolff_r_outer,
        local_x0,
        local_radii,
        embedding_q,
        scaling_t,
        decay_window,
        sweep,
        output,
        entries,
    })
}

fn parse_sweep(e: &mut Entries) -> Option<Sweep> {
    let has_any = ["sweep.param", "sweep.values", "sweep.from", "sweep.to", "sweep.count"]
        .iter()
        .any(|k| e.line(k).is_some());
    if !has_any {
        return None;
    }
    let param = match e.word("sweep.param", "s", &["s", "c_g", "c_a", "alpha"]).as_str() {
        "c_g" => SweepParam::CG,
        "c_a" => SweepParam::CA,
        "alpha" => SweepParam::Alpha,
        _ => SweepParam::S,
    };
    let values = if e.line("sweep.values").is_some() {
        if let Some(line) = e.line("sweep.from").or(e.line("sweep.to")).or(e.line("sweep.count")) {
            e.issue(Some(line), "give either `sweep.values` or `sweep.from`/`sweep.to`/`sweep.count`");
        }
        e.positive_list_or("sweep.values", &[])
    } else {
        let from = e.positive_or("sweep.from", 1e-3);
        let to = e.positive_or("sweep.to", 1e3);
        let count = e.count_or("sweep.count", 13);
        if count == 0 {
            let line = e.line("sweep.count");
            e.issue(line, "`sweep.count` must be at least 1");
        }
        if !(from <= to) {
            let line = e.line("sweep.to");
            e.issue(line, format!("`sweep.to` must not be below `sweep.from` ({to} < {from})"));
        }
        log_spaced(from, to, count.max(1))
    };
    Some(Sweep { param, values })
}

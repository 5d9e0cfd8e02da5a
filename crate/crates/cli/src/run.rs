//! Scenario execution: one pipeline per command, parallel members, one writer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;
use std::time::Instant;

use plap_core::potential::{decay_fit, two_sided_fit, wolff, DecayFit, RadialMeasure, TwoSidedFit, WolffValue};
use plap_core::radial::{format_value as fv, RadialFunction, WeightSpec};
use plap_core::solver::{
    comparison_check, solve_ball_dirichlet, solve_radial_rhs, solve_semilinear, Domain, ProblemSpec, SolveReport,
};
use plap_core::verify::{
    certify_family, coercivity_check, embedding_norm, global_certificate, local_estimate_check, reverse_holder_chain,
    scaling_refinement_check, structure_audit, BoundCertificate, ChainReport, CoercivityReport, EmbeddingReport,
    FamilySummary, LocalEstimateReport, ScalingReport, StructureAudit, TrialFamily,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{content_hash, ArtifactSink, RunManifest, Stage, Status, Summary};
use crate::config::{Command, ScenarioConfig, SweepParam};

/// Tolerance of the comparison check `|u| <= v`.
const COMPARISON_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, out: None }
    }
}

#[derive(Debug)]
enum Failure {
    Core(plap_core::Error),
    Config(String),
    Io(io::Error),
}

impl From<plap_core::Error> for Failure {
    fn from(e: plap_core::Error) -> Self {
        Self::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl Failure {
    /// Running out of iterations is a violation; everything else is an input problem.
    fn status(&self) -> Status {
        match self {
            Self::Core(plap_core::Error::Convergence(_)) => Status::Violation,
            _ => Status::Error,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Core(e) => e.to_string(),
            Self::Config(m) => format!("config error: {m}"),
            Self::Io(e) => format!("io error: {e}"),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    command: Command,
    sink: ArtifactSink,
    stages: Vec<Stage>,
    violations: Vec<String>,
    pool: rayon::ThreadPool,
}

impl Run<'_> {
    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Outcome<T>) -> Outcome<T> {
        let start = Instant::now();
        let out = f(self);
        self.stages.push(Stage { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    fn violation(&mut self, message: impl Into<String>) {
        self.violations.push(message.into());
    }

    fn csv_name(&self) -> String {
        self.cfg.csv_name(self.command)
    }

    fn json_name(&self) -> String {
        self.cfg.json_name(self.command)
    }

    /// Runs `f` on every item inside the worker pool; results keep the input order.
    fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    /// Semilinear solve; the profile becomes the command's CSV artifact.
    fn solve(&mut self) -> Outcome<SolveReport> {
        let report = self.timed("solve", |r| Ok(solve_semilinear(&r.cfg.problem, &r.cfg.solver)?))?;
        let csv = self.csv_name();
        self.sink.add(csv, report.u.to_csv());
        if !report.converged {
            self.violation(format!(
                "solver did not converge: residual {:e} after {} iterations",
                report.residual, report.iterations
            ));
        }
        Ok(report)
    }
}

/// Completed run: the manifest and where it was written.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        self.manifest.summary.status.exit_code()
    }
}

/// Executes `command` and writes its artifacts and `manifest.json`.
///
/// Violations still produce complete artifacts. A run that aborts flushes
/// whatever it collected under a `.partial` suffix.
pub fn run(command: Command, cfg: &ScenarioConfig, config_text: &str, opts: &RunOptions) -> io::Result<RunResult> {
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(io::Error::other)?;
    let mut run = Run { cfg, command, sink: ArtifactSink::new(&dir), stages: Vec::new(), violations: Vec::new(), pool };

    let outcome = match cfg.command {
        Some(c) if c != command => {
            Err(Failure::Config(format!("config is for `{c}` but `{command}` was requested")))
        }
        _ => dispatch(&mut run),
    };
    let (artifacts, summary) = match outcome {
        Ok(()) => {
            let status = if run.violations.is_empty() { Status::Pass } else { Status::Violation };
            let artifacts = run.sink.commit()?;
            (artifacts, Summary { status, violations: run.violations, error: None })
        }
        Err(failure) => {
            let artifacts = run.sink.flush_partial()?;
            let summary = Summary { status: failure.status(), violations: run.violations, error: Some(failure.message()) };
            (artifacts, summary)
        }
    };
    let versions = BTreeMap::from([
        ("plap-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("plap-core".to_string(), plap_core::VERSION.to_string()),
    ]);
    let manifest = RunManifest {
        command: command.to_string(),
        config: cfg.entries.clone(),
        config_hash: content_hash(config_text.as_bytes()),
        versions,
        workers: opts.workers.max(1),
        stages: run.stages,
        artifacts,
        summary,
    };
    let manifest_path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(&manifest_path, text)?;
    Ok(RunResult { manifest, manifest_path })
}

fn dispatch(run: &mut Run<'_>) -> Outcome {
    match run.command {
        Command::Solve => solve_command(run),
        Command::Wolff => wolff_command(run),
        Command::VerifyChain => chain_command(run),
        Command::Certify => certify_command(run),
        Command::Embedding => embedding_command(run),
        Command::Sweep => sweep_command(run),
        Command::Audit => audit_command(run),
        Command::Local => local_command(run),
    }
}

fn json_io<T: Serialize>(sink: &mut ArtifactSink, name: String, value: &T) -> Outcome {
    Ok(sink.add_json(name, value)?)
}

#[derive(Debug, Serialize)]
struct SolveRecord {
    iterations: usize,
    residual: f64,
    converged: bool,
    positivity: bool,
    sup_norm: f64,
    comparison_violations: usize,
    residual_history: Vec<f64>,
    decay: Option<DecayFit>,
    decay_error: Option<String>,
}

fn solve_command(run: &mut Run<'_>) -> Outcome {
    let report = run.solve()?;
    let comparison = match &report.envelope {
        Some(v) => comparison_check(&report.u.abs(), v, COMPARISON_TOL)?.len(),
        None => 0,
    };
    if comparison > 0 {
        run.violation(format!("comparison |u| <= v fails at {comparison} nodes"));
    }
    let spec = run.cfg.problem;
    if spec.a.sign == plap_core::solver::SignPattern::Positive && !report.positivity {
        run.violation("solution with positive data is not nonnegative");
    }
    let window = run.cfg.decay_window;
    // a profile that changes sign inside the window has no power-law fit; that is recorded, not fatal
    let (decay, decay_error) = match spec.domain {
        Domain::WholeSpace if window.1 <= report.u.grid().r_max() => {
            match run.timed("decay", |_| Ok(decay_fit(&report.u.abs(), window, spec.p, spec.n)))? {
                Ok(fit) => (Some(fit), None),
                Err(e @ plap_core::Error::Fit(_)) => (None, Some(e.to_string())),
                Err(e) => return Err(e.into()),
            }
        }
        _ => (None, None),
    };
    let record = SolveRecord {
        iterations: report.iterations,
        residual: report.residual,
        converged: report.converged,
        positivity: report.positivity,
        sup_norm: report.u.max_abs(),
        comparison_violations: comparison,
        residual_history: report.residual_history.clone(),
        decay,
        decay_error,
    };
    let json = run.json_name();
    json_io(&mut run.sink, json, &[record])
}

/// Density of the measure `|a(x)| dx`.
fn coefficient_density(run: &Run<'_>) -> Outcome<RadialFunction> {
    let spec = &run.cfg.problem;
    Ok(spec.a.weight.profile(&run.cfg.solver.grid, spec.n)?)
}

fn wolff_command(run: &mut Run<'_>) -> Outcome {
    let (p, n) = (run.cfg.problem.p, run.cfg.problem.n);
    let density = coefficient_density(run)?;
    let measure = RadialMeasure::new(density.clone(), n)?;
    let r_outer = run.cfg.wolff_r_outer;
    let radii = run.cfg.wolff_radii.clone();
    let values = run.timed("wolff", |r| {
        r.par_map(&radii, |&x| wolff(&measure, x, r_outer, p, n)).into_iter().collect::<Result<Vec<WolffValue>, _>>().map_err(Failure::from)
    })?;
    let mut csv = String::from("x_radius,R,value,quadrature_error\n");
    for w in &values {
        let _ = writeln!(csv, "{},{},{},{}", fv(w.x_radius), fv(w.r_outer), fv(w.value), fv(w.quadrature_error));
    }
    let name = run.csv_name();
    run.sink.add(name, csv);

    let fit: TwoSidedFit = run.timed("two-sided", |r| {
        let v = solve_radial_rhs(&density, p, n, &r.cfg.solver.grid)?.u;
        Ok(two_sided_fit(&v, &measure, p, n, &radii)?)
    })?;
    if !(fit.c1 > 0.0 && fit.c1 <= fit.c2 && fit.c2.is_finite()) {
        run.violation(format!("two-sided constants out of order: c1 = {}, c2 = {}", fit.c1, fit.c2));
    }
    let json = run.json_name();
    json_io(&mut run.sink, json, &[fit])
}

fn chain_command(run: &mut Run<'_>) -> Outcome {
    let report = run.solve()?;
    let (params, k) = (run.cfg.params, run.cfg.chain_k);
    let chain: ChainReport = run.timed("chain", |_| Ok(reverse_holder_chain(&report.u, &params, k)?))?;
    if !chain.bounded {
        run.violation("chain step constants are not bounded by the fitted envelope");
    }
    let json = run.json_name();
    json_io(&mut run.sink, json, &[chain])
}

fn sweep_csv(certs: &[(f64, BoundCertificate)]) -> String {
    let mut csv = String::from("family_id,param,sup_norm,norm_beta,C_min,branch\n");
    for (param, c) in certs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            c.family_id,
            fv(*param),
            fv(c.sup_norm),
            fv(c.norm_beta),
            fv(c.c_min),
            c.branch
        );
    }
    csv
}

/// Solution of the linear problem with right-hand side `s |a|` on the configured domain.
fn scaled_rhs_solution(spec: &ProblemSpec, density: &RadialFunction, s: f64) -> plap_core::Result<RadialFunction> {
    let h = density.scaled(s);
    match spec.domain {
        Domain::WholeSpace => Ok(solve_radial_rhs(&h, spec.p, spec.n, density.grid())?.u),
        Domain::Ball { radius } => Ok(solve_ball_dirichlet(&h, spec.p, spec.n, radius)?.u),
    }
}

fn certify_command(run: &mut Run<'_>) -> Outcome {
    let spec = run.cfg.problem;
    if let Some(sweep) = &run.cfg.sweep {
        if sweep.param != SweepParam::S {
            return Err(Failure::Config(format!("certify varies `s`, not `{}`", sweep.param.name())));
        }
    }
    let values = run.cfg.family_values();
    let density = coefficient_density(run)?;
    let params = run.cfg.params;
    let certs = run.timed("certify", |r| {
        r.par_map(&values, |&s| {
            let u = scaled_rhs_solution(&spec, &density, s)?;
            let mut cert = global_certificate(&u, &params)?;
            cert.family_id = "scaled-rhs".into();
            Ok((s, cert))
        })
        .into_iter()
        .collect::<plap_core::Result<Vec<_>>>()
        .map_err(Failure::from)
    })?;
    let name = run.csv_name();
    run.sink.add(name, sweep_csv(&certs));
    let members: Vec<BoundCertificate> = certs.into_iter().map(|(_, c)| c).collect();
    let summary: FamilySummary = certify_family("scaled-rhs", &members);
    if !summary.all_certified {
        run.violation(format!("C = {} does not certify every member", summary.c_uniform));
    }
    if !summary.sup_monotone {
        run.violation("sup norms are not monotone in s");
    }
    let json = run.json_name();
    json_io(&mut run.sink, json, &members)?;
    let summary_name = format!("{}_summary.json", json_stem(&run.json_name()));
    json_io(&mut run.sink, summary_name, &[summary])
}

fn json_stem(name: &str) -> &str {
    name.strip_suffix(".json").unwrap_or(name)
}

#[derive(Debug, Serialize)]
struct EmbeddingRecord {
    embedding: EmbeddingReport,
    coercivity: CoercivityReport,
    /// Semilinear solve run when the smallness condition holds.
    picard_converged: Option<bool>,
    picard_iterations: Option<usize>,
}

fn embedding_command(run: &mut Run<'_>) -> Outcome {
    let spec = run.cfg.problem;
    let weight = WeightSpec::new(spec.a.weight.alpha, 1.0)?;
    let families = TrialFamily::default_pair(spec.p, spec.n);
    let q = run.cfg.embedding_q;
    let embedding = run.timed("embedding", |r| {
        Ok(embedding_norm(spec.p, q, &weight, spec.n, &families, &r.cfg.solver.grid)?)
    })?;
    let coercivity = coercivity_check(spec.a.weight.c, spec.g.c_g, embedding.best, spec.p);
    let (mut picard_converged, mut picard_iterations) = (None, None);
    if coercivity.satisfied {
        let report = run.solve()?;
        picard_converged = Some(report.converged);
        picard_iterations = Some(report.iterations);
    } else {
        run.violation(format!("c_a c_g ||i_w||^p >= 1 (margin {})", coercivity.margin));
    }
    let json = run.json_name();
    json_io(&mut run.sink, json, &[EmbeddingRecord { embedding, coercivity, picard_converged, picard_iterations }])
}

#[derive(Debug, Serialize)]
struct SweepRecord {
    param: f64,
    converged: bool,
    iterations: usize,
    residual: f64,
    certificate: BoundCertificate,
}

fn sweep_command(run: &mut Run<'_>) -> Outcome {
    let Some(sweep) = run.cfg.sweep.clone() else {
        return Err(Failure::Config("the sweep command needs `sweep.param` and values".into()));
    };
    let family_id = format!("sweep-{}", sweep.param.name());
    let base = run.cfg.problem;
    let params = run.cfg.params;
    let solver = run.cfg.solver.clone();
    let density = if sweep.param == SweepParam::S { Some(coefficient_density(run)?) } else { None };
    let records = run.timed("sweep", |r| {
        r.par_map(&sweep.values, |&x| -> plap_core::Result<SweepRecord> {
            let (u, converged, iterations, residual) = match sweep.param {
                SweepParam::S => {
                    let d = density.as_ref().expect("density for s");
                    (scaled_rhs_solution(&base, d, x)?, true, 1, 0.0)
                }
                other => {
                    let mut spec = base;
                    match other {
                        SweepParam::CG => spec.g.c_g = x,
                        SweepParam::CA => spec.a.weight = WeightSpec::new(spec.a.weight.alpha, x)?,
                        _ => spec.a.weight = WeightSpec::new(x, spec.a.weight.c)?,
                    }
                    let rep = solve_semilinear(&spec, &solver)?;
                    (rep.u, rep.converged, rep.iterations, rep.residual)
                }
            };
            let mut certificate = global_certificate(&u, &params)?;
            certificate.family_id = family_id.clone();
            Ok(SweepRecord { param: x, converged, iterations, residual, certificate })
        })
        .into_iter()
        .collect::<plap_core::Result<Vec<_>>>()
        .map_err(Failure::from)
    })?;
    for rec in records.iter().filter(|r| !r.converged) {
        run.violation(format!("member {} = {} did not converge (residual {:e})", sweep.param.name(), rec.param, rec.residual));
    }
    let pairs: Vec<(f64, BoundCertificate)> = records.iter().map(|r| (r.param, r.certificate.clone())).collect();
    let name = run.csv_name();
    run.sink.add(name, sweep_csv(&pairs));
    let json = run.json_name();
    json_io(&mut run.sink, json, &records)
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum AuditRecord {
    Structure(StructureAudit),
    Scaling(ScalingReport),
}

fn audit_command(run: &mut Run<'_>) -> Outcome {
    let report = run.solve()?;
    let spec = run.cfg.problem;
    let audit = run.timed("structure", |_| Ok(structure_audit(&spec, &report.u)?))?;
    if !audit.finite {
        run.violation("structure coefficients are not finite");
    }
    let ts = run.cfg.scaling_t.clone();
    let tol = run.cfg.solver.residual_tol;
    let scaling = run.timed("scaling", |r| {
        r.par_map(&ts, |&t| scaling_refinement_check(&spec, &report.u, t, tol))
            .into_iter()
            .collect::<plap_core::Result<Vec<_>>>()
            .map_err(Failure::from)
    })?;
    for s in scaling.iter().filter(|s| !s.residual_ok) {
        run.violation(format!("scaled residual {:e} exceeds {:e} at t = {}", s.residual, s.residual_bound, s.t));
    }
    let mut records = vec![AuditRecord::Structure(audit)];
    records.extend(scaling.into_iter().map(AuditRecord::Scaling));
    let json = run.json_name();
    json_io(&mut run.sink, json, &records)
}

fn local_command(run: &mut Run<'_>) -> Outcome {
    let report = run.solve()?;
    let (params, x0) = (run.cfg.params, run.cfg.local_x0);
    let radii = run.cfg.local_radii.clone();
    let reports: Vec<LocalEstimateReport> = run.timed("local", |r| {
        r.par_map(&radii, |&rad| local_estimate_check(&report.u, x0, rad, &params))
            .into_iter()
            .collect::<plap_core::Result<Vec<_>>>()
            .map_err(Failure::from)
    })?;
    for l in reports.iter().filter(|l| !l.ratio.is_finite()) {
        run.violation(format!("local ratio at r = {} is not finite", l.r));
    }
    let json = run.json_name();
    json_io(&mut run.sink, json, &reports)
}

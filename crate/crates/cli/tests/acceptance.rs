//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use plap_core::exponents::{theta0, theta_products_detailed, ExponentParams};
use plap_core::potential::{decay_fit, two_sided_fit, wolff, RadialMeasure};
use plap_core::radial::{make_grid, GradingKind, RadialFunction, RadialGrid, WeightSpec};
use plap_core::solver::{
    comparison_check, solve_ball_dirichlet, solve_radial_rhs, solve_semilinear, GForm, Nonlinearity, ProblemSpec,
    SignPattern, SolverConfig,
};
use plap_core::verify::{
    certify_family, embedding_norm, global_certificate, reverse_holder_chain, scaling_refinement_check, TrialFamily,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

type Criterion = (&'static str, fn() -> Check);

/// Name, density, exact value and optional tail exponent.
type Density = (&'static str, fn(f64) -> f64, f64, Option<f64>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn geo(r_max: f64, n: usize) -> Arc<RadialGrid> {
    make_grid(r_max, n, GradingKind::Geometric).unwrap()
}

const MATRIX: [(f64, u32); 3] = [(2.0, 3), (3.0, 4), (1.5, 3)];

/// `prod_{i < terms} (1 - p / (chi^i beta))`.
fn partial_product(p: f64, chi: f64, beta: f64, terms: usize) -> f64 {
    (0..terms).map(|i| 1.0 - p / (chi.powi(i as i32) * beta)).product()
}

fn theta_products() -> Check {
    let start = Instant::now();
    let oracle = partial_product(2.0, 2.0, 4.0, 80);
    let got = theta0(&ExponentParams::new(2.0, 4, 4.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure((got - oracle).abs() < 1e-10 && (oracle - 0.288_788_095_1).abs() < 1e-10, format!("theta0 = {got}, oracle {oracle}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 20 {
        let n = rng.gen_range(2..=12u32);
        let p = rng.gen_range(1.05..f64::from(n) - 0.05);
        let p_star = f64::from(n) * p / (f64::from(n) - p);
        let beta = rng.gen_range(p_star..4.0 * p_star);
        let params = ExponentParams::new(p, n, beta).map_err(|e| e.to_string())?;
        let (t0, _) = theta_products_detailed(&params, 1e-12).map_err(|e| e.to_string())?;
        let long = partial_product(p, params.chi(), beta, 4000);
        ensure(
            (t0.value - long).abs() <= t0.error_bound + 1e-14,
            format!("tail bound {} violated at (p, N, beta) = ({p}, {n}, {beta})", t0.error_bound),
        )?;
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.2} s"))?;
    Ok(format!("theta0 = {got:.10}, 20 tail bounds honored in {secs:.3} s"))
}

/// `-Delta_p` of `(1 + rho^2)^{-2}` in `R^N`.
fn manufactured_rhs(rho: f64, p: f64, n: u32) -> f64 {
    let s = 1.0 + rho * rho;
    4f64.powf(p - 1.0) * rho.powf(p - 2.0) * s.powf(-3.0 * p + 2.0) * ((f64::from(n) + p - 2.0) * s - 6.0 * (p - 1.0) * rho * rho)
}

fn manufactured() -> Check {
    let mut out = Vec::new();
    for (p, n) in MATRIX {
        let start = Instant::now();
        let grid = geo(100.0, 4096);
        let first = grid.nodes()[1];
        let h = RadialFunction::from_fn(grid.clone(), |r| manufactured_rhs(r.max(first), p, n))
            .and_then(|h| h.with_matched_tail(5.0 * p - 4.0))
            .map_err(|e| e.to_string())?;
        let u = solve_radial_rhs(&h, p, n, &grid).map_err(|e| e.to_string())?.u;
        let err = grid
            .nodes()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (&r, &v)| m.max((v - (1.0 + r * r).powi(-2)).abs()));
        let secs = start.elapsed().as_secs_f64();
        ensure(err < 1e-4 && secs < 5.0, format!("(p, N) = ({p}, {n}): error {err:e} in {secs:.2} s"))?;
        out.push(format!("({p},{n}) {err:.1e}"));
    }
    Ok(format!("max relative errors {}", out.join(", ")))
}

fn unit_ball_indicator(grid: Arc<RadialGrid>) -> RadialFunction {
    RadialFunction::from_fn(grid, |r| match r.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Less) => 1.0,
        Some(std::cmp::Ordering::Equal) => 0.5,
        _ => 0.0,
    })
    .unwrap()
}

fn closed_forms() -> Check {
    let grid = make_grid(4.0, 40_000, GradingKind::Uniform).unwrap();
    let u = solve_radial_rhs(&unit_ball_indicator(grid.clone()), 2.0, 3, &grid).map_err(|e| e.to_string())?.u;
    let exterior = u.eval(2.0);
    ensure((exterior - 1.0 / 6.0).abs() < 1e-6, format!("u(2) = {exterior}"))?;
    let one = RadialFunction::from_fn(geo(1.0, 4096), |_| 1.0).unwrap();
    let ball = solve_ball_dirichlet(&one, 2.0, 3, 1.0).map_err(|e| e.to_string())?.u.values()[0];
    ensure((ball - 1.0 / 6.0).abs() < 1e-6, format!("u(0) = {ball}"))?;
    Ok(format!("u(2) - 1/6 = {:.1e}, u(0) - 1/6 = {:.1e}", exterior - 1.0 / 6.0, ball - 1.0 / 6.0))
}

fn wolff_potential() -> Check {
    let ball = RadialMeasure::new(unit_ball_indicator(make_grid(4.0, 40_000, GradingKind::Uniform).unwrap()), 3)
        .map_err(|e| e.to_string())?;
    let w = wolff(&ball, 0.0, f64::INFINITY, 2.0, 3).map_err(|e| e.to_string())?.value;
    ensure((w - 2.0 * PI).abs() < 1e-4 * 2.0 * PI, format!("uniform ball W(0, inf) = {w}"))?;
    // Newtonian identity at p = 2, N = 3: W(0, inf) = 4 pi int rho w(rho) d rho
    let grid = geo(60.0, 8192);
    let cases: [Density; 3] = [
        ("gaussian", |r| (-r * r).exp(), 2.0 * PI, None),
        ("exponential", |r| (-r).exp(), 4.0 * PI, None),
        ("algebraic", |r| (1.0 + r * r).powi(-3), PI, Some(6.0)),
    ];
    let mut worst = 0.0f64;
    for (name, f, exact, tail) in cases {
        let mut density = RadialFunction::from_fn(grid.clone(), f).unwrap();
        if let Some(gamma) = tail {
            density = density.with_matched_tail(gamma).unwrap();
        }
        let m = RadialMeasure::new(density, 3).map_err(|e| e.to_string())?;
        let v = wolff(&m, 0.0, f64::INFINITY, 2.0, 3).map_err(|e| e.to_string())?.value;
        let rel = (v - exact).abs() / exact;
        ensure(rel < 1e-4, format!("{name}: {v} vs {exact}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("ball {:.1e}, Newtonian oracles within {worst:.1e}", (w - 2.0 * PI).abs() / (2.0 * PI)))
}

fn prototype_density(grid: &Arc<RadialGrid>, n: u32) -> RadialFunction {
    WeightSpec::new(1.0, 1.0).unwrap().profile(grid, n).unwrap()
}

fn decay() -> Check {
    let mut out = Vec::new();
    for (p, n) in MATRIX {
        let start = Instant::now();
        let grid = geo(400.0, 4096);
        let v = solve_radial_rhs(&prototype_density(&grid, n), p, n, &grid).map_err(|e| e.to_string())?.u;
        let fit = decay_fit(&v, (20.0, 200.0), p, n).map_err(|e| e.to_string())?;
        let rel = (fit.gamma_fit - fit.target_gamma).abs() / fit.target_gamma;
        let secs = start.elapsed().as_secs_f64();
        ensure(rel < 0.03 && secs < 10.0, format!("({p},{n}): gamma {} vs {} in {secs:.2} s", fit.gamma_fit, fit.target_gamma))?;
        out.push(format!("({p},{n}) {:.4}/{:.4}", fit.gamma_fit, fit.target_gamma));
    }
    Ok(format!("fitted/target {}", out.join(", ")))
}

fn two_sided() -> Check {
    let mut out = Vec::new();
    for (p, n) in [(2.0, 3), (3.0, 4)] {
        let grid = geo(100.0, 2048);
        let density = prototype_density(&grid, n);
        let v = solve_radial_rhs(&density, p, n, &grid).map_err(|e| e.to_string())?.u;
        let m = RadialMeasure::new(density, n).map_err(|e| e.to_string())?;
        let fit = two_sided_fit(&v, &m, p, n, &[0.1, 1.0, 10.0, 50.0]).map_err(|e| e.to_string())?;
        ensure(fit.c1 > 0.0 && fit.c1 <= fit.c2 && fit.c2 / fit.c1 < 10.0, format!("({p},{n}): {fit:?}"))?;
        out.push(format!("({p},{n}) c2/c1 = {:.3}", fit.c2 / fit.c1));
    }
    Ok(out.join(", "))
}

fn comparison() -> Check {
    let mut solved = 0;
    for (p, n) in MATRIX {
        let cfg = SolverConfig::new(geo(400.0, 4096));
        let forms = [
            Nonlinearity::new(GForm::Constant, 0.5, 1.0),
            Nonlinearity::new(GForm::Power, 0.3, 0.5 * (p + f64::from(n) * p / (f64::from(n) - p))),
            Nonlinearity::new(GForm::BoundedPower, 0.3, p),
        ];
        for g in forms {
            for sign in [SignPattern::Positive, SignPattern::Alternating] {
                let mut spec = ProblemSpec::prototype(p, n, 1.0, 1.0, g).map_err(|e| e.to_string())?;
                spec.a.sign = sign;
                let Ok(report) = solve_semilinear(&spec, &cfg) else { continue };
                if !report.converged {
                    continue;
                }
                let v = report.envelope.as_ref().ok_or("no envelope")?;
                let bad = comparison_check(&report.u.abs(), v, 1e-6).map_err(|e| e.to_string())?;
                ensure(bad.is_empty(), format!("({p},{n}) {g:?} {sign:?}: {} violations", bad.len()))?;
                solved += 1;
            }
        }
    }
    ensure(solved >= 9, format!("only {solved} converged solves"))?;
    Ok(format!("{solved} converged solves, no violations"))
}

fn global_certificates() -> Check {
    let (p, n) = (2.0, 3);
    let params = ExponentParams::critical(p, n).map_err(|e| e.to_string())?;
    let grid = geo(100.0, 4096);
    let density = prototype_density(&grid, n);
    let values: Vec<f64> = (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * f64::from(i))).collect();
    let mut members = Vec::new();
    for s in &values {
        let u = solve_radial_rhs(&density.scaled(*s), p, n, &grid).map_err(|e| e.to_string())?.u;
        members.push(global_certificate(&u, &params).map_err(|e| e.to_string())?);
    }
    let summary = certify_family("scaled-rhs", &members);
    ensure(summary.all_certified && members.iter().all(|c| c.certified_by(summary.c_uniform)), "no uniform C")?;
    ensure(summary.sup_monotone, "sup norms not monotone")?;
    ensure(summary.sup_ratio > 1e3, format!("sup ratio {}", summary.sup_ratio))?;
    Ok(format!("C = {:.4} certifies 13 members, sup ratio {:.2e}", summary.c_uniform, summary.sup_ratio))
}

fn chain() -> Check {
    let (p, n) = (2.0, 3);
    let params = ExponentParams::critical(p, n).map_err(|e| e.to_string())?;
    let grid = geo(200.0, 4096);
    let linear = solve_radial_rhs(&prototype_density(&grid, n), p, n, &grid).map_err(|e| e.to_string())?.u;
    let spec = ProblemSpec::prototype(p, n, 1.0, 1.0, Nonlinearity::new(GForm::Power, 0.3, 3.0)).map_err(|e| e.to_string())?;
    let semilinear = solve_semilinear(&spec, &SolverConfig::new(grid)).map_err(|e| e.to_string())?.u;
    let mut worst = 0.0f64;
    for (name, u) in [("linear", linear), ("semilinear", semilinear)] {
        let report = reverse_holder_chain(&u, &params, 8).map_err(|e| e.to_string())?;
        ensure(report.step_constants.iter().all(|c| c.is_finite()), format!("{name}: non-finite step constant"))?;
        let sup = u.max_abs();
        for (beta, norm) in report.beta_k.iter().zip(&report.norms).filter(|(b, _)| **b > 1e3) {
            let rel = (norm - sup).abs() / sup;
            ensure(rel < 0.05, format!("{name}: |u|_{beta} = {norm} vs sup {sup}"))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("K = 8 on two profiles, |u|_beta_k within {:.2}% of sup past beta = 1e3", 100.0 * worst))
}

fn coercivity() -> Check {
    let weight = WeightSpec::new(1.0, 1.0).unwrap();
    let mut out = Vec::new();
    for (p, n) in [(2.0, 3), (3.0, 4)] {
        let families = TrialFamily::default_pair(p, n);
        let coarse = embedding_norm(p, p, &weight, n, &families, &geo(400.0, 2048)).map_err(|e| e.to_string())?;
        let fine = embedding_norm(p, p, &weight, n, &families, &geo(400.0, 4096)).map_err(|e| e.to_string())?;
        let doubling = (coarse.best - fine.best).abs() / fine.best;
        let (a, b) = (fine.families[0].value, fine.families[1].value);
        let spread = (a - b).abs() / a.max(b);
        ensure(doubling < 0.02 && spread < 0.05, format!("({p},{n}): doubling {doubling:.3}, families {a} vs {b}"))?;
        out.push(format!("({p},{n}) doubling {doubling:.1e}, families {:.2}%", 100.0 * spread));
    }
    for (p, n) in MATRIX {
        let families = TrialFamily::default_pair(p, n);
        let grid = geo(400.0, 4096);
        let i_w = embedding_norm(p, p, &weight, n, &families, &grid).map_err(|e| e.to_string())?.best;
        let c_g = 0.9 / i_w.powf(p);
        let spec = ProblemSpec::prototype(p, n, 1.0, 1.0, Nonlinearity::new(GForm::Power, c_g, p)).map_err(|e| e.to_string())?;
        let report = solve_semilinear(&spec, &SolverConfig::new(grid)).map_err(|e| e.to_string())?;
        ensure(
            report.converged && report.residual < 1e-8 && report.iterations <= 100,
            format!("({p},{n}): Picard residual {:e} after {}", report.residual, report.iterations),
        )?;
        out.push(format!("({p},{n}) Picard {} it", report.iterations));
    }
    Ok(out.join(", "))
}

fn scaling() -> Check {
    let spec = ProblemSpec::prototype(2.0, 3, 1.0, 1.0, Nonlinearity::new(GForm::Constant, 1.0, 1.0)).map_err(|e| e.to_string())?;
    let u = solve_semilinear(&spec, &SolverConfig::new(geo(100.0, 4096))).map_err(|e| e.to_string())?.u;
    let mut worst = 0.0f64;
    for t in [0.1, 1.0, 10.0] {
        let r = scaling_refinement_check(&spec, &u, t, 1e-8).map_err(|e| e.to_string())?;
        ensure(r.residual < 1e-6, format!("t = {t}: residual {:e}", r.residual))?;
        worst = worst.max(r.residual);
    }
    Ok(format!("largest transformed residual {worst:.1e}"))
}

fn plap(command: &str, config: &Path, out: &Path, workers: usize) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--workers", &workers.to_string()])
        .output()
        .map(|o| o.status.code().unwrap_or(-1))
        .unwrap_or(-1)
}

fn read_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_contract() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = "problem.p = 2\nproblem.N = 3\nproblem.alpha = 1\nproblem.c_a = 1\n";
    let write = |name: &str, body: String| {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        path
    };
    let certify = write("certify.conf", base.to_string());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ensure(plap("certify", &certify, &a, 1) == 0 && plap("certify", &certify, &b, 4) == 0, "certify did not pass")?;
    ensure(read_artifacts(&a) == read_artifacts(&b), "repeated certify runs differ")?;
    let violation = write("v.conf", format!("{base}problem.g = power\nproblem.r = 2\nproblem.c_g = 5\n"));
    ensure(plap("embedding", &violation, &tmp.path().join("v"), 1) == 1, "coercivity failure did not exit 1")?;
    let bad = write("e.conf", "problem.p = 3\nproblem.N = 3\n".into());
    ensure(plap("solve", &bad, &tmp.path().join("e"), 1) == 2, "config error did not exit 2")?;
    let overflow = write("k.conf", format!("{base}chain.K = 1000\n"));
    ensure(plap("verify-chain", &overflow, &tmp.path().join("k"), 1) == 2, "chain FitError did not exit 2")?;
    Ok("byte-identical repeats; exit codes 0, 1, 2 observed".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("theta0 product and tail bound", theta_products),
        ("manufactured solutions", manufactured),
        ("closed-form exterior and ball values", closed_forms),
        ("Wolff potential oracles", wolff_potential),
        ("decay exponent", decay),
        ("two-sided Wolff bound", two_sided),
        ("comparison principle", comparison),
        ("global certificate over scaled family", global_certificates),
        ("reverse Holder chain", chain),
        ("coercivity and Picard convergence", coercivity),
        ("scaling refinement", scaling),
        ("determinism and exit codes", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({detail}) [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

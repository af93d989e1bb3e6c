use std::path::{Path, PathBuf};

use hilfer_core::certificates::{
    banach_check, certify as certify_problem, growth_bounds, growth_counterexample, uh_constants,
    CertError, LipschitzHypothesis, Source, Verdict,
};
use hilfer_core::expr::{lipschitz_probe, Expr, ProbeBox};
use hilfer_core::model::Problem;
use hilfer_core::solver::{linear_solve, picard_solve, Residuals, SolveError, SolveOptions, SolveResult};
use hilfer_core::stability::{uh_verify, StabilityError};
use serde_json::{json, Value};

use crate::input::{self, Loaded};
use crate::output::{json_bytes, num, nums, opt_num, solution_csv, write_atomic};
use crate::{CliError, MethodArg};

const PROBE_SAMPLES: usize = 2000;
const GROWTH_SAMPLES: usize = 5000;

const SOLVE_NOTES: &[&str] = &[
    "Picard iteration starts from x = y = 0; convergence is guaranteed only when the uniqueness condition holds, otherwise the run is labeled uncertified",
    "equation residuals skip the first and last 2% of the grid, and the (t-a)^(gamma1+alpha2-1) component of x (likewise for y) is differentiated analytically",
    "the linear method factors the dense 2(N+1) system by LU with partial pivoting; its condition estimate is the ratio of extreme pivots",
];

const STABILITY_NOTES: &[&str] = &[
    "perturbed problems replace f by f + h1 and g by g + h2 and keep the original boundary conditions",
    "the scalar bound uses eps = max(eps1, eps2); per-component bounds are reported alongside",
    "perturbations are random trigonometric polynomials of degree 5 in (t-a)/(b-a), scaled to sup |h| = eps on 4N+1 points; trial k uses stream k of a ChaCha8 generator seeded with the seed",
];

pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub theta: Option<f64>,
}

impl Overrides {
    fn apply(&self, mut opts: SolveOptions) -> SolveOptions {
        opts.tol = self.tol.unwrap_or(opts.tol);
        opts.max_iter = self.max_iter.unwrap_or(opts.max_iter);
        opts.theta = self.theta.unwrap_or(opts.theta);
        opts
    }
}

fn header(command: &str, loaded: &Loaded) -> serde_json::Map<String, Value> {
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), json!({ "name": "hilfer", "version": env!("CARGO_PKG_VERSION") }));
    doc.insert("command".into(), json!(command));
    doc.insert("input".into(), serde_json::to_value(&loaded.echo).expect("problem files serialize"));
    doc
}

fn verdict(v: &Verdict, source: Option<Source>) -> Value {
    json!({
        "verdict": v.label(),
        "reason": v.reason(),
        "hypothesis": source.map(Source::label),
    })
}

fn cert_error(e: CertError) -> CliError {
    CliError::Input(e.to_string())
}

fn sup_at_origin(p: &Problem, e: &Expr, which: &str) -> Result<f64, CliError> {
    let sp = p.spec();
    let m = 4 * sp.n;
    let mut sup = 0.0f64;
    for k in 0..=m {
        let t = sp.a + (sp.b - sp.a) * k as f64 / m as f64;
        let v = e.eval(t, 0.0, 0.0).map_err(|err| CliError::Input(format!("{which} at t = {t}: {err}")))?;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

/// Sampled Lipschitz data. Probing returns lower estimates, so verdicts
/// built on it are labeled empirical.
fn probe_lipschitz(p: &Problem, radius: f64) -> Result<LipschitzHypothesis, CliError> {
    let sp = p.spec();
    let region = ProbeBox { t: (sp.a, sp.b), x: (-radius, radius), y: (-radius, radius) };
    let probe = |e: &Expr, which: &str| {
        lipschitz_probe(e, &region, PROBE_SAMPLES).map_err(|err| CliError::Input(format!("probing {which}: {err}")))
    };
    Ok(LipschitzHypothesis {
        l1_cal: probe(&sp.f, "f")?,
        l2_cal: probe(&sp.g, "g")?,
        l1_zero: sup_at_origin(p, &sp.f, "f")?,
        l2_zero: sup_at_origin(p, &sp.g, "g")?,
    })
}

fn lipschitz_for(loaded: &Loaded, probe: Option<f64>) -> Result<Option<(LipschitzHypothesis, Source)>, CliError> {
    match (loaded.lipschitz, probe) {
        (Some(h), _) => Ok(Some((h, Source::User))),
        (None, Some(radius)) => Ok(Some((probe_lipschitz(&loaded.problem, radius)?, Source::Empirical))),
        (None, None) => Ok(None),
    }
}

pub fn certify(file: &Path, out: &Path, probe: Option<f64>) -> Result<(), CliError> {
    let loaded = input::read(file)?;
    let p = &loaded.problem;
    let lip = lipschitz_for(&loaded, probe)?;
    let growth = loaded.growth.map(|g| (g, Source::User));
    let cert = certify_problem(p, growth, lip).map_err(cert_error)?;
    let c = p.constants();
    let o = p.orders();
    let gb = &cert.growth;

    let existence = match &cert.leray {
        Some((l, src)) => {
            let radius = l.ls_bound.unwrap_or(1.0).max(1.0);
            let hyp = loaded.growth.expect("leray check implies a growth block");
            let sample = growth_counterexample(p, &hyp, radius, GROWTH_SAMPLES)
                .map_err(|e| CliError::Input(format!("sampling the growth hypothesis: {e}")))?;
            let counterexample = sample.map(|s| {
                json!({ "function": s.which, "t": num(s.t), "x": num(s.x), "y": num(s.y),
                        "value": num(s.value), "bound": num(s.bound) })
            });
            json!({
                "k1": num(l.k1),
                "k2": num(l.k2),
                "ls_bound": opt_num(l.ls_bound),
                "check": verdict(&l.verdict, Some(*src)),
                "growth_sampling": { "radius": num(radius), "samples": GROWTH_SAMPLES, "counterexample": counterexample },
            })
        }
        None => json!({ "check": verdict(&cert.existence(), None) }),
    };
    let uniqueness = match &cert.banach {
        Some((b, src)) => json!({
            "kappa": num(b.kappa),
            "radius": opt_num(b.radius),
            "check": verdict(&b.verdict, Some(*src)),
        }),
        None => json!({ "check": verdict(&cert.uniqueness(), None) }),
    };
    let stability = match &cert.uh {
        Some((u, src)) => json!({
            "a1": num(u.a1), "b1": num(u.b1), "c1": num(u.c1),
            "a2": num(u.a2), "b2": num(u.b2), "c2": num(u.c2),
            "delta": num(u.delta),
            "lambda": opt_num(u.lambda_uh),
            "components": u.components.map(|k| json!({
                "x_eps1": num(k.x_eps1), "x_eps2": num(k.x_eps2),
                "y_eps1": num(k.y_eps1), "y_eps2": num(k.y_eps2),
            })),
            "check": verdict(&u.verdict, Some(*src)),
        }),
        None => json!({ "check": verdict(&cert.stability(), None) }),
    };
    let lipschitz_used = cert.banach.as_ref().map(|_| {
        let (h, src) = lip.expect("banach check implies a hypothesis");
        json!({ "l1": num(h.l1_cal), "l2": num(h.l2_cal), "l1_zero": num(h.l1_zero),
                "l2_zero": num(h.l2_zero), "source": src.label() })
    });

    let mut doc = header("certify", &loaded);
    doc.insert(
        "structural".into(),
        json!({
            "phi1": num(c.phi1), "phi2": num(c.phi2), "phi3": num(c.phi3), "phi4": num(c.phi4),
            "lambda": num(c.lambda),
            "gamma1": num(o.gamma1), "gamma2": num(o.gamma2), "delta1": num(o.delta1), "delta2": num(o.delta2),
        }),
    );
    doc.insert(
        "growth_bounds".into(),
        json!({
            "x1": num(gb.x1), "y1": num(gb.y1), "f1": num(gb.f1), "g1": num(gb.g1),
            "x2": num(gb.x2), "y2": num(gb.y2), "f2": num(gb.f2), "g2": num(gb.g2),
        }),
    );
    doc.insert("lipschitz".into(), lipschitz_used.unwrap_or(Value::Null));
    doc.insert("existence".into(), existence);
    doc.insert("uniqueness".into(), uniqueness);
    doc.insert("stability".into(), stability);
    doc.insert("notes".into(), json!(cert.notes));
    write_atomic(out, &json_bytes(&Value::Object(doc)))
}

fn residuals(r: &Residuals) -> Value {
    json!({
        "ode1": num(r.ode1), "ode2": num(r.ode2),
        "bc_xa": num(r.bc_xa), "bc_xb": num(r.bc_xb),
        "bc_ya": num(r.bc_ya), "bc_yb": num(r.bc_yb),
    })
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::Frac(_) | SolveError::GridMismatch => CliError::Internal(e.to_string()),
        SolveError::Diverged(_) => CliError::Diverged,
        _ => CliError::Input(e.to_string()),
    }
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

pub fn solve(file: &Path, out: &Path, method: MethodArg, overrides: Overrides) -> Result<(), CliError> {
    let loaded = input::read(file)?;
    let p = &loaded.problem;
    let mut opts = overrides.apply(loaded.solver);

    let certificate = match loaded.lipschitz {
        Some(h) => {
            let b = banach_check(&growth_bounds(p).map_err(|e| CliError::Internal(e.to_string()))?, &h)
                .map_err(cert_error)?;
            let kappa = b.verdict.passed().then_some(b.kappa);
            opts.kappa = kappa;
            json!({ "kappa": num(b.kappa), "check": verdict(&b.verdict, Some(Source::User)) })
        }
        None => json!({ "kappa": null, "check": verdict(&Verdict::NotApplicable("no Lipschitz hypothesis supplied".into()), None) }),
    };

    let (result, status) = match method {
        MethodArg::Picard => match picard_solve(p, &opts) {
            Ok(r) if r.converged => (r, "converged"),
            Ok(r) => (r, "max-iter"),
            Err(SolveError::Diverged(r)) => (*r, "diverged"),
            Err(e) => return Err(solve_error(e)),
        },
        MethodArg::Linear => (linear_solve(p).map_err(solve_error)?, "solved"),
    };
    let certified = method == MethodArg::Picard && opts.kappa.is_some();
    write_solution(out, &loaded, &opts, method, &result, status, certificate, certified)?;
    match status {
        "max-iter" => Err(CliError::MaxIter),
        "diverged" => Err(CliError::Diverged),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_solution(
    out: &Path,
    loaded: &Loaded,
    opts: &SolveOptions,
    method: MethodArg,
    r: &SolveResult,
    status: &str,
    mut certificate: Value,
    certified: bool,
) -> Result<(), CliError> {
    certificate["ratio_violations"] = json!(r.ratio_violations);
    let mut doc = header("solve", loaded);
    doc.insert(
        "method".into(),
        json!(match method {
            MethodArg::Picard => "picard",
            MethodArg::Linear => "linear",
        }),
    );
    doc.insert(
        "options".into(),
        json!({ "tol": num(opts.tol), "max_iter": opts.max_iter, "theta": num(opts.theta) }),
    );
    doc.insert("status".into(), json!(status));
    doc.insert("label".into(), json!(if certified { "certified" } else { "uncertified" }));
    doc.insert("converged".into(), json!(r.converged));
    doc.insert("iterations".into(), json!(r.iterations));
    doc.insert("error_trace".into(), nums(&r.error_trace));
    doc.insert("contraction_ratios".into(), nums(&r.contraction_ratios));
    doc.insert("residuals".into(), residuals(&r.residuals));
    doc.insert("condition".into(), opt_num(r.condition));
    doc.insert("sup_x".into(), num(r.x.sup_norm()));
    doc.insert("sup_y".into(), num(r.y.sup_norm()));
    doc.insert("certificate".into(), certificate);
    doc.insert("notes".into(), json!(SOLVE_NOTES));
    let csv = solution_csv(&r.x, &r.y)?;
    let report = json_bytes(&Value::Object(doc));
    write_atomic(out, &csv)?;
    write_atomic(&report_path(out), &report)
}

fn stability_error(e: StabilityError) -> CliError {
    match e {
        StabilityError::Solve(s) => solve_error(s),
        StabilityError::NotCertified(m) => CliError::NotCertified(m),
        other => CliError::Input(other.to_string()),
    }
}

pub fn stability(
    file: &Path,
    out: &Path,
    eps: (f64, f64),
    trials: usize,
    seed: u64,
    probe: Option<f64>,
    overrides: Overrides,
) -> Result<(), CliError> {
    let loaded = input::read(file)?;
    let p = &loaded.problem;
    let opts = overrides.apply(loaded.solver);
    let (hyp, source) = lipschitz_for(&loaded, probe)?.ok_or_else(|| {
        CliError::NotCertified("no Lipschitz hypothesis: add a lipschitz block or pass --probe-lipschitz".into())
    })?;
    let uh = uh_constants(p, &hyp).map_err(cert_error)?;
    if !uh.verdict.passed() {
        return Err(CliError::NotCertified(format!(
            "A1 = {:e}, A2 = {:e}, Delta = {:e}: {}",
            uh.a1,
            uh.a2,
            uh.delta,
            uh.verdict.reason().unwrap_or("")
        )));
    }
    let report = uh_verify(p, &hyp, eps, trials, seed, &opts).map_err(stability_error)?;
    let rows: Vec<Value> = report
        .trials
        .iter()
        .map(|t| {
            json!({
                "index": t.index,
                "h1": t.h1.to_string(),
                "h2": t.h2.to_string(),
                "distance": opt_num(t.distance),
                "distance_x": opt_num(t.distance_x),
                "distance_y": opt_num(t.distance_y),
                "ratio": opt_num(t.ratio),
                "iterations": t.iterations,
                "error": t.error,
            })
        })
        .collect();
    let violations = report.trials.iter().filter(|t| matches!(t.ratio, Some(r) if r > 1.0)).count();
    let failures = report.trials.iter().filter(|t| t.ratio.is_none()).count();

    let mut doc = header("stability", &loaded);
    doc.insert(
        "hypothesis".into(),
        json!({ "l1": num(hyp.l1_cal), "l2": num(hyp.l2_cal), "l1_zero": num(hyp.l1_zero),
                "l2_zero": num(hyp.l2_zero), "source": source.label() }),
    );
    doc.insert(
        "summary".into(),
        json!({
            "eps1": num(report.eps1),
            "eps2": num(report.eps2),
            "lambda": num(report.lambda_uh),
            "bound": num(report.bound),
            "component_bounds": { "x": num(report.component_bounds.0), "y": num(report.component_bounds.1) },
            "seed": report.seed,
            "trials": report.trials.len(),
            "max_ratio": num(report.max_ratio),
            "violations": violations,
            "failed_solves": failures,
            "passed": report.passed,
        }),
    );
    doc.insert("trials".into(), Value::Array(rows));
    doc.insert("notes".into(), json!(STABILITY_NOTES));
    write_atomic(out, &json_bytes(&Value::Object(doc)))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::BoundViolated)
    }
}

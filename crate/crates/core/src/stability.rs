//! Empirical Ulam-Hyers checks.
//!
//! A perturbed problem replaces `f` by `f + h1` and `g` by `g + h2` with
//! `|h1| <= eps1`, `|h2| <= eps2`, keeps the boundary conditions and is solved
//! by Picard iteration. The distance to the unperturbed solution is compared
//! with `lambda * max(eps1, eps2)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::certificates::{uh_constants, CertError, ComponentBounds, LipschitzHypothesis};
use crate::expr::{BinOp, EvalError, Expr, Func, Var};
use crate::model::Problem;
use crate::solver::{picard_solve, SolveError, SolveOptions, SolveResult};

/// Highest harmonic in a random perturbation.
pub const DEGREE: usize = 5;

/// Relative slack allowed when checking `sup |h| <= eps` on sampled points.
pub const SUP_SLACK: f64 = 1e-12;

/// Perturbations of both equations with their claimed bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub eps1: f64,
    pub eps2: f64,
    pub h1: Expr,
    pub h2: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityError {
    /// `h1` or `h2` is not a function of `t` alone.
    NotTimeOnly { which: &'static str },
    /// A negative, NaN or infinite bound.
    BadEpsilon { which: &'static str, value: f64 },
    /// Sampled `sup |h|` above its bound.
    BoundExceeded { which: &'static str, sup: f64, eps: f64 },
    Eval { which: &'static str, t: f64, error: EvalError },
    Cert(CertError),
    /// The Ulam-Hyers conditions fail, so there is no bound to test.
    NotCertified(String),
    Solve(SolveError),
}

impl fmt::Display for StabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityError::NotTimeOnly { which } => write!(f, "{which} must depend on t only"),
            StabilityError::BadEpsilon { which, value } => {
                write!(f, "{which} = {value} must be finite and non-negative")
            }
            StabilityError::BoundExceeded { which, sup, eps } => {
                write!(f, "sup |{which}| = {sup:e} exceeds its bound {eps:e}")
            }
            StabilityError::Eval { which, t, error } => write!(f, "evaluating {which} at t = {t}: {error}"),
            StabilityError::Cert(e) => write!(f, "{e}"),
            StabilityError::NotCertified(why) => write!(f, "stability certificate fails: {why}"),
            StabilityError::Solve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StabilityError {}

impl From<SolveError> for StabilityError {
    fn from(e: SolveError) -> Self {
        StabilityError::Solve(e)
    }
}

impl From<CertError> for StabilityError {
    fn from(e: CertError) -> Self {
        StabilityError::Cert(e)
    }
}

/// `4N + 1` equispaced points of `[a, b]`; every grid node is among them.
fn dense_points(p: &Problem) -> impl Iterator<Item = f64> + '_ {
    let sp = p.spec();
    let m = 4 * sp.n;
    let h = (sp.b - sp.a) / m as f64;
    (0..=m).map(move |k| if k == m { sp.b } else { sp.a + k as f64 * h })
}

fn dense_sup(p: &Problem, e: &Expr, which: &'static str) -> Result<f64, StabilityError> {
    let mut sup = 0.0f64;
    for t in dense_points(p) {
        let v = e.eval(t, 0.0, 0.0).map_err(|error| StabilityError::Eval { which, t, error })?;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

/// Checks that `h1`, `h2` depend on `t` only and respect their bounds on a
/// grid four times finer than the problem's.
pub fn check_perturbation(p: &Problem, pert: &PerturbationSpec) -> Result<(), StabilityError> {
    for (which, e, eps) in [("h1", &pert.h1, pert.eps1), ("h2", &pert.h2, pert.eps2)] {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(StabilityError::BadEpsilon { which, value: eps });
        }
        if !e.is_time_only() {
            return Err(StabilityError::NotTimeOnly { which });
        }
        let sup = dense_sup(p, e, which)?;
        if sup > eps * (1.0 + SUP_SLACK) {
            return Err(StabilityError::BoundExceeded { which, sup, eps });
        }
    }
    Ok(())
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn plus(base: &Expr, h: &Expr) -> Expr {
    if is_zero(h) {
        base.clone()
    } else {
        Expr::binary(BinOp::Add, base.clone(), h.clone())
    }
}

/// The problem with `f + h1` and `g + h2`. A literal zero perturbation
/// leaves its nonlinearity untouched.
pub fn perturbed_problem(p: &Problem, pert: &PerturbationSpec) -> Problem {
    let sp = p.spec();
    p.with_nonlinearities(plus(&sp.f, &pert.h1), plus(&sp.g, &pert.h2))
}

/// Solves the perturbed problem after validating the perturbation.
pub fn perturbed_solve(
    p: &Problem,
    pert: &PerturbationSpec,
    opts: &SolveOptions,
) -> Result<SolveResult, StabilityError> {
    check_perturbation(p, pert)?;
    Ok(picard_solve(&perturbed_problem(p, pert), opts)?)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random trigonometric polynomial of degree [`DEGREE`] in `(t - a)/(b - a)`,
/// rescaled so that its sup over the dense sampling points is `eps`.
///
/// Coefficients are uniform in `[-1, 1]`. `eps = 0` gives the literal zero.
pub fn random_perturbation(
    p: &Problem,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Expr, StabilityError> {
    let sp = p.spec();
    let mut coeffs = Vec::with_capacity(2 * DEGREE + 1);
    for _ in 0..2 * DEGREE + 1 {
        coeffs.push(2.0 * unit(rng) - 1.0);
    }
    if eps == 0.0 {
        return Ok(Expr::num(0.0));
    }
    let build = |scale: f64| {
        let mut e = Expr::num(scale * coeffs[0]);
        for k in 1..=DEGREE {
            let w = k as f64 * PI / (sp.b - sp.a);
            let phase = || {
                Expr::binary(
                    BinOp::Sub,
                    Expr::binary(BinOp::Mul, Expr::num(w), Expr::var(Var::T)),
                    Expr::num(w * sp.a),
                )
            };
            for (func, c) in [(Func::Cos, coeffs[2 * k - 1]), (Func::Sin, coeffs[2 * k])] {
                let term = Expr::binary(BinOp::Mul, Expr::num(scale * c), Expr::call(func, phase()));
                e = Expr::binary(BinOp::Add, e, term);
            }
        }
        e
    };
    let sup = dense_sup(p, &build(1.0), "h")?;
    if sup == 0.0 {
        return Ok(Expr::num(0.0));
    }
    Ok(build(eps / sup))
}

/// Independent generator for trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhTrial {
    pub index: usize,
    pub h1: Expr,
    pub h2: Expr,
    /// `|x~ - x| + |y~ - y|`; `None` when the perturbed solve failed.
    pub distance: Option<f64>,
    pub distance_x: Option<f64>,
    pub distance_y: Option<f64>,
    /// `distance / bound`.
    pub ratio: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

impl UhTrial {
    pub fn passed(&self) -> bool {
        matches!(self.ratio, Some(r) if r <= 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhReport {
    pub eps1: f64,
    pub eps2: f64,
    pub lambda_uh: f64,
    /// `lambda_uh * max(eps1, eps2)`.
    pub bound: f64,
    /// Per-component bounds `(||x~ - x||, ||y~ - y||)`.
    pub component_bounds: (f64, f64),
    pub seed: u64,
    pub trials: Vec<UhTrial>,
    pub max_ratio: f64,
    pub passed: bool,
}

/// `phi(eps) = lambda eps`, the comparison function of the generalized
/// notion. Both notions share this one test.
pub fn comparison(lambda_uh: f64, eps: f64) -> f64 {
    lambda_uh * eps
}

fn within(distance: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        if distance == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        distance / bound
    }
}

/// Runs `trials` seeded perturbations of sizes `(eps1, eps2)` and compares
/// each solution distance with the Ulam-Hyers bound.
///
/// Failures of individual perturbed solves are recorded in their trial and
/// make the report fail; only the base solve is fatal.
pub fn uh_verify(
    p: &Problem,
    hyp: &LipschitzHypothesis,
    eps: (f64, f64),
    trials: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<UhReport, StabilityError> {
    let (eps1, eps2) = eps;
    for (which, value) in [("eps1", eps1), ("eps2", eps2)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(StabilityError::BadEpsilon { which, value });
        }
    }
    let uh = uh_constants(p, hyp)?;
    let (lambda_uh, comp) = match (uh.lambda_uh, uh.components, uh.verdict.passed()) {
        (Some(l), Some(c), true) => (l, c),
        _ => return Err(StabilityError::NotCertified(uh.verdict.reason().unwrap_or("").to_string())),
    };
    let ComponentBounds { x_eps1, x_eps2, y_eps1, y_eps2 } = comp;
    let bound = comparison(lambda_uh, eps1.max(eps2));
    let base = picard_solve(p, opts)?;

    let mut out = Vec::with_capacity(trials);
    for index in 0..trials {
        let mut rng = trial_rng(seed, index as u64);
        let h1 = random_perturbation(p, eps1, &mut rng)?;
        let h2 = random_perturbation(p, eps2, &mut rng)?;
        let pert = PerturbationSpec { eps1, eps2, h1: h1.clone(), h2: h2.clone() };
        let mut trial = UhTrial {
            index,
            h1,
            h2,
            distance: None,
            distance_x: None,
            distance_y: None,
            ratio: None,
            iterations: 0,
            error: None,
        };
        match perturbed_solve(p, &pert, opts) {
            Ok(r) if r.converged => {
                let dx = r.x.distance(&base.x).map_err(SolveError::from)?;
                let dy = r.y.distance(&base.y).map_err(SolveError::from)?;
                trial.distance = Some(dx + dy);
                trial.distance_x = Some(dx);
                trial.distance_y = Some(dy);
                trial.ratio = Some(within(dx + dy, bound));
                trial.iterations = r.iterations;
            }
            Ok(r) => {
                trial.iterations = r.iterations;
                trial.error = Some("perturbed solve reached the iteration limit".to_string());
            }
            Err(e) => trial.error = Some(e.to_string()),
        }
        out.push(trial);
    }
    let max_ratio = out.iter().filter_map(|t| t.ratio).fold(0.0, f64::max);
    let passed = out.iter().all(UhTrial::passed);
    Ok(UhReport {
        eps1,
        eps2,
        lambda_uh,
        bound,
        component_bounds: (x_eps1 * eps1 + x_eps2 * eps2, y_eps1 * eps1 + y_eps2 * eps2),
        seed,
        trials: out,
        max_ratio,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fixtures::{coupled, decoupled};
    use crate::model::validate;
    use crate::solver::linear_solve;

    fn lip() -> LipschitzHypothesis {
        LipschitzHypothesis { l1_cal: 0.1, l2_cal: 0.1, l1_zero: 1.0, l2_zero: 1.0 }
    }

    fn zero_pert(eps: f64) -> PerturbationSpec {
        PerturbationSpec { eps1: eps, eps2: eps, h1: parse("0").unwrap(), h2: parse("0").unwrap() }
    }

    #[test]
    fn zero_perturbation_is_bitwise_identity() {
        let p = validate(coupled(200)).unwrap();
        let opts = SolveOptions::default();
        let base = picard_solve(&p, &opts).unwrap();
        let pert = perturbed_solve(&p, &zero_pert(0.0), &opts).unwrap();
        assert_eq!(base, pert);
    }

    #[test]
    fn constant_shift_matches_linear_response() {
        let p = validate(decoupled(300)).unwrap();
        let pert = PerturbationSpec { h1: parse("0.01").unwrap(), ..zero_pert(0.01) };
        let opts = SolveOptions { tol: 1e-13, ..SolveOptions::default() };
        let base = picard_solve(&p, &opts).unwrap();
        let shifted = perturbed_solve(&p, &pert, &opts).unwrap();
        let response =
            linear_solve(&p.with_nonlinearities(parse("0.01").unwrap(), parse("0").unwrap())).unwrap();
        let dx = shifted.x.sub(&base.x).unwrap();
        assert!(dx.distance(&response.x).unwrap() <= 1e-12);
        assert!(shifted.y.distance(&base.y).unwrap() <= 1e-15);
    }

    #[test]
    fn oversized_perturbation_is_rejected() {
        let p = validate(decoupled(50)).unwrap();
        let pert = PerturbationSpec { h1: parse("0.02 * cos(t)").unwrap(), ..zero_pert(0.01) };
        match perturbed_solve(&p, &pert, &SolveOptions::default()) {
            Err(StabilityError::BoundExceeded { which: "h1", sup, .. }) => assert!((sup - 0.02).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let state = PerturbationSpec { h2: parse("0.001 * x").unwrap(), ..zero_pert(0.01) };
        assert!(matches!(check_perturbation(&p, &state), Err(StabilityError::NotTimeOnly { which: "h2" })));
    }

    #[test]
    fn random_perturbations_hit_their_bound() {
        let p = validate(decoupled(100)).unwrap();
        for index in 0..10 {
            let mut rng = trial_rng(7, index);
            let h = random_perturbation(&p, 0.25, &mut rng).unwrap();
            let sup = dense_sup(&p, &h, "h").unwrap();
            assert!((sup - 0.25).abs() <= 1e-15, "{sup}");
        }
        let again = random_perturbation(&p, 0.25, &mut trial_rng(7, 3)).unwrap();
        let first = random_perturbation(&p, 0.25, &mut trial_rng(7, 3)).unwrap();
        assert_eq!(again.to_string(), first.to_string());
        let other = random_perturbation(&p, 0.25, &mut trial_rng(7, 4)).unwrap();
        assert_ne!(again.to_string(), other.to_string());
    }

    #[test]
    fn zero_epsilon_gives_zero_report() {
        let p = validate(coupled(100)).unwrap();
        let r = uh_verify(&p, &lip(), (0.0, 0.0), 3, 1, &SolveOptions::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.trials.iter().all(|t| t.distance == Some(0.0)));
    }

    #[test]
    fn report_is_deterministic() {
        let p = validate(coupled(100)).unwrap();
        let opts = SolveOptions::default();
        let a = uh_verify(&p, &lip(), (1e-2, 1e-2), 4, 42, &opts).unwrap();
        let b = uh_verify(&p, &lip(), (1e-2, 1e-2), 4, 42, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
    }

    #[test]
    fn uncertified_problem_is_refused() {
        let p = validate(coupled(50)).unwrap();
        let big = LipschitzHypothesis { l1_cal: 5.0, ..lip() };
        let err = uh_verify(&p, &big, (1e-2, 1e-2), 1, 0, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, StabilityError::NotCertified(_)), "{err:?}");
    }
}

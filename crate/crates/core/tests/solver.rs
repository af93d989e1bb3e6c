use hilfer_core::certificates::*;
use hilfer_core::expr::parse;
use hilfer_core::fixtures::*;
use hilfer_core::fracops::{gamma, GridFunction};
use hilfer_core::model::*;
use hilfer_core::solver::*;
use proptest::prelude::*;

fn problem(spec: ProblemSpec) -> Problem {
    validate(spec).unwrap()
}

fn opts(tol: f64) -> SolveOptions {
    SolveOptions { tol, ..SolveOptions::default() }
}

#[test]
fn decoupled_residual_stays_below_frozen_bound() {
    let r = picard_solve(&problem(decoupled(2000)), &opts(1e-10)).unwrap();
    assert!(r.converged);
    let res = r.residuals;
    assert!(res.ode1 <= DECOUPLED_RESIDUAL_BOUND_N2000, "{res:?}");
    assert!(res.ode2 <= DECOUPLED_RESIDUAL_BOUND_N2000, "{res:?}");
    assert!(res.max_boundary() <= 1e-8, "{res:?}");
}

#[test]
fn residual_decreases_under_refinement() {
    let run = |n| picard_solve(&problem(coupled(n)), &opts(1e-10)).unwrap().residuals;
    let (coarse, fine) = (run(250), run(1000));
    assert!(fine.ode1 < 0.5 * coarse.ode1, "{coarse:?} {fine:?}");
    assert!(fine.ode2 < 0.5 * coarse.ode2, "{coarse:?} {fine:?}");
    assert!(fine.bc_xb < 0.25 * coarse.bc_xb, "{coarse:?} {fine:?}");
}

#[test]
fn manufactured_solution_is_recovered() {
    // x = y = t^1.625 - t^0.625 vanishes at both ends. The second power is
    // annihilated by the composed operator, the first maps to
    // Gamma(2.625) / Gamma(1.125) t^0.125.
    let c = gamma(2.625).unwrap() / gamma(1.125).unwrap();
    let forcing = parse(&format!("{c:?} * sqrt(sqrt(sqrt(t)))")).unwrap();
    let exact = |t: f64| t.powf(1.625) - t.powf(0.625);
    let mut errs = Vec::new();
    for n in [200, 400] {
        let spec = ProblemSpec { f: forcing.clone(), g: forcing.clone(), ..decoupled(n) };
        let r = linear_solve(&problem(spec)).unwrap();
        let want = GridFunction::from_fn(0.0, 1.0, n, exact).unwrap();
        errs.push(r.x.distance(&want).unwrap().max(r.y.distance(&want).unwrap()));
    }
    assert!(errs[1] <= 1e-4, "{errs:?}");
    assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
}

#[test]
fn grid_refinement_is_first_order_or_better() {
    let sol = |n| picard_solve(&problem(coupled(n)), &opts(1e-12)).unwrap();
    let (a, b, c) = (sol(500), sol(1000), sol(2000));
    let gap = |coarse: &SolveResult, fine: &SolveResult| {
        let n = coarse.x.cells();
        (0..=n).fold(0.0f64, |m, k| {
            let dx = (coarse.x.values()[k] - fine.x.values()[2 * k]).abs();
            let dy = (coarse.y.values()[k] - fine.y.values()[2 * k]).abs();
            m.max(dx).max(dy)
        })
    };
    let (d1, d2) = (gap(&a, &b), gap(&b, &c));
    assert!(d2 <= 0.55 * d1, "{d1:e} {d2:e}");
    assert!(d1 <= 1e-3, "{d1:e}");
}

#[test]
fn contraction_is_observed_on_certified_fixture() {
    let p = problem(coupled(1000));
    let cert = certify(&p, None, Some((coupled_lipschitz(), Source::User))).unwrap();
    let kappa = cert.kappa().unwrap();
    assert!((kappa - 0.5).abs() <= 0.05, "{kappa}");
    let tol = 1e-10;
    let r = picard_solve(&p, &SolveOptions { tol, kappa: Some(kappa), ..SolveOptions::default() }).unwrap();
    assert!(r.converged);
    assert!(r.ratio_violations.is_empty(), "{:?}", r.contraction_ratios);
    let tail = &r.contraction_ratios[r.contraction_ratios.len().saturating_sub(5)..];
    assert!(tail.iter().all(|q| *q <= 0.6), "{tail:?}");
    let cap = (tol.ln() / 0.6f64.ln()).ceil() as usize + 5;
    assert!(r.iterations <= cap, "{} > {cap}", r.iterations);
}

#[test]
fn leray_schauder_bound_holds_on_growth_fixtures() {
    for (name, spec, hyp) in growth_fixtures(500) {
        let p = problem(spec);
        assert_eq!(growth_counterexample(&p, &hyp, 20.0, 5000).unwrap(), None, "{name}");
        let cert = certify(&p, Some((hyp, Source::User)), None).unwrap();
        assert!(cert.existence().passed(), "{name}");
        let bound = cert.leray.unwrap().0.ls_bound.unwrap();
        let r = picard_solve(&p, &opts(1e-10)).unwrap();
        assert!(r.converged, "{name}");
        let norm = r.x.sup_norm() + r.y.sup_norm();
        assert!(norm <= bound, "{name}: {norm} > {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_and_picard_agree_on_random_linear_problems(
        l1 in -0.3f64..0.3,
        l2 in -0.3f64..0.3,
        mu in -1.0f64..1.0,
        eta in 0.05f64..0.95,
        nu in 0.1f64..1.5,
        omega in -1.0f64..1.0,
        xi in 0.05f64..0.95,
        sigma in 0.1f64..1.5,
        w in 0.5f64..4.0,
    ) {
        let spec = ProblemSpec {
            lambda1: l1,
            lambda2: l2,
            x_terms: vec![BoundaryTerm { coeff: mu, order: nu, point: eta }],
            y_terms: vec![BoundaryTerm { coeff: omega, order: sigma, point: xi }],
            f: parse(&format!("sin({w:?} * t) + 1")).unwrap(),
            g: parse("t * t - 0.5").unwrap(),
            ..decoupled(120)
        };
        let p = problem(spec);
        let tol = 1e-11;
        let picard = picard_solve(&p, &SolveOptions { tol, max_iter: 2000, ..SolveOptions::default() });
        let linear = linear_solve(&p).unwrap();
        // Only iterations that converge are comparable.
        if let Ok(picard) = picard {
            if picard.converged {
                let d = picard.x.distance(&linear.x).unwrap() + picard.y.distance(&linear.y).unwrap();
                let scale = 1.0 + linear.x.sup_norm() + linear.y.sup_norm();
                prop_assert!(d <= 10.0 * tol * scale, "{d:e}");
            }
        }
    }

    #[test]
    fn boundary_conditions_hold_to_quadrature_accuracy(
        mu in -1.0f64..1.0,
        eta in 0.05f64..0.95,
        nu in 0.1f64..1.5,
    ) {
        let spec = ProblemSpec {
            x_terms: vec![BoundaryTerm { coeff: mu, order: nu, point: eta }],
            ..coupled(400)
        };
        let r = picard_solve(&problem(spec), &opts(1e-12)).unwrap();
        prop_assert_eq!(r.residuals.bc_xa, 0.0);
        prop_assert_eq!(r.residuals.bc_ya, 0.0);
        prop_assert!(r.residuals.bc_xb <= 1e-4, "{:?}", r.residuals);
        prop_assert!(r.residuals.bc_yb <= 1e-4, "{:?}", r.residuals);
    }
}

use hilfer_core::fracops::*;
use proptest::prelude::*;

fn grid(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_fn(0.0, 1.0, n, f).unwrap()
}

fn interior_err(a: &GridFunction, b: &GridFunction) -> f64 {
    let n = a.cells();
    let skip = interior_skip(n);
    (skip..=n - skip).fold(0.0, |m, k| m.max((a.values()[k] - b.values()[k]).abs()))
}

type Op = fn(&GridFunction, FracOrder) -> Result<GridFunction, FracError>;

fn all_ops() -> [(&'static str, Op); 5] {
    [
        ("integral", |f, o| rl_integral(f, o.alpha)),
        ("differentiate", |f, _| differentiate(f)),
        ("rl", |f, o| rl_derivative(f, o.alpha)),
        ("caputo", |f, o| caputo_derivative(f, o.alpha)),
        ("hilfer", hilfer_derivative),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_are_linear(
        alpha in 0.05f64..0.95,
        beta in 0.0f64..=1.0,
        c1 in -3.0f64..3.0,
        c2 in -3.0f64..3.0,
        w in 0.5f64..6.0,
        n in 16usize..200,
    ) {
        let ord = FracOrder::new(alpha, beta).unwrap();
        let f = grid(n, |t| (w * t).sin() + 1.0);
        let g = grid(n, |t| t * t - 0.5 * t);
        let mix = f.combine(c1, &g, c2).unwrap();
        for (name, op) in all_ops() {
            let lhs = op(&mix, ord).unwrap();
            let rhs = op(&f, ord).unwrap().combine(c1, &op(&g, ord).unwrap(), c2).unwrap();
            let scale = 1.0 + lhs.sup_norm() + rhs.sup_norm();
            let tol = 1e-13 * n as f64 * scale;
            let err = lhs.distance(&rhs).unwrap();
            prop_assert!(err <= tol, "{name}: err {err:e} tol {tol:e}");
        }
    }

    #[test]
    fn point_evaluation_is_exact_at_nodes(alpha in 0.05f64..2.5, n in 2usize..120, w in 0.1f64..5.0) {
        let f = grid(n, |t| (w * t).cos() * t);
        let g = rl_integral(&f, alpha).unwrap();
        for k in 0..=n {
            let at = rl_integral_at(&f, alpha, f.node(k)).unwrap();
            prop_assert_eq!(at.to_bits(), g.values()[k].to_bits());
        }
    }

    #[test]
    fn monomial_error_quarters_when_grid_doubles(alpha in 0.1f64..1.9, mu in 2.0f64..4.0) {
        // Below mu = 2 the second derivative of f blows up at a and the rate
        // drops to about N^-(mu + alpha).
        let coef = gamma(mu + 1.0).unwrap() / gamma(mu + alpha + 1.0).unwrap();
        let err = |n: usize| {
            let f = grid(n, |t| t.powf(mu));
            let g = rl_integral(&f, alpha).unwrap();
            g.values()
                .iter()
                .zip(f.nodes())
                .fold(0.0f64, |m, (v, t)| m.max((v - coef * t.powf(mu + alpha)).abs()))
        };
        let (e1, e2, e3) = (err(100), err(200), err(400));
        // Rounding dominates once the error reaches machine precision.
        let floor = 1e-13;
        prop_assert!(e2 <= e1 / 3.5 + floor, "{e1:e} -> {e2:e}");
        prop_assert!(e3 <= e2 / 3.5 + floor, "{e2:e} -> {e3:e}");
    }

    #[test]
    fn integral_inverts_hilfer_derivative(alpha in 0.2f64..0.9, beta in 0.0f64..=1.0, w in 0.5f64..3.0) {
        // f(a) = 0 makes the lifted function vanish at a, so no power term
        // survives and the integral recovers f.
        let ord = FracOrder::new(alpha, beta).unwrap();
        let f = grid(2000, |t| (w * t).sin() + t * t);
        let back = rl_integral(&hilfer_derivative(&f, ord).unwrap(), alpha).unwrap();
        let err = interior_err(&back, &f);
        prop_assert!(err <= 1e-2, "err {err:e}");
    }
}

#[test]
fn kernel_function_of_the_caputo_case_is_annihilated() {
    // beta = 1 makes the kernel exponent gamma - 1 vanish, so f is constant.
    let ord = FracOrder::new(0.6, 1.0).unwrap();
    let f = grid(2000, |_| 1.0);
    let d = hilfer_derivative(&f, ord).unwrap();
    assert!(d.sup_norm() <= 1e-12, "{}", d.sup_norm());
}

#[test]
fn kernel_function_composition_is_grid_consistent() {
    // For beta < 1 the kernel function is singular at a and its sample there
    // is pinned to zero. The discrete composition then does not vanish, but it
    // is stable under refinement. Compare N = 2000 with N = 8000.
    for (alpha, beta) in [(0.5, 0.5), (0.75, 0.5), (0.3, 0.8)] {
        let ord = FracOrder::new(alpha, beta).unwrap();
        let gam = ord.derived();
        let run = |n: usize| {
            let f = grid(n, |t| if t == 0.0 { 0.0 } else { t.powf(gam - 1.0) });
            hilfer_derivative(&f, ord).unwrap()
        };
        let coarse = run(2000);
        let fine = run(8000);
        let mut diff = 0.0f64;
        for k in 40..=1960 {
            diff = diff.max((coarse.values()[k] - fine.values()[4 * k]).abs());
        }
        let scale = fine.sup_norm_between(interior_skip(8000));
        assert!(diff <= 0.05 * scale, "alpha {alpha} beta {beta}: diff {diff} scale {scale}");
    }
}

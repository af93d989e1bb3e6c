//! Reference problems on `[0, 1]` used by the test suites and the examples
//! in the documentation.

use alloc::vec;
use alloc::vec::Vec;

use crate::certificates::{GrowthHypothesis, LipschitzHypothesis};
use crate::expr::parse;
use crate::model::{BoundaryTerm, ProblemSpec};

fn expr(src: &str) -> crate::expr::Expr {
    parse(src).expect("fixture expressions parse")
}

/// Both equations with orders 0.75 and types 0.5, no Langevin term, no
/// nonlocal sums and `f = g = 1`. The solution is
/// `x = y = (t^1.5 - t^0.625) / Gamma(2.5)`.
pub fn decoupled(n: usize) -> ProblemSpec {
    ProblemSpec {
        a: 0.0,
        b: 1.0,
        alpha1: 0.75,
        beta1: 0.5,
        alpha2: 0.75,
        beta2: 0.5,
        p1: 0.75,
        q1: 0.5,
        p2: 0.75,
        q2: 0.5,
        lambda1: 0.0,
        lambda2: 0.0,
        x_terms: vec![],
        y_terms: vec![],
        f: expr("1"),
        g: expr("1"),
        n,
    }
}

/// The decoupled orders with small Langevin terms, one nonlocal term per
/// condition and bounded nonlinear coupling. Under [`coupled_lipschitz`] the
/// contraction factor is about 0.53.
pub fn coupled(n: usize) -> ProblemSpec {
    ProblemSpec {
        lambda1: 0.01,
        lambda2: -0.01,
        x_terms: vec![BoundaryTerm { coeff: 1.0, order: 0.5, point: 0.5 }],
        y_terms: vec![BoundaryTerm { coeff: 0.5, order: 0.25, point: 0.75 }],
        f: expr("0.1*sin(x) + 0.1*sin(y) + t"),
        g: expr("1 - t + 0.1*sin(x - y)"),
        ..decoupled(n)
    }
}

/// Valid Lipschitz data for [`coupled`]: both nonlinearities are
/// 0.1-Lipschitz in `(x, y)` and `sup |f(t,0,0)| = sup |g(t,0,0)| = 1`.
pub fn coupled_lipschitz() -> LipschitzHypothesis {
    LipschitzHypothesis { l1_cal: 0.1, l2_cal: 0.1, l1_zero: 1.0, l2_zero: 1.0 }
}

/// Valid growth data for [`coupled`].
pub fn coupled_growth() -> GrowthHypothesis {
    GrowthHypothesis { m1: 1.0, m2: 0.1, m3: 0.1, mbar1: 1.0, mbar2: 0.1, mbar3: 0.1 }
}

/// Three problems with valid growth hypotheses that satisfy the existence
/// condition.
pub fn growth_fixtures(n: usize) -> Vec<(&'static str, ProblemSpec, GrowthHypothesis)> {
    vec![
        ("coupled", coupled(n), coupled_growth()),
        (
            "linear-feedback",
            ProblemSpec {
                alpha1: 0.6,
                beta1: 0.3,
                alpha2: 0.8,
                beta2: 0.7,
                p1: 0.9,
                q1: 0.2,
                p2: 0.5,
                q2: 0.9,
                lambda1: 0.05,
                lambda2: 0.02,
                x_terms: vec![BoundaryTerm { coeff: 0.4, order: 0.3, point: 0.6 }],
                y_terms: vec![
                    BoundaryTerm { coeff: 0.2, order: 0.5, point: 0.3 },
                    BoundaryTerm { coeff: -0.3, order: 0.1, point: 0.9 },
                ],
                f: expr("0.2*x*cos(t) + 0.5"),
                g: expr("0.15*sin(y) - 0.2*t + 0.1*x"),
                ..decoupled(n)
            },
            GrowthHypothesis { m1: 0.5, m2: 0.2, m3: 0.0, mbar1: 0.2, mbar2: 0.1, mbar3: 0.15 },
        ),
        (
            "saturating",
            ProblemSpec {
                alpha1: 0.9,
                beta1: 0.9,
                alpha2: 0.5,
                beta2: 0.1,
                p1: 0.7,
                q1: 0.6,
                p2: 0.65,
                q2: 0.35,
                lambda1: -0.1,
                lambda2: 0.1,
                x_terms: vec![BoundaryTerm { coeff: 0.5, order: 0.75, point: 0.8 }],
                y_terms: vec![BoundaryTerm { coeff: 0.25, order: 1.0, point: 0.4 }],
                f: expr("exp(-t) + 0.1*abs(y) - 0.05*sqrt(x*x + 1)"),
                g: expr("0.3*cos(x + y) + 0.1*t*y"),
                ..decoupled(n)
            },
            GrowthHypothesis { m1: 1.05, m2: 0.05, m3: 0.1, mbar1: 0.3, mbar2: 0.0, mbar3: 0.1 },
        ),
    ]
}

/// Interior residual of the first equation for [`decoupled`] at `N = 8000`,
/// measured once and frozen.
pub const DECOUPLED_RESIDUAL_N8000: f64 = 5.721799530666871e-5;

/// Regression bound for the same residual at `N = 2000`: the `N = 8000` value
/// scaled by `(8000 / 2000)^1.5`. The observed order between the two grids
/// is about 1.2.
pub const DECOUPLED_RESIDUAL_BOUND_N2000: f64 = 8.0 * DECOUPLED_RESIDUAL_N8000;

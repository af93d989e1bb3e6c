//! Problem instances for the coupled Hilfer-Langevin system
//!
//! ```text
//! HD^{a1,b1} (HD^{a2,b2} + l1) x = f(t, x, y)
//! HD^{p1,q1} (HD^{p2,q2} + l2) y = g(t, x, y)
//! x(a) = 0,  x(b) = sum_i mu_i    (I^{nu_i}    y)(eta_i)
//! y(a) = 0,  y(b) = sum_j omega_j (I^{sigma_j} x)(xi_j)
//! ```
//!
//! plus validation and the structural constants `Phi1..Phi4`, `Lambda` of
//! the equivalent integral form.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::Expr;
use crate::fracops::{gamma, FracError};

/// One term `coeff * (I^order u)(point)` of a nonlocal boundary sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTerm {
    pub coeff: f64,
    pub order: f64,
    pub point: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Terms of the condition at `b` for `x` (integrals of `y`).
    pub x_terms: Vec<BoundaryTerm>,
    /// Terms of the condition at `b` for `y` (integrals of `x`).
    pub y_terms: Vec<BoundaryTerm>,
    pub f: Expr,
    pub g: Expr,
    /// Number of grid cells.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedOrders {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralConstants {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
    pub lambda: f64,
}

/// Which boundary sum a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermSet {
    X,
    Y,
}

impl TermSet {
    fn name(self) -> &'static str {
        match self {
            TermSet::X => "x_terms",
            TermSet::Y => "y_terms",
        }
    }
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { field: String },
    OrderRange { field: &'static str, value: f64 },
    NegativeStart { a: f64 },
    EmptyInterval { a: f64, b: f64 },
    OrderSum { fields: &'static str, sum: f64 },
    TermOrder { set: TermSet, index: usize, value: f64 },
    TermPoint { set: TermSet, index: usize, value: f64 },
    Resolution { n: usize },
    KernelExponent { name: &'static str, value: f64 },
    Singular { lambda: f64, scale: f64 },
    Numeric(FracError),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { field } => write!(f, "{field} is not a finite number"),
            Violation::OrderRange { field, value } => {
                write!(f, "{field} = {value} must lie strictly between 0 and 1")
            }
            Violation::NegativeStart { a } => write!(f, "a = {a} must be >= 0"),
            Violation::EmptyInterval { a, b } => write!(f, "b = {b} must exceed a = {a}"),
            Violation::OrderSum { fields, sum } => write!(
                f,
                "{fields} = {sum} must satisfy 1 < sum <= 2 for the integral representation"
            ),
            Violation::TermOrder { set, index, value } => {
                write!(f, "{}[{index}].order = {value} must be > 0", set.name())
            }
            Violation::TermPoint { set, index, value } => {
                write!(f, "{}[{index}].point = {value} is outside [a, b]", set.name())
            }
            Violation::Resolution { n } => write!(f, "n = {n} must be at least 2"),
            Violation::KernelExponent { name, value } => {
                write!(f, "{name} - 1 = {value} must be > 0")
            }
            Violation::Singular { lambda, scale } => write!(
                f,
                "Lambda = {lambda:e} is numerically zero (relative to {scale:e}); the boundary system is singular"
            ),
            Violation::Numeric(e) => write!(f, "numeric failure: {e}"),
        }
    }
}

/// A spec that passed [`validate`], with its derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    spec: ProblemSpec,
    orders: DerivedOrders,
    constants: StructuralConstants,
}

impl Problem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn orders(&self) -> &DerivedOrders {
        &self.orders
    }

    pub fn constants(&self) -> &StructuralConstants {
        &self.constants
    }

    pub fn into_spec(self) -> ProblemSpec {
        self.spec
    }

    /// Same problem with `f` and `g` replaced. The structural constants do
    /// not depend on the nonlinearities, so nothing is recomputed.
    pub fn with_nonlinearities(&self, f: Expr, g: Expr) -> Problem {
        let mut spec = self.spec.clone();
        spec.f = f;
        spec.g = g;
        Problem { spec, orders: self.orders, constants: self.constants }
    }

    /// Same problem on a different grid.
    pub fn with_resolution(&self, n: usize) -> Result<Problem, Vec<Violation>> {
        let mut spec = self.spec.clone();
        spec.n = n;
        validate(spec)
    }
}

pub fn derived_orders(spec: &ProblemSpec) -> DerivedOrders {
    let mix = |o: f64, t: f64| o + t - o * t;
    DerivedOrders {
        gamma1: mix(spec.alpha1, spec.beta1),
        gamma2: mix(spec.alpha2, spec.beta2),
        delta1: mix(spec.p1, spec.q1),
        delta2: mix(spec.p2, spec.q2),
    }
}

/// Terms in a fixed order, so sums over them do not depend on how the user
/// listed them.
pub fn canonical_terms(terms: &[BoundaryTerm]) -> Vec<BoundaryTerm> {
    let mut sorted = terms.to_vec();
    sorted.sort_by(|l, r| {
        l.point
            .total_cmp(&r.point)
            .then(l.order.total_cmp(&r.order))
            .then(l.coeff.total_cmp(&r.coeff))
    });
    sorted
}

/// `(t - a)^e / Gamma(e + 1)`, the value at `t` of `I^e 1`.
pub fn scaled_power(t_minus_a: f64, e: f64) -> Result<f64, FracError> {
    Ok(libm::pow(t_minus_a, e) / gamma(e + 1.0)?)
}

/// `Phi1..Phi4` and `Lambda`. Fails when `Lambda` is zero relative to
/// `|Phi1 Phi4| + |Phi2 Phi3| + 1`.
pub fn structural_constants(spec: &ProblemSpec) -> Result<StructuralConstants, Violation> {
    let o = derived_orders(spec);
    let len = spec.b - spec.a;
    let ex = o.gamma1 + spec.alpha2 - 1.0;
    let ey = o.delta1 + spec.p2 - 1.0;
    let num = Violation::Numeric;
    let phi1 = scaled_power(len, ex).map_err(num)?;
    let phi4 = scaled_power(len, ey).map_err(num)?;
    let mut phi2 = 0.0;
    for term in &canonical_terms(&spec.x_terms) {
        phi2 += term.coeff * scaled_power(term.point - spec.a, ey + term.order).map_err(num)?;
    }
    let mut phi3 = 0.0;
    for term in &canonical_terms(&spec.y_terms) {
        phi3 += term.coeff * scaled_power(term.point - spec.a, ex + term.order).map_err(num)?;
    }
    let lambda = phi1 * phi4 - phi2 * phi3;
    let scale = (phi1 * phi4).abs() + (phi2 * phi3).abs() + 1.0;
    if !(lambda.abs() >= 1e-12 * scale) {
        return Err(Violation::Singular { lambda, scale });
    }
    Ok(StructuralConstants { phi1, phi2, phi3, phi4, lambda })
}

/// Checks every constraint and reports all violations at once.
pub fn validate(spec: ProblemSpec) -> Result<Problem, Vec<Violation>> {
    let mut errs = Vec::new();
    let scalars = [
        ("a", spec.a),
        ("b", spec.b),
        ("lambda1", spec.lambda1),
        ("lambda2", spec.lambda2),
    ];
    for (field, v) in scalars {
        if !v.is_finite() {
            errs.push(Violation::NonFinite { field: field.into() });
        }
    }
    let orders = [
        ("alpha1", spec.alpha1),
        ("beta1", spec.beta1),
        ("alpha2", spec.alpha2),
        ("beta2", spec.beta2),
        ("p1", spec.p1),
        ("q1", spec.q1),
        ("p2", spec.p2),
        ("q2", spec.q2),
    ];
    for (field, value) in orders {
        if !(value > 0.0 && value < 1.0) {
            errs.push(Violation::OrderRange { field, value });
        }
    }
    if spec.a < 0.0 {
        errs.push(Violation::NegativeStart { a: spec.a });
    }
    let interval_ok = spec.a.is_finite() && spec.b.is_finite() && spec.b > spec.a;
    if spec.a.is_finite() && spec.b.is_finite() && spec.b <= spec.a {
        errs.push(Violation::EmptyInterval { a: spec.a, b: spec.b });
    }
    for (fields, sum) in [
        ("alpha1 + alpha2", spec.alpha1 + spec.alpha2),
        ("p1 + p2", spec.p1 + spec.p2),
    ] {
        if !(sum > 1.0 && sum <= 2.0) {
            errs.push(Violation::OrderSum { fields, sum });
        }
    }
    for (set, terms) in [(TermSet::X, &spec.x_terms), (TermSet::Y, &spec.y_terms)] {
        for (index, t) in terms.iter().enumerate() {
            for (name, v) in [("coeff", t.coeff), ("order", t.order), ("point", t.point)] {
                if !v.is_finite() {
                    errs.push(Violation::NonFinite { field: format!("{}[{index}].{name}", set.name()) });
                }
            }
            if !(t.order > 0.0) && t.order.is_finite() {
                errs.push(Violation::TermOrder { set, index, value: t.order });
            }
            if interval_ok && t.point.is_finite() && !(t.point >= spec.a && t.point <= spec.b) {
                errs.push(Violation::TermPoint { set, index, value: t.point });
            }
        }
    }
    if spec.n < 2 {
        errs.push(Violation::Resolution { n: spec.n });
    }
    let derived = derived_orders(&spec);
    if errs.is_empty() {
        // Implied by the range checks; kept as a guard on the kernel powers.
        for (name, value) in [
            ("gamma1 + alpha2", derived.gamma1 + spec.alpha2 - 1.0),
            ("delta1 + p2", derived.delta1 + spec.p2 - 1.0),
        ] {
            if !(value > 0.0) {
                errs.push(Violation::KernelExponent { name, value });
            }
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    match structural_constants(&spec) {
        Ok(constants) => Ok(Problem { spec, orders: derived, constants }),
        Err(v) => Err(alloc::vec![v]),
    }
}

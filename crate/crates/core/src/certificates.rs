//! Closed-form constants behind the existence, uniqueness and Ulam-Hyers
//! stability conditions, and the verdicts they imply.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{EvalError, Expr};
use crate::fracops::{gamma, FracError};
use crate::model::{canonical_terms, scaled_power, BoundaryTerm, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBounds {
    pub x1: f64,
    pub y1: f64,
    pub f1: f64,
    pub g1: f64,
    pub x2: f64,
    pub y2: f64,
    pub f2: f64,
    pub g2: f64,
}

/// `|f| <= m1 + m2|x| + m3|y|` and `|g| <= mbar1 + mbar2|x| + mbar3|y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthHypothesis {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub mbar1: f64,
    pub mbar2: f64,
    pub mbar3: f64,
}

/// Joint Lipschitz constants of `f` and `g` in `(x, y)`, and the sup norms
/// of `f(t, 0, 0)` and `g(t, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzHypothesis {
    pub l1_cal: f64,
    pub l2_cal: f64,
    pub l1_zero: f64,
    pub l2_zero: f64,
}

/// Where a hypothesis constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    User,
    /// Estimated by sampling; a lower bound, so the verdict is not rigorous.
    Empirical,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::User => "user",
            Source::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(String),
    NotApplicable(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail(_) => "fail",
            Verdict::NotApplicable(_) => "not-applicable",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(r) | Verdict::NotApplicable(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertError {
    Numeric(FracError),
    /// `A1` or `A2` equals 1, so the stability estimate cannot be formed.
    Degenerate { name: &'static str },
    NegativeHypothesis { name: &'static str, value: f64 },
}

impl fmt::Display for CertError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CertError::Degenerate { name } => write!(f, "{name} = 1 exactly; the stability constants are undefined"),
            CertError::NegativeHypothesis { name, value } => {
                write!(f, "hypothesis constant {name} = {value} must be finite and >= 0")
            }
        }
    }
}

impl core::error::Error for CertError {}

impl From<FracError> for CertError {
    fn from(e: FracError) -> Self {
        CertError::Numeric(e)
    }
}

fn check_nonneg(values: &[(&'static str, f64)]) -> Result<(), CertError> {
    for &(name, value) in values {
        if !(value.is_finite() && value >= 0.0) {
            return Err(CertError::NegativeHypothesis { name, value });
        }
    }
    Ok(())
}

/// Building blocks shared by all constants.
struct Terms {
    a: f64,
    len: f64,
    x_terms: Vec<BoundaryTerm>,
    y_terms: Vec<BoundaryTerm>,
    /// `Phi1 / |Lambda|`, the sup of the x-kernel over `|Lambda|`.
    k1: f64,
    /// `Phi4 / |Lambda|`.
    k2: f64,
}

impl Terms {
    fn new(p: &Problem) -> Terms {
        let s = p.spec();
        let c = p.constants();
        Terms {
            a: s.a,
            len: s.b - s.a,
            x_terms: canonical_terms(&s.x_terms),
            y_terms: canonical_terms(&s.y_terms),
            k1: c.phi1 / c.lambda.abs(),
            k2: c.phi4 / c.lambda.abs(),
        }
    }

    /// `(b - a)^e / Gamma(e + 1)`.
    fn full(&self, e: f64) -> Result<f64, FracError> {
        scaled_power(self.len, e)
    }

    fn sum(&self, terms: &[BoundaryTerm], e: f64) -> Result<f64, FracError> {
        let mut total = 0.0;
        for t in terms {
            total += t.coeff.abs() * libm::pow(t.point - self.a, e + t.order) / gamma(e + t.order + 1.0)?;
        }
        Ok(total)
    }

    /// `sum |mu_i| (eta_i - a)^(e + nu_i) / Gamma(e + nu_i + 1)`.
    fn mu(&self, e: f64) -> Result<f64, FracError> {
        self.sum(&self.x_terms, e)
    }

    /// `sum |omega_j| (xi_j - a)^(e + sigma_j) / Gamma(e + sigma_j + 1)`.
    fn omega(&self, e: f64) -> Result<f64, FracError> {
        self.sum(&self.y_terms, e)
    }
}

pub fn growth_bounds(p: &Problem) -> Result<GrowthBounds, FracError> {
    let s = p.spec();
    let c = p.constants();
    let t = Terms::new(p);
    let (l1, l2) = (s.lambda1.abs(), s.lambda2.abs());
    let (phi1, phi2, phi3, phi4) = (c.phi1.abs(), c.phi2.abs(), c.phi3.abs(), c.phi4.abs());
    let sum_a = s.alpha1 + s.alpha2;
    let sum_p = s.p1 + s.p2;
    let pa2 = t.full(s.alpha2)?;
    let pp2 = t.full(s.p2)?;
    let pa = t.full(sum_a)?;
    let pp = t.full(sum_p)?;
    let om_a2 = t.omega(s.alpha2)?;
    let om_a = t.omega(sum_a)?;
    let mu_p2 = t.mu(s.p2)?;
    let mu_p = t.mu(sum_p)?;
    Ok(GrowthBounds {
        x1: l1 * (pa2 + t.k1 * (phi4 * pa2 + phi2 * om_a2)),
        y1: l2 * t.k1 * (phi4 * mu_p2 + phi2 * pp2),
        f1: pa * (1.0 + t.k1 * phi4) + t.k1 * phi2 * om_a,
        g1: t.k1 * (phi4 * mu_p + phi2 * pp),
        x2: l1 * t.k2 * (phi1 * om_a2 + phi3 * pa2),
        y2: l2 * (pp2 + t.k2 * (phi1 * pp2 + phi3 * mu_p2)),
        // The omega-sum carries exponent alpha2 + sigma_j here.
        f2: t.k2 * (phi1 * om_a2 + phi3 * pa),
        g2: pp * (1.0 + t.k2 * phi1) + t.k2 * phi3 * mu_p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LerayCheck {
    pub k1: f64,
    pub k2: f64,
    /// A priori bound on `||x|| + ||y||`, only when both `K < 1`.
    pub ls_bound: Option<f64>,
    pub verdict: Verdict,
}

pub fn leray_schauder_check(gb: &GrowthBounds, hyp: &GrowthHypothesis) -> Result<LerayCheck, CertError> {
    check_nonneg(&[
        ("m1", hyp.m1),
        ("m2", hyp.m2),
        ("m3", hyp.m3),
        ("mbar1", hyp.mbar1),
        ("mbar2", hyp.mbar2),
        ("mbar3", hyp.mbar3),
    ])?;
    let f = gb.f1 + gb.f2;
    let g = gb.g1 + gb.g2;
    let k1 = f * hyp.m2 + g * hyp.mbar2 + (gb.x1 + gb.x2);
    let k2 = f * hyp.m3 + g * hyp.mbar3 + (gb.y1 + gb.y2);
    let mut failures = Vec::new();
    if !(k1 < 1.0) {
        failures.push(format!("K1 = {k1} >= 1"));
    }
    if !(k2 < 1.0) {
        failures.push(format!("K2 = {k2} >= 1"));
    }
    if failures.is_empty() {
        let ls_bound = (f * hyp.m1 + g * hyp.mbar1) / (1.0 - k1).min(1.0 - k2);
        Ok(LerayCheck { k1, k2, ls_bound: Some(ls_bound), verdict: Verdict::Pass })
    } else {
        Ok(LerayCheck { k1, k2, ls_bound: None, verdict: Verdict::Fail(failures.join("; ")) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanachCheck {
    pub kappa: f64,
    /// Radius of an invariant ball, only when `kappa < 1`.
    pub radius: Option<f64>,
    pub verdict: Verdict,
}

pub fn banach_check(gb: &GrowthBounds, hyp: &LipschitzHypothesis) -> Result<BanachCheck, CertError> {
    check_lipschitz(hyp)?;
    let f = gb.f1 + gb.f2;
    let g = gb.g1 + gb.g2;
    let kappa = f * hyp.l1_cal + g * hyp.l2_cal + (gb.x1 + gb.x2) + (gb.y1 + gb.y2);
    if kappa < 1.0 {
        let radius = (f * hyp.l1_zero + g * hyp.l2_zero) / (1.0 - kappa);
        Ok(BanachCheck { kappa, radius: Some(radius), verdict: Verdict::Pass })
    } else {
        Ok(BanachCheck { kappa, radius: None, verdict: Verdict::Fail(format!("kappa = {kappa} >= 1")) })
    }
}

fn check_lipschitz(hyp: &LipschitzHypothesis) -> Result<(), CertError> {
    check_nonneg(&[
        ("l1_cal", hyp.l1_cal),
        ("l2_cal", hyp.l2_cal),
        ("l1_zero", hyp.l1_zero),
        ("l2_zero", hyp.l2_zero),
    ])
}

/// Coefficients of `eps1` and `eps2` in the per-component distance bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentBounds {
    pub x_eps1: f64,
    pub x_eps2: f64,
    pub y_eps1: f64,
    pub y_eps2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhConstants {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    /// Only defined when `A1 != 1` and `A2 != 1`.
    pub delta: f64,
    pub lambda_uh: Option<f64>,
    pub components: Option<ComponentBounds>,
    pub verdict: Verdict,
}

impl UhConstants {
    /// `lambda * max(eps1, eps2)`, the bound on `||x~ - x|| + ||y~ - y||`.
    pub fn bound(&self, eps1: f64, eps2: f64) -> Option<f64> {
        self.lambda_uh.map(|l| l * eps1.max(eps2))
    }
}

/// Threshold below which `Delta` is treated as zero.
pub const DELTA_TOLERANCE: f64 = 1e-12;

pub fn uh_constants(p: &Problem, hyp: &LipschitzHypothesis) -> Result<UhConstants, CertError> {
    check_lipschitz(hyp)?;
    let s = p.spec();
    let c = p.constants();
    let t = Terms::new(p);
    let (l1, l2) = (s.lambda1.abs(), s.lambda2.abs());
    let (lc1, lc2) = (hyp.l1_cal, hyp.l2_cal);
    let (phi1, phi2, phi3, phi4) = (c.phi1.abs(), c.phi2.abs(), c.phi3.abs(), c.phi4.abs());
    let sum_a = s.alpha1 + s.alpha2;
    let sum_p = s.p1 + s.p2;
    let c1 = t.full(sum_a)?;
    let c2 = t.full(sum_p)?;
    let pa2 = t.full(s.alpha2)?;
    let pp2 = t.full(s.p2)?;
    let om_a2 = t.omega(s.alpha2)?;
    let om_a = t.omega(sum_a)?;
    let mu_p2 = t.mu(s.p2)?;
    let mu_p = t.mu(sum_p)?;

    let a1 = c1 * lc1 + l1 * pa2 + t.k1 * (phi4 * mu_p * lc2 + phi2 * (om_a * lc1 + l1 * om_a2));
    let b1 = c1 * lc1 + t.k1 * (phi4 * (l2 * mu_p2 + mu_p * lc2) + phi2 * om_a * lc1);
    let a2 = c2 * lc2 + l2 * pp2 + t.k2 * (phi1 * om_a * lc1 + phi3 * (mu_p * lc2 + l2 * mu_p2));
    let b2 = c2 * lc2 + t.k2 * (phi1 * (l1 * om_a2 + om_a * lc1) + phi3 * mu_p * lc2);

    if a1 == 1.0 {
        return Err(CertError::Degenerate { name: "A1" });
    }
    if a2 == 1.0 {
        return Err(CertError::Degenerate { name: "A2" });
    }
    let delta = 1.0 - b1 * b2 / ((1.0 - a1) * (1.0 - a2));

    let mut failures = Vec::new();
    if !(a1 < 1.0) {
        failures.push(format!("A1 = {a1} >= 1"));
    }
    if !(a2 < 1.0) {
        failures.push(format!("A2 = {a2} >= 1"));
    }
    if failures.is_empty() && !(delta > DELTA_TOLERANCE) {
        failures.push(format!("Delta = {delta} is not positive"));
    }
    if !failures.is_empty() {
        return Ok(UhConstants {
            a1,
            b1,
            c1,
            a2,
            b2,
            c2,
            delta,
            lambda_uh: None,
            components: None,
            verdict: Verdict::Fail(failures.join("; ")),
        });
    }
    let denom = delta * (1.0 - a1) * (1.0 - a2);
    let lambda_uh = (c1 * (1.0 - a2) + b2 * c1 + c2 * (1.0 - a1) + b1 * c2) / denom;
    let components = ComponentBounds {
        x_eps1: c1 / (delta * (1.0 - a1)),
        x_eps2: b1 * c2 / denom,
        y_eps1: b2 * c1 / denom,
        y_eps2: c2 / (delta * (1.0 - a2)),
    };
    Ok(UhConstants {
        a1,
        b1,
        c1,
        a2,
        b2,
        c2,
        delta,
        lambda_uh: Some(lambda_uh),
        components: Some(components),
        verdict: Verdict::Pass,
    })
}

/// Conventions behind the constants, attached to every certificate.
pub const NOTES: &[&str] = &[
    "stability requires A1 < 1 and A2 < 1, the direction the distance bound needs, and Delta > 0 so that dividing by it keeps the inequality",
    "the omega-sums in X2 and F2 are evaluated at (xi_j - a)",
    "the omega-sum in F2 carries the exponent alpha2 + sigma_j",
    "every p2 + 1 denominator in the bounds is Gamma(p2 + 1)",
    "the boundary coefficient of x combines -I^(a1+a2) f(b) + lambda1 I^a2 x(b) + sum mu_i I^(p1+p2+nu_i) g(eta_i) - lambda2 sum mu_i I^(p2+nu_i) y(eta_i) with weight Phi4 and sum omega_j I^(a1+a2+sigma_j) f(xi_j) - lambda1 sum omega_j I^(a2+sigma_j) x(xi_j) - I^(p1+p2) g(b) + lambda2 I^p2 y(b) with weight Phi2, as the boundary conditions require",
];

/// Everything derivable from a problem and optional hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub growth: GrowthBounds,
    pub leray: Option<(LerayCheck, Source)>,
    pub banach: Option<(BanachCheck, Source)>,
    pub uh: Option<(UhConstants, Source)>,
    pub notes: &'static [&'static str],
}

impl Certificate {
    pub fn existence(&self) -> Verdict {
        match &self.leray {
            Some((c, _)) => c.verdict.clone(),
            None => Verdict::NotApplicable("no growth hypothesis supplied".into()),
        }
    }

    pub fn uniqueness(&self) -> Verdict {
        match &self.banach {
            Some((c, _)) => c.verdict.clone(),
            None => Verdict::NotApplicable("no Lipschitz hypothesis supplied".into()),
        }
    }

    pub fn stability(&self) -> Verdict {
        match &self.uh {
            Some((c, _)) => c.verdict.clone(),
            None => Verdict::NotApplicable("no Lipschitz hypothesis supplied".into()),
        }
    }

    /// Contraction factor, when the uniqueness condition holds.
    pub fn kappa(&self) -> Option<f64> {
        self.banach.as_ref().filter(|(c, _)| c.verdict.passed()).map(|(c, _)| c.kappa)
    }
}

pub fn certify(
    p: &Problem,
    growth: Option<(GrowthHypothesis, Source)>,
    lipschitz: Option<(LipschitzHypothesis, Source)>,
) -> Result<Certificate, CertError> {
    let gb = growth_bounds(p)?;
    let leray = match growth {
        Some((h, src)) => Some((leray_schauder_check(&gb, &h)?, src)),
        None => None,
    };
    let (banach, uh) = match lipschitz {
        Some((h, src)) => (Some((banach_check(&gb, &h)?, src)), Some((uh_constants(p, &h)?, src))),
        None => (None, None),
    };
    Ok(Certificate { growth: gb, leray, banach, uh, notes: NOTES })
}

/// A sample where a growth hypothesis fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCounterexample {
    /// `"f"` or `"g"`.
    pub which: &'static str,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub bound: f64,
}

/// Searches `[a, b] x [-radius, radius]^2` for a point where `|f|` or `|g|`
/// exceeds its claimed linear growth bound.
///
/// Sampling covers the corners of the box, the axes through the origin and
/// `samples` seeded random points. Finding nothing is evidence, not proof.
pub fn growth_counterexample(
    p: &Problem,
    hyp: &GrowthHypothesis,
    radius: f64,
    samples: usize,
) -> Result<Option<GrowthCounterexample>, EvalError> {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    let sp = p.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e0_57a7);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let mut points = Vec::new();
    for &t in &[sp.a, 0.5 * (sp.a + sp.b), sp.b] {
        for &x in &[-radius, 0.0, radius] {
            for &y in &[-radius, 0.0, radius] {
                points.push((t, x, y));
            }
        }
    }
    for _ in 0..samples {
        let t = sp.a + (sp.b - sp.a) * unit();
        let x = radius * (2.0 * unit() - 1.0);
        let y = radius * (2.0 * unit() - 1.0);
        points.push((t, x, y));
    }
    let checks: [(&'static str, &Expr, [f64; 3]); 2] = [
        ("f", &sp.f, [hyp.m1, hyp.m2, hyp.m3]),
        ("g", &sp.g, [hyp.mbar1, hyp.mbar2, hyp.mbar3]),
    ];
    for &(t, x, y) in &points {
        for (which, e, m) in checks {
            let value = e.eval(t, x, y)?.abs();
            let bound = m[0] + m[1] * x.abs() + m[2] * y.abs();
            if value > bound * (1.0 + 1e-12) {
                return Ok(Some(GrowthCounterexample { which, t, x, y, value, bound }));
            }
        }
    }
    Ok(None)
}

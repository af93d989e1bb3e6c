//! Empirical Lipschitz estimates.

use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{EvalError, Expr};

/// Sampling region `[t0, t1] x [x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub y: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeError {
    BadBox,
    TooFewSamples(usize),
    Eval(EvalError),
}

impl fmt::Display for ProbeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeError::BadBox => f.write_str("probe box must be finite with lo <= hi"),
            ProbeError::TooFewSamples(n) => write!(f, "need at least 100 samples, got {n}"),
            ProbeError::Eval(e) => write!(f, "evaluation failed during probe: {e}"),
        }
    }
}

impl core::error::Error for ProbeError {}

impl From<EvalError> for ProbeError {
    fn from(e: EvalError) -> Self {
        ProbeError::Eval(e)
    }
}

const SEED: u64 = 0x5eed_11e5;
const SCALES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const DIRECTIONS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)];

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn lerp((lo, hi): (f64, f64), u: f64) -> f64 {
    lo + (hi - lo) * u
}

/// Moves `v` by `d` while staying inside `[lo, hi]`, flipping the step when
/// it would leave the interval.
fn step((lo, hi): (f64, f64), v: f64, d: f64) -> f64 {
    let fwd = v + d;
    if fwd <= hi && fwd >= lo {
        fwd
    } else {
        (v - d).clamp(lo, hi)
    }
}

/// Lower estimate of the joint Lipschitz constant of `e` in `(x, y)`:
/// the largest `|e(t,x2,y2) - e(t,x1,y1)| / (|x2-x1| + |y2-y1|)` over
/// deterministic pseudo-random base points and axis and diagonal steps at
/// several scales.
///
/// This is a lower bound only. It can miss steep regions entirely.
pub fn lipschitz_probe(e: &Expr, region: &ProbeBox, samples: usize) -> Result<f64, ProbeError> {
    let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
    if !(ok(region.t) && ok(region.x) && ok(region.y)) {
        return Err(ProbeError::BadBox);
    }
    if samples < 100 {
        return Err(ProbeError::TooFewSamples(samples));
    }
    let wx = region.x.1 - region.x.0;
    let wy = region.y.1 - region.y.0;
    let width = wx.max(wy);
    if width == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut best = 0.0_f64;
    for i in 0..samples {
        let t = lerp(region.t, unit(&mut rng));
        let x1 = lerp(region.x, unit(&mut rng));
        let y1 = lerp(region.y, unit(&mut rng));
        let e1 = e.eval(t, x1, y1)?;
        let scale = SCALES[i % SCALES.len()] * width;
        for (dx, dy) in DIRECTIONS {
            let x2 = if wx > 0.0 { step(region.x, x1, dx * scale) } else { x1 };
            let y2 = if wy > 0.0 { step(region.y, y1, dy * scale) } else { y1 };
            let dist = (x2 - x1).abs() + (y2 - y1).abs();
            if dist == 0.0 {
                continue;
            }
            let e2 = e.eval(t, x2, y2)?;
            best = best.max((e2 - e1).abs() / dist);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    const PI: f64 = core::f64::consts::PI;

    fn region(x: (f64, f64), y: (f64, f64)) -> ProbeBox {
        ProbeBox { t: (0.0, 1.0), x, y }
    }

    #[test]
    fn linear_expression_attains_its_constant() {
        let e = parse("x/2 + y/4").unwrap();
        for r in [region((-1.0, 1.0), (-1.0, 1.0)), region((0.0, 100.0), (-5.0, 3.0))] {
            let est = lipschitz_probe(&e, &r, 200).unwrap();
            assert!((0.49..=0.5 + 1e-12).contains(&est), "{est}");
        }
    }

    #[test]
    fn time_only_expression_gives_zero() {
        let e = parse("sin(t)").unwrap();
        assert_eq!(lipschitz_probe(&e, &region((-1.0, 1.0), (-1.0, 1.0)), 100), Ok(0.0));
    }

    #[test]
    fn sine_approaches_one() {
        let e = parse("sin(x)").unwrap();
        let est = lipschitz_probe(&e, &region((-PI, PI), (-PI, PI)), 1000).unwrap();
        assert!((0.95..=1.0).contains(&est), "{est}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let e = parse("x").unwrap();
        assert_eq!(lipschitz_probe(&e, &region((-1.0, 1.0), (0.0, 0.0)), 99), Err(ProbeError::TooFewSamples(99)));
        assert_eq!(lipschitz_probe(&e, &region((1.0, -1.0), (0.0, 0.0)), 100), Err(ProbeError::BadBox));
        assert_eq!(
            lipschitz_probe(&e, &region((f64::NEG_INFINITY, 1.0), (0.0, 0.0)), 100),
            Err(ProbeError::BadBox)
        );
        let bad = parse("1/x").unwrap();
        assert!(matches!(
            lipschitz_probe(&bad, &region((0.0, 0.0), (0.0, 1.0)), 100),
            Err(ProbeError::Eval(_))
        ));
    }
}

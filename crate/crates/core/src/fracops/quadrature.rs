//! Product-trapezoidal weights for the Riemann-Liouville integral.
//!
//! The data is replaced by its piecewise-linear interpolant and the kernel
//! `(t - s)^(alpha - 1)` is integrated against it exactly on every cell, so
//! the endpoint singularity needs no special treatment. On a uniform grid the
//! node weights depend only on the distance `k - j`, which lets one table per
//! order serve every node.

use alloc::vec;
use alloc::vec::Vec;

use super::{gamma, FracError, GridFunction};

/// `d0^p - d1^p` for `d0 > d1 >= 0`, without cancellation when the two are
/// close.
fn pow_diff(d0: f64, d1: f64, p: f64) -> f64 {
    let top = libm::pow(d0, p);
    if d1 <= 0.0 {
        top
    } else {
        -top * libm::expm1(p * libm::log1p(-(d0 - d1) / d0))
    }
}

/// Kernel moments of one cell, in units of the grid step.
///
/// The cell spans distances `[d1, d0]` from the evaluation point. Returns the
/// weights of the sample at the far end (distance `d0`) and the near end
/// (distance `d1`), without the `h^alpha / Gamma(alpha)` factor.
fn cell_weights(d0: f64, d1: f64, alpha: f64) -> (f64, f64) {
    let len = d0 - d1;
    let m0 = pow_diff(d0, d1, alpha) / alpha;
    let m1 = pow_diff(d0, d1, alpha + 1.0) / (alpha + 1.0);
    ((m1 - d1 * m0) / len, (d0 * m0 - m1) / len)
}

/// Weight table for `I^alpha` on one uniform grid.
#[derive(Debug, Clone)]
pub struct RlQuadrature {
    alpha: f64,
    a: f64,
    h: f64,
    n: usize,
    scale: f64,
    // far[m]: weight of the far sample of a unit cell at distance m (m >= 1)
    far: Vec<f64>,
    // inner[m]: combined weight of an interior sample at distance m
    inner: Vec<f64>,
    near: f64,
}

impl RlQuadrature {
    /// Builds the table for grids over `[a, b]` with `n` cells.
    pub fn new(alpha: f64, a: f64, b: f64, n: usize) -> Result<Self, FracError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(FracError::Domain {
                param: "integral order",
                value: alpha,
                expected: "a finite order > 0",
            });
        }
        let h = (b - a) / n as f64;
        let scale = libm::pow(h, alpha) / gamma(alpha)?;
        let mut far = vec![0.0; n + 1];
        let mut near_of = vec![0.0; n + 2];
        for m in 1..=n {
            let (w_far, w_near) = cell_weights(m as f64, (m - 1) as f64, alpha);
            far[m] = w_far;
            near_of[m] = w_near;
        }
        let mut inner = vec![0.0; n + 1];
        for m in 1..n {
            inner[m] = far[m] + near_of[m + 1];
        }
        Ok(Self {
            alpha,
            a,
            h,
            n,
            scale,
            far,
            inner,
            near: near_of[1],
        })
    }

    /// Table matching the grid of `f`.
    pub fn for_grid(alpha: f64, f: &GridFunction) -> Result<Self, FracError> {
        Self::new(alpha, f.a(), f.b(), f.cells())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn check_len(&self, values: &[f64]) {
        assert_eq!(
            values.len(),
            self.n + 1,
            "quadrature table built for a different grid"
        );
    }

    /// `I^alpha f` at node `k`.
    pub fn node(&self, values: &[f64], k: usize) -> f64 {
        self.check_len(values);
        if k == 0 {
            return 0.0;
        }
        let mut sum = self.far[k] * values[0];
        for j in 1..k {
            sum += self.inner[k - j] * values[j];
        }
        sum += self.near * values[k];
        self.scale * sum
    }

    /// `I^alpha f` at every node.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..=self.n).map(|k| self.node(values, k)).collect()
    }

    /// Scaled weights of node `k` as a dense row over all samples.
    pub fn node_row(&self, k: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n + 1];
        if k == 0 {
            return row;
        }
        row[0] = self.scale * self.far[k];
        for j in 1..k {
            row[j] = self.scale * self.inner[k - j];
        }
        row[k] = self.scale * self.near;
        row
    }

    /// Locates `t` on the grid: `Ok(Ok(k))` for node `k`, `Ok(Err(tau))` for
    /// the fractional position `tau = (t - a) / h` strictly between nodes.
    fn locate(&self, t: f64) -> Result<Result<usize, f64>, FracError> {
        let b = self.a + self.h * self.n as f64;
        let slack = 1e-12 * (b - self.a);
        if !t.is_finite() || t < self.a - slack || t > b + slack {
            return Err(FracError::Domain {
                param: "evaluation point",
                value: t,
                expected: "a point inside [a, b]",
            });
        }
        let tau = ((t - self.a) / self.h).clamp(0.0, self.n as f64);
        let nearest = libm::round(tau);
        if (tau - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            Ok(Ok(nearest as usize))
        } else {
            Ok(Err(tau))
        }
    }

    /// Scaled weights of `I^alpha f (t)` for an arbitrary `t` in `[a, b]`.
    ///
    /// Between nodes the final partial cell uses the linear interpolant of
    /// its two neighbouring samples.
    pub fn row_at(&self, t: f64) -> Result<Vec<f64>, FracError> {
        let tau = match self.locate(t)? {
            Ok(k) => return Ok(self.node_row(k)),
            Err(tau) => tau,
        };
        let last = libm::floor(tau) as usize;
        let frac = tau - last as f64;
        let mut row = vec![0.0; self.n + 1];
        for j in 0..last {
            let d0 = tau - j as f64;
            let (w_far, w_near) = cell_weights(d0, d0 - 1.0, self.alpha);
            row[j] += w_far;
            row[j + 1] += w_near;
        }
        let (w_far, w_near) = cell_weights(frac, 0.0, self.alpha);
        row[last] += w_far + w_near * (1.0 - frac);
        row[last + 1] += w_near * frac;
        for w in &mut row {
            *w *= self.scale;
        }
        Ok(row)
    }

    /// `I^alpha f (t)` for an arbitrary `t` in `[a, b]`. At grid nodes this is
    /// bit-identical to [`RlQuadrature::node`].
    pub fn at(&self, values: &[f64], t: f64) -> Result<f64, FracError> {
        self.check_len(values);
        match self.locate(t)? {
            Ok(k) => Ok(self.node(values, k)),
            Err(_) => {
                let row = self.row_at(t)?;
                Ok(row.iter().zip(values).map(|(w, v)| w * v).sum())
            }
        }
    }
}

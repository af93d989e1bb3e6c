//! Fractional-calculus kernel on uniform grids.
//!
//! Functions are sampled at `t_k = a + k (b - a) / N`. The Riemann-Liouville
//! integral uses product-trapezoidal weights ([`RlQuadrature`]); derivative
//! operators compose that integral with a second-order finite-difference
//! first derivative. Derivative-type outputs can be singular at `t = a`; the
//! stored value there is the one-sided stencil value and callers measuring
//! errors skip the first cells.

mod gamma;
mod quadrature;

use alloc::vec::Vec;
use core::fmt;

pub use gamma::gamma;
pub use quadrature::RlQuadrature;

#[derive(Debug, Clone, PartialEq)]
pub enum FracError {
    /// A parameter outside the operator's domain.
    Domain {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// Grid construction failed.
    InvalidGrid(&'static str),
    /// A sample is NaN or infinite.
    NonFinite { index: usize },
    /// Two grid functions live on different grids.
    GridMismatch,
}

impl fmt::Display for FracError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FracError::Domain {
                param,
                value,
                expected,
            } => write!(f, "{param} = {value} is invalid: expected {expected}"),
            FracError::InvalidGrid(reason) => write!(f, "invalid grid: {reason}"),
            FracError::NonFinite { index } => write!(f, "non-finite sample at node {index}"),
            FracError::GridMismatch => f.write_str("grid functions live on different grids"),
        }
    }
}

impl core::error::Error for FracError {}

/// Samples of a real function at the N+1 nodes of a uniform grid on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    a: f64,
    b: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self, FracError> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(FracError::InvalidGrid("endpoints must be finite with b > a"));
        }
        if values.len() < 3 {
            return Err(FracError::InvalidGrid("at least two cells are required"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::NonFinite { index });
        }
        Ok(Self { a, b, values })
    }

    /// Samples `f` on `cells + 1` nodes.
    pub fn from_fn(
        a: f64,
        b: f64,
        cells: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, FracError> {
        let h = (b - a) / cells as f64;
        Self::new(a, b, (0..=cells).map(|k| f(a + k as f64 * h)).collect())
    }

    pub fn zeros(a: f64, b: f64, cells: usize) -> Result<Self, FracError> {
        Self::new(a, b, alloc::vec![0.0; cells + 1])
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of cells N.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.cells() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.a + k as f64 * self.step()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.node(k))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.a == other.a && self.b == other.b && self.values.len() == other.values.len()
    }

    /// A new function on the same grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, FracError> {
        if values.len() != self.values.len() {
            return Err(FracError::GridMismatch);
        }
        Self::new(self.a, self.b, values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup norm over nodes `k` with `skip <= k <= N - skip`.
    pub fn sup_norm_between(&self, skip: usize) -> f64 {
        let n = self.cells();
        if 2 * skip > n {
            return 0.0;
        }
        self.values[skip..=n - skip]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `c1 * self + c2 * other`.
    pub fn combine(&self, c1: f64, other: &GridFunction, c2: f64) -> Result<Self, FracError> {
        if !self.same_grid(other) {
            return Err(FracError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| c1 * u + c2 * v)
            .collect();
        Self::new(self.a, self.b, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self, FracError> {
        self.combine(1.0, other, -1.0)
    }

    /// `sup |self - other|`.
    pub fn distance(&self, other: &GridFunction) -> Result<f64, FracError> {
        if !self.same_grid(other) {
            return Err(FracError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (u, v)| m.max((u - v).abs())))
    }

    /// Piecewise-linear interpolant at `t` (clamped to `[a, b]`).
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.cells();
        let tau = ((t - self.a) / self.step()).clamp(0.0, n as f64);
        let k = (libm::floor(tau) as usize).min(n - 1);
        let w = tau - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }
}

/// Fraction of cells dropped at each end when measuring derivative-type
/// outputs, which can be singular at `t = a`.
pub const INTERIOR_EXCLUSION: f64 = 0.02;

/// Number of nodes skipped at each end of an `n`-cell grid under
/// [`INTERIOR_EXCLUSION`] (at least one).
pub fn interior_skip(n: usize) -> usize {
    (libm::ceil(INTERIOR_EXCLUSION * n as f64) as usize).max(1)
}

/// Order and type of a Hilfer derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    pub alpha: f64,
    pub beta: f64,
}

impl FracOrder {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, FracError> {
        check_unit_order(alpha)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(FracError::Domain {
                param: "type parameter beta",
                value: beta,
                expected: "0 <= beta <= 1",
            });
        }
        Ok(Self { alpha, beta })
    }

    /// `gamma = alpha + beta - alpha beta`, the exponent shift of the
    /// operator's kernel functions.
    pub fn derived(&self) -> f64 {
        self.alpha + self.beta - self.alpha * self.beta
    }
}

fn check_unit_order(alpha: f64) -> Result<(), FracError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FracError::Domain {
            param: "derivative order",
            value: alpha,
            expected: "0 < alpha < 1",
        })
    }
}

/// Riemann-Liouville integral `I^alpha f` at every node.
pub fn rl_integral(f: &GridFunction, alpha: f64) -> Result<GridFunction, FracError> {
    let q = RlQuadrature::for_grid(alpha, f)?;
    f.with_values(q.apply(f.values()))
}

/// `I^alpha f (t)` at an arbitrary point of `[a, b]`.
pub fn rl_integral_at(f: &GridFunction, alpha: f64, t: f64) -> Result<f64, FracError> {
    RlQuadrature::for_grid(alpha, f)?.at(f.values(), t)
}

/// First derivative by second-order differences: central in the interior,
/// one-sided three-point at both ends.
pub fn differentiate(f: &GridFunction) -> Result<GridFunction, FracError> {
    let v = f.values();
    let n = f.cells();
    let inv = 1.0 / (2.0 * f.step());
    let mut out = Vec::with_capacity(n + 1);
    out.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv);
    for k in 1..n {
        out.push((v[k + 1] - v[k - 1]) * inv);
    }
    out.push((3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) * inv);
    f.with_values(out)
}

fn integrate_or_identity(f: GridFunction, order: f64) -> Result<GridFunction, FracError> {
    if order == 0.0 {
        Ok(f)
    } else {
        rl_integral(&f, order)
    }
}

/// Riemann-Liouville derivative `D I^(1-alpha) f`, `0 < alpha < 1`.
pub fn rl_derivative(f: &GridFunction, alpha: f64) -> Result<GridFunction, FracError> {
    check_unit_order(alpha)?;
    differentiate(&rl_integral(f, 1.0 - alpha)?)
}

/// Caputo derivative `I^(1-alpha) D f`, `0 < alpha < 1`, with lower limit `a`.
pub fn caputo_derivative(f: &GridFunction, alpha: f64) -> Result<GridFunction, FracError> {
    check_unit_order(alpha)?;
    rl_integral(&differentiate(f)?, 1.0 - alpha)
}

/// Hilfer derivative `I^(beta (1-alpha)) D I^((1-beta)(1-alpha)) f`.
///
/// `beta = 0` runs exactly the Riemann-Liouville composition and `beta = 1`
/// exactly the Caputo one.
pub fn hilfer_derivative(f: &GridFunction, ord: FracOrder) -> Result<GridFunction, FracError> {
    let ord = FracOrder::new(ord.alpha, ord.beta)?;
    let inner = (1.0 - ord.beta) * (1.0 - ord.alpha);
    let outer = ord.beta * (1.0 - ord.alpha);
    let lifted = integrate_or_identity(f.clone(), inner)?;
    integrate_or_identity(differentiate(&lifted)?, outer)
}

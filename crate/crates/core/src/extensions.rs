//! Self-adjoint extensions of `−d²/dx²` on the half-line.
//!
//! The deficiency spaces are spanned by `φ₊(x) = e^{(i−1)x/√2}` and
//! `φ₋(x) = e^{−(i+1)x/√2}`, both square integrable, so the indices are
//! `(1, 1)` and the extensions are labelled by a phase `e^{ic}`, `c ∈ [0, 2π)`.
//! Adding `z·(φ₊ + e^{ic}φ₋)` to a function vanishing near the origin gives
//! boundary values annihilated by `α·ξ(0) + β·ξ′(0) = 0` with
//! `β ∝ e^{ic} + 1` and `α ∝ ((i+1)e^{ic} − (i−1))/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Threshold below which a boundary coefficient or ratio denominator counts as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencySign {
    Plus,
    Minus,
}

impl DeficiencySign {
    /// Exponent `μ` with `φ(x) = e^{μx}`.
    pub fn exponent(self) -> Complex64 {
        match self {
            DeficiencySign::Plus => Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            DeficiencySign::Minus => Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        }
    }

    /// The eigenvalue `±i` solved by the deficiency function.
    pub fn eigenvalue(self) -> Complex64 {
        match self {
            DeficiencySign::Plus => I,
            DeficiencySign::Minus => -I,
        }
    }
}

/// `φ₊(x) = e^{(i−1)x/√2}` or `φ₋(x) = e^{−(i+1)x/√2}`, for `x ≥ 0`.
pub fn deficiency_function(sign: DeficiencySign, x: f64) -> Complex64 {
    (sign.exponent() * x).exp()
}

pub fn deficiency_derivative(sign: DeficiencySign, x: f64) -> Complex64 {
    sign.exponent() * deficiency_function(sign, x)
}

pub fn deficiency_second_derivative(sign: DeficiencySign, x: f64) -> Complex64 {
    let mu = sign.exponent();
    mu * mu * deficiency_function(sign, x)
}

/// `|−φ″ − (±i)·φ|` with the second derivative taken exactly.
pub fn deficiency_ode_residual(sign: DeficiencySign, x: f64) -> f64 {
    (-deficiency_second_derivative(sign, x) - sign.eigenvalue() * deficiency_function(sign, x))
        .norm()
}

/// `∫₀^∞ |φ±|² = 1/√2` in closed form.
pub fn deficiency_norm_squared(_sign: DeficiencySign) -> f64 {
    FRAC_1_SQRT_2
}

/// `∫₀^∞ |φ±|²` by tanh–sinh quadrature on `[0, cutoff]`, plus the analytic tail
/// `e^{−√2·cutoff}/√2`. Returns the value and the size of the tail term.
pub fn deficiency_norm_squared_quadrature(sign: DeficiencySign, cutoff: f64) -> (f64, f64) {
    let body = quadrature::double_exponential::integrate(
        |x| deficiency_function(sign, x).norm_sqr(),
        0.0,
        cutoff,
        1e-14,
    );
    let tail = (-SQRT_2 * cutoff).exp() / SQRT_2;
    (body.integral + tail, tail)
}

/// Phase `θ(x, c) = −√2·x + c` with `e^{iθ}·φ₊(x) = e^{ic}·φ₋(x)`.
pub fn isometry_phase(x: f64, c: f64) -> f64 {
    -SQRT_2 * x + c
}

/// `|e^{iθ(x,c)}·φ₊(x) − e^{ic}·φ₋(x)|`
pub fn isometry_residual(x: f64, c: f64) -> f64 {
    let lhs = Complex64::from_polar(1.0, isometry_phase(x, c)) * deficiency_function(DeficiencySign::Plus, x);
    let rhs = Complex64::from_polar(1.0, c) * deficiency_function(DeficiencySign::Minus, x);
    (lhs - rhs).norm()
}

/// Coefficients of `α·ξ(0) + β·ξ′(0) = 0` exactly as they arise from the
/// symmetry relation, before normalization.
pub fn raw_boundary_coefficients(c: f64) -> (Complex64, Complex64) {
    let w = Complex64::from_polar(1.0, c);
    let beta = w + 1.0;
    let alpha = ((I + 1.0) * w - (I - 1.0)) / SQRT_2;
    (alpha, beta)
}

/// Boundary condition `α·ξ(0) + β·ξ′(0) = 0` selecting the extension with phase `e^{ic}`.
///
/// `(α, β)` has unit Euclidean length and its first nonzero component is real
/// positive. After removing the common phase `e^{ic/2}` both coefficients are
/// real: `α ∝ √2(cos(c/2) − sin(c/2))`, `β ∝ 2cos(c/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub c: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BoundaryCondition {
    /// `α·ξ(0) + β·ξ′(0)`
    pub fn apply(&self, value: Complex64, slope: Complex64) -> Complex64 {
        self.alpha * value + self.beta * slope
    }

    pub fn is_dirichlet(&self) -> bool {
        self.beta.norm() < SINGULAR_TOL
    }

    pub fn is_neumann(&self) -> bool {
        self.alpha.norm() < SINGULAR_TOL
    }

    /// `ξ(0)/ξ′(0) = −β/α`, absent for the Neumann condition.
    pub fn value_over_slope(&self) -> Option<Complex64> {
        (!self.is_neumann()).then(|| -self.beta / self.alpha)
    }
}

pub fn boundary_condition(c: f64) -> BoundaryCondition {
    let (cs, sn) = ((0.5 * c).cos(), (0.5 * c).sin());
    let alpha = SQRT_2 * (cs - sn);
    let beta = 2.0 * cs;
    let norm = alpha.hypot(beta);
    let (alpha, beta) = (alpha / norm, beta / norm);
    let lead = if alpha.abs() > SINGULAR_TOL { alpha } else { beta };
    let sign = lead.signum();
    BoundaryCondition {
        c,
        alpha: Complex64::new(sign * alpha, 0.0),
        beta: Complex64::new(sign * beta, 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// `ξ(0)/ξ′(0)`, undefined at `c = π/2`.
    ValueOverSlope,
    /// `ξ′(0)/ξ(0)`, undefined at `c = π`.
    SlopeOverValue,
}

impl RatioKind {
    pub fn number(self) -> u8 {
        match self {
            RatioKind::ValueOverSlope => 1,
            RatioKind::SlopeOverValue => 2,
        }
    }
}

/// Boundary ratio of the adjoint domain for phase `c`.
pub fn adjoint_ratio(c: f64, kind: RatioKind) -> Result<Complex64> {
    let w = Complex64::from_polar(1.0, c);
    let num = -SQRT_2 * (w + 1.0);
    let den = 1.0 + w + I * (w - 1.0);
    let (top, bottom) = match kind {
        RatioKind::ValueOverSlope => (num, den),
        RatioKind::SlopeOverValue => (den, num),
    };
    if bottom.norm() < SINGULAR_TOL {
        return Err(Error::SingularRatio { c, kind: kind.number() });
    }
    Ok(top / bottom)
}

/// A function vanishing on `[0, ε]`, given by samples on its own grid and
/// taken as zero outside it. `mu` records the boundary datum of the
/// symmetric-domain family it was drawn from; it plays no role in the
/// boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFunction {
    epsilon: f64,
    mu: Complex64,
    grid: Vec<f64>,
    values: Vec<Complex64>,
}

impl BaseFunction {
    pub fn new(epsilon: f64, mu: Complex64, grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if grid.len() != values.len() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "base samples need a strictly increasing grid of matching length".into(),
            ));
        }
        if grid.iter().zip(&values).any(|(&x, v)| x <= epsilon && v.norm() != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "base function must vanish on [0, {epsilon}]"
            )));
        }
        Ok(Self {
            epsilon,
            mu,
            grid,
            values,
        })
    }

    /// The zero function.
    pub fn zero(epsilon: f64) -> Self {
        Self {
            epsilon,
            mu: Complex64::default(),
            grid: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    pub fn value(&self, x: f64) -> Complex64 {
        if x <= self.epsilon || self.grid.is_empty() {
            return Complex64::default();
        }
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return Complex64::default();
        }
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, n - 1);
        let t = (x - self.grid[i - 1]) / (self.grid[i] - self.grid[i - 1]);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// `ψ = base + z·(φ₊ + e^{ic}·φ₋)`
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionDomainElement {
    pub base: BaseFunction,
    pub z: Complex64,
    pub c: f64,
}

impl ExtensionDomainElement {
    fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.c)
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.base.value(x)
            + self.z
                * (deficiency_function(DeficiencySign::Plus, x)
                    + self.phase() * deficiency_function(DeficiencySign::Minus, x))
    }

    /// `ψ(0) = z(1 + e^{ic})`
    pub fn value_at_origin(&self) -> Complex64 {
        self.value(0.0)
    }

    /// `ψ′(0) = z((i−1) − e^{ic}(i+1))/√2`; the base contributes nothing near 0.
    pub fn slope_at_origin(&self) -> Complex64 {
        self.z
            * (deficiency_derivative(DeficiencySign::Plus, 0.0)
                + self.phase() * deficiency_derivative(DeficiencySign::Minus, 0.0))
    }
}

/// `|α·ψ(0) + β·ψ′(0)|` for the boundary condition of the element's phase.
pub fn domain_membership_residual(elem: &ExtensionDomainElement) -> f64 {
    boundary_condition(elem.c)
        .apply(elem.value_at_origin(), elem.slope_at_origin())
        .norm()
}

fn check_sequence_args(n: u32, a: f64, min_a: f64) {
    assert!(n >= 1, "sequence index must be at least 1");
    assert!(a > min_a, "support end a must exceed {min_a}");
}

/// `x^{3/2}` on `[0, 1/n)`, `x^{−1/3}` on `[1/n, a)`, zero from `a` on.
///
/// The second branch also covers the junction point `x = 1/n`.
pub fn sequence_f(n: u32, a: f64, x: f64) -> f64 {
    check_sequence_args(n, a, 1.0);
    let knot = 1.0 / f64::from(n);
    if x < knot {
        x.powf(1.5)
    } else if x < a {
        x.powf(-1.0 / 3.0)
    } else {
        0.0
    }
}

pub fn sequence_f_derivative(n: u32, a: f64, x: f64) -> f64 {
    check_sequence_args(n, a, 1.0);
    let knot = 1.0 / f64::from(n);
    if x < knot {
        1.5 * x.sqrt()
    } else if x < a {
        -x.powf(-4.0 / 3.0) / 3.0
    } else {
        0.0
    }
}

/// L² limit of [`sequence_f`]: `x^{−1/3}` on `(0, a)`.
pub fn sequence_f_limit(a: f64, x: f64) -> f64 {
    if x > 0.0 && x < a {
        x.powf(-1.0 / 3.0)
    } else {
        0.0
    }
}

/// `1/n − (x − 1/n)²` on `[0, a)`, zero from `a` on.
pub fn sequence_g(n: u32, a: f64, x: f64) -> f64 {
    check_sequence_args(n, a, 0.0);
    let inv = 1.0 / f64::from(n);
    if x < a {
        inv - (x - inv) * (x - inv)
    } else {
        0.0
    }
}

pub fn sequence_g_derivative(n: u32, a: f64, x: f64) -> f64 {
    check_sequence_args(n, a, 0.0);
    let inv = 1.0 / f64::from(n);
    if x < a {
        -2.0 * (x - inv)
    } else {
        0.0
    }
}

/// Pointwise limit of [`sequence_g`]: `−x²` on `[0, a)`.
pub fn sequence_g_limit(a: f64, x: f64) -> f64 {
    if x < a {
        -x * x
    } else {
        0.0
    }
}

fn l2_distance(pieces: &[(f64, f64)], diff: impl Fn(f64) -> f64) -> f64 {
    let total: f64 = pieces
        .iter()
        .filter(|(lo, hi)| hi > lo)
        .map(|&(lo, hi)| {
            // x = t³ tames the x^{−2/3} endpoint behaviour of the f-sequence
            let integrand = |t: f64| 3.0 * t * t * diff(t * t * t).powi(2);
            quadrature::double_exponential::integrate(integrand, lo.cbrt(), hi.cbrt(), 1e-15).integral
        })
        .sum();
    total.sqrt()
}

/// `‖f_n − f‖_{L²(0,∞)}` by quadrature over the pieces of `f_n`.
pub fn sequence_f_l2_distance(n: u32, a: f64) -> f64 {
    let knot = (1.0 / f64::from(n)).min(a);
    l2_distance(&[(0.0, knot), (knot, a)], |x| {
        sequence_f(n, a, x) - sequence_f_limit(a, x)
    })
}

/// `‖g_n − (−x²)·𝟙_{[0,a)}‖_{L²(0,∞)}` by quadrature.
pub fn sequence_g_l2_distance(n: u32, a: f64) -> f64 {
    l2_distance(&[(0.0, a)], |x| sequence_g(n, a, x) - sequence_g_limit(a, x))
}

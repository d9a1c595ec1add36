//! Sampled checks of absolute continuity, weak derivatives and `W^{2,1}`
//! membership near the origin.

use serde::Serialize;

use crate::classify::tail::{fit_shells, log_shell_integrals, shell_bounds, Convergence, ShellFit};
use crate::classify::EndpointPosition;
use crate::error::{Error, Result};

/// Real samples of a function and, optionally, of its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    first: Option<Vec<f64>>,
    second: Option<Vec<f64>>,
}

fn check_samples(grid: &[f64], values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{what} has {} samples on a grid of {}",
            values.len(),
            grid.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} contains non-finite samples")));
    }
    Ok(())
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 4 {
            return Err(Error::InvalidArgument("need at least 4 samples".into()));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid must be finite and strictly increasing".into()));
        }
        check_samples(&grid, &values, "values")?;
        Ok(Self {
            grid,
            values,
            first: None,
            second: None,
        })
    }

    pub fn with_derivative(mut self, first: Vec<f64>) -> Result<Self> {
        check_samples(&self.grid, &first, "first derivative")?;
        self.first = Some(first);
        Ok(self)
    }

    pub fn with_second_derivative(mut self, second: Vec<f64>) -> Result<Self> {
        check_samples(&self.grid, &second, "second derivative")?;
        self.second = Some(second);
        Ok(self)
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    /// Samples `f`, `f′` and `f″` on `grid`.
    pub fn from_fns(
        grid: Vec<f64>,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        d2f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let first = grid.iter().map(|&x| df(x)).collect();
        let second = grid.iter().map(|&x| d2f(x)).collect();
        Self::from_fn(grid, f)?
            .with_derivative(first)?
            .with_second_derivative(second)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.first.as_deref()
    }

    pub fn second_derivative(&self) -> Option<&[f64]> {
        self.second.as_deref()
    }

    pub fn lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn hi(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if x >= self.lo() && x <= self.hi() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                x,
                lo: self.lo(),
                hi: self.hi(),
            })
        }
    }

    /// Piecewise-linear interpolant of the values.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        Ok(interpolate(&self.grid, &self.values, x))
    }
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && b > a);
    let h = (b - a) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
    g[n - 1] = b;
    g
}

/// `n` points from `lo` to `hi` with constant ratio, for resolving behaviour near 0.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| lo * (step * k as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    let i = grid.partition_point(|&g| g <= x).clamp(1, n - 1);
    let t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    values[i - 1] + t * (values[i] - values[i - 1])
}

/// Trapezoid rule on `[a, b]` with linear interpolation at non-grid ends.
fn trapezoid(grid: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        let (x0, x1) = (grid[i - 1], grid[i]);
        let (lo, hi) = (x0.max(a), x1.min(b));
        if hi <= lo {
            continue;
        }
        let (v0, v1) = (values[i - 1], values[i]);
        let at = |x: f64| v0 + (v1 - v0) * (x - x0) / (x1 - x0);
        acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    acc
}

/// `|∫ₐᵇ f′ − (f(b) − f(a))|` with the derivative samples integrated by trapezoid.
pub fn check_fundamental_theorem(f: &SampledFunction, a: f64, b: f64) -> Result<f64> {
    let first = f.derivative().ok_or(Error::MissingDerivative)?;
    f.check_range(a)?;
    f.check_range(b)?;
    if a > b {
        return Err(Error::InvalidArgument(format!("a = {a} exceeds b = {b}")));
    }
    let integral = trapezoid(&f.grid, first, a, b);
    let jump = f.value_at(b)? - f.value_at(a)?;
    Ok((integral - jump).abs())
}

/// The bump `(1 − t²)²` with `t = (x − center)/width`, supported on `|t| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpTest {
    pub center: f64,
    pub width: f64,
}

impl BumpTest {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() {
            return Err(Error::InvalidArgument("bump needs a finite center and positive width".into()));
        }
        Ok(Self { center, width })
    }

    pub fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - t * t).powi(2)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            -4.0 * t * (1.0 - t * t) / self.width
        }
    }
}

/// Largest `|∫u·φ′ + ∫g·φ|` over the bumps, with `u` and `g` taken piecewise
/// linear between samples. Zero residual means `g` is the weak derivative of
/// `u` as far as these tests can see.
pub fn check_weak_derivative(
    u: &SampledFunction,
    g: &SampledFunction,
    tests: &[BumpTest],
) -> Result<f64> {
    if u.grid != g.grid {
        return Err(Error::GridMismatch("u and g must share a grid".into()));
    }
    let (lo, hi) = (u.lo(), u.hi());
    let mut worst: f64 = 0.0;
    for bump in tests {
        if bump.center - bump.width <= lo || bump.center + bump.width >= hi {
            return Err(Error::BumpNotInterior {
                center: bump.center,
                width: bump.width,
                lo,
                hi,
            });
        }
        worst = worst.max(bump_pairing(&u.grid, &u.values, &g.values, bump).abs());
    }
    Ok(worst)
}

/// `∫ (ū·φ′ + ḡ·φ)` for the piecewise-linear interpolants `ū`, `ḡ`, integrated
/// exactly cell by cell. Three Gauss points suffice: the integrand is a
/// polynomial of degree 5 on every cell clipped to the bump support.
fn bump_pairing(grid: &[f64], u: &[f64], g: &[f64], bump: &BumpTest) -> f64 {
    const NODES: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774_596_669_241_483_4, 5.0 / 9.0),
    ];
    let (a, b) = (bump.center - bump.width, bump.center + bump.width);
    let start = grid.partition_point(|&x| x <= a).max(1);
    let mut acc = 0.0;
    for i in start..grid.len() {
        let (x0, x1) = (grid[i - 1], grid[i]);
        if x0 >= b {
            break;
        }
        let (lo, hi) = (x0.max(a), x1.min(b));
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (node, weight) in NODES {
            let x = mid + half * node;
            let t = (x - x0) / (x1 - x0);
            let uv = u[i - 1] + t * (u[i] - u[i - 1]);
            let gv = g[i - 1] + t * (g[i] - g[i - 1]);
            acc += weight * half * (uv * bump.derivative(x) + gv * bump.value(x));
        }
    }
    acc
}

/// `y0 + ∫_{grid[0]}^{x} g` by trapezoid.
pub fn antiderivative(g: &SampledFunction, y0: f64, x: f64) -> Result<f64> {
    g.check_range(x)?;
    Ok(y0 + trapezoid(&g.grid, &g.values, g.lo(), x))
}

/// Cumulative antiderivative sampled on `g`'s grid, carrying `g` as its derivative.
pub fn antiderivative_function(g: &SampledFunction, y0: f64) -> Result<SampledFunction> {
    let mut values = Vec::with_capacity(g.grid.len());
    let mut acc = y0;
    values.push(acc);
    for i in 1..g.grid.len() {
        acc += 0.5 * (g.grid[i] - g.grid[i - 1]) * (g.values[i] + g.values[i - 1]);
        values.push(acc);
    }
    SampledFunction::new(g.grid.clone(), values)?.with_derivative(g.values.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// `∫|f|`, `∫|f′|`, `∫|f″|` all finite near 0.
    InW21,
    /// `f, f′` integrable but `f″` is not.
    InW11Only,
    /// `f` or `f′` fails to be integrable.
    Neither,
    /// Some shell fit landed in the undecidable band.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    /// Derivative order 0, 1 or 2.
    pub order: u8,
    pub log_shell_integrals: Vec<f64>,
    pub fit: ShellFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct W21Report {
    pub orders: Vec<OrderReport>,
    pub membership: Membership,
    /// Lowest derivative order whose integral diverges, if any.
    pub failing_order: Option<u8>,
}

impl W21Report {
    pub fn in_w21(&self) -> Option<bool> {
        match self.membership {
            Membership::InW21 => Some(true),
            Membership::Inconclusive => None,
            _ => Some(false),
        }
    }
}

/// Tests integrability of `|f|`, `|f′|` and `|f″|` toward 0 for samples on
/// `(0, b]`, using dyadic shells `[b·2^{−k−1}, b·2^{−k}]`.
pub fn w21_report(f: &SampledFunction, margin: f64) -> Result<W21Report> {
    let (first, second) = match (f.derivative(), f.second_derivative()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingDerivative),
    };
    if f.lo() <= 0.0 {
        return Err(Error::InvalidArgument("samples must lie in (0, b]".into()));
    }
    let shells = shell_bounds(EndpointPosition::Finite(0.0), f.hi(), f.lo());
    if shells.len() < 4 {
        return Err(Error::InsufficientTail {
            shells: shells.len(),
            required: 4,
        });
    }
    let orders: Vec<OrderReport> = [f.values(), first, second]
        .into_iter()
        .enumerate()
        .map(|(order, samples)| {
            let logs: Vec<f64> = samples.iter().map(|v| v.abs().ln()).collect();
            let log_shell_integrals = log_shell_integrals(&f.grid, &logs, &shells);
            let fit = fit_shells(&log_shell_integrals, margin);
            OrderReport {
                order: order as u8,
                log_shell_integrals,
                fit,
            }
        })
        .collect();
    let failing_order = orders
        .iter()
        .find(|o| o.fit.convergence == Convergence::Divergent)
        .map(|o| o.order);
    let undecided = orders.iter().any(|o| o.fit.convergence == Convergence::Borderline);
    let membership = match failing_order {
        Some(0 | 1) => Membership::Neither,
        Some(_) if undecided => Membership::Inconclusive,
        Some(_) => Membership::InW11Only,
        None if undecided => Membership::Inconclusive,
        None => Membership::InW21,
    };
    Ok(W21Report {
        orders,
        membership,
        failing_order,
    })
}

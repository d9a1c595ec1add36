//! Dyadic-shell tests for improper integrals near an endpoint.
//!
//! The integral of a density toward an endpoint is split into shells whose
//! distance (or, toward infinity, abscissa) doubles from one shell to the next.
//! A least-squares fit of `ln Iₖ` against `k` gives the asymptotic shell ratio:
//! below `1 − δ` the tail converges, above `1 + δ` it diverges, and in between
//! the shell data cannot decide.

use serde::Serialize;

use super::{Endpoint, EndpointPosition};
use crate::error::{Error, Result};
use crate::odeint::{ComplexState, SolutionTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Convergent,
    Divergent,
    Borderline,
}

/// Outcome of fitting shell integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellFit {
    /// Slope of `ln Iₖ` per shell; `-inf` when the tail vanishes identically.
    pub fitted_exponent: f64,
    /// `exp(fitted_exponent)`
    pub ratio: f64,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// `∫|y|²` over successive shells toward the endpoint. May be `inf` when
    /// the true value overflows; `log_shell_integrals` is always usable.
    pub shell_integrals: Vec<f64>,
    pub log_shell_integrals: Vec<f64>,
    pub fitted_exponent: f64,
    pub ratio: f64,
    /// Half-width δ of the undecidable band around ratio 1.
    pub margin: f64,
    pub convergence: Convergence,
    /// 1 or 2 for the members of a fundamental pair, 0 for the reverse-integrated
    /// subdominant solution at infinity.
    pub solution_index: u8,
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

fn lerp_log(va: f64, vb: f64, t: f64) -> f64 {
    let m = va.max(vb);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((1.0 - t) * (va - m).exp() + t * (vb - m).exp()).ln()
}

/// `ln ∫_lo^hi ρ` by trapezoid, where `log_density[j] = ln ρ(x_j)` on an
/// ascending grid. Values at `lo` and `hi` are interpolated linearly in `ρ`.
fn log_trapezoid(grid: &[f64], log_density: &[f64], lo: f64, hi: f64) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    let start = grid.partition_point(|&x| x <= lo).saturating_sub(1);
    for j in start..grid.len().saturating_sub(1) {
        let (x0, x1) = (grid[j], grid[j + 1]);
        if x0 >= hi {
            break;
        }
        let a = x0.max(lo);
        let b = x1.min(hi);
        if b <= a {
            continue;
        }
        let (v0, v1) = (log_density[j], log_density[j + 1]);
        let va = lerp_log(v0, v1, (a - x0) / (x1 - x0));
        let vb = lerp_log(v0, v1, (b - x0) / (x1 - x0));
        acc = log_add(acc, (0.5 * (b - a)).ln() + log_add(va, vb));
    }
    acc
}

/// Shell intervals `(lo, hi)` covered by `[x_near, x_far]`, ordered toward the endpoint.
pub(crate) fn shell_bounds(position: EndpointPosition, x_far: f64, x_near: f64) -> Vec<(f64, f64)> {
    let mut shells = Vec::new();
    match position {
        EndpointPosition::Finite(e) => {
            let side = (x_far - e).signum();
            let d_far = (x_far - e).abs();
            let d_near = (x_near - e).abs() * (1.0 - 1e-9);
            let mut d = d_far;
            while d / 2.0 >= d_near && d > 0.0 {
                let (a, b) = (e + side * d / 2.0, e + side * d);
                shells.push((a.min(b), a.max(b)));
                d /= 2.0;
            }
        }
        EndpointPosition::PlusInfinity | EndpointPosition::MinusInfinity => {
            let sign = if position == EndpointPosition::PlusInfinity { 1.0 } else { -1.0 };
            let reach = sign * x_near * (1.0 + 1e-9);
            let mut s = (sign * x_far).max(1.0);
            while 2.0 * s <= reach {
                let (a, b) = (sign * s, sign * 2.0 * s);
                shells.push((a.min(b), a.max(b)));
                s *= 2.0;
            }
        }
    }
    shells
}

/// Log shell integrals of a sampled density given as `ln ρ` on any monotone grid.
pub(crate) fn log_shell_integrals(
    grid: &[f64],
    log_density: &[f64],
    shells: &[(f64, f64)],
) -> Vec<f64> {
    let ascending = grid.len() < 2 || grid[1] > grid[0];
    let (g, v): (Vec<f64>, Vec<f64>) = if ascending {
        (grid.to_vec(), log_density.to_vec())
    } else {
        (grid.iter().rev().copied().collect(), log_density.iter().rev().copied().collect())
    };
    shells
        .iter()
        .map(|&(lo, hi)| log_trapezoid(&g, &v, lo, hi))
        .collect()
}

/// Least-squares shell ratio with the `1 ± margin` decision band.
pub fn fit_shells(log_integrals: &[f64], margin: f64) -> ShellFit {
    let vanished = ShellFit {
        fitted_exponent: f64::NEG_INFINITY,
        ratio: 0.0,
        convergence: Convergence::Convergent,
    };
    match log_integrals.last() {
        None => return vanished,
        Some(&last) if last == f64::NEG_INFINITY => return vanished,
        _ => {}
    }
    let points: Vec<(f64, f64)> = log_integrals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(k, &v)| (k as f64, v))
        .collect();
    let slope = if points.len() < 2 {
        0.0
    } else {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    let ratio = slope.exp();
    let convergence = if ratio < 1.0 - margin {
        Convergence::Convergent
    } else if ratio > 1.0 + margin {
        Convergence::Divergent
    } else {
        Convergence::Borderline
    };
    ShellFit {
        fitted_exponent: slope,
        ratio,
        convergence,
    }
}

/// Builds a tail report for `|y|²` from raw samples, keeping the `max_shells`
/// shells closest to the endpoint.
pub(crate) fn tail_from_samples(
    grid: &[f64],
    states: &[ComplexState],
    position: EndpointPosition,
    margin: f64,
    min_shells: usize,
    max_shells: usize,
    solution_index: u8,
) -> Result<TailReport> {
    let (x_far, x_near) = extremes(grid, position);
    let mut shells = shell_bounds(position, x_far, x_near);
    if shells.len() > max_shells {
        shells.drain(..shells.len() - max_shells);
    }
    if shells.len() < min_shells {
        return Err(Error::InsufficientTail {
            shells: shells.len(),
            required: min_shells,
        });
    }
    let log_density: Vec<f64> = states.iter().map(|s| 2.0 * s.ln_abs_value()).collect();
    let logs = log_shell_integrals(grid, &log_density, &shells);
    let fit = fit_shells(&logs, margin);
    Ok(TailReport {
        shell_integrals: logs.iter().map(|v| v.exp()).collect(),
        log_shell_integrals: logs,
        fitted_exponent: fit.fitted_exponent,
        ratio: fit.ratio,
        margin,
        convergence: fit.convergence,
        solution_index,
    })
}

/// Farthest and nearest sample relative to the endpoint.
fn extremes(grid: &[f64], position: EndpointPosition) -> (f64, f64) {
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    match position {
        EndpointPosition::Finite(e) => {
            if (lo - e).abs() > (hi - e).abs() {
                (lo, hi)
            } else {
                (hi, lo)
            }
        }
        EndpointPosition::PlusInfinity => (lo, hi),
        EndpointPosition::MinusInfinity => (hi, lo),
    }
}

/// Dyadic-shell test of `∫|y|²` toward `endpoint` along a trace.
pub fn square_integrable_tail(
    trace: &SolutionTrace,
    endpoint: &Endpoint,
    margin: f64,
    max_shells: usize,
) -> Result<TailReport> {
    tail_from_samples(
        trace.grid(),
        trace.states(),
        endpoint.position,
        margin,
        4,
        max_shells,
        1,
    )
}

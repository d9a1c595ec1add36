//! Complex integration of `−y″ + q(x)·y = l·y` written as the first-order
//! system `y′ = v`, `v′ = (q(x) − l)·y`.
//!
//! Stepping is a Dormand–Prince 5(4) pair with PI step control. Each solution
//! is stored as a mantissa pair `(y, y′)` together with a natural-log scale
//! factor, so exponentially growing solutions never overflow. The error norm
//! is measured relative to each solution's own mantissa, which makes the step
//! sequence independent of how often rescaling happens.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute tolerance, applied relative to the mantissa norm `|y| + |y′|`.
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Mantissas are kept with `|y| + |y′|` inside `[1/band, band]`.
    pub rescale_band: f64,
    /// Steps toward a finite singular endpoint `e` never exceed
    /// `(1 − ratio)·|x − e|`; toward infinity they never exceed
    /// `(1/ratio − 1)·max(|x|, 1)`.
    pub geometric_ratio: f64,
    /// Distance at which a finite singular endpoint is truncated.
    pub x_min: f64,
    /// Truncation of an infinite endpoint.
    pub x_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            rescale_band: 1e2,
            geometric_ratio: 0.9,
            x_min: 1e-8,
            x_max: 1e4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be positive");
        }
        if self.max_steps < 1000 {
            return bad("max_steps must be at least 1000");
        }
        if !(self.geometric_ratio > 0.0 && self.geometric_ratio < 1.0) {
            return bad("geometric_ratio must lie in (0, 1)");
        }
        if !(self.rescale_band > 1.0) {
            return bad("rescale_band must exceed 1");
        }
        if !(self.x_min > 0.0 && self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad("x_min and x_max must be positive and finite");
        }
        Ok(())
    }
}

/// One solution sample: the true values are `e^{log_scale}·(y, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexState {
    pub y: Complex64,
    pub dy: Complex64,
    pub log_scale: f64,
}

impl ComplexState {
    pub fn new(y: Complex64, dy: Complex64) -> Self {
        Self { y, dy, log_scale: 0.0 }
    }

    pub fn real(y: f64, dy: f64) -> Self {
        Self::new(Complex64::new(y, 0.0), Complex64::new(dy, 0.0))
    }

    pub fn mantissa_norm(&self) -> f64 {
        self.y.norm() + self.dy.norm()
    }

    pub fn value(&self) -> Complex64 {
        self.y * self.log_scale.exp()
    }

    pub fn derivative(&self) -> Complex64 {
        self.dy * self.log_scale.exp()
    }

    /// `ln |value|`, finite even when `value` itself is not representable.
    pub fn ln_abs_value(&self) -> f64 {
        self.y.norm().ln() + self.log_scale
    }

    fn is_finite(&self) -> bool {
        self.y.is_finite() && self.dy.is_finite() && self.log_scale.is_finite()
    }

    /// Moves the mantissa back inside `[1/band, band]`, returning the factor
    /// it was divided by. The factor is a power of two so the division is exact.
    fn rescale(&mut self, band: f64) -> f64 {
        let s = self.mantissa_norm();
        if s > 0.0 && (s > band || s < 1.0 / band) {
            let k = s.log2().round() as i32;
            let div = 2f64.powi(k);
            self.y /= div;
            self.dy /= div;
            self.log_scale += f64::from(k) * std::f64::consts::LN_2;
            div
        } else {
            1.0
        }
    }
}

/// Where an integration stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// A regular point, reached exactly.
    Point(f64),
    /// A finite singular endpoint, approached to within `x_min`.
    Endpoint(f64),
    /// `+∞`, truncated at `x_max`.
    PlusInfinity,
    /// `−∞`, truncated at `−x_max`.
    MinusInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StepCap {
    Free,
    Toward(f64),
    Outward,
}

impl Target {
    pub(crate) fn resolve(self, x_start: f64, cfg: &IntegratorConfig) -> Result<(f64, StepCap)> {
        let (x_end, cap) = match self {
            Target::Point(x) => (x, StepCap::Free),
            Target::Endpoint(e) => {
                let side = (e - x_start).signum();
                (e - side * cfg.x_min, StepCap::Toward(e))
            }
            Target::PlusInfinity => (cfg.x_max, StepCap::Outward),
            Target::MinusInfinity => (-cfg.x_max, StepCap::Outward),
        };
        if !x_end.is_finite() || !x_start.is_finite() || x_end == x_start {
            return Err(Error::InvalidArgument(format!(
                "cannot integrate from {x_start} toward {self:?}"
            )));
        }
        if let Target::Endpoint(e) = self {
            if (x_end - x_start) * (e - x_start) <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "start {x_start} is within x_min of the endpoint {e}"
                )));
            }
        }
        if matches!(self, Target::PlusInfinity) && x_end <= x_start
            || matches!(self, Target::MinusInfinity) && x_end >= x_start
        {
            return Err(Error::InvalidArgument(format!(
                "start {x_start} lies beyond the truncation point {x_end}"
            )));
        }
        Ok((x_end, cap))
    }
}

/// A numerically integrated solution, sampled at every accepted step.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    eigenvalue: Complex64,
    grid: Vec<f64>,
    states: Vec<ComplexState>,
    potential: Arc<Potential>,
    direction: Direction,
}

impl SolutionTrace {
    /// Assembles a trace from samples; the grid must be strictly monotone.
    pub fn from_parts(
        eigenvalue: Complex64,
        potential: Arc<Potential>,
        grid: Vec<f64>,
        states: Vec<ComplexState>,
    ) -> Result<Self> {
        if grid.len() != states.len() || grid.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "trace needs matching grid and states with at least 2 points (got {} and {})",
                grid.len(),
                states.len()
            )));
        }
        let direction = if grid[1] > grid[0] {
            Direction::Increasing
        } else {
            Direction::Decreasing
        };
        let monotone = grid.windows(2).all(|w| match direction {
            Direction::Increasing => w[1] > w[0],
            Direction::Decreasing => w[1] < w[0],
        });
        if !monotone {
            return Err(Error::InvalidArgument("trace grid must be strictly monotone".into()));
        }
        Ok(Self {
            eigenvalue,
            grid,
            states,
            potential,
            direction,
        })
    }

    pub fn eigenvalue(&self) -> Complex64 {
        self.eigenvalue
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn states(&self) -> &[ComplexState] {
        &self.states
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn first(&self) -> (f64, ComplexState) {
        (self.grid[0], self.states[0])
    }

    pub fn last(&self) -> (f64, ComplexState) {
        let n = self.grid.len() - 1;
        (self.grid[n], self.states[n])
    }

    /// Index of the grid point equal to `x` (up to a relative 1e-12).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * x.abs().max(1e-300);
        let i = match self.direction {
            Direction::Increasing => self.grid.partition_point(|&g| g < x - tol),
            Direction::Decreasing => self.grid.partition_point(|&g| g > x + tol),
        };
        (i < self.grid.len() && (self.grid[i] - x).abs() <= tol).then_some(i)
    }

    /// Samples with true values and the second derivative `y″ = (q − l)·y`.
    pub fn c2_samples(&self) -> Result<C2Samples> {
        let mut values = Vec::with_capacity(self.len());
        let mut first = Vec::with_capacity(self.len());
        let mut second = Vec::with_capacity(self.len());
        for (&x, s) in self.grid.iter().zip(&self.states) {
            let y = s.value();
            values.push(y);
            first.push(s.derivative());
            second.push((self.potential.evaluate(x)? - self.eigenvalue) * y);
        }
        C2Samples::new(self.grid.clone(), values, first, second)
    }

    /// CSV with columns `x,re_y,im_y,re_dy,im_dy,log_scale` (mantissas plus scale).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,re_y,im_y,re_dy,im_dy,log_scale")?;
        for (x, s) in self.grid.iter().zip(&self.states) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                x, s.y.re, s.y.im, s.dy.re, s.dy.im, s.log_scale
            )?;
        }
        Ok(())
    }

    fn same_problem(&self, other: &SolutionTrace) -> bool {
        self.eigenvalue == other.eigenvalue
            && (Arc::ptr_eq(&self.potential, &other.potential) || self.potential == other.potential)
    }
}

/// Complex samples of a C² function with its first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct C2Samples {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub first: Vec<Complex64>,
    pub second: Vec<Complex64>,
}

impl C2Samples {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<Complex64>,
        first: Vec<Complex64>,
        second: Vec<Complex64>,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n || first.len() != n || second.len() != n || n < 2 {
            return Err(Error::InvalidArgument(
                "C² samples need equal-length grid, values and derivatives".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            first,
            second,
        })
    }

    /// Samples a real function given in closed form.
    pub fn from_fn(
        grid: Vec<f64>,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        d2f: impl Fn(f64) -> f64,
    ) -> Self {
        let c = |g: &dyn Fn(f64) -> f64| grid.iter().map(|&x| Complex64::new(g(x), 0.0)).collect();
        let values = c(&f);
        let first = c(&df);
        let second = c(&d2f);
        Self {
            grid,
            values,
            first,
            second,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Pair = [Complex64; 2];

#[inline]
fn rhs(f: Complex64, s: &Pair) -> Pair {
    [s[1], f * s[0]]
}

#[inline]
fn comb(base: &Pair, h: f64, terms: &[(f64, &Pair)]) -> Pair {
    let mut out = *base;
    for &(a, k) in terms {
        out[0] += k[0] * (a * h);
        out[1] += k[1] * (a * h);
    }
    out
}

/// Incremental integrator over a bundle of solutions sharing one grid.
pub(crate) struct Stepper<'a> {
    q: &'a Potential,
    eigenvalue: Complex64,
    cfg: IntegratorConfig,
    cap: StepCap,
    x: f64,
    h: f64,
    err_prev: f64,
    cur: Vec<Pair>,
    scale: Vec<f64>,
    slope: Vec<Pair>,
    steps: usize,
    grid: Vec<f64>,
    records: Vec<Vec<ComplexState>>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(
        q: &'a Potential,
        eigenvalue: Complex64,
        x_start: f64,
        inits: &[ComplexState],
        cap: StepCap,
        cfg: &IntegratorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if inits.is_empty() || inits.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(
                "initial states must be present and finite".into(),
            ));
        }
        let f0 = q.evaluate(x_start)? - eigenvalue;
        let mut cur = Vec::with_capacity(inits.len());
        let mut scale = Vec::with_capacity(inits.len());
        let mut records = Vec::with_capacity(inits.len());
        for init in inits {
            let mut s = *init;
            s.rescale(cfg.rescale_band);
            cur.push([s.y, s.dy]);
            scale.push(s.log_scale);
            records.push(vec![s]);
        }
        let slope = cur.iter().map(|s| rhs(f0, s)).collect();
        Ok(Self {
            q,
            eigenvalue,
            cfg: *cfg,
            cap,
            x: x_start,
            h: 0.0,
            err_prev: 1e-4,
            cur,
            scale,
            slope,
            steps: 0,
            grid: vec![x_start],
            records,
        })
    }

    pub(crate) fn x(&self) -> f64 {
        self.x
    }

    pub(crate) fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub(crate) fn states(&self, j: usize) -> &[ComplexState] {
        &self.records[j]
    }

    fn tolerance(&self, old: &Pair, new: &Pair, k: usize) -> f64 {
        let norm = old[0].norm() + old[1].norm();
        self.cfg.abs_tol * norm + self.cfg.rel_tol * old[k].norm().max(new[k].norm())
    }

    fn error_norm(&self, new: &[Pair], err: &[Pair]) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for ((old, new), e) in self.cur.iter().zip(new).zip(err) {
            for k in 0..2 {
                let sc = self.tolerance(old, new, k);
                let r = if sc > 0.0 { e[k].norm() / sc } else { 0.0 };
                acc += r * r;
                count += 1;
            }
        }
        (acc / count as f64).sqrt()
    }

    fn max_step(&self) -> f64 {
        let r = self.cfg.geometric_ratio;
        match self.cap {
            StepCap::Free => f64::INFINITY,
            StepCap::Toward(e) => (1.0 - r) * (self.x - e).abs(),
            StepCap::Outward => (1.0 / r - 1.0) * self.x.abs().max(1.0),
        }
    }

    fn initial_step(&self, span: f64) -> Result<f64> {
        let zero = [Complex64::new(0.0, 0.0); 2];
        let weighted = |v: &[Pair]| -> f64 {
            let mut acc = 0.0;
            for (old, s) in self.cur.iter().zip(v) {
                for k in 0..2 {
                    let sc = self.tolerance(old, &zero, k).max(1e-300);
                    acc += (s[k].norm() / sc).powi(2);
                }
            }
            (acc / (2 * v.len()) as f64).sqrt()
        };
        let d0 = weighted(&self.cur);
        let d1 = weighted(&self.slope);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs()).min(self.max_step());
        let x1 = self.x + span.signum() * h0;
        let f1 = self.q.evaluate(x1)? - self.eigenvalue;
        let probe: Vec<Pair> = self
            .cur
            .iter()
            .zip(&self.slope)
            .map(|(s, k)| {
                let y1 = comb(s, span.signum() * h0, &[(1.0, k)]);
                let k1 = rhs(f1, &y1);
                [k1[0] - k[0], k1[1] - k[1]]
            })
            .collect();
        let d2 = weighted(&probe) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span.abs()).min(self.max_step()))
    }

    /// Integrates until `x_target`, recording every accepted step.
    pub(crate) fn advance_to(&mut self, x_target: f64) -> Result<()> {
        let dir = (x_target - self.x).signum();
        if dir == 0.0 {
            return Ok(());
        }
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = dir * self.initial_step(x_target - self.x)?;
        }
        let n = self.cur.len();
        let mut k2 = vec![[Complex64::default(); 2]; n];
        let mut k3 = k2.clone();
        let mut k4 = k2.clone();
        let mut k5 = k2.clone();
        let mut k6 = k2.clone();
        let mut k7 = k2.clone();
        let mut next = k2.clone();
        let mut err = k2.clone();

        while (x_target - self.x) * dir > 0.0 {
            if self.steps >= self.cfg.max_steps {
                return Err(Error::MaxStepsExceeded {
                    max_steps: self.cfg.max_steps,
                    x: self.x,
                    x_end: x_target,
                });
            }
            let remaining = (x_target - self.x).abs();
            let mut h = self.h.abs().min(self.max_step());
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.x.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::StepUnderflow { x: self.x, h });
            }
            let h = dir * h;
            let x = self.x;
            let f2 = self.q.evaluate(x + C2 * h)? - self.eigenvalue;
            let f3 = self.q.evaluate(x + C3 * h)? - self.eigenvalue;
            let f4 = self.q.evaluate(x + C4 * h)? - self.eigenvalue;
            let f5 = self.q.evaluate(x + C5 * h)? - self.eigenvalue;
            let x_new = if last { x_target } else { x + h };
            let f6 = self.q.evaluate(x + h)? - self.eigenvalue;
            let f7 = self.q.evaluate(x_new)? - self.eigenvalue;
            for j in 0..n {
                let y = &self.cur[j];
                let k1 = &self.slope[j];
                k2[j] = rhs(f2, &comb(y, h, &[(A21, k1)]));
                k3[j] = rhs(f3, &comb(y, h, &[(A31, k1), (A32, &k2[j])]));
                k4[j] = rhs(f4, &comb(y, h, &[(A41, k1), (A42, &k2[j]), (A43, &k3[j])]));
                k5[j] = rhs(
                    f5,
                    &comb(y, h, &[(A51, k1), (A52, &k2[j]), (A53, &k3[j]), (A54, &k4[j])]),
                );
                k6[j] = rhs(
                    f6,
                    &comb(
                        y,
                        h,
                        &[(A61, k1), (A62, &k2[j]), (A63, &k3[j]), (A64, &k4[j]), (A65, &k5[j])],
                    ),
                );
                next[j] = comb(
                    y,
                    h,
                    &[(A71, k1), (A73, &k3[j]), (A74, &k4[j]), (A75, &k5[j]), (A76, &k6[j])],
                );
                k7[j] = rhs(f7, &next[j]);
                let zero = [Complex64::default(); 2];
                err[j] = comb(
                    &zero,
                    h,
                    &[
                        (E1, k1),
                        (E3, &k3[j]),
                        (E4, &k4[j]),
                        (E5, &k5[j]),
                        (E6, &k6[j]),
                        (E7, &k7[j]),
                    ],
                );
            }
            let e = self.error_norm(&next, &err);
            if !e.is_finite() {
                self.h = 0.2 * h;
                self.steps += 1;
                continue;
            }
            const BETA: f64 = 0.04;
            let fac11 = e.powf(0.2 - 0.75 * BETA);
            if e <= 1.0 {
                let fac = (fac11 / self.err_prev.powf(BETA) / 0.9).clamp(0.2, 10.0);
                self.err_prev = e.max(1e-4);
                self.h = h / fac;
                self.x = x_new;
                for j in 0..n {
                    let mut s = ComplexState {
                        y: next[j][0],
                        dy: next[j][1],
                        log_scale: self.scale[j],
                    };
                    let div = s.rescale(self.cfg.rescale_band);
                    self.cur[j] = [s.y, s.dy];
                    self.scale[j] = s.log_scale;
                    self.slope[j] = [k7[j][0] / div, k7[j][1] / div];
                    self.records[j].push(s);
                }
                self.grid.push(x_new);
            } else {
                self.h = h / (fac11 / 0.9).min(5.0);
            }
            self.steps += 1;
        }
        Ok(())
    }

    pub(crate) fn into_traces(self, potential: Arc<Potential>) -> Result<Vec<SolutionTrace>> {
        let grid = self.grid;
        let eigenvalue = self.eigenvalue;
        self.records
            .into_iter()
            .map(|states| {
                SolutionTrace::from_parts(eigenvalue, Arc::clone(&potential), grid.clone(), states)
            })
            .collect()
    }
}

/// Integrates several solutions on one shared grid, optionally forcing the
/// grid through the given interior `checkpoints` (in integration order).
pub fn integrate_bundle(
    q: &Potential,
    eigenvalue: Complex64,
    x_start: f64,
    target: Target,
    inits: &[ComplexState],
    checkpoints: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<SolutionTrace>> {
    let (x_end, cap) = target.resolve(x_start, cfg)?;
    let mut stepper = Stepper::new(q, eigenvalue, x_start, inits, cap, cfg)?;
    let dir = (x_end - x_start).signum();
    for &c in checkpoints {
        if (c - stepper.x()) * dir > 0.0 && (x_end - c) * dir > 0.0 {
            stepper.advance_to(c)?;
        }
    }
    stepper.advance_to(x_end)?;
    stepper.into_traces(Arc::new(q.clone()))
}

/// Integrates one solution of `−y″ + q·y = l·y` from `x_start` toward `target`.
pub fn integrate(
    q: &Potential,
    eigenvalue: Complex64,
    x_start: f64,
    target: Target,
    init: ComplexState,
    cfg: &IntegratorConfig,
) -> Result<SolutionTrace> {
    let mut traces = integrate_bundle(q, eigenvalue, x_start, target, &[init], &[], cfg)?;
    Ok(traces.remove(0))
}

/// The solutions with data `(1, 0)` and `(0, 1)` at `anchor`, integrated
/// together toward `target`. Their Wronskian at the anchor is exactly 1.
pub fn fundamental_pair(
    q: &Potential,
    eigenvalue: Complex64,
    anchor: f64,
    target: Target,
    cfg: &IntegratorConfig,
) -> Result<(SolutionTrace, SolutionTrace)> {
    let inits = [ComplexState::real(1.0, 0.0), ComplexState::real(0.0, 1.0)];
    let mut traces = integrate_bundle(q, eigenvalue, anchor, target, &inits, &[], cfg)?;
    let second = traces.pop().expect("two traces");
    let first = traces.pop().expect("two traces");
    Ok((first, second))
}

fn check_compatible(t1: &SolutionTrace, t2: &SolutionTrace) -> Result<()> {
    if t1.same_problem(t2) {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "traces belong to different potentials or eigenvalues".into(),
        ))
    }
}

/// `W(x) = y₁·y₂′ − y₁′·y₂` including both scale factors.
pub fn wronskian(t1: &SolutionTrace, t2: &SolutionTrace, x: f64) -> Result<Complex64> {
    check_compatible(t1, t2)?;
    let (i, j) = match (t1.index_of(x), t2.index_of(x)) {
        (Some(i), Some(j)) => (i, j),
        _ => {
            return Err(Error::GridMismatch(format!(
                "x = {x} is not a grid point of both traces"
            )))
        }
    };
    Ok(wronskian_of(&t1.states[i], &t2.states[j]))
}

fn wronskian_of(a: &ComplexState, b: &ComplexState) -> Complex64 {
    (a.y * b.dy - a.dy * b.y) * (a.log_scale + b.log_scale).exp()
}

/// Wronskian at every point of a shared grid.
pub fn wronskian_profile(t1: &SolutionTrace, t2: &SolutionTrace) -> Result<Vec<Complex64>> {
    check_compatible(t1, t2)?;
    if t1.grid != t2.grid {
        return Err(Error::GridMismatch("traces do not share a grid".into()));
    }
    Ok(t1
        .states
        .iter()
        .zip(&t2.states)
        .map(|(a, b)| wronskian_of(a, b))
        .collect())
}

/// `max |W(x) − W(x₀)| / |W(x₀)|` over a shared grid, `x₀` being the first point.
pub fn wronskian_drift(t1: &SolutionTrace, t2: &SolutionTrace) -> Result<f64> {
    let w = wronskian_profile(t1, t2)?;
    let w0 = w[0];
    Ok(w.iter().map(|wk| (wk - w0).norm()).fold(0.0, f64::max) / w0.norm())
}

fn bracket(grid: &[f64], c: f64, d: f64) -> Result<(usize, usize)> {
    let find = |x: f64| {
        let tol = 1e-12 * x.abs().max(1e-300);
        grid.iter().position(|&g| (g - x).abs() <= tol)
    };
    match (find(c), find(d)) {
        (Some(i), Some(j)) => Ok((i, j)),
        _ => Err(Error::GridMismatch(format!(
            "[{c}, {d}] endpoints must be grid points"
        ))),
    }
}

fn shared_grid(phi: &C2Samples, psi: &C2Samples) -> Result<()> {
    if phi.grid != psi.grid {
        return Err(Error::GridMismatch("samples do not share a grid".into()));
    }
    Ok(())
}

fn green_terms(phi: &C2Samples, psi: &C2Samples, k: usize) -> (Complex64, Complex64) {
    let (p, dp, d2p) = (phi.values[k].conj(), phi.first[k].conj(), phi.second[k].conj());
    let w = p * psi.first[k] - dp * psi.values[k];
    let g = p * psi.second[k] - d2p * psi.values[k];
    (w, g)
}

/// Residual of `W(d; φ̄, ψ) − W(c; φ̄, ψ) = ∫_c^d (φ̄ψ″ − φ̄″ψ)`, the integral by
/// trapezoid on the shared grid.
pub fn green_identity_residual(phi: &C2Samples, psi: &C2Samples, c: f64, d: f64) -> Result<f64> {
    shared_grid(phi, psi)?;
    let (ic, id) = bracket(&phi.grid, c, d)?;
    let (lo, hi) = (ic.min(id), ic.max(id));
    let mut integral = Complex64::default();
    let (mut w_prev, mut g_prev) = green_terms(phi, psi, lo);
    let w_lo = w_prev;
    for k in lo + 1..=hi {
        let (w, g) = green_terms(phi, psi, k);
        integral += (g + g_prev) * (0.5 * (phi.grid[k] - phi.grid[k - 1]));
        w_prev = w;
        g_prev = g;
    }
    // integral runs from grid[lo] to grid[hi]
    let residual = (w_prev - w_lo) - integral;
    Ok(residual.norm())
}

/// Error budget for [`green_identity_residual`]: `10·h²·|d − c|·max|g″|` with
/// `g″` estimated by second divided differences, plus a rounding floor.
pub fn green_quadrature_bound(phi: &C2Samples, psi: &C2Samples, c: f64, d: f64) -> Result<f64> {
    shared_grid(phi, psi)?;
    let (ic, id) = bracket(&phi.grid, c, d)?;
    let (lo, hi) = (ic.min(id), ic.max(id));
    let x = &phi.grid;
    let mut h_max: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    let mut magnitude: f64 = 0.0;
    let g: Vec<(Complex64, Complex64)> = (lo..=hi).map(|k| green_terms(phi, psi, k)).collect();
    for k in 0..g.len() {
        magnitude = magnitude.max(g[k].0.norm()).max(g[k].1.norm());
        if k > 0 {
            h_max = h_max.max((x[lo + k] - x[lo + k - 1]).abs());
        }
        if k > 0 && k + 1 < g.len() {
            let h0 = x[lo + k] - x[lo + k - 1];
            let h1 = x[lo + k + 1] - x[lo + k];
            let dd = ((g[k + 1].1 - g[k].1) / h1 - (g[k].1 - g[k - 1].1) / h0) * (2.0 / (h0 + h1));
            curvature = curvature.max(dd.norm());
        }
    }
    let span = (x[hi] - x[lo]).abs();
    let rounding = 1e3 * f64::EPSILON * magnitude * (g.len() as f64).max(1.0) * span.max(1.0);
    Ok(10.0 * h_max * h_max * span * curvature + rounding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn linear_solution_of_free_equation() {
        let cfg = IntegratorConfig::default();
        let t = integrate(
            &Potential::Zero,
            c(0.0, 0.0),
            0.0,
            Target::Point(1.0),
            ComplexState::real(0.0, 1.0),
            &cfg,
        )
        .unwrap();
        let (x, s) = t.last();
        assert_eq!(x, 1.0);
        assert!(rel(s.value(), c(1.0, 0.0)) < cfg.rel_tol);
        assert!(rel(s.derivative(), c(1.0, 0.0)) < cfg.rel_tol);
    }

    #[test]
    fn decaying_deficiency_solution() {
        let cfg = IntegratorConfig::default();
        let mu = c(-1.0, 1.0) / SQRT_2;
        let t = integrate(
            &Potential::Zero,
            c(0.0, 1.0),
            0.0,
            Target::Point(5.0),
            ComplexState::new(c(1.0, 0.0), mu),
            &cfg,
        )
        .unwrap();
        let exact = (mu * 5.0).exp();
        assert!(rel(t.last().1.value(), exact) < 10.0 * cfg.rel_tol);
    }

    #[test]
    fn inverse_square_power_solution() {
        let cfg = IntegratorConfig::default();
        let t = integrate(
            &Potential::InverseSquare { c: 2.0 },
            c(0.0, 0.0),
            1.0,
            Target::Point(2.0),
            ComplexState::real(1.0, 2.0),
            &cfg,
        )
        .unwrap();
        assert!(rel(t.last().1.value(), c(4.0, 0.0)) < 10.0 * cfg.rel_tol);
    }

    #[test]
    fn fundamental_pair_free_toward_origin() {
        let cfg = IntegratorConfig::default();
        let (a, b) =
            fundamental_pair(&Potential::Zero, c(0.0, 0.0), 1.0, Target::Endpoint(0.0), &cfg)
                .unwrap();
        let (x_last, sa) = a.last();
        let sb = b.last().1;
        assert!((x_last - cfg.x_min).abs() < 1e-20);
        assert!((sa.value() - c(1.0, 0.0)).norm() < 1e-9);
        // y = x − 1 for data (0, 1) at x = 1
        assert!((sb.value() - c(x_last - 1.0, 0.0)).norm() < 1e-9);
        assert_eq!(wronskian(&a, &b, 1.0).unwrap(), c(1.0, 0.0));
        // geometric refinement toward the endpoint
        let g = a.grid();
        for w in g.windows(2) {
            assert!((w[0] - w[1]) <= (1.0 - cfg.geometric_ratio) * w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fundamental_pair_spans_decaying_and_growing_modes() {
        let cfg = IntegratorConfig::default();
        let l = c(0.0, 1.0);
        let (a, b) = fundamental_pair(&Potential::Zero, l, 0.0, Target::Point(4.0), &cfg).unwrap();
        let mu = c(1.0, -1.0) / SQRT_2;
        // analytic pair e^{±μx}; both satisfy −y″ = i·y since μ² = −i
        assert!((mu * mu - c(0.0, -1.0)).norm() < 1e-15);
        for sign in [1.0, -1.0] {
            let m = mu * sign;
            for (&x, (sa, sb)) in a.grid().iter().zip(a.states().iter().zip(b.states())) {
                let e = (m * x).exp();
                let analytic = ComplexState::new(e, m * e);
                // the analytic mode must be a combination of the pair:
                // W(a, e) and W(b, e) reproduce it as e = W(e,b)·a − W(e,a)·b
                let wa = wronskian_of(&analytic, sa);
                let wb = wronskian_of(&analytic, sb);
                let rebuilt = sa.value() * wb - sb.value() * wa;
                assert!(rel(rebuilt, e) < 1e-6, "x={x} sign={sign}");
            }
        }
        assert!(wronskian_drift(&a, &b).unwrap() < 1e3 * cfg.rel_tol);
    }

    #[test]
    fn wronskian_examples() {
        let cfg = IntegratorConfig::default();
        let (one, x_minus) =
            fundamental_pair(&Potential::Zero, c(0.0, 0.0), 0.0, Target::Point(1.0), &cfg)
                .unwrap();
        // x_minus is y = x here (anchor at 0)
        for &x in one.grid() {
            assert!((wronskian(&x_minus, &one, x).unwrap() - c(-1.0, 0.0)).norm() < 1e-12);
            assert_eq!(wronskian(&one, &one, x).unwrap(), c(0.0, 0.0));
        }
        assert!(matches!(wronskian(&one, &x_minus, 0.123456), Err(Error::GridMismatch(_))));
        let other = integrate(
            &Potential::Harmonic { k: 1.0 },
            c(0.0, 0.0),
            0.0,
            Target::Point(1.0),
            ComplexState::real(1.0, 0.0),
            &cfg,
        )
        .unwrap();
        assert!(matches!(wronskian(&one, &other, 0.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn rescaling_keeps_band_and_is_transparent() {
        let q = Potential::Zero;
        let l = c(0.0, 1.0);
        let base = IntegratorConfig::default();
        let wide = IntegratorConfig {
            rescale_band: 1e200,
            ..base
        };
        let t1 = integrate(&q, l, 0.0, Target::Point(40.0), ComplexState::real(1.0, 0.0), &base)
            .unwrap();
        let t2 = integrate(&q, l, 0.0, Target::Point(40.0), ComplexState::real(1.0, 0.0), &wide)
            .unwrap();
        for s in t1.states() {
            let n = s.mantissa_norm();
            assert!((1.0 / base.rescale_band..=base.rescale_band).contains(&n));
            assert!(s.log_scale.is_finite());
        }
        assert!(t1.states().last().unwrap().log_scale > 20.0);
        assert_eq!(t1.grid(), t2.grid());
        for (a, b) in t1.states().iter().zip(t2.states()) {
            assert!(rel(a.value(), b.value()) < 10.0 * base.rel_tol);
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let cfg = IntegratorConfig::default();
        let q = Potential::Coulomb { z: -1.0 };
        let l = c(0.3, 1.7);
        let init = ComplexState::new(c(0.4, -0.2), c(1.1, 0.5));
        let conj_init = ComplexState::new(init.y.conj(), init.dy.conj());
        let t = integrate(&q, l, 1.0, Target::Point(4.0), init, &cfg).unwrap();
        let tc = integrate(&q, l.conj(), 1.0, Target::Point(4.0), conj_init, &cfg).unwrap();
        assert_eq!(t.grid(), tc.grid());
        for (a, b) in t.states().iter().zip(tc.states()) {
            assert!(rel(a.value().conj(), b.value()) < 1e-12);
        }
    }

    #[test]
    fn green_identity_trivial_cases() {
        let cfg = IntegratorConfig::default();
        let (one, x) =
            fundamental_pair(&Potential::Zero, c(0.0, 0.0), 0.0, Target::Point(1.0), &cfg)
                .unwrap();
        let phi = x.c2_samples().unwrap();
        let psi = one.c2_samples().unwrap();
        assert!(green_identity_residual(&phi, &psi, 0.0, 1.0).unwrap() < 1e-10);
        assert_eq!(green_identity_residual(&phi, &phi, 0.0, 1.0).unwrap(), 0.0);
        let shifted = C2Samples::from_fn(vec![0.0, 0.5, 1.5], |x| x, |_| 1.0, |_| 0.0);
        assert!(matches!(
            green_identity_residual(&phi, &shifted, 0.0, 1.0),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            green_identity_residual(&phi, &psi, 0.0, 0.777),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn csv_export() {
        let cfg = IntegratorConfig::default();
        let t = integrate(
            &Potential::Zero,
            c(0.0, 0.0),
            0.0,
            Target::Point(1.0),
            ComplexState::real(0.0, 1.0),
            &cfg,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,re_y,im_y,re_dy,im_dy,log_scale"));
        assert_eq!(lines.count(), t.len());
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,1,0,"));
    }

    #[test]
    fn step_failures() {
        let cfg = IntegratorConfig {
            max_steps: 1000,
            ..IntegratorConfig::default()
        };
        let r = integrate(
            &Potential::Harmonic { k: 1e4 },
            c(0.0, 1.0),
            0.0,
            Target::Point(100.0),
            ComplexState::real(1.0, 0.0),
            &cfg,
        );
        assert!(matches!(r, Err(Error::MaxStepsExceeded { .. })));
        let tab = Potential::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).unwrap();
        let r = integrate(
            &tab,
            c(0.0, 1.0),
            1.0,
            Target::Point(5.0),
            ComplexState::real(1.0, 0.0),
            &cfg,
        );
        assert!(matches!(r, Err(Error::OutOfRange { .. })));
        let r = integrate(
            &Potential::Zero,
            c(0.0, 1.0),
            1.0,
            Target::Point(1.0),
            ComplexState::real(1.0, 0.0),
            &cfg,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}

//! Limit-point / limit-circle classification of endpoints, deficiency indices
//! and the essential self-adjointness verdict.
//!
//! Two engines are available. The asymptotic engine applies the exact rule at
//! the origin: the endpoint is limit point iff `lim x²·q(x) ≥ 3/4`. The
//! numeric engine integrates a fundamental pair at a non-real probe eigenvalue
//! toward the endpoint and tests `∫|y|²` of each member over dyadic shells;
//! the endpoint is limit circle iff both tails converge.

mod problem;
pub(crate) mod tail;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odeint::{
    fundamental_pair, integrate, ComplexState, IntegratorConfig, Stepper, StepCap, Target,
};
use crate::potential::{EffectiveProblem, Potential};

pub use problem::{analyze, Analysis, Bound, EndpointAnalysis, EngineChoice, Interval};
pub use tail::{fit_shells, square_integrable_tail, Convergence, ShellFit, TailReport};

/// Origin coefficient at and above which the origin is limit point.
pub const LP_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointPosition {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub position: EndpointPosition,
    pub side: Side,
}

impl Endpoint {
    pub fn left(a: f64) -> Self {
        Self {
            position: EndpointPosition::Finite(a),
            side: Side::Left,
        }
    }

    pub fn right(b: f64) -> Self {
        Self {
            position: EndpointPosition::Finite(b),
            side: Side::Right,
        }
    }

    pub fn plus_infinity() -> Self {
        Self {
            position: EndpointPosition::PlusInfinity,
            side: Side::Right,
        }
    }

    pub fn minus_infinity() -> Self {
        Self {
            position: EndpointPosition::MinusInfinity,
            side: Side::Left,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.position, EndpointPosition::Finite(_))
    }

    pub fn target(&self) -> Target {
        match self.position {
            EndpointPosition::Finite(e) => Target::Endpoint(e),
            EndpointPosition::PlusInfinity => Target::PlusInfinity,
            EndpointPosition::MinusInfinity => Target::MinusInfinity,
        }
    }

    pub fn label(&self) -> String {
        match self.position {
            EndpointPosition::Finite(e) => format!("{e}"),
            EndpointPosition::PlusInfinity => "inf".into(),
            EndpointPosition::MinusInfinity => "-inf".into(),
        }
    }

    fn check_anchor(&self, anchor: f64) -> Result<()> {
        let ok = anchor.is_finite()
            && match (self.position, self.side) {
                (EndpointPosition::Finite(e), Side::Left) => anchor > e,
                (EndpointPosition::Finite(e), Side::Right) => anchor < e,
                (EndpointPosition::PlusInfinity, Side::Right) => true,
                (EndpointPosition::MinusInfinity, Side::Left) => true,
                _ => false,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "anchor {anchor} is not interior relative to endpoint {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "LP")]
    LimitPoint,
    #[serde(rename = "LC")]
    LimitCircle,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Asymptotic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointClass {
    pub verdict: Verdict,
    pub engine: Engine,
    /// The report that decided a numeric verdict.
    pub tail: Option<TailReport>,
    /// Reports for both members of the fundamental pair (numeric engine).
    pub basis: Vec<TailReport>,
    /// Reverse-integrated subdominant solution, only toward infinity.
    pub subdominant: Option<TailReport>,
    /// `lim x²·q(x)` used by the asymptotic engine.
    pub coefficient: Option<f64>,
}

impl EndpointClass {
    fn asymptotic(verdict: Verdict, coefficient: f64) -> Self {
        Self {
            verdict,
            engine: Engine::Asymptotic,
            tail: None,
            basis: Vec::new(),
            subdominant: None,
            coefficient: Some(coefficient),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    pub integrator: IntegratorConfig,
    /// Half-width δ of the undecidable band around shell ratio 1.
    pub margin: f64,
    pub min_shells: usize,
    pub max_shells: usize,
    pub probe: Complex64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            margin: 0.15,
            min_shells: 4,
            max_shells: 12,
            probe: Complex64::new(0.0, 1.0),
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(Error::InvalidArgument("margin must lie in (0, 1)".into()));
        }
        if self.min_shells < 4 || self.max_shells < self.min_shells {
            return Err(Error::InvalidArgument(
                "need 4 <= min_shells <= max_shells".into(),
            ));
        }
        if self.probe.im == 0.0 || !self.probe.is_finite() {
            return Err(Error::InvalidArgument("probe eigenvalue must be non-real".into()));
        }
        Ok(())
    }
}

/// Shell-integral test of `∫|q|²` toward a finite endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub finite: bool,
    pub shell_integrals: Vec<f64>,
    pub fit: Option<ShellFit>,
}

/// Whether `e` is a regular endpoint: finite, with `∫|q|²` convergent on the
/// interval between `e` and `probe`.
pub fn is_regular_endpoint(
    q: &Potential,
    e: &Endpoint,
    probe: f64,
    cfg: &ClassifyConfig,
) -> Result<RegularityReport> {
    let EndpointPosition::Finite(pos) = e.position else {
        return Ok(RegularityReport {
            regular: false,
            finite: false,
            shell_integrals: Vec::new(),
            fit: None,
        });
    };
    e.check_anchor(probe)?;
    let mut shells = tail::shell_bounds(e.position, probe, pos + (probe - pos).signum() * cfg.integrator.x_min);
    if shells.len() > cfg.max_shells {
        shells.drain(..shells.len() - cfg.max_shells);
    }
    if shells.len() < cfg.min_shells {
        return Err(Error::InsufficientTail {
            shells: shells.len(),
            required: cfg.min_shells,
        });
    }
    let mut integrals = Vec::with_capacity(shells.len());
    for &(lo, hi) in &shells {
        integrals.push(shell_integral_of_square(q, lo, hi)?);
    }
    let logs: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let fit = fit_shells(&logs, cfg.margin);
    Ok(RegularityReport {
        regular: fit.convergence == Convergence::Convergent,
        finite: true,
        shell_integrals: integrals,
        fit: Some(fit),
    })
}

/// `∫_lo^hi q²` by tanh–sinh quadrature.
fn shell_integral_of_square(q: &Potential, lo: f64, hi: f64) -> Result<f64> {
    let mut scale: f64 = 0.0;
    for k in 0..=8 {
        let v = q.evaluate(lo + (hi - lo) * k as f64 / 8.0)?;
        scale = scale.max(v * v * (hi - lo));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let failure = std::cell::RefCell::new(None);
    let out = quadrature::double_exponential::integrate(
        |x| match q.evaluate(x) {
            Ok(v) => v * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-12 * scale,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out.integral),
    }
}

/// The exact rule at the origin for a potential with known `lim x²·q(x)`.
pub fn classify_asymptotic_origin(q: &Potential) -> Result<EndpointClass> {
    let coefficient = q.origin_coefficient().ok_or(Error::AsymptoticsUnavailable)?;
    let verdict = if coefficient >= LP_THRESHOLD {
        Verdict::LimitPoint
    } else {
        Verdict::LimitCircle
    };
    Ok(EndpointClass::asymptotic(verdict, coefficient))
}

/// Origin classification of an effective radial problem.
pub fn classify_asymptotic(ep: &EffectiveProblem) -> Result<EndpointClass> {
    classify_asymptotic_origin(&ep.q_eff)
}

fn combine(reports: &[TailReport]) -> (Verdict, Option<TailReport>) {
    if let Some(r) = reports.iter().find(|r| r.convergence == Convergence::Divergent) {
        return (Verdict::LimitPoint, Some(r.clone()));
    }
    if let Some(r) = reports.iter().find(|r| r.convergence == Convergence::Borderline) {
        return (Verdict::Inconclusive, Some(r.clone()));
    }
    let worst = reports
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .cloned();
    (Verdict::LimitCircle, worst)
}

/// Numeric limit-point / limit-circle test at `e`, from a fundamental pair
/// anchored at `anchor` and evaluated at `cfg.probe`.
pub fn classify_numeric(
    q: &Potential,
    e: &Endpoint,
    anchor: f64,
    cfg: &ClassifyConfig,
) -> Result<EndpointClass> {
    cfg.validate()?;
    e.check_anchor(anchor)?;
    let icfg = &cfg.integrator;
    let (basis, subdominant) = match e.position {
        EndpointPosition::Finite(_) => {
            let (t1, t2) = fundamental_pair(q, cfg.probe, anchor, e.target(), icfg)?;
            let basis = [(&t1, 1u8), (&t2, 2u8)]
                .into_iter()
                .map(|(t, i)| {
                    tail::tail_from_samples(
                        t.grid(),
                        t.states(),
                        e.position,
                        cfg.margin,
                        cfg.min_shells,
                        cfg.max_shells,
                        i,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            (basis, None)
        }
        EndpointPosition::PlusInfinity | EndpointPosition::MinusInfinity => {
            classify_toward_infinity(q, e, anchor, cfg)?
        }
    };
    let (verdict, tail) = combine(&basis);
    Ok(EndpointClass {
        verdict,
        engine: Engine::Numeric,
        tail,
        basis,
        subdominant,
        coefficient: None,
    })
}

fn classify_toward_infinity(
    q: &Potential,
    e: &Endpoint,
    anchor: f64,
    cfg: &ClassifyConfig,
) -> Result<(Vec<TailReport>, Option<TailReport>)> {
    let icfg = &cfg.integrator;
    let sign = if e.position == EndpointPosition::PlusInfinity { 1.0 } else { -1.0 };
    let inits = [ComplexState::real(1.0, 0.0), ComplexState::real(0.0, 1.0)];
    let mut stepper = Stepper::new(q, cfg.probe, anchor, &inits, StepCap::Outward, icfg)?;
    let start = (sign * anchor).max(1.0);
    let tails = |stepper: &Stepper| -> Result<Vec<TailReport>> {
        (0..2)
            .map(|j| {
                tail::tail_from_samples(
                    stepper.grid(),
                    stepper.states(j),
                    e.position,
                    cfg.margin,
                    cfg.min_shells,
                    cfg.max_shells,
                    j as u8 + 1,
                )
            })
            .collect()
    };
    let mut reports = None;
    for k in 0..cfg.max_shells {
        let bound = start * 2f64.powi(k as i32 + 1);
        if bound > icfg.x_max {
            break;
        }
        stepper.advance_to(sign * bound)?;
        if k + 1 >= cfg.min_shells {
            let r = tails(&stepper)?;
            let decided = r.iter().any(|t| t.convergence == Convergence::Divergent)
                || r.iter().all(|t| t.convergence == Convergence::Convergent);
            reports = Some(r);
            if decided {
                break;
            }
        }
    }
    let reports = match reports {
        Some(r) => r,
        None => tails(&stepper)?,
    };
    // Integrating back from the far end lets the mode that decays outward
    // dominate, which recovers the subdominant solution cleanly.
    let x_far = stepper.x();
    let back = integrate(
        q,
        cfg.probe,
        x_far,
        Target::Point(anchor),
        ComplexState::real(1.0, 0.0),
        icfg,
    )?;
    let subdominant = tail::tail_from_samples(
        back.grid(),
        back.states(),
        e.position,
        cfg.margin,
        cfg.min_shells,
        cfg.max_shells,
        0,
    )
    .ok();
    Ok((reports, subdominant))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyIndices {
    pub n_plus: u8,
    pub n_minus: u8,
}

/// Deficiency indices from the endpoint classes: one per limit-circle end.
pub fn deficiency_indices(left: &EndpointClass, right: &EndpointClass) -> Result<DeficiencyIndices> {
    let count = |c: &EndpointClass| match c.verdict {
        Verdict::LimitCircle => Ok(1u8),
        Verdict::LimitPoint => Ok(0u8),
        Verdict::Inconclusive => Err(Error::InconclusiveInput),
    };
    let n = count(left)? + count(right)?;
    Ok(DeficiencyIndices {
        n_plus: n,
        n_minus: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GlobalVerdict {
    EssentiallySelfAdjoint,
    /// Self-adjoint realizations form a family of real dimension `n₊²`.
    NeedsBoundaryConditions { extension_dim: u32 },
}

impl GlobalVerdict {
    pub fn extension_dim(&self) -> u32 {
        match self {
            GlobalVerdict::EssentiallySelfAdjoint => 0,
            GlobalVerdict::NeedsBoundaryConditions { extension_dim } => *extension_dim,
        }
    }
}

pub fn verdict(d: DeficiencyIndices) -> GlobalVerdict {
    if d.n_plus == 0 {
        GlobalVerdict::EssentiallySelfAdjoint
    } else {
        GlobalVerdict::NeedsBoundaryConditions {
            extension_dim: u32::from(d.n_plus).pow(2),
        }
    }
}

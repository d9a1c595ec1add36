//! Whole-interval analysis: classify both endpoints and compose the verdict.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use super::{
    classify_asymptotic_origin, classify_numeric, deficiency_indices, verdict, ClassifyConfig,
    DeficiencyIndices, Endpoint, EndpointClass, EndpointPosition, Engine, GlobalVerdict, Verdict,
};
use crate::error::{Error, Result};
use crate::potential::Potential;

/// An interval bound; encoded in JSON as a number, `"inf"` or `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    MinusInfinity,
    PlusInfinity,
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(x) => s.serialize_f64(*x),
            Bound::MinusInfinity => s.serialize_str("-inf"),
            Bound::PlusInfinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) if x.is_finite() => Ok(Bound::Finite(x)),
            Raw::Number(x) => Err(de::Error::custom(format!("bound {x} is not finite"))),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Bound::PlusInfinity),
                "-inf" => Ok(Bound::MinusInfinity),
                other => Err(de::Error::custom(format!(
                    "bound must be a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(x) => write!(f, "{x}"),
            Bound::MinusInfinity => f.write_str("-inf"),
            Bound::PlusInfinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: Bound,
    pub b: Bound,
}

impl Interval {
    pub fn new(a: Bound, b: Bound) -> Result<Self> {
        let interval = Self { a, b };
        interval.validate()?;
        Ok(interval)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match (self.a, self.b) {
            (Bound::Finite(a), Bound::Finite(b)) => a < b,
            (Bound::PlusInfinity, _) | (_, Bound::MinusInfinity) => false,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("({}, {}) is not an interval", self.a, self.b)))
        }
    }

    pub fn endpoints(&self) -> (Endpoint, Endpoint) {
        let left = match self.a {
            Bound::Finite(a) => Endpoint::left(a),
            _ => Endpoint::minus_infinity(),
        };
        let right = match self.b {
            Bound::Finite(b) => Endpoint::right(b),
            _ => Endpoint::plus_infinity(),
        };
        (left, right)
    }

    /// Midpoint of a finite interval, one unit inside a single finite end,
    /// and 0 for the whole line.
    pub fn default_anchor(&self) -> f64 {
        match (self.a, self.b) {
            (Bound::Finite(a), Bound::Finite(b)) => 0.5 * (a + b),
            (Bound::Finite(a), _) => a + 1.0,
            (_, Bound::Finite(b)) => b - 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Asymptotic,
    Numeric,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointAnalysis {
    pub endpoint: Endpoint,
    pub asymptotic: Option<EndpointClass>,
    pub numeric: Option<EndpointClass>,
    /// Final verdict: the asymptotic rule when it applies, otherwise numeric.
    pub verdict: Verdict,
    pub engine: Engine,
    /// Whether the two engines agree, when both ran.
    pub engines_agree: Option<bool>,
}

impl EndpointAnalysis {
    pub fn decided(&self) -> &EndpointClass {
        match self.engine {
            Engine::Asymptotic => self.asymptotic.as_ref(),
            Engine::Numeric => self.numeric.as_ref(),
        }
        .expect("deciding engine result is present")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub interval: Interval,
    pub anchor: f64,
    pub left: EndpointAnalysis,
    pub right: EndpointAnalysis,
    pub indices: Option<DeficiencyIndices>,
    pub global: Option<GlobalVerdict>,
}

impl Analysis {
    pub fn is_conclusive(&self) -> bool {
        self.global.is_some()
    }
}

fn analyze_endpoint(
    q: &Potential,
    endpoint: Endpoint,
    anchor: f64,
    engine: EngineChoice,
    cfg: &ClassifyConfig,
) -> Result<EndpointAnalysis> {
    let at_origin =
        endpoint.position == EndpointPosition::Finite(0.0) && endpoint.side == super::Side::Left;
    let asymptotic = if engine != EngineChoice::Numeric && at_origin {
        match classify_asymptotic_origin(q) {
            Ok(class) => Some(class),
            Err(Error::AsymptoticsUnavailable) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let numeric = if engine != EngineChoice::Asymptotic || asymptotic.is_none() {
        Some(classify_numeric(q, &endpoint, anchor, cfg)?)
    } else {
        None
    };
    let (verdict, deciding) = match (&asymptotic, &numeric) {
        (Some(a), _) => (a.verdict, Engine::Asymptotic),
        (None, Some(n)) => (n.verdict, Engine::Numeric),
        (None, None) => unreachable!("numeric engine runs whenever asymptotics are absent"),
    };
    let engines_agree = match (&asymptotic, &numeric) {
        (Some(a), Some(n)) => Some(a.verdict == n.verdict),
        _ => None,
    };
    Ok(EndpointAnalysis {
        endpoint,
        asymptotic,
        numeric,
        verdict,
        engine: deciding,
        engines_agree,
    })
}

/// Classifies both ends of `interval` and composes deficiency indices.
///
/// The asymptotic engine only applies at a left endpoint at the origin and
/// only for potentials with an exact origin coefficient; elsewhere the numeric
/// engine is used regardless of `engine`.
pub fn analyze(
    q: &Potential,
    interval: Interval,
    engine: EngineChoice,
    anchor: Option<f64>,
    cfg: &ClassifyConfig,
) -> Result<Analysis> {
    interval.validate()?;
    cfg.validate()?;
    let anchor = anchor.unwrap_or_else(|| interval.default_anchor());
    let (left_end, right_end) = interval.endpoints();
    let (left, right) = std::thread::scope(|s| {
        let l = s.spawn(|| analyze_endpoint(q, left_end, anchor, engine, cfg));
        let r = analyze_endpoint(q, right_end, anchor, engine, cfg);
        (l.join().expect("endpoint worker panicked"), r)
    });
    let (left, right) = (left?, right?);
    let indices = deficiency_indices(left.decided(), right.decided()).ok();
    Ok(Analysis {
        interval,
        anchor,
        left,
        right,
        indices,
        global: indices.map(verdict),
    })
}

//! Problem description and the JSON report emitted by `classify`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use weylcheck::classify::{
    Analysis, ClassifyConfig, DeficiencyIndices, EndpointAnalysis, EngineChoice,
    GlobalVerdict, Interval, TailReport,
};
use weylcheck::potential::{effective_potential, lambda_nl, Potential};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub interval: Interval,
    pub potential: Potential,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub l: Option<u32>,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default)]
    pub anchor: Option<f64>,
    #[serde(default)]
    pub config: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effective {
    pub n: u32,
    pub l: u32,
    pub rho: f64,
    pub lambda: f64,
    pub big_l: f64,
}

impl ProblemSpec {
    /// The potential actually analysed, wrapped with `ρ/x²` when `n` and `l` are given.
    pub fn resolve(&self) -> Result<(Potential, Option<Effective>), CliError> {
        self.interval.validate()?;
        match (self.n, self.l) {
            (None, None) => Ok((self.potential.clone(), None)),
            (Some(n), Some(l)) => {
                let ep = effective_potential(self.potential.clone(), n, l)?;
                let idx = lambda_nl(n, l);
                let eff = Effective {
                    n,
                    l,
                    rho: ep.rho,
                    lambda: idx.lambda,
                    big_l: idx.big_l,
                };
                Ok((ep.q_eff, Some(eff)))
            }
            _ => Err(CliError::Usage("n and l must be given together".into())),
        }
    }
}

/// Merges an override object onto the default configuration. A config file
/// may hold either a bare config object or a problem document with a
/// `config` member.
pub fn merge_config(base: ClassifyConfig, overrides: Option<&Value>) -> Result<ClassifyConfig, CliError> {
    let Some(overrides) = overrides else {
        return Ok(base);
    };
    let overrides = overrides.get("config").unwrap_or(overrides);
    let mut merged = serde_json::to_value(base)?;
    merge_json(&mut merged, overrides);
    let cfg: ClassifyConfig = serde_json::from_value(merged)?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge_json(into: &mut Value, from: &Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                merge_json(a.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSummary {
    pub solution_index: u8,
    pub convergence: String,
    /// `ln` of each shell integral; `null` for an identically vanishing shell.
    pub log_shells: Vec<Option<f64>>,
    pub fitted_exponent: Option<f64>,
    pub ratio: f64,
}

impl From<&TailReport> for ShellSummary {
    fn from(t: &TailReport) -> Self {
        Self {
            solution_index: t.solution_index,
            convergence: serde_json::to_value(t.convergence)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            log_shells: t.log_shell_integrals.iter().map(|&v| finite(v)).collect(),
            fitted_exponent: finite(t.fitted_exponent),
            ratio: t.ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointReport {
    pub endpoint: String,
    pub engine: String,
    pub verdict: String,
    pub engines_agree: Option<bool>,
    pub asymptotic_verdict: Option<String>,
    pub origin_coefficient: Option<f64>,
    pub numeric_verdict: Option<String>,
    /// Shell data of the report that decided the numeric verdict.
    pub shells: Vec<Option<f64>>,
    pub fitted_exponent: Option<f64>,
    pub basis: Vec<ShellSummary>,
    pub subdominant: Option<ShellSummary>,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

impl From<&EndpointAnalysis> for EndpointReport {
    fn from(e: &EndpointAnalysis) -> Self {
        let tail = e.numeric.as_ref().and_then(|n| n.tail.as_ref());
        Self {
            endpoint: e.endpoint.label(),
            engine: label(&e.engine),
            verdict: label(&e.verdict),
            engines_agree: e.engines_agree,
            asymptotic_verdict: e.asymptotic.as_ref().map(|a| label(&a.verdict)),
            origin_coefficient: e.asymptotic.as_ref().and_then(|a| a.coefficient),
            numeric_verdict: e.numeric.as_ref().map(|n| label(&n.verdict)),
            shells: tail
                .map(|t| t.log_shell_integrals.iter().map(|&v| finite(v)).collect())
                .unwrap_or_default(),
            fitted_exponent: tail.and_then(|t| finite(t.fitted_exponent)),
            basis: e
                .numeric
                .as_ref()
                .map(|n| n.basis.iter().map(ShellSummary::from).collect())
                .unwrap_or_default(),
            subdominant: e
                .numeric
                .as_ref()
                .and_then(|n| n.subdominant.as_ref())
                .map(ShellSummary::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub interval: Interval,
    pub potential: Potential,
    pub effective: Option<Effective>,
    pub anchor: f64,
    pub endpoints: Vec<EndpointReport>,
    pub indices: Option<DeficiencyIndices>,
    /// `essentially_self_adjoint`, `needs_boundary_conditions` or `inconclusive`.
    pub verdict_global: String,
    pub extension_dim: Option<u32>,
    pub config: ClassifyConfig,
}

impl ClassifyReport {
    pub fn new(
        analysis: &Analysis,
        potential: Potential,
        effective: Option<Effective>,
        config: ClassifyConfig,
    ) -> Self {
        let verdict_global = match analysis.global {
            Some(GlobalVerdict::EssentiallySelfAdjoint) => "essentially_self_adjoint",
            Some(GlobalVerdict::NeedsBoundaryConditions { .. }) => "needs_boundary_conditions",
            None => "inconclusive",
        };
        Self {
            interval: analysis.interval,
            potential,
            effective,
            anchor: analysis.anchor,
            endpoints: vec![(&analysis.left).into(), (&analysis.right).into()],
            indices: analysis.indices,
            verdict_global: verdict_global.into(),
            extension_dim: analysis.global.map(|g| g.extension_dim()),
            config,
        }
    }

    pub fn is_conclusive(&self) -> bool {
        self.indices.is_some()
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "endpoint,engine,verdict,fitted_exponent,shells")?;
        for e in &self.endpoints {
            let exponent = e.fitted_exponent.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", e.endpoint, e.engine, e.verdict, exponent, e.shells.len())?;
        }
        Ok(())
    }
}

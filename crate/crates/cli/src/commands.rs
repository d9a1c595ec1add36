use std::f64::consts::TAU;
use std::io::Write;
use std::process::ExitCode;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use weylcheck::classify::{analyze, ClassifyConfig, LP_THRESHOLD};
use weylcheck::extensions::{
    adjoint_ratio, boundary_condition, sequence_f, sequence_f_derivative, sequence_f_l2_distance,
    sequence_g, sequence_g_derivative, sequence_g_l2_distance, RatioKind,
};
use weylcheck::potential::{effective_potential as effective_problem, lambda_nl, Potential};

use crate::report::{merge_config, ClassifyReport, ProblemSpec};
use crate::{CliError, OutputFormat};

/// Exit status for a run that finished but could not decide an endpoint.
const INCONCLUSIVE: u8 = 2;

pub fn classify(
    spec: &str,
    config_file: Option<&str>,
    output: OutputFormat,
    out: &mut Vec<u8>,
) -> Result<ExitCode, CliError> {
    let spec: ProblemSpec = serde_json::from_str(spec)?;
    let (potential, effective) = spec.resolve()?;
    let mut cfg = merge_config(ClassifyConfig::default(), spec.config.as_ref())?;
    if let Some(text) = config_file {
        let file: Value = serde_json::from_str(text)?;
        cfg = merge_config(cfg, Some(&file))?;
    }
    let analysis = analyze(&potential, spec.interval, spec.engine, spec.anchor, &cfg)?;
    let report = ClassifyReport::new(&analysis, potential, effective, cfg);
    match output {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            out.push(b'\n');
        }
        OutputFormat::Csv => report.write_csv(out)?,
    }
    Ok(if report.is_conclusive() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INCONCLUSIVE)
    })
}

/// Parses `start:end:count` into `count` evenly spaced points, endpoints included.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("expected start:end:count, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() || (n > 1 && b <= a) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let h = (b - a) / (n - 1) as f64;
    let mut points: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
    points[n - 1] = b;
    Ok(points)
}

#[derive(Debug, Serialize)]
struct ExtensionRow {
    c: f64,
    alpha: Complex64,
    beta: Complex64,
    /// `ξ(0)/ξ′(0)`, null where excluded.
    ratio_value_over_slope: Option<Complex64>,
    ratio_value_over_slope_singular: bool,
    /// `ξ′(0)/ξ(0)`, null where excluded.
    ratio_slope_over_value: Option<Complex64>,
    ratio_slope_over_value_singular: bool,
    tag: &'static str,
}

fn extension_row(c: f64) -> Result<ExtensionRow, CliError> {
    if !(0.0..TAU).contains(&c) {
        return Err(CliError::Usage(format!("c = {c} lies outside [0, 2π)")));
    }
    let bc = boundary_condition(c);
    let r1 = adjoint_ratio(c, RatioKind::ValueOverSlope).ok();
    let r2 = adjoint_ratio(c, RatioKind::SlopeOverValue).ok();
    let tag = if bc.is_dirichlet() {
        "dirichlet"
    } else if bc.is_neumann() {
        "neumann"
    } else {
        "robin"
    };
    Ok(ExtensionRow {
        c,
        alpha: bc.alpha,
        beta: bc.beta,
        ratio_value_over_slope: r1,
        ratio_value_over_slope_singular: r1.is_none(),
        ratio_slope_over_value: r2,
        ratio_slope_over_value_singular: r2.is_none(),
        tag,
    })
}

const EXTENSION_HEADER: &str = "c,alpha_re,alpha_im,beta_re,beta_im,r1_re,r1_im,r1_singular,r2_re,r2_im,r2_singular,tag";

fn write_extension_csv(rows: &[ExtensionRow], out: &mut Vec<u8>) -> Result<(), CliError> {
    let opt = |z: Option<Complex64>| match z {
        Some(z) => format!("{},{}", z.re, z.im),
        None => ",".to_owned(),
    };
    writeln!(out, "{EXTENSION_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.c,
            r.alpha.re,
            r.alpha.im,
            r.beta.re,
            r.beta.im,
            opt(r.ratio_value_over_slope),
            r.ratio_value_over_slope_singular,
            opt(r.ratio_slope_over_value),
            r.ratio_slope_over_value_singular,
            r.tag
        )?;
    }
    Ok(())
}

fn emit_extensions(rows: Vec<ExtensionRow>, single: bool, output: OutputFormat, out: &mut Vec<u8>) -> Result<(), CliError> {
    match output {
        OutputFormat::Csv => write_extension_csv(&rows, out),
        OutputFormat::Json => {
            if single {
                serde_json::to_writer_pretty(&mut *out, &rows[0])?;
            } else {
                serde_json::to_writer_pretty(&mut *out, &rows)?;
            }
            out.push(b'\n');
            Ok(())
        }
    }
}

pub fn extensions_single(c: f64, output: OutputFormat, out: &mut Vec<u8>) -> Result<(), CliError> {
    emit_extensions(vec![extension_row(c)?], true, output, out)
}

pub fn extensions_sweep(spec: &str, output: OutputFormat, out: &mut Vec<u8>) -> Result<(), CliError> {
    let rows = parse_range(spec)?
        .into_iter()
        .map(extension_row)
        .collect::<Result<Vec<_>, _>>()?;
    emit_extensions(rows, false, output, out)
}

pub fn regularity_demo(which: &str, n_max: u32, a: f64, out: &mut Vec<u8>) -> Result<(), CliError> {
    if n_max < 2 {
        return Err(CliError::Usage("n-max must be at least 2".into()));
    }
    let min_a = if which == "f" { 1.0 } else { 0.0 };
    if !(a > min_a) || !a.is_finite() {
        return Err(CliError::Usage(format!("a must be finite and exceed {min_a} for sequence {which}")));
    }
    writeln!(out, "n,value_at_0,derivative_at_0,l2_distance")?;
    for n in 1..=n_max {
        let (v, d, dist) = if which == "f" {
            (sequence_f(n, a, 0.0), sequence_f_derivative(n, a, 0.0), sequence_f_l2_distance(n, a))
        } else {
            (sequence_g(n, a, 0.0), sequence_g_derivative(n, a, 0.0), sequence_g_l2_distance(n, a))
        };
        writeln!(out, "{n},{v},{d},{dist}")?;
    }
    Ok(())
}

pub fn effective_potential(
    n: u32,
    l: u32,
    potential: &str,
    grid: &str,
    out: &mut Vec<u8>,
) -> Result<(), CliError> {
    let base: Potential = serde_json::from_str(potential)?;
    let ep = effective_problem(base, n, l)?;
    let idx = lambda_nl(n, l);
    let coefficient = ep.q_eff.origin_coefficient();
    let points = parse_range(grid)?;
    writeln!(out, "# n={n} l={l}")?;
    writeln!(out, "# rho={}", ep.rho)?;
    writeln!(out, "# lambda={}", idx.lambda)?;
    writeln!(out, "# L={}", idx.big_l)?;
    match coefficient {
        Some(c) => {
            writeln!(out, "# origin_coefficient={c}")?;
            let holds = if c >= LP_THRESHOLD { "holds" } else { "fails" };
            writeln!(out, "# origin_lp_condition={holds} (coefficient {c} vs {LP_THRESHOLD})")?;
        }
        None => writeln!(out, "# origin_coefficient=unavailable")?,
    }
    writeln!(out, "x,v,v_eff")?;
    for x in points {
        writeln!(out, "{x},{},{}", ep.base.evaluate(x)?, ep.q_eff.evaluate(x)?)?;
    }
    Ok(())
}

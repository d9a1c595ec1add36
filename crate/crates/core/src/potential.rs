//! Potentials `q(x)` and the effective radial reduction `V(r) + ρ/r²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A potential drawn from a fixed set of analytic families, or tabulated data.
///
/// The JSON encoding is internally tagged by `"type"`, e.g.
/// `{"type":"inverse_square","c":0.75}` or `{"type":"sum","terms":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "RawPotential")]
pub enum Potential {
    Zero,
    /// `c / x²`
    InverseSquare { c: f64 },
    /// `z / x`
    Coulomb { z: f64 },
    /// `c · x^p`
    PowerLaw { c: f64, p: f64 },
    /// `k · x²`
    Harmonic { k: f64 },
    Sum { terms: Vec<Potential> },
    /// Piecewise-linear data; never extrapolated.
    Tabulated { x: Vec<f64>, q: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RawPotential {
    Zero,
    InverseSquare { c: f64 },
    Coulomb { z: f64 },
    PowerLaw { c: f64, p: f64 },
    Harmonic { k: f64 },
    Sum { terms: Vec<Potential> },
    Tabulated { x: Vec<f64>, q: Vec<f64> },
}

impl TryFrom<RawPotential> for Potential {
    type Error = Error;

    fn try_from(raw: RawPotential) -> Result<Self> {
        match raw {
            RawPotential::Zero => Ok(Potential::Zero),
            RawPotential::InverseSquare { c } => Ok(Potential::InverseSquare { c }),
            RawPotential::Coulomb { z } => Ok(Potential::Coulomb { z }),
            RawPotential::PowerLaw { c, p } => Ok(Potential::PowerLaw { c, p }),
            RawPotential::Harmonic { k } => Ok(Potential::Harmonic { k }),
            RawPotential::Sum { terms } => Potential::sum(terms),
            RawPotential::Tabulated { x, q } => Potential::tabulated(x, q),
        }
    }
}

impl Potential {
    /// Builds a `Sum`, rejecting an empty list.
    pub fn sum(terms: Vec<Potential>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidPotential("sum must have at least one term".into()));
        }
        Ok(Potential::Sum { terms })
    }

    /// Builds a tabulated potential. The grid must be strictly increasing with at
    /// least four finite points.
    pub fn tabulated(x: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if x.len() != q.len() {
            return Err(Error::InvalidPotential(format!(
                "tabulated grid has {} abscissas but {} values",
                x.len(),
                q.len()
            )));
        }
        if x.len() < 4 {
            return Err(Error::InvalidPotential(
                "tabulated potential needs at least 4 points".into(),
            ));
        }
        if x.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("tabulated data must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential(
                "tabulated grid must be strictly increasing".into(),
            ));
        }
        Ok(Potential::Tabulated { x, q })
    }

    /// Evaluates `q(x)`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let value = match self {
            Potential::Zero => 0.0,
            Potential::InverseSquare { c } => c / (x * x),
            Potential::Coulomb { z } => z / x,
            Potential::PowerLaw { c, p } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * x.powf(*p)
                }
            }
            Potential::Harmonic { k } => k * x * x,
            Potential::Sum { terms } => {
                let mut acc = 0.0;
                for term in terms {
                    acc += term.evaluate(x)?;
                }
                acc
            }
            Potential::Tabulated { x: grid, q } => return interpolate(grid, q, x),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite { x })
        }
    }

    /// `lim x²·q(x)` as `x → 0⁺`, when it exists for the analytic families.
    ///
    /// Tabulated data and power laws more singular than `x⁻²` give `None`; a
    /// `Sum` is `None` as soon as one of its terms is.
    pub fn origin_coefficient(&self) -> Option<f64> {
        match self {
            Potential::Zero | Potential::Coulomb { .. } | Potential::Harmonic { .. } => Some(0.0),
            Potential::InverseSquare { c } => Some(*c),
            Potential::PowerLaw { c, p } => {
                if *c == 0.0 || *p > -2.0 {
                    Some(0.0)
                } else if *p == -2.0 {
                    Some(*c)
                } else {
                    None
                }
            }
            Potential::Sum { terms } => terms
                .iter()
                .map(Potential::origin_coefficient)
                .sum::<Option<f64>>(),
            Potential::Tabulated { .. } => None,
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    let i = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let t = (x - x0) / (x1 - x0);
    Ok(values[i - 1] + t * (values[i] - values[i - 1]))
}

/// Numerator of `4ρ` in the separated form `(n−1)(n−3) + 4l(l+n−2)`.
fn rho_quarters(n: u32, l: u32) -> i64 {
    let (n, l) = (i64::from(n), i64::from(l));
    (n - 1) * (n - 3) + 4 * l * (l + n - 2)
}

/// Numerator of `4ρ` in the completed-square form `(2l+n−2)² − 1`.
fn rho_quarters_square(n: u32, l: u32) -> i64 {
    let (n, l) = (i64::from(n), i64::from(l));
    let s = 2 * l + n - 2;
    s * s - 1
}

/// Centrifugal coefficient `ρ = (n−1)(n−3)/4 + l(l+n−2)` for dimension `n`
/// and angular momentum `l`. Computed in integer arithmetic, so it is exact.
pub fn rho_nl(n: u32, l: u32) -> f64 {
    rho_quarters(n, l) as f64 / 4.0
}

/// The same coefficient via `(l + (n−2)/2)² − 1/4`.
pub fn rho_nl_completed_square(n: u32, l: u32) -> f64 {
    rho_quarters_square(n, l) as f64 / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularIndex {
    /// `λ = l + (n−2)/2`
    pub lambda: f64,
    /// `L = 2λ + 2`
    pub big_l: f64,
}

pub fn lambda_nl(n: u32, l: u32) -> AngularIndex {
    // 2λ is an integer, so both values are exact.
    let twice = 2 * i64::from(l) + i64::from(n) - 2;
    AngularIndex {
        lambda: twice as f64 / 2.0,
        big_l: (twice + 2) as f64,
    }
}

/// Radial reduction of an `n`-dimensional central-potential problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveProblem {
    pub dimension: u32,
    pub angular_momentum: u32,
    pub base: Potential,
    pub rho: f64,
    /// `base + rho/x²`
    pub q_eff: Potential,
}

pub fn effective_potential(base: Potential, n: u32, l: u32) -> Result<EffectiveProblem> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
    }
    let rho = rho_nl(n, l);
    let q_eff = Potential::Sum {
        terms: vec![base.clone(), Potential::InverseSquare { c: rho }],
    };
    Ok(EffectiveProblem {
        dimension: n,
        angular_momentum: l,
        base,
        rho,
        q_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rho_examples() {
        assert_eq!(rho_nl(3, 0), 0.0);
        assert_eq!(rho_nl(3, 1), 2.0);
        assert_eq!(rho_nl(2, 0), -0.25);
    }

    #[test]
    fn rho_forms_agree_exactly() {
        for n in 1..=50 {
            for l in 0..=50 {
                assert_eq!(rho_quarters(n, l), rho_quarters_square(n, l), "n={n} l={l}");
                assert_eq!(rho_nl(n, l).to_bits(), rho_nl_completed_square(n, l).to_bits());
            }
        }
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_nl(3, 0), AngularIndex { lambda: 0.5, big_l: 3.0 });
        assert_eq!(lambda_nl(4, 0), AngularIndex { lambda: 1.0, big_l: 4.0 });
        assert_eq!(lambda_nl(2, 1), AngularIndex { lambda: 1.0, big_l: 4.0 });
    }

    #[test]
    fn effective_potential_examples() {
        let ep = effective_potential(Potential::Zero, 3, 0).unwrap();
        for x in [1e-3, 0.5, 1.0, 7.0] {
            assert_eq!(ep.q_eff.evaluate(x).unwrap(), 0.0);
        }
        let ep = effective_potential(Potential::Zero, 3, 1).unwrap();
        assert_eq!(ep.q_eff.evaluate(1.0).unwrap(), 2.0);
        let ep = effective_potential(Potential::Coulomb { z: -1.0 }, 3, 1).unwrap();
        assert_eq!(ep.q_eff.evaluate(2.0).unwrap(), 0.0);
    }

    #[test]
    fn effective_origin_coefficient_is_rho() {
        for n in 1..=8 {
            for l in 0..=6 {
                let ep = effective_potential(Potential::Zero, n, l).unwrap();
                assert_eq!(ep.q_eff.origin_coefficient(), Some(rho_nl(n, l)));
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Potential::InverseSquare { c: 2.0 }.evaluate(1.0).unwrap(), 2.0);
        assert_eq!(Potential::PowerLaw { c: 3.0, p: 0.0 }.evaluate(7.0).unwrap(), 3.0);
        let s = Potential::sum(vec![
            Potential::Coulomb { z: 1.0 },
            Potential::InverseSquare { c: 1.0 },
        ])
        .unwrap();
        assert_eq!(s.evaluate(0.5).unwrap(), 6.0);
    }

    #[test]
    fn evaluate_errors() {
        let t = Potential::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        assert_eq!(t.evaluate(1.5).unwrap(), 3.0);
        assert_eq!(t.evaluate(3.0).unwrap(), 6.0);
        assert!(matches!(t.evaluate(3.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(t.evaluate(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(
            Potential::InverseSquare { c: 1.0 }.evaluate(0.0),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            Potential::PowerLaw { c: 1.0, p: 0.5 }.evaluate(-1.0),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn construction_invariants() {
        assert!(Potential::sum(vec![]).is_err());
        assert!(Potential::tabulated(vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(Potential::tabulated(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
        assert!(Potential::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn origin_coefficients() {
        assert_eq!(Potential::InverseSquare { c: 0.75 }.origin_coefficient(), Some(0.75));
        assert_eq!(Potential::Coulomb { z: -5.0 }.origin_coefficient(), Some(0.0));
        assert_eq!(Potential::PowerLaw { c: 1.0, p: -3.0 }.origin_coefficient(), None);
        assert_eq!(Potential::PowerLaw { c: 2.5, p: -2.0 }.origin_coefficient(), Some(2.5));
        assert_eq!(Potential::Harmonic { k: 4.0 }.origin_coefficient(), Some(0.0));
        let t = Potential::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).unwrap();
        assert_eq!(t.origin_coefficient(), None);
        let s = Potential::Sum {
            terms: vec![Potential::InverseSquare { c: 1.0 }, t],
        };
        assert_eq!(s.origin_coefficient(), None);
    }

    #[test]
    fn json_encoding() {
        let p: Potential = serde_json::from_str(r#"{"type":"inverse_square","c":0.75}"#).unwrap();
        assert_eq!(p, Potential::InverseSquare { c: 0.75 });
        let s: Potential = serde_json::from_str(
            r#"{"type":"sum","terms":[{"type":"zero"},{"type":"power_law","c":1,"p":-0.25}]}"#,
        )
        .unwrap();
        assert_eq!(
            s,
            Potential::Sum {
                terms: vec![Potential::Zero, Potential::PowerLaw { c: 1.0, p: -0.25 }]
            }
        );
        let t: Potential =
            serde_json::from_str(r#"{"type":"tabulated","x":[0,1,2,3],"q":[1,1,1,1]}"#).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"type":"tabulated","x":[0.0,1.0,2.0,3.0],"q":[1.0,1.0,1.0,1.0]}"#);
        assert!(serde_json::from_str::<Potential>(r#"{"type":"sum","terms":[]}"#).is_err());
        assert!(
            serde_json::from_str::<Potential>(r#"{"type":"tabulated","x":[0,1,2],"q":[1,1,1]}"#)
                .is_err()
        );
    }

    fn analytic() -> impl Strategy<Value = Potential> {
        prop_oneof![
            Just(Potential::Zero),
            (-5.0..5.0f64).prop_map(|c| Potential::InverseSquare { c }),
            (-5.0..5.0f64).prop_map(|z| Potential::Coulomb { z }),
            (-5.0..5.0f64, -3.0..3.0f64).prop_map(|(c, p)| Potential::PowerLaw { c, p }),
            (-5.0..5.0f64).prop_map(|k| Potential::Harmonic { k }),
        ]
    }

    proptest! {
        #[test]
        fn sum_is_additive(a in analytic(), b in analytic(), x in 0.01..20.0f64) {
            let s = Potential::sum(vec![a.clone(), b.clone()]).unwrap();
            let lhs = s.evaluate(x).unwrap();
            let rhs = a.evaluate(x).unwrap() + b.evaluate(x).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}

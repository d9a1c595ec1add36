use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use weylcheck::classify::{
    analyze, classify_numeric, is_regular_endpoint, Bound, ClassifyConfig, Endpoint, EngineChoice,
    Interval, Verdict,
};
use weylcheck::odeint::{integrate_bundle, ComplexState, IntegratorConfig, Target};
use weylcheck::potential::Potential;

fn polynomial(rng: &mut StdRng) -> Potential {
    let terms = (0..=rng.gen_range(0..=3u8))
        .map(|p| Potential::PowerLaw { c: rng.gen_range(-5.0..5.0), p: f64::from(p) })
        .collect();
    Potential::sum(terms).unwrap()
}

#[test]
fn solutions_combine_linearly_at_checkpoints() {
    let mut rng = StdRng::seed_from_u64(11);
    let cfg = IntegratorConfig::default();
    let checkpoints = [0.25, 0.5, 0.75];
    for _ in 0..10 {
        let q = polynomial(&mut rng);
        let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let inits = [
            ComplexState::real(1.0, 0.0),
            ComplexState::real(0.0, 1.0),
            ComplexState::new(a, b),
        ];
        let l = Complex64::new(0.3, 1.0);
        let traces = integrate_bundle(&q, l, 0.0, Target::Point(1.0), &inits, &checkpoints, &cfg).unwrap();
        for &x in checkpoints.iter().chain(&[1.0]) {
            let at = |k: usize| traces[k].states()[traces[k].index_of(x).expect("checkpoint on grid")];
            let (s1, s2, s3) = (at(0), at(1), at(2));
            let combo = s1.value() * a + s2.value() * b;
            let scale = s3.value().norm().max(1.0);
            assert!((combo - s3.value()).norm() < 1e-7 * scale, "x={x}");
            let dcombo = s1.derivative() * a + s2.derivative() * b;
            assert!((dcombo - s3.derivative()).norm() < 1e-7 * s3.derivative().norm().max(1.0));
        }
    }
}

#[test]
fn regular_endpoints_are_limit_circle() {
    let mut rng = StdRng::seed_from_u64(12);
    let cfg = ClassifyConfig::default();
    for _ in 0..8 {
        let q = polynomial(&mut rng);
        for e in [Endpoint::left(0.0), Endpoint::right(1.0)] {
            let reg = is_regular_endpoint(&q, &e, 0.5, &cfg).unwrap();
            assert!(reg.regular && reg.finite);
            assert_eq!(classify_numeric(&q, &e, 0.5, &cfg).unwrap().verdict, Verdict::LimitCircle);
        }
    }
    let singular = is_regular_endpoint(&Potential::InverseSquare { c: 1.0 }, &Endpoint::left(0.0), 1.0, &cfg).unwrap();
    assert!(!singular.regular);
    let far = is_regular_endpoint(&Potential::Zero, &Endpoint::plus_infinity(), 1.0, &cfg).unwrap();
    assert!(!far.finite && !far.regular);
}

#[test]
fn verdict_is_monotone_in_inverse_square_strength() {
    let cfg = ClassifyConfig::default();
    let rank = |v: Verdict| match v {
        Verdict::LimitCircle => 0,
        Verdict::Inconclusive => 1,
        Verdict::LimitPoint => 2,
    };
    let mut prev = 0;
    for k in 0..=30 {
        let c = -0.2 + 0.1 * k as f64;
        let v = classify_numeric(&Potential::InverseSquare { c }, &Endpoint::left(0.0), 1.0, &cfg)
            .unwrap()
            .verdict;
        assert!(rank(v) >= prev, "c={c} gave {v:?}");
        prev = rank(v);
    }
    assert_eq!(prev, 2);
}

#[test]
fn probe_choice_does_not_change_infinity_verdicts() {
    let cases = [
        (Potential::Zero, Verdict::LimitPoint),
        (Potential::Harmonic { k: 1.0 }, Verdict::LimitPoint),
        (Potential::PowerLaw { c: -1.0, p: 4.0 }, Verdict::LimitCircle),
    ];
    for (q, expected) in cases {
        for probe in [Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)] {
            let cfg = ClassifyConfig { probe, ..ClassifyConfig::default() };
            let got = classify_numeric(&q, &Endpoint::plus_infinity(), 1.0, &cfg).unwrap().verdict;
            assert_eq!(got, expected, "{q:?} at probe {probe}");
        }
    }
}

#[test]
fn both_engines_agree_on_the_half_line() {
    let cfg = ClassifyConfig::default();
    let interval = Interval::new(Bound::Finite(0.0), Bound::PlusInfinity).unwrap();
    for c in [0.0, 0.3, 2.0] {
        let a = analyze(&Potential::InverseSquare { c }, interval, EngineChoice::Both, None, &cfg).unwrap();
        assert_eq!(a.left.engines_agree, Some(true), "c={c}");
        assert!(a.is_conclusive());
    }
}

#[test]
fn coulomb_origin_is_limit_circle() {
    let cfg = ClassifyConfig::default();
    let v = classify_numeric(&Potential::Coulomb { z: -1.0 }, &Endpoint::left(0.0), 1.0, &cfg).unwrap();
    assert_eq!(v.verdict, Verdict::LimitCircle);
    assert_eq!(v.basis.len(), 2);
}

#[test]
fn wrong_anchor_is_rejected() {
    let cfg = ClassifyConfig::default();
    assert!(classify_numeric(&Potential::Zero, &Endpoint::left(1.0), 0.5, &cfg).is_err());
    assert!(IntegratorConfig { rel_tol: -1.0, ..IntegratorConfig::default() }.validate().is_err());
}

use std::f64::consts::PI;

use o2maps::asymptotics::{classify_regime, l_eval, l_tilde_eval, slow_variation_ratios, Regime};
use o2maps::series::{FCoefficients, GSequence, TruncationConfig};
use o2maps::weights::{builtin_example, BuiltinName};

fn cfg() -> TruncationConfig {
    TruncationConfig::default()
}

#[test]
fn budd_l_limits() {
    let g = GSequence::budd_symmetric_with_head(200_000);
    let far = l_eval(&g, 1e6, &cfg()).unwrap();
    assert!((far - 0.5).abs() < 1e-6, "{far}");
    let r = slow_variation_ratios(&g, 2.0, &[1e4], &cfg()).unwrap()[0];
    assert!((r - 1.0).abs() < 1e-7, "{r}");
}

#[test]
fn fully_packed_ratio_at_a_million() {
    let g = GSequence::zero();
    let x: f64 = 1e6;
    let r = slow_variation_ratios(&g, 2.0, &[x], &cfg()).unwrap()[0];
    let predicted = 1.0 + 2f64.ln() / x.ln();
    assert!((r - predicted).abs() < 0.01, "{r} vs {predicted}");
    assert!((r - 1.05).abs() < 0.01);
}

#[test]
fn drift_deficit_convergence() {
    // the deviation is c'/log k + o(1/log k); for g = 0 the constant c' is
    // small and the deviation changes sign near k = 500, so monotone
    // shrinking is checked from 1e4 on
    for text in ["", "0.2,0.1", "0,0,0.1"] {
        let g = GSequence::parse(text).unwrap();
        let report = classify_regime(&g, &cfg()).unwrap();
        assert_eq!(report.regime, Regime::DriftDeficit);
        let c = report.limit_constant.unwrap();
        let fc = FCoefficients::new(&g);
        let mut devs = Vec::new();
        for (k, tol) in [(1_000i64, 0.15), (10_000, 0.1), (100_000, 0.07), (1_000_000, 0.05)] {
            let kf = k as f64;
            let dev = fc.nu(-k).value * kf * kf / kf.ln() / c - 1.0;
            assert!(dev.abs() < tol, "{text} k={k}: {dev}");
            devs.push((dev, dev * kf.ln()));
        }
        for w in devs[1..].windows(2) {
            assert!(w[1].0.abs() < w[0].0.abs(), "{text}: {devs:?}");
        }
        let (a, b, d) = (devs[1].1, devs[2].1, devs[3].1);
        assert!((d - b).abs() < (b - a).abs() + 1e-12, "{text}: {devs:?}");
    }
}

#[test]
fn boundary_summable_limit() {
    for text in ["0,1/2", "1/4,0,1/4", "0.1,0.2,0.1,0.05"] {
        let g = GSequence::parse(text).unwrap();
        let report = classify_regime(&g, &cfg()).unwrap();
        assert_eq!(report.regime, Regime::BoundarySummable, "{text}");
        let c = report.limit_constant.unwrap();
        assert!(c > 0.0);
        let k = 100_000i64;
        let v = FCoefficients::new(&g).nu(-k).value * (k * k) as f64;
        assert!((v / c - 1.0).abs() < 0.01, "{text}: {v} vs {c}");
    }
}

#[test]
fn l_and_l_tilde_stay_close() {
    // bounded difference on a log grid, with the 2/pi normalization of f
    for text in ["", "0.3", "0,0.2,0.1"] {
        let g = GSequence::parse(text).unwrap();
        let mut spread: Vec<f64> = Vec::new();
        for e in 0..=24 {
            let x = 2.0 * 10f64.powf(e as f64 / 4.0);
            let d = l_eval(&g, x, &cfg()).unwrap() - 2.0 / PI * l_tilde_eval(&g, x, &cfg()).unwrap();
            spread.push(d);
        }
        let lo = spread.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = spread.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1.0, "{text}: {spread:?}");
    }
}

#[test]
fn l_q_bracket_for_synthesized_family() {
    let g = GSequence::parse("0.2,0.1").unwrap();
    let fam = o2maps::weights::synthesize(&g, &cfg()).unwrap();
    let (_, _, budd) = builtin_example(BuiltinName::BuddSymmetric);
    for f in [&fam, &budd] {
        for e in 2..=6 {
            let ell = 10i64.pow(e);
            let lq = f.l_q(ell);
            assert!(lq > 0.05 && lq / (ell as f64).ln() < 1.0, "l={ell}: {lq}");
        }
    }
}

//! The statistics module checked against the independent oracles.

use std::collections::BTreeMap;

use crate::oracle::{bootstrap_quantile, spearman_by_hand, welch_tost};
use stylesim::stats::{
    dense_ranks, per_participant_deltas, percentile_bootstrap, spearman, tost_equivalence,
    DEFAULT_RESAMPLES,
};

#[test]
fn two_point_ci_matches_enumeration() {
    let values = [-1.0, 1.0];
    let r = percentile_bootstrap(&values, DEFAULT_RESAMPLES, 42).unwrap();
    assert_eq!(r.ci_low, bootstrap_quantile(&values, 0.025));
    assert_eq!(r.ci_high, bootstrap_quantile(&values, 0.975));
    assert_eq!((r.ci_low, r.ci_high), (-1.0, 1.0));
}

#[test]
fn three_point_ci_matches_enumeration() {
    // 27 resamples; the extreme means -1 and 2 each have probability 1/27,
    // above the 2.5% tail, so they are the interval ends.
    let values = [-1.0, 0.5, 2.0];
    let r = percentile_bootstrap(&values, 50_000, 3).unwrap();
    assert_eq!(r.ci_low, bootstrap_quantile(&values, 0.025));
    assert_eq!(r.ci_high, bootstrap_quantile(&values, 0.975));
}

#[test]
fn constant_input_collapses() {
    for c in [0.0, 0.3, -17.25, 1e-7] {
        let r = percentile_bootstrap(&[c; 9], 2_000, 5).unwrap();
        assert_eq!((r.mean_delta, r.ci_low, r.ci_high), (c, c, c));
    }
}

#[test]
fn fixed_seed_is_bit_reproducible() {
    let xs: Vec<f64> = (0..37)
        .map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.4)
        .collect();
    let a = percentile_bootstrap(&xs, DEFAULT_RESAMPLES, 2024).unwrap();
    let b = percentile_bootstrap(&xs, DEFAULT_RESAMPLES, 2024).unwrap();
    assert_eq!(a.ci_low.to_bits(), b.ci_low.to_bits());
    assert_eq!(a.ci_high.to_bits(), b.ci_high.to_bits());
    let c = percentile_bootstrap(&xs, DEFAULT_RESAMPLES, 2025).unwrap();
    assert_ne!((a.ci_low, a.ci_high), (c.ci_low, c.ci_high));
}

fn check_tost(a: &[f64], b: &[f64], sesoi: f64, expect_equivalent: bool) {
    let w = welch_tost(a, b, sesoi);
    let r = tost_equivalence(a, b, sesoi).unwrap();
    assert!((r.t_lower - w.t_lower).abs() < 1e-9 && (r.t_upper - w.t_upper).abs() < 1e-9);
    assert!((r.df - w.df).abs() < 1e-9);
    assert!(
        (r.p_lower - w.p_lower).abs() < 1e-6,
        "{} vs {}",
        r.p_lower,
        w.p_lower
    );
    assert!(
        (r.p_upper - w.p_upper).abs() < 1e-6,
        "{} vs {}",
        r.p_upper,
        w.p_upper
    );
    assert_eq!(w.p_lower.max(w.p_upper) < 0.05, expect_equivalent);
    assert_eq!(r.equivalent, expect_equivalent);
}

/// 30 points around 0.5 with sample std close to 0.05.
fn tight_sample() -> Vec<f64> {
    (0..30)
        .map(|i| 0.5 + 0.07 * ((i as f64) * 2.3).sin())
        .collect()
}

#[test]
fn tost_equivalent_fixture() {
    let a = tight_sample();
    let b: Vec<f64> = a.iter().rev().copied().collect();
    check_tost(&a, &b, 0.10, true);
}

#[test]
fn tost_gap_fixture() {
    let a = tight_sample();
    let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
    check_tost(&a, &b, 0.10, false);
}

#[test]
fn tost_moderate_statistics() {
    // Small noisy samples so both p values sit inside (0, 1).
    let a = [0.61, 0.48, 0.55, 0.70, 0.52, 0.58];
    let b = [0.50, 0.57, 0.44, 0.62, 0.49];
    check_tost(&a, &b, 0.10, false);
    check_tost(&b, &a, 0.25, true);
}

#[test]
fn tost_zero_margin_never_equivalent() {
    let a = tight_sample();
    assert!(!tost_equivalence(&a, &a, 0.0).unwrap().equivalent);
}

#[test]
fn spearman_matches_hand_ranking() {
    let cases: [(&[f64], &[f64]); 3] = [
        (&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]),
        (
            &[0.3, 1.2, -4.0, 7.5, 2.2, 1.2],
            &[5.0, 5.0, 1.0, 0.0, 2.0, 9.0],
        ),
        (&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]),
    ];
    for (x, y) in cases {
        assert!((spearman(x, y).unwrap().rho - spearman_by_hand(x, y)).abs() < 1e-12);
    }
    assert!(
        (spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0])
            .unwrap()
            .rho
            - 3.0 / 10f64.sqrt())
        .abs()
            < 1e-12
    );
    let x = [0.3, 1.2, -4.0, 7.5, 2.2];
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((spearman(&x, &x).unwrap().rho - 1.0).abs() < 1e-12);
    assert!((spearman(&x, &neg).unwrap().rho + 1.0).abs() < 1e-12);
}

#[test]
fn participant_deltas() {
    let m = |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    };
    let d = per_participant_deltas(&m(&[("p1", 0.5)]), &m(&[("p1", 0.7)])).unwrap();
    assert!((d[0] - 0.2).abs() < 1e-12);
    let same = m(&[("a", 0.1), ("b", 0.9)]);
    assert_eq!(per_participant_deltas(&same, &same).unwrap(), [0.0, 0.0]);
    assert!(per_participant_deltas(&m(&[("a", 1.0)]), &m(&[("b", 1.0)])).is_err());
}

#[test]
fn dense_rank_ties() {
    assert_eq!(dense_ranks(&[0.9, 0.5, 0.5, 0.1], true), [1, 2, 2, 3]);
    assert_eq!(dense_ranks(&[0.9, 0.5, 0.5, 0.1], false), [3, 2, 2, 1]);
    assert_eq!(dense_ranks(&[0.8120, 0.8122, 0.909], true), [2, 2, 1]);
}

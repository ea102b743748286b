//! Reference implementations written without sharing code with the library:
//! plain loops, textbook formulas and exhaustive enumeration.

use std::f64::consts::PI;

/// Lanczos approximation of ln Γ(x) (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Student t density.
pub fn t_pdf(x: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln();
    (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Student t CDF: 1/2 plus composite Simpson integration of the density
/// over [0, |t|].
pub fn t_cdf(t: f64, df: f64) -> f64 {
    const N: usize = 200_000;
    let h = t.abs() / N as f64;
    let mut s = t_pdf(0.0, df) + t_pdf(t.abs(), df);
    for i in 1..N {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_pdf(i as f64 * h, df);
    }
    let half = s * h / 3.0;
    if t >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub t_lower: f64,
    pub t_upper: f64,
    pub df: f64,
    pub p_lower: f64,
    pub p_upper: f64,
}

/// Welch TOST statistics of `mean(a) - mean(b)` against `±sesoi`.
pub fn welch_tost(a: &[f64], b: &[f64], sesoi: f64) -> Welch {
    let moments = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = moments(a);
    let (nb, mb, vb) = moments(b);
    let (qa, qb) = (va / na, vb / nb);
    let se = (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let d = ma - mb;
    let t_lower = (d + sesoi) / se;
    let t_upper = (d - sesoi) / se;
    Welch {
        t_lower,
        t_upper,
        df,
        p_lower: 1.0 - t_cdf(t_lower, df),
        p_upper: t_cdf(t_upper, df),
    }
}

/// Lower `q` quantile of the exact bootstrap distribution of the mean,
/// found by enumerating all n^n equally likely resamples.
pub fn bootstrap_quantile(values: &[f64], q: f64) -> f64 {
    let n = values.len();
    let total = n.pow(n as u32);
    let mut means: Vec<f64> = (0..total)
        .map(|mut code| {
            let mut sum = 0.0;
            for _ in 0..n {
                sum += values[code % n];
                code /= n;
            }
            sum / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    // Smallest value whose cumulative share reaches q.
    let k = ((q * total as f64).ceil() as usize).clamp(1, total);
    means[k - 1]
}

/// Spearman's rho as Pearson correlation of ranks, each rank counted by
/// hand: 1 + (values below) + (ties - 1) / 2.
pub fn spearman_by_hand(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                1.0 + below + (equal - 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const DEFAULT_SESOI: f64 = 0.10;
pub const ALPHA: f64 = 0.05;
const MIN_SAMPLE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TostResult {
    pub sesoi: f64,
    /// Difference of means, first sample minus second.
    pub mean_diff: f64,
    pub se: f64,
    pub df: f64,
    /// Statistic against the lower bound, `(d + sesoi) / se`.
    pub t_lower: f64,
    /// Statistic against the upper bound, `(d - sesoi) / se`.
    pub t_upper: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub p: f64,
    pub equivalent: bool,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check(xs: &[f64], what: &str) -> Result<()> {
    if xs.len() < MIN_SAMPLE {
        return Err(Error::InvalidArgument(format!(
            "{what} needs at least {MIN_SAMPLE} values, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} has non-finite values"
        )));
    }
    Ok(())
}

/// `P(T <= t)` for Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t == f64::INFINITY {
        return 1.0;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    StudentsT::new(0.0, 1.0, df)
        .expect("df is positive and finite")
        .cdf(t)
}

fn signed_inf(x: f64) -> f64 {
    if x > 0.0 {
        f64::INFINITY
    } else if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

fn finish(sesoi: f64, d: f64, se: f64, df: f64) -> TostResult {
    let (t_lower, t_upper, p_lower, p_upper) = if se > 0.0 {
        let tl = (d + sesoi) / se;
        let tu = (d - sesoi) / se;
        // Both tails read off the lower CDF so swapping samples mirrors exactly.
        (tl, tu, t_cdf(-tl, df), t_cdf(tu, df))
    } else {
        let inside = d.abs() < sesoi;
        let p = if inside { 0.0 } else { 1.0 };
        (signed_inf(d + sesoi), signed_inf(d - sesoi), p, p)
    };
    let p = p_lower.max(p_upper).clamp(0.0, 1.0);
    TostResult {
        sesoi,
        mean_diff: d,
        se,
        df,
        t_lower,
        t_upper,
        p_lower,
        p_upper,
        p,
        equivalent: p < ALPHA,
    }
}

fn check_sesoi(sesoi: f64) -> Result<()> {
    if !(sesoi >= 0.0 && sesoi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sesoi must be finite and >= 0, got {sesoi}"
        )));
    }
    Ok(())
}

/// Two one-sided Welch t-tests of `mean(a) - mean(b)` against `±sesoi`.
pub fn tost_equivalence(a: &[f64], b: &[f64], sesoi: f64) -> Result<TostResult> {
    check(a, "first sample")?;
    check(b, "second sample")?;
    check_sesoi(sesoi)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (qa, qb) = (va / na, vb / nb);
    let se = (qa + qb).sqrt();
    let df = if se > 0.0 {
        (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
    } else {
        na + nb - 2.0
    };
    Ok(finish(sesoi, ma - mb, se, df))
}

/// Paired variant: one-sample TOST on `a[i] - b[i]`.
pub fn tost_paired(a: &[f64], b: &[f64], sesoi: f64) -> Result<TostResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(
            "paired samples differ in length".into(),
        ));
    }
    check(a, "first sample")?;
    check(b, "second sample")?;
    check_sesoi(sesoi)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let (d, v) = mean_var(&diffs);
    Ok(finish(sesoi, d, (v / n).sqrt(), n - 1.0))
}

//! Per-participant deltas, percentile bootstrap, TOST equivalence, Spearman
//! correlation and rank tables.

mod bootstrap;
mod tost;

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::metrics::SessionSummary;
use crate::policies::PolicyKind;
use crate::replay::output::{csv_field, fmt_f64};
use crate::replay::PolicySummary;

pub use bootstrap::{
    bootstrap_on_stream, percentile, percentile_bootstrap, stream_rng, BootstrapResult, CHUNK,
    CI_LEVEL, DEFAULT_RESAMPLES,
};
pub use tost::{t_cdf, tost_equivalence, tost_paired, TostResult, ALPHA, DEFAULT_SESOI};

/// Means below this distance apart share a rank.
pub const RANK_TIE_TOLERANCE: f64 = 5e-4;

/// `b[k] - a[k]` for every participant key, in key order.
pub fn per_participant_deltas(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<Vec<f64>> {
    let missing_in_a: Vec<String> = b.keys().filter(|k| !a.contains_key(*k)).cloned().collect();
    let missing_in_b: Vec<String> = a.keys().filter(|k| !b.contains_key(*k)).cloned().collect();
    if !missing_in_a.is_empty() || !missing_in_b.is_empty() {
        return Err(Error::KeyMismatch {
            missing_in_a,
            missing_in_b,
        });
    }
    Ok(a.iter().map(|(k, va)| b[k] - va).collect())
}

/// Mean of a session metric per participant.
pub fn participant_means(
    sessions: &[SessionSummary],
    metric: &str,
) -> Result<BTreeMap<String, f64>> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in sessions {
        let v = s
            .metric(metric)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{metric}`")))?;
        let e = acc.entry(s.participant_id.clone()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect())
}

/// Average ranks, 1-based; tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Two-sided, from the t approximation with n - 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(
            "spearman needs at least 3 pairs".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "spearman inputs must be finite".into(),
        ));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::InvalidArgument("spearman undefined for constant input".into()))?;
    let n = x.len();
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    Ok(SpearmanResult { rho, p, n })
}

/// Policy ranks per corpus for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub metric: String,
    pub corpora: Vec<String>,
    /// Policies in order of first appearance.
    pub policies: Vec<String>,
    /// `ranks[p][c]`; `None` when the policy was not run on that corpus.
    pub ranks: Vec<Vec<Option<usize>>>,
}

impl RankTable {
    pub fn rank(&self, policy: &str, corpus: &str) -> Option<usize> {
        let p = self.policies.iter().position(|x| x == policy)?;
        let c = self.corpora.iter().position(|x| x == corpus)?;
        self.ranks[p][c]
    }
}

/// Dense ranks: best is 1, means within the tie tolerance of their
/// neighbour share a rank, and the next distinct value takes the next integer.
pub fn dense_ranks(values: &[f64], higher_is_better: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        let o = values[i].total_cmp(&values[j]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    let mut prev: Option<f64> = None;
    for &i in &idx {
        if prev.is_none_or(|p| (values[i] - p).abs() > RANK_TIE_TOLERANCE) {
            rank += 1;
        }
        ranks[i] = rank;
        prev = Some(values[i]);
    }
    ranks
}

/// Higher is better for every metric except flip rate and churn.
pub fn higher_is_better(metric: &str) -> bool {
    !matches!(metric, "flip_rate" | "mean_churn")
}

pub fn rank_table(corpora: &[(String, Vec<PolicySummary>)], metric: &str) -> Result<RankTable> {
    let mut policies: Vec<String> = Vec::new();
    for (_, sums) in corpora {
        for s in sums {
            if !policies.contains(&s.policy) {
                policies.push(s.policy.clone());
            }
        }
    }
    let mut ranks = vec![vec![None; corpora.len()]; policies.len()];
    for (c, (name, sums)) in corpora.iter().enumerate() {
        if sums.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "corpus {name} has fewer than 2 policies"
            )));
        }
        let means: Vec<f64> = sums
            .iter()
            .map(|s| {
                s.metrics
                    .get(metric)
                    .map(|m| m.mean)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{metric}`")))
            })
            .collect::<Result<_>>()?;
        for (s, r) in sums
            .iter()
            .zip(dense_ranks(&means, higher_is_better(metric)))
        {
            let p = policies
                .iter()
                .position(|x| *x == s.policy)
                .expect("collected above");
            ranks[p][c] = Some(r);
        }
    }
    Ok(RankTable {
        metric: metric.to_string(),
        corpora: corpora.iter().map(|(n, _)| n.clone()).collect(),
        policies,
        ranks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsOptions {
    pub n_resamples: usize,
    pub seed: u64,
    pub sesoi: f64,
    pub paired: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            n_resamples: DEFAULT_RESAMPLES,
            seed: 0,
            sesoi: DEFAULT_SESOI,
            paired: false,
        }
    }
}

/// One line of `stats.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub comparison: String,
    pub metric: String,
    pub mean_delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tost_p: f64,
    pub equivalent: bool,
}

pub const STATS_COLUMNS: [&str; 7] = [
    "comparison",
    "metric",
    "mean_delta",
    "ci_low",
    "ci_high",
    "tost_p",
    "equivalent",
];
pub const COMPARED_METRICS: [&str; 3] = ["synchrony", "stability", "coherence"];

/// Treatment minus baseline on per-participant means: bootstrap CI of the
/// deltas, and TOST of the two sets of means. `analysis` selects the RNG
/// stream family so comparisons do not share draws.
pub fn compare(
    comparison: &str,
    baseline: &[SessionSummary],
    treatment: &[SessionSummary],
    metric: &str,
    opts: &StatsOptions,
    analysis: u32,
) -> Result<ComparisonRow> {
    let a = participant_means(baseline, metric)?;
    let b = participant_means(treatment, metric)?;
    let deltas = per_participant_deltas(&a, &b)?;
    let boot = bootstrap_on_stream(&deltas, opts.n_resamples, opts.seed, analysis)?;
    let (av, bv): (Vec<f64>, Vec<f64>) =
        (a.values().copied().collect(), b.values().copied().collect());
    let tost = if opts.paired {
        tost_paired(&bv, &av, opts.sesoi)?
    } else {
        tost_equivalence(&bv, &av, opts.sesoi)?
    };
    Ok(ComparisonRow {
        comparison: comparison.to_string(),
        metric: metric.to_string(),
        mean_delta: boot.mean_delta,
        ci_low: boot.ci_low,
        ci_high: boot.ci_high,
        tost_p: tost.p,
        equivalent: tost.equivalent,
    })
}

/// Label of the default comparison baseline: the Uncapped policy when one
/// was run, otherwise the first policy.
pub fn default_baseline(summaries: &[PolicySummary]) -> Option<&str> {
    summaries
        .iter()
        .find(|s| s.kind == PolicyKind::Uncapped)
        .or_else(|| summaries.first())
        .map(|s| s.policy.as_str())
}

/// Every other policy against `baseline` on each compared metric, named
/// `corpus:policy_vs_baseline`. Analyses are numbered from `first_analysis`
/// in row order.
pub fn compare_to_baseline(
    corpus: &str,
    groups: &[(&str, &[SessionSummary])],
    baseline: &str,
    opts: &StatsOptions,
    first_analysis: u32,
) -> Result<Vec<ComparisonRow>> {
    let (_, base_rows) = groups
        .iter()
        .find(|(label, _)| *label == baseline)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("baseline policy `{baseline}` was not run"))
        })?;
    let mut rows = Vec::new();
    let mut analysis = first_analysis;
    for (label, sessions) in groups.iter().filter(|(label, _)| *label != baseline) {
        let name = format!("{corpus}:{label}_vs_{baseline}");
        for metric in COMPARED_METRICS {
            rows.push(compare(&name, base_rows, sessions, metric, opts, analysis)?);
            analysis += 1;
        }
    }
    Ok(rows)
}

pub fn write_stats_csv(
    w: &mut (impl Write + ?Sized),
    preamble: &str,
    rows: &[ComparisonRow],
) -> io::Result<()> {
    writeln!(w, "{}", preamble.trim_end_matches('\n'))?;
    writeln!(w, "{}", STATS_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csv_field(&r.comparison),
            csv_field(&r.metric),
            fmt_f64(r.mean_delta),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high),
            fmt_f64(r.tost_p),
            r.equivalent
        )?;
    }
    Ok(())
}

/// `metric,policy,<corpus...>` with empty cells for policies a corpus lacks.
pub fn write_rank_csv(
    w: &mut (impl Write + ?Sized),
    preamble: &str,
    tables: &[RankTable],
) -> io::Result<()> {
    writeln!(w, "{}", preamble.trim_end_matches('\n'))?;
    let corpora = tables
        .first()
        .map(|t| t.corpora.clone())
        .unwrap_or_default();
    let header: Vec<String> = corpora.iter().map(|c| csv_field(c).into_owned()).collect();
    writeln!(w, "metric,policy,{}", header.join(","))?;
    for t in tables {
        for (p, ranks) in t.policies.iter().zip(&t.ranks) {
            let cells: Vec<String> = ranks
                .iter()
                .map(|r| r.map_or_else(String::new, |r| r.to_string()))
                .collect();
            writeln!(
                w,
                "{},{},{}",
                csv_field(&t.metric),
                csv_field(p),
                cells.join(",")
            )?;
        }
    }
    Ok(())
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 10_000;
/// Resamples drawn from one RNG stream. Chunks map to streams one to one,
/// so thread count never changes the draws.
pub const CHUNK: usize = 1_000;
pub const CI_LEVEL: f64 = 0.95;

/// ChaCha8 seeded from `seed`, positioned on `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Linear interpolation between closest ranks, `h = (n - 1) q`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Mean computed as offsets from the first element, so a constant sample
/// averages to exactly that constant.
pub(crate) fn anchored_mean(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = values.len() as f64;
    let mut it = values.clone();
    let Some(first) = it.next() else {
        return f64::NAN;
    };
    first + values.map(|x| x - first).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub mean_delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
    pub seed: u64,
}

/// 95% percentile bootstrap of the mean on analysis stream 0.
pub fn percentile_bootstrap(
    values: &[f64],
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    bootstrap_on_stream(values, n_resamples, seed, 0)
}

/// As [`percentile_bootstrap`], drawing from streams `analysis << 32 | chunk`.
pub fn bootstrap_on_stream(
    values: &[f64],
    n_resamples: usize,
    seed: u64,
    analysis: u32,
) -> Result<BootstrapResult> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least 2 values".into(),
        ));
    }
    if n_resamples == 0 {
        return Err(Error::InvalidArgument(
            "n_resamples must be positive".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "bootstrap values must be finite".into(),
        ));
    }
    let n = values.len();
    let n_chunks = n_resamples.div_ceil(CHUNK);
    let mut means: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, (u64::from(analysis) << 32) | c as u64);
            let count = CHUNK.min(n_resamples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let draw: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
                    anchored_mean(draw.into_iter())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - CI_LEVEL) / 2.0;
    Ok(BootstrapResult {
        mean_delta: anchored_mean(values.iter().copied()),
        ci_low: percentile(&means, tail),
        ci_high: percentile(&means, 1.0 - tail),
        n_resamples,
        seed,
    })
}

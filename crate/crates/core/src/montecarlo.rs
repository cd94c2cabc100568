//! Inverse-CDF sampling from a truncated distribution and empirical checks
//! of the sampled points against the model.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::search_model::{expected_time, time_indices, SearchSpeeds};
use crate::truncation::TruncatedDistribution;

/// Draws per worker chunk. Chunk `c` advances the stream by `c · CHUNK`
/// draws, so the output does not depend on the thread count.
const CHUNK: usize = 4096;

/// `n` draws by inverse-CDF sampling with a seeded PCG-64 stream.
pub fn sample(t: &TruncatedDistribution, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .try_for_each(|(c, chunk)| -> Result<()> {
            let mut rng = Pcg64::seed_from_u64(seed);
            rng.advance((c * CHUNK) as u128);
            for slot in chunk.iter_mut() {
                *slot = t.quantile(rng.gen::<f64>())?;
            }
            Ok(())
        })?;
    Ok(out)
}

/// Kolmogorov–Smirnov distance between the sample's empirical CDF and
/// the truncated CDF.
pub fn empirical_cdf_distance(samples: &[f64], t: &TruncatedDistribution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = t.cdf(x)?;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Time for the searcher on `x`'s side to reach `x`: swept distance over
/// `v1` plus crossed gap widths over `v2`.
pub fn arrival_time(t: &TruncatedDistribution, speeds: &SearchSpeeds, x: f64) -> f64 {
    let layout = t.layout();
    let crossed: f64 = if x <= 0.0 {
        layout.left_gaps().iter().filter(|g| g.lower >= x).map(|g| g.width()).sum()
    } else {
        layout.right_gaps().iter().filter(|g| g.upper <= x).map(|g| g.width()).sum()
    };
    (x.abs() - crossed) / speeds.sweep() + crossed / speeds.gap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalSummary {
    pub mean: f64,
    /// Standard error of `mean`; 0 for a single draw.
    pub std_error: f64,
    pub count: usize,
}

fn summarize(times: &[f64]) -> Option<ArrivalSummary> {
    if times.is_empty() {
        return None;
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let std_error = if times.len() > 1 {
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Some(ArrivalSummary {
        mean,
        std_error,
        count: times.len(),
    })
}

/// Mean arrival time of the searcher that finds each sampled point, split
/// by side (0 counts as left). `None` when no draw landed on that side.
pub fn simulate_arrival(
    t: &TruncatedDistribution,
    speeds: &SearchSpeeds,
    samples: &[f64],
) -> (Option<ArrivalSummary>, Option<ArrivalSummary>) {
    let (left, right): (Vec<f64>, Vec<f64>) = samples.iter().partition(|&&x| x <= 0.0);
    let times = |xs: &[f64]| xs.iter().map(|&x| arrival_time(t, speeds, x)).collect::<Vec<_>>();
    (summarize(&times(&left)), summarize(&times(&right)))
}

/// Fraction of samples in each segment, in segment order.
pub fn segment_frequencies(t: &TruncatedDistribution, samples: &[f64]) -> Vec<f64> {
    let segs: Vec<_> = t.segments().collect();
    let mut counts = vec![0usize; segs.len()];
    for &x in samples {
        if let Some(k) = segs.iter().position(|s| x >= s.lower && x <= s.upper) {
            counts[k] += 1;
        }
    }
    let n = samples.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub n: usize,
    pub seed: u64,
    pub sup_cdf_distance: f64,
    pub segment_frequencies: Vec<f64>,
    pub segment_probabilities: Vec<f64>,
    pub arrival_left: Option<ArrivalSummary>,
    pub arrival_right: Option<ArrivalSummary>,
    /// The model's terminal expectations, for side-by-side reading. They are
    /// a different functional from the mean arrival times.
    pub expected_first: f64,
    pub expected_last: f64,
}

pub fn validate(t: &TruncatedDistribution, speeds: &SearchSpeeds, seed: u64, n: usize) -> Result<SampleReport> {
    let samples = sample(t, seed, n)?;
    let (arrival_left, arrival_right) = simulate_arrival(t, speeds, &samples);
    let range = time_indices(t.layout());
    Ok(SampleReport {
        n,
        seed,
        sup_cdf_distance: empirical_cdf_distance(&samples, t)?,
        segment_frequencies: segment_frequencies(t, &samples),
        segment_probabilities: (0..t.segment_count())
            .map(|k| t.segment_probability(k))
            .collect::<Result<_>>()?,
        arrival_left,
        arrival_right,
        expected_first: expected_time(t, speeds, *range.start())?,
        expected_last: expected_time(t, speeds, *range.end())?,
    })
}

//! Scale-adjusted contrastive and mean-classifier losses.
//!
//! Both losses are written in their "mean score" form, i.e. the log of an
//! average rather than a sum, so that values stay in `[-2, 2]` for unit-norm
//! features regardless of the number of negatives `M` or classes `K`:
//!
//! ```text
//! L_contr = -E[f(x)'f(x+)] + E log (1/M) sum_i exp(f(x)'f(x_i-))
//! L_mCE   = -E[f(x)'mu_y]  + E log (1/K) sum_k exp(f(x)'mu_k)
//! ```
//!
//! Temperature is fixed at 1.

use rand::Rng;
use rayon::prelude::*;

use crate::data::{dot, sq_dist, EmbeddingSet, LabelSet, PositivePairs};
use crate::error::{Error, Result};
use crate::rng;

/// Negative draws are enumerated exactly when there are at most this many
/// equally likely outcomes per anchor.
pub const EXACT_ENUMERATION_LIMIT: usize = 4096;

/// A loss together with its positive (alignment) and negative terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub components: Option<(f64, f64)>,
}

impl LossValue {
    fn split(positive: f64, negative: f64) -> Self {
        Self {
            value: positive + negative,
            components: Some((positive, negative)),
        }
    }

    pub fn positive(&self) -> Option<f64> {
        self.components.map(|c| c.0)
    }

    pub fn negative(&self) -> Option<f64> {
        self.components.map(|c| c.1)
    }
}

/// Per-class means and the conditional variance `E ||f(x) - mu_y||^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub means: Vec<Vec<f64>>,
    pub cond_variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentStats {
    /// Mean positive-pair distance.
    pub alignment: f64,
    /// Largest positive-pair distance, the empirical epsilon.
    pub max_pair_distance: f64,
    /// `log E exp(-2 ||f(x) - f(y)||^2)` over `sample_budget` random pairs
    /// from the pooled samples; `None` when the budget is zero.
    pub uniformity: Option<f64>,
}

/// log((1/n) sum exp(s_i)), stable.
pub(crate) fn log_mean_exp(scores: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = scores.clone().fold(f64::NEG_INFINITY, f64::max);
    let mut n = 0usize;
    let sum: f64 = scores
        .map(|s| {
            n += 1;
            (s - max).exp()
        })
        .sum();
    max + (sum / n as f64).ln()
}

/// Adjusted InfoNCE with `m` negatives per anchor drawn uniformly with
/// replacement from both sides of `pairs` pooled together.
///
/// The anchor itself may be drawn. Each anchor gets its own random stream,
/// so the result depends only on `seed`, not on thread scheduling.
pub fn infonce_adjusted(
    pairs: &PositivePairs,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<LossValue> {
    if m == 0 {
        return Err(Error::Argument("M must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let n = pairs.n();
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 pairs, got {n}")));
    }
    pairs.left.require_normalized("anchors")?;
    pairs.right.require_normalized("positives")?;

    let pool: Vec<&[f64]> = pairs.left.rows().chain(pairs.right.rows()).collect();
    let exact = pool
        .len()
        .checked_pow(m as u32)
        .is_some_and(|outcomes| outcomes <= EXACT_ENUMERATION_LIMIT);

    let terms: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let anchor = pairs.left.row(i);
            let positive = -dot(anchor, pairs.right.row(i));
            let scores: Vec<f64> = pool.iter().map(|p| dot(anchor, p)).collect();
            let negative = if exact {
                exact_negative(&scores, m)
            } else {
                sampled_negative(&scores, m, trials, rng::stream(seed, i as u64))
            };
            (positive, negative)
        })
        .collect();

    let (pos, neg) = terms
        .iter()
        .fold((0.0, 0.0), |(p, q), (a, b)| (p + a, q + b));
    Ok(LossValue::split(pos / n as f64, neg / n as f64))
}

fn exact_negative(scores: &[f64], m: usize) -> f64 {
    let p = scores.len();
    let outcomes = p.pow(m as u32);
    let mut idx = vec![0usize; m];
    let mut total = 0.0;
    for _ in 0..outcomes {
        total += log_mean_exp(idx.iter().map(|&j| scores[j]));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < p {
                break;
            }
            *slot = 0;
        }
    }
    total / outcomes as f64
}

fn sampled_negative(scores: &[f64], m: usize, trials: usize, mut rng: impl Rng) -> f64 {
    let mut draw = vec![0.0; m];
    let mut total = 0.0;
    for _ in 0..trials {
        for d in draw.iter_mut() {
            *d = scores[rng.random_range(0..scores.len())];
        }
        total += log_mean_exp(draw.iter().copied());
    }
    total / trials as f64
}

fn class_means(e: &EmbeddingSet, labels: &LabelSet) -> Result<Vec<Vec<f64>>> {
    if labels.n() != e.n() {
        return Err(Error::Shape(format!(
            "{} embeddings but {} labels",
            e.n(),
            labels.n()
        )));
    }
    labels.require_nonempty_classes()?;
    let mut means = vec![vec![0.0; e.dim()]; labels.k()];
    for (row, &y) in e.rows().zip(labels.labels()) {
        means[y].iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    for (mean, count) in means.iter_mut().zip(labels.class_counts()) {
        mean.iter_mut().for_each(|m| *m /= count as f64);
    }
    Ok(means)
}

/// Adjusted mean-classifier cross entropy, with the class means taken from
/// `e` itself. Exact, no sampling.
pub fn mce_adjusted(e: &EmbeddingSet, labels: &LabelSet) -> Result<LossValue> {
    e.require_normalized("embeddings")?;
    let means = class_means(e, labels)?;
    let n = e.n() as f64;
    let (pos, neg) = e
        .rows()
        .zip(labels.labels())
        .map(|(f, &y)| {
            (
                -dot(f, &means[y]),
                log_mean_exp(means.iter().map(|mu| dot(f, mu))),
            )
        })
        .fold((0.0, 0.0), |(p, q), (a, b)| (p + a, q + b));
    Ok(LossValue::split(pos / n, neg / n))
}

/// Monte Carlo estimate of the mean-classifier negative term:
/// `E log (1/M) sum_i exp(f(x)'mu_{y_i})` with `y_1..y_M` uniform over the
/// classes, class means from `e`.
pub fn mc_negative(e: &EmbeddingSet, labels: &LabelSet, m: usize, trials: usize, seed: u64) -> Result<f64> {
    if m == 0 || trials == 0 {
        return Err(Error::Argument("M and trials must be at least 1".into()));
    }
    e.require_normalized("embeddings")?;
    let means = class_means(e, labels)?;
    let exact = means
        .len()
        .checked_pow(m as u32)
        .is_some_and(|outcomes| outcomes <= EXACT_ENUMERATION_LIMIT);
    let total: f64 = (0..e.n())
        .into_par_iter()
        .map(|i| {
            let f = e.row(i);
            let scores: Vec<f64> = means.iter().map(|mu| dot(f, mu)).collect();
            if exact {
                exact_negative(&scores, m)
            } else {
                sampled_negative(&scores, m, trials, rng::stream(seed, i as u64))
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / e.n() as f64)
}

pub fn class_stats(e: &EmbeddingSet, labels: &LabelSet) -> Result<ClassStats> {
    e.require_normalized("embeddings")?;
    let means = class_means(e, labels)?;
    let total: f64 = e
        .rows()
        .zip(labels.labels())
        .map(|(f, &y)| sq_dist(f, &means[y]))
        .sum();
    Ok(ClassStats {
        means,
        cond_variance: total / e.n() as f64,
    })
}

pub fn alignment_uniformity(
    pairs: &PositivePairs,
    sample_budget: usize,
    seed: u64,
) -> Result<AlignmentStats> {
    pairs.left.require_normalized("anchors")?;
    pairs.right.require_normalized("positives")?;
    let dists: Vec<f64> = pairs
        .left
        .rows()
        .zip(pairs.right.rows())
        .map(|(a, b)| sq_dist(a, b).sqrt())
        .collect();
    let alignment = dists.iter().sum::<f64>() / dists.len() as f64;
    let max_pair_distance = dists.iter().copied().fold(0.0, f64::max);

    let uniformity = (sample_budget > 0).then(|| {
        let pool: Vec<&[f64]> = pairs.left.rows().chain(pairs.right.rows()).collect();
        let mut rng = rng::seeded(seed);
        let scores: Vec<f64> = (0..sample_budget)
            .map(|_| {
                let a = pool[rng.random_range(0..pool.len())];
                let b = pool[rng.random_range(0..pool.len())];
                -2.0 * sq_dist(a, b)
            })
            .collect();
        log_mean_exp(scores.iter().copied())
    });

    Ok(AlignmentStats {
        alignment,
        max_pair_distance,
        uniformity,
    })
}

/// Fraction of positive pairs whose two sides carry different labels.
pub fn label_consistency_alpha(pairs: &PositivePairs) -> Result<f64> {
    let (l, r) = pairs.labels()?;
    let mismatched = l
        .labels()
        .iter()
        .zip(r.labels())
        .filter(|(a, b)| a != b)
        .count();
    Ok(mismatched as f64 / pairs.n() as f64)
}

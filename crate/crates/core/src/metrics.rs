//! Label-free representation quality scores.
//!
//! ACR (average confusion ratio) is the fraction of augmented views whose
//! nearest foreign view is no farther than their farthest sibling view.
//! ARC compares the ACR of a trained encoder against an initial one. GACR
//! and GARC generalise both with configurable statistics over the view
//! distances and a `k`-th nearest foreign anchor.
//!
//! All metrics are deterministic; the per-view work runs in parallel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{dot, sq_dist, PositivePairs, ViewSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatSelector {
    Min,
    Max,
    Mean,
    /// Even-length sets take the mean of the two central values.
    Median,
}

impl StatSelector {
    pub const ALL: [StatSelector; 4] = [Self::Min, Self::Max, Self::Mean, Self::Median];

    /// `values` is reordered in place.
    pub fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Self::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Self::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Self::Median => {
                values.sort_unstable_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

impl FromStr for StatSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Self::Min),
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            other => Err(Error::Argument(format!("unknown statistic `{other}`"))),
        }
    }
}

impl fmt::Display for StatSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Max => "max",
            Self::Mean => "mean",
            Self::Median => "median",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MetricConfig {
    pub a1: StatSelector,
    pub a2: StatSelector,
    pub k: usize,
}

impl MetricConfig {
    /// The configuration under which GACR coincides with ACR.
    pub const ACR: MetricConfig = MetricConfig {
        a1: StatSelector::Max,
        a2: StatSelector::Min,
        k: 1,
    };

    pub fn new(a1: StatSelector, a2: StatSelector, k: usize) -> Self {
        Self { a1, a2, k }
    }
}

impl fmt::Display for MetricConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-k{}", self.a1, self.a2, self.k)
    }
}

/// Default number of views per anchor for the metrics.
pub const DEFAULT_VIEWS: usize = 6;

fn check_views(views: &ViewSet) -> Result<()> {
    if views.n() < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 anchors, got {}",
            views.n()
        )));
    }
    if views.c() < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 views per anchor, got {}",
            views.c()
        )));
    }
    Ok(())
}

fn mean_indicator(views: &ViewSet, confused: impl Fn(usize, usize) -> bool + Sync) -> f64 {
    let (n, c) = (views.n(), views.c());
    let hits: usize = (0..n * c)
        .into_par_iter()
        .map(|v| confused(v / c, v % c) as usize)
        .sum();
    hits as f64 / (n * c) as f64
}

/// Average confusion ratio over all `n * c` views, unsquared distances.
pub fn acr(views: &ViewSet) -> Result<f64> {
    check_views(views)?;
    let (n, c) = (views.n(), views.c());
    Ok(mean_indicator(views, |i, j| {
        let x = views.view(i, j);
        let d_in = (0..c)
            .map(|p| sq_dist(x, views.view(i, p)))
            .fold(0.0, f64::max)
            .sqrt();
        let mut d_out = f64::INFINITY;
        for l in (0..n).filter(|&l| l != i) {
            for p in 0..c {
                d_out = d_out.min(sq_dist(x, views.view(l, p)));
            }
        }
        d_out.sqrt() <= d_in
    }))
}

/// `(1 - final) / (1 - init)`.
pub fn arc(acr_final: f64, acr_init: f64) -> Result<f64> {
    relative_confusion(acr_final, acr_init, "ARC")
}

fn relative_confusion(final_: f64, init: f64, what: &str) -> Result<f64> {
    if init >= 1.0 {
        return Err(Error::UndefinedMetric(format!(
            "{what} with an initial ratio of {init}"
        )));
    }
    Ok((1.0 - final_) / (1.0 - init))
}

/// Generalised ACR over squared distances. The view itself is excluded from
/// its own sibling set.
pub fn gacr(views: &ViewSet, cfg: &MetricConfig) -> Result<f64> {
    check_views(views)?;
    let (n, c) = (views.n(), views.c());
    if cfg.k == 0 || cfg.k > n - 1 {
        return Err(Error::Argument(format!(
            "k = {} outside [1, {}]",
            cfg.k,
            n - 1
        )));
    }
    Ok(mean_indicator(views, |i, j| {
        let x = views.view(i, j);
        let mut q: Vec<f64> = (0..c)
            .filter(|&p| p != j)
            .map(|p| sq_dist(x, views.view(i, p)))
            .collect();
        let d_in = cfg.a1.apply(&mut q);
        let mut ql = vec![0.0; c];
        let mut outs: Vec<f64> = (0..n)
            .filter(|&l| l != i)
            .map(|l| {
                for (p, slot) in ql.iter_mut().enumerate() {
                    *slot = sq_dist(x, views.view(l, p));
                }
                cfg.a2.apply(&mut ql)
            })
            .collect();
        let (_, kth, _) = outs.select_nth_unstable_by(cfg.k - 1, f64::total_cmp);
        *kth <= d_in
    }))
}

pub fn garc(final_views: &ViewSet, init_views: &ViewSet, cfg: &MetricConfig) -> Result<f64> {
    let init = gacr(init_views, cfg)?;
    let final_ = gacr(final_views, cfg)?;
    relative_confusion(final_, init, "GARC")
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} vs {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Argument("need at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("correlation with zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean over positive pairs of `p(x, x+ | y) / (p(x | y) p(x+ | y))`, with
/// the joint estimated from similarities `S_ij = f(x_i)'f(x_j+)` normalised
/// over all same-class index pairs, and the marginals as its row and column
/// sums (the pair's own term included).
///
/// Only pairs whose two sides share a label are used.
pub fn ci_ratio(pairs: &PositivePairs) -> Result<f64> {
    let (left, right) = pairs.labels()?;
    let mut groups = vec![Vec::new(); left.k().max(right.k())];
    for i in 0..pairs.n() {
        if left.get(i) == right.get(i) {
            groups[left.get(i)].push(i);
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (y, idx) in groups.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Degenerate(format!(
                "class {y} has a single same-label pair"
            )));
        }
        let m = idx.len();
        let s: Vec<f64> = idx
            .par_iter()
            .flat_map_iter(|&a| {
                idx.iter()
                    .map(move |&b| dot(pairs.left.row(a), pairs.right.row(b)))
            })
            .collect();
        let rows: Vec<f64> = (0..m).map(|a| s[a * m..(a + 1) * m].iter().sum()).collect();
        let cols: Vec<f64> = (0..m).map(|b| (0..m).map(|a| s[a * m + b]).sum()).collect();
        let z: f64 = rows.iter().sum();
        if z <= 0.0 || rows.iter().chain(&cols).any(|&v| v <= 0.0) {
            return Err(Error::Degenerate(format!(
                "class {y} has non-positive similarity sums, the density estimate is ill-posed"
            )));
        }
        for a in 0..m {
            total += s[a * m + a] * z / (rows[a] * cols[a]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate("no same-label pairs".into()));
    }
    Ok(total / count as f64)
}

//! Random geometric graphs on spheres: cap and sphere sampling, uniform
//! augmentation noise, and the overlap thresholds `r1`, `r2`, `r3`, `r_mc`.
//!
//! Distances are Euclidean in the ambient space. The closed forms are
//! flat-space nearest-neighbour expansions applied to a sphere surface, so
//! curvature is ignored throughout.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::auggraph::UnionFind;
use crate::data::{sq_dist, EmbeddingSet, LabelSet, PositivePairs, ViewSet};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// One spherical cap of area `area` around each class center on S^2.
    #[default]
    Caps,
    /// Uniform on the whole sphere S^d in R^(d+1), a single class.
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeomConfig {
    /// Intrinsic dimension used in the formulas (2 for S^2).
    pub d: usize,
    /// Total sample count over all classes.
    pub n: usize,
    /// Surface area of one class's support.
    pub area: f64,
    /// Surface area of the whole sample distribution, used by `r_mc`.
    pub total_area: f64,
    pub class_centers: Vec<Vec<f64>>,
    pub support: Support,
    pub noise_r: f64,
    pub seed: u64,
}

/// Surface area of the unit sphere S^d.
pub fn sphere_area(d: usize) -> f64 {
    let a = (d + 1) as f64 / 2.0;
    2.0 * PI.powf(a) / gamma(a)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

impl GeomConfig {
    /// Two caps of area 1 centered at the poles, the standard synthetic set.
    pub fn two_caps(n: usize, seed: u64) -> Self {
        Self {
            d: 2,
            n,
            area: 1.0,
            total_area: 2.0,
            class_centers: vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]],
            support: Support::Caps,
            noise_r: 0.0,
            seed,
        }
    }

    /// `n` uniform points on S^d, one class.
    pub fn sphere(d: usize, n: usize, seed: u64) -> Self {
        let mut pole = vec![0.0; d + 1];
        pole[d] = 1.0;
        let s = sphere_area(d);
        Self {
            d,
            n,
            area: s,
            total_area: s,
            class_centers: vec![pole],
            support: Support::Sphere,
            noise_r: 0.0,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.class_centers.len()
    }

    /// Samples per class.
    pub fn n_per_class(&self) -> usize {
        self.n / self.k().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Argument(format!("need N >= 2, got {}", self.n)));
        }
        if self.d == 0 {
            return Err(Error::Argument("d must be at least 1".into()));
        }
        if !(self.area > 0.0 && self.total_area > 0.0) {
            return Err(Error::Argument("areas must be positive".into()));
        }
        if !(self.noise_r >= 0.0) {
            return Err(Error::Argument(format!("noise_r {} is negative", self.noise_r)));
        }
        if self.class_centers.is_empty() {
            return Err(Error::Argument("no class centers".into()));
        }
        for (k, c) in self.class_centers.iter().enumerate() {
            let len = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (len - 1.0).abs() > 1e-9 {
                return Err(Error::Argument(format!("center {k} is not unit-norm")));
            }
        }
        Ok(())
    }
}

/// Rotates `p` by the rotation taking the north pole `e3` onto `c`.
fn rotate_from_pole(p: [f64; 3], c: &[f64]) -> [f64; 3] {
    let cz = c[2].clamp(-1.0, 1.0);
    // axis e3 x c, unnormalised
    let (ax, ay) = (-c[1], c[0]);
    let s = (ax * ax + ay * ay).sqrt();
    if s < 1e-12 {
        return if cz > 0.0 { p } else { [p[0], -p[1], -p[2]] };
    }
    let (kx, ky) = (ax / s, ay / s);
    let (cos, sin) = (cz, s);
    let kdotp = kx * p[0] + ky * p[1];
    // k x p with k = (kx, ky, 0)
    let cross = [ky * p[2], -kx * p[2], kx * p[1] - ky * p[0]];
    let k = [kx, ky, 0.0];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = p[i] * cos + cross[i] * sin + k[i] * kdotp * (1.0 - cos);
    }
    out
}

/// One point uniform on the cap of area `area` around the north pole.
fn cap_point(area: f64, rng: &mut impl Rng) -> [f64; 3] {
    let z = 1.0 - rng.random::<f64>() * area / (2.0 * PI);
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// A point uniform on the unit sphere in R^dim.
pub fn sphere_point(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// `N/K` points per class, uniform on the cap (or sphere) of each class,
/// classes in order.
pub fn sample_caps(cfg: &GeomConfig) -> Result<(EmbeddingSet, LabelSet)> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    sample_with(cfg, &mut rng)
}

fn sample_with(cfg: &GeomConfig, rng: &mut impl Rng) -> Result<(EmbeddingSet, LabelSet)> {
    let per = cfg.n_per_class();
    if per == 0 {
        return Err(Error::Argument("fewer samples than classes".into()));
    }
    let (dim, values) = match cfg.support {
        Support::Caps => {
            if cfg.area > 2.0 * PI + 1e-12 {
                return Err(Error::Argument(format!(
                    "cap area {} exceeds a hemisphere (2 pi)",
                    cfg.area
                )));
            }
            if cfg.class_centers.iter().any(|c| c.len() != 3) {
                return Err(Error::Argument("caps need centers in R^3".into()));
            }
            let mut values = Vec::with_capacity(cfg.k() * per * 3);
            for c in &cfg.class_centers {
                for _ in 0..per {
                    values.extend(rotate_from_pole(cap_point(cfg.area, rng), c));
                }
            }
            (3, values)
        }
        Support::Sphere => {
            let dim = cfg.d + 1;
            let values = (0..cfg.k() * per)
                .flat_map(|_| sphere_point(dim, rng))
                .collect();
            (dim, values)
        }
    };
    let labels = (0..cfg.k()).flat_map(|k| std::iter::repeat_n(k, per)).collect();
    Ok((
        EmbeddingSet::from_unit_rows(cfg.k() * per, dim, values)?,
        LabelSet::new(labels, cfg.k())?,
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `u ~ U(0, r)` per coordinate.
    #[default]
    OneSided,
    /// `u ~ U(-r, r)` per coordinate.
    Symmetric,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-sided" | "one_sided" => Ok(Self::OneSided),
            "symmetric" => Ok(Self::Symmetric),
            other => Err(Error::Argument(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// `count` views per anchor, `x + u` with one-sided uniform noise.
pub fn augment(points: &EmbeddingSet, r: f64, count: usize, seed: u64) -> Result<ViewSet> {
    augment_with(points, r, count, seed, NoiseKind::OneSided)
}

/// Like [`augment`] with a choice of noise. Views are not re-projected
/// onto the sphere.
pub fn augment_with(
    points: &EmbeddingSet,
    r: f64,
    count: usize,
    seed: u64,
    kind: NoiseKind,
) -> Result<ViewSet> {
    if !(r >= 0.0) {
        return Err(Error::Argument(format!("noise strength {r} is negative")));
    }
    let mut rng = rng::seeded(seed);
    let mut values = Vec::with_capacity(points.n() * count * points.dim());
    for row in points.rows() {
        for _ in 0..count {
            values.extend(row.iter().map(|x| x + noise(r, kind, &mut rng)));
        }
    }
    ViewSet::new(points.n(), count, points.dim(), values)
}

pub(crate) fn noise(r: f64, kind: NoiseKind, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    match kind {
        NoiseKind::OneSided => r * u,
        NoiseKind::Symmetric => r * (2.0 * u - 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoOverlap,
    Intermediate,
    Full,
    Over,
}

pub fn classify(r: f64, r1: f64, r2: f64, r3: f64) -> Regime {
    if r >= r3 {
        Regime::Over
    } else if r >= r2 {
        Regime::Full
    } else if r >= r1 && r > 0.0 {
        Regime::Intermediate
    } else {
        Regime::NoOverlap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r_mc_closed: Option<f64>,
    pub r_mc_empirical: Option<f64>,
    pub regime: Regime,
}

fn nn_prefactor(d: usize, n: usize, s: f64) -> f64 {
    let df = d as f64;
    let m = (n - 1) as f64;
    gamma(df / 2.0 + 1.0).powf(1.0 / df) / PI.sqrt()
        * (s / m).powf(1.0 / df)
        * (1.0 - (1.0 / df + 1.0 / (df * df)) / (2.0 * m))
}

/// Expected distance to the `k`-th nearest of `n` points on a region of
/// area `s`, first-order expansion in `1/(n-1)`.
pub fn expected_knn_distance(d: usize, n: usize, s: f64, k: usize) -> f64 {
    let df = d as f64;
    let kf = k as f64;
    let ratio = (ln_gamma(kf + 1.0 / df) - ln_gamma(kf)).exp();
    nn_prefactor(d, n, s) * ratio
}

/// Expected nearest-neighbour distance.
pub fn r1_closed(d: usize, n: usize, s: f64) -> f64 {
    expected_knn_distance(d, n, s, 1)
}

/// Expected farthest-neighbour distance.
pub fn r2_closed(d: usize, n: usize, s: f64) -> f64 {
    expected_knn_distance(d, n, s, n - 1)
}

/// Half of the smallest distance between two class centers; infinite with a
/// single class.
pub fn r3_closed(centers: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            best = best.min(sq_dist(&centers[i], &centers[j]).sqrt());
        }
    }
    best / 2.0
}

/// `(2 (1 - 1/d) S log N / (V_u N^2))^(1/d)`.
pub fn r_mc_closed(d: usize, n: usize, s: f64) -> Result<f64> {
    r_mc_with_power(d, n, s, 2)
}

/// The same expression with `N` in place of `N^2`, which is the scaling of
/// the longest minimum-spanning-tree edge for uniform points.
pub fn r_mc_linear(d: usize, n: usize, s: f64) -> Result<f64> {
    r_mc_with_power(d, n, s, 1)
}

fn r_mc_with_power(d: usize, n: usize, s: f64, power: i32) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!("r_mc with d = {d}")));
    }
    let df = d as f64;
    let nf = n as f64;
    Ok((2.0 * (1.0 - 1.0 / df) * s * nf.ln() / (unit_ball_volume(d) * nf.powi(power))).powf(1.0 / df))
}

pub fn thresholds_closed_form(cfg: &GeomConfig) -> Result<ThresholdReport> {
    cfg.validate()?;
    let per = cfg.n_per_class();
    if per < 3 {
        return Err(Error::Argument(format!("need at least 3 samples per class, got {per}")));
    }
    let r1 = r1_closed(cfg.d, per, cfg.area);
    let r2 = r2_closed(cfg.d, per, cfg.area);
    let r3 = r3_closed(&cfg.class_centers);
    let r_mc = r_mc_closed(cfg.d, cfg.n, cfg.total_area)?;
    Ok(ThresholdReport {
        r1,
        r2,
        r3,
        r_mc_closed: Some(r_mc),
        r_mc_empirical: None,
        regime: classify(cfg.noise_r, r1, r2, r3),
    })
}

/// Nearest- and farthest-neighbour distances, averaged over points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeighbourStats {
    pub mean_nn: f64,
    pub mean_farthest: f64,
    pub min_nn: f64,
    pub max_pair: f64,
}

pub fn neighbour_stats(points: &[&[f64]]) -> NeighbourStats {
    let n = points.len();
    let mut nn = vec![f64::INFINITY; n];
    let mut far = vec![0.0f64; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(points[i], points[j]);
            nn[i] = nn[i].min(d);
            nn[j] = nn[j].min(d);
            far[i] = far[i].max(d);
            far[j] = far[j].max(d);
        }
    }
    let nn: Vec<f64> = nn.into_iter().map(f64::sqrt).collect();
    let far: Vec<f64> = far.into_iter().map(f64::sqrt).collect();
    NeighbourStats {
        mean_nn: nn.iter().sum::<f64>() / n as f64,
        mean_farthest: far.iter().sum::<f64>() / n as f64,
        min_nn: nn.iter().copied().fold(f64::INFINITY, f64::min),
        max_pair: far.iter().copied().fold(0.0, f64::max),
    }
}

/// Smallest radius at which the geometric graph on `points` is connected,
/// i.e. the longest edge of a minimum spanning tree. Exact: all pairwise
/// distances are sorted and merged with union-find.
pub fn connectivity_radius(points: &[&[f64]]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((sq_dist(points[i], points[j]), i as u32, j as u32));
        }
    }
    pairs.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(n);
    for (d, i, j) in pairs {
        if uf.union(i as usize, j as usize) && uf.set_count() == 1 {
            return d.sqrt();
        }
    }
    unreachable!("complete graph is connected")
}

/// Samples `trials` data sets and measures the neighbour statistics and the
/// intra-class connectivity radius, averaged over classes and trials.
pub fn empirical_regime(cfg: &GeomConfig, trials: usize) -> Result<ThresholdReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(cfg.seed, t as u64);
            let (pts, labels) = sample_with(cfg, &mut rng)?;
            let mut acc = (0.0, 0.0, 0.0);
            for members in labels.members() {
                let rows: Vec<&[f64]> = members.iter().map(|&i| pts.row(i)).collect();
                let s = neighbour_stats(&rows);
                acc.0 += s.mean_nn;
                acc.1 += s.mean_farthest;
                acc.2 += connectivity_radius(&rows);
            }
            let k = labels.k() as f64;
            Ok((acc.0 / k, acc.1 / k, acc.2 / k))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = trials as f64;
    let (r1, r2, r_mc) = per_trial
        .iter()
        .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let (r1, r2, r_mc) = (r1 / t, r2 / t, r_mc / t);
    let r3 = r3_closed(&cfg.class_centers);
    Ok(ThresholdReport {
        r1,
        r2,
        r3,
        r_mc_closed: r_mc_closed(cfg.d, cfg.n, cfg.total_area).ok(),
        r_mc_empirical: Some(r_mc),
        regime: classify(cfg.noise_r, r1, r2, r3),
    })
}

/// One row of a connectivity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    /// Fraction of trials in which every class subgraph is connected.
    pub connected_fraction: f64,
    /// Mean number of components of the whole graph.
    pub mean_components: f64,
    /// Mean over trials of the largest intra-class diameter, infinite if
    /// any trial had a disconnected class.
    pub d_max: f64,
}

pub const SWEEP_CSV_HEADER: &str = "r,connected_fraction,mean_components,D_max";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!("{},{},{},{}", self.r, self.connected_fraction, self.mean_components, self.d_max)
    }
}

/// Geometric graph (edge iff distance <= r) over freshly sampled points for
/// each radius in `radii`.
pub fn connectivity_sweep(cfg: &GeomConfig, radii: &[f64], trials: usize) -> Result<Vec<SweepRow>> {
    use crate::auggraph::{build_graph, graph_stats, AugGraph, GraphMetric};
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let samples = (0..trials)
        .map(|t| sample_with(cfg, &mut rng::stream(cfg.seed, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    radii
        .iter()
        .map(|&r| {
            if !(r >= 0.0) {
                return Err(Error::Argument(format!("radius {r} is negative")));
            }
            let mut connected = 0usize;
            let mut comps = 0usize;
            let mut d_sum = 0.0;
            for (pts, labels) in &samples {
                let g = if r > 0.0 {
                    let views = ViewSet::new(pts.n(), 1, pts.dim(), pts.values().to_vec())?;
                    build_graph(&views, r, GraphMetric::Euclidean)?
                } else {
                    AugGraph::from_edges(pts.n(), &[])?
                };
                let stats = graph_stats(&g, labels)?;
                connected += stats.all_classes_connected() as usize;
                comps += stats.components.len();
                d_sum += stats.d_max_f64();
            }
            let t = trials as f64;
            Ok(SweepRow {
                r,
                connected_fraction: connected as f64 / t,
                mean_components: comps as f64 / t,
                d_max: d_sum / t,
            })
        })
        .collect()
}

/// Augmentation graph of `points`: `views` noisy copies per anchor, an edge
/// when two anchors have views within `threshold` of each other.
pub fn view_graph(
    points: &EmbeddingSet,
    labels: &LabelSet,
    r: f64,
    views: usize,
    threshold: f64,
    kind: NoiseKind,
    seed: u64,
) -> Result<(crate::auggraph::AugGraph, crate::auggraph::GraphStats)> {
    use crate::auggraph::{build_graph, graph_stats, GraphMetric};
    let v = augment_with(points, r, views, seed, kind)?;
    let g = build_graph(&v, threshold, GraphMetric::Euclidean)?;
    let stats = graph_stats(&g, labels)?;
    Ok((g, stats))
}

/// Conditionally independent pairs: `k` random class centers on
/// `S^(dim-1)`, each side drawn independently as
/// `normalize(c_y + spread * g / sqrt(dim))`, classes balanced.
pub fn gaussian_ci_pairs(n: usize, k: usize, dim: usize, spread: f64, seed: u64) -> Result<PositivePairs> {
    if k == 0 || n < k || dim < 2 {
        return Err(Error::Argument(format!(
            "need N >= K >= 1 and dim >= 2, got N = {n}, K = {k}, dim = {dim}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| sphere_point(dim, &mut rng)).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let scale = spread / (dim as f64).sqrt();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<EmbeddingSet> {
        let mut values = Vec::with_capacity(n * dim);
        for &y in &labels {
            let mut v: Vec<f64> = centers[y]
                .iter()
                .map(|c| {
                    let g: f64 = StandardNormal.sample(&mut *rng);
                    c + scale * g
                })
                .collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= len);
            values.extend(v);
        }
        EmbeddingSet::from_unit_rows(n, dim, values)
    };
    let left = draw(&mut rng)?;
    let right = draw(&mut rng)?;
    let l = LabelSet::new(labels, k)?;
    PositivePairs::new(left, right)?.with_labels(l.clone(), l)
}

/// Two independent cap samples of the same configuration, paired by index
/// within each class.
pub fn independent_cap_pairs(cfg: &GeomConfig) -> Result<PositivePairs> {
    let (left, l) = sample_caps(cfg)?;
    let (right, r) = sample_caps(&GeomConfig {
        seed: rng::derive(cfg.seed, 1),
        ..cfg.clone()
    })?;
    PositivePairs::new(left, right)?.with_labels(l, r)
}

/// Positives that are tight perturbations of their anchors:
/// `normalize(x + sigma * g)`.
pub fn perturbed_pairs(points: &EmbeddingSet, labels: &LabelSet, sigma: f64, seed: u64) -> Result<PositivePairs> {
    if !(sigma >= 0.0) {
        return Err(Error::Argument(format!("sigma {sigma} is negative")));
    }
    let mut rng = rng::seeded(seed);
    let values: Vec<f64> = points
        .values()
        .iter()
        .map(|x| {
            let g: f64 = StandardNormal.sample(&mut rng);
            x + sigma * g
        })
        .collect();
    let right = EmbeddingSet::new(points.n(), points.dim(), values)?.normalize()?;
    let left = points.normalize()?;
    PositivePairs::new(left, right)?.with_labels(labels.clone(), labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_cap(area: f64, center: Vec<f64>, n: usize) -> GeomConfig {
        GeomConfig {
            area,
            total_area: area,
            class_centers: vec![center],
            ..GeomConfig::two_caps(n, 11)
        }
    }

    #[test]
    fn hemisphere_z_is_uniform_on_unit_interval() {
        let (e, _) = sample_caps(&one_cap(2.0 * PI, vec![0.0, 0.0, 1.0], 4000)).unwrap();
        let zs: Vec<f64> = e.rows().map(|r| r[2]).collect();
        assert!(zs.iter().all(|&z| (0.0..=1.0).contains(&z)));
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12.0f64).sqrt() / (zs.len() as f64).sqrt());
    }

    #[test]
    fn cap_points_stay_within_angular_radius() {
        let area = 1.0;
        let max_angle = (1.0 - area / (2.0 * PI)).acos();
        let c = vec![0.6, 0.0, 0.8];
        let (e, _) = sample_caps(&one_cap(area, c.clone(), 500)).unwrap();
        assert!(e.is_normalized());
        for r in e.rows() {
            let cos: f64 = r.iter().zip(&c).map(|(a, b)| a * b).sum();
            assert!(cos.acos() <= max_angle + 1e-9);
        }
        let south = vec![0.0, 0.0, -1.0];
        let (e, _) = sample_caps(&one_cap(area, south, 200)).unwrap();
        assert!(e.rows().all(|r| r[2] <= -(1.0 - area / (2.0 * PI)) + 1e-12));
    }

    #[test]
    fn mean_z_of_polar_cap() {
        let area = 1.5;
        let n = 20_000;
        let (e, _) = sample_caps(&one_cap(area, vec![0.0, 0.0, 1.0], n)).unwrap();
        let mean = e.rows().map(|r| r[2]).sum::<f64>() / n as f64;
        let h = area / (2.0 * PI);
        let sigma = h / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - (1.0 - area / (4.0 * PI))).abs() < 3.0 * sigma);
    }

    #[test]
    fn oversized_cap_is_rejected() {
        assert!(sample_caps(&one_cap(7.0, vec![0.0, 0.0, 1.0], 10)).is_err());
    }

    #[test]
    fn r3_of_poles() {
        assert_eq!(r3_closed(&[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]), 1.0);
        assert_eq!(r3_closed(&[vec![1.0, 0.0]]), f64::INFINITY);
    }

    #[test]
    fn r1_plugin() {
        // (1/sqrt(pi)) * (sqrt(pi)/2) * 0.1 * (1 - 0.75/200)
        let expected = 0.05 * (1.0 - 0.75 / 200.0);
        assert_abs_diff_eq!(r1_closed(2, 101, 1.0), expected, epsilon = 1e-12);
        assert!((r1_closed(2, 101, 1.0) - 0.04984).abs() < 1e-4);
        assert!(r1_closed(2, 50, 1.0) <= r2_closed(2, 50, 1.0));
    }

    #[test]
    fn r_mc_doubling() {
        let (d, n, s) = (3, 500, 2.0);
        let a = r_mc_closed(d, n, s).unwrap();
        let b = r_mc_closed(d, 2 * n, s).unwrap();
        let nf = n as f64;
        let factor = ((2.0 * nf).ln() / nf.ln() * 0.25).powf(1.0 / d as f64);
        assert_abs_diff_eq!(b / a, factor, epsilon = 1e-12);
        assert!(matches!(r_mc_closed(1, 100, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify(0.0, 0.1, 1.0, 2.0), Regime::NoOverlap);
        assert_eq!(classify(0.5, 0.1, 1.0, 2.0), Regime::Intermediate);
        assert_eq!(classify(1.5, 0.1, 1.0, 2.0), Regime::Full);
        assert_eq!(classify(2.5, 0.1, 1.0, 2.0), Regime::Over);

        let cfg = GeomConfig {
            noise_r: 0.0,
            ..GeomConfig::two_caps(40, 3)
        };
        assert_eq!(empirical_regime(&cfg, 2).unwrap().regime, Regime::NoOverlap);
        let full = GeomConfig {
            noise_r: 0.99,
            ..cfg
        };
        let rep = empirical_regime(&full, 2).unwrap();
        assert!(rep.r2 < 0.99);
        assert_eq!(rep.regime, Regime::Full);
    }

    #[test]
    fn connectivity_radius_is_longest_mst_edge() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.1], vec![0.5], vec![0.55]];
        let rows: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_abs_diff_eq!(connectivity_radius(&rows), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn augment_examples() {
        let pts = EmbeddingSet::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        let v = augment(&pts, 0.0, 4, 1).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                assert_eq!(v.view(i, j), pts.row(i));
            }
        }
        let r = 0.3;
        let v = augment(&pts, r, 50, 9).unwrap();
        for i in 0..2 {
            for j in 0..50 {
                for (a, b) in v.view(i, j).iter().zip(pts.row(i)) {
                    assert!((0.0..=r).contains(&(a - b)));
                }
            }
        }
        assert_eq!(v, augment(&pts, r, 50, 9).unwrap());
        assert_ne!(v, augment(&pts, r, 50, 10).unwrap());
        let s = augment_with(&pts, r, 50, 9, NoiseKind::Symmetric).unwrap();
        assert!(s.values().iter().zip(v.values()).any(|(a, b)| a != b));
    }

    #[test]
    fn sphere_area_values() {
        assert_abs_diff_eq!(sphere_area(2), 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(sphere_area(1), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(unit_ball_volume(2), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-12);
    }
}

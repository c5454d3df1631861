//! Augmentation graphs over anchors.
//!
//! Two anchors are joined when some pair of their augmented views comes
//! within a distance threshold of each other. Per-class subgraphs are then
//! summarised by connectivity, BFS diameter and the leading adjacency
//! eigenpairs, which is what the radius and spectral bounds consume.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, BoundInputs, SpectralInputs};
use crate::data::{dot, sq_dist, LabelSet, ViewSet};
use crate::error::{Error, Result};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMetric {
    #[default]
    Euclidean,
    /// Threshold is a cosine similarity; views must be unit-norm.
    Cosine,
}

impl FromStr for GraphMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::Argument(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for GraphMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Euclidean => "euclidean",
            Self::Cosine => "cosine",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Smallest Euclidean distance between a view of `i` and a view of `j`.
    pub min_view_distance: f64,
}

/// Undirected graph on anchors, edges stored once with `i < j` in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct AugGraph {
    n: usize,
    edges: Vec<Edge>,
    threshold: f64,
    metric: GraphMetric,
}

impl AugGraph {
    /// Graph from an explicit edge list, mostly for tests and examples.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b || a >= n || b >= n {
                return Err(Error::Argument(format!("invalid edge ({a}, {b}) for {n} vertices")));
            }
            edges.push(Edge {
                i: a.min(b),
                j: a.max(b),
                min_view_distance: 0.0,
            });
        }
        edges.sort_by_key(|e| (e.i, e.j));
        edges.dedup_by_key(|e| (e.i, e.j));
        Ok(Self {
            n,
            edges,
            threshold: 0.0,
            metric: GraphMetric::Euclidean,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn metric(&self) -> GraphMetric {
        self.metric
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        adj
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        uf.groups()
    }

    /// Edges as `i,j,min_view_distance` CSV with a header row.
    pub fn edges_csv(&self) -> String {
        let mut out = String::from("i,j,min_view_distance\n");
        for e in &self.edges {
            out.push_str(&format!("{},{},{}\n", e.i, e.j, e.min_view_distance));
        }
        out
    }
}

pub fn build_graph(views: &ViewSet, threshold: f64, metric: GraphMetric) -> Result<AugGraph> {
    let (n, c) = (views.n(), views.c());
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 anchors, got {n}")));
    }
    match metric {
        GraphMetric::Euclidean if !(threshold > 0.0) => {
            return Err(Error::Argument(format!(
                "euclidean threshold must be positive, got {threshold}"
            )))
        }
        GraphMetric::Cosine if !(threshold > -1.0 && threshold <= 1.0) => {
            return Err(Error::Argument(format!(
                "cosine threshold must lie in (-1, 1], got {threshold}"
            )))
        }
        GraphMetric::Cosine if !views.is_normalized() => {
            return Err(Error::Argument("cosine metric needs normalized views".into()))
        }
        _ => {}
    }

    let edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in i + 1..n {
                let mut best_sq = f64::INFINITY;
                let mut best_cos = f64::NEG_INFINITY;
                for p in 0..c {
                    let a = views.view(i, p);
                    for q in 0..c {
                        let b = views.view(j, q);
                        best_sq = best_sq.min(sq_dist(a, b));
                        if metric == GraphMetric::Cosine {
                            best_cos = best_cos.max(dot(a, b));
                        }
                    }
                }
                let d = best_sq.sqrt();
                let linked = match metric {
                    GraphMetric::Euclidean => d <= threshold,
                    GraphMetric::Cosine => best_cos >= threshold,
                };
                if linked {
                    row.push(Edge {
                        i,
                        j,
                        min_view_distance: d,
                    });
                }
            }
            row
        })
        .flatten()
        .collect();

    Ok(AugGraph {
        n,
        edges,
        threshold,
        metric,
    })
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }

    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            let r = self.find(v);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(v);
        }
        groups
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassGraphStats {
    pub class: usize,
    pub size: usize,
    pub edges: usize,
    pub connected: bool,
    /// `None` when the subgraph is disconnected (infinite diameter).
    pub diameter: Option<usize>,
    pub lambda1: f64,
    pub lambda2_abs: f64,
    /// Smallest entry of the unit Perron vector; 0 when disconnected.
    pub omega: f64,
    pub bipartite: bool,
    pub complete: bool,
}

impl ClassGraphStats {
    pub fn diameter_f64(&self) -> f64 {
        self.diameter.map_or(f64::INFINITY, |d| d as f64)
    }

    pub fn spectral_inputs(&self) -> SpectralInputs {
        SpectralInputs {
            omega: self.omega,
            lambda1: self.lambda1,
            lambda2: self.lambda2_abs,
            is_complete: self.complete,
            bfs_diameter: self.diameter_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphStats {
    pub threshold: f64,
    pub metric: GraphMetric,
    pub components: Vec<Vec<usize>>,
    pub per_class: Vec<ClassGraphStats>,
    /// Largest intra-class diameter, `None` if any class is disconnected.
    pub d_max: Option<usize>,
    pub intra_edges: usize,
    pub inter_edges: usize,
    pub intra_edge_fraction: f64,
    /// Set when the graph has no edges and the fraction defaulted to 1.
    pub no_edges: bool,
}

impl GraphStats {
    pub fn d_max_f64(&self) -> f64 {
        self.d_max.map_or(f64::INFINITY, |d| d as f64)
    }

    pub fn all_classes_connected(&self) -> bool {
        self.per_class.iter().all(|c| c.connected)
    }
}

pub fn graph_stats(g: &AugGraph, labels: &LabelSet) -> Result<GraphStats> {
    if labels.n() != g.n() {
        return Err(Error::Shape(format!(
            "{} vertices but {} labels",
            g.n(),
            labels.n()
        )));
    }
    labels.require_nonempty_classes()?;
    let y = labels.labels();
    let intra_edges = g.edges.iter().filter(|e| y[e.i] == y[e.j]).count();
    let inter_edges = g.edges.len() - intra_edges;

    let members = labels.members();
    let adj = g.adjacency();
    let per_class = members
        .par_iter()
        .enumerate()
        .map(|(k, verts)| {
            let sub = Subgraph::induced(&adj, verts);
            class_stats(k, &sub)
        })
        .collect::<Result<Vec<_>>>()?;

    let d_max = per_class
        .iter()
        .map(|c| c.diameter)
        .try_fold(0usize, |acc, d| d.map(|d| acc.max(d)));
    let no_edges = g.edges.is_empty();
    Ok(GraphStats {
        threshold: g.threshold,
        metric: g.metric,
        components: g.components(),
        per_class,
        d_max,
        intra_edges,
        inter_edges,
        intra_edge_fraction: if no_edges {
            1.0
        } else {
            intra_edges as f64 / g.edges.len() as f64
        },
        no_edges,
    })
}

/// Adjacency lists over local indices `0..n`.
#[derive(Clone, Debug)]
pub(crate) struct Subgraph {
    pub(crate) adj: Vec<Vec<usize>>,
}

impl Subgraph {
    fn induced(global: &[Vec<usize>], verts: &[usize]) -> Self {
        let mut local = vec![usize::MAX; global.len()];
        for (li, &v) in verts.iter().enumerate() {
            local[v] = li;
        }
        let adj = verts
            .iter()
            .map(|&v| {
                global[v]
                    .iter()
                    .filter_map(|&u| (local[u] != usize::MAX).then_some(local[u]))
                    .collect()
            })
            .collect();
        Self { adj }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn restrict(&self, verts: &[usize]) -> Self {
        Self::induced(&self.adj, verts)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n());
        for (v, ns) in self.adj.iter().enumerate() {
            for &u in ns {
                uf.union(v, u);
            }
        }
        uf.groups()
    }

    fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// All-pairs BFS; `None` if disconnected.
    pub(crate) fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for s in 0..self.n() {
            for d in self.bfs(s) {
                if d == usize::MAX {
                    return None;
                }
                best = best.max(d);
            }
        }
        Some(best)
    }

    pub(crate) fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.n()];
        for s in 0..self.n() {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adj[v] {
                    if color[u] == u8::MAX {
                        color[u] = 1 - color[v];
                        queue.push_back(u);
                    } else if color[u] == color[v] {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, ns) in out.iter_mut().zip(&self.adj) {
            *o = ns.iter().map(|&u| x[u]).sum();
        }
    }
}

fn normalize_in_place(x: &mut [f64]) -> f64 {
    let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > 0.0 {
        x.iter_mut().for_each(|v| *v /= len);
    }
    len
}

/// Power iteration for a symmetric operator whose dominant eigenvalue is
/// its largest. Returns `(eigenvalue, unit eigenvector)`.
fn power_iterate(
    n: usize,
    mut x: Vec<f64>,
    apply: impl Fn(&[f64], &mut [f64]),
    project: impl Fn(&mut [f64]),
    what: &str,
) -> Result<(f64, Vec<f64>)> {
    let mut y = vec![0.0; n];
    project(&mut x);
    if normalize_in_place(&mut x) == 0.0 {
        return Ok((0.0, x));
    }
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        apply(&x, &mut y);
        project(&mut y);
        let mu = dot(&x, &y);
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_TOL * mu.abs().max(1.0) {
            return Ok((mu, x));
        }
        std::mem::swap(&mut x, &mut y);
        if normalize_in_place(&mut x) == 0.0 {
            return Ok((0.0, x));
        }
    }
    Err(Error::Numeric {
        message: format!("power iteration for {what} did not converge"),
        residual,
        iterations: POWER_MAX_ITERS,
    })
}

/// Top adjacency eigenpair of a connected graph, Perron vector nonnegative.
pub(crate) fn perron(sub: &Subgraph) -> Result<(f64, Vec<f64>)> {
    let n = sub.n();
    // shifting by I keeps -lambda1 from competing on bipartite graphs
    let (mu, mut v) = power_iterate(
        n,
        vec![1.0; n],
        |x, y| {
            sub.matvec(x, y);
            y.iter_mut().zip(x).for_each(|(o, a)| *o += a);
        },
        |_| {},
        "lambda1",
    )?;
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    Ok((mu - 1.0, v))
}

/// Second largest absolute eigenvalue of a connected, non-bipartite graph,
/// given its Perron pair.
pub(crate) fn second_abs_eigenvalue(sub: &Subgraph, lambda1: f64, v: &[f64]) -> Result<f64> {
    let n = sub.n();
    if n < 2 {
        return Ok(0.0);
    }
    let project = |x: &mut [f64]| {
        let c = dot(x, v);
        x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
    };
    let deflated = |x: &[f64], y: &mut [f64]| {
        sub.matvec(x, y);
        let c = lambda1 * dot(v, x);
        y.iter_mut().zip(v).for_each(|(o, b)| *o -= c * b);
    };
    // fixed, non-symmetric start so no eigenvector is missed by symmetry
    let start: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5).collect();
    let scratch = RefCell::new(vec![0.0; n]);
    let (mu, _) = power_iterate(
        n,
        start,
        |x, y| {
            let mut t = scratch.borrow_mut();
            deflated(x, &mut t);
            deflated(&t, y);
        },
        project,
        "lambda2",
    )?;
    Ok(mu.max(0.0).sqrt())
}

fn class_stats(class: usize, sub: &Subgraph) -> Result<ClassGraphStats> {
    let size = sub.n();
    let edges = sub.edge_count();
    let complete = edges == size * (size.saturating_sub(1)) / 2;
    let bipartite = sub.is_bipartite();
    let comps = sub.components();
    let connected = comps.len() == 1;

    let (lambda1, lambda2_abs, omega) = if size == 1 {
        (0.0, 0.0, 1.0)
    } else if connected {
        let (l1, v) = perron(sub)?;
        let omega = v.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let l2 = if bipartite {
            l1
        } else {
            second_abs_eigenvalue(sub, l1, &v)?
        };
        (l1, l2.min(l1), omega)
    } else {
        // block-diagonal spectrum: the union of the component spectra
        let mut tops = Vec::new();
        let mut seconds: f64 = 0.0;
        for comp in &comps {
            let piece = sub.restrict(comp);
            if piece.n() == 1 {
                tops.push(0.0);
                continue;
            }
            let (l1, v) = perron(&piece)?;
            let l2 = if piece.is_bipartite() {
                l1
            } else {
                second_abs_eigenvalue(&piece, l1, &v)?
            };
            tops.push(l1);
            seconds = seconds.max(l2.min(l1));
        }
        tops.sort_by(|a, b| b.total_cmp(a));
        (tops[0], seconds.max(tops[1]), 0.0)
    };

    Ok(ClassGraphStats {
        class,
        size,
        edges,
        connected,
        diameter: if connected { sub.diameter() } else { None },
        lambda1,
        lambda2_abs,
        omega,
        bipartite,
        complete,
    })
}

/// Which of the bound assumptions hold for an encoder, plus the graph-side
/// inputs for [`crate::bounds`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub alpha: f64,
    pub label_consistent: bool,
    pub intra_class_connected: bool,
    pub disconnected_classes: Vec<usize>,
    pub epsilon: f64,
    pub zero_alignment: bool,
    pub balanced_classes: bool,
    pub d_max: Option<usize>,
    /// Spectral inputs of the class with the largest spectral diameter.
    pub worst_spectral: Option<SpectralInputs>,
    pub k: usize,
}

impl AssumptionReport {
    /// Completes the graph-side fields with the loss measurements.
    pub fn bound_inputs(&self, l_contr: f64, cond_variance: f64, m: usize) -> BoundInputs {
        BoundInputs {
            cond_variance,
            alpha: self.alpha,
            epsilon: self.epsilon,
            diameter: self.d_max.map_or(f64::INFINITY, |d| d as f64),
            spectral: self.worst_spectral,
            ..BoundInputs::new(l_contr, m, self.k)
        }
    }
}

/// Class frequencies within this distance of `1/K` count as balanced.
pub const BALANCE_TOL: f64 = 0.02;

pub fn assumption_report(
    g: &AugGraph,
    labels: &LabelSet,
    pairs_alpha: f64,
    epsilon: f64,
) -> Result<AssumptionReport> {
    let stats = graph_stats(g, labels)?;
    let disconnected_classes: Vec<usize> = stats
        .per_class
        .iter()
        .filter(|c| !c.connected)
        .map(|c| c.class)
        .collect();
    let worst_spectral = stats
        .per_class
        .iter()
        .map(ClassGraphStats::spectral_inputs)
        .max_by(|a, b| {
            bounds::spectral_diameter(a)
                .0
                .total_cmp(&bounds::spectral_diameter(b).0)
        });
    Ok(AssumptionReport {
        alpha: pairs_alpha,
        label_consistent: pairs_alpha == 0.0,
        intra_class_connected: disconnected_classes.is_empty(),
        disconnected_classes,
        epsilon,
        zero_alignment: epsilon == 0.0,
        balanced_classes: bounds::require_balanced(&labels.class_counts(), BALANCE_TOL).is_ok(),
        d_max: stats.d_max,
        worst_spectral,
        k: labels.k(),
    })
}

//! Property tests against independent oracles.

use augoverlap::auggraph::{build_graph, graph_stats, AugGraph, GraphMetric};
use augoverlap::bounds::{bound_curve, coverage_probability, coverage_probability_inclusion_exclusion};
use augoverlap::data::{
    embeddings_to_string, labels_to_string, parse_embeddings, parse_labels, parse_views, views_to_string,
    EmbeddingSet, LabelSet, PositivePairs, ViewSet,
};
use augoverlap::geomsim::r_mc_linear;
use augoverlap::losses::{infonce_adjusted, mce_adjusted};
use augoverlap::metrics::{acr, gacr, MetricConfig, StatSelector};
use proptest::prelude::*;

fn matrix(max_n: usize, max_dim: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max_n, 1..=max_dim).prop_flat_map(|(n, d)| {
        (Just(n), Just(d), prop::collection::vec(-10.0f64..10.0, n * d))
    })
}

fn nonzero_rows(max_n: usize, max_dim: usize) -> impl Strategy<Value = EmbeddingSet> {
    matrix(max_n, max_dim)
        .prop_filter("rows must be nonzero", |(_, d, v)| {
            v.chunks(*d).all(|r| r.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        })
        .prop_map(|(n, d, v)| EmbeddingSet::new(n, d, v).unwrap())
}

fn views(max_n: usize, max_c: usize, max_dim: usize) -> impl Strategy<Value = ViewSet> {
    (2..=max_n, 2..=max_c, 1..=max_dim).prop_flat_map(|(n, c, d)| {
        prop::collection::vec(-1.0f64..1.0, n * c * d)
            .prop_map(move |v| ViewSet::new(n, c, d, v).unwrap())
    })
}

/// Random graph as an edge list over `n` vertices.
fn graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (Just(n), prop::collection::vec(any::<bool>(), m)).prop_map(move |(n, keep)| {
            let edges = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect();
            (n, edges)
        })
    })
}

fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let max = d.iter().flatten().copied().max().unwrap_or(0);
    (max < inf).then_some(max)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Orthogonal matrix from Gram-Schmidt on `raw`.
fn orthogonal(d: usize, raw: &[f64]) -> Option<Vec<Vec<f64>>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut v = raw[i * d..(i + 1) * d].to_vec();
        for u in &q {
            let c: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-3 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= len);
        q.push(v);
    }
    Some(q)
}

fn relative_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_survive_a_text_round_trip((n, d, v) in matrix(8, 6)) {
        let e = EmbeddingSet::new(n, d, v).unwrap();
        let text = embeddings_to_string(&e);
        let back = parse_embeddings(&text).unwrap();
        prop_assert_eq!((back.n(), back.dim()), (n, d));
        for (a, b) in e.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
        prop_assert_eq!(embeddings_to_string(&back), text);
    }

    #[test]
    fn views_and_labels_survive_a_text_round_trip(v in views(5, 4, 3), k in 1usize..5, seed in any::<u64>()) {
        let text = views_to_string(&v);
        let back = parse_views(&text).unwrap();
        prop_assert_eq!((back.n(), back.c(), back.dim()), (v.n(), v.c(), v.dim()));
        prop_assert_eq!(views_to_string(&back), text);

        let labels: Vec<usize> = (0..v.n()).map(|i| ((seed >> (i % 60)) as usize + i) % k).collect();
        let l = LabelSet::new(labels, k).unwrap();
        prop_assert_eq!(parse_labels(&labels_to_string(&l)).unwrap(), l);
    }

    #[test]
    fn normalize_gives_unit_rows_and_is_idempotent(e in nonzero_rows(8, 6)) {
        let once = e.normalize().unwrap();
        prop_assert!(once.is_normalized());
        for row in once.rows() {
            let len = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((len - 1.0).abs() < 1e-12);
        }
        let twice = once.normalize().unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn losses_split_into_bounded_terms(
        left in nonzero_rows(6, 4),
        shift in prop::collection::vec(-1.0f64..1.0, 24),
        m in 1usize..6,
        seed in any::<u64>(),
    ) {
        let (n, d) = (left.n(), left.dim());
        prop_assume!(n >= 2);
        let right: Vec<f64> = left.values().iter().zip(shift.iter().cycle()).map(|(a, s)| a + s).collect();
        prop_assume!(right.chunks(d).all(|r| r.iter().map(|x| x * x).sum::<f64>() > 1e-6));
        let pairs = PositivePairs::new(left.normalize().unwrap(), EmbeddingSet::new(n, d, right).unwrap().normalize().unwrap()).unwrap();
        let l = infonce_adjusted(&pairs, m, 4, seed).unwrap();
        let (pos, neg) = l.components.unwrap();
        prop_assert!((l.value - (pos + neg)).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&pos));
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&neg));

        let labels = LabelSet::new((0..n).map(|i| i % 2).collect(), 2).unwrap();
        let mce = mce_adjusted(&pairs.left, &labels).unwrap();
        let (p, q) = mce.components.unwrap();
        prop_assert!((mce.value - (p + q)).abs() < 1e-12);
        prop_assert!(mce.value >= -2.0 - 1e-12 && mce.value <= 2.0 + 1e-12);
    }

    #[test]
    fn edges_grow_with_the_threshold(v in views(8, 3, 3), t1 in 0.01f64..1.5, dt in 0.0f64..1.0) {
        let small = build_graph(&v, t1, GraphMetric::Euclidean).unwrap();
        let large = build_graph(&v, t1 + dt, GraphMetric::Euclidean).unwrap();
        let big: std::collections::HashSet<(usize, usize)> = large.edges().iter().map(|e| (e.i, e.j)).collect();
        prop_assert!(small.edges().iter().all(|e| big.contains(&(e.i, e.j))));
        prop_assert!(small.edges().iter().all(|e| e.min_view_distance <= t1));
    }

    #[test]
    fn bfs_diameter_matches_floyd_warshall((n, edges) in graph(12)) {
        let g = AugGraph::from_edges(n, &edges).unwrap();
        let stats = graph_stats(&g, &LabelSet::new(vec![0; n], 1).unwrap()).unwrap();
        prop_assert_eq!(stats.per_class[0].diameter, floyd_warshall(n, &edges));
    }

    #[test]
    fn spectrum_matches_jacobi((n, edges) in graph(10)) {
        prop_assume!(floyd_warshall(n, &edges).is_some());
        let g = AugGraph::from_edges(n, &edges).unwrap();
        let stats = graph_stats(&g, &LabelSet::new(vec![0; n], 1).unwrap()).unwrap();
        let c = &stats.per_class[0];
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j) in &edges {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
        let ev = jacobi_eigenvalues(a);
        prop_assert!((c.lambda1 - ev[0]).abs() < 1e-6, "lambda1 {} vs {}", c.lambda1, ev[0]);
        let second = ev[1..].iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!((c.lambda2_abs - second).abs() < 1e-5, "lambda2 {} vs {}", c.lambda2_abs, second);
    }

    #[test]
    fn confusion_ratios_are_isometry_invariant(v in views(6, 3, 3), raw in prop::collection::vec(-1.0f64..1.0, 9), shift in prop::collection::vec(-5.0f64..5.0, 3)) {
        let d = v.dim();
        let q = orthogonal(d, &raw[..d * d]);
        prop_assume!(q.is_some());
        let q = q.unwrap();
        let moved: Vec<f64> = v
            .values()
            .chunks(d)
            .flat_map(|x| {
                let q = &q;
                let shift = &shift;
                (0..d).map(move |r| q[r].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift[r])
            })
            .collect();
        let w = ViewSet::new(v.n(), v.c(), d, moved).unwrap();
        // ties under rounding can flip single indicators; compare away from ties
        let cfg = MetricConfig::new(StatSelector::Mean, StatSelector::Median, 1);
        let tol = 1.0 / (v.n() * v.c()) as f64 + 1e-12;
        prop_assert!((acr(&v).unwrap() - acr(&w).unwrap()).abs() <= tol);
        prop_assert!((gacr(&v, &cfg).unwrap() - gacr(&w, &cfg).unwrap()).abs() <= tol);
    }

    #[test]
    fn gacr_max_min_one_is_acr(v in views(7, 4, 3)) {
        prop_assert_eq!(gacr(&v, &MetricConfig::ACR).unwrap(), acr(&v).unwrap());
    }

    #[test]
    fn doubling_n_scales_the_linear_threshold(d in 2usize..5, n in 50usize..5000, s in 0.5f64..10.0) {
        let a = r_mc_linear(d, n, s).unwrap();
        let b = r_mc_linear(d, 2 * n, s).unwrap();
        let nf = n as f64;
        let expected = ((2.0 * nf).ln() / nf.ln() / 2.0).powf(1.0 / d as f64);
        prop_assert!(relative_eq(b / a, expected, 1e-10));
    }

    #[test]
    fn coverage_dp_matches_inclusion_exclusion(draws in 1usize..12, k in 1usize..8) {
        let dp = coverage_probability(draws, k);
        let ie = coverage_probability_inclusion_exclusion(draws, k);
        prop_assert!((dp - ie).abs() < 1e-10, "{dp} vs {ie}");
        prop_assert!((0.0..=1.0).contains(&dp));
    }

    #[test]
    fn our_curve_decreases_and_brackets(l in -2.0f64..2.0, var in 0.0f64..2.0, k in 2usize..20) {
        let grid: Vec<usize> = (0..10).map(|p| 1 << p).collect();
        let rows = bound_curve(l, var, k, &grid).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].ours_upper < w[0].ours_upper);
            prop_assert!(w[1].ours_lower > w[0].ours_lower);
        }
        prop_assert!(rows.iter().all(|r| r.ours_lower <= r.ours_upper));
        prop_assert!(rows.windows(2).all(|w| w[0].bao == w[1].bao));
    }
}

//! Downstream risk bounds in terms of the adjusted contrastive loss, and the
//! classical upper bounds they are compared against.
//!
//! Every bound is a closed-form expression in a handful of measured
//! quantities collected in [`BoundInputs`]. Infinite inputs produce infinite
//! bounds; no function here returns NaN.

use serde::Serialize;
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};

/// The Monte-Carlo error of the negative term shrinks like `E / sqrt(M)`.
pub const E: f64 = std::f64::consts::E;

/// Smoothness constant of log-sum-exp on the unit sphere, used in the lower
/// bounds as the `1/2` in front of the conditional variance.
pub const SMOOTHNESS_L: f64 = 0.5;

/// Upper limit on the conditional variance of unit-norm features.
pub const MAX_COND_VARIANCE: f64 = 2.0;

/// `2 ln cosh 1`, the additive slack of the Bao et al. bound.
pub fn bao_slack() -> f64 {
    2.0 * 1.0f64.cosh().ln()
}

/// Spectral statistics of the intra-class subgraphs, worst case over classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralInputs {
    /// Smallest entry of the unit-norm Perron vector, 0 when disconnected.
    pub omega: f64,
    pub lambda1: f64,
    /// Second largest absolute adjacency eigenvalue.
    pub lambda2: f64,
    /// Whether the subgraph is complete, which certifies diameter 1.
    pub is_complete: bool,
    /// BFS diameter, used as a fallback when the formula is undefined.
    pub bfs_diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub l_contr: f64,
    pub l_mce: Option<f64>,
    pub cond_variance: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// Intra-class graph diameter D, possibly infinite.
    pub diameter: f64,
    pub spectral: Option<SpectralInputs>,
    pub m: usize,
    pub k: usize,
}

impl BoundInputs {
    /// Inputs for a perfectly aligned, label-consistent encoder with zero
    /// conditional variance; adjust fields with struct update syntax.
    pub fn new(l_contr: f64, m: usize, k: usize) -> Self {
        Self {
            l_contr,
            l_mce: None,
            cond_variance: 0.0,
            alpha: 0.0,
            epsilon: 0.0,
            diameter: f64::INFINITY,
            spectral: None,
            m,
            k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Argument("M must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Argument("K must be at least 1".into()));
        }
        if !self.l_contr.is_finite() {
            return Err(Error::Argument("contrastive loss must be finite".into()));
        }
        if !(0.0..=MAX_COND_VARIANCE).contains(&self.cond_variance) {
            return Err(Error::Argument(format!(
                "conditional variance {} outside [0, {MAX_COND_VARIANCE}]",
                self.cond_variance
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Argument(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Argument(format!("epsilon {} is negative", self.epsilon)));
        }
        if self.diameter.is_nan() || self.diameter < 0.0 {
            return Err(Error::Argument(format!("diameter {} is negative", self.diameter)));
        }
        if let Some(s) = &self.spectral {
            if !(0.0..=1.0).contains(&s.omega) {
                return Err(Error::Argument(format!("omega {} outside [0, 1]", s.omega)));
            }
            if !(s.lambda2 >= 0.0 && s.lambda1 >= s.lambda2) {
                return Err(Error::Argument(format!(
                    "need lambda1 >= lambda2 >= 0, got {} and {}",
                    s.lambda1, s.lambda2
                )));
            }
        }
        Ok(())
    }

    fn mc_slack(&self) -> f64 {
        E / (self.m as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }
}

/// Why the spectral diameter estimate took a special branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralNote {
    /// `omega == 0`: some intra-class subgraph is disconnected.
    Disconnected,
    /// `lambda2 == lambda1`, e.g. a bipartite subgraph.
    NoEigengap,
    /// Single vertex.
    Trivial,
    /// Complete graph, certified one hop.
    CompleteGraph,
    /// `lambda2 == 0` on a non-complete graph, BFS diameter used instead.
    BfsFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralBound {
    pub bound: Bound,
    pub d_hat: f64,
    pub note: Option<SpectralNote>,
}

/// Bounds under conditional independence of positives given the label.
pub fn bounds_ci(inp: &BoundInputs) -> Result<Bound> {
    inp.validate()?;
    let slack = inp.mc_slack();
    Ok(Bound {
        lower: inp.l_contr - SMOOTHNESS_L * inp.cond_variance - slack,
        upper: inp.l_contr + slack,
    })
}

/// Bounds without conditional independence, paying for label noise `alpha`.
pub fn bounds_no_ci(inp: &BoundInputs) -> Result<Bound> {
    inp.validate()?;
    let slack = inp.mc_slack();
    let sd = inp.cond_variance.sqrt();
    let label = 4.0 * inp.alpha.sqrt();
    Ok(Bound {
        lower: inp.l_contr - 2.0 * sd - SMOOTHNESS_L * inp.cond_variance - label - slack,
        upper: inp.l_contr + 2.0 * sd + label + slack,
    })
}

/// Bounds through the intra-class graph diameter `D` and alignment `epsilon`.
pub fn bounds_radius(inp: &BoundInputs) -> Result<Bound> {
    inp.validate()?;
    Ok(radius_with(inp, inp.diameter))
}

fn radius_with(inp: &BoundInputs, diameter: f64) -> Bound {
    // An exactly aligned encoder closes the gap even on an infinite graph.
    let de = if inp.epsilon == 0.0 {
        0.0
    } else {
        diameter * inp.epsilon
    };
    if de.is_infinite() {
        return Bound::unbounded();
    }
    let slack = inp.mc_slack();
    let label = 4.0 * inp.alpha.sqrt();
    Bound {
        lower: inp.l_contr - (2.0 + de / 2.0) * de - label - slack,
        upper: inp.l_contr + 2.0 * de + label + slack,
    }
}

/// Diameter estimate `log((1 - w^2) / w^2) / log(l1 / l2)`, clamped at 0.
pub fn spectral_diameter(s: &SpectralInputs) -> (f64, Option<SpectralNote>) {
    if s.omega <= 0.0 {
        return (f64::INFINITY, Some(SpectralNote::Disconnected));
    }
    if s.omega >= 1.0 {
        return (0.0, Some(SpectralNote::Trivial));
    }
    if s.lambda2 >= s.lambda1 {
        return (f64::INFINITY, Some(SpectralNote::NoEigengap));
    }
    if s.is_complete {
        return (1.0, Some(SpectralNote::CompleteGraph));
    }
    if s.lambda2 == 0.0 {
        log::warn!(
            "spectral estimate undefined with lambda2 = 0 on a non-complete graph, \
             using BFS diameter {}",
            s.bfs_diameter
        );
        return (s.bfs_diameter, Some(SpectralNote::BfsFallback));
    }
    let w2 = s.omega * s.omega;
    let d = ((1.0 - w2) / w2).ln() / (s.lambda1 / s.lambda2).ln();
    (d.max(0.0), None)
}

/// Radius bounds with `D` replaced by the spectral estimate.
pub fn bounds_spectral(inp: &BoundInputs) -> Result<SpectralBound> {
    inp.validate()?;
    let s = inp
        .spectral
        .ok_or_else(|| Error::Argument("spectral inputs missing".into()))?;
    let (d_hat, note) = spectral_diameter(&s);
    let bound = if note == Some(SpectralNote::Disconnected) {
        Bound::unbounded()
    } else {
        radius_with(inp, d_hat)
    };
    Ok(SpectralBound { bound, d_hat, note })
}

/// Probability that at least one of `m` uniform draws from `k` classes hits
/// the anchor's class, `1 - (1 - 1/k)^m`.
pub fn collision_probability(m: usize, k: usize) -> f64 {
    1.0 - no_collision_probability(m, k)
}

fn no_collision_probability(m: usize, k: usize) -> f64 {
    (1.0 - 1.0 / k as f64).powf(m as f64)
}

/// Probability that `draws` uniform draws cover all `k` classes, by
/// inclusion-exclusion. Cancels badly for large `k`; see [`coverage_probability`].
pub fn coverage_probability_inclusion_exclusion(draws: usize, k: usize) -> f64 {
    let kf = k as f64;
    let mut binom = 1.0;
    let mut total = 0.0;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * ((kf - j as f64) / kf).powf(draws as f64);
    }
    total
}

/// Same quantity by dynamic programming over the number of distinct classes
/// seen so far; every term is nonnegative.
pub fn coverage_probability(draws: usize, k: usize) -> f64 {
    let kf = k as f64;
    let mut p = vec![0.0; k + 1];
    p[0] = 1.0;
    for _ in 0..draws {
        for j in (1..=k).rev() {
            p[j] = p[j] * j as f64 / kf + p[j - 1] * (k - j + 1) as f64 / kf;
        }
        p[0] = 0.0;
    }
    p[k]
}

/// `E log(Col + 1)` with `Col ~ Binomial(m, 1/k)`.
pub fn expected_log_collisions(m: usize, k: usize) -> f64 {
    let dist = Binomial::new(1.0 / k as f64, m as u64).expect("valid binomial parameters");
    (0..=m as u64)
        .map(|c| dist.pmf(c) * ((c + 1) as f64).ln())
        .sum()
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Baselines {
    pub arora: f64,
    pub nozawa: f64,
    pub ash: f64,
    pub bao: f64,
    pub ours: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// The four classical upper bounds plus ours, all evaluated verbatim on the
/// same unsupervised loss `l_unsup` with balanced classes.
pub fn baseline_bounds(inp: &BoundInputs, l_unsup: f64) -> Result<Baselines> {
    inp.validate()?;
    if inp.k < 2 {
        return Err(Error::Argument("baselines need K >= 2".into()));
    }
    let (m, k) = (inp.m, inp.k);
    let one_minus_tau = no_collision_probability(m, k);
    let v = coverage_probability(m + 1, k);
    let elog = expected_log_collisions(m, k);
    let h = harmonic(k - 1);

    // tau_M numerically 1: the bound degenerates and is reported as vacuous.
    let arora = if one_minus_tau > 0.0 {
        ratio(l_unsup - elog, one_minus_tau * v)
    } else {
        f64::INFINITY
    };
    let nozawa = ratio(2.0 * l_unsup - elog, v);
    let ash = if one_minus_tau > 0.0 {
        (2.0 / one_minus_tau) * (2.0 * (k - 1) as f64 * h / m as f64) * (l_unsup - elog)
    } else {
        f64::INFINITY
    };
    Ok(Baselines {
        arora,
        nozawa,
        ash,
        bao: l_unsup + bao_slack(),
        ours: l_unsup + inp.mc_slack(),
    })
}

/// Every bound for one encoder and one `(M, K)` setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub our_ci_upper: f64,
    pub our_ci_lower: f64,
    pub our_noci_upper: f64,
    pub our_noci_lower: f64,
    pub radius_upper: f64,
    pub radius_lower: f64,
    /// Vacuous (plus/minus infinity) when no spectral inputs were given.
    pub spectral_upper: f64,
    pub spectral_lower: f64,
    pub spectral_d_hat: Option<f64>,
    pub spectral_note: Option<SpectralNote>,
    pub baseline_arora: f64,
    pub baseline_nozawa: f64,
    pub baseline_ash: f64,
    pub baseline_bao: f64,
}

pub fn bound_report(inp: &BoundInputs, l_unsup: f64) -> Result<BoundReport> {
    let ci = bounds_ci(inp)?;
    let noci = bounds_no_ci(inp)?;
    let radius = bounds_radius(inp)?;
    let spectral = inp.spectral.map(|_| bounds_spectral(inp)).transpose()?;
    let base = baseline_bounds(inp, l_unsup)?;
    let sb = spectral.map(|s| s.bound).unwrap_or(Bound::unbounded());
    Ok(BoundReport {
        our_ci_upper: ci.upper,
        our_ci_lower: ci.lower,
        our_noci_upper: noci.upper,
        our_noci_lower: noci.lower,
        radius_upper: radius.upper,
        radius_lower: radius.lower,
        spectral_upper: sb.upper,
        spectral_lower: sb.lower,
        spectral_d_hat: spectral.map(|s| s.d_hat),
        spectral_note: spectral.and_then(|s| s.note),
        baseline_arora: base.arora,
        baseline_nozawa: base.nozawa,
        baseline_ash: base.ash,
        baseline_bao: base.bao,
    })
}

/// One row of the bound-versus-M comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub m: usize,
    pub ours_upper: f64,
    pub ours_lower: f64,
    pub arora: f64,
    pub nozawa: f64,
    pub ash: f64,
    pub bao: f64,
}

pub const CURVE_CSV_HEADER: &str = "M,ours_upper,ours_lower,arora,nozawa,ash,bao";

impl CurveRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.m, self.ours_upper, self.ours_lower, self.arora, self.nozawa, self.ash, self.bao
        )
    }
}

/// Bound curves over `m_grid` for an encoder with adjusted contrastive loss
/// `l_adj`, all reported on the adjusted (mean-score) scale.
///
/// The Arora, Nozawa and Ash bounds are stated for the raw sum-score losses,
/// so they are fed `l_adj + log M` and their result is shifted back by
/// `-log K`. Bao's bound and ours are already on the adjusted scale.
pub fn bound_curve(l_adj: f64, cond_variance: f64, k: usize, m_grid: &[usize]) -> Result<Vec<CurveRow>> {
    m_grid
        .iter()
        .map(|&m| {
            let inp = BoundInputs {
                cond_variance,
                ..BoundInputs::new(l_adj, m, k)
            };
            let ci = bounds_ci(&inp)?;
            let raw = baseline_bounds(&inp, l_adj + (m as f64).ln())?;
            let adj = baseline_bounds(&inp, l_adj)?;
            let shift = (k as f64).ln();
            Ok(CurveRow {
                m,
                ours_upper: ci.upper,
                ours_lower: ci.lower,
                arora: raw.arora - shift,
                nozawa: raw.nozawa - shift,
                ash: raw.ash - shift,
                bao: adj.bao,
            })
        })
        .collect()
}

/// Rejects label distributions that stray from uniform by more than `tol`
/// in any class frequency; the collision formulas assume balance.
pub fn require_balanced(counts: &[usize], tol: f64) -> Result<()> {
    let n: usize = counts.iter().sum();
    let k = counts.len() as f64;
    for (c, &count) in counts.iter().enumerate() {
        let freq = count as f64 / n as f64;
        if (freq - 1.0 / k).abs() > tol {
            return Err(Error::Argument(format!(
                "class {c} has frequency {freq:.4}, expected {:.4} for balanced classes",
                1.0 / k
            )));
        }
    }
    Ok(())
}

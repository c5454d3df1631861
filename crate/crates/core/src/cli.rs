//! Command-line front end and the reproduction recipes.
//!
//! Every subcommand writes its result to stdout, or into `--out` when given,
//! together with `manifest.json` echoing the resolved configuration. Without
//! `--out` the manifest goes to stderr.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::auggraph::{build_graph, graph_stats, GraphMetric};
use crate::bounds::{self, bound_curve, BoundInputs, CurveRow, CURVE_CSV_HEADER};
use crate::data;
use crate::error::{Error, Result};
use crate::geomsim::{self, GeomConfig, NoiseKind, SweepRow, SWEEP_CSV_HEADER};
use crate::losses;
use crate::metrics::{self, MetricConfig, StatSelector};
use crate::trainer::{self, Activation, Optimizer, SphereDataset, SyntheticRun, TrainConfig};

const SCHEMAS: &str = "\
CSV schemas:
  bounds, repro fig4   M,ours_upper,ours_lower,arora,nozawa,ash,bao
  simulate             r,connected_fraction,mean_components,D_max
  graph                i,j,min_view_distance
  metrics              a1,a2,k,gacr_init,gacr_final,garc
  train                epoch,loss
  repro fig6           r,accuracy,final_loss,acr_init,acr_final,arc,gacr_init,gacr_final,garc
  repro fig7           r,edges,components,intra_connected,D_max,inter_edges
  repro lemma42        M,mc_gap,mc_bound,l_mce,l_contr,ci_lower,ci_upper
  repro prop53         n,k,m,accuracy,chance
Infinite values are written as inf in CSV and null in JSON.

Environment:
  AUGOVERLAP_THREADS   worker threads, 0 or unset for all cores";

#[derive(Parser, Debug, Serialize)]
#[command(name = "augoverlap", version, about = "Contrastive-learning bounds, augmentation graphs and representation metrics", after_long_help = SCHEMAS)]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Bound curves over a grid of negative-sample counts.
    Bounds(BoundsArgs),
    /// Augmentation-graph statistics for a VIEWS file.
    Graph(GraphArgs),
    /// ACR, ARC, GACR and GARC for final and initial encoder views.
    Metrics(MetricsArgs),
    /// Connectivity sweep of random geometric graphs on the sphere.
    Simulate(SimulateArgs),
    /// Train the sphere encoder and report its downstream accuracy.
    Train(TrainArgs),
    /// Conditional-independence ratio of labelled positive pairs.
    CiRatio(CiRatioArgs),
    /// Named end-to-end reproduction recipes.
    Repro(ReproArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    /// Adjusted contrastive loss of the encoder.
    #[arg(long, allow_negative_numbers = true)]
    pub l_adj: f64,
    /// Conditional variance E||f(x) - mu_y||^2.
    #[arg(long, default_value_t = 0.0)]
    pub cond_variance: f64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Comma-separated negative-sample counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_grid: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphArgs {
    #[arg(long)]
    pub views: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value = "euclidean")]
    pub metric: GraphMetric,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub views_final: PathBuf,
    #[arg(long)]
    pub views_init: PathBuf,
    /// Within-anchor statistic; every selector when absent.
    #[arg(long)]
    pub a1: Option<StatSelector>,
    /// Other-anchor statistic; every selector when absent.
    #[arg(long)]
    pub a2: Option<StatSelector>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Sphere dimension; d = 2 samples two polar caps, other values the
    /// whole sphere.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Area of each cap (d = 2 only).
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub noise_r: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f64,
    /// Negatives per anchor, the rest of the batch when absent.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = TrainConfig::default().noise_r)]
    pub noise_r: f64,
    #[arg(long, default_value = "symmetric")]
    pub noise: NoiseKind,
    #[arg(long, default_value_t = TrainConfig::default().hidden_size)]
    pub hidden_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().m_out)]
    pub m_out: usize,
    #[arg(long, default_value = "sin")]
    pub activation: Activation,
    #[arg(long, default_value_t = TrainConfig::default().init_scale)]
    pub init_scale: f64,
    #[arg(long, default_value_t = TrainConfig::default().low_units)]
    pub low_units: usize,
    #[arg(long, default_value_t = TrainConfig::default().low_scale)]
    pub low_scale: f64,
    #[arg(long, default_value_t = TrainConfig::default().optimizer)]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = trainer::DEFAULT_TRAIN)]
    pub n_train: usize,
    #[arg(long, default_value_t = trainer::DEFAULT_TEST)]
    pub n_test: usize,
    /// Write encoded train and test sets as EMB and LAB files into --out.
    #[arg(long, requires = "out")]
    pub dump: bool,
}

impl TrainArgs {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            m: self.m,
            noise_r: self.noise_r,
            noise: self.noise,
            hidden_size: self.hidden_size,
            m_out: self.m_out,
            activation: self.activation,
            init_scale: self.init_scale,
            low_units: self.low_units,
            low_scale: self.low_scale,
            optimizer: self.optimizer,
            seed,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CiRatioArgs {
    /// Anchor and positive EMB files.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"], required = true)]
    pub pairs: Vec<PathBuf>,
    /// LAB file for both sides, or one per side.
    #[arg(long, num_args = 1..=2, value_names = ["LEFT", "RIGHT"], required = true)]
    pub labels: Vec<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReproArgs {
    #[command(subcommand)]
    pub recipe: Recipe,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum Recipe {
    /// Bound curves on synthetic conditionally independent data.
    Fig4(Fig4Args),
    /// Accuracy and confusion metrics across training noise levels.
    Fig6(Fig6Args),
    /// Augmentation-graph statistics across noise levels.
    Fig7(Fig7Args),
    /// Perfectly aligned features with chance-level accuracy.
    Prop53(Prop53Args),
    /// Monte Carlo error of the negative term and the CI sandwich.
    Lemma42(Lemma42Args),
}

#[derive(Args, Debug, Serialize)]
pub struct Fig4Args {
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64,128,256,512,1024,2048,4096")]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Fig6Args {
    #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.05,0.08,0.2,0.5,1,1.5")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = trainer::DEFAULT_TRAIN)]
    pub n_train: usize,
    #[arg(long, default_value_t = trainer::DEFAULT_TEST)]
    pub n_test: usize,
    /// Noise level of the views the metrics are computed on.
    #[arg(long, default_value_t = EVAL_NOISE)]
    pub eval_noise: f64,
    /// Test anchors the metrics use.
    #[arg(long, default_value_t = METRIC_ANCHORS)]
    pub anchors: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Fig7Args {
    #[arg(long, value_delimiter = ',', default_value = "0,0.08,0.2,0.5,1,1.5")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = GRAPH_ANCHORS)]
    pub anchors: usize,
    #[arg(long, default_value_t = GRAPH_VIEWS)]
    pub views: usize,
    #[arg(long, default_value_t = GRAPH_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct Prop53Args {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 32)]
    pub m: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Lemma42Args {
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64,256")]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
}

/// Spread of the synthetic conditionally independent classes.
pub const CI_SPREAD: f64 = 1.0;
/// Negatives used to measure the loss fed to the bound curves.
pub const CURVE_LOSS_M: usize = 64;
/// Negative-term draws per anchor in the Monte Carlo estimates.
pub const MC_TRIALS: usize = 8;
pub const EVAL_NOISE: f64 = 0.2;
pub const METRIC_ANCHORS: usize = 200;
pub const GRAPH_ANCHORS: usize = 200;
pub const GRAPH_VIEWS: usize = 20;
pub const GRAPH_THRESHOLD: f64 = 0.2;

/// Bound curves for synthetic CI data; the measured loss is the adjusted
/// contrastive loss with [`CURVE_LOSS_M`] negatives.
pub fn fig4_curve(m_grid: &[usize], k: usize, n: usize, dim: usize, seed: u64) -> Result<Vec<CurveRow>> {
    if m_grid.is_empty() {
        return Err(Error::Argument("empty M grid".into()));
    }
    let pairs = geomsim::gaussian_ci_pairs(n, k, dim, CI_SPREAD, seed)?;
    let (labels, _) = pairs.labels()?;
    let l_adj = losses::infonce_adjusted(&pairs, CURVE_LOSS_M, 1, seed)?.value;
    let var = losses::class_stats(&pairs.left, labels)?.cond_variance;
    bound_curve(l_adj, var, k, m_grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaRow {
    pub m: usize,
    /// `|L_MC - L_mCE^-|` averaged over seeds.
    pub mc_gap: f64,
    pub mc_bound: f64,
    /// Measured on the base seed.
    pub l_mce: f64,
    pub l_contr: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl LemmaRow {
    pub const CSV_HEADER: &'static str = "M,mc_gap,mc_bound,l_mce,l_contr,ci_lower,ci_upper";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.m, self.mc_gap, self.mc_bound, self.l_mce, self.l_contr, self.ci_lower, self.ci_upper
        )
    }
}

/// Monte Carlo gap over `seeds` data sets, and the CI sandwich on the
/// data set of `seed`.
pub fn lemma42_rows(m_grid: &[usize], seeds: usize, n: usize, k: usize, dim: usize, seed: u64) -> Result<Vec<LemmaRow>> {
    if seeds == 0 || m_grid.is_empty() {
        return Err(Error::Argument("need at least one seed and one M".into()));
    }
    let gaps = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let ds = seed.wrapping_add(s);
            let pairs = geomsim::gaussian_ci_pairs(n, k, dim, CI_SPREAD, ds)?;
            let (labels, _) = pairs.labels()?;
            let neg = losses::mce_adjusted(&pairs.left, labels)?
                .negative()
                .expect("split loss");
            m_grid
                .iter()
                .map(|&m| Ok((losses::mc_negative(&pairs.left, labels, m, MC_TRIALS, ds)? - neg).abs()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = geomsim::gaussian_ci_pairs(n, k, dim, CI_SPREAD, seed)?;
    let (labels, _) = pairs.labels()?;
    let l_mce = losses::mce_adjusted(&pairs.left, labels)?.value;
    let var = losses::class_stats(&pairs.left, labels)?.cond_variance;
    m_grid
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let l_contr = losses::infonce_adjusted(&pairs, m, 1, seed)?.value;
            let inp = BoundInputs {
                cond_variance: var,
                l_mce: Some(l_mce),
                ..BoundInputs::new(l_contr, m, k)
            };
            let ci = bounds::bounds_ci(&inp)?;
            Ok(LemmaRow {
                m,
                mc_gap: gaps.iter().map(|g| g[j]).sum::<f64>() / seeds as f64,
                mc_bound: bounds::E / (m as f64).sqrt(),
                l_mce,
                l_contr,
                ci_lower: ci.lower,
                ci_upper: ci.upper,
            })
        })
        .collect()
}

/// Evenly spaced indices, so class-ordered data stays balanced.
fn spread_indices(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    (0..count).map(|i| i * n / count).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub acr_init: f64,
    pub acr_final: f64,
    pub arc: Option<f64>,
    pub gacr_init: f64,
    pub gacr_final: f64,
    pub garc: Option<f64>,
}

/// GACR variant reported by the sweep.
pub const SWEEP_GACR: MetricConfig = MetricConfig {
    a1: StatSelector::Mean,
    a2: StatSelector::Mean,
    k: 1,
};

/// Confusion metrics of one trained encoder on views of test anchors.
pub fn sweep_metrics(run: &SyntheticRun, data: &SphereDataset, eval_noise: f64, anchors: usize, seed: u64) -> Result<SweepMetrics> {
    let idx = spread_indices(data.test.n(), anchors);
    let points = data.test.select(&idx)?;
    let views = geomsim::augment_with(&points, eval_noise, metrics::DEFAULT_VIEWS, seed, NoiseKind::Symmetric)?;
    let fin = run.outcome.encoder.encode_views(&views)?;
    let init = run.outcome.initial_encoder.encode_views(&views)?;
    let acr_init = metrics::acr(&init)?;
    let acr_final = metrics::acr(&fin)?;
    let gacr_init = metrics::gacr(&init, &SWEEP_GACR)?;
    let gacr_final = metrics::gacr(&fin, &SWEEP_GACR)?;
    Ok(SweepMetrics {
        acr_init,
        acr_final,
        arc: metrics::arc(acr_final, acr_init).ok(),
        gacr_init,
        gacr_final,
        garc: metrics::arc(gacr_final, gacr_init).ok(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fig6Row {
    pub r: f64,
    pub accuracy: f64,
    pub final_loss: f64,
    #[serde(flatten)]
    pub metrics: SweepMetrics,
}

impl Fig6Row {
    pub const CSV_HEADER: &'static str =
        "r,accuracy,final_loss,acr_init,acr_final,arc,gacr_init,gacr_final,garc";

    pub fn to_csv(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.r,
            self.accuracy,
            self.final_loss,
            m.acr_init,
            m.acr_final,
            opt_csv(m.arc),
            m.gacr_init,
            m.gacr_final,
            opt_csv(m.garc)
        )
    }
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trains one encoder per radius, all from the same data and seed.
pub fn fig6_runs(data: &SphereDataset, radii: &[f64], template: &TrainConfig) -> Result<Vec<SyntheticRun>> {
    radii
        .par_iter()
        .map(|&r| {
            let start = Instant::now();
            let run = trainer::synthetic_run(
                data,
                &TrainConfig {
                    noise_r: r,
                    ..template.clone()
                },
            )?;
            log::info!(
                "r = {r}: accuracy {:.3} in {:.1}s",
                run.accuracy,
                start.elapsed().as_secs_f64()
            );
            Ok(run)
        })
        .collect()
}

pub fn fig6_rows(data: &SphereDataset, runs: &[SyntheticRun], eval_noise: f64, anchors: usize, seed: u64) -> Result<Vec<Fig6Row>> {
    runs.iter()
        .map(|run| {
            Ok(Fig6Row {
                r: run.config.noise_r,
                accuracy: run.accuracy,
                final_loss: run.outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
                metrics: sweep_metrics(run, data, eval_noise, anchors, seed)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fig7Row {
    pub r: f64,
    pub edges: usize,
    pub components: usize,
    pub intra_connected: bool,
    /// `None` when some class is disconnected.
    pub d_max: Option<usize>,
    pub inter_edges: usize,
}

impl Fig7Row {
    pub const CSV_HEADER: &'static str = "r,edges,components,intra_connected,D_max,inter_edges";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.r,
            self.edges,
            self.components,
            self.intra_connected,
            self.d_max.map_or("inf".to_string(), |d| d.to_string()),
            self.inter_edges
        )
    }
}

/// Input-space augmentation graphs on two-cap anchors.
pub fn fig7_rows(radii: &[f64], anchors: usize, views: usize, threshold: f64, seed: u64) -> Result<Vec<Fig7Row>> {
    let (points, labels) = geomsim::sample_caps(&GeomConfig::two_caps(anchors, seed))?;
    radii
        .iter()
        .map(|&r| {
            let (g, s) = geomsim::view_graph(&points, &labels, r, views, threshold, NoiseKind::Symmetric, seed)?;
            Ok(Fig7Row {
                r,
                edges: g.edges().len(),
                components: s.components.len(),
                intra_connected: s.all_classes_connected(),
                d_max: s.d_max,
                inter_edges: s.inter_edges,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prop53Report {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub accuracy: f64,
    pub chance: f64,
    /// Mean positive-pair distance, zero by construction.
    pub alignment: f64,
}

pub fn prop53(n: usize, k: usize, m: usize, seed: u64) -> Result<Prop53Report> {
    let c = trainer::chance_counterexample(n, k, m, seed)?;
    let align = losses::alignment_uniformity(&c.pairs, 0, seed)?;
    Ok(Prop53Report {
        n,
        k,
        m,
        accuracy: c.accuracy,
        chance: 1.0 / k as f64,
        alignment: align.alignment,
    })
}

/// Where results go.
struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn emit(&self, name: &str, json: &serde_json::Value, csv: &str) -> Result<()> {
        let (body, ext) = match self.format {
            Format::Json => (serde_json::to_string_pretty(json).expect("serializable") + "\n", "json"),
            Format::Csv => (csv.to_string(), "csv"),
        };
        self.write(&format!("{name}.{ext}"), &body)
    }

    fn write(&self, file: &str, body: &str) -> Result<()> {
        match &self.out {
            Some(dir) => write_file(&dir.join(file), body),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(body.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn csv_table<T>(header: &str, rows: &[T], line: impl Fn(&T) -> String) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&line(r));
        s.push('\n');
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn configure_threads() -> Result<()> {
    let threads = match std::env::var("AUGOVERLAP_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Argument(format!("AUGOVERLAP_THREADS must be an integer, got `{v}`")))?,
        Err(_) => 0,
    };
    // A pool built earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn write_manifest(cli: &Cli) -> Result<()> {
    let manifest = json!({
        "program": "augoverlap",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "format": cli.format,
        "out": cli.out,
        "command": to_json(&cli.command),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    match &cli.out {
        Some(dir) => write_file(&dir.join("manifest.json"), &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_manifest(cli)?;
    let seed = cli.seed;
    let sink = |default: Format| Sink {
        out: cli.out.clone(),
        format: cli.format.unwrap_or(default),
    };
    match &cli.command {
        Command::Bounds(a) => {
            let rows = bound_curve(a.l_adj, a.cond_variance, a.k, &a.m_grid)?;
            sink(Format::Csv).emit("bounds", &to_json(&rows), &csv_table(CURVE_CSV_HEADER, &rows, CurveRow::to_csv))
        }
        Command::Graph(a) => {
            let views = data::load_views(&a.views)?;
            let labels = data::load_labels(&a.labels)?;
            let views = if a.metric == GraphMetric::Cosine { views.normalize()? } else { views };
            let g = build_graph(&views, a.threshold, a.metric)?;
            let stats = graph_stats(&g, &labels)?;
            let s = sink(Format::Json);
            let edges = g.edges_csv();
            if s.out.is_some() {
                s.write("edges.csv", &edges)?;
            }
            s.emit("graph", &to_json(&stats), &edges)
        }
        Command::Metrics(a) => run_metrics(a, sink(Format::Json)),
        Command::Simulate(a) => {
            let cfg = if a.d == 2 {
                GeomConfig {
                    area: a.area,
                    total_area: 2.0 * a.area,
                    ..GeomConfig::two_caps(a.n, seed)
                }
            } else {
                GeomConfig::sphere(a.d, a.n, seed)
            };
            let rows = geomsim::connectivity_sweep(&cfg, &a.noise_r, a.trials)?;
            sink(Format::Csv).emit("simulate", &to_json(&rows), &csv_table(SWEEP_CSV_HEADER, &rows, SweepRow::to_csv))
        }
        Command::Train(a) => run_train(a, seed, cli, sink(Format::Json)),
        Command::CiRatio(a) => {
            let right_labels = a.labels.last().expect("at least one LAB file");
            let pairs = data::load_labeled_pairs(&a.pairs[0], &a.pairs[1], &a.labels[0], right_labels)?;
            let value = metrics::ci_ratio(&pairs.normalize()?)?;
            sink(Format::Json).emit("ci_ratio", &json!({ "ci_ratio": value }), &format!("ci_ratio\n{value}\n"))
        }
        Command::Repro(r) => run_recipe(&r.recipe, seed, sink),
    }
}

#[derive(Serialize)]
struct Variant {
    a1: StatSelector,
    a2: StatSelector,
    k: usize,
    gacr_init: f64,
    gacr_final: f64,
    garc: Option<f64>,
}

fn run_metrics(a: &MetricsArgs, sink: Sink) -> Result<()> {
    let fin = data::load_views(&a.views_final)?;
    let init = data::load_views(&a.views_init)?;
    let acr_final = metrics::acr(&fin)?;
    let acr_init = metrics::acr(&init)?;
    let arc = metrics::arc(acr_final, acr_init)
        .map_err(|e| log::warn!("{e}"))
        .ok();
    let a1s = a.a1.map_or(StatSelector::ALL.to_vec(), |s| vec![s]);
    let a2s = a.a2.map_or(StatSelector::ALL.to_vec(), |s| vec![s]);
    let mut variants = Vec::new();
    for &a1 in &a1s {
        for &a2 in &a2s {
            let cfg = MetricConfig::new(a1, a2, a.k);
            let gacr_init = metrics::gacr(&init, &cfg)?;
            let gacr_final = metrics::gacr(&fin, &cfg)?;
            variants.push(Variant {
                a1,
                a2,
                k: a.k,
                gacr_init,
                gacr_final,
                garc: metrics::garc(&fin, &init, &cfg).ok(),
            });
        }
    }
    let gacr_variants: Vec<_> = variants
        .iter()
        .map(|v| json!({"a1": v.a1, "a2": v.a2, "k": v.k, "init": v.gacr_init, "final": v.gacr_final}))
        .collect();
    let garc_variants: Vec<_> = variants
        .iter()
        .map(|v| json!({"a1": v.a1, "a2": v.a2, "k": v.k, "value": v.garc}))
        .collect();
    let json = json!({
        "acr_init": acr_init,
        "acr_final": acr_final,
        "arc": arc,
        "gacr_variants": gacr_variants,
        "garc_variants": garc_variants,
    });
    let csv = csv_table("a1,a2,k,gacr_init,gacr_final,garc", &variants, |v| {
        format!("{},{},{},{},{},{}", v.a1, v.a2, v.k, v.gacr_init, v.gacr_final, opt_csv(v.garc))
    });
    sink.emit("metrics", &json, &csv)
}

fn run_train(a: &TrainArgs, seed: u64, cli: &Cli, sink: Sink) -> Result<()> {
    let cfg = a.config(seed);
    let ds = SphereDataset::generate(a.n_train, a.n_test, seed)?;
    let run = trainer::synthetic_run(&ds, &cfg)?;
    if a.dump {
        let dir = cli.out.as_ref().expect("clap enforces --out with --dump");
        let enc = &run.outcome.encoder;
        data::save_embeddings(dir.join("train.emb"), &enc.encode(&ds.train)?)?;
        data::save_embeddings(dir.join("test.emb"), &enc.encode(&ds.test)?)?;
        data::save_labels(dir.join("train.lab"), &ds.train_labels)?;
        data::save_labels(dir.join("test.lab"), &ds.test_labels)?;
    }
    let json = json!({
        "final_accuracy": run.accuracy,
        "loss_trace": run.outcome.loss_trace,
    });
    let csv = csv_table("epoch,loss", &run.outcome.loss_trace.iter().enumerate().collect::<Vec<_>>(), |(e, l)| {
        format!("{},{}", e + 1, l)
    });
    sink.emit("train", &json, &csv)
}

fn run_recipe(recipe: &Recipe, seed: u64, sink: impl Fn(Format) -> Sink) -> Result<()> {
    match recipe {
        Recipe::Fig4(a) => {
            let rows = fig4_curve(&a.m_grid, a.k, a.n, a.dim, seed)?;
            sink(Format::Csv).emit("fig4", &to_json(&rows), &csv_table(CURVE_CSV_HEADER, &rows, CurveRow::to_csv))
        }
        Recipe::Fig6(a) => {
            let ds = SphereDataset::generate(a.n_train, a.n_test, seed)?;
            let template = TrainConfig {
                epochs: a.epochs,
                seed,
                ..TrainConfig::default()
            };
            let runs = fig6_runs(&ds, &a.radii, &template)?;
            let rows = fig6_rows(&ds, &runs, a.eval_noise, a.anchors, seed)?;
            sink(Format::Csv).emit("fig6", &to_json(&rows), &csv_table(Fig6Row::CSV_HEADER, &rows, Fig6Row::to_csv))
        }
        Recipe::Fig7(a) => {
            let rows = fig7_rows(&a.radii, a.anchors, a.views, a.threshold, seed)?;
            sink(Format::Csv).emit("fig7", &to_json(&rows), &csv_table(Fig7Row::CSV_HEADER, &rows, Fig7Row::to_csv))
        }
        Recipe::Prop53(a) => {
            let r = prop53(a.n, a.k, a.m, seed)?;
            let csv = format!("n,k,m,accuracy,chance\n{},{},{},{},{}\n", r.n, r.k, r.m, r.accuracy, r.chance);
            sink(Format::Json).emit("prop53", &to_json(&r), &csv)
        }
        Recipe::Lemma42(a) => {
            let rows = lemma42_rows(&a.m_grid, a.seeds, a.n, a.k, a.dim, seed)?;
            sink(Format::Csv).emit("lemma42", &to_json(&rows), &csv_table(LemmaRow::CSV_HEADER, &rows, LemmaRow::to_csv))
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e @ Error::Argument(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    main_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(main_with(["augoverlap", "bounds", "--bogus"]), 2);
        assert_eq!(main_with(["augoverlap", "simulate"]), 2);
    }

    #[test]
    fn spread_indices_are_balanced() {
        assert_eq!(spread_indices(10, 4), vec![0, 2, 5, 7]);
        assert_eq!(spread_indices(3, 10), vec![0, 1, 2]);
    }

    #[test]
    fn fig4_has_one_row_per_m() {
        let rows = fig4_curve(&[1, 4, 16, 64, 256, 1024], 10, 200, 8, 3).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[1].ours_upper < w[0].ours_upper));
    }
}

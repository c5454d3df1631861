//! Trained encoders across noise levels: accuracy against ARC and GARC.
//! Trains eight encoders, a few minutes on one core.

use augoverlap::cli::{fig6_rows, fig6_runs, EVAL_NOISE, METRIC_ANCHORS};
use augoverlap::metrics::pearson;
use augoverlap::trainer::{SphereDataset, TrainConfig, DEFAULT_TEST, DEFAULT_TRAIN};

fn main() -> augoverlap::Result<()> {
    let radii = [0.0, 0.02, 0.05, 0.08, 0.2, 0.5, 1.0, 1.5];
    let data = SphereDataset::generate(DEFAULT_TRAIN, DEFAULT_TEST, 0)?;
    let runs = fig6_runs(&data, &radii, &TrainConfig::default())?;
    let rows = fig6_rows(&data, &runs, EVAL_NOISE, METRIC_ANCHORS, 0)?;
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "r", "accuracy", "ACR", "ARC", "GARC");
    for r in &rows {
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.r,
            r.accuracy,
            r.metrics.acr_final,
            r.metrics.arc.unwrap_or(f64::NAN),
            r.metrics.garc.unwrap_or(f64::NAN)
        );
    }
    let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    for (name, values) in [
        ("ARC", rows.iter().map(|r| r.metrics.arc).collect::<Option<Vec<f64>>>()),
        ("GARC", rows.iter().map(|r| r.metrics.garc).collect::<Option<Vec<f64>>>()),
    ] {
        match values {
            Some(v) => println!("pearson(accuracy, {name}) = {:.3}", pearson(&acc, &v)?),
            None => println!("pearson(accuracy, {name}) undefined: initial ratio is 1 at some noise level"),
        }
    }
    Ok(())
}

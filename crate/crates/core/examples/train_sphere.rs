//! Trains the sphere encoder at a few noise levels and reports downstream
//! accuracy. Pass noise levels as arguments to override the defaults.

use std::time::Instant;

use augoverlap::trainer::{synthetic_run, SphereDataset, TrainConfig, DEFAULT_TEST, DEFAULT_TRAIN};

fn main() -> augoverlap::Result<()> {
    let radii: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("noise level"))
        .collect();
    let radii = if radii.is_empty() { vec![0.0, 0.08, 0.5, 1.5] } else { radii };
    let data = SphereDataset::generate(DEFAULT_TRAIN, DEFAULT_TEST, 0)?;
    for r in radii {
        let start = Instant::now();
        let cfg = TrainConfig { noise_r: r, ..TrainConfig::default() };
        let run = synthetic_run(&data, &cfg)?;
        println!(
            "r = {r:<5} accuracy {:.3}  final loss {:.4}  ({:.1}s)",
            run.accuracy,
            run.outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

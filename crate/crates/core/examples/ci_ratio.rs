//! The conditional-independence diagnostic on independent and on tightly
//! coupled positive pairs.

use std::f64::consts::PI;

use augoverlap::geomsim::{independent_cap_pairs, perturbed_pairs, sample_caps, GeomConfig};
use augoverlap::metrics::ci_ratio;

fn main() -> augoverlap::Result<()> {
    let cfg = GeomConfig {
        area: PI,
        ..GeomConfig::two_caps(2000, 3)
    };
    println!("independent pairs: {:.3}", ci_ratio(&independent_cap_pairs(&cfg)?)?);
    let (x, y) = sample_caps(&cfg)?;
    for sigma in [0.3, 0.1, 0.03, 0.01] {
        match ci_ratio(&perturbed_pairs(&x, &y, sigma, 1)?) {
            Ok(r) => println!("perturbed, sigma {sigma:<4}: {r:.3}"),
            Err(e) => println!("perturbed, sigma {sigma:<4}: {e}"),
        }
    }
    Ok(())
}

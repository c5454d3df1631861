//! Closed-form overlap thresholds against sampled neighbour statistics.

use augoverlap::geomsim::{empirical_regime, r_mc_linear, thresholds_closed_form, GeomConfig};

fn main() -> augoverlap::Result<()> {
    for n in [100, 300, 1000, 3000] {
        let cfg = GeomConfig::two_caps(n, 7);
        let closed = thresholds_closed_form(&cfg)?;
        let seen = empirical_regime(&cfg, 20)?;
        println!(
            "N = {n:>4}: r1 {:.4} (sampled {:.4})  r2 {:.4} (sampled {:.4})  r_mc sampled {:.4}, linear-N form {:.4}",
            closed.r1,
            seen.r1,
            closed.r2,
            seen.r2,
            seen.r_mc_empirical.unwrap_or(f64::NAN),
            r_mc_linear(cfg.d, cfg.n_per_class(), cfg.area)?,
        );
    }
    Ok(())
}

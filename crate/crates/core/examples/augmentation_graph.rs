//! Augmentation graphs of two spherical caps under growing noise.

use augoverlap::geomsim::{sample_caps, view_graph, GeomConfig, NoiseKind};

fn main() -> augoverlap::Result<()> {
    let (points, labels) = sample_caps(&GeomConfig::two_caps(200, 1))?;
    println!("{:>5} {:>6} {:>5} {:>6} {:>6}", "r", "edges", "comps", "D_max", "inter");
    for r in [0.0, 0.08, 0.2, 0.5, 1.0, 1.5] {
        let (g, s) = view_graph(&points, &labels, r, 20, 0.2, NoiseKind::Symmetric, 2)?;
        let d = s.d_max.map_or("inf".to_string(), |d| d.to_string());
        println!(
            "{r:>5} {:>6} {:>5} {d:>6} {:>6}",
            g.edges().len(),
            s.components.len(),
            s.inter_edges
        );
    }
    Ok(())
}

//! Writing and reading the EMB, VIEWS and LAB text formats.

use augoverlap::data::{
    load_embeddings, load_labels, load_views, save_embeddings, save_labels, save_views,
};
use augoverlap::geomsim::{augment, sample_caps, GeomConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("augoverlap-file-io");
    std::fs::create_dir_all(&dir)?;

    let (points, labels) = sample_caps(&GeomConfig::two_caps(6, 0))?;
    let views = augment(&points, 0.1, 3, 1)?;
    save_embeddings(dir.join("points.emb"), &points)?;
    save_views(dir.join("points.views"), &views)?;
    save_labels(dir.join("points.lab"), &labels)?;

    let back = load_embeddings(dir.join("points.emb"))?;
    let vback = load_views(dir.join("points.views"))?;
    let lback = load_labels(dir.join("points.lab"))?;
    let max_err = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!(
        "{} points of dim {}, {} views each, {} classes",
        back.n(),
        back.dim(),
        vback.c(),
        lback.k()
    );
    println!(
        "max round-trip error: points {:.1e}, views {:.1e}; labels equal: {}",
        max_err(back.values(), points.values()),
        max_err(vback.values(), views.values()),
        lback == labels
    );
    print!("{}", std::fs::read_to_string(dir.join("points.lab")).unwrap_or_default());
    Ok(())
}

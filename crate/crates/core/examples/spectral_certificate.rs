//! Spectral diameter estimates against BFS diameters on small graphs.

use augoverlap::auggraph::{graph_stats, AugGraph};
use augoverlap::bounds::spectral_diameter;
use augoverlap::data::LabelSet;

fn report(name: &str, n: usize, edges: &[(usize, usize)]) -> augoverlap::Result<()> {
    let g = AugGraph::from_edges(n, edges)?;
    let stats = graph_stats(&g, &LabelSet::new(vec![0; n], 1)?)?;
    let class = &stats.per_class[0];
    let (d_hat, note) = spectral_diameter(&class.spectral_inputs());
    println!(
        "{name:<10} BFS diameter {:>3}  estimate {d_hat:>7.3}  {}",
        class.diameter.map_or("inf".to_string(), |d| d.to_string()),
        note.map_or(String::new(), |n| format!("({n:?})"))
    );
    Ok(())
}

fn main() -> augoverlap::Result<()> {
    report("K3", 3, &[(0, 1), (1, 2), (0, 2)])?;
    let c7: Vec<_> = (0..7).map(|i| (i, (i + 1) % 7)).collect();
    report("C7", 7, &c7)?;
    let mut wheel: Vec<_> = (1..9).map(|i| (0, i)).collect();
    wheel.extend((1..9).map(|i| (i, i % 8 + 1)));
    report("wheel W8", 9, &wheel)?;
    let path: Vec<_> = (0..5).map(|i| (i, i + 1)).collect();
    report("path P6", 6, &path)?;
    Ok(())
}

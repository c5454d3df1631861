//! Perfect alignment without downstream accuracy.

use augoverlap::cli::prop53;

fn main() -> augoverlap::Result<()> {
    for k in [2, 10] {
        let r = prop53(10_000, k, 32, 7)?;
        println!(
            "K = {k:>2}: alignment {:.1e}, accuracy {:.4}, chance {:.4}",
            r.alignment, r.accuracy, r.chance
        );
    }
    Ok(())
}

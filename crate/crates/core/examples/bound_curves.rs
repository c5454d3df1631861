//! Bound-versus-M curves for synthetic conditionally independent classes.

use augoverlap::bounds::CURVE_CSV_HEADER;
use augoverlap::cli::fig4_curve;

fn main() -> augoverlap::Result<()> {
    let grid: Vec<usize> = (1..=12).map(|p| 1 << p).collect();
    let rows = fig4_curve(&grid, 10, 2000, 32, 0)?;
    println!("{CURVE_CSV_HEADER}");
    for row in &rows {
        println!("{}", row.to_csv());
    }
    Ok(())
}

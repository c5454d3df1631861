//! Monte Carlo error of the negative term and the two-sided bound on the
//! mean-classifier loss, on conditionally independent synthetic data.

use augoverlap::cli::lemma42_rows;

fn main() -> augoverlap::Result<()> {
    let rows = lemma42_rows(&[1, 4, 16, 64, 256], 10, 2000, 10, 32, 0)?;
    println!("{:>5} {:>10} {:>10} {:>9} {:>9} {:>9}", "M", "mc_gap", "e/sqrt(M)", "lower", "L_mCE", "upper");
    for r in &rows {
        println!(
            "{:>5} {:>10.5} {:>10.5} {:>9.4} {:>9.4} {:>9.4}",
            r.m, r.mc_gap, r.mc_bound, r.ci_lower, r.l_mce, r.ci_upper
        );
    }
    Ok(())
}

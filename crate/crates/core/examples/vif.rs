//! Variance inflation factors with bootstrap confidence intervals.
//!
//! `b` is nearly a copy of `a`, so both get a large VIF. `c` is independent of
//! `a`, but `d` is `a + c` plus noise, so `c` and `d` are moderately inflated.
//! Without that noise `d` would be an exact combination and its VIF infinite.

use glassbox::dataset::Dataset;
use glassbox::eda::vif_table;
use glassbox::stats::rng;
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

fn main() -> glassbox::error::Result<()> {
    let n = 500;
    let mut r = rng(11);
    let mut normal = || -> f64 { StandardNormal.sample(&mut r) };
    let mut x = Array2::<f64>::zeros((n, 4));
    for i in 0..n {
        let (a, c) = (normal(), normal());
        x[[i, 0]] = a;
        x[[i, 1]] = a + 0.1 * normal();
        x[[i, 2]] = c;
        x[[i, 3]] = a + c + 0.5 * normal();
    }
    let y = (0..n).map(|i| u8::from(x[[i, 0]] > 0.0)).collect();
    let ds = Dataset::new(["a", "b", "c", "d"].map(String::from).to_vec(), x, y)?;

    let table = vif_table(&ds, 200, 5)?;
    println!("{:<4} {:>9} {:>9} {:>20}", "", "VIF", "std err", "95% interval");
    for row in &table.rows {
        println!(
            "{:<4} {:>9.2} {:>9.2}   [{:>7.2}, {:>7.2}]{}",
            row.feature,
            row.vif,
            row.standard_error,
            row.ci_lower,
            row.ci_upper,
            if row.vif > 10.0 { "  severe" } else { "" }
        );
    }
    println!();
    print!("{}", table.to_csv());
    Ok(())
}

//! Pearson, Spearman, Kendall and Chatterjee correlation matrices on a dataset
//! with one monotone and one non-monotone dependence.
//!
//! Chatterjee's xi is the only one of the four that sees `y = x^2`, and the only
//! asymmetric one: xi(x -> x^2) is large while xi(x^2 -> x) is not.

use glassbox::dataset::Dataset;
use glassbox::eda::{correlation_matrix, CorrMethod};
use glassbox::stats::rng;
use ndarray::Array2;
use rand::Rng;

fn main() -> glassbox::error::Result<()> {
    let n = 2000;
    let mut r = rng(3);
    let mut x = Array2::<f64>::zeros((n, 4));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a: f64 = r.random_range(-1.0..1.0);
        x[[i, 0]] = a;
        x[[i, 1]] = a.powi(3) + 0.05 * r.random_range(-1.0..1.0);
        x[[i, 2]] = a * a;
        x[[i, 3]] = r.random_range(-1.0..1.0);
        y.push(u8::from(a + 0.3 * r.random_range(-1.0..1.0) > 0.0));
    }
    let names = ["x", "x_cubed", "x_squared", "noise"].map(String::from).to_vec();
    let ds = Dataset::new(names, x, y)?.with_label_as_feature("Class")?;

    for method in [CorrMethod::Pearson, CorrMethod::Spearman, CorrMethod::Kendall, CorrMethod::Chatterjee] {
        let m = correlation_matrix(&ds, method, 0)?;
        println!("{} ({}):", method.name(), if method.is_symmetric() { "symmetric" } else { "row -> column" });
        print!("{}", m.to_csv());
        println!();
    }

    let xi = correlation_matrix(&ds, CorrMethod::Chatterjee, 0)?;
    println!(
        "xi(x -> x_squared) = {:.3}, xi(x_squared -> x) = {:.3}",
        xi.get("x", "x_squared").unwrap(),
        xi.get("x_squared", "x").unwrap()
    );
    Ok(())
}

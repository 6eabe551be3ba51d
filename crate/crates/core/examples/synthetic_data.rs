//! Writes the built-in synthetic datasets as labelled CSV files, ready for the
//! `glassbox` command-line tool.
//!
//! ```text
//! cargo run --example synthetic_data -- /tmp/glassbox-data
//! ```

use std::path::PathBuf;

use glassbox::dataset::save_csv;
use glassbox::synth;

fn main() -> glassbox::error::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic-data".into()));
    std::fs::create_dir_all(&dir).map_err(|e| glassbox::error::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let sets = [
        // 1:100 imbalance, 3 of 8 features carry signal.
        ("blobs.csv", synth::imbalanced_blobs(4000, 40, 8, 3, 2.0, 7)?),
        // Label is sign(x0 * x1): invisible to any single feature.
        ("xor.csv", synth::xor(2000, 2, 7)?),
        // Two monotone drivers among six pure-noise columns.
        ("monotone.csv", synth::monotone_informative(3000, 2, 6, 2.0, -1.0, 7)?),
    ];
    for (name, ds) in &sets {
        let path = dir.join(name);
        save_csv(ds, &path, "Class")?;
        println!(
            "{:<40} {:>5} rows  {:>2} features  {:>4} positives",
            path.display(),
            ds.n_rows(),
            ds.n_features(),
            ds.n_positive()
        );
    }
    Ok(())
}

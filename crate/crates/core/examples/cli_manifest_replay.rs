//! Runs a command through a manifest, the way the `glassbox` binary does, and
//! replays the saved manifest into a second directory.
//!
//! Outputs do not depend on the output directory, so the two runs must agree
//! byte for byte. The equivalent command line is
//!
//! ```text
//! glassbox compare --input data.csv --models logreg,tree --out-dir run1 --manifest run.json
//! glassbox compare --manifest run.json --out-dir run2
//! ```
//!
//! ```text
//! cargo run --release --example cli_manifest_replay -- /tmp/glassbox-replay
//! ```

use std::fs;
use std::path::PathBuf;

use glassbox::dataset::save_csv;
use glassbox::error::{Error, Result};
use glassbox::model::ModelSpec;
use glassbox::pipeline::{execute, Command, Preprocessing, RunManifest};
use glassbox::synth;

fn read(path: &PathBuf) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn main() -> Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "glassbox-replay".into()));
    fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let input = dir.join("data.csv");
    save_csv(&synth::imbalanced_blobs(800, 80, 4, 2, 1.5, 12)?, &input, "Class")?;

    let command = Command::Compare {
        models: vec![ModelSpec::from_name("logreg")?, ModelSpec::from_name("tree")?],
        preprocessing: Preprocessing::default(),
    };
    let first = execute(RunManifest::new(command, Some(input.clone()), 42), dir.join("run1"))?;
    let manifest_path = dir.join("run.json");
    first.manifest.save(&manifest_path)?;
    println!("input digest {}", first.manifest.input_digest.as_deref().unwrap_or("-"));
    println!("manifest saved to {}", manifest_path.display());

    let second = execute(RunManifest::load(&manifest_path)?, dir.join("run2"))?;
    for (a, b) in first.files.iter().zip(&second.files) {
        let same = read(a)? == read(b)?;
        println!(
            "  {:<24} {}",
            a.file_name().unwrap_or_default().to_string_lossy(),
            if same { "identical" } else { "DIFFERENT" }
        );
    }

    // Changing the input invalidates the manifest.
    save_csv(&synth::imbalanced_blobs(800, 80, 4, 2, 1.5, 13)?, &input, "Class")?;
    match execute(RunManifest::load(&manifest_path)?, dir.join("run3")) {
        Err(e) => println!("replay after editing the input: {e}"),
        Ok(_) => println!("replay after editing the input unexpectedly succeeded"),
    }
    Ok(())
}

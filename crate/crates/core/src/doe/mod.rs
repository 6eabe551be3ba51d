//! Taguchi-style design of experiments: orthogonal arrays, cross-validated
//! execution of every array row, S/N ratios and main-effects analysis, with
//! mappers for scaler-order and hyperparameter searches.

mod experiment;
mod oa;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scaling::{ScalerParams, ScalerSequence, SEQUENCE_SLOTS};

pub use experiment::{
    fit_trial, main_effects_select, row_to_scaler_codes, run_experiment, sn_ratio, trial_seed, AucTrainer,
    ExperimentResult, FactorEffect, FittedTrial, Selection, Trainer, TrialConfig,
};
pub use oa::{build_linear_oa, build_oa, named_oa, OrthogonalArray};

/// Scaler sequence for one L25 row: slot `k` holds the scaler whose code is the
/// row's level `k`, with repeats replaced by "do nothing".
pub fn row_to_scaler_sequence(levels: &[usize], params: &ScalerParams) -> Result<ScalerSequence> {
    if levels.len() != SEQUENCE_SLOTS || levels.iter().any(|&l| !(1..=5).contains(&l)) {
        return Err(Error::validation(format!(
            "scaler row must hold {SEQUENCE_SLOTS} levels in 1..=5, got {levels:?}"
        )));
    }
    ScalerSequence::from_codes(&row_to_scaler_codes(levels), params)
}

/// Maps L25 rows to scaler sequences in front of a fixed model.
pub fn scaler_mapper(params: ScalerParams, model: ModelSpec) -> impl Fn(&[usize]) -> Result<TrialConfig> + Sync {
    move |levels| {
        Ok(TrialConfig {
            scalers: row_to_scaler_sequence(levels, &params)?,
            model: model.clone(),
        })
    }
}

/// Candidate values of one hyperparameter; level `k` (1-based) is `levels[k-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLevels {
    pub name: String,
    pub levels: Vec<Value>,
}

/// Factor tables keyed by model name.
pub type LevelTable = BTreeMap<String, Vec<FactorLevels>>;

const L9_LEVELS: &str = include_str!("../../config/hparams_l9.json");
const L27_LEVELS: &str = include_str!("../../config/hparams_l27.json");

pub fn parse_levels(text: &str) -> Result<LevelTable> {
    Ok(serde_json::from_str(text)?)
}

/// Built-in level tables: 4 factors per model for L9, 5 for L27.
pub fn default_levels(oa_name: &str) -> Result<LevelTable> {
    match oa_name.to_ascii_uppercase().as_str() {
        "L9" => parse_levels(L9_LEVELS),
        "L27" => parse_levels(L27_LEVELS),
        other => Err(Error::validation(format!(
            "no built-in hyperparameter levels for '{other}' (expected L9 or L27)"
        ))),
    }
}

/// The model configuration selected by one row of levels.
pub fn apply_levels(base: &ModelSpec, factors: &[FactorLevels], levels: &[usize]) -> Result<ModelSpec> {
    if levels.len() != factors.len() {
        return Err(Error::DimensionMismatch {
            expected: factors.len(),
            found: levels.len(),
        });
    }
    let mut spec = base.clone();
    for (factor, &level) in factors.iter().zip(levels) {
        let value = factor.levels.get(level.wrapping_sub(1)).ok_or_else(|| {
            Error::validation(format!(
                "factor '{}' has {} levels, row asks for level {level}",
                factor.name,
                factor.levels.len()
            ))
        })?;
        spec.set_param(&factor.name, value)?;
    }
    Ok(spec)
}

/// Maps array rows to hyperparameter settings of `base`, behind a fixed scaler
/// sequence. Every factor is validated against `base` up front.
pub fn hyperparameter_mapper(
    base: ModelSpec,
    scalers: ScalerSequence,
    factors: Vec<FactorLevels>,
) -> Result<impl Fn(&[usize]) -> Result<TrialConfig> + Sync> {
    for f in &factors {
        let mut probe = base.clone();
        for v in &f.levels {
            probe.set_param(&f.name, v)?;
        }
    }
    Ok(move |levels: &[usize]| {
        Ok(TrialConfig {
            scalers: scalers.clone(),
            model: apply_levels(&base, &factors, levels)?,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tables_are_valid() {
        for (oa, n) in [("L9", 4), ("L27", 5)] {
            let table = default_levels(oa).unwrap();
            for (model, factors) in &table {
                assert_eq!(factors.len(), n, "{oa} {model}");
                assert!(factors.iter().all(|f| f.levels.len() == 3));
                let base = ModelSpec::from_name(model).unwrap();
                let _mapper = hyperparameter_mapper(base, ScalerSequence::identity(), factors.clone()).unwrap();
            }
        }
    }

    #[test]
    fn scaler_rows_map_to_valid_sequences() {
        let oa = named_oa("L25", 5).unwrap();
        let params = ScalerParams::default();
        for row in &oa.rows {
            let seq = row_to_scaler_sequence(row, &params).unwrap();
            let codes: Vec<u8> = seq.codes().into_iter().filter(|&c| c != 0).collect();
            let mut dedup = codes.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), codes.len());
        }
        assert!(row_to_scaler_sequence(&[1, 2, 3, 4, 6], &params).is_err());
    }
}

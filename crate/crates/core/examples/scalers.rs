//! The five scalers and a scaler sequence, fitted on one split and applied to
//! another.

use glassbox::scaling::{fit_scaler, fit_sequence, QuantileOutput, ScalerKind, ScalerSequence};
use glassbox::stats::rng;
use ndarray::{Array2, Axis};
use rand_distr::{Distribution, Exp};

fn summary(label: &str, x: &Array2<f64>) {
    let col = x.column(0);
    let mut v: Vec<f64> = col.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "{label:<34} min {:>8.3}  median {:>8.3}  max {:>8.3}  mean {:>8.3}",
        v[0],
        v[v.len() / 2],
        v[v.len() - 1],
        mean
    );
}

fn main() -> glassbox::error::Result<()> {
    // A right-skewed column, like transaction amounts.
    let mut r = rng(1);
    let exp = Exp::new(0.05).unwrap();
    let all = Array2::from_shape_fn((1000, 1), |_| exp.sample(&mut r));
    let (train, test) = all.view().split_at(Axis(0), 800);
    let (train, test) = (train.to_owned(), test.to_owned());
    summary("raw (test rows)", &test);

    let kinds = [
        ScalerKind::MinMax { low: 0.0, high: 1.0 },
        ScalerKind::Standard { with_mean: true, with_std: true },
        ScalerKind::Quantile { n_quantiles: 1000, output: QuantileOutput::Normal },
        ScalerKind::Robust { q_low: 25.0, q_high: 75.0 },
        ScalerKind::Power,
    ];
    for kind in kinds {
        let fitted = fit_scaler(kind, &train)?;
        summary(kind.name(), &fitted.apply(&test)?);
    }

    // Sequences run slot by slot; no-op slots pass data through.
    let seq = ScalerSequence::new(vec![
        ScalerKind::Power,
        ScalerKind::Robust { q_low: 25.0, q_high: 75.0 },
        ScalerKind::NoOp,
        ScalerKind::NoOp,
        ScalerKind::NoOp,
    ])?;
    let fitted = fit_sequence(&seq, &train)?;
    summary(&seq.describe(), &fitted.apply(&test)?);
    Ok(())
}

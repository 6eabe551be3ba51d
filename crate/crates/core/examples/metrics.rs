//! ROC-AUC, thresholded precision/recall/F1 and per-fold aggregation on a
//! hand-sized example.
//!
//! ```text
//! cargo run --example metrics
//! ```

use glassbox::metrics::{overfit_gap, precision_recall_f1, roc_auc, FoldId, MetricsReport};

fn main() -> glassbox::error::Result<()> {
    let labels = [0, 0, 1, 0, 1, 1, 0, 1, 0, 0];
    let scores = [0.1, 0.35, 0.8, 0.4, 0.65, 0.3, 0.2, 0.9, 0.55, 0.05];

    // 21 of the 24 (positive, negative) pairs are ordered correctly.
    println!("ROC-AUC {:.4}", roc_auc(&labels, &scores)?);

    for threshold in [0.3, 0.5, 0.7] {
        let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
        let pr = precision_recall_f1(&labels, &preds)?;
        println!(
            "threshold {threshold:.1}: precision {:.3} recall {:.3} F1 {:.3}",
            pr.precision, pr.recall, pr.f1
        );
    }

    let fold0 = MetricsReport::evaluate(&labels[..5], &scores[..5], 0.5, FoldId::Fold(0))?;
    let fold1 = MetricsReport::evaluate(&labels[5..], &scores[5..], 0.5, FoldId::Fold(1))?;
    let agg = MetricsReport::aggregate(&[fold0.clone(), fold1.clone()])?;
    println!("fold,{}", MetricsReport::CSV_HEADER);
    for r in [&fold0, &fold1, &agg] {
        println!("{:?},{}", r.fold, r.csv_fields());
    }

    let check = overfit_gap(&[0.999, 0.998], &[0.93, 0.94], 0.1)?;
    println!(
        "train {:.4} vs test {:.4}: gap {:.4}, {}",
        check.mean_train,
        check.mean_test,
        check.gap,
        if check.pass { "no overfitting flagged" } else { "overfitting" }
    );
    Ok(())
}

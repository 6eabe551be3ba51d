use glassbox::error::Error;
use glassbox::model::*;
use glassbox::scaling::{fit_sequence, ScalerKind, ScalerSequence};
use glassbox::synth;

fn pipelines() -> (glassbox::dataset::Dataset, Vec<FittedPipeline>) {
    let ds = synth::additive(400, 2, 6).unwrap();
    let ids = vec![0, 1, 2, 4];
    let sub = ds.select_features(&ids).unwrap();
    let seq = ScalerSequence::single(ScalerKind::Power).unwrap();
    let scalers = fit_sequence(&seq, sub.x()).unwrap();
    let scaled = sub.with_matrix(scalers.apply(sub.x()).unwrap()).unwrap();
    let mut out = Vec::new();
    for name in MODEL_NAMES {
        let mut spec = ModelSpec::from_name(name).unwrap();
        match name {
            "ebm" => {
                spec.set_param("max_rounds", &20.into()).unwrap();
                spec.set_param("outer_bags", &2.into()).unwrap();
                spec.set_param("interactions", &2.into()).unwrap();
            }
            "forest" => spec.set_param("n_estimators", &5.into()).unwrap(),
            "gbt" => spec.set_param("n_rounds", &10.into()).unwrap(),
            _ => {}
        }
        out.push(FittedPipeline {
            source_features: ds.feature_names().to_vec(),
            feature_ids: ids.clone(),
            scalers: Some(scalers.clone()),
            model: spec.fit(&scaled).unwrap(),
        });
    }
    (ds, out)
}

#[test]
fn save_load_predict_is_bit_identical() {
    let (ds, pipes) = pipelines();
    let dir = tempfile::tempdir().unwrap();
    for p in pipes {
        let path = dir.path().join(format!("{}.json", p.model.kind()));
        save_model(&path, &p).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, p);
        let a = p.predict_proba(ds.x()).unwrap();
        let b = back.predict_proba(ds.x()).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        // re-serialization is byte-identical
        assert_eq!(to_json(&back).unwrap(), std::fs::read_to_string(&path).unwrap());
    }
}

#[test]
fn corrupted_files_are_rejected() {
    let (_, pipes) = pipelines();
    let text = to_json(&pipes[0]).unwrap();
    let truncated = &text[..text.len() / 2];
    assert!(matches!(from_json(truncated), Err(Error::Format(_))));
    let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
    assert!(matches!(
        from_json(&bumped),
        Err(Error::VersionMismatch { found: 2, expected: 1 })
    ));
    let renamed = text.replacen("\"kind\": \"ebm\"", "\"kind\": \"svm\"", 1);
    assert!(matches!(from_json(&renamed), Err(Error::Format(_))));
    assert!(matches!(load_model("/nonexistent/model.json"), Err(Error::Io { .. })));
}

#[test]
fn unknown_hyperparameters_are_rejected() {
    let mut spec = ModelSpec::from_name("tree").unwrap();
    assert!(spec.set_param("learning_rate", &0.1.into()).is_err());
    assert!(spec.set_param("max_depth", &2.5.into()).is_err());
    assert!(ModelSpec::from_name("svm").is_err());
    let mut lr = ModelSpec::from_name("logreg").unwrap();
    lr.set_param("C", &4.0.into()).unwrap();
    match lr {
        ModelSpec::Logreg(c) => assert_eq!(c.l2, 0.25),
        _ => unreachable!(),
    }
}

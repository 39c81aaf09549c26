//! Held-out rows must not influence anything fitted for their fold.

use sppb_forecast::cohort::{build_wave_pairs, generate_synthetic_cohort, AgeBounds};
use sppb_forecast::eval::{make_folds, prepare_folds};
use sppb_forecast::preprocess::{FitScope, PreprocessConfig};
use sppb_forecast::{CutoffTable, Dataset, FeatureSchema};

fn cohort() -> Dataset {
    let schema = FeatureSchema::elsa_default();
    let records = generate_synthetic_cohort(21, 200, &schema).unwrap();
    build_wave_pairs(&records, &schema, &CutoffTable::default(), AgeBounds::default()).unwrap()
}

fn poisoned(ds: &Dataset, rows: &[usize]) -> Dataset {
    let mut bad = ds.clone();
    for &i in rows {
        bad.x.row_mut(i).fill(1e6);
        bad.y[i] = 12.0 - ds.y[i];
    }
    bad
}

#[test]
fn poisoning_a_test_fold_leaves_its_training_inputs_unchanged() {
    let ds = cohort();
    let plan = make_folds(ds.len(), 5, 3).unwrap();
    let cfg = PreprocessConfig { fit_scope: FitScope::Fold, ..Default::default() };
    let test0 = plan.test_indices(0);
    let clean = prepare_folds(&ds, &plan, &cfg).unwrap();
    let dirty = prepare_folds(&poisoned(&ds, &test0), &plan, &cfg).unwrap();
    assert_eq!(clean[0].train_x, dirty[0].train_x);
    assert_eq!(clean[0].train_y, dirty[0].train_y);
    // Every other fold trains on the poisoned rows and must notice.
    for f in 1..plan.k {
        assert_ne!(clean[f].train_x, dirty[f].train_x);
    }
}

#[test]
fn global_scope_is_sensitive_to_the_same_poisoning() {
    let ds = cohort();
    let plan = make_folds(ds.len(), 5, 3).unwrap();
    let cfg = PreprocessConfig { fit_scope: FitScope::Global, ..Default::default() };
    let test0 = plan.test_indices(0);
    let clean = prepare_folds(&ds, &plan, &cfg).unwrap();
    let dirty = prepare_folds(&poisoned(&ds, &test0), &plan, &cfg).unwrap();
    assert_ne!(clean[0].train_x, dirty[0].train_x);
}

#[test]
fn scaled_training_inputs_lie_in_the_unit_interval() {
    let ds = cohort();
    let plan = make_folds(ds.len(), 4, 8).unwrap();
    for fold in prepare_folds(&ds, &plan, &PreprocessConfig::default()).unwrap() {
        assert!(fold.train_x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(fold.test_x.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn shared_distance_path_matches_a_fresh_fit_per_fold() {
    use ndarray::Axis;
    use sppb_forecast::preprocess::PreprocessModel;
    let ds = cohort();
    let plan = make_folds(ds.len(), 4, 2).unwrap();
    let cfg = PreprocessConfig::default();
    for fold in prepare_folds(&ds, &plan, &cfg).unwrap() {
        let train = plan.train_indices(fold.fold);
        let test = plan.test_indices(fold.fold);
        let (model, train_x) =
            PreprocessModel::fit_transform(&ds.x.select(Axis(0), &train), &ds.schema, cfg.k_neighbors).unwrap();
        let test_x = model.transform(&ds.x.select(Axis(0), &test)).unwrap();
        assert_eq!(fold.train_x, train_x);
        assert_eq!(fold.test_x, test_x);
    }
}

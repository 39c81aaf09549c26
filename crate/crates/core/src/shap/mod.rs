//! Shapley attributions, feature ranking and feature-subset retraining.

pub mod beeswarm;
pub mod treeshap;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use beeswarm::{export_beeswarm, BeeswarmPoint};
pub use treeshap::{brute_force_shap, tree_shap_row, tree_shap_values, BRUTE_FORCE_MAX_FEATURES};

use crate::cohort::SupervisedDataset;
use crate::error::{Error, Result};
use crate::eval::{cross_validate, CvReport, FoldPlan};
use crate::learners::{FittedModel, MaxDepth, RegressorSpec, TrainedRegressor};
use crate::preprocess::PreprocessConfig;
use crate::scalar::Real;

/// SPPB partial scores and raw timed measurements; the current total score
/// is deliberately kept.
pub const DEFAULT_EXCLUSIONS: [&str; 8] = [
    "balance_score",
    "gait_score",
    "chair_score",
    "balance_side_by_side_s",
    "balance_semi_tandem_s",
    "balance_full_tandem_s",
    "gait_time_s",
    "chair_stand_time_s",
];

pub fn default_exclusions() -> Vec<String> {
    DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect()
}

/// Signed per-sample, per-feature contributions; each row plus `base_value`
/// reconstructs the model output for that sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix<T: Real> {
    pub values: Array2<T>,
    pub base_value: T,
    pub feature_names: Vec<String>,
}

impl<T: Real> AttributionMatrix<T> {
    pub fn row_total(&self, i: usize) -> T {
        self.base_value + self.values.row(i).iter().copied().sum::<T>()
    }

    pub fn mean_abs(&self) -> Vec<f64> {
        let n = self.values.nrows().max(1) as f64;
        self.values
            .axis_iter(Axis(1))
            .map(|c| c.iter().map(|v| v.as_f64().abs()).sum::<f64>() / n)
            .collect()
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["sample_id".to_string(), "base_value".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.values.rows().into_iter().enumerate() {
            let mut rec = vec![i.to_string(), self.base_value.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_names(p: usize, names: &[String]) -> Result<()> {
    if names.len() != p {
        return Err(Error::ShapeMismatch(format!("{} names for {p} features", names.len())));
    }
    Ok(())
}

/// Exact path-dependent TreeSHAP for forest and boosted models.
pub fn tree_shap<T: Real>(
    model: &TrainedRegressor<T>,
    x: &Array2<T>,
    feature_names: &[String],
) -> Result<AttributionMatrix<T>> {
    check_names(x.ncols(), feature_names)?;
    let (values, base_value) = tree_shap_values(model, x)?;
    Ok(AttributionMatrix { values, base_value, feature_names: feature_names.to_vec() })
}

/// Closed-form attributions of a linear model: `coefficient * (x - mean)`
/// with the training means as reference.
pub fn linear_attributions<T: Real>(
    model: &TrainedRegressor<T>,
    x: &Array2<T>,
    feature_names: &[String],
) -> Result<AttributionMatrix<T>> {
    check_names(x.ncols(), feature_names)?;
    let FittedModel::Linear(m) = &model.model else {
        return Err(Error::UnsupportedFamily(model.family().to_string()));
    };
    if x.ncols() != m.coefficients.len() {
        return Err(Error::ShapeMismatch(format!("model has {} coefficients", m.coefficients.len())));
    }
    let mut values = x.clone();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        col.mapv_inplace(|v| m.coefficients[j] * (v - m.feature_means[j]));
    }
    let base_value = m
        .coefficients
        .iter()
        .zip(&m.feature_means)
        .fold(m.intercept, |s, (&c, &mu)| s + c * mu);
    Ok(AttributionMatrix { values, base_value, feature_names: feature_names.to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub importance: f64,
}

/// Features by mean absolute attribution, descending; ties by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub features: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rank", "feature", "mean_abs_shap"])?;
        for (i, f) in self.features.iter().enumerate() {
            w.write_record([(i + 1).to_string(), f.name.clone(), f.importance.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut features = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let importance = rec
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidRecord { row: row + 1, message: "bad importance".into() })?;
            features.push(RankedFeature { name: rec.get(1).unwrap_or_default().to_string(), importance });
        }
        Ok(Self { features })
    }
}

pub fn rank_features<T: Real>(attr: &AttributionMatrix<T>) -> FeatureRanking {
    let mut features: Vec<RankedFeature> = attr
        .feature_names
        .iter()
        .zip(attr.mean_abs())
        .map(|(name, importance)| RankedFeature { name: name.clone(), importance })
        .collect();
    features.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.name.cmp(&b.name)));
    FeatureRanking { features }
}

/// The first `k` ranked features not listed in `exclusions`.
pub fn select_top_k(ranking: &FeatureRanking, k: usize, exclusions: &[String]) -> Result<Vec<String>> {
    let kept: Vec<String> = ranking
        .features
        .iter()
        .filter(|f| !exclusions.contains(&f.name))
        .map(|f| f.name.clone())
        .collect();
    if k > kept.len() {
        return Err(Error::KTooLarge { k, available: kept.len() });
    }
    Ok(kept[..k].to_vec())
}

/// The reference boosted configuration used for reduced feature sets.
pub fn simplified_spec() -> RegressorSpec {
    RegressorSpec::boosted(100, MaxDepth::Limited(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedReport {
    pub k: usize,
    pub features: Vec<String>,
    pub report: CvReport,
}

/// Cross-validate `spec` on the top-`k` features only. The reduced dataset
/// keeps the original column order.
pub fn simplify_and_retrain<T: Real>(
    dataset: &SupervisedDataset<T>,
    ranking: &FeatureRanking,
    k: usize,
    exclusions: &[String],
    plan: &FoldPlan,
    preprocess: &PreprocessConfig,
    spec: &RegressorSpec,
) -> Result<SimplifiedReport> {
    let features = select_top_k(ranking, k, exclusions)?;
    let columns = dataset.column_indices(&features)?;
    let reduced = dataset.select_columns(&columns);
    let report = cross_validate(&reduced, spec, plan, preprocess)?;
    Ok(SimplifiedReport { k, features, report })
}

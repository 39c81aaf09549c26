//! Missing-value imputation, min-max scaling and one-hot encoding.
//!
//! The pipeline order is fixed: one-hot encoding (a stateless expansion done
//! when the dataset is assembled), then KNN imputation, then scaling. Both
//! fitted stages see only the rows they are fitted on.

pub mod impute;
pub mod onehot;
pub mod scale;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use impute::{impute_leave_group_out, KnnImputer, DEFAULT_K_NEIGHBORS};
pub use onehot::{expand_schema, one_hot_column_name, one_hot_encode};
pub use scale::MinMaxScaler;

use crate::cohort::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const PREPROCESS_FORMAT_VERSION: u32 = 1;

/// Which rows the imputer and scaler are fitted on during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// Fit on each fold's training rows.
    #[default]
    Fold,
    /// Fit once on the whole dataset.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub k_neighbors: usize,
    pub fit_scope: FitScope,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            k_neighbors: DEFAULT_K_NEIGHBORS,
            fit_scope: FitScope::Fold,
        }
    }
}

/// Fitted imputer and scaler for an expanded (already one-hot encoded) schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PreprocessModel<T: Real> {
    pub format_version: u32,
    pub schema: FeatureSchema,
    pub imputer: KnnImputer<T>,
    pub scaler: MinMaxScaler<T>,
}

impl<T: Real> PreprocessModel<T> {
    pub fn fit(x_fit: &Array2<T>, schema: &FeatureSchema, k_neighbors: usize) -> Result<Self> {
        if x_fit.ncols() != schema.len() {
            return Err(Error::ShapeMismatch(format!(
                "fit matrix has {} columns, expanded schema has {}",
                x_fit.ncols(),
                schema.len()
            )));
        }
        let imputer = KnnImputer::fit(x_fit, k_neighbors)?;
        let complete = imputer.transform(x_fit)?;
        let scaler = MinMaxScaler::fit(&complete)?;
        Ok(Self {
            format_version: PREPROCESS_FORMAT_VERSION,
            schema: schema.clone(),
            imputer,
            scaler,
        })
    }

    /// Fit and return the transformed fit matrix without imputing it twice.
    pub fn fit_transform(
        x_fit: &Array2<T>,
        schema: &FeatureSchema,
        k_neighbors: usize,
    ) -> Result<(Self, Array2<T>)> {
        let imputer = KnnImputer::fit(x_fit, k_neighbors)?;
        let complete = imputer.transform(x_fit)?;
        let scaler = MinMaxScaler::fit(&complete)?;
        let scaled = scaler.transform(&complete)?;
        Ok((
            Self {
                format_version: PREPROCESS_FORMAT_VERSION,
                schema: schema.clone(),
                imputer,
                scaler,
            },
            scaled,
        ))
    }

    pub fn impute(&self, x: &Array2<T>) -> Result<Array2<T>> {
        self.imputer.transform(x)
    }

    pub fn transform(&self, x: &Array2<T>) -> Result<Array2<T>> {
        self.scaler.transform(&self.imputer.transform(x)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if model.format_version != PREPROCESS_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_owned(),
                message: format!("unsupported preprocess format {}", model.format_version),
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::schema::{Category, FeatureDef, FeatureKind};
    use ndarray::array;

    fn schema(p: usize) -> FeatureSchema {
        FeatureSchema::new(
            (0..p)
                .map(|j| FeatureDef::new(format!("f{j}"), Category::Habits, FeatureKind::Continuous))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fit_transform_matches_transform_on_fit_split() {
        let x = array![[1.0, f64::NAN], [2.0, 4.0], [3.0, 8.0], [f64::NAN, 2.0]];
        let (model, direct) = PreprocessModel::fit_transform(&x, &schema(2), 2).unwrap();
        assert_eq!(model.transform(&x).unwrap(), direct);
        assert!(direct.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn save_and_load_preserve_outputs() {
        let x = array![[1.0, f64::NAN], [2.0, 4.0], [3.0, 8.0]];
        let model = PreprocessModel::fit(&x, &schema(2), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pre.json");
        model.save(&path).unwrap();
        let back = PreprocessModel::<f64>::load(&path).unwrap();
        assert_eq!(back.transform(&x).unwrap(), model.transform(&x).unwrap());
    }

    #[test]
    fn f32_pipeline_runs() {
        let x: Array2<f32> = array![[1.0, f32::NAN], [2.0, 4.0], [3.0, 8.0]];
        let model = PreprocessModel::fit(&x, &schema(2), 1).unwrap();
        let out = model.transform(&x).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

//! Regressors sharing one fit/predict contract.

pub mod dense;
pub mod ensemble;
pub mod linear;
pub mod spec;
pub mod tree;

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub use dense::{fit_dense, DenseNet};
pub use ensemble::{fit_boosted, fit_forest, TreeEnsemble};
pub use linear::{fit_linear, LinearModel};
pub use spec::{Family, MaxDepth, MaxFeatures, ParamGrid, RegressorSpec};
pub use tree::{fit_tree, Node, RegressionTree};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum FittedModel<T: Real> {
    Linear(LinearModel<T>),
    Forest(TreeEnsemble<T>),
    Boosted(TreeEnsemble<T>),
    Dense(DenseNet<T>),
}

/// A fitted, immutable regressor together with the spec that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainedRegressor<T: Real> {
    pub format_version: u32,
    pub spec: RegressorSpec,
    pub n_features: usize,
    pub model: FittedModel<T>,
}

impl<T: Real> TrainedRegressor<T> {
    pub fn fit(x: &Array2<T>, y: &[T], spec: &RegressorSpec) -> Result<Self> {
        spec.validate()?;
        let model = match spec.family {
            Family::Linear => FittedModel::Linear(fit_linear(x, y)?),
            Family::Forest => FittedModel::Forest(fit_forest(x, y, spec)?),
            Family::Boosted => FittedModel::Boosted(fit_boosted(x, y, spec)?),
            Family::Dense => FittedModel::Dense(fit_dense(x, y, spec)?),
        };
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            spec: spec.clone(),
            n_features: x.ncols(),
            model,
        })
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    /// Raw predictions; no clamping to the score range.
    pub fn predict(&self, x: &Array2<T>) -> Result<Array1<T>> {
        if x.ncols() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "model trained on {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(match &self.model {
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Forest(m) | FittedModel::Boosted(m) => m.predict(x),
            FittedModel::Dense(m) => m.predict(x),
        })
    }

    pub fn ensemble(&self) -> Option<&TreeEnsemble<T>> {
        match &self.model {
            FittedModel::Forest(m) | FittedModel::Boosted(m) => Some(m),
            _ => None,
        }
    }

    /// Same model restricted to its first `trees` members (tree families only).
    pub fn truncated(&self, trees: usize) -> Option<Self> {
        let ens = self.ensemble()?.truncated(self.family(), trees);
        let model = match self.family() {
            Family::Forest => FittedModel::Forest(ens),
            _ => FittedModel::Boosted(ens),
        };
        Some(Self {
            spec: RegressorSpec { trees, ..self.spec.clone() },
            model,
            ..self.clone()
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_owned(),
                message: format!("unsupported model format_version {}", model.format_version),
            });
        }
        Ok(model)
    }
}

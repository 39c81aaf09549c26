use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::{mae, mse};
use crate::cohort::SupervisedDataset;
use crate::error::{Error, Result};
use crate::learners::{Family, ParamGrid, RegressorSpec, TrainedRegressor};
use crate::preprocess::{impute_leave_group_out, FitScope, MinMaxScaler, PreprocessConfig, PreprocessModel};
use crate::scalar::Real;

/// One fold's preprocessed train/test split.
#[derive(Debug, Clone)]
pub struct PreparedFold<T: Real> {
    pub fold: usize,
    pub train_x: Array2<T>,
    pub train_y: Vec<T>,
    pub test_x: Array2<T>,
    pub test_y: Vec<T>,
    pub test_rows: Vec<usize>,
}

/// Preprocess every fold once so that all grid cells reuse the same inputs.
pub fn prepare_folds<T: Real>(
    dataset: &SupervisedDataset<T>,
    plan: &FoldPlan,
    config: &PreprocessConfig,
) -> Result<Vec<PreparedFold<T>>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cross-validation input".into()));
    }
    if plan.n() != dataset.len() {
        return Err(Error::InvalidFolds(format!(
            "plan covers {} samples, dataset has {}",
            plan.n(),
            dataset.len()
        )));
    }
    let (global, fold_fills) = match config.fit_scope {
        FitScope::Global => {
            let (_, all) = PreprocessModel::fit_transform(&dataset.x, &dataset.schema, config.k_neighbors)?;
            (Some(all), Vec::new())
        }
        // Same result as fitting an imputer on each fold's training rows,
        // with the row distances shared across folds.
        FitScope::Fold => (
            None,
            impute_leave_group_out(&dataset.x, config.k_neighbors, &plan.assignments, plan.k)?,
        ),
    };
    (0..plan.k)
        .into_par_iter()
        .map(|fold| -> Result<PreparedFold<T>> {
            let train = plan.train_indices(fold);
            let test = plan.test_indices(fold);
            let pick = |rows: &[usize]| rows.iter().map(|&i| dataset.y[i]).collect::<Vec<T>>();
            let (train_x, test_x) = match &global {
                Some(all) => (all.select(Axis(0), &train), all.select(Axis(0), &test)),
                None => {
                    let mut complete = dataset.x.clone();
                    for &(i, j, v) in &fold_fills[fold] {
                        complete[[i, j]] = v;
                    }
                    let in_fold = |e| Error::Fold { fold, source: Box::new(e) };
                    let train_x = complete.select(Axis(0), &train);
                    let scaler = MinMaxScaler::fit(&train_x).map_err(in_fold)?;
                    let test_x = scaler.transform(&complete.select(Axis(0), &test)).map_err(in_fold)?;
                    (scaler.transform(&train_x).map_err(in_fold)?, test_x)
                }
            };
            Ok(PreparedFold {
                fold,
                train_x,
                train_y: pick(&train),
                test_x,
                test_y: pick(&test),
                test_rows: test,
            })
        })
        .collect()
}

/// Per-fold and aggregate errors of one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub spec: RegressorSpec,
    pub fold_mae: Vec<f64>,
    pub fold_mse: Vec<f64>,
    pub mean_mae: f64,
    pub mean_mse: f64,
    /// Wall time per fold. Cells that share a fitted ensemble prefix report
    /// the shared fit time plus their own prediction time.
    pub fold_seconds: Vec<f64>,
}

impl CvReport {
    fn from_folds(spec: RegressorSpec, folds: Vec<(f64, f64, f64)>) -> Self {
        let k = folds.len() as f64;
        let fold_mae: Vec<f64> = folds.iter().map(|f| f.0).collect();
        let fold_mse: Vec<f64> = folds.iter().map(|f| f.1).collect();
        Self {
            mean_mae: fold_mae.iter().sum::<f64>() / k,
            mean_mse: fold_mse.iter().sum::<f64>() / k,
            fold_mae,
            fold_mse,
            fold_seconds: folds.iter().map(|f| f.2).collect(),
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { report: CvReport },
    Failed { spec: RegressorSpec, fold: usize, message: String },
}

impl CellOutcome {
    pub fn spec(&self) -> &RegressorSpec {
        match self {
            CellOutcome::Ok { report } => &report.spec,
            CellOutcome::Failed { spec, .. } => spec,
        }
    }

    pub fn report(&self) -> Option<&CvReport> {
        match self {
            CellOutcome::Ok { report } => Some(report),
            CellOutcome::Failed { .. } => None,
        }
    }
}

/// Specs that differ only in tree count share one fit of the largest count.
fn group_key(spec: &RegressorSpec) -> String {
    let mut key = spec.clone();
    if spec.family.is_tree_ensemble() {
        key.trees = 0;
    }
    serde_json::to_string(&key).expect("spec serializes")
}

fn score<T: Real>(model: &TrainedRegressor<T>, fold: &PreparedFold<T>) -> Result<(f64, f64)> {
    let pred = model.predict(&fold.test_x)?;
    let pred = pred.as_slice().expect("contiguous");
    Ok((mae(&fold.test_y, pred)?.as_f64(), mse(&fold.test_y, pred)?.as_f64()))
}

type FoldResult = Result<Vec<(f64, f64, f64)>>;

/// Cross-validate each spec on already prepared folds; outcomes follow the
/// order of `specs`.
pub fn evaluate_specs<T: Real>(folds: &[PreparedFold<T>], specs: &[RegressorSpec]) -> Vec<CellOutcome> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        groups.entry(group_key(s)).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let jobs: Vec<(usize, usize)> =
        (0..groups.len()).flat_map(|g| (0..folds.len()).map(move |f| (g, f))).collect();

    // For each (group, fold): per-member (mae, mse, seconds) in group order.
    let results: Vec<FoldResult> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let members = &groups[g];
            let fold = &folds[f];
            let largest = members.iter().map(|&i| specs[i].trees).max().unwrap_or(0);
            let fit_spec = RegressorSpec { trees: largest, ..specs[members[0]].clone() };
            let start = Instant::now();
            let model = TrainedRegressor::fit(&fold.train_x, &fold.train_y, &fit_spec)?;
            let fit_time = start.elapsed().as_secs_f64();
            members
                .iter()
                .map(|&i| {
                    let t0 = Instant::now();
                    let (a, b) = if specs[i].family.is_tree_ensemble() {
                        score(&model.truncated(specs[i].trees).expect("tree family"), fold)?
                    } else {
                        score(&model, fold)?
                    };
                    Ok((a, b, fit_time + t0.elapsed().as_secs_f64()))
                })
                .collect()
        })
        .collect();

    let mut per_spec: Vec<Vec<(f64, f64, f64)>> = vec![Vec::with_capacity(folds.len()); specs.len()];
    let mut failed: Vec<Option<(usize, String)>> = vec![None; specs.len()];
    for (&(g, f), res) in jobs.iter().zip(results) {
        match res {
            Ok(rows) => {
                for (&i, row) in groups[g].iter().zip(rows) {
                    per_spec[i].push(row);
                }
            }
            Err(e) => {
                for &i in &groups[g] {
                    if failed[i].is_none() {
                        failed[i] = Some((folds[f].fold, e.to_string()));
                    }
                }
            }
        }
    }
    specs
        .iter()
        .zip(per_spec.into_iter().zip(failed))
        .map(|(spec, (rows, fail))| match fail {
            Some((fold, message)) => CellOutcome::Failed { spec: spec.clone(), fold, message },
            None => CellOutcome::Ok { report: CvReport::from_folds(spec.clone(), rows) },
        })
        .collect()
}

pub fn cross_validate<T: Real>(
    dataset: &SupervisedDataset<T>,
    spec: &RegressorSpec,
    plan: &FoldPlan,
    config: &PreprocessConfig,
) -> Result<CvReport> {
    spec.validate()?;
    let folds = prepare_folds(dataset, plan, config)?;
    cross_validate_prepared(&folds, spec)
}

pub fn cross_validate_prepared<T: Real>(folds: &[PreparedFold<T>], spec: &RegressorSpec) -> Result<CvReport> {
    match evaluate_specs(folds, std::slice::from_ref(spec)).pop().expect("one spec") {
        CellOutcome::Ok { report } => Ok(report),
        CellOutcome::Failed { fold, message, .. } => Err(Error::Fold {
            fold,
            source: Box::new(Error::InvalidSpec(message)),
        }),
    }
}

/// Sort by mean MAE, then fewer trees, shallower depth, fewer neurons;
/// failed cells go last in their original order.
pub fn rank_cells(cells: &mut [CellOutcome]) {
    cells.sort_by(|a, b| match (a.report(), b.report()) {
        (Some(x), Some(y)) => x
            .mean_mae
            .total_cmp(&y.mean_mae)
            .then_with(|| x.spec.complexity_key().cmp(&y.spec.complexity_key())),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
}

/// Exhaustive search over `grid` for one family, ranked best first.
pub fn grid_search<T: Real>(
    folds: &[PreparedFold<T>],
    family: Family,
    grid: &ParamGrid,
    template: &RegressorSpec,
) -> Result<Vec<CellOutcome>> {
    let template = RegressorSpec { family, ..template.clone() };
    let specs = grid.expand(&template)?;
    let mut cells = evaluate_specs(folds, &specs);
    rank_cells(&mut cells);
    Ok(cells)
}

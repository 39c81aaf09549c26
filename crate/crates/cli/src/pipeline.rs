//! Subcommands as steps over one output directory. Each step writes its own
//! artifacts and a `manifest_<step>.json`; `replicate` runs the steps in
//! order inside one session so intermediate results are computed once.

use std::path::{Path, PathBuf};

use ndarray::Axis;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sppb_forecast::cohort::{build_wave_pairs, generate_synthetic_cohort, ingest_cohort, write_cohort_file, IngestOptions};
use sppb_forecast::eval::{
    cross_validate_prepared, evaluate_specs, make_folds, make_stratified_folds, mae, mse, prepare_folds, rank_cells,
    read_json, write_json, write_summary_csv, CellOutcome, CvReport, FoldPlan, PreparedFold, SummaryRow,
};
use sppb_forecast::learners::{Family, RegressorSpec, TrainedRegressor};
use sppb_forecast::preprocess::PreprocessModel;
use sppb_forecast::shap::{
    export_beeswarm, rank_features, select_top_k, simplified_spec, tree_shap, FeatureRanking, SimplifiedReport,
};
use sppb_forecast::{Dataset, FeatureSchema, ParticipantWaveRecord};

use crate::config::{hex, ConfigError, ExplainSplit, RunConfig};

pub const TOOL_NAME: &str = "sppb";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Synth,
    Build,
    Train,
    Sweep,
    Explain,
    Simplify,
    Replicate,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::Synth => "synth",
            Step::Build => "build",
            Step::Train => "train",
            Step::Sweep => "sweep",
            Step::Explain => "explain",
            Step::Simplify => "simplify",
            Step::Replicate => "replicate",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data error: {0}")]
    Data(sppb_forecast::Error),
    #[error("fit error: {0}")]
    Fit(sppb_forecast::Error),
}

impl From<sppb_forecast::Error> for RunError {
    fn from(e: sppb_forecast::Error) -> Self {
        if e.is_data_error() {
            RunError::Data(e)
        } else {
            RunError::Fit(e)
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Fit(_) => 4,
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

fn file_entry(path: &Path, shown: String) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| RunError::Data(io_error(path, e)))?;
    Ok(FileEntry { path: shown, sha256: hex(&Sha256::digest(&bytes)), bytes: bytes.len() as u64 })
}

fn io_error(path: &Path, e: std::io::Error) -> sppb_forecast::Error {
    sppb_forecast::Error::Io { path: path.to_owned(), source: e }
}

/// Everything one invocation computes, cached across the steps it runs.
pub struct Session<'a> {
    config: &'a RunConfig,
    config_path: PathBuf,
    hash: String,
    verbosity: u8,
    schema: Option<FeatureSchema>,
    records: Option<Vec<ParticipantWaveRecord>>,
    dataset: Option<Dataset>,
    plan: Option<FoldPlan>,
    folds: Option<Vec<PreparedFold<f64>>>,
    sweep: Option<SweepResults>,
    ranking: Option<FeatureRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mean_mae: f64,
    pub mean_mse: f64,
    pub fold_mae: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCells {
    pub family: Family,
    /// Best first.
    pub cells: Vec<CellOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub config_hash: String,
    pub n_samples: usize,
    pub baseline: Baseline,
    pub families: Vec<FamilyCells>,
}

impl SweepResults {
    pub fn best(&self, family: Family) -> Option<&CellOutcome> {
        self.families
            .iter()
            .find(|f| f.family == family)
            .and_then(|f| f.cells.first())
            .filter(|c| c.report().is_some())
    }

    /// The cell evaluated with exactly `spec`, if any.
    pub fn find(&self, spec: &RegressorSpec) -> Option<&CvReport> {
        self.families
            .iter()
            .flat_map(|f| &f.cells)
            .filter_map(CellOutcome::report)
            .find(|r| &r.spec == spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub config_hash: String,
    pub spec: RegressorSpec,
    pub split: ExplainSplit,
    pub n_rows: usize,
    pub base_value: f64,
    /// Largest |base + sum(phi) - prediction| over the attributed rows.
    pub max_local_accuracy_error: f64,
    pub top_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifyReport {
    pub config_hash: String,
    pub spec: RegressorSpec,
    pub exclusions: Vec<String>,
    pub all_features: CvReport,
    pub reduced: Vec<SimplifiedReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSummary {
    pub k: usize,
    pub mean_mae: f64,
    /// Reduced minus all-feature mean MAE.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub config_hash: String,
    pub n_samples: usize,
    pub baseline_mae: f64,
    pub reference_spec: String,
    pub reference_mae: f64,
    /// 1 - reference / baseline.
    pub reference_improvement: f64,
    pub best: Vec<SummaryRow>,
    pub top_features: Vec<String>,
    pub reduced: Vec<ReducedSummary>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Predict the training-fold mean target for every held-out sample.
pub fn baseline(folds: &[PreparedFold<f64>]) -> Result<Baseline> {
    let mut fold_mae = Vec::with_capacity(folds.len());
    let mut fold_mse = Vec::with_capacity(folds.len());
    for f in folds {
        let pred = vec![mean(&f.train_y); f.test_y.len()];
        fold_mae.push(mae(&f.test_y, &pred)?);
        fold_mse.push(mse(&f.test_y, &pred)?);
    }
    Ok(Baseline { mean_mae: mean(&fold_mae), mean_mse: mean(&fold_mse), fold_mae })
}

fn baseline_row(b: &Baseline) -> SummaryRow {
    SummaryRow {
        model: "baseline".into(),
        mae: Some(b.mean_mae),
        mse: Some(b.mean_mse),
        parameters: "training mean".into(),
        status: "ok".into(),
    }
}

impl<'a> Session<'a> {
    pub fn new(config: &'a RunConfig, config_path: &Path, verbosity: u8) -> Self {
        Self {
            config,
            config_path: config_path.to_owned(),
            hash: config.hash(),
            verbosity,
            schema: None,
            records: None,
            dataset: None,
            plan: None,
            folds: None,
            sweep: None,
            ranking: None,
        }
    }

    fn log(&self, level: u8, msg: impl AsRef<str>) {
        if self.verbosity >= level {
            eprintln!("[{TOOL_NAME}] {}", msg.as_ref());
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.output.directory.join(name)
    }

    fn schema(&mut self) -> Result<FeatureSchema> {
        if self.schema.is_none() {
            self.schema = Some(match &self.config.data.schema {
                Some(p) => FeatureSchema::load(p)?,
                None => FeatureSchema::elsa_default(),
            });
        }
        Ok(self.schema.clone().expect("set above"))
    }

    fn records(&mut self) -> Result<&[ParticipantWaveRecord]> {
        if self.records.is_none() {
            self.schema()?;
            let records = self.read_records()?;
            self.records = Some(records);
        }
        Ok(self.records.as_deref().expect("set above"))
    }

    fn read_records(&self) -> Result<Vec<ParticipantWaveRecord>> {
        let schema = self.schema.clone().expect("schema loaded first");
        let data = &self.config.data;
        Ok(match (&data.synthetic, &data.file) {
            (Some(s), _) => {
                self.log(1, format!("generating {} synthetic participants (seed {})", s.n_participants, s.seed));
                generate_synthetic_cohort(s.seed, s.n_participants, &schema)?
            }
            (None, Some(f)) => {
                self.log(1, format!("reading cohort {}", f.path.display()));
                let options = IngestOptions { delimiter: f.delimiter as u8 };
                ingest_cohort(&f.path, &schema, &data.column_map, options)?
            }
            (None, None) => unreachable!("validated config has a data source"),
        })
    }

    fn dataset(&mut self) -> Result<&Dataset> {
        if self.dataset.is_none() {
            let schema = self.schema()?;
            let config = self.config;
            let records = self.records()?;
            let ds = build_wave_pairs(records, &schema, &config.cutoffs, config.data.ages())?;
            self.log(1, format!("{} samples, {} features", ds.len(), ds.n_features()));
            self.dataset = Some(ds);
        }
        Ok(self.dataset.as_ref().expect("set above"))
    }

    fn plan(&mut self) -> Result<FoldPlan> {
        if self.plan.is_none() {
            let cv = self.config.cv;
            let ds = self.dataset()?;
            let plan = if cv.stratified {
                make_stratified_folds(ds.y.as_slice().expect("contiguous"), cv.k, cv.seed)?
            } else {
                make_folds(ds.len(), cv.k, cv.seed)?
            };
            self.plan = Some(plan);
        }
        Ok(self.plan.clone().expect("set above"))
    }

    fn folds(&mut self) -> Result<&[PreparedFold<f64>]> {
        if self.folds.is_none() {
            let plan = self.plan()?;
            self.log(1, format!("preprocessing {} folds", plan.k));
            let config = self.config;
            let folds = prepare_folds(self.dataset()?, &plan, &config.preprocess)?;
            self.folds = Some(folds);
        }
        Ok(self.folds.as_deref().expect("set above"))
    }

    fn manifest(&mut self, step: Step, outputs: &[PathBuf]) -> Result<PathBuf> {
        let mut inputs = vec![file_entry(&self.config_path, self.config_path.display().to_string())?];
        if let Some(f) = &self.config.data.file {
            inputs.push(file_entry(&f.path, f.path.display().to_string())?);
        }
        if let Some(s) = &self.config.data.schema {
            inputs.push(file_entry(s, s.display().to_string())?);
        }
        let outputs = outputs
            .iter()
            .map(|p| {
                let shown = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                file_entry(p, shown)
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            subcommand: step.name().into(),
            config_hash: self.hash.clone(),
            inputs,
            outputs,
        };
        let path = self.out(&format!("manifest_{}.json", step.name()));
        write_json(&path, &manifest)?;
        Ok(path)
    }

    pub fn run(&mut self, step: Step) -> Result<Vec<PathBuf>> {
        let dir = &self.config.output.directory;
        std::fs::create_dir_all(dir).map_err(|e| RunError::Data(io_error(dir, e)))?;
        let outputs = match step {
            Step::Synth => self.synth()?,
            Step::Build => self.build()?,
            Step::Train => self.train()?,
            Step::Sweep => self.sweep()?,
            Step::Explain => self.explain()?,
            Step::Simplify => self.simplify()?,
            Step::Replicate => return self.replicate(),
        };
        self.manifest(step, &outputs)?;
        Ok(outputs)
    }

    fn synth(&mut self) -> Result<Vec<PathBuf>> {
        if self.config.data.synthetic.is_none() {
            return Err(ConfigError::Invalid("`synth` needs a [data.synthetic] source".into()).into());
        }
        let path = self.out("cohort.csv");
        let schema = self.schema()?;
        write_cohort_file(&path, self.records()?, &schema)?;
        Ok(vec![path])
    }

    fn build(&mut self) -> Result<Vec<PathBuf>> {
        #[derive(Serialize)]
        struct DatasetSummary {
            n_samples: usize,
            n_features: usize,
            n_participants: usize,
            samples_by_feature_wave: std::collections::BTreeMap<u8, usize>,
            target_mean: f64,
        }
        let (data_path, summary_path) = (self.out("dataset.csv"), self.out("dataset_summary.json"));
        let ds = self.dataset()?;
        let mut by_wave = std::collections::BTreeMap::new();
        for p in &ds.provenance {
            *by_wave.entry(p.feature_wave).or_insert(0) += 1;
        }
        let participants: std::collections::BTreeSet<&str> =
            ds.provenance.iter().map(|p| p.participant_id.as_str()).collect();
        let summary = DatasetSummary {
            n_samples: ds.len(),
            n_features: ds.n_features(),
            n_participants: participants.len(),
            samples_by_feature_wave: by_wave,
            target_mean: ds.y.mean().unwrap_or(f64::NAN),
        };
        ds.write_csv(&data_path)?;
        write_json(&summary_path, &summary)?;
        Ok(vec![data_path, summary_path])
    }

    fn train(&mut self) -> Result<Vec<PathBuf>> {
        let spec = self.config.model.clone();
        self.log(1, format!("cross-validating {} ({})", spec.family, spec.describe()));
        let folds = self.folds()?;
        let report = cross_validate_prepared(folds, &spec)?;
        let base = baseline(folds)?;
        let k_neighbors = self.config.preprocess.k_neighbors;
        let ds = self.dataset()?;
        let (pre, x) = PreprocessModel::fit_transform(&ds.x, &ds.schema, k_neighbors)?;
        let model = TrainedRegressor::fit(&x, ds.y.as_slice().expect("contiguous"), &spec)?;

        let paths: Vec<PathBuf> =
            ["model.json", "preprocess.json", "train_report.json", "train_summary.csv"].map(|n| self.out(n)).into();
        model.save(&paths[0])?;
        pre.save(&paths[1])?;
        write_json(&paths[2], &report)?;
        let row = SummaryRow::from_cell(spec.family.as_str(), &CellOutcome::Ok { report });
        write_summary_csv(&paths[3], &[baseline_row(&base), row])?;
        Ok(paths)
    }

    fn sweep_results(&mut self) -> Result<&SweepResults> {
        if self.sweep.is_none() {
            let cfg = &self.config.sweep;
            let mut specs = Vec::new();
            let mut owner = Vec::new();
            for &family in &cfg.families {
                let cells = cfg.grid(family).expand(&cfg.template(family))?;
                self.log(1, format!("{family}: {} cells", cells.len()));
                owner.extend(std::iter::repeat_n(family, cells.len()));
                specs.extend(cells);
            }
            let hash = self.hash.clone();
            let folds = self.folds()?;
            let outcomes = evaluate_specs(folds, &specs);
            let base = baseline(folds)?;
            let families = self
                .config
                .sweep
                .families
                .iter()
                .map(|&family| {
                    let mut cells: Vec<CellOutcome> = outcomes
                        .iter()
                        .zip(&owner)
                        .filter(|(_, &f)| f == family)
                        .map(|(c, _)| c.clone())
                        .collect();
                    rank_cells(&mut cells);
                    FamilyCells { family, cells }
                })
                .collect();
            let n_samples = self.dataset()?.len();
            self.sweep = Some(SweepResults { config_hash: hash, n_samples, baseline: base, families });
        }
        Ok(self.sweep.as_ref().expect("set above"))
    }

    fn sweep(&mut self) -> Result<Vec<PathBuf>> {
        let results = self.sweep_results()?.clone();
        let mut rows = vec![baseline_row(&results.baseline)];
        for fam in &results.families {
            for cell in &fam.cells {
                if let CellOutcome::Failed { message, .. } = cell {
                    self.log(0, format!("warning: {} {} failed: {message}", fam.family, cell.spec().describe()));
                }
                rows.push(SummaryRow::from_cell(fam.family.as_str(), cell));
            }
        }
        let (json, csv) = (self.out("sweep_results.json"), self.out("sweep_summary.csv"));
        write_json(&json, &results)?;
        write_summary_csv(&csv, &rows)?;
        Ok(vec![json, csv])
    }

    /// Sweep results of this exact configuration: from this session or from
    /// an earlier `sweep` run in the same output directory.
    fn known_sweep(&mut self) -> Option<SweepResults> {
        if let Some(s) = &self.sweep {
            return Some(s.clone());
        }
        let saved: SweepResults = read_json(&self.out("sweep_results.json")).ok()?;
        (saved.config_hash == self.hash).then(|| {
            self.sweep = Some(saved.clone());
            saved
        })
    }

    /// Best boosted cell of the sweep, or the configured fallback.
    fn explained_spec(&mut self) -> RegressorSpec {
        match self.known_sweep().and_then(|s| s.best(Family::Boosted).map(|c| c.spec().clone())) {
            Some(spec) => spec,
            None => {
                self.log(1, "no sweep result for this config; explaining [explain.fallback_model]");
                self.config.explain.fallback_model.clone()
            }
        }
    }

    fn explain(&mut self) -> Result<Vec<PathBuf>> {
        let spec = self.explained_spec();
        if !spec.family.is_tree_ensemble() {
            return Err(ConfigError::Invalid(format!("cannot explain a {} model with TreeSHAP", spec.family)).into());
        }
        let split = self.config.explain.split;
        let k_neighbors = self.config.preprocess.k_neighbors;
        let (fit_rows, explain_rows) = match split {
            ExplainSplit::All => ((0..self.dataset()?.len()).collect::<Vec<_>>(), None),
            ExplainSplit::Train | ExplainSplit::Test => {
                let plan = self.plan()?;
                let train = plan.train_indices(0);
                let shown = if split == ExplainSplit::Train { train.clone() } else { plan.test_indices(0) };
                (train, Some(shown))
            }
        };
        self.log(1, format!("explaining {} ({}) on {:?} rows", spec.family, spec.describe(), split));
        let ds = self.dataset()?;
        let (pre, fit_x) = PreprocessModel::fit_transform(&ds.x.select(Axis(0), &fit_rows), &ds.schema, k_neighbors)?;
        let fit_y: Vec<f64> = fit_rows.iter().map(|&i| ds.y[i]).collect();
        let model = TrainedRegressor::fit(&fit_x, &fit_y, &spec)?;
        let x = match &explain_rows {
            None => fit_x,
            Some(rows) => pre.transform(&ds.x.select(Axis(0), rows))?,
        };
        let names = ds.feature_names();
        let attr = tree_shap(&model, &x, &names)?;
        let pred = model.predict(&x)?;
        let max_err = (0..x.nrows()).map(|i| (attr.row_total(i) - pred[i]).abs()).fold(0.0, f64::max);
        let ranking = rank_features(&attr);

        let names_out = [
            "explain_model.json",
            "explain_preprocess.json",
            "shap_values.csv",
            "shap_ranking.csv",
            "beeswarm.csv",
            "beeswarm.svg",
            "explain_report.json",
        ];
        let paths: Vec<PathBuf> = names_out.iter().map(|n| self.out(n)).collect();
        model.save(&paths[0])?;
        pre.save(&paths[1])?;
        attr.write_csv(&paths[2])?;
        ranking.write_csv(&paths[3])?;
        let top = self.config.explain.beeswarm_features.min(names.len());
        export_beeswarm(&attr, &x, &ranking, top, &paths[4], &paths[5])?;
        let report = ExplainReport {
            config_hash: self.hash.clone(),
            spec,
            split,
            n_rows: x.nrows(),
            base_value: attr.base_value,
            max_local_accuracy_error: max_err,
            top_features: ranking.names().into_iter().take(20).collect(),
        };
        write_json(&paths[6], &report)?;
        self.ranking = Some(ranking);
        Ok(paths)
    }

    fn known_ranking(&mut self) -> Result<FeatureRanking> {
        if let Some(r) = &self.ranking {
            return Ok(r.clone());
        }
        let saved: Option<ExplainReport> = read_json(&self.out("explain_report.json")).ok();
        if saved.is_some_and(|r| r.config_hash == self.hash) {
            if let Ok(r) = FeatureRanking::read_csv(&self.out("shap_ranking.csv")) {
                return Ok(r);
            }
        }
        self.log(1, "no ranking for this config; running explain first");
        self.run(Step::Explain)?;
        Ok(self.ranking.clone().expect("explain sets the ranking"))
    }

    fn simplify_report(&mut self) -> Result<SimplifyReport> {
        let ranking = self.known_ranking()?;
        let spec = simplified_spec().with_seed(self.config.sweep.model_seed);
        let exclusions = self.config.explain.exclusions.clone();
        let all_features = match self.known_sweep().and_then(|s| s.find(&spec).cloned()) {
            Some(r) => r,
            None => cross_validate_prepared(self.folds()?, &spec)?,
        };
        let plan = self.plan()?;
        let mut reduced = Vec::new();
        for &k in &self.config.explain.top_k {
            let features = select_top_k(&ranking, k, &exclusions)?;
            self.log(1, format!("top {k}: {}", features.join(", ")));
            let ds = self.dataset()?;
            let small = ds.select_columns(&ds.column_indices(&features)?);
            let folds = prepare_folds(&small, &plan, &self.config.preprocess)?;
            let report = cross_validate_prepared(&folds, &spec)?;
            reduced.push(SimplifiedReport { k, features, report });
        }
        Ok(SimplifyReport { config_hash: self.hash.clone(), spec, exclusions, all_features, reduced })
    }

    fn simplify(&mut self) -> Result<Vec<PathBuf>> {
        let report = self.simplify_report()?;
        let mut rows = vec![SummaryRow::from_cell("boosted, all features", &CellOutcome::Ok {
            report: report.all_features.clone(),
        })];
        for r in &report.reduced {
            rows.push(SummaryRow::from_cell(format!("boosted, top {}", r.k), &CellOutcome::Ok {
                report: r.report.clone(),
            }));
        }
        let (json, csv) = (self.out("simplify_report.json"), self.out("simplify_summary.csv"));
        write_json(&json, &report)?;
        write_summary_csv(&csv, &rows)?;
        Ok(vec![json, csv])
    }

    fn replicate(&mut self) -> Result<Vec<PathBuf>> {
        let mut outputs = Vec::new();
        let mut steps = vec![Step::Build, Step::Sweep, Step::Explain, Step::Simplify];
        if self.config.data.synthetic.is_some() {
            steps.insert(0, Step::Synth);
        }
        for step in steps {
            self.log(1, format!("== {}", step.name()));
            outputs.extend(self.run(step)?);
            outputs.push(self.out(&format!("manifest_{}.json", step.name())));
        }
        let sweep = self.known_sweep().expect("sweep ran");
        let simplify: SimplifyReport = read_json(&self.out("simplify_report.json"))?;
        let ranking = self.ranking.clone().expect("explain ran");

        let mut best = vec![baseline_row(&sweep.baseline)];
        for fam in &sweep.families {
            if let Some(cell) = fam.cells.first() {
                best.push(SummaryRow::from_cell(fam.family.as_str(), cell));
            }
        }
        let reference = &simplify.all_features;
        let report = ReplicateReport {
            config_hash: self.hash.clone(),
            n_samples: sweep.n_samples,
            baseline_mae: sweep.baseline.mean_mae,
            reference_spec: reference.spec.describe(),
            reference_mae: reference.mean_mae,
            reference_improvement: 1.0 - reference.mean_mae / sweep.baseline.mean_mae,
            best: best.clone(),
            top_features: ranking.names().into_iter().take(20).collect(),
            reduced: simplify
                .reduced
                .iter()
                .map(|r| ReducedSummary {
                    k: r.k,
                    mean_mae: r.report.mean_mae,
                    gap: r.report.mean_mae - reference.mean_mae,
                })
                .collect(),
        };
        let (summary, json) = (self.out("summary.csv"), self.out("replicate_report.json"));
        write_summary_csv(&summary, &best)?;
        write_json(&json, &report)?;
        outputs.push(summary);
        outputs.push(json);
        self.manifest(Step::Replicate, &outputs)?;
        Ok(outputs)
    }
}

/// Parse, validate and run one step.
pub fn run_from_path(config_path: &Path, step: Step, verbosity: u8) -> Result<Vec<PathBuf>> {
    let config = RunConfig::load(config_path)?;
    Session::new(&config, config_path, verbosity).run(step)
}

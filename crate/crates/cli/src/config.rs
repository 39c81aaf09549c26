//! The run configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sppb_forecast::cohort::{AgeBounds, ColumnMap};
use sppb_forecast::learners::{Family, ParamGrid, RegressorSpec};
use sppb_forecast::preprocess::PreprocessConfig;
use sppb_forecast::shap::{default_exclusions, simplified_spec};
use sppb_forecast::CutoffTable;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub data: DataConfig,
    #[serde(default)]
    pub cutoffs: CutoffTable,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    /// The spec fitted by `train`.
    #[serde(default = "simplified_spec")]
    pub model: RegressorSpec,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub explain: ExplainConfig,
    pub output: OutputConfig,
    /// Hash of the file as written, before paths were resolved.
    #[serde(skip)]
    written_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub seed: u64,
    pub n_participants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub path: PathBuf,
    #[serde(default = "comma")]
    pub delimiter: char,
}

fn comma() -> char {
    ','
}

/// Exactly one of `synthetic` and `file` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub synthetic: Option<SyntheticSource>,
    pub file: Option<FileSource>,
    /// Feature schema; the shipped default when absent.
    pub schema: Option<PathBuf>,
    #[serde(default)]
    pub column_map: ColumnMap,
    #[serde(default = "default_min_age")]
    pub min_age: f64,
    #[serde(default = "default_max_age")]
    pub max_age: f64,
}

fn default_min_age() -> f64 {
    AgeBounds::default().min_age
}

fn default_max_age() -> f64 {
    AgeBounds::default().max_age
}

impl DataConfig {
    pub fn ages(&self) -> AgeBounds {
        AgeBounds { min_age: self.min_age, max_age: self.max_age }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub families: Vec<Family>,
    /// Per-family grid overrides; families not listed use the standard grid.
    pub forest: Option<ParamGrid>,
    pub boosted: Option<ParamGrid>,
    pub dense: Option<ParamGrid>,
    /// Dense training length for every grid cell.
    pub dense_epochs: usize,
    pub model_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            forest: None,
            boosted: None,
            dense: None,
            dense_epochs: sppb_forecast::learners::spec::DEFAULT_EPOCHS,
            model_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self, family: Family) -> ParamGrid {
        let custom = match family {
            Family::Linear => None,
            Family::Forest => self.forest.clone(),
            Family::Boosted => self.boosted.clone(),
            Family::Dense => self.dense.clone(),
        };
        custom.unwrap_or_else(|| ParamGrid::standard(family))
    }

    pub fn template(&self, family: Family) -> RegressorSpec {
        let mut spec = RegressorSpec::new(family).with_seed(self.model_seed);
        if family == Family::Dense {
            spec.epochs = self.dense_epochs;
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// Balance folds over the target score.
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: sppb_forecast::eval::DEFAULT_FOLDS, seed: 0, stratified: false }
    }
}

/// Rows whose attributions are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainSplit {
    /// Preprocess and fit on every row, attribute every row.
    #[default]
    All,
    /// Fit on the training rows of fold 0, attribute those rows.
    Train,
    /// Fit on the training rows of fold 0, attribute its held-out rows.
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    pub top_k: Vec<usize>,
    pub exclusions: Vec<String>,
    pub split: ExplainSplit,
    pub beeswarm_features: usize,
    /// Spec explained when no sweep result is available.
    pub fallback_model: RegressorSpec,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            top_k: vec![10, 15, 20],
            exclusions: default_exclusions(),
            split: ExplainSplit::All,
            beeswarm_features: 15,
            fallback_model: simplified_spec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl RunConfig {
    /// Parse and validate; relative paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })?;
        cfg.written_hash = Some(cfg.hash());
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(f) = &mut self.data.file {
            fix(&mut f.path);
        }
        if let Some(s) = &mut self.data.schema {
            fix(s);
        }
        fix(&mut self.output.directory);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.config_version != CONFIG_VERSION {
            return bad(format!(
                "config_version {} is not supported (expected {CONFIG_VERSION})",
                self.config_version
            ));
        }
        match (&self.data.synthetic, &self.data.file) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("exactly one of [data.synthetic] and [data.file] is required".into())
            }
            (Some(s), None) if s.n_participants == 0 => {
                return bad("data.synthetic.n_participants must be positive".into())
            }
            (None, Some(f)) if !f.path.is_file() => {
                return bad(format!("data file {} does not exist", f.path.display()))
            }
            (None, Some(f)) if !f.delimiter.is_ascii() => {
                return bad("data.file.delimiter must be a single ASCII character".into())
            }
            _ => {}
        }
        if let Some(s) = &self.data.schema {
            if !s.is_file() {
                return bad(format!("schema file {} does not exist", s.display()));
            }
        }
        if self.data.min_age.is_nan() || self.data.max_age.is_nan() || self.data.min_age > self.data.max_age {
            return bad("data.min_age must not exceed data.max_age".into());
        }
        if self.cv.k < 2 {
            return bad(format!("cv.k must be at least 2, got {}", self.cv.k));
        }
        if self.preprocess.k_neighbors == 0 {
            return bad("preprocess.k_neighbors must be at least 1".into());
        }
        self.cutoffs.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.model.validate().map_err(|e| ConfigError::Invalid(format!("[model]: {e}")))?;
        self.explain
            .fallback_model
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("[explain.fallback_model]: {e}")))?;
        if self.sweep.families.is_empty() {
            return bad("sweep.families must name at least one family".into());
        }
        for &family in &self.sweep.families {
            self.sweep
                .grid(family)
                .expand(&self.sweep.template(family))
                .map_err(|e| ConfigError::Invalid(format!("[sweep] {family}: {e}")))?;
        }
        if self.explain.top_k.contains(&0) {
            return bad("explain.top_k entries must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, so that any field change
    /// (including one that restates a default) changes the hash exactly when
    /// the effective configuration changes. Relative paths enter as written,
    /// so a config hashes the same wherever the project is checked out.
    pub fn hash(&self) -> String {
        if let Some(h) = &self.written_hash {
            return h.clone();
        }
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
config_version = 1
[data.synthetic]
seed = 1
n_participants = 50
[output]
directory = "out"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.cv.k, 10);
        assert_eq!(cfg.explain.top_k, vec![10, 15, 20]);
        assert_eq!(cfg.sweep.families, Family::ALL.to_vec());
        assert_eq!(cfg.model.describe(), "trees:100, depth:2");
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.cv.seed = 1;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.cutoffs.chair_s[3] = 59.0;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        let both = MINIMAL.replace("[output]", "[data.file]\npath = \"x.csv\"\n[output]");
        assert!(RunConfig::from_toml_str(&both).unwrap().validate().is_err());
        let k1 = format!("{MINIMAL}\n[cv]\nk = 1\n");
        assert!(RunConfig::from_toml_str(&k1).unwrap().validate().is_err());
        let unknown = format!("{MINIMAL}\n[cv]\nfolds = 3\n");
        assert!(RunConfig::from_toml_str(&unknown).is_err());
        let version = MINIMAL.replace("config_version = 1", "config_version = 9");
        assert!(RunConfig::from_toml_str(&version).unwrap().validate().is_err());
    }

    #[test]
    fn depth_written_as_none() {
        let text = format!("{MINIMAL}\n[sweep.boosted]\ntrees = [5]\nmax_depth = [2, \"none\"]\n");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.sweep.grid(Family::Boosted).expand(&cfg.sweep.template(Family::Boosted)).unwrap().len(), 2);
    }
}

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default schema reconstructed from the cohort variable categories.
pub const DEFAULT_SCHEMA_TOML: &str = include_str!("../../schema/elsa_default.toml");

pub const SCHEMA_VERSION: u32 = 1;

/// Variable groups of the questionnaire, plus a group for scores computed
/// from the timed tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Demographics,
    HealthState,
    MedicalProcedures,
    RecentMedicalHistory,
    PhysicalCapabilities,
    SensoryCapabilities,
    CognitiveFunctions,
    FallsOutcomes,
    PhysicalPerformance,
    DailyFunctioning,
    Habits,
    PhysicalMeasures,
    Derived,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Category::Demographics,
        Category::HealthState,
        Category::MedicalProcedures,
        Category::RecentMedicalHistory,
        Category::PhysicalCapabilities,
        Category::SensoryCapabilities,
        Category::CognitiveFunctions,
        Category::FallsOutcomes,
        Category::PhysicalPerformance,
        Category::DailyFunctioning,
        Category::Habits,
        Category::PhysicalMeasures,
        Category::Derived,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Binary,
    Ordinal,
    Nominal,
}

/// Timed-test raw value a feature column is filled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredTime {
    SideBySide,
    SemiTandem,
    FullTandem,
    Gait,
    ChairStand,
}

/// SPPB score a derived feature column is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedScore {
    BalanceScore,
    GaitScore,
    ChairScore,
    TotalScore,
}

/// Where a feature's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSource {
    Measured(MeasuredTime),
    Derived(DerivedScore),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalCategory {
    pub code: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDef {
    pub name: String,
    pub category: Category,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_codes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<NominalCategory>,
    /// Absent for questionnaire answers read straight from the cohort file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FeatureSource>,
}

impl FeatureDef {
    pub fn new(name: impl Into<String>, category: Category, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            category,
            kind,
            missing_codes: Vec::new(),
            categories: Vec::new(),
            source: None,
        }
    }

    pub fn is_answer(&self) -> bool {
        self.source.is_none()
    }

    /// Number of columns the feature occupies after one-hot encoding.
    pub fn expanded_width(&self) -> usize {
        match self.kind {
            FeatureKind::Nominal => self.categories.len(),
            _ => 1,
        }
    }

    pub fn is_missing_code(&self, value: f64) -> bool {
        self.missing_codes.contains(&value)
    }
}

/// Ordered feature definitions plus the measurement conventions of the
/// cohort file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    pub schema_version: u32,
    /// Walking course length used by the cohort's gait test.
    pub gait_course_m: f64,
    /// Numeric codes meaning "unable" or "not attempted" in timed-test columns.
    #[serde(default)]
    pub unable_codes: Vec<f64>,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureDef>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        let schema = Self {
            schema_version: SCHEMA_VERSION,
            gait_course_m: crate::sppb::EIGHT_FOOT_COURSE_M,
            unable_codes: Vec::new(),
            features,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn elsa_default() -> Self {
        Self::from_toml_str(DEFAULT_SCHEMA_TOML).expect("shipped schema is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Format {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSchema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.gait_course_m.is_finite() && self.gait_course_m > 0.0) {
            return Err(Error::InvalidSchema("gait_course_m must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{}`", f.name)));
            }
            match f.kind {
                FeatureKind::Nominal => {
                    if f.categories.is_empty() {
                        return Err(Error::InvalidSchema(format!(
                            "nominal feature `{}` declares no categories",
                            f.name
                        )));
                    }
                    let mut labels = BTreeSet::new();
                    for (i, c) in f.categories.iter().enumerate() {
                        if !labels.insert(c.label.as_str())
                            || f.categories[..i].iter().any(|o| o.code == c.code)
                        {
                            return Err(Error::InvalidSchema(format!(
                                "nominal feature `{}` repeats a category",
                                f.name
                            )));
                        }
                    }
                }
                _ if !f.categories.is_empty() => {
                    return Err(Error::InvalidSchema(format!(
                        "only nominal features may declare categories (`{}`)",
                        f.name
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn expanded_width(&self) -> usize {
        self.features.iter().map(FeatureDef::expanded_width).sum()
    }

    pub fn has_nominal(&self) -> bool {
        self.features.iter().any(|f| f.kind == FeatureKind::Nominal)
    }

    /// Expanded column counts per category, in [`Category::ALL`] order.
    pub fn category_counts(&self) -> Vec<(Category, usize)> {
        Category::ALL
            .iter()
            .map(|&c| {
                let n = self
                    .features
                    .iter()
                    .filter(|f| f.category == c)
                    .map(FeatureDef::expanded_width)
                    .sum();
                (c, n)
            })
            .collect()
    }

    /// Schema restricted to the given feature indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            schema_version: self.schema_version,
            gait_course_m: self.gait_course_m,
            unable_codes: self.unable_codes.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
        }
    }

    pub fn is_unable_code(&self, value: f64) -> bool {
        self.unable_codes.contains(&value)
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} features ({} expanded columns)",
            self.len(),
            self.expanded_width()
        )
    }
}

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Forest,
    Boosted,
    Dense,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Linear, Family::Forest, Family::Boosted, Family::Dense];

    pub fn is_tree_ensemble(self) -> bool {
        matches!(self, Family::Forest | Family::Boosted)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Forest => "forest",
            Family::Boosted => "boosted",
            Family::Dense => "dense",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Depth bound of a tree. Written as an integer or the string `"none"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxDepth {
    Limited(usize),
    Unlimited,
}

impl MaxDepth {
    pub fn limit(self) -> Option<usize> {
        match self {
            MaxDepth::Limited(d) => Some(d),
            MaxDepth::Unlimited => None,
        }
    }

    /// Ordering key for "shallower first"; unlimited sorts deepest.
    pub fn rank(self) -> usize {
        self.limit().unwrap_or(usize::MAX)
    }
}

impl fmt::Display for MaxDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxDepth::Limited(d) => write!(f, "{d}"),
            MaxDepth::Unlimited => f.write_str("None"),
        }
    }
}

impl Serialize for MaxDepth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MaxDepth::Limited(d) => s.serialize_u64(*d as u64),
            MaxDepth::Unlimited => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxDepth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(MaxDepth::Limited(v as usize)),
            Raw::Text(t) if t.eq_ignore_ascii_case("none") => Ok(MaxDepth::Unlimited),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "max_depth must be an integer or \"none\", got {t:?}"
            ))),
        }
    }
}

/// Features considered at each forest split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, p / 3)`, the classical regression-forest rule.
    #[default]
    Third,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::Third => (p / 3).max(1),
            MaxFeatures::All => p.max(1),
        }
    }
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.3;
pub const DEFAULT_L2_LEAF_PENALTY: f64 = 1.0;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_STEP_SIZE: f64 = 1e-3;

/// Declarative regressor configuration. Fields a family does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorSpec {
    pub family: Family,
    #[serde(default = "defaults::trees")]
    pub trees: usize,
    #[serde(default = "defaults::max_depth")]
    pub max_depth: MaxDepth,
    #[serde(default = "defaults::one")]
    pub min_samples_leaf: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::l2")]
    pub l2_leaf_penalty: f64,
    #[serde(default)]
    pub max_features: MaxFeatures,
    /// Forest bootstrap resampling; switching it off is a test hook.
    #[serde(default = "defaults::yes")]
    pub bootstrap: bool,
    #[serde(default)]
    pub layer_sizes: Vec<usize>,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::step_size")]
    pub step_size: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::*;
    pub fn trees() -> usize {
        100
    }
    pub fn max_depth() -> MaxDepth {
        MaxDepth::Unlimited
    }
    pub fn one() -> usize {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn learning_rate() -> f64 {
        DEFAULT_LEARNING_RATE
    }
    pub fn l2() -> f64 {
        DEFAULT_L2_LEAF_PENALTY
    }
    pub fn epochs() -> usize {
        DEFAULT_EPOCHS
    }
    pub fn batch_size() -> usize {
        DEFAULT_BATCH_SIZE
    }
    pub fn step_size() -> f64 {
        DEFAULT_STEP_SIZE
    }
}

impl RegressorSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            trees: defaults::trees(),
            max_depth: defaults::max_depth(),
            min_samples_leaf: 1,
            learning_rate: DEFAULT_LEARNING_RATE,
            l2_leaf_penalty: DEFAULT_L2_LEAF_PENALTY,
            max_features: MaxFeatures::default(),
            bootstrap: true,
            layer_sizes: Vec::new(),
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            step_size: DEFAULT_STEP_SIZE,
            seed: 0,
        }
    }

    pub fn linear() -> Self {
        Self::new(Family::Linear)
    }

    pub fn forest(trees: usize, max_depth: MaxDepth) -> Self {
        Self { trees, max_depth, ..Self::new(Family::Forest) }
    }

    pub fn boosted(trees: usize, max_depth: MaxDepth) -> Self {
        Self { trees, max_depth, ..Self::new(Family::Boosted) }
    }

    pub fn dense(layer_sizes: Vec<usize>) -> Self {
        Self { layer_sizes, ..Self::new(Family::Dense) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("{} spec: {m}", self.family)));
        match self.family {
            Family::Linear => {}
            Family::Forest | Family::Boosted => {
                // trees = 0 is allowed for boosting: it is the mean baseline.
                if self.family == Family::Forest && self.trees == 0 {
                    return bad("trees must be positive");
                }
                if self.max_depth == MaxDepth::Limited(0) {
                    return bad("max_depth must be positive or \"none\"");
                }
                if self.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be positive");
                }
                if self.family == Family::Boosted {
                    if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
                        return bad("learning_rate must lie in (0, 1]");
                    }
                    if !(self.l2_leaf_penalty >= 0.0 && self.l2_leaf_penalty.is_finite()) {
                        return bad("l2_leaf_penalty must be finite and non-negative");
                    }
                }
            }
            Family::Dense => {
                if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
                    return bad("layer_sizes must be non-empty and positive");
                }
                if self.batch_size == 0 {
                    return bad("batch_size must be positive");
                }
                if !(self.step_size > 0.0 && self.step_size.is_finite()) {
                    return bad("step_size must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn total_neurons(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    /// Short parameter description in the style of a results table.
    pub fn describe(&self) -> String {
        match self.family {
            Family::Linear => "-".to_string(),
            Family::Forest | Family::Boosted => {
                format!("trees:{}, depth:{}", self.trees, self.max_depth)
            }
            Family::Dense => {
                let sizes: Vec<String> = self.layer_sizes.iter().map(ToString::to_string).collect();
                format!("layers size: {}", sizes.join(" "))
            }
        }
    }

    /// Ranking key used after mean MAE: fewer trees, shallower, fewer neurons.
    pub fn complexity_key(&self) -> (usize, usize, usize) {
        match self.family {
            Family::Forest | Family::Boosted => (self.trees, self.max_depth.rank(), 0),
            Family::Dense => (0, 0, self.total_neurons()),
            Family::Linear => (0, 0, 0),
        }
    }
}

/// Hyperparameter axes searched for one family; expanded as a Cartesian
/// product over a template spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    #[serde(default)]
    pub trees: Vec<usize>,
    #[serde(default)]
    pub max_depth: Vec<MaxDepth>,
    /// Hidden-layer counts of the uniform dense grid.
    #[serde(default)]
    pub layers: Vec<usize>,
    /// Neurons per hidden layer of the uniform dense grid.
    #[serde(default)]
    pub neurons: Vec<usize>,
    /// Additional explicit dense architectures evaluated alongside the grid.
    #[serde(default)]
    pub extra_layer_sizes: Vec<Vec<usize>>,
}

impl ParamGrid {
    pub fn empty() -> Self {
        Self {
            trees: Vec::new(),
            max_depth: Vec::new(),
            layers: Vec::new(),
            neurons: Vec::new(),
            extra_layer_sizes: Vec::new(),
        }
    }

    /// The standard search space for a family.
    pub fn standard(family: Family) -> Self {
        use MaxDepth::*;
        match family {
            Family::Linear => Self::empty(),
            Family::Forest | Family::Boosted => Self {
                trees: vec![10, 50, 100, 200, 300],
                max_depth: vec![Limited(2), Limited(8), Limited(16), Limited(32), Limited(64), Unlimited],
                ..Self::empty()
            },
            Family::Dense => Self {
                layers: vec![2, 3, 4, 5],
                neurons: vec![8, 16, 32, 64, 128],
                extra_layer_sizes: vec![vec![8, 16, 8]],
                ..Self::empty()
            },
        }
    }

    pub fn expand(&self, template: &RegressorSpec) -> Result<Vec<RegressorSpec>> {
        let mut out = Vec::new();
        match template.family {
            Family::Linear => out.push(template.clone()),
            Family::Forest | Family::Boosted => {
                for &depth in &self.max_depth {
                    for &trees in &self.trees {
                        out.push(RegressorSpec { trees, max_depth: depth, ..template.clone() });
                    }
                }
            }
            Family::Dense => {
                for &layers in &self.layers {
                    for &neurons in &self.neurons {
                        out.push(RegressorSpec {
                            layer_sizes: vec![neurons; layers],
                            ..template.clone()
                        });
                    }
                }
                for sizes in &self.extra_layer_sizes {
                    if !out.iter().any(|s| &s.layer_sizes == sizes) {
                        out.push(RegressorSpec { layer_sizes: sizes.clone(), ..template.clone() });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidSpec(format!("empty {} grid", template.family)));
        }
        for s in &out {
            s.validate()?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_tree_grids_have_30_cells() {
        for fam in [Family::Forest, Family::Boosted] {
            let cells = ParamGrid::standard(fam).expand(&RegressorSpec::new(fam)).unwrap();
            assert_eq!(cells.len(), 30);
        }
    }

    #[test]
    fn dense_grid_adds_mixed_architecture() {
        let cells = ParamGrid::standard(Family::Dense)
            .expand(&RegressorSpec::new(Family::Dense))
            .unwrap();
        assert_eq!(cells.len(), 21);
        assert_eq!(cells.last().unwrap().layer_sizes, vec![8, 16, 8]);
    }

    #[test]
    fn max_depth_accepts_int_or_none() {
        #[derive(Deserialize)]
        struct W {
            d: Vec<MaxDepth>,
        }
        let w: W = toml::from_str(r#"d = [2, "none", "None"]"#).unwrap();
        assert_eq!(w.d, vec![MaxDepth::Limited(2), MaxDepth::Unlimited, MaxDepth::Unlimited]);
        assert!(toml::from_str::<W>(r#"d = ["deep"]"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(RegressorSpec::boosted(0, MaxDepth::Limited(2)).validate().is_ok());
        assert!(RegressorSpec::forest(0, MaxDepth::Limited(2)).validate().is_err());
        let mut s = RegressorSpec::boosted(10, MaxDepth::Limited(2));
        s.learning_rate = 1.5;
        assert!(s.validate().is_err());
        assert!(RegressorSpec::dense(vec![]).validate().is_err());
        assert!(RegressorSpec::forest(300, MaxDepth::Limited(16)).validate().is_ok());
    }

    #[test]
    fn describe_matches_table_style() {
        assert_eq!(RegressorSpec::boosted(100, MaxDepth::Limited(2)).describe(), "trees:100, depth:2");
        assert_eq!(RegressorSpec::dense(vec![8, 16, 8]).describe(), "layers size: 8 16 8");
    }
}

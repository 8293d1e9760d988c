//! Pipeline configuration: a TOML file, `section.key=value` overrides and the
//! `KGFORGE_SEED` environment variable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CorpusFormat;
use crate::error::{Error, Result};
use crate::features::DEFAULT_WINDOWS;
use crate::inference::{InferParams, InferenceMode, LearnParams};
use crate::supervision::SupervisionMode;

pub const SEED_ENV: &str = "KGFORGE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub corpus_format: CorpusFormat,
    /// Directory with `places.txt`, `actors.txt`, `incidents.txt`; built-in lists if unset.
    pub gazetteers: Option<PathBuf>,
    /// Rules TOML; built-in rules if unset.
    pub rules: Option<PathBuf>,
    pub piracy_db: Option<PathBuf>,
    pub maritime_db: Option<PathBuf>,
    /// Gold JSONL; without it the test split is scored against supervision labels.
    pub gold: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: PathBuf::from("corpus.jsonl"),
            corpus_format: CorpusFormat::AnnotatedJsonl,
            gazetteers: None,
            rules: None,
            piracy_db: None,
            maritime_db: None,
            gold: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisionConfig {
    pub mode: SupervisionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub windows: Vec<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            windows: DEFAULT_WINDOWS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        let d = LearnParams::default();
        LearningConfig {
            l2: d.l2,
            epochs: d.epochs,
            learning_rate: d.lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub mode: InferenceMode,
    pub n_samples: usize,
    pub burn_in: Option<usize>,
    pub coupling: Option<f64>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        let d = InferParams::default();
        InferenceConfig {
            mode: d.mode,
            n_samples: d.n_samples,
            burn_in: d.burn_in,
            coupling: d.coupling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.072,
            dev_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub balance: u64,
    pub learn: u64,
    pub inference: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            split: 1,
            balance: 2,
            learn: 3,
            inference: 4,
        }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Seeds {
            split: seed,
            balance: seed,
            learn: seed,
            inference: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub min_prob: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { min_prob: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub supervision: SupervisionConfig,
    pub features: FeatureConfig,
    pub learning: LearningConfig,
    pub inference: InferenceConfig,
    pub split: SplitConfig,
    pub seeds: Seeds,
    pub graph: GraphConfig,
}

/// Parse `value` as a TOML value, falling back to a plain string.
fn override_value(value: &str) -> toml::Value {
    toml::from_str::<BTreeMap<String, toml::Value>>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form section.key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let Some((last, sections)) = parts.split_last() else {
        return Err(Error::Config(format!("empty override key in `{assignment}`")));
    };
    let mut cursor = table;
    for s in sections {
        cursor = cursor
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{s}` in override `{key}` is not a table")))?;
    }
    cursor.insert(last.to_string(), override_value(value.trim()));
    Ok(())
}

impl PipelineConfig {
    /// Parse TOML text, apply overrides, then the seed environment value if given.
    /// Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path, overrides: &[String], env_seed: Option<&str>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: PipelineConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(seed) = env_seed {
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
            config.seeds = Seeds::all(seed);
        }
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    /// Load a config file, applying overrides and `KGFORGE_SEED` from the environment.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let env = std::env::var(SEED_ENV).ok();
        Self::from_toml(&text, base, overrides, env.as_deref())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.corpus);
        fix(&mut paths.output);
        for p in [
            &mut paths.gazetteers,
            &mut paths.rules,
            &mut paths.piracy_db,
            &mut paths.maritime_db,
            &mut paths.gold,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.windows.is_empty() || self.features.windows.contains(&0) {
            return Err(Error::Config("features.windows must be non-empty positive sizes".into()));
        }
        if self.inference.n_samples == 0 {
            return Err(Error::Config("inference.n_samples must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.graph.min_prob) {
            return Err(Error::Config("graph.min_prob must lie in [0, 1]".into()));
        }
        if !(self.learning.l2 >= 0.0 && self.learning.learning_rate > 0.0) {
            return Err(Error::Config("learning.l2 must be >= 0 and learning_rate > 0".into()));
        }
        Ok(())
    }

    pub fn learn_params(&self) -> LearnParams {
        LearnParams {
            l2: self.learning.l2,
            epochs: self.learning.epochs,
            lr: self.learning.learning_rate,
            seed: self.seeds.learn,
        }
    }

    pub fn infer_params(&self) -> InferParams {
        InferParams {
            mode: self.inference.mode,
            n_samples: self.inference.n_samples,
            burn_in: self.inference.burn_in,
            seed: self.seeds.inference,
            coupling: self.inference.coupling,
        }
    }

    /// Hash of the configuration with the output directory blanked, so runs that differ
    /// only in where they write share a hash.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.paths.output = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[paths]
corpus = "data/corpus.jsonl"
output = "/tmp/out"

[supervision]
mode = "db-only"

[seeds]
split = 11
"#;

    #[test]
    fn parse_resolve_and_override() {
        let c = PipelineConfig::from_toml(TEXT, Path::new("/base"), &[], None).unwrap();
        assert_eq!(c.paths.corpus, PathBuf::from("/base/data/corpus.jsonl"));
        assert_eq!(c.paths.output, PathBuf::from("/tmp/out"));
        assert_eq!(c.supervision.mode, SupervisionMode::DbOnly);
        assert_eq!(c.seeds.split, 11);
        assert_eq!(c.seeds.learn, Seeds::default().learn);

        let overrides = vec![
            "supervision.mode=both".to_string(),
            "learning.epochs=7".to_string(),
            "features.windows=[1, 2]".to_string(),
            "inference.mode=gibbs".to_string(),
        ];
        let c = PipelineConfig::from_toml(TEXT, Path::new("/base"), &overrides, Some("99")).unwrap();
        assert_eq!(c.supervision.mode, SupervisionMode::Both);
        assert_eq!(c.learning.epochs, 7);
        assert_eq!(c.features.windows, vec![1, 2]);
        assert_eq!(c.inference.mode, InferenceMode::Gibbs);
        assert_eq!(c.seeds, Seeds::all(99));
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        let bad = |text: &str, o: &[&str], env: Option<&str>| {
            let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
            matches!(PipelineConfig::from_toml(text, Path::new("."), &o, env), Err(Error::Config(_)))
        };
        assert!(bad("[paths]\nbogus = 1\n", &[], None));
        assert!(bad(TEXT, &["supervision.mode=sometimes"], None));
        assert!(bad(TEXT, &["no-equals-sign"], None));
        assert!(bad(TEXT, &[], Some("minus-one")));
        assert!(bad(TEXT, &["features.windows=[]"], None));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = PipelineConfig::from_toml(TEXT, Path::new("/base"), &[], None).unwrap();
        let mut b = a.clone();
        b.paths.output = PathBuf::from("/elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.seeds.learn += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        let round = PipelineConfig::from_toml(&a.to_toml(), Path::new("/base"), &[], None).unwrap();
        assert_eq!(round, a);
    }
}

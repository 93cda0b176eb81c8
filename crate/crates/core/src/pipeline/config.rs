use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TextClassifierConfig;
use crate::corpus::{GeneratorConfig, SchemaConfig};
use crate::ensemble::{RANKER_PREDICTOR, TABULAR_PREDICTOR, TEXT_PREDICTOR};
use crate::error::{Error, Result};
use crate::explain::SurrogateConfig;
use crate::ranker::RankerConfig;
use crate::tabular::TabularConfig;

/// Where admissions come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusConfig {
    /// Generated by `gen-synthetic`; without a generator the five planted
    /// fixture codes are used.
    Synthetic {
        #[serde(default)]
        admissions: Option<usize>,
        #[serde(default)]
        generator: Option<GeneratorConfig>,
    },
    /// A directory of MIMIC-style CSV tables.
    Tables {
        dir: PathBuf,
        #[serde(default)]
        schema: SchemaConfig,
        /// `builtin:icd10-32`, `builtin:fixture-5` or a catalog JSON path.
        catalog: String,
    },
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig::Synthetic {
            admissions: None,
            generator: None,
        }
    }
}

impl CorpusConfig {
    pub fn generator(&self) -> Option<GeneratorConfig> {
        match self {
            CorpusConfig::Synthetic { admissions, generator } => {
                let mut g = generator
                    .clone()
                    .unwrap_or_else(|| GeneratorConfig::planted_fixture(admissions.unwrap_or(500)));
                if let Some(n) = admissions {
                    g.admissions = *n;
                }
                Some(g)
            }
            CorpusConfig::Tables { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Predictors to fuse; the first is the fallback and must be `text`.
    pub predictors: Vec<String>,
    pub grid_step: f64,
    /// Tune per-code thresholds on validation instead of a global 0.5.
    pub tune_thresholds: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            predictors: vec![TEXT_PREDICTOR.into(), RANKER_PREDICTOR.into(), TABULAR_PREDICTOR.into()],
            grid_step: 0.05,
            tune_thresholds: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub top_phrases: usize,
    pub surrogate: SurrogateConfig,
    /// Physician annotations to score the evidence against.
    pub annotations: Option<PathBuf>,
    /// Token overlap at which two snippets count as the same evidence.
    pub overlap_threshold: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            top_phrases: 3,
            surrogate: SurrogateConfig::default(),
            annotations: None,
            overlap_threshold: 0.5,
        }
    }
}

/// Everything one pipeline run needs. Relative paths resolve against the
/// config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Overrides every module's own seed.
    pub seed: u64,
    /// Root under which each command writes `<out_dir>/<command>/`.
    pub out_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub split_ratios: [f64; 3],
    pub text: TextClassifierConfig,
    /// Directory of `<code>.txt` guideline files; bundled texts otherwise.
    pub guidelines_dir: Option<PathBuf>,
    pub ranker: RankerConfig,
    /// Synonym JSON; the bundled fixture otherwise.
    pub synonyms: Option<PathBuf>,
    pub tabular: TabularConfig,
    pub ensemble: EnsembleConfig,
    pub explain: ExplainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: crate::SCHEMA_VERSION,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            corpus: CorpusConfig::default(),
            split_ratios: [0.7, 0.15, 0.15],
            text: TextClassifierConfig::default(),
            guidelines_dir: None,
            ranker: RankerConfig::default(),
            synonyms: None,
            tabular: TabularConfig::default(),
            ensemble: EnsembleConfig::default(),
            explain: ExplainConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.out_dir);
        if let CorpusConfig::Tables { dir, catalog, .. } = &mut self.corpus {
            resolve(base, dir);
            if !catalog.starts_with("builtin:") {
                let mut p = PathBuf::from(&*catalog);
                resolve(base, &mut p);
                *catalog = p.to_string_lossy().into_owned();
            }
        }
        for p in [
            self.guidelines_dir.as_mut(),
            self.synonyms.as_mut(),
            self.explain.annotations.as_mut(),
            self.ranker.pretrained_embeddings.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
    }

    /// Pushes the run seed into every module and checks cross-module
    /// settings and referenced inputs.
    pub fn finalize(&mut self) -> Result<()> {
        if self.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Usage(format!(
                "config schema_version {} is not {}",
                self.schema_version,
                crate::SCHEMA_VERSION
            )));
        }
        self.text.model.seed = self.seed;
        self.ranker.seed = self.seed;
        self.explain.surrogate.seed = self.seed;
        let preds = &self.ensemble.predictors;
        if preds.first().map(String::as_str) != Some(TEXT_PREDICTOR) {
            return Err(Error::Usage("ensemble.predictors must start with the text fallback".into()));
        }
        for p in preds {
            if ![TEXT_PREDICTOR, RANKER_PREDICTOR, TABULAR_PREDICTOR].contains(&p.as_str()) {
                return Err(Error::Usage(format!("unknown predictor {p:?}")));
            }
        }
        let mut inputs: Vec<&Path> = Vec::new();
        if let CorpusConfig::Tables { dir, catalog, .. } = &self.corpus {
            inputs.push(dir);
            if !catalog.starts_with("builtin:") {
                inputs.push(Path::new(catalog));
            }
        }
        inputs.extend(
            [
                self.guidelines_dir.as_deref(),
                self.synonyms.as_deref(),
                self.explain.annotations.as_deref(),
                self.ranker.pretrained_embeddings.as_deref(),
            ]
            .into_iter()
            .flatten(),
        );
        if let Some(missing) = inputs.into_iter().find(|p| !p.exists()) {
            return Err(Error::MissingFile(missing.to_path_buf()));
        }
        Ok(())
    }
}

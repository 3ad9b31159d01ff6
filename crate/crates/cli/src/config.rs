//! Pipeline settings resolved from defaults, a key=value file and
//! command-line overrides, in increasing order of precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use gram_mover::corpus::PairLabel;
use gram_mover::embed::SgnsConfig;
use gram_mover::mover::Metric;
use gram_mover::pipeline::{DEFAULT_K, DEFAULT_THRESHOLD};
use gram_mover::synth::SynthConfig;
use gram_mover::textnorm::NormalizationConfig;
use gram_mover::tokenize::Granularity;

use crate::error::CliError;

/// Every key accepted in a config file or through `--set`.
pub const KEYS: &[&str] = &[
    "corpus",
    "cutoff",
    "granularity",
    "embedding_source",
    "vectors",
    "dimension",
    "window",
    "negatives",
    "epochs",
    "initial_step_size",
    "subsample_threshold",
    "min_count",
    "sgns_threads",
    "metric",
    "pruning",
    "k",
    "threshold",
    "seed",
    "output_dir",
    "fold_width",
    "fold_kana",
    "lowercase",
    "strip_symbols",
    "gold",
    "unlisted_as",
    "recipes",
    "duplicates",
    "ingredient_pool",
    "typo_rate",
    "late_originals",
];

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingSource {
    TrainSgns,
    LoadVectors(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub cutoff: Option<NaiveDate>,
    pub granularity: Granularity,
    pub embedding_source: EmbeddingSource,
    pub sgns: SgnsConfig,
    pub metric: Metric,
    pub pruning: bool,
    pub k: usize,
    pub threshold: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub normalization: NormalizationConfig,
    pub gold: Option<PathBuf>,
    pub unlisted_as: Option<PairLabel>,
    pub synth: SynthConfig,
}

/// Raw settings keyed by config key; later inserts win.
#[derive(Debug, Clone, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse_file(text: &str, origin: &Path) -> Result<Settings, CliError> {
        let mut settings = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("{}:{}: {msg}", origin.display(), n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got `{line}`")))?;
            let key = key.trim();
            if settings.0.contains_key(key) {
                return Err(at(format!("key `{key}` set twice")));
            }
            settings.set(key, value.trim()).map_err(|e| at(e.to_string()))?;
        }
        Ok(settings)
    }

    /// Applies `KEY=VALUE` overrides.
    pub fn apply_assignments(&mut self, assignments: &[String]) -> Result<(), CliError> {
        for a in assignments {
            let (key, value) = a
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{a}`")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: Settings) {
        self.0.extend(other.0);
    }

    fn get<T>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|e| field(key, raw, e)),
        }
    }

    fn get_opt<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.0.get(key).filter(|v| !v.is_empty()) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| field(key, raw, e)),
        }
    }

    fn get_bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.0.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(field(key, &v, "expected true or false")),
            },
        }
    }

    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let base = SgnsConfig::default();
        let seed = self.get("seed", base.seed)?;
        let sgns = SgnsConfig {
            dimension: self.get("dimension", base.dimension)?,
            window: self.get("window", base.window)?,
            negatives: self.get("negatives", base.negatives)?,
            epochs: self.get("epochs", base.epochs)?,
            initial_step_size: self.get("initial_step_size", base.initial_step_size)?,
            subsample_threshold: self.get("subsample_threshold", base.subsample_threshold)?,
            min_count: self.get("min_count", base.min_count)?,
            seed,
            threads: self.get("sgns_threads", base.threads)?,
        };
        sgns.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let embedding_source = match self.0.get("embedding_source").map(String::as_str) {
            None | Some("train-sgns") => EmbeddingSource::TrainSgns,
            Some("load-vectors") => EmbeddingSource::LoadVectors(
                self.get_opt("vectors")?
                    .ok_or_else(|| field("vectors", "", "required when embedding_source = load-vectors"))?,
            ),
            Some(other) => return Err(field("embedding_source", other, "expected train-sgns or load-vectors")),
        };

        let k: usize = self.get("k", DEFAULT_K)?;
        if k == 0 {
            return Err(field("k", "0", "must be positive"));
        }
        let unlisted_as = self.get_opt::<PairLabel>("unlisted_as")?;

        let defaults = SynthConfig::default();
        let synth = SynthConfig {
            recipes: self.get("recipes", defaults.recipes)?,
            duplicates: self.get("duplicates", defaults.duplicates)?,
            ingredient_pool: self.get("ingredient_pool", defaults.ingredient_pool)?,
            typo_rate: self.get("typo_rate", defaults.typo_rate)?,
            late_originals: self.get("late_originals", defaults.late_originals)?,
            seed,
        };

        Ok(PipelineConfig {
            corpus: self.get("corpus", PathBuf::from("corpus.jsonl"))?,
            cutoff: self.get_opt("cutoff")?,
            granularity: self.get("granularity", Granularity::GRAM3)?,
            embedding_source,
            sgns,
            metric: self.get("metric", Metric::default())?,
            pruning: self.get_bool("pruning", true)?,
            k,
            threshold: self.get("threshold", DEFAULT_THRESHOLD)?,
            seed,
            output_dir: self.get("output_dir", PathBuf::from("out"))?,
            normalization: NormalizationConfig {
                fold_width: self.get_bool("fold_width", NormalizationConfig::INSTRUCTIONS.fold_width)?,
                fold_kana: self.get_bool("fold_kana", NormalizationConfig::INSTRUCTIONS.fold_kana)?,
                lowercase: self.get_bool("lowercase", NormalizationConfig::INSTRUCTIONS.lowercase)?,
                strip_symbols: self.get_bool("strip_symbols", NormalizationConfig::INSTRUCTIONS.strip_symbols)?,
            },
            gold: self.get_opt("gold")?,
            unlisted_as,
            synth,
        })
    }
}

fn field(key: &str, raw: &str, reason: impl Display) -> CliError {
    if raw.is_empty() {
        CliError::Config(format!("field `{key}`: {reason}"))
    } else {
        CliError::Config(format!("field `{key}`: `{raw}`: {reason}"))
    }
}

impl PipelineConfig {
    /// The split date, which every split-based subcommand needs.
    pub fn require_cutoff(&self, subcommand: &str) -> Result<NaiveDate, CliError> {
        self.cutoff
            .ok_or_else(|| CliError::Config(format!("field `cutoff`: required by {subcommand}")))
    }

    /// Fails unless the corpus file exists.
    pub fn check_corpus(&self) -> Result<(), CliError> {
        if self.corpus.is_file() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "field `corpus`: {} does not exist (synth-corpus can generate one)",
                self.corpus.display()
            )))
        }
    }
}

//! Experiment configuration: a TOML config file, command-line flags that
//! override it key by key, and validation of the resolved result.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;

use veto_core::constraint::SelectionPolicy;
use veto_core::decode::{DecodeConfig, Method};

/// What the run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Iterated paraphrasing: each round constrains against the previous
    /// round's output.
    Paraphrase,
    /// Two-pass refinement: an unconstrained pass, then a pass constrained
    /// by the words the references contradict.
    Refine,
    /// Emit constraint-annotated training lines for constraint-aware models.
    GenTrainData,
    /// Repeat a task over a list of control-parameter values and tabulate
    /// the metric curve.
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Paraphrase => "paraphrase",
            Task::Refine => "refine",
            Task::GenTrainData => "gen-train-data",
            Task::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "paraphrase" => Ok(Task::Paraphrase),
            "refine" => Ok(Task::Refine),
            "gen-train-data" => Ok(Task::GenTrainData),
            "sweep" => Ok(Task::Sweep),
            other => Err(ConfigError::Invalid {
                key: "task",
                msg: format!(
                    "unknown task {other:?} (expected paraphrase, refine, gen-train-data or sweep)"
                ),
            }),
        }
    }
}

/// Errors from config loading, merging, or validation.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Cli(#[from] clap::Error),
    #[error("failed to read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {}: {msg}", path.display())]
    Toml { path: PathBuf, msg: String },
    #[error("missing required setting \"{0}\" (set it in the config file or pass --{0})")]
    Missing(&'static str),
    #[error("invalid {key}: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("{key} path {} does not exist", path.display())]
    PathNotFound { key: &'static str, path: PathBuf },
}

/// Command-line interface. Every config-file key has a matching flag; a flag
/// that is given wins over the file value.
#[derive(Debug, Parser)]
#[command(
    name = "veto",
    version,
    about = "Keep unwanted words out of beam-search decodes: paraphrase, refine, \
             generate training data, or sweep a constraint parameter"
)]
pub struct Cli {
    /// TOML config file; explicit flags override its keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Task to run: paraphrase | refine | gen-train-data | sweep.
    #[arg(long)]
    pub task: Option<String>,
    /// Constraint mechanism: none | filter-subword | filter-multisubword |
    /// penalty-subword | penalty-wholetoken.
    #[arg(long)]
    pub method: Option<String>,
    /// Log-probability penalty subtracted by the penalty methods.
    #[arg(long, allow_hyphen_values = true)]
    pub penalty: Option<f64>,
    /// Score threshold for the filter methods (at most 0; accepts "-inf").
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<String>,
    /// Fraction of candidate constraints to keep, or "single" for at most one.
    #[arg(long)]
    pub ratio: Option<String>,
    /// Beam width.
    #[arg(long)]
    pub beam_size: Option<usize>,
    /// Maximum output length in subwords.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Length-normalize the final hypothesis ranking.
    #[arg(long)]
    pub length_norm: bool,
    /// Paraphrase rounds, counting the unconstrained round 0.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Stem constraints before applying them.
    #[arg(long)]
    pub stem: bool,
    /// Comma-separated control-parameter values for the sweep task.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep: Option<Vec<f64>>,
    /// Task the sweep repeats per value: paraphrase | refine.
    #[arg(long)]
    pub sweep_task: Option<String>,
    /// Run the sweep values concurrently (the output bytes do not change).
    #[arg(long)]
    pub parallel_sweep: bool,
    /// Seed recorded for the run (reserved for stochastic scorers; the
    /// built-in tasks are deterministic).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Vocabulary file.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    /// Scorer definition file.
    #[arg(long, value_name = "FILE")]
    pub scorer: Option<PathBuf>,
    /// Stopword list (defaults to the built-in English list).
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Stemmer suffix rules (defaults to the built-in table).
    #[arg(long, value_name = "FILE")]
    pub stemmer_rules: Option<PathBuf>,
    /// Input JSONL sentence records.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Output directory for reports and hypothesis files.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Use only each round's own constraints instead of accumulating them.
    #[arg(long)]
    pub no_accumulate: bool,
    /// Cap on constraints per sentence.
    #[arg(long)]
    pub max_constraints: Option<usize>,
}

/// A number-valued key that also accepts a special string spelling
/// ("-inf" for thresholds, "single" for ratios).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

/// The raw TOML file: every key optional, kebab-case, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawConfig {
    task: Option<String>,
    method: Option<String>,
    penalty: Option<f64>,
    threshold: Option<NumOrStr>,
    ratio: Option<NumOrStr>,
    beam_size: Option<usize>,
    max_len: Option<usize>,
    length_norm: Option<bool>,
    rounds: Option<usize>,
    stem: Option<bool>,
    sweep: Option<Vec<f64>>,
    sweep_task: Option<String>,
    parallel_sweep: Option<bool>,
    seed: Option<u64>,
    vocab: Option<PathBuf>,
    scorer: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    stemmer_rules: Option<PathBuf>,
    input: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    no_accumulate: Option<bool>,
    max_constraints: Option<usize>,
}

/// The fully resolved and validated experiment setup.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub task: Task,
    pub decode: DecodeConfig,
    pub selection: SelectionPolicy,
    pub rounds: usize,
    pub stem: bool,
    pub sweep_values: Vec<f64>,
    pub sweep_task: Task,
    pub parallel_sweep: bool,
    pub seed: u64,
    pub vocab: PathBuf,
    pub scorer: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub stemmer_rules: Option<PathBuf>,
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub no_accumulate: bool,
    pub max_constraints: Option<usize>,
}

/// Parses the given argument list (including the program name) and resolves
/// it against the config file, if any.
pub fn from_args<I, T>(args: I) -> Result<ExperimentConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    resolve(Cli::try_parse_from(args)?)
}

/// Merges the parsed command line with its config file and validates the
/// result. Precedence: built-in default < config file < command line.
pub fn resolve(cli: Cli) -> Result<ExperimentConfig, ConfigError> {
    let raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            toml::from_str::<RawConfig>(&text).map_err(|e| ConfigError::Toml {
                path: path.clone(),
                msg: e.to_string(),
            })?
        }
        None => RawConfig::default(),
    };

    let task = Task::parse(&cli.task.or(raw.task).ok_or(ConfigError::Missing("task"))?)?;
    let method = match cli.method.or(raw.method) {
        Some(m) => parse_method(&m)?,
        None => Method::None,
    };
    let threshold = match cli.threshold.map(NumOrStr::Str).or(raw.threshold) {
        Some(v) => parse_float("threshold", v)?,
        None => f64::NEG_INFINITY,
    };
    let decode = DecodeConfig {
        beam_size: cli.beam_size.or(raw.beam_size).unwrap_or(4),
        max_len: cli.max_len.or(raw.max_len).unwrap_or(32),
        method,
        penalty: cli.penalty.or(raw.penalty).unwrap_or(0.0),
        threshold,
        length_norm: cli.length_norm || raw.length_norm.unwrap_or(false),
    };
    let selection = match cli.ratio.map(NumOrStr::Str).or(raw.ratio) {
        Some(v) => parse_ratio(v)?,
        None => SelectionPolicy::fraction(1.0).expect("1.0 is a valid fraction"),
    };
    let sweep_task = match cli.sweep_task.or(raw.sweep_task) {
        Some(s) => {
            let t = Task::parse(&s)?;
            if !matches!(t, Task::Paraphrase | Task::Refine) {
                return Err(ConfigError::Invalid {
                    key: "sweep-task",
                    msg: format!("a sweep can repeat paraphrase or refine, not {}", t.name()),
                });
            }
            t
        }
        None => Task::Paraphrase,
    };

    let cfg = ExperimentConfig {
        task,
        decode,
        selection,
        rounds: cli.rounds.or(raw.rounds).unwrap_or(2),
        stem: cli.stem || raw.stem.unwrap_or(false),
        sweep_values: cli.sweep.or(raw.sweep).unwrap_or_default(),
        sweep_task,
        parallel_sweep: cli.parallel_sweep || raw.parallel_sweep.unwrap_or(false),
        seed: cli.seed.or(raw.seed).unwrap_or(0),
        vocab: cli
            .vocab
            .or(raw.vocab)
            .ok_or(ConfigError::Missing("vocab"))?,
        scorer: cli
            .scorer
            .or(raw.scorer)
            .ok_or(ConfigError::Missing("scorer"))?,
        stopwords: cli.stopwords.or(raw.stopwords),
        stemmer_rules: cli.stemmer_rules.or(raw.stemmer_rules),
        input: cli
            .input
            .or(raw.input)
            .ok_or(ConfigError::Missing("input"))?,
        out_dir: cli.out_dir.or(raw.out_dir).unwrap_or_else(|| "out".into()),
        no_accumulate: cli.no_accumulate || raw.no_accumulate.unwrap_or(false),
        max_constraints: cli.max_constraints.or(raw.max_constraints),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds < 1 {
            return Err(ConfigError::Invalid {
                key: "rounds",
                msg: "must be at least 1 (round 0 is the unconstrained baseline)".into(),
            });
        }
        self.decode.validate().map_err(|e| ConfigError::Invalid {
            key: "decode settings",
            msg: e.to_string(),
        })?;
        if self.task == Task::Sweep && self.sweep_values.is_empty() {
            return Err(ConfigError::Invalid {
                key: "sweep",
                msg: "the sweep task needs at least one sweep value".into(),
            });
        }
        require_exists("vocab", &self.vocab)?;
        require_exists("scorer", &self.scorer)?;
        require_exists("input", &self.input)?;
        if let Some(p) = &self.stopwords {
            require_exists("stopwords", p)?;
        }
        if let Some(p) = &self.stemmer_rules {
            require_exists("stemmer-rules", p)?;
        }
        Ok(())
    }
}

fn require_exists(key: &'static str, path: &Path) -> Result<(), ConfigError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ConfigError::PathNotFound {
            key,
            path: path.to_path_buf(),
        })
    }
}

fn parse_method(s: &str) -> Result<Method, ConfigError> {
    match s {
        "none" => Ok(Method::None),
        "filter-subword" => Ok(Method::FilterSubword),
        "filter-multisubword" => Ok(Method::FilterMultisubword),
        "penalty-subword" => Ok(Method::PenaltySubword),
        "penalty-wholetoken" => Ok(Method::PenaltyWholetoken),
        other => Err(ConfigError::Invalid {
            key: "method",
            msg: format!(
                "unknown method {other:?} (expected none, filter-subword, \
                 filter-multisubword, penalty-subword or penalty-wholetoken)"
            ),
        }),
    }
}

fn parse_float(key: &'static str, v: NumOrStr) -> Result<f64, ConfigError> {
    match v {
        NumOrStr::Num(x) => Ok(x),
        NumOrStr::Str(s) => s.trim().parse().map_err(|_| ConfigError::Invalid {
            key,
            msg: format!("{s:?} is not a number"),
        }),
    }
}

fn parse_ratio(v: NumOrStr) -> Result<SelectionPolicy, ConfigError> {
    let r = match v {
        NumOrStr::Str(s) if s.trim().eq_ignore_ascii_case("single") => {
            return Ok(SelectionPolicy::single())
        }
        other => parse_float("ratio", other)?,
    };
    SelectionPolicy::fraction(r).map_err(|e| ConfigError::Invalid {
        key: "ratio",
        msg: e.to_string(),
    })
}

//! Run configuration: one TOML document holding pipeline settings, backend
//! selection, tagger selection and evaluation parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::doc::{BackendError, ClassifierBackend, HttpClassifier, HttpTagger, RuleClassifier, RuleTagger, TaggerBackend};
use crate::eval::{EvalConfig, SourceFile};
use crate::gen::{GeneratorBackend, HttpGenerator, Limits, PromptBundle, RecordingBackend, ReplayBackend, StubBackend};
use crate::http::JsonClient;
use crate::model::{parse_units, ModelUnit, UnitKind};
use crate::template::PortConvention;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "Io",
            ConfigError::Invalid(_) => "InvalidConfig",
            ConfigError::Parse { .. } => "ParseError",
        }
    }
}

fn io_error(path: &Path, e: impl ToString) -> ConfigError {
    ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    /// Kind given to leaf components without an entry in `kinds`.
    pub default_kind: UnitKind,
    /// Unit kind per component, keyed by class or surface name.
    pub kinds: BTreeMap<String, UnitKind>,
    /// Calls per generated section, repairs included.
    pub repair_budget: usize,
    /// Atomic units generated at the same time.
    pub max_in_flight: usize,
    /// Few-shot examples per prompt.
    pub shots: usize,
    /// `.x` file or directory of example units. Empty means the bundled
    /// library.
    pub examples: Option<PathBuf>,
    /// JSON list of composition edits applied after extraction.
    pub edits: Option<PathBuf>,
    pub limits: Limits,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            default_kind: UnitKind::Discrete,
            kinds: BTreeMap::new(),
            repair_budget: 3,
            max_in_flight: 4,
            shots: 2,
            examples: None,
            edits: None,
            limits: Limits::default(),
        }
    }
}

impl PipelineSettings {
    pub fn kind_of(&self, class_name: &str, surface: &str) -> UnitKind {
        self.kinds
            .iter()
            .find(|(k, _)| crate::names::same_name(k, class_name) || crate::names::same_name(k, surface))
            .map(|(_, v)| *v)
            .unwrap_or(self.default_kind)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.default_kind.is_atomic() || self.kinds.values().any(|k| !k.is_atomic()) {
            return Err(ConfigError::Invalid("component kinds must be discrete or continuous".into()));
        }
        if self.repair_budget == 0 {
            return Err(ConfigError::Invalid("repair_budget must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid("max_in_flight must be at least 1".into()));
        }
        if !(self.limits.temperature >= 0.0 && self.limits.temperature.is_finite()) {
            return Err(ConfigError::Invalid("temperature must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Which generator answers prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Answers from a reference model set (`.x` file or directory).
    Stub { reference: PathBuf },
    /// Answers from recorded `<prompt hash>.txt` files.
    Replay { dir: PathBuf },
    /// Chat endpoint. The API key is read from `api_key_env` if set.
    Http {
        url: String,
        #[serde(default)]
        model: Option<String>,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    /// Runs `inner` and stores every answer in `dir` for later replay.
    Record { dir: PathBuf, inner: Box<BackendConfig> },
}

fn default_timeout() -> u64 {
    60
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Replay { dir: "replay".into() }
    }
}

impl BackendConfig {
    /// Parses the `--backend` flag: `stub=PATH`, `replay=DIR`, `http=URL`
    /// or `record=DIR` (recording the configured backend).
    pub fn from_flag(flag: &str, configured: &BackendConfig) -> Result<BackendConfig, ConfigError> {
        let (kind, arg) = flag
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("backend `{flag}` must look like KIND=ARG")))?;
        Ok(match kind {
            "stub" => BackendConfig::Stub { reference: arg.into() },
            "replay" => BackendConfig::Replay { dir: arg.into() },
            "http" => BackendConfig::Http {
                url: arg.into(),
                model: None,
                api_key_env: None,
                timeout_secs: default_timeout(),
            },
            "record" => BackendConfig::Record {
                dir: arg.into(),
                inner: Box::new(configured.clone()),
            },
            other => return Err(ConfigError::Invalid(format!("unknown backend kind `{other}`"))),
        })
    }

    pub fn build(&self, base: &Path) -> Result<Box<dyn GeneratorBackend>, ConfigError> {
        Ok(match self {
            BackendConfig::Stub { reference } => Box::new(StubBackend::new(load_units(&base.join(reference))?)),
            BackendConfig::Replay { dir } => {
                let dir = base.join(dir);
                if !dir.is_dir() {
                    return Err(io_error(&dir, "replay directory does not exist"));
                }
                Box::new(ReplayBackend::new(dir))
            }
            BackendConfig::Http {
                url,
                model,
                api_key_env,
                timeout_secs,
            } => {
                let key = match api_key_env {
                    Some(var) => Some(
                        std::env::var(var)
                            .map_err(|_| ConfigError::Invalid(format!("environment variable {var} is not set")))?,
                    ),
                    None => None,
                };
                let mut g = HttpGenerator::new(url.clone(), JsonClient::new(Duration::from_secs(*timeout_secs), key));
                g.model = model.clone();
                Box::new(g)
            }
            BackendConfig::Record { dir, inner } => Box::new(RecordingBackend {
                inner: inner.build(base)?,
                dir: base.join(dir),
            }),
        })
    }
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for Box<B> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn complete(&self, bundle: &PromptBundle, limits: &Limits) -> Result<String, BackendError> {
        (**self).complete(bundle, limits)
    }
}

/// Which tagger and classifier read the document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaggerConfig {
    #[default]
    Rule,
    /// Token tagging at `<url>/tag` and classification at `<url>/classify`.
    Http {
        url: String,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_batch() -> usize {
    16
}

fn default_in_flight() -> usize {
    4
}

impl TaggerConfig {
    pub fn build(&self) -> (Box<dyn TaggerBackend>, Box<dyn ClassifierBackend>) {
        match self {
            TaggerConfig::Rule => (Box::new(RuleTagger), Box::new(RuleClassifier)),
            TaggerConfig::Http {
                url,
                batch_size,
                max_in_flight,
            } => {
                let mut t = HttpTagger::new(url.clone());
                t.batch_size = *batch_size;
                t.max_in_flight = *max_in_flight;
                let mut c = HttpClassifier::new(url.clone());
                c.batch_size = *batch_size;
                c.max_in_flight = *max_in_flight;
                (Box::new(t), Box::new(c))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub port_convention: PortConvention,
    pub pipeline: PipelineSettings,
    pub backend: BackendConfig,
    pub tagger: TaggerConfig,
    pub evaluation: EvalConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            port_convention: PortConvention::Dataflow,
            pipeline: PipelineSettings::default(),
            backend: BackendConfig::default(),
            tagger: TaggerConfig::default(),
            evaluation: EvalConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<RunConfig, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Invalid(m) => ConfigError::Parse {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline.validate()?;
        self.evaluation.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    /// Limits sent with every request; the run seed wins over the one in
    /// the limits table.
    pub fn limits(&self) -> Limits {
        Limits {
            seed: self.seed,
            ..self.pipeline.limits
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// `.x` sources of a file, or of every `.x` file directly inside a
/// directory, in name order.
pub fn load_sources(path: &Path) -> Result<Vec<SourceFile>, ConfigError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_error(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "x"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| io_error(&p, e))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(SourceFile { name, text })
        })
        .collect()
}

/// Parses every unit under `path`; the first parse error fails the load.
pub fn load_units(path: &Path) -> Result<Vec<ModelUnit>, ConfigError> {
    let mut out = Vec::new();
    for f in load_sources(path)? {
        let units = parse_units(&f.text).map_err(|e| ConfigError::Parse {
            path: path.join(&f.name),
            message: e.to_string(),
        })?;
        out.extend(units);
    }
    Ok(out)
}

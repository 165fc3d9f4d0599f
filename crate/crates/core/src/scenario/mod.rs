//! Scenario runner: a TOML config names one pipeline, a seed and optional
//! catalog/topology files; running it writes CSV and JSON-lines results plus
//! a `manifest.json` with hashes of the config, the inputs and every result
//! file.
//!
//! ```toml
//! name = "capacity"
//! pipeline = "capacity_profile"
//! seed = 1
//! # catalog = "my_catalog.toml"    # relative to this file; shipped one if absent
//! # topology = "my_topology.toml"
//!
//! [params]
//! distances_m = [100.0, 500.0, 8600.0]
//! ```
//!
//! Results go to `<out_root>/<name>/`. Everything except the manifest's
//! `created_unix_s` field is a function of the config and inputs alone.

mod pipelines;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{PlatformCatalog, Topology, DEFAULT_CATALOG, DEFAULT_TOPOLOGY};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown pipeline '{0}' (expected one of: {list})", list = Pipeline::names().join(", "))]
    UnknownPipeline(String),
    #[error("params: {0}")]
    Params(String),
    #[error("input: {0}")]
    Input(String),
    #[error("output directory {0} is not empty and holds no manifest")]
    OutputNotEmpty(String),
    #[error("{pipeline}: {message}")]
    Pipeline { pipeline: Pipeline, message: String },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    CapacityProfile,
    CoverageMap,
    MimoSets,
    XhaulWeather,
    FsocAlign,
    DelayCdf,
    LtlQoe,
    OrchestratorFuzz,
    Telemetry,
}

impl Pipeline {
    pub const ALL: [Pipeline; 9] = [
        Pipeline::CapacityProfile,
        Pipeline::CoverageMap,
        Pipeline::MimoSets,
        Pipeline::XhaulWeather,
        Pipeline::FsocAlign,
        Pipeline::DelayCdf,
        Pipeline::LtlQoe,
        Pipeline::OrchestratorFuzz,
        Pipeline::Telemetry,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::CapacityProfile => "capacity_profile",
            Pipeline::CoverageMap => "coverage_map",
            Pipeline::MimoSets => "mimo_sets",
            Pipeline::XhaulWeather => "xhaul_weather",
            Pipeline::FsocAlign => "fsoc_align",
            Pipeline::DelayCdf => "delay_cdf",
            Pipeline::LtlQoe => "ltl_qoe",
            Pipeline::OrchestratorFuzz => "orchestrator_fuzz",
            Pipeline::Telemetry => "telemetry",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|p| p.as_str()).collect()
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownPipeline(s.to_string()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    pipeline: String,
    seed: u64,
    #[serde(default)]
    catalog: Option<PathBuf>,
    #[serde(default)]
    topology: Option<PathBuf>,
    #[serde(default)]
    params: toml::Table,
}

/// A parsed config with its inputs loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub params: toml::Table,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
    pub catalog: PlatformCatalog,
    pub topology: Topology,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, InputRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    /// File path as written in the config, or `builtin`.
    pub source: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(base: &Path, rel: &Path) -> Result<(String, InputRef)> {
    let path = base.join(rel);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let r = InputRef {
        source: rel.display().to_string(),
        sha256: sha256_hex(text.as_bytes()),
    };
    Ok((text, r))
}

fn builtin(text: &str) -> InputRef {
    InputRef {
        source: "builtin".into(),
        sha256: sha256_hex(text.as_bytes()),
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        if raw.name.is_empty()
            || !raw.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ScenarioError::Config(format!(
                "name '{}' must be non-empty and use only letters, digits, '-' and '_'",
                raw.name
            )));
        }
        let pipeline: Pipeline = raw.pipeline.parse()?;
        let mut inputs = BTreeMap::new();
        let catalog = match &raw.catalog {
            Some(rel) => {
                let (text, r) = read_input(base_dir, rel)?;
                inputs.insert("catalog".to_string(), r);
                PlatformCatalog::from_toml_str(&text).map_err(|e| ScenarioError::Input(e.to_string()))?
            }
            None => {
                inputs.insert("catalog".to_string(), builtin(DEFAULT_CATALOG));
                PlatformCatalog::default_catalog()
            }
        };
        let topology = match &raw.topology {
            Some(rel) => {
                let (text, r) = read_input(base_dir, rel)?;
                inputs.insert("topology".to_string(), r);
                Topology::from_toml_str(&text, &catalog).map_err(|e| ScenarioError::Input(e.to_string()))?
            }
            None => {
                inputs.insert("topology".to_string(), builtin(DEFAULT_TOPOLOGY));
                Topology::demo(&catalog)
            }
        };
        Ok(Self {
            name: raw.name,
            pipeline,
            seed: raw.seed,
            params: raw.params,
            base_dir: base_dir.to_path_buf(),
            catalog,
            topology,
            config_sha256: sha256_hex(text.as_bytes()),
            inputs,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub(crate) fn params<T: DeserializeOwned>(&self) -> Result<T> {
        toml::Value::Table(self.params.clone())
            .try_into()
            .map_err(|e: toml::de::Error| ScenarioError::Params(e.to_string()))
    }

    pub(crate) fn fail(&self, e: impl fmt::Display) -> ScenarioError {
        ScenarioError::Pipeline {
            pipeline: self.pipeline,
            message: e.to_string(),
        }
    }

    /// Checks the pipeline parameters without running anything.
    pub fn validate(&self) -> Result<()> {
        pipelines::check(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub version: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, InputRef>,
    /// Result file name to SHA-256.
    pub files: BTreeMap<String, String>,
    pub created_unix_s: u64,
}

/// Collects result files for one run.
pub(crate) struct Sink {
    dir: PathBuf,
    files: BTreeMap<String, String>,
    extra_inputs: BTreeMap<String, InputRef>,
}

impl Sink {
    pub(crate) fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub(crate) fn put_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| ScenarioError::Config(e.to_string()))?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }

    pub(crate) fn put_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut s = String::new();
        for r in rows {
            s.push_str(&serde_json::to_string(r).map_err(|e| ScenarioError::Config(e.to_string()))?);
            s.push('\n');
        }
        self.put(name, s.as_bytes())
    }

    pub(crate) fn input(&mut self, key: &str, r: InputRef) {
        self.extra_inputs.insert(key.to_string(), r);
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = std::fs::read_dir(dir).map_err(io_err(dir))?.peekable();
        if entries.peek().is_some() {
            if !dir.join(MANIFEST).exists() {
                return Err(ScenarioError::OutputNotEmpty(dir.display().to_string()));
            }
            std::fs::remove_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Runs a loaded scenario into `<out_root>/<name>/`, replacing an earlier
/// result directory of the same name.
pub fn run(scenario: &Scenario, out_root: &Path) -> Result<RunResult> {
    scenario.validate()?;
    let dir = out_root.join(&scenario.name);
    prepare_dir(&dir)?;
    let mut sink = Sink {
        dir: dir.clone(),
        files: BTreeMap::new(),
        extra_inputs: BTreeMap::new(),
    };
    pipelines::run(scenario, &mut sink)?;
    let mut inputs = scenario.inputs.clone();
    inputs.append(&mut sink.extra_inputs);
    let manifest = Manifest {
        name: scenario.name.clone(),
        pipeline: scenario.pipeline,
        seed: scenario.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: scenario.config_sha256.clone(),
        inputs,
        files: sink.files,
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| ScenarioError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(RunResult { dir, manifest })
}

/// Loads and runs the config at `path`.
pub fn run_scenario(path: impl AsRef<Path>, out_root: impl AsRef<Path>) -> Result<RunResult> {
    run(&Scenario::load(path)?, out_root.as_ref())
}

/// Loads the config at `path` and checks its parameters.
pub fn validate_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let s = Scenario::load(path)?;
    s.validate()?;
    Ok(s)
}

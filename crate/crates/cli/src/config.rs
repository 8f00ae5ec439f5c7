//! Experiment configuration document and its resolution to explicit values.

use std::path::{Path, PathBuf};

use minmax_core::harness::RunConfig;
use minmax_core::tcl::TclTemplate;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Tcl {
        n_agents: usize,
        horizon: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default)]
        params: TclTemplate,
    },
    File {
        path: PathBuf,
    },
    BuiltinTiny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    ErdosRenyi {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_max_tries")]
        max_tries: usize,
    },
    EdgeList {
        path: PathBuf,
    },
    Complete,
}

fn default_max_tries() -> usize {
    minmax_core::graph::DEFAULT_MAX_TRIES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub enabled: bool,
    /// Defaults to `oracle.json` in the output directory.
    pub cache: Option<PathBuf>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { enabled: true, cache: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSource,
    pub graph: GraphSource,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Fraction of trace rows used by the rate fit.
    #[serde(default = "default_rate_window")]
    pub rate_window: f64,
}

fn default_rate_window() -> f64 {
    0.5
}

/// Command-line overrides applied on top of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))
    }

    /// Applies overrides, derives every seed from the top-level one, makes
    /// paths absolute relative to `base_dir`, and checks simple invariants.
    pub fn resolve(mut self, base_dir: &Path, ov: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = ov.seed {
            self.seed = seed;
            if let ProblemSource::Tcl { seed, .. } = &mut self.problem {
                *seed = None;
            }
            if let GraphSource::ErdosRenyi { seed, .. } = &mut self.graph {
                *seed = None;
            }
        }
        if let Some(t) = ov.iterations {
            self.run.iterations = t;
        }
        if let Some(dir) = &ov.output_dir {
            self.output_dir = Some(dir.clone());
        }
        let root = self.seed;
        match &mut self.problem {
            ProblemSource::Tcl { seed, .. } => {
                seed.get_or_insert(root);
            }
            ProblemSource::File { path } => *path = absolutize(base_dir, path),
            ProblemSource::BuiltinTiny => {}
        }
        match &mut self.graph {
            GraphSource::ErdosRenyi { seed, p, .. } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(CliError::Config(format!("graph.p must lie in [0, 1], got {p}")));
                }
                seed.get_or_insert(root.wrapping_add(1));
            }
            GraphSource::EdgeList { path } => *path = absolutize(base_dir, path),
            GraphSource::Complete => {}
        }
        self.run.seed = root;
        let out = self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        let out = absolutize(base_dir, &out);
        if self.oracle.enabled {
            let cache = self.oracle.cache.clone().map_or_else(|| out.join("oracle.json"), |c| absolutize(base_dir, &c));
            self.oracle.cache = Some(cache);
        }
        self.output_dir = Some(out);
        self.run.check().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.rate_window > 0.0 && self.rate_window <= 1.0) {
            return Err(CliError::Config(format!("rate_window must lie in (0, 1], got {}", self.rate_window)));
        }
        Ok(self)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn absolutize(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

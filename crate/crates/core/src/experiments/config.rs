//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Unknown keys and repeated keys are rejected.
//!
//! | key                   | default        | meaning                                            |
//! |-----------------------|----------------|----------------------------------------------------|
//! | `topology`            | `ring`         | `ring`, `complete`, `erdos_renyi` or `edge_list`   |
//! | `nodes`               | `20`           | node count (ignored for `edge_list`)               |
//! | `edge_prob`           | `0.3`          | Erdos-Renyi edge probability                       |
//! | `graph_seed`          | (required)     | Erdos-Renyi seed; required for that topology       |
//! | `edge_list`           |                | path to an edge-list file, relative to the config  |
//! | `task`                | `regression`   | `regression` or `classification`                   |
//! | `step_size`           | `0.01`         | SGD step size                                      |
//! | `epsilon`             | `auto`         | base weight; `auto` is `1/(d_max+1)`               |
//! | `iterations`          | `200`          | training iterations per run                        |
//! | `batch_size`          | `100`          | local minibatch size                               |
//! | `samples_per_node`    | `100`          | local dataset size                                 |
//! | `access_probs`        | `throughput_opt` | comma-separated probabilities; `throughput_opt` and `spectral_opt` resolve per graph |
//! | `replicates`          | `3`            | runs per access probability                        |
//! | `seed`                | `0`            | master seed                                        |
//! | `checkpoint_interval` | `auto`         | record metrics every k iterations                  |
//! | `noise_std`           | `0.5`          | regression observation noise std                   |
//! | `cluster_variance`    | `0.05`         | per-axis variance of classification clusters       |
//! | `class_bias`          | `true`         | per-class bias term in the classifier              |
//! | `grid_step`           | `0.001`        | p-grid step for `analyze`                          |
//! | `out_dir`             | `out`          | output directory                                   |
//! | `plots`               | `false`        | also write SVG plots                               |

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learning::TaskKind;

#[derive(Clone, Debug, PartialEq)]
pub enum TopologySpec {
    Ring { n: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, edge_prob: f64, seed: u64 },
    EdgeList { path: PathBuf },
}

/// One entry of `access_probs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AccessProb {
    Fixed(f64),
    /// Maximizer of expected throughput for the configured graph.
    ThroughputOptimal,
    /// Minimizer of the expected consensus rate for the configured graph.
    SpectralOptimal,
}

impl fmt::Display for AccessProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessProb::Fixed(p) => write!(f, "{p}"),
            AccessProb::ThroughputOptimal => f.write_str("throughput_opt"),
            AccessProb::SpectralOptimal => f.write_str("spectral_opt"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub task: TaskKind,
    pub step_size: f64,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub batch_size: usize,
    pub samples_per_node: usize,
    pub access_probs: Vec<AccessProb>,
    pub replicates: usize,
    pub seed: u64,
    pub checkpoint_interval: Option<usize>,
    pub noise_std: f64,
    pub cluster_variance: f64,
    pub class_bias: bool,
    pub grid_step: f64,
    pub out_dir: PathBuf,
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::Ring { n: 20 },
            task: TaskKind::Regression,
            step_size: 0.01,
            epsilon: None,
            iterations: 200,
            batch_size: 100,
            samples_per_node: 100,
            access_probs: vec![AccessProb::ThroughputOptimal],
            replicates: 3,
            seed: 0,
            checkpoint_interval: None,
            noise_std: 0.5,
            cluster_variance: 0.05,
            class_bias: true,
            grid_step: 0.001,
            out_dir: PathBuf::from("out"),
            plots: false,
        }
    }
}

const KEYS: &[&str] = &[
    "topology",
    "nodes",
    "edge_prob",
    "graph_seed",
    "edge_list",
    "task",
    "step_size",
    "epsilon",
    "iterations",
    "batch_size",
    "samples_per_node",
    "access_probs",
    "replicates",
    "seed",
    "checkpoint_interval",
    "noise_std",
    "cluster_variance",
    "class_bias",
    "grid_step",
    "out_dir",
    "plots",
];

fn parse_field<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::config(field, format!("cannot parse `{value}`")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(field, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_auto<T: FromStr>(field: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_field(field, value).map(Some)
    }
}

fn probability(field: &str, p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::config(field, format!("{p} is not in [0, 1]")))
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file. Relative paths inside resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut kind = "ring".to_string();
        let mut nodes = 20usize;
        let mut edge_prob = 0.3;
        let mut graph_seed: Option<u64> = None;
        let mut edge_list: Option<PathBuf> = None;

        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse { line: k + 1, message: format!("expected `key = value`, got `{line}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            match key {
                "topology" => kind = value.to_string(),
                "nodes" => nodes = parse_field(key, value)?,
                "edge_prob" => edge_prob = parse_field(key, value)?,
                "graph_seed" => graph_seed = Some(parse_field(key, value)?),
                "edge_list" => edge_list = Some(base_dir.join(value)),
                "task" => {
                    cfg.task = match value {
                        "regression" => TaskKind::Regression,
                        "classification" => TaskKind::Classification,
                        _ => return Err(Error::config(key, format!("unknown task `{value}`"))),
                    }
                }
                "step_size" => cfg.step_size = parse_field(key, value)?,
                "epsilon" => cfg.epsilon = parse_auto(key, value)?,
                "iterations" => cfg.iterations = parse_field(key, value)?,
                "batch_size" => cfg.batch_size = parse_field(key, value)?,
                "samples_per_node" => cfg.samples_per_node = parse_field(key, value)?,
                "access_probs" => {
                    cfg.access_probs = value
                        .split(',')
                        .map(str::trim)
                        .map(|tok| match tok {
                            "throughput_opt" => Ok(AccessProb::ThroughputOptimal),
                            "spectral_opt" => Ok(AccessProb::SpectralOptimal),
                            _ => probability(key, parse_field(key, tok)?).map(AccessProb::Fixed),
                        })
                        .collect::<Result<_>>()?
                }
                "replicates" => cfg.replicates = parse_field(key, value)?,
                "seed" => cfg.seed = parse_field(key, value)?,
                "checkpoint_interval" => cfg.checkpoint_interval = parse_auto(key, value)?,
                "noise_std" => cfg.noise_std = parse_field(key, value)?,
                "cluster_variance" => cfg.cluster_variance = parse_field(key, value)?,
                "class_bias" => cfg.class_bias = parse_bool(key, value)?,
                "grid_step" => cfg.grid_step = parse_field(key, value)?,
                "out_dir" => cfg.out_dir = base_dir.join(value),
                "plots" => cfg.plots = parse_bool(key, value)?,
                _ => unreachable!("key list and match arms out of sync"),
            }
        }

        cfg.topology = match kind.as_str() {
            "ring" => TopologySpec::Ring { n: nodes },
            "complete" => TopologySpec::Complete { n: nodes },
            "erdos_renyi" => TopologySpec::ErdosRenyi {
                n: nodes,
                edge_prob,
                seed: graph_seed.ok_or_else(|| Error::config("graph_seed", "required for erdos_renyi topology"))?,
            },
            "edge_list" => TopologySpec::EdgeList {
                path: edge_list.ok_or_else(|| Error::config("edge_list", "required for edge_list topology"))?,
            },
            other => return Err(Error::config("topology", format!("unknown topology `{other}`"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let TopologySpec::ErdosRenyi { edge_prob, .. } = self.topology {
            if !(edge_prob > 0.0 && edge_prob <= 1.0) {
                return Err(Error::config("edge_prob", format!("{edge_prob} is not in (0, 1]")));
            }
        }
        if let TopologySpec::EdgeList { path } = &self.topology {
            if !path.is_file() {
                return Err(Error::config("edge_list", format!("{} does not exist", path.display())));
            }
        }
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::config("step_size", "must be a nonnegative number"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::config("epsilon", "must be positive"));
            }
        }
        if self.iterations < 1 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.samples_per_node < 1 {
            return Err(Error::config("samples_per_node", "must be at least 1"));
        }
        if self.replicates < 1 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        if self.access_probs.is_empty() {
            return Err(Error::config("access_probs", "needs at least one value"));
        }
        if self.checkpoint_interval == Some(0) {
            return Err(Error::config("checkpoint_interval", "must be at least 1"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("noise_std", "must be nonnegative"));
        }
        if !(self.cluster_variance.is_finite() && self.cluster_variance >= 0.0) {
            return Err(Error::config("cluster_variance", "must be nonnegative"));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::config("grid_step", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

//! Experiment configuration, read from TOML.
//!
//! ```toml
//! beta = 0.7
//! gamma = 0.3
//! algorithms = ["greedy", "enumerate", "miqp-tiny"]
//! n_alliances = 3
//!
//! [generator]
//! n_airports = 20
//! n_segment_records = 2000
//! n_carriers = 6
//! seed = 1
//!
//! [sampling]
//! n_walks = 50
//! walk_length = 2
//! n_segment_samples = 50
//! seed = 11
//!
//! [evaluation]
//! n_realizations = 10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::optimize::export::ModelFormat;
use crate::sampling::SamplingConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    GreedySampled,
    Enumerate,
    MiqpBuild,
    MiqpTiny,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::GreedySampled => "greedy-sampled",
            Algorithm::Enumerate => "enumerate",
            Algorithm::MiqpBuild => "miqp-build",
            Algorithm::MiqpTiny => "miqp-tiny",
        }
    }

    /// Whether the algorithm yields a partition to evaluate.
    pub fn yields_partition(self) -> bool {
        !matches!(self, Algorithm::MiqpBuild)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub schedule: PathBuf,
    #[serde(default)]
    pub alliances: Option<PathBuf>,
    /// Emit both directions of every record.
    #[serde(default)]
    pub symmetrize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    /// Base for derived evaluation seeds.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Explicit evaluation seeds; overrides `n_realizations` and `seed`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            n_realizations: default_realizations(),
            seed: None,
            seeds: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_enum_cap")]
    pub enumerate_max_carriers: usize,
    #[serde(default = "default_tiny_carriers")]
    pub tiny_max_carriers: usize,
    #[serde(default = "default_tiny_alliances")]
    pub tiny_max_alliances: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            enumerate_max_carriers: default_enum_cap(),
            tiny_max_carriers: default_tiny_carriers(),
            tiny_max_alliances: default_tiny_alliances(),
        }
    }
}

fn default_realizations() -> usize {
    10
}
fn default_enum_cap() -> usize {
    crate::optimize::enumerate::DEFAULT_MAX_CARRIERS
}
fn default_tiny_carriers() -> usize {
    crate::optimize::tiny::DEFAULT_MAX_CARRIERS
}
fn default_tiny_alliances() -> usize {
    crate::optimize::tiny::DEFAULT_MAX_ALLIANCES
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Greedy]
}
fn default_k() -> usize {
    3
}
fn default_epsilon() -> f64 {
    crate::metrics::EPSILON_FLOOR
}
fn default_intervals() -> usize {
    540
}
fn default_candidates() -> usize {
    64
}
fn default_groups() -> usize {
    3
}
fn default_formats() -> Vec<String> {
    vec!["json".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    pub sampling: SamplingConfig,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// `K` for the mixed-integer model.
    #[serde(default = "default_k")]
    pub n_alliances: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_intervals")]
    pub n_intervals: usize,
    /// Candidate pairs per iteration for `greedy-sampled`.
    #[serde(default = "default_candidates")]
    pub n_candidates: usize,
    /// Groups in the synthetic baseline used with generated instances.
    #[serde(default = "default_groups")]
    pub baseline_groups: usize,
    #[serde(default = "default_formats")]
    pub model_formats: Vec<String>,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative input paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = cfg.input.as_mut() {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            resolve(&mut input.schedule);
            if let Some(a) = input.alliances.as_mut() {
                resolve(a);
            }
        }
        if let Some(out) = cfg.output_dir.as_mut() {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.input, &self.generator) {
            (Some(_), Some(_)) => return bad("give either [input] or [generator], not both".into()),
            (None, None) => return bad("one of [input] or [generator] is required".into()),
            (None, Some(spec)) => spec.validate()?,
            _ => {}
        }
        self.sampling.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.beta >= 0.0 && self.gamma >= 0.0 && self.beta.is_finite() && self.gamma.is_finite()) {
            return bad(format!("beta and gamma must be finite and non-negative ({}, {})", self.beta, self.gamma));
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if self.n_alliances < 1 {
            return bad("n_alliances must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.n_intervals < 2 {
            return bad("n_intervals must be at least 2".into());
        }
        if self.n_candidates < 1 {
            return bad("n_candidates must be at least 1".into());
        }
        for f in &self.model_formats {
            f.parse::<ModelFormat>().map_err(|e| Error::Config(e.to_string()))?;
        }
        match &self.evaluation.seeds {
            Some(seeds) => {
                if seeds.is_empty() {
                    return bad("evaluation.seeds is empty".into());
                }
                if seeds.contains(&self.sampling.seed) {
                    return Err(Error::SeedCollision(self.sampling.seed));
                }
            }
            None if self.evaluation.n_realizations == 0 => return bad("evaluation.n_realizations must be at least 1".into()),
            None => {}
        }
        Ok(())
    }

    pub fn optimization_seeds(&self) -> Vec<u64> {
        vec![self.sampling.seed]
    }

    /// Seed for candidate-pair draws in `greedy-sampled`.
    pub fn pair_sampling_seed(&self) -> u64 {
        splitmix64(self.sampling.seed ^ 0x5041_4952)
    }

    /// Evaluation seeds: explicit ones, or derived from a base seed and
    /// skipping any optimization seed.
    pub fn evaluation_seeds(&self) -> Vec<u64> {
        if let Some(seeds) = &self.evaluation.seeds {
            return seeds.clone();
        }
        let reserved = self.optimization_seeds();
        let base = self.evaluation.seed.unwrap_or(splitmix64(self.sampling.seed ^ 0x4556_414c));
        let mut out = Vec::with_capacity(self.evaluation.n_realizations);
        let mut i = 0u64;
        while out.len() < self.evaluation.n_realizations {
            let s = splitmix64(base.wrapping_add(i));
            i += 1;
            if !reserved.contains(&s) && !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    /// SHA-256 of the canonical form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("experiment")
    }
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zoclip::{ClipPolicy, ProblemSpec};

use crate::error::BenchError;

/// One experiment: a problem instance, the methods to compare and how many
/// noise seeds to run each method with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Starting point; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub methods: Vec<MethodConfig>,
    /// Oracle calls available to every run.
    pub budget: u64,
    pub n_seeds: u64,
    /// Base seed of the noise streams; run `i` of every method uses the same
    /// derived stream.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

/// Values to sweep in a grid search. Empty lists keep the method's own value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub batch: Vec<usize>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    /// Constant clipping levels; only applied to the clipped method.
    #[serde(default)]
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Theoretical,
    Practical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodConfig {
    ZoClippedSstm {
        #[serde(default)]
        name: Option<String>,
        batch: usize,
        /// Practical stepsize; alternatively give `a` and `smoothness`.
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        smoothness: Option<f64>,
        tau: f64,
        clip: ClipPolicy,
        /// Iteration cap; the budget caps it too.
        #[serde(default)]
        iterations: Option<u64>,
    },
    ZoSstm {
        #[serde(default)]
        name: Option<String>,
        batch: usize,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        smoothness: Option<f64>,
        tau: f64,
        #[serde(default)]
        iterations: Option<u64>,
    },
    ZoSgd {
        #[serde(default)]
        name: Option<String>,
        batch: usize,
        gamma: f64,
        omega: f64,
        tau: f64,
        #[serde(default)]
        iterations: Option<u64>,
    },
    RZoClippedSstm {
        #[serde(default)]
        name: Option<String>,
        mode: ParamMode,
        /// `R ≥ ‖x⁰ − x*‖`.
        radius: f64,
        eps: f64,
        m2: f64,
        beta: f64,
        /// Strong convexity; taken from the problem when absent.
        #[serde(default)]
        mu: Option<f64>,
        /// Stage length (practical mode).
        #[serde(default)]
        iterations: Option<u64>,
        /// Stage batch (practical mode); the theoretical mode uses the cap.
        #[serde(default)]
        batch: Option<u64>,
        #[serde(default)]
        gamma: Option<f64>,
    },
}

impl MethodConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodConfig::ZoClippedSstm { .. } => "zo-clipped-sstm",
            MethodConfig::ZoSstm { .. } => "zo-sstm",
            MethodConfig::ZoSgd { .. } => "zo-sgd",
            MethodConfig::RZoClippedSstm { .. } => "r-zo-clipped-sstm",
        }
    }

    pub fn name(&self) -> String {
        let name = match self {
            MethodConfig::ZoClippedSstm { name, .. }
            | MethodConfig::ZoSstm { name, .. }
            | MethodConfig::ZoSgd { name, .. }
            | MethodConfig::RZoClippedSstm { name, .. } => name,
        };
        name.clone().unwrap_or_else(|| self.kind().to_string())
    }

    fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(format!("{}: {msg}", self.name())));
        let step = |gamma: &Option<f64>, a: &Option<f64>, l: &Option<f64>| match (gamma, a, l) {
            (Some(g), None, None) if *g > 0.0 => Ok(()),
            (None, Some(a), Some(l)) if *a > 0.0 && *l > 0.0 => Ok(()),
            _ => Err("give either a positive gamma, or positive a and smoothness".to_string()),
        };
        match self {
            MethodConfig::ZoClippedSstm { batch, gamma, a, smoothness, tau, .. }
            | MethodConfig::ZoSstm { batch, gamma, a, smoothness, tau, .. } => {
                if *batch == 0 || !(*tau > 0.0) {
                    return bad("batch and tau must be positive".into());
                }
                step(gamma, a, smoothness).or_else(bad)
            }
            MethodConfig::ZoSgd { batch, gamma, omega, tau, .. } => {
                if *batch == 0 || !(*tau > 0.0) || !(*gamma > 0.0) || !(*omega >= 0.0 && *omega < 1.0) {
                    return bad("need batch >= 1, tau > 0, gamma > 0 and omega in [0, 1)".into());
                }
                Ok(())
            }
            MethodConfig::RZoClippedSstm { mode, iterations, batch, gamma, .. } => {
                if *mode == ParamMode::Practical && (iterations.is_none() || batch.is_none() || gamma.is_none()) {
                    return bad("practical mode needs iterations, batch and gamma".into());
                }
                Ok(())
            }
        }
    }

    /// Copy with the grid values substituted where they apply.
    pub fn with_grid_cell(&self, batch: Option<usize>, gamma: Option<f64>, lambda: Option<f64>) -> Self {
        let mut out = self.clone();
        match &mut out {
            MethodConfig::ZoClippedSstm { batch: b, gamma: g, a, smoothness, clip, .. } => {
                if let Some(v) = batch {
                    *b = v;
                }
                if let Some(v) = gamma {
                    *g = Some(v);
                    *a = None;
                    *smoothness = None;
                }
                if let Some(v) = lambda {
                    *clip = ClipPolicy::Constant(v);
                }
            }
            MethodConfig::ZoSstm { batch: b, gamma: g, a, smoothness, .. } => {
                if let Some(v) = batch {
                    *b = v;
                }
                if let Some(v) = gamma {
                    *g = Some(v);
                    *a = None;
                    *smoothness = None;
                }
            }
            MethodConfig::ZoSgd { batch: b, gamma: g, .. } => {
                if let Some(v) = batch {
                    *b = v;
                }
                if let Some(v) = gamma {
                    *g = v;
                }
            }
            MethodConfig::RZoClippedSstm { batch: b, gamma: g, .. } => {
                if let Some(v) = batch {
                    *b = Some(v as u64);
                }
                if let Some(v) = gamma {
                    *g = Some(v);
                }
            }
        }
        out
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.methods.is_empty() {
            return Err(BenchError::Config("no methods given".into()));
        }
        if self.budget == 0 || self.n_seeds == 0 {
            return Err(BenchError::Config("budget and n_seeds must be positive".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != self.problem.dim() {
                return Err(BenchError::Config(format!(
                    "x0 has length {}, problem dimension is {}",
                    x0.len(),
                    self.problem.dim()
                )));
            }
        }
        let mut names = BTreeSet::new();
        for m in &self.methods {
            m.validate()?;
            if !names.insert(m.name()) {
                return Err(BenchError::Config(format!("duplicate method name {}", m.name())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "problem": {"kind": "norm", "d": 3},
        "methods": [
            {"method": "zo-clipped-sstm", "batch": 2, "gamma": 0.01, "tau": 0.01, "clip": {"constant": 0.5}},
            {"method": "zo-sgd", "batch": 2, "gamma": 0.01, "omega": 0.9, "tau": 0.01}
        ],
        "budget": 1000,
        "n_seeds": 2,
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.methods[0].name(), "zo-clipped-sstm");
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = SAMPLE.replace("\"n_seeds\": 2", "\"n_seeds\": 2, \"bogus\": 1");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace("\"omega\": 0.9", "\"omega\": 0.9, \"lambda\": 1");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_missing_or_conflicting_step() {
        let bad = SAMPLE.replace("\"gamma\": 0.01, \"tau\": 0.01, \"clip\"", "\"tau\": 0.01, \"clip\"");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace("\"gamma\": 0.01, \"tau\": 0.01, \"clip\"", "\"gamma\": 0.01, \"a\": 1.0, \"tau\": 0.01, \"clip\"");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_duplicate_names_and_bad_x0() {
        let dup = SAMPLE.replace("\"method\": \"zo-sgd\"", "\"method\": \"zo-sgd\", \"name\": \"zo-clipped-sstm\"");
        assert!(RunConfig::from_json(&dup).is_err());
        let bad = SAMPLE.replace("\"budget\"", "\"x0\": [1.0], \"budget\"");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn grid_cell_substitution() {
        let cfg = RunConfig::from_json(SAMPLE).unwrap();
        let m = cfg.methods[0].with_grid_cell(Some(5), Some(1e-4), Some(0.1));
        match m {
            MethodConfig::ZoClippedSstm { batch, gamma, clip, .. } => {
                assert_eq!((batch, gamma), (5, Some(1e-4)));
                assert_eq!(clip, ClipPolicy::Constant(0.1));
            }
            _ => unreachable!(),
        }
    }
}

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::{ForestConfig, DEFAULT_CLUSTERS};
use crate::qsim::{NoiseModel, DEFAULT_SHOTS, MAX_COMPACT_CITIES};

/// Largest one-hot register the statevector path accepts.
pub const MAX_QUBO_QUBITS: usize = 16;
/// Largest instance whose one-hot encoding fits in [`MAX_QUBO_QUBITS`].
pub const MAX_QUBO_CITIES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classical,
    Quantum,
    #[serde(alias = "quantum-ml")]
    QuantumMl,
    Hybrid,
    #[serde(alias = "hybrid-ml")]
    HybridMl,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Classical,
        Method::Quantum,
        Method::QuantumMl,
        Method::Hybrid,
        Method::HybridMl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Quantum => "quantum",
            Method::QuantumMl => "quantum_ml",
            Method::Hybrid => "hybrid",
            Method::HybridMl => "hybrid_ml",
        }
    }

    pub fn uses_ml(self) -> bool {
        matches!(self, Method::QuantumMl | Method::HybridMl)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, Method::Hybrid | Method::HybridMl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One-hot QUBO, `(m)^2` qubits for `m` free cities.
    Qubo,
    /// Permutation index, `ceil(log2 m!)` qubits.
    Compact,
}

impl Encoding {
    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Qubo => "qubo",
            Encoding::Compact => "compact",
        }
    }

    /// Whether a route with `free` free cities fits this encoding.
    pub fn fits(self, free: usize) -> bool {
        match self {
            Encoding::Qubo => free * free <= MAX_QUBO_QUBITS,
            Encoding::Compact => free + 2 <= MAX_COMPACT_CITIES,
        }
    }

    /// The one-hot encoding when it fits, else the compact one.
    pub fn auto(free: usize) -> Encoding {
        if Encoding::Qubo.fits(free) {
            Encoding::Qubo
        } else {
            Encoding::Compact
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qubo" => Ok(Encoding::Qubo),
            "compact" => Ok(Encoding::Compact),
            _ => Err(Error::invalid(format!("unknown encoding `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub method: Method,
    /// `None` picks per subproblem: one-hot when it fits in 16 qubits, else compact.
    pub encoding: Option<Encoding>,
    pub p: usize,
    pub shots: usize,
    /// Objective evaluations per optimizer start.
    pub max_iters: usize,
    pub cost_threshold: Option<f64>,
    pub alpha: f64,
    pub noise: Option<NoiseModel>,
    pub k: usize,
    pub ml_runs: usize,
    pub seed: u64,
    /// Shots per ML training run.
    pub ml_shots: usize,
    /// Optimizer starts; the first may be archive-informed.
    pub restarts: usize,
    /// Noise trajectories averaged per objective evaluation.
    pub noise_trajectories: usize,
    /// Noise trajectories the final shots are split across.
    pub final_trajectories: usize,
    /// Shortlist size after ML re-ranking; `None` keeps every candidate.
    pub rerank_top: Option<usize>,
    /// Cap on the stitched-variant pool of the hybrid pipeline.
    pub max_variants: usize,
    pub forest: ForestConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: Method::Quantum,
            encoding: None,
            p: 1,
            shots: DEFAULT_SHOTS,
            max_iters: 100,
            cost_threshold: None,
            alpha: crate::qubo::DEFAULT_PENALTY_ALPHA,
            noise: None,
            k: DEFAULT_CLUSTERS,
            ml_runs: 50,
            seed: 0,
            ml_shots: 256,
            restarts: 1,
            noise_trajectories: 4,
            final_trajectories: 16,
            rerank_top: None,
            max_variants: 4096,
            forest: ForestConfig::default(),
        }
    }
}

impl SolveConfig {
    pub fn new(method: Method) -> Self {
        SolveConfig {
            method,
            ..SolveConfig::default()
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SolveConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p", self.p),
            ("shots", self.shots),
            ("max_iters", self.max_iters),
            ("restarts", self.restarts),
            ("noise_trajectories", self.noise_trajectories),
            ("final_trajectories", self.final_trajectories),
            ("max_variants", self.max_variants),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha = {} must be >= 1",
                self.alpha
            )));
        }
        if let Some(t) = self.cost_threshold {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!(
                    "cost_threshold = {t} must be positive"
                )));
            }
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if self.method.is_hybrid() && self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if self.method.uses_ml() {
            if self.ml_runs == 0 || self.ml_shots == 0 {
                return Err(Error::invalid("ml_runs and ml_shots must be >= 1"));
            }
            if self.rerank_top == Some(0) {
                return Err(Error::invalid("rerank_top must be >= 1"));
            }
            self.forest.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("hybrid-ml".parse::<Method>().unwrap(), Method::HybridMl);
        assert!("annealing".parse::<Method>().is_err());
        let m: Method = serde_json::from_str("\"quantum-ml\"").unwrap();
        assert_eq!(m, Method::QuantumMl);
        assert_eq!(
            serde_json::to_string(&Method::HybridMl).unwrap(),
            "\"hybrid_ml\""
        );
    }

    #[test]
    fn encoding_limits() {
        assert!(Encoding::Qubo.fits(4));
        assert!(!Encoding::Qubo.fits(5));
        assert!(Encoding::Compact.fits(6));
        assert!(!Encoding::Compact.fits(7));
        assert_eq!(Encoding::auto(6), Encoding::Compact);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: SolveConfig =
            serde_json::from_str(r#"{"method": "hybrid_ml", "shots": 100}"#).unwrap();
        assert_eq!(c.method, Method::HybridMl);
        assert_eq!(c.shots, 100);
        assert_eq!(c.k, 3);
        assert_eq!(c.ml_runs, 50);
        assert!(serde_json::from_str::<SolveConfig>(r#"{"shot": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(SolveConfig::default().validate().is_ok());
        let bad = SolveConfig {
            alpha: 0.5,
            ..SolveConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveConfig {
            shots: 0,
            ..SolveConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveConfig {
            noise: Some(NoiseModel {
                p1q: 2.0,
                ..NoiseModel::default()
            }),
            ..SolveConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

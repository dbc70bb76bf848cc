//! Experiment descriptions shared by the command-line runner and the demo.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuation::ContinuationSchedule;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::gallery::{gallery_entry, gallery_operator};
use crate::operator::OperatorSpec;
use crate::sampling::{self, point_in_ball};
use crate::vector::HVector;

/// Right-hand side `h` of `F(u) = h`.
///
/// Text forms: `ones`, `ones*2` (also `ones·2`), `zeros`, `explicit:[8,1]`
/// (also `explicit:8,1`), `seeded_random(7,5)` (also `random:7:5`) for a
/// point drawn uniformly from the ball of radius 5 with seed 7.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Target {
    Ones { scale: f64 },
    Zeros,
    SeededRandom { seed: u64, norm_cap: f64 },
    Explicit(Vec<f64>),
}

impl Target {
    pub fn resolve(&self, dim: usize) -> Result<HVector> {
        match self {
            Target::Ones { scale } => Ok(HVector::from_fn(dim, |_| *scale)),
            Target::Zeros => Ok(HVector::zeros(dim)),
            Target::SeededRandom { seed, norm_cap } => Ok(point_in_ball(&mut sampling::rng(*seed), dim, *norm_cap)),
            Target::Explicit(v) => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                }
                HVector::new(v.clone())
            }
        }
    }

    /// Dimension implied by an explicit target.
    pub fn explicit_dim(&self) -> Option<usize> {
        match self {
            Target::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let vals = inner
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidParameter(format!("bad explicit target `{s}`: {e}")))?;
    if vals.is_empty() {
        return Err(Error::InvalidParameter("explicit target is empty".into()));
    }
    Ok(vals)
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unrecognised target `{s}`"));
        if s == "zeros" {
            return Ok(Target::Zeros);
        }
        if s == "ones" {
            return Ok(Target::Ones { scale: 1.0 });
        }
        for prefix in ["ones*", "ones·", "ones:"] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let scale = rest.trim().parse().map_err(|_| bad())?;
                return Ok(Target::Ones { scale });
            }
        }
        if let Some(rest) = s.strip_prefix("explicit:") {
            return Ok(Target::Explicit(parse_list(rest)?));
        }
        if s.starts_with('[') {
            return Ok(Target::Explicit(parse_list(s)?));
        }
        let random_args = s
            .strip_prefix("seeded_random(")
            .and_then(|r| r.strip_suffix(')'))
            .map(|r| r.split(',').collect::<Vec<_>>())
            .or_else(|| s.strip_prefix("random:").map(|r| r.split(':').collect()));
        if let Some(args) = random_args {
            if let [seed, cap] = args.as_slice() {
                let seed = seed.trim().parse().map_err(|_| bad())?;
                let norm_cap: f64 = cap.trim().parse().map_err(|_| bad())?;
                if !(norm_cap >= 0.0) {
                    return Err(bad());
                }
                return Ok(Target::SeededRandom { seed, norm_cap });
            }
        }
        Err(bad())
    }
}

impl TryFrom<String> for Target {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Target> for String {
    fn from(t: Target) -> Self {
        t.to_string()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Ones { scale } if *scale == 1.0 => write!(f, "ones"),
            Target::Ones { scale } => write!(f, "ones*{scale}"),
            Target::Zeros => write!(f, "zeros"),
            Target::SeededRandom { seed, norm_cap } => write!(f, "seeded_random({seed},{norm_cap})"),
            Target::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "explicit:[{}]", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub trace_dir: PathBuf,
    pub report_path: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { trace_dir: PathBuf::from("traces"), report_path: PathBuf::from("report.json") }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub operator: String,
    pub dim: usize,
    pub target: Target,
    pub schedule: ContinuationSchedule,
    pub flow: FlowConfig,
    pub outputs: Outputs,
    /// Fixed regularization for single flow runs.
    pub a: Option<f64>,
    /// Acceptance threshold on `|F(u) - h|`.
    pub tol: f64,
    /// Master seed; every sampler derives a named sub-seed from it.
    pub seed: u64,
    /// Cross-check solutions against the reference solvers.
    pub oracle: bool,
}

impl ExperimentConfig {
    /// Resolves the dimension against the operator's policy: explicit targets
    /// fix it when none is requested, scalar operators always use 1.
    pub fn new(operator: &str, dim: Option<usize>, target: Target) -> Result<Self> {
        let entry = gallery_entry(operator)?;
        let dim = entry.dims.resolve(dim.or_else(|| target.explicit_dim()))?;
        if let Some(n) = target.explicit_dim() {
            if n != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: n });
            }
        }
        Ok(Self {
            operator: operator.to_owned(),
            dim,
            target,
            schedule: ContinuationSchedule::default(),
            flow: FlowConfig::default(),
            outputs: Outputs::default(),
            a: None,
            tol: 1e-5,
            seed: 0,
            oracle: false,
        })
    }

    pub fn operator_spec(&self) -> Result<OperatorSpec> {
        gallery_operator(&self.operator, Some(self.dim))
    }

    pub fn target_vector(&self) -> Result<HVector> {
        self.target.resolve(self.dim)
    }

    pub fn sub_seed(&self, label: &str) -> u64 {
        sampling::sub_seed(self.seed, label)
    }
}

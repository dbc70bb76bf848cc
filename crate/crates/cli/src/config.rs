//! Builds an [`ExperimentConfig`] from an optional JSON file plus flags.
//!
//! The file may hold any subset of the config fields, nested the same way
//! the config serializes (`{"schedule": {"a_min": 1e-8}}`). Flags win.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use monodsm::experiment::{ExperimentConfig, Target};
use monodsm::gallery::gallery_entry;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gallery operator name (see `monodsm gallery`).
    #[arg(long)]
    pub operator: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fixed regularization for `flow`.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    #[arg(long)]
    pub a_min: Option<f64>,
    /// Acceptance threshold on |F(u) - h|.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative local error tolerance of the integrator.
    #[arg(long)]
    pub ode_tol: Option<f64>,
    /// Flow horizon; defaults to ln(g0 / residual_tol) + 5.
    #[arg(long)]
    pub max_t: Option<f64>,
    /// ones, ones*2, zeros, explicit:[..], seeded_random(seed,cap)
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Cross-check against the Newton/bisection reference solvers.
    #[arg(long)]
    pub oracle: bool,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn load_file(path: &PathBuf) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))? {
        Value::Object(m) => Ok(m),
        _ => bail!("config {} must be a JSON object", path.display()),
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => load_file(p)?,
            None => Map::new(),
        };
        let operator = match (&self.operator, file.get("operator")) {
            (Some(op), _) => op.clone(),
            (None, Some(Value::String(op))) => op.clone(),
            (None, Some(other)) => bail!("config field `operator` must be a string, got {other}"),
            (None, None) => bail!("no operator given; pass --operator or set it in --config"),
        };
        let target: Target = match (&self.target, file.get("target")) {
            (Some(t), _) => t.parse()?,
            (None, Some(v)) => serde_json::from_value(v.clone()).context("config field `target`")?,
            (None, None) => Target::Ones { scale: 1.0 },
        };
        let file_dim = match file.get("dim") {
            Some(v) => Some(serde_json::from_value::<usize>(v.clone()).context("config field `dim`")?),
            None => None,
        };
        let dim = self.dim.or(file_dim);

        let base = ExperimentConfig::new(&operator, dim, target.clone())?;
        let mut merged = serde_json::to_value(&base)?;
        merge(&mut merged, Value::Object(file));
        let mut cfg: ExperimentConfig = serde_json::from_value(merged).context("config file")?;
        // identity fields come from the resolution above, not the raw file
        cfg.operator = base.operator;
        cfg.dim = gallery_entry(&cfg.operator)?.dims.resolve(Some(base.dim))?;
        cfg.target = target;

        if let Some(a) = self.a {
            cfg.a = Some(a);
        }
        if let Some(x) = self.a0 {
            cfg.schedule.a0 = x;
        }
        if let Some(x) = self.decay_factor {
            cfg.schedule.decay_factor = x;
        }
        if let Some(x) = self.a_min {
            cfg.schedule.a_min = x;
        }
        if let Some(x) = self.tol {
            cfg.tol = x;
        }
        if let Some(x) = self.ode_tol {
            cfg.flow.ode_rel_tol = x;
        }
        if let Some(x) = self.max_t {
            cfg.flow.max_time = Some(x);
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(x) = &self.trace_dir {
            cfg.outputs.trace_dir = x.clone();
        }
        if let Some(x) = &self.report {
            cfg.outputs.report_path = x.clone();
        }
        cfg.oracle |= self.oracle;
        cfg.schedule.validate()?;
        cfg.flow.validate()?;
        if cfg.tol.is_nan() || cfg.tol <= 0.0 {
            bail!("tol must be > 0, got {}", cfg.tol);
        }
        cfg.target.resolve(cfg.dim)?;
        Ok(cfg)
    }
}

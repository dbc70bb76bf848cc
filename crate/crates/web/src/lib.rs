//! Browser bindings. Each export takes plain numbers and strings and returns
//! a JSON document for the page to plot.

use monodsm::continuation::{run_continuation_with, ContinuationSchedule, DiagnosticOptions};
use monodsm::experiment::ExperimentConfig;
use monodsm::flow::{
    integrate_flow, verify_decay, verify_vdot_bound, FlowConfig, DEFAULT_DECAY_TOL_FACTOR, DEFAULT_VDOT_SLACK,
};
use monodsm::sampling::{point_in_ball, rng};
use monodsm::validate::{check_coercive, check_jacobian_psd, check_monotone, monotone_pairing};
use monodsm::{HVector, ValidatorReport};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Res<T> = std::result::Result<T, String>;

fn setup(operator: &str, dim: usize, target: &str) -> Res<(ExperimentConfig, monodsm::OperatorSpec, HVector)> {
    let target = target.parse().map_err(|e: monodsm::Error| e.to_string())?;
    let cfg = ExperimentConfig::new(operator, Some(dim), target).map_err(|e| e.to_string())?;
    let op = cfg.operator_spec().map_err(|e| e.to_string())?;
    let h = cfg.target_vector().map_err(|e| e.to_string())?;
    Ok((cfg, op, h))
}

fn json(v: &impl Serialize) -> Res<String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FlowOut {
    a: f64,
    g0: f64,
    t: Vec<f64>,
    g: Vec<f64>,
    g_theory: Vec<f64>,
    vdot_norm: Vec<f64>,
    vdot_bound: Vec<f64>,
    u_a: Vec<f64>,
    terminated_by: &'static str,
    decay: ValidatorReport,
    vdot: ValidatorReport,
}

pub fn flow_trace_json(operator: &str, dim: usize, a: f64, target: &str) -> Res<String> {
    let (cfg, op, h) = setup(operator, dim, target)?;
    let sol =
        integrate_flow(&op, a, &h, &HVector::zeros(cfg.dim), &FlowConfig::default()).map_err(|e| e.to_string())?;
    let tr = &sol.trace;
    let col = |f: fn(&monodsm::flow::TraceRecord) -> f64| tr.records.iter().map(f).collect::<Vec<_>>();
    json(&FlowOut {
        a,
        g0: tr.g0,
        t: col(|r| r.t),
        g: col(|r| r.g),
        g_theory: col(|r| r.g_theory),
        vdot_norm: col(|r| r.vdot_norm),
        vdot_bound: col(|r| r.vdot_bound),
        u_a: sol.u_a.as_slice().to_vec(),
        terminated_by: tr.terminated_by.as_str(),
        decay: verify_decay(tr, DEFAULT_DECAY_TOL_FACTOR),
        vdot: verify_vdot_bound(tr, DEFAULT_VDOT_SLACK),
    })
}

#[derive(Serialize)]
struct PathOut {
    a: Vec<f64>,
    norm_u: Vec<f64>,
    residual_eq5: Vec<f64>,
    final_u: Vec<f64>,
    final_residual_eq5: f64,
    first_failure: Option<&'static str>,
    bound: ValidatorReport,
    minty: ValidatorReport,
    cauchy: ValidatorReport,
}

pub fn continuation_path_json(
    operator: &str,
    dim: usize,
    target: &str,
    a0: f64,
    decay_factor: f64,
    a_min: f64,
    seed: u64,
) -> Res<String> {
    let (cfg, op, h) = setup(operator, dim, target)?;
    let sched = ContinuationSchedule::new(a0, decay_factor, a_min).map_err(|e| e.to_string())?;
    let diag = DiagnosticOptions { minty_seed: monodsm::sampling::sub_seed(seed, "minty"), ..Default::default() };
    let rep = run_continuation_with(&op, &h, &sched, &FlowConfig::default(), &diag).map_err(|e| e.to_string())?;
    let residual_eq5 = rep
        .stages
        .iter()
        .map(|s| op.evaluate(&s.u_a).map(|f| f.sub(&h).norm()))
        .collect::<monodsm::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    json(&PathOut {
        a: rep.stages.iter().map(|s| s.a).collect(),
        norm_u: rep.stages.iter().map(|s| s.norm_u).collect(),
        residual_eq5,
        final_u: rep.final_u.as_slice().to_vec(),
        final_residual_eq5: rep.final_residual_eq5,
        first_failure: rep.first_failure(cfg.tol),
        bound: rep.bound_report,
        minty: rep.minty_report,
        cauchy: rep.cauchy_report,
    })
}

#[derive(Serialize)]
struct ChecksOut {
    /// `(|u - v|^2, (F(u) - F(v), u - v))` for each sampled pair.
    pairings: Vec<(f64, f64)>,
    monotone: ValidatorReport,
    coercive: ValidatorReport,
    jacobian_psd: ValidatorReport,
}

pub fn operator_checks_json(operator: &str, dim: usize, seed: u64, n_pairs: usize) -> Res<String> {
    let (cfg, op, _) = setup(operator, dim, "zeros")?;
    let e = |e: monodsm::Error| e.to_string();
    let mut r = rng(cfg.sub_seed("pairs") ^ seed);
    let mut pairings = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let u = point_in_ball(&mut r, cfg.dim, 5.0);
        let v = point_in_ball(&mut r, cfg.dim, 5.0);
        pairings.push((u.sub(&v).inner(&u.sub(&v)), monotone_pairing(&op, &u, &v).map_err(e)?));
    }
    json(&ChecksOut {
        pairings,
        monotone: check_monotone(&op, seed, n_pairs.max(1), 5.0, 1e-10).map_err(e)?,
        coercive: check_coercive(&op, &[1.0, 10.0, 100.0], seed, 100).map_err(e)?,
        jacobian_psd: check_jacobian_psd(&op, seed, 20, 5.0, 1e-8).map_err(e)?,
    })
}

#[wasm_bindgen]
pub fn flow_trace(operator: &str, dim: usize, a: f64, target: &str) -> Result<String, JsValue> {
    flow_trace_json(operator, dim, a, target).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn continuation_path(
    operator: &str,
    dim: usize,
    target: &str,
    a0: f64,
    decay_factor: f64,
    a_min: f64,
    seed: u64,
) -> Result<String, JsValue> {
    continuation_path_json(operator, dim, target, a0, decay_factor, a_min, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn operator_checks(operator: &str, dim: usize, seed: u64, n_pairs: usize) -> Result<String, JsValue> {
    operator_checks_json(operator, dim, seed, n_pairs).map_err(|e| JsValue::from_str(&e))
}

/// Gallery names with their declared flags, for the operator picker.
#[wasm_bindgen]
pub fn gallery_json() -> String {
    let rows: Vec<_> = monodsm::gallery::GALLERY
        .iter()
        .map(|e| {
            serde_json::json!({
                "name": e.name,
                "dims": e.dims.to_string(),
                "fixed_dim": matches!(e.dims, monodsm::gallery::DimPolicy::Fixed(_)),
                "monotone": e.flags.monotone,
                "coercive": e.flags.coercive,
                "summary": e.summary,
            })
        })
        .collect();
    serde_json::Value::Array(rows).to_string()
}

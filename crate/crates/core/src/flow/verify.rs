//! Checks of a recorded flow against the closed-form laws of the
//! continuous flow: `g(t) = g0 e^{-t}`, `|vdot| <= (g0/a) e^{-t}` and
//! `|v(t) - v(inf)| <= (g0/a) e^{-t}`.

use crate::error::{Error, Result};
use crate::report::ValidatorReport;
use crate::vector::HVector;

use super::trace::FlowTrace;

pub const DEFAULT_DECAY_TOL_FACTOR: f64 = 100.0;
pub const DEFAULT_VDOT_SLACK: f64 = 1e-6;
pub const DEFAULT_TAIL_SLACK: f64 = 1e-3;

fn point(t: f64, x: f64) -> HVector {
    HVector::new(vec![t, x]).expect("non-empty")
}

/// Every record must satisfy `|g - g0 e^{-t}| <= tol_factor * ode_rel_tol * g0`.
///
/// `worst_value` is the largest deviation divided by the allowance, so the
/// check passes iff it is at most 1. Witness on failure: `([t, g], [g0, ode_rel_tol])`.
pub fn verify_decay(trace: &FlowTrace, tol_factor: f64) -> ValidatorReport {
    if trace.records.is_empty() {
        return ValidatorReport::aborted("empty trace");
    }
    let allowance = tol_factor * trace.ode_rel_tol * trace.g0;
    let mut worst = 0.0_f64;
    let mut worst_at = 0;
    for (i, r) in trace.records.iter().enumerate() {
        let dev = (r.g - trace.g_theory(r.t)).abs();
        let normalized = if allowance > 0.0 {
            dev / allowance
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if normalized > worst || normalized.is_nan() {
            worst = normalized;
            worst_at = i;
        }
    }
    let passed = worst <= 1.0;
    let r = trace.records[worst_at];
    let witness = (!passed).then(|| (point(r.t, r.g), point(trace.g0, trace.ode_rel_tol)));
    ValidatorReport::new(passed, trace.records.len(), worst).with_witness(witness)
}

/// Every record must satisfy `vdot_norm <= (g0/a) e^{-t} (1 + slack)`.
///
/// `worst_value` is the largest `vdot_norm / bound`. Witness on failure:
/// `([t, vdot_norm], [g0, a])`.
pub fn verify_vdot_bound(trace: &FlowTrace, slack: f64) -> ValidatorReport {
    if trace.records.is_empty() {
        return ValidatorReport::aborted("empty trace");
    }
    let mut worst = 0.0_f64;
    let mut worst_at = 0;
    for (i, r) in trace.records.iter().enumerate() {
        let ratio = ratio(r.vdot_norm, trace.vdot_bound(r.t));
        if ratio > worst || ratio.is_nan() {
            worst = ratio;
            worst_at = i;
        }
    }
    let passed = worst <= 1.0 + slack;
    let r = trace.records[worst_at];
    let witness = (!passed).then(|| (point(r.t, r.vdot_norm), point(trace.g0, trace.a)));
    ValidatorReport::new(passed, trace.records.len(), worst).with_witness(witness)
}

/// Every recorded state must satisfy `|v(t) - u_a| <= (g0/a) e^{-t} (1 + slack)`,
/// with the final iterate `u_a` standing in for `v(inf)`.
///
/// `worst_value` is the largest distance-to-bound ratio. Witness on failure:
/// `(v(t), u_a)`.
pub fn verify_tail_bound(trace: &FlowTrace, u_a: &HVector, slack: f64) -> Result<ValidatorReport> {
    if trace.records.is_empty() {
        return Ok(ValidatorReport::aborted("empty trace"));
    }
    if trace.states.len() != trace.records.len() {
        return Err(Error::TraceFormat("tail bound needs the recorded states".into()));
    }
    let mut worst = 0.0_f64;
    let mut worst_at = 0;
    for (i, (r, v)) in trace.records.iter().zip(&trace.states).enumerate() {
        v.check_dim(u_a.dim())?;
        let ratio = ratio(v.distance(u_a), trace.vdot_bound(r.t));
        if ratio > worst || ratio.is_nan() {
            worst = ratio;
            worst_at = i;
        }
    }
    let passed = worst <= 1.0 + slack;
    let witness = (!passed).then(|| (trace.states[worst_at].clone(), u_a.clone()));
    Ok(ValidatorReport::new(passed, trace.records.len(), worst).with_witness(witness))
}

fn ratio(value: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        value / bound
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

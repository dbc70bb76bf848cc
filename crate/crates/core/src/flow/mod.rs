//! The regularized flow `v' = -(F'(v) + aI)^{-1} [F(v) + a v - h]` at fixed `a > 0`.
//!
//! Along the exact flow the residual `g(t) = |F(v) + a v - h|` obeys
//! `g(t) = g(0) e^{-t}` for every operator and every start, so the stopping
//! time is known in advance and any deviation from the law is integrator
//! error. The stationary point solves `F(u) + a u = h`.

mod trace;
mod verify;

use serde::{Deserialize, Serialize};

pub use trace::{FlowTrace, Termination, TraceRecord, CSV_HEADER};
pub use verify::{
    verify_decay, verify_tail_bound, verify_vdot_bound, DEFAULT_DECAY_TOL_FACTOR, DEFAULT_TAIL_SLACK,
    DEFAULT_VDOT_SLACK,
};

use crate::error::{Error, Result};
use crate::linalg::{solve_regularized, RegularizedSystem};
use crate::operator::{OperatorSpec, DEFAULT_FD_STEP};
use crate::report::ValidatorReport;
use crate::vector::HVector;

/// Relative slack on `|vdot| <= g/a` inside [`dsm_rhs`]; covers LU roundoff.
const RHS_BOUND_SLACK: f64 = 1e-8;

/// Extra time past the predicted tolerance crossing for the default horizon.
const HORIZON_MARGIN: f64 = 5.0;

/// Steps that would cross the tolerance aim this far past the predicted time.
const CROSSING_OVERSHOOT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Local error per step, relative to `max(|v|, 1)`.
    pub ode_rel_tol: f64,
    /// Integration horizon; `None` means `ln(g0 / residual_tol) + 5`.
    pub max_time: Option<f64>,
    /// Stop once `g(t) <= residual_tol`.
    pub residual_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            ode_rel_tol: 1e-8,
            max_time: None,
            residual_tol: 1e-10,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: 0.1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.ode_rel_tol > 0.0) {
            return bad(format!("ode_rel_tol must be > 0, got {}", self.ode_rel_tol));
        }
        if !(self.residual_tol > 0.0) {
            return bad(format!("residual_tol must be > 0, got {}", self.residual_tol));
        }
        if let Some(t) = self.max_time {
            if !(t > 0.0) {
                return bad(format!("max_time must be > 0, got {t}"));
            }
        }
        if !(0.0 < self.min_step && self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return bad(format!(
                "need 0 < min_step <= initial_step <= max_step, got {} / {} / {}",
                self.min_step, self.initial_step, self.max_step
            ));
        }
        Ok(())
    }

    /// The horizon actually used for a run starting at residual `g0`.
    pub fn horizon(&self, g0: f64) -> f64 {
        self.max_time.unwrap_or_else(|| (g0 / self.residual_tol).ln().max(0.0) + HORIZON_MARGIN)
    }
}

/// Result of one flow run. `residual` is recomputed from `u_a`.
#[derive(Debug, Clone)]
pub struct RegularizedSolution {
    pub a: f64,
    pub u_a: HVector,
    pub residual: f64,
    pub trace: FlowTrace,
    /// Set when the run ended in [`Termination::SolverError`] or
    /// [`Termination::StepUnderflow`].
    pub failure: Option<Error>,
}

impl RegularizedSolution {
    pub fn converged(&self) -> bool {
        self.trace.terminated_by == Termination::ResidualTolReached
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("regularization a must be > 0, got {a}")))
    }
}

/// `F(v) + a v - h`
pub fn residual_vector(op: &OperatorSpec, a: f64, h: &HVector, v: &HVector) -> Result<HVector> {
    check_a(a)?;
    h.check_dim(op.dim())?;
    let fv = op.evaluate(v)?;
    Ok(HVector::from_fn(v.dim(), |i| fv[i] + a * v[i] - h[i]))
}

/// `g = |F(v) + a v - h|`; zero exactly at the solution of the regularized equation.
pub fn residual(op: &OperatorSpec, a: f64, h: &HVector, v: &HVector) -> Result<f64> {
    Ok(residual_vector(op, a, h, v)?.norm())
}

/// Velocity of the flow at `v`.
///
/// Monotonicity makes `|(F'(v) + aI)^{-1}| <= 1/a`, so the result never
/// exceeds `g(v)/a`; a violation is reported as [`Error::VelocityBound`].
pub fn dsm_rhs(op: &OperatorSpec, a: f64, h: &HVector, v: &HVector) -> Result<HVector> {
    let r = residual_vector(op, a, h, v)?;
    let jac = op.jacobian(v, DEFAULT_FD_STEP)?;
    let g = r.norm();
    let x = solve_regularized(&RegularizedSystem::new(jac, a, r)?)?;
    let vdot = x.scaled(-1.0);
    let vdot_norm = vdot.norm();
    let bound = g / a;
    if vdot_norm > bound * (1.0 + RHS_BOUND_SLACK) {
        return Err(Error::VelocityBound { vdot_norm, bound });
    }
    Ok(vdot)
}

// Dormand-Prince 5(4) tableau. The flow is autonomous, so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights minus embedded 4th-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

struct StepOutcome {
    v_new: HVector,
    k_last: HVector,
    err: f64,
}

fn dp_step(rhs: &impl Fn(&HVector) -> Result<HVector>, v: &HVector, k1: &HVector, h: f64) -> Result<StepOutcome> {
    let mut ks: Vec<HVector> = Vec::with_capacity(7);
    ks.push(k1.clone());
    for (stage, row) in A.iter().enumerate().skip(1) {
        let mut y = v.clone();
        for (k, &coef) in ks.iter().zip(row) {
            if coef != 0.0 {
                y = y.add_scaled(h * coef, k);
            }
        }
        if stage == 6 {
            // Row 6 holds the 5th-order weights, so y is the new state.
            let k7 = rhs(&y)?;
            ks.push(k7);
            let mut err_vec = HVector::zeros(v.dim());
            for (k, &e) in ks.iter().zip(&E) {
                if e != 0.0 {
                    err_vec = err_vec.add_scaled(h * e, k);
                }
            }
            let err = err_vec.norm() / v.norm().max(1.0);
            let k_last = ks.pop().expect("seven stages");
            return Ok(StepOutcome { v_new: y, k_last, err });
        }
        ks.push(rhs(&y)?);
    }
    unreachable!("tableau has seven rows")
}

/// Integrates the flow from `v0` until `g <= residual_tol` or the horizon.
///
/// Every accepted step is recorded. Steps are clipped so they land exactly on
/// integer times and on the predicted crossing time `t + ln(g / residual_tol)`.
/// Runtime failures (singular systems, step-size underflow) end the run and
/// are reported through `terminated_by` and `failure`; only invalid inputs
/// produce `Err`.
pub fn integrate_flow(
    op: &OperatorSpec,
    a: f64,
    h: &HVector,
    v0: &HVector,
    cfg: &FlowConfig,
) -> Result<RegularizedSolution> {
    check_a(a)?;
    cfg.validate()?;
    h.check_dim(op.dim())?;
    v0.check_dim(op.dim())?;

    let rhs = |v: &HVector| dsm_rhs(op, a, h, v);
    let g0 = residual(op, a, h, v0)?;
    let mut trace = FlowTrace::start(a, g0, cfg.ode_rel_tol);
    let horizon = cfg.horizon(g0);
    let tol = cfg.residual_tol;

    let finish = |mut trace: FlowTrace, v: HVector, g: f64, how: Termination, failure: Option<Error>| {
        trace.terminated_by = how;
        RegularizedSolution { a, u_a: v, residual: g, trace, failure }
    };

    let mut v = v0.clone();
    let mut g = g0;
    let mut k1 = match rhs(&v) {
        Ok(k) => k,
        Err(e) => {
            trace.push(0.0, g, f64::NAN, 0.0, v.clone());
            return Ok(finish(trace, v, g, Termination::SolverError, Some(e)));
        }
    };
    trace.push(0.0, g, k1.norm(), 0.0, v.clone());
    if g <= tol {
        return Ok(finish(trace, v, g, Termination::ResidualTolReached, None));
    }

    let mut t = 0.0_f64;
    let mut h_ctrl = cfg.initial_step;
    let mut err_prev = 1e-4_f64;
    let mut rejected_last = false;
    loop {
        if t >= horizon {
            return Ok(finish(trace, v, g, Termination::MaxTimeReached, None));
        }
        let mut step = h_ctrl.min(cfg.max_step).min(horizon - t);
        let mut t_next = t + step;
        let mut clamped = step < h_ctrl;
        // Aim slightly past the crossing so roundoff in g cannot stall the run
        // just above the tolerance.
        let remaining = (g / tol).ln() + CROSSING_OVERSHOOT;
        if step > remaining {
            step = remaining;
            t_next = t + step;
            clamped = true;
        }
        let checkpoint = t.floor() + 1.0;
        if t_next > checkpoint {
            step = checkpoint - t;
            t_next = checkpoint;
            clamped = true;
        }

        let outcome = match dp_step(&rhs, &v, &k1, step) {
            Ok(o) => o,
            Err(e) => return Ok(finish(trace, v, g, Termination::SolverError, Some(e))),
        };
        let err = outcome.err / cfg.ode_rel_tol;
        if err <= 1.0 {
            let g_new = match residual(op, a, h, &outcome.v_new) {
                Ok(g) => g,
                Err(e) => return Ok(finish(trace, v, g, Termination::SolverError, Some(e))),
            };
            t = t_next;
            v = outcome.v_new;
            k1 = outcome.k_last;
            g = g_new;
            trace.push(t, g, k1.norm(), step, v.clone());
            if g <= tol {
                return Ok(finish(trace, v, g, Termination::ResidualTolReached, None));
            }
            let e = err.max(1e-10);
            let mut fac = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            let proposed = step * fac;
            h_ctrl = if clamped { proposed.max(h_ctrl) } else { proposed };
            err_prev = e;
            rejected_last = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h_ctrl = step * fac;
            rejected_last = true;
            if h_ctrl < cfg.min_step {
                let e = Error::StepUnderflow { step: h_ctrl, t };
                return Ok(finish(trace, v, g, Termination::StepUnderflow, Some(e)));
            }
        }
    }
}

/// Runs the flow from each start and checks that all limits coincide
/// within `10 * residual_tol / a`.
///
/// `worst_value` is the largest pairwise distance. On failure the witness is
/// the farthest pair of limits, or `(start, last state)` of a failed run.
pub fn check_uniqueness(
    op: &OperatorSpec,
    a: f64,
    h: &HVector,
    starts: &[HVector],
    cfg: &FlowConfig,
) -> Result<ValidatorReport> {
    if starts.len() < 2 {
        return Err(Error::InvalidParameter("uniqueness check needs at least two starts".into()));
    }
    let mut limits = Vec::with_capacity(starts.len());
    for s in starts {
        let sol = integrate_flow(op, a, h, s, cfg)?;
        if !sol.converged() {
            let note = format!("flow from start {:?} ended with {}", s.as_slice(), sol.trace.terminated_by.as_str());
            return Ok(ValidatorReport::new(false, limits.len(), f64::INFINITY)
                .with_witness(Some((s.clone(), sol.u_a)))
                .with_note(note));
        }
        limits.push(sol.u_a);
    }
    let mut worst = 0.0_f64;
    let mut pair = (0, 1);
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let d = limits[i].distance(&limits[j]);
            if d > worst {
                worst = d;
                pair = (i, j);
            }
        }
    }
    let passed = worst <= 10.0 * cfg.residual_tol / a;
    let witness = (!passed).then(|| (limits[pair.0].clone(), limits[pair.1].clone()));
    Ok(ValidatorReport::new(passed, limits.len(), worst).with_witness(witness))
}

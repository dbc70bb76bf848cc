//! The `a -> 0` sweep: solve the regularized equation along a decreasing
//! schedule, then certify the limit.
//!
//! Certificates attached to every [`SolveReport`]:
//!
//! * **bound**: `|u_a|` stays bounded across stages and each stage satisfies
//!   `(F(u_a), u_a)/|u_a| + a|u_a| = (h, u_a)/|u_a|`, hence
//!   `(F(u_a), u_a)/|u_a| <= |h|`. Without coercivity this is where the
//!   sweep breaks down.
//! * **cauchy**: successive stage solutions move by nonincreasing amounts.
//! * **minty**: `(h - F(u - s eta), eta) >= -tol` for sampled `eta`, `s`,
//!   plus the closing choice `eta = h - F(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate_flow, FlowConfig, FlowTrace, Termination};
use crate::operator::OperatorSpec;
use crate::report::ValidatorReport;
use crate::sampling::{self, unit_direction};
use crate::vector::HVector;

/// Slack on the stage identity and on the `|h|` bound.
pub const BOUND_IDENTITY_TOL: f64 = 1e-8;
/// Allowed ratio of the largest stage norm to the median stage norm.
pub const NORM_GROWTH_LIMIT: f64 = 10.0;
/// Stages with `|u_a|` at or below this skip the identity checks.
pub const DEGENERATE_NORM: f64 = 1e-8;
/// Number of trailing stage-to-stage differences the Cauchy check inspects.
pub const CAUCHY_WINDOW: usize = 3;

/// Geometric schedule `a_{n+1} = decay_factor * a_n`, ending at the first
/// term `<= a_min`, which is clamped to `a_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub a0: f64,
    pub decay_factor: f64,
    pub a_min: f64,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self { a0: 1.0, decay_factor: 0.1, a_min: 1e-6 }
    }
}

impl ContinuationSchedule {
    pub fn new(a0: f64, decay_factor: f64, a_min: f64) -> Result<Self> {
        let s = Self { a0, decay_factor, a_min };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > self.a_min && self.a_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need a0 > a_min > 0, got a0 = {}, a_min = {}",
                self.a0, self.a_min
            )));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return Err(Error::InvalidParameter(format!("decay_factor must lie in (0, 1), got {}", self.decay_factor)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.a0];
        let mut a = self.a0;
        // Products of the decay factor drift by a few ulps; a term within
        // that drift of a_min counts as reaching it.
        let floor = self.a_min * (1.0 + 1e-12);
        while a > floor {
            a *= self.decay_factor;
            out.push(if a <= floor { self.a_min } else { a });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub t_end: f64,
    pub steps: usize,
    pub terminated_by: Termination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub a: f64,
    pub u_a: HVector,
    /// `|F(u_a) + a u_a - h|`
    pub residual_eq6: f64,
    pub norm_u: f64,
    pub flow_summary: FlowSummary,
    /// Where this stage's trace CSV was written, relative to the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    #[serde(skip)]
    pub trace: Option<FlowTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub operator_name: String,
    pub dim: usize,
    pub h: HVector,
    pub schedule: ContinuationSchedule,
    /// Each stage after the first starts from the previous stage's solution.
    pub warm_started: bool,
    pub stages: Vec<Stage>,
    pub final_u: HVector,
    /// `|F(u) - h|` at `final_u`.
    pub final_residual_eq5: f64,
    pub bound_report: ValidatorReport,
    pub minty_report: ValidatorReport,
    pub cauchy_report: ValidatorReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl SolveReport {
    /// `true` iff every stage converged, every certificate passed and the
    /// final residual is within `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        self.first_failure(tol).is_none()
    }

    /// Name of the first failed check. The uniform bound comes before the
    /// final residual because an unbounded sweep explains a large residual.
    pub fn first_failure(&self, tol: f64) -> Option<&'static str> {
        if self.failed_stage.is_some() {
            Some("stage_flow")
        } else if !self.bound_report.passed {
            Some("bound_report")
        } else if !(self.final_residual_eq5 <= tol) {
            Some("final_residual_eq5")
        } else if !self.minty_report.passed {
            Some("minty_report")
        } else if !self.cauchy_report.passed {
            Some("cauchy_report")
        } else {
            None
        }
    }
}

/// Sampling parameters for the Minty diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticOptions {
    pub minty_seed: u64,
    pub s_values: Vec<f64>,
    pub n_dirs: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self { minty_seed: 0, s_values: vec![1e-1, 1e-2, 1e-3], n_dirs: 100 }
    }
}

/// [`run_continuation_with`] using default diagnostic options.
pub fn run_continuation(
    op: &OperatorSpec,
    h: &HVector,
    sched: &ContinuationSchedule,
    cfg: &FlowConfig,
) -> Result<SolveReport> {
    run_continuation_with(op, h, sched, cfg, &DiagnosticOptions::default())
}

/// Solves `F(u_a) + a u_a = h` for each `a` in the schedule, the first stage
/// from the origin and each later one from the previous solution, then
/// attaches the certificates.
///
/// A stage whose flow does not reach its residual tolerance stops the sweep;
/// the report then records the stage and all certificates fail.
pub fn run_continuation_with(
    op: &OperatorSpec,
    h: &HVector,
    sched: &ContinuationSchedule,
    cfg: &FlowConfig,
    diag: &DiagnosticOptions,
) -> Result<SolveReport> {
    sched.validate()?;
    cfg.validate()?;
    h.check_dim(op.dim())?;

    let mut stages: Vec<Stage> = Vec::new();
    let mut start = HVector::zeros(op.dim());
    let mut failure = None;
    for (k, a) in sched.values().into_iter().enumerate() {
        let sol = integrate_flow(op, a, h, &start, cfg)?;
        let converged = sol.converged();
        let reason = sol.failure.as_ref().map_or_else(
            || sol.trace.terminated_by.as_str().to_owned(),
            |e| format!("{}: {e}", sol.trace.terminated_by.as_str()),
        );
        stages.push(Stage {
            a,
            norm_u: sol.u_a.norm(),
            residual_eq6: sol.residual,
            flow_summary: FlowSummary {
                t_end: sol.trace.t_end(),
                steps: sol.trace.steps(),
                terminated_by: sol.trace.terminated_by,
            },
            u_a: sol.u_a.clone(),
            trace_path: None,
            trace: Some(sol.trace),
        });
        if !converged {
            failure = Some((k, start.clone(), reason));
            break;
        }
        start = sol.u_a;
    }

    let final_u = stages.last().expect("schedule is non-empty").u_a.clone();
    let final_residual_eq5 = op.evaluate(&final_u)?.sub(h).norm();

    let (bound_report, minty_report, cauchy_report, failed_stage, failure) = match failure {
        None => {
            let bound = if stages.len() >= 2 {
                uniform_bound_check(op, h, &stages)?
            } else {
                ValidatorReport::new(true, stages.len(), 0.0).with_note("single stage, nothing to compare")
            };
            let minty = minty_diagnostic(op, &final_u, h, &diag.s_values, diag.n_dirs, diag.minty_seed)?;
            (bound, minty, cauchy_check(&stages), None, None)
        }
        Some((k, warm, reason)) => {
            let failed = || {
                ValidatorReport::new(false, 0, f64::NAN)
                    .with_witness(Some((warm.clone(), final_u.clone())))
                    .with_note(format!("not evaluated: stage {k} failed ({reason})"))
            };
            (failed(), failed(), failed(), Some(k), Some(reason.clone()))
        }
    };

    Ok(SolveReport {
        operator_name: op.name().to_owned(),
        dim: op.dim(),
        h: h.clone(),
        schedule: *sched,
        warm_started: true,
        stages,
        final_u,
        final_residual_eq5,
        bound_report,
        minty_report,
        cauchy_report,
        failed_stage,
        failure,
    })
}

/// Checks that the stage solutions stay bounded and satisfy the stage identity.
///
/// Passes iff (i) `max |u_a| <= 10 * median |u_a|` and (ii) every stage with
/// `|u_a| > 1e-8` satisfies
/// `|(F(u_a), u_a)/|u_a| + a|u_a| - (h, u_a)/|u_a|| <= 1e-8` and
/// `(F(u_a), u_a)/|u_a| <= |h| + 1e-8`.
///
/// `worst_value` is the largest signed excess over those three limits, so it
/// is `<= 0` exactly when the check passes. On failure the witness is
/// `(largest u_a, median u_a)` for (i) or `(u_a, [a])` for (ii).
pub fn uniform_bound_check(op: &OperatorSpec, h: &HVector, stages: &[Stage]) -> Result<ValidatorReport> {
    if stages.len() < 2 {
        return Err(Error::InvalidParameter("uniform bound check needs at least two stages".into()));
    }
    let mut order: Vec<usize> = (0..stages.len()).collect();
    order.sort_by(|&i, &j| stages[i].norm_u.total_cmp(&stages[j].norm_u));
    let m = order.len();
    let median = if m % 2 == 1 {
        stages[order[m / 2]].norm_u
    } else {
        0.5 * (stages[order[m / 2 - 1]].norm_u + stages[order[m / 2]].norm_u)
    };
    let i_max = order[m - 1];
    let i_med = order[m / 2];
    let max_norm = stages[i_max].norm_u;

    let mut worst = max_norm - NORM_GROWTH_LIMIT * median;
    let mut witness = (stages[i_max].u_a.clone(), stages[i_med].u_a.clone());
    let h_norm = h.norm();
    let mut identity_dev = 0.0_f64;
    for s in stages {
        let n = s.norm_u;
        if n <= DEGENERATE_NORM {
            continue;
        }
        let fu = op.evaluate(&s.u_a)?;
        let pairing = fu.inner(&s.u_a) / n;
        let dev = (pairing + s.a * n - h.inner(&s.u_a) / n).abs();
        identity_dev = identity_dev.max(dev);
        for excess in [dev - BOUND_IDENTITY_TOL, pairing - h_norm - BOUND_IDENTITY_TOL] {
            if excess > worst {
                worst = excess;
                witness = (s.u_a.clone(), HVector::new(vec![s.a]).expect("len 1"));
            }
        }
    }
    let passed = worst <= 0.0;
    let ratio = if median > 0.0 { max_norm / median } else { 0.0 };
    Ok(ValidatorReport::new(passed, stages.len(), worst)
        .with_witness((!passed).then_some(witness))
        .with_note(format!("max/median stage norm = {ratio:.6e}; max stage identity deviation = {identity_dev:.3e}")))
}

/// Checks that `|u_{n+1} - u_n|` is nonincreasing over the last three
/// differences of the sweep; in `R^n` a bounded sequence with shrinking steps
/// is the finite stand-in for extracting a convergent subsequence.
///
/// `worst_value` is the largest increase between consecutive differences.
/// Fewer than two differences pass vacuously.
pub fn cauchy_check(stages: &[Stage]) -> ValidatorReport {
    let diffs: Vec<f64> = stages.windows(2).map(|w| w[0].u_a.distance(&w[1].u_a)).collect();
    let tail_start = diffs.len().saturating_sub(CAUCHY_WINDOW);
    let tail = &diffs[tail_start..];
    if tail.len() < 2 {
        return ValidatorReport::new(true, tail.len(), 0.0).with_note("fewer than two stage differences");
    }
    let scale = stages.iter().fold(0.0_f64, |m, s| m.max(s.norm_u)).max(1.0);
    let slack = 4.0 * f64::EPSILON * scale;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_k = 0;
    for (k, w) in tail.windows(2).enumerate() {
        let increase = w[1] - w[0];
        if increase > worst {
            worst = increase;
            worst_k = tail_start + k + 1;
        }
    }
    let passed = worst <= slack;
    let witness = (!passed).then(|| (stages[worst_k + 1].u_a.clone(), stages[worst_k].u_a.clone()));
    let listed: Vec<String> = tail.iter().map(|d| format!("{d:.3e}")).collect();
    ValidatorReport::new(passed, tail.len(), worst)
        .with_witness(witness)
        .with_note(format!("trailing stage differences [{}]", listed.join(", ")))
}

/// Sampled Minty-type check at a candidate solution `u`.
///
/// For seeded unit directions `eta` and each `s`, requires
/// `(h - F(u - s eta), eta) >= -tol` with `tol = 1e-6 (1 + |h|)`. The closing
/// direction `eta = h - F(u)` turns the inequality into `|h - F(u)| <= 0`;
/// its value `|h - F(u)|` is recorded in the note and must itself be within
/// `tol` for the report to pass.
///
/// `worst_value` is the smallest sampled inner product. On failure the
/// witness is `(u - s eta, eta)` for the worst sample, or `(u, h - F(u))`
/// when only the closing gate fails.
pub fn minty_diagnostic(
    op: &OperatorSpec,
    u: &HVector,
    h: &HVector,
    s_values: &[f64],
    n_dirs: usize,
    seed: u64,
) -> Result<ValidatorReport> {
    u.check_dim(op.dim())?;
    h.check_dim(op.dim())?;
    if s_values.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter("s values must be positive".into()));
    }
    let tol = minty_tolerance(h);
    let mut rng = sampling::rng(seed);
    let dirs: Vec<HVector> = (0..n_dirs).map(|_| unit_direction(&mut rng, op.dim())).collect();
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    for &s in s_values {
        for eta in &dirs {
            let shifted = u.add_scaled(-s, eta);
            let value = h.sub(&op.evaluate(&shifted)?).inner(eta);
            if value < worst {
                worst = value;
                worst_pair = Some((shifted, eta.clone()));
            }
        }
    }
    let gap = h.sub(&op.evaluate(u)?);
    let closing = gap.normalized().map_or(0.0, |eta| gap.inner(&eta));
    let sampled_ok = worst >= -tol || worst_pair.is_none();
    let closing_ok = closing <= tol;
    let passed = sampled_ok && closing_ok;
    let witness = if passed {
        None
    } else if !sampled_ok {
        worst_pair
    } else {
        Some((u.clone(), gap))
    };
    let worst = if worst.is_finite() { worst } else { 0.0 };
    Ok(ValidatorReport::new(passed, s_values.len() * n_dirs, worst)
        .with_witness(witness)
        .with_note(format!("closing direction h - F(u): |h - F(u)| = {closing:.6e}, tol = {tol:.3e}")))
}

/// `1e-6 (1 + |h|)`
pub fn minty_tolerance(h: &HVector) -> f64 {
    1e-6 * (1.0 + h.norm())
}

/// `|F(u) - h| <= tol`
pub fn verify_solution(op: &OperatorSpec, u: &HVector, h: &HVector, tol: f64) -> Result<bool> {
    h.check_dim(op.dim())?;
    Ok(op.evaluate(u)?.sub(h).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::gallery_operator;

    fn v(x: &[f64]) -> HVector {
        HVector::new(x.to_vec()).unwrap()
    }

    fn stage(a: f64, u: HVector) -> Stage {
        Stage {
            a,
            norm_u: u.norm(),
            residual_eq6: 0.0,
            flow_summary: FlowSummary { t_end: 0.0, steps: 0, terminated_by: Termination::ResidualTolReached },
            u_a: u,
            trace_path: None,
            trace: None,
        }
    }

    #[test]
    fn schedule_values() {
        let s = ContinuationSchedule::default();
        let vals = s.values();
        assert_eq!(vals.len(), 7);
        assert_eq!(vals[0], 1.0);
        assert_eq!(*vals.last().unwrap(), 1e-6);
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        let s = ContinuationSchedule::new(1.0, 0.3, 0.05).unwrap();
        assert_eq!(s.values(), vec![1.0, 0.3, 0.09, 0.05]);
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(ContinuationSchedule::new(1.0, 1.0, 0.1).is_err());
        assert!(ContinuationSchedule::new(0.1, 0.5, 0.1).is_err());
        assert!(ContinuationSchedule::new(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn bound_check_on_identity_closed_form() {
        let op = gallery_operator("identity", Some(1)).unwrap();
        let h = v(&[4.0]);
        let stages: Vec<Stage> = [1.0, 0.1, 0.01].iter().map(|&a| stage(a, v(&[4.0 / (1.0 + a)]))).collect();
        let r = uniform_bound_check(&op, &h, &stages).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_value <= 0.0);
    }

    #[test]
    fn bound_check_flags_growth() {
        let op = gallery_operator("rank_one_projector", Some(2)).unwrap();
        // h orthogonal to e: u_a = h / a exactly.
        let h = v(&[1.0, -1.0]);
        let stages: Vec<Stage> = [1.0, 0.1, 0.01, 0.001].iter().map(|&a| stage(a, h.scaled(1.0 / a))).collect();
        let r = uniform_bound_check(&op, &h, &stages).unwrap();
        assert!(!r.passed);
        assert!(r.witness.is_some());
    }

    #[test]
    fn bound_check_needs_two_stages() {
        let op = gallery_operator("identity", Some(1)).unwrap();
        assert!(uniform_bound_check(&op, &v(&[1.0]), &[stage(1.0, v(&[0.5]))]).is_err());
    }

    #[test]
    fn cauchy_check_cases() {
        let shrinking: Vec<Stage> = [1.0, 0.5, 0.25, 0.125, 0.0625].iter().map(|&x| stage(x, v(&[x]))).collect();
        assert!(cauchy_check(&shrinking).passed);
        let growing: Vec<Stage> = [1.0, 10.0, 100.0, 1000.0].iter().map(|&x| stage(1.0 / x, v(&[x]))).collect();
        let r = cauchy_check(&growing);
        assert!(!r.passed);
        assert!(r.witness.is_some());
        assert!(cauchy_check(&shrinking[..2]).passed);
    }

    #[test]
    fn minty_at_exact_solution() {
        let op = gallery_operator("identity", Some(1)).unwrap();
        let r = minty_diagnostic(&op, &v(&[4.0]), &v(&[4.0]), &[0.1, 0.01, 0.001], 20, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_value > 0.0);
    }

    #[test]
    fn minty_far_from_solution_fails() {
        let op = gallery_operator("identity", Some(1)).unwrap();
        let r = minty_diagnostic(&op, &v(&[0.0]), &v(&[4.0]), &[0.1, 0.01, 0.001], 20, 3).unwrap();
        assert!(!r.passed);
        assert!(r.note.contains("|h - F(u)| = 4.0"));
    }

    #[test]
    fn verify_solution_examples() {
        let op = gallery_operator("scalar_cubic", None).unwrap();
        assert!(verify_solution(&op, &v(&[2.0]), &v(&[8.0]), 1e-12).unwrap());
        assert!(!verify_solution(&op, &v(&[1.0]), &v(&[8.0]), 1e-3).unwrap());
    }

    #[test]
    fn continuation_on_cubic() {
        let op = gallery_operator("scalar_cubic", None).unwrap();
        let rep = run_continuation(&op, &v(&[8.0]), &ContinuationSchedule::default(), &FlowConfig::default()).unwrap();
        assert!((rep.final_u[0] - 2.0).abs() < 1e-5);
        assert!(rep.passed(1e-5), "{:?}", rep.first_failure(1e-5));
        assert_eq!(rep.final_u, rep.stages.last().unwrap().u_a);
    }

    #[test]
    fn failed_stage_marks_report() {
        let op = gallery_operator("scalar_negation", None).unwrap();
        let rep = run_continuation(&op, &v(&[1.0]), &ContinuationSchedule::default(), &FlowConfig::default()).unwrap();
        assert_eq!(rep.failed_stage, Some(0));
        assert!(!rep.bound_report.passed && !rep.minty_report.passed && !rep.cauchy_report.passed);
        assert_eq!(rep.first_failure(1.0), Some("stage_flow"));
    }
}

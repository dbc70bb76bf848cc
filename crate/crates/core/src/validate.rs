//! Sampled checks of the operator hypotheses.
//!
//! None of these prove anything. A failure comes with a concrete witness; a
//! pass only says no counterexample was found among the samples.

use crate::error::{Error, Result};
use crate::linalg::min_sym_eig;
use crate::operator::{OperatorSpec, DEFAULT_FD_STEP};
use crate::report::ValidatorReport;
use crate::sampling::{self, point_in_ball, unit_direction};
use crate::vector::HVector;

/// Increments of the coercivity profile smaller than this (relative to
/// `max(1, |q|)`) count as flat.
const GROWTH_FLOOR: f64 = 1e-9;
const REFINE_ITERS: usize = 200;
const LINE_SEARCH_STEPS: i32 = 48;

/// Tolerances used by the Jacobian consistency check.
pub const JAC_ABS_TOL: f64 = 1e-5;
pub const JAC_REL_TOL: f64 = 1e-5;

/// Draws `n_pairs` pairs uniformly in the ball of `radius` and checks
/// `(F(u) - F(v), u - v) >= -tol` on each.
///
/// `worst_value` is the smallest pairing seen; the witness is its pair.
pub fn check_monotone(op: &OperatorSpec, seed: u64, n_pairs: usize, radius: f64, tol: f64) -> Result<ValidatorReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
    }
    let mut rng = sampling::rng(seed);
    let n = op.dim();
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    for _ in 0..n_pairs {
        let u = point_in_ball(&mut rng, n, radius);
        let v = point_in_ball(&mut rng, n, radius);
        let pairing = monotone_pairing(op, &u, &v)?;
        if pairing < worst {
            worst = pairing;
            worst_pair = Some((u, v));
        }
    }
    let passed = worst >= -tol;
    Ok(ValidatorReport::new(passed, n_pairs, worst).with_witness(if passed { None } else { worst_pair }))
}

/// `(F(u) - F(v), u - v)`
pub fn monotone_pairing(op: &OperatorSpec, u: &HVector, v: &HVector) -> Result<f64> {
    let fu = op.evaluate(u)?;
    let fv = op.evaluate(v)?;
    Ok(fu.sub(&fv).inner(&u.sub(v)))
}

/// `(u, F(u)) / |u|`
pub fn coercivity_quotient(op: &OperatorSpec, u: &HVector) -> Result<f64> {
    Ok(u.inner(&op.evaluate(u)?) / u.norm())
}

/// Finite-radius proxy for `(u, F(u)) / |u| -> inf`.
///
/// For each radius `r` the minimum of `q(r, d) = (rd, F(rd)) / r` over unit
/// directions is estimated from `n_dirs` seeded directions, then improved by
/// projected gradient descent on the sphere from the best sample. Sampling
/// alone misses thin bad sets such as the kernel of a rank-one map. The
/// check passes iff the minima increase strictly with `r` (by more than a
/// relative `1e-9`) and the last is at least twice the magnitude of the
/// first. `worst_value` is the minimum at the largest radius; on failure the
/// witness is `(r_max d, r_min d)` along the minimizing direction there.
pub fn check_coercive(
    op: &OperatorSpec,
    radii: &[f64],
    directions_seed: u64,
    n_dirs: usize,
) -> Result<ValidatorReport> {
    if radii.len() < 2 {
        return Err(Error::InvalidParameter("coercivity check needs at least two radii".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and strictly ascending".into()));
    }
    if n_dirs == 0 {
        return Err(Error::InvalidParameter("n_dirs must be >= 1".into()));
    }
    let mut rng = sampling::rng(directions_seed);
    let dirs: Vec<HVector> = (0..n_dirs).map(|_| unit_direction(&mut rng, op.dim())).collect();

    let mut minima = Vec::with_capacity(radii.len());
    let mut last_dir = None;
    for &r in radii {
        let mut best = (f64::INFINITY, dirs[0].clone());
        for d in &dirs {
            let q = coercivity_quotient(op, &d.scaled(r))?;
            if q < best.0 {
                best = (q, d.clone());
            }
        }
        let (q, d) = refine_direction(op, r, best.1, best.0)?;
        minima.push(q);
        last_dir = Some(d);
    }

    let increasing = minima.windows(2).all(|w| w[1] - w[0] > GROWTH_FLOOR * w[0].abs().max(1.0));
    let first = minima[0];
    let last = *minima.last().expect("two radii");
    let grows = last >= 2.0 * first.abs();
    let passed = increasing && grows;
    let d = last_dir.expect("two radii");
    let witness = (!passed).then(|| (d.scaled(*radii.last().unwrap()), d.scaled(radii[0])));
    let profile: Vec<String> = radii.iter().zip(&minima).map(|(r, q)| format!("r={r}: {q:.6e}")).collect();
    Ok(ValidatorReport::new(passed, n_dirs * radii.len(), last)
        .with_witness(witness)
        .with_note(format!("finite-radius growth proxy; min q by radius [{}]", profile.join(", "))))
}

fn refine_direction(op: &OperatorSpec, r: f64, start: HVector, q_start: f64) -> Result<(f64, HVector)> {
    let mut d = start;
    let mut q = q_start;
    for _ in 0..REFINE_ITERS {
        let u = d.scaled(r);
        let fu = op.evaluate(&u)?;
        let jac = op.jacobian(&u, DEFAULT_FD_STEP)?;
        // gradient of d -> (d, F(r d))
        let jt_d = HVector::new(jac.tr_mul_vec(d.as_slice()))?;
        let grad = fu.add_scaled(r, &jt_d);
        let tangent = grad.add_scaled(-grad.inner(&d), &d);
        let tn = tangent.norm();
        if tn <= 1e-14 * (1.0 + q.abs()) {
            break;
        }
        // Best step on a geometric grid. A backtracking search can settle on
        // a step that hops back and forth across a narrow valley.
        let mut best: Option<(f64, HVector)> = None;
        for k in 0..LINE_SEARCH_STEPS {
            let step = 4.0 / tn * 0.5_f64.powi(k);
            if let Some(cand) = d.add_scaled(-step, &tangent).normalized() {
                let qc = coercivity_quotient(op, &cand.scaled(r))?;
                if best.as_ref().is_none_or(|(b, _)| qc < *b) {
                    best = Some((qc, cand));
                }
            }
        }
        match best {
            Some((qc, cand)) if qc < q => {
                q = qc;
                d = cand;
            }
            _ => break,
        }
    }
    Ok((q, d))
}

/// Minimum eigenvalue of the symmetric part of `F'(u)` at `n_points` seeded
/// points in the ball of `radius`; passes iff every value is `>= -tol`.
///
/// Monotone differentiable maps have positive semidefinite symmetric
/// Jacobian part everywhere. Witness on failure: `(u, [eigenvalue])`.
pub fn check_jacobian_psd(
    op: &OperatorSpec,
    seed: u64,
    n_points: usize,
    radius: f64,
    tol: f64,
) -> Result<ValidatorReport> {
    let mut rng = sampling::rng(seed);
    let mut worst = f64::INFINITY;
    let mut worst_u = None;
    for _ in 0..n_points {
        let u = point_in_ball(&mut rng, op.dim(), radius);
        let eig = min_sym_eig(&op.jacobian(&u, DEFAULT_FD_STEP)?)?;
        if eig < worst {
            worst = eig;
            worst_u = Some(u);
        }
    }
    let passed = worst >= -tol;
    let witness = (!passed).then(|| (worst_u.expect("n_points >= 1"), HVector::new(vec![worst]).expect("len 1")));
    Ok(ValidatorReport::new(passed, n_points, worst).with_witness(witness))
}

/// Compares the analytic Jacobian with central differences at seeded points.
///
/// `worst_value` is the largest `|J - J_fd| / (1e-5 + 1e-5 |J|)` over all
/// entries; the check passes iff it is at most 1. Operators without an
/// analytic Jacobian pass vacuously. Witness on failure: `(u, [i, j])`.
pub fn check_jacobian_consistency(
    op: &OperatorSpec,
    seed: u64,
    n_points: usize,
    radius: f64,
) -> Result<ValidatorReport> {
    if !op.has_analytic_jacobian() {
        return Ok(ValidatorReport::new(true, 0, 0.0).with_note("no analytic jacobian"));
    }
    let mut rng = sampling::rng(seed);
    let n = op.dim();
    let mut worst = 0.0_f64;
    let mut worst_at = None;
    for _ in 0..n_points {
        let u = point_in_ball(&mut rng, n, radius);
        let exact = op.jacobian(&u, DEFAULT_FD_STEP)?;
        let approx = op.fd_jacobian(&u, DEFAULT_FD_STEP)?;
        for i in 0..n {
            for j in 0..n {
                let e = exact[(i, j)];
                let mismatch = (e - approx[(i, j)]).abs() / (JAC_ABS_TOL + JAC_REL_TOL * e.abs());
                if mismatch > worst {
                    worst = mismatch;
                    worst_at = Some((u.clone(), HVector::new(vec![i as f64, j as f64]).expect("len 2")));
                }
            }
        }
    }
    let passed = worst <= 1.0;
    Ok(ValidatorReport::new(passed, n_points, worst).with_witness(if passed { None } else { worst_at }))
}

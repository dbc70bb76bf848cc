//! Reference solvers for `F(u) = h` that share no code with the flow:
//! bisection in one dimension, damped Newton with its own finite-difference
//! Jacobian and `nalgebra`'s LU elsewhere.
//!
//! They exist to cross-check continuation results and are not used by it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::OperatorSpec;
use crate::vector::HVector;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub u: HVector,
    pub residual: f64,
    pub iterations: usize,
    pub method: &'static str,
}

fn eval(op: &OperatorSpec, h: &HVector, u: &DVector<f64>) -> Result<DVector<f64>> {
    let fu = op.evaluate(&HVector::new(u.as_slice().to_vec())?)?;
    Ok(DVector::from_iterator(u.len(), fu.iter().zip(h.iter()).map(|(f, y)| f - y)))
}

/// Root of the scalar map `x -> F(x) - h` by bisection.
///
/// The bracket is grown geometrically from `[-1, 1]` until the signs differ.
/// Requires a nondecreasing scalar `F`.
pub fn bisection(op: &OperatorSpec, h: f64, x_tol: f64) -> Result<OracleSolution> {
    if op.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: op.dim() });
    }
    let f = |x: f64| -> Result<f64> { Ok(op.evaluate(&HVector::new(vec![x])?)?[0] - h) };
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut grow = 0;
    while f(lo)? > 0.0 || f(hi)? < 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        grow += 1;
        if grow > 1100 {
            return Err(Error::InvalidParameter("bisection could not bracket a root".into()));
        }
    }
    let mut iterations = 0;
    while hi - lo > x_tol && iterations < 2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let x = 0.5 * (lo + hi);
    Ok(OracleSolution { u: HVector::new(vec![x])?, residual: f(x)?.abs(), iterations, method: "bisection" })
}

/// Damped Newton on `F(u) = h` from `u0`, backtracking on `|F(u) - h|`.
///
/// Stops once the residual is at most `residual_tol` or after
/// `max_iterations`; the result reports whatever residual was reached.
pub fn damped_newton(
    op: &OperatorSpec,
    h: &HVector,
    u0: &HVector,
    residual_tol: f64,
    max_iterations: usize,
) -> Result<OracleSolution> {
    h.check_dim(op.dim())?;
    u0.check_dim(op.dim())?;
    let n = op.dim();
    let mut u = DVector::from_column_slice(u0.as_slice());
    let mut r = eval(op, h, &u)?;
    let mut rn = r.norm();
    let mut iterations = 0;
    while rn > residual_tol && iterations < max_iterations {
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-7 * (1.0 + u[j].abs());
            let mut up = u.clone();
            up[j] += step;
            let mut um = u.clone();
            um[j] -= step;
            let col = (eval(op, h, &up)? - eval(op, h, &um)?) / (2.0 * step);
            jac.set_column(j, &col);
        }
        let delta = jac.lu().solve(&(-&r)).ok_or(Error::Singular { pivot: 0.0, column: 0 })?;
        let mut lambda = 1.0;
        loop {
            let cand = &u + &delta * lambda;
            let rc = eval(op, h, &cand)?;
            if rc.norm() < (1.0 - 1e-4 * lambda) * rn || lambda < 1e-12 {
                u = cand;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
        let new_rn = r.norm();
        iterations += 1;
        if new_rn >= rn && lambda < 1e-12 {
            rn = new_rn;
            break;
        }
        rn = new_rn;
    }
    Ok(OracleSolution { u: HVector::new(u.as_slice().to_vec())?, residual: rn, iterations, method: "damped_newton" })
}

/// Bisection for scalar operators, damped Newton from the origin otherwise.
pub fn solve_reference(op: &OperatorSpec, h: &HVector) -> Result<OracleSolution> {
    if op.dim() == 1 {
        bisection(op, h[0], 1e-14)
    } else {
        damped_newton(op, h, &HVector::zeros(op.dim()), 1e-12, 200)
    }
}

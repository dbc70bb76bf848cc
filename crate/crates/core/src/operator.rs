//! The operator abstraction `F: R^n -> R^n` and its Jacobian `A = F'(u)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::{DenseMatrix, HVector};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DenseMatrix + Send + Sync>;

/// Default relative step for central-difference Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Properties an operator claims to have. Validators test them empirically;
/// nothing in the solver trusts them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeclaredFlags {
    pub monotone: bool,
    pub strictly_monotone: bool,
    pub coercive: bool,
}

/// A nonlinear map on `R^dim` with an optional analytic Jacobian.
///
/// Cloning is cheap; the closures are shared.
#[derive(Clone)]
pub struct OperatorSpec {
    name: String,
    dim: usize,
    eval: EvalFn,
    jac: Option<JacobianFn>,
    /// Accumulated target shift `y`; the operator applied is `eval(u) - y`.
    shift: Option<Arc<[f64]>>,
    flags: DeclaredFlags,
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jac.is_some())
            .field("flags", &self.flags)
            .finish()
    }
}

impl OperatorSpec {
    pub fn new(name: impl Into<String>, dim: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        assert!(dim >= 1, "operator dimension must be >= 1");
        Self { name: name.into(), dim, eval: Arc::new(eval), jac: None, shift: None, flags: DeclaredFlags::default() }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DenseMatrix + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_flags(mut self, flags: DeclaredFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flags(&self) -> DeclaredFlags {
        self.flags
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = (self.eval)(u);
        if let Some(y) = &self.shift {
            for (o, yi) in out.iter_mut().zip(y.iter()) {
                *o -= yi;
            }
        }
        out
    }

    /// Applies `F`.
    pub fn evaluate(&self, u: &HVector) -> Result<HVector> {
        u.check_dim(self.dim)?;
        let out = self.apply(u.as_slice());
        debug_assert_eq!(out.len(), self.dim, "operator `{}` returned wrong length", self.name);
        HVector::new(out)
    }

    /// `F'(u)`: the analytic Jacobian when present, otherwise central differences
    /// with per-coordinate step `fd_step * (1 + |u_j|)`.
    pub fn jacobian(&self, u: &HVector, fd_step: f64) -> Result<DenseMatrix> {
        u.check_dim(self.dim)?;
        match &self.jac {
            Some(jac) => {
                let m = jac(u.as_slice());
                if !m.is_finite() {
                    return Err(Error::NonFinite(format!("jacobian of `{}`", self.name)));
                }
                Ok(m)
            }
            None => self.fd_jacobian(u, fd_step),
        }
    }

    /// Central finite-difference Jacobian, ignoring any analytic one.
    pub fn fd_jacobian(&self, u: &HVector, fd_step: f64) -> Result<DenseMatrix> {
        u.check_dim(self.dim)?;
        if !(fd_step > 0.0) {
            return Err(Error::InvalidParameter(format!("fd_step must be > 0, got {fd_step}")));
        }
        let n = self.dim;
        let mut m = DenseMatrix::zeros(n, n);
        let mut probe = u.as_slice().to_vec();
        for j in 0..n {
            let uj = probe[j];
            let step = fd_step * (1.0 + uj.abs());
            probe[j] = uj + step;
            let plus = self.apply(&probe);
            probe[j] = uj - step;
            let minus = self.apply(&probe);
            probe[j] = uj;
            for i in 0..n {
                let d = (plus[i] - minus[i]) / (2.0 * step);
                if !d.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "finite-difference jacobian of `{}` at column {j}",
                        self.name
                    )));
                }
                m[(i, j)] = d;
            }
        }
        Ok(m)
    }

    /// `G(u) = F(u) - y`, with the same Jacobian.
    ///
    /// Monotonicity and coercivity survive the shift, so the declared flags
    /// carry over unchanged. Shifts accumulate into one vector rather than
    /// nesting, so shifting by `y` and then `-y` gives back `F` exactly.
    pub fn shift_target(&self, y: &HVector) -> Result<OperatorSpec> {
        y.check_dim(self.dim)?;
        let total: Vec<f64> = match &self.shift {
            Some(prev) => prev.iter().zip(y.iter()).map(|(p, q)| p + q).collect(),
            None => y.as_slice().to_vec(),
        };
        Ok(OperatorSpec { name: format!("{}-shifted", self.name), shift: Some(total.into()), ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> OperatorSpec {
        OperatorSpec::new("cubic", 1, |u| vec![u[0].powi(3)])
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = cubic().evaluate(&HVector::zeros(2)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
    }

    #[test]
    fn fd_fallback_used_without_analytic_jacobian() {
        let u = HVector::new(vec![2.0]).unwrap();
        let j = cubic().jacobian(&u, DEFAULT_FD_STEP).unwrap();
        assert!((j[(0, 0)] - 12.0).abs() < 1e-6);
    }

    #[test]
    fn fd_reports_non_finite() {
        let op = OperatorSpec::new("log", 1, |u| vec![u[0].ln()]);
        assert!(matches!(op.fd_jacobian(&HVector::zeros(1), 1e-6), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nonpositive_fd_step_rejected() {
        assert!(cubic().fd_jacobian(&HVector::zeros(1), 0.0).is_err());
    }

    #[test]
    fn shift_keeps_jacobian_and_flags() {
        let op = cubic()
            .with_jacobian(|u| DenseMatrix::from_fn(1, 1, |_, _| 3.0 * u[0] * u[0]))
            .with_flags(DeclaredFlags { monotone: true, strictly_monotone: true, coercive: true });
        let g = op.shift_target(&HVector::new(vec![8.0]).unwrap()).unwrap();
        let u = HVector::new(vec![2.0]).unwrap();
        assert_eq!(g.evaluate(&u).unwrap().as_slice(), &[0.0]);
        assert_eq!(g.jacobian(&u, 1e-6).unwrap()[(0, 0)], 12.0);
        assert_eq!(g.flags(), op.flags());
        assert!(op.shift_target(&HVector::zeros(3)).is_err());
    }
}

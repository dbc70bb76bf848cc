//! Dense kernels for the regularized system `(A + aI) x = r`.
//!
//! `A` is the Jacobian of a monotone map, so its symmetric part is positive
//! semidefinite but `A` itself is in general not symmetric. Solves therefore
//! use LU with partial pivoting.

use crate::error::{Error, Result};
use crate::report::ValidatorReport;
use crate::sampling::{self, unit_direction};
use crate::vector::{DenseMatrix, HVector};

/// Additive slack on `|x| <= 1/a` in [`inv_norm_bound_check`].
pub const INV_NORM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RegularizedSystem {
    pub matrix: DenseMatrix,
    pub a: f64,
    pub rhs: HVector,
}

impl RegularizedSystem {
    pub fn new(matrix: DenseMatrix, a: f64, rhs: HVector) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("regularization a must be > 0, got {a}")));
        }
        if !matrix.is_square() {
            return Err(Error::InvalidParameter("matrix must be square".into()));
        }
        rhs.check_dim(matrix.rows())?;
        Ok(Self { matrix, a, rhs })
    }
}

/// `P A = L U` packed into one matrix, unit lower triangle implied.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factorizes with partial pivoting. A pivot at or below
    /// `n * eps * max|A|` is treated as singular.
    pub fn new(mut a: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("LU needs a square matrix".into()));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix passed to LU".into()));
        }
        let n = a.rows();
        let threshold = n as f64 * f64::EPSILON * a.max_abs();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold || pivot == 0.0 {
                return Err(Error::Singular { pivot, column: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let akk = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / akk;
                a[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= l * a[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `(A + aI) x = rhs`.
pub fn solve_regularized(sys: &RegularizedSystem) -> Result<HVector> {
    let lu = LuFactors::new(sys.matrix.shifted_diagonal(sys.a))?;
    HVector::new(lu.solve(sys.rhs.as_slice()))
}

/// Smallest eigenvalue of `(A + A^T) / 2`, by cyclic Jacobi rotations.
pub fn min_sym_eig(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidParameter("eigenvalues need a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix passed to min_sym_eig".into()));
    }
    let eig = symmetric_eigenvalues(a.symmetric_part());
    Ok(eig.into_iter().fold(f64::INFINITY, f64::min))
}

fn symmetric_eigenvalues(mut s: DenseMatrix) -> Vec<f64> {
    let n = s.rows();
    let scale = s.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let off = |s: &DenseMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += s[(i, j)] * s[(i, j)];
                }
            }
        }
        acc.sqrt()
    };
    for _sweep in 0..100 {
        if off(&s) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
            }
        }
    }
    (0..n).map(|i| s[(i, i)]).collect()
}

/// Probes `|(A + aI)^{-1} w| <= 1/a` with seeded unit vectors `w`.
///
/// `worst_value` is the largest `a |x|`; the bound is tight (value 1) when
/// `A = 0`. On failure the witness is `(w, x)`.
pub fn inv_norm_bound_check(a_mat: &DenseMatrix, a: f64, n_probes: usize, seed: u64) -> Result<ValidatorReport> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("regularization a must be > 0, got {a}")));
    }
    let lu = LuFactors::new(a_mat.shifted_diagonal(a))?;
    let mut rng = sampling::rng(seed);
    let n = a_mat.rows();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut passed = true;
    for _ in 0..n_probes {
        let w = unit_direction(&mut rng, n);
        let x = HVector::new(lu.solve(w.as_slice()))?;
        let xn = x.norm();
        if xn > 1.0 / a + INV_NORM_SLACK {
            passed = false;
        }
        if a * xn > worst {
            worst = a * xn;
            worst_pair = Some((w, x));
        }
    }
    Ok(ValidatorReport::new(passed, n_probes, worst).with_witness(if passed { None } else { worst_pair }))
}

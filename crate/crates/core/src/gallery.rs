//! Named test operators with known monotonicity and coercivity.
//!
//! Two members are deliberate negative cases: `rank_one_projector` is monotone
//! but not coercive, `scalar_negation` is not monotone.

use std::fmt;

use crate::error::{Error, Result};
use crate::operator::{DeclaredFlags, OperatorSpec};
use crate::vector::DenseMatrix;

/// Which dimensions an operator can be built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimPolicy {
    /// Always this dimension; requested dimensions are ignored.
    Fixed(usize),
    /// Any dimension at least `min`.
    AtLeast(usize),
}

impl DimPolicy {
    /// Resolves a requested dimension, or the smallest admissible one when
    /// none is given.
    pub fn resolve(self, requested: Option<usize>) -> Result<usize> {
        match (self, requested) {
            (DimPolicy::Fixed(n), _) => Ok(n),
            (DimPolicy::AtLeast(min), None) => Ok(min),
            (DimPolicy::AtLeast(min), Some(n)) if n >= min => Ok(n),
            (DimPolicy::AtLeast(min), Some(n)) => {
                Err(Error::InvalidParameter(format!("dimension {n} below minimum {min}")))
            }
        }
    }
}

impl fmt::Display for DimPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimPolicy::Fixed(n) => write!(f, "fixed n={n}"),
            DimPolicy::AtLeast(min) => write!(f, "any n>={min}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub dims: DimPolicy,
    pub flags: DeclaredFlags,
    pub summary: &'static str,
}

const STRICT_COERCIVE: DeclaredFlags = DeclaredFlags { monotone: true, strictly_monotone: true, coercive: true };

pub const GALLERY: &[GalleryEntry] = &[
    GalleryEntry { name: "scalar_cubic", dims: DimPolicy::Fixed(1), flags: STRICT_COERCIVE, summary: "f(x) = x^3" },
    GalleryEntry {
        name: "scalar_affine_sin",
        dims: DimPolicy::Fixed(1),
        flags: STRICT_COERCIVE,
        summary: "f(x) = 2x + sin x",
    },
    GalleryEntry { name: "identity", dims: DimPolicy::AtLeast(1), flags: STRICT_COERCIVE, summary: "F(u) = u" },
    GalleryEntry {
        name: "spd_tridiag",
        dims: DimPolicy::AtLeast(1),
        flags: STRICT_COERCIVE,
        summary: "F(u) = M u, M = tridiag(-1, 2, -1)",
    },
    GalleryEntry {
        name: "convex_gradient",
        dims: DimPolicy::AtLeast(1),
        flags: STRICT_COERCIVE,
        summary: "F(u)_i = u_i^3 + u_i",
    },
    GalleryEntry {
        name: "skew_plus_cubic",
        dims: DimPolicy::AtLeast(1),
        flags: STRICT_COERCIVE,
        summary: "F(u) = M u + S u + u^3, S skew-symmetric",
    },
    GalleryEntry {
        name: "rank_one_projector",
        dims: DimPolicy::AtLeast(2),
        flags: DeclaredFlags { monotone: true, strictly_monotone: false, coercive: false },
        summary: "F(u) = (e.u) e, e = (1,..,1)/sqrt(n)",
    },
    GalleryEntry {
        name: "scalar_negation",
        dims: DimPolicy::Fixed(1),
        flags: DeclaredFlags { monotone: false, strictly_monotone: false, coercive: false },
        summary: "f(x) = -x",
    },
];

pub fn gallery_entry(name: &str) -> Result<&'static GalleryEntry> {
    GALLERY.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownOperator(name.to_owned()))
}

/// Builds the named operator. Fixed-dimension operators ignore `dim`.
pub fn gallery_operator(name: &str, dim: Option<usize>) -> Result<OperatorSpec> {
    let entry = gallery_entry(name)?;
    let n = entry.dims.resolve(dim)?;
    let op = match entry.name {
        "scalar_cubic" => {
            OperatorSpec::new(name, 1, |u| vec![u[0].powi(3)]).with_jacobian(|u| diag(&[3.0 * u[0] * u[0]]))
        }
        "scalar_affine_sin" => {
            OperatorSpec::new(name, 1, |u| vec![2.0 * u[0] + u[0].sin()]).with_jacobian(|u| diag(&[2.0 + u[0].cos()]))
        }
        "identity" => OperatorSpec::new(name, n, |u| u.to_vec()).with_jacobian(move |_| DenseMatrix::identity(n)),
        "spd_tridiag" => {
            let m = tridiag(n);
            let jac = m.clone();
            OperatorSpec::new(name, n, move |u| m.mul_vec(u)).with_jacobian(move |_| jac.clone())
        }
        "convex_gradient" => OperatorSpec::new(name, n, |u| u.iter().map(|x| x * x * x + x).collect())
            .with_jacobian(|u| diag(&u.iter().map(|x| 3.0 * x * x + 1.0).collect::<Vec<_>>())),
        "skew_plus_cubic" => {
            let linear = skew_plus_tridiag(n);
            let jac_linear = linear.clone();
            OperatorSpec::new(name, n, move |u| {
                let mut out = linear.mul_vec(u);
                for (o, x) in out.iter_mut().zip(u) {
                    *o += x * x * x;
                }
                out
            })
            .with_jacobian(move |u| {
                let mut j = jac_linear.clone();
                for (i, x) in u.iter().enumerate() {
                    j[(i, i)] += 3.0 * x * x;
                }
                j
            })
        }
        "rank_one_projector" => {
            let e = 1.0 / (n as f64).sqrt();
            OperatorSpec::new(name, n, move |u| {
                let s = e * u.iter().sum::<f64>();
                vec![s * e; u.len()]
            })
            .with_jacobian(move |_| DenseMatrix::from_fn(n, n, |_, _| e * e))
        }
        "scalar_negation" => OperatorSpec::new(name, 1, |u| vec![-u[0]]).with_jacobian(|_| diag(&[-1.0])),
        _ => unreachable!("gallery entry without constructor"),
    };
    Ok(op.with_flags(entry.flags))
}

/// Every gallery member, built at `dim` where the member allows it and at its
/// fixed or minimum dimension otherwise.
pub fn make_gallery(dim: usize) -> Vec<OperatorSpec> {
    GALLERY
        .iter()
        .map(|e| {
            let n = match e.dims {
                DimPolicy::Fixed(n) => n,
                DimPolicy::AtLeast(min) => dim.max(min),
            };
            gallery_operator(e.name, Some(n)).expect("gallery dimensions are admissible")
        })
        .collect()
}

fn diag(d: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
}

/// `tridiag(-1, 2, -1)`
pub fn tridiag(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

/// Fixed skew-symmetric matrix used by `skew_plus_cubic`: `+1`/`-1` on the
/// first off-diagonals and `+0.5`/`-0.5` on the second.
pub fn skew_part(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        let sign = if j > i { 1.0 } else { -1.0 };
        match i.abs_diff(j) {
            1 => sign,
            2 => 0.5 * sign,
            _ => 0.0,
        }
    })
}

fn skew_plus_tridiag(n: usize) -> DenseMatrix {
    let m = tridiag(n);
    let s = skew_part(n);
    DenseMatrix::from_fn(n, n, |i, j| m[(i, j)] + s[(i, j)])
}

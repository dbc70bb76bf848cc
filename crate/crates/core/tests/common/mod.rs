#![allow(dead_code)]

use monodsm::experiment::Target;
use monodsm::gallery::{gallery_operator, DimPolicy, GALLERY};
use monodsm::{HVector, OperatorSpec};

pub const SWEEP_DIMS: [usize; 3] = [1, 5, 20];
pub const N_TARGETS: u64 = 5;
pub const TARGET_NORM_CAP: f64 = 10.0;

pub fn v(x: &[f64]) -> HVector {
    HVector::new(x.to_vec()).unwrap()
}

fn dims_for(policy: DimPolicy) -> Vec<usize> {
    match policy {
        DimPolicy::Fixed(n) => vec![n],
        DimPolicy::AtLeast(min) => {
            let mut d: Vec<usize> = SWEEP_DIMS.iter().map(|&n| n.max(min)).collect();
            d.dedup();
            d
        }
    }
}

/// Gallery members at each sweep dimension, filtered by declared flags.
pub fn cases(filter: impl Fn(monodsm::DeclaredFlags) -> bool) -> Vec<OperatorSpec> {
    GALLERY
        .iter()
        .filter(|e| filter(e.flags))
        .flat_map(|e| dims_for(e.dims).into_iter().map(move |n| gallery_operator(e.name, Some(n)).unwrap()))
        .collect()
}

pub fn monotone_cases() -> Vec<OperatorSpec> {
    cases(|f| f.monotone)
}

pub fn coercive_cases() -> Vec<OperatorSpec> {
    cases(|f| f.monotone && f.coercive)
}

/// Seeded right-hand sides with `|h| <= 10`.
pub fn targets(dim: usize) -> Vec<HVector> {
    (0..N_TARGETS)
        .map(|k| Target::SeededRandom { seed: 1000 + k, norm_cap: TARGET_NORM_CAP }.resolve(dim).unwrap())
        .collect()
}

pub fn label(op: &OperatorSpec) -> String {
    format!("{}(n={})", op.name(), op.dim())
}

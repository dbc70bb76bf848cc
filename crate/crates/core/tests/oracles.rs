//! Results checked against solutions computed without the crate's solvers.

mod common;

use approx::assert_relative_eq;
use common::v;
use monodsm::continuation::{run_continuation, ContinuationSchedule};
use monodsm::flow::{integrate_flow, FlowConfig};
use monodsm::gallery::{gallery_operator, skew_part, tridiag};
use monodsm::linalg::{min_sym_eig, solve_regularized, RegularizedSystem};
use monodsm::sampling::{point_in_ball, rng};
use monodsm::{DenseMatrix, HVector};
use nalgebra::DMatrix;

/// Plain bisection on an increasing scalar function over `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

#[test]
fn cubic_regularized_roots() {
    let op = gallery_operator("scalar_cubic", None).unwrap();
    for a in [0.1, 0.5] {
        let expected = bisect(|x| x * x * x + a * x - 8.0, 0.0, 3.0);
        let sol = integrate_flow(&op, a, &v(&[8.0]), &v(&[0.0]), &FlowConfig::default()).unwrap();
        assert!(sol.converged());
        assert!((sol.u_a[0] - expected).abs() < 1e-9, "a={a}: {} vs {expected}", sol.u_a[0]);
    }
}

#[test]
fn cubic_half_life_is_ln2() {
    let op = gallery_operator("scalar_cubic", None).unwrap();
    let sol = integrate_flow(&op, 0.5, &v(&[8.0]), &v(&[0.0]), &FlowConfig::default()).unwrap();
    let t_half = sol.trace.crossing_time(0.5).unwrap();
    assert!((t_half - std::f64::consts::LN_2).abs() < 1e-6, "{t_half}");
}

#[test]
fn affine_sin_solution() {
    let op = gallery_operator("scalar_affine_sin", None).unwrap();
    let expected = bisect(|x| 2.0 * x + x.sin() - 3.0, 0.0, 3.0);
    let rep = run_continuation(&op, &v(&[3.0]), &ContinuationSchedule::default(), &FlowConfig::default()).unwrap();
    assert!((rep.final_u[0] - expected).abs() < 1e-6);
    assert!(rep.passed(1e-5));
}

#[test]
fn convex_gradient_unit_solution() {
    let op = gallery_operator("convex_gradient", Some(3)).unwrap();
    let rep =
        run_continuation(&op, &v(&[2.0, 2.0, 2.0]), &ContinuationSchedule::default(), &FlowConfig::default()).unwrap();
    for x in rep.final_u.iter() {
        assert!((x - 1.0).abs() < 1e-5);
    }
    assert!(rep.final_residual_eq5 <= 1e-5);
}

#[test]
fn rank_one_closed_form() {
    // u_a = h_perp / a + (e.h) / (1 + a) e
    let n = 3;
    let op = gallery_operator("rank_one_projector", Some(n)).unwrap();
    let h = v(&[1.0, -2.0, 0.5]);
    let e = HVector::from_fn(n, |_| 1.0 / (n as f64).sqrt());
    for a in [1.0, 0.1, 0.01] {
        let eh = e.inner(&h);
        let expected = h.add_scaled(-eh, &e).scaled(1.0 / a).add_scaled(eh / (1.0 + a), &e);
        let sol = integrate_flow(&op, a, &h, &HVector::zeros(n), &FlowConfig::default()).unwrap();
        assert!(sol.u_a.distance(&expected) < 1e-8 / a, "a={a}");
    }
}

#[test]
fn tridiag_smallest_eigenvalue() {
    for n in [1, 2, 5, 20] {
        let expected = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert_relative_eq!(min_sym_eig(&tridiag(n)).unwrap(), expected, max_relative = 1e-10);
    }
}

#[test]
fn skew_part_has_zero_symmetric_part() {
    let s = skew_part(6);
    assert!(min_sym_eig(&s).unwrap().abs() < 1e-15);
    let t = to_nalgebra(&s);
    assert!((&t + t.transpose()).norm() == 0.0);
}

#[test]
fn min_sym_eig_matches_nalgebra() {
    let mut r = rng(42);
    for n in [1, 2, 3, 7, 15, 30] {
        let a = DenseMatrix::from_fn(n, n, |_, _| point_in_ball(&mut r, 1, 10.0)[0]);
        let na = to_nalgebra(&a);
        let sym = (&na + na.transpose()) * 0.5;
        let expected = sym.symmetric_eigen().eigenvalues.min();
        let got = min_sym_eig(&a).unwrap();
        assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs()), "n={n}: {got} vs {expected}");
    }
}

#[test]
fn regularized_solve_matches_nalgebra() {
    let mut r = rng(7);
    for n in [1, 4, 12, 40] {
        let m = DenseMatrix::from_fn(n, n, |_, _| point_in_ball(&mut r, 1, 10.0)[0]);
        let b = point_in_ball(&mut r, n, 10.0);
        let a = 0.3;
        let x = solve_regularized(&RegularizedSystem::new(m.clone(), a, b.clone()).unwrap()).unwrap();
        let na = to_nalgebra(&m) + DMatrix::identity(n, n) * a;
        let expected = na.lu().solve(&nalgebra::DVector::from_column_slice(b.as_slice())).unwrap();
        let diff = expected.iter().zip(x.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9 * (1.0 + expected.amax()), "n={n}: {diff}");
    }
}

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use ucplab::discrete::{assemble, eigs_lowest};
use ucplab::fields::{sample_field, GridSpec, Identity};
use ucplab::linalg::{kth_eigenvalue, sturm_count, tridiag_bounds};

fn laplacian(d: usize, l: f64, n: usize) -> ucplab::discrete::DiscreteOperator<f64> {
    let grid = GridSpec::new(d, l, n).unwrap();
    let field = sample_field(Arc::new(Identity { d }), grid).unwrap();
    assemble(&field, None).unwrap()
}

fn fd(k: usize, h: f64, l: f64) -> f64 {
    (2.0 / (h * h)) * (1.0 - (k as f64 * PI * h / l).cos())
}

#[test]
fn dirichlet_laplacian_d1() {
    let (l, n) = (2.0, 63);
    let h = l / (n + 1) as f64;
    let spec = eigs_lowest(&laplacian(1, l, n), 4, 1e-12, 0).unwrap();
    for (k, &lam) in spec.eigenvalues.iter().enumerate() {
        assert_relative_eq!(lam, fd(k + 1, h, l), max_relative = 1e-10);
    }
}

#[test]
fn dirichlet_laplacian_d2_is_separable() {
    let (l, n) = (1.0, 15);
    let h = l / (n + 1) as f64;
    let spec = eigs_lowest(&laplacian(2, l, n), 3, 1e-11, 1).unwrap();
    let one = fd(1, h, l);
    let two = fd(2, h, l);
    assert_relative_eq!(spec.eigenvalues[0], 2.0 * one, max_relative = 1e-9);
    assert_relative_eq!(spec.eigenvalues[1], one + two, max_relative = 1e-9);
    assert_relative_eq!(spec.eigenvalues[2], one + two, max_relative = 1e-9);
}

#[test]
fn eigenvectors_are_orthonormal() {
    let spec = eigs_lowest(&laplacian(1, 4.0, 31), 3, 1e-12, 0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = spec.eigenvectors[i].iter().zip(&spec.eigenvectors[j]).map(|(a, b)| a * b).sum();
            assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-9, "{i} {j} {dot}");
        }
    }
}

#[test]
fn sturm_bisection_matches_closed_form() {
    let n = 50;
    let diag = vec![2.0; n];
    let off = vec![-1.0; n - 1];
    let (lo, hi) = tridiag_bounds(&diag, &off);
    for k in [0, 7, 49] {
        let exact = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
        assert!((kth_eigenvalue(&diag, &off, k, lo, hi) - exact).abs() < 1e-12);
    }
    assert_eq!(sturm_count(&diag, &off, 2.0), n / 2);
}

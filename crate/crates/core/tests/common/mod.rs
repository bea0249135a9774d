//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Projection onto `{y : Ay <= b, y >= 0}` by enumerating active sets.
///
/// For every subset of the `m + n` constraints, project `p` onto the affine
/// set where that subset holds with equality, and keep the closest feasible
/// candidate. The true projection is the affine projection for its own
/// active set, and every other feasible candidate is at least as far.
pub fn active_set_projection(a: &DMatrix<f64>, b: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let rows = m + n;
    let g = DMatrix::from_fn(rows, n, |i, j| if i < m { a[(i, j)] } else if i - m == j { -1.0 } else { 0.0 });
    let h = DVector::from_fn(rows, |i, _| if i < m { b[i] } else { 0.0 });
    let feasible = |y: &DVector<f64>| (&g * y - &h).iter().all(|&v| v <= 1e-10);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << rows) {
        let active: Vec<usize> = (0..rows).filter(|i| mask & (1 << i) != 0).collect();
        let y = if active.is_empty() {
            p.clone()
        } else {
            let gs = g.select_rows(active.iter());
            let hs = h.select_rows(active.iter());
            let gram = &gs * gs.transpose();
            let Some(inv) = gram.try_inverse() else { continue };
            p - gs.transpose() * (inv * (&gs * p - hs))
        };
        if feasible(&y) {
            let d = (&y - p).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, y));
            }
        }
    }
    best.expect("0 is feasible, so some candidate is").1
}

/// Random polyhedron with `n, m <= 4`, nonnegative rows and positive capacities.
pub fn random_polyhedron(rng: &mut impl Rng) -> (DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let a = DMatrix::from_fn(m, n, |_, _| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.1..2.0) });
    let b = DVector::from_fn(m, |_, _| rng.random_range(0.1..2.0));
    (a, b)
}

pub fn random_point(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-2.0..4.0))
}

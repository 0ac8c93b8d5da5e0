//! Fixed problem instances shared by the benchmarks.

use vi_core::{Certificate, ConvexSet, Mapping, Matrix, Point, Problem, SpaceSpec};

/// Box `[-1, 1]^n` in `l_2` with an affine map `(2 I + K) x - 1`, `K` skew
/// with unit off-diagonal entries next to the diagonal.
pub fn affine_box_problem(n: usize) -> Problem {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match j as isize - i as isize {
                    0 => 2.0,
                    1 => 1.0,
                    -1 => -1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let map = Mapping::affine(
        Matrix::from_rows(rows).unwrap(),
        Point::new(vec![-1.0; n]).unwrap(),
    )
    .unwrap();
    let set = ConvexSet::boxed(
        Point::new(vec![-1.0; n]).unwrap(),
        Point::new(vec![1.0; n]).unwrap(),
    )
    .unwrap();
    // Symmetric part is 2 I; spectral norm is below 2 + 2.
    let cert = Certificate::new(0.05, 2.0, 4.0).unwrap();
    Problem::new(SpaceSpec::new(n, 2.0).unwrap(), set, map, Some(cert)).unwrap()
}

/// Deterministic spread-out vector of length `n`.
pub fn sample_point(n: usize) -> Point {
    Point::new(
        (0..n)
            .map(|i| ((i as f64 + 1.0) * 0.7).sin() * 10f64.powi(i as i32 % 5 - 2))
            .collect(),
    )
    .unwrap()
}

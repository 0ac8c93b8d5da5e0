//! The space `E = (R^n, ||.||_p)` with `1 < p < inf`: points, p-norms, the
//! duality pairing and the normalized duality mapping.
//!
//! For every exponent in the open interval the space is smooth, strictly
//! convex and reflexive, so the normalized duality mapping is single valued
//! and has the closed form
//!
//! ```text
//! J(x)_i = ||x||_p^(2-p) * |x_i|^(p-1) * sign(x_i),   J(0) = 0.
//! ```

use std::ops::Deref;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::sampling::{self, SweepReport};

/// Exponent `p` of an l_p space, validated to lie in `(1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Exponent(f64);

impl Exponent {
    pub const HILBERT: Exponent = Exponent(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::UnsupportedSpace { p })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> Exponent {
        Exponent(self.0 / (self.0 - 1.0))
    }

    pub fn is_hilbert(self) -> bool {
        self.0 == 2.0
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of `R^n` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "point must have at least one coordinate".into(),
            ));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n.max(1)])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self, p: Exponent) -> f64 {
        norm(&self.0, p.value())
    }

    /// `||self - other||_p`, or a shape error.
    pub fn distance(&self, other: &Point, p: Exponent) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(norm(&sub(&self.0, &other.0), p.value()))
    }

    pub fn distance_inf(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// An element of the dual space `E* = l_q`, represented by its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualVector {
    coords: Vec<f64>,
    source_p: f64,
}

impl DualVector {
    pub fn new(coords: Vec<f64>, source_p: Exponent) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(
                "dual vector has non-finite coordinates".into(),
            ));
        }
        Ok(DualVector {
            coords,
            source_p: source_p.value(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn source_p(&self) -> Exponent {
        Exponent(self.source_p)
    }

    /// Norm in `l_q`, the dual of the space this functional acts on.
    pub fn dual_norm(&self) -> f64 {
        norm(&self.coords, Exponent(self.source_p).dual().value())
    }
}

/// Dimension and exponent of the space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceSpec {
    pub n: usize,
    pub p: Exponent,
}

impl SpaceSpec {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension n must be positive".into()));
        }
        Ok(SpaceSpec {
            n,
            p: Exponent::new(p)?,
        })
    }
}

/// `(sum |x_i|^p)^(1/p)`, validating both arguments.
pub fn p_norm(x: &[f64], p: f64) -> Result<f64> {
    let p = Exponent::new(p)?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("p_norm of a non-finite vector".into()));
    }
    Ok(norm(x, p.value()))
}

pub fn dual_exponent(p: f64) -> Result<f64> {
    Ok(Exponent::new(p)?.dual().value())
}

/// `<f, x> = sum f_i x_i`.
pub fn pairing(f: &DualVector, x: &Point) -> Result<f64> {
    check_dim(x.dim(), f.dim())?;
    Ok(dot(&f.coords, x))
}

pub fn duality_map(x: &Point, p: Exponent) -> DualVector {
    DualVector {
        coords: duality_coords(x, p.value()),
        source_p: p.value(),
    }
}

// Slice-level kernels. Callers guarantee matching lengths and finite input.

pub(crate) fn norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
        scale * s.sqrt()
    } else {
        let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
        scale * s.powf(1.0 / p)
    }
}

pub(crate) fn duality_coords(x: &[f64], p: f64) -> Vec<f64> {
    if p == 2.0 {
        return x.to_vec();
    }
    let nx = norm(x, p);
    if nx == 0.0 {
        return vec![0.0; x.len()];
    }
    // ||x||^(2-p) |x_i|^(p-1) written as ||x|| (|x_i| / ||x||)^(p-1) to stay in range.
    x.iter()
        .map(|&xi| {
            if xi == 0.0 {
                0.0
            } else {
                nx * (xi.abs() / nx).powf(p - 1.0) * xi.signum()
            }
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + t * b`
pub(crate) fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

/// `<J(direction), v>` in `l_p`.
pub(crate) fn dual_pairing(direction: &[f64], v: &[f64], p: f64) -> f64 {
    dot(&duality_coords(direction, p), v)
}

/// Sweeps the two defining identities of `J` over `count` seeded vectors:
/// `<J x, x> = ||x||^2` and `||J x||_q = ||x||_p`, each within
/// `1e-9 * (1 + scale)`.
pub fn duality_identity_sweep(n: usize, p: Exponent, count: usize, seed: u64) -> SweepReport {
    let parts: Vec<SweepReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = Point::from_raw(sampling::spread_vector(&mut rng, n));
            let f = duality_map(&x, p);
            let nx = x.norm(p);
            let mut r = SweepReport::new("");
            let pair_err = (dot(f.coords(), &x) - nx * nx).abs();
            r.record(seed, i, -pair_err, 1e-9 * (1.0 + nx * nx));
            let norm_err = (f.dual_norm() - nx).abs();
            r.record(seed, i, -norm_err, 1e-9 * (1.0 + nx));
            r
        })
        .collect();
    let mut report = SweepReport::new(format!("duality n={n} p={p}"));
    for part in parts {
        report.merge(part);
    }
    report
}

/// Largest componentwise gap `|J(x)_i - x_i|` over seeded vectors at `p = 2`.
pub fn hilbert_identity_gap(n: usize, count: usize, seed: u64) -> f64 {
    (0..count as u64)
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = Point::from_raw(sampling::spread_vector(&mut rng, n));
            let f = duality_map(&x, Exponent::HILBERT);
            f.coords()
                .iter()
                .zip(x.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max)
}

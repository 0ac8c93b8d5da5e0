//! Closed convex sets `C` and their retractions `Q_C`.
//!
//! Only set families with a provable closed form are supported:
//!
//! | set         | p      | retraction                              |
//! |-------------|--------|-----------------------------------------|
//! | whole space | any    | identity (exact sunny)                  |
//! | box         | any    | coordinatewise clamp (exact sunny)      |
//! | ball        | 2 only | radial scaling (metric projection)      |
//! | halfspace   | 2 only | affine offset (metric projection)       |
//!
//! The clamp is sunny and nonexpansive in every l_p and satisfies
//! `<x - Qx, J(Qx - y)> >= 0` for `y` in the box because `J` preserves the
//! sign of each coordinate. Radial retraction onto an l_p ball is sunny but
//! not nonexpansive for `p != 2`, so it is rejected.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lp_space::{self, dot, norm, Exponent, Point};
use crate::sampling::{self, SweepReport};
use rand_chacha::ChaCha8Rng;

/// Box sampling enumerates every vertex up to this dimension.
const MAX_VERTEX_DIM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    WholeSpace,
    Box {
        lo: Point,
        hi: Point,
    },
    /// Closed l_p ball of the given radius centred at the origin.
    Ball {
        radius: f64,
    },
    /// `{ x : <normal, x> <= offset }`
    Halfspace {
        normal: Point,
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RetractionMode {
    ExactSunny,
    MetricProjection,
    Unsupported(String),
}

impl ConvexSet {
    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        check_dim(lo.dim(), hi.dim())?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::InvalidInput(format!(
                "empty box: lo[{i}] = {} > hi[{i}] = {}",
                lo[i], hi[i]
            )));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { radius })
    }

    pub fn halfspace(normal: Point, offset: f64) -> Result<Self> {
        if normal.iter().all(|&a| a == 0.0) {
            return Err(Error::InvalidInput(
                "halfspace normal must be nonzero".into(),
            ));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidInput(
                "halfspace offset must be finite".into(),
            ));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    /// Dimension fixed by the set's own data, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexSet::Box { lo, .. } => Some(lo.dim()),
            ConvexSet::Halfspace { normal, .. } => Some(normal.dim()),
            ConvexSet::WholeSpace | ConvexSet::Ball { .. } => None,
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, n),
            None => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, ConvexSet::Box { .. } | ConvexSet::Ball { .. })
    }

    /// Smallest axis-aligned box containing the set, for bounded sets.
    pub fn bounding_box(&self, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ConvexSet::Box { lo, hi } => Some((lo.to_vec(), hi.to_vec())),
            ConvexSet::Ball { radius } => Some((vec![-radius; n], vec![*radius; n])),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvexSet::WholeSpace => "whole space",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::Halfspace { .. } => "halfspace",
        }
    }
}

pub fn retraction_support(set: &ConvexSet, p: Exponent) -> RetractionMode {
    match set {
        ConvexSet::WholeSpace | ConvexSet::Box { .. } => RetractionMode::ExactSunny,
        ConvexSet::Ball { .. } | ConvexSet::Halfspace { .. } if p.is_hilbert() => {
            RetractionMode::MetricProjection
        }
        ConvexSet::Ball { .. } => RetractionMode::Unsupported(format!(
            "radial retraction onto an l_{p} ball is not nonexpansive; balls are supported only for p = 2"
        )),
        ConvexSet::Halfspace { .. } => RetractionMode::Unsupported(format!(
            "no closed-form sunny nonexpansive retraction onto an l_{p} halfspace; halfspaces are supported only for p = 2"
        )),
    }
}

pub(crate) fn ensure_supported(set: &ConvexSet, p: Exponent) -> Result<()> {
    match retraction_support(set, p) {
        RetractionMode::Unsupported(reason) => Err(Error::UnsupportedRetraction(reason)),
        _ => Ok(()),
    }
}

pub fn contains(set: &ConvexSet, x: &Point, p: Exponent, tol: f64) -> Result<bool> {
    set.check_dim(x.dim())?;
    Ok(contains_raw(set, x, p.value(), tol))
}

fn contains_raw(set: &ConvexSet, x: &[f64], p: f64, tol: f64) -> bool {
    match set {
        ConvexSet::WholeSpace => true,
        ConvexSet::Box { lo, hi } => x
            .iter()
            .zip(lo.iter().zip(hi.iter()))
            .all(|(&xi, (&l, &h))| xi >= l - tol && xi <= h + tol),
        ConvexSet::Ball { radius } => norm(x, p) <= radius + tol,
        ConvexSet::Halfspace { normal, offset } => dot(normal, x) <= offset + tol,
    }
}

pub fn retract(set: &ConvexSet, x: &Point, p: Exponent) -> Result<Point> {
    set.check_dim(x.dim())?;
    ensure_supported(set, p)?;
    Ok(Point::from_raw(retract_raw(set, x)))
}

/// Caller has checked support and dimensions.
pub(crate) fn retract_raw(set: &ConvexSet, x: &[f64]) -> Vec<f64> {
    match set {
        ConvexSet::WholeSpace => x.to_vec(),
        ConvexSet::Box { lo, hi } => x
            .iter()
            .zip(lo.iter().zip(hi.iter()))
            .map(|(&xi, (&l, &h))| xi.clamp(l, h))
            .collect(),
        ConvexSet::Ball { radius } => {
            let nx = norm(x, 2.0);
            if nx <= *radius {
                x.to_vec()
            } else {
                let s = radius / nx;
                x.iter().map(|v| v * s).collect()
            }
        }
        ConvexSet::Halfspace { normal, offset } => {
            let excess = dot(normal, x) - offset;
            if excess <= 0.0 {
                x.to_vec()
            } else {
                let t = excess / dot(normal, normal);
                lp_space::axpy(x, -t, normal)
            }
        }
    }
}

/// Minimum over sampled `y` in `C` of `<J(x0 - y), x - x0>` with `x0 = Q_C x`.
///
/// A correct sunny nonexpansive retraction gives a value `>= 0` up to
/// rounding. `x0` itself is always among the samples, so the result is `<= 0`.
pub fn verify_characterization(
    set: &ConvexSet,
    x: &Point,
    p: Exponent,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    let x0 = retract(set, x, p)?;
    let residual = lp_space::sub(x, &x0);
    let ys = samples_in_set(set, &x0, x, p, sample_count, seed);
    let worst = ys
        .par_iter()
        .map(|y| lp_space::dual_pairing(&lp_space::sub(&x0, y), &residual, p.value()))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0f64, f64::min);
    Ok(worst)
}

/// `max_t ||Q(Qx + t (x - Qx)) - Qx||_p`.
pub fn verify_sunny(set: &ConvexSet, x: &Point, p: Exponent, ts: &[f64]) -> Result<f64> {
    if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "sunny parameter t must be >= 0, got {t}"
        )));
    }
    let qx = retract(set, x, p)?;
    let dir = lp_space::sub(x, &qx);
    Ok(ts
        .iter()
        .map(|&t| {
            let moved = retract_raw(set, &lp_space::axpy(&qx, t, &dir));
            norm(&lp_space::sub(&moved, &qx), p.value())
        })
        .fold(0.0, f64::max))
}

/// Seeded points of `C` used to probe the characterization inequality:
/// `x0`, box vertices (n <= 10) or sphere points, and uniform draws from a
/// bounding region intersected with `C`.
fn samples_in_set(
    set: &ConvexSet,
    x0: &[f64],
    x: &[f64],
    p: Exponent,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut out = vec![x0.to_vec()];
    if let ConvexSet::Box { lo, hi } = set {
        if n <= MAX_VERTEX_DIM {
            for mask in 0u32..(1 << n) {
                out.push(
                    (0..n)
                        .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                        .collect(),
                );
            }
        }
    }
    let reach = 1.0 + x.iter().chain(x0).fold(0.0f64, |m, v| m.max(v.abs()));
    out.extend((0..count as u64).map(|i| {
        let mut rng = sampling::rng_for(seed, i);
        sample_member(set, x0, reach, p, i, &mut rng)
    }));
    out
}

fn sample_member(
    set: &ConvexSet,
    anchor: &[f64],
    reach: f64,
    p: Exponent,
    index: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = anchor.len();
    match set {
        ConvexSet::Box { lo, hi } => sampling::uniform_in_box(rng, lo, hi),
        ConvexSet::Ball { radius } => {
            // Alternate between the boundary sphere and the interior.
            let radial = if index.is_multiple_of(2) {
                1.0
            } else {
                sampling::unit(rng).powf(1.0 / n as f64)
            };
            point_in_ball(rng, n, radius * radial, p.value())
        }
        ConvexSet::Halfspace { normal, offset } => {
            let lo: Vec<f64> = anchor.iter().map(|a| a - reach).collect();
            let hi: Vec<f64> = anchor.iter().map(|a| a + reach).collect();
            let y = sampling::uniform_in_box(rng, &lo, &hi);
            let excess = dot(normal, &y) - offset;
            if excess > 0.0 {
                // Reflect across the boundary hyperplane.
                lp_space::axpy(&y, -2.0 * excess / dot(normal, normal), normal)
            } else {
                y
            }
        }
        ConvexSet::WholeSpace => {
            let lo: Vec<f64> = anchor.iter().map(|a| a - reach).collect();
            let hi: Vec<f64> = anchor.iter().map(|a| a + reach).collect();
            sampling::uniform_in_box(rng, &lo, &hi)
        }
    }
}

/// A point of p-norm `r` in a Gaussian direction.
pub(crate) fn point_in_ball(rng: &mut ChaCha8Rng, n: usize, r: f64, p: f64) -> Vec<f64> {
    loop {
        let g = sampling::gaussian(rng, n);
        let ng = norm(&g, p);
        if ng > 1e-300 {
            // Guard against rounding just past the boundary.
            let s = (r / ng).min(f64::MAX);
            let y: Vec<f64> = g.iter().map(|v| v * s).collect();
            let ny = norm(&y, p);
            return if ny > r {
                y.iter().map(|v| v * (r / ny)).collect()
            } else {
                y
            };
        }
    }
}

/// A probe point in a neighbourhood of the set, mostly outside it.
pub(crate) fn probe_point(set: &ConvexSet, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match set {
        ConvexSet::Box { lo, hi } => {
            let (a, b): (Vec<f64>, Vec<f64>) = lo
                .iter()
                .zip(hi.iter())
                .map(|(&l, &h)| {
                    let w = 1.0 + (h - l);
                    (l - w, h + w)
                })
                .unzip();
            sampling::uniform_in_box(rng, &a, &b)
        }
        ConvexSet::Ball { radius } => {
            sampling::uniform_in_box(rng, &vec![-2.0 * radius; n], &vec![2.0 * radius; n])
        }
        _ => sampling::uniform_in_box(rng, &vec![-5.0; n], &vec![5.0; n]),
    }
}

/// Checks the characterization inequality at `instances` seeded probe points,
/// each against `samples` members of `C`, with tolerance `1e-9 (1 + ||x||^2)`.
pub fn characterization_sweep(
    set: &ConvexSet,
    n: usize,
    p: Exponent,
    instances: usize,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    set.check_dim(n)?;
    ensure_supported(set, p)?;
    let parts = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = Point::from_raw(probe_point(set, n, &mut rng));
            let worst = verify_characterization(
                set,
                &x,
                p,
                samples,
                seed ^ (i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            )?;
            let nx = x.norm(p);
            let mut r = SweepReport::new("");
            r.record(seed, i, worst, 1e-9 * (1.0 + nx * nx));
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_reports(
        format!("characterization {} p={p}", set.name()),
        parts,
    ))
}

/// `||Qx - Qy||_p <= ||x - y||_p + 1e-12` on seeded probe pairs.
pub fn nonexpansive_sweep(
    set: &ConvexSet,
    n: usize,
    p: Exponent,
    pairs: usize,
    seed: u64,
) -> Result<SweepReport> {
    set.check_dim(n)?;
    ensure_supported(set, p)?;
    let parts: Vec<SweepReport> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = probe_point(set, n, &mut rng);
            let y = probe_point(set, n, &mut rng);
            let qx = retract_raw(set, &x);
            let qy = retract_raw(set, &y);
            let gap =
                norm(&lp_space::sub(&x, &y), p.value()) - norm(&lp_space::sub(&qx, &qy), p.value());
            let mut r = SweepReport::new("");
            r.record(seed, i, gap, 1e-12);
            r
        })
        .collect();
    Ok(fold_reports(
        format!("nonexpansive {} p={p}", set.name()),
        parts,
    ))
}

/// `<x - y, Qx - Qy> >= ||Qx - Qy||^2 - 1e-9` at `p = 2`.
pub fn firm_nonexpansive_sweep(
    set: &ConvexSet,
    n: usize,
    pairs: usize,
    seed: u64,
) -> Result<SweepReport> {
    set.check_dim(n)?;
    ensure_supported(set, Exponent::HILBERT)?;
    let parts: Vec<SweepReport> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = probe_point(set, n, &mut rng);
            let y = probe_point(set, n, &mut rng);
            let dq = lp_space::sub(&retract_raw(set, &x), &retract_raw(set, &y));
            let value = dot(&lp_space::sub(&x, &y), &dq) - dot(&dq, &dq);
            let mut r = SweepReport::new("");
            r.record(seed, i, value, 1e-9);
            r
        })
        .collect();
    Ok(fold_reports(
        format!("projection inequality {}", set.name()),
        parts,
    ))
}

/// Largest sunny deviation over seeded probe points for the given `ts`.
pub fn sunny_sweep(
    set: &ConvexSet,
    n: usize,
    p: Exponent,
    instances: usize,
    ts: &[f64],
    seed: u64,
) -> Result<f64> {
    set.check_dim(n)?;
    (0..instances as u64)
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = Point::from_raw(probe_point(set, n, &mut rng));
            verify_sunny(set, &x, p, ts)
        })
        .try_fold(0.0f64, |m, d| Ok(m.max(d?)))
}

fn fold_reports(name: String, parts: Vec<SweepReport>) -> SweepReport {
    let mut report = SweepReport::new(name);
    for part in parts {
        report.merge(part);
    }
    report
}

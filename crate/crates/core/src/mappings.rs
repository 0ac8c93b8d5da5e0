//! Nonlinear maps `B : C -> E`, sample-based falsifiers for the Lipschitz,
//! relaxed cocoercive and strongly monotone conditions, and the certificate
//! feasibility analysis.
//!
//! The checkers evaluate the conditions on seeded pairs of points. They can
//! only find violations; "no violation found" is not a proof.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex_sets::{self, ConvexSet};
use crate::error::{check_dim, Error, Result};
use crate::lp_space::{self, norm, Exponent, Point};
use crate::sampling::{self, SweepReport};

/// Pairs closer than this are skipped to avoid 0/0.
pub const DEGENERATE_PAIR_DISTANCE: f64 = 1e-12;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "matrix must have at least one row".into(),
            ));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "matrix must be square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Matrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = c;
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| lp_space::dot(self.row(i), x)).collect()
    }
}

type Evaluator = dyn Fn(&[f64]) -> std::result::Result<Vec<f64>, String> + Send + Sync;

/// A user-supplied map. The closure must be reentrant.
#[derive(Clone)]
pub struct BlackBox {
    dim: usize,
    f: Arc<Evaluator>,
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBox")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Mapping {
    /// `B(x) = M x + q`
    Affine {
        matrix: Matrix,
        shift: Point,
    },
    /// `B = I - T` for a declared `alpha`-contraction `T`.
    ResidualOfContraction {
        inner: Box<Mapping>,
        alpha: f64,
    },
    BlackBox(BlackBox),
}

impl Mapping {
    pub fn affine(matrix: Matrix, shift: Point) -> Result<Self> {
        check_dim(matrix.dim(), shift.dim())?;
        Ok(Mapping::Affine { matrix, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(Matrix::identity(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::linear(Matrix::scaled_identity(n, 0.0))
    }

    pub fn linear(matrix: Matrix) -> Self {
        let n = matrix.dim();
        Mapping::Affine {
            matrix,
            shift: Point::zeros(n),
        }
    }

    /// `B(x) = x - c`, whose only zero is `c`.
    pub fn shifted_identity(c: &Point) -> Self {
        Mapping::Affine {
            matrix: Matrix::identity(c.dim()),
            shift: Point::from_raw(c.iter().map(|v| -v).collect()),
        }
    }

    pub fn residual_of_contraction(inner: Mapping, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!(
                "contraction constant alpha must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(Mapping::ResidualOfContraction {
            inner: Box::new(inner),
            alpha,
        })
    }

    pub fn black_box<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> std::result::Result<Vec<f64>, String> + Send + Sync + 'static,
    {
        Mapping::BlackBox(BlackBox {
            dim,
            f: Arc::new(f),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Mapping::Affine { matrix, .. } => matrix.dim(),
            Mapping::ResidualOfContraction { inner, .. } => inner.dim(),
            Mapping::BlackBox(b) => b.dim,
        }
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.dim())?;
        let y = self.eval_raw(x)?;
        Ok(Point::from_raw(y))
    }

    /// Evaluates without the input shape check; output is validated.
    pub(crate) fn eval_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = match self {
            Mapping::Affine { matrix, shift } => lp_space::axpy(&matrix.apply(x), 1.0, shift),
            Mapping::ResidualOfContraction { inner, .. } => lp_space::sub(x, &inner.eval_raw(x)?),
            Mapping::BlackBox(b) => {
                let y = (b.f)(x).map_err(Error::Evaluation)?;
                if y.len() != b.dim {
                    return Err(Error::Evaluation(format!(
                        "black-box map returned {} coordinates, expected {}",
                        y.len(),
                        b.dim
                    )));
                }
                y
            }
        };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("non-finite map value at {x:?}")));
        }
        Ok(y)
    }
}

/// Claimed constants `(u, v, mu)` for a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub u: f64,
    pub v: f64,
    pub mu: f64,
}

impl Certificate {
    pub fn new(u: f64, v: f64, mu: f64) -> Result<Self> {
        for (name, val) in [("u", u), ("v", v), ("mu", mu)] {
            if !(val.is_finite() && val > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "certificate constant {name} must be positive and finite, got {val}"
                )));
            }
        }
        Ok(Certificate { u, v, mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `v > u mu^2 + 5 mu` and the constants are mutually consistent.
    BanachCertified,
    /// `v > u mu^2` only: the classical Hilbert step rule applies.
    HilbertOnly,
    Uncertified,
    /// `v > mu + u mu^2`: no map with two distinct points admits these constants.
    Inconsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::BanachCertified => "BanachCertified",
            Verdict::HilbertOnly => "HilbertOnly",
            Verdict::Uncertified => "Uncertified",
            Verdict::Inconsistent => "Inconsistent",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeasibilityVerdict {
    pub banach_condition_holds: bool,
    pub consistency_bound_ok: bool,
    pub verdict: Verdict,
}

/// Classifies a certificate.
///
/// The consistency bound comes from `<Bx - By, j(x - y)> <= mu ||x - y||^2`
/// combined with the cocoercive lower bound at any pair of distinct points:
/// `v <= mu + u mu^2`. Together with `v > u mu^2 + 5 mu` it would force
/// `5 mu < mu`, so a consistent certificate never meets the uniqueness
/// hypothesis.
pub fn certificate_feasibility(cert: &Certificate) -> FeasibilityVerdict {
    let Certificate { u, v, mu } = *cert;
    let u_mu2 = u * mu * mu;
    let banach_condition_holds = v > u_mu2 + 5.0 * mu;
    let consistency_bound_ok = v <= mu + u_mu2;
    // Rounding is monotone, so fl(u mu^2 + 5 mu) >= fl(u mu^2 + mu) and the
    // two conditions stay mutually exclusive in floating point.
    assert!(
        !(banach_condition_holds && consistency_bound_ok),
        "unreachable: certificate {cert:?} satisfies both v > u mu^2 + 5 mu and v <= mu + u mu^2"
    );
    let verdict = if !consistency_bound_ok {
        Verdict::Inconsistent
    } else if v > u_mu2 {
        Verdict::HilbertOnly
    } else {
        Verdict::Uncertified
    };
    FeasibilityVerdict {
        banach_condition_holds,
        consistency_bound_ok,
        verdict,
    }
}

/// Draws `count` seeded pairs from a bounded region. Pair `i` depends only
/// on `(seed, i)`.
pub fn sample_pairs(
    region: &ConvexSet,
    n: usize,
    p: Exponent,
    count: usize,
    seed: u64,
) -> Result<Vec<(Point, Point)>> {
    region.check_dim(n)?;
    if !region.is_bounded() {
        return Err(Error::InvalidInput(format!(
            "sampling needs a bounded region, got a {}; supply a bounding box",
            region.name()
        )));
    }
    Ok((0..count as u64)
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let mut draw = || match region {
                ConvexSet::Ball { radius } => {
                    let r = radius * sampling::unit(&mut rng).powf(1.0 / n as f64);
                    convex_sets::point_in_ball(&mut rng, n, r, p.value())
                }
                _ => {
                    let (lo, hi) = region.bounding_box(n).expect("bounded");
                    sampling::uniform_in_box(&mut rng, &lo, &hi)
                }
            };
            let x = draw();
            let y = draw();
            (Point::from_raw(x), Point::from_raw(y))
        })
        .collect())
}

/// Per-pair quantities shared by every checker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    /// `||x - y||_p`
    pub dist: f64,
    /// `||Bx - By||_p`
    pub image_dist: f64,
    /// `<Bx - By, j(x - y)>`
    pub pairing: f64,
}

impl PairTerms {
    pub fn compute(map: &Mapping, x: &Point, y: &Point, p: Exponent) -> Result<Self> {
        check_dim(map.dim(), x.dim())?;
        check_dim(map.dim(), y.dim())?;
        let d = lp_space::sub(x, y);
        let bd = lp_space::sub(&map.eval_raw(x)?, &map.eval_raw(y)?);
        Ok(PairTerms {
            dist: norm(&d, p.value()),
            image_dist: norm(&bd, p.value()),
            pairing: lp_space::dual_pairing(&d, &bd, p.value()),
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.dist < DEGENERATE_PAIR_DISTANCE
    }

    /// `<Bx - By, j(x - y)> + u ||Bx - By||^2 - v ||x - y||^2`
    pub fn cocoercive_slack(&self, u: f64, v: f64) -> f64 {
        self.pairing + u * self.image_dist * self.image_dist - v * self.dist * self.dist
    }

    /// `<Bx - By, j(x - y)> - v ||x - y||^2`
    pub fn monotone_slack(&self, v: f64) -> f64 {
        self.pairing - v * self.dist * self.dist
    }

    fn tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.dist * self.dist + self.image_dist * self.image_dist)
    }
}

/// Outcome of a sample-based condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    /// Minimum slack over the non-degenerate pairs; `+inf` if there were none.
    pub worst_slack: f64,
    /// Pair realising `worst_slack`.
    pub worst_pair: Option<(Point, Point)>,
    pub evaluated: usize,
    pub degenerate: usize,
    /// Smallest `||x - y||_p^2` among evaluated pairs.
    pub min_sq_distance: f64,
    /// Some pair had slack below `-1e-9 (1 + ||x-y||^2 + ||Bx-By||^2)`.
    pub violation_found: bool,
}

impl CheckReport {
    fn collect(pairs: &[(Point, Point)], terms: Vec<Option<(PairTerms, f64)>>) -> Self {
        let mut report = CheckReport {
            worst_slack: f64::INFINITY,
            worst_pair: None,
            evaluated: 0,
            degenerate: 0,
            min_sq_distance: f64::INFINITY,
            violation_found: false,
        };
        for (pair, t) in pairs.iter().zip(terms) {
            let Some((t, slack)) = t else {
                report.degenerate += 1;
                continue;
            };
            report.evaluated += 1;
            report.min_sq_distance = report.min_sq_distance.min(t.dist * t.dist);
            if slack < report.worst_slack {
                report.worst_slack = slack;
                report.worst_pair = Some(pair.clone());
            }
            if slack < -t.tolerance() {
                report.violation_found = true;
            }
        }
        report
    }
}

fn pair_terms(
    map: &Mapping,
    pairs: &[(Point, Point)],
    p: Exponent,
) -> Result<Vec<Option<PairTerms>>> {
    pairs
        .par_iter()
        .map(|(x, y)| {
            let t = PairTerms::compute(map, x, y, p)?;
            Ok((!t.is_degenerate()).then_some(t))
        })
        .collect()
}

/// Lower estimate of the Lipschitz constant from sampled ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub mu_hat: f64,
    pub evaluated: usize,
    pub degenerate: usize,
}

pub fn estimate_lipschitz(
    map: &Mapping,
    region: &ConvexSet,
    p: Exponent,
    sample_pairs_count: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    let pairs = sample_pairs(region, map.dim(), p, sample_pairs_count, seed)?;
    let terms = pair_terms(map, &pairs, p)?;
    let evaluated = terms.iter().flatten().count();
    if evaluated == 0 {
        return Err(Error::Estimation(format!(
            "all {} sampled pairs were degenerate",
            terms.len()
        )));
    }
    let mu_hat = terms
        .iter()
        .flatten()
        .map(|t| t.image_dist / t.dist)
        .fold(0.0, f64::max);
    Ok(LipschitzEstimate {
        mu_hat,
        evaluated,
        degenerate: terms.len() - evaluated,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn check_relaxed_cocoercive(
    map: &Mapping,
    region: &ConvexSet,
    u: f64,
    v: f64,
    p: Exponent,
    sample_pairs_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::InvalidInput(format!(
            "u and v must be positive, got u = {u}, v = {v}"
        )));
    }
    let pairs = sample_pairs(region, map.dim(), p, sample_pairs_count, seed)?;
    let terms = pair_terms(map, &pairs, p)?
        .into_iter()
        .map(|t| t.map(|t| (t, t.cocoercive_slack(u, v))))
        .collect();
    Ok(CheckReport::collect(&pairs, terms))
}

pub fn check_strongly_monotone(
    map: &Mapping,
    region: &ConvexSet,
    v: f64,
    p: Exponent,
    sample_pairs_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    if v.is_nan() || v <= 0.0 {
        return Err(Error::InvalidInput(format!("v must be positive, got {v}")));
    }
    let pairs = sample_pairs(region, map.dim(), p, sample_pairs_count, seed)?;
    let terms = pair_terms(map, &pairs, p)?
        .into_iter()
        .map(|t| t.map(|t| (t, t.monotone_slack(v))))
        .collect();
    Ok(CheckReport::collect(&pairs, terms))
}

/// Scans `count` seeded certificates and counts those that are both
/// Banach-certified and consistent.
pub fn certificate_scan(count: usize, seed: u64) -> SweepReport {
    let mut report = SweepReport::new("certificate scan");
    for i in 0..count as u64 {
        let mut rng = sampling::rng_for(seed, i);
        let draw = |rng: &mut _| 10f64.powf(-3.0 + 6.0 * sampling::unit(rng));
        let cert = Certificate {
            u: draw(&mut rng),
            v: draw(&mut rng),
            mu: draw(&mut rng),
        };
        let f = certificate_feasibility(&cert);
        let both = f.verdict == Verdict::BanachCertified && f.consistency_bound_ok;
        report.record(seed, i, if both { -1.0 } else { 0.0 }, 0.0);
    }
    report
}

//! Step-size rules and Picard iteration for `VI(C, B)`.
//!
//! A point `u` solves the variational inequality iff it is a fixed point of
//! `G = Q_C o (I - lambda B)` for some (every) `lambda > 0`. When `G` is a
//! contraction, Picard iteration `x_{k+1} = G(x_k)` converges geometrically
//! to the unique solution.

use serde::Serialize;

use crate::convex_sets::{self, ConvexSet};
use crate::error::{check_dim, Error, Result};
use crate::lp_space::{self, norm, Point, SpaceSpec};
use crate::mappings::{certificate_feasibility, Certificate, FeasibilityVerdict, Mapping, Verdict};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// A validated `(E, C, B)` triple with an optional certificate for `B`.
#[derive(Debug, Clone)]
pub struct Problem {
    space: SpaceSpec,
    set: ConvexSet,
    map: Mapping,
    cert: Option<Certificate>,
}

impl Problem {
    /// Fails if the retraction onto `set` is not available in this space.
    pub fn new(
        space: SpaceSpec,
        set: ConvexSet,
        map: Mapping,
        cert: Option<Certificate>,
    ) -> Result<Self> {
        set.check_dim(space.n)?;
        check_dim(space.n, map.dim())?;
        convex_sets::ensure_supported(&set, space.p)?;
        Ok(Problem {
            space,
            set,
            map,
            cert,
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn map(&self) -> &Mapping {
        &self.map
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.cert.as_ref()
    }

    /// `G(x) = Q_C(x - lambda B x)`
    fn step(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let bx = self.map.eval_raw(x)?;
        Ok(convex_sets::retract_raw(
            &self.set,
            &lp_space::axpy(x, -lambda, &bx),
        ))
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Union of disjoint open intervals in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRange(pub Vec<Interval>);

impl StepRange {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }
}

/// `(v - u mu^2 - 5 mu) / mu^2`, the upper end of the uniqueness step range.
pub fn banach_step_bound(cert: &Certificate) -> f64 {
    let Certificate { u, v, mu } = *cert;
    (v - u * mu * mu - 5.0 * mu) / (mu * mu)
}

/// `{ lambda : 0 < lambda < b, lambda mu^2 (b - lambda) < 1 }` with
/// `b = (v - u mu^2 - 5 mu) / mu^2`.
///
/// The second constraint is `mu^2 lambda^2 - mu^2 b lambda + 1 > 0`; when its
/// roots are real they cut a middle band out of `(0, b)`.
pub fn banach_step_range(cert: &Certificate) -> StepRange {
    let b = banach_step_bound(cert);
    if b.is_nan() || b <= 0.0 {
        return StepRange(Vec::new());
    }
    let mu2 = cert.mu * cert.mu;
    let disc = b * b - 4.0 / mu2;
    if disc < 0.0 {
        return StepRange(vec![Interval { lo: 0.0, hi: b }]);
    }
    // Larger root directly, smaller one from the product of roots 1 / mu^2.
    let hi_root = 0.5 * (b + disc.sqrt());
    let lo_root = 1.0 / (mu2 * hi_root);
    let mut parts = vec![Interval {
        lo: 0.0,
        hi: lo_root,
    }];
    if hi_root < b {
        parts.push(Interval { lo: hi_root, hi: b });
    }
    StepRange(parts)
}

/// `(0, 2 (v - u mu^2) / mu^2)` when `v > u mu^2`.
pub fn hilbert_step_range(cert: &Certificate) -> Option<Interval> {
    let Certificate { u, v, mu } = *cert;
    let gap = v - u * mu * mu;
    (gap > 0.0).then(|| Interval {
        lo: 0.0,
        hi: 2.0 * gap / (mu * mu),
    })
}

/// `1 - lambda mu^2 ((v - u mu^2 - 5 mu) / mu^2 - lambda)`. Not clipped:
/// values outside `[0, 1)` signal an inadmissible step.
pub fn contraction_factor_sq(cert: &Certificate, lambda: f64) -> f64 {
    let mu2 = cert.mu * cert.mu;
    1.0 - lambda * mu2 * (banach_step_bound(cert) - lambda)
}

/// Contraction factor `q` of `P_C (I - lambda B)` at `p = 2` for a relaxed
/// cocoercive, Lipschitz `B`: `q^2 = 1 - 2 lambda (v - u mu^2) + lambda^2 mu^2`,
/// clipped to `[0, 1]`.
pub fn hilbert_contraction_factor(cert: &Certificate, lambda: f64) -> f64 {
    let Certificate { u, v, mu } = *cert;
    let q2 = 1.0 - 2.0 * lambda * (v - u * mu * mu) + lambda * lambda * mu * mu;
    q2.clamp(0.0, 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Certification {
    /// Step inside the uniqueness range of a consistent certificate.
    BanachCertified,
    /// `p = 2` and the step is inside the classical Hilbert range.
    HilbertCertified,
    Uncertified,
}

impl std::fmt::Display for Certification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Certification::BanachCertified => "BanachCertified",
            Certification::HilbertCertified => "HilbertCertified",
            Certification::Uncertified => "Uncertified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSize {
    pub lambda: f64,
    pub certification: Certification,
    pub feasibility: Option<FeasibilityVerdict>,
}

/// Picks `lambda`.
///
/// With an explicit step the value is used as given and labelled with the
/// strongest rule it satisfies. Without one, the certificate decides: the
/// lowest admissible uniqueness interval when the certificate is
/// Banach-certified, the Hilbert midpoint `(v - u mu^2) / mu^2` at `p = 2`
/// for a consistent certificate with `v > u mu^2`, otherwise an error.
pub fn select_lambda(problem: &Problem, explicit: Option<f64>) -> Result<StepSize> {
    let feasibility = problem.cert.as_ref().map(certificate_feasibility);
    let hilbert = problem.space.p.is_hilbert();
    if let Some(lambda) = explicit {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Configuration(format!(
                "step size lambda must be positive, got {lambda}"
            )));
        }
        let certification = match (problem.cert.as_ref(), feasibility) {
            (Some(c), Some(f))
                if f.verdict == Verdict::BanachCertified
                    && banach_step_range(c).contains(lambda) =>
            {
                Certification::BanachCertified
            }
            (Some(c), Some(f))
                if hilbert
                    && f.verdict == Verdict::HilbertOnly
                    && hilbert_step_range(c).is_some_and(|i| i.contains(lambda)) =>
            {
                Certification::HilbertCertified
            }
            _ => Certification::Uncertified,
        };
        return Ok(StepSize {
            lambda,
            certification,
            feasibility,
        });
    }

    let (Some(cert), Some(f)) = (problem.cert.as_ref(), feasibility) else {
        return Err(Error::Configuration(
            "no certificate and no explicit step size: pass lambda explicitly".into(),
        ));
    };
    match f.verdict {
        Verdict::BanachCertified => {
            let first = banach_step_range(cert).0[0];
            Ok(StepSize {
                lambda: first.midpoint(),
                certification: Certification::BanachCertified,
                feasibility,
            })
        }
        Verdict::HilbertOnly if hilbert => {
            let range = hilbert_step_range(cert).expect("HilbertOnly implies v > u mu^2");
            Ok(StepSize {
                lambda: range.midpoint(),
                certification: Certification::HilbertCertified,
                feasibility,
            })
        }
        Verdict::Inconsistent => Err(Error::Configuration(format!(
            "certificate (u = {}, v = {}, mu = {}) is Inconsistent (v > mu + u mu^2); refusing automatic step selection, pass lambda explicitly",
            cert.u, cert.v, cert.mu
        ))),
        verdict => Err(Error::Configuration(format!(
            "certificate verdict {verdict} admits no step rule at p = {}; pass lambda explicitly",
            problem.space.p
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// One Picard step: `step_norm = ||x_k - x_{k-1}||_p` and
/// `residual = ||x_k - G(x_k)||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub step_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub final_point: Point,
    pub iterations: usize,
    pub final_residual: f64,
    pub lambda: f64,
    /// Squared uniqueness contraction factor, when a certificate was given.
    pub contraction_factor_sq: Option<f64>,
    pub certification: Certification,
    pub status: SolveStatus,
    pub trace: Vec<TraceEntry>,
}

/// Iterates `x_{k+1} = Q_C(x_k - lambda B x_k)` from `Q_C x0` until
/// `||x_{k+1} - x_k||_p <= tol (1 + ||x_k||_p)` or `max_iter` steps.
pub fn picard_solve(
    problem: &Problem,
    step: StepSize,
    x0: &Point,
    opts: SolveOptions,
) -> Result<SolveReport> {
    check_dim(problem.space.n, x0.dim())?;
    let lambda = step.lambda;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Configuration(format!(
            "step size lambda must be positive, got {lambda}"
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::Configuration(
            "tol must be positive and max_iter at least 1".into(),
        ));
    }
    let p = problem.space.p.value();
    let mut trace = Vec::new();
    let diverged = |iteration: usize, trace: &Vec<TraceEntry>| Error::Divergence {
        iteration,
        trace: trace.clone(),
    };

    let mut x = convex_sets::retract_raw(&problem.set, x0);
    let mut gx = match problem.step(&x, lambda) {
        Ok(g) => g,
        Err(Error::Evaluation(_)) => return Err(diverged(0, &trace)),
        Err(e) => return Err(e),
    };
    let mut status = SolveStatus::IterationLimit;
    for k in 1..=opts.max_iter {
        let step_norm = norm(&lp_space::sub(&gx, &x), p);
        let x_norm = norm(&x, p);
        let next = gx;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(diverged(k, &trace));
        }
        let g_next = match problem.step(&next, lambda) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => g,
            Ok(_) | Err(Error::Evaluation(_)) => return Err(diverged(k, &trace)),
            Err(e) => return Err(e),
        };
        let residual = norm(&lp_space::sub(&next, &g_next), p);
        trace.push(TraceEntry {
            iter: k,
            step_norm,
            residual,
        });
        x = next;
        gx = g_next;
        if step_norm <= opts.tol * (1.0 + x_norm) {
            status = SolveStatus::Converged;
            break;
        }
    }
    let last = trace.last().expect("max_iter >= 1");
    Ok(SolveReport {
        final_residual: last.residual,
        iterations: last.iter,
        final_point: Point::from_raw(x),
        lambda,
        contraction_factor_sq: problem
            .cert
            .as_ref()
            .map(|c| contraction_factor_sq(c, lambda)),
        certification: step.certification,
        status,
        trace,
    })
}

/// `||x - Q_C(x - lambda B x)||_p`; zero exactly at solutions of `VI(C, B)`.
pub fn vi_residual(problem: &Problem, x: &Point, lambda: f64) -> Result<f64> {
    check_dim(problem.space.n, x.dim())?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Configuration(format!(
            "step size lambda must be positive, got {lambda}"
        )));
    }
    let gx = problem.step(x, lambda)?;
    Ok(norm(&lp_space::sub(x, &gx), problem.space.p.value()))
}

/// Ratios `s_{k+1} / s_k` of consecutive step norms, skipping steps at the
/// rounding floor `floor`.
pub fn step_ratios(trace: &[TraceEntry], floor: f64) -> Vec<f64> {
    trace
        .windows(2)
        .filter(|w| w[0].step_norm > floor && w[1].step_norm > floor)
        .map(|w| w[1].step_norm / w[0].step_norm)
        .collect()
}

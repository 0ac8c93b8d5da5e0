//! Independent checks that do not go through the solver: brute-force
//! variational inequality solving on a grid, a sweep of the pairing
//! inequality `<x - y, j(x - y)> <= <x - y, Jx - Jy> + 4 ||x|| ||y||`, and
//! exact evaluation of the classical step-rule factor at the parameters
//! where it turns negative.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex_sets::ConvexSet;
use crate::error::{check_dim, Error, Result};
use crate::lp_space::{self, dot, norm, Exponent, Point};
use crate::sampling::{self, SweepReport};
use crate::vi_solver::Problem;

pub const MAX_GRID_POINTS: usize = 1_000_000;
pub const MAX_ORACLE_DIM: usize = 3;

/// Points per axis of a uniform grid over the bounding box of `C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidInput(
                "grid needs at least two points per axis".into(),
            ));
        }
        let total = counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&t| t <= MAX_GRID_POINTS);
        if total.is_none() {
            return Err(Error::Resource(format!(
                "grid {counts:?} exceeds {MAX_GRID_POINTS} points"
            )));
        }
        Ok(GridSpec { counts })
    }

    pub fn uniform(n: usize, per_axis: usize) -> Result<Self> {
        Self::new(vec![per_axis; n])
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }
}

/// How much violation of `<Bu, j(v - u)> >= 0` a grid point may show.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AcceptanceRule {
    /// Accept the grid points where the gap `g(u) = -min_v <Bu, j(v - u)>`
    /// attains its minimum over the grid, up to rounding.
    MinimalGap,
    /// Accept when `g(u) <= c h (1 + ||Bu||)` with `h` the largest spacing.
    Spacing { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedPoint {
    pub point: Point,
    /// `min_v <Bu, j(v - u)>` over grid points `v` in `C`.
    pub worst_pairing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub accepted: Vec<AcceptedPoint>,
    pub spacing: Vec<f64>,
    pub points_in_set: usize,
}

impl OracleResult {
    pub fn cell(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn all_accepted(&self) -> bool {
        self.accepted.len() == self.points_in_set
    }

    /// l_inf distance from `x` to the nearest accepted point.
    pub fn nearest_distance_inf(&self, x: &Point) -> f64 {
        self.accepted
            .iter()
            .map(|a| a.point.distance_inf(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn farthest_distance_inf(&self, x: &Point) -> f64 {
        self.accepted
            .iter()
            .map(|a| a.point.distance_inf(x))
            .fold(0.0, f64::max)
    }

    pub fn diameter_inf(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.accepted.iter().enumerate() {
            for b in &self.accepted[i + 1..] {
                d = d.max(a.point.distance_inf(&b.point));
            }
        }
        d
    }

    pub fn centroid(&self) -> Option<Point> {
        let first = self.accepted.first()?;
        let n = first.point.dim();
        let mut c = vec![0.0; n];
        for a in &self.accepted {
            for (ci, xi) in c.iter_mut().zip(a.point.iter()) {
                *ci += xi;
            }
        }
        let k = self.accepted.len() as f64;
        Some(Point::from_raw(c.into_iter().map(|v| v / k).collect()))
    }
}

/// Solver/oracle comparison, distances measured in grid cells (l_inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub nearest_cells: f64,
    pub farthest_cells: f64,
    pub diameter_cells: f64,
}

impl Agreement {
    /// Solver point within one cell of an accepted point, and the accepted
    /// set within two cells of it and of itself.
    pub fn passed(&self) -> bool {
        const SLACK: f64 = 1e-9;
        self.nearest_cells <= 1.0 + SLACK
            && self.farthest_cells <= 2.0 + SLACK
            && self.diameter_cells <= 2.0 + SLACK
    }
}

pub fn agreement(result: &OracleResult, solution: &Point) -> Agreement {
    let h = result.cell();
    Agreement {
        nearest_cells: result.nearest_distance_inf(solution) / h,
        farthest_cells: result.farthest_distance_inf(solution) / h,
        diameter_cells: result.diameter_inf() / h,
    }
}

struct Grid {
    counts: Vec<usize>,
    lo: Vec<f64>,
    spacing: Vec<f64>,
    members: Vec<Vec<f64>>,
}

impl Grid {
    fn build(set: &ConvexSet, n: usize, p: Exponent, spec: &GridSpec) -> Result<Self> {
        let (lo, hi) = set.bounding_box(n).ok_or_else(|| {
            Error::UnsupportedOracle(format!(
                "the grid oracle needs a bounded set, got a {}",
                set.name()
            ))
        })?;
        let counts = spec.counts.clone();
        let spacing: Vec<f64> = (0..n)
            .map(|i| (hi[i] - lo[i]) / (counts[i] - 1) as f64)
            .collect();
        let mut members = Vec::new();
        for flat in 0..spec.total() {
            let x = Self::coords_of(&counts, &lo, &spacing, &hi, flat);
            if crate::convex_sets::contains(set, &Point::from_raw(x.clone()), p, 1e-12)? {
                members.push(x);
            }
        }
        Ok(Grid {
            counts,
            lo,
            spacing,
            members,
        })
    }

    fn coords_of(
        counts: &[usize],
        lo: &[f64],
        spacing: &[f64],
        hi: &[f64],
        mut flat: usize,
    ) -> Vec<f64> {
        let mut x = Vec::with_capacity(counts.len());
        for i in 0..counts.len() {
            let k = flat % counts[i];
            flat /= counts[i];
            // Pin the last node to the upper bound exactly.
            x.push(if k == counts[i] - 1 {
                hi[i]
            } else {
                lo[i] + k as f64 * spacing[i]
            });
        }
        x
    }
}

/// Brute-force `VI(C, B)` on a grid over a bounded `C` in dimension <= 3.
///
/// For every grid point `u` in `C`, evaluates `min_v <Bu, j(v - u)>` over all
/// grid points `v` in `C` and keeps the points the rule accepts.
pub fn grid_vi_solve(
    problem: &Problem,
    grid: &GridSpec,
    rule: AcceptanceRule,
) -> Result<OracleResult> {
    let space = problem.space();
    let n = space.n;
    if n > MAX_ORACLE_DIM {
        return Err(Error::UnsupportedOracle(format!(
            "the grid oracle supports dimension <= {MAX_ORACLE_DIM}, got {n}"
        )));
    }
    check_dim(n, grid.counts.len())?;
    let p = space.p;
    let g = Grid::build(problem.set(), n, p, grid)?;
    if g.members.is_empty() {
        return Err(Error::UnsupportedOracle(
            "no grid point lies in the set".into(),
        ));
    }
    let map = problem.map();

    let evaluated: Vec<(Vec<f64>, f64)> = g
        .members
        .par_iter()
        .map(|u| {
            let bu = map.eval_raw(u)?;
            let worst = g
                .members
                .iter()
                .map(|v| {
                    let dir = lp_space::sub(v, u);
                    dot(&bu, &lp_space::duality_coords(&dir, p.value()))
                })
                .fold(0.0f64, f64::min);
            Ok((bu, worst))
        })
        .collect::<Result<_>>()?;

    let gap: Vec<f64> = evaluated.iter().map(|(_, w)| -w).collect();
    let h = g.spacing.iter().copied().fold(0.0, f64::max);
    let min_gap = gap.iter().copied().fold(f64::INFINITY, f64::min);
    let reach =
        g.lo.iter()
            .zip(&g.spacing)
            .zip(&g.counts)
            .map(|((l, s), c)| l.abs().max((l + s * (*c - 1) as f64).abs()))
            .fold(0.0, f64::max);

    let accepted = (0..g.members.len())
        .filter(|&m| {
            let (bu, _) = &evaluated[m];
            let bu_norm = norm(bu, p.value());
            let floor = 1e-9 * (1.0 + bu_norm * reach);
            let budget = match rule {
                AcceptanceRule::Spacing { c } => c * h * (1.0 + bu_norm),
                AcceptanceRule::MinimalGap => min_gap,
            };
            gap[m] <= budget + floor
        })
        .map(|m| AcceptedPoint {
            point: Point::from_raw(g.members[m].clone()),
            worst_pairing: evaluated[m].1,
        })
        .collect();

    Ok(OracleResult {
        accepted,
        spacing: g.spacing,
        points_in_set: g.members.len(),
    })
}

/// `<Jx - Jy, x - y> + 4 ||x|| ||y|| - <J(x - y), x - y>`, nonnegative for
/// every `x, y`.
pub fn check_pairing_inequality(x: &Point, y: &Point, p: Exponent) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(pairing_slack(x, y, p.value()))
}

fn pairing_slack(x: &[f64], y: &[f64], p: f64) -> f64 {
    let d = lp_space::sub(x, y);
    let jx = lp_space::duality_coords(x, p);
    let jy = lp_space::duality_coords(y, p);
    dot(&lp_space::sub(&jx, &jy), &d) + 4.0 * norm(x, p) * norm(y, p)
        - lp_space::dual_pairing(&d, &d, p)
}

/// Pairing-inequality slack over `count` seeded pairs, tolerance
/// `1e-9 (1 + ||x|| ||y||)`.
pub fn pairing_inequality_sweep(n: usize, p: Exponent, count: usize, seed: u64) -> SweepReport {
    let parts: Vec<SweepReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i);
            let x = sampling::spread_vector(&mut rng, n);
            let y = sampling::spread_vector(&mut rng, n);
            let slack = pairing_slack(&x, &y, p.value());
            let mut r = SweepReport::new("");
            r.record(
                seed,
                i,
                slack,
                1e-9 * (1.0 + norm(&x, p.value()) * norm(&y, p.value())),
            );
            r
        })
        .collect();
    let mut report = SweepReport::new(format!("pairing inequality n={n} p={p}"));
    for part in parts {
        report.merge(part);
    }
    report
}

/// Squared contraction factor `1 - s mu^2 (2 (r - gamma mu^2) / mu^2 - s)`
/// of the classical projection method, in floating point. Negative values
/// mean the constants cannot belong to any map.
pub fn classical_factor(r: f64, gamma: f64, s: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    1.0 - s * mu2 * (2.0 * (r - gamma * mu2) / mu2 - s)
}

/// The same factor in exact rational arithmetic.
pub fn classical_factor_exact(
    r: Rational64,
    gamma: Rational64,
    s: Rational64,
    mu: Rational64,
) -> Rational64 {
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    let mu2 = mu * mu;
    one - s * mu2 * (two * (r - gamma * mu2) / mu2 - s)
}

/// Factor at `r = gamma = s = 1`, `mu = 1/10`: exactly `-97/100`, rounded
/// once to the nearest double.
pub fn classical_factor_example() -> f64 {
    let one = Rational64::from_integer(1);
    classical_factor_exact(one, one, one, Rational64::new(1, 10))
        .to_f64()
        .expect("small rational converts to f64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_space::SpaceSpec;
    use crate::mappings::{Mapping, Matrix};
    use proptest::prelude::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn p(v: f64) -> Exponent {
        Exponent::new(v).unwrap()
    }

    fn box_problem(lo: f64, hi: f64, map: Mapping, pv: f64) -> Problem {
        let set = ConvexSet::boxed(pt(&[lo, lo]), pt(&[hi, hi])).unwrap();
        Problem::new(SpaceSpec::new(2, pv).unwrap(), set, map, None).unwrap()
    }

    #[test]
    fn grid_spec_limits() {
        assert!(GridSpec::new(vec![1, 5]).is_err());
        assert!(matches!(
            GridSpec::new(vec![1001, 1001]),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            GridSpec::new(vec![usize::MAX, 3]),
            Err(Error::Resource(_))
        ));
        assert_eq!(GridSpec::uniform(2, 41).unwrap().total(), 1681);
    }

    #[test]
    fn identity_on_shifted_box() {
        let pr = box_problem(1.0, 2.0, Mapping::identity(2), 2.0);
        let r = grid_vi_solve(
            &pr,
            &GridSpec::uniform(2, 41).unwrap(),
            AcceptanceRule::MinimalGap,
        )
        .unwrap();
        let corner = pt(&[1.0, 1.0]);
        assert!(r.accepted.iter().any(|a| a.point == corner));
        assert!(r.farthest_distance_inf(&corner) <= r.cell() + 1e-12);
        assert_eq!(r.points_in_set, 1681);
    }

    #[test]
    fn zero_map_accepts_everything() {
        let pr = box_problem(0.0, 1.0, Mapping::zero(2), 3.0);
        let r = grid_vi_solve(
            &pr,
            &GridSpec::uniform(2, 11).unwrap(),
            AcceptanceRule::MinimalGap,
        )
        .unwrap();
        assert!(r.all_accepted());
        assert!(r.accepted.iter().all(|a| a.worst_pairing == 0.0));
    }

    #[test]
    fn interior_zero_is_localised() {
        for pv in [1.5, 2.0, 3.0] {
            let c = pt(&[1.5, 1.5]);
            let pr = box_problem(1.0, 2.0, Mapping::shifted_identity(&c), pv);
            let r = grid_vi_solve(
                &pr,
                &GridSpec::uniform(2, 41).unwrap(),
                AcceptanceRule::MinimalGap,
            )
            .unwrap();
            assert!(r.nearest_distance_inf(&c) <= 1e-12);
            assert!(r.farthest_distance_inf(&c) <= r.cell() + 1e-12, "p = {pv}");
        }
    }

    #[test]
    fn off_grid_zero_is_bracketed() {
        let c = pt(&[1.513, 1.2871]);
        let pr = box_problem(1.0, 2.0, Mapping::shifted_identity(&c), 2.0);
        let r = grid_vi_solve(
            &pr,
            &GridSpec::uniform(2, 41).unwrap(),
            AcceptanceRule::MinimalGap,
        )
        .unwrap();
        assert!(!r.accepted.is_empty());
        let a = agreement(&r, &c);
        assert!(a.passed(), "{a:?}");
    }

    #[test]
    fn spacing_rule_is_looser() {
        let pr = box_problem(1.0, 2.0, Mapping::identity(2), 2.0);
        let grid = GridSpec::uniform(2, 41).unwrap();
        let loose = grid_vi_solve(&pr, &grid, AcceptanceRule::Spacing { c: 2.0 }).unwrap();
        let tight = grid_vi_solve(&pr, &grid, AcceptanceRule::MinimalGap).unwrap();
        assert!(loose.accepted.len() > tight.accepted.len());
        // With c = 2 points four cells out along an edge still pass.
        assert!(loose.diameter_inf() / loose.cell() >= 4.0 - 1e-9);
    }

    #[test]
    fn ball_grid_and_unsupported_inputs() {
        let set = ConvexSet::ball(1.0).unwrap();
        let c = pt(&[0.2, -0.3]);
        let pr = Problem::new(
            SpaceSpec::new(2, 2.0).unwrap(),
            set,
            Mapping::shifted_identity(&c),
            None,
        )
        .unwrap();
        let r = grid_vi_solve(
            &pr,
            &GridSpec::uniform(2, 41).unwrap(),
            AcceptanceRule::MinimalGap,
        )
        .unwrap();
        assert!(r.points_in_set < 1681);
        assert!(agreement(&r, &c).passed());

        let whole = Problem::new(
            SpaceSpec::new(2, 2.0).unwrap(),
            ConvexSet::WholeSpace,
            Mapping::identity(2),
            None,
        )
        .unwrap();
        assert!(matches!(
            grid_vi_solve(
                &whole,
                &GridSpec::uniform(2, 5).unwrap(),
                AcceptanceRule::MinimalGap
            ),
            Err(Error::UnsupportedOracle(_))
        ));
        let set4 = ConvexSet::boxed(pt(&[0.0; 4]), pt(&[1.0; 4])).unwrap();
        let pr4 = Problem::new(
            SpaceSpec::new(4, 2.0).unwrap(),
            set4,
            Mapping::identity(4),
            None,
        )
        .unwrap();
        assert!(matches!(
            grid_vi_solve(
                &pr4,
                &GridSpec::uniform(4, 3).unwrap(),
                AcceptanceRule::MinimalGap
            ),
            Err(Error::UnsupportedOracle(_))
        ));
    }

    #[test]
    fn three_dimensional_corner() {
        let set = ConvexSet::boxed(pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 1.0, 1.0])).unwrap();
        let m = Mapping::affine(Matrix::identity(3), pt(&[0.5, 0.5, 0.5])).unwrap();
        let pr = Problem::new(SpaceSpec::new(3, 2.0).unwrap(), set, m, None).unwrap();
        let r = grid_vi_solve(
            &pr,
            &GridSpec::uniform(3, 9).unwrap(),
            AcceptanceRule::MinimalGap,
        )
        .unwrap();
        assert!(agreement(&r, &pt(&[0.0, 0.0, 0.0])).passed());
    }

    #[test]
    fn pairing_inequality_examples() {
        let x = pt(&[1.0, -2.0, 0.5]);
        for pv in [1.5, 2.0, 4.0] {
            let nx = x.norm(p(pv));
            let s = check_pairing_inequality(&x, &x, p(pv)).unwrap();
            assert!((s - 4.0 * nx * nx).abs() <= 1e-12 * (1.0 + nx * nx));
        }
        let y = pt(&[0.3, 0.3, -7.0]);
        let s = check_pairing_inequality(&x, &y, p(2.0)).unwrap();
        let expect = 4.0 * x.norm(p(2.0)) * y.norm(p(2.0));
        assert!((s - expect).abs() <= 1e-12 * expect);
        assert!(check_pairing_inequality(&x, &pt(&[1.0]), p(2.0)).is_err());
    }

    #[test]
    fn pairing_sweep_small() {
        for pv in [1.5, 3.0, 4.0] {
            let r = pairing_inequality_sweep(5, p(pv), 2000, 21);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn classical_factor_values() {
        assert_eq!(classical_factor_example(), -0.97);
        assert_eq!(
            classical_factor_exact(1.into(), 1.into(), 1.into(), Rational64::new(1, 10)),
            Rational64::new(-97, 100)
        );
        assert!((classical_factor(1.0, 1.0, 1e-300, 0.1) - 1.0).abs() <= 1e-12);
        for s in [0.5, 1.0, 3.0] {
            assert_eq!(classical_factor(1.0, 1.0, s, 1.0), 1.0 + s * s);
        }
        assert!((classical_factor(1.0, 1.0, 1.0, 0.1) + 0.97).abs() <= 1e-15);
    }

    proptest! {
        #[test]
        fn pairing_inequality_holds(
            x in prop::collection::vec(-100.0..100.0f64, 1..8),
            seed in 0u64..u64::MAX,
            pv in 1.1..8.0f64,
        ) {
            let n = x.len();
            let mut rng = sampling::rng_for(seed, 0);
            let y = sampling::spread_vector(&mut rng, n);
            let x = Point::new(x).unwrap();
            let y = Point::new(y).unwrap();
            let s = check_pairing_inequality(&x, &y, p(pv)).unwrap();
            prop_assert!(s >= -1e-9 * (1.0 + x.norm(p(pv)) * y.norm(p(pv))));
        }
    }
}

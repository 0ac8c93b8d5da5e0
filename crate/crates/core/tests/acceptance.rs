//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vi_core::convex_sets::{self, ConvexSet};
use vi_core::lp_space::{self, Exponent, Point, SpaceSpec};
use vi_core::mappings::{self, certificate_feasibility, Certificate, Mapping, Matrix, Verdict};
use vi_core::oracle::{self, AcceptanceRule, GridSpec};
use vi_core::vi_solver::{self, Certification, Problem, SolveOptions, SolveStatus};

const SEED: u64 = 20_240_611;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn p(v: f64) -> Exponent {
    Exponent::new(v).unwrap()
}

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

fn within(elapsed: Duration, budget_secs: f64) -> bool {
    elapsed.as_secs_f64() < budget_secs
}

/// Criterion 1: Duality identities over 1000 vectors per (p, n), under one second.
fn duality_identities() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut failures = Vec::new();
    for pv in [1.5, 2.0, 3.0, 4.0] {
        for n in [2, 10, 50] {
            let r = lp_space::duality_identity_sweep(n, p(pv), 1000, SEED);
            checked += r.checked;
            if !r.passed() {
                failures.push(format!("{} ({} violations)", r.name, r.violations.len()));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 1.0),
        format!("{checked} identity checks, failures {failures:?}, {elapsed:.2?} (< 1 s)"),
    )
}

/// Criterion 2: J is the identity at p = 2 within 1e-12 componentwise.
fn hilbert_degeneration() -> Outcome {
    let gap = [2, 10, 50]
        .iter()
        .map(|&n| lp_space::hilbert_identity_gap(n, 1000, SEED))
        .fold(0.0, f64::max);
    outcome(
        gap <= 1e-12,
        format!("max |Jx - x|_inf = {gap:e} (<= 1e-12)"),
    )
}

/// Criterion 3: Box retraction: sunny exactly, nonexpansive, characterization.
fn box_retraction_suite() -> Outcome {
    let start = Instant::now();
    let n = 3;
    let set = ConvexSet::boxed(pt(&[-1.0, 0.0, 0.5]), pt(&[1.0, 0.25, 2.0])).unwrap();
    let ts = [0.0, 0.5, 1.0, 2.0];
    let mut notes = Vec::new();
    let mut ok = true;
    for pv in [1.5, 2.0, 3.0] {
        let sunny = convex_sets::sunny_sweep(&set, n, p(pv), 1000, &ts, SEED).unwrap();
        let nonexp = convex_sets::nonexpansive_sweep(&set, n, p(pv), 10_000, SEED).unwrap();
        let charac = convex_sets::characterization_sweep(&set, n, p(pv), 200, 500, SEED).unwrap();
        ok &= sunny == 0.0 && nonexp.passed() && charac.passed();
        notes.push(format!(
            "p={pv}: sunny {sunny:e}, nonexp worst margin {:.1e}, charac worst margin {:.1e}",
            nonexp.worst_margin, charac.worst_margin
        ));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 5.0),
        format!("{}; {elapsed:.2?} (< 5 s)", notes.join("; ")),
    )
}

/// Criterion 4: Pairing inequality over 10^4 pairs per (p, n), under ten seconds.
fn pairing_inequality() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for pv in [1.5, 3.0, 4.0] {
        for n in [2, 5, 20] {
            let r = oracle::pairing_inequality_sweep(n, p(pv), 10_000, SEED);
            checked += r.checked;
            worst = worst.min(r.worst_margin);
            violations += r.violations.len();
            for v in &r.violations {
                eprintln!(
                    "pairing violation: p={pv} n={n} seed={} index={} slack={}",
                    v.seed, v.index, v.value
                );
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, 10.0),
        format!("{checked} pairs, {violations} violations, worst margin {worst:.3e}, {elapsed:.2?} (< 10 s)"),
    )
}

/// Criterion 5: The classical factor at r = gamma = s = 1, mu = 1/10 is exactly -0.97.
fn classical_factor_reproduction() -> Outcome {
    let f = oracle::classical_factor_example();
    outcome(f == -0.97 && f < 0.0, format!("factor = {f:?} (== -0.97)"))
}

struct Instance {
    name: String,
    problem: Problem,
    starts: [Point; 2],
}

/// Unit box with a seeded lower corner.
fn seeded_unit_box(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let lo: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..0.5)).collect();
    let hi = lo.iter().map(|l| l + 1.0).collect();
    (lo, hi)
}

fn hilbert_instance(
    name: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
    map: Mapping,
    cert: Certificate,
) -> Instance {
    let set = ConvexSet::boxed(pt(&lo), pt(&hi)).unwrap();
    let problem = Problem::new(SpaceSpec::new(2, 2.0).unwrap(), set, map, Some(cert)).unwrap();
    Instance {
        name,
        problem,
        starts: [pt(&lo), pt(&hi)],
    }
}

fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = vec![hilbert_instance(
        "identity on [1,2]^2".into(),
        vec![1.0, 1.0],
        vec![2.0, 2.0],
        Mapping::identity(2),
        Certificate::new(0.1, 1.0, 1.0).unwrap(),
    )];
    for alpha in [0.25, 0.5] {
        let (lo, hi) = seeded_unit_box(&mut rng);
        let map = Mapping::residual_of_contraction(
            Mapping::linear(Matrix::scaled_identity(2, alpha)),
            alpha,
        )
        .unwrap();
        out.push(hilbert_instance(
            format!("I - {alpha} I on box at {lo:.3?}"),
            lo,
            hi,
            map,
            Certificate::new(0.1, 1.0 - alpha, 1.0 - alpha).unwrap(),
        ));
    }
    let (lo, hi) = seeded_unit_box(&mut rng);
    let c: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..0.9)).collect();
    out.push(hilbert_instance(
        format!("x - c, c = {c:.4?}"),
        lo,
        hi,
        Mapping::shifted_identity(&pt(&c)),
        Certificate::new(0.1, 1.0, 1.0).unwrap(),
    ));
    let (lo, hi) = seeded_unit_box(&mut rng);
    let q: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
    // Symmetric part diag(2, 1) gives v = 1; spectral norm is about 2.081.
    let m = Matrix::from_rows(vec![vec![2.0, 0.5], vec![-0.5, 1.0]]).unwrap();
    out.push(hilbert_instance(
        format!("affine M x + {q:.3?}"),
        lo,
        hi,
        Mapping::affine(m, pt(&q)).unwrap(),
        Certificate::new(0.1, 1.0, 2.09).unwrap(),
    ));
    out
}

/// Criterion 6: Picard answer within one cell of an accepted grid point; accepted
/// set diameter at most two cells.
fn solver_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec::uniform(2, 41).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for inst in instances() {
        let step = vi_solver::select_lambda(&inst.problem, None).unwrap();
        let report = vi_solver::picard_solve(
            &inst.problem,
            step,
            &inst.starts[0],
            SolveOptions::default(),
        )
        .unwrap();
        let result =
            oracle::grid_vi_solve(&inst.problem, &grid, AcceptanceRule::MinimalGap).unwrap();
        let a = oracle::agreement(&result, &report.final_point);
        let nearest = result.nearest_distance_inf(&report.final_point);
        let pass = report.status == SolveStatus::Converged
            && !result.accepted.is_empty()
            && nearest <= 0.025 + 1e-12
            && a.passed();
        ok &= pass;
        notes.push(format!(
            "{}: {} accepted, nearest {:.4}, diameter {:.2} cells{}",
            inst.name,
            result.accepted.len(),
            nearest,
            a.diameter_cells,
            if pass { "" } else { " FAIL" }
        ));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 10.0),
        format!("{}; {elapsed:.2?} (< 10 s)", notes.join("; ")),
    )
}

/// Criterion 7: Two starts agree within 10 tol; step ratios at most q + 0.05.
fn uniqueness_and_rate() -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for inst in instances() {
        let step = vi_solver::select_lambda(&inst.problem, None).unwrap();
        if step.certification != Certification::HilbertCertified {
            ok = false;
            notes.push(format!("{}: not HilbertCertified", inst.name));
            continue;
        }
        let a = vi_solver::picard_solve(&inst.problem, step, &inst.starts[0], opts).unwrap();
        let b = vi_solver::picard_solve(&inst.problem, step, &inst.starts[1], opts).unwrap();
        let gap = a
            .final_point
            .distance(&b.final_point, Exponent::HILBERT)
            .unwrap();
        let q =
            vi_solver::hilbert_contraction_factor(inst.problem.certificate().unwrap(), step.lambda);
        let worst_ratio = [&a, &b]
            .iter()
            .flat_map(|r| vi_solver::step_ratios(&r.trace, 1e-12))
            .fold(0.0, f64::max);
        let pass = a.status == SolveStatus::Converged
            && b.status == SolveStatus::Converged
            && gap <= 10.0 * opts.tol
            && worst_ratio <= q + 0.05;
        ok &= pass;
        notes.push(format!(
            "{}: gap {gap:.1e}, max ratio {worst_ratio:.3} vs q {q:.3}{}",
            inst.name,
            if pass { "" } else { " FAIL" }
        ));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 5.0),
        format!("{}; {elapsed:.2?} (< 5 s)", notes.join("; ")),
    )
}

/// Criterion 8: Feasibility verdicts and the vacuity of the uniqueness hypothesis.
fn feasibility_analyzer() -> Outcome {
    let a = certificate_feasibility(&Certificate::new(1.0, 10.0, 1.0).unwrap()).verdict;
    let b = certificate_feasibility(&Certificate::new(0.1, 0.5, 0.5).unwrap()).verdict;
    let scan = mappings::certificate_scan(10_000, SEED);
    outcome(
        a == Verdict::Inconsistent && b == Verdict::HilbertOnly && scan.passed() && scan.checked == 10_000,
        format!(
            "(1,10,1) -> {a}, (0.1,0.5,0.5) -> {b}, {} certified-and-consistent among {} random certificates",
            scan.violations.len(),
            scan.checked
        ),
    )
}

/// Criterion 9: Step range endpoints 0, 2 - sqrt 3, 2 + sqrt 3, 4.
fn step_range_arithmetic() -> Outcome {
    let r = vi_solver::banach_step_range(&Certificate::new(1.0, 10.0, 1.0).unwrap());
    let s3 = 3f64.sqrt();
    let expected = [0.0, 2.0 - s3, 2.0 + s3, 4.0];
    let got: Vec<f64> = r.0.iter().flat_map(|i| [i.lo, i.hi]).collect();
    let ok = got.len() == 4
        && got
            .iter()
            .zip(expected)
            .all(|(g, e)| (g - e).abs() <= 1e-12);
    outcome(ok, format!("endpoints {got:?}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("duality identities", duality_identities),
        ("hilbert degeneration", hilbert_degeneration),
        ("box retraction suite", box_retraction_suite),
        ("pairing inequality", pairing_inequality),
        (
            "classical factor reproduction",
            classical_factor_reproduction,
        ),
        ("solver-oracle agreement", solver_oracle_agreement),
        ("uniqueness and geometric rate", uniqueness_and_rate),
        ("feasibility analyzer", feasibility_analyzer),
        ("step range arithmetic", step_range_arithmetic),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.passed { "PASS" } else { "FAIL" };
        if !result.passed {
            failed += 1;
        }
        println!("[{tag}] {}. {name}: {}", i + 1, result.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::fs;
use std::path::Path;

use serde::Serialize;
use vi_core::convex_sets;
use vi_core::mappings::{self, certificate_feasibility, CheckReport, Verdict};
use vi_core::oracle::{self, AcceptanceRule};
use vi_core::sampling::Violation;
use vi_core::vi_solver::{self, Certification, SolveReport, SolveStatus, StepSize, TraceEntry};
use vi_core::{
    lp_space, ConvexSet, Error, Exponent, FeasibilityVerdict, GridSpec, Point, SweepReport,
};

use crate::config::{self, Loaded};
use crate::failure::{Failure, Kind};
use crate::{Suite, DEFAULT_SEED};

const DEFAULT_CHECK_SAMPLES: usize = 1000;
/// Violations printed per sweep.
const SHOWN_VIOLATIONS: usize = 5;

#[derive(Debug, Serialize)]
struct Summary<'a> {
    status: SolveStatus,
    final_point: &'a Point,
    lambda: f64,
    certification: Certification,
    feasibility: Option<FeasibilityVerdict>,
    iterations: usize,
    final_residual: f64,
    contraction_factor_sq: Option<f64>,
    tol: f64,
    max_iter: usize,
}

fn write_trace(path: &Path, trace: &[TraceEntry]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::new(Kind::Config, format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["iter", "step_norm", "residual"])
        .map_err(io)?;
    for t in trace {
        w.write_record([
            t.iter.to_string(),
            format!("{:.16e}", t.step_norm),
            format!("{:.16e}", t.residual),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn summary_json(report: &SolveReport, step: &StepSize, loaded: &Loaded) -> String {
    let summary = Summary {
        status: report.status,
        final_point: &report.final_point,
        lambda: report.lambda,
        certification: report.certification,
        feasibility: step.feasibility,
        iterations: report.iterations,
        final_residual: report.final_residual,
        contraction_factor_sq: report.contraction_factor_sq,
        tol: loaded.options.tol,
        max_iter: loaded.options.max_iter,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}

pub fn solve(
    path: &Path,
    out: &Path,
    lambda: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<(), Failure> {
    let mut loaded = config::load(path)?;
    if let Some(tol) = tol {
        loaded.options.tol = tol;
    }
    if let Some(max_iter) = max_iter {
        loaded.options.max_iter = max_iter;
    }
    let step = vi_solver::select_lambda(&loaded.problem, lambda.or(loaded.lambda))?;
    fs::create_dir_all(out)?;
    let trace_path = out.join("trace.csv");
    let report = match vi_solver::picard_solve(&loaded.problem, step, &loaded.x0, loaded.options) {
        Ok(r) => r,
        Err(Error::Divergence { iteration, trace }) => {
            write_trace(&trace_path, &trace)?;
            return Err(Failure::new(
                Kind::Divergence,
                format!(
                    "iteration diverged at step {iteration}; trace written to {}",
                    trace_path.display()
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    write_trace(&trace_path, &report.trace)?;
    let json = summary_json(&report, &step, &loaded);
    fs::write(out.join("summary.json"), format!("{json}\n"))?;
    println!("{json}");
    match report.status {
        SolveStatus::Converged => Ok(()),
        SolveStatus::IterationLimit => Err(Failure::new(
            Kind::IterationLimit,
            format!(
                "no convergence within {} iterations (last step {:e})",
                report.iterations,
                report.trace.last().map_or(f64::NAN, |t| t.step_norm)
            ),
        )),
    }
}

fn describe_worst(report: &CheckReport) -> String {
    match &report.worst_pair {
        Some((x, y)) => format!(
            "{:e} at x = {:?}, y = {:?}",
            report.worst_slack,
            x.coords(),
            y.coords()
        ),
        None => "n/a (no non-degenerate pairs)".into(),
    }
}

pub fn check_map(path: &Path, seed: Option<u64>, samples: Option<usize>) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let region = config::sampling_region(&loaded)?;
    let seed = seed.or(loaded.check.seed).unwrap_or(DEFAULT_SEED);
    let samples = samples
        .or(loaded.check.samples)
        .unwrap_or(DEFAULT_CHECK_SAMPLES);
    let problem = &loaded.problem;
    let p = problem.space().p;

    println!(
        "sampling {samples} pairs from the {} (seed {seed})",
        region.name()
    );
    let est = mappings::estimate_lipschitz(problem.map(), &region, p, samples, seed)?;
    println!(
        "lipschitz estimate: {} ({} pairs, {} degenerate)",
        est.mu_hat, est.evaluated, est.degenerate
    );
    let Some(cert) = problem.certificate() else {
        println!("no certificate given; estimates only");
        return Ok(());
    };

    let mut problems = Vec::new();
    let feasibility = certificate_feasibility(cert);
    println!(
        "certificate u = {}, v = {}, mu = {}: {}",
        cert.u, cert.v, cert.mu, feasibility.verdict
    );
    if feasibility.verdict == Verdict::Inconsistent {
        problems.push(format!(
            "certificate is Inconsistent: v = {} exceeds mu + u mu^2 = {}",
            cert.v,
            cert.mu + cert.u * cert.mu * cert.mu
        ));
    }
    if est.mu_hat > cert.mu * (1.0 + 1e-9) {
        problems.push(format!(
            "sampled Lipschitz ratio {} exceeds mu = {}",
            est.mu_hat, cert.mu
        ));
    }

    let coco = mappings::check_relaxed_cocoercive(
        problem.map(),
        &region,
        cert.u,
        cert.v,
        p,
        samples,
        seed,
    )?;
    println!(
        "relaxed cocoercivity: worst slack {}",
        describe_worst(&coco)
    );
    if coco.violation_found {
        problems.push(format!(
            "relaxed ({}, {})-cocoercivity violated (seed {seed}): worst slack {}",
            cert.u,
            cert.v,
            describe_worst(&coco)
        ));
    }
    let mono = mappings::check_strongly_monotone(problem.map(), &region, cert.v, p, samples, seed)?;
    println!(
        "strong monotonicity with v = {}: worst slack {}{}",
        cert.v,
        describe_worst(&mono),
        if mono.violation_found {
            " (not strongly monotone at this v)"
        } else {
            ""
        }
    );

    if problems.is_empty() {
        println!("PASS");
        Ok(())
    } else {
        for p in &problems {
            println!("FAIL {p}");
        }
        Err(Failure::new(Kind::Violation, problems.join("; ")))
    }
}

fn exponents(p: Option<f64>, default: &[f64]) -> Result<Vec<Exponent>, Failure> {
    match p {
        Some(p) => Ok(vec![
            Exponent::new(p).map_err(|e| Failure::from(e).at("--p"))?
        ]),
        None => Ok(default
            .iter()
            .map(|&p| Exponent::new(p).expect("valid default"))
            .collect()),
    }
}

fn dimensions(n: Option<usize>, default: &[usize]) -> Result<Vec<usize>, Failure> {
    match n {
        Some(0) => Err(Failure::new(Kind::Config, "dimension must be at least 1").at("--n")),
        Some(n) => Ok(vec![n]),
        None => Ok(default.to_vec()),
    }
}

fn print_violation(v: &Violation) {
    println!(
        "    reproduce with seed {} index {}: value {:e}, tolerance {:e}",
        v.seed, v.index, v.value, v.tolerance
    );
}

/// Prints one line per sweep and returns whether it passed.
fn report_sweep(label: &str, r: &SweepReport) -> bool {
    let ok = r.violations.is_empty();
    println!(
        "{} {label}: {} checks, worst margin {:e}, {} violations",
        if ok { "PASS" } else { "FAIL" },
        r.checked,
        r.worst_margin,
        r.violations.len()
    );
    r.violations
        .iter()
        .take(SHOWN_VIOLATIONS)
        .for_each(print_violation);
    ok
}

fn verification_box(n: usize) -> ConvexSet {
    let lo = Point::new((0..n).map(|i| -1.0 - 0.1 * i as f64).collect()).expect("finite");
    let hi = Point::new((0..n).map(|i| 0.5 + 0.2 * i as f64).collect()).expect("finite");
    ConvexSet::boxed(lo, hi).expect("valid box")
}

pub fn verify(
    suite: Suite,
    seed: u64,
    count: Option<usize>,
    p: Option<f64>,
    n: Option<usize>,
) -> Result<(), Failure> {
    let mut ok = true;
    match suite {
        Suite::Duality => {
            let count = count.unwrap_or(1000);
            for p in exponents(p, &[1.5, 2.0, 3.0, 4.0])? {
                for &n in &dimensions(n, &[2, 10, 50])? {
                    let r = lp_space::duality_identity_sweep(n, p, count, seed);
                    ok &= report_sweep(&format!("duality identities p = {p}, n = {n}"), &r);
                }
            }
        }
        Suite::Retraction => {
            let count = count.unwrap_or(10_000);
            let instances = (count / 20).max(1);
            for p in exponents(p, &[1.5, 2.0, 3.0])? {
                for &n in &dimensions(n, &[3])? {
                    let set = verification_box(n);
                    let dev = convex_sets::sunny_sweep(
                        &set,
                        n,
                        p,
                        instances,
                        &[0.0, 0.5, 1.0, 2.0],
                        seed,
                    )?;
                    let sunny_ok = dev == 0.0;
                    println!(
                        "{} box sunny deviation p = {p}, n = {n}: {dev:e} over {instances} points",
                        if sunny_ok { "PASS" } else { "FAIL" }
                    );
                    ok &= sunny_ok;
                    let r = convex_sets::nonexpansive_sweep(&set, n, p, count, seed)?;
                    ok &= report_sweep(&format!("box nonexpansive p = {p}, n = {n}"), &r);
                    let r = convex_sets::characterization_sweep(&set, n, p, instances, 500, seed)?;
                    ok &= report_sweep(&format!("box characterization p = {p}, n = {n}"), &r);
                    if p.is_hilbert() {
                        let ball = ConvexSet::ball(1.5).expect("valid radius");
                        let normal =
                            Point::new((0..n).map(|i| 1.0 + i as f64).collect()).expect("finite");
                        let half = ConvexSet::halfspace(normal, 0.5).expect("valid halfspace");
                        for set in [ball, half] {
                            let r = convex_sets::firm_nonexpansive_sweep(&set, n, count, seed)?;
                            ok &= report_sweep(
                                &format!("{} firm nonexpansive n = {n}", set.name()),
                                &r,
                            );
                            let r = convex_sets::characterization_sweep(
                                &set, n, p, instances, 500, seed,
                            )?;
                            ok &= report_sweep(
                                &format!("{} characterization n = {n}", set.name()),
                                &r,
                            );
                        }
                    }
                }
            }
        }
        Suite::Pairing => {
            let count = count.unwrap_or(10_000);
            for p in exponents(p, &[1.5, 3.0, 4.0])? {
                for &n in &dimensions(n, &[2, 5, 20])? {
                    let r = oracle::pairing_inequality_sweep(n, p, count, seed);
                    ok &= report_sweep(&format!("pairing inequality p = {p}, n = {n}"), &r);
                }
            }
        }
        Suite::Remark => {
            let f = oracle::classical_factor_example();
            println!("{f}");
            ok = f == -0.97;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::new(
            Kind::Violation,
            format!("{suite:?} verification failed (seed {seed})"),
        ))
    }
}

pub fn oracle(path: &Path, grid: Option<Vec<usize>>) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let problem = &loaded.problem;
    let n = problem.space().n;
    let counts = grid.unwrap_or_else(|| vec![41; n]);
    if counts.len() != n {
        return Err(Failure::new(
            Kind::Config,
            format!("expected {n} counts, got {}", counts.len()),
        )
        .at("--grid"));
    }
    let grid = GridSpec::new(counts).map_err(|e| Failure::from(e).at("--grid"))?;
    let result = oracle::grid_vi_solve(problem, &grid, AcceptanceRule::MinimalGap)?;
    println!(
        "{} of {} grid points in the set accepted (spacing {:?})",
        result.accepted.len(),
        result.points_in_set,
        result.spacing
    );
    for a in &result.accepted {
        println!(
            "  {:?}  worst pairing {:e}",
            a.point.coords(),
            a.worst_pairing
        );
    }
    if result.all_accepted() {
        println!("every grid point is accepted; agreement check skipped");
        return Ok(());
    }

    let step = match vi_solver::select_lambda(problem, loaded.lambda) {
        Ok(s) => s,
        Err(Error::Configuration(msg)) => {
            println!("no step size available ({msg}); agreement check skipped");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let report = vi_solver::picard_solve(problem, step, &loaded.x0, loaded.options)?;
    if report.status != SolveStatus::Converged {
        return Err(Failure::new(
            Kind::IterationLimit,
            format!(
                "solver did not converge within {} iterations",
                report.iterations
            ),
        ));
    }
    let a = oracle::agreement(&result, &report.final_point);
    println!(
        "solver answer {:?} (lambda {})",
        report.final_point.coords(),
        report.lambda
    );
    println!(
        "agreement {}: nearest accepted point {:.3} cells, farthest {:.3} cells, accepted diameter {:.3} cells",
        if a.passed() { "PASS" } else { "FAIL" },
        a.nearest_cells,
        a.farthest_cells,
        a.diameter_cells
    );
    if a.passed() {
        Ok(())
    } else {
        Err(Failure::new(
            Kind::Violation,
            "grid oracle and solver disagree",
        ))
    }
}

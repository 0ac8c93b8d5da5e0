//! Variational inequalities `VI(C, B)` in the finite-dimensional Banach
//! spaces `(R^n, ||.||_p)`, `1 < p < inf`.
//!
//! A point `u` of a closed convex set `C` solves `VI(C, B)` when
//! `<Bu, j(v - u)> >= 0` for every `v` in `C`, where `j` is the normalized
//! duality mapping of the space. Equivalently `u` is a fixed point of
//! `Q_C (I - lambda B)`, with `Q_C` the sunny nonexpansive retraction onto
//! `C`. The crate provides:
//!
//! * [`lp_space`]: points, p-norms, the duality pairing and `J`.
//! * [`convex_sets`]: boxes, balls, halfspaces and their retractions, with
//!   sampled checks of the sunny/nonexpansive/characterization properties.
//! * [`mappings`]: affine and black-box maps `B`, sample-based falsifiers for
//!   Lipschitz continuity, relaxed `(u, v)`-cocoercivity and strong
//!   monotonicity, and certificate feasibility analysis.
//! * [`vi_solver`]: step-size rules, Picard iteration and the VI residual.
//! * [`oracle`]: brute-force grid solving and other solver-independent checks.

pub mod convex_sets;
pub mod error;
pub mod lp_space;
pub mod mappings;
pub mod oracle;
pub mod sampling;
pub mod vi_solver;

pub use convex_sets::{ConvexSet, RetractionMode};
pub use error::{Error, Result};
pub use lp_space::{DualVector, Exponent, Point, SpaceSpec};
pub use mappings::{Certificate, FeasibilityVerdict, Mapping, Matrix, Verdict};
pub use oracle::{AcceptanceRule, GridSpec, OracleResult};
pub use sampling::SweepReport;
pub use vi_solver::{
    Certification, Problem, SolveOptions, SolveReport, SolveStatus, StepSize, TraceEntry,
};

//! Problem files.
//!
//! ```toml
//! [space]
//! n = 2
//! p = 2.0
//!
//! [set]
//! kind = "box"          # box | ball | halfspace | whole
//! lo = [1.0, 1.0]
//! hi = [2.0, 2.0]
//!
//! [map]
//! kind = "affine"       # affine | identity | zero | shifted | residual
//! matrix = [[1.0, 0.0], [0.0, 1.0]]
//! shift = [0.0, 0.0]
//!
//! [certificate]
//! u = 0.1
//! v = 1.0
//! mu = 1.0
//!
//! [solver]
//! lambda = "auto"       # or a number
//! tol = 1e-10
//! max_iter = 1000000
//! x0 = [2.0, 2.0]
//!
//! [check]
//! samples = 1000
//! seed = 7
//! lo = [-1.0, -1.0]     # sampling box when the set is unbounded
//! hi = [1.0, 1.0]
//! ```

use std::path::Path;

use serde::Deserialize;
use vi_core::{
    Certificate, ConvexSet, Error, Mapping, Matrix, Point, Problem, SolveOptions, SpaceSpec,
};

use crate::failure::{Failure, Kind};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub space: SpaceSection,
    pub set: SetSection,
    pub map: MapSection,
    pub certificate: Option<CertificateSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub n: usize,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetSection {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Whole,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSection {
    Affine {
        matrix: Vec<Vec<f64>>,
        shift: Option<Vec<f64>>,
    },
    Identity,
    Zero,
    /// `x - c`.
    Shifted {
        c: Vec<f64>,
    },
    /// `I - T` for an `alpha`-contraction `T`.
    Residual {
        alpha: f64,
        inner: Box<MapSection>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    pub u: f64,
    pub v: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSetting {
    Value(f64),
    Word(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: Option<LambdaSetting>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

/// A parsed and validated problem file.
pub struct Loaded {
    pub problem: Problem,
    /// `None` means automatic selection.
    pub lambda: Option<f64>,
    pub options: SolveOptions,
    pub x0: Point,
    pub check: CheckSection,
}

fn at(field: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::from(e).at(field)
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<(), Failure> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Failure::new(
            Kind::Config,
            format!("expected {n} entries, got {}", v.len()),
        )
        .at(field))
    }
}

fn point(field: &str, v: &[f64], n: usize) -> Result<Point, Failure> {
    check_len(field, v, n)?;
    Point::new(v.to_vec()).map_err(at(field))
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(Kind::Config, format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|f| f.in_file(path))
}

pub fn parse(text: &str) -> Result<Loaded, Failure> {
    let cfg: ProblemConfig =
        toml::from_str(text).map_err(|e| Failure::new(Kind::Config, e.to_string()))?;
    cfg.build()
}

impl ProblemConfig {
    fn build(self) -> Result<Loaded, Failure> {
        let n = self.space.n;
        if n == 0 {
            return Err(Failure::new(Kind::Config, "dimension must be at least 1").at("space.n"));
        }
        let space = SpaceSpec::new(n, self.space.p).map_err(at("space.p"))?;
        let set = build_set(&self.set, n)?;
        let map = build_map(&self.map, n, "map")?;
        let cert = self
            .certificate
            .as_ref()
            .map(|c| Certificate::new(c.u, c.v, c.mu).map_err(at("certificate")))
            .transpose()?;
        let problem = Problem::new(space, set, map, cert).map_err(at("set"))?;

        let lambda = match &self.solver.lambda {
            None => None,
            Some(LambdaSetting::Word(w)) if w == "auto" => None,
            Some(LambdaSetting::Word(w)) => {
                return Err(Failure::new(
                    Kind::Config,
                    format!("expected \"auto\" or a number, got \"{w}\""),
                )
                .at("solver.lambda"))
            }
            Some(LambdaSetting::Value(l)) => Some(*l),
        };
        let mut options = SolveOptions::default();
        if let Some(tol) = self.solver.tol {
            options.tol = tol;
        }
        if let Some(max_iter) = self.solver.max_iter {
            options.max_iter = max_iter;
        }
        let x0 = match &self.solver.x0 {
            Some(v) => point("solver.x0", v, n)?,
            None => Point::zeros(n),
        };
        if let Some(lo) = &self.check.lo {
            check_len("check.lo", lo, n)?;
        }
        if let Some(hi) = &self.check.hi {
            check_len("check.hi", hi, n)?;
        }
        Ok(Loaded {
            problem,
            lambda,
            options,
            x0,
            check: self.check,
        })
    }
}

fn build_set(section: &SetSection, n: usize) -> Result<ConvexSet, Failure> {
    match section {
        SetSection::Box { lo, hi } => {
            let lo = point("set.lo", lo, n)?;
            let hi = point("set.hi", hi, n)?;
            ConvexSet::boxed(lo, hi).map_err(at("set"))
        }
        SetSection::Ball { radius } => ConvexSet::ball(*radius).map_err(at("set.radius")),
        SetSection::Halfspace { normal, offset } => {
            let normal = point("set.normal", normal, n)?;
            ConvexSet::halfspace(normal, *offset).map_err(at("set"))
        }
        SetSection::Whole => Ok(ConvexSet::WholeSpace),
    }
}

fn build_map(section: &MapSection, n: usize, prefix: &str) -> Result<Mapping, Failure> {
    let field = |name: &str| format!("{prefix}.{name}");
    match section {
        MapSection::Affine { matrix, shift } => {
            let f = field("matrix");
            if matrix.len() != n {
                return Err(Failure::new(
                    Kind::Config,
                    format!("expected {n} rows, got {}", matrix.len()),
                )
                .at(&f));
            }
            for (i, row) in matrix.iter().enumerate() {
                check_len(&format!("{f}[{i}]"), row, n)?;
            }
            let m = Matrix::from_rows(matrix.clone()).map_err(at(&f))?;
            let shift = match shift {
                Some(s) => point(&field("shift"), s, n)?,
                None => Point::zeros(n),
            };
            Mapping::affine(m, shift).map_err(at(prefix))
        }
        MapSection::Identity => Ok(Mapping::identity(n)),
        MapSection::Zero => Ok(Mapping::zero(n)),
        MapSection::Shifted { c } => Ok(Mapping::shifted_identity(&point(&field("c"), c, n)?)),
        MapSection::Residual { alpha, inner } => {
            let inner = build_map(inner, n, &field("inner"))?;
            Mapping::residual_of_contraction(inner, *alpha).map_err(at(&field("alpha")))
        }
    }
}

/// Region to sample pairs from: the set itself when bounded, otherwise the
/// `[check]` box.
pub fn sampling_region(loaded: &Loaded) -> Result<ConvexSet, Failure> {
    let set = loaded.problem.set();
    if set.is_bounded() {
        return Ok(set.clone());
    }
    match (&loaded.check.lo, &loaded.check.hi) {
        (Some(lo), Some(hi)) => ConvexSet::boxed(
            Point::new(lo.clone()).map_err(at("check.lo"))?,
            Point::new(hi.clone()).map_err(at("check.hi"))?,
        )
        .map_err(at("check")),
        _ => Err(Failure::new(
            Kind::Config,
            format!(
                "the {} is unbounded; give a sampling box with check.lo and check.hi",
                set.name()
            ),
        )
        .at("check")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOX: &str = r#"
        [space]
        n = 2
        p = 2.0
        [set]
        kind = "box"
        lo = [1.0, 1.0]
        hi = [2.0, 2.0]
        [map]
        kind = "identity"
    "#;

    #[test]
    fn minimal_file() {
        let l = parse(BOX).unwrap();
        assert_eq!(l.problem.space().n, 2);
        assert!(l.lambda.is_none());
        assert!(l.problem.certificate().is_none());
        assert_eq!(l.x0, Point::zeros(2));
    }

    #[test]
    fn nested_residual_map() {
        let text = BOX.replace(
            "kind = \"identity\"",
            "kind = \"residual\"\nalpha = 0.5\n[map.inner]\nkind = \"affine\"\nmatrix = [[0.5, 0.0], [0.0, 0.5]]",
        );
        let l = parse(&text).unwrap();
        let y = l
            .problem
            .map()
            .eval(&Point::new(vec![2.0, -4.0]).unwrap())
            .unwrap();
        assert_eq!(y.coords(), &[1.0, -2.0]);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let f = parse(&BOX.replace("p = 2.0", "p = 1.0")).err().unwrap();
        assert_eq!(f.kind, Kind::Unsupported);
        assert!(f.message.contains("space.p"), "{}", f.message);

        let f = parse(&BOX.replace("hi = [2.0, 2.0]", "hi = [2.0]"))
            .err()
            .unwrap();
        assert_eq!(f.kind, Kind::Config);
        assert!(f.message.contains("set.hi"), "{}", f.message);

        let f = parse(&format!("{BOX}\n[solver]\nlambda = \"fast\""))
            .err()
            .unwrap();
        assert!(f.message.contains("solver.lambda"), "{}", f.message);

        let f = parse(
            &BOX.replace("kind = \"box\"", "kind = \"ball\"\nradius = 1.0")
                .replace("p = 2.0", "p = 3.0"),
        )
        .err()
        .unwrap();
        assert_eq!(f.kind, Kind::Unsupported);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let f = parse("[space]\nn = 2\np = \n").err().unwrap();
        assert_eq!(f.kind, Kind::Config);
        assert!(f.message.contains("line 3"), "{}", f.message);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = parse(&BOX.replace("n = 2", "n = 2\ndim = 2"))
            .err()
            .unwrap();
        assert!(f.message.contains("dim"), "{}", f.message);
    }
}

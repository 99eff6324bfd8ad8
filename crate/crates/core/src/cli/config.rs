//! INI run configuration.
//!
//! ```ini
//! [problem]
//! a = 0
//! b = 1
//! lambda = 1
//! kernel = x*y
//! f = x
//!
//! [grid]
//! rule = gauss-legendre
//! n = 64
//!
//! [solver]
//! method = auto
//! tol = 1e-10
//!
//! [output]
//! format = keyvalue
//! ```
//!
//! `kernel_file` and `f_file` replace the expressions with node values,
//! one real per line (the kernel row-major, `n * n` lines). Relative paths
//! resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, Properties};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::fixpoint::IterationConfig;
use crate::fredholm::{Kernel, Method, Source, DEFAULT_GRID_NODES};
use crate::space::Rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Solve,
    Vi,
    Kkm,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Vi => "vi",
            Command::Kkm => "kkm",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    KeyValue,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "keyvalue" | "key-value" | "kv" => Ok(Format::KeyValue),
            other => Err(Error::InvalidConfig(format!(
                "output.format: expected `table` or `keyvalue`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum KernelInput {
    Expression(Expr),
    Values(Vec<f64>),
}

#[derive(Debug, Clone)]
pub enum SourceInput {
    Expression(Expr),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Default)]
pub struct ProblemSection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub kernel: Option<KernelInput>,
    pub source: Option<SourceInput>,
    pub scenario: Option<String>,
    pub angle: Option<f64>,
    pub dim: Option<usize>,
    pub threshold: Option<f64>,
    pub anchors: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GridSection {
    pub rule: Rule,
    pub n: usize,
    /// Barycentric resolution for KKM scenarios.
    pub m: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            rule: Rule::GaussLegendre,
            n: DEFAULT_GRID_NODES,
            m: 30,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolverSection {
    pub method: Method,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub radius: Option<f64>,
    pub initial: Option<Expr>,
    pub x0: Option<Vec<f64>>,
    pub samples: Option<usize>,
}

impl SolverSection {
    pub fn iteration(&self, default_tol: f64) -> Result<IterationConfig> {
        let d = IterationConfig::default();
        IterationConfig::new(
            self.alpha.unwrap_or(d.alpha),
            self.max_iters.unwrap_or(d.max_iters),
            self.tol.unwrap_or(default_tol),
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

const PROBLEM_KEYS: &[&str] = &[
    "a", "b", "lambda", "kernel", "kernel_file", "f", "f_file", "scenario", "angle", "dim", "threshold", "anchors",
];
const GRID_KEYS: &[&str] = &["rule", "n", "m"];
const SOLVER_KEYS: &[&str] = &["method", "alpha", "tol", "max_iters", "radius", "initial", "x0", "samples"];
const OUTPUT_KEYS: &[&str] = &["report", "format"];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_ini_str(&text, base)
    }

    pub fn from_ini_str(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::InvalidConfig(format!("config syntax: {e}")))?;
        for (name, props) in ini.iter() {
            let allowed = match name {
                Some("problem") => PROBLEM_KEYS,
                Some("grid") => GRID_KEYS,
                Some("solver") => SOLVER_KEYS,
                Some("output") => OUTPUT_KEYS,
                None if props.is_empty() => continue,
                None => return Err(Error::InvalidConfig("keys must appear inside a section".into())),
                Some(other) => return Err(Error::InvalidConfig(format!("unknown section [{other}]"))),
            };
            let section = name.unwrap_or_default();
            if let Some((key, _)) = props.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(Error::InvalidConfig(format!("unknown key `{section}.{key}`")));
            }
        }

        let p = Section::new(&ini, "problem");
        let kernel = match (p.text("kernel"), p.text("kernel_file")) {
            (Some(_), Some(_)) => return Err(both("problem.kernel", "problem.kernel_file")),
            (Some(s), None) => Some(KernelInput::Expression(p.expression("kernel", s)?)),
            (None, Some(f)) => Some(KernelInput::Values(read_values(&base_dir.join(f), "problem.kernel_file")?)),
            (None, None) => None,
        };
        let source = match (p.text("f"), p.text("f_file")) {
            (Some(_), Some(_)) => return Err(both("problem.f", "problem.f_file")),
            (Some(s), None) => Some(SourceInput::Expression(p.expression("f", s)?)),
            (None, Some(f)) => Some(SourceInput::Values(read_values(&base_dir.join(f), "problem.f_file")?)),
            (None, None) => None,
        };
        if let Some(SourceInput::Expression(e)) = &source {
            if e.uses_y() {
                return Err(Error::InvalidConfig("problem.f: the source term may only use x".into()));
            }
        }
        let problem = ProblemSection {
            a: p.real("a")?,
            b: p.real("b")?,
            lambda: p.real("lambda")?,
            kernel,
            source,
            scenario: p.text("scenario").map(str::to_ascii_lowercase),
            angle: p.real("angle")?,
            dim: p.count("dim")?,
            threshold: p.real("threshold")?,
            anchors: p.count("anchors")?,
        };

        let g = Section::new(&ini, "grid");
        let defaults = GridSection::default();
        let grid = GridSection {
            rule: match g.text("rule") {
                Some(s) => s.parse().map_err(|_| g.invalid("rule", s, "a quadrature rule name"))?,
                None => defaults.rule,
            },
            n: g.count("n")?.unwrap_or(defaults.n),
            m: g.count("m")?.unwrap_or(defaults.m),
        };

        let s = Section::new(&ini, "solver");
        let initial = match s.text("initial") {
            Some(text) => {
                let e = s.expression("initial", text)?;
                if e.uses_y() {
                    return Err(Error::InvalidConfig("solver.initial: the starting function may only use x".into()));
                }
                Some(e)
            }
            None => None,
        };
        let x0 = match s.text("x0") {
            Some(text) => Some(
                text.split(',')
                    .map(|t| parse_real(t).ok_or_else(|| s.invalid("x0", text, "a comma-separated list of finite reals")))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let solver = SolverSection {
            method: match s.text("method") {
                Some(m) => m.parse().map_err(|_| s.invalid("method", m, "auto, picard or km"))?,
                None => Method::Auto,
            },
            alpha: s.real("alpha")?,
            tol: s.real("tol")?,
            max_iters: s.count("max_iters")?,
            radius: s.real("radius")?,
            initial,
            x0,
            samples: s.count("samples")?,
        };

        let o = Section::new(&ini, "output");
        let output = OutputSection {
            report: o.text("report").map(|r| base_dir.join(r)),
            format: match o.text("format") {
                Some(f) => f.parse()?,
                None => Format::Table,
            },
        };

        Ok(Self {
            problem,
            grid,
            solver,
            output,
        })
    }
}

impl ProblemSection {
    pub fn require<T: Clone>(&self, value: &Option<T>, key: &str) -> Result<T> {
        value
            .clone()
            .ok_or_else(|| Error::InvalidConfig(format!("missing required field `problem.{key}`")))
    }
}

impl KernelInput {
    pub fn into_kernel(self, n: usize) -> Result<Kernel> {
        match self {
            KernelInput::Expression(e) => Ok(Kernel::Expression(e)),
            KernelInput::Values(v) if v.len() == n * n => Ok(Kernel::GridSamples(DMatrix::from_row_slice(n, n, &v))),
            KernelInput::Values(v) => Err(Error::InvalidConfig(format!(
                "problem.kernel_file: expected {} values for a {n}-node grid, got {}",
                n * n,
                v.len()
            ))),
        }
    }
}

impl SourceInput {
    pub fn into_source(self, n: usize) -> Result<Source> {
        match self {
            SourceInput::Expression(e) => Ok(Source::Expression(e)),
            SourceInput::Values(v) if v.len() == n => Ok(Source::NodeValues(v)),
            SourceInput::Values(v) => Err(Error::InvalidConfig(format!(
                "problem.f_file: expected {n} values, got {}",
                v.len()
            ))),
        }
    }
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Self {
            name,
            props: ini.section(Some(name)),
        }
    }

    fn text(&self, key: &str) -> Option<&'a str> {
        self.props
            .and_then(|p| p.get(key))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn invalid(&self, key: &str, value: &str, expected: &str) -> Error {
        Error::InvalidConfig(format!("{}.{key}: expected {expected}, got `{value}`", self.name))
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.text(key)
            .map(|s| parse_real(s).ok_or_else(|| self.invalid(key, s, "a finite real")))
            .transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.text(key)
            .map(|s| s.parse::<usize>().map_err(|_| self.invalid(key, s, "a non-negative integer")))
            .transpose()
    }

    fn expression(&self, key: &str, text: &str) -> Result<Expr> {
        parse_expression(text).map_err(|e| Error::InvalidConfig(format!("{}.{key}: {e}", self.name)))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn both(a: &str, b: &str) -> Error {
    Error::InvalidConfig(format!("give either `{a}` or `{b}`, not both"))
}

fn read_values(path: &Path, field: &str) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{field}: cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_real(l).ok_or_else(|| {
                Error::InvalidConfig(format!("{field}: line {} of {}: expected a finite real, got `{}`", i + 1, path.display(), l.trim()))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_ini_str(text, Path::new("."))
    }

    #[test]
    fn full_config() {
        let cfg = parse(
            "[problem]\na = 0\nb = 1\nlambda = 0.5\nkernel = x*y\nf = x\n\
             [grid]\nrule = trapezoid\nn = 33\n[solver]\nmethod = km\ntol = 1e-9\nradius = 2\n\
             [output]\nformat = keyvalue\n",
        )
        .unwrap();
        assert_eq!(cfg.problem.lambda, Some(0.5));
        assert_eq!(cfg.grid.rule, Rule::Trapezoid);
        assert_eq!(cfg.grid.n, 33);
        assert_eq!(cfg.solver.method, Method::KrasnoselskiiMann);
        assert_eq!(cfg.solver.radius, Some(2.0));
        assert_eq!(cfg.output.format, Format::KeyValue);
    }

    #[test]
    fn defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.grid.n, DEFAULT_GRID_NODES);
        assert_eq!(cfg.grid.rule, Rule::GaussLegendre);
        assert_eq!(cfg.solver.method, Method::Auto);
        assert_eq!(cfg.output.format, Format::Table);
        let it = cfg.solver.iteration(1e-10).unwrap();
        assert_eq!(it.tol_residual, 1e-10);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let msg = |t: &str| parse(t).unwrap_err().to_string();
        assert!(msg("[problem]\nlambda = abc\n").contains("problem.lambda"));
        assert!(msg("[problem]\nlambda = inf\n").contains("problem.lambda"));
        assert!(msg("[grid]\nn = -3\n").contains("grid.n"));
        assert!(msg("[solver]\nmethod = newton\n").contains("solver.method"));
        assert!(msg("[problem]\nkernal = x\n").contains("problem.kernal"));
        assert!(msg("[extra]\nx = 1\n").contains("[extra]"));
        assert!(msg("[problem]\nkernel = x +\n").contains("problem.kernel"));
        assert!(msg("[problem]\nf = x*y\n").contains("problem.f"));
        let missing = ProblemSection::default().require(&None::<f64>, "lambda").unwrap_err();
        assert!(missing.to_string().contains("problem.lambda"));
    }

    #[test]
    fn node_value_files() {
        let dir = std::env::temp_dir().join(format!("nonexpansive-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("f.txt"), "1\n2.5\n\n-3e-1\n").unwrap();
        fs::write(dir.join("k.txt"), "1\n2\n3\n4\n").unwrap();
        let cfg = RunConfig::from_ini_str("[problem]\nf_file = f.txt\nkernel_file = k.txt\n", &dir).unwrap();
        let src = cfg.problem.source.clone().unwrap().into_source(3).unwrap();
        assert!(matches!(src, Source::NodeValues(ref v) if v == &[1.0, 2.5, -0.3]));
        assert!(cfg.problem.source.unwrap().into_source(4).is_err());
        match cfg.problem.kernel.unwrap().into_kernel(2).unwrap() {
            Kernel::GridSamples(m) => assert_eq!(m[(0, 1)], 2.0),
            other => panic!("unexpected kernel {other:?}"),
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn x0_list() {
        let cfg = parse("[solver]\nx0 = 0.5, -0.25\n").unwrap();
        assert_eq!(cfg.solver.x0, Some(vec![0.5, -0.25]));
        assert!(parse("[solver]\nx0 = 0.5, nan\n").is_err());
    }
}

//! Command-line front end: config parsing, command dispatch and reports.
//!
//! Exit codes: 0 success, 2 conditions violated, 3 non-convergence,
//! 4 configuration or parse error.

pub mod config;
pub mod report;

use std::f64::consts::PI;
use std::path::PathBuf;

use crate::acceptance;
use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::fixpoint::ConvergenceReport;
use crate::fredholm::{check_conditions, solve, ConditionReport, IntegralProblem, SolveOptions};
use crate::kkm::{build_p_mapping, canonical_cover, circle_anchors, threshold_cover, verify_kkm, SetValuedMap};
use crate::operators::{OperatorSpec, ResidualOperator};
use crate::space::{Element, QuadratureGrid};
use crate::vi::{minty_residuals, solve_vi_extragradient, ViProblem};

pub use config::{Command, Format, RunConfig};
pub use report::{Report, Value};

/// Most violations listed in a KKM report.
const MAX_LISTED_VIOLATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConditionsViolated = 2,
    NonConvergence = 3,
    ConfigError = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Exit status for an error raised while running a command.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::ConditionsViolated(_) => ExitStatus::ConditionsViolated,
            Error::ProjectionNonconvergence { .. } | Error::OracleUnavailable { .. } => ExitStatus::NonConvergence,
            _ => ExitStatus::ConfigError,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: ExitStatus,
    pub report: Report,
}

/// Settings from the command line; they override the config file.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub override_conditions: bool,
}

/// Runs a command end to end: load the config, dispatch, render and write
/// the report. Returns the exit status; diagnostics go to stderr.
pub fn main_with(command: Command, inv: &Invocation) -> ExitStatus {
    let cfg = match load_config(command, inv) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let outcome = match run(command, &cfg, inv) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::for_error(&e);
        }
    };
    let format = inv.format.unwrap_or(cfg.output.format);
    let text = outcome.report.render(format);
    match inv.output.as_ref().or(cfg.output.report.as_ref()) {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write report {}: {e}", path.display());
                return ExitStatus::ConfigError;
            }
        }
        None => print!("{text}"),
    }
    outcome.status
}

fn load_config(command: Command, inv: &Invocation) -> Result<RunConfig> {
    match (&inv.config, command) {
        (Some(path), _) => RunConfig::from_path(path),
        (None, Command::Check | Command::Solve) => Err(Error::InvalidConfig(format!(
            "`{}` needs --config <path>",
            command.name()
        ))),
        (None, _) => Ok(RunConfig::default()),
    }
}

pub fn run(command: Command, cfg: &RunConfig, inv: &Invocation) -> Result<Outcome> {
    match command {
        Command::Check => run_check(cfg),
        Command::Solve => run_solve(cfg, inv),
        Command::Vi => run_vi(cfg, inv.seed),
        Command::Kkm => run_kkm(cfg),
        Command::Selftest => Ok(run_selftest()),
    }
}

/// Builds the integral equation described by `[problem]` and `[grid]`.
pub fn build_problem(cfg: &RunConfig) -> Result<IntegralProblem> {
    let p = &cfg.problem;
    let a = p.require(&p.a, "a")?;
    let b = p.require(&p.b, "b")?;
    let lambda = p.require(&p.lambda, "lambda")?;
    let kernel = p.require(&p.kernel, "kernel")?.into_kernel(cfg.grid.n)?;
    let source = p.require(&p.source, "f")?.into_source(cfg.grid.n)?;
    let grid = QuadratureGrid::new(a, b, cfg.grid.n, cfg.grid.rule)?;
    IntegralProblem::new(lambda, kernel, source, grid)
}

fn push_conditions(r: &mut Report, c: &ConditionReport) {
    r.push("conditions.gamma", c.gamma);
    r.push("conditions.kernel_l2", c.kernel_l2);
    r.push("conditions.banach_product", c.banach_product);
    r.push("conditions.l2_product", c.l2_product);
    r.push("conditions.banach_ok", c.banach_ok);
    r.push("conditions.l2_ok", c.l2_ok);
    r.push("conditions.f_norm", c.f_norm);
    r.push("conditions.f_zero", c.f_zero);
    if let Some(r_min) = c.r_min {
        r.push("conditions.r_min", r_min);
    }
    for (i, w) in c.warnings.iter().enumerate() {
        r.push(format!("warnings.{i}"), w.as_str());
    }
}

fn push_convergence(r: &mut Report, rep: &ConvergenceReport) {
    r.push("status", rep.status.name());
    r.push("iterations", rep.iterations);
    r.push("final_residual", rep.final_residual);
    if let Some(bound) = rep.error_bound {
        r.push("error_bound", bound);
    }
}

fn converged_status(rep: &ConvergenceReport) -> ExitStatus {
    if rep.converged() {
        ExitStatus::Success
    } else {
        ExitStatus::NonConvergence
    }
}

pub fn run_check(cfg: &RunConfig) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let c = check_conditions(&problem)?;
    let mut report = Report::new();
    report.push("command", "check");
    push_conditions(&mut report, &c);
    let status = if c.any_ok() {
        ExitStatus::Success
    } else {
        ExitStatus::ConditionsViolated
    };
    Ok(Outcome { status, report })
}

/// `solve` runs the integral equation, or a VI / KKM scenario when
/// `problem.scenario` names one.
pub fn run_solve(cfg: &RunConfig, inv: &Invocation) -> Result<Outcome> {
    match cfg.problem.scenario.as_deref() {
        None => run_fredholm(cfg, inv),
        Some(s) if VI_SCENARIOS.contains(&s) => run_vi(cfg, inv.seed),
        Some(s) if KKM_SCENARIOS.contains(&s) => run_kkm(cfg),
        Some(other) => Err(unknown_scenario(other)),
    }
}

fn run_fredholm(cfg: &RunConfig, inv: &Invocation) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let iteration = cfg.solver.iteration(1e-10)?;
    let initial = cfg
        .solver
        .initial
        .as_ref()
        .map(|e| {
            let values = problem
                .grid()
                .nodes()
                .iter()
                .map(|&x| e.eval(x, 0.0).map_err(|err| Error::InvalidConfig(format!("solver.initial: {err}"))))
                .collect::<Result<Vec<_>>>()?;
            Element::new(problem.space(), values)
        })
        .transpose()?;
    let options = SolveOptions {
        radius: cfg.solver.radius,
        initial,
        override_conditions: inv.override_conditions,
    };
    let sol = solve(&problem, cfg.solver.method, &iteration, &options)?;

    let mut report = Report::new();
    report.push("command", "solve");
    report.push("method", sol.method.name());
    push_convergence(&mut report, &sol.report);
    if let Some(r) = sol.radius {
        report.push("radius", r);
    }
    push_conditions(&mut report, &sol.conditions);
    for (i, w) in sol.warnings.iter().enumerate() {
        report.push(format!("solve_warnings.{i}"), w.as_str());
    }
    report.push_series(
        "solution",
        vec![
            ("x", problem.grid().nodes().to_vec()),
            ("u", sol.u.coords().to_vec()),
        ],
    );
    report.push_series("history", vec![("residual", sol.report.residual_history.clone())]);
    Ok(Outcome {
        status: converged_status(&sol.report),
        report,
    })
}

pub const VI_SCENARIOS: [&str; 3] = ["rotation", "identity", "constant-box"];
pub const KKM_SCENARIOS: [&str; 3] = ["canonical", "threshold-negative", "p-mapping-rotation"];

fn unknown_scenario(name: &str) -> Error {
    Error::InvalidConfig(format!(
        "problem.scenario: unknown scenario `{name}`; expected one of {} or {}",
        VI_SCENARIOS.join(", "),
        KKM_SCENARIOS.join(", ")
    ))
}

fn vi_scenario(cfg: &RunConfig) -> Result<(String, ViProblem, Element)> {
    let name = cfg.problem.scenario.clone().unwrap_or_else(|| "rotation".into());
    let ball = || ConvexSet::ball(Element::euclidean(vec![0.0, 0.0]), 1.0);
    let (problem, default_x0) = match name.as_str() {
        "rotation" => {
            let angle = cfg.problem.angle.unwrap_or(PI / 2.0);
            let l = ResidualOperator::new(OperatorSpec::rotation(angle));
            (ViProblem::from_residual(l, ball()?), vec![0.5, 0.5])
        }
        "identity" => {
            let l = ResidualOperator::new(OperatorSpec::zero(2));
            (ViProblem::from_residual(l, ball()?), vec![0.7, 0.0])
        }
        "constant-box" => {
            // A(x) = x - (1, 1), so L(x) = (1, 1).
            let a = OperatorSpec::affine(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[-1.0, -1.0])?;
            let l = ResidualOperator::new(a);
            (ViProblem::from_residual(l, ConvexSet::cube(2, 0.0, 1.0)?), vec![0.6, 0.9])
        }
        other if KKM_SCENARIOS.contains(&other) => {
            return Err(Error::InvalidConfig(format!(
                "problem.scenario: `{other}` is a kkm scenario"
            )))
        }
        other => return Err(unknown_scenario(other)),
    };
    let x0 = cfg.solver.x0.clone().unwrap_or(default_x0);
    if x0.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "solver.x0: expected 2 coordinates, got {}",
            x0.len()
        )));
    }
    Ok((name, problem, Element::euclidean(x0)))
}

pub fn run_vi(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let (name, problem, x0) = vi_scenario(cfg)?;
    let iteration = cfg.solver.iteration(1e-10)?;
    let (x, rep) = solve_vi_extragradient(&problem, &x0, &iteration)?;
    let minty = minty_residuals(&problem, &x, cfg.solver.samples.unwrap_or(500), seed)?;

    let mut report = Report::new();
    report.push("command", "vi");
    report.push("scenario", name);
    push_convergence(&mut report, &rep);
    report.push("step", problem.step());
    for (i, c) in x.coords().iter().enumerate() {
        report.push(format!("solution.x.{i}"), *c);
    }
    report.push("minty.primal", minty.primal);
    report.push("minty.dual", minty.dual);
    report.push("minty.worst_gap", minty.worst_gap);
    report.push("minty.samples", minty.samples);
    report.push("minty.seed", minty.seed);
    report.push_series("history", vec![("gap", rep.residual_history.clone())]);
    Ok(Outcome {
        status: converged_status(&rep),
        report,
    })
}

fn kkm_scenario(cfg: &RunConfig) -> Result<(String, SetValuedMap)> {
    let name = cfg.problem.scenario.clone().unwrap_or_else(|| "canonical".into());
    let map = match name.as_str() {
        "canonical" => canonical_cover(cfg.problem.dim.unwrap_or(2))?,
        "threshold-negative" => threshold_cover(cfg.problem.dim.unwrap_or(1), cfg.problem.threshold.unwrap_or(0.99))?,
        "p-mapping-rotation" => {
            let angle = cfg.problem.angle.unwrap_or(PI / 2.0);
            let l = ResidualOperator::new(OperatorSpec::rotation(angle));
            build_p_mapping(l, circle_anchors(cfg.problem.anchors.unwrap_or(4)), 0.0)?
        }
        other if VI_SCENARIOS.contains(&other) => {
            return Err(Error::InvalidConfig(format!(
                "problem.scenario: `{other}` is a vi scenario"
            )))
        }
        other => return Err(unknown_scenario(other)),
    };
    Ok((name, map))
}

/// Exit 0 when the covering holds and an intersection point is found,
/// 2 when the covering fails, 3 when no grid point meets the tolerance.
pub fn run_kkm(cfg: &RunConfig) -> Result<Outcome> {
    let (name, map) = kkm_scenario(cfg)?;
    let tol = cfg.solver.tol.unwrap_or(1e-9);
    if tol < 0.0 {
        return Err(Error::InvalidConfig(format!("solver.tol: must be non-negative, got {tol}")));
    }
    let rep = verify_kkm(&map, cfg.grid.m, tol)?;

    let mut report = Report::new();
    report.push("command", "kkm");
    report.push("scenario", name);
    report.push("anchors", map.anchors().len());
    report.push("resolution", cfg.grid.m);
    report.push("tol", tol);
    report.push("covering_ok", rep.covering_ok);
    report.push("points_checked", rep.points_checked);
    report.push("violations.count", rep.violations.len());
    for (i, v) in rep.violations.iter().take(MAX_LISTED_VIOLATIONS).enumerate() {
        let subset = v.subset.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        report.push(format!("violations.{i}.subset"), subset);
        for (j, c) in v.point.coords().iter().enumerate() {
            report.push(format!("violations.{i}.point.{j}"), *c);
        }
    }
    let mut status = if rep.covering_ok {
        ExitStatus::Success
    } else {
        ExitStatus::ConditionsViolated
    };
    if let Some(w) = &rep.intersection_witness {
        report.push("intersection.found", w.found);
        report.push("intersection.max_defect", w.max_defect);
        for (j, c) in w.point.coords().iter().enumerate() {
            report.push(format!("intersection.point.{j}"), *c);
        }
        if rep.covering_ok && !w.found {
            status = ExitStatus::NonConvergence;
        }
    }
    Ok(Outcome { status, report })
}

pub fn run_selftest() -> Outcome {
    let results = acceptance::run_all();
    let mut report = Report::new();
    report.push("command", "selftest");
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        report.push(format!("criteria.{}", r.id), format!("{verdict} {}: {}", r.name, r.detail));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    report.push("passed", passed);
    report.push("total", results.len());
    let status = if passed == results.len() {
        ExitStatus::Success
    } else {
        ExitStatus::NonConvergence
    };
    Outcome { status, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_ini_str(text, Path::new(".")).unwrap()
    }

    const XY: &str = "[problem]\na = 0\nb = 1\nkernel = x*y\nf = x\n";

    #[test]
    fn check_examples() {
        let out = run_check(&cfg(&format!("{XY}lambda = 1\n"))).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        assert_eq!(out.report.get("conditions.l2_ok"), Some(&Value::Bool(true)));
        assert_eq!(out.report.get("conditions.banach_ok"), Some(&Value::Bool(false)));
        match out.report.get("conditions.r_min") {
            Some(Value::Real(r)) => assert!((r - 0.8660254037844386).abs() < 1e-6),
            other => panic!("r_min missing: {other:?}"),
        }

        let out = run_check(&cfg(&format!("{XY}lambda = 4\n"))).unwrap();
        assert_eq!(out.status, ExitStatus::ConditionsViolated);

        let err = run_check(&cfg(XY)).unwrap_err();
        assert_eq!(ExitStatus::for_error(&err), ExitStatus::ConfigError);
        assert!(err.to_string().contains("problem.lambda"));
    }

    #[test]
    fn solve_examples() {
        let out = run_solve(&cfg(&format!("{XY}lambda = 1\n")), &Invocation::default()).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        let kv = out.report.keyvalue();
        let get = |key: &str| -> Vec<f64> {
            kv.lines()
                .filter(|l| l.starts_with(key))
                .map(|l| l.split_once(" = ").unwrap().1.parse().unwrap())
                .collect()
        };
        let (x, u) = (get("solution.x."), get("solution.u."));
        assert_eq!(x.len(), 64);
        for (x, u) in x.iter().zip(&u) {
            assert!((u - 1.5 * x).abs() < 1e-8);
        }

        let zero = "[problem]\na = 0\nb = 1\nlambda = 1\nkernel = 1\nf = 0\n[solver]\nmethod = km\n";
        let err = run_solve(&cfg(zero), &Invocation::default()).unwrap_err();
        assert_eq!(ExitStatus::for_error(&err), ExitStatus::ConfigError);

        let err = run_solve(&cfg(&format!("{XY}lambda = 4\n")), &Invocation::default()).unwrap_err();
        assert_eq!(ExitStatus::for_error(&err), ExitStatus::ConditionsViolated);

        let capped = format!("{XY}lambda = 1\n[solver]\nmax_iters = 2\n");
        let out = run_solve(&cfg(&capped), &Invocation::default()).unwrap();
        assert_eq!(out.status, ExitStatus::NonConvergence);
    }

    #[test]
    fn vi_scenarios() {
        let out = run_solve(&cfg("[problem]\nscenario = rotation\n"), &Invocation::default()).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        for key in ["solution.x.0", "solution.x.1"] {
            match out.report.get(key) {
                Some(Value::Real(v)) => assert!(v.abs() < 1e-6),
                other => panic!("{key}: {other:?}"),
            }
        }
        let out = run_vi(&cfg("[problem]\nscenario = constant-box\n"), 1).unwrap();
        assert_eq!(out.report.get("solution.x.0"), Some(&Value::Real(0.0)));
        assert!(run_vi(&cfg("[problem]\nscenario = canonical\n"), 0).is_err());
        assert!(run_vi(&cfg("[solver]\nx0 = 1, 2, 3\n"), 0).is_err());
    }

    #[test]
    fn kkm_scenarios() {
        let out = run_kkm(&cfg("[problem]\nscenario = canonical\n[grid]\nm = 30\n")).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        let out = run_kkm(&cfg("[problem]\nscenario = threshold-negative\n")).unwrap();
        assert_eq!(out.status, ExitStatus::ConditionsViolated);
        assert_eq!(out.report.get("intersection.found"), Some(&Value::Bool(false)));
        let out = run_kkm(&cfg("[problem]\nscenario = p-mapping-rotation\n[solver]\ntol = 1e-8\n")).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        assert!(run_kkm(&cfg("[problem]\nscenario = nope\n")).is_err());
    }

    #[test]
    fn node_value_kernel_matches_expression() {
        let dir = tempfile::tempdir().unwrap();
        let grid = QuadratureGrid::new(0.0, 1.0, 8, crate::space::Rule::GaussLegendre).unwrap();
        let nodes = grid.nodes();
        let kernel: Vec<String> = nodes
            .iter()
            .flat_map(|x| nodes.iter().map(move |y| format!("{:?}", x * y)))
            .collect();
        std::fs::write(dir.path().join("k.txt"), kernel.join("\n")).unwrap();
        std::fs::write(
            dir.path().join("f.txt"),
            nodes.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join("\n"),
        )
        .unwrap();
        let text = "[problem]\na = 0\nb = 1\nlambda = 1\nkernel_file = k.txt\nf_file = f.txt\n[grid]\nn = 8\n";
        let from_files = RunConfig::from_ini_str(text, dir.path()).unwrap();
        let out = run_solve(&from_files, &Invocation::default()).unwrap();
        assert_eq!(out.status, ExitStatus::Success);
        let bad = RunConfig::from_ini_str(&text.replace("n = 8", "n = 9"), dir.path()).unwrap();
        assert!(run_solve(&bad, &Invocation::default()).is_err());
    }
}

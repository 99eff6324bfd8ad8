//! Linear Fredholm integral equations of the second kind,
//!
//! ```text
//! u(x) = lambda * integral_a^b K(x, y) u(y) dy + f(x),   a <= x <= b,
//! ```
//!
//! discretized by the Nystrom method on a quadrature grid. Two sufficient
//! conditions are checked:
//!
//! * sup-norm: `(b - a) |lambda| Gamma < 1` with `Gamma = max |K|`, under
//!   which the equation has a unique continuous solution;
//! * L2: `|lambda| ||K||_L2 <= 1` if `f == 0`, `< 1` otherwise, with
//!   `||K||_L2 = (integral integral K^2)^(1/2)`. The integral operator is
//!   then non-expansive in L2 and maps the ball of radius
//!   `r >= ||f|| / (1 - |lambda| ||K||)` into itself.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fixpoint::{krasnoselskii_mann, picard, ConvergenceReport, IterationConfig};
use crate::operators::OperatorSpec;
use crate::space::{norm, Element, QuadratureGrid, Rule, Space};

/// `f` counts as identically zero when its L2 norm is at most this.
pub const F_ZERO_TOL: f64 = 1e-14;
/// Relative slack on the `|lambda| ||K|| <= 1` equality branch, which
/// quadrature round-off would otherwise decide arbitrarily.
pub const EQUALITY_SLACK: f64 = 1e-12;
/// Width of the band around 1 in which the sup-norm verdict is flagged.
pub const BANACH_WARN_BAND: f64 = 1e-6;
/// Condition number above which the direct solve is refused.
pub const MAX_CONDITION: f64 = 1e12;
pub const DEFAULT_GRID_NODES: usize = 64;

type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type SourceFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Kernel {
    Expression(Expr),
    /// Values `K(x_i, x_j)` at the tensor grid of quadrature nodes.
    GridSamples(DMatrix<f64>),
    Function(Arc<KernelFn>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Expression(e) => write!(f, "Kernel::Expression({e})"),
            Kernel::GridSamples(m) => write!(f, "Kernel::GridSamples({}x{})", m.nrows(), m.ncols()),
            Kernel::Function(_) => write!(f, "Kernel::Function(..)"),
        }
    }
}

impl Kernel {
    pub fn function(k: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::Function(Arc::new(k))
    }

    /// `c * K`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Kernel::GridSamples(m) => Kernel::GridSamples(m * c),
            other => {
                let k = other.clone();
                Kernel::function(move |x, y| c * k.eval(x, y).unwrap_or(f64::NAN))
            }
        }
    }

    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Kernel::Expression(e) => e.eval(x, y).map_err(|err| Error::Evaluation(format!("K({x}, {y}): {err}"))),
            Kernel::Function(k) => Ok(k(x, y)),
            Kernel::GridSamples(_) => Err(Error::Evaluation("sampled kernel has no off-grid values".into())),
        }
    }

    /// `K(x_i, x_j)` on the grid nodes.
    pub fn matrix(&self, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
        let n = grid.len();
        let m = match self {
            Kernel::GridSamples(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Dimension {
                        expected: format!("{n}x{n} kernel samples"),
                        got: format!("{}x{}", m.nrows(), m.ncols()),
                    });
                }
                m.clone()
            }
            _ => {
                let nodes = grid.nodes();
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = self.eval(nodes[i], nodes[j])?;
                    }
                }
                m
            }
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation("kernel has non-finite values on the grid".into()));
        }
        Ok(m)
    }
}

#[derive(Clone)]
pub enum Source {
    /// `f == 0` on any grid.
    Zero,
    Expression(Expr),
    NodeValues(Vec<f64>),
    Function(Arc<SourceFn>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Source::Zero"),
            Source::Expression(e) => write!(f, "Source::Expression({e})"),
            Source::NodeValues(v) => write!(f, "Source::NodeValues({} values)", v.len()),
            Source::Function(_) => write!(f, "Source::Function(..)"),
        }
    }
}

impl Source {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Function(Arc::new(f))
    }

    pub fn zero() -> Self {
        Source::Zero
    }

    pub fn values(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Source::Zero => vec![0.0; grid.len()],
            Source::NodeValues(v) => {
                if v.len() != grid.len() {
                    return Err(Error::Dimension {
                        expected: format!("{} source values", grid.len()),
                        got: v.len().to_string(),
                    });
                }
                v.clone()
            }
            Source::Expression(e) => grid
                .nodes()
                .iter()
                .map(|&x| e.eval(x, 0.0).map_err(|err| Error::Evaluation(format!("f({x}): {err}"))))
                .collect::<Result<_>>()?,
            Source::Function(f) => grid.nodes().iter().map(|&x| f(x)).collect(),
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evaluation("source has non-finite values on the grid".into()));
        }
        Ok(v)
    }
}

/// The data `(a, b, lambda, K, f)` with the quadrature grid used to
/// discretize it.
#[derive(Debug, Clone)]
pub struct IntegralProblem {
    lambda: f64,
    kernel: Kernel,
    source: Source,
    grid: Arc<QuadratureGrid>,
}

impl IntegralProblem {
    pub fn new(lambda: f64, kernel: Kernel, source: Source, grid: QuadratureGrid) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite, got {lambda}")));
        }
        let p = Self {
            lambda,
            kernel,
            source,
            grid: Arc::new(grid),
        };
        p.kernel.matrix(&p.grid)?;
        p.source.values(&p.grid)?;
        Ok(p)
    }

    /// Problem on the default 64-node Gauss-Legendre grid over `[a, b]`.
    pub fn on_interval(a: f64, b: f64, lambda: f64, kernel: Kernel, source: Source) -> Result<Self> {
        Self::new(
            lambda,
            kernel,
            source,
            QuadratureGrid::new(a, b, DEFAULT_GRID_NODES, Rule::GaussLegendre)?,
        )
    }

    pub fn a(&self) -> f64 {
        self.grid.a()
    }

    pub fn b(&self) -> f64 {
        self.grid.b()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        Space::L2(Arc::clone(&self.grid))
    }

    pub fn source_element(&self) -> Result<Element> {
        Element::new(self.space(), self.source.values(&self.grid)?)
    }

    /// Same problem with `lambda` replaced.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    /// Same problem with `f` replaced by `c * f`.
    pub fn with_scaled_source(&self, c: f64) -> Result<Self> {
        let values = self.source.values(&self.grid)?.iter().map(|v| c * v).collect();
        Ok(Self {
            source: Source::NodeValues(values),
            ..self.clone()
        })
    }

    /// The assembled Nystrom operator `u -> lambda W K u + f`.
    pub fn nystrom(&self) -> Result<NystromOperator> {
        let k = self.kernel.matrix(&self.grid)?;
        let w = self.grid.weights();
        let weighted = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| self.lambda * w[j] * k[(i, j)]);
        Ok(NystromOperator {
            grid: Arc::clone(&self.grid),
            weighted,
            source: DVector::from_vec(self.source.values(&self.grid)?),
        })
    }
}

/// `(A u)_i = sum_j lambda w_j K(x_i, x_j) u_j + f(x_i)`.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    grid: Arc<QuadratureGrid>,
    weighted: DMatrix<f64>,
    source: DVector<f64>,
}

impl NystromOperator {
    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    /// The matrix `lambda W K`.
    pub fn weighted_matrix(&self) -> &DMatrix<f64> {
        &self.weighted
    }

    pub fn apply(&self, u: &Element) -> Result<Element> {
        if u.dim() != self.grid.len() {
            return Err(Error::Dimension {
                expected: format!("{} node values", self.grid.len()),
                got: u.dim().to_string(),
            });
        }
        let v = &self.weighted * DVector::from_column_slice(u.coords()) + &self.source;
        Ok(u.with_coords(v.iter().cloned().collect()))
    }
}

/// Largest `|K|` over the tensor grid of nodes, extended by the interval
/// endpoints when the kernel can be evaluated there. This is a lower bound
/// on the true supremum.
pub fn gamma_sup(kernel: &Kernel, grid: &QuadratureGrid) -> Result<f64> {
    let on_nodes = kernel.matrix(grid)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if matches!(kernel, Kernel::GridSamples(_)) {
        return Ok(on_nodes);
    }
    let mut points = vec![grid.a()];
    points.extend_from_slice(grid.nodes());
    points.push(grid.b());
    let mut gamma = on_nodes;
    for &x in &points {
        for &y in &points {
            let v = kernel.eval(x, y)?;
            if !v.is_finite() {
                return Err(Error::Evaluation(format!("K({x}, {y}) is not finite")));
            }
            gamma = gamma.max(v.abs());
        }
    }
    Ok(gamma)
}

/// `(sum_i sum_j w_i w_j K(x_i, x_j)^2)^(1/2)`.
pub fn kernel_l2_norm(kernel: &Kernel, grid: &QuadratureGrid) -> Result<f64> {
    let k = kernel.matrix(grid)?;
    let w = grid.weights();
    let mut total = 0.0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            total += w[i] * w[j] * k[(i, j)] * k[(i, j)];
        }
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub gamma: f64,
    pub kernel_l2: f64,
    /// `(b - a) |lambda| Gamma`.
    pub banach_product: f64,
    /// `|lambda| ||K||_L2`.
    pub l2_product: f64,
    pub banach_ok: bool,
    pub l2_ok: bool,
    pub f_norm: f64,
    pub f_zero: bool,
    pub r_min: Option<f64>,
    pub warnings: Vec<String>,
}

impl ConditionReport {
    pub fn any_ok(&self) -> bool {
        self.banach_ok || self.l2_ok
    }
}

pub fn check_conditions(p: &IntegralProblem) -> Result<ConditionReport> {
    let gamma = gamma_sup(&p.kernel, &p.grid)?;
    let kernel_l2 = kernel_l2_norm(&p.kernel, &p.grid)?;
    let f_norm = norm(&p.source_element()?);
    let f_zero = f_norm <= F_ZERO_TOL;
    let banach_product = (p.b() - p.a()) * p.lambda.abs() * gamma;
    let l2_product = p.lambda.abs() * kernel_l2;
    let banach_ok = banach_product < 1.0;
    let l2_ok = if f_zero {
        l2_product <= 1.0 + EQUALITY_SLACK
    } else {
        l2_product < 1.0
    };
    let r_min = (!f_zero && l2_product < 1.0).then(|| f_norm / (1.0 - l2_product));

    let mut warnings = vec![
        "l2 condition uses |lambda| * ||K||_L2, the square root of the double integral of K^2".to_string(),
    ];
    if (banach_product - 1.0).abs() <= BANACH_WARN_BAND {
        warnings.push(format!(
            "sup-norm product {banach_product} is within {BANACH_WARN_BAND:e} of 1; gamma is a grid lower bound"
        ));
    }
    Ok(ConditionReport {
        gamma,
        kernel_l2,
        banach_product,
        l2_product,
        banach_ok,
        l2_ok,
        f_norm,
        f_zero,
        r_min,
        warnings,
    })
}

/// Smallest radius `||f|| / (1 - |lambda| ||K||)` of a centered L2 ball
/// mapped into itself.
pub fn min_radius(p: &IntegralProblem) -> Result<f64> {
    let kernel_l2 = kernel_l2_norm(&p.kernel, &p.grid)?;
    let f_norm = norm(&p.source_element()?);
    let product = p.lambda.abs() * kernel_l2;
    if f_norm <= F_ZERO_TOL {
        return Err(Error::NotApplicable("f is identically zero; any radius works".into()));
    }
    if product >= 1.0 {
        return Err(Error::NotApplicable(format!("|lambda| * ||K|| = {product} is not below 1")));
    }
    Ok(f_norm / (1.0 - product))
}

pub fn apply_operator(p: &IntegralProblem, u: &Element) -> Result<Element> {
    if u.space() != &p.space() {
        return Err(Error::Dimension {
            expected: p.space().to_string(),
            got: u.space().to_string(),
        });
    }
    p.nystrom()?.apply(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Picard,
    KrasnoselskiiMann,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Picard => "picard",
            Method::KrasnoselskiiMann => "km",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Method::Auto),
            "picard" => Ok(Method::Picard),
            "km" | "krasnoselskii-mann" => Ok(Method::KrasnoselskiiMann),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Ball radius for K-M; required when `f == 0`.
    pub radius: Option<f64>,
    /// Starting function; zero when absent.
    pub initial: Option<Element>,
    /// Attempt a solve even when neither condition holds.
    pub override_conditions: bool,
}

#[derive(Debug, Clone)]
pub struct FredholmSolution {
    pub u: Element,
    pub report: ConvergenceReport,
    pub conditions: ConditionReport,
    pub method: Method,
    pub radius: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn solve(
    p: &IntegralProblem,
    method: Method,
    cfg: &IterationConfig,
    options: &SolveOptions,
) -> Result<FredholmSolution> {
    let conditions = check_conditions(p)?;
    let mut warnings = Vec::new();
    if !conditions.any_ok() {
        if !options.override_conditions {
            return Err(Error::ConditionsViolated(format!(
                "sup-norm product {} >= 1 and |lambda| * ||K|| = {} fails the L2 condition",
                conditions.banach_product, conditions.l2_product
            )));
        }
        warnings.push("neither existence condition holds; result is best-effort".to_string());
    }
    let resolved = match method {
        Method::Auto if conditions.l2_product < 1.0 || conditions.banach_ok => Method::Picard,
        Method::Auto => Method::KrasnoselskiiMann,
        m => m,
    };
    let space = p.space();
    let u0 = match &options.initial {
        Some(u) if u.space() != &space => {
            return Err(Error::Dimension {
                expected: space.to_string(),
                got: u.space().to_string(),
            })
        }
        Some(u) => u.clone(),
        None => Element::zeros(&space),
    };
    let mut operator = OperatorSpec::fredholm(p.nystrom()?);
    if conditions.l2_product <= 1.0 {
        operator = operator.with_lipschitz(conditions.l2_product)?;
    }

    let (report, radius) = match resolved {
        Method::Picard => (picard(&operator, &u0, cfg)?, None),
        _ => {
            let r = match (options.radius, conditions.r_min) {
                (Some(r), _) => r,
                (None, Some(r)) => r,
                (None, None) => {
                    return Err(Error::NotApplicable(
                        "a ball radius is required: f is identically zero or |lambda| * ||K|| >= 1".into(),
                    ))
                }
            };
            if let Some(r_min) = conditions.r_min {
                if r < r_min {
                    warnings.push(format!("radius {r} is below r_min = {r_min}; the ball may not be invariant"));
                }
            }
            let ball = ConvexSet::centered_ball(&space, r)?;
            let start = ball.project(&u0)?;
            if start != u0 {
                warnings.push("initial guess projected onto the ball".to_string());
            }
            (krasnoselskii_mann(&operator, &ball, &start, cfg)?, Some(r))
        }
    };
    Ok(FredholmSolution {
        u: report.final_point.clone(),
        report,
        conditions,
        method: resolved,
        radius,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub u: Element,
    pub condition_number: f64,
    pub relative_residual: f64,
}

/// Solves `(I - lambda W K) u = f` by LU factorization.
pub fn direct_solve_oracle(p: &IntegralProblem) -> Result<OracleSolution> {
    let nystrom = p.nystrom()?;
    let n = p.grid.len();
    let system = DMatrix::identity(n, n) - nystrom.weighted_matrix();
    let singular_values = system.clone().singular_values();
    let s_max = singular_values.max();
    let s_min = singular_values.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::OracleUnavailable { condition });
    }
    let f = &nystrom.source;
    let u = system
        .clone()
        .lu()
        .solve(f)
        .ok_or(Error::OracleUnavailable { condition })?;
    let residual = (&system * &u - f).norm();
    let relative_residual = residual / f.norm().max(f64::MIN_POSITIVE);
    Ok(OracleSolution {
        u: Element::new(p.space(), u.iter().cloned().collect())?,
        condition_number: condition,
        relative_residual: if f.norm() == 0.0 { residual } else { relative_residual },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::space::distance;

    fn expr_kernel(s: &str) -> Kernel {
        Kernel::Expression(parse_expression(s).unwrap())
    }

    fn expr_source(s: &str) -> Source {
        Source::Expression(parse_expression(s).unwrap())
    }

    fn xy_problem(lambda: f64) -> IntegralProblem {
        IntegralProblem::on_interval(0.0, 1.0, lambda, expr_kernel("x*y"), expr_source("x")).unwrap()
    }

    fn mean_problem() -> IntegralProblem {
        IntegralProblem::on_interval(0.0, 1.0, 1.0, expr_kernel("1"), Source::zero()).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let trap = QuadratureGrid::new(0.0, 1.0, 11, Rule::Trapezoid).unwrap();
        assert_eq!(gamma_sup(&expr_kernel("x*y"), &trap).unwrap(), 1.0);
        let gauss = QuadratureGrid::new(0.0, 1.0, 8, Rule::GaussLegendre).unwrap();
        assert_eq!(gamma_sup(&expr_kernel("x*y"), &gauss).unwrap(), 1.0);
        assert_eq!(gamma_sup(&expr_kernel("-2.5"), &gauss).unwrap(), 2.5);
        let pi = std::f64::consts::PI;
        let grid = QuadratureGrid::new(0.0, pi, 101, Rule::Trapezoid).unwrap();
        assert!((gamma_sup(&expr_kernel("sin(x)"), &grid).unwrap() - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn kernel_norm_examples() {
        let gauss = QuadratureGrid::new(0.0, 1.0, 8, Rule::GaussLegendre).unwrap();
        assert!((kernel_l2_norm(&expr_kernel("x*y"), &gauss).unwrap() - 1.0 / 3.0).abs() <= 1e-12);
        assert!((kernel_l2_norm(&expr_kernel("1"), &gauss).unwrap() - 1.0).abs() <= 1e-14);
        assert_eq!(kernel_l2_norm(&expr_kernel("0"), &gauss).unwrap(), 0.0);
    }

    #[test]
    fn conditions_examples() {
        let c = check_conditions(&xy_problem(1.0)).unwrap();
        assert!(!c.banach_ok);
        assert!(c.l2_ok);
        assert!((c.r_min.unwrap() - 3f64.sqrt() / 2.0).abs() <= 1e-12);
        assert!(c.warnings.len() >= 2, "near-threshold warning expected");

        let c = check_conditions(&xy_problem(0.0)).unwrap();
        assert!(c.banach_ok && c.l2_ok);

        let c = check_conditions(&mean_problem()).unwrap();
        assert!(c.f_zero);
        assert!(c.l2_ok);
        assert!(c.r_min.is_none());
    }

    #[test]
    fn min_radius_behaviour() {
        let p = xy_problem(1.0);
        let r = min_radius(&p).unwrap();
        assert!((r - 0.8660254037844386).abs() <= 1e-12);
        let r2 = min_radius(&p.with_scaled_source(2.0).unwrap()).unwrap();
        assert!((r2 - 2.0 * r).abs() <= 1e-12);
        let f_norm = norm(&p.source_element().unwrap());
        let r_small = min_radius(&p.with_lambda(1e-9)).unwrap();
        assert!((r_small - f_norm).abs() <= 1e-9);
        assert!(matches!(min_radius(&mean_problem()), Err(Error::NotApplicable(_))));
        assert!(matches!(min_radius(&xy_problem(4.0)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn apply_examples() {
        let p = xy_problem(0.0);
        let u = Element::from_fn(p.grid(), |x| x * x);
        assert_eq!(apply_operator(&p, &u).unwrap(), p.source_element().unwrap());
        let p = mean_problem();
        let u = Element::from_fn(p.grid(), |x| x);
        for v in apply_operator(&p, &u).unwrap().coords() {
            assert!((v - 0.5).abs() <= 1e-14);
        }
        let p = xy_problem(0.7);
        let zero = Element::zeros(&p.space());
        assert_eq!(apply_operator(&p, &zero).unwrap(), p.source_element().unwrap());
        assert!(apply_operator(&p, &Element::euclidean(vec![1.0])).is_err());
    }

    #[test]
    fn solve_examples() {
        let cfg = IterationConfig::default().with_tol(1e-12);
        for (lambda, c) in [(0.5, 1.2), (1.0, 1.5)] {
            let p = xy_problem(lambda);
            let sol = solve(&p, Method::Auto, &cfg, &SolveOptions::default()).unwrap();
            assert_eq!(sol.method, Method::Picard);
            assert!(sol.report.converged());
            let exact = Element::from_fn(p.grid(), |x| c * x);
            assert!(distance(&sol.u, &exact) <= 1e-8);
        }

        let p = mean_problem();
        let opts = SolveOptions {
            radius: Some(2.0),
            initial: Some(Element::from_fn(p.grid(), |x| x)),
            override_conditions: false,
        };
        let sol = solve(&p, Method::KrasnoselskiiMann, &cfg.with_tol(1e-8), &opts).unwrap();
        assert!(sol.report.converged());
        let half = Element::from_fn(p.grid(), |_| 0.5);
        assert!(distance(&sol.u, &half) <= 1e-8 + 1e-12);
        assert!(norm(&sol.u) <= 2.0 + 1e-9);

        let err = solve(&p, Method::KrasnoselskiiMann, &cfg, &SolveOptions::default());
        assert!(matches!(err, Err(Error::NotApplicable(_))));
        let err = solve(&xy_problem(4.0), Method::Auto, &cfg, &SolveOptions::default());
        assert!(matches!(err, Err(Error::ConditionsViolated(_))));
    }

    #[test]
    fn oracle_examples() {
        let p = xy_problem(0.0);
        let o = direct_solve_oracle(&p).unwrap();
        assert_eq!(o.u, p.source_element().unwrap());
        let p = xy_problem(1.0);
        let o = direct_solve_oracle(&p).unwrap();
        for (u, x) in o.u.coords().iter().zip(p.grid().nodes()) {
            assert!((u - 1.5 * x).abs() <= 1e-10);
        }
        assert!(o.relative_residual <= 1e-12);
        assert!(matches!(direct_solve_oracle(&mean_problem()), Err(Error::OracleUnavailable { .. })));
    }

    #[test]
    fn sampled_kernel_matches_expression() {
        let grid = QuadratureGrid::new(0.0, 1.0, 16, Rule::GaussLegendre).unwrap();
        let k = expr_kernel("exp(-(x-y)^2)");
        let samples = Kernel::GridSamples(k.matrix(&grid).unwrap());
        assert_eq!(kernel_l2_norm(&k, &grid).unwrap(), kernel_l2_norm(&samples, &grid).unwrap());
        let bad = Kernel::GridSamples(DMatrix::zeros(3, 3));
        assert!(IntegralProblem::new(1.0, bad, Source::zero(), grid).is_err());
    }
}

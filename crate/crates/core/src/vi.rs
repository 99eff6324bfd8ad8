//! Monotone variational inequalities: find `x` in `M` with
//! `<L(x), x - y> <= 0` for every `y` in `M`.
//!
//! All residuals use the `<= 0` convention, so a solution has nonpositive
//! primal and dual residuals.

use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::fixpoint::{ConvergenceReport, IterationConfig, Status};
use crate::operators::ResidualOperator;
use crate::space::{distance, dot, Element};

/// Lipschitz bound of `L = I - A` for non-expansive `A`.
pub const DEFAULT_LIPSCHITZ: f64 = 2.0;
/// Step size as a fraction of `1 / lipschitz_bound`.
pub const STEP_FACTOR: f64 = 0.9;
const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ViProblem {
    residual: ResidualOperator,
    set: ConvexSet,
    lipschitz_bound: f64,
}

impl ViProblem {
    pub fn new(residual: ResidualOperator, set: ConvexSet, lipschitz_bound: f64) -> Result<Self> {
        if !(lipschitz_bound > 0.0 && lipschitz_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lipschitz_bound must be positive, got {lipschitz_bound}"
            )));
        }
        Ok(Self {
            residual,
            set,
            lipschitz_bound,
        })
    }

    /// Problem for `L = I - A` with the default bound 2.
    pub fn from_residual(residual: ResidualOperator, set: ConvexSet) -> Self {
        Self {
            residual,
            set,
            lipschitz_bound: DEFAULT_LIPSCHITZ,
        }
    }

    pub fn residual(&self) -> &ResidualOperator {
        &self.residual
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn step(&self) -> f64 {
        STEP_FACTOR / self.lipschitz_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MintyReport {
    /// `max_y <L(x), x - y>`.
    pub primal: f64,
    /// `max_y <L(y), x - y>`.
    pub dual: f64,
    /// `max_y (<L(y), x - y> - <L(x), x - y>)`; nonpositive for monotone `L`.
    pub worst_gap: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Extragradient method. The residual history records `|x_k - y_k|`, the
/// distance between the iterate and its predictor.
pub fn solve_vi_extragradient(
    p: &ViProblem,
    x0: &Element,
    cfg: &IterationConfig,
) -> Result<(Element, ConvergenceReport)> {
    cfg.validate()?;
    if !p.set.contains(x0, MEMBERSHIP_TOL)? {
        return Err(Error::Precondition("starting point lies outside the feasible set".into()));
    }
    let tau = p.step();
    let mut x = x0.clone();
    let mut history = Vec::new();
    for n in 1..=cfg.max_iters {
        let lx = p.residual.eval(&x)?;
        let y = p.set.project(&x.lincomb(1.0, &lx, -tau))?;
        let gap = distance(&x, &y);
        if cfg.record_history || history.is_empty() {
            history.push(gap);
        } else {
            history[0] = gap;
        }
        let status = if gap <= cfg.tol_residual {
            Some(Status::Converged)
        } else if n == cfg.max_iters {
            Some(Status::MaxIters)
        } else {
            None
        };
        if let Some(status) = status {
            let report = ConvergenceReport {
                final_point: x.clone(),
                iterations: n,
                residual_history: history,
                final_residual: gap,
                status,
                error_bound: None,
            };
            return Ok((x, report));
        }
        let ly = p.residual.eval(&y)?;
        x = p.set.project(&x.lincomb(1.0, &ly, -tau))?;
    }
    unreachable!("max_iters >= 1 always returns inside the loop")
}

/// Minty residuals over `n_samples` seeded points of `M` plus its closed-form
/// extreme points.
pub fn minty_residuals(p: &ViProblem, x_hat: &Element, n_samples: usize, seed: u64) -> Result<MintyReport> {
    let mut points = p.set.sample_points(n_samples, seed)?;
    points.extend(p.set.extreme_points());
    let mut report = minty_residuals_over(p, x_hat, &points)?;
    report.seed = seed;
    Ok(report)
}

/// Minty residuals over an explicit set of test points.
pub fn minty_residuals_over(p: &ViProblem, x_hat: &Element, points: &[Element]) -> Result<MintyReport> {
    if !p.set.contains(x_hat, MEMBERSHIP_TOL)? {
        return Err(Error::Precondition("candidate solution lies outside the feasible set".into()));
    }
    if points.is_empty() {
        return Err(Error::Sampling("no test points".into()));
    }
    let lx = p.residual.eval(x_hat)?;
    let mut primal = f64::NEG_INFINITY;
    let mut dual = f64::NEG_INFINITY;
    let mut worst_gap = f64::NEG_INFINITY;
    for y in points {
        let d = x_hat.sub(y);
        let pr = dot(&lx, &d);
        let du = dot(&p.residual.eval(y)?, &d);
        primal = primal.max(pr);
        dual = dual.max(du);
        worst_gap = worst_gap.max(du - pr);
    }
    Ok(MintyReport {
        primal,
        dual,
        worst_gap,
        samples: points.len(),
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorSpec;
    use crate::space::norm;
    use std::f64::consts::PI;

    fn e(v: &[f64]) -> Element {
        Element::euclidean(v.to_vec())
    }

    fn ball2() -> ConvexSet {
        ConvexSet::ball(e(&[0.0, 0.0]), 1.0).unwrap()
    }

    fn cfg() -> IterationConfig {
        IterationConfig::default().with_tol(1e-10)
    }

    #[test]
    fn identity_residual_goes_to_origin() {
        let p = ViProblem::from_residual(ResidualOperator::new(OperatorSpec::zero(2)), ball2());
        let (x, rep) = solve_vi_extragradient(&p, &e(&[0.7, 0.0]), &cfg()).unwrap();
        assert!(rep.converged());
        assert!(norm(&x) < 1e-9);
    }

    /// Vertex enumeration: the minimizer of <(1,1), y> over [0,1]^2.
    #[test]
    fn constant_field_on_box() {
        let cube = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        let best = cube
            .extreme_points()
            .into_iter()
            .min_by(|a, b| (a.coords()[0] + a.coords()[1]).total_cmp(&(b.coords()[0] + b.coords()[1])))
            .unwrap();
        // A(x) = x - (1, 1) makes L constant.
        let a = OperatorSpec::affine(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[-1.0, -1.0]).unwrap();
        let p = ViProblem::from_residual(ResidualOperator::new(a), cube);
        let (x, rep) = solve_vi_extragradient(&p, &e(&[0.6, 0.9]), &cfg()).unwrap();
        assert!(rep.converged());
        assert!(distance(&x, &best) < 1e-12);
    }

    #[test]
    fn rotation_residual() {
        let p = ViProblem::from_residual(ResidualOperator::new(OperatorSpec::rotation(PI / 2.0)), ball2());
        let (x, rep) = solve_vi_extragradient(&p, &e(&[0.5, 0.5]), &cfg()).unwrap();
        assert!(rep.converged());
        assert!(norm(&x) < 1e-6);
    }

    #[test]
    fn minty_examples() {
        let p = ViProblem::from_residual(ResidualOperator::new(OperatorSpec::zero(2)), ball2());
        let m = minty_residuals(&p, &e(&[0.0, 0.0]), 200, 3).unwrap();
        assert!(m.primal.abs() <= 1e-12);
        assert!(m.dual <= 0.0);
        assert!(m.worst_gap <= 1e-12);

        // max over the ball of <x, x - y> is |x|^2 + |x| at y = -x.
        let x = e(&[1.0, 0.0]);
        let mut pts = ball2().sample_points(200, 4).unwrap();
        pts.push(e(&[-1.0, 0.0]));
        let m = minty_residuals_over(&p, &x, &pts).unwrap();
        assert!((m.primal - 2.0).abs() <= 1e-12);
        assert!(m.dual <= m.primal + 1e-12);
    }

    #[test]
    fn outside_candidate_rejected() {
        let p = ViProblem::from_residual(ResidualOperator::new(OperatorSpec::zero(2)), ball2());
        assert!(minty_residuals(&p, &e(&[3.0, 0.0]), 10, 0).is_err());
        assert!(solve_vi_extragradient(&p, &e(&[3.0, 0.0]), &cfg()).is_err());
        assert!(ViProblem::new(ResidualOperator::new(OperatorSpec::zero(2)), ball2(), 0.0).is_err());
    }
}

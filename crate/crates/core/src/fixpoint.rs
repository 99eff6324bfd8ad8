//! Fixed-point solvers: Picard iteration for contractions and projected
//! Krasnoselskii-Mann averaging for non-expansive self-maps.

use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::{distance, Element};

/// Picard reports `Stalled` when the residual drops by less than
/// `STALL_DECREASE` over `STALL_WINDOW` iterations.
pub const STALL_WINDOW: usize = 50;
pub const STALL_DECREASE: f64 = 1e-15;
/// Tolerance for the starting point of K-M to count as inside the set.
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub alpha: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub record_history: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            max_iters: 10_000,
            tol_residual: 1e-10,
            record_history: true,
        }
    }
}

impl IterationConfig {
    pub fn new(alpha: f64, max_iters: usize, tol_residual: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            max_iters,
            tol_residual,
            record_history: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_residual = tol;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol_residual must be positive, got {}",
                self.tol_residual
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Stalled,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max-iters",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub final_point: Element,
    /// Number of residual evaluations performed.
    pub iterations: usize,
    /// Residuals `|x_n - A x_n|`; only the last one is kept when history
    /// recording is off.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub status: Status,
    /// A-posteriori bound `k/(1-k) |x_n - x_{n-1}|` on the distance of
    /// `final_point` to the fixed point, when a contraction constant is
    /// claimed.
    pub error_bound: Option<f64>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// `|x - A(x)|`.
pub fn residual(a: &OperatorSpec, x: &Element) -> Result<f64> {
    Ok(distance(x, &a.apply(x)?))
}

struct History {
    record: bool,
    values: Vec<f64>,
}

impl History {
    fn new(record: bool) -> Self {
        Self {
            record,
            values: Vec::new(),
        }
    }

    fn push(&mut self, r: f64) {
        if !self.record {
            self.values.clear();
        }
        self.values.push(r);
    }
}

/// Picard iteration `x_{n+1} = A(x_n)`.
pub fn picard(a: &OperatorSpec, x0: &Element, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let contraction = a.claimed_lipschitz().filter(|&k| k < 1.0);
    let mut x = x0.clone();
    let mut last_step: Option<f64> = None;
    let mut history = History::new(cfg.record_history);
    // Residuals kept for stall detection even when history is off.
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();

    for n in 1..=cfg.max_iters {
        let ax = a.apply(&x)?;
        let r = distance(&x, &ax);
        history.push(r);
        window.push_back(r);
        if window.len() > STALL_WINDOW + 1 {
            window.pop_front();
        }
        let error_bound = contraction.map(|k| match last_step {
            Some(step) => k / (1.0 - k) * step,
            None => r / (1.0 - k),
        });
        if r <= cfg.tol_residual {
            return Ok(finish(x, n, history, r, Status::Converged, error_bound));
        }
        if window.len() == STALL_WINDOW + 1 && window[0] - r < STALL_DECREASE {
            return Ok(finish(x, n, history, r, Status::Stalled, error_bound));
        }
        if n == cfg.max_iters {
            return Ok(finish(x, n, history, r, Status::MaxIters, error_bound));
        }
        last_step = Some(r);
        x = ax;
    }
    unreachable!("max_iters >= 1 always returns inside the loop")
}

/// Projected Krasnoselskii-Mann iteration
/// `x_{n+1} = P_M((1 - alpha) x_n + alpha A(x_n))`.
pub fn krasnoselskii_mann(
    a: &OperatorSpec,
    set: &ConvexSet,
    x0: &Element,
    cfg: &IterationConfig,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if !set.contains(x0, DOMAIN_TOL)? {
        return Err(Error::Precondition("starting point lies outside the feasible set".into()));
    }
    let mut x = x0.clone();
    let mut history = History::new(cfg.record_history);
    for n in 1..=cfg.max_iters {
        let ax = a.apply(&x)?;
        let r = distance(&x, &ax);
        history.push(r);
        if r <= cfg.tol_residual {
            return Ok(finish(x, n, history, r, Status::Converged, None));
        }
        if n == cfg.max_iters {
            return Ok(finish(x, n, history, r, Status::MaxIters, None));
        }
        x = set.project(&x.lincomb(1.0 - cfg.alpha, &ax, cfg.alpha))?;
    }
    unreachable!("max_iters >= 1 always returns inside the loop")
}

fn finish(
    x: Element,
    iterations: usize,
    history: History,
    r: f64,
    status: Status,
    error_bound: Option<f64>,
) -> ConvergenceReport {
    ConvergenceReport {
        final_point: x,
        iterations,
        residual_history: history.values,
        final_residual: r,
        status,
        error_bound,
    }
}

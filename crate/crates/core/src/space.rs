//! Finite-dimensional inner-product spaces.
//!
//! Two realizations are provided: plain Euclidean `R^n` and `L^2[a, b]`
//! discretized by a quadrature rule. In the discretized case a function is
//! represented by its values at the quadrature nodes and every inner product
//! is weighted by the rule, so `<u, v> = sum_i w_i u_i v_i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Newton tolerance for Legendre roots.
const LEGENDRE_NEWTON_TOL: f64 = 1e-15;
const LEGENDRE_NEWTON_MAX_ITERS: usize = 100;
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Trapezoid => "trapezoid",
            Rule::GaussLegendre => "gauss-legendre",
        }
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trapezoid" | "composite-trapezoid" => Ok(Rule::Trapezoid),
            "gauss-legendre" | "gauss" | "gauss_legendre" => Ok(Rule::GaussLegendre),
            other => Err(Error::InvalidGrid(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

/// Quadrature nodes and positive weights on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: Rule,
}

impl QuadratureGrid {
    /// Builds an `n`-point rule on `[a, b]`.
    ///
    /// The trapezoid rule uses equispaced nodes including both endpoints;
    /// the Gauss-Legendre rule is computed on `[-1, 1]` and mapped affinely.
    pub fn new(a: f64, b: f64, n: usize, rule: Rule) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need finite a < b, got a={a}, b={b}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        let (nodes, weights) = match rule {
            Rule::Trapezoid => trapezoid(a, b, n),
            Rule::GaussLegendre => {
                let (x, w) = gauss_legendre_reference(n)?;
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let nodes = x.iter().map(|&t| (mid + half * t).clamp(a, b)).collect();
                let weights = w.iter().map(|&wi| half * wi).collect();
                (nodes, weights)
            }
        };
        let grid = Self {
            a,
            b,
            nodes,
            weights,
            rule,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.weights.len() || self.nodes.len() < 2 {
            return Err(Error::InvalidGrid("node/weight length mismatch".into()));
        }
        if self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("nodes not strictly increasing".into()));
        }
        if self.nodes.iter().any(|&x| x < self.a || x > self.b) {
            return Err(Error::InvalidGrid("node outside [a, b]".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidGrid("non-positive weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - (self.b - self.a)).abs() > WEIGHT_SUM_TOL * (self.b - self.a).max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "weights sum to {total}, expected {}",
                self.b - self.a
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i g(x_i)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

fn trapezoid(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / (n - 1) as f64;
    let nodes = (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect();
    let weights = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

/// Evaluates `(P_n(t), P_n'(t))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = t;
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k - 1.0) * t * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (t * p - p_prev) / (t * t - 1.0);
    (p, dp)
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
fn gauss_legendre_reference(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // Roots are symmetric; solve for the positive half and mirror.
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..LEGENDRE_NEWTON_MAX_ITERS {
            let (p, dp) = legendre_with_derivative(n, t);
            let step = p / dp;
            t -= step;
            if step.abs() <= LEGENDRE_NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidGrid(format!(
                "Newton iteration for Legendre root {i} of degree {n} did not converge"
            )));
        }
        let (_, dp) = legendre_with_derivative(n, t);
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = -t;
        nodes[n - 1 - i] = t;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// The ambient space an [`Element`] lives in.
#[derive(Debug, Clone)]
pub enum Space {
    Euclidean(usize),
    L2(Arc<QuadratureGrid>),
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension {
                expected: "dim >= 1".into(),
                got: "0".into(),
            });
        }
        Ok(Space::Euclidean(dim))
    }

    pub fn l2(grid: QuadratureGrid) -> Self {
        Space::L2(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Euclidean(d) => *d,
            Space::L2(g) => g.len(),
        }
    }

    pub fn grid(&self) -> Option<&Arc<QuadratureGrid>> {
        match self {
            Space::Euclidean(_) => None,
            Space::L2(g) => Some(g),
        }
    }

    /// Per-coordinate inner-product weights (all ones for Euclidean).
    fn weight(&self, i: usize) -> f64 {
        match self {
            Space::Euclidean(_) => 1.0,
            Space::L2(g) => g.weights[i],
        }
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Space::Euclidean(a), Space::Euclidean(b)) => a == b,
            (Space::L2(a), Space::L2(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Euclidean(d) => write!(f, "R^{d}"),
            Space::L2(g) => write!(
                f,
                "L2[{}, {}] ({} {} nodes)",
                g.a,
                g.b,
                g.len(),
                g.rule.name()
            ),
        }
    }
}

/// A point of a [`Space`]: a coordinate vector, or node values of a function.
///
/// Arithmetic between elements of different spaces is a programming error
/// and panics; [`inner`] reports it as [`Error::Dimension`] instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    coords: Vec<f64>,
    space: Space,
}

impl Element {
    pub fn new(space: Space, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(Error::Dimension {
                expected: format!("{} coordinates for {space}", space.dim()),
                got: coords.len().to_string(),
            });
        }
        Ok(Self { coords, space })
    }

    /// Euclidean element with `Space::Euclidean(coords.len())`.
    ///
    /// Panics on an empty coordinate vector.
    pub fn euclidean(coords: Vec<f64>) -> Self {
        assert!(!coords.is_empty(), "euclidean element needs at least one coordinate");
        Self {
            space: Space::Euclidean(coords.len()),
            coords,
        }
    }

    pub fn zeros(space: &Space) -> Self {
        Self {
            coords: vec![0.0; space.dim()],
            space: space.clone(),
        }
    }

    /// Samples `g` at the nodes of a discretized L2 space.
    pub fn from_fn(grid: &Arc<QuadratureGrid>, g: impl Fn(f64) -> f64) -> Self {
        Self {
            coords: grid.nodes.iter().map(|&x| g(x)).collect(),
            space: Space::L2(Arc::clone(grid)),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Same space, new coordinates. Panics if the length differs.
    pub fn with_coords(&self, coords: Vec<f64>) -> Self {
        assert_eq!(coords.len(), self.coords.len(), "coordinate count changed");
        Self {
            coords,
            space: self.space.clone(),
        }
    }

    fn assert_same_space(&self, other: &Self) {
        assert!(
            self.space == other.space,
            "elements from different spaces: {} vs {}",
            self.space,
            other.space
        );
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.assert_same_space(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        self.with_coords(coords)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_space(other);
        self.with_coords(self.coords.iter().zip(&other.coords).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_space(other);
        self.with_coords(self.coords.iter().zip(&other.coords).map(|(x, y)| x - y).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.with_coords(self.coords.iter().map(|x| c * x).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|x| x.is_finite())
    }
}

/// Rule-weighted inner product.
pub fn inner(x: &Element, y: &Element) -> Result<f64> {
    if x.space != y.space {
        return Err(Error::Dimension {
            expected: x.space.to_string(),
            got: y.space.to_string(),
        });
    }
    Ok(weighted_dot(&x.space, &x.coords, &y.coords))
}

pub fn norm(x: &Element) -> f64 {
    weighted_dot(&x.space, &x.coords, &x.coords).sqrt()
}

/// `norm(x - y)`, without allocating. Panics on a space mismatch.
pub fn distance(x: &Element, y: &Element) -> f64 {
    x.assert_same_space(y);
    x.coords
        .iter()
        .zip(&y.coords)
        .enumerate()
        .map(|(i, (a, b))| x.space.weight(i) * (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Inner product that panics on a space mismatch; for internal hot paths
/// where both operands come from the same computation.
pub(crate) fn dot(x: &Element, y: &Element) -> f64 {
    x.assert_same_space(y);
    weighted_dot(&x.space, &x.coords, &y.coords)
}

fn weighted_dot(space: &Space, x: &[f64], y: &[f64]) -> f64 {
    match space {
        Space::Euclidean(_) => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        Space::L2(g) => x
            .iter()
            .zip(y)
            .zip(&g.weights)
            .map(|((a, b), w)| w * (a * b))
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_three_nodes() {
        let g = QuadratureGrid::new(0.0, 1.0, 3, Rule::Trapezoid).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    /// Roots of P_2(t) = (3t^2 - 1)/2 found by bisection, independent of
    /// the Newton construction.
    #[test]
    fn gauss_two_point_matches_bisection_oracle() {
        let p2 = |t: f64| 0.5 * (3.0 * t * t - 1.0);
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p2(lo) * p2(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let r1 = bisect(-1.0, 0.0);
        let r2 = bisect(0.0, 1.0);
        let g = QuadratureGrid::new(-1.0, 1.0, 2, Rule::GaussLegendre).unwrap();
        assert_abs_diff_eq!(g.nodes()[0], r1, epsilon = 1e-15);
        assert_abs_diff_eq!(g.nodes()[1], r2, epsilon = 1e-15);
        assert_abs_diff_eq!(r2, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.weights()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_length() {
        for rule in [Rule::Trapezoid, Rule::GaussLegendre] {
            for n in [2, 3, 7, 16, 64, 101] {
                let g = QuadratureGrid::new(-0.3, 2.2, n, rule).unwrap();
                let s: f64 = g.weights().iter().sum();
                assert!((s - 2.5).abs() <= 1e-12, "{rule:?} n={n}: {s}");
            }
        }
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(matches!(
            QuadratureGrid::new(0.0, 1.0, 1, Rule::Trapezoid),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            QuadratureGrid::new(1.0, 1.0, 4, Rule::GaussLegendre),
            Err(Error::InvalidGrid(_))
        ));
        assert!(QuadratureGrid::new(2.0, 1.0, 4, Rule::Trapezoid).is_err());
    }

    #[test]
    fn inner_products() {
        let x = Element::euclidean(vec![1.0, 2.0]);
        let y = Element::euclidean(vec![3.0, 4.0]);
        assert_eq!(inner(&x, &y).unwrap(), 11.0);
        assert_eq!(norm(&Element::euclidean(vec![3.0, 4.0])), 5.0);
        assert_eq!(norm(&Element::zeros(&Space::Euclidean(4))), 0.0);

        let trap = Arc::new(QuadratureGrid::new(0.0, 1.0, 5, Rule::Trapezoid).unwrap());
        let f = Element::from_fn(&trap, |x| x);
        // 0.25 * (0.5*0 + 1/16 + 1/4 + 9/16 + 0.5*1)
        assert_abs_diff_eq!(inner(&f, &f).unwrap(), 0.34375, epsilon = 1e-15);

        let gauss = Arc::new(QuadratureGrid::new(0.0, 1.0, 2, Rule::GaussLegendre).unwrap());
        let f = Element::from_fn(&gauss, |x| x);
        assert_abs_diff_eq!(inner(&f, &f).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norm(&f), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn mismatched_spaces() {
        let x = Element::euclidean(vec![1.0, 2.0]);
        let y = Element::euclidean(vec![1.0, 2.0, 3.0]);
        assert!(matches!(inner(&x, &y), Err(Error::Dimension { .. })));
        assert!(Element::new(Space::Euclidean(3), vec![1.0]).is_err());
        assert!(Space::euclidean(0).is_err());
    }

    #[test]
    fn gauss_exact_for_high_degree() {
        for n in 1..=16usize {
            let n = n.max(2);
            let g = QuadratureGrid::new(0.0, 1.0, n, Rule::GaussLegendre).unwrap();
            for k in 0..(2 * n) {
                let exact = 1.0 / (k + 1) as f64;
                let q = g.integrate(|x| x.powi(k as i32));
                assert!(((q - exact) / exact).abs() <= 1e-12, "n={n} k={k}");
            }
        }
    }
}

//! Self-maps `A` of a convex set, the residual operator `L = I - A`, and
//! sampling certifiers for non-expansiveness, monotonicity and
//! hemicontinuity.
//!
//! The certifiers are falsifiers: a violation found on a sample is a proof
//! that the property fails, while a clean report is only evidence.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::convex::ConvexSet;
use crate::error::{Error, Result};
use crate::fredholm::NystromOperator;
use crate::space::{distance, dot, norm, Element};

/// Slack above 1 before a Lipschitz ratio counts as a violation.
pub const NONEXPANSIVE_SLACK: f64 = 1e-9;
/// Pairings below `-MONOTONE_SLACK` count as a violation.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Deviation below which the hemicontinuity probe tail counts as vanished.
pub const HEMICONTINUITY_TOL: f64 = 1e-6;

type MapFn = dyn Fn(&Element) -> Element + Send + Sync;

/// An arbitrary user map, for cases the structured variants do not cover.
#[derive(Clone)]
pub struct CustomMap {
    name: String,
    f: Arc<MapFn>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMap").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum Operator {
    Identity,
    /// `x -> matrix * x + shift`.
    Affine {
        matrix: DMatrix<f64>,
        shift: DVector<f64>,
    },
    /// Rotation by `angle` radians in the coordinate plane `(i, j)`.
    Rotation { angle: f64, plane: (usize, usize) },
    Fredholm(Arc<NystromOperator>),
    Scaled(Box<Operator>, f64),
    /// `(1 - weight) * first + weight * second`.
    Averaged {
        first: Box<Operator>,
        second: Box<Operator>,
        weight: f64,
    },
    /// Applied left to right: the first entry acts first.
    Composed(Vec<Operator>),
    Custom(CustomMap),
}

impl Operator {
    pub fn custom(name: impl Into<String>, f: impl Fn(&Element) -> Element + Send + Sync + 'static) -> Self {
        Operator::Custom(CustomMap {
            name: name.into(),
            f: Arc::new(f),
        })
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        match self {
            Operator::Identity => Ok(x.clone()),
            Operator::Affine { matrix, shift } => {
                let n = x.dim();
                if matrix.nrows() != n || matrix.ncols() != n || shift.len() != n {
                    return Err(Error::Dimension {
                        expected: format!("{}x{} affine map", matrix.nrows(), matrix.ncols()),
                        got: format!("element of dimension {n}"),
                    });
                }
                let v = matrix * DVector::from_column_slice(x.coords()) + shift;
                Ok(x.with_coords(v.iter().cloned().collect()))
            }
            Operator::Rotation { angle, plane: (i, j) } => {
                let n = x.dim();
                if *i >= n || *j >= n || i == j {
                    return Err(Error::Dimension {
                        expected: format!("distinct plane indices below {n}"),
                        got: format!("({i}, {j})"),
                    });
                }
                let (s, c) = angle.sin_cos();
                let mut v = x.coords().to_vec();
                let (xi, xj) = (v[*i], v[*j]);
                v[*i] = c * xi - s * xj;
                v[*j] = s * xi + c * xj;
                Ok(x.with_coords(v))
            }
            Operator::Fredholm(op) => op.apply(x),
            Operator::Scaled(inner, c) => Ok(inner.apply(x)?.scale(*c)),
            Operator::Averaged { first, second, weight } => {
                let a = first.apply(x)?;
                let b = second.apply(x)?;
                Ok(a.lincomb(1.0 - weight, &b, *weight))
            }
            Operator::Composed(ops) => {
                let mut y = x.clone();
                for op in ops {
                    y = op.apply(&y)?;
                }
                Ok(y)
            }
            Operator::Custom(m) => {
                let y = (m.f)(x);
                if y.space() != x.space() {
                    return Err(Error::Dimension {
                        expected: x.space().to_string(),
                        got: y.space().to_string(),
                    });
                }
                Ok(y)
            }
        }
    }
}

/// A map `A` together with its (optional) domain and claimed Lipschitz
/// constant.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    op: Operator,
    domain: Option<ConvexSet>,
    claimed_lipschitz: Option<f64>,
}

impl OperatorSpec {
    pub fn new(op: Operator) -> Self {
        Self {
            op,
            domain: None,
            claimed_lipschitz: None,
        }
    }

    pub fn identity() -> Self {
        Self::new(Operator::Identity).claim(1.0)
    }

    /// The zero map on `R^dim`.
    pub fn zero(dim: usize) -> Self {
        Self::new(Operator::Affine {
            matrix: DMatrix::zeros(dim, dim),
            shift: DVector::zeros(dim),
        })
        .claim(0.0)
    }

    /// Affine map with the given row-major matrix.
    pub fn affine(rows: &[Vec<f64>], shift: &[f64]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) || shift.len() != n {
            return Err(Error::Dimension {
                expected: "square matrix and matching shift".into(),
                got: format!("{n} rows, shift of length {}", shift.len()),
            });
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self::new(Operator::Affine {
            matrix,
            shift: DVector::from_column_slice(shift),
        }))
    }

    /// Rotation in the `(0, 1)` plane.
    pub fn rotation(angle: f64) -> Self {
        Self::rotation_in(angle, (0, 1))
    }

    pub fn rotation_in(angle: f64, plane: (usize, usize)) -> Self {
        Self::new(Operator::Rotation { angle, plane }).claim(1.0)
    }

    pub fn scaled(inner: OperatorSpec, factor: f64) -> Self {
        let claim = inner.claimed_lipschitz.map(|k| k * factor.abs());
        let mut spec = Self::new(Operator::Scaled(Box::new(inner.op), factor));
        spec.claimed_lipschitz = claim;
        spec
    }

    pub fn averaged(first: OperatorSpec, second: OperatorSpec, weight: f64) -> Self {
        let claim = match (first.claimed_lipschitz, second.claimed_lipschitz) {
            (Some(a), Some(b)) if (0.0..=1.0).contains(&weight) => Some((1.0 - weight) * a + weight * b),
            _ => None,
        };
        let mut spec = Self::new(Operator::Averaged {
            first: Box::new(first.op),
            second: Box::new(second.op),
            weight,
        });
        spec.claimed_lipschitz = claim;
        spec
    }

    pub fn composed(parts: Vec<OperatorSpec>) -> Self {
        let claim = parts
            .iter()
            .map(|p| p.claimed_lipschitz)
            .try_fold(1.0, |acc, k| k.map(|k| acc * k));
        let mut spec = Self::new(Operator::Composed(parts.into_iter().map(|p| p.op).collect()));
        spec.claimed_lipschitz = claim;
        spec
    }

    pub fn fredholm(op: NystromOperator) -> Self {
        Self::new(Operator::Fredholm(Arc::new(op)))
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&Element) -> Element + Send + Sync + 'static) -> Self {
        Self::new(Operator::custom(name, f))
    }

    pub fn with_domain(mut self, domain: ConvexSet) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Records a claimed Lipschitz constant; rejects negative or non-finite
    /// values.
    pub fn with_lipschitz(mut self, k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!("claimed Lipschitz constant must be >= 0, got {k}")));
        }
        self.claimed_lipschitz = Some(k);
        Ok(self)
    }

    fn claim(mut self, k: f64) -> Self {
        self.claimed_lipschitz = Some(k);
        self
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn domain(&self) -> Option<&ConvexSet> {
        self.domain.as_ref()
    }

    pub fn claimed_lipschitz(&self) -> Option<f64> {
        self.claimed_lipschitz
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        self.op.apply(x)
    }
}

/// `L(x) = x - A(x)`.
#[derive(Debug, Clone)]
pub struct ResidualOperator {
    base: OperatorSpec,
}

impl ResidualOperator {
    pub fn new(base: OperatorSpec) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &OperatorSpec {
        &self.base
    }

    pub fn eval(&self, x: &Element) -> Result<Element> {
        Ok(x.sub(&self.base.apply(x)?))
    }
}

#[derive(Debug, Clone)]
pub struct NonexpansiveReport {
    pub max_ratio: f64,
    pub witness: (Element, Element),
    pub pairs_used: usize,
    /// `max_ratio > 1 + 1e-9`: a certified counterexample.
    pub violated: bool,
}

#[derive(Debug, Clone)]
pub struct MonotoneReport {
    pub min_pairing: f64,
    /// Minimum of `<L(x) - L(y), x - y> / |x - y|^2` over the sample.
    pub min_normalized: f64,
    pub witness: (Element, Element),
    pub pairs_used: usize,
    pub violated: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub deviations: Vec<f64>,
    pub continuous: bool,
}

fn sample_pairs(set: &ConvexSet, n_pairs: usize, seed: u64) -> Result<Vec<(Element, Element)>> {
    if n_pairs == 0 {
        return Err(Error::Sampling("need at least one pair".into()));
    }
    let mut pts = set.sample_points(2 * n_pairs, seed)?.into_iter();
    let mut pairs = Vec::with_capacity(n_pairs);
    while let (Some(x), Some(y)) = (pts.next(), pts.next()) {
        if distance(&x, &y) > 0.0 {
            pairs.push((x, y));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Sampling("all sampled pairs coincide".into()));
    }
    Ok(pairs)
}

/// Largest `|Ax - Ay| / |x - y|` over `n_pairs` sampled pairs of `set`.
pub fn check_nonexpansive(
    a: &OperatorSpec,
    set: &ConvexSet,
    n_pairs: usize,
    seed: u64,
) -> Result<NonexpansiveReport> {
    let pairs = sample_pairs(set, n_pairs, seed)?;
    let mut best: Option<(f64, usize)> = None;
    for (k, (x, y)) in pairs.iter().enumerate() {
        let ratio = distance(&a.apply(x)?, &a.apply(y)?) / distance(x, y);
        if best.is_none_or(|(r, _)| ratio > r) {
            best = Some((ratio, k));
        }
    }
    let (max_ratio, k) = best.expect("at least one pair");
    Ok(NonexpansiveReport {
        max_ratio,
        witness: pairs[k].clone(),
        pairs_used: pairs.len(),
        violated: max_ratio > 1.0 + NONEXPANSIVE_SLACK,
    })
}

/// Smallest `<L(x) - L(y), x - y>` over `n_pairs` sampled pairs of `set`.
pub fn check_monotone(
    l: &ResidualOperator,
    set: &ConvexSet,
    n_pairs: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    let pairs = sample_pairs(set, n_pairs, seed)?;
    let mut min_pairing = f64::INFINITY;
    let mut min_normalized = f64::INFINITY;
    let mut witness = 0;
    for (k, (x, y)) in pairs.iter().enumerate() {
        let diff = x.sub(y);
        let pairing = dot(&l.eval(x)?.sub(&l.eval(y)?), &diff);
        if pairing < min_pairing {
            min_pairing = pairing;
            witness = k;
        }
        min_normalized = min_normalized.min(pairing / dot(&diff, &diff));
    }
    Ok(MonotoneReport {
        min_pairing,
        min_normalized,
        witness: pairs[witness].clone(),
        pairs_used: pairs.len(),
        violated: min_pairing < -MONOTONE_SLACK,
    })
}

/// Probes `|L(x + t d) - L(x)|` along a decreasing sequence of `t`.
///
/// When `set` is given, probe points are projected onto it first.
pub fn check_hemicontinuous(
    l: &ResidualOperator,
    x: &Element,
    direction: &Element,
    t_sequence: &[f64],
    set: Option<&ConvexSet>,
) -> Result<ProbeReport> {
    if t_sequence.is_empty() {
        return Err(Error::Precondition("empty t sequence".into()));
    }
    if t_sequence.iter().any(|&t| !(t > 0.0)) || t_sequence.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Precondition("t sequence must be positive and decreasing".into()));
    }
    let base = l.eval(x)?;
    let mut deviations = Vec::with_capacity(t_sequence.len());
    for &t in t_sequence {
        let mut probe = x.lincomb(1.0, direction, t);
        if let Some(m) = set {
            probe = m.project(&probe)?;
        }
        deviations.push(norm(&l.eval(&probe)?.sub(&base)));
    }
    let continuous = deviations.last().is_some_and(|&d| d <= HEMICONTINUITY_TOL);
    Ok(ProbeReport { deviations, continuous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(v: &[f64]) -> Element {
        Element::euclidean(v.to_vec())
    }

    fn ball2() -> ConvexSet {
        ConvexSet::ball(e(&[0.0, 0.0]), 1.0).unwrap()
    }

    #[test]
    fn identity_and_rotation_are_isometries() {
        let r = check_nonexpansive(&OperatorSpec::identity(), &ball2(), 1000, 1).unwrap();
        assert!((r.max_ratio - 1.0).abs() <= 1e-12);
        let r = check_nonexpansive(&OperatorSpec::rotation(PI / 3.0), &ball2(), 1000, 1).unwrap();
        assert!((r.max_ratio - 1.0).abs() <= 1e-12);
        assert!(!r.violated);
    }

    /// Largest singular value of [[1,1],[0,1]] from the Gram eigenvalues,
    /// computed independently via the characteristic polynomial.
    #[test]
    fn shear_is_flagged() {
        // G = A^T A = [[1,1],[1,2]]: trace 3, det 1.
        let lambda_max = (3.0 + (9.0f64 - 4.0).sqrt()) / 2.0;
        let sigma = lambda_max.sqrt();
        assert!((sigma - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let a = OperatorSpec::affine(&[vec![1.0, 1.0], vec![0.0, 1.0]], &[0.0, 0.0]).unwrap();
        let r = check_nonexpansive(&a, &ball2(), 2000, 3).unwrap();
        assert!(r.violated);
        assert!(r.max_ratio <= sigma + 1e-12);
        assert!(r.max_ratio > 1.5);
    }

    #[test]
    fn monotonicity_certificates() {
        let zero = ResidualOperator::new(OperatorSpec::zero(2));
        let r = check_monotone(&zero, &ball2(), 500, 2).unwrap();
        assert!(r.min_pairing >= 0.0);
        assert!((r.min_normalized - 1.0).abs() < 1e-12);

        for theta in [PI / 6.0, PI / 2.0, 2.0] {
            let l = ResidualOperator::new(OperatorSpec::rotation(theta));
            let r = check_monotone(&l, &ball2(), 500, 5).unwrap();
            assert!(r.min_pairing >= -1e-10);
            // direct evaluation of <(I-R)(x-y), x-y> / |x-y|^2
            let (x, y) = &r.witness;
            let d = x.sub(y);
            let rd = [theta.cos() * d.coords()[0] - theta.sin() * d.coords()[1],
                theta.sin() * d.coords()[0] + theta.cos() * d.coords()[1]];
            let direct = (d.coords()[0] - rd[0]) * d.coords()[0] + (d.coords()[1] - rd[1]) * d.coords()[1];
            assert!((direct / dot(&d, &d) - (1.0 - theta.cos())).abs() < 1e-12);
            assert!((r.min_normalized - (1.0 - theta.cos())).abs() < 1e-12);
        }

        let expansive = ResidualOperator::new(OperatorSpec::scaled(OperatorSpec::identity(), 2.0));
        let r = check_monotone(&expansive, &ball2(), 100, 9).unwrap();
        assert!(r.violated);
    }

    #[test]
    fn scaled_contracts() {
        let a = OperatorSpec::scaled(OperatorSpec::rotation(0.7), 0.4);
        let r = check_nonexpansive(&a, &ball2(), 500, 11).unwrap();
        assert!(r.max_ratio <= 0.4 + 1e-9);
        assert_eq!(a.claimed_lipschitz(), Some(0.4));
    }

    #[test]
    fn residual_is_exact() {
        let a = OperatorSpec::averaged(OperatorSpec::rotation(1.1), OperatorSpec::identity(), 0.3);
        let l = ResidualOperator::new(a.clone());
        for x in ball2().sample_points(50, 4).unwrap() {
            let lhs = l.eval(&x).unwrap().add(&a.apply(&x).unwrap());
            for (p, q) in lhs.coords().iter().zip(x.coords()) {
                assert!((p - q).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn hemicontinuity_probe() {
        let ts: Vec<f64> = (0..8).map(|k| 10f64.powi(-k)).collect();
        let affine = OperatorSpec::affine(&[vec![0.5, 0.2], vec![-0.1, 0.3]], &[1.0, 1.0]).unwrap();
        let l = ResidualOperator::new(affine);
        let r = check_hemicontinuous(&l, &e(&[0.1, 0.1]), &e(&[1.0, 0.0]), &ts, None).unwrap();
        assert!(r.continuous);
        // |L(x + t d) - L(x)| = t |(I - B) d|, (I - B) d = (0.5, 0.1)
        let bd = (0.25f64 + 0.01).sqrt();
        for (d, t) in r.deviations.iter().zip(&ts) {
            assert!((d - t * bd).abs() < 1e-12);
        }

        // A = x - step(x) gives L = step.
        let step = OperatorSpec::custom("x - step", |x: &Element| {
            x.with_coords(x.coords().iter().map(|&v| v - if v <= 0.0 { 0.0 } else { 1.0 }).collect())
        });
        let l = ResidualOperator::new(step);
        let r = check_hemicontinuous(&l, &e(&[0.0]), &e(&[1.0]), &ts, None).unwrap();
        assert!(!r.continuous);
        assert!(r.deviations.iter().all(|&d| (d - 1.0).abs() < 1e-9));
    }

    #[test]
    fn dimension_errors() {
        let a = OperatorSpec::affine(&[vec![1.0]], &[0.0]).unwrap();
        assert!(a.apply(&e(&[1.0, 2.0])).is_err());
        let r = OperatorSpec::rotation_in(0.3, (0, 5));
        assert!(r.apply(&e(&[1.0, 2.0])).is_err());
        assert!(OperatorSpec::identity().with_lipschitz(-1.0).is_err());
    }
}

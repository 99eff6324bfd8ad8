//! Bounded closed convex sets with projections and seeded interior sampling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::space::{distance, dot, norm, Element, Space};

pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;
pub const DYKSTRA_FEASIBILITY_TOL: f64 = 1e-10;
/// Relative per-sweep movement below which Dykstra is considered settled.
const DYKSTRA_STEP_TOL: f64 = 1e-13;
/// Largest box dimension whose corners are enumerated as extreme points.
const MAX_CORNER_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Ball { center: Element, radius: f64 },
    Box { lower: Element, upper: Element },
    Simplex { vertices: Vec<Element> },
    Intersection(Vec<ConvexSet>),
}

/// A nonempty bounded closed convex set in a [`Space`].
///
/// Every variant is bounded by construction; constructors validate the
/// remaining invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    kind: SetKind,
    space: Space,
}

impl ConvexSet {
    pub fn ball(center: Element, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidSet("ball center is not finite".into()));
        }
        let space = center.space().clone();
        Ok(Self {
            kind: SetKind::Ball { center, radius },
            space,
        })
    }

    /// Ball centered at the origin of `space`.
    pub fn centered_ball(space: &Space, radius: f64) -> Result<Self> {
        Self::ball(Element::zeros(space), radius)
    }

    pub fn boxed(lower: Element, upper: Element) -> Result<Self> {
        if lower.space() != upper.space() {
            return Err(Error::Dimension {
                expected: lower.space().to_string(),
                got: upper.space().to_string(),
            });
        }
        let ok = lower
            .coords()
            .iter()
            .zip(upper.coords())
            .all(|(l, u)| l.is_finite() && u.is_finite() && l <= u);
        if !ok {
            return Err(Error::InvalidSet("box needs finite lower <= upper componentwise".into()));
        }
        let space = lower.space().clone();
        Ok(Self {
            kind: SetKind::Box { lower, upper },
            space,
        })
    }

    /// `[lo, hi]^dim` in Euclidean space.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        let space = Space::euclidean(dim)?;
        Self::boxed(
            Element::new(space.clone(), vec![lo; dim])?,
            Element::new(space, vec![hi; dim])?,
        )
    }

    pub fn simplex(vertices: Vec<Element>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidSet("simplex needs at least one vertex".into()))?;
        let space = first.space().clone();
        if vertices.iter().any(|v| v.space() != &space || !v.is_finite()) {
            return Err(Error::InvalidSet("simplex vertices must be finite and share a space".into()));
        }
        if !affinely_independent(&vertices) {
            return Err(Error::InvalidSet("simplex vertices are affinely dependent".into()));
        }
        Ok(Self {
            kind: SetKind::Simplex { vertices },
            space,
        })
    }

    /// The probability simplex `{x >= 0, sum x = 1}` in `R^dim`.
    pub fn standard_simplex(dim: usize) -> Result<Self> {
        let space = Space::euclidean(dim)?;
        let vertices = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                Element::new(space.clone(), e)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::simplex(vertices)
    }

    /// Intersection of the given sets. Nonemptiness is certified by
    /// projecting the origin.
    pub fn intersection(sets: Vec<ConvexSet>) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidSet("intersection of no sets".into()))?;
        let space = first.space.clone();
        if sets.iter().any(|s| s.space != space) {
            return Err(Error::InvalidSet("intersection members live in different spaces".into()));
        }
        let set = Self {
            kind: SetKind::Intersection(sets),
            space,
        };
        set.project(&Element::zeros(&set.space)).map_err(|e| match e {
            Error::ProjectionNonconvergence { infeasibility, .. } => Error::InvalidSet(format!(
                "intersection appears empty (infeasibility {infeasibility:e})"
            )),
            other => other,
        })?;
        Ok(set)
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    fn check_space(&self, x: &Element) -> Result<()> {
        if x.space() != &self.space {
            return Err(Error::Dimension {
                expected: self.space.to_string(),
                got: x.space().to_string(),
            });
        }
        Ok(())
    }

    /// Nearest point of the set to `x` in the norm of the ambient space.
    pub fn project(&self, x: &Element) -> Result<Element> {
        self.check_space(x)?;
        match &self.kind {
            SetKind::Ball { center, radius } => Ok(project_ball(center, *radius, x)),
            SetKind::Box { lower, upper } => Ok(x.with_coords(
                x.coords()
                    .iter()
                    .zip(lower.coords().iter().zip(upper.coords()))
                    .map(|(&v, (&l, &u))| v.clamp(l, u))
                    .collect(),
            )),
            SetKind::Simplex { vertices } => Ok(project_simplex(vertices, x)),
            SetKind::Intersection(sets) => dykstra(sets, x),
        }
    }

    /// Whether `x` lies within distance `tol` of the set.
    pub fn contains(&self, x: &Element, tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok(distance(x, &p) <= tol)
    }

    /// `k` points of the set, deterministic in `seed`.
    pub fn sample_points(&self, k: usize, seed: u64) -> Result<Vec<Element>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k).map(|_| self.sample_one(&mut rng)).collect()
    }

    fn sample_one(&self, rng: &mut ChaCha8Rng) -> Result<Element> {
        match &self.kind {
            SetKind::Ball { center, radius } => {
                let d = self.space.dim();
                let mut dir;
                loop {
                    dir = center.with_coords((0..d).map(|_| rng.sample(StandardNormal)).collect());
                    if norm(&dir) > 1e-12 {
                        break;
                    }
                }
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                let dir = dir.scale(r / norm(&dir));
                Ok(project_ball(center, *radius, &center.add(&dir)))
            }
            SetKind::Box { lower, upper } => Ok(lower.with_coords(
                lower
                    .coords()
                    .iter()
                    .zip(upper.coords())
                    .map(|(&l, &u)| (l + rng.random::<f64>() * (u - l)).clamp(l, u))
                    .collect(),
            )),
            SetKind::Simplex { vertices } => {
                let spacings: Vec<f64> = vertices
                    .iter()
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let total: f64 = spacings.iter().sum();
                let lambda: Vec<f64> = spacings.iter().map(|e| e / total).collect();
                Ok(combine(vertices, &lambda))
            }
            SetKind::Intersection(sets) => {
                let ambient = sets[0].sample_one(rng)?;
                self.project(&ambient)
            }
        }
    }

    /// Extreme points available in closed form: box corners (up to
    /// dimension 12) and simplex vertices. Balls and intersections have none.
    pub fn extreme_points(&self) -> Vec<Element> {
        match &self.kind {
            SetKind::Box { lower, upper } if lower.dim() <= MAX_CORNER_DIM => {
                let d = lower.dim();
                (0..(1usize << d))
                    .map(|mask| {
                        lower.with_coords(
                            (0..d)
                                .map(|i| {
                                    if mask >> i & 1 == 1 {
                                        upper.coords()[i]
                                    } else {
                                        lower.coords()[i]
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect()
            }
            SetKind::Simplex { vertices } => vertices.clone(),
            _ => Vec::new(),
        }
    }
}

fn project_ball(center: &Element, radius: f64, x: &Element) -> Element {
    let d = distance(x, center);
    if d <= radius {
        x.clone()
    } else {
        center.lincomb(1.0 - radius / d, x, radius / d)
    }
}

fn combine(points: &[Element], lambda: &[f64]) -> Element {
    let mut coords = vec![0.0; points[0].dim()];
    for (p, &l) in points.iter().zip(lambda) {
        for (c, v) in coords.iter_mut().zip(p.coords()) {
            *c += l * v;
        }
    }
    points[0].with_coords(coords)
}

fn affinely_independent(vertices: &[Element]) -> bool {
    let k = vertices.len();
    if k == 1 {
        return true;
    }
    if k - 1 > vertices[0].dim() {
        return false;
    }
    let diffs: Vec<Element> = vertices[1..].iter().map(|v| v.sub(&vertices[0])).collect();
    let gram = DMatrix::from_fn(k - 1, k - 1, |i, j| dot(&diffs[i], &diffs[j]));
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > 1e-12 * max
}

fn is_standard_simplex(vertices: &[Element]) -> bool {
    let d = vertices[0].dim();
    matches!(vertices[0].space(), Space::Euclidean(_))
        && vertices.len() == d
        && vertices.iter().enumerate().all(|(i, v)| {
            v.coords()
                .iter()
                .enumerate()
                .all(|(j, &c)| c == if i == j { 1.0 } else { 0.0 })
        })
}

fn project_simplex(vertices: &[Element], x: &Element) -> Element {
    if is_standard_simplex(vertices) {
        x.with_coords(project_probability_simplex(x.coords()))
    } else {
        let shifted: Vec<Element> = vertices.iter().map(|v| v.sub(x)).collect();
        combine(vertices, &min_norm_point(&shifted))
    }
}

/// Sort-and-threshold projection onto `{x >= 0, sum x = 1}`.
pub(crate) fn project_probability_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

/// Barycentric weights of the minimum-norm point in the convex hull of
/// `points` (Wolfe's algorithm). Terminates finitely for affinely
/// independent points.
fn min_norm_point(points: &[Element]) -> Vec<f64> {
    const ZERO: f64 = 1e-15;
    let k = points.len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0_f64, f64::max);
    let mut lambda = vec![0.0; k];
    let start = (0..k)
        .min_by(|&i, &j| dot(&points[i], &points[i]).total_cmp(&dot(&points[j], &points[j])))
        .unwrap_or(0);
    lambda[start] = 1.0;
    let mut corral = vec![start];

    for _ in 0..(10 * k + 100) {
        let x = combine(points, &lambda);
        let xx = dot(&x, &x);
        let (j, xpj) = (0..k)
            .map(|j| (j, dot(&x, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty point set");
        if xx - xpj <= 1e-14 * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);

        while let Some(alpha) = affine_minimizer(points, &corral) {
            if alpha.iter().all(|&a| a > ZERO) {
                for (&i, &a) in corral.iter().zip(&alpha) {
                    lambda[i] = a;
                }
                break;
            }
            let theta = corral
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= ZERO)
                .map(|(&i, &a)| lambda[i] / (lambda[i] - a))
                .fold(1.0_f64, f64::min);
            for (&i, &a) in corral.iter().zip(&alpha) {
                lambda[i] = theta * a + (1.0 - theta) * lambda[i];
            }
            corral.retain(|&i| {
                if lambda[i] <= ZERO {
                    lambda[i] = 0.0;
                    false
                } else {
                    true
                }
            });
        }
    }
    let total: f64 = lambda.iter().sum();
    lambda.iter().map(|l| l / total).collect()
}

/// Minimizer of `|sum a_i p_i|` over `sum a_i = 1`, restricted to `corral`.
fn affine_minimizer(points: &[Element], corral: &[usize]) -> Option<Vec<f64>> {
    let s = corral.len();
    let mut m = DMatrix::zeros(s + 1, s + 1);
    for (r, &i) in corral.iter().enumerate() {
        for (c, &j) in corral.iter().enumerate() {
            m[(r, c)] = dot(&points[i], &points[j]);
        }
        m[(r, s)] = 1.0;
        m[(s, r)] = 1.0;
    }
    let mut rhs = DVector::zeros(s + 1);
    rhs[s] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    Some(sol.iter().take(s).cloned().collect())
}

fn dykstra(sets: &[ConvexSet], x0: &Element) -> Result<Element> {
    if sets.len() == 1 {
        return sets[0].project(x0);
    }
    let mut x = x0.clone();
    let mut increments: Vec<Element> = sets.iter().map(|_| Element::zeros(x0.space())).collect();
    let mut infeasibility = f64::INFINITY;
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let previous = x.clone();
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let y = x.add(inc);
            let projected = set.project(&y)?;
            *inc = y.sub(&projected);
            x = projected;
        }
        infeasibility = 0.0;
        for set in sets {
            infeasibility = f64::max(infeasibility, distance(&x, &set.project(&x)?));
        }
        let moved = distance(&x, &previous);
        if infeasibility <= DYKSTRA_FEASIBILITY_TOL && moved <= DYKSTRA_STEP_TOL * (1.0 + norm(&x)) {
            return Ok(x);
        }
    }
    if infeasibility <= DYKSTRA_FEASIBILITY_TOL {
        Ok(x)
    } else {
        Err(Error::ProjectionNonconvergence {
            sweeps: DYKSTRA_MAX_SWEEPS,
            tolerance: DYKSTRA_FEASIBILITY_TOL,
            infeasibility,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(v: &[f64]) -> Element {
        Element::euclidean(v.to_vec())
    }

    fn unit_ball2() -> ConvexSet {
        ConvexSet::ball(e(&[0.0, 0.0]), 1.0).unwrap()
    }

    #[test]
    fn closed_form_projections() {
        assert_eq!(unit_ball2().project(&e(&[2.0, 0.0])).unwrap(), e(&[1.0, 0.0]));
        let cube = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(cube.project(&e(&[2.0, -1.0])).unwrap(), e(&[1.0, 0.0]));
        let simplex = ConvexSet::standard_simplex(2).unwrap();
        assert_eq!(simplex.project(&e(&[1.0, 1.0])).unwrap(), e(&[0.5, 0.5]));
        let inside = e(&[0.2, -0.3]);
        assert_eq!(unit_ball2().project(&inside).unwrap(), inside);
    }

    #[test]
    fn contains_with_tolerance() {
        let ball = unit_ball2();
        assert!(ball.contains(&e(&[0.5, 0.0]), 0.0).unwrap());
        assert!(!ball.contains(&e(&[1.0 + 1e-6, 0.0]), 1e-9).unwrap());
        assert!(ball.contains(&e(&[1.0 + 1e-6, 0.0]), 1e-3).unwrap());
    }

    #[test]
    fn invalid_sets() {
        assert!(ConvexSet::ball(e(&[0.0]), 0.0).is_err());
        assert!(ConvexSet::boxed(e(&[1.0]), e(&[0.0])).is_err());
        assert!(ConvexSet::simplex(vec![e(&[0.0, 0.0]), e(&[1.0, 1.0]), e(&[2.0, 2.0])]).is_err());
        let far = ConvexSet::ball(e(&[10.0, 0.0]), 1.0).unwrap();
        assert!(ConvexSet::intersection(vec![unit_ball2(), far]).is_err());
    }

    /// General simplex via Wolfe against brute force over a fine barycentric
    /// grid.
    #[test]
    fn general_simplex_matches_grid_search() {
        let verts = vec![e(&[0.0, 0.0]), e(&[2.0, 0.5]), e(&[0.3, 1.7])];
        let s = ConvexSet::simplex(verts.clone()).unwrap();
        for x in [e(&[3.0, 3.0]), e(&[-1.0, 0.2]), e(&[0.5, 0.5]), e(&[1.0, -2.0])] {
            let p = s.project(&x).unwrap();
            let m = 600;
            let mut best = f64::INFINITY;
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let l = [i as f64 / m as f64, j as f64 / m as f64, (m - i - j) as f64 / m as f64];
                    best = best.min(distance(&combine(&verts, &l), &x));
                }
            }
            let d = distance(&p, &x);
            assert!(d <= best + 1e-12, "wolfe {d} worse than grid {best}");
            assert!(d >= best - 5e-3);
            assert!(s.contains(&p, 1e-10).unwrap());
        }
    }

    #[test]
    fn dykstra_ball_box() {
        let ball = unit_ball2();
        let cube = ConvexSet::cube(2, 0.0, 2.0).unwrap();
        let both = ConvexSet::intersection(vec![ball, cube]).unwrap();
        let p = both.project(&e(&[2.0, 2.0])).unwrap();
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(p.coords()[0], s, epsilon = 1e-9);
        assert_abs_diff_eq!(p.coords()[1], s, epsilon = 1e-9);
        let p = both.project(&e(&[-1.0, 0.5])).unwrap();
        assert_abs_diff_eq!(p.coords()[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.coords()[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let ball = unit_ball2();
        let pts = ball.sample_points(100, 42).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| norm(p) <= 1.0 + 1e-10));
        assert_eq!(pts, ball.sample_points(100, 42).unwrap());
        let cube = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        let pts = cube.sample_points(10, 7).unwrap();
        assert!(pts.iter().all(|p| p.coords().iter().all(|&c| (0.0..=1.0).contains(&c))));
        let simplex = ConvexSet::standard_simplex(3).unwrap();
        for p in simplex.sample_points(50, 1).unwrap() {
            assert!(simplex.contains(&p, 1e-10).unwrap());
        }
    }

    #[test]
    fn extreme_points() {
        assert_eq!(ConvexSet::cube(3, 0.0, 1.0).unwrap().extreme_points().len(), 8);
        assert_eq!(ConvexSet::standard_simplex(4).unwrap().extreme_points().len(), 4);
        assert!(unit_ball2().extreme_points().is_empty());
    }
}

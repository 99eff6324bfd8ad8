//! Exhaustive desk-scale checks of the KKM covering property and of the
//! nonempty-intersection conclusion, on barycentric grids over the convex
//! hull of finitely many anchors.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::ResidualOperator;
use crate::space::{dot, Element, Space};

/// Largest `n` (anchors `x_0..x_n`) accepted by the exhaustive checks.
pub const MAX_N: usize = 8;

type MemberFn = dyn Fn(usize, &Element, f64) -> bool + Send + Sync;
type DefectFn = dyn Fn(usize, &Element) -> f64 + Send + Sync;

/// Closed sets `G(x_i)` attached to anchors `x_i`, described by a
/// tolerance-parameterized membership test and, optionally, a nonnegative
/// defect used to rank intersection candidates.
#[derive(Clone)]
pub struct SetValuedMap {
    anchors: Vec<Element>,
    member: Arc<MemberFn>,
    defect: Option<Arc<DefectFn>>,
}

impl fmt::Debug for SetValuedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetValuedMap")
            .field("anchors", &self.anchors.len())
            .field("has_defect", &self.defect.is_some())
            .finish()
    }
}

impl SetValuedMap {
    pub fn new(
        anchors: Vec<Element>,
        member: impl Fn(usize, &Element, f64) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        validate_anchors(&anchors)?;
        Ok(Self {
            anchors,
            member: Arc::new(member),
            defect: None,
        })
    }

    /// Map whose membership is `defect(i, z) <= tol`.
    pub fn from_defect(
        anchors: Vec<Element>,
        defect: impl Fn(usize, &Element) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        validate_anchors(&anchors)?;
        let defect: Arc<DefectFn> = Arc::new(defect);
        let d = Arc::clone(&defect);
        Ok(Self {
            anchors,
            member: Arc::new(move |i, z, tol| d(i, z) <= tol),
            defect: Some(defect),
        })
    }

    pub fn anchors(&self) -> &[Element] {
        &self.anchors
    }

    /// `n`, with anchors `x_0..x_n`.
    pub fn n(&self) -> usize {
        self.anchors.len() - 1
    }

    pub fn member(&self, i: usize, z: &Element, tol: f64) -> bool {
        (self.member)(i, z, tol)
    }

    /// Membership defect; an indicator (0 or 1) when no defect was given.
    pub fn defect(&self, i: usize, z: &Element) -> f64 {
        match &self.defect {
            Some(d) => d(i, z).max(0.0),
            None => {
                if self.member(i, z, 0.0) {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

fn validate_anchors(anchors: &[Element]) -> Result<()> {
    if anchors.len() < 2 {
        return Err(Error::InvalidConfig("a set-valued map needs at least two anchors".into()));
    }
    let space = anchors[0].space();
    if anchors.iter().any(|a| a.space() != space) {
        return Err(Error::InvalidConfig("anchors live in different spaces".into()));
    }
    Ok(())
}

fn check_size(map: &SetValuedMap, m: usize) -> Result<()> {
    if map.n() > MAX_N {
        return Err(Error::Size(format!("n = {} exceeds the limit {MAX_N}", map.n())));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("grid resolution m must be at least 1".into()));
    }
    Ok(())
}

/// All compositions of `m` into `parts` nonnegative integers, in
/// lexicographic order.
pub fn compositions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            rec(remaining - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(m, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Points `sum (k_i / m) x_i` over all compositions of `m`, with their
/// integer barycentric coordinates.
#[derive(Debug, Clone)]
pub struct BarycentricGrid {
    pub resolution: usize,
    pub points: Vec<(Vec<usize>, Element)>,
}

impl BarycentricGrid {
    pub fn new(anchors: &[Element], m: usize) -> Self {
        let points = compositions(m, anchors.len())
            .into_iter()
            .map(|k| {
                let p = barycentric_point(anchors, &k, m);
                (k, p)
            })
            .collect();
        Self { resolution: m, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn barycentric_point(anchors: &[Element], k: &[usize], m: usize) -> Element {
    let mut coords = vec![0.0; anchors[0].dim()];
    for (a, &ki) in anchors.iter().zip(k) {
        if ki == 0 {
            continue;
        }
        let w = ki as f64 / m as f64;
        for (c, v) in coords.iter_mut().zip(a.coords()) {
            *c += w * v;
        }
    }
    anchors[0].with_coords(coords)
}

#[derive(Debug, Clone)]
pub struct Violation {
    /// Sorted anchor indices spanning the face.
    pub subset: Vec<usize>,
    pub point: Element,
}

#[derive(Debug, Clone)]
pub struct IntersectionWitness {
    pub point: Element,
    pub max_defect: f64,
    pub found: bool,
}

#[derive(Debug, Clone)]
pub struct KkmReport {
    pub covering_ok: bool,
    pub violations: Vec<Violation>,
    pub points_checked: usize,
    pub intersection_witness: Option<IntersectionWitness>,
}

/// Checks that every grid point of every face `Co{x_i : i in S}` lies in
/// `union_{i in S} G(x_i)` within `tol`.
pub fn check_kkm_covering(map: &SetValuedMap, m: usize, tol: f64) -> Result<KkmReport> {
    check_size(map, m)?;
    let n_anchors = map.anchors.len();
    let mut violations = Vec::new();
    let mut points_checked = 0;
    for mask in 1usize..(1 << n_anchors) {
        let subset: Vec<usize> = (0..n_anchors).filter(|i| mask >> i & 1 == 1).collect();
        let face: Vec<Element> = subset.iter().map(|&i| map.anchors[i].clone()).collect();
        for k in compositions(m, subset.len()) {
            let z = barycentric_point(&face, &k, m);
            points_checked += 1;
            if !subset.iter().any(|&i| map.member(i, &z, tol)) {
                violations.push(Violation {
                    subset: subset.clone(),
                    point: z,
                });
            }
        }
    }
    violations.sort_by(|a, b| {
        a.subset
            .cmp(&b.subset)
            .then_with(|| lexicographic(a.point.coords(), b.point.coords()))
    });
    Ok(KkmReport {
        covering_ok: violations.is_empty(),
        violations,
        points_checked,
        intersection_witness: None,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Scans the full barycentric grid for the point minimizing the largest
/// membership defect over all anchors. Ties keep the first grid point.
pub fn find_intersection(map: &SetValuedMap, m: usize, tol: f64) -> Result<IntersectionWitness> {
    check_size(map, m)?;
    let mut best: Option<(f64, Element)> = None;
    for k in compositions(m, map.anchors.len()) {
        let z = barycentric_point(&map.anchors, &k, m);
        let worst = (0..map.anchors.len())
            .map(|i| map.defect(i, &z))
            .fold(0.0_f64, f64::max);
        if best.as_ref().is_none_or(|(d, _)| worst < *d) {
            best = Some((worst, z));
        }
    }
    let (max_defect, point) = best.expect("grid is nonempty");
    Ok(IntersectionWitness {
        found: max_defect <= tol,
        point,
        max_defect,
    })
}

/// Covering check followed by an intersection search, in one report.
pub fn verify_kkm(map: &SetValuedMap, m: usize, tol: f64) -> Result<KkmReport> {
    let mut report = check_kkm_covering(map, m, tol)?;
    report.intersection_witness = Some(find_intersection(map, m, tol)?);
    Ok(report)
}

/// `P(y_i) = { z : <L(z), z - y_i> <= tol }` for each anchor `y_i`.
pub fn build_p_mapping(l: ResidualOperator, anchors: Vec<Element>, tol: f64) -> Result<SetValuedMap> {
    let anchors_for_defect = anchors.clone();
    SetValuedMap::from_defect(anchors, move |i, z| match l.eval(z) {
        Ok(lz) => dot(&lz, &z.sub(&anchors_for_defect[i])) - tol,
        Err(_) => f64::INFINITY,
    })
}

/// Standard basis `e_0..e_n` of `R^{n+1}`.
pub fn simplex_anchors(n: usize) -> Vec<Element> {
    (0..=n)
        .map(|i| {
            let mut v = vec![0.0; n + 1];
            v[i] = 1.0;
            Element::euclidean(v)
        })
        .collect()
}

/// `G(e_i) = { x : x_i >= threshold }` on the standard simplex.
pub fn threshold_cover(n: usize, threshold: f64) -> Result<SetValuedMap> {
    SetValuedMap::from_defect(simplex_anchors(n), move |i, z| threshold - z.coords()[i])
}

/// `G(e_i) = { x : x_i >= 1/(n+1) }`.
pub fn canonical_cover(n: usize) -> Result<SetValuedMap> {
    threshold_cover(n, 1.0 / (n + 1) as f64)
}

/// Every `G(x_i)` is the whole hull.
pub fn whole_hull_cover(anchors: Vec<Element>) -> Result<SetValuedMap> {
    SetValuedMap::from_defect(anchors, |_, _| 0.0)
}

/// `k` anchors evenly spaced on the unit circle, starting at `(1, 0)`.
pub fn circle_anchors(k: usize) -> Vec<Element> {
    let space = Space::Euclidean(2);
    (0..k)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let (s, c) = t.sin_cos();
            let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
            Element::new(space.clone(), vec![snap(c), snap(s)]).expect("2 coordinates")
        })
        .collect()
}

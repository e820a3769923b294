//! Alpha shapes over planar point sets.
//!
//! The pipeline is: deduplicate and canonically order the input
//! ([`PointSet`]), build a Delaunay triangulation ([`delaunay`]), keep the
//! triangles whose circumradius is below `1/alpha`, and chain the edges that
//! border exactly one kept triangle into closed boundary rings
//! ([`alpha_shape`]). Small `alpha` admits every triangle and the boundary
//! collapses to the convex hull; large `alpha` erodes the shape until it
//! vanishes. [`auto_alpha`] picks the tightest single-ring boundary that
//! still covers the input.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{orient2d, PlanarPoint, Polygon, COINCIDENT_EPS_M};

/// Alpha value whose shape is indistinguishable from the convex hull for
/// any realistic coordinate magnitude, used as the auto-tuning fallback.
pub const ALPHA_HULL: f64 = 1e-12;

/// A deduplicated planar point set in canonical (lexicographic) order.
///
/// Points closer than [`COINCIDENT_EPS_M`] are merged, keeping the first.
/// Canonical order makes every downstream construction deterministic for a
/// given set of coordinates regardless of input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PlanarPoint>", into = "Vec<PlanarPoint>")]
pub struct PointSet {
    points: Vec<PlanarPoint>,
}

impl PointSet {
    pub fn new(mut points: Vec<PlanarPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateInput("empty point set".into()));
        }
        for p in &points {
            if !p.is_finite() {
                return Err(Error::InvalidCoordinate("non-finite planar point".into()));
            }
        }
        points.sort_by(|a, b| a.lex_cmp(*b));
        let mut kept: Vec<PlanarPoint> = Vec::with_capacity(points.len());
        for p in points {
            let dup = kept
                .iter()
                .rev()
                .take_while(|k| p.x - k.x <= COINCIDENT_EPS_M)
                .any(|k| k.distance(p) <= COINCIDENT_EPS_M);
            if !dup {
                kept.push(p);
            }
        }
        Ok(PointSet { points: kept })
    }

    pub fn points(&self) -> &[PlanarPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<Vec<PlanarPoint>> for PointSet {
    type Error = Error;

    fn try_from(v: Vec<PlanarPoint>) -> Result<Self> {
        PointSet::new(v)
    }
}

impl From<PointSet> for Vec<PlanarPoint> {
    fn from(s: PointSet) -> Self {
        s.points
    }
}

/// A Delaunay triangulation of a [`PointSet`].
///
/// Triangles are CCW-oriented index triples into [`points`](Self::points),
/// stored in a canonical order so identical inputs produce byte-identical
/// results. `circumradii[i]` belongs to `triangles[i]`.
#[derive(Debug, Clone)]
pub struct Triangulation {
    points: Vec<PlanarPoint>,
    triangles: Vec<[usize; 3]>,
    circumradii: Vec<f64>,
}

impl Triangulation {
    pub fn points(&self) -> &[PlanarPoint] {
        &self.points
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn circumradii(&self) -> &[f64] {
        &self.circumradii
    }

    pub fn triangle_points(&self, i: usize) -> [PlanarPoint; 3] {
        let t = self.triangles[i];
        [self.points[t[0]], self.points[t[1]], self.points[t[2]]]
    }
}

/// Circumradius of triangle `(a, b, c)`: `|ab| |bc| |ca| / (4 area)`.
/// Collinear triples have no circumscribed circle and report infinity.
pub fn circumradius(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    let area2 = orient2d(a, b, c).abs();
    if area2 == 0.0 {
        return f64::INFINITY;
    }
    a.distance(b) * b.distance(c) * c.distance(a) / (2.0 * area2)
}

/// Circumcenter of triangle `(a, b, c)`, or `None` for collinear triples.
/// Computed in a frame translated to `a` to keep the determinant
/// well conditioned for coordinates far from the origin.
pub fn circumcenter(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> Option<PlanarPoint> {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some(PlanarPoint::new(a.x + ux, a.y + uy))
}

/// Strictly positive when `d` lies inside the circumcircle of CCW `(a, b, c)`.
fn in_circle(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> f64 {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

fn ccw(points: &[PlanarPoint], t: [usize; 3]) -> [usize; 3] {
    if orient2d(points[t[0]], points[t[1]], points[t[2]]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

/// Delaunay triangulation by lexicographic incremental insertion followed by
/// Lawson flip legalization. Every input point becomes a vertex; the union
/// of triangles covers the convex hull.
pub fn delaunay(set: &PointSet) -> Result<Triangulation> {
    let pts = set.points();
    let n = pts.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "triangulation needs at least 3 distinct points, got {n}"
        )));
    }

    // Points are sorted, so the startup prefix collinear with the first two
    // points forms a monotone chain along one line.
    let mut k = 2;
    while k < n && orient2d(pts[0], pts[1], pts[k]) == 0.0 {
        k += 1;
    }
    if k == n {
        return Err(Error::DegenerateInput("all points collinear".into()));
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(2 * n);
    for i in 0..k - 1 {
        triangles.push(ccw(pts, [i, i + 1, k]));
    }
    // Hull ring in CCW order; collinear chain vertices stay on the ring so
    // later insertions cannot create triangles overlapping the fan.
    let mut hull: Vec<usize> = if orient2d(pts[0], pts[k - 1], pts[k]) > 0.0 {
        let mut h: Vec<usize> = (0..k).collect();
        h.push(k);
        h
    } else {
        let mut h: Vec<usize> = (0..k).rev().collect();
        h.push(k);
        h
    };

    for p in k + 1..n {
        let h = hull.len();
        let visible: Vec<bool> = (0..h)
            .map(|i| orient2d(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]) < 0.0)
            .collect();
        // The point is lexicographically beyond every hull vertex, so it is
        // outside the hull and its visible edges form one contiguous run.
        let Some(first) = (0..h).find(|&i| visible[i] && !visible[(i + h - 1) % h]) else {
            return Err(Error::DegenerateInput(format!(
                "no hull edge visible from point {p}; input nearly degenerate"
            )));
        };
        let mut run = 0;
        while run < h && visible[(first + run) % h] {
            run += 1;
        }
        debug_assert_eq!(
            visible.iter().filter(|&&v| v).count(),
            run,
            "visible edges not contiguous"
        );
        for i in 0..run {
            let a = hull[(first + i) % h];
            let b = hull[(first + i + 1) % h];
            triangles.push(ccw(pts, [a, b, p]));
        }
        // Splice: keep the arc start, insert the new point, then walk the
        // invisible side from the arc end back around to just before start.
        let mut next: Vec<usize> = Vec::with_capacity(h - run + 2);
        next.push(hull[first]);
        next.push(p);
        for j in 0..(h - run) {
            next.push(hull[(first + run + j) % h]);
        }
        hull = next;
    }

    legalize(pts, &mut triangles);

    let mut triangles: Vec<[usize; 3]> = triangles
        .into_iter()
        .map(|t| canonical_rotation(t))
        .collect();
    triangles.sort_unstable();
    let circumradii = triangles
        .iter()
        .map(|t| circumradius(pts[t[0]], pts[t[1]], pts[t[2]]))
        .collect();
    Ok(Triangulation {
        points: pts.to_vec(),
        triangles,
        circumradii,
    })
}

/// Rotate indices so the smallest comes first, preserving orientation.
fn canonical_rotation(t: [usize; 3]) -> [usize; 3] {
    if t[0] < t[1] && t[0] < t[2] {
        t
    } else if t[1] < t[2] {
        [t[1], t[2], t[0]]
    } else {
        [t[2], t[0], t[1]]
    }
}

/// Lawson legalization: flip shared edges whose opposite vertex lands
/// strictly inside a neighbour's circumcircle, until stable. The in-circle
/// threshold scales with the fourth power of the local edge length, keeping
/// exactly-cocircular quadruples (grids) from flipping forever.
fn legalize(pts: &[PlanarPoint], triangles: &mut Vec<[usize; 3]>) {
    let max_passes = 10 * pts.len() + 100;
    for _ in 0..max_passes {
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v, apex) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let key = (u.min(v), u.max(v));
                edges.entry(key).or_default().push((ti, apex));
            }
        }
        let mut keys: Vec<_> = edges.keys().cloned().collect();
        keys.sort_unstable();
        let mut flips = 0;
        for key in keys {
            let inc = &edges[&key];
            if inc.len() != 2 {
                continue;
            }
            let ((t1, apex1), (t2, apex2)) = (inc[0], inc[1]);
            // Entries may be stale after earlier flips in this pass.
            let still = |ti: usize, apex: usize| {
                let t = triangles[ti];
                t.contains(&key.0) && t.contains(&key.1) && t.contains(&apex)
            };
            if !still(t1, apex1) || !still(t2, apex2) {
                continue;
            }
            let [a, b, c] = ccw(pts, [key.0, key.1, apex1]);
            let scale = pts[a]
                .distance_sq(pts[b])
                .max(pts[b].distance_sq(pts[c]))
                .max(pts[c].distance_sq(pts[a]))
                .max(pts[a].distance_sq(pts[apex2]));
            if in_circle(pts[a], pts[b], pts[c], pts[apex2]) > 1e-12 * scale * scale {
                let n1 = [key.0, apex2, apex1];
                let n2 = [key.1, apex1, apex2];
                // Refuse flips that would create a zero-area triangle.
                if orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) == 0.0
                    || orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) == 0.0
                {
                    continue;
                }
                triangles[t1] = ccw(pts, n1);
                triangles[t2] = ccw(pts, n2);
                flips += 1;
            }
        }
        if flips == 0 {
            return;
        }
    }
    log::warn!("edge legalization did not converge within the pass budget");
}

/// An alpha shape: the boundary rings of the alpha complex, together with
/// the alpha value and the source points that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaShape {
    alpha: f64,
    boundary: Vec<Polygon>,
    source: PointSet,
}

impl AlphaShape {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Boundary rings in a canonical order. Empty when alpha was large
    /// enough to erode the shape away entirely.
    pub fn boundary(&self) -> &[Polygon] {
        &self.boundary
    }

    pub fn source(&self) -> &PointSet {
        &self.source
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Membership test. A point inside any ring counts as inside, which
    /// treats interior holes as part of the shape; for restricted-area
    /// screening that is the conservative reading.
    pub fn contains(&self, p: PlanarPoint) -> bool {
        self.boundary.iter().any(|ring| ring.contains(p))
    }

    /// Minimum signed ring distance: negative inside. Near a filled hole the
    /// magnitude reports depth within the outermost ring, consistent with
    /// [`contains`](Self::contains).
    pub fn signed_distance(&self, p: PlanarPoint) -> f64 {
        self.boundary
            .iter()
            .map(|ring| ring.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total area enclosed by the rings (holes count positive, matching the
    /// filled-hole membership semantics).
    pub fn area(&self) -> f64 {
        self.boundary.iter().map(Polygon::area).sum()
    }
}

/// Builds the alpha shape for a fixed `alpha > 0`.
pub fn alpha_shape(set: &PointSet, alpha: f64) -> Result<AlphaShape> {
    let tri = delaunay(set)?;
    alpha_shape_from_triangulation(&tri, set, alpha)
}

/// As [`alpha_shape`], but reuses an existing triangulation of `set`.
/// [`auto_alpha`] calls this in a loop where re-triangulating would dominate.
pub fn alpha_shape_from_triangulation(
    tri: &Triangulation,
    set: &PointSet,
    alpha: f64,
) -> Result<AlphaShape> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::UnsupportedParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let r_max = 1.0 / alpha;
    let kept: Vec<[usize; 3]> = tri
        .triangles()
        .iter()
        .zip(tri.circumradii())
        .filter(|(_, &r)| r < r_max)
        .map(|(t, _)| *t)
        .collect();
    let boundary = boundary_rings(tri.points(), &kept)?;
    Ok(AlphaShape {
        alpha,
        boundary,
        source: set.clone(),
    })
}

/// Chains the directed edges that border exactly one kept triangle (kept
/// side on the left) into closed rings. Rings that touch at a pinch vertex
/// are split so every returned ring is a simple polygon.
fn boundary_rings(points: &[PlanarPoint], kept: &[[usize; 3]]) -> Result<Vec<Polygon>> {
    let mut edge_count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for t in kept {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            *edge_count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
        }
    }
    let mut outgoing: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for t in kept {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            if edge_count[&(u.min(v), u.max(v))] == 1 {
                outgoing.entry(u).or_default().insert(v);
            }
        }
    }

    let mut rings: Vec<Vec<usize>> = Vec::new();
    loop {
        let Some(start) = outgoing
            .iter()
            .find(|(_, heads)| !heads.is_empty())
            .map(|(&tail, _)| tail)
        else {
            break;
        };
        let mut path = vec![start];
        let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
        while let Some(&cur) = path.last() {
            let next = outgoing.get_mut(&cur).and_then(|heads| heads.pop_first());
            let Some(next) = next else {
                if path.len() == 1 {
                    path.pop();
                    break;
                }
                // Boundary edges of a complex always balance in/out degree.
                return Err(Error::InvalidGeometry(
                    "dangling boundary edge in alpha complex".into(),
                ));
            };
            if let Some(&j) = pos.get(&next) {
                let ring: Vec<usize> = path[j..].to_vec();
                for v in &path[j + 1..] {
                    pos.remove(v);
                }
                path.truncate(j + 1);
                rings.push(ring);
            } else {
                pos.insert(next, path.len());
                path.push(next);
            }
        }
    }

    let mut polygons = rings
        .into_iter()
        .map(|ring| Polygon::new(ring.into_iter().map(|i| points[i]).collect()))
        .collect::<Result<Vec<_>>>()?;
    polygons.sort_by(|a, b| a.vertices()[0].lex_cmp(b.vertices()[0]));
    Ok(polygons)
}

/// Finds the largest alpha whose shape is a single ring containing every
/// input point, by bisecting 64 times between [`ALPHA_HULL`] and the inverse
/// of the smallest circumradius. Falls back to [`ALPHA_HULL`] when no
/// tighter boundary qualifies.
pub fn auto_alpha(set: &PointSet) -> Result<f64> {
    let tri = delaunay(set)?;
    let mut sorted_radii: Vec<f64> = tri
        .circumradii()
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    sorted_radii.sort_by(f64::total_cmp);
    let Some(&min_r) = sorted_radii.first() else {
        return Ok(ALPHA_HULL);
    };

    // The kept set only changes when 1/alpha crosses a circumradius, so
    // qualification is memoized on the kept-triangle count.
    let mut cache: HashMap<usize, bool> = HashMap::new();
    let mut qualifies = |alpha: f64| -> bool {
        let kept_count = sorted_radii.partition_point(|&r| r < 1.0 / alpha);
        *cache.entry(kept_count).or_insert_with(|| {
            match alpha_shape_from_triangulation(&tri, set, alpha) {
                Ok(shape) => {
                    shape.boundary.len() == 1
                        && set.points().iter().all(|&p| shape.boundary[0].contains(p))
                }
                Err(_) => false,
            }
        })
    };

    let mut lo = ALPHA_HULL;
    let mut hi = 1.0 / min_r;
    if !qualifies(lo) {
        return Ok(ALPHA_HULL);
    }
    if qualifies(hi) {
        return Ok(hi);
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if qualifies(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Convex hull by monotone chain. Collinear in-edge points are dropped, so
/// hull vertices are exactly the extreme points.
pub fn convex_hull(set: &PointSet) -> Result<Polygon> {
    let pts = set.points();
    if pts.len() < 3 {
        return Err(Error::DegenerateInput(
            "convex hull needs at least 3 distinct points".into(),
        ));
    }
    let mut lower: Vec<PlanarPoint> = Vec::new();
    for &p in pts {
        while lower.len() >= 2
            && orient2d(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<PlanarPoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && orient2d(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(Error::DegenerateInput("all points collinear".into()));
    }
    lower.reverse(); // monotone chain with <= pops yields CW; flip to CCW
    Polygon::new(lower)
}

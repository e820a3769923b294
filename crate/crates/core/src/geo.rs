//! Planar primitives, the local tangent-plane projection, and the
//! point/polygon predicates every other module builds on.
//!
//! All planar quantities are metres in a local east/north frame produced by
//! [`LocalProjection`]; geographic positions are WGS-84 degrees. The
//! projection is the equirectangular approximation, which keeps positional
//! error below ~0.1% within 50 km of the origin, comfortably inside GNSS
//! noise for the operational radii this crate targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in metres, shared by the projection and haversine.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Absolute tolerance, in metres, below which planar points are treated as
/// coincident and a point counts as lying on a polygon boundary.
pub const COINCIDENT_EPS_M: f64 = 1e-9;

/// A geographic position: WGS-84 degrees plus optional altitude in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lon")]
    pub lon_deg: f64,
    /// Metres above the reference surface; `None` for 2-D fixes.
    #[serde(rename = "alt", skip_serializing_if = "Option::is_none", default)]
    pub alt_m: Option<f64>,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        let p = GeoPoint { lat_deg, lon_deg, alt_m: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_alt(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Result<Self> {
        let p = GeoPoint { lat_deg, lon_deg, alt_m: Some(alt_m) };
        p.validate()?;
        Ok(p)
    }

    /// Range/finiteness check; deserialized values must pass through here.
    pub fn validate(&self) -> Result<()> {
        if !self.lat_deg.is_finite() || self.lat_deg.abs() > 90.0 {
            return Err(Error::InvalidCoordinate(format!(
                "latitude {} out of [-90, 90]",
                self.lat_deg
            )));
        }
        if !self.lon_deg.is_finite() || self.lon_deg.abs() > 180.0 {
            return Err(Error::InvalidCoordinate(format!(
                "longitude {} out of [-180, 180]",
                self.lon_deg
            )));
        }
        if let Some(a) = self.alt_m {
            if !a.is_finite() {
                return Err(Error::InvalidCoordinate("altitude not finite".into()));
            }
        }
        Ok(())
    }
}

/// A point in the local east (`x`) / north (`y`) metric frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn distance(self, other: PlanarPoint) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(self, other: PlanarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic (x, then y) order; total because inputs are finite.
    pub fn lex_cmp(self, other: PlanarPoint) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
    }
}

/// Twice the signed area of triangle `(a, b, c)`; positive when `c` lies to
/// the left of the directed line `a -> b`.
pub fn orient2d(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Distance from `p` to the closed segment `a..b`.
pub fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.distance(PlanarPoint::new(a.x + t * abx, a.y + t * aby))
}

fn on_segment(a: PlanarPoint, b: PlanarPoint, q: PlanarPoint) -> bool {
    q.x >= a.x.min(b.x) && q.x <= a.x.max(b.x) && q.y >= a.y.min(b.y) && q.y <= a.y.max(b.y)
}

/// Whether closed segments `p1..p2` and `p3..p4` share any point,
/// endpoints and collinear overlap included.
pub fn segments_intersect(
    p1: PlanarPoint,
    p2: PlanarPoint,
    p3: PlanarPoint,
    p4: PlanarPoint,
) -> bool {
    let d1 = orient2d(p3, p4, p1);
    let d2 = orient2d(p3, p4, p2);
    let d3 = orient2d(p1, p2, p3);
    let d4 = orient2d(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Minimum distance between two closed segments (zero when they touch).
pub fn segment_segment_distance(
    p1: PlanarPoint,
    p2: PlanarPoint,
    p3: PlanarPoint,
    p4: PlanarPoint,
) -> f64 {
    if segments_intersect(p1, p2, p3, p4) {
        return 0.0;
    }
    point_segment_distance(p1, p3, p4)
        .min(point_segment_distance(p2, p3, p4))
        .min(point_segment_distance(p3, p1, p2))
        .min(point_segment_distance(p4, p1, p2))
}

/// Equirectangular local tangent projection around a fixed origin.
///
/// `x` grows east, `y` grows north:
/// `x = R * (lon - lon0) * pi/180 * cos(lat0)`, `y = R * (lat - lat0) * pi/180`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    #[serde(rename = "origin_lat")]
    origin_lat_deg: f64,
    #[serde(rename = "origin_lon")]
    origin_lon_deg: f64,
}

impl LocalProjection {
    /// Origin latitude is capped at +/-89 degrees so the longitude scale
    /// factor stays well away from zero.
    pub fn new(origin: GeoPoint) -> Result<Self> {
        origin.validate()?;
        if origin.lat_deg.abs() > 89.0 {
            return Err(Error::UnsupportedParameter(format!(
                "projection origin latitude {} beyond +/-89 degrees",
                origin.lat_deg
            )));
        }
        Ok(LocalProjection {
            origin_lat_deg: origin.lat_deg,
            origin_lon_deg: origin.lon_deg,
        })
    }

    pub fn origin(&self) -> GeoPoint {
        GeoPoint {
            lat_deg: self.origin_lat_deg,
            lon_deg: self.origin_lon_deg,
            alt_m: None,
        }
    }

    pub fn project(&self, p: &GeoPoint) -> Result<PlanarPoint> {
        p.validate()?;
        let cos_lat0 = self.origin_lat_deg.to_radians().cos();
        let x = EARTH_RADIUS_M * (p.lon_deg - self.origin_lon_deg).to_radians() * cos_lat0;
        let y = EARTH_RADIUS_M * (p.lat_deg - self.origin_lat_deg).to_radians();
        Ok(PlanarPoint::new(x, y))
    }

    /// Inverse of [`project`](Self::project); altitude is carried through.
    pub fn unproject(&self, p: PlanarPoint, alt_m: Option<f64>) -> GeoPoint {
        let cos_lat0 = self.origin_lat_deg.to_radians().cos();
        GeoPoint {
            lat_deg: self.origin_lat_deg + (p.y / EARTH_RADIUS_M).to_degrees(),
            lon_deg: self.origin_lon_deg + (p.x / (EARTH_RADIUS_M * cos_lat0)).to_degrees(),
            alt_m,
        }
    }
}

/// Great-circle distance in metres between two geographic points,
/// ignoring altitude. Used for operator-facing reporting; internal
/// geometry runs on projected coordinates.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dphi = (b.lat_deg - a.lat_deg).to_radians();
    let dlam = (b.lon_deg - a.lon_deg).to_radians();
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlam / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * s.sqrt().asin()
}

/// Axis-aligned rectangle with strictly positive extent on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: PlanarPoint,
    pub max: PlanarPoint,
}

impl BoundingBox {
    pub fn new(min: PlanarPoint, max: PlanarPoint) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min.x >= max.x || min.y >= max.y {
            return Err(Error::InvalidGeometry(format!(
                "bounding box must have positive extent, got ({}, {})..({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(BoundingBox { min, max })
    }

    /// Tight box around `points`, padded by `margin` on every side.
    /// The margin keeps the box valid even for a single input point.
    pub fn around<'a, I>(points: I, margin: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a PlanarPoint>,
    {
        if !(margin > 0.0) || !margin.is_finite() {
            return Err(Error::UnsupportedParameter(
                "bounding box margin must be positive and finite".into(),
            ));
        }
        let mut it = points.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::DegenerateInput("bounding box of no points".into()))?;
        let (mut lo, mut hi) = (*first, *first);
        for p in it {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        BoundingBox::new(
            PlanarPoint::new(lo.x - margin, lo.y - margin),
            PlanarPoint::new(hi.x + margin, hi.y + margin),
        )
    }

    pub fn contains(&self, p: PlanarPoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn expand(&self, margin: f64) -> BoundingBox {
        BoundingBox {
            min: PlanarPoint::new(self.min.x - margin, self.min.y - margin),
            max: PlanarPoint::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> PlanarPoint {
        PlanarPoint::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [PlanarPoint; 4] {
        [
            self.min,
            PlanarPoint::new(self.max.x, self.min.y),
            self.max,
            PlanarPoint::new(self.min.x, self.max.y),
        ]
    }
}

/// A simple polygon in normal form: counterclockwise vertex order, first
/// vertex lexicographically smallest, no repeated or reversing vertices,
/// no self-intersection. Normal form makes structural equality meaningful
/// for rings that were built in different orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PlanarPoint>", into = "Vec<PlanarPoint>")]
pub struct Polygon {
    vertices: Vec<PlanarPoint>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<PlanarPoint>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        for v in &vertices {
            if !v.is_finite() {
                return Err(Error::InvalidGeometry("non-finite polygon vertex".into()));
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a.distance(b) <= COINCIDENT_EPS_M {
                return Err(Error::InvalidGeometry(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let area2 = signed_area2(&vertices);
        if area2.abs() < 1e-12 {
            return Err(Error::InvalidGeometry("polygon has zero area".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        // Rotate the lexicographically smallest vertex to the front so equal
        // rings compare equal regardless of construction order.
        let start = (0..n)
            .min_by(|&i, &j| vertices[i].lex_cmp(vertices[j]))
            .unwrap();
        vertices.rotate_left(start);

        // A vertex where the boundary doubles back on itself produces a
        // zero-width spike that the ray-cast predicate cannot classify.
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            if orient2d(a, b, c) == 0.0
                && (a.x - b.x) * (c.x - b.x) + (a.y - b.y) * (c.y - b.y) > 0.0
            {
                return Err(Error::InvalidGeometry(format!(
                    "boundary reverses direction at vertex {i}"
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // Adjacent edges share exactly one endpoint by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
                let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return Err(Error::InvalidGeometry(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Enclosed area in square metres (positive; vertices are CCW).
    pub fn area(&self) -> f64 {
        signed_area2(&self.vertices) / 2.0
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Arithmetic mean of the vertices. Adequate as a label/anchor point;
    /// not the area centroid.
    pub fn vertex_centroid(&self) -> PlanarPoint {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        PlanarPoint::new(sx / n, sy / n)
    }

    pub fn extent(&self) -> (PlanarPoint, PlanarPoint) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Distance from `p` to the nearest boundary point.
    pub fn boundary_distance(&self, p: PlanarPoint) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Ray-cast parity: casts a ray toward +x and counts half-open edge
    /// crossings (an edge counts when exactly one endpoint is strictly above
    /// the ray), which handles rays through vertices without double counting.
    fn ray_parity(&self, p: PlanarPoint) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x_cross > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when `p` is inside or within [`COINCIDENT_EPS_M`] of the
    /// boundary. Counting the boundary as inside errs toward detection,
    /// the safe direction for a restricted area.
    pub fn contains(&self, p: PlanarPoint) -> bool {
        self.boundary_distance(p) <= COINCIDENT_EPS_M || self.ray_parity(p)
    }

    /// Distance to the boundary, negative inside (boundary included),
    /// positive outside. Sign agrees with [`contains`](Self::contains).
    pub fn signed_distance(&self, p: PlanarPoint) -> f64 {
        let d = self.boundary_distance(p);
        if d <= COINCIDENT_EPS_M || self.ray_parity(p) {
            -d
        } else {
            d
        }
    }
}

impl TryFrom<Vec<PlanarPoint>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<PlanarPoint>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<PlanarPoint> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn signed_area2(vertices: &[PlanarPoint]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    s
}

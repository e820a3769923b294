//! Zone definitions, keep-in/keep-out semantics, and layered buffer
//! evaluation.
//!
//! A [`Zone`] pairs a [`ZoneGeometry`] with a mode and two buffer distances.
//! Evaluating a position yields a [`ViolationStatus`]: `Violation` inside
//! the restricted volume, `Terminate` within the termination buffer,
//! `Warning` within the warning buffer, `Clear` beyond. Keep-in zones mirror
//! the sign convention so that leaving the permitted region is the
//! violation. [`CompiledDatabase::evaluate_all`] screens a position against
//! every zone through a uniform-grid index whose results are
//! equivalence-tested against a linear scan.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::alphashape::AlphaShape;
use crate::error::{Error, Result};
use crate::geo::{BoundingBox, GeoPoint, PlanarPoint, Polygon};
use crate::repository::CompiledDatabase;

/// Default graduated buffer distances, configurable per zone.
pub const DEFAULT_WARNING_BUFFER_M: f64 = 50.0;
pub const DEFAULT_TERMINATION_BUFFER_M: f64 = 20.0;

/// How far beyond the outermost zone extent a query still counts as covered
/// by the database.
pub const COVERAGE_MARGIN_M: f64 = 10_000.0;

/// The restricted volume of a zone.
///
/// Polygonal and alpha-shape zones are unbounded in altitude; altitude
/// limits require `Cylindrical`. `Spherical` and `Cylindrical` need an
/// altitude to evaluate exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoneGeometry {
    Polygonal {
        ring: Polygon,
    },
    AlphaZone {
        shape: AlphaShape,
    },
    Circular {
        center: PlanarPoint,
        radius_m: f64,
    },
    Spherical {
        center: PlanarPoint,
        center_alt_m: f64,
        radius_m: f64,
    },
    Cylindrical {
        center: PlanarPoint,
        radius_m: f64,
        alt_min_m: f64,
        alt_max_m: f64,
    },
    Elliptical {
        center: PlanarPoint,
        semi_major_m: f64,
        semi_minor_m: f64,
        heading_deg: f64,
    },
}

impl ZoneGeometry {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            ZoneGeometry::Polygonal { .. } => Ok(()),
            ZoneGeometry::AlphaZone { shape } => {
                if shape.is_empty() {
                    Err(Error::InvalidGeometry(
                        "alpha zone with empty boundary".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            ZoneGeometry::Circular { center, radius_m }
            | ZoneGeometry::Spherical {
                center, radius_m, ..
            } => {
                if !center.is_finite() || !finite_pos(*radius_m) {
                    Err(Error::InvalidGeometry("radius must be positive".into()))
                } else {
                    Ok(())
                }
            }
            ZoneGeometry::Cylindrical {
                center,
                radius_m,
                alt_min_m,
                alt_max_m,
            } => {
                if !center.is_finite()
                    || !finite_pos(*radius_m)
                    || !alt_min_m.is_finite()
                    || !alt_max_m.is_finite()
                    || alt_min_m >= alt_max_m
                {
                    Err(Error::InvalidGeometry(
                        "cylinder needs positive radius and alt_min < alt_max".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            ZoneGeometry::Elliptical {
                center,
                semi_major_m,
                semi_minor_m,
                heading_deg,
            } => {
                if !center.is_finite()
                    || !finite_pos(*semi_major_m)
                    || !finite_pos(*semi_minor_m)
                    || semi_major_m < semi_minor_m
                    || !heading_deg.is_finite()
                {
                    Err(Error::InvalidGeometry(
                        "ellipse needs finite heading and semi_major >= semi_minor > 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn needs_altitude(&self) -> bool {
        matches!(
            self,
            ZoneGeometry::Spherical { .. } | ZoneGeometry::Cylindrical { .. }
        )
    }

    /// Reference point for the spatial index.
    pub fn anchor(&self) -> PlanarPoint {
        match self {
            ZoneGeometry::Polygonal { ring } => {
                let (lo, hi) = ring.extent();
                PlanarPoint::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0)
            }
            ZoneGeometry::AlphaZone { shape } => {
                let mut lo = shape.boundary()[0].vertices()[0];
                let mut hi = lo;
                for ring in shape.boundary() {
                    let (rlo, rhi) = ring.extent();
                    lo.x = lo.x.min(rlo.x);
                    lo.y = lo.y.min(rlo.y);
                    hi.x = hi.x.max(rhi.x);
                    hi.y = hi.y.max(rhi.y);
                }
                PlanarPoint::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0)
            }
            ZoneGeometry::Circular { center, .. }
            | ZoneGeometry::Spherical { center, .. }
            | ZoneGeometry::Cylindrical { center, .. }
            | ZoneGeometry::Elliptical { center, .. } => *center,
        }
    }

    /// Radius of a circle around [`anchor`](Self::anchor) that contains the
    /// planar footprint of the restricted volume.
    pub fn footprint_radius(&self) -> f64 {
        match self {
            ZoneGeometry::Polygonal { ring } => {
                let a = self.anchor();
                ring.vertices()
                    .iter()
                    .map(|v| a.distance(*v))
                    .fold(0.0, f64::max)
            }
            ZoneGeometry::AlphaZone { shape } => {
                let a = self.anchor();
                shape
                    .boundary()
                    .iter()
                    .flat_map(|r| r.vertices())
                    .map(|v| a.distance(*v))
                    .fold(0.0, f64::max)
            }
            ZoneGeometry::Circular { radius_m, .. }
            | ZoneGeometry::Spherical { radius_m, .. }
            | ZoneGeometry::Cylindrical { radius_m, .. } => *radius_m,
            ZoneGeometry::Elliptical { semi_major_m, .. } => *semi_major_m,
        }
    }

    /// Signed distance to the restricted boundary, negative inside.
    ///
    /// With `footprint_2d` set, altitude-dependent geometries evaluated
    /// without an altitude collapse to their planar footprint (the most
    /// conservative altitude); otherwise the altitude is required.
    fn signed_distance_impl(
        &self,
        p: PlanarPoint,
        alt_m: Option<f64>,
        footprint_2d: bool,
    ) -> Result<f64> {
        match self {
            ZoneGeometry::Polygonal { ring } => Ok(ring.signed_distance(p)),
            ZoneGeometry::AlphaZone { shape } => Ok(shape.signed_distance(p)),
            ZoneGeometry::Circular { center, radius_m } => Ok(center.distance(p) - radius_m),
            ZoneGeometry::Spherical {
                center,
                center_alt_m,
                radius_m,
            } => match (alt_m, footprint_2d) {
                (Some(alt), _) => {
                    let dz = alt - center_alt_m;
                    let planar = center.distance(p);
                    Ok((planar * planar + dz * dz).sqrt() - radius_m)
                }
                (None, true) => Ok(center.distance(p) - radius_m),
                (None, false) => Err(Error::MissingAltitude("spherical")),
            },
            ZoneGeometry::Cylindrical {
                center,
                radius_m,
                alt_min_m,
                alt_max_m,
            } => {
                let radial = center.distance(p) - radius_m;
                match (alt_m, footprint_2d) {
                    (Some(alt), _) => {
                        let vertical = (alt_min_m - alt).max(alt - alt_max_m);
                        Ok(radial.max(vertical))
                    }
                    (None, true) => Ok(radial),
                    (None, false) => Err(Error::MissingAltitude("cylindrical")),
                }
            }
            ZoneGeometry::Elliptical {
                center,
                semi_major_m,
                semi_minor_m,
                heading_deg,
            } => Ok(ellipse_signed_distance(
                *center,
                *semi_major_m,
                *semi_minor_m,
                *heading_deg,
                p,
            )),
        }
    }
}

/// Signed distance to an ellipse boundary: 64 coarse boundary samples pick
/// the nearest arc, then a ternary search refines within it. Error stays
/// far below 0.1% of the semi-minor axis for the aspect ratios zones use;
/// the exact solution would need a quartic solve.
fn ellipse_signed_distance(
    center: PlanarPoint,
    a: f64,
    b: f64,
    heading_deg: f64,
    p: PlanarPoint,
) -> f64 {
    let (sin_h, cos_h) = heading_deg.to_radians().sin_cos();
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    // Rotate into the ellipse frame: x along the semi-major axis.
    let xe = dx * cos_h + dy * sin_h;
    let ye = -dx * sin_h + dy * cos_h;
    let inside = (xe / a).powi(2) + (ye / b).powi(2) <= 1.0;

    let boundary_dist = |t: f64| {
        let bx = a * t.cos();
        let by = b * t.sin();
        ((xe - bx).powi(2) + (ye - by).powi(2)).sqrt()
    };
    const COARSE: usize = 64;
    let step = 2.0 * std::f64::consts::PI / COARSE as f64;
    let mut best_k = 0;
    let mut best_d = f64::INFINITY;
    for k in 0..COARSE {
        let d = boundary_dist(k as f64 * step);
        if d < best_d {
            best_d = d;
            best_k = k;
        }
    }
    let mut lo = (best_k as f64 - 1.0) * step;
    let mut hi = (best_k as f64 + 1.0) * step;
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if boundary_dist(m1) <= boundary_dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let d = boundary_dist(0.5 * (lo + hi));
    if inside {
        -d
    } else {
        d
    }
}

/// Whether the zone bounds the permitted region (keep-in) or a restricted
/// one (keep-out).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneMode {
    KeepIn,
    KeepOut,
}

/// Severity of a position relative to one zone, ordered `Clear` <
/// `Warning` < `Terminate` < `Violation`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ViolationStatus {
    Clear,
    Warning,
    Terminate,
    Violation,
}

impl std::fmt::Display for ViolationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ViolationStatus::Clear => "Clear",
            ViolationStatus::Warning => "Warning",
            ViolationStatus::Terminate => "Terminate",
            ViolationStatus::Violation => "Violation",
        };
        f.write_str(s)
    }
}

/// One geofence record in a compiled database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub category: String,
    pub mode: ZoneMode,
    pub geometry: ZoneGeometry,
    pub warning_buffer_m: f64,
    pub termination_buffer_m: f64,
    #[serde(default)]
    pub dynamic: bool,
}

impl Zone {
    pub fn new(
        id: impl Into<String>,
        name: Option<String>,
        category: impl Into<String>,
        mode: ZoneMode,
        geometry: ZoneGeometry,
        warning_buffer_m: f64,
        termination_buffer_m: f64,
        dynamic: bool,
    ) -> Result<Self> {
        let zone = Zone {
            id: id.into(),
            name,
            category: category.into(),
            mode,
            geometry,
            warning_buffer_m,
            termination_buffer_m,
            dynamic,
        };
        zone.validate()?;
        Ok(zone)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidInput("zone id must be non-empty".into()));
        }
        if !self.termination_buffer_m.is_finite()
            || !self.warning_buffer_m.is_finite()
            || self.termination_buffer_m < 0.0
            || self.warning_buffer_m < self.termination_buffer_m
        {
            return Err(Error::UnsupportedParameter(format!(
                "zone {}: buffers must satisfy warning >= termination >= 0",
                self.id
            )));
        }
        if self.dynamic
            && !matches!(
                self.geometry,
                ZoneGeometry::Spherical { .. } | ZoneGeometry::Circular { .. }
            )
        {
            return Err(Error::InvalidGeometry(format!(
                "dynamic zone {} must be spherical or circular",
                self.id
            )));
        }
        self.geometry.validate()
    }

    /// Geometric membership in the restricted volume, independent of mode.
    /// Spherical and cylindrical geometries require an altitude.
    pub fn contains(&self, p: PlanarPoint, alt_m: Option<f64>) -> Result<bool> {
        if alt_m.is_none() && self.geometry.needs_altitude() {
            return match self.geometry {
                ZoneGeometry::Spherical { .. } => Err(Error::MissingAltitude("spherical")),
                _ => Err(Error::MissingAltitude("cylindrical")),
            };
        }
        match &self.geometry {
            ZoneGeometry::Polygonal { ring } => Ok(ring.contains(p)),
            ZoneGeometry::AlphaZone { shape } => Ok(shape.contains(p)),
            ZoneGeometry::Cylindrical {
                center,
                radius_m,
                alt_min_m,
                alt_max_m,
            } => {
                let alt = alt_m.unwrap();
                Ok(center.distance(p) <= *radius_m && alt >= *alt_min_m && alt <= *alt_max_m)
            }
            ZoneGeometry::Elliptical {
                center,
                semi_major_m,
                semi_minor_m,
                heading_deg,
            } => {
                let (sin_h, cos_h) = heading_deg.to_radians().sin_cos();
                let dx = p.x - center.x;
                let dy = p.y - center.y;
                let xe = dx * cos_h + dy * sin_h;
                let ye = -dx * sin_h + dy * cos_h;
                Ok((xe / semi_major_m).powi(2) + (ye / semi_minor_m).powi(2) <= 1.0)
            }
            // Circular and spherical reduce to the metric test.
            _ => Ok(self.geometry.signed_distance_impl(p, alt_m, false)? <= 0.0),
        }
    }

    /// Signed distance to the restricted boundary, negative inside.
    pub fn signed_distance(&self, p: PlanarPoint, alt_m: Option<f64>) -> Result<f64> {
        self.geometry.signed_distance_impl(p, alt_m, false)
    }

    /// Full buffer evaluation of one zone.
    pub fn evaluate(&self, p: PlanarPoint, alt_m: Option<f64>) -> Result<EvaluationResult> {
        let s = self.signed_distance(p, alt_m)?;
        Ok(self.classify(s))
    }

    /// As [`evaluate`](Self::evaluate), but altitude-dependent geometries
    /// queried without altitude fall back to their planar footprint instead
    /// of erroring. Used by whole-database screening where a 2-D fix must
    /// still produce a conservative answer.
    pub fn evaluate_footprint(
        &self,
        p: PlanarPoint,
        alt_m: Option<f64>,
    ) -> Result<EvaluationResult> {
        let s = self.geometry.signed_distance_impl(p, alt_m, true)?;
        Ok(self.classify(s))
    }

    /// Signed distance to the zone's planar footprint, ignoring altitude
    /// limits. This is the primitive for 2-D path planning, where the most
    /// conservative altitude must be assumed. Never errors.
    pub fn footprint_distance(&self, p: PlanarPoint) -> f64 {
        self.geometry
            .signed_distance_impl(p, None, true)
            .expect("footprint evaluation never needs an altitude")
    }

    fn classify(&self, boundary_distance: f64) -> EvaluationResult {
        // Keep-in mirrors the sign: being deep inside the permitted region
        // is the safe state, crossing outward is the violation.
        let s = match self.mode {
            ZoneMode::KeepOut => boundary_distance,
            ZoneMode::KeepIn => -boundary_distance,
        };
        let status = if s <= 0.0 {
            ViolationStatus::Violation
        } else if s <= self.termination_buffer_m {
            ViolationStatus::Terminate
        } else if s <= self.warning_buffer_m {
            ViolationStatus::Warning
        } else {
            ViolationStatus::Clear
        };
        EvaluationResult {
            zone_id: self.id.clone(),
            status,
            signed_distance_m: boundary_distance,
        }
    }

    /// Distance from the anchor within which this zone can produce a
    /// non-Clear status.
    fn influence_radius(&self) -> f64 {
        self.geometry.footprint_radius() + self.warning_buffer_m
    }
}

/// Outcome of evaluating one zone at one position. `signed_distance_m` is
/// the geometric boundary distance (negative inside the geometry),
/// before keep-in mirroring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub zone_id: String,
    pub status: ViolationStatus,
    pub signed_distance_m: f64,
}

/// Result of screening a position against a whole database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirspaceCheck {
    pub worst: ViolationStatus,
    /// Non-Clear zone results, ordered by zone id.
    pub results: Vec<EvaluationResult>,
    /// Set when the position lies beyond every zone's extent plus
    /// [`COVERAGE_MARGIN_M`]; the status fields are still valid.
    pub out_of_coverage: bool,
}

/// Uniform-grid spatial index over zone anchors.
///
/// Cell size is the largest zone influence radius, so probing the 3x3
/// neighbourhood of the query cell is guaranteed to reach every zone that
/// could report non-Clear. Keep-in zones are listed unconditionally: the
/// aircraft is expected to be inside them, arbitrarily far from their
/// anchor.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell_size: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    keep_in: Vec<usize>,
    coverage: Option<BoundingBox>,
}

impl SpatialIndex {
    pub fn build(zones: &[Zone]) -> SpatialIndex {
        let mut cell_size: f64 = 100.0;
        for z in zones {
            if z.mode == ZoneMode::KeepOut {
                cell_size = cell_size.max(z.influence_radius());
            }
        }
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut keep_in = Vec::new();
        let mut extent: Option<(PlanarPoint, PlanarPoint)> = None;
        for (i, z) in zones.iter().enumerate() {
            let anchor = z.geometry.anchor();
            let r = z.geometry.footprint_radius();
            let (lo, hi) = extent.get_or_insert((anchor, anchor));
            lo.x = lo.x.min(anchor.x - r);
            lo.y = lo.y.min(anchor.y - r);
            hi.x = hi.x.max(anchor.x + r);
            hi.y = hi.y.max(anchor.y + r);
            match z.mode {
                ZoneMode::KeepIn => keep_in.push(i),
                ZoneMode::KeepOut => {
                    cells.entry(Self::cell_of(anchor, cell_size)).or_default().push(i);
                }
            }
        }
        let coverage = extent.map(|(lo, hi)| BoundingBox {
            min: PlanarPoint::new(lo.x - COVERAGE_MARGIN_M, lo.y - COVERAGE_MARGIN_M),
            max: PlanarPoint::new(hi.x + COVERAGE_MARGIN_M, hi.y + COVERAGE_MARGIN_M),
        });
        SpatialIndex {
            cell_size,
            cells,
            keep_in,
            coverage,
        }
    }

    fn cell_of(p: PlanarPoint, cell_size: f64) -> (i64, i64) {
        (
            (p.x / cell_size).floor() as i64,
            (p.y / cell_size).floor() as i64,
        )
    }

    /// Indices of all zones that could report non-Clear at `p`, plus every
    /// keep-in zone. Sorted and duplicate-free.
    pub fn candidates(&self, p: PlanarPoint) -> Vec<usize> {
        let (cx, cy) = Self::cell_of(p, self.cell_size);
        let mut out = self.keep_in.clone();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn in_coverage(&self, p: PlanarPoint) -> bool {
        self.coverage.map(|b| b.contains(p)).unwrap_or(false)
    }
}

impl CompiledDatabase {
    /// Screens a geographic position against every zone.
    ///
    /// Altitude-dependent zones evaluated against a 2-D fix use their planar
    /// footprint (conservative). Results carry every non-Clear zone, ordered
    /// by id; `worst` is the severity maximum.
    pub fn evaluate_all(&self, p: &GeoPoint) -> Result<AirspaceCheck> {
        let xy = self.projection().project(p)?;
        let candidates = self.index().candidates(xy);
        self.evaluate_candidates(xy, p.alt_m, candidates.into_iter())
    }

    /// Exhaustive variant of [`evaluate_all`](Self::evaluate_all), used to
    /// cross-check the spatial index.
    pub fn evaluate_all_linear(&self, p: &GeoPoint) -> Result<AirspaceCheck> {
        let xy = self.projection().project(p)?;
        self.evaluate_candidates(xy, p.alt_m, 0..self.zones().len())
    }

    fn evaluate_candidates(
        &self,
        xy: PlanarPoint,
        alt_m: Option<f64>,
        candidates: impl Iterator<Item = usize>,
    ) -> Result<AirspaceCheck> {
        let zones = self.zones();
        let mut results = Vec::new();
        let mut worst = ViolationStatus::Clear;
        for i in candidates {
            let r = zones[i].evaluate_footprint(xy, alt_m)?;
            if r.status > ViolationStatus::Clear {
                worst = worst.max(r.status);
                results.push(r);
            }
        }
        results.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
        Ok(AirspaceCheck {
            worst,
            results,
            out_of_coverage: !self.index().in_coverage(xy),
        })
    }

    /// Inserts a keep-out zone around another aircraft and returns its id.
    /// Spherical when the position carries altitude, circular otherwise.
    pub fn add_dynamic_zone(&mut self, other_uav: &GeoPoint, radius_m: f64) -> Result<String> {
        if !(radius_m > 0.0) || !radius_m.is_finite() {
            return Err(Error::UnsupportedParameter(format!(
                "dynamic zone radius must be positive, got {radius_m}"
            )));
        }
        let center = self.projection().project(other_uav)?;
        let geometry = match other_uav.alt_m {
            Some(alt) => ZoneGeometry::Spherical {
                center,
                center_alt_m: alt,
                radius_m,
            },
            None => ZoneGeometry::Circular { center, radius_m },
        };
        let id = loop {
            let candidate = format!("dyn:{:04}", self.take_dynamic_counter());
            if self.zone(&candidate).is_none() {
                break candidate;
            }
        };
        let zone = Zone::new(
            id.clone(),
            None,
            "uav",
            ZoneMode::KeepOut,
            geometry,
            self.compile_config().warning_buffer_m,
            self.compile_config().termination_buffer_m,
            true,
        )?;
        self.insert_zone(zone);
        Ok(id)
    }

    /// Removes a zone by id; true when something was removed.
    pub fn remove_zone(&mut self, id: &str) -> bool {
        self.remove_zone_inner(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LocalProjection;
    use crate::repository::{CompileConfig, CompiledDatabase};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pp(x: f64, y: f64) -> PlanarPoint {
        PlanarPoint::new(x, y)
    }

    fn keep_out_circle(id: &str, center: PlanarPoint, r: f64) -> Zone {
        Zone::new(
            id,
            None,
            "test",
            ZoneMode::KeepOut,
            ZoneGeometry::Circular {
                center,
                radius_m: r,
            },
            DEFAULT_WARNING_BUFFER_M,
            DEFAULT_TERMINATION_BUFFER_M,
            false,
        )
        .unwrap()
    }

    fn db_with(zones: Vec<Zone>) -> CompiledDatabase {
        let proj = LocalProjection::new(GeoPoint::new(0.0, 0.0).unwrap()).unwrap();
        CompiledDatabase::from_parts(proj, CompileConfig::default(), zones).unwrap()
    }

    #[test]
    fn zone_validation() {
        let geom = ZoneGeometry::Circular {
            center: pp(0.0, 0.0),
            radius_m: 100.0,
        };
        // warning < termination
        assert!(Zone::new("z", None, "t", ZoneMode::KeepOut, geom.clone(), 10.0, 20.0, false)
            .is_err());
        // dynamic polygon
        let square = ZoneGeometry::Polygonal {
            ring: Polygon::new(vec![pp(0.0, 0.0), pp(1.0, 0.0), pp(1.0, 1.0), pp(0.0, 1.0)])
                .unwrap(),
        };
        assert!(Zone::new("z", None, "t", ZoneMode::KeepOut, square, 50.0, 20.0, true).is_err());
        // bad params
        assert!(ZoneGeometry::Circular {
            center: pp(0.0, 0.0),
            radius_m: 0.0
        }
        .validate()
        .is_err());
        assert!(ZoneGeometry::Elliptical {
            center: pp(0.0, 0.0),
            semi_major_m: 50.0,
            semi_minor_m: 80.0,
            heading_deg: 0.0
        }
        .validate()
        .is_err());
        assert!(ZoneGeometry::Cylindrical {
            center: pp(0.0, 0.0),
            radius_m: 10.0,
            alt_min_m: 120.0,
            alt_max_m: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn circular_thresholds() {
        let z = keep_out_circle("c", pp(0.0, 0.0), 100.0);
        let cases = [
            (160.0, ViolationStatus::Clear),
            (150.0, ViolationStatus::Warning),
            (130.0, ViolationStatus::Warning),
            (120.0, ViolationStatus::Terminate),
            (101.0, ViolationStatus::Terminate),
            (100.0, ViolationStatus::Violation),
            (50.0, ViolationStatus::Violation),
            (0.0, ViolationStatus::Violation),
        ];
        for (d, expect) in cases {
            let r = z.evaluate(pp(d, 0.0), None).unwrap();
            assert_eq!(r.status, expect, "at distance {d}");
            assert!((r.signed_distance_m - (d - 100.0)).abs() < 1e-12);
        }
        assert!(z.contains(pp(50.0, 0.0), None).unwrap());
        assert!(!z.contains(pp(150.0, 0.0), None).unwrap());
    }

    #[test]
    fn keep_in_mirrors_thresholds() {
        let side = 1000.0;
        let ring = Polygon::new(vec![
            pp(0.0, 0.0),
            pp(side, 0.0),
            pp(side, side),
            pp(0.0, side),
        ])
        .unwrap();
        let z = Zone::new(
            "home",
            None,
            "keepin",
            ZoneMode::KeepIn,
            ZoneGeometry::Polygonal { ring },
            50.0,
            20.0,
            false,
        )
        .unwrap();
        let center = z.evaluate(pp(500.0, 500.0), None).unwrap();
        assert_eq!(center.status, ViolationStatus::Clear);
        // 10 m inside the boundary, termination buffer 20 m.
        let near = z.evaluate(pp(10.0, 500.0), None).unwrap();
        assert_eq!(near.status, ViolationStatus::Terminate);
        let warn = z.evaluate(pp(40.0, 500.0), None).unwrap();
        assert_eq!(warn.status, ViolationStatus::Warning);
        let outside = z.evaluate(pp(-1.0, 500.0), None).unwrap();
        assert_eq!(outside.status, ViolationStatus::Violation);
    }

    #[test]
    fn spherical_needs_altitude() {
        let z = Zone::new(
            "s",
            None,
            "uav",
            ZoneMode::KeepOut,
            ZoneGeometry::Spherical {
                center: pp(0.0, 0.0),
                center_alt_m: 100.0,
                radius_m: 50.0,
            },
            50.0,
            20.0,
            true,
        )
        .unwrap();
        assert!(matches!(
            z.contains(pp(0.0, 0.0), None),
            Err(Error::MissingAltitude(_))
        ));
        assert!(z.contains(pp(0.0, 0.0), Some(100.0)).unwrap());
        assert!(!z.contains(pp(0.0, 0.0), Some(151.0)).unwrap());
        // 3-D distance: 30 planar, 40 vertical -> 50 from center.
        let s = z.signed_distance(pp(30.0, 0.0), Some(140.0)).unwrap();
        assert!(s.abs() < 1e-9);
        // Footprint fallback ignores altitude.
        let fp = z.evaluate_footprint(pp(0.0, 0.0), None).unwrap();
        assert_eq!(fp.status, ViolationStatus::Violation);
    }

    #[test]
    fn cylindrical_combines_radial_and_vertical() {
        let z = Zone::new(
            "cyl",
            None,
            "aeroway",
            ZoneMode::KeepOut,
            ZoneGeometry::Cylindrical {
                center: pp(0.0, 0.0),
                radius_m: 100.0,
                alt_min_m: 0.0,
                alt_max_m: 120.0,
            },
            50.0,
            20.0,
            false,
        )
        .unwrap();
        assert!(z.contains(pp(50.0, 0.0), Some(60.0)).unwrap());
        assert!(!z.contains(pp(50.0, 0.0), Some(150.0)).unwrap());
        assert!(!z.contains(pp(150.0, 0.0), Some(60.0)).unwrap());
        // Above the cap by 30 m while radially inside: s = max(-50, 30).
        let s = z.signed_distance(pp(50.0, 0.0), Some(150.0)).unwrap();
        assert!((s - 30.0).abs() < 1e-12);
        // Inside both: the less-negative of the two signed components.
        let s = z.signed_distance(pp(90.0, 0.0), Some(115.0)).unwrap();
        assert!((s - (-5.0)).abs() < 1e-12);
        assert!(matches!(
            z.signed_distance(pp(0.0, 0.0), None),
            Err(Error::MissingAltitude(_))
        ));
    }

    #[test]
    fn elliptical_rotated_frame() {
        let z = Zone::new(
            "e",
            None,
            "power",
            ZoneMode::KeepOut,
            ZoneGeometry::Elliptical {
                center: pp(0.0, 0.0),
                semi_major_m: 200.0,
                semi_minor_m: 100.0,
                heading_deg: 90.0,
            },
            50.0,
            20.0,
            false,
        )
        .unwrap();
        // Heading 90 degrees points the semi-major axis north.
        assert!(z.contains(pp(0.0, 150.0), None).unwrap());
        assert!(!z.contains(pp(150.0, 0.0), None).unwrap());
        assert!(z.contains(pp(90.0, 0.0), None).unwrap());
    }

    #[test]
    fn elliptical_distance_against_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..25 {
            let a = rng.random_range(50.0..400.0);
            let b = rng.random_range(a / 8.0..a);
            let heading = rng.random_range(0.0..360.0);
            let center = pp(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
            let p = pp(rng.random_range(-600.0..600.0), rng.random_range(-600.0..600.0));
            let fast = ellipse_signed_distance(center, a, b, heading, p);
            // Brute-force oracle: dense boundary polyline.
            let (sin_h, cos_h) = (heading as f64).to_radians().sin_cos();
            let mut brute = f64::INFINITY;
            for k in 0..200_000 {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 200_000.0;
                let (ex, ey) = (a * t.cos(), b * t.sin());
                let bx = center.x + ex * cos_h - ey * sin_h;
                let by = center.y + ex * sin_h + ey * cos_h;
                brute = brute.min(p.distance(pp(bx, by)));
            }
            assert!(
                (fast.abs() - brute).abs() < 1e-3 * b,
                "ellipse distance {fast} vs oracle {brute} (a={a}, b={b})"
            );
        }
    }

    #[test]
    fn contains_iff_nonpositive_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ring = Polygon::new(vec![
            pp(0.0, 0.0),
            pp(120.0, -30.0),
            pp(200.0, 80.0),
            pp(90.0, 40.0),
            pp(20.0, 110.0),
        ])
        .unwrap();
        let zones = vec![
            keep_out_circle("a", pp(0.0, 0.0), 75.0),
            Zone::new(
                "b",
                None,
                "t",
                ZoneMode::KeepOut,
                ZoneGeometry::Polygonal { ring },
                50.0,
                20.0,
                false,
            )
            .unwrap(),
            Zone::new(
                "c",
                None,
                "t",
                ZoneMode::KeepOut,
                ZoneGeometry::Elliptical {
                    center: pp(50.0, 50.0),
                    semi_major_m: 120.0,
                    semi_minor_m: 40.0,
                    heading_deg: 25.0,
                },
                50.0,
                20.0,
                false,
            )
            .unwrap(),
        ];
        for z in &zones {
            for _ in 0..2000 {
                let p = pp(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
                let s = z.signed_distance(p, None).unwrap();
                if s.abs() <= 1e-9 {
                    continue;
                }
                assert_eq!(
                    z.contains(p, None).unwrap(),
                    s <= 0.0,
                    "zone {} at ({}, {})",
                    z.id,
                    p.x,
                    p.y
                );
            }
        }
    }

    #[test]
    fn severity_monotone_moving_away() {
        let z = keep_out_circle("m", pp(0.0, 0.0), 100.0);
        let mut last = ViolationStatus::Violation;
        for step in 0..40 {
            let d = step as f64 * 5.0;
            let status = z.evaluate(pp(d, 0.0), None).unwrap().status;
            assert!(status <= last, "severity increased moving outward at {d}");
            last = status;
        }
    }

    #[test]
    fn evaluate_all_empty_database() {
        let db = db_with(vec![]);
        let check = db
            .evaluate_all(&GeoPoint::new(0.0, 0.0).unwrap())
            .unwrap();
        assert_eq!(check.worst, ViolationStatus::Clear);
        assert!(check.results.is_empty());
        assert!(check.out_of_coverage);
    }

    #[test]
    fn evaluate_all_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let mut zones = Vec::new();
        for i in 0..200 {
            let c = pp(
                rng.random_range(-20_000.0..20_000.0),
                rng.random_range(-20_000.0..20_000.0),
            );
            zones.push(keep_out_circle(
                &format!("z{i:03}"),
                c,
                rng.random_range(30.0..400.0),
            ));
        }
        let db = db_with(zones);
        let proj = *db.projection();
        for _ in 0..500 {
            let xy = pp(
                rng.random_range(-22_000.0..22_000.0),
                rng.random_range(-22_000.0..22_000.0),
            );
            let g = proj.unproject(xy, None);
            let a = db.evaluate_all(&g).unwrap();
            let b = db.evaluate_all_linear(&g).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn evaluate_all_keeps_keep_in_zones_visible() {
        let ring = Polygon::new(vec![
            pp(-5000.0, -5000.0),
            pp(5000.0, -5000.0),
            pp(5000.0, 5000.0),
            pp(-5000.0, 5000.0),
        ])
        .unwrap();
        let keep_in = Zone::new(
            "home",
            None,
            "keepin",
            ZoneMode::KeepIn,
            ZoneGeometry::Polygonal { ring },
            50.0,
            20.0,
            false,
        )
        .unwrap();
        let far_circle = keep_out_circle("far", pp(100_000.0, 0.0), 100.0);
        let db = db_with(vec![keep_in, far_circle]);
        let proj = *db.projection();
        // Far outside the keep-in square: Violation regardless of index cells.
        let outside = proj.unproject(pp(20_000.0, 20_000.0), None);
        let check = db.evaluate_all(&outside).unwrap();
        assert_eq!(check.worst, ViolationStatus::Violation);
        assert_eq!(check.results[0].zone_id, "home");
    }

    #[test]
    fn dynamic_zone_lifecycle() {
        let mut db = db_with(vec![]);
        let other = GeoPoint::with_alt(0.001, 0.001, 50.0).unwrap();
        let id = db.add_dynamic_zone(&other, 60.0).unwrap();
        assert_eq!(id, "dyn:0000");
        let near = GeoPoint::with_alt(0.001, 0.001, 30.0).unwrap();
        let check = db.evaluate_all(&near).unwrap();
        assert_eq!(check.worst, ViolationStatus::Violation);
        assert_eq!(check.results.len(), 1);
        // 2-D fix against the spherical zone: footprint fallback still hits.
        let no_alt = GeoPoint::new(0.001, 0.001).unwrap();
        assert_eq!(
            db.evaluate_all(&no_alt).unwrap().worst,
            ViolationStatus::Violation
        );
        assert!(db.remove_zone(&id));
        assert!(!db.remove_zone(&id));
        let check = db.evaluate_all(&near).unwrap();
        assert_eq!(check.worst, ViolationStatus::Clear);
        // Two dynamic zones, point inside both.
        let a = db.add_dynamic_zone(&other, 60.0).unwrap();
        let b = db.add_dynamic_zone(&other, 80.0).unwrap();
        assert_ne!(a, b);
        let check = db.evaluate_all(&near).unwrap();
        assert_eq!(check.results.len(), 2);
        assert_eq!(check.worst, ViolationStatus::Violation);
    }

    #[test]
    fn alpha_zone_containment_within_hull_zone() {
        use crate::alphashape::{alpha_shape, auto_alpha, convex_hull, PointSet};
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let mut pts = Vec::new();
        for _ in 0..120 {
            let (x, y) = if rng.random_bool(0.5) {
                (rng.random_range(0.0..300.0), rng.random_range(0.0..100.0))
            } else {
                (rng.random_range(0.0..100.0), rng.random_range(0.0..300.0))
            };
            pts.push(pp(x, y));
        }
        let set = PointSet::new(pts).unwrap();
        let shape = alpha_shape(&set, auto_alpha(&set).unwrap()).unwrap();
        let hull = convex_hull(&set).unwrap();
        for _ in 0..3000 {
            let p = pp(rng.random_range(-50.0..350.0), rng.random_range(-50.0..350.0));
            if shape.contains(p) {
                assert!(hull.contains(p), "alpha zone exceeds hull at ({}, {})", p.x, p.y);
            }
        }
    }
}

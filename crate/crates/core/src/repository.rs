//! GeoJSON ingestion, restricted-feature classification, geofence
//! precompilation, and the versioned zone database.
//!
//! The input is an OSM-derived GeoJSON FeatureCollection (or
//! newline-delimited features). Each feature carries a tag map; an ordered
//! [`CategoryFilter`] decides which features are restricted. Restricted
//! features are projected into the database's local frame and compiled into
//! zones whose geometry is an alpha shape, the raw polygon ring, or a convex
//! hull depending on [`CompileConfig`]. The compiled artifact serializes to
//! a versioned JSON document with a content digest, and identical inputs
//! always produce byte-identical files, with or without parallel
//! compilation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alphashape::{alpha_shape, auto_alpha, convex_hull, PointSet};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, LocalProjection, PlanarPoint, Polygon};
use crate::geofence::{SpatialIndex, Zone, ZoneGeometry, ZoneMode};
use crate::geofence::{DEFAULT_TERMINATION_BUFFER_M, DEFAULT_WARNING_BUFFER_M};

/// Newest database format this build writes and the highest it reads.
pub const FORMAT_VERSION: u32 = 1;

/// One Polygon/MultiPolygon feature extracted from the input document.
/// `rings` holds the outer rings only, in WGS-84, without the closing
/// duplicate position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub osm_id: String,
    pub name: Option<String>,
    /// The `type` property (e.g. "multipolygon"), distinct from the GeoJSON
    /// geometry type.
    pub feature_type: Option<String>,
    /// Scalar, non-null properties; null tags are absent.
    pub tags: BTreeMap<String, String>,
    pub rings: Vec<Vec<GeoPoint>>,
}

/// A non-fatal problem found while parsing or compiling one feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub feature_index: Option<usize>,
    pub osm_id: Option<String>,
    pub reason: String,
}

impl Diagnostic {
    fn new(feature_index: Option<usize>, osm_id: Option<&str>, reason: impl Into<String>) -> Self {
        Diagnostic {
            feature_index,
            osm_id: osm_id.map(str::to_owned),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.feature_index, self.osm_id.as_deref()) {
            (Some(i), Some(id)) => write!(f, "feature #{i} ({id}): {}", self.reason),
            (Some(i), None) => write!(f, "feature #{i}: {}", self.reason),
            (None, Some(id)) => write!(f, "({id}): {}", self.reason),
            (None, None) => write!(f, "{}", self.reason),
        }
    }
}

/// Result of [`parse_features`]: extracted records plus per-feature
/// diagnostics for everything skipped or trimmed.
#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub features: Vec<FeatureRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a GeoJSON FeatureCollection, a single Feature, or
/// newline-delimited Feature objects.
///
/// Malformed JSON is a hard error carrying the location; problems inside
/// individual features (missing osm_id, unsupported geometry, bad
/// coordinates, holes) become diagnostics.
pub fn parse_features(text: &str) -> Result<ParseOutput> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            location: "document".into(),
            message: "empty input".into(),
        });
    }
    let values: Vec<serde_json::Value> = match serde_json::from_str::<serde_json::Value>(text) {
        Ok(doc) => match doc.get("type").and_then(|t| t.as_str()) {
            Some("FeatureCollection") => match doc.get("features") {
                Some(serde_json::Value::Array(fs)) => fs.clone(),
                _ => {
                    return Err(Error::Parse {
                        location: "document".into(),
                        message: "FeatureCollection without a features array".into(),
                    })
                }
            },
            Some("Feature") => vec![doc],
            other => {
                return Err(Error::Parse {
                    location: "document".into(),
                    message: format!(
                        "expected FeatureCollection or Feature, got {:?}",
                        other.unwrap_or("no type")
                    ),
                })
            }
        },
        Err(doc_err) => {
            // Newline-delimited fallback: every non-empty line must be a
            // Feature object on its own.
            let mut vals = Vec::new();
            for line in text.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<serde_json::Value>(line) {
                    Ok(v) if v.get("type").and_then(|t| t.as_str()) == Some("Feature") => {
                        vals.push(v)
                    }
                    _ => {
                        return Err(Error::Parse {
                            location: format!("line {}, column {}", doc_err.line(), doc_err.column()),
                            message: doc_err.to_string(),
                        })
                    }
                }
            }
            vals
        }
    };

    let mut out = ParseOutput::default();
    for (i, feature) in values.iter().enumerate() {
        extract_feature(i, feature, &mut out);
    }
    Ok(out)
}

fn extract_feature(index: usize, feature: &serde_json::Value, out: &mut ParseOutput) {
    let props = feature.get("properties").and_then(|p| p.as_object());
    let scalar = |v: &serde_json::Value| -> Option<String> {
        match v {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            serde_json::Value::Bool(b) => Some(b.to_string()),
            _ => None,
        }
    };
    let prop = |key: &str| props.and_then(|p| p.get(key)).and_then(scalar);

    let osm_id = match prop("osm_id").or_else(|| prop("osm_way_id")) {
        Some(id) if !id.is_empty() => id,
        _ => {
            out.diagnostics.push(Diagnostic::new(
                Some(index),
                None,
                "missing osm_id; feature skipped",
            ));
            return;
        }
    };

    let mut tags = BTreeMap::new();
    if let Some(p) = props {
        for (k, v) in p {
            if k == "osm_id" {
                continue;
            }
            if let Some(s) = scalar(v) {
                tags.insert(k.clone(), s);
            }
        }
    }

    let geometry = feature.get("geometry");
    let geom_type = geometry
        .and_then(|g| g.get("type"))
        .and_then(|t| t.as_str())
        .unwrap_or("missing");
    let outer_rings: Vec<&serde_json::Value> = match geom_type {
        "Polygon" => geometry
            .and_then(|g| g.get("coordinates"))
            .and_then(|c| c.as_array())
            .map(|rings| collect_outer(index, &osm_id, rings, false, out))
            .unwrap_or_default(),
        "MultiPolygon" => {
            let mut outers = Vec::new();
            if let Some(polys) = geometry
                .and_then(|g| g.get("coordinates"))
                .and_then(|c| c.as_array())
            {
                for poly in polys {
                    if let Some(rings) = poly.as_array() {
                        outers.extend(collect_outer(index, &osm_id, rings, true, out));
                    }
                }
            }
            outers
        }
        other => {
            out.diagnostics.push(Diagnostic::new(
                Some(index),
                Some(&osm_id),
                format!("unsupported geometry type {other}; feature skipped"),
            ));
            return;
        }
    };

    let mut rings = Vec::new();
    for ring in outer_rings {
        match parse_ring(ring) {
            Ok(r) => rings.push(r),
            Err(reason) => out.diagnostics.push(Diagnostic::new(
                Some(index),
                Some(&osm_id),
                format!("ring skipped: {reason}"),
            )),
        }
    }
    if rings.is_empty() {
        out.diagnostics.push(Diagnostic::new(
            Some(index),
            Some(&osm_id),
            "no usable outer ring; feature skipped",
        ));
        return;
    }

    out.features.push(FeatureRecord {
        osm_id,
        name: prop("name"),
        feature_type: prop("type"),
        tags,
        rings,
    });
}

/// Splits a GeoJSON ring array into the outer ring (kept) and holes
/// (dropped with a diagnostic), accumulating only outer rings.
fn collect_outer<'v>(
    index: usize,
    osm_id: &str,
    rings: &'v [serde_json::Value],
    _multi: bool,
    out: &mut ParseOutput,
) -> Vec<&'v serde_json::Value> {
    if rings.len() > 1 {
        out.diagnostics.push(Diagnostic::new(
            Some(index),
            Some(osm_id),
            format!("{} inner ring(s) (holes) dropped", rings.len() - 1),
        ));
    }
    rings.first().into_iter().collect()
}

fn parse_ring(ring: &serde_json::Value) -> std::result::Result<Vec<GeoPoint>, String> {
    let positions = ring.as_array().ok_or("ring is not an array")?;
    if positions.len() < 4 {
        return Err(format!("ring has {} positions, need >= 4", positions.len()));
    }
    let mut pts = Vec::with_capacity(positions.len());
    for pos in positions {
        let coords = pos.as_array().ok_or("position is not an array")?;
        if coords.len() < 2 {
            return Err("position needs [lon, lat]".into());
        }
        let lon = coords[0].as_f64().ok_or("longitude not a number")?;
        let lat = coords[1].as_f64().ok_or("latitude not a number")?;
        let p = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
        pts.push(p);
    }
    let first = pts[0];
    let last = pts[pts.len() - 1];
    if first.lat_deg != last.lat_deg || first.lon_deg != last.lon_deg {
        return Err("ring is not closed".into());
    }
    pts.pop();
    Ok(pts)
}

/// One classification rule: tag key, optional exact value (absent = any
/// value), and the category a match assigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRule {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub category: String,
}

/// Ordered, first-match-wins tag rules; no match means not restricted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryFilter {
    pub rules: Vec<CategoryRule>,
}

impl CategoryFilter {
    /// Restricted classes enabled out of the box: military installations,
    /// aerodromes, prisons, schools, and power plants.
    pub fn default_profile() -> Self {
        let rule = |key: &str, value: Option<&str>, category: &str| CategoryRule {
            key: key.into(),
            value: value.map(str::to_owned),
            category: category.into(),
        };
        CategoryFilter {
            rules: vec![
                rule("military", None, "military"),
                rule("aeroway", None, "aeroway"),
                rule("amenity", Some("prison"), "prison"),
                rule("building", Some("school"), "school"),
                rule("landuse", Some("military"), "military"),
                rule("power", Some("plant"), "power"),
            ],
        }
    }

    /// First matching rule's category, or `None` (not restricted).
    pub fn classify(&self, f: &FeatureRecord) -> Option<&str> {
        self.rules.iter().find_map(|rule| {
            let tag = f.tags.get(&rule.key)?;
            match &rule.value {
                Some(v) if v != tag => None,
                _ => Some(rule.category.as_str()),
            }
        })
    }
}

/// Which geometry the compiler builds for each restricted feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    Alpha,
    Polygonal,
    Hull,
}

/// Alpha selection: tuned per feature or fixed for the whole database.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum AlphaPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileConfig {
    pub mode: GeometryMode,
    pub alpha: AlphaPolicy,
    pub warning_buffer_m: f64,
    pub termination_buffer_m: f64,
    /// Execution strategy only; never part of the serialized artifact.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            mode: GeometryMode::Alpha,
            alpha: AlphaPolicy::Auto,
            warning_buffer_m: DEFAULT_WARNING_BUFFER_M,
            termination_buffer_m: DEFAULT_TERMINATION_BUFFER_M,
            parallel: false,
        }
    }
}

/// Where a compiled database came from. The source digest is computed over
/// the canonical serialization of the parsed features, so recompiling the
/// same input reproduces it exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_sha256: String,
    pub feature_count: usize,
    pub restricted_count: usize,
}

/// The compiled zone repository: projection, configuration, and zones
/// sorted by id, plus a rebuilt-on-load spatial index.
#[derive(Debug, Clone)]
pub struct CompiledDatabase {
    format_version: u32,
    projection: LocalProjection,
    compile_config: CompileConfig,
    provenance: Provenance,
    next_dynamic_id: u64,
    zones: Vec<Zone>,
    index: SpatialIndex,
}

impl PartialEq for CompiledDatabase {
    fn eq(&self, other: &Self) -> bool {
        // The index is derived state.
        self.format_version == other.format_version
            && self.projection == other.projection
            && self.compile_config == other.compile_config
            && self.provenance == other.provenance
            && self.next_dynamic_id == other.next_dynamic_id
            && self.zones == other.zones
    }
}

/// Serialized form, minus the digest that wraps it.
#[derive(Debug, Serialize, Deserialize)]
struct DbDocument {
    format_version: u32,
    projection: LocalProjection,
    compile_config: CompileConfig,
    provenance: Provenance,
    next_dynamic_id: u64,
    zones: Vec<Zone>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DbFile {
    #[serde(flatten)]
    doc: DbDocument,
    sha256: String,
}

impl CompiledDatabase {
    /// Assembles a database from parts, validating every zone and the
    /// unique-id invariant. Zones are re-sorted by id.
    pub fn from_parts(
        projection: LocalProjection,
        compile_config: CompileConfig,
        mut zones: Vec<Zone>,
    ) -> Result<Self> {
        for z in &zones {
            z.validate()?;
        }
        zones.sort_by(|a, b| a.id.cmp(&b.id));
        for w in zones.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidInput(format!(
                    "duplicate zone id {}",
                    w[0].id
                )));
            }
        }
        let index = SpatialIndex::build(&zones);
        Ok(CompiledDatabase {
            format_version: FORMAT_VERSION,
            projection,
            compile_config,
            provenance: Provenance::default(),
            next_dynamic_id: 0,
            zones,
            index,
        })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones
            .binary_search_by(|z| z.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.zones[i])
    }

    pub fn projection(&self) -> &LocalProjection {
        &self.projection
    }

    pub fn compile_config(&self) -> &CompileConfig {
        &self.compile_config
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub(crate) fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub(crate) fn take_dynamic_counter(&mut self) -> u64 {
        let id = self.next_dynamic_id;
        self.next_dynamic_id += 1;
        id
    }

    pub(crate) fn insert_zone(&mut self, zone: Zone) {
        let at = self
            .zones
            .binary_search_by(|z| z.id.cmp(&zone.id))
            .unwrap_err();
        self.zones.insert(at, zone);
        self.index = SpatialIndex::build(&self.zones);
    }

    pub(crate) fn remove_zone_inner(&mut self, id: &str) -> bool {
        match self.zones.binary_search_by(|z| z.id.as_str().cmp(id)) {
            Ok(i) => {
                self.zones.remove(i);
                self.index = SpatialIndex::build(&self.zones);
                true
            }
            Err(_) => false,
        }
    }

    /// Serializes to the canonical versioned document. The digest covers
    /// the compact serialization of everything except the digest itself,
    /// and the output is byte-deterministic for equal databases.
    pub fn save(&self) -> Result<Vec<u8>> {
        let doc = DbDocument {
            format_version: self.format_version,
            projection: self.projection,
            compile_config: self.compile_config.clone(),
            provenance: self.provenance.clone(),
            next_dynamic_id: self.next_dynamic_id,
            zones: self.zones.clone(),
        };
        let digest = hex::encode(Sha256::digest(serde_json::to_vec(&doc).map_err(to_io)?));
        let file = DbFile {
            doc,
            sha256: digest,
        };
        let mut bytes = serde_json::to_vec_pretty(&file).map_err(to_io)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Parses and verifies a saved database: format version first, then the
    /// content digest, then structural validation, then index rebuild.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        let file: DbFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if file.doc.format_version > FORMAT_VERSION {
            return Err(Error::Version {
                found: file.doc.format_version,
                supported: FORMAT_VERSION,
            });
        }
        let recomputed =
            hex::encode(Sha256::digest(serde_json::to_vec(&file.doc).map_err(to_io)?));
        if recomputed != file.sha256 {
            return Err(Error::Integrity(format!(
                "stored digest {} != computed {recomputed}",
                file.sha256
            )));
        }
        let mut db = CompiledDatabase::from_parts(
            file.doc.projection,
            file.doc.compile_config,
            file.doc.zones,
        )?;
        db.format_version = file.doc.format_version;
        db.provenance = file.doc.provenance;
        db.next_dynamic_id = file.doc.next_dynamic_id;
        Ok(db)
    }
}

fn to_io(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Output of [`compile`]: the database plus everything that had to be
/// worked around per feature.
#[derive(Debug)]
pub struct CompileOutput {
    pub database: CompiledDatabase,
    pub diagnostics: Vec<Diagnostic>,
}

/// Compiles restricted features into a zone database.
///
/// The projection origin is the centroid of all feature coordinates
/// (restricted or not), so evaluation and compilation share one frame.
/// Per-feature failures degrade to circular fallback zones or diagnostics;
/// they never abort the compile. With `config.parallel` the per-feature work
/// runs on a thread pool, and the output is canonicalized by zone id so the
/// artifact is byte-identical either way.
pub fn compile(
    features: &[FeatureRecord],
    filter: &CategoryFilter,
    config: &CompileConfig,
) -> CompileOutput {
    let origin = centroid_origin(features);
    let projection =
        LocalProjection::new(origin).expect("clamped centroid is always a valid origin");

    let restricted: Vec<(usize, &FeatureRecord, String)> = features
        .iter()
        .enumerate()
        .filter_map(|(i, f)| filter.classify(f).map(|c| (i, f, c.to_owned())))
        .collect();

    let build = |&(index, feature, ref category): &(usize, &FeatureRecord, String)| {
        build_zone(index, feature, category, &projection, config)
    };
    let built: Vec<(Option<Zone>, Vec<Diagnostic>)> = if config.parallel {
        restricted.par_iter().map(build).collect()
    } else {
        restricted.iter().map(build).collect()
    };

    let mut zones = Vec::with_capacity(built.len());
    let mut diagnostics = Vec::new();
    for (zone, diags) in built {
        diagnostics.extend(diags);
        zones.extend(zone);
    }
    // Duplicate osm_ids would collide after prefixing; keep the first.
    zones.sort_by(|a, b| a.id.cmp(&b.id));
    zones.dedup_by(|b, a| {
        if a.id == b.id {
            diagnostics.push(Diagnostic::new(
                None,
                Some(&b.id),
                "duplicate osm_id; later feature dropped",
            ));
            true
        } else {
            false
        }
    });

    let restricted_count = zones.len();
    let mut database = CompiledDatabase::from_parts(projection, config.clone(), zones)
        .expect("compiled zones are validated and deduplicated");
    database.provenance = Provenance {
        source_sha256: hex::encode(Sha256::digest(
            serde_json::to_vec(features).expect("feature records always serialize"),
        )),
        feature_count: features.len(),
        restricted_count,
    };
    CompileOutput {
        database,
        diagnostics,
    }
}

fn centroid_origin(features: &[FeatureRecord]) -> GeoPoint {
    let mut n = 0usize;
    let (mut lat, mut lon) = (0.0f64, 0.0f64);
    for f in features {
        for ring in &f.rings {
            for p in ring {
                lat += p.lat_deg;
                lon += p.lon_deg;
                n += 1;
            }
        }
    }
    if n == 0 {
        return GeoPoint {
            lat_deg: 0.0,
            lon_deg: 0.0,
            alt_m: None,
        };
    }
    GeoPoint {
        // Clamp away from the projection's polar limit.
        lat_deg: (lat / n as f64).clamp(-88.9, 88.9),
        lon_deg: lon / n as f64,
        alt_m: None,
    }
}

fn build_zone(
    index: usize,
    feature: &FeatureRecord,
    category: &str,
    projection: &LocalProjection,
    config: &CompileConfig,
) -> (Option<Zone>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let osm_id = feature.osm_id.as_str();

    let mut points = Vec::new();
    let mut ring_points: Vec<Vec<PlanarPoint>> = Vec::new();
    for ring in &feature.rings {
        let mut projected = Vec::with_capacity(ring.len());
        for g in ring {
            match projection.project(g) {
                Ok(p) => projected.push(p),
                Err(e) => diags.push(Diagnostic::new(
                    Some(index),
                    Some(osm_id),
                    format!("coordinate dropped: {e}"),
                )),
            }
        }
        points.extend_from_slice(&projected);
        ring_points.push(projected);
    }

    let set = match PointSet::new(points) {
        Ok(s) => s,
        Err(e) => {
            diags.push(Diagnostic::new(
                Some(index),
                Some(osm_id),
                format!("no usable coordinates ({e}); feature dropped"),
            ));
            return (None, diags);
        }
    };

    let geometry = match config.mode {
        GeometryMode::Alpha => {
            let shaped = match config.alpha {
                AlphaPolicy::Auto => auto_alpha(&set).and_then(|a| alpha_shape(&set, a)),
                AlphaPolicy::Fixed(a) => alpha_shape(&set, a),
            };
            match shaped {
                Ok(shape) if !shape.is_empty() => Some(ZoneGeometry::AlphaZone { shape }),
                Ok(_) => {
                    diags.push(Diagnostic::new(
                        Some(index),
                        Some(osm_id),
                        "alpha eroded the shape away; circular fallback",
                    ));
                    None
                }
                Err(e) => {
                    diags.push(Diagnostic::new(
                        Some(index),
                        Some(osm_id),
                        format!("alpha shape failed ({e}); circular fallback"),
                    ));
                    None
                }
            }
        }
        GeometryMode::Polygonal => {
            // Baseline: the largest projected outer ring as-is.
            let mut best: Option<Polygon> = None;
            for ring in &ring_points {
                if let Ok(poly) = Polygon::new(ring.clone()) {
                    if best.as_ref().is_none_or(|b| poly.area() > b.area()) {
                        best = Some(poly);
                    }
                }
            }
            if ring_points.len() > 1 && best.is_some() {
                diags.push(Diagnostic::new(
                    Some(index),
                    Some(osm_id),
                    "polygonal baseline keeps only the largest outer ring",
                ));
            }
            match best {
                Some(ring) => Some(ZoneGeometry::Polygonal { ring }),
                None => {
                    diags.push(Diagnostic::new(
                        Some(index),
                        Some(osm_id),
                        "no valid polygon ring; circular fallback",
                    ));
                    None
                }
            }
        }
        GeometryMode::Hull => match convex_hull(&set) {
            Ok(ring) => Some(ZoneGeometry::Polygonal { ring }),
            Err(e) => {
                diags.push(Diagnostic::new(
                    Some(index),
                    Some(osm_id),
                    format!("convex hull failed ({e}); circular fallback"),
                ));
                None
            }
        },
    };

    let geometry = geometry.unwrap_or_else(|| {
        let pts = set.points();
        let n = pts.len() as f64;
        let center = PlanarPoint::new(
            pts.iter().map(|p| p.x).sum::<f64>() / n,
            pts.iter().map(|p| p.y).sum::<f64>() / n,
        );
        let radius = pts
            .iter()
            .map(|p| center.distance(*p))
            .fold(0.0, f64::max)
            + 5.0;
        ZoneGeometry::Circular {
            center,
            radius_m: radius,
        }
    });

    match Zone::new(
        format!("osm:{}", feature.osm_id),
        feature.name.clone(),
        category,
        ZoneMode::KeepOut,
        geometry,
        config.warning_buffer_m,
        config.termination_buffer_m,
        false,
    ) {
        Ok(zone) => (Some(zone), diags),
        Err(e) => {
            diags.push(Diagnostic::new(
                Some(index),
                Some(osm_id),
                format!("zone construction failed: {e}"),
            ));
            (None, diags)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The OSM export schema this build ingests: every tag key present,
    /// unused ones null.
    pub(crate) fn listing_style_feature(
        osm_id: &str,
        name: &str,
        set_tags: &[(&str, &str)],
        ring: &[(f64, f64)],
    ) -> serde_json::Value {
        let mut properties = serde_json::json!({
            "osm_id": osm_id,
            "osm_way_id": null,
            "name": name,
            "type": "multipolygon",
            "aeroway": null,
            "amenity": null,
            "admin_level": null,
            "barrier": null,
            "boundary": null,
            "building": null,
            "craft": null,
            "geological": null,
            "historic": null,
            "land_area": null,
            "landuse": null,
            "leisure": null,
            "man_made": null,
            "military": null,
            "natural": null,
            "office": null,
            "place": null,
            "shop": null,
            "sport": null,
            "tourism": null,
            "other_tags": null,
        });
        for (k, v) in set_tags {
            properties[*k] = serde_json::Value::String((*v).into());
        }
        let mut coords: Vec<[f64; 2]> = ring.iter().map(|&(lon, lat)| [lon, lat]).collect();
        coords.push(coords[0]);
        serde_json::json!({
            "type": "Feature",
            "properties": properties,
            "geometry": { "type": "MultiPolygon", "coordinates": [[coords]] },
        })
    }

    pub(crate) fn forest_fixture() -> String {
        let f = listing_style_feature(
            "533025",
            "Canada Copse",
            &[("landuse", "forest")],
            &[
                (-0.7432, 51.2901),
                (-0.7401, 51.2903),
                (-0.7398, 51.2921),
                (-0.7435, 51.2919),
            ],
        );
        serde_json::json!({ "type": "FeatureCollection", "features": [f] }).to_string()
    }

    fn square_military(osm_id: &str) -> serde_json::Value {
        listing_style_feature(
            osm_id,
            "Test Range",
            &[("military", "training_area")],
            &[
                (-0.5600, 51.5000),
                (-0.5560, 51.5000),
                (-0.5560, 51.5030),
                (-0.5600, 51.5030),
            ],
        )
    }

    #[test]
    fn parses_the_osm_export_schema() {
        let out = parse_features(&forest_fixture()).unwrap();
        assert_eq!(out.features.len(), 1);
        let f = &out.features[0];
        assert_eq!(f.osm_id, "533025");
        assert_eq!(f.name.as_deref(), Some("Canada Copse"));
        assert_eq!(f.feature_type.as_deref(), Some("multipolygon"));
        assert_eq!(f.tags.get("landuse").map(String::as_str), Some("forest"));
        // Null tags are absent, not empty strings.
        assert!(!f.tags.contains_key("military"));
        assert_eq!(f.rings.len(), 1);
        assert_eq!(f.rings[0].len(), 4, "closing duplicate removed");
    }

    #[test]
    fn forest_is_not_restricted_and_military_is() {
        let out = parse_features(&forest_fixture()).unwrap();
        let filter = CategoryFilter::default_profile();
        assert_eq!(filter.classify(&out.features[0]), None);

        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001")]
        });
        let out = parse_features(&doc.to_string()).unwrap();
        assert_eq!(filter.classify(&out.features[0]), Some("military"));
    }

    #[test]
    fn classification_rules_apply_in_order() {
        let mut f = FeatureRecord {
            osm_id: "1".into(),
            name: None,
            feature_type: None,
            tags: BTreeMap::new(),
            rings: vec![],
        };
        f.tags.insert("aeroway".into(), "aerodrome".into());
        f.tags.insert("military".into(), "airfield".into());
        let filter = CategoryFilter::default_profile();
        // military is listed first, so it wins even though both match.
        assert_eq!(filter.classify(&f), Some("military"));

        let reversed = CategoryFilter {
            rules: filter.rules.into_iter().rev().collect(),
        };
        assert_eq!(reversed.classify(&f), Some("aeroway"));

        // Value-specific rules require the exact value.
        let mut prison = f.clone();
        prison.tags.clear();
        prison.tags.insert("amenity".into(), "school".into());
        assert_eq!(CategoryFilter::default_profile().classify(&prison), None);
    }

    #[test]
    fn skips_features_without_ids_or_areas() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [
                { "type": "Feature", "properties": { "name": "anon" },
                  "geometry": { "type": "Polygon", "coordinates": [[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,0.0]]] } },
                { "type": "Feature", "properties": { "osm_id": "77" },
                  "geometry": { "type": "Point", "coordinates": [0.0, 0.0] } },
                square_military("88"),
            ]
        });
        let out = parse_features(&doc.to_string()).unwrap();
        assert_eq!(out.features.len(), 1);
        assert_eq!(out.features[0].osm_id, "88");
        assert_eq!(out.diagnostics.len(), 2);
    }

    #[test]
    fn drops_holes_with_diagnostic() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": { "osm_id": "5", "military": "range" },
                "geometry": { "type": "Polygon", "coordinates": [
                    [[0.0,0.0],[0.01,0.0],[0.01,0.01],[0.0,0.01],[0.0,0.0]],
                    [[0.004,0.004],[0.006,0.004],[0.006,0.006],[0.004,0.006],[0.004,0.004]]
                ]}
            }]
        });
        let out = parse_features(&doc.to_string()).unwrap();
        assert_eq!(out.features[0].rings.len(), 1);
        assert!(out
            .diagnostics
            .iter()
            .any(|d| d.reason.contains("holes") || d.reason.contains("inner ring")));
    }

    #[test]
    fn newline_delimited_features() {
        let a = square_military("1").to_string();
        let b = square_military("2").to_string();
        let out = parse_features(&format!("{a}\n\n{b}\n")).unwrap();
        assert_eq!(out.features.len(), 2);
    }

    #[test]
    fn malformed_documents_are_typed_errors_not_panics() {
        for bad in [
            "",
            "{",
            "[1,2,3]",
            "{\"type\": \"FeatureCollection\"}",
            "{\"type\": \"Telemetry\"}",
            "not json at all",
            "{\"type\": \"FeatureCollection\", \"features\": 7}",
        ] {
            match parse_features(bad) {
                Err(Error::Parse { .. }) => {}
                Ok(out) => panic!("{bad:?} unexpectedly parsed: {out:?}"),
                Err(e) => panic!("{bad:?} produced non-parse error {e}"),
            }
        }
        // Bad coordinates and unclosed rings degrade to diagnostics.
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": { "osm_id": "6", "military": "x" },
                "geometry": { "type": "Polygon", "coordinates": [
                    [[200.0, 95.0],[201.0,95.0],[201.0,96.0],[200.0,95.0]]
                ]}
            }]
        });
        let out = parse_features(&doc.to_string()).unwrap();
        assert!(out.features.is_empty());
        assert!(!out.diagnostics.is_empty());
    }

    #[test]
    fn compiles_square_alpha_zone() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001")]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let db = &out.database;
        assert_eq!(db.zones().len(), 1);
        let zone = db.zone("osm:9001").expect("deterministic id");
        assert_eq!(zone.category, "military");
        assert_eq!(zone.name.as_deref(), Some("Test Range"));
        let ZoneGeometry::AlphaZone { shape } = &zone.geometry else {
            panic!("alpha mode must produce an alpha zone");
        };
        assert_eq!(shape.boundary().len(), 1);
        // The four projected corners are exactly the ring vertices.
        let corners: Vec<PlanarPoint> = parsed.features[0].rings[0]
            .iter()
            .map(|g| db.projection().project(g).unwrap())
            .collect();
        let ring = shape.boundary()[0].vertices();
        assert_eq!(ring.len(), 4);
        for c in &corners {
            assert!(ring.iter().any(|v| v.distance(*c) < 1e-9));
        }
        // Zero restricted features -> zero zones.
        let none = compile(&[], &CategoryFilter::default_profile(), &CompileConfig::default());
        assert!(none.database.zones().is_empty());
    }

    #[test]
    fn projection_origin_is_coordinate_centroid() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001")]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        let origin = out.database.projection().origin();
        let ring = &parsed.features[0].rings[0];
        let lat: f64 = ring.iter().map(|p| p.lat_deg).sum::<f64>() / ring.len() as f64;
        let lon: f64 = ring.iter().map(|p| p.lon_deg).sum::<f64>() / ring.len() as f64;
        assert!((origin.lat_deg - lat).abs() < 1e-12);
        assert!((origin.lon_deg - lon).abs() < 1e-12);
    }

    #[test]
    fn degenerate_feature_falls_back_to_circle() {
        // Three collinear points cannot be triangulated.
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": { "osm_id": "42", "military": "thin" },
                "geometry": { "type": "Polygon", "coordinates": [
                    [[0.0,0.0],[0.001,0.001],[0.002,0.002],[0.0,0.0]]
                ]}
            }]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        assert_eq!(out.database.zones().len(), 1);
        let zone = &out.database.zones()[0];
        let ZoneGeometry::Circular { center, radius_m } = &zone.geometry else {
            panic!("expected circular fallback, got {:?}", zone.geometry);
        };
        // r = max distance from centroid + 5 m.
        let pts: Vec<PlanarPoint> = parsed.features[0].rings[0]
            .iter()
            .map(|g| out.database.projection().project(g).unwrap())
            .collect();
        let maxd = pts.iter().map(|p| center.distance(*p)).fold(0.0, f64::max);
        assert!((radius_m - (maxd + 5.0)).abs() < 1e-6);
        assert!(out.diagnostics.iter().any(|d| d.reason.contains("fallback")));
    }

    #[test]
    fn polygonal_and_hull_modes() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001")]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        for mode in [GeometryMode::Polygonal, GeometryMode::Hull] {
            let config = CompileConfig {
                mode,
                ..CompileConfig::default()
            };
            let out = compile(&parsed.features, &CategoryFilter::default_profile(), &config);
            let zone = &out.database.zones()[0];
            let ZoneGeometry::Polygonal { ring } = &zone.geometry else {
                panic!("{mode:?} must produce a polygon");
            };
            assert_eq!(ring.vertices().len(), 4);
        }
    }

    #[test]
    fn save_load_round_trip_and_corruption() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001"), square_military("9002")]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        let bytes = out.database.save().unwrap();
        let loaded = CompiledDatabase::load(&bytes).unwrap();
        assert_eq!(loaded, out.database);
        assert_eq!(loaded.save().unwrap(), bytes, "save is stable across load");

        // Content tampering must trip the digest check.
        let tampered = String::from_utf8(bytes.clone())
            .unwrap()
            .replacen("military", "harmless", 1);
        assert!(matches!(
            CompiledDatabase::load(tampered.as_bytes()),
            Err(Error::Integrity(_))
        ));

        // A future format version is rejected before the digest check.
        let future = String::from_utf8(bytes).unwrap().replacen(
            "\"format_version\": 1",
            "\"format_version\": 99",
            1,
        );
        assert!(matches!(
            CompiledDatabase::load(future.as_bytes()),
            Err(Error::Version { found: 99, .. })
        ));
        // Round trip of an empty database.
        let empty = compile(&[], &CategoryFilter::default_profile(), &CompileConfig::default());
        let bytes = empty.database.save().unwrap();
        assert_eq!(CompiledDatabase::load(&bytes).unwrap(), empty.database);
    }

    #[test]
    fn compilation_is_byte_deterministic_and_parallel_invariant() {
        let features: Vec<serde_json::Value> =
            (0..20).map(|i| square_military(&format!("{}", 100 + i))).collect();
        let doc = serde_json::json!({ "type": "FeatureCollection", "features": features });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let filter = CategoryFilter::default_profile();

        let serial = compile(&parsed.features, &filter, &CompileConfig::default());
        let serial_again = compile(&parsed.features, &filter, &CompileConfig::default());
        let parallel = compile(
            &parsed.features,
            &filter,
            &CompileConfig {
                parallel: true,
                ..CompileConfig::default()
            },
        );
        let a = serial.database.save().unwrap();
        let b = serial_again.database.save().unwrap();
        let c = parallel.database.save().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn duplicate_osm_ids_keep_first() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [square_military("9001"), square_military("9001")]
        });
        let parsed = parse_features(&doc.to_string()).unwrap();
        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        assert_eq!(out.database.zones().len(), 1);
        assert!(out.diagnostics.iter().any(|d| d.reason.contains("duplicate")));
    }
}

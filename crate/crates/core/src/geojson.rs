//! GeoJSON export of compiled zones, corridor graphs, and mission traces,
//! plus a line-oriented mission event log.
//!
//! Exports target external viewers, so curved geometries (circles, spheres,
//! cylinders, ellipses) are written as 64-gon approximations while their
//! exact parameters ride along in the feature properties. Every zone
//! feature carries an `osm_id` equal to the zone id, which keeps the
//! exported file re-ingestable: parsing an export yields one feature per
//! exported zone.

use serde_json::{json, Value};

use crate::error::Result;
use crate::geo::{LocalProjection, PlanarPoint};
use crate::geofence::{Zone, ZoneGeometry, ZoneMode};
use crate::mission::MissionTrace;
use crate::repository::CompiledDatabase;
use crate::voronoi::CorridorGraph;

const ARC_SEGMENTS: usize = 64;

fn ring_coords(proj: &LocalProjection, ring: &[PlanarPoint]) -> Vec<[f64; 2]> {
    let mut coords: Vec<[f64; 2]> = ring
        .iter()
        .map(|p| {
            let g = proj.unproject(*p, None);
            [g.lon_deg, g.lat_deg]
        })
        .collect();
    if let Some(first) = coords.first().copied() {
        coords.push(first);
    }
    coords
}

fn arc_ring(center: PlanarPoint, fx: impl Fn(f64) -> (f64, f64)) -> Vec<PlanarPoint> {
    (0..ARC_SEGMENTS)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / ARC_SEGMENTS as f64;
            let (dx, dy) = fx(a);
            PlanarPoint::new(center.x + dx, center.y + dy)
        })
        .collect()
}

fn zone_feature(proj: &LocalProjection, zone: &Zone) -> Value {
    let mut props = serde_json::Map::new();
    props.insert("osm_id".into(), json!(zone.id));
    if let Some(name) = &zone.name {
        props.insert("name".into(), json!(name));
    }
    props.insert("category".into(), json!(zone.category));
    props.insert(
        "mode".into(),
        json!(match zone.mode {
            ZoneMode::KeepIn => "keep_in",
            ZoneMode::KeepOut => "keep_out",
        }),
    );
    props.insert("warning_buffer_m".into(), json!(zone.warning_buffer_m));
    props.insert(
        "termination_buffer_m".into(),
        json!(zone.termination_buffer_m),
    );
    props.insert("dynamic".into(), json!(zone.dynamic));

    let geometry = match &zone.geometry {
        ZoneGeometry::Polygonal { ring } => {
            props.insert("kind".into(), json!("polygonal"));
            json!({ "type": "Polygon", "coordinates": [ring_coords(proj, ring.vertices())] })
        }
        ZoneGeometry::AlphaZone { shape } => {
            props.insert("kind".into(), json!("alpha"));
            let rings: Vec<Vec<Vec<[f64; 2]>>> = shape
                .boundary()
                .iter()
                .map(|r| vec![ring_coords(proj, r.vertices())])
                .collect();
            if rings.len() == 1 {
                json!({ "type": "Polygon", "coordinates": rings[0] })
            } else {
                json!({ "type": "MultiPolygon", "coordinates": rings })
            }
        }
        ZoneGeometry::Circular { center, radius_m } => {
            props.insert("kind".into(), json!("circular"));
            props.insert("radius_m".into(), json!(radius_m));
            let ring = arc_ring(*center, |a| (radius_m * a.cos(), radius_m * a.sin()));
            json!({ "type": "Polygon", "coordinates": [ring_coords(proj, &ring)] })
        }
        ZoneGeometry::Spherical {
            center,
            center_alt_m,
            radius_m,
        } => {
            props.insert("kind".into(), json!("spherical"));
            props.insert("radius_m".into(), json!(radius_m));
            props.insert("center_alt_m".into(), json!(center_alt_m));
            let ring = arc_ring(*center, |a| (radius_m * a.cos(), radius_m * a.sin()));
            json!({ "type": "Polygon", "coordinates": [ring_coords(proj, &ring)] })
        }
        ZoneGeometry::Cylindrical {
            center,
            radius_m,
            alt_min_m,
            alt_max_m,
        } => {
            props.insert("kind".into(), json!("cylindrical"));
            props.insert("radius_m".into(), json!(radius_m));
            props.insert("alt_min_m".into(), json!(alt_min_m));
            props.insert("alt_max_m".into(), json!(alt_max_m));
            let ring = arc_ring(*center, |a| (radius_m * a.cos(), radius_m * a.sin()));
            json!({ "type": "Polygon", "coordinates": [ring_coords(proj, &ring)] })
        }
        ZoneGeometry::Elliptical {
            center,
            semi_major_m,
            semi_minor_m,
            heading_deg,
        } => {
            props.insert("kind".into(), json!("elliptical"));
            props.insert("semi_major_m".into(), json!(semi_major_m));
            props.insert("semi_minor_m".into(), json!(semi_minor_m));
            props.insert("heading_deg".into(), json!(heading_deg));
            let (sin_h, cos_h) = heading_deg.to_radians().sin_cos();
            let ring = arc_ring(*center, |a| {
                let (ex, ey) = (semi_major_m * a.cos(), semi_minor_m * a.sin());
                (ex * cos_h - ey * sin_h, ex * sin_h + ey * cos_h)
            });
            json!({ "type": "Polygon", "coordinates": [ring_coords(proj, &ring)] })
        }
    };

    json!({ "type": "Feature", "properties": Value::Object(props), "geometry": geometry })
}

fn corridor_features(proj: &LocalProjection, graph: &CorridorGraph) -> Vec<Value> {
    graph
        .edges()
        .iter()
        .map(|&(u, v, w)| {
            let a = proj.unproject(graph.nodes()[u], None);
            let b = proj.unproject(graph.nodes()[v], None);
            let length = graph.nodes()[u].distance(graph.nodes()[v]);
            json!({
                "type": "Feature",
                "properties": {
                    "feature": "corridor_edge",
                    "weight": w,
                    "length_m": length,
                    "clearance_m": graph.clearance_m(),
                },
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[a.lon_deg, a.lat_deg], [b.lon_deg, b.lat_deg]],
                },
            })
        })
        .collect()
}

/// Renders every zone (and optionally a corridor graph) as a pretty-printed
/// GeoJSON FeatureCollection.
pub fn database_geojson(db: &CompiledDatabase, corridor: Option<&CorridorGraph>) -> Result<String> {
    let proj = db.projection();
    let mut features: Vec<Value> = db.zones().iter().map(|z| zone_feature(proj, z)).collect();
    if let Some(graph) = corridor {
        features.extend(corridor_features(proj, graph));
    }
    let doc = json!({ "type": "FeatureCollection", "features": features });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

impl From<serde_json::Error> for crate::error::Error {
    fn from(e: serde_json::Error) -> Self {
        crate::error::Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        }
    }
}

/// Renders a mission trace as GeoJSON: the flight path as a LineString
/// (with the summary in its properties) and one Point per event.
pub fn trace_geojson(trace: &MissionTrace) -> String {
    let path: Vec<[f64; 2]> = trace
        .states
        .iter()
        .map(|s| [s.position.lon_deg, s.position.lat_deg])
        .collect();
    let mut features = vec![json!({
        "type": "Feature",
        "properties": {
            "feature": "flight_path",
            "completed": trace.summary.completed,
            "worst_status": trace.summary.worst_status,
            "total_distance_m": trace.summary.total_distance_m,
        },
        "geometry": { "type": "LineString", "coordinates": path },
    })];
    for e in &trace.events {
        features.push(json!({
            "type": "Feature",
            "properties": {
                "feature": "event",
                "time_s": e.time_s,
                "kind": e.kind,
                "zone_id": e.zone_id,
                "detail": e.detail,
            },
            "geometry": {
                "type": "Point",
                "coordinates": [e.position.lon_deg, e.position.lat_deg],
            },
        }));
    }
    let doc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&doc).expect("trace serialization cannot fail") + "\n"
}

/// Renders the events as a tab-separated log, one line per event, with a
/// header. Fields: time, kind, zone id (`-` when absent), latitude,
/// longitude, detail.
pub fn event_log(trace: &MissionTrace) -> String {
    let mut out = String::from("time_s\tkind\tzone_id\tlat\tlon\tdetail\n");
    for e in &trace.events {
        out.push_str(&format!(
            "{:.1}\t{}\t{}\t{:.7}\t{:.7}\t{}\n",
            e.time_s,
            e.kind,
            e.zone_id.as_deref().unwrap_or("-"),
            e.position.lat_deg,
            e.position.lon_deg,
            e.detail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{BoundingBox, GeoPoint};
    use crate::mission::{run, MissionPlan};
    use crate::repository::{
        compile, parse_features, CategoryFilter, CompileConfig, CompiledDatabase,
    };
    use crate::synth::synthetic_geojson;
    use crate::voronoi::{build_corridor, voronoi};
    use crate::alphashape::PointSet;

    fn synthetic_db(count: usize) -> CompiledDatabase {
        let parsed = parse_features(&synthetic_geojson(count, 11)).unwrap();
        compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        )
        .database
    }

    #[test]
    fn empty_database_exports_an_empty_collection() {
        let db = CompiledDatabase::from_parts(
            crate::geo::LocalProjection::new(GeoPoint::new(51.5, -0.56).unwrap()).unwrap(),
            CompileConfig::default(),
            vec![],
        )
        .unwrap();
        let text = database_geojson(&db, None).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        assert_eq!(doc["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn export_reingests_with_a_stable_feature_count() {
        let db = synthetic_db(15);
        let text = database_geojson(&db, None).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["features"].as_array().unwrap().len(), 15);

        let reparsed = parse_features(&text).unwrap();
        assert_eq!(reparsed.features.len(), 15);
        assert!(reparsed.diagnostics.is_empty(), "{:?}", reparsed.diagnostics);
    }

    #[test]
    fn corridor_edges_ride_along_as_linestrings() {
        let db = synthetic_db(4);
        let sites = PointSet::new(vec![
            PlanarPoint::new(100.0, 100.0),
            PlanarPoint::new(300.0, 100.0),
            PlanarPoint::new(100.0, 300.0),
            PlanarPoint::new(300.0, 300.0),
        ])
        .unwrap();
        let clip = BoundingBox::new(PlanarPoint::new(0.0, 0.0), PlanarPoint::new(400.0, 400.0))
            .unwrap();
        let diagram = voronoi(&sites, clip).unwrap();
        let graph = build_corridor(&diagram, &[], 0.0);
        assert!(!graph.edges().is_empty());

        let text = database_geojson(&db, Some(&graph)).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let features = doc["features"].as_array().unwrap();
        assert_eq!(features.len(), 4 + graph.edges().len());
        let lines = features
            .iter()
            .filter(|f| f["geometry"]["type"] == "LineString")
            .count();
        assert_eq!(lines, graph.edges().len());
    }

    #[test]
    fn trace_export_carries_path_and_events() {
        let db = synthetic_db(1);
        let start = db
            .projection()
            .unproject(PlanarPoint::new(-9000.0, -9000.0), None);
        let end = db
            .projection()
            .unproject(PlanarPoint::new(-8500.0, -9000.0), None);
        let trace = run(&db, MissionPlan::new(vec![start, end], 10.0)).unwrap();

        let text = trace_geojson(&trace);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let features = doc["features"].as_array().unwrap();
        assert_eq!(features.len(), 1 + trace.events.len());
        assert_eq!(features[0]["geometry"]["type"], "LineString");
        assert_eq!(
            features[0]["geometry"]["coordinates"].as_array().unwrap().len(),
            trace.states.len()
        );

        let log = event_log(&trace);
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(lines.len(), 1 + trace.events.len());
        assert!(lines[0].starts_with("time_s\tkind"));
        assert!(lines[1].contains("GeofenceLoaded"));
        assert!(log.trim_end().ends_with(&format!(
            "flew {:.1} m in {:.1} s",
            trace.summary.total_distance_m,
            trace.states.last().unwrap().time_s
        )));
    }

    #[test]
    fn curved_zones_export_as_polygons_with_exact_parameters() {
        let proj =
            crate::geo::LocalProjection::new(GeoPoint::new(51.5, -0.56).unwrap()).unwrap();
        let zone = crate::geofence::Zone::new(
            "osm:7",
            Some("pad".into()),
            "aeroway",
            ZoneMode::KeepOut,
            ZoneGeometry::Circular {
                center: PlanarPoint::new(0.0, 0.0),
                radius_m: 120.0,
            },
            50.0,
            20.0,
            false,
        )
        .unwrap();
        let db = CompiledDatabase::from_parts(proj, CompileConfig::default(), vec![zone]).unwrap();
        let text = database_geojson(&db, None).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let f = &doc["features"][0];
        assert_eq!(f["properties"]["kind"], "circular");
        assert_eq!(f["properties"]["radius_m"], 120.0);
        assert_eq!(f["geometry"]["type"], "Polygon");
        let ring = f["geometry"]["coordinates"][0].as_array().unwrap();
        assert_eq!(ring.len(), ARC_SEGMENTS + 1);
        assert_eq!(ring[0], ring[ARC_SEGMENTS]);
    }
}

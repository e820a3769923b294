//! Seeded synthetic fixtures: random concave star polygons serialized as
//! OSM-style GeoJSON, for benchmarks and stress tests.
//!
//! Every feature is tagged with one of the default restricted categories,
//! so compiling a fixture of `n` features yields exactly `n` zones. Output
//! is a pure function of `(count, seed)`: the generator draws from a
//! counter-based RNG in a fixed order and never depends on thread count or
//! iteration timing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::geo::{GeoPoint, LocalProjection, PlanarPoint};

/// Centre of the synthetic area.
pub const ORIGIN_LAT_DEG: f64 = 51.5;
pub const ORIGIN_LON_DEG: f64 = -0.56;

/// Features are scattered inside a square of this half-width.
pub const BOX_HALF_M: f64 = 10_000.0;

const MIN_VERTICES: usize = 8;
const MAX_VERTICES: usize = 40;
const MIN_RADIUS_M: f64 = 80.0;
const MAX_RADIUS_M: f64 = 400.0;

/// Tag pairs cycled across features; each matches a default filter rule.
const CATEGORY_TAGS: &[(&str, &str)] = &[
    ("military", "danger_area"),
    ("aeroway", "aerodrome"),
    ("amenity", "prison"),
    ("building", "school"),
    ("landuse", "military"),
    ("power", "plant"),
];

fn projection() -> LocalProjection {
    LocalProjection::new(GeoPoint::new(ORIGIN_LAT_DEG, ORIGIN_LON_DEG).expect("fixed origin"))
        .expect("fixed origin is far from the poles")
}

/// One concave star polygon: vertices at evenly jittered angles, radii
/// scaled by a random factor so that some vertices pull inward and create
/// reflex corners. Radial ordering keeps the ring simple (no
/// self-intersection) by construction.
fn star_ring(rng: &mut ChaCha8Rng, center: PlanarPoint) -> Vec<PlanarPoint> {
    let n = rng.random_range(MIN_VERTICES..=MAX_VERTICES);
    let base = rng.random_range(MIN_RADIUS_M..=MAX_RADIUS_M);
    let mut ring = Vec::with_capacity(n);
    for k in 0..n {
        let jitter = rng.random_range(-0.35..=0.35) / n as f64;
        let angle = std::f64::consts::TAU * (k as f64 / n as f64 + jitter);
        let radius = base * rng.random_range(0.45..=1.0);
        ring.push(PlanarPoint::new(
            center.x + radius * angle.cos(),
            center.y + radius * angle.sin(),
        ));
    }
    ring
}

/// Builds a GeoJSON FeatureCollection of `count` restricted star polygons,
/// deterministic in `seed`.
pub fn synthetic_geojson(count: usize, seed: u64) -> String {
    let proj = projection();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = MAX_RADIUS_M + 50.0;
    let mut features = Vec::with_capacity(count);
    for i in 0..count {
        let center = PlanarPoint::new(
            rng.random_range(-(BOX_HALF_M - margin)..=(BOX_HALF_M - margin)),
            rng.random_range(-(BOX_HALF_M - margin)..=(BOX_HALF_M - margin)),
        );
        let ring = star_ring(&mut rng, center);
        let mut coords: Vec<[f64; 2]> = ring
            .iter()
            .map(|p| {
                let g = proj.unproject(*p, None);
                [g.lon_deg, g.lat_deg]
            })
            .collect();
        coords.push(coords[0]);

        let (key, value) = CATEGORY_TAGS[i % CATEGORY_TAGS.len()];
        features.push(json!({
            "type": "Feature",
            "properties": {
                "osm_id": (100_000 + i).to_string(),
                "name": format!("synthetic {i}"),
                key: value,
            },
            "geometry": {
                "type": "Polygon",
                "coordinates": [coords],
            },
        }));
    }
    serde_json::to_string(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("fixture serialization cannot fail")
}

/// Query positions scattered over the same area as the fixture polygons,
/// deterministic in `seed`.
pub fn synthetic_queries(count: usize, seed: u64) -> Vec<GeoPoint> {
    let proj = projection();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = PlanarPoint::new(
                rng.random_range(-BOX_HALF_M..=BOX_HALF_M),
                rng.random_range(-BOX_HALF_M..=BOX_HALF_M),
            );
            proj.unproject(p, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::orient2d;
    use crate::repository::{compile, parse_features, CategoryFilter, CompileConfig};

    #[test]
    fn fixture_is_deterministic_in_the_seed() {
        assert_eq!(synthetic_geojson(25, 9), synthetic_geojson(25, 9));
        assert_ne!(synthetic_geojson(25, 9), synthetic_geojson(25, 10));
        assert_eq!(synthetic_queries(40, 3), synthetic_queries(40, 3));
        assert_ne!(synthetic_queries(40, 3), synthetic_queries(40, 4));
    }

    #[test]
    fn fixture_compiles_to_one_zone_per_feature() {
        let text = synthetic_geojson(60, 42);
        let parsed = parse_features(&text).unwrap();
        assert_eq!(parsed.features.len(), 60);
        assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);

        let out = compile(
            &parsed.features,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        );
        assert_eq!(out.database.zones().len(), 60);
        let categories: std::collections::BTreeSet<&str> = out
            .database
            .zones()
            .iter()
            .map(|z| z.category.as_str())
            .collect();
        assert!(categories.len() >= 5, "tag cycling covers the filter rules");
    }

    #[test]
    fn polygons_stay_inside_the_box_and_within_vertex_bounds() {
        let text = synthetic_geojson(30, 7);
        let parsed = parse_features(&text).unwrap();
        let proj = projection();
        let mut reflex_seen = false;
        for f in &parsed.features {
            let ring = &f.rings[0];
            assert!((MIN_VERTICES..=MAX_VERTICES).contains(&ring.len()));
            let pts: Vec<PlanarPoint> =
                ring.iter().map(|g| proj.project(g).unwrap()).collect();
            for p in &pts {
                assert!(p.x.abs() <= BOX_HALF_M && p.y.abs() <= BOX_HALF_M);
            }
            // A star is concave when some corner turns the other way.
            let n = pts.len();
            let turns: Vec<f64> = (0..n)
                .map(|i| orient2d(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]))
                .collect();
            if turns.iter().any(|t| *t > 0.0) && turns.iter().any(|t| *t < 0.0) {
                reflex_seen = true;
            }
        }
        assert!(reflex_seen, "no concave polygon in the whole fixture");
    }
}

#!/usr/bin/env python3
"""Smoke test for the alphafence_py extension module.

Builds nothing itself: run `cargo build -p alphafence-python` first, then
`python3 python/smoke_test.py`. The script locates the compiled extension in
the workspace target directory, loads it, and walks the whole binding
surface against a tiny fixture.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

WORKSPACE = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        WORKSPACE / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libalphafence_py.so", "alphafence_py.so", "libalphafence_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not found; run `cargo build -p alphafence-python` first")
    # Python imports the module by its name, so the cdylib needs the bare
    # module filename; copy it rather than renaming the build output.
    stage = Path(tempfile.mkdtemp(prefix="alphafence_py_"))
    shutil.copy2(built, stage / "alphafence_py.so")
    sys.path.insert(0, str(stage))
    import alphafence_py

    return alphafence_py


def military_square() -> str:
    return json.dumps(
        {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {
                        "osm_id": "77",
                        "name": "Test Range",
                        "military": "training_area",
                    },
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [
                            [
                                [-0.5630, 51.4985],
                                [-0.5570, 51.4985],
                                [-0.5570, 51.5015],
                                [-0.5630, 51.5015],
                                [-0.5630, 51.4985],
                            ]
                        ],
                    },
                },
                {
                    "type": "Feature",
                    "properties": {
                        "osm_id": "533025",
                        "name": "Canada Copse",
                        "landuse": "forest",
                    },
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [
                            [
                                [-0.7432, 51.2901],
                                [-0.7401, 51.2903],
                                [-0.7398, 51.2921],
                                [-0.7435, 51.2919],
                                [-0.7432, 51.2901],
                            ]
                        ],
                    },
                },
            ],
        }
    )


def main() -> None:
    m = load_module()

    # Compile: the military area becomes a zone, the forest does not.
    db = m.Database.compile_geojson(military_square())
    assert db.diagnostics == [], db.diagnostics
    assert len(db) == 1 and db.zone_count() == 1
    assert db.zone_ids() == ["osm:77"]
    zone = db.zone("osm:77")
    assert zone["category"] == "military" and zone["mode"] == "keep_out", zone
    assert db.zone("osm:999") is None
    lat0, lon0 = db.origin()
    assert abs(lat0 - 51.4) < 0.5 and abs(lon0 + 0.6) < 0.5

    # Screening: inside the area, in its warning band, and far away.
    inside = db.check(51.5000, -0.5600)
    assert inside["worst"] == "violation", inside
    assert inside["results"][0]["zone_id"] == "osm:77"
    band = db.check(51.5000, -0.5564)
    assert band["worst"] in ("warning", "terminate"), band
    clear = db.check(51.6, -0.56)
    assert clear["worst"] == "clear" and clear["results"] == []

    # Save/load round-trip preserves the zone list bit for bit.
    blob = db.save()
    assert isinstance(blob, bytes) and b"sha256" in blob
    again = m.Database.load(blob)
    assert again.zone_ids() == db.zone_ids()
    assert bytes(again.save()) == bytes(blob)
    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "zones.db.json")
        db.save_file(path)
        assert m.Database.load_file(path).zone_ids() == db.zone_ids()
    try:
        m.Database.load(blob[:-40] + b'"tampered-digest-value-here"}')
        raise AssertionError("tampered database must not load")
    except (ValueError, RuntimeError):
        pass

    # Dynamic zones appear in screening and can be removed again.
    dyn_id = db.add_dynamic_zone(51.52, -0.56, 150.0)
    assert db.check(51.52, -0.56)["worst"] == "violation"
    assert db.remove_zone(dyn_id) is True
    assert db.remove_zone(dyn_id) is False
    assert db.check(51.52, -0.56)["worst"] == "clear"

    # Export is valid GeoJSON with one feature per zone.
    exported = json.loads(db.export_geojson())
    assert exported["type"] == "FeatureCollection"
    assert len(exported["features"]) == len(db)

    # Alpha-shape primitives: a 2x2 grid plus center point. With a generous
    # alpha the outline is the square; its hull is the same four corners.
    cloud = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0), (50.0, 50.0)]
    rings = m.alpha_shape_rings(cloud, 1e-12)
    assert len(rings) == 1 and len(rings[0]) == 4, rings
    assert sorted(rings[0]) == sorted(m.convex_hull(cloud))
    assert m.auto_alpha(cloud) > 0.0

    # Mission: a straight flight far from the zone completes cleanly.
    plan = {
        "waypoints": [
            {"lat": 51.60, "lon": -0.5800},
            {"lat": 51.60, "lon": -0.5650},
        ],
        "speed_mps": 20.0,
        "tick_s": 1.0,
    }
    trace = m.run_mission(db, json.dumps(plan))
    assert trace["summary"]["completed"] is True
    assert trace["summary"]["worst_status"] == "clear"
    kinds = [e["kind"] for e in trace["events"]]
    assert kinds[0] == "geofence_loaded" and kinds[-1] == "mission_complete"
    assert trace["states"][-1]["phase"] == "grounded"
    assert trace["summary"]["total_distance_m"] > 900.0

    # Bad inputs surface as ValueError, not panics.
    for call in (
        lambda: m.Database.compile_geojson("not json"),
        lambda: m.Database.compile_geojson(military_square(), mode="bogus"),
        lambda: db.check(123.0, 0.0),
        lambda: m.auto_alpha([(0.0, 0.0)]),
        lambda: m.run_mission(db, "{}"),
    ):
        try:
            call()
            raise AssertionError("expected ValueError")
        except ValueError:
            pass

    print("smoke test passed")


if __name__ == "__main__":
    main()

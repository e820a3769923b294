//! Geofencing engine for unmanned aircraft.
//!
//! The crate compiles restricted geographic areas into keep-out (or keep-in)
//! zones whose boundaries are alpha shapes, polygons, or analytic solids,
//! evaluates aircraft positions against those zones with layered
//! warning/termination buffers, and plans violation-free paths along the
//! edges of a Voronoi diagram of the zone boundaries.
//!
//! Modules are layered bottom-up: [`geo`] provides planar primitives and the
//! local tangent projection, [`alphashape`] and [`voronoi`] the computational
//! geometry, [`geofence`] zone semantics and position evaluation,
//! [`repository`] GeoJSON ingestion and the versioned zone database,
//! [`mission`] the scripted flight simulator, and [`bench`] the measurement
//! harness behind `alphafence bench`.

pub mod alphashape;
pub mod bench;
pub mod cli;
pub mod error;
pub mod geo;
pub mod geofence;
pub mod geojson;
pub mod mission;
pub mod repository;
pub mod synth;
pub mod voronoi;

pub use error::{Error, Result};

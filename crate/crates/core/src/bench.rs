//! Wall-clock benchmark comparing the polygonal baseline and the
//! alpha-shape pipeline over the same input.
//!
//! Two phases are measured per geometry mode: `geofence_computation` (a
//! full compile of the feature set, repeated `repetitions` times) and
//! `detection` (one `evaluate_all` call per query point, repeated over
//! every repetition, so its sample count is `repetitions x queries`).
//! Timings use the monotonic [`Instant`] clock, and the measurement loops
//! are single-threaded; compilation parallelism follows the supplied
//! config and is recorded in the environment descriptor so numbers are
//! never compared across different setups by accident.
//!
//! Percentiles use the nearest-rank definition: the p-th percentile of n
//! sorted samples is the `ceil(p/100 * n)`-th smallest, so p50 and p95 are
//! always actual observations and `p50 <= p95` holds structurally.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::repository::{
    compile, CategoryFilter, CompileConfig, CompiledDatabase, FeatureRecord, GeometryMode,
};

/// Summary of one timed phase.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseStats {
    pub samples: usize,
    pub mean_s: f64,
    pub p50_s: f64,
    pub p95_s: f64,
}

impl PhaseStats {
    fn from_samples(mut samples: Vec<f64>) -> PhaseStats {
        assert!(!samples.is_empty(), "a phase always has samples");
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let rank = |p: f64| samples[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        PhaseStats {
            samples: n,
            mean_s: samples.iter().sum::<f64>() / n as f64,
            p50_s: rank(0.50),
            p95_s: rank(0.95),
        }
    }
}

/// Both phases for one geometry mode.
#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: &'static str,
    pub geofence_computation: PhaseStats,
    pub detection: PhaseStats,
}

/// Complete benchmark result: one [`AlgorithmReport`] per mode plus the
/// shared context needed to interpret the numbers.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub zone_count: usize,
    pub query_count: usize,
    pub repetitions: usize,
    pub parallel_compile: bool,
    pub environment: String,
    pub algorithms: Vec<AlgorithmReport>,
}

impl BenchReport {
    pub fn report(&self, algorithm: &str) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }

    /// Human-readable aligned table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "zones {}   queries {}   repetitions {}   parallel compile {}\nenvironment: {}\n\n",
            self.zone_count,
            self.query_count,
            self.repetitions,
            if self.parallel_compile { "on" } else { "off" },
            self.environment,
        );
        out.push_str(&format!(
            "{:<10}  {:<20}  {:>8}  {:>12}  {:>12}  {:>12}\n",
            "algorithm", "phase", "samples", "mean [s]", "p50 [s]", "p95 [s]"
        ));
        for a in &self.algorithms {
            for (phase, s) in [
                ("geofence_computation", &a.geofence_computation),
                ("detection", &a.detection),
            ] {
                out.push_str(&format!(
                    "{:<10}  {:<20}  {:>8}  {:>12.6}  {:>12.6}  {:>12.6}\n",
                    a.algorithm, phase, s.samples, s.mean_s, s.p50_s, s.p95_s
                ));
            }
        }
        out
    }
}

fn environment_descriptor(parallel: bool) -> String {
    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{}/{}, {} cpus, {} build, measurement single-threaded, compile {}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus,
        if cfg!(debug_assertions) { "debug" } else { "release" },
        if parallel { "parallel" } else { "serial" },
    )
}

/// Times compilation and detection for both geometry modes over the same
/// features and query points.
///
/// `base` supplies everything except the geometry mode (buffers, alpha
/// policy, parallelism). Queries should lie inside the fixture's coverage;
/// uniform random points over the fixture area are the documented choice.
pub fn run_bench(
    features: &[FeatureRecord],
    queries: &[GeoPoint],
    repetitions: usize,
    filter: &CategoryFilter,
    base: &CompileConfig,
) -> Result<BenchReport> {
    if features.is_empty() {
        return Err(Error::InvalidInput("benchmark needs at least 1 feature".into()));
    }
    if queries.is_empty() {
        return Err(Error::InvalidInput("benchmark needs at least 1 query".into()));
    }
    if repetitions < 3 {
        return Err(Error::InvalidInput(format!(
            "benchmark needs at least 3 repetitions, got {repetitions}"
        )));
    }

    let mut algorithms = Vec::with_capacity(2);
    let mut zone_count = 0;
    for (name, mode) in [
        ("polygonal", GeometryMode::Polygonal),
        ("alpha", GeometryMode::Alpha),
    ] {
        let mut config = base.clone();
        config.mode = mode;

        let mut compile_samples = Vec::with_capacity(repetitions);
        let mut db: Option<CompiledDatabase> = None;
        for _ in 0..repetitions {
            let t0 = Instant::now();
            let out = compile(features, filter, &config);
            compile_samples.push(t0.elapsed().as_secs_f64());
            db = Some(out.database);
        }
        let db = db.expect("repetitions >= 3");
        zone_count = db.zones().len();

        let mut detect_samples = Vec::with_capacity(repetitions * queries.len());
        for _ in 0..repetitions {
            for q in queries {
                let t0 = Instant::now();
                let check = db.evaluate_all(q)?;
                detect_samples.push(t0.elapsed().as_secs_f64());
                std::hint::black_box(check);
            }
        }

        algorithms.push(AlgorithmReport {
            algorithm: name,
            geofence_computation: PhaseStats::from_samples(compile_samples),
            detection: PhaseStats::from_samples(detect_samples),
        });
    }

    Ok(BenchReport {
        zone_count,
        query_count: queries.len(),
        repetitions,
        parallel_compile: base.parallel,
        environment: environment_descriptor(base.parallel),
        algorithms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::parse_features;
    use crate::synth::{synthetic_geojson, synthetic_queries};

    #[test]
    fn percentiles_use_nearest_rank() {
        let s = PhaseStats::from_samples((1..=10).map(f64::from).collect());
        assert_eq!(s.samples, 10);
        assert_eq!(s.p50_s, 5.0);
        assert_eq!(s.p95_s, 10.0);
        assert!((s.mean_s - 5.5).abs() < 1e-12);

        let one = PhaseStats::from_samples(vec![0.25]);
        assert_eq!(one.p50_s, 0.25);
        assert_eq!(one.p95_s, 0.25);

        // Unsorted input must not matter.
        let s = PhaseStats::from_samples(vec![3.0, 1.0, 2.0]);
        assert_eq!(s.p50_s, 2.0);
        assert_eq!(s.p95_s, 3.0);
        assert!(s.p50_s <= s.p95_s);
    }

    #[test]
    fn bench_produces_both_modes_with_valid_stats() {
        let parsed = parse_features(&synthetic_geojson(12, 5)).unwrap();
        let queries = synthetic_queries(20, 6);
        let report = run_bench(
            &parsed.features,
            &queries,
            3,
            &CategoryFilter::default_profile(),
            &CompileConfig::default(),
        )
        .unwrap();

        assert_eq!(report.zone_count, 12);
        assert_eq!(report.query_count, 20);
        assert_eq!(report.algorithms.len(), 2);
        for a in &report.algorithms {
            assert_eq!(a.geofence_computation.samples, 3);
            assert_eq!(a.detection.samples, 60);
            assert!(a.geofence_computation.p50_s <= a.geofence_computation.p95_s);
            assert!(a.detection.p50_s <= a.detection.p95_s);
            assert!(a.detection.mean_s > 0.0);
        }
        assert!(report.report("alpha").is_some());
        assert!(report.report("polygonal").is_some());

        let table = report.table();
        assert!(table.contains("alpha") && table.contains("polygonal"));
        assert!(table.contains("geofence_computation") && table.contains("detection"));

        let json = serde_json::to_string_pretty(&report).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["zone_count"], 12);
        assert_eq!(parsed["algorithms"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn bench_rejects_undersized_inputs() {
        let parsed = parse_features(&synthetic_geojson(2, 5)).unwrap();
        let queries = synthetic_queries(4, 6);
        let filter = CategoryFilter::default_profile();
        let config = CompileConfig::default();
        assert!(run_bench(&[], &queries, 3, &filter, &config).is_err());
        assert!(run_bench(&parsed.features, &[], 3, &filter, &config).is_err());
        assert!(run_bench(&parsed.features, &queries, 2, &filter, &config).is_err());
    }
}

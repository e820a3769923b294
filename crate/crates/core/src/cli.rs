//! Command-line surface: compile, check, simulate, export, bench.
//!
//! Exit codes form a total function of the outcome class:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success; for `check`, status Clear; for `simulate`, completed without a violation |
//! | 1    | runtime failure: IO, parse, integrity, or an incomplete mission without zone contact |
//! | 2    | `check`: Warning |
//! | 3    | `check`: Terminate; `simulate`: flight ended in a termination action |
//! | 4    | `check`: Violation; `simulate`: a zone was entered |
//! | 5    | `simulate`: arming refused (start position violates a zone) |
//! | 64   | command-line usage error |
//!
//! Logging goes to stderr and is controlled by `GEOFENCE_LOG_LEVEL`
//! (error, warn, info, debug; default warn).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::run_bench;
use crate::error::{Error, Result};
use crate::geo::{BoundingBox, GeoPoint};
use crate::geofence::{ViolationStatus, ZoneMode};
use crate::geojson::{database_geojson, event_log, trace_geojson};
use crate::mission::{boundary_sites, run, EventKind, MissionPlan};
use crate::repository::{
    compile, parse_features, AlphaPolicy, CategoryFilter, CompileConfig, CompiledDatabase,
    Diagnostic, GeometryMode,
};
use crate::synth::{synthetic_geojson, synthetic_queries};
use crate::voronoi::{build_corridor, voronoi};
use crate::alphashape::PointSet;

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_WARNING: i32 = 2;
const EXIT_TERMINATE: i32 = 3;
const EXIT_VIOLATION: i32 = 4;
const EXIT_ARMING_REFUSED: i32 = 5;
const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "alphafence",
    version,
    about = "Compile, query, and fly against alpha-shape geofences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Alpha,
    Polygonal,
    Hull,
}

impl From<ModeArg> for GeometryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Alpha => GeometryMode::Alpha,
            ModeArg::Polygonal => GeometryMode::Polygonal,
            ModeArg::Hull => GeometryMode::Hull,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterProfile {
    /// Military, aviation, prison, school, power and related OSM tags.
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

/// Compilation knobs shared by `compile` and `bench`.
#[derive(Debug, Args)]
struct CompileArgs {
    /// Zone geometry to build for each restricted feature.
    #[arg(long, value_enum, default_value_t = ModeArg::Alpha)]
    mode: ModeArg,
    /// Alpha selection: "auto" or a fixed numeric value.
    #[arg(long, default_value = "auto")]
    alpha: String,
    /// Warning buffer in metres.
    #[arg(long, default_value_t = 50.0)]
    warning_m: f64,
    /// Termination buffer in metres.
    #[arg(long, default_value_t = 20.0)]
    termination_m: f64,
    /// Tag rules deciding which features are restricted.
    #[arg(long, value_enum, default_value_t = FilterProfile::Default)]
    filter_profile: FilterProfile,
    /// Compile features on all cores (output is byte-identical either way).
    #[arg(long)]
    parallel: bool,
}

impl CompileArgs {
    fn config(&self) -> Result<CompileConfig> {
        let alpha = match self.alpha.as_str() {
            "auto" => AlphaPolicy::Auto,
            v => {
                let value: f64 = v.parse().map_err(|_| {
                    Error::InvalidInput(format!("--alpha expects \"auto\" or a number, got {v:?}"))
                })?;
                AlphaPolicy::Fixed(value)
            }
        };
        Ok(CompileConfig {
            mode: self.mode.into(),
            alpha,
            warning_buffer_m: self.warning_m,
            termination_buffer_m: self.termination_m,
            parallel: self.parallel,
        })
    }

    fn filter(&self) -> CategoryFilter {
        match self.filter_profile {
            FilterProfile::Default => CategoryFilter::default_profile(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile restricted GeoJSON features into a zone database.
    Compile {
        /// Input GeoJSON: FeatureCollection, single Feature, or one Feature
        /// per line.
        input: PathBuf,
        /// Output database path.
        #[arg(long, default_value = "zones.db.json")]
        out: PathBuf,
        #[command(flatten)]
        compile: CompileArgs,
    },
    /// Evaluate one position against a compiled database.
    Check {
        /// Compiled database path.
        #[arg(long)]
        db: PathBuf,
        #[arg(allow_negative_numbers = true)]
        lat: f64,
        #[arg(allow_negative_numbers = true)]
        lon: f64,
        /// Altitude in metres, for altitude-limited zones.
        #[arg(allow_negative_numbers = true)]
        alt: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Fly a scripted mission plan and write trace artifacts.
    Simulate {
        /// Compiled database path.
        #[arg(long)]
        db: PathBuf,
        /// Mission plan JSON (waypoints, speed, policy knobs).
        plan: PathBuf,
        /// Trace GeoJSON path; an event log goes next to it with a .log
        /// extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fly the scripted route verbatim: no corridor replanning.
        #[arg(long)]
        no_replan: bool,
        /// Operator override: refuse rerouting and emergency-land when a
        /// termination band is reached.
        #[arg(long = "override")]
        override_redirect: bool,
        /// Seed for the sensor-noise generator.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write all zones (and optionally a corridor graph) as GeoJSON.
    Export {
        /// Compiled database path.
        #[arg(long)]
        db: PathBuf,
        /// Output GeoJSON path.
        #[arg(long, default_value = "zones.geojson")]
        out: PathBuf,
        /// Also export the Voronoi corridor graph between zones.
        #[arg(long)]
        corridor: bool,
        /// Corridor clearance in metres (with --corridor).
        #[arg(long, default_value_t = 30.0)]
        clearance_m: f64,
    },
    /// Compare polygonal and alpha-shape compile and detection times.
    Bench {
        /// Input GeoJSON; omit when using --synthetic.
        input: Option<PathBuf>,
        /// Generate a synthetic fixture with this many restricted polygons.
        #[arg(long, value_name = "N")]
        synthetic: Option<usize>,
        /// Number of random query points.
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        /// Repetitions per phase (at least 3).
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        /// Seed for the fixture and query generators.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// table prints the aligned table plus a JSON block; json prints
        /// only the JSON report.
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[command(flatten)]
        compile: CompileArgs,
    },
}

/// Parses `args` and runs the selected subcommand, returning the process
/// exit code. The first element of `args` is the program name.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and --version are successful outcomes, not usage errors.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Error::ArmingRefused(msg)) => {
            eprintln!("error: arming refused: {msg}");
            EXIT_ARMING_REFUSED
        }
        Err(Error::InvalidInput(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn init_logging() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        let env = env_logger::Env::new().filter_or("GEOFENCE_LOG_LEVEL", "warn");
        let _ = env_logger::Builder::from_env(env)
            .format_timestamp(None)
            .try_init();
    });
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Compile { input, out, compile } => cmd_compile(&input, &out, &compile),
        Command::Check {
            db,
            lat,
            lon,
            alt,
            format,
        } => cmd_check(&db, lat, lon, alt, format),
        Command::Simulate {
            db,
            plan,
            out,
            no_replan,
            override_redirect,
            seed,
            format,
        } => cmd_simulate(&db, &plan, out.as_deref(), no_replan, override_redirect, seed, format),
        Command::Export {
            db,
            out,
            corridor,
            clearance_m,
        } => cmd_export(&db, &out, corridor, clearance_m),
        Command::Bench {
            input,
            synthetic,
            queries,
            repetitions,
            seed,
            format,
            compile,
        } => cmd_bench(
            input.as_deref(),
            synthetic,
            queries,
            repetitions,
            seed,
            format,
            &compile,
        ),
    }
}

fn print_diagnostics(diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("note: {d}");
    }
}

fn load_database(path: &Path) -> Result<CompiledDatabase> {
    let bytes = std::fs::read(path)?;
    CompiledDatabase::load(&bytes)
}

fn cmd_compile(input: &Path, out: &Path, args: &CompileArgs) -> Result<i32> {
    let config = args.config()?;
    let text = std::fs::read_to_string(input)?;
    let parsed = parse_features(&text)?;
    print_diagnostics(&parsed.diagnostics);

    let output = compile(&parsed.features, &args.filter(), &config);
    print_diagnostics(&output.diagnostics);

    let bytes = output.database.save()?;
    std::fs::write(out, &bytes)?;
    println!(
        "compiled {} zones from {} features -> {}",
        output.database.zones().len(),
        parsed.features.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn status_code(status: ViolationStatus) -> i32 {
    match status {
        ViolationStatus::Clear => EXIT_OK,
        ViolationStatus::Warning => EXIT_WARNING,
        ViolationStatus::Terminate => EXIT_TERMINATE,
        ViolationStatus::Violation => EXIT_VIOLATION,
    }
}

fn cmd_check(db: &Path, lat: f64, lon: f64, alt: Option<f64>, format: Format) -> Result<i32> {
    let db = load_database(db)?;
    let point = match alt {
        Some(a) => GeoPoint::with_alt(lat, lon, a)?,
        None => GeoPoint::new(lat, lon)?,
    };
    let check = db.evaluate_all(&point)?;

    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&check)?),
        Format::Table => {
            println!("status: {}", check.worst);
            if check.out_of_coverage {
                println!("position is outside database coverage");
            }
            for r in &check.results {
                println!(
                    "  {:<24} {:<10} {:>10.1} m",
                    r.zone_id,
                    r.status.to_string(),
                    r.signed_distance_m
                );
            }
        }
    }
    Ok(status_code(check.worst))
}

fn cmd_simulate(
    db: &Path,
    plan_path: &Path,
    out: Option<&Path>,
    no_replan: bool,
    override_redirect: bool,
    seed: Option<u64>,
    format: Format,
) -> Result<i32> {
    let db = load_database(db)?;
    let text = std::fs::read_to_string(plan_path)?;
    let mut plan: MissionPlan = serde_json::from_str(&text)?;
    if no_replan {
        plan.replan = false;
    }
    if override_redirect {
        plan.override_redirect = true;
    }
    if let Some(s) = seed {
        plan.seed = s;
    }

    let trace = run(&db, plan)?;

    if let Some(out) = out {
        std::fs::write(out, trace_geojson(&trace))?;
        let log_path = out.with_extension("log");
        std::fs::write(&log_path, event_log(&trace))?;
        eprintln!("trace -> {}, events -> {}", out.display(), log_path.display());
    }

    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&trace.summary)?),
        Format::Table => {
            println!(
                "completed: {}   worst status: {}   distance: {:.1} m   ticks: {}",
                trace.summary.completed,
                trace.summary.worst_status,
                trace.summary.total_distance_m,
                trace.states.len() - 1,
            );
            for e in &trace.events {
                println!(
                    "  t={:<8.1} {:<18} {:<20} {}",
                    e.time_s,
                    e.kind.to_string(),
                    e.zone_id.as_deref().unwrap_or("-"),
                    e.detail
                );
            }
        }
    }

    let violated = trace
        .events
        .iter()
        .any(|e| e.kind == EventKind::ViolationEntered);
    Ok(if violated {
        EXIT_VIOLATION
    } else if trace.summary.completed {
        EXIT_OK
    } else if trace.summary.worst_status >= ViolationStatus::Terminate {
        EXIT_TERMINATE
    } else {
        EXIT_ERROR
    })
}

fn cmd_export(db: &Path, out: &Path, corridor: bool, clearance_m: f64) -> Result<i32> {
    let db = load_database(db)?;
    let graph = if corridor {
        build_export_corridor(&db, clearance_m)
    } else {
        None
    };
    let text = database_geojson(&db, graph.as_ref())?;
    std::fs::write(out, text)?;
    println!(
        "exported {} zones{} -> {}",
        db.zones().len(),
        graph
            .as_ref()
            .map(|g| format!(" and {} corridor edges", g.edges().len()))
            .unwrap_or_default(),
        out.display()
    );
    Ok(EXIT_OK)
}

/// Corridor over the whole database: sites from every keep-out boundary,
/// clipped a little beyond the zones' joint extent.
fn build_export_corridor(
    db: &CompiledDatabase,
    clearance_m: f64,
) -> Option<crate::voronoi::CorridorGraph> {
    let keep_out: Vec<_> = db
        .zones()
        .iter()
        .filter(|z| z.mode == ZoneMode::KeepOut)
        .cloned()
        .collect();
    let push = 2.0 * clearance_m.max(0.0) + 10.0;
    let mut sites = Vec::new();
    for z in &keep_out {
        boundary_sites(&z.geometry, push, &mut sites);
    }
    let set = PointSet::new(sites.clone()).ok()?;
    let clip = BoundingBox::around(sites.iter(), push + 500.0).ok()?;
    let diagram = voronoi(&set, clip).ok()?;
    Some(build_corridor(&diagram, &keep_out, clearance_m))
}

fn cmd_bench(
    input: Option<&Path>,
    synthetic: Option<usize>,
    queries: usize,
    repetitions: usize,
    seed: u64,
    format: Format,
    args: &CompileArgs,
) -> Result<i32> {
    let text = match (input, synthetic) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "give an input file or --synthetic, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "bench needs an input file or --synthetic N".into(),
            ))
        }
        (Some(path), None) => std::fs::read_to_string(path)?,
        (None, Some(n)) => {
            if n == 0 {
                return Err(Error::InvalidInput("--synthetic needs at least 1".into()));
            }
            synthetic_geojson(n, seed)
        }
    };
    let parsed = parse_features(&text)?;
    print_diagnostics(&parsed.diagnostics);

    let query_points = if synthetic.is_some() {
        synthetic_queries(queries, seed.wrapping_add(1))
    } else {
        scatter_over_features(&parsed.features, queries, seed.wrapping_add(1))?
    };

    let report = run_bench(
        &parsed.features,
        &query_points,
        repetitions,
        &args.filter(),
        &args.config()?,
    )?;

    let json = serde_json::to_string_pretty(&report)?;
    match format {
        Format::Json => println!("{json}"),
        Format::Table => {
            print!("{}", report.table());
            println!("\n{json}");
        }
    }
    Ok(EXIT_OK)
}

/// Uniform random positions over the features' own extent, so queries for a
/// user-supplied file land inside its coverage.
fn scatter_over_features(
    features: &[crate::repository::FeatureRecord],
    count: usize,
    seed: u64,
) -> Result<Vec<GeoPoint>> {
    let coords: Vec<&GeoPoint> = features.iter().flat_map(|f| &f.rings).flatten().collect();
    if coords.is_empty() {
        return Err(Error::InvalidInput(
            "input has no coordinates to scatter queries over".into(),
        ));
    }
    let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in coords {
        lat_min = lat_min.min(c.lat_deg);
        lat_max = lat_max.max(c.lat_deg);
        lon_min = lon_min.min(c.lon_deg);
        lon_max = lon_max.max(c.lon_deg);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| GeoPoint::new(rng.random_range(lat_min..=lat_max), rng.random_range(lon_min..=lon_max)))
        .collect()
}

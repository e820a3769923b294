//! Scripted mission execution against a compiled zone database.
//!
//! The simulator flies the plan's waypoints at constant speed along straight
//! segments, advancing in fixed ticks. Every tick the sensed position is
//! screened against all zones and status changes drive an event protocol:
//! each zone emits at most one event per excursion and per severity level,
//! so a trace reads as "entered the warning band, was rerouted, left" rather
//! than a hundred repeats of the same fact.
//!
//! Two avoidance policies exist. By default a warning triggers replanning:
//! the remaining route is swapped for a corridor path computed from a
//! Voronoi diagram seeded with the boundary vertices of nearby zones (plus
//! an outward-shifted copy of each ring, which places corridor edges in the
//! middle of the gap between a zone and open space). With
//! `override_redirect` the operator has refused rerouting, and the aircraft
//! instead stops and descends the moment it reaches a termination band,
//! strictly before the zone itself. Crossing into a zone is terminal either
//! way.
//!
//! A [`MissionPlan`] deserializes from plain JSON:
//!
//! ```json
//! {
//!   "waypoints": [{"lat": 51.5, "lon": -0.56, "alt": 60.0}, ...],
//!   "speed_mps": 12.0,
//!   "tick_s": 0.1,
//!   "override_redirect": false,
//!   "replan": true,
//!   "position_noise_m": 0.0,
//!   "seed": 0,
//!   "max_ticks": 1000000
//! }
//! ```
//!
//! Everything after `speed_mps` is optional. Runs are deterministic: the
//! noise knob draws from a counter-based generator seeded by `seed`, so two
//! runs of the same plan against the same database produce identical traces.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphashape::PointSet;
use crate::error::{Error, Result};
use crate::geo::{point_segment_distance, BoundingBox, GeoPoint, PlanarPoint};
use crate::geofence::{AirspaceCheck, ViolationStatus, Zone, ZoneGeometry, ZoneMode};
use crate::repository::CompiledDatabase;
use crate::voronoi::{build_corridor, segment_clear_of, shortest_path, voronoi, Path};

/// Simulation step used when a plan does not name one.
pub const DEFAULT_TICK_S: f64 = 0.1;

/// Vertical speed during an emergency landing.
const DESCENT_RATE_MPS: f64 = 2.0;

/// How far zones are searched around the straight line to the goal when
/// assembling a replanning corridor.
const CORRIDOR_SEARCH_MARGIN_M: f64 = 2_000.0;

fn default_tick() -> f64 {
    DEFAULT_TICK_S
}

fn default_true() -> bool {
    true
}

fn default_max_ticks() -> u64 {
    1_000_000
}

/// A scripted flight: ordered waypoints and the policy knobs that control
/// how geofence status changes are handled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    /// Route including the start position; at least one point.
    pub waypoints: Vec<GeoPoint>,
    /// Constant ground speed, strictly positive.
    pub speed_mps: f64,
    /// Simulation step in seconds, strictly positive.
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    /// Operator has refused rerouting: no replanning happens, and reaching
    /// a termination band triggers an immediate emergency landing.
    #[serde(default)]
    pub override_redirect: bool,
    /// Reroute around zones when a warning fires. Disabling this without
    /// `override_redirect` flies the script verbatim, accepting violation.
    #[serde(default = "default_true")]
    pub replan: bool,
    /// Half-width of uniform position noise applied to the sensed (not the
    /// flown) position, for robustness experiments. Zero disables it.
    #[serde(default)]
    pub position_noise_m: f64,
    /// Seed for the noise generator.
    #[serde(default)]
    pub seed: u64,
    /// Hard cap on simulation steps; [`run`] stops there with
    /// `completed: false` rather than looping forever.
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
}

impl MissionPlan {
    /// A plan with default tick, replanning on, no override and no noise.
    pub fn new(waypoints: Vec<GeoPoint>, speed_mps: f64) -> Self {
        MissionPlan {
            waypoints,
            speed_mps,
            tick_s: DEFAULT_TICK_S,
            override_redirect: false,
            replan: true,
            position_noise_m: 0.0,
            seed: 0,
            max_ticks: default_max_ticks(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidInput("plan has no waypoints".into()));
        }
        for (i, wp) in self.waypoints.iter().enumerate() {
            wp.validate()
                .map_err(|e| Error::InvalidInput(format!("waypoint {i}: {e}")))?;
        }
        if !self.speed_mps.is_finite() || self.speed_mps <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "speed must be positive, got {}",
                self.speed_mps
            )));
        }
        if !self.tick_s.is_finite() || self.tick_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tick must be positive, got {}",
                self.tick_s
            )));
        }
        if !self.position_noise_m.is_finite() || self.position_noise_m < 0.0 {
            return Err(Error::InvalidInput(format!(
                "position noise must be >= 0, got {}",
                self.position_noise_m
            )));
        }
        if self.max_ticks == 0 {
            return Err(Error::InvalidInput("max_ticks must be >= 1".into()));
        }
        Ok(())
    }
}

/// Where the aircraft is in its lifecycle.
///
/// Transitions are one-way: `Grounded` (pre-arm) to `Flying`, then either
/// back to `Grounded` on completion, through `EmergencyLanding` to
/// `Grounded`, or to `Terminated`. A grounded-after-flight or terminated
/// engine refuses further steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightPhase {
    Grounded,
    Flying,
    EmergencyLanding,
    Terminated,
}

impl std::fmt::Display for FlightPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FlightPhase::Grounded => "Grounded",
            FlightPhase::Flying => "Flying",
            FlightPhase::EmergencyLanding => "EmergencyLanding",
            FlightPhase::Terminated => "Terminated",
        };
        f.write_str(s)
    }
}

/// Aircraft snapshot after a tick. `heading_deg` is measured
/// counter-clockwise from east, matching the planar frame's x axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub position: GeoPoint,
    pub heading_deg: f64,
    pub time_s: f64,
    pub phase: FlightPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    GeofenceLoaded,
    WarningIssued,
    PathReplanned,
    TerminateIssued,
    EmergencyLanding,
    ViolationEntered,
    MissionComplete,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EventKind::GeofenceLoaded => "GeofenceLoaded",
            EventKind::WarningIssued => "WarningIssued",
            EventKind::PathReplanned => "PathReplanned",
            EventKind::TerminateIssued => "TerminateIssued",
            EventKind::EmergencyLanding => "EmergencyLanding",
            EventKind::ViolationEntered => "ViolationEntered",
            EventKind::MissionComplete => "MissionComplete",
        };
        f.write_str(s)
    }
}

/// One entry in the mission log. `position` is the true (noise-free)
/// position at emission time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionEvent {
    pub time_s: f64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_id: Option<String>,
    pub position: GeoPoint,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    /// Every waypoint was reached and nothing terminal happened.
    pub completed: bool,
    /// Worst status observed on any tick.
    pub worst_status: ViolationStatus,
    /// Ground distance actually flown, in metres.
    pub total_distance_m: f64,
}

/// Full record of one simulated flight: the state after every tick (plus
/// the initial state), all events in time order, and totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub states: Vec<UavState>,
    pub events: Vec<MissionEvent>,
    pub summary: MissionSummary,
}

#[derive(Debug, Clone)]
struct RoutePoint {
    xy: PlanarPoint,
    alt_m: Option<f64>,
}

/// The stepped simulator. Owns a snapshot of the database, so later edits
/// to the caller's copy do not affect a flight in progress.
#[derive(Debug, Clone)]
pub struct MissionEngine {
    db: CompiledDatabase,
    plan: MissionPlan,
    route: VecDeque<RoutePoint>,
    xy: PlanarPoint,
    alt_m: Option<f64>,
    heading_deg: f64,
    time_s: f64,
    phase: FlightPhase,
    completed: bool,
    landed: bool,
    /// Highest status already reported per zone, cleared when the zone
    /// reads Clear again. This is what makes events once-per-excursion.
    excursions: BTreeMap<String, ViolationStatus>,
    worst: ViolationStatus,
    total_distance_m: f64,
    rng: ChaCha8Rng,
    init_events: Vec<MissionEvent>,
    ticks: u64,
}

impl MissionEngine {
    /// Validates the plan, projects the route, and arms the aircraft on the
    /// first waypoint. Arming is refused if that position already violates
    /// a zone. Emits `GeofenceLoaded` and, when the start lies inside a
    /// warning or termination band, the matching zone events at time zero;
    /// with replanning enabled the route is adjusted before takeoff.
    pub fn initialize(db: &CompiledDatabase, plan: MissionPlan) -> Result<MissionEngine> {
        plan.validate()?;
        let proj = db.projection();
        let start = plan.waypoints[0];
        let xy = proj.project(&start)?;
        let mut route = VecDeque::with_capacity(plan.waypoints.len() - 1);
        for wp in &plan.waypoints[1..] {
            route.push_back(RoutePoint {
                xy: proj.project(wp)?,
                alt_m: wp.alt_m,
            });
        }

        let check = db.evaluate_all(&start)?;
        if check.worst == ViolationStatus::Violation {
            let ids: Vec<&str> = check
                .results
                .iter()
                .filter(|r| r.status == ViolationStatus::Violation)
                .map(|r| r.zone_id.as_str())
                .collect();
            return Err(Error::ArmingRefused(format!(
                "start position violates {}",
                ids.join(", ")
            )));
        }
        if check.out_of_coverage {
            log::warn!("mission starts outside database coverage");
        }

        let heading_deg = route
            .front()
            .map(|t| heading_of(xy, t.xy))
            .unwrap_or(0.0);
        let seed = plan.seed;
        let mut engine = MissionEngine {
            db: db.clone(),
            plan,
            route,
            xy,
            alt_m: start.alt_m,
            heading_deg,
            time_s: 0.0,
            phase: FlightPhase::Grounded,
            completed: false,
            landed: false,
            excursions: BTreeMap::new(),
            worst: ViolationStatus::Clear,
            total_distance_m: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            init_events: Vec::new(),
            ticks: 0,
        };

        let near_route = engine.zones_near_route();
        let loaded = MissionEvent {
            time_s: 0.0,
            kind: EventKind::GeofenceLoaded,
            zone_id: None,
            position: engine.geo_position(),
            detail: format!(
                "{} zones active, {} within a warning buffer of the planned route",
                engine.db.zones().len(),
                near_route
            ),
        };
        engine.init_events.push(loaded);

        let mut events = Vec::new();
        let new_levels = engine.record_zone_events(&check, &mut events);
        engine.worst = engine.worst.max(check.worst);
        // Starting inside a band with replanning on: fix the route while
        // still on the ground. The landing branch of the policy does not
        // apply here because there is nothing to land yet.
        if engine.plan.replan
            && !engine.plan.override_redirect
            && new_levels
                .iter()
                .any(|(_, s)| *s >= ViolationStatus::Warning)
        {
            let zone = new_levels[0].0.clone();
            engine.try_replan(&zone, &mut events);
        }
        engine.init_events.append(&mut events);
        log::info!(
            "armed with {} zones, start status {}",
            engine.db.zones().len(),
            check.worst
        );
        Ok(engine)
    }

    /// Events emitted while arming, starting with `GeofenceLoaded`.
    pub fn initial_events(&self) -> &[MissionEvent] {
        &self.init_events
    }

    pub fn state(&self) -> UavState {
        UavState {
            position: self.geo_position(),
            heading_deg: self.heading_deg,
            time_s: self.time_s,
            phase: self.phase,
        }
    }

    /// True once the flight reached a terminal condition: completed,
    /// terminated, or landed after an emergency.
    pub fn finished(&self) -> bool {
        self.completed || self.landed || self.phase == FlightPhase::Terminated
    }

    /// Advances the simulation one tick. `dt_s` must equal the plan's tick.
    ///
    /// Returns the state after the tick and the events it produced, in
    /// order: zone status events, then policy reactions (replan or
    /// landing), then `MissionComplete`.
    pub fn step(&mut self, dt_s: f64) -> Result<(UavState, Vec<MissionEvent>)> {
        if !dt_s.is_finite() || (dt_s - self.plan.tick_s).abs() > 1e-9 * self.plan.tick_s.max(1.0)
        {
            return Err(Error::InvalidInput(format!(
                "step dt {} does not match the plan tick {}",
                dt_s, self.plan.tick_s
            )));
        }
        if self.finished() {
            return Err(Error::InvalidState(format!(
                "mission already over (phase {}, t={:.1}s)",
                self.phase, self.time_s
            )));
        }

        if self.phase == FlightPhase::Grounded {
            self.phase = FlightPhase::Flying;
        }
        match self.phase {
            FlightPhase::Flying => self.fly(dt_s),
            FlightPhase::EmergencyLanding => self.descend(dt_s),
            FlightPhase::Grounded | FlightPhase::Terminated => unreachable!(),
        }
        self.time_s += dt_s;
        self.ticks += 1;

        let sensed = self.sensed_position();
        let check = self.db.evaluate_all(&sensed)?;
        self.worst = self.worst.max(check.worst);

        let mut events = Vec::new();
        let new_levels = self.record_zone_events(&check, &mut events);
        self.apply_policy(&check, &new_levels, &mut events);

        if self.phase == FlightPhase::Flying && self.route.is_empty() {
            self.phase = FlightPhase::Grounded;
            self.completed = true;
            events.push(self.event(
                EventKind::MissionComplete,
                None,
                format!("flew {:.1} m in {:.1} s", self.total_distance_m, self.time_s),
            ));
        }
        Ok((self.state(), events))
    }

    fn fly(&mut self, dt_s: f64) {
        let mut remaining = self.plan.speed_mps * dt_s;
        while remaining > 1e-12 {
            let Some(target) = self.route.front().cloned() else {
                break;
            };
            let dist = self.xy.distance(target.xy);
            if dist <= remaining {
                if dist > 0.0 {
                    self.heading_deg = heading_of(self.xy, target.xy);
                }
                self.xy = target.xy;
                if target.alt_m.is_some() {
                    self.alt_m = target.alt_m;
                }
                self.total_distance_m += dist;
                remaining -= dist;
                self.route.pop_front();
            } else {
                let frac = remaining / dist;
                self.heading_deg = heading_of(self.xy, target.xy);
                self.xy = PlanarPoint::new(
                    self.xy.x + (target.xy.x - self.xy.x) * frac,
                    self.xy.y + (target.xy.y - self.xy.y) * frac,
                );
                if let (Some(cur), Some(tgt)) = (self.alt_m, target.alt_m) {
                    self.alt_m = Some(cur + (tgt - cur) * frac);
                }
                self.total_distance_m += remaining;
                remaining = 0.0;
            }
        }
    }

    fn descend(&mut self, dt_s: f64) {
        match self.alt_m {
            Some(alt) if alt > DESCENT_RATE_MPS * dt_s => {
                self.alt_m = Some(alt - DESCENT_RATE_MPS * dt_s);
            }
            Some(_) => {
                self.alt_m = Some(0.0);
                self.phase = FlightPhase::Grounded;
                self.landed = true;
            }
            None => {
                self.phase = FlightPhase::Grounded;
                self.landed = true;
            }
        }
    }

    fn sensed_position(&mut self) -> GeoPoint {
        let n = self.plan.position_noise_m;
        let xy = if n > 0.0 {
            PlanarPoint::new(
                self.xy.x + self.rng.random_range(-n..=n),
                self.xy.y + self.rng.random_range(-n..=n),
            )
        } else {
            self.xy
        };
        self.db.projection().unproject(xy, self.alt_m)
    }

    fn geo_position(&self) -> GeoPoint {
        self.db.projection().unproject(self.xy, self.alt_m)
    }

    fn event(&self, kind: EventKind, zone_id: Option<&str>, detail: String) -> MissionEvent {
        MissionEvent {
            time_s: self.time_s,
            kind,
            zone_id: zone_id.map(str::to_owned),
            position: self.geo_position(),
            detail,
        }
    }

    /// Emits one event per zone whose status climbed above anything already
    /// reported in its current excursion, and forgets zones that dropped
    /// back to Clear. Returns the (zone, status) pairs that escalated.
    fn record_zone_events(
        &mut self,
        check: &AirspaceCheck,
        out: &mut Vec<MissionEvent>,
    ) -> Vec<(String, ViolationStatus)> {
        let mut escalated = Vec::new();
        for r in &check.results {
            let prev = self
                .excursions
                .get(&r.zone_id)
                .copied()
                .unwrap_or(ViolationStatus::Clear);
            if r.status > prev {
                let kind = match r.status {
                    ViolationStatus::Warning => EventKind::WarningIssued,
                    ViolationStatus::Terminate => EventKind::TerminateIssued,
                    ViolationStatus::Violation => EventKind::ViolationEntered,
                    ViolationStatus::Clear => continue,
                };
                out.push(self.event(
                    kind,
                    Some(&r.zone_id),
                    format!("signed distance {:.1} m", r.signed_distance_m),
                ));
                self.excursions.insert(r.zone_id.clone(), r.status);
                escalated.push((r.zone_id.clone(), r.status));
            }
        }
        self.excursions
            .retain(|id, _| check.results.iter().any(|r| &r.zone_id == id));
        escalated
    }

    fn apply_policy(
        &mut self,
        check: &AirspaceCheck,
        new_levels: &[(String, ViolationStatus)],
        events: &mut Vec<MissionEvent>,
    ) {
        if check.worst == ViolationStatus::Violation {
            self.phase = FlightPhase::Terminated;
            return;
        }
        if self.phase != FlightPhase::Flying {
            return;
        }
        if check.worst >= ViolationStatus::Terminate {
            let zone = check
                .results
                .iter()
                .find(|r| r.status >= ViolationStatus::Terminate)
                .map(|r| r.zone_id.clone())
                .unwrap_or_default();
            if self.plan.override_redirect {
                self.phase = FlightPhase::EmergencyLanding;
                events.push(self.event(
                    EventKind::EmergencyLanding,
                    Some(&zone),
                    "override active; stopping and descending".into(),
                ));
                return;
            }
            if self.plan.replan
                && new_levels
                    .iter()
                    .any(|(_, s)| *s == ViolationStatus::Terminate)
            {
                self.try_replan(&zone, events);
            }
            return;
        }
        if self.plan.replan && !self.plan.override_redirect {
            if let Some((zone, _)) = new_levels
                .iter()
                .find(|(_, s)| *s == ViolationStatus::Warning)
            {
                let zone = zone.clone();
                self.try_replan(&zone, events);
            }
        }
    }

    /// Swaps the remaining route for a corridor path when one exists,
    /// otherwise falls back to an emergency landing (only while airborne:
    /// a failed pre-takeoff replan leaves the route alone).
    fn try_replan(&mut self, trigger_zone: &str, events: &mut Vec<MissionEvent>) {
        match self.plan_corridor() {
            Some((path, clearance, goal_idx)) => {
                let goal_alt = self.route[goal_idx].alt_m;
                let tail: Vec<RoutePoint> =
                    self.route.iter().skip(goal_idx + 1).cloned().collect();
                let last = path.waypoints.len() - 1;
                let mut new_route = VecDeque::with_capacity(path.waypoints.len() + tail.len());
                for (i, wp) in path.waypoints.iter().enumerate().skip(1) {
                    new_route.push_back(RoutePoint {
                        xy: *wp,
                        alt_m: if i == last { goal_alt } else { None },
                    });
                }
                new_route.extend(tail);
                let n = new_route.len();
                self.route = new_route;
                events.push(self.event(
                    EventKind::PathReplanned,
                    Some(trigger_zone),
                    format!(
                        "{:.0} m detour via {} waypoints, clearance >= {:.0} m",
                        path.total_length, n, clearance
                    ),
                ));
            }
            None if self.phase == FlightPhase::Flying => {
                self.phase = FlightPhase::EmergencyLanding;
                events.push(self.event(
                    EventKind::EmergencyLanding,
                    Some(trigger_zone),
                    "no admissible corridor found; stopping and descending".into(),
                ));
            }
            None => {
                log::warn!("no corridor found from the start position; flying the plan as-is");
            }
        }
    }

    /// Searches for a corridor path to the closest reachable remaining
    /// waypoint, preferring clearances that keep the aircraft out of every
    /// termination band and degrading to bare violation-avoidance.
    fn plan_corridor(&self) -> Option<(Path, f64, usize)> {
        let max_term = self
            .db
            .zones()
            .iter()
            .filter(|z| z.mode == ZoneMode::KeepOut)
            .map(|z| z.termination_buffer_m)
            .fold(0.0, f64::max);
        let mut tiers = vec![max_term + 1.0];
        if max_term > 0.0 {
            tiers.push(1.0);
        }

        for goal_idx in 0..self.route.len() {
            let goal = self.route[goal_idx].xy;
            for &tier in &tiers {
                let zones = self.zones_near_segment(goal, tier);
                if zones
                    .iter()
                    .all(|z| segment_clear_of(z, self.xy, goal, tier))
                {
                    let total = self.xy.distance(goal);
                    return Some((
                        Path {
                            waypoints: vec![self.xy, goal],
                            total_length: total,
                        },
                        tier,
                        goal_idx,
                    ));
                }
                if let Some(path) = self.corridor_path(&zones, goal, tier) {
                    return Some((path, tier, goal_idx));
                }
            }
        }
        None
    }

    fn zones_near_segment(&self, goal: PlanarPoint, tier: f64) -> Vec<Zone> {
        let margin = CORRIDOR_SEARCH_MARGIN_M + 4.0 * tier;
        self.db
            .zones()
            .iter()
            .filter(|z| z.mode == ZoneMode::KeepOut)
            .filter(|z| {
                point_segment_distance(z.geometry.anchor(), self.xy, goal)
                    <= z.geometry.footprint_radius() + margin
            })
            .cloned()
            .collect()
    }

    fn corridor_path(&self, zones: &[Zone], goal: PlanarPoint, tier: f64) -> Option<Path> {
        if zones.is_empty() {
            return None;
        }
        // Outward-shifted boundary copies put corridor edges mid-gap, at
        // about push/2 off each zone, comfortably above the clearance.
        let push = 2.0 * tier + 10.0;
        let mut sites = Vec::new();
        for z in zones {
            boundary_sites(&z.geometry, push, &mut sites);
        }
        if sites.len() < 2 {
            return None;
        }
        let set = PointSet::new(sites.clone()).ok()?;
        let clip = BoundingBox::around(
            sites.iter().chain([&self.xy, &goal]),
            push + 500.0,
        )
        .ok()?;
        let diagram = voronoi(&set, clip).ok()?;
        let graph = build_corridor(&diagram, zones, tier);
        shortest_path(&graph, self.xy, goal).ok()
    }

    /// Zones whose warning band the straight scripted route touches.
    fn zones_near_route(&self) -> usize {
        let mut points = vec![self.xy];
        points.extend(self.route.iter().map(|r| r.xy));
        self.db
            .zones()
            .iter()
            .filter(|z| {
                points
                    .windows(2)
                    .any(|w| !segment_clear_of(z, w[0], w[1], z.warning_buffer_m))
            })
            .count()
    }
}

fn heading_of(from: PlanarPoint, to: PlanarPoint) -> f64 {
    (to.y - from.y).atan2(to.x - from.x).to_degrees()
}

/// Appends Voronoi sites for one zone: its boundary, densified to steps of
/// at most `push` metres, plus a copy of each boundary point shifted `push`
/// metres away from the zone's anchor.
pub(crate) fn boundary_sites(geometry: &ZoneGeometry, push: f64, out: &mut Vec<PlanarPoint>) {
    let spacing = push.max(5.0);
    let mut boundary: Vec<PlanarPoint> = Vec::new();
    match geometry {
        ZoneGeometry::Polygonal { ring } => {
            densify_ring(ring.vertices(), spacing, &mut boundary);
        }
        ZoneGeometry::AlphaZone { shape } => {
            for ring in shape.boundary() {
                densify_ring(ring.vertices(), spacing, &mut boundary);
            }
        }
        ZoneGeometry::Circular { center, radius_m }
        | ZoneGeometry::Spherical {
            center, radius_m, ..
        }
        | ZoneGeometry::Cylindrical {
            center, radius_m, ..
        } => {
            let n = circle_site_count(*radius_m, spacing);
            for k in 0..n {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                boundary.push(PlanarPoint::new(
                    center.x + radius_m * a.cos(),
                    center.y + radius_m * a.sin(),
                ));
            }
        }
        ZoneGeometry::Elliptical {
            center,
            semi_major_m,
            semi_minor_m,
            heading_deg,
        } => {
            let n = circle_site_count(*semi_major_m, spacing);
            let (sin_h, cos_h) = heading_deg.to_radians().sin_cos();
            for k in 0..n {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                let (ex, ey) = (semi_major_m * a.cos(), semi_minor_m * a.sin());
                boundary.push(PlanarPoint::new(
                    center.x + ex * cos_h - ey * sin_h,
                    center.y + ex * sin_h + ey * cos_h,
                ));
            }
        }
    }
    let anchor = geometry.anchor();
    for s in boundary {
        out.push(s);
        let dx = s.x - anchor.x;
        let dy = s.y - anchor.y;
        let len = (dx * dx + dy * dy).sqrt();
        if len > 1e-9 {
            out.push(PlanarPoint::new(
                s.x + dx / len * push,
                s.y + dy / len * push,
            ));
        }
    }
}

fn circle_site_count(radius: f64, spacing: f64) -> usize {
    ((std::f64::consts::TAU * radius / spacing).ceil() as usize).clamp(12, 128)
}

fn densify_ring(vertices: &[PlanarPoint], spacing: f64, out: &mut Vec<PlanarPoint>) {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        out.push(a);
        let len = a.distance(b);
        let steps = (len / spacing).ceil() as usize;
        for k in 1..steps {
            let t = k as f64 / steps as f64;
            out.push(PlanarPoint::new(
                a.x + (b.x - a.x) * t,
                a.y + (b.y - a.y) * t,
            ));
        }
    }
}

/// Flies the whole plan and returns the trace: the initial state, one state
/// per tick, every event, and the summary. Stops at completion, at a
/// terminal phase, or at the plan's tick cap (then `completed` stays
/// false).
pub fn run(db: &CompiledDatabase, plan: MissionPlan) -> Result<MissionTrace> {
    let tick = plan.tick_s;
    let max_ticks = plan.max_ticks;
    let mut engine = MissionEngine::initialize(db, plan)?;
    let mut states = vec![engine.state()];
    let mut events = engine.initial_events().to_vec();
    while !engine.finished() {
        if engine.ticks >= max_ticks {
            log::warn!("mission stopped at the {max_ticks}-tick cap without completing");
            break;
        }
        let (state, mut evs) = engine.step(tick)?;
        states.push(state);
        events.append(&mut evs);
    }
    Ok(MissionTrace {
        states,
        events,
        summary: MissionSummary {
            completed: engine.completed,
            worst_status: engine.worst,
            total_distance_m: engine.total_distance_m,
        },
    })
}

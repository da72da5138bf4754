//! Deterministic 2D lane-graph traffic simulator.
//!
//! The world advances on a fixed step: each agent's behavior tree emits a
//! command, the ego vehicle follows an IDM-style speed controller in its
//! lane, and states update in lane (Frenet) coordinates. Plan-playback
//! commands set exact kinematic states so planned maneuvers reproduce
//! without integration error; feedback commands integrate clamped
//! accelerations. Runs are bit-reproducible for identical inputs.
//!
//! Alongside motion, the simulator collects the safety events the fitness
//! evaluation consumes: collisions with context, off-road and
//! lane-marking-straddle episodes, harsh-acceleration episodes,
//! minimum distance and time-to-collision, and post-encroachment times for
//! cut-ins ahead of the ego.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{AgentCommand, BehaviorTree, LatCommand, LonCommand, TickContext, TreeRuntime};
use crate::frenet::{FrenetError, FrenetState, ReferencePath};
use crate::geom::{convex_dist, convex_overlap, Obb, Vec2};
use crate::scenario::ConcreteScenario;

/// Identifier of the system-under-test vehicle in every scenario.
pub const EGO_ID: &str = "ego";

/// Acceleration envelope enforced on feedback commands and used to decide
/// when a plan playback must fall back to integration.
pub const ACCEL_MIN: f64 = -8.0;
pub const ACCEL_MAX: f64 = 4.0;

/// Acceleration magnitude that counts as harsh driving, the episode length
/// that makes it reportable, and the magnitude that is severe on its own.
pub const HARSH_ACCEL: f64 = 3.5;
pub const HARSH_MIN_DURATION: f64 = 0.5;
pub const SEVERE_ACCEL: f64 = 6.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown lane `{0}`")]
    UnknownLane(String),
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Frenet(#[from] FrenetError),
}

// ---------------------------------------------------------------------------
// Road model
// ---------------------------------------------------------------------------

/// Serialized lane description: a centerline polyline with width and
/// adjacency by lane id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneSpec {
    pub id: String,
    pub points: Vec<Vec2>,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
}

/// Static blocked area (construction site, parked trailer, ...). Polygons
/// are treated as convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub id: String,
    pub polygon: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub lanes: Vec<LaneSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleSpec>,
}

/// A lane with its constructed reference path.
#[derive(Debug, Clone)]
pub struct Lane {
    pub id: String,
    pub path: ReferencePath,
    pub width: f64,
    pub left: Option<String>,
    pub right: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LaneMap {
    lanes: Vec<Lane>,
    pub obstacles: Vec<ObstacleSpec>,
}

impl LaneMap {
    pub fn from_spec(spec: &MapSpec) -> Result<Self, SimError> {
        if spec.lanes.is_empty() {
            return Err(SimError::BadScenario("map has no lanes".into()));
        }
        let mut lanes = Vec::new();
        for l in &spec.lanes {
            if l.width <= 0.0 {
                return Err(SimError::BadScenario(format!(
                    "lane `{}` width must be positive",
                    l.id
                )));
            }
            lanes.push(Lane {
                id: l.id.clone(),
                path: ReferencePath::new(l.points.clone())?,
                width: l.width,
                left: l.left.clone(),
                right: l.right.clone(),
            });
        }
        let ids: BTreeSet<&str> = lanes.iter().map(|l| l.id.as_str()).collect();
        if ids.len() != lanes.len() {
            return Err(SimError::BadScenario("duplicate lane ids".into()));
        }
        for l in &lanes {
            for adj in [&l.left, &l.right].into_iter().flatten() {
                if !ids.contains(adj.as_str()) {
                    return Err(SimError::UnknownLane(adj.clone()));
                }
            }
        }
        for o in &spec.obstacles {
            if o.polygon.len() < 3 {
                return Err(SimError::BadScenario(format!(
                    "obstacle `{}` polygon needs >= 3 points",
                    o.id
                )));
            }
        }
        Ok(Self { lanes, obstacles: spec.obstacles.clone() })
    }

    /// Single synthetic lane wrapping an existing path, for open-loop
    /// replay outside any mapped road.
    pub fn single_lane(path: ReferencePath, width: f64) -> Self {
        Self {
            lanes: vec![Lane {
                id: "ref".into(),
                path,
                width,
                left: None,
                right: None,
            }],
            obstacles: Vec::new(),
        }
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane_ids(&self) -> BTreeSet<String> {
        self.lanes.iter().map(|l| l.id.clone()).collect()
    }

    /// `(s, d)` of a world point in a lane's frame.
    pub fn locate(&self, lane_id: &str, p: Vec2) -> Option<(f64, f64)> {
        self.lane(lane_id).map(|l| l.path.locate(p))
    }

    /// Longitudinal and lateral offset of `a` relative to `b`, both
    /// expressed in the given lane's frame (positive = `a` ahead / left).
    pub fn relative_in_lane_frame(&self, lane_id: &str, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let lane = self.lane(lane_id)?;
        let (sa, da) = lane.path.locate(a);
        let (sb, db) = lane.path.locate(b);
        Some((sa - sb, da - db))
    }

    /// Signed lateral offset from `p` to the centerline of `lane_id`,
    /// in the local left-positive convention (how far to move to sit on the
    /// target centerline).
    pub fn lateral_to_lane_center(&self, lane_id: &str, p: Vec2) -> Option<f64> {
        let (_, d) = self.locate(lane_id, p)?;
        Some(-d)
    }
}

// ---------------------------------------------------------------------------
// Agents and world
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Ego,
    Vehicle,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentState {
    pub id: String,
    pub kind: AgentKind,
    pub lane: String,
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
    /// World pose derived from the lane frame each step.
    pub pos: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
    /// Set once the agent reaches the end of its lane's path; it parks.
    pub frozen: bool,
}

impl AgentState {
    pub fn footprint(&self) -> Obb {
        Obb::new(self.pos, self.heading, self.length, self.width)
    }

    pub fn frenet(&self, t: f64) -> FrenetState {
        FrenetState {
            t,
            s: self.s,
            s_dot: self.s_dot,
            s_ddot: self.s_ddot,
            d: self.d,
            d_dot: self.d_dot,
            d_ddot: self.d_ddot,
        }
    }

    pub fn speed(&self) -> f64 {
        (self.s_dot * self.s_dot + self.d_dot * self.d_dot).sqrt()
    }

    /// World velocity reconstructed from the lane frame.
    pub fn world_velocity(&self, map: &LaneMap) -> Vec2 {
        let Some(lane) = map.lane(&self.lane) else {
            return Vec2::new(0.0, 0.0);
        };
        let t = lane.path.tangent_at(self.s);
        let n = t.left_normal();
        t.scale(self.s_dot).add(n.scale(self.d_dot))
    }

    fn refresh_pose(&mut self, map: &LaneMap) {
        let Some(lane) = map.lane(&self.lane) else { return };
        let t = lane.path.tangent_at(self.s);
        let n = t.left_normal();
        self.pos = lane.path.position_at(self.s).add(n.scale(self.d));
        let base = lane.path.tangent_angle(self.s);
        self.heading = if self.speed() < 1e-6 {
            base
        } else {
            base + self.d_dot.atan2(self.s_dot.max(1e-6))
        };
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub time: f64,
    pub agents: Vec<AgentState>,
}

impl WorldState {
    pub fn agent(&self, id: &str) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }

    fn agent_mut(&mut self, id: &str) -> Option<&mut AgentState> {
        self.agents.iter_mut().find(|a| a.id == id)
    }

    pub fn ego(&self) -> Option<&AgentState> {
        self.agent(EGO_ID)
    }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionWith {
    Agent(String),
    Obstacle(String),
}

/// One collision contact with the context responsibility reasoning needs.
/// `a` is the ego when involved, otherwise the lexicographically first
/// participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub a: String,
    pub b: CollisionWith,
    /// `a`'s center is ahead of the other party along `a`'s lane.
    pub a_ahead: bool,
    pub a_lane_changing: bool,
    pub b_lane_changing: bool,
    /// Post-encroachment time of the other party's entry into `a`'s lane,
    /// when such an entry was observed (ego collisions only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pet: Option<f64>,
}

/// Closed interval during which a per-agent condition held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEvent {
    pub agent: String,
    pub start: f64,
    pub end: f64,
    /// Largest acceleration magnitude inside the episode (harsh-accel
    /// episodes; zero otherwise).
    #[serde(default)]
    pub peak: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HorizonReached,
    EgoCollision,
    EgoPathEnd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventLog {
    pub collisions: Vec<CollisionEvent>,
    pub off_road: Vec<EpisodeEvent>,
    pub line_pressure: Vec<EpisodeEvent>,
    pub harsh_accel: Vec<EpisodeEvent>,
    /// Smallest bumper-to-bumper distance between the ego and any vehicle;
    /// `None` when the ego is alone.
    pub min_distance: Option<f64>,
    /// Smallest along-lane time-to-collision observed in either direction.
    pub min_ttc: Option<f64>,
    pub termination: Termination,
}

// ---------------------------------------------------------------------------
// Ego controller
// ---------------------------------------------------------------------------

/// Parameters of the ego's car-following controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoParams {
    /// Desired cruise speed.
    pub set_speed: f64,
    pub accel_max: f64,
    pub decel_comfort: f64,
    pub brake_hard: f64,
    pub min_gap: f64,
    pub time_headway: f64,
    pub speed_exponent: f64,
    /// Comfortable deceleration used inside the desired-gap term.
    pub decel_target: f64,
    /// Forward time-to-collision below which the ego brakes hard.
    pub ttc_emergency: f64,
}

impl EgoParams {
    pub fn with_set_speed(set_speed: f64) -> Self {
        Self {
            set_speed,
            accel_max: 1.8,
            decel_comfort: -4.0,
            brake_hard: -8.0,
            min_gap: 2.0,
            time_headway: 1.2,
            speed_exponent: 4.0,
            decel_target: 3.0,
            ttc_emergency: 2.0,
        }
    }
}

/// Nearest blocking object ahead of the ego in its corridor.
struct Leader {
    gap: f64,
    speed: f64,
}

fn find_leader(world: &WorldState, map: &LaneMap, ego: &AgentState) -> Option<Leader> {
    let lane = map.lane(&ego.lane)?;
    let mut best: Option<Leader> = None;
    let mut consider = |gap: f64, speed: f64| {
        if best.as_ref().map_or(true, |b| gap < b.gap) {
            best = Some(Leader { gap, speed });
        }
    };

    for other in &world.agents {
        if other.id == ego.id {
            continue;
        }
        let (so, doff) = lane.path.locate(other.pos);
        if (doff - ego.d).abs() >= (ego.width + other.width) / 2.0 {
            continue;
        }
        if so <= ego.s {
            continue;
        }
        let gap = so - ego.s - (ego.length + other.length) / 2.0;
        let speed = other.world_velocity(map).dot(lane.path.tangent_at(so));
        consider(gap, speed);
    }

    for obs in &map.obstacles {
        let half_corridor = ego.width / 2.0 + 0.3;
        let mut nearest: Option<f64> = None;
        for v in &obs.polygon {
            let (sv, dv) = lane.path.locate(*v);
            if (dv - ego.d).abs() <= half_corridor && sv > ego.s {
                nearest = Some(nearest.map_or(sv, |n: f64| n.min(sv)));
            }
        }
        if let Some(sv) = nearest {
            consider(sv - ego.s - ego.length / 2.0, 0.0);
        }
    }
    best
}

/// Car-following acceleration: free-road term shaped by the speed ratio plus
/// a desired-gap interaction term, comfort-clamped, with a hard-brake
/// override when the forward time-to-collision collapses.
pub fn ego_acceleration(world: &WorldState, map: &LaneMap, params: &EgoParams) -> f64 {
    let Some(ego) = world.ego() else { return 0.0 };
    let v = ego.s_dot.max(0.0);
    let free = 1.0 - (v / params.set_speed.max(0.1)).powf(params.speed_exponent);
    let mut accel = params.accel_max * free;

    if let Some(leader) = find_leader(world, map, ego) {
        let gap = leader.gap.max(0.1);
        let closing = v - leader.speed;
        let desired = params.min_gap
            + (v * params.time_headway
                + v * closing / (2.0 * (params.accel_max * params.decel_target).sqrt()))
            .max(0.0);
        accel = params.accel_max * (free - (desired / gap).powi(2));
        if closing > 0.05 && gap / closing < params.ttc_emergency {
            return params.brake_hard;
        }
    }
    accel.clamp(params.decel_comfort, params.accel_max)
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub dt: f64,
    /// World snapshots at every step, including the initial state.
    pub steps: Vec<WorldState>,
    pub events: EventLog,
}

impl SimTrace {
    pub fn duration(&self) -> f64 {
        self.steps.last().map_or(0.0, |w| w.time)
    }

    /// Lane-frame series of one agent across the trace.
    pub fn agent_series(&self, id: &str) -> Vec<FrenetState> {
        self.steps
            .iter()
            .filter_map(|w| w.agent(id).map(|a| a.frenet(w.time)))
            .collect()
    }

    /// Full-precision CSV export of every agent state per step.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time", "agent", "lane", "s", "s_dot", "s_ddot", "d", "d_dot", "d_ddot", "x", "y",
            "heading",
        ])?;
        for step in &self.steps {
            for a in &step.agents {
                w.write_record([
                    format!("{}", step.time),
                    a.id.clone(),
                    a.lane.clone(),
                    format!("{}", a.s),
                    format!("{}", a.s_dot),
                    format!("{}", a.s_ddot),
                    format!("{}", a.d),
                    format!("{}", a.d_dot),
                    format!("{}", a.d_ddot),
                    format!("{}", a.pos.x),
                    format!("{}", a.pos.y),
                    format!("{}", a.heading),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-agent boolean episode assembly with peak tracking.
struct EpisodeTracker {
    active: BTreeMap<String, (f64, f64)>,
    done: Vec<EpisodeEvent>,
}

impl EpisodeTracker {
    fn new() -> Self {
        Self { active: BTreeMap::new(), done: Vec::new() }
    }

    fn update(&mut self, agent: &str, time: f64, holds: bool, magnitude: f64) {
        match (self.active.get_mut(agent), holds) {
            (None, true) => {
                self.active.insert(agent.to_string(), (time, magnitude));
            }
            (Some((_, peak)), true) => *peak = peak.max(magnitude),
            (Some(_), false) => {
                let (start, peak) = self.active.remove(agent).unwrap();
                self.done.push(EpisodeEvent { agent: agent.to_string(), start, end: time, peak });
            }
            (None, false) => {}
        }
    }

    fn finish(mut self, time: f64) -> Vec<EpisodeEvent> {
        for (agent, (start, peak)) in std::mem::take(&mut self.active) {
            self.done.push(EpisodeEvent { agent, start, end: time, peak });
        }
        self.done.sort_by(|a, b| {
            a.start.partial_cmp(&b.start).unwrap().then_with(|| a.agent.cmp(&b.agent))
        });
        self.done
    }
}

/// Pending lane-entry episodes for post-encroachment timing.
struct PetTracker {
    in_lane: BTreeMap<String, bool>,
    pending: BTreeMap<String, (f64, f64)>,
    latest: BTreeMap<String, f64>,
}

impl PetTracker {
    fn new() -> Self {
        Self { in_lane: BTreeMap::new(), pending: BTreeMap::new(), latest: BTreeMap::new() }
    }

    fn update(&mut self, world: &WorldState, map: &LaneMap, time: f64) {
        let Some(ego) = world.ego() else { return };
        let Some(lane) = map.lane(&ego.lane) else { return };
        for other in &world.agents {
            if other.id == EGO_ID {
                continue;
            }
            let (so, doff) = lane.path.locate(other.pos);
            let inside = doff.abs() <= lane.width / 2.0;
            let was = self.in_lane.insert(other.id.clone(), inside).unwrap_or(inside);
            if inside && !was && so > ego.s {
                self.pending.insert(other.id.clone(), (time, so));
            }
            if let Some((t_entry, s_entry)) = self.pending.get(&other.id).copied() {
                if ego.s >= s_entry {
                    self.latest.insert(other.id.clone(), time - t_entry);
                    self.pending.remove(&other.id);
                }
            }
        }
    }

    /// PET relevant to a collision with `agent` at `time`: a completed
    /// episode if the ego already reached the entry point, otherwise the
    /// elapsed time of the pending entry.
    fn for_collision(&self, agent: &str, time: f64) -> Option<f64> {
        if let Some(p) = self.latest.get(agent) {
            return Some(*p);
        }
        self.pending.get(agent).map(|(t_entry, _)| time - t_entry)
    }
}

fn obstacle_centroid(poly: &[Vec2]) -> Vec2 {
    let mut c = Vec2::new(0.0, 0.0);
    for p in poly {
        c = c.add(*p);
    }
    c.scale(1.0 / poly.len() as f64)
}

struct EventCollector {
    collisions: Vec<CollisionEvent>,
    contacts: BTreeSet<(String, String)>,
    off_road: EpisodeTracker,
    line_pressure: EpisodeTracker,
    harsh: EpisodeTracker,
    pet: PetTracker,
    min_distance: Option<f64>,
    min_ttc: Option<f64>,
    ego_collided: bool,
}

impl EventCollector {
    fn new() -> Self {
        Self {
            collisions: Vec::new(),
            contacts: BTreeSet::new(),
            off_road: EpisodeTracker::new(),
            line_pressure: EpisodeTracker::new(),
            harsh: EpisodeTracker::new(),
            pet: PetTracker::new(),
            min_distance: None,
            min_ttc: None,
            ego_collided: false,
        }
    }

    fn observe(
        &mut self,
        world: &WorldState,
        map: &LaneMap,
        lane_changing: &BTreeMap<String, bool>,
    ) {
        let time = world.time;
        self.pet.update(world, map, time);

        // Off-road / line pressure / harsh acceleration per agent.
        for a in &world.agents {
            if a.frozen {
                self.off_road.update(&a.id, time, false, 0.0);
                self.line_pressure.update(&a.id, time, false, 0.0);
                self.harsh.update(&a.id, time, false, 0.0);
                continue;
            }
            let mut on_any = false;
            for lane in map.lanes() {
                let (_, d) = lane.path.locate(a.pos);
                if d.abs() <= lane.width / 2.0 + 1e-9 {
                    on_any = true;
                    break;
                }
            }
            self.off_road.update(&a.id, time, !on_any, 0.0);

            let straddle = map
                .lane(&a.lane)
                .map(|l| a.d.abs() + a.width / 2.0 > l.width / 2.0)
                .unwrap_or(false);
            self.line_pressure.update(&a.id, time, straddle && on_any, 0.0);

            let accel = (a.s_ddot * a.s_ddot + a.d_ddot * a.d_ddot).sqrt();
            self.harsh.update(&a.id, time, accel > HARSH_ACCEL, accel);
        }

        // Proximity metrics: ego vs vehicles.
        if let Some(ego) = world.ego() {
            let ego_box = ego.footprint();
            let ego_lane = map.lane(&ego.lane);
            for other in &world.agents {
                if other.id == EGO_ID {
                    continue;
                }
                let dist = convex_dist(&ego_box.corners(), &other.footprint().corners());
                self.min_distance =
                    Some(self.min_distance.map_or(dist, |m: f64| m.min(dist)));

                if let Some(lane) = ego_lane {
                    let (so, doff) = lane.path.locate(other.pos);
                    if (doff - ego.d).abs() < (ego.width + other.width) / 2.0 {
                        let v_other = other.world_velocity(map).dot(lane.path.tangent_at(so));
                        let gap = (so - ego.s).abs() - (ego.length + other.length) / 2.0;
                        let closing = if so > ego.s {
                            ego.s_dot - v_other
                        } else {
                            v_other - ego.s_dot
                        };
                        if gap > 0.0 && closing > 1e-6 {
                            let ttc = gap / closing;
                            self.min_ttc = Some(self.min_ttc.map_or(ttc, |m: f64| m.min(ttc)));
                        }
                    }
                }
            }
        }

        // Collisions, deduplicated per contact episode.
        let flags = |id: &str| lane_changing.get(id).copied().unwrap_or(false);
        let n = world.agents.len();
        for i in 0..n {
            for j in i + 1..n {
                let (x, y) = (&world.agents[i], &world.agents[j]);
                // Ego-centric ordering, else lexicographic.
                let (a, b) = if y.id == EGO_ID || (x.id != EGO_ID && y.id < x.id) {
                    (y, x)
                } else {
                    (x, y)
                };
                let key = (a.id.clone(), b.id.clone());
                let hit = convex_overlap(&a.footprint().corners(), &b.footprint().corners());
                if !hit {
                    self.contacts.remove(&key);
                    continue;
                }
                if !self.contacts.insert(key) {
                    continue;
                }
                let a_ahead = map
                    .relative_in_lane_frame(&a.lane, a.pos, b.pos)
                    .map(|(lon, _)| lon > 0.0)
                    .unwrap_or(false);
                let pet =
                    (a.id == EGO_ID).then(|| self.pet.for_collision(&b.id, time)).flatten();
                self.collisions.push(CollisionEvent {
                    time,
                    a: a.id.clone(),
                    b: CollisionWith::Agent(b.id.clone()),
                    a_ahead,
                    a_lane_changing: flags(&a.id),
                    b_lane_changing: flags(&b.id),
                    pet,
                });
                if a.id == EGO_ID {
                    self.ego_collided = true;
                }
            }
        }
        for agent in &world.agents {
            for obs in &map.obstacles {
                let key = (agent.id.clone(), format!("obstacle:{}", obs.id));
                let hit = convex_overlap(&agent.footprint().corners(), &obs.polygon);
                if !hit {
                    self.contacts.remove(&key);
                    continue;
                }
                if !self.contacts.insert(key) {
                    continue;
                }
                let a_ahead = map
                    .relative_in_lane_frame(&agent.lane, agent.pos, obstacle_centroid(&obs.polygon))
                    .map(|(lon, _)| lon > 0.0)
                    .unwrap_or(false);
                self.collisions.push(CollisionEvent {
                    time,
                    a: agent.id.clone(),
                    b: CollisionWith::Obstacle(obs.id.clone()),
                    a_ahead,
                    a_lane_changing: flags(&agent.id),
                    b_lane_changing: false,
                    pet: None,
                });
                if agent.id == EGO_ID {
                    self.ego_collided = true;
                }
            }
        }
    }

    fn finish(self, time: f64, termination: Termination) -> EventLog {
        EventLog {
            collisions: self.collisions,
            off_road: self.off_road.finish(time),
            line_pressure: self.line_pressure.finish(time),
            harsh_accel: self.harsh.finish(time),
            min_distance: self.min_distance,
            min_ttc: self.min_ttc,
            termination,
        }
    }
}

// -- stepping ---------------------------------------------------------------

/// Applies one command over `dt`, in lane coordinates.
fn apply_command(agent: &mut AgentState, cmd: &AgentCommand, dt: f64) {
    if agent.frozen {
        return;
    }
    match cmd.lon {
        LonCommand::Accel(a) => {
            let a = a.clamp(ACCEL_MIN, ACCEL_MAX);
            let v0 = agent.s_dot;
            let v1 = (v0 + a * dt).max(0.0);
            agent.s += 0.5 * (v0 + v1) * dt;
            agent.s_dot = v1;
            agent.s_ddot = if v1 > 0.0 || v0 > 0.0 { a } else { 0.0 };
        }
        LonCommand::State { s, s_dot, s_ddot } => {
            if (ACCEL_MIN..=ACCEL_MAX).contains(&s_ddot) {
                agent.s = s;
                agent.s_dot = s_dot;
                agent.s_ddot = s_ddot;
            } else {
                // Plan demands more than the vehicle can do: integrate the
                // clamped acceleration instead of teleporting onto the plan.
                let a = s_ddot.clamp(ACCEL_MIN, ACCEL_MAX);
                let v0 = agent.s_dot;
                let v1 = (v0 + a * dt).max(0.0);
                agent.s += 0.5 * (v0 + v1) * dt;
                agent.s_dot = v1;
                agent.s_ddot = a;
            }
        }
    }
    match cmd.lat {
        LatCommand::Hold => {
            agent.d_dot = 0.0;
            agent.d_ddot = 0.0;
        }
        LatCommand::State { d, d_dot, d_ddot } => {
            agent.d = d;
            agent.d_dot = d_dot;
            agent.d_ddot = d_ddot;
        }
    }
}

/// Freezes agents that ran off the end of their path; returns true for the
/// ego (which ends the run).
fn clamp_to_path(agent: &mut AgentState, map: &LaneMap) -> bool {
    let Some(lane) = map.lane(&agent.lane) else { return false };
    if agent.s >= lane.path.len() - 1e-9 {
        agent.s = lane.path.len();
        agent.s_dot = 0.0;
        agent.s_ddot = 0.0;
        agent.d_dot = 0.0;
        agent.d_ddot = 0.0;
        agent.frozen = true;
    }
    agent.frozen && agent.kind == AgentKind::Ego
}

/// Reassigns an agent that has crossed into an adjacent lane, converting its
/// kinematic state into the new lane's frame.
fn maybe_rebase_lane(agent: &mut AgentState, map: &LaneMap) {
    let Some(lane) = map.lane(&agent.lane) else { return };
    if agent.d.abs() <= lane.width / 2.0 {
        return;
    }
    let adjacent = if agent.d > 0.0 { lane.left.clone() } else { lane.right.clone() };
    let Some(next_id) = adjacent else { return };
    let Some(next) = map.lane(&next_id) else { return };

    let t_old = lane.path.tangent_at(agent.s);
    let n_old = t_old.left_normal();
    let vel = t_old.scale(agent.s_dot).add(n_old.scale(agent.d_dot));
    let acc = t_old.scale(agent.s_ddot).add(n_old.scale(agent.d_ddot));

    let (s, d) = next.path.locate(agent.pos);
    let t_new = next.path.tangent_at(s);
    let n_new = t_new.left_normal();
    agent.lane = next_id;
    agent.s = s;
    agent.d = d;
    agent.s_dot = vel.dot(t_new);
    agent.d_dot = vel.dot(n_new);
    agent.s_ddot = acc.dot(t_new);
    agent.d_ddot = acc.dot(n_new);
}

fn build_initial_world(scn: &ConcreteScenario, map: &LaneMap) -> Result<WorldState, SimError> {
    let mut agents = Vec::new();
    let mut push = |id: String,
                    kind: AgentKind,
                    lane_id: &str,
                    s: f64,
                    d: f64,
                    speed: f64,
                    length: f64,
                    width: f64|
     -> Result<(), SimError> {
        let lane = map
            .lane(lane_id)
            .ok_or_else(|| SimError::UnknownLane(lane_id.to_string()))?;
        if !(0.0..=lane.path.len()).contains(&s) {
            return Err(SimError::BadScenario(format!(
                "agent `{id}` starts at s={s}, outside lane `{lane_id}`"
            )));
        }
        let mut a = AgentState {
            id,
            kind,
            lane: lane_id.to_string(),
            s,
            s_dot: speed,
            s_ddot: 0.0,
            d,
            d_dot: 0.0,
            d_ddot: 0.0,
            pos: Vec2::new(0.0, 0.0),
            heading: 0.0,
            length,
            width,
            frozen: false,
        };
        a.refresh_pose(map);
        agents.push(a);
        Ok(())
    };

    push(
        EGO_ID.to_string(),
        AgentKind::Ego,
        &scn.ego.lane,
        scn.ego.s,
        scn.ego.d,
        scn.ego.speed,
        scn.ego.length,
        scn.ego.width,
    )?;
    for a in &scn.agents {
        if a.id == EGO_ID {
            return Err(SimError::BadScenario(format!("agent id `{EGO_ID}` is reserved")));
        }
        push(
            a.id.clone(),
            AgentKind::Vehicle,
            &a.lane,
            a.s,
            a.d,
            a.speed,
            a.length,
            a.width,
        )?;
    }
    Ok(WorldState { time: 0.0, agents })
}

/// Runs a concrete scenario to its horizon or earlier termination.
pub fn run(scn: &ConcreteScenario) -> Result<SimTrace, SimError> {
    if scn.dt <= 0.0 || !scn.dt.is_finite() {
        return Err(SimError::BadScenario("step size must be positive".into()));
    }
    if scn.horizon < scn.dt {
        return Err(SimError::BadScenario("horizon shorter than one step".into()));
    }
    let map = LaneMap::from_spec(&scn.map)?;
    let mut world = build_initial_world(scn, &map)?;
    let ego_params = EgoParams::with_set_speed(scn.ego.set_speed);

    let mut runtimes: BTreeMap<String, (BehaviorTree, TreeRuntime)> = scn
        .agents
        .iter()
        .map(|a| (a.id.clone(), (a.tree.clone(), TreeRuntime::new(&a.tree))))
        .collect();

    let steps = (scn.horizon / scn.dt).round() as usize;
    let mut trace_steps = Vec::with_capacity(steps + 1);
    let mut events = EventCollector::new();
    let lane_flags = BTreeMap::new();
    events.observe(&world, &map, &lane_flags);
    trace_steps.push(world.clone());

    let mut termination = Termination::HorizonReached;
    for k in 0..steps {
        // Completed-node snapshot shared by every tree this step.
        let completed: BTreeMap<String, BTreeSet<String>> = runtimes
            .iter()
            .map(|(id, (_, rt))| (id.clone(), rt.completed_nodes()))
            .collect();

        let mut commands: Vec<(String, AgentCommand)> = Vec::with_capacity(world.agents.len());
        commands.push((
            EGO_ID.to_string(),
            AgentCommand {
                lon: LonCommand::Accel(ego_acceleration(&world, &map, &ego_params)),
                lat: LatCommand::Hold,
                lane_changing: false,
            },
        ));
        for cfg in &scn.agents {
            let (tree, rt) = runtimes.get_mut(&cfg.id).expect("runtime per agent");
            let ctx = TickContext {
                world: &world,
                map: &map,
                self_id: &cfg.id,
                dt: scn.dt,
                completed: &completed,
            };
            commands.push((cfg.id.clone(), rt.tick(tree, &ctx)));
        }

        let mut ego_done = false;
        for (id, cmd) in &commands {
            if let Some(agent) = world.agent_mut(id) {
                apply_command(agent, cmd, scn.dt);
                ego_done |= clamp_to_path(agent, &map);
                agent.refresh_pose(&map);
                if agent.kind == AgentKind::Vehicle && !cmd.lane_changing {
                    maybe_rebase_lane(agent, &map);
                    agent.refresh_pose(&map);
                }
            }
        }
        // Times derive from the step index so they never accumulate error.
        world.time = (k + 1) as f64 * scn.dt;

        let lane_flags: BTreeMap<String, bool> =
            commands.iter().map(|(id, c)| (id.clone(), c.lane_changing)).collect();
        events.observe(&world, &map, &lane_flags);
        trace_steps.push(world.clone());

        if events.ego_collided {
            termination = Termination::EgoCollision;
            break;
        }
        if ego_done {
            termination = Termination::EgoPathEnd;
            break;
        }
    }

    let end_time = world.time;
    Ok(SimTrace { dt: scn.dt, steps: trace_steps, events: events.finish(end_time, termination) })
}

// ---------------------------------------------------------------------------
// Open-loop replay
// ---------------------------------------------------------------------------

/// Plays a single agent's tree forward on a bare reference path with no ego,
/// no events, and no lane adjacency. Used to check how well an abstracted
/// tree reproduces the motion it was derived from.
pub fn replay_tree(
    tree: &BehaviorTree,
    initial: &FrenetState,
    path: &ReferencePath,
    dt: f64,
    horizon: f64,
) -> Result<Vec<FrenetState>, SimError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(SimError::BadScenario("step size must be positive".into()));
    }
    let map = LaneMap::single_lane(path.clone(), 100.0);
    let mut agent = AgentState {
        id: "replay".into(),
        kind: AgentKind::Vehicle,
        lane: "ref".into(),
        s: initial.s,
        s_dot: initial.s_dot,
        s_ddot: initial.s_ddot,
        d: initial.d,
        d_dot: initial.d_dot,
        d_ddot: initial.d_ddot,
        pos: Vec2::new(0.0, 0.0),
        heading: 0.0,
        length: 4.6,
        width: 1.8,
        frozen: false,
    };
    agent.refresh_pose(&map);

    let mut world = WorldState { time: initial.t, agents: vec![agent] };
    let mut rt = TreeRuntime::new(tree);
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(world.agents[0].frenet(world.time));

    for k in 0..steps {
        let completed: BTreeMap<String, BTreeSet<String>> =
            [("replay".to_string(), rt.completed_nodes())].into();
        let ctx = TickContext {
            world: &world,
            map: &map,
            self_id: "replay",
            dt,
            completed: &completed,
        };
        let cmd = rt.tick(tree, &ctx);
        let agent = &mut world.agents[0];
        apply_command(agent, &cmd, dt);
        if agent.s > map.lane("ref").unwrap().path.len() {
            agent.s = map.lane("ref").unwrap().path.len();
        }
        agent.refresh_pose(&map);
        world.time = initial.t + (k + 1) as f64 * dt;
        out.push(world.agents[0].frenet(world.time));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{
        BehaviorNode, BehaviorTree, Comparator, ConditionTarget, LaneChangeDirection,
        LeafBehavior, TriggerCondition,
    };
    use crate::scenario::{AgentConfig, ConcreteScenario, EgoConfig};
    use approx::assert_relative_eq;

    fn two_lane_spec() -> MapSpec {
        MapSpec {
            lanes: vec![
                LaneSpec {
                    id: "l0".into(),
                    points: vec![Vec2::new(0.0, 0.0), Vec2::new(500.0, 0.0)],
                    width: 3.5,
                    left: Some("l1".into()),
                    right: None,
                },
                LaneSpec {
                    id: "l1".into(),
                    points: vec![Vec2::new(0.0, 3.5), Vec2::new(500.0, 3.5)],
                    width: 3.5,
                    left: None,
                    right: Some("l0".into()),
                },
            ],
            obstacles: vec![],
        }
    }

    fn ego(lane: &str, s: f64, speed: f64, set_speed: f64) -> EgoConfig {
        EgoConfig {
            lane: lane.into(),
            s,
            d: 0.0,
            speed,
            set_speed,
            length: 4.6,
            width: 1.8,
        }
    }

    fn vehicle(id: &str, lane: &str, s: f64, speed: f64, tree: BehaviorTree) -> AgentConfig {
        AgentConfig {
            id: id.into(),
            lane: lane.into(),
            s,
            d: 0.0,
            speed,
            length: 4.6,
            width: 1.8,
            tree,
        }
    }

    fn cruise_tree(speed: f64) -> BehaviorTree {
        BehaviorTree::sequence(vec![BehaviorNode::leaf(
            "c",
            LeafBehavior::Cruise { speed, duration: None },
        )])
    }

    fn scenario(
        ego: EgoConfig,
        agents: Vec<AgentConfig>,
        horizon: f64,
    ) -> ConcreteScenario {
        ConcreteScenario {
            name: "test".into(),
            map: two_lane_spec(),
            ego,
            agents,
            dt: 0.1,
            horizon,
        }
    }

    #[test]
    fn map_validation_rejects_bad_specs() {
        let mut dup = two_lane_spec();
        dup.lanes[1].id = "l0".into();
        dup.lanes[0].left = Some("l0".into());
        assert!(matches!(LaneMap::from_spec(&dup), Err(SimError::BadScenario(_))));

        let mut dangling = two_lane_spec();
        dangling.lanes[0].left = Some("l7".into());
        assert!(matches!(LaneMap::from_spec(&dangling), Err(SimError::UnknownLane(_))));

        assert!(LaneMap::from_spec(&MapSpec { lanes: vec![], obstacles: vec![] }).is_err());
    }

    #[test]
    fn lane_frame_lookups() {
        let map = LaneMap::from_spec(&two_lane_spec()).unwrap();
        let (s, d) = map.locate("l0", Vec2::new(120.0, 1.0)).unwrap();
        assert_relative_eq!(s, 120.0, epsilon = 1e-9);
        assert_relative_eq!(d, 1.0, epsilon = 1e-9);

        let (lon, lat) = map
            .relative_in_lane_frame("l0", Vec2::new(140.0, 0.0), Vec2::new(120.0, 3.5))
            .unwrap();
        assert_relative_eq!(lon, 20.0, epsilon = 1e-9);
        assert_relative_eq!(lat, -3.5, epsilon = 1e-9);

        assert_relative_eq!(
            map.lateral_to_lane_center("l0", Vec2::new(50.0, 3.5)).unwrap(),
            -3.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn feedback_integration_and_stop_floor() {
        let map = LaneMap::from_spec(&two_lane_spec()).unwrap();
        let mut a = AgentState {
            id: "x".into(),
            kind: AgentKind::Vehicle,
            lane: "l0".into(),
            s: 0.0,
            s_dot: 10.0,
            s_ddot: 0.0,
            d: 0.0,
            d_dot: 0.0,
            d_ddot: 0.0,
            pos: Vec2::new(0.0, 0.0),
            heading: 0.0,
            length: 4.6,
            width: 1.8,
            frozen: false,
        };
        let cmd = AgentCommand {
            lon: LonCommand::Accel(2.0),
            lat: LatCommand::Hold,
            lane_changing: false,
        };
        apply_command(&mut a, &cmd, 0.1);
        assert_relative_eq!(a.s_dot, 10.2, epsilon = 1e-12);
        assert_relative_eq!(a.s, 1.01, epsilon = 1e-12);

        // Braking cannot reverse the vehicle.
        a.s_dot = 0.3;
        let brake = AgentCommand {
            lon: LonCommand::Accel(-8.0),
            lat: LatCommand::Hold,
            lane_changing: false,
        };
        apply_command(&mut a, &brake, 0.1);
        assert_eq!(a.s_dot, 0.0);
        let _ = &map;
    }

    #[test]
    fn lane_rebase_preserves_world_kinematics() {
        let map = LaneMap::from_spec(&two_lane_spec()).unwrap();
        let mut a = AgentState {
            id: "x".into(),
            kind: AgentKind::Vehicle,
            lane: "l0".into(),
            s: 100.0,
            s_dot: 18.0,
            s_ddot: 0.5,
            d: 2.0,
            d_dot: 0.4,
            d_ddot: -0.1,
            pos: Vec2::new(100.0, 2.0),
            heading: 0.0,
            length: 4.6,
            width: 1.8,
            frozen: false,
        };
        maybe_rebase_lane(&mut a, &map);
        assert_eq!(a.lane, "l1");
        assert_relative_eq!(a.s, 100.0, epsilon = 1e-9);
        assert_relative_eq!(a.d, -1.5, epsilon = 1e-9);
        // Parallel lanes share tangents, so the derivatives carry over.
        assert_relative_eq!(a.s_dot, 18.0, epsilon = 1e-9);
        assert_relative_eq!(a.d_dot, 0.4, epsilon = 1e-9);
        assert_relative_eq!(a.s_ddot, 0.5, epsilon = 1e-9);
        assert_relative_eq!(a.d_ddot, -0.1, epsilon = 1e-9);
    }

    #[test]
    fn lone_ego_cruises_to_horizon() {
        let scn = scenario(ego("l0", 0.0, 20.0, 20.0), vec![], 8.0);
        let trace = run(&scn).unwrap();
        assert_eq!(trace.steps.len(), 81);
        assert_eq!(trace.events.termination, Termination::HorizonReached);
        assert!(trace.events.collisions.is_empty());
        assert_eq!(trace.events.min_distance, None);
        assert_eq!(trace.events.min_ttc, None);
        let last = trace.steps.last().unwrap().ego().unwrap();
        // At the set speed the free-road term vanishes.
        assert_relative_eq!(last.s, 160.0, epsilon = 1e-6);
        assert_relative_eq!(last.s_dot, 20.0, epsilon = 1e-6);
    }

    #[test]
    fn ego_terminates_at_path_end() {
        let scn = scenario(ego("l0", 450.0, 20.0, 20.0), vec![], 30.0);
        let trace = run(&scn).unwrap();
        assert_eq!(trace.events.termination, Termination::EgoPathEnd);
        let last = trace.steps.last().unwrap().ego().unwrap();
        assert_relative_eq!(last.s, 500.0, epsilon = 1e-9);
        assert!(trace.duration() < 3.0);
    }

    #[test]
    fn ego_follows_slow_leader_without_collision() {
        let scn = scenario(
            ego("l0", 0.0, 25.0, 25.0),
            vec![vehicle("lead", "l0", 60.0, 12.0, cruise_tree(12.0))],
            20.0,
        );
        let trace = run(&scn).unwrap();
        assert!(trace.events.collisions.is_empty());
        let last = trace.steps.last().unwrap();
        let e = last.ego().unwrap();
        // Settles near the leader's speed with a positive gap.
        assert!((e.s_dot - 12.0).abs() < 1.5, "ego speed {}", e.s_dot);
        let gap = last.agent("lead").unwrap().s - e.s - 4.6;
        assert!(gap > 2.0, "gap {gap}");
        assert!(trace.events.min_distance.unwrap() > 0.5);
    }

    #[test]
    fn rear_end_by_agent_terminates_with_context() {
        let rammer = BehaviorTree::sequence(vec![BehaviorNode::leaf(
            "ram",
            LeafBehavior::Track { target: EGO_ID.into(), gap: 20.0 },
        )]);
        // The tracker wants to be 20 m ahead of the ego, so it accelerates
        // through it from behind.
        let scn = scenario(
            ego("l0", 40.0, 5.0, 5.0),
            vec![vehicle("tail", "l0", 20.0, 18.0, rammer)],
            20.0,
        );
        let trace = run(&scn).unwrap();
        assert_eq!(trace.events.termination, Termination::EgoCollision);
        let hit = &trace.events.collisions[0];
        assert_eq!(hit.a, EGO_ID);
        assert_eq!(hit.b, CollisionWith::Agent("tail".into()));
        assert!(hit.a_ahead, "ego was struck from behind");
        assert!(!hit.b_lane_changing);
    }

    #[test]
    fn straddling_agent_accumulates_line_pressure() {
        let mut cfg = vehicle("drift", "l1", 100.0, 15.0, cruise_tree(15.0));
        cfg.d = 1.2; // 1.2 + 0.9 > 1.75: pressing the marking
        let scn = scenario(ego("l0", 0.0, 10.0, 10.0), vec![cfg], 6.0);
        let trace = run(&scn).unwrap();
        let ep: Vec<_> = trace
            .events
            .line_pressure
            .iter()
            .filter(|e| e.agent == "drift")
            .collect();
        assert_eq!(ep.len(), 1);
        assert!(ep[0].end - ep[0].start > 5.0, "held for the whole run");
    }

    #[test]
    fn cut_in_records_post_encroachment_time() {
        let cut = BehaviorTree::sequence(vec![
            BehaviorNode::leaf(
                "lc",
                LeafBehavior::ChangeLane {
                    direction: LaneChangeDirection::Right,
                    duration: 2.0,
                    lateral_offset: 3.5,
                    end_speed: 20.0,
                },
            )
            .with_condition(TriggerCondition::Distance {
                to: ConditionTarget::Agent(EGO_ID.into()),
                cmp: Comparator::Le,
                threshold: 30.0,
            }),
            BehaviorNode::leaf("c", LeafBehavior::Cruise { speed: 20.0, duration: None }),
        ]);
        let scn = scenario(
            ego("l0", 0.0, 20.0, 20.0),
            vec![vehicle("cutter", "l1", 20.0, 20.0, cut)],
            12.0,
        );
        let trace = run(&scn).unwrap();
        // The cutter ends up in the ego lane ahead of the ego.
        let last = trace.steps.last().unwrap();
        assert_eq!(last.agent("cutter").unwrap().lane, "l0");
        assert!(trace.events.min_distance.unwrap() < 25.0);
        assert!(trace.events.collisions.is_empty());
    }

    #[test]
    fn obstacle_collision_is_detected() {
        let mut spec = two_lane_spec();
        spec.obstacles.push(ObstacleSpec {
            id: "block".into(),
            polygon: vec![
                Vec2::new(200.0, 2.0),
                Vec2::new(212.0, 2.0),
                Vec2::new(212.0, 5.0),
                Vec2::new(200.0, 5.0),
            ],
        });
        let scn = ConcreteScenario {
            name: "obs".into(),
            map: spec,
            ego: ego("l0", 0.0, 10.0, 10.0),
            agents: vec![vehicle("runner", "l1", 150.0, 20.0, cruise_tree(20.0))],
            dt: 0.1,
            horizon: 10.0,
        };
        let trace = run(&scn).unwrap();
        let hit = trace
            .events
            .collisions
            .iter()
            .find(|c| c.a == "runner")
            .expect("agent hits the construction zone");
        assert_eq!(hit.b, CollisionWith::Obstacle("block".into()));
        assert_eq!(trace.events.termination, Termination::HorizonReached);
    }

    #[test]
    fn replay_holds_constant_speed_exactly() {
        let path = ReferencePath::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0)]).unwrap();
        let tree = cruise_tree(20.0);
        let initial = FrenetState {
            t: 0.0,
            s: 10.0,
            s_dot: 20.0,
            s_ddot: 0.0,
            d: 0.5,
            d_dot: 0.0,
            d_ddot: 0.0,
        };
        let states = replay_tree(&tree, &initial, &path, 0.1, 5.0).unwrap();
        assert_eq!(states.len(), 51);
        for (k, st) in states.iter().enumerate() {
            let t = k as f64 * 0.1;
            assert_relative_eq!(st.s, 10.0 + 20.0 * t, epsilon = 1e-9);
            assert_relative_eq!(st.d, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn csv_export_covers_every_step_and_agent() {
        let scn = scenario(
            ego("l0", 0.0, 15.0, 15.0),
            vec![vehicle("other", "l1", 30.0, 15.0, cruise_tree(15.0))],
            2.0,
        );
        let trace = run(&scn).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 21 * 2);
        assert!(lines[0].starts_with("time,agent,lane"));
        assert!(lines[1].starts_with("0,ego,l0"));
    }
}

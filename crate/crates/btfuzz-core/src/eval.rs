//! Responsibility-aware fitness evaluation of a simulated run.
//!
//! Every participant (ego included) gets a rule-violation score: each safety
//! metric contributes 0 when clean, 2 on a warning, 5 on a hard violation,
//! and the contributions add up. The scalar fitness then rewards runs where
//! the *ego* misbehaves while its challengers stay reasonable:
//!
//! * any unreasonable challenger (off-road, crashing into someone other
//!   than the ego, ramming the ego from behind, or a sub-half-second
//!   cut-in) invalidates the run and scores the negated challenger score,
//!   steering the search away;
//! * an ego collision the ego is responsible for scores the full ego sum
//!   and is critical by definition;
//! * otherwise fitness is `alpha * (ego - challenger + 0.2 * proximity)`,
//!   and the run counts as critical above a fixed threshold.
//!
//! Responsibility is decided from the collision context: who was ahead,
//! who was mid-lane-change, and the post-encroachment time of a cut-in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{
    CollisionEvent, CollisionWith, EventLog, SimTrace, EGO_ID, HARSH_MIN_DURATION, SEVERE_ACCEL,
};

/// Metric score levels.
pub const SCORE_OK: f64 = 0.0;
pub const SCORE_WARNING: f64 = 2.0;
pub const SCORE_FAIL: f64 = 5.0;

/// Lane-marking straddle durations for warning / fail.
pub const LINE_PRESSURE_WARNING_S: f64 = 3.0;
pub const LINE_PRESSURE_FAIL_S: f64 = 6.0;
/// Harsh-acceleration episode count that fails on its own.
pub const HARSH_FAIL_EPISODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A challenger behaved unreasonably; the run says nothing about the ego.
    Invalid,
    ValidUncritical,
    ValidCritical,
}

/// Tunable weights of the fitness computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessParams {
    pub alpha: f64,
    /// Weight of the proximity term in the combined score.
    pub dist_weight: f64,
    /// Combined score at or above which a run counts as critical.
    pub critical_threshold: f64,
    /// Cut-in post-encroachment time below which the challenger is at fault.
    pub cut_in_pet: f64,
}

impl Default for FitnessParams {
    fn default() -> Self {
        Self { alpha: 1.0, dist_weight: 0.2, critical_threshold: 5.0, cut_in_pet: 0.5 }
    }
}

/// Full outcome of evaluating one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub verdict: Verdict,
    /// Rule-violation sum of the ego.
    pub ego_score: f64,
    /// Worst rule-violation sum over the challengers.
    pub agent_score: f64,
    /// Proximity pressure from the closest approach, in `[0, 5]`.
    pub dist_score: f64,
    pub min_distance: Option<f64>,
    pub min_ttc: Option<f64>,
    pub ego_collision: bool,
    /// Present when an ego collision occurred.
    pub ego_responsible: Option<bool>,
    pub unreasonable_agents: Vec<String>,
    /// Violation sum per participant, ego included.
    pub per_agent: BTreeMap<String, f64>,
}

// ---------------------------------------------------------------------------
// Metric scoring
// ---------------------------------------------------------------------------

fn collision_score(events: &EventLog, id: &str) -> f64 {
    let involved = events.collisions.iter().any(|c| {
        c.a == id || matches!(&c.b, CollisionWith::Agent(b) if b == id)
    });
    if involved {
        SCORE_FAIL
    } else {
        SCORE_OK
    }
}

fn off_road_score(events: &EventLog, id: &str) -> f64 {
    if events.off_road.iter().any(|e| e.agent == id) {
        SCORE_FAIL
    } else {
        SCORE_OK
    }
}

fn line_pressure_score(events: &EventLog, id: &str) -> f64 {
    let longest = events
        .line_pressure
        .iter()
        .filter(|e| e.agent == id)
        .map(|e| e.end - e.start)
        .fold(0.0, f64::max);
    if longest >= LINE_PRESSURE_FAIL_S {
        SCORE_FAIL
    } else if longest >= LINE_PRESSURE_WARNING_S {
        SCORE_WARNING
    } else {
        SCORE_OK
    }
}

fn harsh_accel_score(events: &EventLog, id: &str) -> f64 {
    // Count sustained episodes; a severe peak fails regardless of duration.
    let mut episodes = 0usize;
    let mut severe = false;
    for e in events.harsh_accel.iter().filter(|e| e.agent == id) {
        if e.peak > SEVERE_ACCEL {
            severe = true;
        }
        if e.end - e.start >= HARSH_MIN_DURATION {
            episodes += 1;
        }
    }
    if severe || episodes >= HARSH_FAIL_EPISODES {
        SCORE_FAIL
    } else if episodes > 0 {
        SCORE_WARNING
    } else {
        SCORE_OK
    }
}

/// Violation sum of one participant across all metrics.
pub fn participant_score(events: &EventLog, id: &str) -> f64 {
    collision_score(events, id)
        + off_road_score(events, id)
        + line_pressure_score(events, id)
        + harsh_accel_score(events, id)
}

fn dist_score(min_distance: Option<f64>) -> f64 {
    match min_distance {
        Some(d) => (-0.2 * d + 5.0).max(0.0),
        None => 0.0,
    }
}

// ---------------------------------------------------------------------------
// Responsibility
// ---------------------------------------------------------------------------

/// Whether the ego carries responsibility for this collision (`ev.a` must be
/// the ego). Ordered rules:
/// 1. struck from behind by a lane-keeping challenger: not responsible;
/// 2. struck during a cut-in with a short post-encroachment time: not
///    responsible;
/// 3. colliding while itself changing lanes: responsible;
/// 4. otherwise responsible exactly when the other party was ahead.
pub fn ego_responsibility(ev: &CollisionEvent, params: &FitnessParams) -> bool {
    debug_assert_eq!(ev.a, EGO_ID);
    if ev.a_ahead && !ev.b_lane_changing {
        return false;
    }
    if ev.b_lane_changing && ev.pet.is_some_and(|p| p < params.cut_in_pet) {
        return false;
    }
    if ev.a_lane_changing {
        return true;
    }
    !ev.a_ahead
}

/// Whether a challenger behaved in a way that invalidates the run with
/// respect to testing the ego.
fn agent_unreasonable(events: &EventLog, id: &str, params: &FitnessParams) -> bool {
    for c in &events.collisions {
        let as_a = c.a == id;
        let as_b = matches!(&c.b, CollisionWith::Agent(b) if b == id);
        if !as_a && !as_b {
            continue;
        }
        // Collisions not involving the ego at all: obstacle hits, or
        // challenger-on-challenger contact.
        let with_ego = c.a == EGO_ID || matches!(&c.b, CollisionWith::Agent(b) if b == EGO_ID);
        if !with_ego {
            return true;
        }
        if c.a == EGO_ID && as_b {
            // Ego-centric event: the challenger is `b`.
            if c.a_ahead && !c.b_lane_changing {
                return true; // rammed the ego from behind
            }
            if c.b_lane_changing && c.pet.is_some_and(|p| p < params.cut_in_pet) {
                return true; // violent cut-in
            }
        }
    }
    events.off_road.iter().any(|e| e.agent == id)
}

// ---------------------------------------------------------------------------
// Fitness
// ---------------------------------------------------------------------------

/// Evaluates an event log for the given challenger ids.
pub fn evaluate_events(
    events: &EventLog,
    challengers: &[String],
    params: &FitnessParams,
) -> Evaluation {
    let mut per_agent = BTreeMap::new();
    per_agent.insert(EGO_ID.to_string(), participant_score(events, EGO_ID));
    for id in challengers {
        per_agent.insert(id.clone(), participant_score(events, id));
    }
    let ego_score = per_agent[EGO_ID];
    let agent_score = challengers
        .iter()
        .map(|id| per_agent[id])
        .fold(0.0, f64::max);
    let dist = dist_score(events.min_distance);

    let unreasonable: Vec<String> = challengers
        .iter()
        .filter(|id| agent_unreasonable(events, id, params))
        .cloned()
        .collect();

    let ego_collision = events.collisions.iter().find(|c| c.a == EGO_ID);

    let (fitness, verdict, ego_responsible) = if !unreasonable.is_empty() {
        let worst = unreasonable
            .iter()
            .map(|id| per_agent[id])
            .fold(0.0, f64::max);
        let responsible = ego_collision.map(|ev| ego_responsibility(ev, params));
        (-worst, Verdict::Invalid, responsible)
    } else if let Some(ev) = ego_collision {
        if ego_responsibility(ev, params) {
            (ego_score, Verdict::ValidCritical, Some(true))
        } else {
            let f = params.alpha * (ego_score - agent_score + params.dist_weight * dist);
            let v = if f >= params.critical_threshold {
                Verdict::ValidCritical
            } else {
                Verdict::ValidUncritical
            };
            (f, v, Some(false))
        }
    } else {
        let f = params.alpha * (ego_score - agent_score + params.dist_weight * dist);
        let v = if f >= params.critical_threshold {
            Verdict::ValidCritical
        } else {
            Verdict::ValidUncritical
        };
        (f, v, None)
    };

    Evaluation {
        fitness,
        verdict,
        ego_score,
        agent_score,
        dist_score: dist,
        min_distance: events.min_distance,
        min_ttc: events.min_ttc,
        ego_collision: ego_collision.is_some(),
        ego_responsible,
        unreasonable_agents: unreasonable,
        per_agent,
    }
}

/// Evaluates a finished run.
pub fn evaluate(trace: &SimTrace, params: &FitnessParams) -> Evaluation {
    let challengers: Vec<String> = trace
        .steps
        .first()
        .map(|w| {
            w.agents
                .iter()
                .filter(|a| a.id != EGO_ID)
                .map(|a| a.id.clone())
                .collect()
        })
        .unwrap_or_default();
    evaluate_events(&trace.events, &challengers, params)
}

//! Trajectory abstraction: from a logged position trace to a behavior tree.
//!
//! The pipeline has four stages:
//!
//! 1. **State estimation** — logged positions are projected into the lane
//!    frame and a local least-squares polynomial fit over a sliding window
//!    recovers longitudinal/lateral derivatives. The default degree-5 fit
//!    reproduces planner-generated motion exactly; noisy logs use a lower
//!    degree and wider window to smooth instead.
//! 2. **Partitioning** — a greedy scan grows each segment while a single
//!    planned segment still explains all samples within a cost budget, and
//!    places a boundary one sample before the first violation. Estimation
//!    runs once more with fit windows clipped to the detected segments so
//!    boundary states are not blurred across maneuvers.
//! 3. **Classification** — each segment becomes a maneuver leaf: a lane
//!    change when the lateral offset moved, a cruise when the speed held,
//!    and a stored replay segment otherwise (or always, in non-semantic
//!    mode).
//! 4. **Synthesis** — the leaves line up under a sequence root whose
//!    open-loop replay reproduces the log; the reconstruction error and the
//!    log-to-tree compression ratio quantify how faithfully and compactly.
//!
//! Several abstractions of the same structure generalize into a logical
//! scenario: each numeric parameter that varies across them becomes a
//! uniform-range variable spanning its central quantiles.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{BehaviorNode, BehaviorTree, LaneChangeDirection, LeafBehavior, NodeKind, TriggerCondition};
use crate::frenet::{
    plan_segment, partition_cost, CostWeights, FrenetError, FrenetState, ReferencePath,
    TrajectoryPoint,
};
use crate::scenario::{
    ConcreteScenario, Domain, LogicalScenario, NodeParam, Variable, VariableTarget,
};
use crate::sim::{replay_tree, SimError};

#[derive(Debug, Error)]
pub enum Log2BtError {
    #[error("log too short: {0} samples (need at least 6)")]
    TooShort(usize),
    #[error("irregular sampling at index {index}: dt {got} vs {expected}")]
    IrregularSampling { index: usize, got: f64, expected: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("abstractions have different structure: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Frenet(#[from] FrenetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("log parse: {0}")]
    Parse(String),
}

/// Tuning of the abstraction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Log2BtConfig {
    /// Sliding-window length of the local fit (odd, at least `degree + 2`).
    pub window: usize,
    /// Local fit degree; 5 reproduces planner motion exactly, 2-3 smooths
    /// noisy logs.
    pub degree: usize,
    /// Segment-cost budget of the partitioner.
    pub eps_part: f64,
    /// Lateral displacement that classifies a segment as a lane change.
    pub eps_lat: f64,
    /// Speed change below which a segment counts as cruising.
    pub eps_vel: f64,
    pub weights: CostWeights,
    /// Classify segments into maneuver leaves; otherwise every segment
    /// becomes a stored replay segment.
    pub semantic: bool,
    /// Iteratively sharpen boundaries by re-fitting with windows clipped to
    /// the detected segments. Right for clean logs, where the clipped fits
    /// become exact; turn off together with a low fit degree for noisy
    /// logs, where clipping only raises the variance at segment edges.
    pub refine: bool,
}

impl Default for Log2BtConfig {
    fn default() -> Self {
        Self {
            window: 9,
            degree: 5,
            eps_part: 1.0,
            eps_lat: 2.0,
            eps_vel: 1.0,
            weights: CostWeights::default(),
            semantic: true,
            refine: true,
        }
    }
}

/// Result of abstracting one log. Only the initial state, step size, and
/// tree serialize; they are the abstraction. Boundaries and per-sample
/// states are working artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Abstraction {
    pub initial: FrenetState,
    pub dt: f64,
    pub tree: BehaviorTree,
    #[serde(skip)]
    pub boundaries: Vec<usize>,
    #[serde(skip)]
    pub states: Vec<FrenetState>,
}

impl Abstraction {
    /// Compact serialization; same abstraction, same bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("abstraction serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

// ---------------------------------------------------------------------------
// Log I/O
// ---------------------------------------------------------------------------

/// Reads a trajectory log with header `t,x,y` (optional `z`).
pub fn read_log_csv<R: Read>(reader: R) -> Result<Vec<TrajectoryPoint>, Log2BtError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(ti), Some(xi), Some(yi)) = (col("t"), col("x"), col("y")) else {
        return Err(Log2BtError::Parse("expected header columns t,x,y".into()));
    };
    let zi = col("z");
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64, Log2BtError> {
            rec.get(i)
                .ok_or_else(|| Log2BtError::Parse(format!("row {line}: missing column {i}")))?
                .trim()
                .parse()
                .map_err(|e| Log2BtError::Parse(format!("row {line}: {e}")))
        };
        out.push(TrajectoryPoint {
            t: get(ti)?,
            x: get(xi)?,
            y: get(yi)?,
            z: zi.map(get).transpose()?.unwrap_or(0.0),
        });
    }
    Ok(out)
}

pub fn write_log_csv<W: Write>(points: &[TrajectoryPoint], out: W) -> Result<(), Log2BtError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z"])?;
    for p in points {
        // Shortest round-trip float formatting keeps the file canonical.
        w.write_record([
            format!("{}", p.t),
            format!("{}", p.x),
            format!("{}", p.y),
            format!("{}", p.z),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Canonical CSV bytes of a log, the reference size for compression.
pub fn canonical_log_csv(points: &[TrajectoryPoint]) -> String {
    let mut buf = Vec::new();
    write_log_csv(points, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf8")
}

/// Size of the raw log over size of its abstraction.
pub fn compression_ratio(points: &[TrajectoryPoint], abstraction: &Abstraction) -> f64 {
    let log_bytes = canonical_log_csv(points).len() as f64;
    let tree_bytes = abstraction.to_canonical_json().len() as f64;
    log_bytes / tree_bytes
}

// ---------------------------------------------------------------------------
// State estimation
// ---------------------------------------------------------------------------

fn infer_dt(points: &[TrajectoryPoint]) -> Result<f64, Log2BtError> {
    if points.len() < 6 {
        return Err(Log2BtError::TooShort(points.len()));
    }
    let dt = points[1].t - points[0].t;
    if dt <= 0.0 {
        return Err(Log2BtError::IrregularSampling { index: 1, got: dt, expected: f64::NAN });
    }
    for (i, pair) in points.windows(2).enumerate() {
        let got = pair[1].t - pair[0].t;
        if (got - dt).abs() > 1e-6 {
            return Err(Log2BtError::IrregularSampling { index: i + 1, got, expected: dt });
        }
    }
    Ok(dt)
}

/// Fits `values[lo..hi]` (inclusive bounds in sample indices) with a
/// polynomial and returns (value, first, second) derivatives at sample
/// `center`. Time is rescaled to keep the solve well conditioned.
fn fit_window(
    times: &[f64],
    values: &[f64],
    lo: usize,
    hi: usize,
    center: usize,
    degree: usize,
) -> (f64, f64, f64) {
    let n = hi - lo + 1;
    let degree = degree.min(n - 1);
    let t0 = times[center];
    let scale = (times[hi] - times[lo]).max(1e-9) / 2.0;

    let mut a = DMatrix::zeros(n, degree + 1);
    let mut y = DVector::zeros(n);
    for (row, k) in (lo..=hi).enumerate() {
        let tau = (times[k] - t0) / scale;
        let mut pw = 1.0;
        for col in 0..=degree {
            a[(row, col)] = pw;
            pw *= tau;
        }
        y[row] = values[k];
    }
    let svd = a.svd(true, true);
    let c = svd.solve(&y, 1e-12).expect("least-squares solve");
    let c1 = if degree >= 1 { c[1] } else { 0.0 };
    let c2 = if degree >= 2 { c[2] } else { 0.0 };
    (c[0], c1 / scale, 2.0 * c2 / (scale * scale))
}

/// Window bounds for sample `i`: centered when possible, slid (not shrunk)
/// at the edges, and clipped to the enclosing partition piece when one is
/// given so maneuver boundaries stay crisp.
fn window_bounds(
    i: usize,
    n: usize,
    window: usize,
    pieces: Option<&[usize]>,
) -> (usize, usize) {
    let (mut lo_lim, mut hi_lim) = (0usize, n - 1);
    if let Some(bounds) = pieces {
        // Pieces span [b_j, b_{j+1}]; a boundary sample belongs to the piece
        // it terminates.
        for w in bounds.windows(2) {
            let (b0, b1) = (w[0], w[1]);
            if (i > b0 && i < b1) || i == b1 || (i == b0 && b0 == 0) {
                lo_lim = b0;
                hi_lim = b1;
                break;
            }
        }
    }
    let span = hi_lim - lo_lim + 1;
    let w = window.min(span);
    let half = w / 2;
    let start = i
        .saturating_sub(half)
        .clamp(lo_lim, hi_lim + 1 - w);
    (start, start + w - 1)
}

/// Logged trajectory projected into the lane frame, fit-ready.
struct Series {
    times: Vec<f64>,
    s: Vec<f64>,
    d: Vec<f64>,
}

fn project_series(points: &[TrajectoryPoint], path: &ReferencePath) -> Result<Series, Log2BtError> {
    let n = points.len();
    let mut series =
        Series { times: Vec::with_capacity(n), s: Vec::with_capacity(n), d: Vec::with_capacity(n) };
    for p in points {
        let pos = crate::geom::Vec2::new(p.x, p.y);
        let (s, d) = path.locate(pos);
        if d.abs() > path.max_lateral() {
            return Err(Log2BtError::Frenet(FrenetError::PointOffPath {
                lateral: d.abs(),
                max: path.max_lateral(),
            }));
        }
        series.times.push(p.t);
        series.s.push(s);
        series.d.push(d);
    }
    Ok(series)
}

fn fit_state(series: &Series, i: usize, lo: usize, hi: usize, degree: usize) -> FrenetState {
    let (s, s_dot, s_ddot) = fit_window(&series.times, &series.s, lo, hi, i, degree);
    let (d, d_dot, d_ddot) = fit_window(&series.times, &series.d, lo, hi, i, degree);
    FrenetState { t: series.times[i], s, s_dot, s_ddot, d, d_dot, d_ddot }
}

fn check_fit_config(cfg: &Log2BtConfig) -> Result<(), Log2BtError> {
    if cfg.window < cfg.degree + 2 {
        return Err(Log2BtError::BadConfig(format!(
            "window {} too small for degree {}",
            cfg.window, cfg.degree
        )));
    }
    Ok(())
}

fn estimate_series(series: &Series, cfg: &Log2BtConfig, pieces: Option<&[usize]>) -> Vec<FrenetState> {
    let n = series.times.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = window_bounds(i, n, cfg.window, pieces);
            fit_state(series, i, lo, hi, cfg.degree)
        })
        .collect()
}

/// Lane-frame state series for a logged trajectory. `pieces`, when given,
/// confines each sample's fit window to its own partition piece.
pub fn estimate_states(
    points: &[TrajectoryPoint],
    path: &ReferencePath,
    cfg: &Log2BtConfig,
    pieces: Option<&[usize]>,
) -> Result<Vec<FrenetState>, Log2BtError> {
    check_fit_config(cfg)?;
    infer_dt(points)?;
    let series = project_series(points, path)?;
    Ok(estimate_series(&series, cfg, pieces))
}

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

/// Greedy segmentation: boundary indices into `states`, always starting at
/// 0 and ending at the last sample. A segment grows while one planned
/// segment explains every sample within the cost budget; on violation the
/// boundary lands one sample earlier (unless that would empty the segment).
pub fn partition(states: &[FrenetState], cfg: &Log2BtConfig) -> Result<Vec<usize>, Log2BtError> {
    let n = states.len();
    if n < 2 {
        return Err(Log2BtError::TooShort(n));
    }
    let last = n - 1;
    let mut bounds = vec![0usize];
    let mut start = 0usize;
    let mut len = 1usize;

    while start + len <= last {
        let curr = start + len;
        let seg = plan_segment(&states[start], &states[curr])?;
        let cost = partition_cost(&states[start..=curr], &seg, &cfg.weights);
        if cost > cfg.eps_part {
            let boundary = if curr - 1 == start { curr } else { curr - 1 };
            bounds.push(boundary);
            start = boundary;
            len = 1;
        } else {
            len += 1;
        }
    }
    if *bounds.last().unwrap() != last {
        bounds.push(last);
    }
    Ok(bounds)
}

/// How far (in samples) the final boundary-settling pass may move each
/// boundary from where the greedy scan left it.
const SETTLE_RADIUS: usize = 25;

/// Cost of explaining samples `l..=r` with two planned segments split at
/// `c`, with states locally re-fit under that split.
fn split_cost(
    series: &Series,
    cfg: &Log2BtConfig,
    l: usize,
    c: usize,
    r: usize,
) -> Result<f64, Log2BtError> {
    let span = r - l + 1;
    let local_pieces = [0usize, c - l, r - l];
    let states: Vec<FrenetState> = (0..span)
        .map(|i| {
            let (lo, hi) = window_bounds(i, span, cfg.window, Some(&local_pieces));
            fit_state(series, l + i, l + lo, l + hi, cfg.degree)
        })
        .collect();
    let left = plan_segment(&states[0], &states[c - l])?;
    let right = plan_segment(&states[c - l], &states[r - l])?;
    Ok(partition_cost(&states[..=c - l], &left, &cfg.weights)
        + partition_cost(&states[c - l..], &right, &cfg.weights))
}

/// Nudges each interior boundary within `radius` samples to wherever the
/// two adjacent segments are cheapest to explain. The greedy scan lands
/// late on gentle maneuver onsets (a minimum-jerk shift leaves the old
/// course as the cube of elapsed time, so its first samples sit within
/// measurement precision of the previous segment); re-fitting per candidate
/// split lets the true junction win.
fn nudge_boundaries(
    series: &Series,
    cfg: &Log2BtConfig,
    bounds: &mut [usize],
    radius: usize,
) -> Result<(), Log2BtError> {
    for j in 1..bounds.len().saturating_sub(1) {
        let (l, r) = (bounds[j - 1], bounds[j + 1]);
        let orig = bounds[j];
        let lo = (l + 1).max(orig.saturating_sub(radius));
        let hi = (r - 1).min(orig.saturating_add(radius));
        let mut best = (split_cost(series, cfg, l, orig, r)?, orig);
        for c in lo..=hi {
            if c == orig {
                continue;
            }
            let cost = split_cost(series, cfg, l, c, r)?;
            if cost < best.0 - 1e-12 {
                best = (cost, c);
            }
        }
        bounds[j] = best.1;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Classification and synthesis
// ---------------------------------------------------------------------------

/// Maneuver label for the segment `states[a..=b]`.
pub fn classify_segment(
    states: &[FrenetState],
    a: usize,
    b: usize,
    cfg: &Log2BtConfig,
) -> LeafBehavior {
    let first = &states[a];
    let last = &states[b];
    if !cfg.semantic {
        return LeafBehavior::FollowLog { duration: last.t - first.t, end: *last };
    }
    let delta_d = last.d - first.d;
    if delta_d.abs() > cfg.eps_lat {
        return LeafBehavior::ChangeLane {
            direction: if delta_d > 0.0 {
                LaneChangeDirection::Left
            } else {
                LaneChangeDirection::Right
            },
            duration: last.t - first.t,
            lateral_offset: delta_d.abs(),
            end_speed: last.s_dot,
        };
    }
    if (last.s_dot - first.s_dot).abs() < cfg.eps_vel {
        let mean_speed =
            states[a..=b].iter().map(|s| s.s_dot).sum::<f64>() / (b - a + 1) as f64;
        return LeafBehavior::Cruise { speed: mean_speed, duration: Some(last.t - first.t) };
    }
    LeafBehavior::FollowLog { duration: last.t - first.t, end: *last }
}

/// Rounds away sub-micrometer numeric noise from a fitted quantity. The
/// least-squares fits recover planner coefficients to about 1e-8 even for
/// logs recorded far from the map origin, and the leftover digits would
/// otherwise dominate the serialized form of every state and parameter.
fn tidy(x: f64) -> f64 {
    (x * 1e7).round() / 1e7
}

fn tidy_state(s: &FrenetState) -> FrenetState {
    FrenetState {
        t: tidy(s.t),
        s: tidy(s.s),
        s_dot: tidy(s.s_dot),
        s_ddot: tidy(s.s_ddot),
        d: tidy(s.d),
        d_dot: tidy(s.d_dot),
        d_ddot: tidy(s.d_ddot),
    }
}

fn tidy_leaf(leaf: LeafBehavior) -> LeafBehavior {
    match leaf {
        LeafBehavior::Cruise { speed, duration } => {
            LeafBehavior::Cruise { speed: tidy(speed), duration: duration.map(tidy) }
        }
        LeafBehavior::ChangeLane { direction, duration, lateral_offset, end_speed } => {
            LeafBehavior::ChangeLane {
                direction,
                duration: tidy(duration),
                lateral_offset: tidy(lateral_offset),
                end_speed: tidy(end_speed),
            }
        }
        LeafBehavior::FollowLog { duration, end } => {
            LeafBehavior::FollowLog { duration: tidy(duration), end: tidy_state(&end) }
        }
        other => other,
    }
}

fn build_tree(states: &[FrenetState], bounds: &[usize], cfg: &Log2BtConfig) -> BehaviorTree {
    let leaves = bounds
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            BehaviorNode::leaf(format!("n{i}"), tidy_leaf(classify_segment(states, w[0], w[1], cfg)))
        })
        .collect();
    BehaviorTree::sequence(leaves)
}

/// Runs the full abstraction pipeline on one log.
pub fn abstract_log(
    points: &[TrajectoryPoint],
    path: &ReferencePath,
    cfg: &Log2BtConfig,
) -> Result<Abstraction, Log2BtError> {
    let dt = infer_dt(points)?;
    check_fit_config(cfg)?;
    let series = project_series(points, path)?;

    // First pass: centered windows everywhere.
    let rough = estimate_series(&series, cfg, None);
    let mut bounds = partition(&rough, cfg)?;

    if cfg.refine {
        // Fit windows that straddle a maneuver junction blur the nearby
        // states, which can shift a detected boundary by a few samples and
        // that shift can be self-sustaining. Alternate a local boundary
        // search with piece-clipped re-fitting and a fresh greedy scan
        // until the boundaries stop moving.
        for _ in 0..8 {
            nudge_boundaries(&series, cfg, &mut bounds, 2)?;
            let refined = estimate_series(&series, cfg, Some(&bounds));
            let next = partition(&refined, cfg)?;
            if next == bounds {
                break;
            }
            bounds = next;
        }
    }

    // The greedy scan systematically overshoots gentle onsets, and the
    // split-cost landscape grows spurious local minima a handful of samples
    // past the true junction, so whether or not the partition itself was
    // revisited, give a wide per-boundary search the last word, iterated to
    // a fixpoint. This moves boundaries without adding or removing them, so
    // it cannot fragment the segmentation. The radius comfortably covers
    // the worst observed greedy overshoot while keeping a boundary from
    // wandering across a noisy log when measurement noise flattens the
    // split-cost landscape.
    for _ in 0..12 {
        let before = bounds.clone();
        nudge_boundaries(&series, cfg, &mut bounds, SETTLE_RADIUS)?;
        if bounds == before {
            break;
        }
    }
    let states = estimate_series(&series, cfg, Some(&bounds));

    let tree = build_tree(&states, &bounds, cfg);
    Ok(Abstraction { initial: tidy_state(&states[0]), dt, tree, boundaries: bounds, states })
}

// ---------------------------------------------------------------------------
// Replay fidelity
// ---------------------------------------------------------------------------

/// Open-loop replay of an abstraction over the duration of its source log.
pub fn replay(
    abstraction: &Abstraction,
    path: &ReferencePath,
    samples: usize,
) -> Result<Vec<FrenetState>, Log2BtError> {
    let horizon = (samples.saturating_sub(1)) as f64 * abstraction.dt;
    Ok(replay_tree(&abstraction.tree, &abstraction.initial, path, abstraction.dt, horizon)?)
}

/// Replay fidelity against the source log, averaged sample by sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayFidelity {
    /// Mean absolute arc-length (longitudinal) error, meters.
    pub ade_s: f64,
    /// Mean absolute lateral error, meters.
    pub ade_l: f64,
    /// Mean Euclidean displacement error, meters.
    pub ade: f64,
}

/// Replays the abstraction and measures how far it drifts from the logged
/// trajectory, longitudinally, laterally, and in the plane.
pub fn reconstruction_error(
    points: &[TrajectoryPoint],
    abstraction: &Abstraction,
    path: &ReferencePath,
) -> Result<ReplayFidelity, Log2BtError> {
    let replayed = replay(abstraction, path, points.len())?;
    let mut sum_s = 0.0;
    let mut sum_l = 0.0;
    let mut sum_e = 0.0;
    let mut count = 0usize;
    for (p, st) in points.iter().zip(&replayed) {
        let (s_log, d_log) = path.locate(crate::geom::Vec2::new(p.x, p.y));
        sum_s += (st.s - s_log).abs();
        sum_l += (st.d - d_log).abs();
        let s = st.s.clamp(0.0, path.len());
        let pos = crate::frenet::unproject(s, st.d, path)?;
        sum_e += pos.dist(crate::geom::Vec2::new(p.x, p.y));
        count += 1;
    }
    let n = count.max(1) as f64;
    Ok(ReplayFidelity { ade_s: sum_s / n, ade_l: sum_l / n, ade: sum_e / n })
}

// ---------------------------------------------------------------------------
// Generalization
// ---------------------------------------------------------------------------

/// One generalizable numeric slot of a tree.
#[derive(Debug, Clone, PartialEq)]
struct Slot {
    node: String,
    param: NodeParam,
    value: f64,
}

fn collect_slots(tree: &BehaviorTree) -> Vec<Slot> {
    let mut out = Vec::new();
    for n in tree.nodes() {
        if let Some(cond) = &n.condition {
            match cond {
                TriggerCondition::Time { at } => {
                    out.push(Slot { node: n.id.clone(), param: NodeParam::At, value: *at })
                }
                TriggerCondition::Distance { threshold, .. } => out.push(Slot {
                    node: n.id.clone(),
                    param: NodeParam::Threshold,
                    value: *threshold,
                }),
                TriggerCondition::RelativePosition { lon_gap, lat_gap, .. } => {
                    out.push(Slot {
                        node: n.id.clone(),
                        param: NodeParam::LonGap,
                        value: *lon_gap,
                    });
                    out.push(Slot {
                        node: n.id.clone(),
                        param: NodeParam::LatGap,
                        value: *lat_gap,
                    });
                }
                _ => {}
            }
        }
        if let NodeKind::Leaf(leaf) = &n.kind {
            let mut push = |param, value| out.push(Slot { node: n.id.clone(), param, value });
            match leaf {
                LeafBehavior::Track { gap, .. } => push(NodeParam::Gap, *gap),
                LeafBehavior::ChangeLane { duration, lateral_offset, end_speed, .. } => {
                    push(NodeParam::Duration, *duration);
                    push(NodeParam::LateralOffset, *lateral_offset);
                    push(NodeParam::EndSpeed, *end_speed);
                }
                LeafBehavior::Cruise { speed, duration } => {
                    push(NodeParam::Speed, *speed);
                    if let Some(d) = duration {
                        push(NodeParam::Duration, *d);
                    }
                }
                LeafBehavior::MergeIn { duration, .. }
                | LeafBehavior::MergeOut { duration, .. } => push(NodeParam::Duration, *duration),
                LeafBehavior::FollowLog { .. } => {}
            }
        }
    }
    out
}

fn shape_signature(tree: &BehaviorTree) -> Vec<String> {
    tree.nodes()
        .iter()
        .map(|n| {
            let kind = match &n.kind {
                NodeKind::Composite { kind, .. } => format!("composite:{kind:?}"),
                NodeKind::Leaf(l) => format!(
                    "leaf:{}",
                    match l {
                        LeafBehavior::Track { .. } => "track",
                        LeafBehavior::ChangeLane { .. } => "change_lane",
                        LeafBehavior::Cruise { .. } => "cruise",
                        LeafBehavior::FollowLog { .. } => "follow_log",
                        LeafBehavior::MergeIn { .. } => "merge_in",
                        LeafBehavior::MergeOut { .. } => "merge_out",
                    }
                ),
            };
            format!("{}:{}", n.id, kind)
        })
        .collect()
}

/// Linear-interpolation quantile of pre-sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let w = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] * (1.0 - w) + sorted[lo + 1] * w
    }
}

/// Quantile range used for generalized parameters.
pub const GENERALIZE_QUANTILES: (f64, f64) = (0.05, 0.95);
/// Spread below which a parameter stays fixed instead of becoming a
/// variable.
const MIN_SPREAD: f64 = 1e-9;

/// Fuses several same-shaped abstractions of one agent into a logical
/// scenario: the first tree becomes the template, and every numeric slot
/// whose value varies across the set becomes a uniform variable spanning
/// the central quantile range of the observed values.
pub fn generalize(
    name: &str,
    base: &ConcreteScenario,
    agent_id: &str,
    trees: &[&BehaviorTree],
) -> Result<LogicalScenario, Log2BtError> {
    let Some(first) = trees.first() else {
        return Err(Log2BtError::ShapeMismatch("no abstractions given".into()));
    };
    let signature = shape_signature(first);
    for (i, t) in trees.iter().enumerate().skip(1) {
        if shape_signature(t) != signature {
            return Err(Log2BtError::ShapeMismatch(format!(
                "abstraction {i} differs from the first"
            )));
        }
    }
    if !base.agents.iter().any(|a| a.id == agent_id) {
        return Err(Log2BtError::ShapeMismatch(format!(
            "base scenario has no agent `{agent_id}`"
        )));
    }

    let slot_sets: Vec<Vec<Slot>> = trees.iter().map(|t| collect_slots(t)).collect();
    let mut variables = Vec::new();
    for (idx, slot) in slot_sets[0].iter().enumerate() {
        let mut values: Vec<f64> = slot_sets.iter().map(|s| s[idx].value).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = (
            quantile(&values, GENERALIZE_QUANTILES.0),
            quantile(&values, GENERALIZE_QUANTILES.1),
        );
        if hi - lo > MIN_SPREAD {
            variables.push(Variable {
                name: format!("{}_{}", slot.node, param_tag(slot.param)),
                target: VariableTarget::NodeParam {
                    agent: agent_id.to_string(),
                    node: slot.node.clone(),
                    param: slot.param,
                },
                domain: Domain::Uniform { min: lo, max: hi },
            });
        }
    }

    let mut agents = base.agents.clone();
    for a in &mut agents {
        if a.id == agent_id {
            a.tree = (*first).clone();
        }
    }
    Ok(LogicalScenario {
        name: name.to_string(),
        map: base.map.clone(),
        ego: base.ego.clone(),
        agents,
        dt: base.dt,
        horizon: base.horizon,
        variables,
        relative: Vec::new(),
    })
}

fn param_tag(p: NodeParam) -> &'static str {
    match p {
        NodeParam::Gap => "gap",
        NodeParam::Duration => "duration",
        NodeParam::LateralOffset => "lateral_offset",
        NodeParam::EndSpeed => "end_speed",
        NodeParam::Speed => "speed",
        NodeParam::Threshold => "threshold",
        NodeParam::LonGap => "lon_gap",
        NodeParam::LatGap => "lat_gap",
        NodeParam::At => "at",
    }
}

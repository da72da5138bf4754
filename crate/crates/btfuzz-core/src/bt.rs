//! Behavior trees for traffic agents: a small serializable dialect of
//! composites, maneuver leaves, and trigger conditions, plus the runtime
//! that executes a tree against the simulated world.
//!
//! Execution semantics in brief:
//!
//! * A node's condition is a *gate*: inside a `Sequence` the active child
//!   waits (blocking the sequence) until its condition first holds, then the
//!   condition stays latched. A sequence also *preempts* an open-ended child
//!   (`Track`, un-timed `Cruise`) the moment the next child's condition
//!   fires, which is how "track until the trigger, then act" patterns run.
//! * `Parallel` ticks all children and takes the first command in child
//!   order; `Cyclic` repeats its children forever; `SequentialSelection`
//!   re-evaluates child conditions every tick and runs the first that holds.
//! * A tree with no active leaf emits a hold-lane / hold-speed command.
//!
//! Maneuver leaves plan with the shared quartic/quintic machinery at
//! activation and then play the plan back, so simulated motion reproduces
//! planned segments exactly rather than through numeric integration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frenet::{plan_segment, FrenetState, QuarticSegment, QuinticSegment};
use crate::geom::{point_in_polygon, Vec2};
use crate::sim::{LaneMap, WorldState};

/// Maximum nesting depth of combined trigger conditions.
pub const MAX_CONDITION_DEPTH: usize = 8;

/// Nominal acceleration used to size the speed ramp of a cruise leaf.
const CRUISE_RAMP_ACCEL: f64 = 1.5;
/// Gains and command envelope of the tracking feedback law.
const TRACK_KP: f64 = 0.25;
const TRACK_KV: f64 = 1.1;
const TRACK_ACCEL_MIN: f64 = -3.0;
const TRACK_ACCEL_MAX: f64 = 2.0;

// ---------------------------------------------------------------------------
// Tree structure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// Fires while the measured quantity is less than or equal the bound.
    Le,
    /// Fires while the measured quantity is greater than or equal the bound.
    Ge,
}

/// What a distance trigger measures against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionTarget {
    Agent(String),
    Point(Vec2),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    AllOf,
    AnyOf,
}

/// Trigger conditions gating node activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerCondition {
    /// Simulation time reached `at` seconds.
    Time { at: f64 },
    /// Euclidean distance from this agent to a target, compared inclusively.
    Distance { to: ConditionTarget, cmp: Comparator, threshold: f64 },
    /// This agent's center is inside the polygon.
    Area { polygon: Vec<Vec2> },
    /// Signed longitudinal and absolute lateral gap to another agent,
    /// measured in the target's lane frame; both comparisons must hold.
    RelativePosition { target: String, cmp: Comparator, lon_gap: f64, lat_gap: f64 },
    /// A referenced behavior node has completed (same agent when `agent` is
    /// omitted).
    EndsByBehavior {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent: Option<String>,
        node: String,
    },
    /// Boolean combination of sub-conditions, nesting bounded by
    /// [`MAX_CONDITION_DEPTH`].
    Combined { mode: CombineMode, conditions: Vec<TriggerCondition> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneChangeDirection {
    Left,
    Right,
}

/// Executable maneuver leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafBehavior {
    /// Regulate the longitudinal offset to another agent. Positive `gap`
    /// keeps this agent `gap` meters (bumper to bumper) ahead of the
    /// target; negative follows behind, floored at a constant-time-gap
    /// distance of `max(2 m, 1.2 s * speed)`. Never completes on its own.
    Track { target: String, gap: f64 },
    /// Lateral quintic over `duration` to an offset `lateral_offset` meters
    /// toward `direction`, with a longitudinal ramp to `end_speed`.
    ChangeLane {
        direction: LaneChangeDirection,
        duration: f64,
        lateral_offset: f64,
        end_speed: f64,
    },
    /// Ramp to `speed` and keep the current lane. With a duration the leaf
    /// completes after it elapses; without one it runs forever.
    Cruise {
        speed: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
    /// Replay a recorded segment: replan from the current state to the
    /// recorded end conditions over the recorded duration. (`end.t` keeps
    /// the source-log timestamp for reference; replay uses `duration`.)
    FollowLog { duration: f64, end: FrenetState },
    /// Lane change onto the centerline of an adjacent lane, offset resolved
    /// against the map at activation.
    MergeIn { target_lane: String, duration: f64 },
    MergeOut { target_lane: String, duration: f64 },
}

impl LeafBehavior {
    /// Leaves that only end through an external condition.
    pub fn open_ended(&self) -> bool {
        matches!(
            self,
            LeafBehavior::Track { .. } | LeafBehavior::Cruise { duration: None, .. }
        )
    }

}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeKind {
    Sequence,
    Parallel,
    Cyclic,
    SequentialSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Composite { kind: CompositeKind, children: Vec<BehaviorNode> },
    Leaf(LeafBehavior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorNode {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<TriggerCondition>,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl BehaviorNode {
    pub fn leaf(id: impl Into<String>, behavior: LeafBehavior) -> Self {
        Self { id: id.into(), condition: None, kind: NodeKind::Leaf(behavior) }
    }

    pub fn with_condition(mut self, condition: TriggerCondition) -> Self {
        self.condition = Some(condition);
        self
    }

    pub fn composite(
        id: impl Into<String>,
        kind: CompositeKind,
        children: Vec<BehaviorNode>,
    ) -> Self {
        Self { id: id.into(), condition: None, kind: NodeKind::Composite { kind, children } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTree {
    pub root: BehaviorNode,
}

impl BehaviorTree {
    pub fn sequence(children: Vec<BehaviorNode>) -> Self {
        Self { root: BehaviorNode::composite("root", CompositeKind::Sequence, children) }
    }

    /// Every node in depth-first order.
    pub fn nodes(&self) -> Vec<&BehaviorNode> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a BehaviorNode, out: &mut Vec<&'a BehaviorNode>) {
            out.push(n);
            if let NodeKind::Composite { children, .. } = &n.kind {
                for c in children {
                    walk(c, out);
                }
            }
        }
        walk(&self.root, &mut out);
        out
    }

    pub fn find(&self, id: &str) -> Option<&BehaviorNode> {
        self.nodes().into_iter().find(|n| n.id == id)
    }

    /// Leaf count, useful for reporting compression.
    pub fn leaf_count(&self) -> usize {
        self.nodes()
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf(_)))
            .count()
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Known identifiers the tree may reference.
#[derive(Debug, Default, Clone)]
pub struct ValidationScope {
    pub agent_ids: BTreeSet<String>,
    pub lane_ids: BTreeSet<String>,
}

fn condition_depth(c: &TriggerCondition) -> usize {
    match c {
        TriggerCondition::Combined { conditions, .. } => {
            1 + conditions.iter().map(condition_depth).max().unwrap_or(0)
        }
        _ => 1,
    }
}

impl BehaviorTree {
    /// Structural diagnostics: dangling references, invalid parameters,
    /// over-deep combined conditions, duplicate ids. Empty means valid.
    pub fn validate(&self, scope: &ValidationScope) -> Vec<String> {
        let mut diags = Vec::new();
        let nodes = self.nodes();
        let ids: Vec<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(*id) {
                diags.push(format!("duplicate node id `{id}`"));
            }
        }
        let id_set: BTreeSet<&str> = ids.iter().copied().collect();

        let check_agent = |diags: &mut Vec<String>, node: &str, agent: &str| {
            if !scope.agent_ids.contains(agent) {
                diags.push(format!("node `{node}` references unknown agent `{agent}`"));
            }
        };

        for n in &nodes {
            if let Some(cond) = &n.condition {
                let depth = condition_depth(cond);
                if depth > MAX_CONDITION_DEPTH {
                    diags.push(format!(
                        "node `{}` condition nests {depth} levels (max {MAX_CONDITION_DEPTH})",
                        n.id
                    ));
                }
                let mut stack = vec![cond];
                while let Some(c) = stack.pop() {
                    match c {
                        TriggerCondition::Distance { to: ConditionTarget::Agent(a), threshold, .. } => {
                            check_agent(&mut diags, &n.id, a);
                            if !threshold.is_finite() || *threshold < 0.0 {
                                diags.push(format!(
                                    "node `{}` distance threshold must be non-negative",
                                    n.id
                                ));
                            }
                        }
                        TriggerCondition::Area { polygon } if polygon.len() < 3 => {
                            diags.push(format!("node `{}` area polygon needs >= 3 points", n.id));
                        }
                        TriggerCondition::RelativePosition { target, .. } => {
                            check_agent(&mut diags, &n.id, target);
                        }
                        TriggerCondition::EndsByBehavior { agent, node } => {
                            if let Some(a) = agent {
                                check_agent(&mut diags, &n.id, a);
                            } else if !id_set.contains(node.as_str()) {
                                diags.push(format!(
                                    "node `{}` waits on unknown node `{node}`",
                                    n.id
                                ));
                            }
                        }
                        TriggerCondition::Combined { conditions, .. } => {
                            stack.extend(conditions.iter());
                        }
                        _ => {}
                    }
                }
            }

            match &n.kind {
                NodeKind::Composite { children, .. } => {
                    if children.is_empty() {
                        diags.push(format!("composite `{}` has no children", n.id));
                    }
                }
                NodeKind::Leaf(leaf) => match leaf {
                    LeafBehavior::Track { target, gap } => {
                        check_agent(&mut diags, &n.id, target);
                        if !gap.is_finite() {
                            diags.push(format!("node `{}` gap must be finite", n.id));
                        }
                    }
                    LeafBehavior::ChangeLane { duration, lateral_offset, end_speed, .. } => {
                        if *duration <= 0.0 {
                            diags.push(format!("node `{}` duration must be positive", n.id));
                        }
                        if *lateral_offset < 0.0 {
                            diags.push(format!(
                                "node `{}` lateral offset must be non-negative",
                                n.id
                            ));
                        }
                        if *end_speed < 0.0 {
                            diags.push(format!("node `{}` end speed must be non-negative", n.id));
                        }
                    }
                    LeafBehavior::Cruise { speed, duration } => {
                        if *speed < 0.0 {
                            diags.push(format!("node `{}` cruise speed must be non-negative", n.id));
                        }
                        if let Some(d) = duration {
                            if *d <= 0.0 {
                                diags.push(format!("node `{}` duration must be positive", n.id));
                            }
                        }
                    }
                    LeafBehavior::FollowLog { duration, .. } => {
                        if *duration <= 0.0 {
                            diags.push(format!(
                                "node `{}` replay segment must advance in time",
                                n.id
                            ));
                        }
                    }
                    LeafBehavior::MergeIn { target_lane, duration }
                    | LeafBehavior::MergeOut { target_lane, duration } => {
                        if !scope.lane_ids.contains(target_lane) {
                            diags.push(format!(
                                "node `{}` references unknown lane `{target_lane}`",
                                n.id
                            ));
                        }
                        if *duration <= 0.0 {
                            diags.push(format!("node `{}` duration must be positive", n.id));
                        }
                    }
                },
            }
        }
        diags
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Longitudinal part of an agent command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LonCommand {
    /// Feedback acceleration, integrated by the simulator (clamped there).
    Accel(f64),
    /// Exact kinematic target from a plan playback.
    State { s: f64, s_dot: f64, s_ddot: f64 },
}

/// Lateral part of an agent command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatCommand {
    /// Keep the current offset.
    Hold,
    /// Exact lateral target from a plan playback.
    State { d: f64, d_dot: f64, d_ddot: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentCommand {
    pub lon: LonCommand,
    pub lat: LatCommand,
    /// True while the issuing leaf is a lane-change maneuver; the simulator
    /// reassigns lanes only once this drops back to false.
    pub lane_changing: bool,
}

impl AgentCommand {
    /// Hold-lane, hold-speed default when no leaf is active.
    pub fn hold() -> Self {
        Self { lon: LonCommand::Accel(0.0), lat: LatCommand::Hold, lane_changing: false }
    }
}

// ---------------------------------------------------------------------------
// Condition evaluation
// ---------------------------------------------------------------------------

/// Everything a tree needs to observe for one tick.
pub struct TickContext<'a> {
    pub world: &'a WorldState,
    pub map: &'a LaneMap,
    pub self_id: &'a str,
    pub dt: f64,
    /// Completed node ids per agent, for cross-agent `EndsByBehavior`.
    pub completed: &'a BTreeMap<String, BTreeSet<String>>,
}

/// Evaluates a trigger condition for the context's agent. Unknown references
/// evaluate to false (validation reports them ahead of time).
pub fn evaluate_condition(cond: &TriggerCondition, ctx: &TickContext) -> bool {
    let me = match ctx.world.agent(ctx.self_id) {
        Some(a) => a,
        None => return false,
    };
    match cond {
        TriggerCondition::Time { at } => ctx.world.time >= *at,
        TriggerCondition::Distance { to, cmp, threshold } => {
            let target = match to {
                ConditionTarget::Agent(id) => match ctx.world.agent(id) {
                    Some(a) => a.pos,
                    None => return false,
                },
                ConditionTarget::Point(p) => *p,
            };
            let dist = me.pos.dist(target);
            match cmp {
                Comparator::Le => dist <= *threshold,
                Comparator::Ge => dist >= *threshold,
            }
        }
        TriggerCondition::Area { polygon } => point_in_polygon(me.pos, polygon),
        TriggerCondition::RelativePosition { target, cmp, lon_gap, lat_gap } => {
            let tgt = match ctx.world.agent(target) {
                Some(a) => a,
                None => return false,
            };
            let (lon, lat) = match ctx.map.relative_in_lane_frame(&tgt.lane, me.pos, tgt.pos) {
                Some(v) => v,
                None => return false,
            };
            match cmp {
                Comparator::Le => lon <= *lon_gap && lat.abs() <= *lat_gap,
                Comparator::Ge => lon >= *lon_gap && lat.abs() >= *lat_gap,
            }
        }
        TriggerCondition::EndsByBehavior { agent, node } => {
            let owner = agent.as_deref().unwrap_or(ctx.self_id);
            ctx.completed.get(owner).is_some_and(|set| set.contains(node))
        }
        TriggerCondition::Combined { mode, conditions } => match mode {
            CombineMode::AllOf => conditions.iter().all(|c| evaluate_condition(c, ctx)),
            CombineMode::AnyOf => conditions.iter().any(|c| evaluate_condition(c, ctx)),
        },
    }
}

// ---------------------------------------------------------------------------
// Runtime
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeStatus {
    Pending,
    Active,
    Done,
}

/// Plan state of an activated leaf.
#[derive(Debug, Clone)]
struct LeafPlan {
    started_at: f64,
    lon: Option<QuarticSegment>,
    lat: Option<QuinticSegment>,
    /// Speed held once the longitudinal plan has played out.
    hold_speed_after: Option<f64>,
    /// Lateral offset held when no lateral plan exists.
    hold_d: Option<f64>,
    /// Relative completion time; `None` for open-ended leaves.
    complete_after: Option<f64>,
    lane_changing: bool,
}

#[derive(Debug, Clone)]
struct NodeRuntime {
    status: NodeStatus,
    condition_fired: bool,
    seq_child: usize,
    plan: Option<LeafPlan>,
    /// Currently selected child of a `SequentialSelection`.
    selected: Option<usize>,
}

impl NodeRuntime {
    fn fresh() -> Self {
        Self {
            status: NodeStatus::Pending,
            condition_fired: false,
            seq_child: 0,
            plan: None,
            selected: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TickResult {
    /// Condition gate has not fired yet.
    Blocked,
    Running,
    Done,
}

/// Mutable execution state of one agent's tree. The tree itself stays with
/// the caller and must be the same structure across ticks.
#[derive(Debug, Clone)]
pub struct TreeRuntime {
    nodes: BTreeMap<String, NodeRuntime>,
}

impl TreeRuntime {
    pub fn new(tree: &BehaviorTree) -> Self {
        let mut nodes = BTreeMap::new();
        for n in tree.nodes() {
            nodes.insert(n.id.clone(), NodeRuntime::fresh());
        }
        Self { nodes }
    }

    /// Ids of completed nodes, for `EndsByBehavior` bookkeeping.
    pub fn completed_nodes(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .filter(|(_, rt)| rt.status == NodeStatus::Done)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn is_complete(&self, tree: &BehaviorTree) -> bool {
        self.nodes
            .get(&tree.root.id)
            .is_some_and(|rt| rt.status == NodeStatus::Done)
    }

    /// Advances the tree by one step and returns the command applying over
    /// the next `dt` of simulated time.
    pub fn tick(&mut self, tree: &BehaviorTree, ctx: &TickContext) -> AgentCommand {
        let (_, cmd) = self.tick_node(&tree.root, ctx);
        cmd.unwrap_or_else(AgentCommand::hold)
    }

    fn reset_subtree(&mut self, node: &BehaviorNode) {
        if let Some(rt) = self.nodes.get_mut(&node.id) {
            *rt = NodeRuntime::fresh();
        }
        if let NodeKind::Composite { children, .. } = &node.kind {
            for c in children {
                self.reset_subtree(c);
            }
        }
    }

    fn mark_done(&mut self, id: &str) {
        if let Some(rt) = self.nodes.get_mut(id) {
            rt.status = NodeStatus::Done;
        }
    }

    /// Evaluates and latches a node's gate condition; true once fired.
    fn gate_fired(&mut self, node: &BehaviorNode, ctx: &TickContext) -> bool {
        let fired = self.nodes.get(&node.id).map(|rt| rt.condition_fired).unwrap_or(false);
        if fired {
            return true;
        }
        let holds = node.condition.as_ref().map_or(true, |c| evaluate_condition(c, ctx));
        if holds {
            if let Some(rt) = self.nodes.get_mut(&node.id) {
                rt.condition_fired = true;
            }
        }
        holds
    }

    fn tick_node(
        &mut self,
        node: &BehaviorNode,
        ctx: &TickContext,
    ) -> (TickResult, Option<AgentCommand>) {
        if self.nodes.get(&node.id).map(|rt| rt.status) == Some(NodeStatus::Done) {
            return (TickResult::Done, None);
        }
        if !self.gate_fired(node, ctx) {
            return (TickResult::Blocked, None);
        }
        if let Some(rt) = self.nodes.get_mut(&node.id) {
            rt.status = NodeStatus::Active;
        }

        match &node.kind {
            NodeKind::Leaf(leaf) => self.tick_leaf(node, leaf, ctx),
            NodeKind::Composite { kind, children } => match kind {
                CompositeKind::Sequence => self.tick_sequence(node, children, ctx, false),
                CompositeKind::Cyclic => self.tick_sequence(node, children, ctx, true),
                CompositeKind::Parallel => self.tick_parallel(node, children, ctx),
                CompositeKind::SequentialSelection => self.tick_selection(node, children, ctx),
            },
        }
    }

    fn tick_sequence(
        &mut self,
        node: &BehaviorNode,
        children: &[BehaviorNode],
        ctx: &TickContext,
        cyclic: bool,
    ) -> (TickResult, Option<AgentCommand>) {
        loop {
            let idx = self.nodes.get(&node.id).map(|rt| rt.seq_child).unwrap_or(0);
            if idx >= children.len() {
                if cyclic {
                    // Restart: clear every descendant and this node's cursor.
                    for c in children {
                        self.reset_subtree(c);
                    }
                    if let Some(rt) = self.nodes.get_mut(&node.id) {
                        rt.seq_child = 0;
                        rt.status = NodeStatus::Active;
                    }
                    continue;
                }
                self.mark_done(&node.id);
                return (TickResult::Done, None);
            }

            let child = &children[idx];

            // Preemption: an open-ended leaf yields as soon as the next
            // child's gate fires.
            if let NodeKind::Leaf(leaf) = &child.kind {
                if leaf.open_ended() && idx + 1 < children.len() {
                    let started = self
                        .nodes
                        .get(&child.id)
                        .map(|rt| rt.status == NodeStatus::Active)
                        .unwrap_or(false);
                    if started && self.gate_fired(&children[idx + 1], ctx) {
                        self.mark_done(&child.id);
                        if let Some(rt) = self.nodes.get_mut(&node.id) {
                            rt.seq_child = idx + 1;
                        }
                        continue;
                    }
                }
            }

            match self.tick_node(child, ctx) {
                (TickResult::Done, _) => {
                    if let Some(rt) = self.nodes.get_mut(&node.id) {
                        rt.seq_child = idx + 1;
                    }
                    // Fall through so the next child can start this tick.
                }
                (TickResult::Blocked, _) => return (TickResult::Running, None),
                (TickResult::Running, cmd) => return (TickResult::Running, cmd),
            }
        }
    }

    fn tick_parallel(
        &mut self,
        node: &BehaviorNode,
        children: &[BehaviorNode],
        ctx: &TickContext,
    ) -> (TickResult, Option<AgentCommand>) {
        let mut all_done = true;
        let mut cmd = None;
        for child in children {
            let (res, child_cmd) = self.tick_node(child, ctx);
            if res != TickResult::Done {
                all_done = false;
            }
            if cmd.is_none() {
                cmd = child_cmd;
            }
        }
        if all_done {
            self.mark_done(&node.id);
            (TickResult::Done, cmd)
        } else {
            (TickResult::Running, cmd)
        }
    }

    fn tick_selection(
        &mut self,
        node: &BehaviorNode,
        children: &[BehaviorNode],
        ctx: &TickContext,
    ) -> (TickResult, Option<AgentCommand>) {
        // Level-triggered selection: first child whose condition holds right
        // now (unconditioned children always qualify).
        let pick = children.iter().position(|c| {
            c.condition.as_ref().map_or(true, |cond| evaluate_condition(cond, ctx))
        });

        let prev = self.nodes.get(&node.id).and_then(|rt| rt.selected);
        if let (Some(p), Some(new)) = (prev, pick) {
            if p != new {
                self.reset_subtree(&children[p]);
            }
        }
        if let Some(rt) = self.nodes.get_mut(&node.id) {
            rt.selected = pick;
        }

        let Some(idx) = pick else {
            return (TickResult::Running, None);
        };
        // The chosen child's own gate already holds; tick it directly.
        match self.tick_node(&children[idx], ctx) {
            (TickResult::Done, cmd) => {
                self.mark_done(&node.id);
                (TickResult::Done, cmd)
            }
            (_, cmd) => (TickResult::Running, cmd),
        }
    }

    // -- leaves ------------------------------------------------------------

    fn tick_leaf(
        &mut self,
        node: &BehaviorNode,
        leaf: &LeafBehavior,
        ctx: &TickContext,
    ) -> (TickResult, Option<AgentCommand>) {
        if self.nodes.get(&node.id).and_then(|rt| rt.plan.as_ref()).is_none() {
            let plan = self.activate_leaf(leaf, ctx);
            if let Some(rt) = self.nodes.get_mut(&node.id) {
                rt.plan = Some(plan);
            }
        }

        // Tracking runs as a feedback law instead of a plan playback.
        if let LeafBehavior::Track { target, gap } = leaf {
            let cmd = self.track_command(target, *gap, ctx);
            return (TickResult::Running, Some(cmd));
        }

        let plan = self.nodes.get(&node.id).and_then(|rt| rt.plan.clone()).unwrap();
        let tau_now = ctx.world.time - plan.started_at;
        if let Some(end) = plan.complete_after {
            if tau_now >= end - 1e-9 {
                self.mark_done(&node.id);
                return (TickResult::Done, None);
            }
        }

        let tau = tau_now + ctx.dt;
        let lon = match &plan.lon {
            Some(q) => {
                if tau <= q.duration {
                    LonCommand::State { s: q.value(tau), s_dot: q.first(tau), s_ddot: q.second(tau) }
                } else {
                    // Past the plan: extend at the held speed.
                    let v = plan.hold_speed_after.unwrap_or_else(|| q.first(q.duration));
                    LonCommand::State {
                        s: q.value(q.duration) + v * (tau - q.duration),
                        s_dot: v,
                        s_ddot: 0.0,
                    }
                }
            }
            None => LonCommand::Accel(0.0),
        };
        let lat = match &plan.lat {
            Some(q) => {
                if tau <= q.duration {
                    LatCommand::State { d: q.value(tau), d_dot: q.first(tau), d_ddot: q.second(tau) }
                } else {
                    LatCommand::State { d: q.value(q.duration), d_dot: 0.0, d_ddot: 0.0 }
                }
            }
            None => match plan.hold_d {
                Some(d) => LatCommand::State { d, d_dot: 0.0, d_ddot: 0.0 },
                None => LatCommand::Hold,
            },
        };
        (
            TickResult::Running,
            Some(AgentCommand { lon, lat, lane_changing: plan.lane_changing }),
        )
    }

    fn activate_leaf(&self, leaf: &LeafBehavior, ctx: &TickContext) -> LeafPlan {
        let me = ctx.world.agent(ctx.self_id).expect("ticked agent exists in world");
        let now = ctx.world.time;
        let mk = |lon, lat, hold_speed, hold_d, end, lane_changing| LeafPlan {
            started_at: now,
            lon,
            lat,
            hold_speed_after: hold_speed,
            hold_d,
            complete_after: end,
            lane_changing,
        };

        match leaf {
            LeafBehavior::Track { .. } => mk(None, None, None, Some(me.d), None, false),
            LeafBehavior::Cruise { speed, duration } => {
                let mut ramp = ((speed - me.s_dot).abs() / CRUISE_RAMP_ACCEL).clamp(0.5, 6.0);
                if let Some(d) = duration {
                    ramp = ramp.min(*d);
                }
                let lon = QuarticSegment::velocity_keeping(
                    me.s, me.s_dot, me.s_ddot, *speed, 0.0, ramp,
                )
                .ok();
                mk(lon, None, Some(*speed), Some(me.d), *duration, false)
            }
            LeafBehavior::ChangeLane { direction, duration, lateral_offset, end_speed } => {
                let delta = match direction {
                    LaneChangeDirection::Left => *lateral_offset,
                    LaneChangeDirection::Right => -*lateral_offset,
                };
                let lat = QuinticSegment::boundary(
                    me.d,
                    me.d_dot,
                    me.d_ddot,
                    me.d + delta,
                    0.0,
                    0.0,
                    *duration,
                )
                .ok();
                let lon = QuarticSegment::velocity_keeping(
                    me.s, me.s_dot, me.s_ddot, *end_speed, 0.0, *duration,
                )
                .ok();
                mk(lon, lat, Some(*end_speed), None, Some(*duration), true)
            }
            LeafBehavior::FollowLog { duration, end } => {
                let current = FrenetState {
                    t: 0.0,
                    s: me.s,
                    s_dot: me.s_dot,
                    s_ddot: me.s_ddot,
                    d: me.d,
                    d_dot: me.d_dot,
                    d_ddot: me.d_ddot,
                };
                let target = FrenetState { t: *duration, ..*end };
                let seg = plan_segment(&current, &target).ok();
                mk(
                    seg.map(|s| s.lon),
                    seg.map(|s| s.lat),
                    Some(end.s_dot),
                    None,
                    Some(*duration),
                    (end.d - me.d).abs() > 1.0,
                )
            }
            LeafBehavior::MergeIn { target_lane, duration }
            | LeafBehavior::MergeOut { target_lane, duration } => {
                // Offset to the target lane centerline, expressed in the
                // current lane frame (locally parallel lanes).
                let delta = ctx
                    .map
                    .lateral_to_lane_center(target_lane, me.pos)
                    .unwrap_or(0.0);
                let lat = QuinticSegment::boundary(
                    me.d,
                    me.d_dot,
                    me.d_ddot,
                    me.d + delta,
                    0.0,
                    0.0,
                    *duration,
                )
                .ok();
                let lon = QuarticSegment::velocity_keeping(
                    me.s, me.s_dot, me.s_ddot, me.s_dot, 0.0, *duration,
                )
                .ok();
                mk(lon, lat, Some(me.s_dot), None, Some(*duration), true)
            }
        }
    }

    fn track_command(&self, target: &str, gap: f64, ctx: &TickContext) -> AgentCommand {
        let me = ctx.world.agent(ctx.self_id).expect("ticked agent exists in world");
        let hold_lat = LatCommand::State { d: me.d, d_dot: 0.0, d_ddot: 0.0 };
        let Some(tgt) = ctx.world.agent(target) else {
            return AgentCommand { lon: LonCommand::Accel(0.0), lat: hold_lat, lane_changing: false };
        };
        // Compare arc lengths in this agent's lane frame so tracking works
        // across adjacent lanes.
        let Some((lon_offset, _)) = ctx.map.relative_in_lane_frame(&me.lane, me.pos, tgt.pos)
        else {
            return AgentCommand { lon: LonCommand::Accel(0.0), lat: hold_lat, lane_changing: false };
        };
        let bumpers = (me.length + tgt.length) / 2.0;
        let desired = if gap >= 0.0 {
            gap + bumpers
        } else {
            -((-gap).max(2.0).max(1.2 * me.s_dot) + bumpers)
        };
        let accel = (TRACK_KP * (desired - lon_offset) + TRACK_KV * (tgt.s_dot - me.s_dot))
            .clamp(TRACK_ACCEL_MIN, TRACK_ACCEL_MAX);
        AgentCommand { lon: LonCommand::Accel(accel), lat: hold_lat, lane_changing: false }
    }
}

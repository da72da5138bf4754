//! Scenario models.
//!
//! A *concrete* scenario fully specifies a run: map, ego setup, and
//! behavior-tree-driven agents with every parameter fixed. A *logical*
//! scenario keeps the same skeleton but declares variables over parameter
//! ranges; sampling a point in the unit cube and binding it yields a
//! concrete scenario. Relative variables derive their value from another
//! variable through a transform instead of adding a search dimension.
//!
//! Serialization is canonical: serializing the same bound scenario twice
//! yields byte-identical JSON, which report tooling relies on.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::bt::{
    BehaviorNode, BehaviorTree, LeafBehavior, NodeKind, TriggerCondition, ValidationScope,
};
use crate::sim::{LaneMap, MapSpec, EGO_ID};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("expected {expected} sample values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample coordinate {0} outside [0, 1]")]
    BadSample(f64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("variable targets node `{node}` with incompatible parameter `{param:?}`")]
    IncompatibleTarget { node: String, param: NodeParam },
    #[error("invalid domain: {0}")]
    BadDomain(String),
}

// ---------------------------------------------------------------------------
// Concrete scenarios
// ---------------------------------------------------------------------------

fn default_length() -> f64 {
    4.6
}
fn default_width() -> f64 {
    1.8
}

/// System-under-test setup. The ego has no behavior tree: it follows the
/// built-in lane-keeping speed controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoConfig {
    pub lane: String,
    pub s: f64,
    #[serde(default)]
    pub d: f64,
    pub speed: f64,
    /// Desired cruise speed of the controller.
    pub set_speed: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub id: String,
    pub lane: String,
    pub s: f64,
    #[serde(default)]
    pub d: f64,
    pub speed: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    pub tree: BehaviorTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteScenario {
    pub name: String,
    pub map: MapSpec,
    pub ego: EgoConfig,
    pub agents: Vec<AgentConfig>,
    pub dt: f64,
    pub horizon: f64,
}

impl ConcreteScenario {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Compact, field-order-stable JSON; identical inputs serialize to
    /// identical bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// Structural diagnostics across map, initial states, and agent trees.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let map = match LaneMap::from_spec(&self.map) {
            Ok(m) => m,
            Err(e) => {
                diags.push(format!("map: {e}"));
                return diags;
            }
        };
        if self.dt <= 0.0 || !self.dt.is_finite() {
            diags.push("step size must be positive".into());
        }
        if self.horizon < self.dt {
            diags.push("horizon shorter than one step".into());
        }
        let mut scope = ValidationScope {
            agent_ids: self.agents.iter().map(|a| a.id.clone()).collect(),
            lane_ids: map.lane_ids(),
        };
        scope.agent_ids.insert(EGO_ID.to_string());

        let mut check_start = |who: &str, lane: &str, s: f64, speed: f64| {
            match map.lane(lane) {
                None => diags.push(format!("{who}: unknown lane `{lane}`")),
                Some(l) if !(0.0..=l.path.len()).contains(&s) => {
                    diags.push(format!("{who}: start s={s} outside lane `{lane}`"))
                }
                _ => {}
            }
            if speed < 0.0 {
                diags.push(format!("{who}: negative speed"));
            }
        };
        check_start(EGO_ID, &self.ego.lane, self.ego.s, self.ego.speed);
        for a in &self.agents {
            check_start(&a.id, &a.lane, a.s, a.speed);
        }
        drop(check_start);
        for a in &self.agents {
            if a.id == EGO_ID {
                diags.push(format!("agent id `{EGO_ID}` is reserved"));
            }
            for d in a.tree.validate(&scope) {
                diags.push(format!("agent `{}` tree: {d}", a.id));
            }
        }
        diags
    }
}

// ---------------------------------------------------------------------------
// Variables
// ---------------------------------------------------------------------------

/// Behavior-tree parameter a variable can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeParam {
    /// `Track` gap.
    Gap,
    /// Maneuver duration (`ChangeLane`, timed `Cruise`, merges).
    Duration,
    /// `ChangeLane` lateral offset.
    LateralOffset,
    /// `ChangeLane` end speed.
    EndSpeed,
    /// `Cruise` target speed.
    Speed,
    /// Distance-condition threshold on the node.
    Threshold,
    /// Relative-position-condition gaps on the node.
    LonGap,
    LatGap,
    /// Time-condition instant on the node.
    At,
}

/// Initial-state field a variable can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitField {
    S,
    D,
    Speed,
    SetSpeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableTarget {
    NodeParam { agent: String, node: String, param: NodeParam },
    AgentInit { agent: String, field: InitField },
    EgoInit { field: InitField },
}

/// Sampling domain of a free variable, drawn through the inverse CDF so the
/// search operates on the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Uniform { min: f64, max: f64 },
    /// Normal distribution truncated to `[min, max]`.
    Normal { mean: f64, std_dev: f64, min: f64, max: f64 },
    /// Finite set of values; the unit interval is split into equal buckets
    /// and boundary draws fall into the lower bucket.
    Discrete { choices: Vec<f64> },
}

impl Domain {
    pub fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::BadDomain(m));
        match self {
            Domain::Uniform { min, max } => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return bad(format!("uniform bounds [{min}, {max}]"));
                }
            }
            Domain::Normal { mean, std_dev, min, max } => {
                if !(mean.is_finite() && *std_dev > 0.0 && min.is_finite() && max.is_finite()) {
                    return bad(format!("normal({mean}, {std_dev}) on [{min}, {max}]"));
                }
                if min >= max {
                    return bad(format!("normal bounds [{min}, {max}]"));
                }
            }
            Domain::Discrete { choices } => {
                if choices.is_empty() || choices.iter().any(|c| !c.is_finite()) {
                    return bad("discrete domain needs finite, non-empty choices".into());
                }
            }
        }
        Ok(())
    }

    /// Inverse-CDF draw for `u` in `[0, 1]`.
    pub fn sample(&self, u: f64) -> Result<f64, ScenarioError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(ScenarioError::BadSample(u));
        }
        Ok(match self {
            Domain::Uniform { min, max } => min + u * (max - min),
            Domain::Normal { mean, std_dev, min, max } => {
                let n = Normal::new(*mean, *std_dev)
                    .map_err(|e| ScenarioError::BadDomain(e.to_string()))?;
                let (lo, hi) = (n.cdf(*min), n.cdf(*max));
                let p = lo + u * (hi - lo);
                if p <= 0.0 {
                    *min
                } else if p >= 1.0 {
                    *max
                } else {
                    n.inverse_cdf(p).clamp(*min, *max)
                }
            }
            Domain::Discrete { choices } => {
                let k = choices.len() as f64;
                let idx = if u <= 0.0 { 0 } else { (u * k).ceil() as usize - 1 };
                choices[idx.min(choices.len() - 1)]
            }
        })
    }

    /// Value bounds, used to rescale optimizer coordinates.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Domain::Uniform { min, max } | Domain::Normal { min, max, .. } => (*min, *max),
            Domain::Discrete { choices } => {
                let lo = choices.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = choices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub target: VariableTarget,
    pub domain: Domain,
}

/// Value derived from another variable; contributes no search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeVariable {
    pub name: String,
    /// Name of a free variable or an earlier relative variable.
    pub base: String,
    #[serde(default)]
    pub transform: Transform,
    pub target: VariableTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    Affine { scale: f64, offset: f64 },
    Clamp { min: f64, max: f64 },
    Chain { steps: Vec<Transform> },
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Affine { scale, offset } => scale * x + offset,
            Transform::Clamp { min, max } => x.clamp(*min, *max),
            Transform::Chain { steps } => steps.iter().fold(x, |v, t| t.apply(v)),
        }
    }
}

// ---------------------------------------------------------------------------
// Logical scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalScenario {
    pub name: String,
    pub map: MapSpec,
    pub ego: EgoConfig,
    pub agents: Vec<AgentConfig>,
    pub dt: f64,
    pub horizon: f64,
    pub variables: Vec<Variable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relative: Vec<RelativeVariable>,
}

impl LogicalScenario {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// Number of free search dimensions (relative variables add none).
    pub fn effective_dimension(&self) -> usize {
        self.variables.len()
    }

    /// Per-dimension value bounds in variable declaration order.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.variables.iter().map(|v| v.domain.bounds()).collect()
    }

    /// Maps a unit-cube point to concrete values of the free variables.
    pub fn sample(&self, unit: &[f64]) -> Result<Vec<f64>, ScenarioError> {
        if unit.len() != self.variables.len() {
            return Err(ScenarioError::DimensionMismatch {
                expected: self.variables.len(),
                got: unit.len(),
            });
        }
        self.variables
            .iter()
            .zip(unit)
            .map(|(v, u)| v.domain.sample(*u))
            .collect()
    }

    /// Builds the concrete scenario for one assignment of the free
    /// variables (declaration order), resolving relative variables along
    /// the way.
    pub fn bind(&self, values: &[f64]) -> Result<ConcreteScenario, ScenarioError> {
        if values.len() != self.variables.len() {
            return Err(ScenarioError::DimensionMismatch {
                expected: self.variables.len(),
                got: values.len(),
            });
        }
        let mut scn = ConcreteScenario {
            name: self.name.clone(),
            map: self.map.clone(),
            ego: self.ego.clone(),
            agents: self.agents.clone(),
            dt: self.dt,
            horizon: self.horizon,
        };

        let mut resolved: Vec<(String, f64)> = Vec::new();
        for (var, value) in self.variables.iter().zip(values) {
            apply_target(&mut scn, &var.target, *value)?;
            resolved.push((var.name.clone(), *value));
        }
        for rel in &self.relative {
            let base = resolved
                .iter()
                .find(|(n, _)| n == &rel.base)
                .map(|(_, v)| *v)
                .ok_or_else(|| ScenarioError::UnknownVariable(rel.base.clone()))?;
            let value = rel.transform.apply(base);
            apply_target(&mut scn, &rel.target, value)?;
            resolved.push((rel.name.clone(), value));
        }
        Ok(scn)
    }

    /// Diagnostics over domains, variable wiring, and the underlying
    /// concrete structure (using domain lower bounds as a probe binding).
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let mut names = std::collections::BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.clone()) {
                diags.push(format!("duplicate variable name `{}`", v.name));
            }
            if let Err(e) = v.domain.check() {
                diags.push(format!("variable `{}`: {e}", v.name));
            }
        }
        for r in &self.relative {
            if !names.contains(&r.base) {
                diags.push(format!(
                    "relative variable `{}` references `{}` before it is defined",
                    r.name, r.base
                ));
            }
            if !names.insert(r.name.clone()) {
                diags.push(format!("duplicate variable name `{}`", r.name));
            }
        }
        // Probe-bind at the lower bounds to catch unresolvable targets.
        let probe: Result<Vec<f64>, _> =
            self.variables.iter().map(|v| v.domain.sample(0.0)).collect();
        match probe.and_then(|vals| self.bind(&vals)) {
            Ok(concrete) => diags.extend(concrete.validate()),
            Err(e) => diags.push(e.to_string()),
        }
        diags
    }
}

fn find_node_mut<'a>(node: &'a mut BehaviorNode, id: &str) -> Option<&'a mut BehaviorNode> {
    if node.id == id {
        return Some(node);
    }
    if let NodeKind::Composite { children, .. } = &mut node.kind {
        for c in children {
            if let Some(found) = find_node_mut(c, id) {
                return Some(found);
            }
        }
    }
    None
}

fn apply_target(
    scn: &mut ConcreteScenario,
    target: &VariableTarget,
    value: f64,
) -> Result<(), ScenarioError> {
    match target {
        VariableTarget::EgoInit { field } => {
            match field {
                InitField::S => scn.ego.s = value,
                InitField::D => scn.ego.d = value,
                InitField::Speed => scn.ego.speed = value,
                InitField::SetSpeed => scn.ego.set_speed = value,
            }
            Ok(())
        }
        VariableTarget::AgentInit { agent, field } => {
            let a = scn
                .agents
                .iter_mut()
                .find(|a| &a.id == agent)
                .ok_or_else(|| ScenarioError::UnknownAgent(agent.clone()))?;
            match field {
                InitField::S => a.s = value,
                InitField::D => a.d = value,
                InitField::Speed => a.speed = value,
                InitField::SetSpeed => {
                    return Err(ScenarioError::IncompatibleTarget {
                        node: agent.clone(),
                        param: NodeParam::Speed,
                    })
                }
            }
            Ok(())
        }
        VariableTarget::NodeParam { agent, node, param } => {
            let a = scn
                .agents
                .iter_mut()
                .find(|a| &a.id == agent)
                .ok_or_else(|| ScenarioError::UnknownAgent(agent.clone()))?;
            let n = find_node_mut(&mut a.tree.root, node)
                .ok_or_else(|| ScenarioError::UnknownNode(node.clone()))?;
            let incompatible = || ScenarioError::IncompatibleTarget {
                node: node.clone(),
                param: *param,
            };
            match param {
                NodeParam::Threshold => match &mut n.condition {
                    Some(TriggerCondition::Distance { threshold, .. }) => *threshold = value,
                    _ => return Err(incompatible()),
                },
                NodeParam::LonGap => match &mut n.condition {
                    Some(TriggerCondition::RelativePosition { lon_gap, .. }) => *lon_gap = value,
                    _ => return Err(incompatible()),
                },
                NodeParam::LatGap => match &mut n.condition {
                    Some(TriggerCondition::RelativePosition { lat_gap, .. }) => *lat_gap = value,
                    _ => return Err(incompatible()),
                },
                NodeParam::At => match &mut n.condition {
                    Some(TriggerCondition::Time { at }) => *at = value,
                    _ => return Err(incompatible()),
                },
                _ => {
                    let NodeKind::Leaf(leaf) = &mut n.kind else {
                        return Err(incompatible());
                    };
                    match (param, leaf) {
                        (NodeParam::Gap, LeafBehavior::Track { gap, .. }) => *gap = value,
                        (NodeParam::Duration, LeafBehavior::ChangeLane { duration, .. })
                        | (NodeParam::Duration, LeafBehavior::MergeIn { duration, .. })
                        | (NodeParam::Duration, LeafBehavior::MergeOut { duration, .. }) => {
                            *duration = value
                        }
                        (NodeParam::Duration, LeafBehavior::Cruise { duration, .. }) => {
                            *duration = Some(value)
                        }
                        (
                            NodeParam::LateralOffset,
                            LeafBehavior::ChangeLane { lateral_offset, .. },
                        ) => *lateral_offset = value,
                        (NodeParam::EndSpeed, LeafBehavior::ChangeLane { end_speed, .. }) => {
                            *end_speed = value
                        }
                        (NodeParam::Speed, LeafBehavior::Cruise { speed, .. }) => *speed = value,
                        _ => return Err(incompatible()),
                    }
                }
            }
            Ok(())
        }
    }
}

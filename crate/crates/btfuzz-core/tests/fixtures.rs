//! Keeps the shipped files under `scenarios/` in lockstep with the library.
//!
//! Each fixture is constructed programmatically here; the tests assert that
//! the checked-in JSON parses back to exactly that value and that canonical
//! serialization is byte-stable. Regenerate the files after an intentional
//! change with `BLESS=1 cargo test -p btfuzz-core --test fixtures`.

use std::fs;
use std::path::PathBuf;

use btfuzz_core::bt::{
    BehaviorNode, BehaviorTree, Comparator, ConditionTarget, LaneChangeDirection, LeafBehavior,
    TriggerCondition,
};
use btfuzz_core::fuzzing::CampaignConfig;
use btfuzz_core::geom::Vec2;
use btfuzz_core::scenario::{
    AgentConfig, Domain, EgoConfig, InitField, LogicalScenario, Variable, VariableTarget,
};
use btfuzz_core::sim::{LaneSpec, MapSpec, ObstacleSpec};

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Straight two-lane road with a construction site blocking the left lane.
pub fn two_lane_map() -> MapSpec {
    MapSpec {
        lanes: vec![
            LaneSpec {
                id: "l0".into(),
                points: vec![Vec2::new(0.0, 0.0), Vec2::new(900.0, 0.0)],
                width: 3.5,
                left: Some("l1".into()),
                right: None,
            },
            LaneSpec {
                id: "l1".into(),
                points: vec![Vec2::new(0.0, 3.5), Vec2::new(900.0, 3.5)],
                width: 3.5,
                left: None,
                right: Some("l0".into()),
            },
        ],
        obstacles: vec![ObstacleSpec {
            id: "construction".into(),
            polygon: vec![
                Vec2::new(280.0, 2.0),
                Vec2::new(292.0, 2.0),
                Vec2::new(292.0, 5.0),
                Vec2::new(280.0, 5.0),
            ],
        }],
    }
}

/// Construction-zone cut-in: the challenger `a1` cruises on the left lane
/// ahead of the ego and must merge right before the blocked stretch.
///
/// Free variables (declaration order):
/// * `s1` — distance to the merge signpost at which `a1` starts its lane
///   change, in `[3, 20]` m; small values mean a late, rushed merge.
/// * `s2` — initial longitudinal gap between ego and `a1`, in `[10, 60]` m.
/// * `v`  — `a1`'s speed after the lane change, in `[18, 30]` m/s.
/// * `t`  — lane-change duration, in `[2, 6]` s.
pub fn example1() -> LogicalScenario {
    let tree = BehaviorTree::sequence(vec![
        BehaviorNode::leaf("approach", LeafBehavior::Cruise { speed: 25.0, duration: None }),
        BehaviorNode::leaf(
            "cut_in",
            LeafBehavior::ChangeLane {
                direction: LaneChangeDirection::Right,
                duration: 4.0,
                lateral_offset: 3.5,
                end_speed: 24.0,
            },
        )
        .with_condition(TriggerCondition::Distance {
            to: ConditionTarget::Point(Vec2::new(230.0, 3.5)),
            cmp: Comparator::Le,
            threshold: 10.0,
        }),
    ]);
    LogicalScenario {
        name: "construction_cut_in".into(),
        map: two_lane_map(),
        ego: EgoConfig {
            lane: "l0".into(),
            s: 0.0,
            d: 0.0,
            speed: 25.0,
            set_speed: 25.0,
            length: 4.6,
            width: 1.8,
        },
        agents: vec![AgentConfig {
            id: "a1".into(),
            lane: "l1".into(),
            s: 25.0,
            d: 0.0,
            speed: 25.0,
            length: 4.6,
            width: 1.8,
            tree,
        }],
        dt: 0.1,
        horizon: 20.0,
        variables: vec![
            Variable {
                name: "s1".into(),
                target: VariableTarget::NodeParam {
                    agent: "a1".into(),
                    node: "cut_in".into(),
                    param: btfuzz_core::scenario::NodeParam::Threshold,
                },
                domain: Domain::Uniform { min: 3.0, max: 20.0 },
            },
            Variable {
                name: "s2".into(),
                target: VariableTarget::AgentInit { agent: "a1".into(), field: InitField::S },
                domain: Domain::Uniform { min: 10.0, max: 60.0 },
            },
            Variable {
                name: "v".into(),
                target: VariableTarget::NodeParam {
                    agent: "a1".into(),
                    node: "cut_in".into(),
                    param: btfuzz_core::scenario::NodeParam::EndSpeed,
                },
                domain: Domain::Uniform { min: 18.0, max: 30.0 },
            },
            Variable {
                name: "t".into(),
                target: VariableTarget::NodeParam {
                    agent: "a1".into(),
                    node: "cut_in".into(),
                    param: btfuzz_core::scenario::NodeParam::Duration,
                },
                domain: Domain::Uniform { min: 2.0, max: 6.0 },
            },
        ],
        relative: vec![],
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("fixture serializes");
    s.push('\n');
    s
}

fn check_or_bless(file: &str, contents: &str) {
    let path = scenarios_dir().join(file);
    if std::env::var_os("BLESS").is_some() {
        fs::create_dir_all(scenarios_dir()).expect("scenarios dir");
        fs::write(&path, contents).expect("write fixture");
        return;
    }
    let on_disk = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing fixture {}: {e}", path.display()));
    assert_eq!(
        on_disk, contents,
        "{file} is out of date; regenerate with BLESS=1 cargo test -p btfuzz-core --test fixtures"
    );
}

#[test]
fn shipped_map_matches_the_generator() {
    check_or_bless("map_two_lane.json", &pretty(&two_lane_map()));
}

#[test]
fn shipped_example1_matches_the_generator() {
    check_or_bless("example1.json", &pretty(&example1()));
}

#[test]
fn shipped_campaign_config_is_the_default() {
    check_or_bless("campaign_default.json", &pretty(&CampaignConfig::default()));
}

#[test]
fn example1_is_valid_and_binds_cleanly() {
    let logical = example1();
    assert!(logical.validate().is_empty(), "{:?}", logical.validate());
    assert_eq!(logical.effective_dimension(), 4);

    // Lower corner of every domain.
    let concrete = logical.bind(&[3.0, 10.0, 18.0, 2.0]).unwrap();
    assert!(concrete.validate().is_empty(), "{:?}", concrete.validate());
    assert_eq!(concrete.agents[0].s, 10.0);

    let canonical = logical.to_canonical_json();
    let reparsed = LogicalScenario::from_json(&canonical).unwrap();
    assert_eq!(reparsed.to_canonical_json(), canonical, "canonical form is a fixed point");
}

#[test]
fn shipped_example1_round_trips_byte_stably() {
    let path = scenarios_dir().join("example1.json");
    if !path.exists() {
        return; // first bless run creates it
    }
    let text = fs::read_to_string(&path).unwrap();
    let parsed = LogicalScenario::from_json(&text).unwrap();
    assert_eq!(parsed, example1());
    let canonical = parsed.to_canonical_json();
    assert_eq!(LogicalScenario::from_json(&canonical).unwrap().to_canonical_json(), canonical);
}

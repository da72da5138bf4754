//! Scenario-based safety testing for autonomous-driving stacks.
//!
//! The crate covers the full loop from recorded traffic to analyzed fuzzing
//! campaigns:
//!
//! * [`frenet`] — path-relative (arc length / lateral offset) kinematics and
//!   polynomial segment planning used everywhere else.
//! * [`log2bt`] — abstraction of logged trajectories into behavior trees:
//!   greedy partitioning into characteristic states, semantic labeling,
//!   reconstruction checks, and generalization into logical scenarios.
//! * [`bt`] — the behavior-tree dialect itself (composites, leaf maneuvers,
//!   trigger conditions) plus the runtime that turns a tree into per-step
//!   agent commands.
//! * [`scenario`] — logical scenarios with variable domains, derived
//!   variables, unit-hypercube sampling, and binding to concrete scenarios.
//! * [`sim`] — a deterministic fixed-step lane-graph simulator with a
//!   baseline ego controller and safety-event detection.
//! * [`eval`] — metric verdicts, participant scoring, responsibility
//!   attribution, and the campaign fitness function.
//! * [`fuzzing`] — search over the scenario parameter space: adaptive random
//!   seeding, Bayesian optimization, a genetic algorithm, grid enumeration,
//!   and the campaign driver with its result ledger.
//! * [`analyzer`] — post-campaign metrics, clustering of critical scenarios,
//!   variable correlation, and report rendering.
//!
//! Everything is deterministic under a fixed seed: no wall-clock time, no
//! ambient randomness, and stable serialization ordering throughout.

pub mod analyzer;
pub mod bt;
pub mod eval;
pub mod frenet;
pub mod fuzzing;
pub mod geom;
pub mod log2bt;
pub mod plot;
pub mod scenario;
pub mod sim;

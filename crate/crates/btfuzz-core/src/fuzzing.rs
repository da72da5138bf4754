//! Adaptive search over a logical scenario's parameter space.
//!
//! The search lives in the unit cube; scenario domains map unit
//! coordinates to parameter values through their inverse CDFs. Three
//! strategies are available:
//!
//! - **Bayesian**: dispersion seeding, then sequential proposals
//!   maximizing expected improvement under a Gaussian-process surrogate;
//!   falls back to pure dispersion whenever the surrogate degenerates or
//!   sees no improvement anywhere.
//! - **Genetic**: dispersion-seeded population evolved by fitness-
//!   proportionate selection, uniform crossover, per-coordinate mutation,
//!   and one-elite survival.
//! - **Grid**: a shuffled 5-steps-per-axis lattice, for baselines.
//!
//! Campaign results stream into a newline-delimited JSON ledger that is
//! byte-identical for a given seed regardless of worker count: evaluation
//! batches collect in submission order and nothing derived from wall
//! clocks or thread interleaving is recorded.

pub mod gp;

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, FitnessParams, Verdict};
use crate::scenario::LogicalScenario;
use crate::sim;
use gp::Gp;

/// Fitness recorded for evaluations that never produced a verdict
/// (unbindable parameters or a failed simulation).
pub const INVALID_FITNESS: f64 = -1.0e6;

/// Candidate pool size of the greedy max-min dispersion sampler.
const DISPERSION_POOL: usize = 256;
/// Seed counts per dimension.
const BAYESIAN_SEED_FACTOR: usize = 20;
const GENETIC_POPULATION_FACTOR: usize = 10;
const GENETIC_POPULATION_MIN: usize = 8;
/// The surrogate trains on at most this many of the most recent points.
const GP_TRAINING_CAP: usize = 160;
/// Multi-start count of the acquisition optimizer.
const ACQUISITION_STARTS: usize = 64;
/// Probe budget of one pattern-search descent.
const PATTERN_PROBES: usize = 400;
/// Lattice resolution per axis of the grid strategy.
const GRID_STEPS: usize = 5;
/// Grid evaluations per parallel batch (fixed, so ledgers do not depend on
/// the worker count).
const GRID_BATCH: usize = 32;
/// Above this lattice size the grid strategy samples cells at random
/// instead of materializing and shuffling every combination.
const GRID_LATTICE_CAP: usize = 100_000;

pub const DEFAULT_PATIENCE: usize = 50;
pub const DEFAULT_EXPLORATION: f64 = 5.0;
/// Below this many free variables the surrogate strategy is chosen.
pub const DEFAULT_DIMENSION_SWITCH: usize = 10;
/// Probability that each child coordinate is redrawn uniformly.
pub const DEFAULT_MUTATION_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bayesian,
    Genetic,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    /// No progress (a fresh critical result) for `patience` consecutive
    /// evaluations after seeding.
    Patience,
    /// Every lattice cell was evaluated.
    GridExhausted,
}

/// Surrogate-based search pays off in low dimension; above the switch the
/// population strategy scales better.
pub fn choose_algorithm(dimension: usize) -> Algorithm {
    choose_algorithm_with(dimension, DEFAULT_DIMENSION_SWITCH)
}

/// Strict inequality: exactly at the switch the population strategy wins.
pub fn choose_algorithm_with(dimension: usize, switch: usize) -> Algorithm {
    if dimension < switch {
        Algorithm::Bayesian
    } else {
        Algorithm::Genetic
    }
}

#[derive(Debug, Error)]
pub enum FuzzError {
    #[error("scenario invalid: {0}")]
    InvalidScenario(String),
    #[error("bad campaign config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("ledger line {line}: {message}")]
    Ledger { line: usize, message: String },
}

// ---------------------------------------------------------------------------
// Generic search in the unit cube
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SearchPoint<T> {
    pub unit: Vec<f64>,
    pub fitness: f64,
    pub payload: T,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<T> {
    pub points: Vec<SearchPoint<T>>,
    /// Index of the best point, ties going to the earliest.
    pub best: Option<usize>,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub dimension: usize,
    pub algorithm: Algorithm,
    /// Total evaluation budget, seeding included.
    pub budget: usize,
    /// Consecutive evaluations without progress (after seeding) before
    /// giving up; 0 disables.
    pub patience: usize,
    /// Expected-improvement margin, in fitness units.
    pub exploration: f64,
    /// Per-coordinate uniform-redraw probability of the genetic strategy.
    pub mutation_rate: f64,
    pub seed: u64,
}

struct Tracker {
    patience: usize,
    best: Option<(usize, f64)>,
    since_progress: usize,
    crossed: bool,
}

impl Tracker {
    fn new(patience: usize) -> Self {
        Self { patience, best: None, since_progress: 0, crossed: false }
    }

    /// Best-so-far always updates on strict improvement; the patience
    /// counter only resets when the caller flags the point as progress
    /// (for campaigns, a fresh critical result).
    fn observe(&mut self, index: usize, fitness: f64, counts_toward_patience: bool, progress: bool) {
        if self.best.map_or(true, |(_, b)| fitness > b) {
            self.best = Some((index, fitness));
        }
        if progress {
            self.since_progress = 0;
        } else if counts_toward_patience {
            self.since_progress += 1;
            if self.patience > 0 && self.since_progress >= self.patience {
                self.crossed = true;
            }
        }
    }
}

fn uniform_point(dimension: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dimension).map(|_| rng.gen::<f64>()).collect()
}

fn min_sq_dist(p: &[f64], existing: &[Vec<f64>]) -> f64 {
    existing
        .iter()
        .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Next dispersion point: of a fresh candidate pool, the one farthest from
/// everything already chosen.
fn dispersion_next(existing: &[Vec<f64>], dimension: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if existing.is_empty() {
        return uniform_point(dimension, rng);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..DISPERSION_POOL {
        let cand = uniform_point(dimension, rng);
        let d = min_sq_dist(&cand, existing);
        if best.as_ref().map_or(true, |(bd, _)| d > *bd) {
            best = Some((d, cand));
        }
    }
    best.unwrap().1
}

/// Greedy max-min space-filling sample of the unit cube.
pub fn dispersion_seeds(dimension: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let next = dispersion_next(&chosen, dimension, rng);
        chosen.push(next);
    }
    chosen
}

fn evaluate_batch<T, F>(units: &[Vec<f64>], objective: &F) -> Vec<(f64, T)>
where
    F: Fn(&[f64]) -> (f64, T) + Sync,
    T: Send,
{
    units.par_iter().map(|u| objective(u)).collect()
}

/// Derivative-free ascent: probe +/- step along each axis, move on
/// improvement, halve the step otherwise.
fn pattern_search<F: Fn(&[f64]) -> f64>(f: &F, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = f(&x);
    let mut step = 0.25;
    let mut probes = 0usize;
    while step >= 1.0 / 512.0 && probes < PATTERN_PROBES {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let cand_coord = (x[i] + dir * step).clamp(0.0, 1.0);
                if cand_coord == x[i] {
                    continue;
                }
                let mut cand = x.clone();
                cand[i] = cand_coord;
                let fc = f(&cand);
                probes += 1;
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (x, fx)
}

/// Caps the invalid-run sentinel just below the worst valid fitness so it
/// stays clearly worst without stretching the surrogate's output scale by
/// six orders of magnitude.
fn winsorize(ys: &[f64]) -> Vec<f64> {
    let valid: Vec<f64> = ys.iter().copied().filter(|y| *y > INVALID_FITNESS + 1.0).collect();
    if valid.is_empty() {
        return ys.to_vec();
    }
    let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = lo - (hi - lo).max(1.0);
    ys.iter().map(|y| y.max(floor)).collect()
}

fn propose_bayesian<T>(
    points: &[SearchPoint<T>],
    exploration: f64,
    dimension: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let window = &points[points.len().saturating_sub(GP_TRAINING_CAP)..];
    let xs: Vec<Vec<f64>> = window.iter().map(|p| p.unit.clone()).collect();
    let raw: Vec<f64> = window.iter().map(|p| p.fitness).collect();
    let ys = winsorize(&raw);

    if let Ok(model) = Gp::fit(&xs, &ys) {
        let f_star = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let acquisition = |u: &[f64]| {
            let (mean, var) = model.predict(u);
            gp::expected_improvement(mean, var.sqrt(), f_star, exploration)
        };
        let incumbent = ys
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| xs[i].clone())
            .unwrap();

        let mut best: Option<(Vec<f64>, f64)> = None;
        for k in 0..ACQUISITION_STARTS {
            let start = if k < ACQUISITION_STARTS / 4 {
                // Local starts around the incumbent.
                incumbent
                    .iter()
                    .map(|c| (c + 0.1 * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0))
                    .collect()
            } else {
                uniform_point(dimension, rng)
            };
            let (x, fx) = pattern_search(&acquisition, start);
            if best.as_ref().map_or(true, |(_, bf)| fx > *bf) {
                best = Some((x, fx));
            }
        }
        if let Some((candidate, ei)) = best {
            let duplicate = points.iter().any(|p| {
                p.unit.iter().zip(&candidate).all(|(a, b)| (a - b).abs() < 1e-9)
            });
            if ei > 1e-12 && !duplicate {
                return candidate;
            }
        }
    }
    // Degenerate surrogate, vanished improvement, or a re-proposed point:
    // keep covering the space instead.
    let units: Vec<Vec<f64>> = points.iter().map(|p| p.unit.clone()).collect();
    dispersion_next(&units, dimension, rng)
}

fn bayesian_search<T, F, P>(
    cfg: &SearchConfig,
    objective: F,
    progress: P,
    rng: &mut ChaCha8Rng,
) -> SearchOutcome<T>
where
    F: Fn(&[f64]) -> (f64, T) + Sync,
    P: Fn(f64, &T) -> bool,
    T: Send,
{
    let mut tracker = Tracker::new(cfg.patience);
    let mut points: Vec<SearchPoint<T>> = Vec::new();

    let seed_count = (cfg.dimension * BAYESIAN_SEED_FACTOR).min(cfg.budget).max(1);
    let seeds = dispersion_seeds(cfg.dimension, seed_count, rng);
    for (unit, (fitness, payload)) in seeds.iter().cloned().zip(evaluate_batch(&seeds, &objective))
    {
        let idx = points.len();
        let moved = progress(fitness, &payload);
        points.push(SearchPoint { unit, fitness, payload });
        tracker.observe(idx, fitness, false, moved);
    }

    while points.len() < cfg.budget && !tracker.crossed {
        let unit = propose_bayesian(&points, cfg.exploration, cfg.dimension, rng);
        let (fitness, payload) = objective(&unit);
        let idx = points.len();
        let moved = progress(fitness, &payload);
        points.push(SearchPoint { unit, fitness, payload });
        tracker.observe(idx, fitness, true, moved);
    }

    let stop = if tracker.crossed { StopReason::Patience } else { StopReason::BudgetExhausted };
    SearchOutcome { points, best: tracker.best.map(|(i, _)| i), stop }
}

/// Fitness-proportionate pick. Already-positive scores are used as-is so
/// proportions stay meaningful; otherwise everything is shifted up by the
/// minimum plus a small floor.
fn roulette(population: &[(Vec<f64>, f64)], rng: &mut ChaCha8Rng) -> usize {
    let min = population.iter().map(|(_, f)| *f).fold(f64::INFINITY, f64::min);
    let offset = if min < 0.0 { -min } else { 0.0 };
    let weights: Vec<f64> = population.iter().map(|(_, f)| f + offset + 1e-9).collect();
    let total: f64 = weights.iter().sum();
    let mut ticket = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        ticket -= w;
        if ticket <= 0.0 {
            return i;
        }
    }
    population.len() - 1
}

/// Breeds one child: two roulette-selected parents, uniform crossover
/// (each coordinate from either parent with equal probability), then each
/// coordinate redrawn uniformly with probability `mutation_rate`.
pub fn breed(
    population: &[(Vec<f64>, f64)],
    mutation_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let a = &population[roulette(population, rng)].0;
    let b = &population[roulette(population, rng)].0;
    let mut child: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(ga, gb)| if rng.gen_bool(0.5) { *ga } else { *gb })
        .collect();
    for gene in child.iter_mut() {
        if rng.gen_bool(mutation_rate) {
            *gene = rng.gen::<f64>();
        }
    }
    child
}

fn genetic_search<T, F, P>(
    cfg: &SearchConfig,
    objective: F,
    progress: P,
    rng: &mut ChaCha8Rng,
) -> SearchOutcome<T>
where
    F: Fn(&[f64]) -> (f64, T) + Sync,
    P: Fn(f64, &T) -> bool,
    T: Send,
{
    let mut tracker = Tracker::new(cfg.patience);
    let mut points: Vec<SearchPoint<T>> = Vec::new();

    let pop_size = (cfg.dimension * GENETIC_POPULATION_FACTOR)
        .max(GENETIC_POPULATION_MIN)
        .min(cfg.budget)
        .max(1);
    let seeds = dispersion_seeds(cfg.dimension, pop_size, rng);
    let mut population: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pop_size);
    for (unit, (fitness, payload)) in seeds.iter().cloned().zip(evaluate_batch(&seeds, &objective))
    {
        let idx = points.len();
        let moved = progress(fitness, &payload);
        population.push((unit.clone(), fitness));
        points.push(SearchPoint { unit, fitness, payload });
        tracker.observe(idx, fitness, false, moved);
    }

    while points.len() < cfg.budget && !tracker.crossed {
        let elite = population
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .map(|(i, _)| population[i].clone())
            .unwrap();
        let wanted = (pop_size.saturating_sub(1)).min(cfg.budget - points.len());
        if wanted == 0 {
            break;
        }
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(wanted);
        for _ in 0..wanted {
            children.push(breed(&population, cfg.mutation_rate, rng));
        }

        let results = evaluate_batch(&children, &objective);
        let mut next = vec![elite];
        for (unit, (fitness, payload)) in children.into_iter().zip(results) {
            let idx = points.len();
            let moved = progress(fitness, &payload);
            next.push((unit.clone(), fitness));
            points.push(SearchPoint { unit, fitness, payload });
            tracker.observe(idx, fitness, true, moved);
        }
        population = next;
    }

    let stop = if tracker.crossed { StopReason::Patience } else { StopReason::BudgetExhausted };
    SearchOutcome { points, best: tracker.best.map(|(i, _)| i), stop }
}

fn grid_lattice(dimension: usize, budget: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, bool) {
    let total = (GRID_STEPS as u128).pow(dimension as u32);
    let to_coords = |digits: &[u8]| -> Vec<f64> {
        digits.iter().map(|d| *d as f64 / (GRID_STEPS - 1) as f64).collect()
    };
    if total <= GRID_LATTICE_CAP as u128 {
        let total = total as usize;
        let mut cells: Vec<Vec<u8>> = (0..total)
            .map(|mut idx| {
                let mut digits = vec![0u8; dimension];
                for d in digits.iter_mut() {
                    *d = (idx % GRID_STEPS) as u8;
                    idx /= GRID_STEPS;
                }
                digits
            })
            .collect();
        cells.shuffle(rng);
        let exhaustive = budget >= total;
        cells.truncate(budget);
        (cells.iter().map(|c| to_coords(c)).collect(), exhaustive)
    } else {
        // Lattice too large to materialize: sample distinct cells.
        let mut seen = std::collections::HashSet::new();
        let mut cells: Vec<Vec<u8>> = Vec::with_capacity(budget);
        let mut attempts = 0usize;
        while cells.len() < budget && attempts < budget.saturating_mul(50) {
            attempts += 1;
            let digits: Vec<u8> =
                (0..dimension).map(|_| rng.gen_range(0..GRID_STEPS) as u8).collect();
            if seen.insert(digits.clone()) {
                cells.push(digits);
            }
        }
        (cells.iter().map(|c| to_coords(c)).collect(), false)
    }
}

fn grid_search<T, F, P>(
    cfg: &SearchConfig,
    objective: F,
    progress: P,
    rng: &mut ChaCha8Rng,
) -> SearchOutcome<T>
where
    F: Fn(&[f64]) -> (f64, T) + Sync,
    P: Fn(f64, &T) -> bool,
    T: Send,
{
    let mut tracker = Tracker::new(cfg.patience);
    let mut points: Vec<SearchPoint<T>> = Vec::new();
    let (planned, exhaustive) = grid_lattice(cfg.dimension, cfg.budget, rng);

    for batch in planned.chunks(GRID_BATCH) {
        if tracker.crossed {
            break;
        }
        let results = evaluate_batch(batch, &objective);
        for (unit, (fitness, payload)) in batch.iter().cloned().zip(results) {
            let idx = points.len();
            let moved = progress(fitness, &payload);
            points.push(SearchPoint { unit, fitness, payload });
            tracker.observe(idx, fitness, true, moved);
        }
    }

    let stop = if tracker.crossed {
        StopReason::Patience
    } else if exhaustive && points.len() == planned.len() {
        StopReason::GridExhausted
    } else {
        StopReason::BudgetExhausted
    };
    SearchOutcome { points, best: tracker.best.map(|(i, _)| i), stop }
}

/// Runs one search strategy against an arbitrary objective over the unit
/// cube. The objective returns the fitness plus an opaque payload carried
/// into the outcome; it may be called from worker threads. `progress`
/// decides which evaluations reset the patience counter (campaigns treat
/// a fresh critical result as progress).
pub fn search<T, F, P>(cfg: &SearchConfig, objective: F, progress: P) -> SearchOutcome<T>
where
    F: Fn(&[f64]) -> (f64, T) + Sync,
    P: Fn(f64, &T) -> bool,
    T: Send,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if cfg.budget == 0 {
        return SearchOutcome { points: Vec::new(), best: None, stop: StopReason::BudgetExhausted };
    }
    if cfg.dimension == 0 {
        // Nothing to vary: a single evaluation settles the scenario.
        let (fitness, payload) = objective(&[]);
        return SearchOutcome {
            points: vec![SearchPoint { unit: Vec::new(), fitness, payload }],
            best: Some(0),
            stop: StopReason::BudgetExhausted,
        };
    }
    match cfg.algorithm {
        Algorithm::Bayesian => bayesian_search(cfg, objective, progress, &mut rng),
        Algorithm::Genetic => genetic_search(cfg, objective, progress, &mut rng),
        Algorithm::Grid => grid_search(cfg, objective, progress, &mut rng),
    }
}

// ---------------------------------------------------------------------------
// Campaigns over logical scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub budget: usize,
    pub seed: u64,
    /// Worker threads for batch evaluation; 0 uses the process default.
    /// Results do not depend on this.
    pub workers: usize,
    /// Fixed strategy, or pick by dimension when absent.
    pub algorithm: Option<Algorithm>,
    /// Dimension at and above which the auto choice flips to genetic.
    pub dimension_switch: usize,
    /// Evaluations without a fresh critical result before stopping early;
    /// 0 disables.
    pub patience: usize,
    pub exploration: f64,
    pub mutation_rate: f64,
    pub fitness: FitnessParams,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            budget: 200,
            seed: 0,
            workers: 0,
            algorithm: None,
            dimension_switch: DEFAULT_DIMENSION_SWITCH,
            patience: DEFAULT_PATIENCE,
            exploration: DEFAULT_EXPLORATION,
            mutation_rate: DEFAULT_MUTATION_RATE,
            fitness: FitnessParams::default(),
        }
    }
}

/// One evaluated scenario instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub index: usize,
    /// Unit-cube coordinates of the draw.
    pub unit: Vec<f64>,
    /// Resolved values of the free variables, in declaration order.
    pub params: Vec<f64>,
    pub fitness: f64,
    pub verdict: Verdict,
    pub ego_score: f64,
    pub agent_score: f64,
    pub dist_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_ttc: Option<f64>,
    /// Present when the parameters did not bind or the simulation failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub budget: usize,
    pub dimension: usize,
    pub variables: Vec<String>,
    pub patience: usize,
    pub exploration: f64,
    pub mutation_rate: f64,
    pub records: Vec<EvalRecord>,
    pub best_index: Option<usize>,
    pub stop_reason: StopReason,
}

impl Campaign {
    pub fn best(&self) -> Option<&EvalRecord> {
        self.best_index.map(|i| &self.records[i])
    }

    pub fn critical_count(&self) -> usize {
        self.records.iter().filter(|r| r.verdict == Verdict::ValidCritical).count()
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let meta = LedgerLine::Meta {
            scenario: self.scenario.clone(),
            algorithm: self.algorithm,
            seed: self.seed,
            budget: self.budget,
            dimension: self.dimension,
            variables: self.variables.clone(),
            patience: self.patience,
            exploration: self.exploration,
            mutation_rate: self.mutation_rate,
        };
        writeln!(w, "{}", serde_json::to_string(&meta).expect("meta serializes"))?;
        for r in &self.records {
            let line = LedgerLine::Point { record: r.clone() };
            writeln!(w, "{}", serde_json::to_string(&line).expect("point serializes"))?;
        }
        let end = LedgerLine::End {
            evaluations: self.records.len(),
            best_index: self.best_index,
            best_fitness: self.best().map(|r| r.fitness),
            stop_reason: self.stop_reason,
        };
        writeln!(w, "{}", serde_json::to_string(&end).expect("end serializes"))?;
        Ok(())
    }

    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self, FuzzError> {
        let mut meta: Option<Campaign> = None;
        let mut records = Vec::new();
        let mut end: Option<(Option<usize>, StopReason)> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LedgerLine = serde_json::from_str(&line)
                .map_err(|e| FuzzError::Ledger { line: i + 1, message: e.to_string() })?;
            match parsed {
                LedgerLine::Meta {
                    scenario,
                    algorithm,
                    seed,
                    budget,
                    dimension,
                    variables,
                    patience,
                    exploration,
                    mutation_rate,
                } => {
                    meta = Some(Campaign {
                        scenario,
                        algorithm,
                        seed,
                        budget,
                        dimension,
                        variables,
                        patience,
                        exploration,
                        mutation_rate,
                        records: Vec::new(),
                        best_index: None,
                        stop_reason: StopReason::BudgetExhausted,
                    });
                }
                LedgerLine::Point { record } => records.push(record),
                LedgerLine::End { best_index, stop_reason, .. } => {
                    end = Some((best_index, stop_reason));
                }
            }
        }
        let mut campaign = meta.ok_or(FuzzError::Ledger {
            line: 0,
            message: "missing meta line".into(),
        })?;
        campaign.records = records;
        if let Some((best_index, stop_reason)) = end {
            campaign.best_index = best_index;
            campaign.stop_reason = stop_reason;
        }
        Ok(campaign)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LedgerLine {
    Meta {
        scenario: String,
        algorithm: Algorithm,
        seed: u64,
        budget: usize,
        dimension: usize,
        variables: Vec<String>,
        patience: usize,
        exploration: f64,
        mutation_rate: f64,
    },
    Point {
        #[serde(flatten)]
        record: EvalRecord,
    },
    End {
        evaluations: usize,
        best_index: Option<usize>,
        best_fitness: Option<f64>,
        stop_reason: StopReason,
    },
}

/// Payload carried through the search for each simulated point.
struct PointOutcome {
    params: Vec<f64>,
    verdict: Verdict,
    ego_score: f64,
    agent_score: f64,
    dist_score: f64,
    min_distance: Option<f64>,
    min_ttc: Option<f64>,
    error: Option<String>,
}

fn evaluate_unit(
    logical: &LogicalScenario,
    unit: &[f64],
    fitness: &FitnessParams,
) -> (f64, PointOutcome) {
    let invalid = |params: Vec<f64>, error: String| {
        (
            INVALID_FITNESS,
            PointOutcome {
                params,
                verdict: Verdict::Invalid,
                ego_score: 0.0,
                agent_score: 0.0,
                dist_score: 0.0,
                min_distance: None,
                min_ttc: None,
                error: Some(error),
            },
        )
    };
    let params = match logical.sample(unit) {
        Ok(p) => p,
        Err(e) => return invalid(Vec::new(), e.to_string()),
    };
    let concrete = match logical.bind(&params) {
        Ok(c) => c,
        Err(e) => return invalid(params, e.to_string()),
    };
    let trace = match sim::run(&concrete) {
        Ok(t) => t,
        Err(e) => return invalid(params, e.to_string()),
    };
    let ev = evaluate(&trace, fitness);
    (
        ev.fitness,
        PointOutcome {
            params,
            verdict: ev.verdict,
            ego_score: ev.ego_score,
            agent_score: ev.agent_score,
            dist_score: ev.dist_score,
            min_distance: ev.min_distance,
            min_ttc: ev.min_ttc,
            error: None,
        },
    )
}

/// Searches a logical scenario for critical concrete instances.
pub fn run_campaign(
    logical: &LogicalScenario,
    cfg: &CampaignConfig,
) -> Result<Campaign, FuzzError> {
    let diags = logical.validate();
    if !diags.is_empty() {
        return Err(FuzzError::InvalidScenario(diags.join("; ")));
    }
    if cfg.budget == 0 {
        return Err(FuzzError::BadConfig("budget must be positive".into()));
    }
    let dimension = logical.effective_dimension();
    let algorithm = cfg
        .algorithm
        .unwrap_or_else(|| choose_algorithm_with(dimension, cfg.dimension_switch));
    let search_cfg = SearchConfig {
        dimension,
        algorithm,
        budget: cfg.budget,
        patience: cfg.patience,
        exploration: cfg.exploration,
        mutation_rate: cfg.mutation_rate,
        seed: cfg.seed,
    };
    let fitness = cfg.fitness;
    let objective = |unit: &[f64]| evaluate_unit(logical, unit, &fitness);
    let progress = |_: f64, p: &PointOutcome| p.verdict == Verdict::ValidCritical;

    let outcome = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| FuzzError::BadConfig(e.to_string()))?
            .install(|| search(&search_cfg, objective, progress))
    } else {
        search(&search_cfg, objective, progress)
    };

    let records = outcome
        .points
        .into_iter()
        .enumerate()
        .map(|(index, p)| EvalRecord {
            index,
            unit: p.unit,
            params: p.payload.params,
            fitness: p.fitness,
            verdict: p.payload.verdict,
            ego_score: p.payload.ego_score,
            agent_score: p.payload.agent_score,
            dist_score: p.payload.dist_score,
            min_distance: p.payload.min_distance,
            min_ttc: p.payload.min_ttc,
            error: p.payload.error,
        })
        .collect();

    Ok(Campaign {
        scenario: logical.name.clone(),
        algorithm,
        seed: cfg.seed,
        budget: cfg.budget,
        dimension,
        variables: logical.variables.iter().map(|v| v.name.clone()).collect(),
        patience: cfg.patience,
        exploration: cfg.exploration,
        mutation_rate: cfg.mutation_rate,
        records,
        best_index: outcome.best,
        stop_reason: outcome.stop,
    })
}

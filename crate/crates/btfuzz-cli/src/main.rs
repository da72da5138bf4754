//! `btfuzz` — command-line surface for the scenario fuzzing pipeline.
//!
//! Subcommands cover the full loop: `log2bt` turns recorded trajectories
//! into behavior trees (and, with a template, into a logical scenario),
//! `validate` checks scenario files, `fuzz` runs a search campaign and
//! persists its ledger, `replay` re-executes one parameter vector with full
//! artifacts, and `report` renders post-campaign analysis.
//!
//! Every command is deterministic given its inputs and `--seed`; the `BTF_LOG`
//! environment variable controls log verbosity only and never affects
//! results.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 path-projection
//! failure, 4 scenario without free variables, 5 parameter-dimension
//! mismatch.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use btfuzz_core::analyzer;
use btfuzz_core::bt::BehaviorTree;
use btfuzz_core::eval::{self, Evaluation, FitnessParams};
use btfuzz_core::frenet::{ReferencePath, TrajectoryPoint};
use btfuzz_core::fuzzing::{Algorithm, Campaign, CampaignConfig, run_campaign};
use btfuzz_core::log2bt::{
    self, Abstraction, Log2BtConfig, Log2BtError, compression_ratio, read_log_csv,
    reconstruction_error,
};
use btfuzz_core::scenario::{ConcreteScenario, LogicalScenario};
use btfuzz_core::sim::{self, MapSpec};

const EXIT_PARSE: u8 = 2;
const EXIT_PROJECTION: u8 = 3;
const EXIT_NO_VARIABLES: u8 = 4;
const EXIT_DIMENSION: u8 = 5;

#[derive(Parser)]
#[command(
    name = "btfuzz",
    version,
    about = "Behavior-tree scenario fuzzing for autonomous-driving stacks"
)]
struct Cli {
    /// Seed for sampling and search (overrides config files).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel evaluation workers; 0 uses all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory; each command has its own default.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Abstract trajectory logs into behavior trees; with a template,
    /// generalize several logs into a logical scenario.
    Log2bt(Log2btArgs),
    /// Run a search campaign over a logical scenario and write the ledger.
    Fuzz(FuzzArgs),
    /// Bind one parameter vector, simulate it, and write trace + events.
    Replay(ReplayArgs),
    /// Analyze a campaign ledger into tables and charts.
    Report(ReportArgs),
    /// Check a scenario file and echo its canonical form.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Log2btArgs {
    /// Trajectory log CSV with columns t,x,y[,z]; repeat to pool several
    /// recordings of the same maneuver.
    #[arg(long, required = true)]
    log: Vec<PathBuf>,
    /// Map JSON providing the reference lane geometry.
    #[arg(long)]
    map: PathBuf,
    /// Lane id to project the logs onto.
    #[arg(long)]
    lane: String,
    /// Label maneuvers semantically; `--semantic=false` emits follow-log
    /// leaves only.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    semantic: bool,
    /// Partition tolerance on the segment fit cost, in meters.
    #[arg(long)]
    eps_part: Option<f64>,
    /// Lateral-displacement threshold for lane-change labeling, in meters.
    #[arg(long)]
    eps_lat: Option<f64>,
    /// Speed-change threshold for speed-keeping labels, in m/s.
    #[arg(long)]
    eps_vel: Option<f64>,
    /// Local fit window length in samples (odd, > degree).
    #[arg(long)]
    window: Option<usize>,
    /// Local fit polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
    /// Disable iterative boundary refinement.
    #[arg(long)]
    no_refine: bool,
    /// Concrete scenario template; the pooled trees replace `--agent`'s tree
    /// and their parameter spread becomes the variable ranges.
    #[arg(long, requires = "agent")]
    template: Option<PathBuf>,
    /// Agent id inside the template that the logs describe.
    #[arg(long, requires = "template")]
    agent: Option<String>,
    /// Name of the emitted logical scenario.
    #[arg(long, default_value = "generalized")]
    name: String,
}

#[derive(Args)]
struct FuzzArgs {
    /// Logical scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Campaign configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluation budget override.
    #[arg(long)]
    budget: Option<usize>,
    /// Search algorithm override: bayesian|bo, genetic|ga, or grid.
    #[arg(long)]
    algorithm: Option<String>,
    /// Early-stop patience override (iterations without a new critical).
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Logical scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated parameter values in variable declaration order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "ledger")]
    values: Option<Vec<f64>>,
    /// Campaign ledger to take the parameter vector from.
    #[arg(long, requires = "index")]
    ledger: Option<PathBuf>,
    /// Record index inside `--ledger`.
    #[arg(long, requires = "ledger")]
    index: Option<usize>,
    /// Campaign configuration JSON; only its fitness parameters are used.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Campaign ledger (NDJSON).
    #[arg(long)]
    ledger: PathBuf,
    /// Force the number of violation clusters instead of selecting it.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario JSON, logical or concrete.
    #[arg(long)]
    scenario: PathBuf,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct CliError {
    code: u8,
    source: anyhow::Error,
}

impl CliError {
    fn new(code: u8, source: anyhow::Error) -> Self {
        Self { code, source }
    }
}

/// `map_err` helper: tag an error with an exit code.
fn code(c: u8) -> impl Fn(anyhow::Error) -> CliError {
    move |e| CliError::new(c, e)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BTF_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let globals = Globals { seed: cli.seed, workers: cli.workers, out: cli.out };
    let result = match cli.command {
        Command::Log2bt(a) => cmd_log2bt(a, &globals),
        Command::Fuzz(a) => cmd_fuzz(a, &globals),
        Command::Replay(a) => cmd_replay(a, &globals),
        Command::Report(a) => cmd_report(a, &globals),
        Command::Validate(a) => cmd_validate(a, &globals),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}

struct Globals {
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(code(EXIT_PARSE))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(code(1))?;
        }
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(code(1))
}

// --- log2bt -----------------------------------------------------------------

fn cmd_log2bt(args: Log2btArgs, globals: &Globals) -> Result<(), CliError> {
    let map: MapSpec = serde_json::from_str(&read_to_string(&args.map)?)
        .with_context(|| format!("parsing map {}", args.map.display()))
        .map_err(code(EXIT_PARSE))?;
    let lane = map
        .lanes
        .iter()
        .find(|l| l.id == args.lane)
        .ok_or_else(|| anyhow!("lane `{}` not in map {}", args.lane, args.map.display()))
        .map_err(code(EXIT_PARSE))?;
    let path = ReferencePath::new(lane.points.clone())
        .context("building reference path")
        .map_err(code(EXIT_PROJECTION))?;

    let mut cfg = Log2BtConfig::default();
    cfg.semantic = args.semantic;
    cfg.refine = !args.no_refine;
    if let Some(v) = args.eps_part {
        cfg.eps_part = v;
    }
    if let Some(v) = args.eps_lat {
        cfg.eps_lat = v;
    }
    if let Some(v) = args.eps_vel {
        cfg.eps_vel = v;
    }
    if let Some(v) = args.window {
        cfg.window = v;
    }
    if let Some(v) = args.degree {
        cfg.degree = v;
    }

    let mut abstractions: Vec<Abstraction> = Vec::new();
    for log_path in &args.log {
        let started = Instant::now();
        let points = load_log(log_path)?;
        let abstraction = abstract_or_code(&points, &path, &cfg, log_path)?;
        let fidelity = reconstruction_error(&points, &abstraction, &path)
            .with_context(|| format!("replaying {}", log_path.display()))
            .map_err(code(EXIT_PROJECTION))?;
        let ratio = compression_ratio(&points, &abstraction);
        println!(
            "{}: {} samples -> {} segments in {:.0} ms",
            log_path.display(),
            points.len(),
            abstraction.tree.leaf_count(),
            started.elapsed().as_secs_f64() * 1e3,
        );
        println!(
            "  ADE_s {:.4} m  ADE_l {:.4} m  compression {:.1}x",
            fidelity.ade_s, fidelity.ade_l, ratio
        );
        abstractions.push(abstraction);
    }

    if let Some(template_path) = &args.template {
        let template = ConcreteScenario::from_json(&read_to_string(template_path)?)
            .with_context(|| format!("parsing template {}", template_path.display()))
            .map_err(code(EXIT_PARSE))?;
        let agent = args.agent.as_deref().expect("clap enforces --agent with --template");
        let trees: Vec<&BehaviorTree> = abstractions.iter().map(|a| &a.tree).collect();
        let logical = log2bt::generalize(&args.name, &template, agent, &trees)
            .context("generalizing logs")
            .map_err(code(EXIT_PARSE))?;
        let out = globals.out.clone().unwrap_or_else(|| PathBuf::from("scenario.json"));
        write_file(&out, &logical.to_canonical_json())?;
        println!(
            "wrote logical scenario `{}` with {} variables to {}",
            logical.name,
            logical.variables.len(),
            out.display()
        );
    } else {
        if abstractions.len() > 1 {
            return Err(CliError::new(
                EXIT_PARSE,
                anyhow!("several logs require --template/--agent to generalize"),
            ));
        }
        let out = globals.out.clone().unwrap_or_else(|| PathBuf::from("abstraction.json"));
        write_file(&out, &abstractions[0].to_canonical_json())?;
        println!("wrote behavior tree to {}", out.display());
    }
    Ok(())
}

fn load_log(path: &Path) -> Result<Vec<TrajectoryPoint>, CliError> {
    let file = fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(code(EXIT_PARSE))?;
    read_log_csv(BufReader::new(file))
        .with_context(|| format!("parsing log {}", path.display()))
        .map_err(code(EXIT_PARSE))
}

fn abstract_or_code(
    points: &[TrajectoryPoint],
    path: &ReferencePath,
    cfg: &Log2BtConfig,
    log_path: &Path,
) -> Result<Abstraction, CliError> {
    log2bt::abstract_log(points, path, cfg).map_err(|e| {
        let c = match &e {
            Log2BtError::Frenet(_) => EXIT_PROJECTION,
            _ => EXIT_PARSE,
        };
        CliError::new(c, anyhow::Error::new(e).context(format!("abstracting {}", log_path.display())))
    })
}

// --- fuzz -------------------------------------------------------------------

fn parse_algorithm(s: &str) -> Result<Algorithm, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "bayesian" | "bo" => Ok(Algorithm::Bayesian),
        "genetic" | "ga" => Ok(Algorithm::Genetic),
        "grid" => Ok(Algorithm::Grid),
        other => Err(CliError::new(
            EXIT_PARSE,
            anyhow!("unknown algorithm `{other}` (expected bayesian|genetic|grid)"),
        )),
    }
}

fn load_campaign_config(
    path: Option<&PathBuf>,
    globals: &Globals,
) -> Result<CampaignConfig, CliError> {
    let mut cfg = match path {
        Some(p) => serde_json::from_str(&read_to_string(p)?)
            .with_context(|| format!("parsing config {}", p.display()))
            .map_err(code(EXIT_PARSE))?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = globals.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = globals.workers {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn cmd_fuzz(args: FuzzArgs, globals: &Globals) -> Result<(), CliError> {
    let logical = LogicalScenario::from_json(&read_to_string(&args.scenario)?)
        .with_context(|| format!("parsing scenario {}", args.scenario.display()))
        .map_err(code(EXIT_PARSE))?;
    let diags = logical.validate();
    if !diags.is_empty() {
        return Err(CliError::new(
            EXIT_PARSE,
            anyhow!("scenario invalid:\n  {}", diags.join("\n  ")),
        ));
    }
    if logical.effective_dimension() == 0 {
        return Err(CliError::new(
            EXIT_NO_VARIABLES,
            anyhow!("scenario `{}` has no free variables to search over", logical.name),
        ));
    }

    let mut cfg = load_campaign_config(args.config.as_ref(), globals)?;
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if let Some(algorithm) = args.algorithm.as_deref() {
        cfg.algorithm = Some(parse_algorithm(algorithm)?);
    }
    if let Some(patience) = args.patience {
        cfg.patience = patience;
    }

    let started = Instant::now();
    let campaign = run_campaign(&logical, &cfg)
        .context("running campaign")
        .map_err(code(1))?;
    let elapsed = started.elapsed();

    let out = globals.out.clone().unwrap_or_else(|| PathBuf::from("ledger.ndjson"));
    let mut buf = Vec::new();
    campaign.write_ndjson(&mut buf).context("serializing ledger").map_err(code(1))?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(code(1))?;
        }
    }
    fs::write(&out, &buf)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(code(1))?;

    let metrics = analyzer::campaign_metrics(&campaign)
        .context("computing metrics")
        .map_err(code(1))?;
    println!(
        "{}: {:?} over {} dims, seed {}, {} evaluations in {:.1} s",
        campaign.scenario,
        campaign.algorithm,
        campaign.dimension,
        campaign.seed,
        campaign.records.len(),
        elapsed.as_secs_f64(),
    );
    println!(
        "  critical {} (CR {:.3})  invalid {} (IR {:.3})  types {} (TR {:.4})",
        metrics.critical, metrics.cr, metrics.invalid, metrics.ir, metrics.types, metrics.tr
    );
    if let Some(best) = campaign.best() {
        println!(
            "  best fitness {:.3} at record {} (params {})",
            best.fitness,
            best.index,
            format_params(&best.params)
        );
    }
    println!("  stop: {:?}; ledger: {}", campaign.stop_reason, out.display());
    Ok(())
}

fn format_params(params: &[f64]) -> String {
    let parts: Vec<String> = params.iter().map(|v| format!("{v:.3}")).collect();
    parts.join(", ")
}

// --- replay -----------------------------------------------------------------

fn cmd_replay(args: ReplayArgs, globals: &Globals) -> Result<(), CliError> {
    let logical = LogicalScenario::from_json(&read_to_string(&args.scenario)?)
        .with_context(|| format!("parsing scenario {}", args.scenario.display()))
        .map_err(code(EXIT_PARSE))?;

    let values: Vec<f64> = if let Some(values) = args.values {
        values
    } else if let (Some(ledger_path), Some(index)) = (args.ledger.as_ref(), args.index) {
        let file = fs::File::open(ledger_path)
            .with_context(|| format!("opening {}", ledger_path.display()))
            .map_err(code(EXIT_PARSE))?;
        let campaign = Campaign::read_ndjson(BufReader::new(file))
            .with_context(|| format!("parsing ledger {}", ledger_path.display()))
            .map_err(code(EXIT_PARSE))?;
        let record = campaign
            .records
            .get(index)
            .ok_or_else(|| {
                anyhow!("record {} out of range ({} records)", index, campaign.records.len())
            })
            .map_err(code(EXIT_PARSE))?;
        println!(
            "replaying ledger record {}: stored fitness {:.3}, verdict {:?}",
            index, record.fitness, record.verdict
        );
        record.params.clone()
    } else {
        return Err(CliError::new(EXIT_PARSE, anyhow!("provide --values or --ledger + --index")));
    };

    let n = logical.effective_dimension();
    if values.len() != n {
        return Err(CliError::new(
            EXIT_DIMENSION,
            anyhow!("{} values given but scenario has {} free variables", values.len(), n),
        ));
    }

    let fitness_params = match args.config.as_ref() {
        Some(_) => load_campaign_config(args.config.as_ref(), globals)?.fitness,
        None => FitnessParams::default(),
    };

    let concrete = logical
        .bind(&values)
        .context("binding parameters")
        .map_err(code(EXIT_PARSE))?;
    let trace = sim::run(&concrete).context("simulating").map_err(code(1))?;
    let evaluation = eval::evaluate(&trace, &fitness_params);

    let out_dir = globals.out.clone().unwrap_or_else(|| PathBuf::from("replay"));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(code(1))?;
    let trace_path = out_dir.join("trace.csv");
    let mut trace_buf = Vec::new();
    trace.write_csv(&mut trace_buf).context("serializing trace").map_err(code(1))?;
    fs::write(&trace_path, &trace_buf)
        .with_context(|| format!("writing {}", trace_path.display()))
        .map_err(code(1))?;

    let events_path = out_dir.join("events.json");
    let events_doc = serde_json::json!({
        "events": trace.events,
        "evaluation": evaluation,
    });
    let mut events_text =
        serde_json::to_string_pretty(&events_doc).expect("events serialize");
    events_text.push('\n');
    write_file(&events_path, &events_text)?;

    print_evaluation(&logical, &values, &trace.events.termination, &evaluation, &fitness_params);
    println!("trace: {}", trace_path.display());
    println!("events: {}", events_path.display());
    Ok(())
}

fn print_evaluation(
    logical: &LogicalScenario,
    values: &[f64],
    termination: &sim::Termination,
    ev: &Evaluation,
    params: &FitnessParams,
) {
    let names: Vec<&str> = logical.variables.iter().map(|v| v.name.as_str()).collect();
    let bound: Vec<String> =
        names.iter().zip(values).map(|(n, v)| format!("{n}={v:.3}")).collect();
    println!("scenario {} with {}", logical.name, bound.join(", "));
    println!("termination: {termination:?}");
    println!("verdict: {:?}  fitness: {:.3}", ev.verdict, ev.fitness);
    if !ev.unreasonable_agents.is_empty() {
        println!(
            "branch: unreasonable challenger ({}) -> fitness = -max challenger score",
            ev.unreasonable_agents.join(", ")
        );
    } else if ev.ego_collision && ev.ego_responsible == Some(true) {
        println!("branch: ego-responsible collision -> fitness = ego score");
    } else {
        println!(
            "branch: weighted difference -> {:.2} * (ego {} - challenger {} + {:.2} * proximity {})",
            params.alpha, ev.ego_score, ev.agent_score, params.dist_weight, ev.dist_score
        );
    }
    println!(
        "scores: ego {}  challenger {}  proximity {}",
        ev.ego_score, ev.agent_score, ev.dist_score
    );
    match ev.min_distance {
        Some(d) => println!("min distance: {d:.2} m"),
        None => println!("min distance: n/a (single participant)"),
    }
    match ev.min_ttc {
        Some(t) => println!("min TTC: {t:.2} s"),
        None => println!("min TTC: n/a"),
    }
}

// --- report -----------------------------------------------------------------

fn cmd_report(args: ReportArgs, globals: &Globals) -> Result<(), CliError> {
    let file = fs::File::open(&args.ledger)
        .with_context(|| format!("opening {}", args.ledger.display()))
        .map_err(code(EXIT_PARSE))?;
    let campaign = Campaign::read_ndjson(BufReader::new(file))
        .with_context(|| format!("parsing ledger {}", args.ledger.display()))
        .map_err(code(EXIT_PARSE))?;
    let out_dir = globals.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let bundle = analyzer::report(&campaign, &out_dir, args.k)
        .context("rendering report")
        .map_err(|e| match e.downcast_ref::<analyzer::AnalyzerError>() {
            Some(analyzer::AnalyzerError::EmptyCampaign) => CliError::new(EXIT_PARSE, e),
            Some(analyzer::AnalyzerError::InvalidClusterCount) => CliError::new(EXIT_PARSE, e),
            _ => CliError::new(1, e),
        })?;
    let m = &bundle.metrics;
    println!(
        "{}: {} evaluations  critical {} (CR {:.3})  invalid {} (IR {:.3})  types {} (TR {:.4})",
        campaign.scenario, m.total, m.critical, m.cr, m.invalid, m.ir, m.types, m.tr
    );
    for t in &bundle.types {
        let centroid: Vec<String> = campaign
            .variables
            .iter()
            .zip(&t.centroid_params)
            .map(|(n, v)| format!("{n}={v:.2}"))
            .collect();
        let converged = if t.converged.is_empty() {
            String::from("none")
        } else {
            t.converged.join(", ")
        };
        println!(
            "  type {}: {} members, centroid ({}), converged: {}",
            t.id,
            t.members.len(),
            centroid.join(", "),
            converged
        );
    }
    for note in &bundle.notes {
        println!("  note: {note}");
    }
    for f in &bundle.files {
        println!("  wrote {}", f.display());
    }
    Ok(())
}

// --- validate ---------------------------------------------------------------

fn cmd_validate(args: ValidateArgs, globals: &Globals) -> Result<(), CliError> {
    let text = read_to_string(&args.scenario)?;
    let (kind, diagnostics, canonical, summary) = match LogicalScenario::from_json(&text) {
        Ok(logical) => {
            let summary = format!(
                "{} variables ({} free dimensions), {} challengers",
                logical.variables.len() + logical.relative.len(),
                logical.effective_dimension(),
                logical.agents.len()
            );
            ("logical", logical.validate(), logical.to_canonical_json(), summary)
        }
        Err(logical_err) => match ConcreteScenario::from_json(&text) {
            Ok(concrete) => {
                let summary = format!("{} challengers", concrete.agents.len());
                ("concrete", concrete.validate(), concrete.to_canonical_json(), summary)
            }
            Err(concrete_err) => {
                return Err(CliError::new(
                    EXIT_PARSE,
                    anyhow!(
                        "{} parses as neither scenario kind\n  as logical: {}\n  as concrete: {}",
                        args.scenario.display(),
                        logical_err,
                        concrete_err
                    ),
                ));
            }
        },
    };
    if !diagnostics.is_empty() {
        let mut msg = format!("{} scenario invalid:", kind);
        for d in &diagnostics {
            msg.push_str("\n  ");
            msg.push_str(d);
        }
        return Err(CliError::new(EXIT_PARSE, anyhow!(msg)));
    }
    println!("ok: {} scenario, {}", kind, summary);
    if let Some(out) = &globals.out {
        write_file(out, &canonical)?;
        println!("canonical form: {}", out.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn algorithm_aliases_parse() {
        assert_eq!(parse_algorithm("bo").unwrap(), Algorithm::Bayesian);
        assert_eq!(parse_algorithm("GA").unwrap(), Algorithm::Genetic);
        assert_eq!(parse_algorithm("grid").unwrap(), Algorithm::Grid);
        assert!(parse_algorithm("annealing").is_err());
    }
}

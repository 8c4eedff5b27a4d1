//! Command-line front end: validate models, build the game view, evaluate
//! policy pairs, solve for saddle points, and reproduce the built-in
//! benchmark table.
//!
//! Exit codes: 0 success, 1 validation violations or failed benchmark rows,
//! 2 file or parse errors, 3 capacity limits.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use rpomdp::benchmarks::{
    build_benchmark_variant, default_horizon, reference_pair, BenchmarkId, BenchmarkVariant,
    StickinessKind,
};
use rpomdp::game::build_posg;
use rpomdp::io::{
    instantiate_agent_policy, instantiate_nature_policy, parse_model, parse_policy,
    serialize_agent_policy, serialize_model, serialize_nature_policy, PolicyDocument,
};
use rpomdp::model::PlayOrder;
use rpomdp::num::{decimal_string, format_rational, parse_rational, q, Q};
use rpomdp::policies::{AgentPolicy, NaturePolicy};
use rpomdp::solver::{solve_saddle, SolverConfig};
use rpomdp::value_fh;

/// Prints a line, ignoring closed-pipe errors from downstream tools.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "rpomdp", about = "Robust POMDP toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every model invariant; print violations and structure notes.
    Validate { model: PathBuf },
    /// Build the game view and optionally dump its reachable fragment.
    Transform {
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Print the reachable fragment (nature moves sampled at vertices).
        #[arg(long)]
        dump: bool,
    },
    /// Evaluate a policy pair exactly over a finite horizon.
    Evaluate {
        model: PathBuf,
        #[arg(long)]
        agent: PathBuf,
        #[arg(long)]
        nature: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
    /// Search for a saddle point; print certified bounds and policies.
    Solve {
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Termination gap, a rational literal (default 1/1000).
        #[arg(long)]
        tolerance: Option<String>,
        /// Grid points per free variable in the nonlinear regime.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Reproduce the built-in benchmark values and print a pass/fail matrix.
    Bench {
        #[arg(long)]
        id: Option<String>,
    },
    /// Print a built-in benchmark model document, or its tabulated policies.
    Emit(EmitArgs),
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    stickiness: Option<String>,
    #[arg(long)]
    play_order: Option<String>,
    /// Emit the tabulated optimal policy pair instead of the model.
    #[arg(long, value_parser = ["agent", "nature"])]
    policy: Option<String>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

const CAPACITY_EXIT: u8 = 3;

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { model } => {
            let model = load_model(&model)?;
            let report = model.validate();
            for note in &report.notes {
                out!("note: {note}");
            }
            if report.is_valid() {
                out!("ok: model satisfies every invariant");
                Ok(ExitCode::SUCCESS)
            } else {
                for violation in &report.violations {
                    out!("violation: {violation}");
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Transform {
            model,
            horizon,
            dump,
        } => {
            let model = load_valid_model(&model)?;
            let posg = build_posg(&model, horizon);
            out!(
                "game: {} order, {} rounds, initial {}",
                posg.mode(),
                horizon,
                match posg.initial_state() {
                    rpomdp::game::PosgState::Agent(_) => "agent state",
                    rpomdp::game::PosgState::Nature(_) => "nature state",
                }
            );
            if dump {
                print!("{}", posg.dump_reachable());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            model,
            agent,
            nature,
            horizon,
        } => {
            let model = load_valid_model(&model)?;
            let agent_text = std::fs::read_to_string(&agent)?;
            let nature_text = std::fs::read_to_string(&nature)?;
            let agent_rules = match parse_policy(&model, &agent_text)? {
                PolicyDocument::Agent(rules) => rules,
                PolicyDocument::Nature(_) => {
                    anyhow::bail!("{} declares a nature policy", agent.display())
                }
            };
            let nature_rules = match parse_policy(&model, &nature_text)? {
                PolicyDocument::Nature(rules) => rules,
                PolicyDocument::Agent(_) => {
                    anyhow::bail!("{} declares an agent policy", nature.display())
                }
            };
            let (pi, agent_fallbacks) = instantiate_agent_policy(&model, &agent_rules, horizon);
            let (theta, nature_fallbacks) =
                instantiate_nature_policy(&model, &nature_rules, horizon)
                    .map_err(|e| anyhow::anyhow!("nature policy: {e}"))?;
            print_fallbacks("first action", "agent history", &agent_fallbacks);
            print_fallbacks("first vertex", "nature key", &nature_fallbacks);
            let value = value_fh(
                &model,
                &AgentPolicy::Stochastic(pi),
                &NaturePolicy::Stochastic(theta),
                horizon,
            )
            .map_err(|e| anyhow::anyhow!("evaluation: {e}"))?;
            out!("value={}", format_rational(&value));
            out!("decimal={}", decimal_string(&value, 9));
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            model,
            horizon,
            tolerance,
            grid,
        } => {
            let model = load_valid_model(&model)?;
            let mut config = SolverConfig::default();
            if let Some(t) = tolerance {
                config.tolerance =
                    parse_rational(&t).map_err(|e| anyhow::anyhow!("bad tolerance: {e}"))?;
            }
            if let Some(n) = grid {
                config.grid_points = n;
            }
            let result = match solve_saddle(&model, horizon, &config) {
                Ok(result) => result,
                Err(rpomdp::Error::Capacity { count, cap }) => {
                    eprintln!("capacity exceeded: {count} candidates over the cap of {cap}");
                    return Ok(ExitCode::from(CAPACITY_EXIT));
                }
                Err(e) => return Err(e.into()),
            };
            out!("lower={}", format_rational(&result.lower_value));
            out!("upper={}", format_rational(&result.upper_value));
            out!("gap={}", format_rational(&result.gap));
            out!("iterations={}", result.iterations);
            out!(
                "grid_resolution={}",
                format_rational(&result.grid_resolution)
            );
            out!(
                "# certified value in [{}, {}] ≈ [{}, {}]",
                format_rational(&result.lower_value),
                format_rational(&result.upper_value),
                decimal_string(&result.lower_value, 6),
                decimal_string(&result.upper_value, 6)
            );
            out!("# agent mixture ({} policies):", result.agent_policy.len());
            for (det, w) in result.agent_policy.support() {
                out!("#   weight {}:", format_rational(w));
                if det.table.is_empty() {
                    out!("#     (first action at every history)");
                }
                for line in serialize_agent_policy(&model, &det.as_stochastic())
                    .lines()
                    .skip(1)
                {
                    out!("#     {line}");
                }
            }
            out!(
                "# nature mixture ({} policies):",
                result.nature_policy.len()
            );
            for (det, w) in result.nature_policy.support() {
                out!("#   weight {}:", format_rational(w));
                if det.table.is_empty() {
                    out!("#     (first admissible vertex at every key)");
                }
                for line in serialize_nature_policy(&model, &det.as_stochastic())
                    .lines()
                    .skip(1)
                {
                    out!("#     {line}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { id } => {
            let ids: Vec<BenchmarkId> = match id {
                Some(text) => {
                    vec![BenchmarkId::from_str(&text).map_err(|e| anyhow::anyhow!("{e}"))?]
                }
                None => BenchmarkId::all().to_vec(),
            };
            let mut all_pass = true;
            for id in ids {
                for row in bench_rows(id) {
                    let pass = run_bench_row(id, &row)?;
                    all_pass &= pass;
                }
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Emit(args) => {
            let id = BenchmarkId::from_str(&args.id).map_err(|e| anyhow::anyhow!("{e}"))?;
            let variant = BenchmarkVariant {
                stickiness: args
                    .stickiness
                    .as_deref()
                    .map(StickinessKind::from_str)
                    .transpose()
                    .map_err(|e| anyhow::anyhow!("{e}"))?,
                play_order: match args.play_order.as_deref() {
                    None => None,
                    Some("agent-first") => Some(PlayOrder::AgentFirst),
                    Some("nature-first") => Some(PlayOrder::NatureFirst),
                    Some(other) => anyhow::bail!("unknown play order `{other}`"),
                },
            };
            let model = build_benchmark_variant(id, &variant)?;
            match args.policy.as_deref() {
                None => print!("{}", serialize_model(&model)),
                Some(side) => {
                    let pair = reference_pair(id, &variant)?
                        .ok_or_else(|| anyhow::anyhow!("no tabulated policies for {id}"))?;
                    match side {
                        "agent" => match &pair.agent {
                            AgentPolicy::Stochastic(p) => {
                                print!("{}", serialize_agent_policy(&model, p))
                            }
                            AgentPolicy::Deterministic(p) => {
                                print!("{}", serialize_agent_policy(&model, &p.as_stochastic()))
                            }
                            AgentPolicy::Mixed(_) => {
                                anyhow::bail!("tabulated agent policies are behavioral")
                            }
                        },
                        "nature" => match &pair.nature {
                            NaturePolicy::Stochastic(p) => {
                                print!("{}", serialize_nature_policy(&model, p))
                            }
                            NaturePolicy::Deterministic(p) => {
                                print!("{}", serialize_nature_policy(&model, &p.as_stochastic()))
                            }
                            NaturePolicy::Mixed(_) => {
                                anyhow::bail!("tabulated nature policies are behavioral")
                            }
                        },
                        _ => unreachable!("restricted by the value parser"),
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_fallbacks(rule: &str, kind: &str, entries: &[String]) {
    const SHOWN: usize = 8;
    for entry in entries.iter().take(SHOWN) {
        out!("# fallback ({rule}) at {kind}: {entry}");
    }
    if entries.len() > SHOWN {
        out!(
            "# fallback ({rule}) at {} more {kind} entries",
            entries.len() - SHOWN
        );
    }
}

fn load_model(path: &PathBuf) -> anyhow::Result<rpomdp::Rpomdp> {
    let text =
        std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_model(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn load_valid_model(path: &PathBuf) -> anyhow::Result<rpomdp::Rpomdp> {
    let model = load_model(path)?;
    let report = model.validate();
    if !report.is_valid() {
        let mut detail = String::new();
        for v in &report.violations {
            detail.push_str(&format!("\n  {v}"));
        }
        anyhow::bail!("{} is not a well-formed model:{detail}", path.display());
    }
    Ok(model)
}

/// One row of the reproduction matrix.
struct BenchRow {
    label: &'static str,
    variant: BenchmarkVariant,
    /// Expected saddle value with its comparison tolerance, when solvable.
    solve: Option<(Q, Q)>,
    /// Whether the tabulated policy pair should reproduce the value exactly.
    eval: bool,
}

fn bench_rows(id: BenchmarkId) -> Vec<BenchRow> {
    let exact = q(0, 1);
    let tol = q(1, 1000);
    let row = |label, stickiness, play_order, solve, eval| BenchRow {
        label,
        variant: BenchmarkVariant {
            stickiness,
            play_order,
        },
        solve,
        eval,
    };
    match id {
        BenchmarkId::Fig1RmdpU1
        | BenchmarkId::Fig1RmdpU2
        | BenchmarkId::Fig5ObsStickyLeft
        | BenchmarkId::Fig5ObsStickyRight => {
            vec![row("validate", None, None, None, false)]
        }
        BenchmarkId::Fig2Sticky => vec![
            row(
                "full stickiness",
                Some(StickinessKind::Full),
                None,
                Some((q(200, 3), exact.clone())),
                true,
            ),
            row(
                "zero stickiness",
                Some(StickinessKind::Zero),
                None,
                Some((q(131, 2), exact)),
                true,
            ),
        ],
        BenchmarkId::Fig3OrderSmall => vec![
            row(
                "agent first",
                None,
                Some(PlayOrder::AgentFirst),
                Some((q(30, 1), exact.clone())),
                true,
            ),
            row(
                "nature first",
                None,
                Some(PlayOrder::NatureFirst),
                Some((q(150, 1), exact)),
                true,
            ),
        ],
        BenchmarkId::AppCObsSticky => vec![
            row(
                "full stickiness",
                Some(StickinessKind::Full),
                None,
                Some((q(28871, 390), tol.clone())),
                true,
            ),
            row(
                "observation-based stickiness",
                Some(StickinessKind::ObservationBased),
                None,
                Some((q(719, 10), tol.clone())),
                true,
            ),
            row(
                "zero stickiness",
                Some(StickinessKind::Zero),
                None,
                Some((q(24655, 348), tol)),
                true,
            ),
        ],
        BenchmarkId::AppD4Arect => vec![
            row(
                "agent first",
                None,
                Some(PlayOrder::AgentFirst),
                Some((q(40, 1), exact)),
                true,
            ),
            row(
                "nature first",
                None,
                Some(PlayOrder::NatureFirst),
                Some((q(360, 7), tol)),
                true,
            ),
        ],
    }
}

fn run_bench_row(id: BenchmarkId, bench_row: &BenchRow) -> anyhow::Result<bool> {
    let model = build_benchmark_variant(id, &bench_row.variant)?;
    let horizon = default_horizon(id);
    let mut pass = model.validate().is_valid();
    let mut cells = vec![format!("validate={}", if pass { "ok" } else { "broken" })];
    if let Some((expected, tolerance)) = &bench_row.solve {
        let result = solve_saddle(&model, horizon, &SolverConfig::default())?;
        let lower_ok = rpomdp::num::abs(&(result.lower_value.clone() - expected)) <= *tolerance;
        let upper_ok = rpomdp::num::abs(&(result.upper_value.clone() - expected)) <= *tolerance;
        pass &= lower_ok && upper_ok;
        cells.push(format!(
            "solve={} expected={}",
            format_rational(&result.lower_value),
            format_rational(expected)
        ));
    }
    if bench_row.eval {
        let pair = reference_pair(id, &bench_row.variant)?
            .ok_or_else(|| anyhow::anyhow!("missing tabulated pair for {id}"))?;
        let value = value_fh(&model, &pair.agent, &pair.nature, horizon)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let ok = value == pair.value;
        pass &= ok;
        cells.push(format!(
            "eval={} expected={}",
            format_rational(&value),
            format_rational(&pair.value)
        ));
    }
    out!(
        "{} [{}] {} {}",
        id,
        bench_row.label,
        cells.join(" "),
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(pass)
}

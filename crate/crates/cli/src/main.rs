//! Command-line front end: proving, FSA validation, model auditing.
//!
//! Exit codes for `prove`: 0 valid, 1 invalid, 2 budget exhausted,
//! 3 malformed input or configuration, 4 internal error (a countermodel
//! that fails its own verification).

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gramlog::formula::Formula;
use gramlog::grammar::{parse_system, SemiThueSystem};
use gramlog::lang::{check_fsa_matches_grammar, parse_fsa, UserFsa};
use gramlog::parse::parse_formula;
use gramlog::prover_auto::{prove1, AutoVerdict};
use gramlog::prover_grammar::{prove, ProveConfig, ProveError, ProveOutcome};
use gramlog::semantics::{extract_countermodel_auto, extract_countermodel_grammar, KripkeModel};

#[derive(Parser)]
#[command(name = "gramlog", about = "Prover for context-free grammar logics with converse")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide a formula against a rewrite system.
    Prove(ProveArgs),
    /// Compare an FSA's languages with a grammar's rewrite languages.
    ValidateFsa(ValidateFsaArgs),
    /// Audit a model: frame conditions and per-world satisfaction.
    CheckModel(CheckModelArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Grammar,
}

#[derive(Args)]
struct ProveArgs {
    /// Rewrite system file: lines `a -> b c`, `a -> eps`, `#` comments.
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    formula: Option<String>,
    /// File holding a single formula.
    #[arg(long, conflicts_with = "formula")]
    formula_file: Option<PathBuf>,
    /// File with one formula per line.
    #[arg(long, conflicts_with_all = ["formula", "formula_file"])]
    batch: Option<PathBuf>,
    /// Automaton file, required by --method auto.
    #[arg(long)]
    fsa: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "grammar")]
    method: Method,
    /// Height cap for iterative deepening (grammar method).
    #[arg(long, default_value_t = 10)]
    max_k: usize,
    /// Overall time budget in seconds (grammar method).
    #[arg(long)]
    timeout: Option<f64>,
    /// Cap on loop assignments tried per stability check.
    #[arg(long, default_value_t = 10_000)]
    lambda_cap: usize,
    #[arg(long)]
    json: bool,
    /// Worker threads for --batch.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ValidateFsaArgs {
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    fsa: PathBuf,
    /// Compare languages on all words up to this length.
    #[arg(long, default_value_t = 4)]
    max_len: usize,
}

#[derive(Args)]
struct CheckModelArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    formula: Option<String>,
    #[arg(long, conflicts_with = "formula")]
    formula_file: Option<PathBuf>,
}

const EXIT_VALID: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Prove(args) => cmd_prove(&args),
        Cmd::ValidateFsa(args) => cmd_validate_fsa(&args),
        Cmd::CheckModel(args) => cmd_check_model(&args),
    };
    ExitCode::from(code)
}

fn read_file(path: &PathBuf) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INPUT
    })
}

fn load_grammar(path: &PathBuf) -> Result<SemiThueSystem, u8> {
    let text = read_file(path)?;
    match parse_system(&text) {
        Ok(loaded) => {
            if loaded.closure_added_rules {
                eprintln!("note: grammar closed under converse (rules added)");
            }
            Ok(loaded.system)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(EXIT_INPUT)
        }
    }
}

fn load_fsa(path: &PathBuf) -> Result<UserFsa, u8> {
    let text = read_file(path)?;
    parse_fsa(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INPUT
    })
}

fn load_formula_arg(
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<Formula, u8> {
    let text = match (inline, file) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => read_file(p)?.trim().to_string(),
        _ => {
            eprintln!("error: provide exactly one of --formula or --formula-file");
            return Err(EXIT_INPUT);
        }
    };
    parse_formula(&text).map_err(|e| {
        eprintln!("error: formula: {e}");
        EXIT_INPUT
    })
}

struct ProveCtx {
    system: SemiThueSystem,
    fsa: Option<UserFsa>,
    method: Method,
    config: ProveConfig,
    json: bool,
}

fn cmd_prove(args: &ProveArgs) -> u8 {
    if args.method == Method::Auto && args.fsa.is_none() {
        eprintln!("error: --method auto requires --fsa");
        return EXIT_INPUT;
    }
    let system = match load_grammar(&args.grammar) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let fsa = match &args.fsa {
        Some(p) => match load_fsa(p) {
            Ok(f) => Some(f),
            Err(c) => return c,
        },
        None => None,
    };
    let ctx = ProveCtx {
        system,
        fsa,
        method: args.method,
        config: ProveConfig {
            max_k: args.max_k,
            timeout: args.timeout.map(Duration::from_secs_f64),
            lambda_cap: args.lambda_cap,
        },
        json: args.json,
    };

    if let Some(batch) = &args.batch {
        let text = match read_file(batch) {
            Ok(t) => t,
            Err(c) => return c,
        };
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        return run_batch(&ctx, &lines, args.jobs.max(1));
    }

    let formula = match load_formula_arg(&args.formula, &args.formula_file) {
        Ok(f) => f,
        Err(c) => return c,
    };
    let (code, report) = prove_one(&ctx, &formula);
    println!("{report}");
    code
}

fn run_batch(ctx: &ProveCtx, lines: &[&str], jobs: usize) -> u8 {
    let mut results: Vec<(u8, String)> = Vec::with_capacity(lines.len());
    if jobs <= 1 {
        for line in lines {
            results.push(batch_entry(ctx, line));
        }
    } else {
        let mut slots: Vec<Option<(u8, String)>> = vec![None; lines.len()];
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_mutex = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(lines.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= lines.len() {
                        break;
                    }
                    let r = batch_entry(ctx, lines[i]);
                    slots_mutex.lock().unwrap()[i] = Some(r);
                });
            }
        });
        results.extend(slots.into_iter().map(|r| r.expect("worker filled slot")));
    }
    let mut worst = 0u8;
    for (code, report) in results {
        println!("{report}");
        worst = worst.max(code);
    }
    worst
}

fn batch_entry(ctx: &ProveCtx, line: &str) -> (u8, String) {
    match parse_formula(line) {
        Ok(f) => {
            let (code, report) = prove_one(ctx, &f);
            if ctx.json {
                (code, report)
            } else {
                (code, format!("{line}: {report}"))
            }
        }
        Err(e) => (
            EXIT_INPUT,
            if ctx.json {
                json!({"formula": line, "error": e.to_string()}).to_string()
            } else {
                format!("{line}: error: {e}")
            },
        ),
    }
}

fn prove_one(ctx: &ProveCtx, formula: &Formula) -> (u8, String) {
    match ctx.method {
        Method::Auto => prove_auto(ctx, formula),
        Method::Grammar => prove_grammar(ctx, formula),
    }
}

fn render(ctx: &ProveCtx, formula: &Formula, verdict: &str, extra: Value) -> String {
    if ctx.json {
        let mut obj = json!({"formula": formula.to_string(), "verdict": verdict});
        if let (Some(o), Some(e)) = (obj.as_object_mut(), extra.as_object()) {
            for (k, v) in e {
                o.insert(k.clone(), v.clone());
            }
        }
        obj.to_string()
    } else {
        let mut out = verdict.to_uppercase();
        if let Some(m) = extra.get("countermodel") {
            out.push_str(&format!("\ncountermodel: {m}"));
        }
        if let Some(s) = extra.get("summary").and_then(Value::as_str) {
            out.push_str(&format!(" ({s})"));
        }
        out
    }
}

fn prove_auto(ctx: &ProveCtx, formula: &Formula) -> (u8, String) {
    let fsa = ctx.fsa.as_ref().expect("checked in cmd_prove");
    match prove1(fsa, formula) {
        Ok((AutoVerdict::Valid(trace), stats)) => {
            let extra = json!({
                "summary": format!("{} steps, depth {}", trace.step_count(), trace.depth()),
                "trace": serde_json::to_value(&trace).unwrap(),
                "stats": {"steps": stats.steps, "branches": stats.branches,
                          "max_content": stats.max_content, "content_bound": stats.content_bound},
            });
            (EXIT_VALID, render(ctx, formula, "valid", extra))
        }
        Ok((AutoVerdict::Refuted { sequent, loops }, stats)) => {
            let model = match extract_countermodel_auto(&sequent, &loops, fsa) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("internal error: extraction failed: {e}");
                    return (EXIT_INTERNAL, String::new());
                }
            };
            let root = sequent.root().to_string();
            if let Err(msg) = verify_countermodel(&model, &root, formula, None) {
                eprintln!("internal error: countermodel failed verification: {msg}");
                return (EXIT_INTERNAL, String::new());
            }
            let extra = json!({
                "countermodel": model.to_json(),
                "root_world": root,
                "stats": {"steps": stats.steps, "branches": stats.branches,
                          "max_content": stats.max_content, "content_bound": stats.content_bound},
            });
            (EXIT_INVALID, render(ctx, formula, "invalid", extra))
        }
        Err(e) => {
            eprintln!("error: {e}");
            (EXIT_INPUT, String::new())
        }
    }
}

fn prove_grammar(ctx: &ProveCtx, formula: &Formula) -> (u8, String) {
    match prove(&ctx.system, formula, &ctx.config) {
        Ok((ProveOutcome::Valid(trace), stats)) => {
            let extra = json!({
                "summary": format!("{} steps, depth {}", trace.step_count(), trace.depth()),
                "trace": serde_json::to_value(&trace).unwrap(),
                "stats": stats_json(&stats),
            });
            (EXIT_VALID, render(ctx, formula, "valid", extra))
        }
        Ok((ProveOutcome::Refuted { sequent, witness }, stats)) => {
            let model = match extract_countermodel_grammar(&sequent, &witness, &ctx.system) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("internal error: extraction failed: {e}");
                    return (EXIT_INTERNAL, String::new());
                }
            };
            let root = sequent.root().to_string();
            if let Err(msg) = verify_countermodel(&model, &root, formula, Some(&ctx.system)) {
                eprintln!("internal error: countermodel failed verification: {msg}");
                return (EXIT_INTERNAL, String::new());
            }
            let lambda: BTreeMap<String, String> = witness
                .lambda
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            let extra = json!({
                "countermodel": model.to_json(),
                "root_world": root,
                "witness": lambda,
                "stats": stats_json(&stats),
            });
            (EXIT_INVALID, render(ctx, formula, "invalid", extra))
        }
        Ok((ProveOutcome::Budget { last_k, timed_out }, stats)) => {
            let extra = json!({
                "summary": format!("k reached {last_k}{}", if timed_out { ", timed out" } else { "" }),
                "stats": stats_json(&stats),
            });
            (EXIT_BUDGET, render(ctx, formula, "budget-exhausted", extra))
        }
        Err(ProveError::LambdaCap { cap }) => {
            let extra = json!({"summary": format!("loop assignment cap {cap} exceeded")});
            (EXIT_BUDGET, render(ctx, formula, "budget-exhausted", extra))
        }
        Err(e) => {
            eprintln!("error: {e}");
            (EXIT_INPUT, String::new())
        }
    }
}

fn stats_json(stats: &gramlog::prover_grammar::ProveStats) -> Value {
    Value::Array(
        stats
            .per_k
            .iter()
            .map(|k| {
                json!({"k": k.k, "steps": k.steps, "emptiness_queries": k.emptiness_queries,
                       "cache_hits": k.cache_hits, "triple_recomputes": k.triple_recomputes,
                       "lambdas_tried": k.lambdas_tried})
            })
            .collect(),
    )
}

/// Every printed countermodel is re-verified first: converse closure,
/// falsification at the root world, and (grammar method) the frame
/// conditions.
fn verify_countermodel(
    model: &KripkeModel,
    root: &str,
    formula: &Formula,
    system: Option<&SemiThueSystem>,
) -> Result<(), String> {
    if let Err((l, x, y)) = model.check_converse_closure() {
        return Err(format!(
            "converse closure broken at {l}: ({}, {})",
            model.worlds[x], model.worlds[y]
        ));
    }
    let w = model
        .world_index(root)
        .ok_or_else(|| format!("root world {root} missing"))?;
    if model.satisfies(w, formula) {
        return Err(format!("formula holds at root world {root}"));
    }
    if let Some(sys) = system {
        if !model.frame_satisfies(sys) {
            return Err("frame conditions violated".into());
        }
    }
    Ok(())
}

fn cmd_validate_fsa(args: &ValidateFsaArgs) -> u8 {
    let system = match load_grammar(&args.grammar) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let fsa = match load_fsa(&args.fsa) {
        Ok(f) => f,
        Err(c) => return c,
    };
    match check_fsa_matches_grammar(&fsa, &system, args.max_len) {
        Ok(disagreements) if disagreements.is_empty() => {
            println!("ok: languages agree up to length {}", args.max_len);
            EXIT_VALID
        }
        Ok(disagreements) => {
            for d in &disagreements {
                println!(
                    "disagreement: letter {} word {:?}: fsa={} grammar={}",
                    d.letter,
                    gramlog::formula::word_to_string(&d.word),
                    d.fsa_accepts,
                    d.grammar_derives
                );
            }
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn cmd_check_model(args: &CheckModelArgs) -> u8 {
    let system = match load_grammar(&args.grammar) {
        Ok(s) => s,
        Err(c) => return c,
    };
    let formula = match load_formula_arg(&args.formula, &args.formula_file) {
        Ok(f) => f,
        Err(c) => return c,
    };
    let text = match read_file(&args.model) {
        Ok(t) => t,
        Err(c) => return c,
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: model json: {e}");
            return EXIT_INPUT;
        }
    };
    let model = match KripkeModel::from_json(&value) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Err((l, x, y)) = model.check_converse_closure() {
        println!(
            "converse closure broken at {l}: ({}, {})",
            model.worlds[x], model.worlds[y]
        );
        return EXIT_INVALID;
    }
    let frame_ok = model.frame_satisfies(&system);
    println!("frame conditions: {}", if frame_ok { "ok" } else { "VIOLATED" });
    for (w, name) in model.worlds.iter().enumerate() {
        println!(
            "{name}: formula {}",
            if model.satisfies(w, &formula) { "holds" } else { "fails" }
        );
    }
    if frame_ok {
        EXIT_VALID
    } else {
        EXIT_INVALID
    }
}

//! Command-line front end: parse model/affects/embedding files, run the
//! analyses, and emit deterministic text, JSON, or SVG reports.
//!
//! Exit codes: 0 — analysis completed with no violations and no UNSAT;
//! 1 — analysis completed but violations or UNSAT were found;
//! 2 — input or parse error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::affects::{affects_table, classify_arrows, do_distribution, ho_affects, DoCache};
use crate::corpus;
use crate::graph::{fmt_set, NodeSet};
use crate::loops::{
    cyclicity_certificate, detect_acl, detect_acl_recursive, AffectsSet, Cyclicity,
};
use crate::model::CausalModel;
use crate::prob::{fmt_rational, parse_rational};
use crate::spacetime::{
    check_compat, classify_embedding, render_svg, solver, stability_probe, CompatMode, Embedding,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Environment variable naming the default corpus directory for bare
/// file names.
pub const CORPUS_DIR_ENV: &str = "CAUSET_CORPUS_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "causet",
    about = "Cyclic and fine-tuned causal models, affects relations, causal loops, \
             and space-time embeddings",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Compat,
    Compat1Prime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RequireArg {
    Nontrivial,
    Nondegenerate,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full model report: observed distribution, d-separation property,
    /// fine-tuned independences, arrow classification.
    Analyze(AnalyzeArgs),
    /// One d-separation query on a model's graph.
    Dsep(DsepArgs),
    /// One (conditional higher-order) affects query.
    Affects(AffectsArgs),
    /// Full table of d-separations, independences and affects relations.
    Table(TableArgs),
    /// Affects-causal-loop detection on an affects-set file.
    Loops(LoopsArgs),
    /// Compatibility of an affects set with an embedding.
    EmbedCheck(EmbedCheckArgs),
    /// Search for a compatible (1+1)-Minkowski embedding.
    EmbedFind(EmbedFindArgs),
    /// Perturbation stability of a compatible embedding.
    Stability(StabilityArgs),
    /// Recompute every builtin golden result and diff.
    CorpusVerify(CorpusVerifyArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Model JSON file (or builtin name).
    model: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct DsepArgs {
    model: String,
    /// Comma-separated node lists.
    #[arg(long, short = 'x')]
    x: String,
    #[arg(long, short = 'y')]
    y: String,
    #[arg(long, short = 'z', default_value = "")]
    z: String,
}

#[derive(Debug, Args)]
struct AffectsArgs {
    model: String,
    #[arg(long)]
    source: String,
    #[arg(long)]
    target: String,
    /// Intervention conditioning set do(Z).
    #[arg(long, default_value = "")]
    r#do: String,
    /// Observational conditioning set W.
    #[arg(long, default_value = "")]
    given: String,
}

#[derive(Debug, Args)]
struct TableArgs {
    model: String,
    #[arg(long, default_value_t = 2)]
    max_set: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct LoopsArgs {
    /// Affects-set JSON file (or builtin name).
    set: String,
    /// Check one specific type (1..8); default scans 1..8, the recursive
    /// search, and the cyclicity oracle.
    #[arg(long)]
    r#type: Option<u8>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
}

#[derive(Debug, Args)]
struct EmbedCheckArgs {
    set: String,
    embedding: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Compat)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct EmbedFindArgs {
    set: String,
    #[arg(long, value_enum, default_value_t = RequireArg::Nontrivial)]
    require: RequireArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    set: String,
    embedding: String,
    /// Perturbation radius, a rational like 1/100.
    #[arg(long, default_value = "1/100")]
    eps: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CorpusVerifyArgs {}

struct Failure {
    code: i32,
    message: String,
}

fn input_err(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Resolves a file argument: an existing path, a path under
/// `CAUSET_CORPUS_DIR`, or a builtin corpus entry name.
fn read_input(arg: &str, kind: &str) -> Result<String, Failure> {
    let p = Path::new(arg);
    if p.exists() {
        return std::fs::read_to_string(p).map_err(|e| input_err(format!("{arg}: {e}")));
    }
    if let Ok(dir) = std::env::var(CORPUS_DIR_ENV) {
        let q = PathBuf::from(dir).join(arg);
        if q.exists() {
            return std::fs::read_to_string(&q)
                .map_err(|e| input_err(format!("{}: {e}", q.display())));
        }
    }
    if let Ok(entry) = corpus::load_builtin(arg.trim_end_matches(".json")) {
        let json = match kind {
            "model" => entry.model_json,
            "set" => entry.affects_set_json,
            "embedding" => entry.embedding_json,
            _ => None,
        };
        if let Some(json) = json {
            return Ok(json.to_string());
        }
    }
    Err(input_err(format!("no such file or builtin {kind}: {arg}")))
}

fn load_model(arg: &str) -> Result<CausalModel, Failure> {
    let json = read_input(arg, "model")?;
    CausalModel::from_json(&json).map_err(|e| input_err(format!("{arg}: {e}")))
}

fn load_set(arg: &str) -> Result<AffectsSet, Failure> {
    let json = read_input(arg, "set")?;
    AffectsSet::from_json(&json).map_err(|e| input_err(format!("{arg}: {e}")))
}

fn load_embedding(arg: &str) -> Result<Embedding, Failure> {
    let json = read_input(arg, "embedding")?;
    Embedding::from_json(&json).map_err(|e| input_err(format!("{arg}: {e}")))
}

fn parse_nodes(s: &str) -> NodeSet {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Runs the CLI; returns the exit code and prints the streamed report.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are not errors.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            print!("{e}");
            return if benign { EXIT_OK } else { EXIT_INPUT };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Dsep(args) => dsep(args),
        Command::Affects(args) => affects_cmd(args),
        Command::Table(args) => table_cmd(args),
        Command::Loops(args) => loops_cmd(args),
        Command::EmbedCheck(args) => embed_check(args),
        Command::EmbedFind(args) => embed_find(args),
        Command::Stability(args) => stability(args),
        Command::CorpusVerify(_) => corpus_verify(),
    }
}

fn analyze(args: AnalyzeArgs) -> Result<i32, Failure> {
    let model = load_model(&args.model)?;
    let mut cache = DoCache::new();
    let dist = model
        .observed_distribution()
        .map_err(|e| input_err(format!("evaluation failed: {e}")))?;
    let report = model
        .check_dsep_property()
        .map_err(|e| input_err(format!("d-separation check failed: {e}")))?;
    let fine_tuned = model
        .fine_tuned_independences()
        .map_err(|e| input_err(format!("fine-tuning scan failed: {e}")))?;
    let arrows = classify_arrows(&model, &mut cache)
        .map_err(|e| input_err(format!("arrow classification failed: {e}")))?;
    match args.format {
        Format::Json => {
            let arrows_json: BTreeMap<String, String> = arrows
                .iter()
                .map(|((a, b), k)| (format!("{a}->{b}"), format!("{k:?}").to_lowercase()))
                .collect();
            let doc = serde_json::json!({
                "model": model.name,
                "observed_support": dist
                    .support()
                    .map(|(k, w)| {
                        let key: Vec<String> = k.iter().map(u8::to_string).collect();
                        (key.join(","), fmt_rational(w))
                    })
                    .collect::<BTreeMap<_, _>>(),
                "dsep_property_passed": report.passed(),
                "fine_tuned_independences": fine_tuned
                    .iter()
                    .map(|(x, y, z)| format!("{} ⫫ {} | {}", fmt_set(x), fmt_set(y), fmt_set(z)))
                    .collect::<Vec<_>>(),
                "arrows": arrows_json,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        _ => {
            println!("model: {}", model.name);
            println!("observed distribution:");
            print!("{}", dist.render());
            println!(
                "d-separation property: {}",
                if report.passed() {
                    "passed"
                } else {
                    "VIOLATED"
                }
            );
            if !report.passed() {
                print!("{}", report.render());
            }
            println!("fine-tuned independences:");
            for (x, y, z) in &fine_tuned {
                println!("  {} ⫫ {} | {}", fmt_set(x), fmt_set(y), fmt_set(z));
            }
            println!("arrows:");
            for ((a, b), kind) in &arrows {
                println!("  {a} -> {b}: {}", format!("{kind:?}").to_lowercase());
            }
        }
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FINDINGS
    })
}

fn dsep(args: DsepArgs) -> Result<i32, Failure> {
    let model = load_model(&args.model)?;
    let (x, y, z) = (
        parse_nodes(&args.x),
        parse_nodes(&args.y),
        parse_nodes(&args.z),
    );
    let holds = model
        .graph
        .d_separated(&x, &y, &z)
        .map_err(|e| input_err(e.to_string()))?;
    println!(
        "{} {} {} | {}",
        fmt_set(&x),
        if holds { "⊥d" } else { "⊥̸d" },
        fmt_set(&y),
        fmt_set(&z)
    );
    Ok(EXIT_OK)
}

fn affects_cmd(args: AffectsArgs) -> Result<i32, Failure> {
    let model = load_model(&args.model)?;
    let mut cache = DoCache::new();
    let (x, y) = (parse_nodes(&args.source), parse_nodes(&args.target));
    let (z, w) = (parse_nodes(&args.r#do), parse_nodes(&args.given));
    let holds =
        ho_affects(&model, &x, &y, &z, &w, &mut cache).map_err(|e| input_err(e.to_string()))?;
    let mut rel = crate::affects::AffectsRelation {
        from: x,
        to: y,
        r#do: z,
        given: w,
        holds,
        irreducible: None,
    };
    if holds {
        let red = crate::affects::is_reducible(&model, &rel, &mut cache)
            .map_err(|e| input_err(e.to_string()))?;
        rel.irreducible = Some(!red);
    }
    println!("{}", rel.describe());
    Ok(EXIT_OK)
}

fn table_cmd(args: TableArgs) -> Result<i32, Failure> {
    let model = load_model(&args.model)?;
    let mut cache = DoCache::new();
    let table =
        affects_table(&model, args.max_set, &mut cache).map_err(|e| input_err(e.to_string()))?;
    match args.format {
        Format::Json => println!("{}", table.to_json()),
        _ => print!("{}", table.render()),
    }
    Ok(EXIT_OK)
}

fn loops_cmd(args: LoopsArgs) -> Result<i32, Failure> {
    let set = load_set(&args.set)?;
    if let Some(t) = args.r#type {
        match detect_acl(&set, t) {
            Some(w) => print!("{}", w.render()),
            None => println!("no Type {t} witness"),
        }
        return Ok(EXIT_OK);
    }
    let mut found = false;
    for t in 1..=8 {
        if let Some(w) = detect_acl(&set, t) {
            print!("{}", w.render());
            found = true;
            break;
        }
    }
    if !found {
        if let Some(w) = detect_acl_recursive(&set, args.depth) {
            print!("{}", w.render());
            found = true;
        }
    }
    match cyclicity_certificate(&set).map_err(|e| input_err(e.to_string()))? {
        Cyclicity::Cyclic { explanation } => {
            println!("oracle: cyclic ({explanation})");
            found = true;
        }
        Cyclicity::Unknown { acyclic_witness } => {
            println!(
                "oracle: unknown (acyclic orientation: {})",
                crate::loops::describe_sets(&acyclic_witness)
            );
        }
    }
    if !found {
        println!("no affects causal loop detected");
    }
    Ok(EXIT_OK)
}

fn embed_check(args: EmbedCheckArgs) -> Result<i32, Failure> {
    let set = load_set(&args.set)?;
    let embedding = load_embedding(&args.embedding)?;
    let mode = match args.mode {
        ModeArg::Compat => CompatMode::Compat,
        ModeArg::Compat1Prime => CompatMode::Compat1Prime,
    };
    let report = check_compat(&set, &embedding, mode).map_err(|e| input_err(e.to_string()))?;
    let class = classify_embedding(&set, &embedding).map_err(|e| input_err(e.to_string()))?;
    match args.format {
        Format::Svg => {
            print!(
                "{}",
                render_svg(&embedding).map_err(|e| input_err(e.to_string()))?
            )
        }
        Format::Json => {
            let doc = serde_json::json!({
                "mode": mode,
                "compatible": report.compatible(),
                "violated": report
                    .violated
                    .iter()
                    .map(|(rel, witness)| {
                        serde_json::json!({
                            "relation": rel,
                            "witness": witness.render(),
                        })
                    })
                    .collect::<Vec<_>>(),
                "trivial": class.trivial,
                "degenerate": class.degenerate,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        Format::Text => {
            print!("{}", report.render());
            println!(
                "trivial: {}, degenerate: {}",
                class.trivial, class.degenerate
            );
        }
    }
    Ok(if report.compatible() {
        EXIT_OK
    } else {
        EXIT_FINDINGS
    })
}

fn embed_find(args: EmbedFindArgs) -> Result<i32, Failure> {
    let set = load_set(&args.set)?;
    let require = match args.require {
        RequireArg::Nontrivial => solver::Require::Nontrivial,
        RequireArg::Nondegenerate => solver::Require::Nondegenerate,
    };
    match solver::find_embedding_1p1(&set, require).map_err(|e| input_err(e.to_string()))? {
        solver::EmbedSearch::Found(e) => {
            match args.format {
                Format::Json => println!("{}", e.to_json()),
                Format::Svg => {
                    print!(
                        "{}",
                        render_svg(&e).map_err(|err| input_err(err.to_string()))?
                    )
                }
                Format::Text => {
                    println!("embedding found:");
                    print!("{}", e.render());
                }
            }
            Ok(EXIT_OK)
        }
        solver::EmbedSearch::Unsat { reason } => {
            println!("Unsat: {reason}");
            Ok(EXIT_FINDINGS)
        }
    }
}

fn stability(args: StabilityArgs) -> Result<i32, Failure> {
    let set = load_set(&args.set)?;
    let embedding = load_embedding(&args.embedding)?;
    let eps = parse_rational(&args.eps).map_err(|e| input_err(e.to_string()))?;
    let frac = stability_probe(&set, &embedding, &eps, args.trials, args.seed)
        .map_err(|e| input_err(e.to_string()))?;
    println!(
        "compatible fraction: {} over {} trials (eps = {}, seed = {})",
        fmt_rational(&frac),
        args.trials,
        args.eps,
        args.seed
    );
    Ok(EXIT_OK)
}

fn corpus_verify() -> Result<i32, Failure> {
    let report = corpus::verify_all();
    for entry in corpus::REGISTRY {
        let ok = !report
            .violations
            .iter()
            .any(|v| v.detail.starts_with(&format!("{}:", entry.name)));
        println!("{} {}", if ok { "ok  " } else { "FAIL" }, entry.name);
    }
    if report.passed() {
        println!("all golden results regenerate");
        Ok(EXIT_OK)
    } else {
        print!("{}", report.render());
        Ok(EXIT_FINDINGS)
    }
}

/// Convenience used by tests: a do-distribution query as text.
pub fn do_query(
    model: &CausalModel,
    interventions: &BTreeMap<String, u8>,
) -> Result<String, String> {
    let d = do_distribution(model, interventions).map_err(|e| e.to_string())?;
    Ok(d.render())
}

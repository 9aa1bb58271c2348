//! The `onfair` binary: instance generation, mechanism evaluation,
//! advice sweeps, guarantee tables, curve emission, and axiom scans.

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use onfair_cli::families::FamilyRequest;
use onfair_cli::figures::figure1_data;
use onfair_cli::guarantees::table1_check;
use onfair_cli::harness::{
    axioms_scan, dominance_scan, evaluate_rows, run_examples, sweep_advice, AxiomSelect, RunConfig,
};
use onfair_cli::reports::{write_axiom_rows, write_report_rows, write_rows, OutputFormat};
use onfair_core::advice::oracle;
use onfair_core::evaluation::Engine;
use onfair_core::mechanisms::MechanismKind;
use onfair_core::rational::parse_rational;
use onfair_core::welfare::Objective;
use onfair_core::{Instance, Rational};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "onfair",
    version,
    about = "Simulation laboratory for online fair division with advice"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Evaluation engine: exact-full, exact-compressed, or monte-carlo.
    #[arg(
        long,
        global = true,
        default_value = "exact-compressed",
        value_parser = parse_engine
    )]
    engine: Engine,
    /// Seed for sampled evaluation and random families.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Trial count for sampled evaluation.
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: usize,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Write instances from a named family to a file or stdout.
    Gen(GenArgs),
    /// Evaluate one mechanism on one instance (one row per objective).
    Evaluate(EvaluateArgs),
    /// Sweep the advised prefix length k for one mechanism and objective.
    Sweep(SweepArgs),
    /// Emit the guarantee curves for k = 0..=n, with measured points.
    Figure1(Figure1Args),
    /// Verify every guarantee-direction cell on enumerated instances.
    Table1,
    /// Re-run the worked examples against their pinned values.
    Examples,
    /// Scan fairness axioms for a mechanism on enumerated instances.
    Axioms(AxiomsArgs),
    /// Compare the mechanisms pointwise on enumerated instances.
    Dominance,
}

/// Where the instance comes from: a file on disk or a named family.
#[derive(Args)]
struct SourceArgs {
    /// Path to an instance file.
    #[arg(long, conflicts_with = "family")]
    instance: Option<PathBuf>,
    /// Named family (see `gen --help` for the list).
    #[arg(long)]
    family: Option<String>,
    /// Agent count for generated families.
    #[arg(long, value_parser = parse_positive)]
    n: Option<usize>,
    /// Item count for generated families.
    #[arg(long, value_parser = parse_positive)]
    m: Option<usize>,
    /// Large-utility knob for the example-3 fixture.
    #[arg(long)]
    u: Option<i64>,
}

#[derive(Args)]
struct GenArgs {
    /// Named family: upper-triangular, lower-triangular, like-adversary,
    /// random-binary, random-general, or example-1..example-5.
    #[arg(long)]
    family: String,
    /// Agent count.
    #[arg(long, value_parser = parse_positive)]
    n: Option<usize>,
    /// Item count.
    #[arg(long, value_parser = parse_positive)]
    m: Option<usize>,
    /// Large-utility knob for the example-3 fixture.
    #[arg(long)]
    u: Option<i64>,
    /// How many seeded variants to write (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    count: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Mechanism: like, balanced-like, maximum-like, ranking, or random.
    #[arg(long, value_parser = parse_mechanism)]
    mechanism: MechanismKind,
    /// Objective whose oracle builds the advice tape (es, uw, ew).
    #[arg(long, value_parser = parse_objective, requires = "k")]
    advice: Option<Objective>,
    /// Advised prefix length.
    #[arg(long, requires = "advice")]
    k: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Mechanism: like, balanced-like, maximum-like, ranking, or random.
    #[arg(long, value_parser = parse_mechanism)]
    mechanism: MechanismKind,
    /// Swept objective (es, uw, ew); its oracle builds each tape.
    #[arg(long, value_parser = parse_objective)]
    objective: Objective,
    /// Smallest advised prefix length.
    #[arg(long, default_value_t = 0)]
    k_min: usize,
    /// Largest advised prefix length (defaults to m).
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args)]
struct Figure1Args {
    /// Curve size: guarantees for k = 0..=n.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Emit only the closed-form curves, skipping the measured points.
    #[arg(long)]
    curves_only: bool,
}

#[derive(Args)]
struct AxiomsArgs {
    /// Mechanism: like, balanced-like, maximum-like, ranking, or random.
    #[arg(long, value_parser = parse_mechanism)]
    mechanism: MechanismKind,
    /// Scan all binary square instances up to this side length.
    #[arg(long, default_value_t = 3)]
    max_n: usize,
    /// Which axiom: all, strategyproof, envy-ex-ante, envy-ex-post, pareto.
    #[arg(long, default_value = "all", value_parser = parse_axiom)]
    axiom: AxiomSelect,
    /// Envy tolerance r for the ex-post check.
    #[arg(long, default_value = "1", value_parser = parse_bound)]
    bound: Rational,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse::<Engine>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<usize, String> {
    let value = s.parse::<usize>().map_err(|e| e.to_string())?;
    if value == 0 {
        return Err(String::from("must be at least 1"));
    }
    Ok(value)
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse::<OutputFormat>().map_err(|e| e.to_string())
}

fn parse_mechanism(s: &str) -> Result<MechanismKind, String> {
    s.parse::<MechanismKind>().map_err(|e| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse::<Objective>().map_err(|e| e.to_string())
}

fn parse_axiom(s: &str) -> Result<AxiomSelect, String> {
    s.parse::<AxiomSelect>().map_err(|e| e.to_string())
}

fn parse_bound(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn load_instance(source: &SourceArgs, seed: u64) -> Result<Instance> {
    match (&source.instance, &source.family) {
        (Some(path), None) => Instance::read_file(path)
            .with_context(|| format!("reading {}", path.display())),
        (None, Some(family)) => {
            let mut request = FamilyRequest::new(family);
            request.n = source.n;
            request.m = source.m;
            request.u = source.u;
            request.seed = seed;
            request.build()
        }
        (None, None) => bail!("pass --instance FILE or --family NAME"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

/// `file.json` -> `file-3.json` for multi-instance generation.
fn numbered(path: &Path, index: usize) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance");
    let extension = path
        .extension()
        .and_then(|s| s.to_str())
        .unwrap_or("json");
    path.with_file_name(format!("{stem}-{index}.{extension}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            // A consumer closing the pipe early (`onfair ... | head`) is
            // normal usage, not a failure.
            if err.chain().any(is_broken_pipe) {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(cause: &(dyn std::error::Error + 'static)) -> bool {
    use std::io::ErrorKind::BrokenPipe;
    if let Some(err) = cause.downcast_ref::<std::io::Error>() {
        return err.kind() == BrokenPipe;
    }
    // The writers in `reports` wrap the underlying io error in their own
    // error types, which do not always surface it through `source()`.
    if let Some(err) = cause.downcast_ref::<csv::Error>() {
        return matches!(err.kind(), csv::ErrorKind::Io(io) if io.kind() == BrokenPipe);
    }
    if let Some(err) = cause.downcast_ref::<serde_json::Error>() {
        return err.io_error_kind() == Some(BrokenPipe);
    }
    false
}

/// Runs one subcommand. `Ok(false)` means the command completed but a
/// pinned value or claimed guarantee did not hold.
fn run(cli: Cli) -> Result<bool> {
    let global = &cli.global;
    let config = RunConfig {
        engine: global.engine,
        seed: global.seed,
        samples: global.samples,
    };
    let out = global.out.as_deref();
    match cli.command {
        Command::Gen(args) => {
            let mut request = FamilyRequest::new(&args.family);
            request.n = args.n;
            request.m = args.m;
            request.u = args.u;
            request.seed = global.seed;
            if args.count <= 1 {
                let inst = request.build()?;
                match out {
                    Some(path) => inst
                        .write_file(path)
                        .with_context(|| format!("writing {}", path.display()))?,
                    None => {
                        use std::io::Write;
                        writeln!(std::io::stdout(), "{}", inst.to_json_string())?
                    }
                }
            } else {
                let base = out.context("--count above 1 needs --out (used as a numbered prefix)")?;
                for index in 0..args.count {
                    let mut variant = request.clone();
                    variant.seed = global.seed + index as u64;
                    let inst = variant.build()?;
                    let path = numbered(base, index);
                    inst.write_file(&path)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
            }
            Ok(true)
        }
        Command::Evaluate(args) => {
            let inst = load_instance(&args.source, global.seed)?;
            let advice = args.advice.zip(args.k);
            if let Some((objective, k)) = advice {
                let (tape, policy) = oracle(&inst, objective, k)?;
                eprintln!(
                    "advice tape: k = {}, l = {}, budget = {} bits, entries = {:?}, hex = {}",
                    policy.k,
                    policy.l,
                    tape.declared_bit_budget,
                    tape.entries,
                    tape.to_hex()
                );
            }
            let rows = evaluate_rows(&inst, args.mechanism, advice, &config)?;
            write_report_rows(&rows, global.format, out)?;
            Ok(true)
        }
        Command::Sweep(args) => {
            let inst = load_instance(&args.source, global.seed)?;
            let k_max = args.k_max.unwrap_or(inst.m);
            ensure!(
                args.k_min <= k_max && k_max <= inst.m,
                "need k-min <= k-max <= m = {}",
                inst.m
            );
            let ks: Vec<usize> = (args.k_min..=k_max).collect();
            let rows = sweep_advice(&inst, args.mechanism, args.objective, &ks, &config)?;
            write_report_rows(&rows, global.format, out)?;
            Ok(true)
        }
        Command::Figure1(args) => {
            let rows = figure1_data(args.n, &config, !args.curves_only)?;
            write_report_rows(&rows, global.format, out)?;
            Ok(true)
        }
        Command::Table1 => {
            let checks = table1_check()?;
            write_rows(&checks, global.format, out)?;
            let failing = checks.iter().filter(|c| !c.ok).count();
            if failing > 0 {
                eprintln!("table1: {failing} of {} cells failed", checks.len());
            }
            Ok(failing == 0)
        }
        Command::Examples => {
            let outcome = run_examples()?;
            write_report_rows(&outcome.rows, global.format, out)?;
            for mismatch in &outcome.mismatches {
                eprintln!("mismatch: {mismatch}");
            }
            Ok(outcome.mismatches.is_empty())
        }
        Command::Axioms(args) => {
            let rows = axioms_scan(args.mechanism, args.max_n, args.axiom, &args.bound)?;
            write_axiom_rows(&rows, global.format, out)?;
            Ok(true)
        }
        Command::Dominance => {
            let checks = dominance_scan()?;
            write_rows(&checks, global.format, out)?;
            let failing = checks.iter().filter(|c| !c.ok).count();
            if failing > 0 {
                eprintln!("dominance: {failing} of {} checks failed", checks.len());
            }
            Ok(failing == 0)
        }
    }
}

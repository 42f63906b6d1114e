//! Command-line front-end: load a BIF network, answer queries, report chain
//! width statistics, and benchmark against the brute-force oracle.
//!
//! Exit codes: 0 success, 1 usage, 2 file/parse, 3 inconsistent evidence,
//! 4 joint size cap.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use stochain::oracle;
use stochain::{
    dry_run_select, dry_run_widths, infer_report, parse_bif, stretch, BayesNet, Error, InferConfig,
    Predicate, Query,
};

#[derive(Parser)]
#[command(
    name = "stochain",
    version,
    about = "Exact Bayesian network inference over chains of stochastic channels"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Posterior of an observation node given evidence
    Infer(InferArgs),
    /// Prior marginal of a node (infer with no evidence)
    Marginal(MarginalArgs),
    /// Width statistics over random dry stretch runs
    Stats(StatsArgs),
    /// Random-query benchmark with oracle cross-checking
    Bench(BenchArgs),
}

#[derive(Args)]
struct InferArgs {
    /// BIF network file
    file: PathBuf,
    /// Observation node
    #[arg(long)]
    observe: String,
    /// Evidence item, `NODE=label` (sharp) or `NODE=[v1,v2,...]` (fuzzy); repeatable
    #[arg(long = "evidence")]
    evidence: Vec<String>,
    /// Random dry stretch runs used to pick the chain order
    #[arg(long = "dry-runs", default_value_t = 1000)]
    dry_runs: usize,
    /// Seed for all randomized choices
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stretch the full network instead of pruning to the query
    #[arg(long = "no-prune")]
    no_prune: bool,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MarginalArgs {
    /// BIF network file
    file: PathBuf,
    /// Node whose marginal to compute
    #[arg(long)]
    observe: String,
    #[arg(long = "dry-runs", default_value_t = 1000)]
    dry_runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "no-prune")]
    no_prune: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// BIF network file
    file: PathBuf,
    /// Number of dry runs
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the stage listing of the selected chain
    #[arg(long = "dump-chain")]
    dump_chain: bool,
    /// Print the selected chain in dot format
    #[arg(long)]
    dot: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// BIF network file
    file: PathBuf,
    /// Number of random queries
    #[arg(short = 'n', long = "queries", default_value_t = 20)]
    queries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "dry-runs", default_value_t = 1000)]
    dry_runs: usize,
}

enum CliError {
    Usage(String),
    Engine(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Engine(e)
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Usage(_) => 1,
        CliError::Engine(err) => match err {
            Error::Parse { .. } | Error::Unsupported { .. } | Error::Cycle { .. } => 2,
            Error::InconsistentEvidence { .. } | Error::ZeroValidity => 3,
            Error::SizeCap { .. } => 4,
            _ => 1,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.cmd {
        Cmd::Infer(args) => cmd_infer(args),
        Cmd::Marginal(args) => cmd_infer(InferArgs {
            file: args.file,
            observe: args.observe,
            evidence: Vec::new(),
            dry_runs: args.dry_runs,
            seed: args.seed,
            no_prune: args.no_prune,
            json: args.json,
        }),
        Cmd::Stats(args) => cmd_stats(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Engine(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load(path: &Path) -> Result<BayesNet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Engine(Error::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    Ok(parse_bif(&text)?)
}

/// `NODE=label` or `NODE=[v1,v2,...]` into an evidence pair.
fn parse_evidence(net: &BayesNet, item: &str) -> Result<(String, Predicate), CliError> {
    let (node, value) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("evidence `{item}` is not NODE=value")))?;
    let def = net
        .node(node)
        .map_err(|_| CliError::Usage(format!("evidence names unknown node `{node}`")))?;
    let space = net.var_space(node)?;
    if let Some(inner) = value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
        let vals: Result<Vec<f64>, _> = inner.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| {
            CliError::Usage(format!("evidence vector `{value}` has a non-numeric entry"))
        })?;
        if vals.len() != def.card() {
            return Err(CliError::Usage(format!(
                "evidence vector for {node} has {} entries, the node has {} labels",
                vals.len(),
                def.card()
            )));
        }
        let pred = Predicate::new(space, vals).map_err(|e| match e {
            Error::OutOfRange { value, .. } => CliError::Usage(format!(
                "evidence value {value} for {node} is outside [0,1]"
            )),
            other => CliError::Engine(other),
        })?;
        Ok((node.to_string(), pred))
    } else {
        let idx = def.labels.iter().position(|l| l == value).ok_or_else(|| {
            CliError::Usage(format!(
                "`{value}` is not a label of {node} (labels: {})",
                def.labels.join(", ")
            ))
        })?;
        Ok((node.to_string(), Predicate::indicator(space, idx)?))
    }
}

#[derive(Serialize)]
struct JsonPosterior {
    observe: String,
    posterior: Vec<JsonEntry>,
    ket: String,
    order: Vec<String>,
    width: usize,
    stages: usize,
    pruned_nodes: Vec<String>,
    seed: u64,
    dry_runs: usize,
    elapsed_ms: f64,
}

#[derive(Serialize)]
struct JsonEntry {
    label: String,
    p: f64,
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    let net = load(&args.file)?;
    if args.dry_runs == 0 {
        return Err(CliError::Usage("--dry-runs must be at least 1".into()));
    }
    let mut evidence = Vec::with_capacity(args.evidence.len());
    for item in &args.evidence {
        evidence.push(parse_evidence(&net, item)?);
    }
    if !net.contains(&args.observe) {
        return Err(CliError::Usage(format!(
            "unknown observation node `{}`",
            args.observe
        )));
    }
    let query = Query::new(args.observe.clone(), evidence);
    let cfg = InferConfig {
        dry_runs: args.dry_runs,
        seed: args.seed,
        prune: !args.no_prune,
    };
    let outcome = infer_report(&net, &query, &cfg)?;
    if args.json {
        let node = net.node(&query.observe)?;
        let payload = JsonPosterior {
            observe: query.observe.clone(),
            posterior: node
                .labels
                .iter()
                .zip(outcome.posterior.probs())
                .map(|(l, &p)| JsonEntry {
                    label: l.clone(),
                    p,
                })
                .collect(),
            ket: outcome.posterior.to_string(),
            order: outcome.report.order.clone(),
            width: outcome.report.width,
            stages: outcome.report.stage_count,
            pruned_nodes: outcome.report.pruned_nodes.clone(),
            seed: args.seed,
            dry_runs: args.dry_runs,
            elapsed_ms: outcome.report.elapsed.as_secs_f64() * 1e3,
        };
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        println!("{}", outcome.posterior);
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonStats {
    runs: usize,
    seed: u64,
    min_width: usize,
    max_width: usize,
    distinct_widths: Vec<usize>,
    order: Vec<String>,
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let net = load(&args.file)?;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let sinks = net.sinks();
    let keep: Vec<&str> = sinks.iter().map(String::as_str).collect();
    let widths = dry_run_widths(&net, &keep, args.runs, args.seed)?;
    let (order, min_width) = dry_run_select(&net, &keep, args.runs, args.seed)?;
    let mut distinct: Vec<usize> = widths.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let max_width = *widths.iter().max().unwrap();

    if args.json {
        let payload = JsonStats {
            runs: args.runs,
            seed: args.seed,
            min_width,
            max_width,
            distinct_widths: distinct,
            order,
        };
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        println!("runs: {}", args.runs);
        println!("min width: {min_width}");
        println!("max width: {max_width}");
        println!("distinct widths ({}):", distinct.len());
        println!(
            "  {}",
            distinct
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        println!("selected order: {}", order.join(" "));
        if args.dump_chain || args.dot {
            let chain = stretch(&net, &order, &keep)?;
            if args.dump_chain {
                print!("{}", chain.describe());
            }
            if args.dot {
                print!("{}", chain.to_dot());
            }
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let net = load(&args.file)?;
    let names = net.node_names();
    if names.is_empty() {
        return Err(CliError::Usage("network has no nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    println!(
        "{:>4}  {:<16} {:>2}  {:>10} {:>10}  oracle",
        "#", "observe", "ev", "width", "time_ms"
    );
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for i in 0..args.queries {
        // 1-5 sharp evidence nodes on a random observation node
        let observe = names[rng.random_range(0..names.len())].clone();
        let max_ev = 5usize.min(names.len().saturating_sub(1)).max(1);
        let n_ev = rng.random_range(1..=max_ev);
        let mut pool: Vec<&String> = names.iter().filter(|n| **n != observe).collect();
        let mut items = Vec::new();
        for _ in 0..n_ev.min(pool.len()) {
            let node = pool.remove(rng.random_range(0..pool.len()));
            let def = net.node(node)?;
            let label = def.labels[rng.random_range(0..def.card())].clone();
            items.push((node.clone(), label));
        }
        let sharp: Vec<(&str, &str)> = items
            .iter()
            .map(|(n, l)| (n.as_str(), l.as_str()))
            .collect();
        let query = Query::with_sharp(&net, &observe, &sharp)?;
        let cfg = InferConfig {
            dry_runs: args.dry_runs,
            seed: args.seed.wrapping_add(i as u64),
            prune: true,
        };
        let start = Instant::now();
        let outcome = infer_report(&net, &query, &cfg);
        let ms = start.elapsed().as_secs_f64() * 1e3;

        // oracle on the pruned sub-query when it fits the entry cap
        let mut relevant: Vec<&str> = vec![observe.as_str()];
        relevant.extend(items.iter().map(|(n, _)| n.as_str()));
        let pruned = net.prune(&relevant)?;
        let reference = oracle::brute_infer(&pruned, &query);

        let (width, verdict) = match (&outcome, &reference) {
            (Ok(out), Ok(want)) => {
                let dev = out
                    .posterior
                    .probs()
                    .iter()
                    .zip(want.probs())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                worst = worst.max(dev);
                checked += 1;
                (out.report.width, format!("dev {dev:.2e}"))
            }
            (Err(Error::InconsistentEvidence { .. }), Err(Error::InconsistentEvidence { .. })) => {
                (0, "inconsistent (agrees)".to_string())
            }
            (Ok(out), Err(Error::SizeCap { .. })) => {
                (out.report.width, "skipped (cap)".to_string())
            }
            (Err(e), _) => return Err(CliError::Engine(e.clone())),
            (_, Err(e)) => return Err(CliError::Engine(e.clone())),
        };
        println!(
            "{:>4}  {:<16} {:>2}  {:>10} {:>10.2}  {}",
            i,
            observe,
            items.len(),
            width,
            ms,
            verdict
        );
    }
    println!(
        "queries: {}  oracle-checked: {checked}  max oracle deviation: {worst:.3e}",
        args.queries
    );
    Ok(())
}

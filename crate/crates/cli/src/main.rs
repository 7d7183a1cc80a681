//! Command-line front end: replay a stream against a query, generate
//! synthetic workloads, differential-check the engine against the
//! brute-force oracle, and benchmark query directories.
//!
//! Exit codes: 0 ok, 1 usage, 2 parse/input error, 3 oracle mismatch,
//! 4 timeout.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};
use tempomatch::engine::{EngineError, EngineOptions, MatchReport, StreamEngine};
use tempomatch::matcher::Polarity;
use tempomatch::{gen, io as tmio, oracle};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(name = "tempomatch", version, about = "streaming temporal subgraph matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a data stream and report occurring/expiring embeddings.
    Match(MatchArgs),
    /// Generate synthetic workloads.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Replay a stream comparing engine reports to oracle snapshot diffs.
    OracleCheck(OracleCheckArgs),
    /// Run every query in a directory against one stream.
    Bench(BenchArgs),
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Sliding window width in stream time units.
    #[arg(long)]
    window: u64,
    #[arg(long)]
    directed: bool,
    /// Print running totals instead of full mappings.
    #[arg(long)]
    count: bool,
    /// Stop after this many reports.
    #[arg(long)]
    limit: Option<u64>,
    /// Disable the TC-matchable edge filter.
    #[arg(long = "no-filter")]
    no_filter: bool,
    /// Disable the backtracking pruning rules.
    #[arg(long = "no-prune")]
    no_prune: bool,
    /// Print a summary statistics block after the reports.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Random-walk a query out of a data stream snapshot.
    Query(GenQueryArgs),
    /// Emit a synthetic temporal edge stream.
    Stream(GenStreamArgs),
}

#[derive(Args)]
struct GenQueryArgs {
    #[arg(long)]
    data: PathBuf,
    /// Query size in edges.
    #[arg(long)]
    size: usize,
    /// Target temporal-order density in [0, 1].
    #[arg(long)]
    density: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    directed: bool,
    /// Walk only the suffix window of this width instead of the whole graph.
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenStreamArgs {
    #[arg(long, default_value_t = 100)]
    vertices: usize,
    #[arg(long, default_value_t = 1000)]
    edges: usize,
    #[arg(long, default_value_t = 5)]
    labels: usize,
    /// Targeted mean number of parallel edges per touched vertex pair.
    #[arg(long = "parallel-rate", default_value_t = 1.0)]
    parallel_rate: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    window: u64,
    #[arg(long)]
    directed: bool,
    /// Refuse to run events while more than this many edges are active.
    #[arg(long = "max-edges")]
    max_edges: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "query-dir")]
    query_dir: PathBuf,
    #[arg(long)]
    window: u64,
    #[arg(long)]
    directed: bool,
    /// Per-query time budget in seconds.
    #[arg(long)]
    timeout: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Let clap print help/version normally; everything else is a
            // usage error with our exit code.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))
}

fn load_stream(path: &Path) -> anyhow::Result<tmio::StreamFile> {
    let text = read_to_string(path)?;
    tmio::parse_stream(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn load_query(path: &Path) -> anyhow::Result<tempomatch::TemporalQuery> {
    let text = read_to_string(path)?;
    tmio::parse_query(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Match(args) => cmd_match(args),
        Command::Generate(GenerateCmd::Query(args)) => cmd_gen_query(args),
        Command::Generate(GenerateCmd::Stream(args)) => cmd_gen_stream(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn engine_options(window: u64, directed: bool, no_filter: bool, no_prune: bool) -> EngineOptions {
    let mut opts = EngineOptions::new(window);
    opts.directed = directed;
    opts.match_opts.filter = !no_filter;
    opts.match_opts.prune = !no_prune;
    opts
}

fn cmd_match(args: MatchArgs) -> anyhow::Result<ExitCode> {
    let stream = load_stream(&args.data)?;
    let query = load_query(&args.query)?;
    let mut opts = engine_options(args.window, args.directed, args.no_filter, args.no_prune);
    opts.match_opts.limit = args.limit;
    let mut engine = StreamEngine::new(&stream, query, opts)?;
    let mut batch: Vec<MatchReport> = Vec::new();
    let mut total = 0u64;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    use std::io::Write;
    while engine.step(&mut |r| batch.push(r.clone()))?.is_some() {
        for r in batch.drain(..) {
            total += 1;
            let line = if args.count {
                tmio::format_count_report(&r, total)
            } else {
                tmio::format_report(engine.graph(), engine.query(), &r)
            };
            writeln!(out, "{line}")?;
        }
    }
    if args.stats {
        writeln!(out, "{}", engine.summary())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn write_out(path: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_gen_stream(args: GenStreamArgs) -> anyhow::Result<ExitCode> {
    anyhow::ensure!(args.vertices >= 2, "need at least two vertices");
    anyhow::ensure!(args.labels >= 1, "need at least one label");
    let stream = gen::synth_stream(
        args.vertices,
        args.edges,
        args.labels,
        args.parallel_rate,
        args.seed,
    );
    write_out(args.out.as_deref(), &tmio::write_stream(&stream))?;
    Ok(ExitCode::SUCCESS)
}

fn materialize(
    stream: &tmio::StreamFile,
    directed: bool,
    window: Option<u64>,
) -> anyhow::Result<tempomatch::TemporalGraph> {
    let mut g = tempomatch::TemporalGraph::new(directed);
    for (id, label) in &stream.vertices {
        g.add_vertex(*id, label)?;
    }
    let mut inserted = Vec::new();
    for e in &stream.edges {
        let s = g
            .resolve_vertex(e.src)
            .ok_or_else(|| anyhow::anyhow!("unknown vertex {}", e.src))?;
        let d = g
            .resolve_vertex(e.dst)
            .ok_or_else(|| anyhow::anyhow!("unknown vertex {}", e.dst))?;
        let id = g.insert_edge(s, d, e.elabel.as_deref(), e.ts)?;
        inserted.push((e.ts, id));
    }
    if let (Some(w), Some(&(last_ts, _))) = (window, inserted.last()) {
        for (ts, id) in inserted {
            if ts + w <= last_ts {
                g.delete_expired(id)?;
            }
        }
    }
    Ok(g)
}

fn cmd_gen_query(args: GenQueryArgs) -> anyhow::Result<ExitCode> {
    anyhow::ensure!(args.size >= 1, "query size must be positive");
    let stream = load_stream(&args.data)?;
    let graph = materialize(&stream, args.directed, args.window)?;
    // The order needs strictly increasing witness timestamps; re-walk with
    // derived seeds on collision.
    let mut last_err = None;
    for attempt in 0..64u64 {
        let seed = args.seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15));
        let walked = gen::random_walk_query(&graph, args.size, seed)?;
        let ts: Vec<u64> = walked
            .witness_edges
            .iter()
            .map(|&d| graph.edge(d).ts)
            .collect();
        match gen::impose_order(args.size, &ts, args.density, seed) {
            Ok(pairs) => {
                let q = tempomatch::TemporalQuery::new(
                    walked
                        .query
                        .vertices()
                        .map(|u| walked.query.vertex(u).clone())
                        .collect(),
                    walked
                        .query
                        .edges()
                        .map(|e| walked.query.edge(e).clone())
                        .collect(),
                    pairs,
                )
                .map_err(|e| anyhow::anyhow!("generated query invalid: {e}"))?;
                write_out(args.out.as_deref(), &tmio::write_query(&q))?;
                return Ok(ExitCode::SUCCESS);
            }
            Err(gen::GenError::TimestampCollision) => {
                last_err = Some(gen::GenError::TimestampCollision);
                continue;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(anyhow::anyhow!(
        "could not draw distinct witness timestamps: {:?}",
        last_err
    ))
}

/// Canonical shape of a report: polarity plus the vertex and edge images in
/// query id order.
fn canon(report: &MatchReport) -> (bool, Vec<u32>, Vec<u32>) {
    (
        report.polarity == Polarity::Occurred,
        report.embedding.emap.iter().map(|e| e.0).collect(),
        report.embedding.vmap.iter().map(|v| v.0).collect(),
    )
}

fn cmd_oracle_check(args: OracleCheckArgs) -> anyhow::Result<ExitCode> {
    let stream = load_stream(&args.data)?;
    let query = load_query(&args.query)?;
    let opts = engine_options(args.window, args.directed, false, false);
    let mut engine = StreamEngine::new(&stream, query, opts)?;
    let mut before = BTreeSet::new();
    let mut events = 0u64;
    loop {
        let mut batch: Vec<MatchReport> = Vec::new();
        let Some(outcome) = engine.step(&mut |r| batch.push(r.clone()))? else {
            break;
        };
        events += 1;
        if engine.graph().active_edge_count() > args.max_edges {
            eprintln!(
                "active edge count {} exceeds --max-edges {}",
                engine.graph().active_edge_count(),
                args.max_edges
            );
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        let after = oracle::enumerate_all(engine.graph(), engine.query());
        let occurred: BTreeSet<_> = after.difference(&before).cloned().collect();
        let expired: BTreeSet<_> = before.difference(&after).cloned().collect();
        let shape = |m: &tempomatch::Embedding, occ: bool| {
            (
                occ,
                m.emap.iter().map(|e| e.0).collect::<Vec<u32>>(),
                m.vmap.iter().map(|v| v.0).collect::<Vec<u32>>(),
            )
        };
        let mut want: Vec<(bool, Vec<u32>, Vec<u32>)> = occurred
            .iter()
            .map(|m| shape(m, true))
            .chain(expired.iter().map(|m| shape(m, false)))
            .collect();
        want.sort();
        let mut got: Vec<(bool, Vec<u32>, Vec<u32>)> = batch.iter().map(canon).collect();
        got.sort();
        if want != got {
            eprintln!(
                "oracle mismatch at event {} (fire time {}): engine {} reports, oracle {}",
                events,
                outcome.fire_time,
                got.len(),
                want.len()
            );
            return Ok(ExitCode::from(EXIT_MISMATCH));
        }
        before = after;
    }
    println!("ok events={events}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let stream = load_stream(&args.data)?;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.query_dir)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", args.query_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    anyhow::ensure!(!entries.is_empty(), "no query files in directory");
    let mut any_timeout = false;
    for path in entries {
        let query = load_query(&path)?;
        let mut opts = engine_options(args.window, args.directed, false, false);
        opts.match_opts.deadline = Some(Instant::now() + Duration::from_secs(args.timeout));
        let mut engine = StreamEngine::new(&stream, query, opts)?;
        let started = Instant::now();
        let mut sink = |_: &MatchReport| {};
        let status = match engine.run(&mut sink) {
            Ok(_) => "ok",
            Err(EngineError::Timeout) => {
                any_timeout = true;
                "timeout"
            }
            Err(e) => return Err(e.into()),
        };
        println!("query={}", path.display());
        println!("status={status}");
        println!("elapsed_ms={}", started.elapsed().as_millis());
        println!("{}", engine.summary());
        println!();
    }
    Ok(if any_timeout {
        ExitCode::from(EXIT_TIMEOUT)
    } else {
        ExitCode::SUCCESS
    })
}

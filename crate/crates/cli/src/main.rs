use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nbpagerank::fault::FaultPlan;
use nbpagerank::graph::save_cache;
use nbpagerank::run::{reference_config, OracleKind};
use nbpagerank::{
    bench, bench_header, load_edge_list, load_graph, rmat_generate, run_variant, run_with_faults,
    verify, CsrGraph, Outcome, RmatParams, RunConfig, Variant, CSV_HEADER,
};

#[derive(Parser)]
#[command(
    name = "nbpagerank",
    version,
    about = "Parallel PageRank: barrier, lock-free and wait-free engines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an edge list into the binary CSR cache.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Pad the vertex count (isolated trailing vertices).
        #[arg(long)]
        vertices: Option<usize>,
    },
    /// Generate an RMAT graph (.bin writes the cache, anything else an edge list).
    Generate {
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// log2 of the vertex count; derived from --edges when omitted.
        #[arg(long)]
        scale: Option<u32>,
        /// Quadrant probabilities a,b,c,d.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        probs: Option<Vec<f64>>,
        /// Keep the raw recursive ids instead of shuffling them.
        #[arg(long)]
        no_permute: bool,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Execute one run and print its CSV row.
    Run(RunArgs),
    /// Time several variants and thread counts against a sequential baseline.
    Bench(BenchArgs),
    /// Compare a run with the sequential/dense oracle.
    Verify(RunArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Pad the vertex count of an edge-list graph.
    #[arg(long)]
    vertices: Option<usize>,
}

#[derive(Args, Clone)]
struct TuningArgs {
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 1e-16)]
    threshold: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "nosync")]
    variant: Variant,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Freeze vertices whose updates become negligible.
    #[arg(long)]
    perforate: bool,
    /// Compute one representative per identical-in-neighbor class.
    #[arg(long)]
    identical: bool,
    /// Fill the l1 column by comparing with the sequential engine.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1e-10)]
    l1_bound: f64,
    /// tid:iter:ms — sleep before an iteration (repeatable).
    #[arg(long)]
    sleep: Vec<String>,
    /// tid:iter — stop a thread after an iteration (repeatable).
    #[arg(long)]
    kill: Vec<String>,
    #[arg(long)]
    watchdog_s: Option<f64>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "barrier,barrier-edge,nosync,nosync-edge,waitfree"
    )]
    variants: Vec<Variant>,
    #[arg(
        long = "thread-counts",
        value_delimiter = ',',
        default_value = "1,2,4,8"
    )]
    thread_counts: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    watchdog_s: Option<f64>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Convert {
            input,
            output,
            vertices,
        } => {
            let g = read_graph(&input, vertices)?;
            save_cache(&g, &output).with_context(|| format!("writing {}", output.display()))?;
            eprintln!("{}: {} vertices, {} edges", output.display(), g.n(), g.m());
            Ok(0)
        }
        Command::Generate {
            edges,
            seed,
            scale,
            probs,
            no_permute,
            output,
        } => {
            let mut params = RmatParams {
                scale,
                permute: !no_permute,
                ..RmatParams::with_edges(edges, seed)
            };
            if let Some(p) = probs {
                (params.a, params.b, params.c, params.d) = (p[0], p[1], p[2], p[3]);
            }
            let el = rmat_generate(&params)?;
            if output.extension().is_some_and(|e| e == "bin") {
                save_cache(&CsrGraph::build(&el, true), &output)?;
            } else {
                let mut w = BufWriter::new(
                    File::create(&output)
                        .with_context(|| format!("creating {}", output.display()))?,
                );
                writeln!(w, "# rmat n={} m={} seed={seed}", el.n(), el.len())?;
                for (u, v) in el.edges() {
                    writeln!(w, "{u}\t{v}")?;
                }
                w.flush()?;
            }
            Ok(0)
        }
        Command::Run(args) => cmd_run(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn read_graph(path: &Path, vertices: Option<usize>) -> Result<CsrGraph> {
    let Some(n) = vertices else {
        return load_graph(path).with_context(|| format!("loading {}", path.display()));
    };
    if path.extension().is_some_and(|e| e == "bin") {
        bail!("--vertices applies to edge lists only");
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let el = load_edge_list(BufReader::new(file))?.with_vertex_count(n)?;
    Ok(CsrGraph::build(&el, true))
}

fn graph_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn watchdog(secs: Option<f64>) -> Result<Option<Duration>> {
    match secs {
        Some(s) if !(s.is_finite() && s > 0.0) => bail!("--watchdog-s must be positive"),
        Some(s) => Ok(Some(Duration::from_secs_f64(s))),
        None => Ok(None),
    }
}

fn config(variant: Variant, tuning: &TuningArgs, wd: Option<f64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(variant, tuning.threads.unwrap_or_else(default_threads));
    cfg.threshold = tuning.threshold;
    cfg.max_iters = tuning.max_iters;
    cfg.damping = tuning.damping;
    cfg.seed = tuning.seed;
    cfg.watchdog = watchdog(wd)?;
    Ok(cfg)
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = config(args.variant, &args.tuning, args.watchdog_s)?;
    cfg.perforation = args.perforate;
    cfg.identical = args.identical;
    cfg.validate()?;
    Ok(cfg)
}

fn fault_plan(args: &RunArgs) -> Result<FaultPlan> {
    let mut plan = FaultPlan::default();
    for s in &args.sleep {
        plan.sleeps.push(FaultPlan::parse_sleep(s)?);
    }
    for k in &args.kill {
        plan.kills.push(FaultPlan::parse_kill(k)?);
    }
    Ok(plan)
}

fn emit(csv_out: Option<&Path>, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match csv_out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let cfg = run_config(args)?;
    let plan = fault_plan(args)?;
    plan.validate(cfg.threads)?;
    let g = read_graph(&args.graph.graph, args.graph.vertices)?;
    let label = graph_label(&args.graph.graph);

    let mut report = if plan.is_empty() {
        run_variant(&g, &cfg)?
    } else {
        run_with_faults(cfg.effective_variant(), &g, &cfg, &plan)?
    };
    let mut within_bound = true;
    if args.verify {
        let v = verify_against_reference(&g, &cfg, &report.ranks)?;
        within_bound = v <= args.l1_bound;
        report.l1_vs_oracle = Some(v);
    }
    emit(
        args.csv_out.as_deref(),
        CSV_HEADER,
        &[report.csv_row(&label)],
    )?;
    if !within_bound {
        eprintln!(
            "l1 {:e} exceeds bound {:e}",
            report.l1_vs_oracle.unwrap_or(f64::NAN),
            args.l1_bound
        );
    }
    Ok(report.outcome.exit_code() as u8)
}

fn verify_against_reference(g: &CsrGraph, cfg: &RunConfig, ranks: &[f64]) -> Result<f64> {
    let reference = run_variant(g, &reference_config(cfg))?;
    Ok(nbpagerank::l1_norm(ranks, &reference.ranks)?)
}

fn cmd_verify(args: &RunArgs) -> Result<u8> {
    if !args.sleep.is_empty() || !args.kill.is_empty() {
        bail!("verify does not take fault flags; use `run --verify`");
    }
    let cfg = run_config(args)?;
    let g = read_graph(&args.graph.graph, args.graph.vertices)?;
    let v = verify(&g, &cfg)?;
    let label = graph_label(&args.graph.graph);
    let oracle = match v.oracle {
        OracleKind::Dense => "dense",
        OracleKind::Sequential => "sequential",
    };
    println!(
        "variant={} graph={label} threads={} outcome={}",
        v.report.label(),
        cfg.threads,
        v.report.outcome.name()
    );
    println!(
        "oracle={oracle}{}",
        v.oracle_l1
            .map(|d| format!(" oracle_l1={d:e}"))
            .unwrap_or_default()
    );
    println!(
        "l1={:e} max_residual={:e} bound={:e}",
        v.l1, v.max_residual, args.l1_bound
    );
    if let Some(path) = &args.csv_out {
        emit(Some(path), CSV_HEADER, &[v.report.csv_row(&label)])?;
    }
    if v.l1 <= args.l1_bound {
        println!("PASS");
        Ok(0)
    } else {
        println!("FAIL");
        Ok(2)
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    let cfg = config(Variant::Sequential, &args.tuning, args.watchdog_s)?;
    if args.thread_counts.is_empty() || args.thread_counts.contains(&0) {
        bail!("--thread-counts must list positive counts");
    }
    let g = read_graph(&args.graph.graph, args.graph.vertices)?;
    let label = graph_label(&args.graph.graph);
    let rows = bench(&g, &cfg, &args.variants, &args.thread_counts, args.repeats)?;
    let lines: Vec<String> = rows.iter().map(|r| r.csv_row(&label)).collect();
    emit(args.csv_out.as_deref(), &bench_header(), &lines)?;
    let all_converged = rows.iter().all(|r| r.report.outcome == Outcome::Converged);
    Ok(if all_converged { 0 } else { 2 })
}

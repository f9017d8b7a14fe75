//! Command-line interface: `compute`, `verify`, `bench-poly`, `bench-scaling`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 transport
//! failure.

use std::path::PathBuf;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use sptensor_core::invariant::triple_count;
use sptensor_core::{
    invariant_naive, invariant_optimized, make_test_symplectic, numeric_evaluate,
    symplectic_transform, wire, NumericTensor, Polynomial, TensorSize,
};

use crate::adapt::PolicyParams;
use crate::bench;
use crate::formats::{self, first_difference, result_hash, OutputFormat};
use crate::schemes::{self, RunConfig, SchemeError, SchemeKind, SchemeOutcome};
use crate::stats::{append_stats, RunStats, StatsRow};
use crate::transport::tcp;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sptensor",
    version,
    about = "Exact rank-3 symplectic tensor invariants, sequential or via adaptive master-worker schemes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the invariant and write polynomial and metadata files.
    Compute(ComputeArgs),
    /// Cross-check algorithms, schemes, and the invariance property.
    Verify(VerifyArgs),
    /// Time polynomial primitives over a terms/vars grid.
    BenchPoly(BenchPolyArgs),
    /// Sweep schemes, worker counts, and granularities; record stats rows.
    BenchScaling(BenchScalingArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Naive,
    Optimized,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Optimized => "optimized",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportKind {
    Inproc,
    Tcp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoleKind {
    Master,
    Worker,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatKind {
    Text,
    Binary,
    Both,
}

impl From<FormatKind> for OutputFormat {
    fn from(f: FormatKind) -> Self {
        match f {
            FormatKind::Text => OutputFormat::Text,
            FormatKind::Binary => OutputFormat::Binary,
            FormatKind::Both => OutputFormat::Both,
        }
    }
}

/// Adaptive-policy knobs shared by the scheme-running commands.
#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// Addworker switch fires when t_add > ratio * t_wait ("inf" disables).
    #[arg(long, default_value_t = 1.0)]
    pub ratio: f64,
    /// Results buffered on the master before delegating them as one batch.
    #[arg(long, default_value_t = 16)]
    pub maxresult: u32,
    /// Request window for starvation voting.
    #[arg(long, default_value_t = 32)]
    pub window: u32,
    /// Starved fraction of a full window that triggers the hierarchy.
    #[arg(long, default_value_t = 0.5)]
    pub starvation_fraction: f64,
    /// Foremen installed at the hierarchy switch (default: ceil(sqrt(W))).
    #[arg(long)]
    pub foremen_on_switch: Option<u32>,
    /// Multiplier on the master-side hierarchy comparison.
    #[arg(long, default_value_t = 1.0)]
    pub hier_ratio: f64,
    /// Injected delay per master-side polynomial addition (test hook).
    #[arg(long, default_value_t = 0)]
    pub inject_add_delay_ms: u64,
    /// Injected delay per addition-batch dispatch on the master (test hook).
    #[arg(long, default_value_t = 0)]
    pub inject_dispatch_delay_ms: u64,
    /// Injected delay per work item computed on a worker (test hook).
    #[arg(long, default_value_t = 0)]
    pub inject_compute_delay_ms: u64,
    /// Force the addworker switch once this many items are issued (test hook).
    #[arg(long)]
    pub force_addworker_at: Option<u64>,
    /// Force the hierarchy switch once this many items are issued (test hook).
    #[arg(long)]
    pub force_hier_at: Option<u64>,
}

impl PolicyArgs {
    pub fn to_params(&self) -> PolicyParams {
        PolicyParams {
            ratio: self.ratio,
            maxresult: self.maxresult,
            window: self.window,
            starvation_fraction: self.starvation_fraction,
            foremen_on_switch: self.foremen_on_switch,
            hier_ratio: self.hier_ratio,
            inject_add_delay: Duration::from_millis(self.inject_add_delay_ms),
            inject_dispatch_delay: Duration::from_millis(self.inject_dispatch_delay_ms),
            inject_compute_delay: Duration::from_millis(self.inject_compute_delay_ms),
            force_addworker_at_item: self.force_addworker_at,
            force_hier_at_item: self.force_hier_at,
        }
    }
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    /// Tensor edge size S (even, >= 2).
    #[arg(long)]
    pub size: u32,
    #[arg(long, value_enum, default_value_t = Algorithm::Optimized)]
    pub algorithm: Algorithm,
    /// seq | mw | addworker | hier | stateful | combined
    #[arg(long, default_value = "seq")]
    pub scheme: String,
    #[arg(long, default_value_t = 2)]
    pub workers: u32,
    /// Outer-loop triples per work item.
    #[arg(long, default_value_t = 1)]
    pub granularity: u64,
    /// Foreman count (hier scheme).
    #[arg(long, default_value_t = 1)]
    pub foremen: u32,
    #[arg(long, value_enum, default_value_t = TransportKind::Inproc)]
    pub transport: TransportKind,
    /// Master listen address for tcp runs, host:port.
    #[arg(long)]
    pub listen: Option<String>,
    /// Master address a tcp worker connects to, host:port.
    #[arg(long)]
    pub connect: Option<String>,
    /// This endpoint's rank (tcp worker).
    #[arg(long)]
    pub rank: Option<u32>,
    #[arg(long, value_enum, default_value_t = RoleKind::Master)]
    pub role: RoleKind,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Output directory (default: $TENSOR_OUT or ./out/<timestamp>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stats CSV path (default: <out>/stats.csv).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatKind::Both)]
    pub format: FormatKind,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Tensor edge size to verify.
    #[arg(long, default_value_t = 4)]
    pub size: u32,
    /// Refuse sizes above this cap (the checks are exhaustive).
    #[arg(long, default_value_t = 4)]
    pub max_size: u32,
    /// Comma-separated schemes for the equivalence matrix.
    #[arg(long, default_value = "mw,addworker,hier,stateful,combined")]
    pub schemes: String,
    /// Comma-separated worker counts.
    #[arg(long, default_value = "1,2,4")]
    pub workers: String,
    /// Comma-separated granularities (default: 1, 4, and N^3, deduplicated).
    #[arg(long)]
    pub granularities: Option<String>,
    /// Random (tensor, symplectic matrix) pairs for the invariance check.
    #[arg(long, default_value_t = 10)]
    pub invariance_pairs: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Flip one sub-sum sign in the optimized evaluation, to demonstrate
    /// that the equivalence checks catch a mutation.
    #[arg(long)]
    pub corrupt_sign: bool,
}

#[derive(Args, Debug)]
pub struct BenchPolyArgs {
    /// Comma-separated term counts.
    #[arg(long, default_value = "100,1000,10000")]
    pub terms: String,
    /// Comma-separated variable counts.
    #[arg(long, default_value = "16")]
    pub vars: String,
    #[arg(long, default_value_t = 3)]
    pub max_exp: u16,
    /// Repetitions per grid point (median is reported).
    #[arg(long, default_value_t = 5)]
    pub reps: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for bench_poly.csv (default: $TENSOR_OUT or ./out/..).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchScalingArgs {
    /// Comma-separated tensor sizes.
    #[arg(long, default_value = "4")]
    pub sizes: String,
    /// Comma-separated schemes.
    #[arg(long, default_value = "mw,addworker")]
    pub schemes: String,
    /// Comma-separated worker counts.
    #[arg(long, default_value = "2,4")]
    pub workers: String,
    /// Comma-separated granularities.
    #[arg(long, default_value = "1")]
    pub granularities: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn scheme_exit(e: &SchemeError) -> i32 {
    match e {
        SchemeError::Config(_) => EXIT_USAGE,
        _ => EXIT_TRANSPORT,
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    items
        .into_iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("bad list entry `{p}`")))
        .collect()
}

fn parse_schemes(s: &str) -> Result<Vec<SchemeKind>, String> {
    let names: Vec<String> = parse_list(s)?;
    if names.is_empty() {
        return Err("scheme list is empty".into());
    }
    names
        .iter()
        .map(|n| SchemeKind::parse(n).ok_or_else(|| format!("unknown scheme `{n}`")))
        .collect()
}

fn default_out_dir(flag: &Option<PathBuf>) -> PathBuf {
    if let Some(p) = flag {
        return p.clone();
    }
    if let Ok(env) = std::env::var("TENSOR_OUT") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    PathBuf::from("out").join(ts.to_string())
}

fn stats_row(cfg: &RunConfig, stats: &RunStats, poly: &Polynomial) -> StatsRow {
    StatsRow {
        scheme: stats.scheme.name().to_string(),
        size: cfg.size.s(),
        workers: if cfg.scheme == SchemeKind::Seq { 0 } else { cfg.workers },
        granularity: cfg.granularity,
        ratio: cfg.policy.ratio,
        maxresult: cfg.policy.maxresult,
        wall_seconds: stats.wall.as_secs_f64(),
        master_t_add: stats.master.t_add.as_secs_f64(),
        master_t_wait: stats.master.t_wait.as_secs_f64(),
        items_issued: stats.items_issued,
        switch_item_index: stats.first_switch_index(),
        result_terms: poly.num_terms() as u64,
        result_is_zero: poly.is_zero(),
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Verify(args) => cmd_verify(args),
        Command::BenchPoly(args) => cmd_bench_poly(args),
        Command::BenchScaling(args) => cmd_bench_scaling(args),
    }
}

fn build_config(
    size: TensorSize,
    scheme: SchemeKind,
    args: &ComputeArgs,
) -> RunConfig {
    RunConfig {
        size,
        scheme,
        workers: args.workers,
        granularity: args.granularity,
        foremen: args.foremen,
        policy: args.policy.to_params(),
    }
}

fn cmd_compute(args: ComputeArgs) -> i32 {
    let size = match TensorSize::new(args.size) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let Some(scheme) = SchemeKind::parse(&args.scheme) else {
        return usage(format!("unknown scheme `{}`", args.scheme));
    };
    if args.algorithm == Algorithm::Naive && scheme != SchemeKind::Seq {
        return usage("the naive algorithm only runs under --scheme seq");
    }

    if args.role == RoleKind::Worker {
        return run_tcp_worker(size, scheme, &args);
    }

    let cfg = build_config(size, scheme, &args);
    if scheme != SchemeKind::Seq {
        if let Err(e) = cfg.validate() {
            eprintln!("error: {e}");
            return scheme_exit(&e);
        }
    }

    let outcome = if scheme == SchemeKind::Seq {
        let begin = Instant::now();
        let poly = match args.algorithm {
            Algorithm::Naive => invariant_naive(size),
            Algorithm::Optimized => invariant_optimized(size),
        };
        Ok(SchemeOutcome {
            poly,
            stats: RunStats {
                scheme: SchemeKind::Seq,
                wall: begin.elapsed(),
                master: Default::default(),
                workers: Vec::new(),
                messages_sent: 0,
                messages_received: 0,
                items_issued: 0,
                switches: Vec::new(),
            },
        })
    } else {
        match args.transport {
            TransportKind::Inproc => schemes::run(&cfg),
            TransportKind::Tcp => run_tcp_master(&cfg, &args),
        }
    };

    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return scheme_exit(&e);
        }
    };

    let out_dir = default_out_dir(&args.out);
    let stem = format!("invariant_s{}_{}", size.s(), outcome.stats.scheme.name());
    let files = match formats::write_result(
        &out_dir,
        &stem,
        &outcome.poly,
        size,
        args.algorithm.name(),
        outcome.stats.scheme.name(),
        outcome.stats.wall,
        args.format.into(),
    ) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot write outputs: {e}");
            return EXIT_TRANSPORT;
        }
    };
    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| out_dir.join("stats.csv"));
    let row = stats_row(&cfg, &outcome.stats, &outcome.poly);
    if let Err(e) = append_stats(&stats_path, &[(row, outcome.stats.switches.clone())]) {
        eprintln!("error: cannot append stats: {e}");
        return EXIT_TRANSPORT;
    }

    println!(
        "size={} scheme={} terms={} is_zero={} wall={:.3}s sha256={} out={}",
        size.s(),
        outcome.stats.scheme.name(),
        outcome.poly.num_terms(),
        outcome.poly.is_zero(),
        outcome.stats.wall.as_secs_f64(),
        result_hash(&outcome.poly),
        files.metadata.display()
    );
    for s in &outcome.stats.switches {
        println!("switch,{},{},{}", s.from, s.to, s.item_index);
    }
    EXIT_OK
}

fn run_tcp_master(cfg: &RunConfig, args: &ComputeArgs) -> Result<SchemeOutcome, SchemeError> {
    let listen = args
        .listen
        .as_deref()
        .ok_or_else(|| SchemeError::Config("tcp master needs --listen host:port".into()))?;
    let begin = Instant::now();
    let mut ep = tcp::listen(listen, cfg.workers)?;
    let outcome = schemes::run_master(&mut ep, cfg)?;
    Ok(SchemeOutcome {
        stats: RunStats {
            scheme: cfg.scheme,
            wall: begin.elapsed(),
            master: outcome.timers,
            workers: vec![None; cfg.workers as usize],
            messages_sent: outcome.messages_sent,
            messages_received: outcome.messages_received,
            items_issued: outcome.items_issued,
            switches: outcome.switches,
        },
        poly: outcome.poly,
    })
}

fn run_tcp_worker(size: TensorSize, scheme: SchemeKind, args: &ComputeArgs) -> i32 {
    if args.transport != TransportKind::Tcp {
        return usage("--role worker requires --transport tcp");
    }
    let Some(connect) = args.connect.as_deref() else {
        return usage("--role worker requires --connect host:port");
    };
    let Some(rank) = args.rank else {
        return usage("--role worker requires --rank");
    };
    if rank == 0 || rank > args.workers {
        return usage(format!(
            "worker rank must be in 1..={} (got {rank})",
            args.workers
        ));
    }
    let cfg = build_config(size, scheme, args);
    let mut ep = match tcp::connect(connect, rank) {
        Ok(ep) => ep,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_TRANSPORT;
        }
    };
    match schemes::run_worker(&mut ep, &cfg) {
        Ok(report) => {
            eprintln!(
                "worker rank={rank} t_compute={:.3}s t_wait_work={:.3}s",
                report.timers.t_compute.as_secs_f64(),
                report.timers.t_wait_work.as_secs_f64()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            scheme_exit(&e)
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let size = match TensorSize::new(args.size) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    if args.size > args.max_size {
        return usage(format!(
            "size {} exceeds the verify cap of {} (raise --max-size to override)",
            args.size, args.max_size
        ));
    }
    let schemes_to_check = match parse_schemes(&args.schemes) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let workers: Vec<u32> = match parse_list(&args.workers) {
        Ok(w) if !w.is_empty() => w,
        Ok(_) => return usage("worker list is empty"),
        Err(e) => return usage(e),
    };
    let total = triple_count(size);
    let granularities: Vec<u64> = match &args.granularities {
        Some(g) => match parse_list(g) {
            Ok(v) => v,
            Err(e) => return usage(e),
        },
        None => {
            let mut g = vec![1u64, 4, total];
            g.retain(|&x| x >= 1 && x <= total);
            g.dedup();
            g
        }
    };

    let mut failures = 0u32;
    let mut check = |name: String, witness: Option<String>| match witness {
        None => println!("PASS {name}"),
        Some(w) => {
            println!("FAIL {name}: {w}");
            failures += 1;
        }
    };

    // Algorithm equivalence.
    let reference = invariant_optimized(size);
    let optimized = if args.corrupt_sign {
        sptensor_core::invariant::invariant_optimized_mutated(size)
    } else {
        reference.clone()
    };
    let naive = invariant_naive(size);
    check(
        format!("naive == optimized (size {})", size.s()),
        first_difference(&naive, &optimized, size),
    );

    // Scheme equivalence matrix against the canonical serialization.
    let reference_bytes = wire::serialize(&reference);
    for &scheme in &schemes_to_check {
        for &w in &workers {
            if scheme == SchemeKind::Hierarchical && w < 2 {
                println!(
                    "SKIP scheme {scheme} W={w} (hierarchy needs at least two workers)"
                );
                continue;
            }
            for &g in &granularities {
                if g > total {
                    continue;
                }
                let mut cfg = RunConfig::new(size, scheme);
                cfg.workers = w;
                cfg.granularity = g;
                cfg.foremen = if scheme == SchemeKind::Hierarchical {
                    (w / 2).max(1)
                } else {
                    1
                };
                let name = format!("scheme {scheme} W={w} g={g} (size {})", size.s());
                match schemes::run(&cfg) {
                    Ok(outcome) => {
                        let witness = if wire::serialize(&outcome.poly) == reference_bytes {
                            None
                        } else {
                            Some(
                                first_difference(&outcome.poly, &reference, size)
                                    .unwrap_or_else(|| "serialization mismatch".into()),
                            )
                        };
                        check(name, witness);
                    }
                    Err(e) => check(name, Some(format!("run failed: {e}"))),
                }
            }
        }
    }

    // Numeric invariance under generated symplectic transforms.
    let mut bad_pairs = Vec::new();
    for i in 0..args.invariance_pairs {
        let t = NumericTensor::random(size, args.seed.wrapping_add(i as u64), 5);
        let k = make_test_symplectic(size, args.seed.wrapping_add(0x9e3779b9 + i as u64));
        let before = numeric_evaluate(&optimized, &t);
        let after = numeric_evaluate(&optimized, &symplectic_transform(&t, &k));
        if before != after {
            bad_pairs.push(format!("pair {i}: {before} vs {after}"));
        }
    }
    check(
        format!(
            "symplectic invariance over {} random pairs (size {})",
            args.invariance_pairs,
            size.s()
        ),
        if bad_pairs.is_empty() {
            None
        } else {
            Some(bad_pairs.join("; "))
        },
    );

    if failures == 0 {
        println!("verify: all checks passed");
        EXIT_OK
    } else {
        println!("verify: {failures} check(s) failed");
        EXIT_VERIFY_FAIL
    }
}

fn cmd_bench_poly(args: BenchPolyArgs) -> i32 {
    let terms: Vec<u32> = match parse_list(&args.terms) {
        Ok(t) if !t.is_empty() => t,
        Ok(_) => return usage("term list is empty"),
        Err(e) => return usage(e),
    };
    let vars: Vec<u32> = match parse_list(&args.vars) {
        Ok(v) if !v.is_empty() => v,
        Ok(_) => return usage("variable list is empty"),
        Err(e) => return usage(e),
    };
    if args.reps == 0 {
        return usage("reps must be >= 1");
    }
    let rows = bench::bench_poly(&terms, &vars, args.max_exp, args.reps, args.seed);
    let out_dir = default_out_dir(&args.out);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: {e}");
        return EXIT_TRANSPORT;
    }
    let path = out_dir.join("bench_poly.csv");
    let mut text = String::from(bench::BENCH_CSV_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.to_csv_line());
        text.push('\n');
        println!("{}", r.to_csv_line());
    }
    if let Err(e) = std::fs::write(&path, text) {
        eprintln!("error: {e}");
        return EXIT_TRANSPORT;
    }
    // Soft report: adding bigger polynomials should not be cheaper.
    let add_rows: Vec<&bench::BenchRow> = rows.iter().filter(|r| r.op == "add").collect();
    if let (Some(min), Some(max)) = (
        add_rows.iter().min_by_key(|r| r.terms),
        add_rows.iter().max_by_key(|r| r.terms),
    ) {
        if min.terms != max.terms {
            let monotone = max.seconds >= min.seconds;
            println!(
                "report: add at {} terms {:.3e}s vs {} terms {:.3e}s (monotone: {monotone})",
                min.terms, min.seconds, max.terms, max.seconds
            );
        }
    }
    println!("wrote {}", path.display());
    EXIT_OK
}

fn cmd_bench_scaling(args: BenchScalingArgs) -> i32 {
    let sizes: Vec<u32> = match parse_list(&args.sizes) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => return usage("size list is empty"),
        Err(e) => return usage(e),
    };
    let schemes_to_run = match parse_schemes(&args.schemes) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let workers: Vec<u32> = match parse_list(&args.workers) {
        Ok(w) if !w.is_empty() => w,
        Ok(_) => return usage("worker list is empty"),
        Err(e) => return usage(e),
    };
    let granularities: Vec<u64> = match parse_list(&args.granularities) {
        Ok(g) if !g.is_empty() => g,
        Ok(_) => return usage("granularity list is empty"),
        Err(e) => return usage(e),
    };

    let out_dir = default_out_dir(&args.out);
    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| out_dir.join("stats.csv"));

    for &s in &sizes {
        let size = match TensorSize::new(s) {
            Ok(sz) => sz,
            Err(e) => return usage(e),
        };
        let total = triple_count(size);
        let mut rows = Vec::new();
        let mut hashes: Vec<(String, String)> = Vec::new();
        for &scheme in &schemes_to_run {
            for &w in &workers {
                if scheme == SchemeKind::Hierarchical && w < 2 {
                    continue;
                }
                for &g in &granularities {
                    if g < 1 || g > total {
                        continue;
                    }
                    let mut cfg = RunConfig::new(size, scheme);
                    cfg.workers = w;
                    cfg.granularity = g;
                    cfg.foremen = if scheme == SchemeKind::Hierarchical {
                        (w / 2).max(1)
                    } else {
                        1
                    };
                    cfg.policy = args.policy.to_params();
                    let label = format!("{scheme} W={w} g={g} size={s}");
                    match schemes::run(&cfg) {
                        Ok(outcome) => {
                            hashes.push((label, result_hash(&outcome.poly)));
                            rows.push((
                                stats_row(&cfg, &outcome.stats, &outcome.poly),
                                outcome.stats.switches.clone(),
                            ));
                        }
                        Err(e) => {
                            eprintln!("error: {label}: {e}");
                            return scheme_exit(&e);
                        }
                    }
                }
            }
        }
        // Correctness precedes performance: rows are only committed when
        // every run in the size group produced the same polynomial.
        if let Some((first_label, first_hash)) = hashes.first() {
            for (label, hash) in &hashes[1..] {
                if hash != first_hash {
                    eprintln!(
                        "error: result mismatch in size {s} group: {label} != {first_label}"
                    );
                    return EXIT_VERIFY_FAIL;
                }
            }
        }
        if let Err(e) = append_stats(&stats_path, &rows) {
            eprintln!("error: cannot append stats: {e}");
            return EXIT_TRANSPORT;
        }
        for (row, _) in &rows {
            println!("{}", row.to_csv_line());
        }
    }
    println!("wrote {}", stats_path.display());
    EXIT_OK
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sra_core::controller::{read_trace_csv, write_trace_csv, SraConfig};
use sra_core::stability::{block_audit, switch_bound, switch_census, verify_drop_jump};
use sra_core::topology::{load_edge_list, save_edge_list};
use sra_core::{generate, run_relaxation, Graph, Model, TopologySpec};
use sra_experiments::run_to_dir;
use sra_experiments::spec::{ExperimentSpec, Family, TopologyConfig};
use sra_netsim::protocols::converged_state;
use sra_netsim::{make_policy, simulate, PolicyKind, PolicyParams, SraMode, TrafficConfig};

#[derive(Parser)]
#[command(
    name = "sra",
    version,
    about = "Node-cost relaxation for shortest-path routing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random topology as an edge list.
    Generate(GenerateArgs),
    /// Run the relaxation controller and write its trace.
    Relax(RelaxArgs),
    /// Audit a trace: drop-jump inequality, switch census, block audit.
    Analyze(AnalyzeArgs),
    /// Simulate packet traffic under one routing policy.
    Simulate(SimulateArgs),
    /// Run a multi-trial experiment family.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: Model,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Edges per new node (BA).
    #[arg(long)]
    m: Option<usize>,
    /// Ring neighbours (WS).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (WS) or edge probability (ER).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RelaxArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    td: usize,
    /// Include per-node S, C and centrality columns.
    #[arg(long)]
    full: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Sliding window for the switch census.
    #[arg(long, default_value_t = 20)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    td: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Per-step drop-jump records as CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Live,
    Static,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "sra")]
    policy: String,
    #[arg(long, default_value_t = 1.0)]
    load: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    steps: u64,
    #[arg(long, default_value_t = 300)]
    warmup: u64,
    /// Relaxation policy behaviour during traffic.
    #[arg(long, value_enum, default_value = "live")]
    sra_mode: ModeArg,
    /// Write the policy's next-hop table at the end of the run.
    #[arg(long)]
    dump_routes: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    family: Family,
    /// Comma-separated models; defaults depend on the family.
    #[arg(long, value_delimiter = ',')]
    topology: Vec<Model>,
    /// Node count for every topology.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated offered loads (sweep).
    #[arg(long, value_delimiter = ',')]
    loads: Vec<f64>,
    /// Start from a JSON spec; other flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

fn read_graph(path: &PathBuf) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut spec = TopologySpec::new(a.model, a.seed);
    spec.n = a.n;
    if let Some(m) = a.m {
        spec.ba_m = m;
    }
    if let Some(k) = a.k {
        spec.ws_k = k;
    }
    if let Some(p) = a.p {
        match a.model {
            Model::Ws => spec.ws_p = p,
            Model::Er => spec.er_p = p,
            Model::Ba => bail!("--p does not apply to BA"),
        }
    }
    let g = generate(&spec)?;
    fs::write(&a.output, save_edge_list(&g))?;
    println!(
        "{} nodes, {} edges -> {}",
        g.node_count(),
        g.edge_count(),
        a.output.display()
    );
    Ok(())
}

fn cmd_relax(a: RelaxArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let cfg = SraConfig {
        alpha: a.alpha,
        beta_i: a.beta,
        eps: a.eps,
        k_max: a.max_iter,
        t_d: a.td,
    };
    let trace = run_relaxation(&g, &cfg)?;
    let out = BufWriter::new(File::create(&a.output)?);
    write_trace_csv(&trace, out, a.full)?;
    let (first, last) = (trace.first(), trace.last());
    println!(
        "status {:?} after {} iterations, {} switches; peak centrality {:.3} -> {:.3}",
        trace.status,
        trace.iterations(),
        trace.switch_count(),
        first.max_kappa(),
        last.max_kappa()
    );
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let file = File::open(&a.trace).with_context(|| format!("opening {}", a.trace.display()))?;
    let loaded = read_trace_csv(file)?;
    let records = &loaded.records;
    let census = switch_census(records, a.window);
    let bound = switch_bound(a.window, a.td);
    println!(
        "switch census over window {}: {} (bound {}) {}",
        a.window,
        census,
        bound,
        if census <= bound { "ok" } else { "VIOLATED" }
    );
    if !loaded.full {
        println!("trace has no per-node columns; rerun relax with --full for Lyapunov checks");
        return Ok(());
    }
    let report = verify_drop_jump(records, a.alpha)?;
    println!(
        "drop-jump: {} steps, {} violations; observed diameter {:.6}",
        report.records.len(),
        report.violations(),
        report.delta_bar_obs
    );
    println!(
        "tail V max {:.6e} vs bound {:.6e} {}",
        report.limsup_estimate,
        report.limsup_bound,
        if report.limsup_within_bound() {
            "ok"
        } else {
            "EXCEEDED"
        }
    );
    let audit = block_audit(records, a.td, a.alpha)?;
    println!(
        "block audit (t_d = {}): {} blocks, {} recurrence violations, net peak drop {:.3}",
        a.td,
        audit.blocks.len(),
        audit.recurrence_violations(),
        audit.net_peak_drop()
    );
    if let Some(path) = a.output {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["k", "v", "v_next", "jump_bound", "holds"])?;
        for r in &report.records {
            w.write_record([
                r.k.to_string(),
                r.v.to_string(),
                r.v_next.to_string(),
                r.jump_bound.to_string(),
                r.holds.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsRow {
    policy: String,
    load: f64,
    seed: u64,
    steps: u64,
    warmup: u64,
    throughput: f64,
    loss_rate: f64,
    mean_latency: f64,
    pdr: f64,
    generated: u64,
    delivered: u64,
    dropped: u64,
    unreachable: u64,
    in_flight: u64,
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let kind: PolicyKind = a.policy.parse()?;
    let cfg = TrafficConfig {
        total_timesteps: a.steps,
        warmup: a.warmup,
        load: a.load,
        seed: a.seed,
        ..TrafficConfig::default()
    };
    cfg.validate()?;
    let mut params = PolicyParams {
        sra_mode: match a.sra_mode {
            ModeArg::Live => SraMode::Live,
            ModeArg::Static => SraMode::Static,
        },
        queue_capacity: cfg.queue_capacity,
        seed: a.seed,
        ..PolicyParams::default()
    };
    if kind == PolicyKind::Sra {
        params.sra_initial = Some(converged_state(&g, &params.sra)?);
    }
    let mut policy = make_policy(kind, &g, &params)?;
    let out = simulate(&g, policy.as_mut(), &cfg)?;
    let m = &out.metrics;
    let row = MetricsRow {
        policy: kind.to_string(),
        load: a.load,
        seed: a.seed,
        steps: a.steps,
        warmup: a.warmup,
        throughput: m.throughput,
        loss_rate: m.loss_rate,
        mean_latency: m.mean_latency,
        pdr: m.pdr,
        generated: m.counts.generated,
        delivered: m.counts.delivered,
        dropped: m.counts.dropped,
        unreachable: m.counts.unreachable,
        in_flight: m.counts.in_flight,
    };
    let mut w = csv::Writer::from_path(&a.output)?;
    w.serialize(&row)?;
    w.flush()?;
    println!(
        "{kind} at load {}: throughput {:.3}, loss {:.4}, latency {:.2}, pdr {:.4}",
        a.load, m.throughput, m.loss_rate, m.mean_latency, m.pdr
    );
    if let Some(path) = a.dump_routes {
        let table = policy.route_table();
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["node", "destination", "next_hop"])?;
        for (x, row) in table.rows().iter().enumerate() {
            for (d, hop) in row.iter().enumerate() {
                if let Some(y) = hop {
                    w.write_record([x.to_string(), d.to_string(), y.to_string()])?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let spec: ExperimentSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if spec.family != a.family {
                bail!("spec file is for family {}, not {}", spec.family, a.family);
            }
            spec
        }
        None => ExperimentSpec::defaults(a.family),
    };
    if !a.topology.is_empty() {
        let n = spec.topologies.first().map_or(100, |t| t.n);
        spec.topologies = a
            .topology
            .iter()
            .map(|&m| TopologyConfig::new(m, n))
            .collect();
    }
    if let Some(n) = a.n {
        for t in &mut spec.topologies {
            t.n = n;
        }
    }
    if let Some(trials) = a.trials {
        spec.trials = trials;
    }
    if let Some(seed) = a.seed {
        spec.seed_base = seed;
    }
    if !a.loads.is_empty() {
        spec.loads = a.loads;
    }
    spec.validate()?;
    let files = run_to_dir(&spec, &a.output)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(a),
        Command::Relax(a) => cmd_relax(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

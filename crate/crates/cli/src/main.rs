use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use edgeflow::active::{select_random, select_recursive_bisection, select_rrqr};
use edgeflow::experiments::{
    self, ingest_play_sequence, ingest_tntp_flows, label_count, parse_ratios, pearson, relative_l2,
    run_sweep, IngestedFlows, PlayMode, SweepConfig, SynthConfig,
};
use edgeflow::graph::{read_flow_file, read_graph_file, read_labels_file, write_flows, write_graph, write_labels};
use edgeflow::market::{price_arbitrage_free, triangle_gains, DEFAULT_LAMBDA};
use edgeflow::{hodge_decompose, ExchangeMarket, FlowNetwork, LabelSet, Method, SelectionMethod, SpectralBasis, SslConfig};

#[derive(Parser)]
#[command(name = "edgeflow", version, about = "Semi-supervised learning and sampling of edge flows")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph.
    Gen(GenArgs),
    /// Sample a synthetic flow with spectral decay on a graph.
    Synth(SynthArgs),
    /// Choose edges to label.
    Select(SelectArgs),
    /// Reconstruct a flow from labeled edges.
    Infer(InferArgs),
    /// Compare an estimated flow with the truth.
    Eval(EvalArgs),
    /// Run a reconstruction experiment over label ratios and trials.
    Sweep(SweepArgs),
    /// Spectral coefficients of a flow in the edge-space basis.
    Spectrum(FlowArgs),
    /// Split a flow into gradient, curl and harmonic parts.
    Hodge(FlowArgs),
    /// Arbitrage-free pricing of an exchange market.
    Price(PriceArgs),
    /// Build a flow network from a play sequence.
    IngestSeq(IngestSeqArgs),
    /// Build a flow network from a TNTP link-flow table.
    IngestTntp(IngestTntpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Grid,
    Ring,
    Complete,
    Barbell,
    BarbellGrids,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GraphKind,
    /// Rows for grids, vertex count for ring/complete/random, clique size for barbell.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Columns for grids.
    #[arg(long)]
    cols: Option<usize>,
    /// Bridges between the two grids of barbell-grids.
    #[arg(long, default_value_t = 1)]
    bridges: usize,
    /// Edge density for random graphs.
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(short, long)]
    graph: PathBuf,
    /// Number of edges to select.
    #[arg(long, conflicts_with = "ratio", required_unless_present = "ratio")]
    budget: Option<usize>,
    /// Fraction of edges to select.
    #[arg(long)]
    ratio: Option<f64>,
    /// random, rrqr or rb.
    #[arg(long, default_value = "rrqr")]
    method: SelectionMethod,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    embed_dim: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(short, long)]
    graph: PathBuf,
    /// Flow records; without --labels every record is treated as a label.
    #[arg(short, long)]
    flows: PathBuf,
    /// Labeled edge indices (1-based) to take from the flow file.
    #[arg(short, long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// flowssl, zerofill or linegraph.
    #[arg(long, default_value = "flowssl")]
    method: Method,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(short, long)]
    graph: PathBuf,
    /// Ground-truth flow; a synthetic flow is sampled when omitted.
    #[arg(short, long)]
    flows: Option<PathBuf>,
    /// `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "0.1:0.1:0.9")]
    ratios: String,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// Comma-separated reconstruction methods.
    #[arg(long, value_delimiter = ',', default_value = "flowssl,zerofill,linegraph")]
    methods: Vec<Method>,
    /// Comma-separated selection strategies.
    #[arg(long, value_delimiter = ',', default_value = "random")]
    selections: Vec<SelectionMethod>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 2)]
    embed_dim: usize,
    /// Record per-cell wall-clock time.
    #[arg(long)]
    timing: bool,
    /// Add a relative L2 error column.
    #[arg(long)]
    rel_l2: bool,
    /// Correlate over unlabeled edges only.
    #[arg(long)]
    unlabeled_only: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(short, long)]
    flows: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    /// CSV with base, quote, bid, mid, ask columns.
    #[arg(short, long)]
    market: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Also print the gain of every triangle before and after pricing.
    #[arg(long)]
    triangles: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestSeqArgs {
    #[arg(short, long)]
    plays: PathBuf,
    /// song or artist.
    #[arg(long, default_value = "song")]
    mode: PlayMode,
    #[arg(long)]
    graph_out: PathBuf,
    #[arg(long)]
    flows_out: PathBuf,
    #[arg(long)]
    names_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestTntpArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    graph_out: PathBuf,
    #[arg(long)]
    flows_out: PathBuf,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn load_graph(path: &Path) -> Result<FlowNetwork> {
    let net = read_graph_file(path).with_context(|| format!("reading graph {}", path.display()))?;
    info!("graph {}: n = {}, m = {}, triangles = {}", path.display(), net.n(), net.m(), net.o());
    Ok(net)
}

fn load_full_flow(net: &FlowNetwork, path: &Path) -> Result<Vec<f64>> {
    let rec = read_flow_file(net, path).with_context(|| format!("reading flows {}", path.display()))?;
    match rec.to_full(net.m()) {
        Some(f) => Ok(f.into_vec()),
        None => bail!(
            "{} covers {} of {} edges; a complete flow is required",
            path.display(),
            rec.len(),
            net.m()
        ),
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let cols = a.cols.unwrap_or(a.n);
    let net = match a.kind {
        GraphKind::Grid => experiments::grid(a.n, cols)?,
        GraphKind::Ring => experiments::ring(a.n)?,
        GraphKind::Complete => experiments::complete(a.n)?,
        GraphKind::Barbell => experiments::barbell(a.n)?,
        GraphKind::BarbellGrids => experiments::barbell_of_grids(a.n, cols, a.bridges)?,
        GraphKind::Random => experiments::random_connected(a.n, a.density, a.seed)?,
    };
    let mut w = output(a.out.as_deref())?;
    write_graph(&net, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let basis = SpectralBasis::compute(&net);
    for msg in basis.warnings() {
        warn!("{msg}");
    }
    let f = experiments::synth_flow(&basis, &SynthConfig { b: a.b, eps: a.eps })?;
    let mut w = output(a.out.as_deref())?;
    write_flows(&net, &f, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let budget = match (a.budget, a.ratio) {
        (Some(k), _) => k,
        (None, Some(r)) => label_count(net.m(), r)?,
        (None, None) => unreachable!("clap requires one of --budget and --ratio"),
    };
    let sel = match a.method {
        SelectionMethod::Random => select_random(net.m(), budget, a.seed)?,
        SelectionMethod::Rrqr => select_rrqr(&SpectralBasis::compute(&net), budget, a.seed)?,
        SelectionMethod::RecursiveBisection => select_recursive_bisection(&net, budget, a.embed_dim)?,
    };
    info!("{} selected {} of {} edges", a.method, sel.edges.len(), net.m());
    let mut w = output(a.out.as_deref())?;
    write_labels(&sel.edges, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_infer(a: &InferArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let rec = read_flow_file(&net, &a.flows).with_context(|| format!("reading flows {}", a.flows.display()))?;
    let indices = match &a.labels {
        Some(p) => read_labels_file(net.m(), p).with_context(|| format!("reading labels {}", p.display()))?,
        None => rec.indices(),
    };
    let mut values = Vec::with_capacity(indices.len());
    for &r in &indices {
        let (i, j) = net.edges()[r];
        match rec.get(r) {
            Some(v) => values.push(v),
            None => bail!(
                "labeled edge ({}, {}) has no record in {}",
                net.vertex_id(i),
                net.vertex_id(j),
                a.flows.display()
            ),
        }
    }
    let labels = LabelSet::new(net.m(), indices, values)?;
    let f = a.method.infer(&net, &labels, &SslConfig::with_lambda(a.lambda))?;
    let mut w = output(a.out.as_deref())?;
    write_flows(&net, &f, &mut w)?;
    w.flush()?;
    let mut summary = format!("{}: {} labeled of {} edges", a.method, labels.len(), net.m());
    if let Some(truth) = rec.to_full(net.m()) {
        match pearson(&f, &truth) {
            Ok(rho) => summary.push_str(&format!(", rho = {rho:.6}")),
            Err(e) => summary.push_str(&format!(", rho undefined ({e})")),
        }
    }
    eprintln!("{summary}");
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let truth = load_full_flow(&net, &a.truth)?;
    let est = load_full_flow(&net, &a.estimate)?;
    match pearson(&est, &truth) {
        Ok(rho) => println!("rho {rho:.6}"),
        Err(e) => println!("rho nan ({e})"),
    }
    println!("rel_l2 {:.6}", relative_l2(&est, &truth)?);
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let needs_basis = a.flows.is_none() || a.selections.contains(&SelectionMethod::Rrqr);
    let basis = needs_basis.then(|| SpectralBasis::compute(&net));
    let truth = match &a.flows {
        Some(p) => load_full_flow(&net, p)?,
        None => {
            let b = basis.as_ref().expect("basis computed when no flow is given");
            experiments::synth_flow(b, &SynthConfig::default())?.into_vec()
        }
    };
    let cfg = SweepConfig {
        methods: a.methods.clone(),
        selections: a.selections.clone(),
        ratios: parse_ratios(&a.ratios)?,
        seeds: (1..=a.trials).collect(),
        ssl: SslConfig::with_lambda(a.lambda),
        embed_dim: a.embed_dim,
        unlabeled_only: a.unlabeled_only,
        timing: a.timing,
    };
    let result = run_sweep(&net, &truth, basis.as_ref(), &cfg)?;
    let mut w = output(a.out.as_deref())?;
    result.write_csv(&mut w, a.rel_l2)?;
    w.flush()?;
    for s in result.summarize() {
        let failed = if s.failed > 0 { format!(" ({} failed)", s.failed) } else { String::new() };
        eprintln!(
            "{:<9} {:<6} ratio {:.2}: rho {:.4} ± {:.4} over {}{}",
            s.method.name(),
            s.selection.name(),
            s.ratio,
            s.mean,
            s.stderr,
            s.n,
            failed
        );
    }
    Ok(())
}

fn cmd_spectrum(a: &FlowArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let f = load_full_flow(&net, &a.flows)?;
    let basis = SpectralBasis::compute(&net);
    for msg in basis.warnings() {
        warn!("{msg}");
    }
    let rows = basis.normalized_spectrum(&f)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "percentile,sigma,coefficient,space")?;
    for (k, (pct, sigma, p)) in rows.iter().enumerate() {
        let space = if k < basis.n_cycle() { "cycle" } else { "cut" };
        writeln!(w, "{pct},{sigma},{p},{space}")?;
    }
    w.flush()?;
    match basis.spectral_ratio(&f) {
        Ok(r) => eprintln!("cycle rank {}, spectral ratio {r:.6}", basis.n_cycle()),
        Err(e) => eprintln!("cycle rank {}, spectral ratio undefined ({e})", basis.n_cycle()),
    }
    Ok(())
}

fn cmd_hodge(a: &FlowArgs) -> Result<()> {
    let net = load_graph(&a.graph)?;
    let f = load_full_flow(&net, &a.flows)?;
    let h = hodge_decompose(&net, &f)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "i,j,flow,gradient,curl,harmonic")?;
    for (r, &(i, j)) in net.edges().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            net.vertex_id(i),
            net.vertex_id(j),
            f[r],
            h.gradient[r],
            h.curl[r],
            h.harmonic[r]
        )?;
    }
    w.flush()?;
    let total: f64 = f.iter().map(|v| v * v).sum();
    let share = |x: f64| if total > 0.0 { x * x / total } else { 0.0 };
    eprintln!(
        "energy share: gradient {:.6}, curl {:.6}, harmonic {:.6}",
        share(h.gradient.norm()),
        share(h.curl.norm()),
        share(h.harmonic.norm())
    );
    Ok(())
}

fn cmd_price(a: &PriceArgs) -> Result<()> {
    let market = ExchangeMarket::from_csv_reader(open(&a.market)?)
        .with_context(|| format!("reading market {}", a.market.display()))?;
    let net = market.network();
    let res = price_arbitrage_free(&market, a.lambda)?;
    if !res.report.converged {
        warn!(
            "pricing stopped after {} iterations with stationarity {:e}",
            res.report.iterations, res.report.stationarity
        );
    }
    let fair = res.rates();
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "base,quote,bid,mid,ask,fair")?;
    for (r, &(i, j)) in net.edges().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            market.currencies()[i],
            market.currencies()[j],
            market.bid()[r].exp(),
            market.mid()[r].exp(),
            market.ask()[r].exp(),
            fair[r]
        )?;
    }
    w.flush()?;
    let max_dev = |f: &[f64]| -> Result<f64> {
        Ok(triangle_gains(net, f)?.iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max))
    };
    eprintln!(
        "max |triangle gain - 1|: mid {:.3e}, fair {:.3e}",
        max_dev(market.mid())?,
        max_dev(&res.fair)?
    );
    if a.triangles {
        let before = triangle_gains(net, market.mid())?;
        let after = triangle_gains(net, &res.fair)?;
        for (t, &(i, j, k)) in net.triangles().iter().enumerate() {
            let c = market.currencies();
            eprintln!(
                "{}/{}/{}: mid {:.7}, fair {:.7}",
                c[i], c[j], c[k], before[t], after[t]
            );
        }
    }
    Ok(())
}

fn write_ingested(ing: &IngestedFlows, graph_out: &Path, flows_out: &Path) -> Result<()> {
    let mut g = output(Some(graph_out))?;
    write_graph(&ing.net, &mut g)?;
    g.flush()?;
    let mut f = output(Some(flows_out))?;
    write_flows(&ing.net, &ing.flow, &mut f)?;
    f.flush()?;
    eprintln!("{} vertices, {} edges", ing.net.n(), ing.net.m());
    Ok(())
}

fn cmd_ingest_seq(a: &IngestSeqArgs) -> Result<()> {
    let ing = ingest_play_sequence(open(&a.plays)?, a.mode)
        .with_context(|| format!("reading plays {}", a.plays.display()))?;
    write_ingested(&ing, &a.graph_out, &a.flows_out)?;
    if let Some(p) = &a.names_out {
        let mut w = output(Some(p))?;
        for (id, name) in &ing.names {
            writeln!(w, "{id}\t{name}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_ingest_tntp(a: &IngestTntpArgs) -> Result<()> {
    let ing = ingest_tntp_flows(open(&a.input)?).with_context(|| format!("reading {}", a.input.display()))?;
    write_ingested(&ing, &a.graph_out, &a.flows_out)
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Select(a) => cmd_select(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Hodge(a) => cmd_hodge(a),
        Command::Price(a) => cmd_price(a),
        Command::IngestSeq(a) => cmd_ingest_seq(a),
        Command::IngestTntp(a) => cmd_ingest_tntp(a),
    };
    if let Err(e) = res {
        let closed_pipe = e.chain().any(|c| {
            c.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
        });
        if closed_pipe {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

//! Argument parsing and subcommand dispatch for `gpfo`.
//!
//! Exit codes: 0 on success, 1 on a usage error (synopsis on stderr),
//! 2 on a runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::builder::PossibleValuesParser;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gpfo_core::engine::{run_session, save_jsonl, EngineError, ReasoningSession, SessionConfig};
use gpfo_core::garden::{grow_step, new_garden, GardenMode, GardenSession, GardenStore, GrowthStep};
use gpfo_core::gateway::{open, Gateway, GatewayConfig, Recorder};
use gpfo_core::gin::{
    build_equation_graphs, equation_matching, fit_alignment, render_demo, AlignmentFit, FitConfig, DEFAULT_BUDGET,
    FIXED_SEEDS,
};
use gpfo_core::graph::{from_graphml, to_graphml, KnowledgeGraph};
use gpfo_core::metrics::{by_name, node_metrics_table, summarize, MetricReport, METRIC_NAMES};

use crate::server::{self, AppState};
use crate::view::{ApiSessionView, Status};
use crate::{fresh_id, garden_config};

#[derive(Debug, Parser)]
#[command(name = "gpfo", version, about = "Reflective graph reasoning and knowledge gardens")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Stream every model exchange to stderr as a JSON line.
    #[arg(long, global = true)]
    trace: bool,
    /// Write every model exchange to PATH as JSON lines.
    #[arg(long, global = true, value_name = "PATH")]
    save_transcript: Option<PathBuf>,
    /// Gateway config (JSON). GPFO_BASE_URL still overrides its base URL.
    #[arg(long, global = true, env = "GPFO_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory holding the gardens.
    #[arg(long, global = true, env = "GPFO_STORE", value_name = "DIR", default_value = "gardens")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one task with the reflect-and-refine loop.
    Reason {
        task: String,
        /// Refinement rounds after the initial response.
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        /// Integrate all answers instead of taking the last one.
        #[arg(long)]
        integrate: bool,
        /// Offer the initial answer to integration.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
        integrate_include_initial: bool,
        #[arg(long, default_value = "reason")]
        id: String,
        /// Persist the session as JSON lines.
        #[arg(long, value_name = "PATH")]
        save_session: Option<PathBuf>,
    },
    /// Grow and inspect knowledge gardens.
    #[command(subcommand)]
    Garden(GardenCommand),
    /// Node metrics of a garden's graph or of a GraphML / graph JSON file.
    Analyze {
        /// Garden id, or a path to a .graphml or .json graph.
        target: String,
        #[arg(long, default_value = "all", value_parser = metric_parser())]
        metric: String,
        /// Rows to show (0 for all).
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Write a garden's integrated graph.
    Export {
        id: String,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Write here instead of stdout.
        #[arg(long, short, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// The two-graph GIN alignment demo.
    GinDemo {
        /// Use this seed only (default: the fixed seeds, first success wins).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Step limit for gardens created over the API.
        #[arg(long, default_value_t = 25)]
        max_steps: usize,
        /// Refinement rounds per garden step.
        #[arg(long, default_value_t = 0)]
        iterations: usize,
    },
}

#[derive(Debug, Subcommand)]
enum GardenCommand {
    /// Start a garden from a seed question (runs the seed step).
    New {
        seed: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value = "autonomous", value_parser = ["autonomous", "steered"])]
        mode: String,
        #[arg(long, default_value_t = 25)]
        max_steps: usize,
        /// Refinement rounds per step.
        #[arg(long, default_value_t = 0)]
        iterations: usize,
    },
    /// Add one step; steered gardens need --prompt, autonomous ones refuse it.
    Step {
        id: String,
        #[arg(long)]
        prompt: Option<String>,
    },
    /// Add K autonomous steps.
    Auto {
        id: String,
        #[arg(long)]
        steps: usize,
    },
    /// Summary of one garden.
    Show { id: String },
    /// Ids in the store.
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Graphml,
    Json,
}

fn metric_parser() -> PossibleValuesParser {
    PossibleValuesParser::new(std::iter::once("all").chain(METRIC_NAMES))
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            let text = e.to_string();
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return 1;
        }
    };
    init_logging();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gpfo: error: {e:#}");
            2
        }
    }
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

type Recorded = Recorder<Arc<dyn Gateway>>;

/// The gateway for one invocation, wrapped so exchanges can be traced
/// and saved.
struct Link {
    config: GatewayConfig,
    gateway: Arc<Recorded>,
    transcript: Option<PathBuf>,
}

impl Link {
    fn open(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(p) => GatewayConfig::load(p)?,
            None => GatewayConfig::default(),
        }
        .with_env();
        let mut gateway = Recorder::new(open(&config)?);
        if cli.trace {
            gateway = gateway.with_trace(Box::new(std::io::stderr()));
        }
        Ok(Self { config, gateway: Arc::new(gateway), transcript: cli.save_transcript.clone() })
    }

    /// Runs `f`, then saves the transcript whatever the outcome.
    fn run<T>(&self, f: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        let out = f(self);
        if let Some(path) = &self.transcript {
            let saved = self.gateway.save_transcript(path).with_context(|| format!("writing {}", path.display()));
            if out.is_ok() {
                saved?;
            }
        }
        out
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let store = GardenStore::new(&cli.store);
    match &cli.command {
        Command::Reason { task, iterations, integrate, integrate_include_initial, id, save_session } => {
            Link::open(cli)?.run(|link| {
                let cfg = SessionConfig {
                    iterations: *iterations,
                    integrate: *integrate,
                    include_initial: *integrate_include_initial,
                    reasoner: link.config.reasoner.clone(),
                    critic: link.config.critic.clone(),
                    provenance: None,
                };
                reason(cli.json, id, task, &cfg, &link.gateway, save_session.as_deref())
            })
        }
        Command::Garden(cmd) => garden(cli, &store, cmd),
        Command::Analyze { target, metric, top } => analyze(cli.json, &store, target, metric, *top),
        Command::Export { id, format, output } => {
            let g = store.load(id)?.integrated;
            let text = match format {
                ExportFormat::Graphml => to_graphml(&g),
                ExportFormat::Json => g.to_json() + "\n",
            };
            match output {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
                None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
            }
        }
        Command::GinDemo { seed, budget } => gin_demo(cli.json, *seed, *budget),
        Command::Serve { port, bind, max_steps, iterations } => Link::open(cli)?.run(|link| {
            let gateway: Arc<dyn Gateway> = link.gateway.clone();
            let state = AppState::new(store, gateway, garden_config(&link.config, *iterations), *max_steps);
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((bind.as_str(), *port))
                    .await
                    .with_context(|| format!("binding {bind}:{port}"))?;
                eprintln!("gpfo: listening on http://{}", listener.local_addr()?);
                server::serve(listener, state).await?;
                Ok(())
            })
        }),
    }
}

fn reason(
    json: bool,
    id: &str,
    task: &str,
    cfg: &SessionConfig,
    gateway: &Recorded,
    save: Option<&Path>,
) -> Result<()> {
    let persist = |s: &ReasoningSession| -> Result<()> {
        if let Some(path) = save {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            save_jsonl(s, std::io::BufWriter::new(file))?;
        }
        Ok(())
    };
    let session = match run_session(id, task, cfg, gateway) {
        Ok(s) => s,
        Err(EngineError::Gateway { source, partial }) => {
            persist(&partial)?;
            bail!("model call failed after {} completed calls: {source}", partial.calls.len());
        }
        Err(e) => return Err(e.into()),
    };
    persist(&session)?;
    if json {
        print_json(&session)
    } else {
        println!("{}", session.final_answer);
        Ok(())
    }
}

fn garden(cli: &Cli, store: &GardenStore, cmd: &GardenCommand) -> Result<()> {
    match cmd {
        GardenCommand::New { seed, id, mode, max_steps, iterations } => Link::open(cli)?.run(|link| {
            let id = id.clone().unwrap_or_else(|| fresh_id(store, seed));
            if store.dir(&id).exists() {
                bail!("garden {id:?} already exists in {}", store.root().display());
            }
            let mode: GardenMode = mode.parse().map_err(anyhow::Error::msg)?;
            let cfg = garden_config(&link.config, *iterations);
            let g = new_garden(&id, seed, mode, *max_steps, cfg, &*link.gateway)?;
            store.save(&g)?;
            show(cli.json, &g)
        }),
        GardenCommand::Step { id, prompt } => Link::open(cli)?.run(|link| {
            let mut g = store.load(id)?;
            let step = grow_step(&mut g, prompt.as_deref(), &*link.gateway)?.clone();
            store.save(&g)?;
            if cli.json {
                print_json(&step)
            } else {
                print_step(&g, &step);
                Ok(())
            }
        }),
        GardenCommand::Auto { id, steps } => Link::open(cli)?.run(|link| {
            let mut g = store.load(id)?;
            for _ in 0..*steps {
                let step = grow_step(&mut g, None, &*link.gateway)?.clone();
                store.save(&g)?;
                if !cli.json {
                    print_step(&g, &step);
                }
            }
            g.summary = Some(summarize(&g.integrated));
            store.save(&g)?;
            if cli.json {
                print_json(&ApiSessionView::new(&g, Status::Idle, None))
            } else {
                Ok(())
            }
        }),
        GardenCommand::Show { id } => show(cli.json, &store.load(id)?),
        GardenCommand::List => {
            let ids = store.list()?;
            if cli.json {
                return print_json(&ids);
            }
            ids.iter().for_each(|id| println!("{id}"));
            Ok(())
        }
    }
}

fn show(json: bool, g: &GardenSession) -> Result<()> {
    let view = ApiSessionView::new(g, Status::Idle, None);
    if json {
        return print_json(&view);
    }
    println!("{}", view.id);
    println!("mode {}, {} of {} steps", format!("{:?}", view.mode).to_lowercase(), view.step_count, view.max_steps);
    println!("{} nodes, {} edges", view.graph.node_count, view.graph.edge_count);
    let top: Vec<String> = view.graph.top_degree.iter().map(|n| format!("{} ({})", n.display, n.degree)).collect();
    if !top.is_empty() {
        println!("top degree: {}", top.join(", "));
    }
    Ok(())
}

fn print_step(g: &GardenSession, step: &GrowthStep) {
    println!("step {} [{}] {}", step.index, format!("{:?}", step.prompt_source).to_lowercase(), step.prompt);
    for w in &step.warnings {
        println!("  warning: {w}");
    }
    println!("  answer: {}", step.session.final_answer.lines().next().unwrap_or(""));
    println!(
        "  +{} edges; garden now {} nodes, {} edges",
        step.subgraph.edge_count(),
        g.integrated.node_count(),
        g.integrated.edge_count()
    );
}

/// A path that exists is read as a graph file; anything else is a garden id.
fn load_graph(store: &GardenStore, target: &str) -> Result<KnowledgeGraph> {
    let path = Path::new(target);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {target}"))?;
        let g = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            KnowledgeGraph::from_json(&text)
        } else {
            from_graphml(&text)
        };
        return g.with_context(|| format!("parsing {target}"));
    }
    Ok(store.load(target)?.integrated)
}

#[derive(Serialize)]
struct Analysis {
    node_count: usize,
    edge_count: usize,
    metrics: Vec<MetricReport>,
    summary: gpfo_core::metrics::GraphSummary,
}

fn analyze(json: bool, store: &GardenStore, target: &str, metric: &str, top: usize) -> Result<()> {
    let g = load_graph(store, target)?;
    if g.is_empty() {
        bail!("{target}: graph has no nodes");
    }
    let k = if top == 0 { g.node_count() } else { top };
    if metric == "all" {
        if json {
            let metrics = METRIC_NAMES.iter().map(|m| Ok(by_name(&g, m)?.with_top_k(k))).collect::<Result<_>>()?;
            return print_json(&Analysis {
                node_count: g.node_count(),
                edge_count: g.edge_count(),
                metrics,
                summary: summarize(&g),
            });
        }
        print!("{}", node_metrics_table(&g, k));
        let s = summarize(&g);
        println!("\n{} nodes, {} edges, {} components", s.node_count, s.edge_count, s.components.len());
        return Ok(());
    }
    let report = by_name(&g, metric)?.with_top_k(k);
    if json {
        return print_json(&report);
    }
    for (rank, (id, v)) in report.top_k.iter().enumerate() {
        let label = g.node(id).map_or(id.as_str(), |n| n.display.as_str());
        println!("{:>3}  {:<40} {v:.6}", rank + 1, label);
    }
    Ok(())
}

#[derive(Serialize)]
struct DemoGraph<'a> {
    labels: &'a [String],
    iteration0: &'a [Vec<f64>],
    iteration1: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct Demo<'a> {
    seed: u64,
    converged: bool,
    g1: DemoGraph<'a>,
    g2: DemoGraph<'a>,
    fit: &'a AlignmentFit,
}

fn gin_demo(json: bool, seed: Option<u64>, budget: usize) -> Result<()> {
    let (g1, g2) = build_equation_graphs();
    let matching = equation_matching();
    let accept = FitConfig::default().accept;
    let seeds: Vec<u64> = seed.map_or_else(|| FIXED_SEEDS.to_vec(), |s| vec![s]);
    let mut best: Option<(u64, AlignmentFit)> = None;
    for s in seeds {
        let fit = fit_alignment(&g1, &g2, &matching, s, budget)?;
        let done = fit.residual < accept;
        if best.as_ref().is_none_or(|(_, b)| fit.residual < b.residual) {
            best = Some((s, fit));
        }
        if done {
            break;
        }
    }
    let (seed, fit) = best.expect("at least one seed");
    let converged = fit.residual < accept;
    if json {
        return print_json(&Demo {
            seed,
            converged,
            g1: DemoGraph { labels: &g1.node_labels, iteration0: &g1.initial_embeddings, iteration1: &fit.g1_table.vectors },
            g2: DemoGraph { labels: &g2.node_labels, iteration0: &g2.initial_embeddings, iteration1: &fit.g2_table.vectors },
            fit: &fit,
        });
    }
    print!("{}", render_demo(&g1, &g2, &fit));
    if !converged {
        eprintln!("gpfo: residual {:.3e} did not reach {accept:e}; try a larger --budget", fit.residual);
    }
    Ok(())
}

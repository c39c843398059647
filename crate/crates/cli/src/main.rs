use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anchorlabel_client::Client;
use anchorlabel_core::api::{OptimizeRequest, RunInputs, SynthesizeRequest, TagRequest};
use anchorlabel_core::context::TraceScript;
use anchorlabel_core::harness::{self, BenchConfig, BenchReport, RunConfig, RunParams};
use anchorlabel_core::optimizer::Neighborhood;
use anchorlabel_core::profile::SpatialProfile;
use anchorlabel_core::tagging::KeyObjectVocabulary;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "anchorlabel",
    version,
    about = "Place instruction labels on the surfaces of key objects"
)]
struct Cli {
    /// Service to talk to; an in-process one is started when absent.
    #[arg(long, global = true, env = "ANCHORLABEL_SERVER")]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize one step against the last frames of the trace.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        /// Step index in the document profile.
        #[arg(long)]
        step: usize,
    },
    /// Optimize every step against its own segment of the trace.
    Replay {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare annealing with the exhaustive oracle on generated scenes.
    Bench(BenchArgs),
    /// Segment a plain-text document and tag each step with a key object.
    Tag {
        /// Plain-text instructions, one step per line.
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        vocabulary: PathBuf,
        /// Comma-separated key objects present in the environment.
        #[arg(long, value_delimiter = ',')]
        available: Option<Vec<String>>,
        #[arg(long, default_value = "")]
        title: String,
        /// Destination file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a trace from a script.
    Synth {
        #[arg(long)]
        spatial: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination JSON-lines file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

/// Every field of a run config. Flags override the `--config` file.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Run config JSON; individual flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spatial: Option<PathBuf>,
    #[arg(long)]
    document: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, env = "ANCHORLABEL_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Frames per context window.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long)]
    w_visibility: Option<f64>,
    #[arg(long)]
    w_readability: Option<f64>,
    #[arg(long)]
    w_hand_angle: Option<f64>,
    #[arg(long)]
    w_preference: Option<f64>,
    /// Label width in metres.
    #[arg(long)]
    label_width: Option<f64>,
    /// Label height in metres.
    #[arg(long)]
    label_height: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    i_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// eight_neighbor or diagonal_only.
    #[arg(long, value_parser = parse_neighborhood)]
    neighborhood: Option<Neighborhood>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Bench config JSON; individual flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenes: Option<usize>,
    #[arg(long)]
    scene_seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    first_seed: Option<u64>,
    #[arg(long)]
    min_cells: Option<usize>,
    #[arg(long)]
    max_cells: Option<usize>,
    #[arg(long)]
    min_surfaces: Option<usize>,
    #[arg(long)]
    max_surfaces: Option<usize>,
    /// Frames per generated context.
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    oracle_bound: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, env = "ANCHORLABEL_OUT_DIR")]
    out: Option<PathBuf>,
}

fn parse_neighborhood(s: &str) -> Result<Neighborhood, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ParamArgs {
    fn apply(&self, p: &mut RunParams) {
        let w = &mut p.weights;
        set(&mut w.visibility, self.w_visibility);
        set(&mut w.readability, self.w_readability);
        set(&mut w.hand_angle, self.w_hand_angle);
        set(&mut w.preference, self.w_preference);
        set(&mut p.label.width, self.label_width);
        set(&mut p.label.height, self.label_height);
        let o = &mut p.optimizer;
        set(&mut o.t1, self.t1);
        set(&mut o.i_max, self.i_max);
        set(&mut o.rng_seed, self.seed);
        set(&mut o.neighborhood, self.neighborhood);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                // Relative paths in the file are relative to the file.
                let mut cfg = read_json::<RunConfig>(path)?;
                let base = path.parent().unwrap_or(Path::new(""));
                for p in [
                    &mut cfg.spatial_profile,
                    &mut cfg.document_profile,
                    &mut cfg.trace,
                    &mut cfg.output_dir,
                ] {
                    *p = base.join(&*p);
                }
                cfg
            }
            None => {
                let missing = [
                    ("--spatial", &self.spatial),
                    ("--document", &self.document),
                    ("--trace", &self.trace),
                ]
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(n, _)| *n)
                .collect::<Vec<_>>();
                if !missing.is_empty() {
                    bail!("missing {} (or pass --config)", missing.join(", "));
                }
                RunConfig {
                    spatial_profile: PathBuf::new(),
                    document_profile: PathBuf::new(),
                    trace: PathBuf::new(),
                    params: RunParams::default(),
                    output_dir: PathBuf::from("out"),
                }
            }
        };
        set(&mut cfg.spatial_profile, self.spatial.clone());
        set(&mut cfg.document_profile, self.document.clone());
        set(&mut cfg.trace, self.trace.clone());
        set(&mut cfg.output_dir, self.out.clone());
        set(&mut cfg.params.window, self.window);
        self.params.apply(&mut cfg.params);
        Ok(cfg)
    }

    /// Validates every input locally, before the service does any work.
    fn load(&self) -> Result<(RunConfig, RunInputs)> {
        let cfg = self.resolve()?;
        let inputs = cfg.load_inputs()?;
        let run = RunInputs::from_inputs(inputs, cfg.params.clone());
        Ok((cfg, run))
    }
}

impl BenchArgs {
    fn resolve(&self) -> Result<(BenchConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => read_json::<BenchConfig>(path)?,
            None => BenchConfig::default(),
        };
        set(&mut cfg.scenes, self.scenes);
        set(&mut cfg.scene_seed, self.scene_seed);
        set(&mut cfg.runs, self.runs);
        set(&mut cfg.first_seed, self.first_seed);
        set(&mut cfg.scene.min_cells, self.min_cells);
        set(&mut cfg.scene.max_cells, self.max_cells);
        set(&mut cfg.scene.min_surfaces, self.min_surfaces);
        set(&mut cfg.scene.max_surfaces, self.max_surfaces);
        set(&mut cfg.scene.frames, self.frames);
        set(&mut cfg.oracle_bound, self.oracle_bound);
        let mut params = RunParams {
            weights: cfg.weights,
            label: cfg.label,
            optimizer: cfg.optimizer,
            ..RunParams::default()
        };
        self.params.apply(&mut params);
        cfg.weights = params.weights;
        cfg.label = params.label;
        cfg.optimizer = params.optimizer;
        Ok((
            cfg,
            self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        ))
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// Writes to `path` atomically, or to stdout.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            harness::write_atomic(p, bytes)?;
            eprintln!("wrote {}", p.display());
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

/// The bench thresholds: optimum hit rate, near-optimal rate and evaluation
/// ratio on large scenes.
fn bench_verdicts(report: &BenchReport) -> Vec<(String, bool)> {
    let hit = report.min_hit_rate();
    let within = report.min_within_rate();
    let mut out = vec![
        (
            format!("min optimum hit rate {hit:.3} >= 0.80"),
            hit >= 0.80,
        ),
        (
            format!("min within-5% rate {within:.3} >= 0.99"),
            within >= 0.99,
        ),
    ];
    if let Some(ratio) = report.max_evaluation_ratio(2000) {
        out.push((
            format!("max evaluation ratio on scenes >= 2000 cells {ratio:.3} < 0.15"),
            ratio < 0.15,
        ));
    }
    out
}

async fn connect(server: Option<String>) -> Result<Client> {
    match server {
        Some(url) => Ok(Client::new(url)),
        None => {
            let (addr, _handle) =
                anchorlabel_server::spawn(SocketAddr::from(([127, 0, 0, 1], 0))).await?;
            Ok(Client::new(format!("http://{addr}")))
        }
    }
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Serve { addr } = cli.command {
        let (local, handle) = anchorlabel_server::spawn(addr).await?;
        eprintln!("listening on http://{local}");
        return Ok(handle.await??);
    }
    let client = connect(cli.server).await?;
    match cli.command {
        Command::Optimize { run, step } => {
            let (cfg, run) = run.load()?;
            let spatial = run.spatial_profile.clone();
            let outcome = client.optimize(&OptimizeRequest { run, step }).await?;
            let written = harness::write_step_artifacts(&cfg.output_dir, &spatial, &outcome)?;
            let b = &outcome.breakdown;
            println!(
                "step {} on {}: {} ({}, {}) total {:.6} [c_v {:.6} c_r {:.6} c_ha {:.6} c_p {:.6}] after {} evaluations",
                outcome.step,
                outcome.key_object_id,
                outcome.best.surface_id,
                outcome.best.r,
                outcome.best.c,
                b.total,
                b.c_v,
                b.c_r,
                b.c_ha,
                b.c_p,
                outcome.evaluations
            );
            print_written(&written);
        }
        Command::Replay { run } => {
            let (cfg, run) = run.load()?;
            let report = client.replay(&run).await?;
            let written = harness::write_replay_artifacts(&cfg.output_dir, &report)?;
            println!(
                "{} rows, config {}",
                report.rows.len(),
                report.config_digest
            );
            print_written(&written);
        }
        Command::Bench(args) => {
            let (cfg, out) = args.resolve()?;
            let report = client.bench(&cfg).await?;
            let written = harness::write_bench_artifacts(&out, &report)?;
            for (line, ok) in bench_verdicts(&report) {
                println!("{} {line}", if ok { "PASS" } else { "FAIL" });
            }
            print_written(&written);
        }
        Command::Tag {
            text,
            vocabulary,
            available,
            title,
            output,
        } => {
            let vocabulary = KeyObjectVocabulary::load(&vocabulary)?;
            let text = std::fs::read_to_string(&text)
                .with_context(|| format!("reading {}", text.display()))?;
            let available = available.map(|v| v.into_iter().collect::<BTreeSet<_>>());
            let doc = client
                .tag(&TagRequest {
                    title,
                    text,
                    vocabulary,
                    available,
                })
                .await?;
            let mut json = doc.to_json();
            if !json.ends_with('\n') {
                json.push('\n');
            }
            emit(output.as_deref(), json.as_bytes())?;
        }
        Command::Synth {
            spatial,
            script,
            seed,
            output,
        } => {
            let req = SynthesizeRequest {
                spatial_profile: SpatialProfile::load(&spatial)?,
                script: TraceScript::load(&script)?,
                seed,
            };
            let trace = client.synthesize(&req).await?;
            emit(output.as_deref(), trace.to_jsonl().as_bytes())?;
        }
        Command::Serve { .. } => unreachable!("handled above"),
    }
    Ok(())
}

/// The error chain, skipping causes whose text the previous message
/// already includes.
fn render_error(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render_error(&e));
            std::process::ExitCode::FAILURE
        }
    }
}

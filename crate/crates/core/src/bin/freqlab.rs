use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use freqlab::harness::{self, ClusterConfig, ExperimentConfig, MnistSource, TargetId};
use freqlab::mlp::MlpSpec;
use freqlab::optimizers::OptimizerConfig;
use freqlab::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "freqlab", version, about = "Frequency-resolved training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run one experiment per seed and report ordering statistics.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Seeds to run, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
    },
    /// Redraw the heatmap of a trace CSV.
    Plot {
        csv: PathBuf,
        /// Output SVG; defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite on synthetic objectives.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sin1_3, sin1_3_5, mnist_subset or clusters.
    #[arg(long)]
    target: Option<String>,
    /// Layer widths such as 1-100-10-1.
    #[arg(long)]
    widths: Option<String>,
    /// gd, cg, tnc, bfgs, lbfgs, powell, pso or mc.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Filter variance; repeat for several.
    #[arg(long = "delta")]
    deltas: Vec<f64>,
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
    /// Stop once every tracked frequency is below this relative error.
    #[arg(long)]
    halt_below: Option<f64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => {
            let target: TargetId = args
                .target
                .as_deref()
                .ok_or_else(|| Failure::Config("--target or --config is required".into()))?
                .parse()?;
            let optimizer = OptimizerConfig::from_id(args.optimizer.as_deref().unwrap_or("cg"))?;
            ExperimentConfig::new(target, optimizer)
        }
    };
    if args.config.is_some() {
        if let Some(t) = &args.target {
            cfg.target = t.parse()?;
        }
        if let Some(o) = &args.optimizer {
            cfg.optimizer = OptimizerConfig::from_id(o)?;
        }
    }
    if let Some(w) = &args.widths {
        cfg.widths = MlpSpec::parse(w)?;
    } else if args.config.is_none() && cfg.target == TargetId::Clusters {
        let c = ClusterConfig::default();
        cfg.widths = MlpSpec::new(vec![c.dim, 64, c.classes])?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.epochs {
        cfg.stop.max_iter = m;
    }
    if let Some(r) = args.record_every {
        cfg.record_every = r;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if !args.deltas.is_empty() {
        cfg.deltas = args.deltas.clone();
    }
    match (&args.mnist_images, &args.mnist_labels) {
        (Some(images), Some(labels)) => {
            cfg.mnist = Some(MnistSource {
                images: images.clone(),
                labels: labels.clone(),
                count: cfg.mnist.as_ref().map_or(550, |m| m.count),
            });
        }
        (None, None) => {}
        _ => return Err(Failure::Config("--mnist-images and --mnist-labels go together".into())),
    }
    if args.halt_below.is_some() {
        cfg.halt_below = args.halt_below;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            let art = harness::run_experiment(&cfg)?;
            let s = &art.outcome.summary;
            println!(
                "{} {} seed {}: {} epochs, loss {:.6e} -> {:.6e} ({:?})",
                s.optimizer, s.widths, s.seed, s.epochs, s.initial_loss, s.final_loss, s.termination
            );
            for (t, per_k) in &s.convergence {
                let parts: Vec<String> = per_k
                    .iter()
                    .map(|(k, e)| format!("k={k}:{}", e.map_or("-".into(), |e| e.to_string())))
                    .collect();
                println!("  first epoch below {t}: {}", parts.join(" "));
            }
            for (d, frac) in &s.low_before_high {
                println!("  delta {d}: e_low < e_high in {:.0}% of epochs", 100.0 * frac);
            }
            println!("wrote {}", cfg.out_dir.display());
            Ok(0)
        }
        Command::Sweep { run, seeds } => {
            let cfg = build_config(&run)?;
            let report = harness::sweep(&cfg, &seeds)?;
            for s in &report.runs {
                println!("seed {}: {} epochs, final loss {:.6e}", s.seed, s.epochs, s.final_loss);
            }
            for (t, n) in &report.ordered {
                println!("ordered at threshold {t}: {n}/{}", seeds.len());
            }
            Ok(0)
        }
        Command::Plot { csv, out } => {
            let trace = harness::read_csv(&csv)?;
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            harness::emit_heatmap_svg(&trace, &out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Verify => {
            let checks = harness::verify::run_all();
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            Ok(if failed == 0 { 0 } else { EXIT_VERIFY })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

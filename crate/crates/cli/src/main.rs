use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use asmkit::dataio::SynthKind;
use asmkit::evaluate::EvalMode;
use asmkit_cli::{
    cmd_bench, cmd_camview, cmd_evaluate, cmd_plan, cmd_simulate, cmd_split, cmd_synth, write_json, BenchArgs, CamviewArgs, Context,
    EvaluateArgs, Method, PlanArgs, SimulateArgs, SplitArgs, SynthArgs,
};
use clap::{Parser, Subcommand};

/// Evaluate, simulate and plan rigid-body assembly trajectories.
#[derive(Parser, Debug)]
#[command(name = "asmkit", version)]
struct Cli {
    /// `key = value` settings file (simulator, thresholds, camera, synthesis)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for planners, synthesis and splits
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output path; stdout when omitted. `synth` takes a directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record wall-clock time in manifests (reports stop being reproducible)
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a plan against ground truth, statically and/or in simulation
    Evaluate {
        /// Record directory or dataset of records
        #[arg(long)]
        gt: PathBuf,
        /// Plan file, or directory of `<assembly id>.json`; ground truth when omitted
        #[arg(long)]
        plan: Option<PathBuf>,
        /// static, simulate or both
        #[arg(long, default_value = "both")]
        mode: EvalMode,
    },
    /// Execute a plan step by step and report where the parts ended up
    Simulate {
        #[arg(long)]
        assembly: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Plan an assembly with one of the classical planners
    Plan {
        #[arg(long)]
        assembly: PathBuf,
        /// disassembly, straightline, rrt or rrt-connect
        #[arg(long)]
        method: Method,
        /// Wall-clock seconds
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Generate synthetic assemblies with ground-truth plans
    Synth {
        /// stack, peg-in-hole, l-slot or bayonet; a mix when omitted
        #[arg(long)]
        kind: Option<SynthKind>,
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Split a dataset into train, validation and test ids
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "0.8,0.1,0.1")]
        frac: String,
    },
    /// Rank camera views for instruction-manual renderings
    Camview {
        #[arg(long)]
        assembly: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Directory for per-camera id buffers as PGM images
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Success rates of planners across a timeout grid
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "disassembly,straightline,rrt,rrt-connect")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,30")]
        timeouts: Vec<f64>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let mut ctx = Context::from_config_file(cli.config.as_deref(), cli.seed).context("reading --config")?;
    ctx.timings = cli.timings;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Evaluate { gt, plan, mode } => write_json(out, &cmd_evaluate(&EvaluateArgs { gt, plan, mode }, &ctx)?),
        Command::Simulate { assembly, plan } => write_json(out, &cmd_simulate(&SimulateArgs { assembly, plan }, &ctx)?),
        Command::Plan { assembly, method, timeout } => {
            write_json(out, &cmd_plan(&PlanArgs { assembly, method, timeout }, &ctx)?)
        }
        Command::Synth { kind, count } => {
            let dir = out.context("synth needs --out <directory>")?.to_path_buf();
            let report = cmd_synth(&SynthArgs { kind, count, out: dir.clone() }, &ctx)?;
            write_json(Some(&dir.join("synth.json")), &report)
        }
        Command::Split { dataset, frac } => {
            write_json(out, &cmd_split(&SplitArgs { dataset, fractions: frac }, &ctx)?)
        }
        Command::Camview { assembly, plan, pgm } => {
            write_json(out, &cmd_camview(&CamviewArgs { assembly, plan, pgm }, &ctx)?)
        }
        Command::Bench { dataset, methods, timeouts } => {
            let report = cmd_bench(&BenchArgs { dataset, methods, timeouts }, &ctx)?;
            write_json(out, &report)?;
            if let Some(path) = out {
                std::fs::write(path.with_extension("csv"), report.to_csv())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

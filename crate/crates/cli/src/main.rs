use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use homkernel::evaluation::format_report;
use homkernel::Label;
use homkernel_cli::{
    cmd_classify, cmd_dip, cmd_generate, cmd_report, cmd_run, cmd_train, dip_file_name, exit_code,
    predictions_file_name, ClassifyOptions, DipPair, ExperimentConfig, UsageError, WeightSource, EXIT_USAGE, TEST_FILE,
};

#[derive(Parser)]
#[command(name = "homk", version, about = "Hong-Ou-Mandel quantum-kernel experiment")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Replace exact kernels with this many simulated detections.
    #[arg(long, global = true)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write train.csv and test.csv.
    Generate,
    /// Fit the encoding weights on train.csv.
    Train,
    /// Coincidence curve against relative delay.
    Dip {
        #[arg(long)]
        untrained: bool,
        #[arg(long, value_enum, default_value_t = PairArg::Means)]
        pair: PairArg,
        /// Feature pair `x1,x2` for `--pair point`.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Class mean the point is compared with.
        #[arg(long, default_value = "P")]
        against: Label,
    },
    /// Label every row of a dataset file.
    Classify {
        #[arg(long)]
        untrained: bool,
        #[arg(long)]
        single_mean: bool,
        /// Dataset to classify; defaults to test.csv in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Confusion matrices and score lists for both prediction files.
    Report,
    /// generate, train, dip, classify and report in one go.
    Run {
        #[arg(long)]
        single_mean: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    Means,
    Point,
}

fn source(untrained: bool) -> WeightSource {
    if untrained {
        WeightSource::Untrained
    } else {
        WeightSource::Trained
    }
}

fn parse_point(s: &str) -> Result<[f64; 2], UsageError> {
    let bad = || UsageError(format!("--point expects `x1,x2`, got {s:?}"));
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(bad()),
    }
}

fn load_config(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.iterations {
        cfg.iterations = n;
    }
    if let Some(o) = &c.output {
        cfg.output = o.clone();
    }
    if c.shots.is_some() {
        cfg.shots = c.shots;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Generate => {
            let (train, test) = cmd_generate(&cfg)?;
            println!(
                "wrote {} training and {} test rows to {}",
                train.len(),
                test.len(),
                cfg.output.display()
            );
        }
        Command::Train => {
            let out = cmd_train(&cfg)?;
            println!("initial MMD {:.6}", out.initial().cost);
            println!("final MMD {:.6}", out.best_cost);
        }
        Command::Dip {
            untrained,
            pair,
            point,
            against,
        } => {
            let pair = match (pair, point) {
                (PairArg::Means, None) => DipPair::Means,
                (PairArg::Means, Some(_)) => return Err(UsageError("--point needs --pair point".into()).into()),
                (PairArg::Point, Some(p)) => DipPair::PointVsMean {
                    point: parse_point(&p)?,
                    mean: against,
                },
                (PairArg::Point, None) => return Err(UsageError("--pair point needs --point".into()).into()),
            };
            let src = source(untrained);
            let curve = cmd_dip(&cfg, src, &pair)?;
            println!(
                "wrote {}: min CC {:.6}, CC(0) {}",
                dip_file_name(src),
                curve.min_cc(),
                curve.cc_at_zero().map_or("n/a".to_string(), |c| format!("{c:.6}"))
            );
        }
        Command::Classify {
            untrained,
            single_mean,
            input,
        } => {
            let src = source(untrained);
            let input = input.unwrap_or_else(|| cfg.path(TEST_FILE));
            let opts = ClassifyOptions {
                single_mean,
                shots: cfg.shots,
            };
            let ev = cmd_classify(&cfg, src, &input, opts)?;
            println!("wrote {}", predictions_file_name(src));
            if ev.matrix.total() > 0 || ev.unclassifiable > 0 {
                print!("{}", format_report(&ev));
            }
        }
        Command::Report => print!("{}", cmd_report(&cfg)?),
        Command::Run { single_mean } => {
            let opts = ClassifyOptions {
                single_mean,
                shots: cfg.shots,
            };
            let (s, report) = cmd_run(&cfg, opts)?;
            print!("{report}");
            println!("initial MMD {:.6}, final MMD {:.6}", s.initial_mmd, s.final_mmd);
            println!(
                "untrained CC(0) {:.6}, trained min CC {:.6}",
                s.untrained_cc0.unwrap_or(f64::NAN),
                s.trained_min_cc
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

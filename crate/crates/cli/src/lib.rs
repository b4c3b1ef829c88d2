//! Experiment driver behind the `homk` binary.
//!
//! Every subcommand reads an [`ExperimentConfig`], works inside its output
//! directory and leaves CSV artifacts there:
//!
//! | step       | reads                         | writes                                   |
//! |------------|-------------------------------|------------------------------------------|
//! | `generate` |                               | `train.csv`, `test.csv`                  |
//! | `train`    | `train.csv`                   | `weights.csv`, `trace.csv`               |
//! | `dip`      | `train.csv`, `weights.csv`    | `dip.csv` / `dip_untrained.csv`          |
//! | `classify` | `train.csv`, `weights.csv`, input | `predictions.csv` / `predictions_untrained.csv` |
//! | `report`   | both prediction files         | `report/{trained,untrained}/`            |

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use homkernel::data::{generate_blobs, generate_test_set, read_dataset, write_dataset};
use homkernel::encoding::{encode, FeatureMapKind};
use homkernel::evaluation::{render_report, Evaluation};
use homkernel::interference::{delay_sweep, dip_curve, kernel, DipCurve};
use homkernel::mmd::{
    classify_single_mean_with, classify_with, load_predictions, mmd, save_predictions, shot_kernel, Classification,
    PredictionRow,
};
use homkernel::modes::{TimeGrid, DEFAULT_POINTS, DEFAULT_T_MAX};
use homkernel::training::{default_schedule, train, ScheduleRule};
use homkernel::{
    BlobSpec, ClassMeans, Dataset, EncodedPhoton, Error, FeatureMap, FeatureVector, Label, ModeBasis, TrainConfig,
    TrainOutcome, WeightVector,
};
use serde::{Deserialize, Serialize};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const WEIGHTS_HEADER_PREFIX: &str = "kind";

/// Flat experiment configuration. Every key is optional in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output: PathBuf,
    pub centers: [[f64; 2]; 4],
    pub sigma: f64,
    pub points_per_blob: usize,
    pub grouping: [Label; 4],
    pub data_seed: u64,
    pub test_seed: u64,
    pub feature_map: FeatureMapKind,
    pub mode_order: usize,
    pub t_max: f64,
    pub grid_points: usize,
    pub iterations: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub schedule: Vec<ScheduleRule>,
    pub shots: Option<u64>,
    pub shot_seed: u64,
    pub delay_min: f64,
    pub delay_max: f64,
    pub delay_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let blobs = BlobSpec::default();
        let train = TrainConfig::default();
        Self {
            output: PathBuf::from("out"),
            centers: blobs.centers,
            sigma: blobs.sigma,
            points_per_blob: blobs.points_per_blob,
            grouping: blobs.grouping,
            data_seed: blobs.seed,
            test_seed: blobs.seed + 1,
            feature_map: FeatureMapKind::Polynomial2,
            mode_order: 3,
            t_max: DEFAULT_T_MAX,
            grid_points: DEFAULT_POINTS,
            iterations: train.iterations,
            fd_step: train.fd_step,
            seed: train.seed,
            schedule: default_schedule(),
            shots: None,
            shot_seed: 0,
            delay_min: -5.0,
            delay_max: 5.0,
            delay_steps: 201,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> homkernel::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> homkernel::Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn blob_spec(&self) -> BlobSpec {
        BlobSpec {
            centers: self.centers,
            sigma: self.sigma,
            points_per_blob: self.points_per_blob,
            grouping: self.grouping,
            seed: self.data_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            fd_step: self.fd_step,
            seed: self.seed,
            schedule: self.schedule.clone(),
        }
    }

    pub fn feature_map(&self) -> FeatureMap {
        FeatureMap::from_kind(self.feature_map, 2)
    }

    pub fn basis(&self) -> homkernel::Result<ModeBasis> {
        ModeBasis::new(self.mode_order, TimeGrid::symmetric(self.t_max, self.grid_points)?)
    }

    pub fn delays(&self) -> homkernel::Result<Vec<f64>> {
        if self.delay_min.partial_cmp(&self.delay_max) != Some(Ordering::Less) || self.delay_steps < 2 {
            return Err(Error::Domain(format!(
                "delay range [{}, {}] with {} steps",
                self.delay_min, self.delay_max, self.delay_steps
            )));
        }
        Ok(delay_sweep(self.delay_min, self.delay_max, self.delay_steps))
    }

    pub fn validate(&self) -> homkernel::Result<()> {
        let dim = self.feature_map().output_dim();
        if self.mode_order != dim {
            return Err(Error::Domain(format!(
                "mode_order {} does not match feature map output dimension {dim}",
                self.mode_order
            )));
        }
        if self.test_seed == self.data_seed {
            return Err(Error::Domain("test_seed must differ from data_seed".into()));
        }
        self.blob_spec().validate()?;
        self.train_config().validate()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }
}

/// A bad combination of command-line arguments.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Domain(_) | Error::DegenerateEncoding(_) => EXIT_DOMAIN,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<homkernel::training::TrainError>() {
            return match e.source {
                Error::Domain(_) | Error::DegenerateEncoding(_) => EXIT_DOMAIN,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

fn ensure_output(cfg: &ExperimentConfig) -> homkernel::Result<()> {
    std::fs::create_dir_all(&cfg.output)?;
    Ok(())
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> anyhow::Result<(Dataset, Dataset)> {
    cfg.validate()?;
    ensure_output(cfg)?;
    let spec = cfg.blob_spec();
    let train = generate_blobs(&spec)?;
    let test = generate_test_set(&spec, cfg.test_seed)?;
    write_dataset(&train, cfg.path(TRAIN_FILE))?;
    write_dataset(&test, cfg.path(TEST_FILE))?;
    Ok((train, test))
}

/// Initial, final and best weights of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsFile {
    pub initial: Vec<f64>,
    pub last: Vec<f64>,
    pub best: Vec<f64>,
}

impl WeightsFile {
    pub fn from_outcome(out: &TrainOutcome) -> Self {
        Self {
            initial: out.initial().weights.clone(),
            last: out.last().weights.clone(),
            best: out.best_weights.as_slice().to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> homkernel::Result<()> {
        write!(out, "{WEIGHTS_HEADER_PREFIX}")?;
        for n in 0..self.best.len() {
            write!(out, ",w_{n}")?;
        }
        writeln!(out)?;
        for (kind, w) in [("initial", &self.initial), ("final", &self.last), ("best", &self.best)] {
            write!(out, "{kind}")?;
            for v in w {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> homkernel::Result<Self> {
        let parse = |line: usize, msg: String| Error::Parse { line, message: msg };
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let dim = header.split(',').count().saturating_sub(1);
        if !header.starts_with(WEIGHTS_HEADER_PREFIX) || dim == 0 {
            return Err(parse(1, format!("bad weights header {header:?}")));
        }
        let (mut initial, mut last, mut best) = (None, None, None);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let kind = fields.next().unwrap_or_default().to_string();
            let values = fields
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| parse(lineno, format!("bad number {s:?}: {e}")))
                })
                .collect::<homkernel::Result<Vec<_>>>()?;
            if values.len() != dim {
                return Err(parse(lineno, format!("expected {dim} weights, got {}", values.len())));
            }
            let slot = match kind.as_str() {
                "initial" => &mut initial,
                "final" => &mut last,
                "best" => &mut best,
                other => return Err(parse(lineno, format!("unknown row kind {other:?}"))),
            };
            *slot = Some(values);
        }
        let missing = |k: &str| parse(0, format!("weights file has no {k} row"));
        Ok(Self {
            initial: initial.ok_or_else(|| missing("initial"))?,
            last: last.ok_or_else(|| missing("final"))?,
            best: best.ok_or_else(|| missing("best"))?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> homkernel::Result<Self> {
        Self::read_csv(BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> homkernel::Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

pub fn cmd_train(cfg: &ExperimentConfig) -> anyhow::Result<TrainOutcome> {
    cfg.validate()?;
    let data = read_dataset(cfg.path(TRAIN_FILE))?;
    let out = match train(&data, &cfg.feature_map(), &cfg.train_config()) {
        Ok(out) => out,
        Err(e) => {
            // keep what was computed before the failure
            let _ = e.trace.save(cfg.path(TRACE_FILE));
            return Err(e.into());
        }
    };
    out.trace.save(cfg.path(TRACE_FILE))?;
    WeightsFile::from_outcome(&out).save(cfg.path(WEIGHTS_FILE))?;
    Ok(out)
}

/// Which weights a downstream step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    Trained,
    Untrained,
}

impl WeightSource {
    pub fn suffix(self) -> &'static str {
        match self {
            WeightSource::Trained => "",
            WeightSource::Untrained => "_untrained",
        }
    }
}

pub fn load_weights(cfg: &ExperimentConfig, source: WeightSource) -> homkernel::Result<WeightVector> {
    match source {
        WeightSource::Untrained => Ok(WeightVector::ones(cfg.mode_order)),
        WeightSource::Trained => WeightVector::new(WeightsFile::load(cfg.path(WEIGHTS_FILE))?.best),
    }
}

fn class_means(cfg: &ExperimentConfig, weights: &WeightVector) -> homkernel::Result<ClassMeans> {
    let data = read_dataset(cfg.path(TRAIN_FILE))?;
    ClassMeans::from_dataset(&data, &cfg.feature_map(), weights)
}

/// The two photons fed into the beamsplitter for `dip`.
#[derive(Debug, Clone, PartialEq)]
pub enum DipPair {
    Means,
    PointVsMean { point: [f64; 2], mean: Label },
}

pub fn dip_file_name(source: WeightSource) -> String {
    format!("dip{}.csv", source.suffix())
}

pub fn cmd_dip(cfg: &ExperimentConfig, source: WeightSource, pair: &DipPair) -> anyhow::Result<DipCurve> {
    cfg.validate()?;
    ensure_output(cfg)?;
    let weights = load_weights(cfg, source)?;
    let means = class_means(cfg, &weights)?;
    let (a, b): (EncodedPhoton, EncodedPhoton) = match pair {
        DipPair::Means => (means.mu_p.clone(), means.mu_q.clone()),
        DipPair::PointVsMean { point, mean } => {
            let x = FeatureVector::new(point.to_vec())?;
            let phi = encode(&x, &cfg.feature_map(), &weights)?;
            let mu = match mean {
                Label::P => means.mu_p.clone(),
                Label::Q => means.mu_q.clone(),
            };
            (phi, mu)
        }
    };
    let curve = dip_curve(&a, &b, &cfg.basis()?, &cfg.delays()?)?;
    curve.save(cfg.path(&dip_file_name(source)))?;
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassifyOptions {
    pub single_mean: bool,
    pub shots: Option<u64>,
}

pub fn predictions_file_name(source: WeightSource) -> String {
    format!("predictions{}.csv", source.suffix())
}

/// Classifies every row of `input` and writes the predictions file.
pub fn cmd_classify(
    cfg: &ExperimentConfig,
    source: WeightSource,
    input: &Path,
    opts: ClassifyOptions,
) -> anyhow::Result<Evaluation> {
    cfg.validate()?;
    ensure_output(cfg)?;
    let data = read_dataset(input)?;
    let map = cfg.feature_map();
    let weights = load_weights(cfg, source)?;
    let means = class_means(cfg, &weights)?;

    let exact = |a: &EncodedPhoton, b: &EncodedPhoton| kernel(a, b).map(|k| k.value());
    let mut sampled = opts.shots.map(|n| shot_kernel(n, cfg.shot_seed));
    let mut k = |a: &EncodedPhoton, b: &EncodedPhoton| match sampled.as_mut() {
        Some(f) => f(a, b),
        None => exact(a, b),
    };
    let calibration = if opts.single_mean {
        Some(k(&means.mu_p, &means.mu_q)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(data.len());
    for s in data.rows() {
        let x = &s.features;
        let result: homkernel::Result<Classification> = match calibration {
            Some(c) => classify_single_mean_with(x, &means.mu_q, c, &map, &weights, &mut k),
            None => classify_with(x, &means, &map, &weights, &mut k),
        };
        let prediction = match result {
            Ok(c) => Some(c),
            Err(Error::DegenerateEncoding(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let v = x.values();
        rows.push(PredictionRow {
            x: [v[0], v[1]],
            prediction,
            true_label: s.label,
        });
    }
    save_predictions(&rows, cfg.path(&predictions_file_name(source)))?;
    Ok(Evaluation::from_predictions(&rows))
}

pub const REPORT_DIR: &str = "report";

/// Renders the trained and untrained reports from existing prediction files.
pub fn cmd_report(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let mut text = String::new();
    for (source, name) in [
        (WeightSource::Untrained, "untrained"),
        (WeightSource::Trained, "trained"),
    ] {
        let rows = load_predictions(cfg.path(&predictions_file_name(source)))?;
        let ev = Evaluation::from_predictions(&rows);
        let dir = cfg.output.join(REPORT_DIR).join(name);
        text.push_str(&format!("== {name}\n"));
        text.push_str(&render_report(&ev, dir)?);
    }
    Ok(text)
}

/// Headline numbers of a full pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub initial_mmd: f64,
    pub final_mmd: f64,
    pub untrained_cc0: Option<f64>,
    pub trained_min_cc: f64,
    pub untrained_accuracy: f64,
    pub trained_accuracy: f64,
}

/// generate, train, dip (both weightings), classify (both), report.
pub fn cmd_run(cfg: &ExperimentConfig, opts: ClassifyOptions) -> anyhow::Result<(RunSummary, String)> {
    cmd_generate(cfg)?;
    let out = cmd_train(cfg)?;
    let untrained_dip = cmd_dip(cfg, WeightSource::Untrained, &DipPair::Means)?;
    let trained_dip = cmd_dip(cfg, WeightSource::Trained, &DipPair::Means)?;
    let test = cfg.path(TEST_FILE);
    let ev_u = cmd_classify(cfg, WeightSource::Untrained, &test, opts)?;
    let ev_t = cmd_classify(cfg, WeightSource::Trained, &test, opts)?;
    let report = cmd_report(cfg)?;
    let summary = RunSummary {
        initial_mmd: out.initial().cost,
        final_mmd: out.best_cost,
        untrained_cc0: untrained_dip.cc_at_zero(),
        trained_min_cc: trained_dip.min_cc(),
        untrained_accuracy: ev_u.accuracy(),
        trained_accuracy: ev_t.accuracy(),
    };
    Ok((summary, report))
}

/// MMD between the class means of `train.csv` under the given weights.
pub fn means_mmd(cfg: &ExperimentConfig, source: WeightSource) -> anyhow::Result<f64> {
    let w = load_weights(cfg, source)?;
    Ok(mmd(&class_means(cfg, &w)?)?.value())
}

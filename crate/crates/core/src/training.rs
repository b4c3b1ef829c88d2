//! Training the free weights by noisy gradient ascent on the MMD.
//!
//! Each iteration looks up a learning rate `L` and noise level `sigma` from
//! the current cost, estimates the gradient by central differences and steps
//!
//! ```text
//! w <- w + L * grad MMD(w) + eps,   eps_n ~ N(0, sigma)
//! ```
//!
//! The default schedule:
//!
//! | cost            | L     | sigma |
//! |-----------------|-------|-------|
//! | `< 1.8`         | 0.1   | 0.5   |
//! | `[1.8, 1.9)`    | 0.01  | 0.05  |
//! | `>= 1.9`        | 0.001 | 0.05  |

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::encoding::{FeatureMap, WeightVector};
use crate::error::{Error, Result};
use crate::interference::CLAMP_TOLERANCE;

/// One row of the learning-rate schedule, active for costs in `[low, high)`.
///
/// In JSON an open end is written as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRule {
    #[serde(with = "open_below")]
    pub cost_threshold_low: f64,
    #[serde(with = "open_above")]
    pub cost_threshold_high: f64,
    pub learning_rate: f64,
    pub noise_sigma: f64,
}

macro_rules! open_bound {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_infinite() {
                    s.serialize_none()
                } else {
                    s.serialize_some(v)
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($inf))
            }
        }
    };
}

open_bound!(open_below, f64::NEG_INFINITY);
open_bound!(open_above, f64::INFINITY);

pub fn default_schedule() -> Vec<ScheduleRule> {
    vec![
        ScheduleRule {
            cost_threshold_low: f64::NEG_INFINITY,
            cost_threshold_high: 1.8,
            learning_rate: 0.1,
            noise_sigma: 0.5,
        },
        ScheduleRule {
            cost_threshold_low: 1.8,
            cost_threshold_high: 1.9,
            learning_rate: 0.01,
            noise_sigma: 0.05,
        },
        ScheduleRule {
            cost_threshold_low: 1.9,
            cost_threshold_high: f64::INFINITY,
            learning_rate: 0.001,
            noise_sigma: 0.05,
        },
    ]
}

fn validate_schedule(schedule: &[ScheduleRule]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::domain("schedule has no rules"));
    }
    for r in schedule {
        if !(r.learning_rate > 0.0 && r.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "learning rate {} must be positive",
                r.learning_rate
            )));
        }
        if !(r.noise_sigma >= 0.0 && r.noise_sigma.is_finite()) {
            return Err(Error::domain(format!("noise sigma {} must be >= 0", r.noise_sigma)));
        }
        if r.cost_threshold_low.partial_cmp(&r.cost_threshold_high) != Some(Ordering::Less) {
            return Err(Error::domain("schedule rule has an empty cost range"));
        }
    }
    let mut sorted = schedule.to_vec();
    sorted.sort_by(|a, b| a.cost_threshold_low.total_cmp(&b.cost_threshold_low));
    if sorted[0].cost_threshold_low > 0.0 || sorted[sorted.len() - 1].cost_threshold_high <= 2.0 {
        return Err(Error::domain("schedule does not cover costs in [0, 2]"));
    }
    if sorted
        .windows(2)
        .any(|w| w[0].cost_threshold_high != w[1].cost_threshold_low)
    {
        return Err(Error::domain("schedule rules leave gaps or overlap"));
    }
    Ok(())
}

/// `(learning_rate, noise_sigma)` for the rule whose range holds `cost`.
/// Boundary costs belong to the higher bracket.
pub fn schedule_lookup(cost: f64, schedule: &[ScheduleRule]) -> Result<(f64, f64)> {
    schedule
        .iter()
        .find(|r| r.cost_threshold_low <= cost && cost < r.cost_threshold_high)
        .map(|r| (r.learning_rate, r.noise_sigma))
        .ok_or_else(|| Error::domain(format!("no schedule rule covers cost {cost}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub schedule: Vec<ScheduleRule>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            fd_step: 1e-4,
            seed: 0,
            schedule: default_schedule(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::domain(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        validate_schedule(&self.schedule)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// The MMD between class means as a function of the weights.
///
/// The feature map is applied once up front; each evaluation only reweights,
/// normalizes and averages.
#[derive(Debug, Clone)]
pub struct Objective {
    dim: usize,
    /// Mapped features, `[P, Q]`, flattened row-major.
    mapped: [Vec<f64>; 2],
}

impl Objective {
    pub fn new(data: &Dataset, map: &FeatureMap) -> Result<Self> {
        let dim = map.output_dim();
        let mut mapped = [Vec::new(), Vec::new()];
        for row in data.rows() {
            let phi = map.apply(&row.features)?;
            mapped[row.label.index()].extend_from_slice(phi.values());
        }
        for label in Label::ALL {
            if mapped[label.index()].is_empty() {
                return Err(Error::EmptyClass(format!("class {label} has no training points")));
            }
        }
        Ok(Self { dim, mapped })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized mean of the normalized weighted feature vectors of a class.
    fn class_mean(&self, label: Label, w: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut used = 0usize;
        let mut buf = vec![0.0; self.dim];
        for phi in self.mapped[label.index()].chunks_exact(self.dim) {
            let mut norm2 = 0.0;
            for ((b, p), wn) in buf.iter_mut().zip(phi).zip(w) {
                *b = wn * p;
                norm2 += *b * *b;
            }
            if norm2 == 0.0 {
                continue;
            }
            let inv = norm2.sqrt().recip();
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += b * inv;
            }
            used += 1;
        }
        if used == 0 {
            return Err(Error::EmptyClass(format!(
                "every point of class {label} encodes to zero"
            )));
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateEncoding(format!("mean of class {label} is zero")));
        }
        out.iter_mut().for_each(|v| *v /= norm);
        Ok(())
    }

    pub fn cost(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dim {
            return Err(Error::domain(format!("expected {} weights, got {}", self.dim, w.len())));
        }
        let mut p = vec![0.0; self.dim];
        let mut q = vec![0.0; self.dim];
        self.class_mean(Label::P, w, &mut p)?;
        self.class_mean(Label::Q, w, &mut q)?;
        let inner: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        let k = (inner * inner).clamp(0.0, 1.0);
        Ok(2.0 * (1.0 - k))
    }
}

/// MMD between the class means of `data` under `weights`.
pub fn cost(weights: &WeightVector, data: &Dataset, map: &FeatureMap) -> Result<f64> {
    Objective::new(data, map)?.cost(weights.as_slice())
}

/// Central-difference gradient of `f` at `w`.
pub fn numerical_gradient<F>(w: &[f64], mut f: F, fd_step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::domain(format!("fd_step must be positive, got {fd_step}")));
    }
    let mut probe = w.to_vec();
    let mut grad = Vec::with_capacity(w.len());
    for n in 0..w.len() {
        probe[n] = w[n] + fd_step;
        let up = f(&probe)?;
        probe[n] = w[n] - fd_step;
        let down = f(&probe)?;
        probe[n] = w[n];
        grad.push((up - down) / (2.0 * fd_step));
    }
    Ok(grad)
}

/// `w + lr * grad + eps` with `eps_n ~ N(0, noise_sigma)` drawn from `rng`.
pub fn sgd_step<R: Rng + ?Sized>(w: &[f64], grad: &[f64], lr: f64, noise_sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if w.len() != grad.len() {
        return Err(Error::domain(format!(
            "{} weights but {} gradient components",
            w.len(),
            grad.len()
        )));
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::domain(e.to_string()))?;
    Ok(w.iter()
        .zip(grad)
        .map(|(wn, gn)| wn + lr * gn + noise.sample(rng))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub cost: f64,
    pub weights: Vec<f64>,
}

/// Cost and weights after every iteration, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.cost)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.records.first().map_or(0, |r| r.weights.len());
        write!(out, "iter,cost")?;
        for n in 0..dim {
            write!(out, ",w_{n}")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(out, "{},{}", r.iteration, r.cost)?;
            for w in &r.weights {
                write!(out, ",{w}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Weights with the highest cost seen over the run, signs folded to nonnegative.
    pub best_weights: WeightVector,
    pub best_cost: f64,
    pub trace: TrainTrace,
}

impl TrainOutcome {
    pub fn initial(&self) -> &TraceRecord {
        &self.trace.records[0]
    }

    pub fn last(&self) -> &TraceRecord {
        self.trace.records.last().expect("trace holds the initial state")
    }
}

/// A training run that stopped on an error, with the trace up to that point.
#[derive(Debug, thiserror::Error)]
#[error("training aborted after {} records: {source}", trace.len())]
pub struct TrainError {
    #[source]
    pub source: Error,
    pub trace: TrainTrace,
}

impl From<TrainError> for Error {
    fn from(e: TrainError) -> Self {
        e.source
    }
}

/// Initial weights, uniform on `[0.5, 1.5]` per coordinate.
pub fn initial_weights<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.5..1.5)).collect()
}

fn check_cost(c: f64) -> Result<f64> {
    if !(-CLAMP_TOLERANCE..=2.0 + CLAMP_TOLERANCE).contains(&c) {
        return Err(Error::domain(format!("cost {c} outside [0, 2]")));
    }
    Ok(c)
}

/// Runs the schedule for `config.iterations` steps from random weights.
pub fn train(data: &Dataset, map: &FeatureMap, config: &TrainConfig) -> std::result::Result<TrainOutcome, TrainError> {
    let mut trace = TrainTrace::default();
    let fail = |source: Error, trace: TrainTrace| TrainError { source, trace };
    if let Err(e) = config.validate() {
        return Err(fail(e, trace));
    }
    let objective = match Objective::new(data, map) {
        Ok(o) => o,
        Err(e) => return Err(fail(e, trace)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = initial_weights(objective.dim(), &mut rng);
    let mut c = match objective.cost(&w).and_then(check_cost) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, trace)),
    };
    trace.records.push(TraceRecord {
        iteration: 0,
        cost: c,
        weights: w.clone(),
    });
    let (mut best_cost, mut best_w) = (c, w.clone());

    for i in 1..=config.iterations {
        let step = schedule_lookup(c, &config.schedule).and_then(|(lr, sigma)| {
            let g = numerical_gradient(&w, |v| objective.cost(v), config.fd_step)?;
            let next = sgd_step(&w, &g, lr, sigma, &mut rng)?;
            let cost = objective.cost(&next).and_then(check_cost)?;
            Ok((next, cost))
        });
        match step {
            Ok((next, cost)) => {
                w = next;
                c = cost;
            }
            Err(e) => return Err(fail(e, trace)),
        }
        trace.records.push(TraceRecord {
            iteration: i,
            cost: c,
            weights: w.clone(),
        });
        if c > best_cost {
            best_cost = c;
            best_w = w.clone();
        }
    }
    // the cost depends only on |w_k|, so fold signs into a canonical representative
    let best_w = best_w.iter().map(|v| v.abs()).collect();
    let best_weights = WeightVector::new(best_w).map_err(|e| fail(e, trace.clone()))?;
    Ok(TrainOutcome {
        best_weights,
        best_cost,
        trace,
    })
}

/// Independent restarts with consecutive seeds starting at `config.seed`.
pub fn train_restarts(
    data: &Dataset,
    map: &FeatureMap,
    config: &TrainConfig,
    restarts: usize,
) -> std::result::Result<Vec<TrainOutcome>, TrainError> {
    (0..restarts as u64)
        .map(|k| {
            let cfg = TrainConfig {
                seed: config.seed.wrapping_add(k),
                ..config.clone()
            };
            train(data, map, &cfg)
        })
        .collect()
}

/// Per-iteration cost averaged over several runs of equal length.
pub fn mean_cost_curve(runs: &[TrainOutcome]) -> Vec<f64> {
    let Some(len) = runs.iter().map(|r| r.trace.len()).min() else {
        return vec![];
    };
    (0..len)
        .map(|i| runs.iter().map(|r| r.trace.records[i].cost).sum::<f64>() / runs.len() as f64)
        .collect()
}

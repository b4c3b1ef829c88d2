//! Classification quality: confusion matrices, score distributions and the
//! CSV/text reports built from them.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, Label};
use crate::encoding::FeatureVector;
use crate::error::{Error, Result};
use crate::mmd::{Classification, PredictionRow};

/// Counts indexed by `(predicted, true)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: Label, truth: Label) {
        self.counts[predicted.index()][truth.index()] += 1;
    }

    pub fn count(&self, predicted: Label, truth: Label) -> u64 {
        self.counts[predicted.index()][truth.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Diagonal over total, or `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.correct() as f64 / total as f64)
    }

    /// Share of the true-label column, in percent. Empty columns give 0.
    pub fn percent(&self, predicted: Label, truth: Label) -> f64 {
        let column: u64 = Label::ALL.iter().map(|&p| self.count(p, truth)).sum();
        if column == 0 {
            0.0
        } else {
            100.0 * self.count(predicted, truth) as f64 / column as f64
        }
    }
}

/// Classification scores grouped by true label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreDistribution {
    pub by_label: [Vec<f64>; 2],
}

impl ScoreDistribution {
    pub fn scores(&self, truth: Label) -> &[f64] {
        &self.by_label[truth.index()]
    }

    pub fn len(&self) -> usize {
        self.by_label.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub matrix: ConfusionMatrix,
    pub scores: ScoreDistribution,
    /// Rows excluded because they could not be encoded.
    pub unclassifiable: usize,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.matrix.accuracy().unwrap_or(0.0)
    }

    fn add(&mut self, truth: Label, prediction: Option<Classification>) {
        match prediction {
            Some(c) => {
                self.matrix.record(c.label, truth);
                self.scores.by_label[truth.index()].push(c.score);
            }
            None => self.unclassifiable += 1,
        }
    }

    pub fn from_predictions(rows: &[PredictionRow]) -> Self {
        let mut ev = Self::default();
        for r in rows {
            ev.add(r.true_label, r.prediction);
        }
        ev
    }
}

/// Runs `classifier` over every row. Degenerate encodings are counted as
/// unclassifiable; any other error aborts.
pub fn evaluate<C>(dataset: &Dataset, mut classifier: C) -> Result<Evaluation>
where
    C: FnMut(&FeatureVector) -> Result<Classification>,
{
    if dataset.is_empty() {
        return Err(Error::domain("cannot evaluate an empty dataset"));
    }
    let mut ev = Evaluation::default();
    for row in dataset.rows() {
        match classifier(&row.features) {
            Ok(c) => ev.add(row.label, Some(c)),
            Err(Error::DegenerateEncoding(_)) => ev.add(row.label, None),
            Err(e) => return Err(e),
        }
    }
    Ok(ev)
}

pub fn write_confusion_csv<W: Write>(matrix: &ConfusionMatrix, mut out: W) -> Result<()> {
    writeln!(out, "predicted,true,count,percent")?;
    for truth in Label::ALL {
        for predicted in Label::ALL {
            writeln!(
                out,
                "{predicted},{truth},{},{:.4}",
                matrix.count(predicted, truth),
                matrix.percent(predicted, truth)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_scores_csv<W: Write>(scores: &ScoreDistribution, mut out: W) -> Result<()> {
    writeln!(out, "true_label,score")?;
    for truth in Label::ALL {
        for s in scores.scores(truth) {
            writeln!(out, "{truth},{s}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Plain-text confusion table with column-normalized percentages.
pub fn format_report(ev: &Evaluation) -> String {
    let m = &ev.matrix;
    let mut s = String::new();
    let _ = writeln!(s, "              true P    true Q");
    for predicted in Label::ALL {
        let _ = writeln!(
            s,
            "predicted {predicted}  {:>6.2}%   {:>6.2}%",
            m.percent(predicted, Label::P),
            m.percent(predicted, Label::Q)
        );
    }
    let _ = writeln!(
        s,
        "accuracy {:.4} ({}/{}), unclassifiable {}",
        ev.accuracy(),
        m.correct(),
        m.total(),
        ev.unclassifiable
    );
    for truth in Label::ALL {
        let sc = ev.scores.scores(truth);
        if sc.is_empty() {
            let _ = writeln!(s, "scores true {truth}: none");
        } else {
            let mean = sc.iter().sum::<f64>() / sc.len() as f64;
            let lo = sc.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                s,
                "scores true {truth}: n={} mean={mean:.4} min={lo:.4} max={hi:.4}",
                sc.len()
            );
        }
    }
    s
}

/// Writes `confusion.csv` and `scores.csv` into `dir` and returns the text table.
pub fn render_report(ev: &Evaluation, dir: impl AsRef<Path>) -> Result<String> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<_> { Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?)) };
    write_confusion_csv(&ev.matrix, open("confusion.csv")?)?;
    write_scores_csv(&ev.scores, open("scores.csv")?)?;
    Ok(format_report(ev))
}

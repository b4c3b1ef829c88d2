//! Synthetic two-class blob data and its CSV format.
//!
//! The reference layout is a flattened XOR: four isotropic Gaussian blobs at
//! `(+-L, +-h)` with `h` much smaller than `L`. Diagonal blobs share a class,
//! so no line separates the classes, while the sign of `F1 * F2` does. The
//! small aspect ratio `h / L` keeps the untrained class means nearly
//! parallel in the `(F1^2, F2^2, F1 F2)` feature space.
//!
//! The two classes use different offsets (`h = 0.2` for P, `0.5` for Q). The
//! trained means then weight the `F1^2` and `F1 F2` modes unequally, which
//! keeps them distinguishable at every relative delay, not only at zero.
//!
//! CSV files have the header `F1,F2,label` and one `f1,f2,P|Q` row per point.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoding::FeatureVector;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "F1,F2,label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    P,
    Q,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::P, Label::Q];

    pub fn index(self) -> usize {
        match self {
            Label::P => 0,
            Label::Q => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::P => Label::Q,
            Label::Q => Label::P,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::P => "P",
            Label::Q => "Q",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "P" => Ok(Label::P),
            "Q" => Ok(Label::Q),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: Label,
}

/// Labeled two-feature points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    rows: Vec<Sample>,
}

impl Dataset {
    pub fn new(rows: Vec<Sample>) -> Result<Self> {
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.features.dim() != 2) {
            return Err(Error::domain(format!("row {i} does not have 2 features")));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature vectors of one class, in file order.
    pub fn class(&self, label: Label) -> Vec<FeatureVector> {
        self.rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.features.clone())
            .collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let v = r.features.values();
            // Display for f64 prints the shortest string that parses back to
            // the same bits.
            writeln!(out, "{},{},{}", v[0], v[1], r.label)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, header)) => {
                let header = header?;
                if header.trim() != CSV_HEADER {
                    return Err(Error::parse(
                        1,
                        format!("expected header {CSV_HEADER:?}, got {header:?}"),
                    ));
                }
            }
            None => return Err(Error::parse(1, "missing header")),
        }
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(lineno, format!("expected 3 fields, got {}", fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(lineno, format!("bad number {s:?}: {e}")))
            };
            let (f1, f2) = (parse(fields[0])?, parse(fields[1])?);
            let label = fields[2].parse().map_err(|e| Error::parse(lineno, e))?;
            let features = FeatureVector::new(vec![f1, f2]).map_err(|e| Error::parse(lineno, e.to_string()))?;
            rows.push(Sample { features, label });
        }
        Ok(Self { rows })
    }
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    dataset.write_csv(std::io::BufWriter::new(file))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    Dataset::read_csv(BufReader::new(file))
}

/// Four Gaussian blobs grouped two per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub centers: [[f64; 2]; 4],
    pub sigma: f64,
    pub points_per_blob: usize,
    pub grouping: [Label; 4],
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            centers: [[4.0, 0.2], [-4.0, -0.2], [4.0, -0.5], [-4.0, 0.5]],
            sigma: 0.08,
            points_per_blob: 250,
            grouping: [Label::P, Label::P, Label::Q, Label::Q],
            seed: 1,
        }
    }
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::domain(format!("blob sigma must be >= 0, got {}", self.sigma)));
        }
        if self.points_per_blob == 0 {
            return Err(Error::domain("points_per_blob must be positive"));
        }
        if self.centers.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::domain("blob centers must be finite"));
        }
        let p = self.grouping.iter().filter(|l| **l == Label::P).count();
        if p != 2 {
            return Err(Error::domain(format!(
                "grouping must give two blobs per class, got {p} for P"
            )));
        }
        Ok(())
    }

    pub fn total_points(&self) -> usize {
        4 * self.points_per_blob
    }
}

/// Draws the blobs and shuffles the rows, all from `spec.seed`.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::domain(e.to_string()))?;
    let mut rows = Vec::with_capacity(spec.total_points());
    for (center, &label) in spec.centers.iter().zip(&spec.grouping) {
        for _ in 0..spec.points_per_blob {
            let f1 = center[0] + noise.sample(&mut rng);
            let f2 = center[1] + noise.sample(&mut rng);
            rows.push(Sample {
                features: FeatureVector::new(vec![f1, f2])?,
                label,
            });
        }
    }
    rows.shuffle(&mut rng);
    Dataset::new(rows)
}

/// A fresh draw from the same distribution as the training set.
pub fn generate_test_set(spec: &BlobSpec, test_seed: u64) -> Result<Dataset> {
    if test_seed == spec.seed {
        return Err(Error::domain("test seed must differ from the training seed"));
    }
    generate_blobs(&BlobSpec {
        seed: test_seed,
        ..spec.clone()
    })
}

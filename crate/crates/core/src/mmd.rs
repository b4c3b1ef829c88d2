//! Maximum mean discrepancy between encoded class means, and the classifiers
//! built on it.
//!
//! The discrepancy is what a single HOM measurement between the two mean
//! photons reports: `MMD = 2 * CC = 2 * (1 - |<mu_P|mu_Q>|^2)`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::data::{Dataset, Label};
use crate::encoding::{encode, mean_embedding, EncodedPhoton, FeatureMap, FeatureVector, WeightVector};
use crate::error::{Error, Result};
use crate::interference::{kernel, sample_coincidences};

pub const PREDICTIONS_HEADER: &str = "x1,x2,score,label,true_label";

/// Encoded means of the two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    pub mu_p: EncodedPhoton,
    pub mu_q: EncodedPhoton,
}

impl ClassMeans {
    pub fn new(mu_p: EncodedPhoton, mu_q: EncodedPhoton) -> Result<Self> {
        if mu_p.order() != mu_q.order() {
            return Err(Error::domain("class means have different mode counts"));
        }
        Ok(Self { mu_p, mu_q })
    }

    /// Means of the P and Q rows of a dataset under the given weights.
    pub fn from_dataset(data: &Dataset, map: &FeatureMap, weights: &WeightVector) -> Result<Self> {
        let embed = |label: Label| {
            mean_embedding(&data.class(label), map, weights).map_err(|e| match e {
                Error::EmptyClass(msg) => Error::EmptyClass(format!("class {label}: {msg}")),
                other => other,
            })
        };
        Self::new(embed(Label::P)?.photon, embed(Label::Q)?.photon)
    }

    pub fn swapped(&self) -> Self {
        Self {
            mu_p: self.mu_q.clone(),
            mu_q: self.mu_p.clone(),
        }
    }

    /// `|<mu_P|mu_Q>|^2`, the calibration constant of the single-mean rule.
    pub fn overlap(&self) -> Result<f64> {
        kernel(&self.mu_p, &self.mu_q).map(|k| k.value())
    }
}

/// A discrepancy value in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MmdValue(f64);

impl MmdValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn mmd(means: &ClassMeans) -> Result<MmdValue> {
    Ok(MmdValue(2.0 * (1.0 - means.overlap()?)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub score: f64,
    pub label: Label,
}

impl Classification {
    /// Positive scores (and exact ties) go to Q.
    pub fn from_score(score: f64) -> Self {
        let label = if score >= 0.0 { Label::Q } else { Label::P };
        Self { score, label }
    }
}

fn encode_for_classification(x: &FeatureVector, map: &FeatureMap, weights: &WeightVector) -> Result<EncodedPhoton> {
    encode(x, map, weights).map_err(|e| match e {
        Error::DegenerateEncoding(msg) => Error::DegenerateEncoding(format!("unclassifiable: {msg}")),
        other => other,
    })
}

/// Two-mean classifier with a pluggable kernel estimator.
pub fn classify_with<K>(
    x: &FeatureVector,
    means: &ClassMeans,
    map: &FeatureMap,
    weights: &WeightVector,
    mut kernel_fn: K,
) -> Result<Classification>
where
    K: FnMut(&EncodedPhoton, &EncodedPhoton) -> Result<f64>,
{
    let phi = encode_for_classification(x, map, weights)?;
    let to_q = kernel_fn(&phi, &means.mu_q)?;
    let to_p = kernel_fn(&phi, &means.mu_p)?;
    Ok(Classification::from_score(to_q - to_p))
}

/// `score = |<phi(x)|mu_Q>|^2 - |<phi(x)|mu_P>|^2`; Q when the score is >= 0.
pub fn classify(
    x: &FeatureVector,
    means: &ClassMeans,
    map: &FeatureMap,
    weights: &WeightVector,
) -> Result<Classification> {
    classify_with(x, means, map, weights, |a, b| kernel(a, b).map(|k| k.value()))
}

/// Decision threshold `1/2 - calibration/2` of the single-mean rule.
pub fn single_mean_threshold(calibration: f64) -> f64 {
    0.5 - 0.5 * calibration
}

pub fn classify_single_mean_with<K>(
    x: &FeatureVector,
    mu_q: &EncodedPhoton,
    calibration: f64,
    map: &FeatureMap,
    weights: &WeightVector,
    mut kernel_fn: K,
) -> Result<Classification>
where
    K: FnMut(&EncodedPhoton, &EncodedPhoton) -> Result<f64>,
{
    if !(0.0..=1.0).contains(&calibration) {
        return Err(Error::domain(format!("calibration {calibration} outside [0, 1]")));
    }
    let phi = encode_for_classification(x, map, weights)?;
    let to_q = kernel_fn(&phi, mu_q)?;
    Ok(Classification::from_score(to_q - single_mean_threshold(calibration)))
}

/// Compares `x` against `mu_Q` only. `calibration` is `|<mu_P|mu_Q>|^2`,
/// measured once beforehand. A calibration of 1 leaves a threshold of 0 and
/// labels everything Q.
pub fn classify_single_mean(
    x: &FeatureVector,
    mu_q: &EncodedPhoton,
    calibration: f64,
    map: &FeatureMap,
    weights: &WeightVector,
) -> Result<Classification> {
    classify_single_mean_with(x, mu_q, calibration, map, weights, |a, b| {
        kernel(a, b).map(|k| k.value())
    })
}

/// Kernel estimator that replaces exact overlaps by `n_shots` simulated
/// detections. Every call draws from its own stream: `seed + call index`.
pub fn shot_kernel(n_shots: u64, seed: u64) -> impl FnMut(&EncodedPhoton, &EncodedPhoton) -> Result<f64> {
    let mut calls = 0u64;
    move |a, b| {
        let rec = sample_coincidences(a, b, n_shots, seed.wrapping_add(calls))?;
        calls += 1;
        Ok(1.0 - rec.estimate)
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub x: [f64; 2],
    /// `None` for points that could not be encoded.
    pub prediction: Option<Classification>,
    pub true_label: Label,
}

pub fn write_predictions<W: Write>(rows: &[PredictionRow], mut out: W) -> Result<()> {
    writeln!(out, "{PREDICTIONS_HEADER}")?;
    for r in rows {
        match r.prediction {
            Some(c) => writeln!(out, "{},{},{},{},{}", r.x[0], r.x[1], c.score, c.label, r.true_label)?,
            None => writeln!(out, "{},{},NaN,NA,{}", r.x[0], r.x[1], r.true_label)?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<PredictionRow>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.as_deref().map(str::trim).ok() == Some(PREDICTIONS_HEADER) => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(Error::parse(1, format!("expected header {PREDICTIONS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::parse(lineno, format!("expected 5 fields, got {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(lineno, format!("bad number {s:?}: {e}")))
        };
        let label = |s: &str| s.parse::<Label>().map_err(|e| Error::parse(lineno, e));
        let prediction = if f[3] == "NA" {
            None
        } else {
            Some(Classification {
                score: num(f[2])?,
                label: label(f[3])?,
            })
        };
        rows.push(PredictionRow {
            x: [num(f[0])?, num(f[1])?],
            prediction,
            true_label: label(f[4])?,
        });
    }
    Ok(rows)
}

pub fn save_predictions(rows: &[PredictionRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_predictions(rows, std::io::BufWriter::new(file))
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    read_predictions(BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn photon(v: &[f64]) -> EncodedPhoton {
        EncodedPhoton::from_real(v).unwrap()
    }

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn mmd_examples() {
        let a = photon(&[1.0, 2.0, 3.0]);
        let same = ClassMeans::new(a.clone(), a.clone()).unwrap();
        assert!(mmd(&same).unwrap().value().abs() < 1e-12);
        let orth = ClassMeans::new(photon(&[1.0, 0.0, 0.0]), photon(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(mmd(&orth).unwrap().value(), 2.0);
        // <p|q> = sqrt(0.75)
        let c = 0.75f64.sqrt();
        let k = ClassMeans::new(photon(&[1.0, 0.0]), photon(&[c, 0.5])).unwrap();
        assert!((mmd(&k).unwrap().value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let id = FeatureMap::Identity(3);
        let ones = WeightVector::ones(3);
        let means = ClassMeans::new(photon(&[1.0, 0.0, 0.0]), photon(&[0.6, 0.8, 0.0])).unwrap();
        let at_q = classify(&fv(&[0.6, 0.8, 0.0]), &means, &id, &ones).unwrap();
        assert!(at_q.score > 0.0);
        assert_eq!(at_q.label, Label::Q);
        let at_p = classify(&fv(&[1.0, 0.0, 0.0]), &means, &id, &ones).unwrap();
        assert_eq!(at_p.label, Label::P);

        // Symmetric midpoint: equal overlap with both means.
        let sym = ClassMeans::new(photon(&[1.0, 0.0, 0.0]), photon(&[0.0, 1.0, 0.0])).unwrap();
        let mid = classify(&fv(&[1.0, 1.0, 0.0]), &sym, &id, &ones).unwrap();
        assert_eq!(mid.score, 0.0);
        assert_eq!(mid.label, Label::Q);
    }

    #[test]
    fn classify_rejects_degenerate_points() {
        let means = ClassMeans::new(photon(&[1.0, 0.0, 0.0]), photon(&[0.0, 1.0, 0.0])).unwrap();
        let err = classify(
            &fv(&[0.0, 0.0]),
            &means,
            &FeatureMap::Polynomial2,
            &WeightVector::ones(3),
        );
        assert!(matches!(err, Err(Error::DegenerateEncoding(_))));
    }

    #[test]
    fn single_mean_examples() {
        let id = FeatureMap::Identity(2);
        let ones = WeightVector::ones(2);
        let mu_q = photon(&[1.0, 0.0]);
        // kernel to mu_q = 0.9 and 0.3 respectively
        let hi = fv(&[0.9f64.sqrt(), 0.1f64.sqrt()]);
        let lo = fv(&[0.3f64.sqrt(), 0.7f64.sqrt()]);
        assert_eq!(
            classify_single_mean(&hi, &mu_q, 0.0, &id, &ones).unwrap().label,
            Label::Q
        );
        assert_eq!(
            classify_single_mean(&lo, &mu_q, 0.0, &id, &ones).unwrap().label,
            Label::P
        );
        let far = fv(&[0.0, 1.0]);
        let c = classify_single_mean(&far, &mu_q, 1.0, &id, &ones).unwrap();
        assert_eq!(c.label, Label::Q);
        assert_eq!(single_mean_threshold(0.0), 0.5);
        assert!(classify_single_mean(&far, &mu_q, 1.5, &id, &ones).is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let rows = vec![
            PredictionRow {
                x: [0.25, -3.0],
                prediction: Some(Classification::from_score(-0.125)),
                true_label: Label::P,
            },
            PredictionRow {
                x: [0.0, 0.0],
                prediction: None,
                true_label: Label::Q,
            },
        ];
        let mut buf = Vec::new();
        write_predictions(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,score,label,true_label\n0.25,-3,-0.125,P,P\n"));
        assert_eq!(read_predictions(buf.as_slice()).unwrap(), rows);
        assert!(read_predictions("x,y\n".as_bytes()).is_err());
    }

    fn arb_photon(order: usize) -> impl Strategy<Value = EncodedPhoton> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), order)
            .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(|v| {
                EncodedPhoton::from_amplitudes(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn mmd_in_range(p in arb_photon(4), q in arb_photon(4)) {
            let v = mmd(&ClassMeans::new(p, q).unwrap()).unwrap().value();
            prop_assert!((-1e-10..=2.0 + 1e-10).contains(&v));
        }

        #[test]
        fn swapping_means_negates_score(
            p in arb_photon(3), q in arb_photon(3),
            x in prop::collection::vec(0.05f64..2.0, 3),
        ) {
            let real = |e: &EncodedPhoton| e.amplitudes().iter().map(|a| a.re).collect::<Vec<_>>();
            let means = ClassMeans::new(
                EncodedPhoton::from_real(&real(&p)).unwrap(),
                EncodedPhoton::from_real(&real(&q)).unwrap(),
            ).unwrap();
            let id = FeatureMap::Identity(3);
            let ones = WeightVector::ones(3);
            let x = fv(&x);
            let a = classify(&x, &means, &id, &ones).unwrap();
            let b = classify(&x, &means.swapped(), &id, &ones).unwrap();
            prop_assert_eq!(a.score, -b.score);
            if a.score != 0.0 {
                prop_assert_ne!(a.label, b.label);
            }
        }

        #[test]
        fn score_is_half_mmd_difference(p in arb_photon(3), q in arb_photon(3), x in arb_photon(3)) {
            let means = ClassMeans::new(p.clone(), q.clone()).unwrap();
            let id = FeatureMap::Identity(3);
            let ones = WeightVector::ones(3);
            // classify_with on an already-normalized photon: identity map + unit weights keeps it.
            let amps: Vec<f64> = x.amplitudes().iter().map(|a| a.re).collect();
            prop_assume!(amps.iter().any(|a| a.abs() > 1e-3));
            let xr = EncodedPhoton::from_real(&amps).unwrap();
            let score = classify(&fv(&amps), &means, &id, &ones).unwrap().score;
            let to_q = mmd(&ClassMeans::new(xr.clone(), q).unwrap()).unwrap().value();
            let to_p = mmd(&ClassMeans::new(xr, p).unwrap()).unwrap().value();
            prop_assert!((0.5 * (to_p - to_q) - score).abs() <= 1e-12);
        }
    }
}

//! Encoding classical feature vectors into single-photon mode amplitudes.
//!
//! A point `x` is first mapped to a feature vector `phi(x)`, each component
//! is multiplied by a free weight `w_n`, and the result is normalized:
//! `alpha_n = w_n phi_n(x) / ||w * phi(x)||`. The amplitudes `alpha_n`
//! multiply the temporal modes `u_n(t)` of the photon wave packet.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the squared norm of an encoded photon.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// An input point with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("feature value {v} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// User-supplied feature map.
#[derive(Clone)]
pub struct CustomMap {
    pub name: String,
    pub output_dim: usize,
    pub f: MapFn,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMap")
            .field("name", &self.name)
            .field("output_dim", &self.output_dim)
            .finish_non_exhaustive()
    }
}

/// Classical feature map applied before encoding.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    /// Degree-two polynomial map `(F1, F2) -> (F1^2, F2^2, F1 F2)`.
    Polynomial2,
    /// Passes `dim`-dimensional inputs through unchanged.
    Identity(usize),
    Custom(CustomMap),
}

/// Serializable names of the built-in maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMapKind {
    Polynomial2,
    Identity,
}

impl FeatureMap {
    pub fn from_kind(kind: FeatureMapKind, input_dim: usize) -> Self {
        match kind {
            FeatureMapKind::Polynomial2 => FeatureMap::Polynomial2,
            FeatureMapKind::Identity => FeatureMap::Identity(input_dim),
        }
    }

    /// Length of the mapped vector, which is also the number of modes.
    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Polynomial2 => 3,
            FeatureMap::Identity(d) => *d,
            FeatureMap::Custom(c) => c.output_dim,
        }
    }

    pub fn apply(&self, x: &FeatureVector) -> Result<FeatureVector> {
        let v = x.values();
        match self {
            FeatureMap::Polynomial2 => {
                if v.len() != 2 {
                    return Err(Error::domain(format!(
                        "polynomial map needs 2 features, got {}",
                        v.len()
                    )));
                }
                let (f1, f2) = (v[0], v[1]);
                FeatureVector::new(vec![f1 * f1, f2 * f2, f1 * f2])
            }
            FeatureMap::Identity(d) => {
                if v.len() != *d {
                    return Err(Error::domain(format!(
                        "identity map expects {d} features, got {}",
                        v.len()
                    )));
                }
                Ok(x.clone())
            }
            FeatureMap::Custom(c) => {
                let out = (c.f)(v);
                if out.len() != c.output_dim {
                    return Err(Error::domain(format!(
                        "map {} produced {} values, declared {}",
                        c.name,
                        out.len(),
                        c.output_dim
                    )));
                }
                FeatureVector::new(out)
            }
        }
    }
}

pub fn apply_feature_map(x: &FeatureVector, map: &FeatureMap) -> Result<FeatureVector> {
    map.apply(x)
}

/// Free per-mode weights. Finite, and not all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::domain("weight vector is empty"));
        }
        if let Some(v) = w.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("weight {v} is not finite")));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::domain("weights are all zero"));
        }
        Ok(Self(w))
    }

    /// All-ones weights, i.e. the untrained encoding.
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Normalized amplitudes of a photon over the temporal modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPhoton(Vec<Complex64>);

impl EncodedPhoton {
    /// Normalizes arbitrary amplitudes. Zero vectors are rejected.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::domain("photon needs at least one mode"));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateEncoding("amplitude vector has zero norm".into()));
        }
        Ok(Self(amps.into_iter().map(|a| a / norm).collect()))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Photon occupying the single mode `n` of an `order`-mode basis.
    pub fn basis_state(order: usize, n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); order];
        amps[n] = Complex64::new(1.0, 0.0);
        Self(amps)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other> = sum_n conj(self_n) other_n`.
    pub fn inner(&self, other: &EncodedPhoton) -> Result<Complex64> {
        if self.order() != other.order() {
            return Err(Error::domain(format!(
                "photon mode counts differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Encodes `x` as `alpha_n = w_n phi_n(x) / ||w * phi(x)||`.
pub fn encode(x: &FeatureVector, map: &FeatureMap, weights: &WeightVector) -> Result<EncodedPhoton> {
    let phi = map.apply(x)?;
    if phi.dim() != weights.len() {
        return Err(Error::domain(format!(
            "feature map yields {} components but there are {} weights",
            phi.dim(),
            weights.len()
        )));
    }
    let weighted: Vec<Complex64> = phi
        .values()
        .iter()
        .zip(weights.as_slice())
        .map(|(p, w)| Complex64::new(w * p, 0.0))
        .collect();
    EncodedPhoton::from_amplitudes(weighted).map_err(|e| match e {
        Error::DegenerateEncoding(_) => {
            Error::DegenerateEncoding(format!("point {:?} has zero weighted feature norm", x.values()))
        }
        other => other,
    })
}

/// Normalized mean of the encodings of a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEmbedding {
    pub photon: EncodedPhoton,
    /// Points skipped because their encoding was degenerate.
    pub skipped: usize,
}

/// Averages the per-point photons and renormalizes the mean.
pub fn mean_embedding(points: &[FeatureVector], map: &FeatureMap, weights: &WeightVector) -> Result<MeanEmbedding> {
    if points.is_empty() {
        return Err(Error::EmptyClass("no points to embed".into()));
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); weights.len()];
    let mut used = 0usize;
    let mut skipped = 0usize;
    for x in points {
        match encode(x, map, weights) {
            Ok(photon) => {
                for (s, a) in sum.iter_mut().zip(photon.amplitudes()) {
                    *s += a;
                }
                used += 1;
            }
            Err(Error::DegenerateEncoding(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::EmptyClass(format!(
            "all {skipped} points have degenerate encodings"
        )));
    }
    let mean: Vec<Complex64> = sum.into_iter().map(|s| s / used as f64).collect();
    let photon = EncodedPhoton::from_amplitudes(mean)?;
    Ok(MeanEmbedding { photon, skipped })
}

//! Quantum kernel evaluation through Hong-Ou-Mandel (HOM) interference.
//!
//! Classical feature vectors are encoded into the amplitudes of a single
//! photon spread over orthonormal Hermite-Gaussian temporal modes. Two such
//! photons meeting on a 50:50 beamsplitter produce a coincidence rate
//! `CC = 1 - |<a|b>|^2`, so the coincidence statistics measure the quantum
//! kernel directly. On top of that the crate builds a kernel-mean-embedding
//! classifier: class means are encoded as photons, the maximum mean
//! discrepancy between them is `2 * CC`, and the free per-mode weights are
//! trained by noisy, scheduled gradient ascent on that discrepancy.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`modes`] | Hermite polynomials, HG temporal modes, quadrature grid, delayed overlaps |
//! | [`encoding`] | Feature maps, weights, encoded photons, mean embeddings |
//! | [`interference`] | Kernel, coincidence rate, dip curves, beamsplitter oracle, shot sampling |
//! | [`mmd`] | Class means, MMD, two-mean and single-mean classifiers |
//! | [`training`] | Finite-difference gradients, learning-rate schedule, training loop |
//! | [`data`] | Blob datasets and their CSV format |
//! | [`evaluation`] | Confusion matrices, score distributions, reports |
//! | [`baseline`] | Linear perceptron used as a non-kernel reference |

pub mod baseline;
pub mod data;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod interference;
pub mod mmd;
pub mod modes;
pub mod training;

pub use data::{BlobSpec, Dataset, Label, Sample};
pub use encoding::{EncodedPhoton, FeatureMap, FeatureVector, WeightVector};
pub use error::{Error, Result};
pub use interference::{DipCurve, KernelValue, ShotRecord, TwoPhotonOutcome};
pub use mmd::{ClassMeans, Classification, MmdValue};
pub use modes::{ModeBasis, OverlapMatrix, TimeGrid};
pub use training::{ScheduleRule, TrainConfig, TrainOutcome, TrainTrace};

pub use num_complex::Complex64;

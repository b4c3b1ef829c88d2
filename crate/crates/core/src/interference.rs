//! Hong-Ou-Mandel interference of two encoded photons.
//!
//! Throughout, "CC" is the coincidence rate normalized to the
//! distinguishable-photon baseline, `CC = 1 - |<a|b>|^2`. The raw
//! beamsplitter probabilities are available from [`beamsplitter_oracle`],
//! where the raw coincidence probability is `p_11 = CC / 2`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::encoding::EncodedPhoton;
use crate::error::{Error, Result};
use crate::modes::{overlap_matrix, ModeBasis, OverlapMatrix};

/// Slack allowed outside `[0, 1]` before a probability is treated as a bug.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Default delay sweep for dip curves: 201 points on `[-5, 5]`.
pub const DEFAULT_DELAY_RANGE: (f64, f64) = (-5.0, 5.0);
pub const DEFAULT_DELAY_STEPS: usize = 201;

/// Clamps `v` into `[0, 1]` if it is within [`CLAMP_TOLERANCE`] of it.
pub(crate) fn clamp_probability(v: f64, what: &str) -> Result<f64> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&v) {
        return Err(Error::domain(format!("{what} = {v} lies outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// A kernel value `|<a|b>|^2` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelValue(f64);

impl KernelValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Quantum kernel `|sum_n conj(a_n) b_n|^2`.
pub fn kernel(a: &EncodedPhoton, b: &EncodedPhoton) -> Result<KernelValue> {
    let overlap = a.inner(b)?;
    clamp_probability(overlap.norm_sqr(), "kernel").map(KernelValue)
}

fn delayed_overlap(a: &EncodedPhoton, b: &EncodedPhoton, overlaps: &OverlapMatrix) -> Result<Complex64> {
    if a.order() != overlaps.order() || b.order() != overlaps.order() {
        return Err(Error::domain(format!(
            "photons with {} and {} modes against a {}-mode basis",
            a.order(),
            b.order(),
            overlaps.order()
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, an) in a.amplitudes().iter().enumerate() {
        let row = overlaps.row(n);
        let inner: Complex64 = b.amplitudes().iter().zip(row).map(|(bm, o)| bm * o).sum();
        sum += an.conj() * inner;
    }
    Ok(sum)
}

/// Normalized coincidence rate from a precomputed overlap matrix.
pub fn coincidence_with(a: &EncodedPhoton, b: &EncodedPhoton, overlaps: &OverlapMatrix) -> Result<f64> {
    let ov = delayed_overlap(a, b, overlaps)?;
    clamp_probability(1.0 - ov.norm_sqr(), "coincidence rate")
}

/// Normalized coincidence rate `1 - |sum_nm conj(a_n) b_m O_nm(delay)|^2`
/// when photon `b` arrives `delay` later than photon `a`.
pub fn coincidence(a: &EncodedPhoton, b: &EncodedPhoton, basis: &ModeBasis, delay: f64) -> Result<f64> {
    let overlaps = overlap_matrix(basis, delay)?;
    coincidence_with(a, b, &overlaps)
}

/// Sampled coincidence rates against relative delay.
#[derive(Debug, Clone, PartialEq)]
pub struct DipCurve {
    samples: Vec<(f64, f64)>,
}

impl DipCurve {
    /// `(delay, cc)` pairs in increasing delay.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn min_cc(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }

    /// Coincidence at the sample closest to zero delay.
    pub fn cc_at_zero(&self) -> Option<f64> {
        self.samples
            .iter()
            .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()))
            .map(|s| s.1)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dt,cc")?;
        for (dt, cc) in &self.samples {
            writeln!(out, "{dt},{cc}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `steps` evenly spaced delays from `lo` to `hi` inclusive.
pub fn delay_sweep(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (steps - 1) as f64;
            (0..steps).map(|i| lo + i as f64 * h).collect()
        }
    }
}

/// The default sweep of 201 delays on `[-5, 5]`.
pub fn default_delays() -> Vec<f64> {
    delay_sweep(DEFAULT_DELAY_RANGE.0, DEFAULT_DELAY_RANGE.1, DEFAULT_DELAY_STEPS)
}

pub fn dip_curve(a: &EncodedPhoton, b: &EncodedPhoton, basis: &ModeBasis, delays: &[f64]) -> Result<DipCurve> {
    if delays
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
    {
        return Err(Error::domain("dip-curve delays must be strictly increasing"));
    }
    let samples = delays
        .iter()
        .map(|&dt| coincidence(a, b, basis, dt).map(|cc| (dt, cc)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DipCurve { samples })
}

/// Output-port statistics of two photons on a 50:50 beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonOutcome {
    /// Both photons leave through the first output port.
    pub p_20: f64,
    /// Both photons leave through the second output port.
    pub p_02: f64,
    /// One photon in each port: a raw coincidence.
    pub p_11: f64,
}

impl TwoPhotonOutcome {
    /// Coincidence probability normalized to the distinguishable baseline 1/2.
    pub fn normalized_cc(&self) -> f64 {
        2.0 * self.p_11
    }
}

/// Sparse Fock-space state over `2 * order` output modes: modes
/// `0..order` belong to the first port, `order..2*order` to the second.
struct FockState {
    terms: BTreeMap<Vec<u8>, Complex64>,
}

impl FockState {
    fn vacuum(n_modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0u8; n_modes], Complex64::new(1.0, 0.0));
        Self { terms }
    }

    /// Applies the creation operator `sum_k c_k a_k^dagger`.
    fn create(&self, op: &[(usize, Complex64)]) -> Self {
        let mut terms: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.terms {
            for &(k, c) in op {
                let mut next = occ.clone();
                next[k] += 1;
                let boson = f64::from(next[k]).sqrt();
                *terms.entry(next).or_default() += amp * c * boson;
            }
        }
        Self { terms }
    }
}

/// Brute-force two-photon beamsplitter evaluation.
///
/// Photon `a` enters input port 1 and photon `b` input port 2. Each input
/// creation operator is expanded in the shared mode basis and pushed through
/// the beamsplitter, `a1 -> (c + d)/sqrt2`, `a2 -> (c - d)/sqrt2`, and the
/// resulting two-photon Fock state is enumerated term by term. No overlap
/// formula is used, which makes this an independent check of [`coincidence`].
pub fn beamsplitter_oracle(a: &EncodedPhoton, b: &EncodedPhoton) -> Result<TwoPhotonOutcome> {
    if a.order() != b.order() {
        return Err(Error::domain(format!(
            "photon mode counts differ: {} vs {}",
            a.order(),
            b.order()
        )));
    }
    let order = a.order();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let port_one: Vec<(usize, Complex64)> = a
        .amplitudes()
        .iter()
        .enumerate()
        .flat_map(|(n, &an)| [(n, an * s), (order + n, an * s)])
        .collect();
    let port_two: Vec<(usize, Complex64)> = b
        .amplitudes()
        .iter()
        .enumerate()
        .flat_map(|(n, &bn)| [(n, bn * s), (order + n, -bn * s)])
        .collect();
    let out = FockState::vacuum(2 * order).create(&port_one).create(&port_two);

    let (mut p_20, mut p_02, mut p_11) = (0.0, 0.0, 0.0);
    for (occ, amp) in &out.terms {
        let first: u8 = occ[..order].iter().sum();
        let p = amp.norm_sqr();
        match first {
            2 => p_20 += p,
            1 => p_11 += p,
            _ => p_02 += p,
        }
    }
    Ok(TwoPhotonOutcome { p_20, p_02, p_11 })
}

/// Result of a finite number of beamsplitter shots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub n_shots: u64,
    pub n_coincidences: u64,
    /// Normalized coincidence estimate `2 k / n`, clamped to `[0, 1]`.
    pub estimate: f64,
}

/// Simulates `n_shots` ideal detections and counts coincidences.
///
/// Each shot is an independent Bernoulli trial with success probability
/// `p_11`; the count is drawn directly from the equivalent binomial law.
pub fn sample_coincidences(a: &EncodedPhoton, b: &EncodedPhoton, n_shots: u64, seed: u64) -> Result<ShotRecord> {
    if n_shots == 0 {
        return Err(Error::domain("need at least one shot"));
    }
    let p_11 = beamsplitter_oracle(a, b)?.p_11;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist =
        Binomial::new(n_shots, p_11.clamp(0.0, 1.0)).map_err(|e| Error::domain(format!("binomial sampler: {e}")))?;
    let n_coincidences = dist.sample(&mut rng);
    let estimate = (2.0 * n_coincidences as f64 / n_shots as f64).clamp(0.0, 1.0);
    Ok(ShotRecord {
        n_shots,
        n_coincidences,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_photon(rng: &mut impl Rng, order: usize) -> EncodedPhoton {
        let amps = (0..order)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        EncodedPhoton::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_photon(&mut rng, 5);
        assert!((kernel(&a, &a).unwrap().value() - 1.0).abs() < 1e-15);
        let e0 = EncodedPhoton::basis_state(3, 0);
        let e1 = EncodedPhoton::basis_state(3, 1);
        assert_eq!(kernel(&e0, &e1).unwrap().value(), 0.0);

        let b = random_photon(&mut rng, 5);
        // elementwise oracle
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            re += x.re * y.re + x.im * y.im;
            im += x.re * y.im - x.im * y.re;
        }
        let k = kernel(&a, &b).unwrap().value();
        assert!((k - (re * re + im * im)).abs() < 1e-12);
        assert_eq!(k, kernel(&b, &a).unwrap().value());
    }

    #[test]
    fn kernel_length_mismatch() {
        let a = EncodedPhoton::basis_state(3, 0);
        let b = EncodedPhoton::basis_state(4, 0);
        assert!(matches!(kernel(&a, &b), Err(Error::Domain(_))));
        assert!(matches!(beamsplitter_oracle(&a, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn clamp_rules() {
        assert_eq!(clamp_probability(1.0 + 5e-11, "x").unwrap(), 1.0);
        assert_eq!(clamp_probability(-5e-11, "x").unwrap(), 0.0);
        assert!(clamp_probability(1.0 + 1e-6, "x").is_err());
        assert!(clamp_probability(f64::NAN, "x").is_err());
    }

    #[test]
    fn coincidence_examples() {
        let basis = ModeBasis::with_order(3).unwrap();
        let e0 = EncodedPhoton::basis_state(3, 0);
        let e1 = EncodedPhoton::basis_state(3, 1);
        assert!(coincidence(&e0, &e0, &basis, 0.0).unwrap().abs() < 1e-12);
        assert!((coincidence(&e0, &e1, &basis, 0.0).unwrap() - 1.0).abs() < 1e-12);
        for dt in [-2.0, 0.5, 1.0, 3.0] {
            let cc = coincidence(&e0, &e0, &basis, dt).unwrap();
            let expected = 1.0 - (-dt * dt / 2.0f64).exp();
            assert!((cc - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn coincidence_at_zero_delay_is_one_minus_kernel() {
        let basis = ModeBasis::with_order(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_photon(&mut rng, 6);
            let b = random_photon(&mut rng, 6);
            let cc = coincidence(&a, &b, &basis, 0.0).unwrap();
            assert!((cc - (1.0 - kernel(&a, &b).unwrap().value())).abs() < 1e-10);
        }
    }

    #[test]
    fn coincidence_delay_symmetry() {
        let basis = ModeBasis::with_order(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_photon(&mut rng, 4);
            let b = random_photon(&mut rng, 4);
            let dt = rng.random_range(-3.0..3.0);
            let ab = coincidence(&a, &b, &basis, dt).unwrap();
            let ba = coincidence(&b, &a, &basis, -dt).unwrap();
            assert!((ab - ba).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_dip_shape() {
        let basis = ModeBasis::with_order(1).unwrap();
        let e0 = EncodedPhoton::basis_state(1, 0);
        let curve = dip_curve(&e0, &e0, &basis, &delay_sweep(0.0, 5.5, 56)).unwrap();
        assert!(curve.cc_at_zero().unwrap().abs() < 1e-12);
        let ccs: Vec<f64> = curve.samples().iter().map(|s| s.1).collect();
        assert!(ccs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(*ccs.last().unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn orthogonal_dip_is_flat_at_zero() {
        let basis = ModeBasis::with_order(3).unwrap();
        let a = EncodedPhoton::basis_state(3, 0);
        let b = EncodedPhoton::basis_state(3, 2);
        let curve = dip_curve(&a, &b, &basis, &default_delays()).unwrap();
        assert!((curve.cc_at_zero().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(curve.samples().len(), 201);
    }

    #[test]
    fn dip_rejects_unsorted_delays() {
        let basis = ModeBasis::with_order(1).unwrap();
        let e0 = EncodedPhoton::basis_state(1, 0);
        assert!(dip_curve(&e0, &e0, &basis, &[0.0, 0.0]).is_err());
        assert!(dip_curve(&e0, &e0, &basis, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn dip_csv_format() {
        let basis = ModeBasis::with_order(1).unwrap();
        let e0 = EncodedPhoton::basis_state(1, 0);
        let curve = dip_curve(&e0, &e0, &basis, &[-1.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dt,cc"));
        assert!(lines.next().unwrap().starts_with("-1,"));
        assert!(lines.next().unwrap().starts_with("0,"));
    }

    #[test]
    fn oracle_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_photon(&mut rng, 4);
        let same = beamsplitter_oracle(&a, &a).unwrap();
        assert!(same.p_11.abs() < 1e-14);
        assert!((same.p_20 - 0.5).abs() < 1e-14);
        assert!((same.p_02 - 0.5).abs() < 1e-14);

        let e0 = EncodedPhoton::basis_state(4, 0);
        let e3 = EncodedPhoton::basis_state(4, 3);
        let orth = beamsplitter_oracle(&e0, &e3).unwrap();
        assert!((orth.p_11 - 0.5).abs() < 1e-14);
        assert!((orth.p_20 - 0.25).abs() < 1e-14);

        let basis = ModeBasis::with_order(4).unwrap();
        let b = random_photon(&mut rng, 4);
        let out = beamsplitter_oracle(&a, &b).unwrap();
        let cc = coincidence(&a, &b, &basis, 0.0).unwrap();
        assert!((out.normalized_cc() - cc).abs() < 1e-10);
        assert!((out.p_20 + out.p_02 + out.p_11 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shots_identical_photons_never_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_photon(&mut rng, 3);
        for n in [1, 10, 1000] {
            let rec = sample_coincidences(&a, &a, n, 9).unwrap();
            assert_eq!(rec.n_coincidences, 0);
            assert_eq!(rec.estimate, 0.0);
        }
        assert!(sample_coincidences(&a, &a, 0, 9).is_err());
    }

    #[test]
    fn shots_orthogonal_photons() {
        let a = EncodedPhoton::basis_state(3, 0);
        let b = EncodedPhoton::basis_state(3, 1);
        let n = 1_000_000;
        let rec = sample_coincidences(&a, &b, n, 42).unwrap();
        assert!(rec.n_coincidences <= rec.n_shots);
        let bound = 3.0 * (0.25 / n as f64).sqrt() * 2.0;
        assert!((rec.estimate - 1.0).abs() <= bound);
        assert_eq!(rec, sample_coincidences(&a, &b, n, 42).unwrap());
    }

    #[test]
    fn shot_estimator_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_photon(&mut rng, 3);
        let b = random_photon(&mut rng, 3);
        let exact = 1.0 - kernel(&a, &b).unwrap().value();
        let n = 1000u64;
        let p = exact / 2.0;
        let estimates: Vec<f64> = (0..100)
            .map(|s| sample_coincidences(&a, &b, n, s).unwrap().estimate)
            .collect();
        let mean = estimates.iter().sum::<f64>() / 100.0;
        // standard error of the mean of 2k/n over 100 seeds
        let se = 2.0 * (p * (1.0 - p) / n as f64).sqrt() / 10.0;
        assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} exact {exact}");
    }
}

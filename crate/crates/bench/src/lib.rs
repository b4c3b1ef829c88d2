//! Fixtures shared by the benchmarks in `benches/`.

use homkernel::data::generate_blobs;
use homkernel::{BlobSpec, Complex64, Dataset, EncodedPhoton};

/// Deterministic, fully populated photon of the given order.
pub fn photon(order: usize, phase: f64) -> EncodedPhoton {
    let amps = (0..order)
        .map(|n| {
            let a = phase + n as f64;
            Complex64::new(a.cos(), (1.7 * a).sin())
        })
        .collect();
    EncodedPhoton::from_amplitudes(amps).expect("nonzero amplitudes")
}

/// The default blob layout with `points_per_blob` points per blob.
pub fn blobs(points_per_blob: usize) -> Dataset {
    generate_blobs(&BlobSpec {
        points_per_blob,
        ..BlobSpec::default()
    })
    .expect("valid spec")
}

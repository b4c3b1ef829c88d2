//! Linear reference classifier on the raw features.

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};

/// Averaged perceptron `sign(w . x + b)`, trained with a fixed row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Perceptron {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn target(label: Label) -> f64 {
    match label {
        Label::P => -1.0,
        Label::Q => 1.0,
    }
}

impl Perceptron {
    pub fn train(data: &Dataset, epochs: usize) -> Result<Self> {
        let dim = data
            .rows()
            .first()
            .map(|r| r.features.dim())
            .ok_or_else(|| Error::domain("cannot train a perceptron on no data"))?;
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut w_sum = vec![0.0; dim];
        let mut b_sum = 0.0;
        let mut steps = 0u64;
        for _ in 0..epochs {
            for row in data.rows() {
                let y = target(row.label);
                let x = row.features.values();
                let act: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
                if y * act <= 0.0 {
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += y * xi;
                    }
                    b += y;
                }
                for (s, wi) in w_sum.iter_mut().zip(&w) {
                    *s += wi;
                }
                b_sum += b;
                steps += 1;
            }
        }
        let n = steps.max(1) as f64;
        Ok(Self {
            weights: w_sum.into_iter().map(|s| s / n).collect(),
            bias: b_sum / n,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        let act: f64 = self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias;
        if act >= 0.0 {
            Label::Q
        } else {
            Label::P
        }
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data
            .rows()
            .iter()
            .filter(|r| self.predict(r.features.values()) == r.label)
            .count();
        hits as f64 / data.len() as f64
    }
}

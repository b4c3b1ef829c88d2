//! Hermite-Gaussian temporal modes.
//!
//! The modes
//!
//! ```text
//! u_n(t) = exp(-t^2 / 2) H_n(t) / (pi^(1/4) sqrt(2^n n!))
//! ```
//!
//! form an orthonormal basis of photon wave-packet envelopes. All integrals
//! are taken with the trapezoidal rule on a uniform [`TimeGrid`] that is
//! symmetric about zero and wide enough for every mode of the basis to have
//! decayed at its edges. Time is dimensionless throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest Hermite degree accepted by [`hermite_polynomial`].
pub const MAX_DEGREE: usize = 64;

/// Half-width of the default grid.
pub const DEFAULT_T_MAX: f64 = 12.0;

/// Number of points of the default grid.
pub const DEFAULT_POINTS: usize = 4001;

/// Largest |u_n| allowed at the edges of a grid.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Largest |u_m(t - delay)| allowed at the grid edges for a delayed overlap.
pub const SHIFTED_EDGE_TOLERANCE: f64 = 1e-8;

/// Uniform quadrature grid on `[-t_max, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn symmetric(t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::domain(format!(
                "grid half-width must be positive and finite, got {t_max}"
            )));
        }
        if n_points < 3 {
            return Err(Error::domain(format!("grid needs at least 3 points, got {n_points}")));
        }
        Ok(Self { t_max, n_points })
    }

    pub fn t_min(&self) -> f64 {
        -self.t_max
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        2.0 * self.t_max / (self.n_points - 1) as f64
    }

    /// The `i`-th abscissa. The two halves are mirror images bit for bit.
    pub fn point(&self, i: usize) -> f64 {
        let last = self.n_points - 1;
        // Evaluate from the nearer end so that point(i) == -point(last - i).
        if 2 * i <= last {
            -self.t_max + i as f64 * self.step()
        } else {
            self.t_max - (last - i) as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Trapezoidal weight of the `i`-th point.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_points - 1 {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// Trapezoidal integral of samples taken at the grid points.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n_points);
        samples.iter().enumerate().map(|(i, s)| self.weight(i) * s).sum()
    }

    /// Same grid with the number of intervals doubled.
    pub fn refined(&self) -> Self {
        Self {
            t_max: self.t_max,
            n_points: 2 * self.n_points - 1,
        }
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            n_points: DEFAULT_POINTS,
        }
    }
}

/// Physicists' Hermite polynomial `H_n(t)` by the three-term recurrence
/// `H_{n+1} = 2t H_n - 2n H_{n-1}`.
pub fn hermite_polynomial(n: usize, t: f64) -> Result<f64> {
    if n > MAX_DEGREE {
        return Err(Error::domain(format!(
            "Hermite degree {n} exceeds the cap of {MAX_DEGREE}"
        )));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * t;
    for k in 1..n {
        let next = 2.0 * t * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `ln(pi^(1/4) sqrt(2^n n!))`.
fn ln_mode_norm(n: usize) -> f64 {
    let ln_factorial: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    0.25 * std::f64::consts::PI.ln() + 0.5 * (n as f64 * std::f64::consts::LN_2 + ln_factorial)
}

/// The `n`-th Hermite-Gaussian mode `u_n(t)`.
///
/// The normalization is applied in log space, so large `n` does not overflow
/// through `n!`.
pub fn hg_mode(n: usize, t: f64) -> Result<f64> {
    let h = hermite_polynomial(n, t)?;
    if h == 0.0 || !h.is_finite() {
        // An infinite H_n only happens far out where the Gaussian wins.
        return Ok(0.0);
    }
    let ln_mag = h.abs().ln() - 0.5 * t * t - ln_mode_norm(n);
    Ok(h.signum() * ln_mag.exp())
}

/// Values of `u_0(t) .. u_{order-1}(t)`, using the recurrence for the
/// normalized functions
/// `u_{n+1} = sqrt(2/(n+1)) t u_n - sqrt(n/(n+1)) u_{n-1}`.
///
/// This route never forms `H_n` or `n!` and is what the quadrature uses.
pub fn hg_modes_at(order: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(order);
    if order == 0 {
        return out;
    }
    let u0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(u0);
    if order == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * t * u0);
    for n in 1..order - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * t * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// A finite Hermite-Gaussian basis `u_0 .. u_{order-1}` sampled on a grid.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    order: usize,
    grid: TimeGrid,
    /// `table[n * n_points + i] = u_n(t_i)`
    table: Vec<f64>,
}

impl ModeBasis {
    /// Builds the basis, rejecting grids on which some mode has not decayed
    /// below [`EDGE_TOLERANCE`] at the edges.
    pub fn new(order: usize, grid: TimeGrid) -> Result<Self> {
        if order == 0 || order > MAX_DEGREE {
            return Err(Error::domain(format!(
                "basis order must lie in 1..={MAX_DEGREE}, got {order}"
            )));
        }
        let edge = hg_modes_at(order, grid.t_max());
        if let Some((n, v)) = edge.iter().enumerate().find(|(_, v)| v.abs() >= EDGE_TOLERANCE) {
            return Err(Error::domain(format!(
                "grid [-{t}, {t}] too narrow: |u_{n}({t})| = {:.3e}",
                v.abs(),
                t = grid.t_max()
            )));
        }
        let table = sample_modes(order, &grid, 0.0);
        Ok(Self { order, grid, table })
    }

    /// Basis of the given order on the default grid.
    pub fn with_order(order: usize) -> Result<Self> {
        Self::new(order, TimeGrid::default())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Samples of `u_n` on the grid.
    pub fn mode_samples(&self, n: usize) -> &[f64] {
        let np = self.grid.n_points();
        &self.table[n * np..(n + 1) * np]
    }

    /// Checks that every mode shifted by `delay` still decays inside the grid.
    pub fn check_delay(&self, delay: f64) -> Result<()> {
        if !delay.is_finite() {
            return Err(Error::domain(format!("delay must be finite, got {delay}")));
        }
        for edge in [self.grid.t_min(), self.grid.t_max()] {
            let shifted = hg_modes_at(self.order, edge - delay);
            if let Some((m, v)) = shifted
                .iter()
                .enumerate()
                .find(|(_, v)| v.abs() > SHIFTED_EDGE_TOLERANCE)
            {
                return Err(Error::domain(format!(
                    "delay {delay} pushes u_{m} off the grid (|u_{m}| = {:.3e} at edge {edge})",
                    v.abs()
                )));
            }
        }
        Ok(())
    }
}

fn sample_modes(order: usize, grid: &TimeGrid, delay: f64) -> Vec<f64> {
    let np = grid.n_points();
    let mut table = vec![0.0; order * np];
    for (i, t) in grid.points().enumerate() {
        for (n, v) in hg_modes_at(order, t - delay).into_iter().enumerate() {
            table[n * np + i] = v;
        }
    }
    table
}

/// Delayed overlaps `O_nm(delay) = integral u_n(t) u_m(t - delay) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    delay: f64,
    order: usize,
    entries: Vec<f64>,
}

impl OverlapMatrix {
    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.entries[n * self.order + m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.entries[n * self.order..(n + 1) * self.order]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Trapezoidal evaluation of the delayed overlap matrix of a basis.
pub fn overlap_matrix(basis: &ModeBasis, delay: f64) -> Result<OverlapMatrix> {
    basis.check_delay(delay)?;
    let order = basis.order();
    let grid = basis.grid();
    let np = grid.n_points();
    let shifted_owned;
    let shifted: &[f64] = if delay == 0.0 {
        &basis.table
    } else {
        shifted_owned = sample_modes(order, grid, delay);
        &shifted_owned
    };
    let weights: Vec<f64> = (0..np).map(|i| grid.weight(i)).collect();

    let mut entries = vec![0.0; order * order];
    for n in 0..order {
        let un = basis.mode_samples(n);
        for m in 0..order {
            let um = &shifted[m * np..(m + 1) * np];
            entries[n * order + m] = un.iter().zip(um).zip(&weights).map(|((a, b), w)| w * a * b).sum();
        }
    }
    Ok(OverlapMatrix { delay, order, entries })
}

//! Closed-form secrecy capacity of the scalar finite-memory Gaussian wiretap
//! channel by frequency-domain waterfilling.
//!
//! With SNR densities `α_r(ω) = |h'(ω)|²/c'_W(ω)` and `α_e(ω) = |g'(ω)|²/c'_U(ω)`,
//! the optimal input spectrum is zero wherever `α_r ≤ α_e` and elsewhere the
//! positive root of the stationarity condition
//! `(α_r - α_e) / ((1 + α_r c)(1 + α_e c)) = μ`, with the level `μ` set by the
//! power budget.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::spectral::{self, build_bins, MimoWiretapChannel};

pub const DEFAULT_GRID: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-10;

const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SnrDensityGrid {
    pub omegas: Vec<f64>,
    pub alpha_r: Vec<f64>,
    pub alpha_e: Vec<f64>,
}

impl SnrDensityGrid {
    pub fn new(omegas: Vec<f64>, alpha_r: Vec<f64>, alpha_e: Vec<f64>) -> Result<Self> {
        if omegas.len() != alpha_r.len() || omegas.len() != alpha_e.len() {
            return Err(Error::DimensionMismatch("grid lists differ in length".into()));
        }
        if omegas.len() < 2 {
            return Err(Error::InvalidArgument("grid needs at least two points".into()));
        }
        if alpha_r.iter().chain(&alpha_e).any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument("SNR densities must be finite and non-negative".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid frequencies must be ascending".into()));
        }
        Ok(Self {
            omegas,
            alpha_r,
            alpha_e,
        })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Band-averaged SNRs `P·(1/π)∫α dω` at the receiver and eavesdropper.
    pub fn mean_snr(&self, power: f64) -> (f64, f64) {
        let span = self.omegas[self.len() - 1] - self.omegas[0];
        (
            power * trapezoid(&self.omegas, &self.alpha_r) / span,
            power * trapezoid(&self.omegas, &self.alpha_e) / span,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillingSolution {
    /// Water level; `None` when no frequency has `α_r > α_e`.
    pub mu: Option<f64>,
    pub spectrum: Vec<f64>,
    /// Bits per channel use.
    pub capacity: f64,
    /// `(1/π)∫c_X dω` by the trapezoidal rule.
    pub power_used: f64,
}

/// Samples the SNR densities on `ω_k = πk/(n_grid-1)`.
pub fn snr_densities(channel: &MimoWiretapChannel, n_grid: usize) -> Result<SnrDensityGrid> {
    if !channel.is_scalar() {
        return Err(Error::DimensionMismatch(format!(
            "scalar solver needs a 1x1x1 channel, got nt={} nr={} ne={}",
            channel.nt(),
            channel.nr(),
            channel.ne()
        )));
    }
    if n_grid < 2 {
        return Err(Error::InvalidArgument("n_grid must be at least 2".into()));
    }
    let mut omegas = Vec::with_capacity(n_grid);
    let mut alpha_r = Vec::with_capacity(n_grid);
    let mut alpha_e = Vec::with_capacity(n_grid);
    for k in 0..n_grid {
        let omega = PI * k as f64 / (n_grid - 1) as f64;
        let p = spectral::spectral_point(channel, omega)?;
        omegas.push(omega);
        alpha_r.push(p.h[(0, 0)].norm_sqr() / p.cw[(0, 0)].re);
        alpha_e.push(p.g[(0, 0)].norm_sqr() / p.cu[(0, 0)].re);
    }
    SnrDensityGrid::new(omegas, alpha_r, alpha_e)
}

/// Optimal power at one frequency for water level `mu`.
///
/// Rationalised form of the quadratic root; it agrees with the textbook
/// expression for `α_e > 0` and reduces to `(1/μ - 1/α_r)^+` at `α_e = 0`
/// without cancellation.
pub fn allocation(alpha_r: f64, alpha_e: f64, mu: f64) -> f64 {
    if alpha_r <= alpha_e {
        return 0.0;
    }
    let d = alpha_r - alpha_e;
    let s = alpha_r + alpha_e;
    let numerator = 2.0 * (d / mu - 1.0);
    if numerator <= 0.0 {
        return 0.0;
    }
    let root = (d * d + 4.0 * alpha_r * alpha_e * d / mu).sqrt();
    numerator / (root + s)
}

/// Secrecy rate density `log2((1+α_r c)/(1+α_e c))`.
pub fn rate_density(alpha_r: f64, alpha_e: f64, c: f64) -> f64 {
    ((alpha_r * c).ln_1p() - (alpha_e * c).ln_1p()) / LN_2
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Finds the water level whose delivered power matches `target`.
///
/// `power` must be non-increasing in the level. The bracket starts at
/// `[MU_FLOOR, 1]` and the upper end doubles until it delivers less than the
/// target; geometric bisection then runs to relative width `tol`. The upper
/// (feasible) end is returned.
fn solve_level(power: impl Fn(f64) -> f64, target: f64, tol: f64) -> f64 {
    let mut lo = MU_FLOOR;
    let mut hi = 1.0_f64;
    while power(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    if power(lo) <= target {
        return lo;
    }
    while (hi - lo) > tol * hi {
        let mid = (lo * hi).sqrt();
        let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
        if power(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Frequency-domain waterfilling on a uniform grid.
pub fn waterfill(grid: &SnrDensityGrid, power: f64, tol: f64) -> Result<WaterfillingSolution> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!("power must be positive, got {power}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = grid.len();
    if !(0..n).any(|k| grid.alpha_r[k] > grid.alpha_e[k]) {
        return Ok(WaterfillingSolution {
            mu: None,
            spectrum: vec![0.0; n],
            capacity: 0.0,
            power_used: 0.0,
        });
    }
    let span = grid.omegas[n - 1] - grid.omegas[0];
    let spectrum_at = |mu: f64| -> Vec<f64> {
        (0..n)
            .map(|k| allocation(grid.alpha_r[k], grid.alpha_e[k], mu))
            .collect()
    };
    let delivered = |mu: f64| trapezoid(&grid.omegas, &spectrum_at(mu)) / span;
    let mu = solve_level(delivered, power, tol);
    let spectrum = spectrum_at(mu);
    let power_used = trapezoid(&grid.omegas, &spectrum) / span;
    let rates: Vec<f64> = (0..n)
        .map(|k| rate_density(grid.alpha_r[k], grid.alpha_e[k], spectrum[k]))
        .collect();
    // (1/2π)∫_0^π when the grid spans [0, π]; other spans are normalised alike.
    let capacity = (trapezoid(&grid.omegas, &rates) / (2.0 * span)).max(0.0);
    Ok(WaterfillingSolution {
        mu: Some(mu),
        spectrum,
        capacity,
        power_used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScalarSolution {
    pub capacity: f64,
    /// Per-bin input variances `c_X̂[k]`, summing to `n²P`.
    pub allocation: Vec<f64>,
    pub mu: Option<f64>,
    pub alpha_r: Vec<f64>,
    pub alpha_e: Vec<f64>,
}

/// Secrecy capacity of the scalar `n`-block circular channel.
pub fn discrete_scalar_capacity(
    channel: &MimoWiretapChannel,
    n: usize,
    tol: f64,
) -> Result<DiscreteScalarSolution> {
    if !channel.is_scalar() {
        return Err(Error::DimensionMismatch("discrete scalar solver needs a 1x1x1 channel".into()));
    }
    let bins = build_bins(channel, n)?;
    let alpha_r: Vec<f64> = bins
        .bins()
        .iter()
        .map(|b| b.h[(0, 0)].norm_sqr() / b.cw[(0, 0)].re)
        .collect();
    let alpha_e: Vec<f64> = bins
        .bins()
        .iter()
        .map(|b| b.g[(0, 0)].norm_sqr() / b.cu[(0, 0)].re)
        .collect();
    if !(0..n).any(|k| alpha_r[k] > alpha_e[k]) {
        return Ok(DiscreteScalarSolution {
            capacity: 0.0,
            allocation: vec![0.0; n],
            mu: None,
            alpha_r,
            alpha_e,
        });
    }
    let budget = (n * n) as f64 * channel.power();
    let alloc_at = |mu: f64| -> Vec<f64> {
        // Only 0..=n/2 are computed; the upper half mirrors them.
        let mut c = vec![0.0; n];
        for k in 0..=n / 2 {
            c[k] = allocation(alpha_r[k], alpha_e[k], mu);
            if k > 0 {
                c[n - k] = c[k];
            }
        }
        c
    };
    let mu = solve_level(|mu| alloc_at(mu).iter().sum(), budget, tol);
    let allocation = alloc_at(mu);
    let capacity = (0..n)
        .map(|k| rate_density(alpha_r[k], alpha_e[k], allocation[k]))
        .sum::<f64>()
        / (2.0 * n as f64);
    Ok(DiscreteScalarSolution {
        capacity: capacity.max(0.0),
        allocation,
        mu: Some(mu),
        alpha_r,
        alpha_e,
    })
}

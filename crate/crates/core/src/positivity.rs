//! Strict-positivity test for the secrecy capacity.
//!
//! The capacity is positive iff, on a set of frequencies of positive
//! measure, some beamformer `v` gives `‖H̃(ω)v‖ > ‖G̃(ω)v‖`, where `H̃`, `G̃`
//! are the noise-whitened responses. The supremum of the gain ratio is the
//! square root of the largest generalized eigenvalue of the pencil
//! `(H̃^H H̃, G̃^H G̃)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::spectral::{spectral_point, MimoWiretapChannel, SpectralPoint};

/// Singular values of `G̃` below this fraction of the largest are treated as 0.
pub const RANK_TOL: f64 = 1e-10;
/// A ratio counts as exceeding one only above `1 + RATIO_TOL`.
pub const RATIO_TOL: f64 = 1e-9;
pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub grid: Vec<f64>,
    /// `sup_v ‖H̃v‖/‖G̃v‖` per grid point; `f64::INFINITY` when the
    /// eavesdropper has a null direction the receiver can see.
    pub ratio: Vec<f64>,
    /// Estimated measure (radians) of `{ω : ratio > 1}`.
    pub positive_measure: f64,
    pub measure_tol: f64,
    pub verdict: bool,
}

impl PositivityReport {
    pub fn spacing(&self) -> f64 {
        if self.grid.len() > 1 {
            self.grid[1] - self.grid[0]
        } else {
            PI
        }
    }

    /// Frequencies where the ratio crosses 1, linearly interpolated between
    /// neighbouring grid points (an infinite endpoint snaps to the finite one).
    pub fn crossings(&self) -> Vec<f64> {
        let above = |r: f64| r > 1.0 + RATIO_TOL;
        let mut out = Vec::new();
        for i in 1..self.grid.len() {
            let (r0, r1) = (self.ratio[i - 1], self.ratio[i]);
            if above(r0) == above(r1) {
                continue;
            }
            let (w0, w1) = (self.grid[i - 1], self.grid[i]);
            let omega = if r0.is_finite() && r1.is_finite() && r1 != r0 {
                w0 + (1.0 - r0) / (r1 - r0) * (w1 - w0)
            } else if r0.is_finite() {
                w0
            } else {
                w1
            };
            out.push(omega);
        }
        out
    }
}

/// Noise-whitened responses `C'_W^{-1/2} H'` and `C'_U^{-1/2} G'`.
pub fn whiten(point: &SpectralPoint) -> Result<(CMat, CMat)> {
    let wr = linalg::inv_sqrt_hpd(&point.cw)
        .ok_or_else(|| Error::SingularNoise(format!("C'_W at omega = {}", point.omega)))?;
    let we = linalg::inv_sqrt_hpd(&point.cu)
        .ok_or_else(|| Error::SingularNoise(format!("C'_U at omega = {}", point.omega)))?;
    Ok((wr * &point.h, we * &point.g))
}

/// `sup_v ‖H̃v‖ / ‖G̃v‖`, or `f64::INFINITY` if some `v` in the null space
/// of `G̃` has `H̃v ≠ 0`.
pub fn max_gain_ratio(ht: &CMat, gt: &CMat) -> f64 {
    assert_eq!(ht.ncols(), gt.ncols(), "whitened responses must share the input dimension");
    let nt = ht.ncols();
    let h_scale = linalg::frobenius(ht);
    if h_scale == 0.0 {
        return 0.0;
    }
    let (sv, v) = linalg::right_singular(gt);
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| smax > 0.0 && s > RANK_TOL * smax).count();
    if rank < nt {
        let null = v.columns(rank, nt - rank).into_owned();
        if linalg::frobenius(&(ht * &null)) > RANK_TOL * h_scale {
            return f64::INFINITY;
        }
    }
    if rank == 0 {
        return 0.0;
    }
    let range = v.columns(0, rank).into_owned();
    let hr = ht * &range;
    let gr = gt * &range;
    let a = hr.adjoint() * &hr;
    let b = gr.adjoint() * &gr;
    let chol = linalg::cholesky(&b).expect("restricted Gram matrix is positive definite");
    let l = chol.l();
    let li_a = l.solve_lower_triangular(&a).expect("triangular solve");
    let m = l
        .solve_lower_triangular(&li_a.adjoint())
        .expect("triangular solve")
        .adjoint();
    let (vals, _) = linalg::hermitian_eigen(&m);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Gain ratio at one frequency of a channel.
pub fn gain_ratio_at(channel: &MimoWiretapChannel, omega: f64) -> Result<f64> {
    let point = spectral_point(channel, omega)?;
    let (ht, gt) = whiten(&point)?;
    Ok(max_gain_ratio(&ht, &gt))
}

/// Evaluates the ratio on `ω_i = πi/grid_size`, `i < grid_size`, and
/// estimates the measure of the set where it exceeds one. `measure_tol`
/// defaults to one grid spacing, so a lone grid point never certifies.
pub fn positivity_check(
    channel: &MimoWiretapChannel,
    grid_size: usize,
    measure_tol: Option<f64>,
) -> Result<PositivityReport> {
    if grid_size < 16 {
        return Err(Error::InvalidArgument(format!(
            "positivity grid needs at least 16 points, got {grid_size}"
        )));
    }
    let spacing = PI / grid_size as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 * spacing).collect();
    let ratio = grid
        .iter()
        .map(|&w| gain_ratio_at(channel, w))
        .collect::<Result<Vec<_>>>()?;
    let count = ratio.iter().filter(|&&r| r > 1.0 + RATIO_TOL).count();
    let positive_measure = count as f64 * spacing;
    let measure_tol = measure_tol.unwrap_or(spacing);
    Ok(PositivityReport {
        grid,
        ratio,
        positive_measure,
        measure_tol,
        verdict: positive_measure > measure_tol,
    })
}

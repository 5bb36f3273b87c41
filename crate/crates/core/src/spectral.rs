//! Time-domain channel model and its frequency-domain images.
//!
//! A [`MimoWiretapChannel`] is described by finite tap sequences `H[τ]`,
//! `G[τ]` and finite-support noise autocorrelations `C_W[τ]`, `C_U[τ]`.
//! [`build_bins`] evaluates the `n`-point DFT picture of the circularised
//! channel: `Ĥ[k] = H'(2πk/n)` and `Ĉ_W̃[k] = n·C'_W(2πk/n)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};

/// Number of frequencies on `[0, π]` at which noise spectra are certified
/// positive definite.
pub const VALIDATION_GRID: usize = 4096;
/// Relative eigenvalue floor for the positive-definiteness certificate.
pub const PD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTapSequence {
    taps: Vec<RMat>,
    rows: usize,
    cols: usize,
}

impl MatrixTapSequence {
    pub fn new(taps: Vec<RMat>) -> Result<Self> {
        let first = taps
            .first()
            .ok_or_else(|| Error::InvalidArgument("tap sequence must hold at least one tap".into()))?;
        let (rows, cols) = first.shape();
        if let Some((i, t)) = taps.iter().enumerate().find(|(_, t)| t.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch(format!(
                "tap {i} is {}x{}, expected {rows}x{cols}",
                t.nrows(),
                t.ncols()
            )));
        }
        Ok(Self { taps, rows, cols })
    }

    /// Scalar taps `[t0, t1, ...]` as a 1×1 sequence.
    pub fn scalar(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| RMat::from_element(1, 1, t)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[RMat] {
        &self.taps
    }

    /// Zero-pads the sequence to the given memory.
    pub fn padded(&self, memory: usize) -> Self {
        let mut taps = self.taps.clone();
        while taps.len() < memory + 1 {
            taps.push(RMat::zeros(self.rows, self.cols));
        }
        Self {
            taps,
            rows: self.rows,
            cols: self.cols,
        }
    }
}

/// Autocorrelation lags `C[0..=m]` of a stationary real vector process with
/// `C[τ] = E{W[i+τ] W[i]^T}`. Negative lags are `C[-τ] = C[τ]^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAutocorrelation {
    lags: Vec<RMat>,
    dim: usize,
}

impl NoiseAutocorrelation {
    /// Validated constructor: shapes, symmetry of `C[0]`, and positive
    /// definiteness of the spectral density on a dense grid.
    pub fn new(lags: Vec<RMat>) -> Result<Self> {
        Self::with_label(lags, "noise")
    }

    /// Like [`NoiseAutocorrelation::new`], naming the process in errors.
    pub fn with_label(lags: Vec<RMat>, label: &str) -> Result<Self> {
        let acorr = Self::unvalidated(lags)?;
        let c0 = &acorr.lags[0];
        let asym = (c0 - c0.transpose()).amax();
        if asym > 1e-12 * c0.amax().max(1.0) {
            return Err(Error::Validation {
                field: label.into(),
                message: format!("lag-0 matrix is not symmetric (defect {asym:.3e})"),
            });
        }
        acorr.certify(label)?;
        Ok(acorr)
    }

    /// Shape checks only; the spectral density is not certified.
    pub fn unvalidated(lags: Vec<RMat>) -> Result<Self> {
        let first = lags
            .first()
            .ok_or_else(|| Error::InvalidArgument("autocorrelation needs lag 0".into()))?;
        let dim = first.nrows();
        if let Some((i, _)) = lags.iter().enumerate().find(|(_, c)| c.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!(
                "autocorrelation lag {i} is not {dim}x{dim}"
            )));
        }
        Ok(Self { lags, dim })
    }

    /// White noise `σ² I`.
    pub fn white(dim: usize, variance: f64) -> Result<Self> {
        Self::new(vec![RMat::identity(dim, dim) * variance])
    }

    pub fn scalar(lags: &[f64]) -> Result<Self> {
        Self::new(lags.iter().map(|&c| RMat::from_element(1, 1, c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn memory(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn lags(&self) -> &[RMat] {
        &self.lags
    }

    /// `C[τ]` for any integer lag, zero outside the support.
    pub fn lag(&self, tau: isize) -> RMat {
        let idx = tau.unsigned_abs();
        match self.lags.get(idx) {
            None => RMat::zeros(self.dim, self.dim),
            Some(c) if tau < 0 => c.transpose(),
            Some(c) => c.clone(),
        }
    }

    pub fn padded(&self, memory: usize) -> Self {
        let mut lags = self.lags.clone();
        while lags.len() < memory + 1 {
            lags.push(RMat::zeros(self.dim, self.dim));
        }
        Self { lags, dim: self.dim }
    }

    fn certify(&self, label: &str) -> Result<()> {
        for i in 0..VALIDATION_GRID {
            let omega = PI * i as f64 / (VALIDATION_GRID - 1) as f64;
            let s = spectral_sum(&self.lags, omega, true);
            let (vals, _) = linalg::hermitian_eigen(&s);
            let min = vals[0];
            let max = *vals.last().unwrap();
            if !(min > PD_REL_TOL * max) {
                return Err(Error::NotPositiveDefinite {
                    what: label.into(),
                    omega,
                    min_eig: min,
                    max_eig: max,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MimoWiretapChannel {
    h: MatrixTapSequence,
    g: MatrixTapSequence,
    cw: NoiseAutocorrelation,
    cu: NoiseAutocorrelation,
    power: f64,
    memory: usize,
}

impl MimoWiretapChannel {
    pub fn new(
        h: MatrixTapSequence,
        g: MatrixTapSequence,
        cw: NoiseAutocorrelation,
        cu: NoiseAutocorrelation,
        power: f64,
    ) -> Result<Self> {
        if h.cols() != g.cols() {
            return Err(Error::DimensionMismatch(format!(
                "h has {} inputs but g has {}",
                h.cols(),
                g.cols()
            )));
        }
        if h.rows() != cw.dim() {
            return Err(Error::DimensionMismatch(format!(
                "h has {} outputs but cw is {}x{}",
                h.rows(),
                cw.dim(),
                cw.dim()
            )));
        }
        if g.rows() != cu.dim() {
            return Err(Error::DimensionMismatch(format!(
                "g has {} outputs but cu is {}x{}",
                g.rows(),
                cu.dim(),
                cu.dim()
            )));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!("power must be positive, got {power}")));
        }
        let memory = h.memory().max(g.memory()).max(cw.memory()).max(cu.memory());
        Ok(Self {
            h: h.padded(memory),
            g: g.padded(memory),
            cw: cw.padded(memory),
            cu: cu.padded(memory),
            power,
            memory,
        })
    }

    /// Scalar channel with given taps and noise autocorrelations.
    pub fn scalar(h: &[f64], g: &[f64], cw: &[f64], cu: &[f64], power: f64) -> Result<Self> {
        Self::new(
            MatrixTapSequence::scalar(h)?,
            MatrixTapSequence::scalar(g)?,
            NoiseAutocorrelation::with_label(cw.iter().map(|&c| RMat::from_element(1, 1, c)).collect(), "cw")?,
            NoiseAutocorrelation::with_label(cu.iter().map(|&c| RMat::from_element(1, 1, c)).collect(), "cu")?,
            power,
        )
    }

    pub fn h(&self) -> &MatrixTapSequence {
        &self.h
    }
    pub fn g(&self) -> &MatrixTapSequence {
        &self.g
    }
    pub fn cw(&self) -> &NoiseAutocorrelation {
        &self.cw
    }
    pub fn cu(&self) -> &NoiseAutocorrelation {
        &self.cu
    }
    pub fn power(&self) -> f64 {
        self.power
    }
    pub fn memory(&self) -> usize {
        self.memory
    }
    pub fn nt(&self) -> usize {
        self.h.cols()
    }
    pub fn nr(&self) -> usize {
        self.h.rows()
    }
    pub fn ne(&self) -> usize {
        self.g.rows()
    }

    pub fn is_scalar(&self) -> bool {
        self.nt() == 1 && self.nr() == 1 && self.ne() == 1
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.g.clone(), self.cw.clone(), self.cu.clone(), power)
    }
}

/// Frequency-domain matrices at one angular frequency.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub omega: f64,
    pub h: CMat,
    pub g: CMat,
    pub cw: CMat,
    pub cu: CMat,
}

pub fn spectral_point(channel: &MimoWiretapChannel, omega: f64) -> Result<SpectralPoint> {
    Ok(SpectralPoint {
        omega,
        h: frequency_response(channel.h(), omega),
        g: frequency_response(channel.g(), omega),
        cw: labelled_density(channel.cw(), omega, "cw")?,
        cu: labelled_density(channel.cu(), omega, "cu")?,
    })
}

/// `Σ_τ taps[τ] e^{-jωτ}`.
pub fn frequency_response(taps: &MatrixTapSequence, omega: f64) -> CMat {
    let mut out = CMat::zeros(taps.rows(), taps.cols());
    for (tau, t) in taps.taps().iter().enumerate() {
        let w = Complex64::from_polar(1.0, -omega * tau as f64);
        out += linalg::to_complex(t) * w;
    }
    out
}

fn spectral_sum(lags: &[RMat], omega: f64, two_sided: bool) -> CMat {
    let dim = lags[0].nrows();
    let mut out = linalg::to_complex(&lags[0]);
    for (tau, c) in lags.iter().enumerate().skip(1) {
        let w = Complex64::from_polar(1.0, -omega * tau as f64);
        out += linalg::to_complex(c) * w;
        if two_sided {
            out += linalg::to_complex(&c.transpose()) * w.conj();
        }
    }
    debug_assert_eq!(out.nrows(), dim);
    linalg::hermitian_part(&out)
}

/// `C'(ω) = Σ_{τ=-m}^{m} C[τ] e^{-jωτ}` with `C[-τ] = C[τ]^T`.
pub fn noise_spectral_density(acorr: &NoiseAutocorrelation, omega: f64) -> Result<CMat> {
    labelled_density(acorr, omega, "noise")
}

fn labelled_density(acorr: &NoiseAutocorrelation, omega: f64, label: &str) -> Result<CMat> {
    let s = spectral_sum(acorr.lags(), omega, true);
    let (vals, _) = linalg::hermitian_eigen(&s);
    let min = vals[0];
    let max = *vals.last().unwrap();
    if min < -PD_REL_TOL * max || max <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            what: label.into(),
            omega,
            min_eig: min,
            max_eig: max,
        });
    }
    Ok(s)
}

/// Autocorrelation of the circularised noise within one `n`-block:
/// `C[τ] + C[τ+n] + C[τ-n]`.
pub fn circular_autocorrelation(acorr: &NoiseAutocorrelation, n: usize, tau: isize) -> Result<RMat> {
    let m = acorr.memory();
    if n <= 2 * m {
        return Err(Error::BlockTooShort { n, memory: m });
    }
    if tau.unsigned_abs() >= n {
        return Err(Error::InvalidArgument(format!("lag {tau} out of range for n = {n}")));
    }
    let n = n as isize;
    Ok(acorr.lag(tau) + acorr.lag(tau + n) + acorr.lag(tau - n))
}

/// Circular convolution `y[i] = Σ_τ taps[τ] x[((i-τ))_n]` over one block.
pub fn circular_convolve(taps: &MatrixTapSequence, block: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = block.len();
    (0..n)
        .map(|i| {
            let mut y = vec![0.0; taps.rows()];
            for (tau, t) in taps.taps().iter().enumerate() {
                let x = &block[(i + n - tau % n) % n];
                for (r, yr) in y.iter_mut().enumerate() {
                    *yr += (0..taps.cols()).map(|c| t[(r, c)] * x[c]).sum::<f64>();
                }
            }
            y
        })
        .collect()
}

/// DFT-domain data of one bin.
#[derive(Debug, Clone)]
pub struct Bin {
    pub k: usize,
    pub h: CMat,
    pub g: CMat,
    pub cw: CMat,
    pub cu: CMat,
}

impl Bin {
    pub fn nt(&self) -> usize {
        self.h.ncols()
    }

    /// Elementwise conjugate of every matrix, as bin `n-k` relates to bin `k`.
    pub fn conjugate(&self, k: usize) -> Bin {
        Bin {
            k,
            h: linalg::conj(&self.h),
            g: linalg::conj(&self.g),
            cw: linalg::conj(&self.cw),
            cu: linalg::conj(&self.cu),
        }
    }

    /// Bin with caller-provided matrices; no structural checks.
    pub fn from_parts(h: CMat, g: CMat, cw: CMat, cu: CMat) -> Bin {
        Bin { k: 0, h, g, cw, cu }
    }
}

#[derive(Debug, Clone)]
pub struct BinSet {
    n: usize,
    bins: Vec<Bin>,
}

impl BinSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn bin(&self, k: usize) -> &Bin {
        &self.bins[k]
    }

    /// Bins `0` and (for even `n`) `n/2` have real-valued data.
    pub fn is_real_bin(&self, k: usize) -> bool {
        is_real_bin(self.n, k)
    }

    /// Multiplicity of bin `k ≤ n/2` in the full sum over `0..n`.
    pub fn weight(&self, k: usize) -> usize {
        if self.is_real_bin(k) {
            1
        } else {
            2
        }
    }

    /// Indices `0..=⌊n/2⌋` which carry all independent information.
    pub fn independent(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.n / 2
    }
}

pub(crate) fn is_real_bin(n: usize, k: usize) -> bool {
    k == 0 || 2 * k == n
}

fn twiddle(n: usize, k: usize, tau: usize) -> Complex64 {
    let r = (k * tau) % n;
    if r == 0 {
        return linalg::ONE;
    }
    if 2 * r == n {
        return Complex64::new(-1.0, 0.0);
    }
    Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64)
}

fn bin_response(taps: &MatrixTapSequence, n: usize, k: usize) -> CMat {
    let mut out = CMat::zeros(taps.rows(), taps.cols());
    for (tau, t) in taps.taps().iter().enumerate() {
        out += linalg::to_complex(t) * twiddle(n, k, tau);
    }
    out
}

fn bin_noise(acorr: &NoiseAutocorrelation, n: usize, k: usize, label: &str) -> Result<CMat> {
    let mut out = linalg::to_complex(&acorr.lags()[0]);
    for (tau, c) in acorr.lags().iter().enumerate().skip(1) {
        let w = twiddle(n, k, tau);
        out += linalg::to_complex(c) * w + linalg::to_complex(&c.transpose()) * w.conj();
    }
    let out = linalg::hermitian_part(&out);
    let (vals, _) = linalg::hermitian_eigen(&out);
    let (min, max) = (vals[0], *vals.last().unwrap());
    if !(min > PD_REL_TOL * max) {
        return Err(Error::NotPositiveDefinite {
            what: label.into(),
            omega: 2.0 * PI * k as f64 / n as f64,
            min_eig: min,
            max_eig: max,
        });
    }
    Ok(out * Complex64::new(n as f64, 0.0))
}

/// DFT-bin decomposition of the `n`-block circular channel.
pub fn build_bins(channel: &MimoWiretapChannel, n: usize) -> Result<BinSet> {
    let m = channel.memory();
    if n <= 2 * m {
        return Err(Error::BlockTooShort { n, memory: m });
    }
    let mut half = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let mut bin = Bin {
            k,
            h: bin_response(channel.h(), n, k),
            g: bin_response(channel.g(), n, k),
            cw: bin_noise(channel.cw(), n, k, "cw")?,
            cu: bin_noise(channel.cu(), n, k, "cu")?,
        };
        if is_real_bin(n, k) {
            for m in [&mut bin.h, &mut bin.g, &mut bin.cw, &mut bin.cu] {
                m.iter_mut().for_each(|z| z.im = 0.0);
            }
        }
        half.push(bin);
    }
    let mut bins = half.clone();
    for k in n / 2 + 1..n {
        bins.push(half[n - k].conjugate(k));
    }
    Ok(BinSet { n, bins })
}

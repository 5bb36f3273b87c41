//! Brute-force and Monte-Carlo reference implementations.
//!
//! These deliberately avoid the solver code paths: the scalar oracle never
//! uses the closed-form allocation, the sphere oracle evaluates rank-one
//! rates directly, and the noise oracle samples time-domain blocks and
//! transforms them with a naive DFT sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};
use crate::spectral::{circular_autocorrelation, Bin, MimoWiretapChannel, NoiseAutocorrelation};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub seed: u64,
    pub samples: usize,
    pub grid: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            grid: 1000,
            tol: 1e-4,
        }
    }
}

impl OracleConfig {
    pub fn check_samples(&self) -> Result<()> {
        if self.samples < 10_000 {
            return Err(Error::InvalidArgument(format!(
                "covariance checks need at least 10^4 samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn check_grid(&self) -> Result<()> {
        if self.grid < 1000 {
            return Err(Error::InvalidArgument(format!(
                "1-D searches need a grid of at least 1000, got {}",
                self.grid
            )));
        }
        Ok(())
    }
}

fn bin_objective(a: f64, b: f64, mu: f64, c: f64) -> f64 {
    0.5 * ((1.0 + a * c) / (1.0 + b * c)).log2() - 0.5 * mu * c
}

/// Maximiser of one bin's Lagrangian over `[0, c_max]`: dense grid, then
/// ternary search on the bracket around the best grid point.
fn bin_argmax(a: f64, b: f64, mu: f64, c_max: f64, grid: usize) -> f64 {
    if a <= b {
        return 0.0;
    }
    let step = c_max / grid as f64;
    let mut best = 0;
    let mut val = bin_objective(a, b, mu, 0.0);
    for j in 1..=grid {
        let v = bin_objective(a, b, mu, j as f64 * step);
        if v > val {
            val = v;
            best = j;
        }
    }
    let mut lo = (best.max(1) - 1) as f64 * step;
    let mut hi = ((best + 1).min(grid)) as f64 * step;
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if bin_objective(a, b, mu, m1) < bin_objective(a, b, mu, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let c = 0.5 * (lo + hi);
    if bin_objective(a, b, mu, c) > bin_objective(a, b, mu, 0.0) {
        c
    } else {
        0.0
    }
}

/// Capacity `(1/L) Σ ½ log₂((1+α_r c)/(1+α_e c))` maximised under
/// `(1/L) Σ c ≤ P`, by bisection on the dual price.
pub fn scalar_grid_oracle(alpha_r: &[f64], alpha_e: &[f64], power: f64, cfg: &OracleConfig) -> Result<f64> {
    cfg.check_grid()?;
    if alpha_r.is_empty() || alpha_r.len() != alpha_e.len() {
        return Err(Error::InvalidArgument("SNR lists must be non-empty and of equal length".into()));
    }
    let len = alpha_r.len() as f64;
    if alpha_r.iter().zip(alpha_e).all(|(a, b)| a <= b) {
        return Ok(0.0);
    }
    let solve = |mu: f64, c_max: f64| -> Vec<f64> {
        alpha_r
            .iter()
            .zip(alpha_e)
            .map(|(&a, &b)| bin_argmax(a, b, mu, c_max, cfg.grid))
            .collect()
    };
    let mean = |c: &[f64]| c.iter().sum::<f64>() / len;

    let eval = |mu: f64| -> Vec<f64> {
        let mut c_max = 4.0 / mu;
        let mut c = solve(mu, c_max);
        while c.iter().any(|&x| x >= c_max * (1.0 - 2.0 / cfg.grid as f64)) {
            c_max *= 2.0;
            c = solve(mu, c_max);
        }
        c
    };
    let mut hi = 1.0;
    while mean(&eval(hi)) > power {
        hi *= 2.0;
    }
    let mut lo = hi;
    while mean(&eval(lo)) <= power && lo > 1e-300 {
        hi = lo;
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
        if mean(&eval(mid)) > power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = eval(hi);
    let rate: f64 = alpha_r
        .iter()
        .zip(alpha_e)
        .zip(&c)
        .map(|((&a, &b), &x)| 0.5 * ((1.0 + a * x) / (1.0 + b * x)).log2())
        .sum();
    Ok((rate / len).max(0.0))
}

/// Scalar SNR densities on the full circle `ω_k = 2πk/L`, computed from
/// the taps by direct summation.
pub fn circle_snr_lists(channel: &MimoWiretapChannel, len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !channel.is_scalar() {
        return Err(Error::DimensionMismatch("scalar oracle needs a 1x1x1 channel".into()));
    }
    let gain = |taps: &[RMat], w: f64| -> f64 {
        taps.iter()
            .enumerate()
            .map(|(t, m)| Complex64::from_polar(m[(0, 0)], -w * t as f64))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let density = |lags: &[RMat], w: f64| -> f64 {
        lags[0][(0, 0)]
            + 2.0
                * lags
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(t, m)| m[(0, 0)] * (w * t as f64).cos())
                    .sum::<f64>()
    };
    let mut ar = Vec::with_capacity(len);
    let mut ae = Vec::with_capacity(len);
    for k in 0..len {
        let w = 2.0 * PI * k as f64 / len as f64;
        ar.push(gain(channel.h().taps(), w) / density(channel.cw().lags(), w));
        ae.push(gain(channel.g().taps(), w) / density(channel.cu().lags(), w));
    }
    Ok((ar, ae))
}

fn rank_one_rate(bin: &Bin, rho: f64, v: &CMat) -> f64 {
    let gain = |m: &CMat, c: &CMat| -> f64 {
        let hv = m * v;
        let x = c.clone().lu().solve(&hv).expect("noise covariance is invertible");
        (hv.adjoint() * x)[(0, 0)].re
    };
    let gr = gain(&bin.h, &bin.cw);
    let ge = gain(&bin.g, &bin.cu);
    0.5 * ((1.0 + rho * gr) / (1.0 + rho * ge)).log2()
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Unit vectors covering the complex sphere in `C^nt`, `nt ≤ 3`.
fn sphere_points(nt: usize, grid: usize) -> Vec<CMat> {
    let total = grid * grid;
    match nt {
        1 => vec![CMat::from_element(1, 1, Complex64::new(1.0, 0.0))],
        2 => (0..total)
            .map(|i| {
                let theta = (i / grid) as f64 / (grid - 1).max(1) as f64 * PI / 2.0;
                let phi = (i % grid) as f64 / grid as f64 * 2.0 * PI;
                CMat::from_column_slice(
                    2,
                    1,
                    &[Complex64::new(theta.cos(), 0.0), Complex64::from_polar(theta.sin(), phi)],
                )
            })
            .collect(),
        _ => (0..total)
            .map(|i| {
                // Halton points in four angles; magnitudes uniform on the octant.
                let u = radical_inverse(i + 1, 2);
                let w = radical_inverse(i + 1, 3) * PI / 2.0;
                let p1 = radical_inverse(i + 1, 5) * 2.0 * PI;
                let p2 = radical_inverse(i + 1, 7) * 2.0 * PI;
                let r0 = u.sqrt();
                let rest = (1.0 - u).sqrt();
                CMat::from_column_slice(
                    3,
                    1,
                    &[
                        Complex64::new(r0, 0.0),
                        Complex64::from_polar(rest * w.cos(), p1),
                        Complex64::from_polar(rest * w.sin(), p2),
                    ],
                )
            })
            .collect(),
    }
}

/// Best rate over `Q = ρ v v^H` with `v` on a deterministic sphere grid;
/// a lower bound on the bin's optimum, clamped at zero.
pub fn rank_one_sphere_oracle(bin: &Bin, rho: f64, cfg: &OracleConfig) -> Result<f64> {
    let nt = bin.nt();
    if nt == 0 || nt > 3 {
        return Err(Error::InvalidArgument(format!("sphere oracle supports 1..=3 inputs, got {nt}")));
    }
    Ok(sphere_points(nt, cfg.grid.max(2))
        .iter()
        .map(|v| rank_one_rate(bin, rho, v))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct McCovariance {
    pub estimate: CMat,
    pub se_re: RMat,
    pub se_im: RMat,
    pub samples: usize,
}

impl McCovariance {
    /// Largest entrywise deviation from `target` in units of standard error.
    /// Standard errors are floored at `1e-9` of the largest one, so
    /// rounding-level parts (imaginary parts of real bins) do not dominate.
    pub fn max_z(&self, target: &CMat) -> f64 {
        let floor = 1e-9 * self.se_re.amax().max(self.se_im.amax()).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..target.nrows() {
            for j in 0..target.ncols() {
                let d = self.estimate[(i, j)] - target[(i, j)];
                for (dev, se) in [(d.re.abs(), self.se_re[(i, j)]), (d.im.abs(), self.se_im[(i, j)])] {
                    worst = worst.max(dev / se.max(floor));
                }
            }
        }
        worst
    }
}

fn block_covariance(acorr: &NoiseAutocorrelation, n: usize) -> Result<RMat> {
    let dim = acorr.dim();
    let mut big = RMat::zeros(n * dim, n * dim);
    for i in 0..n {
        for j in 0..n {
            let c = circular_autocorrelation(acorr, n, i as isize - j as isize)?;
            big.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&c);
        }
    }
    Ok(big)
}

/// `F` with `F Fᵀ = Σ` from the symmetric eigendecomposition, so
/// semidefinite covariances (densities touching zero) are accepted.
fn block_factor(big: &RMat) -> Result<RMat> {
    let eig = big.clone().symmetric_eigen();
    let (min, max) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(max > 0.0) || min < -1e-9 * max {
        return Err(Error::NotPositiveDefinite {
            what: "block covariance".into(),
            omega: f64::NAN,
            min_eig: min,
            max_eig: max,
        });
    }
    let mut f = eig.eigenvectors;
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

fn naive_bin(block: &[f64], dim: usize, n: usize, k: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|l| {
            (0..n)
                .map(|i| Complex64::from_polar(block[i * dim + l], -2.0 * PI * ((i * k) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

const BATCH: usize = 4096;

/// Empirical `E{ŵ[k1] ŵ[k2]^H}` of DFTs of sampled circular noise blocks.
pub fn mc_cross_bin_covariance(
    acorr: &NoiseAutocorrelation,
    n: usize,
    k1: usize,
    k2: usize,
    cfg: &OracleConfig,
) -> Result<McCovariance> {
    cfg.check_samples()?;
    let m = acorr.memory();
    if n <= 2 * m {
        return Err(Error::BlockTooShort { n, memory: m });
    }
    if k1 >= n || k2 >= n {
        return Err(Error::InvalidArgument(format!("bins must be below n = {n}")));
    }
    let dim = acorr.dim();
    let l = block_factor(&block_covariance(acorr, n)?)?;
    let batches = cfg.samples.div_ceil(BATCH);
    let run = |b: usize| -> (CMat, RMat, RMat, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add((b as u64) << 20));
        let count = BATCH.min(cfg.samples - b * BATCH);
        let mut sum = CMat::zeros(dim, dim);
        let mut sq_re = RMat::zeros(dim, dim);
        let mut sq_im = RMat::zeros(dim, dim);
        for _ in 0..count {
            let z = nalgebra::DVector::<f64>::from_fn(n * dim, |_, _| StandardNormal.sample(&mut rng));
            let w = &l * z;
            let a = naive_bin(w.as_slice(), dim, n, k1);
            let bvec = if k2 == k1 { a.clone() } else { naive_bin(w.as_slice(), dim, n, k2) };
            for i in 0..dim {
                for j in 0..dim {
                    let x = a[i] * bvec[j].conj();
                    sum[(i, j)] += x;
                    sq_re[(i, j)] += x.re * x.re;
                    sq_im[(i, j)] += x.im * x.im;
                }
            }
        }
        (sum, sq_re, sq_im, count)
    };
    let parts: Vec<_> = (0..batches).into_par_iter().map(run).collect();
    let mut sum = CMat::zeros(dim, dim);
    let mut sq_re = RMat::zeros(dim, dim);
    let mut sq_im = RMat::zeros(dim, dim);
    let mut total = 0;
    for (s, r, i, c) in parts {
        sum += s;
        sq_re += r;
        sq_im += i;
        total += c;
    }
    let t = total as f64;
    let estimate = sum.unscale(t);
    let se = |sq: &RMat, mean: &dyn Fn(usize, usize) -> f64| {
        RMat::from_fn(dim, dim, |i, j| {
            let mu = mean(i, j);
            ((sq[(i, j)] / t - mu * mu).max(0.0) / (t - 1.0)).sqrt()
        })
    };
    let se_re = se(&sq_re, &|i, j| estimate[(i, j)].re);
    let se_im = se(&sq_im, &|i, j| estimate[(i, j)].im);
    Ok(McCovariance {
        estimate,
        se_re,
        se_im,
        samples: total,
    })
}

/// Empirical covariance of bin `k` of sampled circular noise blocks.
pub fn mc_noise_dft_covariance(
    acorr: &NoiseAutocorrelation,
    n: usize,
    k: usize,
    cfg: &OracleConfig,
) -> Result<McCovariance> {
    mc_cross_bin_covariance(acorr, n, k, k, cfg)
}

/// Autocorrelation of the moving average `w[i] = Σ_j A_j ε[i-j] + σ e[i]`
/// with white unit-variance `ε`, `e`: `C[τ] = Σ_j A_{j+τ} A_jᵀ + σ² I δ[τ]`.
pub fn ma_autocorrelation(filter: &[RMat], floor: f64) -> Result<NoiseAutocorrelation> {
    let dim = filter[0].nrows();
    let m = filter.len() - 1;
    let lags = (0..=m)
        .map(|tau| {
            let mut c = RMat::zeros(dim, dim);
            for j in 0..=(m - tau) {
                c += &filter[j + tau] * filter[j].transpose();
            }
            if tau == 0 {
                c += RMat::identity(dim, dim) * floor;
            }
            c
        })
        .collect();
    NoiseAutocorrelation::new(lags)
}

/// Random valid noise model of the given dimension and memory.
pub fn random_ma_noise(rng: &mut impl Rng, dim: usize, memory: usize) -> Result<NoiseAutocorrelation> {
    let filter: Vec<RMat> = (0..=memory)
        .map(|_| RMat::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    ma_autocorrelation(&filter, 0.1)
}

/// Cyclostationary autocovariance `r(p, τ) = E{W[p+τ] W[p]}`, `τ ∈ 0..=max_lag`,
/// of `W[i] = Σ_j a[i mod t][j] ε[i-j]`.
pub fn lptv_ma_covariance(a: &[Vec<f64>], max_lag: usize) -> Vec<Vec<f64>> {
    let t = a.len();
    (0..t)
        .map(|p| {
            (0..=max_lag)
                .map(|tau| {
                    let later = &a[(p + tau) % t];
                    a[p].iter()
                        .enumerate()
                        .filter_map(|(j, &x)| later.get(j + tau).map(|&y| x * y))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Samples `W[i] = Σ_j a[i mod t][j] ε[i-j]` for `i ∈ 0..len`, with the
/// filter fed by innovations that start before index 0.
pub fn lptv_ma_sample(a: &[Vec<f64>], len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let t = a.len();
    let depth = a.iter().map(Vec::len).max().unwrap_or(1);
    let eps: Vec<f64> = (0..len + depth).map(|_| StandardNormal.sample(rng)).collect();
    (0..len)
        .map(|i| {
            a[i % t]
                .iter()
                .enumerate()
                .map(|(j, &c)| c * eps[i + depth - j])
                .sum()
        })
        .collect()
}

/// Empirical `E{W̃[1] W̃[0]ᵀ}`-style lags `0` and `1` of length-`n_tilde`
/// blocks of `W[i] = Σ_j a[i mod t][j] ε[i-j]`; each sample is an
/// independent two-block segment starting at phase 0.
pub fn mc_decimated_noise(a: &[Vec<f64>], n_tilde: usize, cfg: &OracleConfig) -> Result<[McCovariance; 2]> {
    cfg.check_samples()?;
    if !n_tilde.is_multiple_of(a.len()) {
        return Err(Error::InvalidArgument("block size must be a multiple of the noise period".into()));
    }
    let batches = cfg.samples.div_ceil(BATCH);
    let run = |b: usize| -> ([RMat; 2], [RMat; 2], usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add((b as u64) << 20));
        let count = BATCH.min(cfg.samples - b * BATCH);
        let mut sum = [RMat::zeros(n_tilde, n_tilde), RMat::zeros(n_tilde, n_tilde)];
        let mut sq = sum.clone();
        for _ in 0..count {
            let w = lptv_ma_sample(a, 2 * n_tilde, &mut rng);
            for lag in 0..2 {
                for k1 in 0..n_tilde {
                    for k2 in 0..n_tilde {
                        let x = w[lag * n_tilde + k1] * w[k2];
                        sum[lag][(k1, k2)] += x;
                        sq[lag][(k1, k2)] += x * x;
                    }
                }
            }
        }
        (sum, sq, count)
    };
    let parts: Vec<_> = (0..batches).into_par_iter().map(run).collect();
    let mut sum = [RMat::zeros(n_tilde, n_tilde), RMat::zeros(n_tilde, n_tilde)];
    let mut sq = sum.clone();
    let mut total = 0;
    for (s, q, c) in parts {
        for lag in 0..2 {
            sum[lag] += &s[lag];
            sq[lag] += &q[lag];
        }
        total += c;
    }
    let t = total as f64;
    let build = |lag: usize| {
        let mean = sum[lag].unscale(t);
        let se = RMat::from_fn(n_tilde, n_tilde, |i, j| {
            let m = mean[(i, j)];
            ((sq[lag][(i, j)] / t - m * m).max(0.0) / (t - 1.0)).sqrt()
        });
        McCovariance {
            estimate: mean.map(|x| Complex64::new(x, 0.0)),
            se_re: se,
            se_im: RMat::zeros(n_tilde, n_tilde),
            samples: total,
        }
    };
    Ok([build(0), build(1)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn line(name: &str, passed: bool, detail: String) -> SelftestLine {
    SelftestLine {
        name: name.into(),
        passed,
        detail,
    }
}

/// Oracle battery for the `selftest` verb.
pub fn selftest(cfg: &OracleConfig) -> Result<Vec<SelftestLine>> {
    let mut out = Vec::new();

    let same = scalar_grid_oracle(&[1.0, 2.0, 0.5], &[1.0, 2.0, 0.5], 1.0, cfg)?;
    out.push(line("scalar oracle: identical SNRs give zero", same == 0.0, format!("{same:e}")));

    let flat = scalar_grid_oracle(&[1.0; 8], &[0.25; 8], 1.0, cfg)?;
    out.push(line(
        "scalar oracle: flat 1 vs 0.25 at P = 1 gives 0.3390",
        (flat - 0.3390).abs() < 1e-4,
        format!("{flat:.6}"),
    ));

    let two_tap = MimoWiretapChannel::scalar(&[1.0, 1.0], &[3.1, -3.1], &[1.0], &[1.0], 1.0)?;
    let (ar, ae) = circle_snr_lists(&two_tap, 256)?;
    let c = scalar_grid_oracle(&ar, &ae, 1.0, cfg)?;
    out.push(line(
        "scalar oracle: two-tap example gives 0.21 +- 0.01",
        (c - 0.21).abs() <= 0.01,
        format!("{c:.5}"),
    ));

    let scalar_bin = Bin::from_parts(
        CMat::from_element(1, 1, Complex64::new(2.0, 0.0)),
        CMat::from_element(1, 1, Complex64::new(1.0, 0.0)),
        CMat::identity(1, 1),
        CMat::identity(1, 1),
    );
    let s = rank_one_sphere_oracle(&scalar_bin, 3.0, cfg)?;
    let expected = 0.5 * (13.0_f64 / 4.0).log2();
    out.push(line(
        "sphere oracle: scalar bin at full power",
        (s - expected).abs() < 1e-12,
        format!("{s:.6}"),
    ));

    let white = NoiseAutocorrelation::white(2, 1.5)?;
    let mc_cfg = OracleConfig {
        samples: cfg.samples.max(10_000),
        ..cfg.clone()
    };
    let est = mc_noise_dft_covariance(&white, 6, 2, &mc_cfg)?;
    let z = est.max_z(&(CMat::identity(2, 2) * Complex64::new(9.0, 0.0)));
    out.push(line("noise oracle: white noise bin covariance is n sigma^2 I", z < 5.0, format!("max z {z:.2}")));

    let ma1 = NoiseAutocorrelation::unvalidated(vec![RMat::from_element(1, 1, 1.0), RMat::from_element(1, 1, 0.5)])?;
    let est = mc_noise_dft_covariance(&ma1, 8, 0, &mc_cfg)?;
    let z = est.max_z(&CMat::from_element(1, 1, Complex64::new(16.0, 0.0)));
    out.push(line("noise oracle: MA(1) at DC is 16", z < 5.0, format!("{:.3} (z {z:.2})", est.estimate[(0, 0)].re)));

    let cross = mc_cross_bin_covariance(&ma1, 8, 1, 2, &mc_cfg)?;
    let z = cross.max_z(&CMat::zeros(1, 1));
    out.push(line("noise oracle: bins 1 and 2 uncorrelated", z < 5.0, format!("max z {z:.2}")));

    Ok(out)
}

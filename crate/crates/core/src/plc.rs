//! Narrowband power-line wiretap channel: periodically time-varying taps and
//! cyclostationary noise, reduced to a memory-one block MIMO channel by
//! stacking `ñ` consecutive samples.

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::mimo::{circular_capacity, CapacityResult, MimoOptions};
use crate::spectral::{MatrixTapSequence, MimoWiretapChannel, NoiseAutocorrelation};

/// `taps[p][τ]` is the tap at delay `τ` for output samples with `i mod period = p`.
/// A table with fewer rows than the period repeats with its own row count,
/// which must divide the period.
#[derive(Debug, Clone, PartialEq)]
pub struct PlcChannel {
    pub t_ch: usize,
    pub t_noise: usize,
    pub power: f64,
    pub h_lptv: Vec<Vec<f64>>,
    pub g_lptv: Vec<Vec<f64>>,
    /// `cw_cyclo[p][τ] = E{W[i+τ] W[i]}` for `i mod t_noise = p`, `τ ≥ 0`.
    pub cw_cyclo: Vec<Vec<f64>>,
    pub cu_cyclo: Vec<Vec<f64>>,
}

fn check_table(name: &str, table: &[Vec<f64>], period: usize) -> Result<()> {
    let invalid = |message: String| Error::Validation {
        field: name.into(),
        message,
    };
    if table.is_empty() || table.iter().any(Vec::is_empty) {
        return Err(invalid("needs at least one phase with one entry".into()));
    }
    if !period.is_multiple_of(table.len()) {
        return Err(invalid(format!("{} phases do not divide period {period}", table.len())));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("entries must be finite".into()));
    }
    Ok(())
}

fn table_at(table: &[Vec<f64>], phase: usize, tau: usize) -> f64 {
    table[phase % table.len()].get(tau).copied().unwrap_or(0.0)
}

fn memory_of(table: &[Vec<f64>]) -> usize {
    table.iter().map(|r| r.len() - 1).max().unwrap_or(0)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl PlcChannel {
    pub fn validate(&self) -> Result<()> {
        if self.t_ch == 0 || self.t_noise == 0 {
            return Err(Error::Validation {
                field: "t_ch".into(),
                message: "periods must be positive".into(),
            });
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::Validation {
                field: "power".into(),
                message: format!("must be positive and finite, got {}", self.power),
            });
        }
        check_table("h_lptv", &self.h_lptv, self.t_ch)?;
        check_table("g_lptv", &self.g_lptv, self.t_ch)?;
        check_table("cw_cyclo", &self.cw_cyclo, self.t_noise)?;
        check_table("cu_cyclo", &self.cu_cyclo, self.t_noise)?;
        for (name, table) in [("cw_cyclo", &self.cw_cyclo), ("cu_cyclo", &self.cu_cyclo)] {
            if let Some(p) = table.iter().position(|r| !(r[0] > 0.0)) {
                return Err(Error::Validation {
                    field: name.into(),
                    message: format!("variance at phase {p} must be positive"),
                });
            }
        }
        Ok(())
    }

    pub fn channel_memory(&self) -> usize {
        memory_of(&self.h_lptv).max(memory_of(&self.g_lptv))
    }

    pub fn noise_memory(&self) -> usize {
        memory_of(&self.cw_cyclo).max(memory_of(&self.cu_cyclo))
    }

    /// `m̃ = max(m̃_ch, m̃_N)`.
    pub fn memory(&self) -> usize {
        self.channel_memory().max(self.noise_memory())
    }

    pub fn period_lcm(&self) -> usize {
        self.t_ch / gcd(self.t_ch, self.t_noise) * self.t_noise
    }

    /// Smallest common multiple of the periods exceeding `m̃`, times `multiplier`.
    pub fn block_size(&self, multiplier: usize) -> Result<usize> {
        if multiplier == 0 {
            return Err(Error::InvalidArgument("block multiplier must be at least 1".into()));
        }
        let l = self.period_lcm();
        let base = (self.memory() / l + 1) * l;
        Ok(base * multiplier)
    }

    /// Noiseless output `y[i] = Σ_τ h[i mod t, τ] x[i-τ]` from a zero state.
    pub fn simulate(taps: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let m = memory_of(taps);
        (0..x.len())
            .map(|i| {
                let mut acc = 0.0;
                for tau in 0..=m.min(i) {
                    acc += table_at(taps, i, tau) * x[i - tau];
                }
                acc
            })
            .collect()
    }
}

/// Autocovariance `r(p, τ) = E{W[p+τ] W[p]}` for any sign of `τ`.
pub fn cyclo_at(table: &[Vec<f64>], phase: usize, tau: isize) -> f64 {
    let t = table.len();
    if tau >= 0 {
        table_at(table, phase, tau as usize)
    } else {
        let lag = tau.unsigned_abs();
        let shifted = (phase % t + t * (lag / t + 1) - lag) % t;
        table_at(table, shifted, lag)
    }
}

#[derive(Debug, Clone)]
pub struct PlcBlockChannel {
    pub n_tilde: usize,
    pub mimo: MimoWiretapChannel,
}

fn block_taps(taps: &[Vec<f64>], n_tilde: usize) -> Result<MatrixTapSequence> {
    let m = memory_of(taps);
    let mut h0 = RMat::zeros(n_tilde, n_tilde);
    let mut h1 = RMat::zeros(n_tilde, n_tilde);
    for k1 in 0..n_tilde {
        for k2 in 0..n_tilde {
            let d = k1 as isize - k2 as isize;
            if (0..=m as isize).contains(&d) {
                h0[(k1, k2)] = table_at(taps, k1, d as usize);
            }
            let d1 = n_tilde as isize + d;
            if (1..=m as isize).contains(&d1) {
                h1[(k1, k2)] = table_at(taps, k1, d1 as usize);
            }
        }
    }
    MatrixTapSequence::new(vec![h0, h1])
}

/// `C̃[τ̃]_{k1,k2} = E{W[τ̃ñ + k1] W[k2]} = r(k2, τ̃ñ + k1 − k2)`.
pub fn block_noise_lag(table: &[Vec<f64>], n_tilde: usize, block_lag: usize) -> RMat {
    RMat::from_fn(n_tilde, n_tilde, |k1, k2| {
        let tau = (block_lag * n_tilde + k1) as isize - k2 as isize;
        cyclo_at(table, k2, tau)
    })
}

fn block_noise(table: &[Vec<f64>], n_tilde: usize, label: &str) -> Result<NoiseAutocorrelation> {
    let lags = vec![block_noise_lag(table, n_tilde, 0), block_noise_lag(table, n_tilde, 1)];
    NoiseAutocorrelation::with_label(lags, label)
}

pub fn build_block_channel(plc: &PlcChannel) -> Result<PlcBlockChannel> {
    build_block_channel_with(plc, 1)
}

/// Block image with `ñ` inflated by `multiplier`.
pub fn build_block_channel_with(plc: &PlcChannel, multiplier: usize) -> Result<PlcBlockChannel> {
    plc.validate()?;
    let n_tilde = plc.block_size(multiplier)?;
    if n_tilde <= plc.memory() {
        return Err(Error::PeriodTooShort(format!(
            "block size {n_tilde} does not exceed memory {}",
            plc.memory()
        )));
    }
    let mimo = MimoWiretapChannel::new(
        block_taps(&plc.h_lptv, n_tilde)?,
        block_taps(&plc.g_lptv, n_tilde)?,
        block_noise(&plc.cw_cyclo, n_tilde, "cw")?,
        block_noise(&plc.cu_cyclo, n_tilde, "cu")?,
        plc.power * n_tilde as f64,
    )?;
    Ok(PlcBlockChannel { n_tilde, mimo })
}

impl PlcBlockChannel {
    /// `Ỹ[b] = H̃[0] X̃[b] + H̃[1] X̃[b−1]` from a zero state, de-vectorized.
    /// Columns are visited in the order of increasing sample delay.
    pub fn simulate(taps: &MatrixTapSequence, x: &[f64]) -> Vec<f64> {
        let nt = taps.rows();
        let (h0, h1) = (&taps.taps()[0], &taps.taps()[1]);
        let blocks = x.len() / nt;
        let mut y = vec![0.0; blocks * nt];
        for b in 0..blocks {
            for k1 in 0..nt {
                let mut acc = 0.0;
                for k2 in (0..=k1).rev() {
                    let a = h0[(k1, k2)];
                    if a != 0.0 {
                        acc += a * x[b * nt + k2];
                    }
                }
                if b > 0 {
                    for k2 in (0..nt).rev() {
                        let a = h1[(k1, k2)];
                        if a != 0.0 {
                            acc += a * x[(b - 1) * nt + k2];
                        }
                    }
                }
                y[b * nt + k1] = acc;
            }
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct PlcCapacity {
    /// Bits per scalar channel use.
    pub capacity: f64,
    pub n_tilde: usize,
    pub block: CapacityResult,
}

/// `(1/ñ)` times the capacity of the block channel at `n` circular blocks.
pub fn plc_secrecy_capacity(plc: &PlcChannel, n: usize, opts: &MimoOptions) -> Result<PlcCapacity> {
    plc_secrecy_capacity_with(plc, n, 1, opts)
}

pub fn plc_secrecy_capacity_with(
    plc: &PlcChannel,
    n: usize,
    multiplier: usize,
    opts: &MimoOptions,
) -> Result<PlcCapacity> {
    if n <= 2 {
        return Err(Error::BlockTooShort { n, memory: 1 });
    }
    let block = build_block_channel_with(plc, multiplier)?;
    let result = circular_capacity(&block.mimo, n, opts)?;
    Ok(PlcCapacity {
        capacity: result.capacity / block.n_tilde as f64,
        n_tilde: block.n_tilde,
        block: result,
    })
}

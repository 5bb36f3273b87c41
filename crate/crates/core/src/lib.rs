//! Secrecy capacity of linear time-invariant Gaussian MIMO wiretap channels
//! with finite memory.
//!
//! The crate is organised around the frequency-domain view of the channel:
//!
//! * [`spectral`] holds the time-domain channel model, its frequency
//!   responses and the DFT-bin decomposition of the circularised channel.
//! * [`scalar`] solves the single-antenna case in closed form by
//!   frequency-domain waterfilling.
//! * [`mimo`] optimises per-bin input covariances and the cross-bin power
//!   split for general antenna counts.
//! * [`positivity`] decides whether the secrecy capacity is strictly positive.
//! * [`plc`] reduces a narrowband power-line channel (periodic taps,
//!   cyclostationary noise) to a block MIMO channel.
//! * [`oracles`] contains brute-force and Monte-Carlo reference
//!   implementations used to validate the solvers.
//! * [`io`] reads the JSON channel description files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dft;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mimo;
pub mod oracles;
pub mod plc;
pub mod positivity;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use mimo::{
    allocate_and_optimize, circular_capacity, convergence_study, maximize_bin, per_bin_rate,
    CapacityResult, CovarianceAllocation, MimoOptions, PsdCovariance,
};
pub use plc::{build_block_channel, plc_secrecy_capacity, PlcBlockChannel, PlcCapacity, PlcChannel};
pub use positivity::{max_gain_ratio, positivity_check, whiten, PositivityReport};
pub use scalar::{
    discrete_scalar_capacity, snr_densities, waterfill, SnrDensityGrid, WaterfillingSolution,
};
pub use spectral::{
    build_bins, circular_autocorrelation, frequency_response, noise_spectral_density, Bin,
    BinSet, MatrixTapSequence, MimoWiretapChannel, NoiseAutocorrelation, SpectralPoint,
};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wiretap_core::linalg::{self, CMat, RMat};
use wiretap_core::oracles::{self, OracleConfig};
use wiretap_core::spectral::{build_bins, Bin, MatrixTapSequence, MimoWiretapChannel, NoiseAutocorrelation};
use wiretap_core::{
    circular_capacity, convergence_study, maximize_bin, per_bin_rate, Error, MimoOptions,
};
use wiretap_core::mimo::{project_eigenvalues, project_psd_trace};

fn random_taps(rng: &mut ChaCha8Rng, rows: usize, cols: usize, memory: usize) -> MatrixTapSequence {
    MatrixTapSequence::new((0..=memory).map(|_| RMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))).collect())
        .unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng, nt: usize, nr: usize, ne: usize, memory: usize) -> MimoWiretapChannel {
    let h = random_taps(rng, nr, nt, memory);
    let g = random_taps(rng, ne, nt, memory);
    let cw = oracles::random_ma_noise(rng, nr, memory).unwrap();
    let cu = oracles::random_ma_noise(rng, ne, memory).unwrap();
    MimoWiretapChannel::new(h, g, cw, cu, 1.0).unwrap()
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize, trace: f64) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let q = &a * a.adjoint();
    let t = linalg::trace_re(&q);
    q * Complex64::new(trace / t, 0.0)
}

fn quick() -> MimoOptions {
    MimoOptions {
        restarts: 4,
        rho_grid: 32,
        ..Default::default()
    }
}

/// Independent projection: bisection on the shift `θ` in `Σ (d - θ)^+ = ρ`.
fn bisection_projection(d: &[f64], rho: f64) -> Vec<f64> {
    let clipped: Vec<f64> = d.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= rho {
        return clipped;
    }
    let (mut lo, mut hi) = (0.0, d.iter().cloned().fold(f64::MIN, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.iter().map(|&x| (x - mid).max(0.0)).sum::<f64>() > rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    d.iter().map(|&x| (x - hi).max(0.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projection_matches_bisection(d in proptest::collection::vec(-5.0f64..5.0, 1..6), rho in 0.0f64..8.0) {
        let ours = project_eigenvalues(&d, rho);
        let theirs = bisection_projection(&d, rho);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-9, "{ours:?} vs {theirs:?}");
        }
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d.len(),
            d.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let projected = project_psd_trace(&diag, rho);
        for (i, b) in theirs.iter().enumerate() {
            prop_assert!((projected[(i, i)].re - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn conjugate_bins_have_equal_rates(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 1, 2);
        let n = 9;
        let bins = build_bins(&ch, n).unwrap();
        for k in 1..n {
            let trace = rng.gen_range(0.1..50.0);
            let q = random_psd(&mut rng, 2, trace);
            let a = per_bin_rate(bins.bin(k), &q).unwrap();
            let b = per_bin_rate(bins.bin(n - k), &linalg::conj(&q)).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "bin {k}: {a} vs {b}");
        }
    }
}

#[test]
fn bin_optimum_is_monotone_in_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let opts = MimoOptions::default();
    for _ in 0..5 {
        let ch = random_channel(&mut rng, 2, 2, 2, 1);
        let bins = build_bins(&ch, 5).unwrap();
        let bin = bins.bin(1);
        let mut last = 0.0;
        for step in 0..8 {
            let rho = 0.05 * 3.0_f64.powi(step);
            let rate = maximize_bin(bin, rho, &opts).unwrap().rate;
            assert!(rate >= last - 1e-7, "rho {rho}: {rate} < {last}");
            last = rate;
        }
    }
}

#[test]
fn null_space_bin_matches_sphere_oracle() {
    let c = |re: f64| Complex64::new(re, 0.0);
    let bin = Bin::from_parts(
        CMat::from_row_slice(2, 2, &[c(2.0), c(0.3), c(0.1), c(0.5)]),
        CMat::from_row_slice(1, 2, &[c(0.0), c(1.0)]),
        linalg::identity(2),
        linalg::identity(1),
    );
    let cfg = OracleConfig {
        grid: 100,
        ..Default::default()
    };
    for rho in [0.5, 2.0, 10.0] {
        let ours = maximize_bin(&bin, rho, &MimoOptions::default()).unwrap().rate;
        let oracle = oracles::rank_one_sphere_oracle(&bin, rho, &cfg).unwrap();
        assert!(ours >= oracle - 1e-9, "rho {rho}: {ours} below oracle {oracle}");
        assert!(ours - oracle <= 1e-3, "rho {rho}: {ours} vs oracle {oracle}");
    }
}

#[test]
fn silent_eavesdropper_reduces_to_waterfilling() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let h = random_taps(&mut rng, 2, 2, 1);
    let g = MatrixTapSequence::new(vec![RMat::zeros(1, 2); 2]).unwrap();
    let cw = oracles::random_ma_noise(&mut rng, 2, 1).unwrap();
    let ch = MimoWiretapChannel::new(h, g, cw, NoiseAutocorrelation::white(1, 1.0).unwrap(), 1.0).unwrap();
    let n = 8;
    let bins = build_bins(&ch, n).unwrap();

    let gains: Vec<f64> = bins
        .bins()
        .iter()
        .flat_map(|b| {
            let l = linalg::cholesky(&b.cw).unwrap();
            let hw = l.l().solve_lower_triangular(&b.h).unwrap();
            linalg::hermitian_eigen(&(hw.adjoint() * hw)).0
        })
        .filter(|&g| g > 1e-14)
        .collect();
    let budget = (n * n) as f64;
    let (mut lo, mut hi) = (0.0, budget + gains.iter().map(|g| 1.0 / g).sum::<f64>());
    for _ in 0..200 {
        let nu = 0.5 * (lo + hi);
        if gains.iter().map(|g| (nu - 1.0 / g).max(0.0)).sum::<f64>() > budget {
            hi = nu;
        } else {
            lo = nu;
        }
    }
    let oracle = gains.iter().map(|g| 0.5 * (g * lo).max(1.0).log2()).sum::<f64>() / n as f64;

    let result = circular_capacity(&ch, n, &MimoOptions::default()).unwrap();
    assert!(result.capacity <= oracle + 1e-9, "{} above {oracle}", result.capacity);
    assert!(oracle - result.capacity <= 1e-3, "{} vs {oracle}", result.capacity);
}

#[test]
fn primal_below_dual_and_allocation_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let ch = random_channel(&mut rng, 2, 2, 1, 1);
    let n = 8;
    let result = circular_capacity(&ch, n, &quick()).unwrap();
    result.allocation.validate().unwrap();
    assert!(result.allocation.total_trace() <= (n * n) as f64 * (1.0 + 1e-9));
    let dual = result.dual_bound.unwrap();
    assert!(result.capacity <= dual + 1e-12);
    assert!(result.capacity >= 0.0);
    for k in 1..n {
        assert!((result.per_bin_rates[k] - result.per_bin_rates[n - k]).abs() <= 1e-10);
    }
    let bins = build_bins(&ch, n).unwrap();
    let recomputed: f64 = (0..n)
        .map(|k| per_bin_rate(bins.bin(k), result.allocation.mats[k].q()).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((recomputed - result.capacity).abs() <= 1e-9);
}

#[test]
fn parallel_and_serial_runs_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let ch = random_channel(&mut rng, 2, 1, 2, 1);
    let serial = circular_capacity(&ch, 6, &quick()).unwrap();
    let parallel = circular_capacity(&ch, 6, &MimoOptions { parallel: true, ..quick() }).unwrap();
    let again = circular_capacity(&ch, 6, &quick()).unwrap();
    assert_eq!(serial.capacity, parallel.capacity);
    assert_eq!(serial.allocation, parallel.allocation);
    assert_eq!(serial.capacity, again.capacity);
}

#[test]
fn memoryless_channel_has_flat_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let ch = random_channel(&mut rng, 2, 2, 1, 0);
    let rows = convergence_study(&ch, &[3, 5, 8], 1.0, &quick()).unwrap();
    for r in &rows[1..] {
        assert!((r.capacity - rows[0].capacity).abs() <= 1e-6, "{rows:?}");
    }
}

#[test]
fn short_blocks_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let ch = random_channel(&mut rng, 1, 1, 1, 2);
    assert!(matches!(
        convergence_study(&ch, &[16, 4], 1.0, &quick()),
        Err(Error::BlockTooShort { n: 4, memory: 2 })
    ));
    assert!(matches!(circular_capacity(&ch, 3, &quick()), Err(Error::BlockTooShort { .. })));
}

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wiretap_core::io;
use wiretap_core::oracles::{self, OracleConfig};
use wiretap_core::plc::{block_noise_lag, build_block_channel_with, plc_secrecy_capacity_with};
use wiretap_core::{build_block_channel, plc_secrecy_capacity, Error, MimoOptions, PlcBlockChannel, PlcChannel};

fn sample() -> PlcChannel {
    io::read_plc(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/plc_sample.json")).unwrap()
}

fn table(rng: &mut ChaCha8Rng, phases: usize, memory: usize) -> Vec<Vec<f64>> {
    (0..phases)
        .map(|_| (0..=memory).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn block_simulation_is_bit_exact(seed in any::<u64>(), t_ch in 1usize..5, memory in 0usize..6, mult in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plc = PlcChannel {
            t_ch,
            t_noise: 1,
            power: 1.0,
            h_lptv: table(&mut rng, t_ch, memory),
            g_lptv: table(&mut rng, 1, memory),
            cw_cyclo: vec![vec![1.0]],
            cu_cyclo: vec![vec![1.0]],
        };
        let block = build_block_channel_with(&plc, mult).unwrap();
        prop_assert!(block.n_tilde > plc.memory());
        prop_assert_eq!(block.n_tilde % t_ch, 0);
        let x: Vec<f64> = (0..50 * block.n_tilde).map(|_| rng.gen_range(-1.0..1.0)).collect();
        prop_assert_eq!(PlcChannel::simulate(&plc.h_lptv, &x), PlcBlockChannel::simulate(block.mimo.h(), &x));
        prop_assert_eq!(PlcChannel::simulate(&plc.g_lptv, &x), PlcBlockChannel::simulate(block.mimo.g(), &x));
    }
}

#[test]
fn decimated_noise_matches_monte_carlo() {
    let filter = vec![vec![1.0, -0.6], vec![0.5, 0.9, 0.2]];
    let plc = PlcChannel {
        t_ch: 1,
        t_noise: 2,
        power: 1.0,
        h_lptv: vec![vec![1.0, 0.3]],
        g_lptv: vec![vec![0.4]],
        cw_cyclo: oracles::lptv_ma_covariance(&filter, 2),
        cu_cyclo: vec![vec![1.0]],
    };
    let block = build_block_channel(&plc).unwrap();
    let cfg = OracleConfig {
        seed: 77,
        ..Default::default()
    };
    let mc = oracles::mc_decimated_noise(&filter, block.n_tilde, &cfg).unwrap();
    for (lag, est) in mc.iter().enumerate() {
        let target = block_noise_lag(&plc.cw_cyclo, block.n_tilde, lag).map(|v| Complex64::new(v, 0.0));
        let z = est.max_z(&target);
        assert!(z < 5.0, "lag {lag}: max |z| {z}");
    }
}

#[test]
fn capacity_is_stable_under_block_doubling() {
    let plc = sample();
    let opts = MimoOptions::default();
    let single = plc_secrecy_capacity_with(&plc, 32, 1, &opts).unwrap();
    let double = plc_secrecy_capacity_with(&plc, 16, 2, &opts).unwrap();
    assert_eq!(double.n_tilde, 2 * single.n_tilde);
    assert!(
        (single.capacity - double.capacity).abs() <= 5e-3,
        "{} vs {}",
        single.capacity,
        double.capacity
    );
}

#[test]
fn block_power_is_scaled_by_block_size() {
    let plc = sample();
    let n = 8;
    let result = plc_secrecy_capacity(&plc, n, &MimoOptions::default()).unwrap();
    let nt = result.n_tilde as f64;
    let budget = (n * n) as f64 * plc.power * nt;
    assert!((result.block.allocation.total_budget - budget).abs() <= 1e-9 * budget);
    assert!(result.block.allocation.total_trace() <= budget * (1.0 + 1e-9));
    let per_use = result.block.allocation.total_trace() / ((n * n) as f64 * nt);
    assert!(per_use <= plc.power * (1.0 + 1e-9));
    assert!((result.capacity * nt - result.block.capacity).abs() <= 1e-12);
}

#[test]
fn identical_links_have_zero_capacity() {
    let mut plc = sample();
    plc.g_lptv = plc.h_lptv.clone();
    plc.cu_cyclo = plc.cw_cyclo.clone();
    let result = plc_secrecy_capacity(&plc, 8, &MimoOptions::default()).unwrap();
    assert!(result.capacity < 1e-9, "{}", result.capacity);
}

#[test]
fn invalid_multiplier_and_short_blocks() {
    let plc = sample();
    assert!(build_block_channel_with(&plc, 0).is_err());
    assert!(matches!(
        plc_secrecy_capacity(&plc, 2, &MimoOptions::default()),
        Err(Error::BlockTooShort { .. })
    ));
}

//! End-to-end acceptance checks. Each check prints one PASS/FAIL line.
//!
//! Runs without the libtest harness so the lines are always shown:
//! `cargo test -p wiretap-core --test acceptance`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wiretap_core::linalg::{self, CMat, RMat};
use wiretap_core::mimo::{circular_capacity, BinObjective, MimoOptions};
use wiretap_core::oracles::{self, OracleConfig};
use wiretap_core::plc::{block_noise_lag, build_block_channel, plc_secrecy_capacity, PlcBlockChannel, PlcChannel};
use wiretap_core::scalar::{discrete_scalar_capacity, snr_densities, waterfill, DEFAULT_TOL};
use wiretap_core::spectral::{noise_spectral_density, MatrixTapSequence, MimoWiretapChannel};
use wiretap_core::{io, positivity_check};

/// Checks that are computed at their stated tolerance but known to miss it.
/// The two-tap example's quoted capacity of 0.21 is not reproduced by the
/// stated channel at unit power (0.2213); see the README.
const KNOWN_MISSES: &[&str] = &["two-tap example capacity"];

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn two_tap() -> MimoWiretapChannel {
    io::read_channel(&data("two_tap.json")).unwrap()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn two_tap_capacity() -> Outcome {
    let start = Instant::now();
    let ch = two_tap();
    let sol = waterfill(&snr_densities(&ch, 2048).unwrap(), ch.power(), DEFAULT_TOL).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    Outcome {
        name: "two-tap example capacity",
        passed: (sol.capacity - 0.21).abs() <= 0.01 && elapsed < 1.0,
        detail: format!("C = {:.5} bits (target 0.21 +- 0.01), {elapsed:.3} s", sol.capacity),
    }
}

fn two_tap_snr() -> Outcome {
    let ch = two_tap();
    let grid = snr_densities(&ch, 2048).unwrap();
    let (r, e) = grid.mean_snr(ch.power());
    let (r, e) = (db(r), db(e));
    Outcome {
        name: "two-tap example mean SNRs",
        passed: (r - 3.0).abs() <= 0.3 && (e - 13.0).abs() <= 0.3,
        detail: format!("SNR_r = {r:.3} dB (3 +- 0.3), SNR_e = {e:.3} dB (13 +- 0.3)"),
    }
}

fn positivity_boundary() -> Outcome {
    let report = positivity_check(&two_tap(), 4096, None).unwrap();
    let boundary = (8.61_f64 / 10.61).acos();
    let crossings = report.crossings();
    let hit = crossings.len() == 1 && (crossings[0] - boundary).abs() <= report.spacing();
    Outcome {
        name: "positivity boundary",
        passed: hit && report.verdict,
        detail: format!(
            "crossings {crossings:?}, expected {boundary:.6} +- {:.2e}, verdict {}",
            report.spacing(),
            report.verdict
        ),
    }
}

fn random_scalar_channel(rng: &mut ChaCha8Rng) -> MimoWiretapChannel {
    let m = rng.gen_range(0..=4);
    let taps = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        (0..=m).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let h = taps(rng, 1.0);
    let g = taps(rng, 0.8);
    let noise = |rng: &mut ChaCha8Rng| {
        let filter: Vec<RMat> = (0..=rng.gen_range(0..=m))
            .map(|_| RMat::from_element(1, 1, rng.gen_range(-1.0..1.0)))
            .collect();
        oracles::ma_autocorrelation(&filter, 0.1).unwrap()
    };
    let (cw, cu) = (noise(rng), noise(rng));
    MimoWiretapChannel::new(
        MatrixTapSequence::scalar(&h).unwrap(),
        MatrixTapSequence::scalar(&g).unwrap(),
        cw,
        cu,
        rng.gen_range(0.2..5.0),
    )
    .unwrap()
}

fn waterfill_vs_oracle() -> Outcome {
    const LEN: usize = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    let mut passed = 0;
    for _ in 0..50 {
        let ch = random_scalar_channel(&mut rng);
        // A half-circle grid with spacing 2π/LEN integrates exactly like the
        // uniform full-circle average the oracle uses.
        let grid = snr_densities(&ch, LEN / 2 + 1).unwrap();
        let wf = waterfill(&grid, ch.power(), DEFAULT_TOL).unwrap().capacity;
        let (ar, ae) = oracles::circle_snr_lists(&ch, LEN).unwrap();
        let oc = oracles::scalar_grid_oracle(&ar, &ae, ch.power(), &cfg).unwrap();
        let d = (wf - oc).abs();
        worst = worst.max(d);
        if d < 1e-4 {
            passed += 1;
        }
    }
    Outcome {
        name: "waterfilling vs grid oracle",
        passed: passed == 50,
        detail: format!("{passed}/50 within 1e-4, worst gap {worst:.2e}"),
    }
}

fn noise_dft_covariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = OracleConfig {
        seed: 5,
        samples: 100_000,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    for _ in 0..10 {
        let dim = rng.gen_range(1..=3);
        let memory = rng.gen_range(0..=2);
        let acorr = oracles::random_ma_noise(&mut rng, dim, memory).unwrap();
        let n = rng.gen_range(2 * memory + 1..=10).max(3);
        let k = rng.gen_range(0..n);
        let target = noise_spectral_density(&acorr, 2.0 * PI * k as f64 / n as f64)
            .unwrap()
            .scale(n as f64);
        let est = oracles::mc_noise_dft_covariance(&acorr, n, k, &cfg).unwrap();
        worst = worst.max(est.max_z(&target));
        let k2 = (k + 1 + rng.gen_range(0..n - 1)) % n;
        let cross = oracles::mc_cross_bin_covariance(&acorr, n, k, k2, &cfg).unwrap();
        worst_cross = worst_cross.max(cross.max_z(&CMat::zeros(dim, dim)));
    }
    Outcome {
        name: "DFT noise covariance",
        passed: worst < 5.0 && worst_cross < 5.0,
        detail: format!("max |z| own bin {worst:.3}, cross bin {worst_cross:.3} (limit 5)"),
    }
}

fn riemann_convergence() -> Outcome {
    let ch = two_tap();
    let ns = [64, 128, 256, 512, 1024];
    let caps: Vec<f64> = ns
        .iter()
        .map(|&n| discrete_scalar_capacity(&ch, n, DEFAULT_TOL).unwrap().capacity)
        .collect();
    let diffs: Vec<f64> = caps.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last = diffs[diffs.len() - 1];
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        name: "Riemann convergence",
        passed: last < 1e-3 && decreasing,
        detail: format!("capacities {caps:.6?}, |differences| {diffs:?}"),
    }
}

fn mimo_scalar_consistency() -> Outcome {
    let ch = two_tap();
    let scalar = waterfill(&snr_densities(&ch, 2048).unwrap(), ch.power(), DEFAULT_TOL)
        .unwrap()
        .capacity;
    let opts = MimoOptions {
        restarts: 8,
        seed: 1,
        ..Default::default()
    };
    let res = circular_capacity(&ch, 512, &opts).unwrap();
    let gap = (res.capacity - scalar).abs();
    Outcome {
        name: "MIMO solver on scalar embedding",
        passed: gap <= 5e-3,
        detail: format!(
            "mimo {:.5} (dual {:.5}) vs scalar {scalar:.5}, gap {gap:.2e}",
            res.capacity,
            res.dual_bound.unwrap()
        ),
    }
}

fn random_cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_hpd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let x = random_cmat(rng, n, n);
    &x * x.adjoint() + linalg::identity(n).scale(0.1)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nt = rng.gen_range(1..=3);
        let nr = rng.gen_range(1..=3);
        let ne = rng.gen_range(1..=3);
        let bin = wiretap_core::Bin::from_parts(
            random_cmat(&mut rng, nr, nt),
            random_cmat(&mut rng, ne, nt),
            random_hpd(&mut rng, nr),
            random_hpd(&mut rng, ne),
        );
        let obj = BinObjective::new(&bin).unwrap();
        let q = random_hpd(&mut rng, nt);
        let e = linalg::hermitian_part(&random_cmat(&mut rng, nt, nt));
        let e = e.unscale(linalg::frobenius(&e));
        let analytic = linalg::inner_re(&obj.gradient(&q), &e);
        let h = 1e-5 * linalg::trace_re(&q);
        let numeric = (obj.value(&(&q + e.scale(h))) - obj.value(&(&q - e.scale(h)))) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(rel);
        if rel <= 1e-4 {
            passed += 1;
        }
    }
    Outcome {
        name: "per-bin gradient vs finite differences",
        passed: passed == 100,
        detail: format!("{passed}/100 within 1e-4 relative, worst {worst:.2e}"),
    }
}

fn plc_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let taps = |rng: &mut ChaCha8Rng, t: usize, m: usize| -> Vec<Vec<f64>> {
        (0..t).map(|_| (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    };
    let filter = vec![vec![1.0, 0.5, -0.2], vec![0.7, -0.3], vec![1.2, 0.4, 0.3]];
    let plc = PlcChannel {
        t_ch: 2,
        t_noise: 3,
        power: 1.0,
        h_lptv: taps(&mut rng, 2, 3),
        g_lptv: taps(&mut rng, 2, 2),
        cw_cyclo: oracles::lptv_ma_covariance(&filter, 2),
        cu_cyclo: vec![vec![1.0]],
    };
    let block = build_block_channel(&plc).unwrap();
    let x: Vec<f64> = (0..1000 * block.n_tilde).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bitwise = PlcChannel::simulate(&plc.h_lptv, &x) == PlcBlockChannel::simulate(block.mimo.h(), &x)
        && PlcChannel::simulate(&plc.g_lptv, &x) == PlcBlockChannel::simulate(block.mimo.g(), &x);

    let cfg = OracleConfig {
        seed: 8,
        ..Default::default()
    };
    let mc = oracles::mc_decimated_noise(&filter, block.n_tilde, &cfg).unwrap();
    let z = (0..2)
        .map(|lag| {
            let target = block_noise_lag(&plc.cw_cyclo, block.n_tilde, lag).map(|v| Complex64::new(v, 0.0));
            mc[lag].max_z(&target)
        })
        .fold(0.0, f64::max);

    let lti = PlcChannel {
        t_ch: 1,
        t_noise: 1,
        power: 1.0,
        h_lptv: vec![vec![1.0, 1.0]],
        g_lptv: vec![vec![3.1, -3.1]],
        cw_cyclo: vec![vec![1.0]],
        cu_cyclo: vec![vec![1.0]],
    };
    let scalar = waterfill(&snr_densities(&two_tap(), 2048).unwrap(), 1.0, DEFAULT_TOL)
        .unwrap()
        .capacity;
    let plc_cap = plc_secrecy_capacity(&lti, 256, &MimoOptions::default()).unwrap().capacity;
    let gap = (plc_cap - scalar).abs();
    Outcome {
        name: "PLC block equivalence",
        passed: bitwise && z < 5.0 && gap <= 5e-3,
        detail: format!(
            "bit-exact over 1000 blocks: {bitwise}; noise max |z| {z:.3}; LTI case {plc_cap:.5} vs {scalar:.5} (gap {gap:.2e})"
        ),
    }
}

fn trivial_zero() -> Outcome {
    let ch = io::read_channel(&data("identical.json")).unwrap();
    let scalar = waterfill(&snr_densities(&ch, 2048).unwrap(), ch.power(), DEFAULT_TOL)
        .unwrap()
        .capacity;
    let scalar_verdict = positivity_check(&ch, 4096, None).unwrap().verdict;
    let mimo = circular_capacity(&ch, 64, &MimoOptions::default()).unwrap().capacity;
    let plc = PlcChannel {
        t_ch: 2,
        t_noise: 2,
        power: 1.0,
        h_lptv: vec![vec![1.0, 0.4], vec![0.6, -0.3]],
        g_lptv: vec![vec![1.0, 0.4], vec![0.6, -0.3]],
        cw_cyclo: vec![vec![1.25, 0.3], vec![0.6, 0.15]],
        cu_cyclo: vec![vec![1.25, 0.3], vec![0.6, 0.15]],
    };
    let plc_cap = plc_secrecy_capacity(&plc, 16, &MimoOptions::default()).unwrap().capacity;
    let plc_verdict = positivity_check(&build_block_channel(&plc).unwrap().mimo, 256, None)
        .unwrap()
        .verdict;
    Outcome {
        name: "identical channels give zero",
        passed: scalar < 1e-9 && mimo < 1e-9 && plc_cap < 1e-9 && !scalar_verdict && !plc_verdict,
        detail: format!(
            "scalar {scalar:.1e}, mimo {mimo:.1e}, plc {plc_cap:.1e}; positive verdicts: scalar {scalar_verdict}, plc {plc_verdict}"
        ),
    }
}

fn main() {
    let checks: Vec<fn() -> Outcome> = vec![
        two_tap_capacity,
        two_tap_snr,
        positivity_boundary,
        waterfill_vs_oracle,
        noise_dft_covariance,
        riemann_convergence,
        mimo_scalar_consistency,
        gradient_check,
        plc_equivalence,
        trivial_zero,
    ];
    println!();
    let mut unexpected = Vec::new();
    for check in checks {
        let start = Instant::now();
        let out = check();
        println!(
            "[{}] {}: {} ({:.1} s)",
            if out.passed { "PASS" } else { "FAIL" },
            out.name,
            out.detail,
            start.elapsed().as_secs_f64()
        );
        if !out.passed && !KNOWN_MISSES.contains(&out.name) {
            unexpected.push(out.name);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

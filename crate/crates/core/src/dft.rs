//! Multivariate DFT of a length-`n` sequence of vectors.
//!
//! Forward transform uses the negative exponent with no scaling,
//! `q̂[k] = Σ_i q[i] e^{-j2πik/n}`; the inverse carries the `1/n`. Every
//! entry of the vector is transformed independently.

use num_complex::Complex64;
use rustfft::FftPlanner;

fn transform(seq: &[Vec<Complex64>], inverse: bool) -> Vec<Vec<Complex64>> {
    let n = seq.len();
    if n == 0 {
        return Vec::new();
    }
    let dim = seq[0].len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for l in 0..dim {
        for (i, v) in seq.iter().enumerate() {
            buf[i] = v[l];
        }
        fft.process(&mut buf);
        for (k, v) in out.iter_mut().enumerate() {
            v[l] = buf[k] * scale;
        }
    }
    out
}

pub fn dft(seq: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    transform(seq, false)
}

pub fn idft(seq: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    transform(seq, true)
}

pub fn dft_real(seq: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let lifted: Vec<Vec<Complex64>> = seq
        .iter()
        .map(|v| v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .collect();
    dft(&lifted)
}

/// Sum of squared magnitudes over a whole sequence.
pub fn energy(seq: &[Vec<Complex64>]) -> f64 {
    seq.iter().flatten().map(|z| z.norm_sqr()).sum()
}

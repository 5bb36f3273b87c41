//! Browser bindings for a scalar channel with white unit-variance noise.
//!
//! Each export takes plain tap lists and returns plain numbers so the same
//! functions run natively in tests.

use wasm_bindgen::prelude::*;
use wiretap_core::{
    discrete_scalar_capacity, positivity_check, snr_densities, waterfill, MimoWiretapChannel,
};

fn channel(h: &[f64], g: &[f64], power: f64) -> Result<MimoWiretapChannel, String> {
    let m = h.len().max(g.len());
    if m == 0 {
        return Err("tap lists must not be empty".into());
    }
    let pad = |t: &[f64]| {
        let mut v = t.to_vec();
        v.resize(m, 0.0);
        v
    };
    MimoWiretapChannel::scalar(&pad(h), &pad(g), &[1.0], &[1.0], power).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Spectrum {
    capacity: f64,
    omegas: Vec<f64>,
    alpha_r: Vec<f64>,
    alpha_e: Vec<f64>,
    c_x: Vec<f64>,
}

#[wasm_bindgen]
impl Spectrum {
    /// Bits per channel use.
    #[wasm_bindgen(getter)]
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    #[wasm_bindgen(getter)]
    pub fn omegas(&self) -> Vec<f64> {
        self.omegas.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn alpha_r(&self) -> Vec<f64> {
        self.alpha_r.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn alpha_e(&self) -> Vec<f64> {
        self.alpha_e.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn c_x(&self) -> Vec<f64> {
        self.c_x.clone()
    }
}

/// Optimal input spectrum on `[0, π]` and the resulting capacity.
#[wasm_bindgen]
pub fn waterfill_spectrum(h: Vec<f64>, g: Vec<f64>, power: f64, grid: usize) -> Result<Spectrum, String> {
    let ch = channel(&h, &g, power)?;
    let dens = snr_densities(&ch, grid).map_err(|e| e.to_string())?;
    let sol = waterfill(&dens, power, 1e-10).map_err(|e| e.to_string())?;
    Ok(Spectrum {
        capacity: sol.capacity,
        omegas: dens.omegas,
        alpha_r: dens.alpha_r,
        alpha_e: dens.alpha_e,
        c_x: sol.spectrum,
    })
}

/// Gain ratio `|H(ω)| / |G(ω)|` on `ω_i = πi/grid`; infinite where `G` vanishes.
#[wasm_bindgen]
pub fn positivity_curve(h: Vec<f64>, g: Vec<f64>, grid: usize) -> Result<Vec<f64>, String> {
    let ch = channel(&h, &g, 1.0)?;
    Ok(positivity_check(&ch, grid, None).map_err(|e| e.to_string())?.ratio)
}

/// Discrete `n`-block capacities for `n = 8, 16, …` up to `n_max`, as
/// interleaved `[n, capacity]` pairs.
#[wasm_bindgen]
pub fn convergence_curve(h: Vec<f64>, g: Vec<f64>, power: f64, n_max: usize) -> Result<Vec<f64>, String> {
    let ch = channel(&h, &g, power)?;
    let mut out = Vec::new();
    let mut n = 8;
    while n <= n_max {
        if n > 2 * ch.memory() {
            let c = discrete_scalar_capacity(&ch, n, 1e-10).map_err(|e| e.to_string())?.capacity;
            out.extend([n as f64, c]);
        }
        n *= 2;
    }
    Ok(out)
}

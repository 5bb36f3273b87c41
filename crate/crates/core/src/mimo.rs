//! Secrecy capacity of the general finite-memory MIMO wiretap channel through
//! its `n`-block circular discretization.
//!
//! Each independent DFT bin `k ∈ 0..=⌊n/2⌋` is a memoryless MIMO wiretap
//! channel. For a trace budget `ρ` the best secrecy rate
//! `R_k(ρ) = max_{Q ⪰ 0, tr Q ≤ ρ} ½ log₂ det(I + Ĥ Q Ĥ^H Ĉ_W^{-1}) / det(I + Ĝ Q Ĝ^H Ĉ_U^{-1})`
//! is searched by projected gradient ascent from several starting points
//! (the problem is not concave). The budget `n²P` is then split across bins
//! by bisection on a price `μ`, each bin picking the best `R_k(ρ) - μρ`
//! from a tabulated, locally refined `ρ` grid. Bins above `n/2` are filled
//! with the conjugates of their mirror bins.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::spectral::{build_bins, is_real_bin, Bin, BinSet, MimoWiretapChannel};

#[derive(Debug, Clone)]
pub struct MimoOptions {
    /// Starting points per inner solve: zero, scaled identity, the rank-one
    /// generalized-eigenvector beamformer, then random Wishart draws.
    pub restarts: usize,
    pub seed: u64,
    /// Stationarity tolerance of the inner ascent, as a Frank–Wolfe gap in bits.
    pub tol: f64,
    pub max_iter: usize,
    /// Points of the logarithmic `ρ` grid per bin.
    pub rho_grid: usize,
    /// Decades spanned by the `ρ` grid below the whole budget.
    pub rho_decades: f64,
    pub refinements: usize,
    /// Points inserted between neighbours at each refinement.
    pub refine_points: usize,
    /// Evaluate bins on the rayon pool. Results do not depend on this flag.
    pub parallel: bool,
}

impl Default for MimoOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            tol: 1e-8,
            max_iter: 2000,
            rho_grid: 64,
            rho_decades: 6.0,
            refinements: 2,
            refine_points: 7,
            parallel: false,
        }
    }
}

pub const DEFAULT_BINS: usize = 512;

/// Hermitian PSD input covariance with a trace budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdCovariance {
    q: CMat,
    trace_budget: f64,
}

impl PsdCovariance {
    pub fn new(q: CMat, trace_budget: f64) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        let scale = linalg::frobenius(&q).max(1.0);
        let defect = linalg::hermitian_defect(&q);
        if defect > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!("covariance not Hermitian (defect {defect:.3e})")));
        }
        let trace = linalg::trace_re(&q);
        let (vals, _) = linalg::hermitian_eigen(&q);
        if vals.first().is_some_and(|&v| v < -1e-9 * trace.abs().max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidArgument("covariance has a negative eigenvalue".into()));
        }
        if trace > trace_budget * (1.0 + 1e-9) + f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument(format!(
                "covariance trace {trace} exceeds budget {trace_budget}"
            )));
        }
        Ok(Self { q, trace_budget })
    }

    pub fn zero(nt: usize) -> Self {
        Self {
            q: CMat::zeros(nt, nt),
            trace_budget: 0.0,
        }
    }

    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.q)
    }

    pub fn trace_budget(&self) -> f64 {
        self.trace_budget
    }

    pub fn conj(&self) -> Self {
        Self {
            q: linalg::conj(&self.q),
            trace_budget: self.trace_budget,
        }
    }
}

/// Per-bin covariances `Ĉ_X̃[0..n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAllocation {
    pub n: usize,
    pub mats: Vec<PsdCovariance>,
    pub total_budget: f64,
}

impl CovarianceAllocation {
    pub fn total_trace(&self) -> f64 {
        self.mats.iter().map(PsdCovariance::trace).sum()
    }

    /// Checks conjugate symmetry, realness of the self-conjugate bins and the
    /// total trace budget.
    pub fn validate(&self) -> Result<()> {
        if self.mats.len() != self.n {
            return Err(Error::DimensionMismatch("allocation length differs from n".into()));
        }
        for k in (self.n / 2 + 1)..self.n {
            if self.mats[k].q != linalg::conj(&self.mats[self.n - k].q) {
                return Err(Error::InvalidArgument(format!("bin {k} is not the conjugate of its mirror")));
            }
        }
        for k in 0..self.n {
            if is_real_bin(self.n, k) && linalg::max_imag(&self.mats[k].q) != 0.0 {
                return Err(Error::InvalidArgument(format!("bin {k} must be real")));
            }
        }
        if self.total_trace() > self.total_budget * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument("allocation exceeds total budget".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub inner_solves: usize,
    pub total_iterations: usize,
    /// Largest spread between stationary restarts over all inner solves.
    pub max_restart_spread: f64,
    pub bisection_steps: usize,
    pub mu: f64,
    /// Budget left unused by the grid-quantized primal allocation.
    pub unused_budget: f64,
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Bits per channel use.
    pub capacity: f64,
    pub allocation: CovarianceAllocation,
    /// Lagrangian bound over the evaluated per-bin rate tables.
    pub dual_bound: Option<f64>,
    /// `½ log₂ ψ̂[k]` for every `k ∈ 0..n`.
    pub per_bin_rates: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Noise-whitened bin: `det(I + Ĥ Q Ĥ^H Ĉ_W^{-1}) = det(I + H_w Q H_w^H)`
/// with `H_w = L_W^{-1} Ĥ`, `Ĉ_W = L_W L_W^H`.
#[derive(Debug, Clone)]
pub struct BinObjective {
    hw: CMat,
    gw: CMat,
    real: bool,
}

impl BinObjective {
    pub fn new(bin: &Bin) -> Result<Self> {
        if bin.h.ncols() != bin.g.ncols() {
            return Err(Error::DimensionMismatch("bin responses differ in input dimension".into()));
        }
        let hw = linalg::whiten_with_cholesky(&bin.cw, &bin.h)
            .ok_or_else(|| Error::SingularNoise(format!("Cholesky of Ĉ_W failed at bin {}", bin.k)))?;
        let gw = linalg::whiten_with_cholesky(&bin.cu, &bin.g)
            .ok_or_else(|| Error::SingularNoise(format!("Cholesky of Ĉ_U failed at bin {}", bin.k)))?;
        let real = [&bin.h, &bin.g, &bin.cw, &bin.cu]
            .iter()
            .all(|m| linalg::max_imag(m) == 0.0);
        Ok(Self { hw, gw, real })
    }

    pub fn nt(&self) -> usize {
        self.hw.ncols()
    }

    /// Data is real, so the search runs over real symmetric matrices.
    pub fn is_real(&self) -> bool {
        self.real
    }

    fn ln_det_term(w: &CMat, q: &CMat) -> f64 {
        let m = linalg::identity(w.nrows()) + w * q * w.adjoint();
        linalg::ln_det_hpd(&m).unwrap_or(f64::NEG_INFINITY)
    }

    /// Rate in bits.
    pub fn value(&self, q: &CMat) -> f64 {
        (Self::ln_det_term(&self.hw, q) - Self::ln_det_term(&self.gw, q)) / (2.0 * LN_2)
    }

    fn grad_term(w: &CMat, q: &CMat) -> CMat {
        let m = linalg::identity(w.nrows()) + w * q * w.adjoint();
        match linalg::cholesky(&m) {
            Some(chol) => w.adjoint() * chol.solve(w),
            None => CMat::zeros(w.ncols(), w.ncols()),
        }
    }

    /// Gradient with respect to `Q` under the inner product `Re tr(A^H B)`.
    pub fn gradient(&self, q: &CMat) -> CMat {
        let g = Self::grad_term(&self.hw, q) - Self::grad_term(&self.gw, q);
        let g = linalg::hermitian_part(&g).scale(1.0 / (2.0 * LN_2));
        if self.real {
            g.map(|z| Complex64::new(z.re, 0.0))
        } else {
            g
        }
    }

    /// Rank-one covariance `ρ v v^H` with `v` the top generalized eigenvector
    /// of `(I + ρ H_w^H H_w, I + ρ G_w^H G_w)`; the best beamformer at full power.
    pub fn rank_one_start(&self, rho: f64) -> CMat {
        let nt = self.nt();
        let a = linalg::identity(nt) + (self.hw.adjoint() * &self.hw).scale(rho);
        let b = linalg::identity(nt) + (self.gw.adjoint() * &self.gw).scale(rho);
        let chol = linalg::cholesky(&b).expect("I + ρB is positive definite");
        let l = chol.l();
        let li_a = l.solve_lower_triangular(&a).expect("triangular solve");
        let m = l
            .solve_lower_triangular(&li_a.adjoint())
            .expect("triangular solve")
            .adjoint();
        let (_, vecs) = linalg::hermitian_eigen(&m);
        let u = vecs.column(nt - 1).into_owned();
        let v = l.adjoint().solve_upper_triangular(&u).expect("triangular solve");
        let norm = v.norm();
        let v = v.unscale(norm);
        let q = (&v * v.adjoint()).scale(rho);
        self.clean(q)
    }

    fn clean(&self, q: CMat) -> CMat {
        let q = linalg::hermitian_part(&q);
        if self.real {
            q.map(|z| Complex64::new(z.re, 0.0))
        } else {
            q
        }
    }
}

/// Frobenius projection onto `{Q ⪰ 0, tr Q ≤ ρ}`: eigenvalues are clipped at
/// zero and, if their sum still exceeds `ρ`, shifted down by a common water
/// level.
pub fn project_psd_trace(q: &CMat, rho: f64) -> CMat {
    let (vals, vecs) = linalg::hermitian_eigen(q);
    let shifted = project_eigenvalues(&vals, rho);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &s) in shifted.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    let out = linalg::hermitian_part(&(&scaled * vecs.adjoint()));
    let tr = linalg::trace_re(&out);
    if tr > rho && tr > 0.0 {
        out.scale(rho / tr)
    } else {
        out
    }
}

/// Euclidean projection of a vector onto `{x ≥ 0, Σx ≤ ρ}`.
pub fn project_eigenvalues(vals: &[f64], rho: f64) -> Vec<f64> {
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= rho {
        return clipped;
    }
    let mut desc: Vec<f64> = vals.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in desc.iter().enumerate() {
        cum += u;
        let t = (cum - rho) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    vals.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// `½ log₂ ψ̂[k]` for a given input covariance; may be negative.
pub fn per_bin_rate(bin: &Bin, q: &CMat) -> Result<f64> {
    let obj = BinObjective::new(bin)?;
    if q.nrows() != obj.nt() || q.ncols() != obj.nt() {
        return Err(Error::DimensionMismatch("covariance size differs from input dimension".into()));
    }
    Ok(obj.value(q))
}

#[derive(Debug, Clone)]
pub struct BinOptimum {
    pub rate: f64,
    pub q: PsdCovariance,
    pub iterations: usize,
    /// Final rate reached from each starting point.
    pub restart_rates: Vec<f64>,
    /// Spread between the best and worst restarts that reached a stationary
    /// point; zero with fewer than two.
    pub stationary_spread: f64,
}

struct Ascent {
    q: CMat,
    value: f64,
    iterations: usize,
    stationary: bool,
}

/// Progress is measured over this many iterations. A run stops when it
/// gains less than `tol` bits per window, or when even linear progress at
/// its current pace could not reach `incumbent` within `max_iter`.
const STALL_WINDOW: usize = 50;

fn ascend(obj: &BinObjective, start: CMat, rho: f64, tol: f64, max_iter: usize, incumbent: f64) -> Ascent {
    const ARMIJO: f64 = 1e-4;
    let mut q = obj.clean(project_psd_trace(&start, rho));
    let mut f = obj.value(&q);
    let mut grad = obj.gradient(&q);
    let mut prev: Option<(CMat, CMat)> = None;
    let mut history = [f64::NEG_INFINITY; STALL_WINDOW];
    let mut iterations = 0;
    let mut stationary = false;
    while iterations < max_iter {
        let gnorm = linalg::frobenius(&grad);
        if gnorm == 0.0 || rho == 0.0 {
            break;
        }
        // Frank–Wolfe gap in bits: the best first-order gain over the
        // feasible set. Zero exactly at stationary points.
        let (gvals, _) = linalg::hermitian_eigen(&grad);
        let top = gvals.last().copied().unwrap_or(0.0).max(0.0);
        if rho * top - linalg::inner_re(&grad, &q) < tol {
            stationary = true;
            break;
        }
        if iterations >= STALL_WINDOW {
            let past = history[iterations % STALL_WINDOW];
            let windows_left = (max_iter - iterations) as f64 / STALL_WINDOW as f64;
            if f - past < tol || f + windows_left * (f - past) < incumbent {
                break;
            }
        }
        history[iterations % STALL_WINDOW] = f;
        // Barzilai–Borwein step when curvature information is usable.
        let mut step = rho / gnorm;
        if let Some((dq, dg)) = &prev {
            let num = linalg::inner_re(dq, dq);
            let den = -linalg::inner_re(dq, dg);
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-12 * rho / gnorm, 1e6 * rho / gnorm);
            }
        }
        let mut accepted = None;
        for _ in 0..60 {
            let cand = obj.clean(project_psd_trace(&(&q + grad.scale(step)), rho));
            let fc = obj.value(&cand);
            let decrease = linalg::inner_re(&grad, &(&cand - &q));
            if fc >= f + ARMIJO * decrease && fc.is_finite() {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((cand, fc)) = accepted else { break };
        let new_grad = obj.gradient(&cand);
        prev = Some((&cand - &q, &new_grad - &grad));
        let moved = linalg::frobenius(&(&cand - &q));
        q = cand;
        f = fc;
        grad = new_grad;
        if moved <= f64::EPSILON * rho {
            break;
        }
    }
    Ascent {
        q,
        value: f,
        iterations,
        stationary,
    }
}

fn random_wishart(nt: usize, rho: f64, real: bool, rng: &mut ChaCha8Rng) -> CMat {
    let x = CMat::from_fn(nt, nt, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
        Complex64::new(re, im)
    });
    let w = &x * x.adjoint();
    let tr = linalg::trace_re(&w);
    if tr > 0.0 {
        w.scale(rho / tr)
    } else {
        linalg::identity(nt).scale(rho / nt as f64)
    }
}

fn bin_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Best covariance with trace at most `rho` for one bin.
pub fn maximize_bin(bin: &Bin, rho: f64, opts: &MimoOptions) -> Result<BinOptimum> {
    let obj = BinObjective::new(bin)?;
    maximize_objective(&obj, rho, opts, &[], bin.k as u64)
}

/// Inner solve on a prepared objective. `warm` holds extra feasible starting
/// points; `salt` decorrelates the random restarts of different solves.
pub fn maximize_objective(
    obj: &BinObjective,
    rho: f64,
    opts: &MimoOptions,
    warm: &[CMat],
    salt: u64,
) -> Result<BinOptimum> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("trace budget must be non-negative, got {rho}")));
    }
    let nt = obj.nt();
    if rho == 0.0 {
        return Ok(BinOptimum {
            rate: 0.0,
            q: PsdCovariance::zero(nt),
            iterations: 0,
            restart_rates: vec![0.0],
            stationary_spread: 0.0,
        });
    }
    let mut rng = bin_rng(opts.seed, salt);
    let restarts = opts.restarts.max(1);
    let mut starts: Vec<CMat> = vec![
        CMat::zeros(nt, nt),
        linalg::identity(nt).scale(rho / nt as f64),
        obj.rank_one_start(rho),
    ];
    starts.truncate(restarts);
    while starts.len() < restarts {
        starts.push(random_wishart(nt, rho, obj.is_real(), &mut rng));
    }
    starts.extend(warm.iter().cloned());

    let mut best: Option<Ascent> = None;
    let mut restart_rates = Vec::with_capacity(starts.len());
    let mut stationary_rates = Vec::new();
    let mut iterations = 0;
    for start in starts {
        let incumbent = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.value);
        let run = ascend(obj, start, rho, opts.tol, opts.max_iter, incumbent);
        iterations += run.iterations;
        restart_rates.push(run.value);
        if run.stationary {
            stationary_rates.push(run.value);
        }
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let (q, rate) = if best.value > 0.0 {
        (best.q, best.value)
    } else {
        (CMat::zeros(nt, nt), 0.0)
    };
    let stationary_spread = if stationary_rates.len() > 1 {
        let hi = stationary_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = stationary_rates.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    } else {
        0.0
    };
    Ok(BinOptimum {
        rate,
        q: PsdCovariance::new(q, rho)?,
        iterations,
        restart_rates,
        stationary_spread,
    })
}

#[derive(Debug, Clone)]
struct TableEntry {
    rho: f64,
    rate: f64,
    q: CMat,
}

struct BinTable {
    weight: f64,
    obj: BinObjective,
    entries: Vec<TableEntry>,
    iterations: usize,
    solves: usize,
    spread: f64,
}

impl BinTable {
    fn insert(&mut self, rho: f64, opts: &MimoOptions, salt: u64) -> Result<()> {
        if self.entries.iter().any(|e| e.rho == rho) {
            return Ok(());
        }
        // Warm start from the best entry at or below this budget.
        let warm: Vec<CMat> = self
            .entries
            .iter()
            .filter(|e| e.rho < rho)
            .max_by(|a, b| a.rate.total_cmp(&b.rate))
            .map(|e| vec![e.q.clone()])
            .unwrap_or_default();
        let opt = maximize_objective(&self.obj, rho, opts, &warm, salt)?;
        self.spread = self.spread.max(opt.stationary_spread);
        self.iterations += opt.iterations;
        self.solves += 1;
        self.entries.push(TableEntry {
            rho,
            rate: opt.rate,
            q: opt.q.q,
        });
        self.entries.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        Ok(())
    }

    /// Index maximising `rate - μ ρ`; ties go to the smaller budget.
    fn best(&self, mu: f64) -> usize {
        let mut idx = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, e) in self.entries.iter().enumerate() {
            let v = e.rate - mu * e.rho;
            if v > val {
                val = v;
                idx = i;
            }
        }
        idx
    }
}

fn salt_for(k: usize, counter: usize) -> u64 {
    ((k as u64) << 32) ^ counter as u64
}

fn total_for(tables: &[BinTable], mu: f64) -> f64 {
    tables
        .iter()
        .map(|t| t.weight * t.entries[t.best(mu)].rho)
        .sum()
}

fn dual_value(tables: &[BinTable], mu: f64, budget: f64) -> f64 {
    tables
        .iter()
        .map(|t| {
            let e = &t.entries[t.best(mu)];
            t.weight * (e.rate - mu * e.rho)
        })
        .sum::<f64>()
        + mu * budget
}

struct PriceSearch {
    mu: f64,
    /// Largest probed price whose choices overspend; equals `mu` when none does.
    over: f64,
    /// Every price at which the Lagrangian was evaluated.
    probes: Vec<f64>,
    steps: usize,
}

/// Bisection on the price `μ` so the chosen budgets fit `budget`; the
/// feasible end is kept.
fn search_price(tables: &[BinTable], budget: f64) -> PriceSearch {
    let mut probes = vec![0.0];
    if total_for(tables, 0.0) <= budget {
        return PriceSearch {
            mu: 0.0,
            over: 0.0,
            probes,
            steps: 0,
        };
    }
    let mut hi = tables
        .iter()
        .flat_map(|t| t.entries.iter())
        .filter(|e| e.rho > 0.0)
        .map(|e| e.rate / e.rho)
        .fold(0.0_f64, f64::max)
        * 2.0
        + f64::MIN_POSITIVE;
    let mut lo = hi * 1e-18;
    let mut steps = 0;
    if total_for(tables, lo) <= budget {
        hi = lo;
    } else {
        for _ in 0..200 {
            steps += 1;
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            probes.push(mid);
            if total_for(tables, mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-13 {
                break;
            }
        }
    }
    probes.extend([lo, hi]);
    let over = if total_for(tables, lo) > budget { lo } else { hi };
    PriceSearch {
        mu: hi,
        over,
        probes,
        steps,
    }
}

/// Optimises the circular `n`-block channel with total budget `n²P`.
pub fn allocate_and_optimize(bins: &BinSet, power: f64, opts: &MimoOptions) -> Result<CapacityResult> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!("power must be positive, got {power}")));
    }
    let n = bins.n();
    let budget = (n * n) as f64 * power;
    let independent: Vec<usize> = bins.independent().collect();

    let build = |&k: &usize| -> Result<BinTable> {
        let weight = bins.weight(k) as f64;
        let mut table = BinTable {
            weight,
            obj: BinObjective::new(bins.bin(k))?,
            entries: vec![TableEntry {
                rho: 0.0,
                rate: 0.0,
                q: CMat::zeros(bins.bin(k).nt(), bins.bin(k).nt()),
            }],
            iterations: 0,
            solves: 0,
            spread: 0.0,
        };
        let rho_max = budget / weight;
        let points = opts.rho_grid.max(2);
        for j in 0..points {
            let exponent = -opts.rho_decades * (1.0 - j as f64 / (points - 1) as f64);
            table.insert(rho_max * 10f64.powf(exponent), opts, salt_for(k, j))?;
        }
        Ok(table)
    };
    let mut tables: Vec<BinTable> = if opts.parallel {
        independent.par_iter().map(build).collect::<Result<_>>()?
    } else {
        independent.iter().map(build).collect::<Result<_>>()?
    };

    let mut search = search_price(&tables, budget);
    let mut bisection_steps = search.steps;
    for round in 0..opts.refinements {
        let mu = search.mu;
        let refine = |(k, table): (usize, &mut BinTable)| -> Result<()> {
            let i = table.best(mu);
            let lo = if i > 0 { table.entries[i - 1].rho } else { 0.0 };
            let hi = table.entries.get(i + 1).map(|e| e.rho);
            let centre = table.entries[i].rho;
            let mut targets = Vec::new();
            let p = opts.refine_points.max(1);
            for s in 1..=p {
                let t = s as f64 / (p + 1) as f64;
                if lo > 0.0 {
                    targets.push(lo * (centre / lo).powf(t));
                } else if centre > 0.0 {
                    targets.push(centre * t);
                }
                if let Some(hi) = hi {
                    if centre > 0.0 {
                        targets.push(centre * (hi / centre).powf(t));
                    }
                }
            }
            for (c, rho) in targets.into_iter().enumerate() {
                table.insert(rho, opts, salt_for(k, 1000 * (round + 1) + c))?;
            }
            Ok(())
        };
        if opts.parallel {
            tables
                .par_iter_mut()
                .enumerate()
                .map(|(i, t)| refine((independent[i], t)))
                .collect::<Result<Vec<_>>>()?;
        } else {
            tables
                .iter_mut()
                .enumerate()
                .map(|(i, t)| refine((independent[i], t)))
                .collect::<Result<Vec<_>>>()?;
        }
        search = search_price(&tables, budget);
        bisection_steps += search.steps;
    }

    let mu = search.mu;
    let mut chosen: Vec<usize> = tables.iter().map(|t| t.best(mu)).collect();
    // Bins that change choice across the final price bracket share the
    // leftover budget pro rata; identical bins otherwise move in lockstep.
    let spent: f64 = tables.iter().zip(&chosen).map(|(t, &i)| t.weight * t.entries[i].rho).sum();
    let marginal: Vec<(usize, f64, f64)> = tables
        .iter()
        .zip(&chosen)
        .enumerate()
        .filter_map(|(j, (t, &i))| {
            let lo = t.entries[i].rho;
            let hi = t.entries[t.best(search.over)].rho;
            (hi > lo).then_some((j, lo, hi))
        })
        .collect();
    let extra: f64 = marginal.iter().map(|&(j, lo, hi)| tables[j].weight * (hi - lo)).sum();
    if extra > 0.0 && spent < budget {
        let theta = ((budget - spent) / extra).min(1.0);
        for &(j, lo, hi) in &marginal {
            let rho = lo + theta * (hi - lo);
            if rho <= lo {
                continue;
            }
            let t = &mut tables[j];
            t.insert(rho, opts, salt_for(independent[j], 9999))?;
            let at = t.entries.iter().position(|e| e.rho == rho).unwrap_or(0);
            let (old, new) = (t.entries[chosen[j]].rate, t.entries[at].rate);
            let base = t.entries[chosen[j]].rho;
            chosen[j] = t.entries.iter().position(|e| e.rho == base).unwrap_or(0);
            if new > old {
                chosen[j] = at;
            }
        }
    }
    let mut mats = vec![PsdCovariance::zero(bins.bin(0).nt()); n];
    let mut rates = vec![0.0; n];
    let mut used = 0.0;
    for (i, &k) in independent.iter().enumerate() {
        let t = &tables[i];
        let e = &t.entries[chosen[i]];
        let cov = PsdCovariance {
            q: if is_real_bin(n, k) {
                e.q.map(|z| Complex64::new(z.re, 0.0))
            } else {
                e.q.clone()
            },
            trace_budget: e.rho,
        };
        used += t.weight * cov.trace();
        rates[k] = e.rate;
        if k != 0 && n - k != k {
            rates[n - k] = e.rate;
            mats[n - k] = cov.conj();
        }
        mats[k] = cov;
    }
    let capacity = rates.iter().sum::<f64>() / n as f64;
    // Weak duality over the final tables, which hold every chosen entry.
    let dual = search
        .probes
        .iter()
        .map(|&m| dual_value(&tables, m, budget))
        .fold(f64::INFINITY, f64::min)
        / n as f64;
    let allocation = CovarianceAllocation {
        n,
        mats,
        total_budget: budget,
    };
    Ok(CapacityResult {
        capacity,
        allocation,
        dual_bound: Some(dual),
        per_bin_rates: rates,
        diagnostics: Diagnostics {
            inner_solves: tables.iter().map(|t| t.solves).sum(),
            total_iterations: tables.iter().map(|t| t.iterations).sum(),
            max_restart_spread: tables.iter().map(|t| t.spread).fold(0.0, f64::max),
            bisection_steps,
            mu,
            unused_budget: (budget - used).max(0.0),
        },
    })
}

/// Capacity of a channel at block size `n`.
pub fn circular_capacity(channel: &MimoWiretapChannel, n: usize, opts: &MimoOptions) -> Result<CapacityResult> {
    let bins = build_bins(channel, n)?;
    allocate_and_optimize(&bins, channel.power(), opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub capacity: f64,
    pub dual_bound: Option<f64>,
    /// `capacity(n) - capacity(previous n)`.
    pub difference: Option<f64>,
    pub restart_spread: f64,
}

/// Capacities along increasing block sizes.
pub fn convergence_study(
    channel: &MimoWiretapChannel,
    n_list: &[usize],
    power: f64,
    opts: &MimoOptions,
) -> Result<Vec<ConvergenceRow>> {
    let m = channel.memory();
    if let Some(&n) = n_list.iter().find(|&&n| n <= 2 * m) {
        return Err(Error::BlockTooShort { n, memory: m });
    }
    let channel = channel.with_power(power)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let res = circular_capacity(&channel, n, opts)?;
        let difference = rows.last().map(|r| res.capacity - r.capacity);
        rows.push(ConvergenceRow {
            n,
            capacity: res.capacity,
            dual_bound: res.dual_bound,
            difference,
            restart_spread: res.diagnostics.max_restart_spread,
        });
    }
    Ok(rows)
}

//! Small dense linear-algebra helpers over `nalgebra` for complex Hermitian
//! matrices.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// `Re tr(a^H b)`, the real inner product on Hermitian matrices.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues in ascending order
/// with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig: SymmetricEigen<Complex64, Dyn> = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `V diag(f(lambda)) V^H` for a Hermitian input.
pub fn hermitian_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Principal square root of a Hermitian PSD matrix.
pub fn sqrt_hpsd(m: &CMat) -> CMat {
    hermitian_map(m, |x| x.max(0.0).sqrt())
}

/// Inverse principal square root; `None` if any eigenvalue is not positive.
pub fn inv_sqrt_hpd(m: &CMat) -> Option<CMat> {
    let (values, _) = hermitian_eigen(m);
    if values.first().is_some_and(|&v| v <= 0.0) {
        return None;
    }
    Some(hermitian_map(m, |x| 1.0 / x.sqrt()))
}

/// Cholesky factor of the Hermitian part, or `None` unless every pivot is
/// real and positive.
pub fn cholesky(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    let chol = Cholesky::new(hermitian_part(m))?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    ok.then_some(chol)
}

/// Natural-log determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(m: &CMat) -> Option<f64> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    Some((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// `L^{-1} m` where `c = L L^H`; used to whiten a channel against a noise
/// covariance so that `det(I + H Q H^H c^{-1}) = det(I + W Q W^H)`.
pub fn whiten_with_cholesky(c: &CMat, m: &CMat) -> Option<CMat> {
    let chol = cholesky(c)?;
    let l = chol.l();
    l.solve_lower_triangular(m)
}

/// Singular values (descending) and right singular vectors of a complex
/// matrix, obtained from the eigen-decomposition of `m^H m`.
pub fn right_singular(m: &CMat) -> (Vec<f64>, CMat) {
    let gram = m.adjoint() * m;
    let (values, vectors) = hermitian_eigen(&gram);
    let n = values.len();
    let mut sv = Vec::with_capacity(n);
    let mut out = CMat::zeros(n, n);
    for (dst, src) in (0..n).rev().enumerate() {
        sv.push(values[src].max(0.0).sqrt());
        out.set_column(dst, &vectors.column(src));
    }
    (sv, out)
}

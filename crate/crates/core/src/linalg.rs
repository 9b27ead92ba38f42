//! Dense complex linear algebra shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense complex matrix. Channels, beamformers and covariances all use it.
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold for numerical rank: `sigma_i > 1e-8 * sigma_max`.
pub const RANK_RTOL: f64 = 1e-8;

#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// One circularly-symmetric CN(0, 1) draw: two real normals scaled by 1/sqrt(2).
pub fn crandn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries, filled column-major.
pub fn crandn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = crandn(rng);
        }
    }
    m
}

pub fn crandn_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(len, |_, _| crandn(rng))
}

/// Thin SVD with singular values sorted in descending order.
/// `m = u * diag(s) * v^H`, with `u: rows x r`, `v: cols x r`, `r = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn sorted_svd(m: &ComplexMatrix) -> SortedSvd {
    let r = m.nrows().min(m.ncols());
    if r == 0 {
        return SortedSvd {
            u: ComplexMatrix::zeros(m.nrows(), 0),
            singular_values: Vec::new(),
            v: ComplexMatrix::zeros(m.ncols(), 0),
        };
    }
    let svd = m.clone().svd_unordered(true, true);
    let u_raw = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut u = ComplexMatrix::zeros(m.nrows(), r);
    let mut v = ComplexMatrix::zeros(m.ncols(), r);
    let mut s = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        s.push(svd.singular_values[src]);
        u.set_column(dst, &u_raw.column(src));
        // v_t holds V^H, so row `src` conjugated is column `src` of V.
        v.set_column(dst, &v_t.row(src).transpose().map(|z| z.conj()));
    }
    SortedSvd {
        u,
        singular_values: s,
        v,
    }
}

pub fn singular_values_desc(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values_unordered().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let s = singular_values_desc(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigenvalues_desc(m: &ComplexMatrix) -> Vec<f64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `(m + m^H) / 2`, used to scrub round-off asymmetry before eigen solves.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration.
///
/// Starts from the all-ones vector; a deterministic start keeps results
/// reproducible. Returns 0 for the zero matrix.
pub fn lambda_max_power(a: &ComplexMatrix, max_iters: usize, tol: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = ComplexVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    // Perturb the start so it is not orthogonal to a dominant eigenvector
    // that happens to be orthogonal to the ones vector.
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += Complex64::new(0.0, 1e-3 * (i as f64 + 1.0) / n as f64);
    }
    let norm = x.norm();
    x /= Complex64::new(norm, 0.0);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let y = a * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let next = x.dotc(&y).re;
        x = y / Complex64::new(ny, 0.0);
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0)
}

/// Solves `m x = b` for a Hermitian positive definite `m` (Cholesky), falling
/// back to LU when the factorization fails.
pub fn solve_hpd(m: &ComplexMatrix, b: &ComplexMatrix) -> Option<ComplexMatrix> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(b));
    }
    m.clone().lu().solve(b)
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &ComplexVector) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(v)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

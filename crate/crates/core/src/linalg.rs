//! Dense complex linear algebra used throughout the crate.
//!
//! Thin wrappers over nalgebra that fix conventions: Hermitian eigenvalues
//! come back sorted ascending, null spaces and ranges are orthonormal column
//! bases, and every tolerance is relative to the largest singular value.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖a − b‖_F / max(‖b‖_F, 1e-300)`; zero when both are empty.
pub fn relative_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = frobenius(&(a - b));
    let scale = frobenius(b).max(frobenius(a));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular values (descending) and a full right-singular basis `V` (n × n).
pub fn svd_full(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (Vec::new(), identity(rows), identity(cols));
    }
    // nalgebra only returns min(rows, cols) right vectors; pad to get all of them.
    let padded = if rows < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v_full = v_t.adjoint();
    let mut v = zeros(cols, order.len());
    let mut uu = zeros(u.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_full.column(src));
        uu.set_column(dst, &u.column(src));
    }
    let uu = uu.rows(0, rows).into_owned();
    let sigma = sigma.into_iter().take(order.len()).collect();
    (sigma, uu, v)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Ratio of extreme singular values; infinite for singular or non-square input.
pub fn condition_number(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    if m.nrows() == 0 {
        return 1.0;
    }
    let s = singular_values(m);
    let max = s[0];
    let min = *s.last().unwrap();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis of `ker m`, singular values at most `rel_tol · σ_max` count as zero.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return identity(cols);
    }
    let (sigma, _, v) = svd_full(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count();
    v.columns(rank, cols - rank).into_owned()
}

/// Orthonormal basis of the column space of `m`.
pub fn range_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return zeros(rows, 0);
    }
    let (sigma, u, _) = svd_full(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count();
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `C^n`.
pub fn complement_basis(q: &CMatrix, n: usize) -> CMatrix {
    if q.ncols() == 0 {
        return identity(n);
    }
    null_space(&q.adjoint(), 1e-10)
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    m.clone().try_inverse()
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn herm_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = herm_eig(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let fj = cr(f(vals[j]));
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    &scaled * vecs.adjoint()
}

pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    herm_function(m, |x| x.max(0.0).sqrt())
}

pub fn inv_sqrt_pd(m: &CMatrix) -> CMatrix {
    herm_function(m, |x| 1.0 / x.sqrt())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Eigenvalues of a general square matrix via the complex Schur form.
///
/// nalgebra's complex QR sweep has no exceptional shifts and can stall on
/// clustered spectra, so the iteration is capped; normal matrices then go
/// through [`normal_eig`], anything else through a 1e-14-relative
/// perturbation (far below every tolerance that consumes eigenvalues).
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let cap = 200 * n * n;
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, cap) {
        let t = s.unpack().1;
        return (0..n).map(|i| t[(i, i)]).collect();
    }
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    if frobenius(&(m * m.adjoint() - m.adjoint() * m)) <= 1e-10 * scale * scale {
        return normal_eig(m).1;
    }
    let nudge = CMatrix::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 13) % 11) as f64 - 5.0, ((i * 3 + j * 5) % 7) as f64 - 3.0));
    let perturbed = m + nudge * cr(1e-14 * scale);
    let t = Schur::try_new(perturbed, f64::EPSILON, 10 * cap).expect("Schur iteration converges after perturbation").unpack().1;
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Unitary `V` and eigenvalues `λ` with `m = V diag(λ) V*`, for normal `m`.
///
/// The Hermitian and skew parts commute, so a generic real combination of
/// them shares their eigenvectors; the angle is retried if two eigenvalues
/// happen to project onto the same value.
pub fn normal_eig(m: &CMatrix) -> (CMatrix, Vec<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (zeros(0, 0), Vec::new());
    }
    let re = (m + m.adjoint()) * cr(0.5);
    let im = (m - m.adjoint()) * C64::new(0.0, -0.5);
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, CMatrix, Vec<C64>)> = None;
    for phi in [0.723_606_797_749_979, 1.912_931_182_772_389, 2.618_033_988_749_895, 0.318_309_886_183_791] {
        let (_, v) = herm_eig(&(&re * cr(f64::cos(phi)) + &im * cr(f64::sin(phi))));
        let d = v.adjoint() * m * &v;
        let values: Vec<C64> = (0..n).map(|i| d[(i, i)]).collect();
        let residual = frobenius(&(m * &v - &v * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone())))) / scale;
        if residual < 1e-12 {
            return (v, values);
        }
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, v, values));
        }
    }
    let (_, v, values) = best.expect("at least one angle tried");
    (v, values)
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `tr log(I + e)` by the Mercator series; requires `‖e‖ < 1`.
pub fn trace_log_one_plus(e: &CMatrix) -> C64 {
    let n = e.nrows();
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    let norm = spectral_norm(e);
    let mut power = e.clone();
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..400 {
        let term = trace(&power) / cr(k as f64);
        if k % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
        // Remaining tail is bounded by n·‖e‖^{k+1}/(k+1)/(1-‖e‖).
        let tail = n as f64 * norm.powi(k as i32 + 1) / ((k + 1) as f64 * (1.0 - norm).max(1e-12));
        if tail < 1e-17 * (1.0 + acc.norm()) {
            break;
        }
        power = &power * e;
    }
    acc
}

pub fn random_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_c64(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    hermitian_part(&random_matrix(rng, n, n))
}

/// Random positive definite matrix with eigenvalues in roughly `[0.5, 3]`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    &a * a.adjoint() * cr(0.5) + identity(n) * cr(0.5)
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    if n == 0 {
        return zeros(0, 0);
    }
    let (_, vecs) = herm_eig(&random_hermitian(rng, n));
    vecs
}

/// A well-conditioned random invertible matrix.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let m = random_matrix(rng, n, n) + identity(n) * cr(1.5);
        if condition_number(&m) < 1e3 {
            return m;
        }
    }
}

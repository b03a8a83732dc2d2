//! Fuglede–Kadison determinants on `GL(M)` and spectral density functions.
//!
//! Two independent evaluations are provided: the spectral one,
//! `log Det(T) = ∫ log λ dφ(λ)` for positive `T`, and the path one, which
//! telescopes `Σ Re Tr_τ log(A_{t_i}^{-1} A_{t_{i+1}})` along a path from `I`
//! to `A` with every factor kept in the ball where the Mercator series for the
//! logarithm converges.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, C64};
use crate::module::{CommutantOperator, HilbertianModule, MAX_CONDITION};

/// Eigenvalues `λ ≤ KERNEL_TOL · ‖T‖` count as zero.
pub const KERNEL_TOL: f64 = 1e-12;
/// Each telescoping factor must satisfy `‖A_{t_i}^{-1}A_{t_{i+1}} − I‖ < PATH_RADIUS`.
pub const PATH_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Path,
    Polar,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Method::Spectral),
            "path" => Ok(Method::Path),
            "polar" => Ok(Method::Polar),
            _ => Err(Error::validation("method", format!("unknown method '{s}' (spectral|path|polar)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Divergent,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub verdict: Verdict,
    pub error_estimate: f64,
    pub detail: String,
}

impl Convergence {
    pub fn exact() -> Self {
        Self { verdict: Verdict::Pass, error_estimate: 0.0, detail: "finite spectrum".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantResult {
    pub value: f64,
    pub log_value: f64,
    pub method: Method,
    pub convergence: Convergence,
}

impl DeterminantResult {
    pub fn from_log(log_value: f64, method: Method, convergence: Convergence) -> Self {
        Self { value: log_value.exp(), log_value, method, convergence }
    }
}

/// `φ(λ) = Tr_τ(E_λ)`, either as finitely many atoms or as a sampled CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    /// `(λ, mass)`, sorted by `λ`, masses merged for equal eigenvalues.
    pub atoms: Vec<(f64, f64)>,
    /// `(λ, φ(λ))` on a grid, for backends with continuous spectrum.
    pub sampled_cdf: Option<Vec<(f64, f64)>>,
    pub total_mass: f64,
}

impl SpectralDensity {
    pub fn from_atoms(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scale = raw.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (l, w) in raw {
            if w == 0.0 {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if (l - last.0).abs() <= 1e-12 * scale.max(1e-300) => last.1 += w,
                _ => atoms.push((l, w)),
            }
        }
        let total_mass = atoms.iter().map(|a| a.1).sum();
        Self { atoms, sampled_cdf: None, total_mass }
    }

    /// `φ(λ)`: mass of the spectrum in `[0, λ]`.
    pub fn cdf(&self, lambda: f64) -> f64 {
        if let Some(cdf) = &self.sampled_cdf {
            return cdf.iter().take_while(|p| p.0 <= lambda).last().map(|p| p.1).unwrap_or(0.0);
        }
        self.atoms.iter().filter(|a| a.0 <= lambda).map(|a| a.1).sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match &self.sampled_cdf {
            Some(cdf) => cdf.last().map(|p| p.0).unwrap_or(0.0),
            None => self.atoms.last().map(|a| a.0).unwrap_or(0.0),
        }
    }
}

/// Per-block Hermitian form `G^{1/2} T G^{-1/2}` of a `G`-self-adjoint `T`.
fn symmetrized(t: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
    let gh = linalg::sqrt_psd(g);
    let gih = linalg::inv_sqrt_pd(g);
    let h = &gh * t * &gih;
    let residual = linalg::relative_residual(&h, &h.adjoint());
    if residual > 1e-9 {
        return Err(Error::NotSelfAdjoint { residual });
    }
    Ok(h)
}

pub fn spectral_density(
    module: &HilbertianModule,
    t: &CommutantOperator,
    gram: &CommutantOperator,
) -> Result<SpectralDensity> {
    module.check_operator_shape(t)?;
    module.check_operator_shape(gram)?;
    let mut raw = Vec::new();
    let mut max = 0.0f64;
    let mut per_block = Vec::new();
    for (k, w) in module.algebra().weights().enumerate() {
        if t.blocks[k].nrows() == 0 {
            continue;
        }
        let h = symmetrized(&t.blocks[k], &gram.blocks[k])?;
        let (vals, _) = linalg::herm_eig(&h);
        max = max.max(vals.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        per_block.push((w, vals));
    }
    for (w, vals) in per_block {
        for v in vals {
            if v < -KERNEL_TOL * max.max(1e-300) * 1e2 {
                return Err(Error::NegativeSpectrum { min_eigenvalue: v });
            }
            raw.push((v.max(0.0), w));
        }
    }
    Ok(SpectralDensity::from_atoms(raw))
}

/// `log Det` of a positive operator from its atoms; refuses zero modes.
pub fn log_det_from_density(density: &SpectralDensity, kernel_tol: f64) -> Result<f64> {
    let threshold = kernel_tol * density.max_eigenvalue();
    let mut acc = 0.0;
    for &(l, w) in &density.atoms {
        if l <= threshold {
            return Err(Error::KernelDetected { eigenvalue: l, threshold });
        }
        acc += w * l.ln();
    }
    Ok(acc)
}

pub fn fk_det_spectral(
    module: &HilbertianModule,
    t: &CommutantOperator,
    gram: &CommutantOperator,
) -> Result<DeterminantResult> {
    fk_det_spectral_with(module, t, gram, KERNEL_TOL)
}

pub fn fk_det_spectral_with(
    module: &HilbertianModule,
    t: &CommutantOperator,
    gram: &CommutantOperator,
    kernel_tol: f64,
) -> Result<DeterminantResult> {
    let density = spectral_density(module, t, gram)?;
    let log = log_det_from_density(&density, kernel_tol)?;
    Ok(DeterminantResult::from_log(log, Method::Spectral, Convergence::exact()))
}

fn check_invertible(module: &HilbertianModule, a: &CommutantOperator) -> Result<()> {
    module.check_operator_shape(a)?;
    for b in &a.blocks {
        let cond = linalg::condition_number(b);
        if !(cond < MAX_CONDITION) {
            return Err(Error::NonInvertible { condition: cond });
        }
    }
    Ok(())
}

/// `Det(A) = Det(A^†A)^{1/2}`, adjoint taken with respect to `gram`.
pub fn fk_det(module: &HilbertianModule, a: &CommutantOperator, gram: &CommutantOperator) -> Result<DeterminantResult> {
    check_invertible(module, a)?;
    let ata = a.adjoint_wrt(gram)?.compose(a);
    let density = spectral_density(module, &ata, gram)?;
    let log = log_det_from_density(&density, KERNEL_TOL)?;
    Ok(DeterminantResult::from_log(0.5 * log, Method::Spectral, Convergence::exact()))
}

/// Dispatches on `method`.
pub fn fk_det_by(
    module: &HilbertianModule,
    a: &CommutantOperator,
    gram: &CommutantOperator,
    method: Method,
) -> Result<DeterminantResult> {
    match method {
        Method::Spectral => fk_det(module, a, gram),
        Method::Path => fk_det_path(module, a, gram, &PathOptions::default()),
        Method::Polar => fk_det_path(module, a, gram, &PathOptions { path: PathKind::Polar, ..Default::default() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Straight segment when it stays invertible, polar path otherwise.
    Auto,
    /// `A_t = (1 − t)I + tA`.
    Straight,
    /// Rotate the unitary part of `A = U|A|`, then scale `|A|^t`.
    Polar,
}

#[derive(Debug, Clone)]
pub struct PathOptions {
    pub path: PathKind,
    /// Initial number of uniform segments before adaptive halving.
    pub steps: usize,
    pub max_depth: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { path: PathKind::Auto, steps: 8, max_depth: 40 }
    }
}

/// A path `[0, 1] → GL` in one block, starting at `I`.
type BlockPath<'a> = Box<dyn Fn(f64) -> CMatrix + 'a>;

/// First eigenvalue on the closed negative real axis, if any: the straight
/// path through it is singular at `t = 1/(1 − λ)`.
fn straight_path_obstruction(a: &CMatrix) -> Option<f64> {
    let scale = linalg::spectral_norm(a);
    linalg::eigenvalues(a)
        .into_iter()
        .find(|l| l.re <= 0.0 && l.im.abs() <= 1e-12 * scale)
        .map(|l| 1.0 / (1.0 - l.re))
}

fn straight_path(a: &CMatrix) -> BlockPath<'_> {
    let n = a.nrows();
    Box::new(move |t| linalg::identity(n) * cr(1.0 - t) + a * cr(t))
}

/// Polar path in two halves: `t ∈ [0, ½]` rotates `U_s = V e^{isΘ} V*`, and
/// `t ∈ [½, 1]` scales `U|A|^s`.
fn polar_path(a: &CMatrix) -> Result<BlockPath<'static>> {
    let abs = linalg::sqrt_psd(&(a.adjoint() * a));
    let abs_inv = linalg::inverse(&abs).ok_or(Error::NonInvertible { condition: f64::INFINITY })?;
    let u = a * &abs_inv;
    let (v, eig) = linalg::normal_eig(&u);
    let angles: Vec<f64> = eig.iter().map(|l| l.arg()).collect();
    let (log_vals, log_vecs) = linalg::herm_eig(&abs);
    let log_vals: Vec<f64> = log_vals.iter().map(|x| x.ln()).collect();
    Ok(Box::new(move |t: f64| {
        let s = (2.0 * t).min(1.0);
        let rot = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            angles.len(),
            angles.iter().map(|th| C64::from_polar(1.0, s * th)),
        ));
        let u_s = &v * rot * v.adjoint();
        if t <= 0.5 {
            return u_s;
        }
        let r = 2.0 * t - 1.0;
        let mut scaled = log_vecs.clone();
        for (j, lv) in log_vals.iter().enumerate() {
            let f = cr((r * lv).exp());
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= f;
            }
        }
        u_s * scaled * log_vecs.adjoint()
    }))
}

struct Telescoper<'a> {
    path: &'a BlockPath<'a>,
    max_depth: usize,
    segments: usize,
}

impl Telescoper<'_> {
    fn factor(&self, from: &CMatrix, t: f64) -> Result<CMatrix> {
        let cond = linalg::condition_number(from);
        let inv = if cond < MAX_CONDITION { linalg::inverse(from) } else { None };
        let inv = inv.ok_or(Error::PathLeavesGL { t })?;
        let n = from.nrows();
        Ok(inv * (self.path)(t) - linalg::identity(n))
    }

    fn segment(&mut self, a: f64, b: f64, at_a: &CMatrix, depth: usize) -> Result<C64> {
        let x = self.factor(at_a, b).map_err(|_| Error::PathLeavesGL { t: a })?;
        let mid = 0.5 * (a + b);
        let xm = self.factor(at_a, mid).map_err(|_| Error::PathLeavesGL { t: a })?;
        if linalg::spectral_norm(&x) < PATH_RADIUS && linalg::spectral_norm(&xm) < PATH_RADIUS {
            self.segments += 1;
            return Ok(linalg::trace_log_one_plus(&x));
        }
        if depth >= self.max_depth {
            return Err(Error::PathLeavesGL { t: mid });
        }
        let at_mid = (self.path)(mid);
        let left = self.segment(a, mid, at_a, depth + 1)?;
        let right = self.segment(mid, b, &at_mid, depth + 1)?;
        Ok(left + right)
    }

    fn run(&mut self, steps: usize) -> Result<C64> {
        let steps = steps.max(1);
        let mut acc = C64::new(0.0, 0.0);
        let mut at = (self.path)(0.0);
        for i in 0..steps {
            let (a, b) = (i as f64 / steps as f64, (i + 1) as f64 / steps as f64);
            acc += self.segment(a, b, &at, 0)?;
            at = (self.path)(b);
        }
        Ok(acc)
    }
}

/// Path-integral determinant: `Σ_i Re Tr_τ log(A_{t_i}^{-1}A_{t_{i+1}})`.
///
/// Blocks are conjugated by `G^{1/2}` first, so the smallness condition is
/// measured in the operator norm of the chosen Hilbert structure.
pub fn fk_det_path(
    module: &HilbertianModule,
    a: &CommutantOperator,
    gram: &CommutantOperator,
    options: &PathOptions,
) -> Result<DeterminantResult> {
    check_invertible(module, a)?;
    module.check_operator_shape(gram)?;
    let mut log = 0.0;
    let mut segments = 0;
    let mut used_polar = options.path == PathKind::Polar;
    for (k, w) in module.algebra().weights().enumerate() {
        let blk = &a.blocks[k];
        if blk.nrows() == 0 {
            continue;
        }
        let g = &gram.blocks[k];
        let conj = linalg::sqrt_psd(g) * blk * linalg::inv_sqrt_pd(g);
        let obstruction = straight_path_obstruction(&conj);
        let path: BlockPath = match (options.path, obstruction) {
            (PathKind::Straight, Some(t)) => return Err(Error::PathLeavesGL { t }),
            (PathKind::Straight, None) | (PathKind::Auto, None) => straight_path(&conj),
            (PathKind::Polar, _) | (PathKind::Auto, Some(_)) => {
                used_polar = true;
                polar_path(&conj)?
            }
        };
        let mut tel = Telescoper { path: &path, max_depth: options.max_depth, segments: 0 };
        let sum = tel.run(options.steps)?;
        segments += tel.segments;
        log += w * sum.re;
    }
    let convergence = Convergence {
        verdict: Verdict::Pass,
        error_estimate: segments as f64 * module.carrier_dim().max(1) as f64 * f64::EPSILON,
        detail: format!("{segments} telescoping factors"),
    };
    let method = if used_polar { Method::Polar } else { Method::Path };
    Ok(DeterminantResult::from_log(log, method, convergence))
}

//! Numerical isotypic decomposition of a finite-dimensional *-representation.
//!
//! A random Hermitian element of the commutant has, generically, one
//! eigenvalue cluster per irreducible summand. Clusters are grouped into
//! isotypic classes by testing whether a random commutant element intertwines
//! them, and every copy in a class is rotated onto the first copy so the
//! action becomes `⊕_k x_k ⊗ I_{m_k}` in the returned basis.

use rand_chacha::ChaCha8Rng;

use crate::algebra::seeded_rng;
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix};

#[derive(Debug, Clone)]
pub struct DecompositionOptions {
    /// Relative eigenvalue gap that separates clusters.
    pub cluster_gap: f64,
    /// Max-norm tolerance for reconstructing the action from the blocks.
    pub reconstruction_tol: f64,
    pub seed: u64,
    pub attempts: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self { cluster_gap: 1e-6, reconstruction_tol: 1e-8, seed: 0x5eed, attempts: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct IsotypicBlock {
    pub irrep_dim: usize,
    pub multiplicity: usize,
    /// Irreducible image of each action matrix on the first copy.
    pub images: Vec<CMatrix>,
}

#[derive(Debug, Clone)]
pub struct IsotypicDecomposition {
    pub blocks: Vec<IsotypicBlock>,
    /// Unitary whose columns are ordered `(k, a, j)` with `a` the irrep index
    /// and `j` the copy index: column `offset_k + a·m_k + j`.
    pub basis: CMatrix,
}

/// Basis of the commutant of the *-algebra generated by `action`, from the null
/// space of the commutation system. Costs `O(d^6)`; meant for small carriers.
pub fn commutant_by_nullspace(action: &[CMatrix], dim: usize) -> Vec<CMatrix> {
    let id = linalg::identity(dim);
    // vec(LX - XL) = (I ⊗ L - L^T ⊗ I) vec(X) in column-major vec.
    let mut rows: Vec<CMatrix> = Vec::new();
    for l in action {
        for op in [l.clone(), l.adjoint()] {
            rows.push(linalg::kron(&id, &op) - linalg::kron(&op.transpose(), &id));
        }
    }
    if rows.is_empty() {
        return (0..dim * dim)
            .map(|e| {
                let mut m = linalg::zeros(dim, dim);
                m[(e % dim, e / dim)] = cr(1.0);
                m
            })
            .collect();
    }
    let total_rows: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut system = linalg::zeros(total_rows, dim * dim);
    let mut r0 = 0;
    for r in &rows {
        system.view_mut((r0, 0), r.shape()).copy_from(r);
        r0 += r.nrows();
    }
    let kernel = linalg::null_space(&system, 1e-10);
    (0..kernel.ncols())
        .map(|c| CMatrix::from_fn(dim, dim, |i, j| kernel[(j * dim + i, c)]))
        .collect()
}

/// Decomposes `action` (matrices on `C^dim` generating a *-algebra) using
/// `sample_commutant` to draw random commutant elements.
pub fn decompose(
    action: &[CMatrix],
    dim: usize,
    sample_commutant: &mut dyn FnMut(&mut ChaCha8Rng) -> CMatrix,
    options: &DecompositionOptions,
) -> Result<IsotypicDecomposition> {
    let mut last_err = Error::DecompositionFailure("no attempt made".into());
    for attempt in 0..options.attempts.max(1) {
        let mut rng = seeded_rng(options.seed.wrapping_add(attempt as u64 * 7919));
        match try_decompose(action, dim, sample_commutant, options, &mut rng) {
            Ok(d) => return Ok(d),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn try_decompose(
    action: &[CMatrix],
    dim: usize,
    sample_commutant: &mut dyn FnMut(&mut ChaCha8Rng) -> CMatrix,
    options: &DecompositionOptions,
    rng: &mut ChaCha8Rng,
) -> Result<IsotypicDecomposition> {
    if dim == 0 {
        return Ok(IsotypicDecomposition { blocks: Vec::new(), basis: linalg::zeros(0, 0) });
    }
    let h = linalg::hermitian_part(&sample_commutant(rng));
    let (vals, vecs) = linalg::herm_eig(&h);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(vals[dim - 1] - vals[0]);
    let threshold = options.cluster_gap * scale.max(f64::MIN_POSITIVE);

    let mut clusters: Vec<CMatrix> = Vec::new();
    let mut start = 0;
    for i in 1..=dim {
        if i == dim || vals[i] - vals[i - 1] > threshold {
            clusters.push(vecs.columns(start, i - start).into_owned());
            start = i;
        }
    }

    let x = sample_commutant(rng);
    let x_scale = linalg::frobenius(&x).max(f64::MIN_POSITIVE);
    // classes[c] = indices of clusters equivalent to the class representative.
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (j, cj) in clusters.iter().enumerate() {
        let mut placed = false;
        for class in classes.iter_mut() {
            let rep = &clusters[class[0]];
            if rep.ncols() != cj.ncols() {
                continue;
            }
            let t = cj.adjoint() * &x * rep;
            if linalg::frobenius(&t) > 1e-7 * x_scale {
                class.push(j);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![j]);
        }
    }

    struct Class {
        n: usize,
        columns: Vec<CMatrix>,
        images: Vec<CMatrix>,
        key: (usize, f64, Vec<(i64, i64)>),
    }
    let mut built = Vec::with_capacity(classes.len());
    for class in &classes {
        let rep = &clusters[class[0]];
        let n = rep.ncols();
        let mut copies = vec![rep.clone()];
        for &j in &class[1..] {
            let cj = &clusters[j];
            let t = cj.adjoint() * &x * rep;
            let c = linalg::frobenius(&t).powi(2) / n as f64;
            let u = t * cr(1.0 / c.sqrt());
            if linalg::relative_residual(&(u.adjoint() * &u), &linalg::identity(n)) > 1e-6 {
                return Err(Error::DecompositionFailure(
                    "intertwiner between equivalent copies is not a scaled unitary".into(),
                ));
            }
            copies.push(cj * u);
        }
        let images: Vec<CMatrix> = action.iter().map(|l| rep.adjoint() * l * rep).collect();
        let characters: Vec<(i64, i64)> = images
            .iter()
            .map(|m| {
                let t = linalg::trace(m);
                ((t.re * 1e8).round() as i64, (t.im * 1e8).round() as i64)
            })
            .collect();
        let char_sum: f64 = images.iter().map(|m| linalg::trace(m).re).sum();
        built.push(Class { n, columns: copies, images, key: (n, -char_sum, characters) });
    }
    built.sort_by(|a, b| {
        a.key
            .0
            .cmp(&b.key.0)
            .then(a.key.1.total_cmp(&b.key.1))
            .then_with(|| a.key.2.cmp(&b.key.2))
    });

    let mut basis = linalg::zeros(dim, dim);
    let mut col = 0;
    let mut blocks = Vec::with_capacity(built.len());
    for class in built {
        let m = class.columns.len();
        for a in 0..class.n {
            for copy in &class.columns {
                basis.set_column(col, &copy.column(a));
                col += 1;
            }
        }
        blocks.push(IsotypicBlock { irrep_dim: class.n, multiplicity: m, images: class.images });
    }
    debug_assert_eq!(col, dim);

    let unitarity = linalg::max_abs(&(basis.adjoint() * &basis - linalg::identity(dim)));
    if unitarity > options.reconstruction_tol {
        return Err(Error::DecompositionFailure(format!("change of basis not unitary ({unitarity:.2e})")));
    }
    for (g, l) in action.iter().enumerate() {
        let block_form = linalg::block_diag(
            &blocks
                .iter()
                .map(|b| linalg::kron(&b.images[g], &linalg::identity(b.multiplicity)))
                .collect::<Vec<_>>(),
        );
        let residual = linalg::max_abs(&(&basis * block_form * basis.adjoint() - l));
        if residual > options.reconstruction_tol {
            return Err(Error::DecompositionFailure(format!(
                "action matrix {g} not reproduced by the block form (residual {residual:.2e})"
            )));
        }
    }
    Ok(IsotypicDecomposition { blocks, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteGroupTable;

    #[test]
    fn nullspace_commutant_of_regular_s3_has_dimension_six() {
        let table = FiniteGroupTable::symmetric(3);
        let action: Vec<CMatrix> = table.generating_set().iter().map(|&g| table.left_regular(g)).collect();
        let basis = commutant_by_nullspace(&action, 6);
        // Σ m_k² = 1 + 1 + 4
        assert_eq!(basis.len(), 6);
    }

    #[test]
    fn decomposes_reducible_representation_with_multiplicity() {
        // Z/2 acting on C^3 by diag(1, -1, -1) conjugated by a random unitary.
        let mut rng = seeded_rng(11);
        let u = linalg::random_unitary(&mut rng, 3);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(1.0), cr(-1.0), cr(-1.0)]));
        let l = &u * d * u.adjoint();
        let action = vec![l];
        let comm = commutant_by_nullspace(&action, 3);
        assert_eq!(comm.len(), 1 + 4);
        let mut sampler = |rng: &mut ChaCha8Rng| {
            let mut acc = linalg::zeros(3, 3);
            for b in &comm {
                acc += b * linalg::random_c64(rng);
            }
            acc
        };
        let dec = decompose(&action, 3, &mut sampler, &DecompositionOptions::default()).unwrap();
        let mults: Vec<usize> = dec.blocks.iter().map(|b| b.multiplicity).collect();
        let chars: Vec<f64> = dec.blocks.iter().map(|b| b.images[0][(0, 0)].re).collect();
        assert_eq!(mults.len(), 2);
        assert_eq!(mults.iter().sum::<usize>(), 3);
        // Trivial character (sum +1) sorts first.
        assert!((chars[0] - 1.0).abs() < 1e-10 && mults[0] == 1);
        assert!((chars[1] + 1.0).abs() < 1e-10 && mults[1] == 2);
    }
}

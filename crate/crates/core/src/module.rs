//! Finitely generated Hilbertian modules in isotypic normal form.
//!
//! A module over `A = ⊕_k M_{n_k}(C)` is stored as multiplicities `m_k`; its
//! carrier `C^d`, `d = Σ n_k m_k`, is identified with `⊕_k C^{n_k} ⊗ C^{m_k}`
//! through a unitary `basis_map`. In canonical coordinates the algebra acts as
//! `⊕ x_k ⊗ I_{m_k}` and the commutant is `⊕ I_{n_k} ⊗ B_k`, so commutant
//! operators, morphisms and admissible Gram operators are all stored as lists
//! of small matrices `B_k`, one per block.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, FiniteVonNeumannAlgebra, GroupAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, C64};
use crate::wedderburn::{self, DecompositionOptions};

/// Relative tolerance for commutation with the algebra action.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Positive definiteness: smallest eigenvalue must exceed this times the largest.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Upper bound on the condition number of an admissible Gram operator.
pub const MAX_CONDITION: f64 = 1e12;

/// A bounded `A`-linear endomorphism, `⊕_k I_{n_k} ⊗ B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutantOperator {
    pub blocks: Vec<CMatrix>,
}

/// An `A`-linear map between two modules over the same algebra, blockwise
/// `m'_k × m_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleMorphism {
    pub blocks: Vec<CMatrix>,
}

impl CommutantOperator {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn identity(module: &HilbertianModule) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::identity(m)).collect() }
    }

    pub fn zero(module: &HilbertianModule) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::zeros(m, m)).collect() }
    }

    pub fn scalar(module: &HilbertianModule, s: C64) -> Self {
        Self::identity(module).scale(s)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    /// Plain conjugate transpose, the adjoint for the identity Gram operator.
    pub fn conj_transpose(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// Adjoint for the scalar product `⟨v, w⟩_G = ⟨Gv, w⟩`: `G^{-1} T* G`.
    pub fn adjoint_wrt(&self, gram: &CommutantOperator) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .zip(&gram.blocks)
            .map(|(t, g)| {
                let gi = linalg::inverse(g).ok_or(Error::NonInvertible { condition: f64::INFINITY })?;
                Ok(gi * t.adjoint() * g)
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn inverse(&self) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let cond = linalg::condition_number(b);
                if cond > MAX_CONDITION {
                    return Err(Error::NonInvertible { condition: cond });
                }
                linalg::inverse(b).ok_or(Error::NonInvertible { condition: cond })
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Stable hash of the blocks, used to tag which reference a number is relative to.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for b in &self.blocks {
            h.update((b.nrows() as u64).to_le_bytes());
            for z in b.iter() {
                h.update(z.re.to_le_bytes());
                h.update(z.im.to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    pub fn random<R: rand::Rng + ?Sized>(module: &HilbertianModule, rng: &mut R) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::random_matrix(rng, m, m)).collect() }
    }

    pub fn random_invertible<R: rand::Rng + ?Sized>(module: &HilbertianModule, rng: &mut R) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::random_invertible(rng, m)).collect() }
    }

    pub fn random_positive<R: rand::Rng + ?Sized>(module: &HilbertianModule, rng: &mut R) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::random_pd(rng, m)).collect() }
    }

    pub fn random_unitary<R: rand::Rng + ?Sized>(module: &HilbertianModule, rng: &mut R) -> Self {
        Self { blocks: module.multiplicities.iter().map(|&m| linalg::random_unitary(rng, m)).collect() }
    }

    /// `A ⊕ B` on `M ⊕ N`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::block_2x2(self, None, None, other)
    }

    /// `(A B; C D)` on `M ⊕ N` with `B: N → M` and `C: M → N`.
    pub fn block_2x2(
        a: &CommutantOperator,
        b: Option<&ModuleMorphism>,
        c: Option<&ModuleMorphism>,
        d: &CommutantOperator,
    ) -> Self {
        let blocks = a
            .blocks
            .iter()
            .zip(&d.blocks)
            .enumerate()
            .map(|(k, (ak, dk))| {
                let (m, n) = (ak.nrows(), dk.nrows());
                let mut out = linalg::zeros(m + n, m + n);
                out.view_mut((0, 0), (m, m)).copy_from(ak);
                out.view_mut((m, m), (n, n)).copy_from(dk);
                if let Some(b) = b {
                    out.view_mut((0, m), (m, n)).copy_from(&b.blocks[k]);
                }
                if let Some(c) = c {
                    out.view_mut((m, 0), (n, m)).copy_from(&c.blocks[k]);
                }
                out
            })
            .collect();
        Self { blocks }
    }
}

impl From<CommutantOperator> for ModuleMorphism {
    fn from(op: CommutantOperator) -> Self {
        ModuleMorphism { blocks: op.blocks }
    }
}

impl ModuleMorphism {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zero(source: &HilbertianModule, target: &HilbertianModule) -> Self {
        Self {
            blocks: source
                .multiplicities
                .iter()
                .zip(&target.multiplicities)
                .map(|(&s, &t)| linalg::zeros(t, s))
                .collect(),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(source: &HilbertianModule, target: &HilbertianModule, rng: &mut R) -> Self {
        Self {
            blocks: source
                .multiplicities
                .iter()
                .zip(&target.multiplicities)
                .map(|(&s, &t)| linalg::random_matrix(rng, t, s))
                .collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ModuleMorphism) -> ModuleMorphism {
        ModuleMorphism { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    /// Adjoint `N → M` for the Gram operators `g_source`, `g_target`:
    /// `G_M^{-1} f* G_N`.
    pub fn adjoint_wrt(&self, g_source: &CommutantOperator, g_target: &CommutantOperator) -> Result<ModuleMorphism> {
        let blocks = self
            .blocks
            .iter()
            .zip(g_source.blocks.iter().zip(&g_target.blocks))
            .map(|(f, (gs, gt))| {
                let gi = linalg::inverse(gs).ok_or(Error::NonInvertible { condition: f64::INFINITY })?;
                Ok(gi * f.adjoint() * gt)
            })
            .collect::<Result<_>>()?;
        Ok(ModuleMorphism { blocks })
    }

    /// `f ⊕ g: M ⊕ M' → N ⊕ N'`, matching [`HilbertianModule::direct_sum`].
    pub fn direct_sum(&self, other: &ModuleMorphism) -> ModuleMorphism {
        ModuleMorphism {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| linalg::block_diag(&[a.clone(), b.clone()]))
                .collect(),
        }
    }

    pub fn as_operator(&self) -> CommutantOperator {
        CommutantOperator { blocks: self.blocks.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

/// Verdict of [`HilbertianModule::check_admissible`].
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// (α): a linear homeomorphism, i.e. condition number below the bound.
    pub invertible: bool,
    /// (β): Hermitian as a scalar product, i.e. the transition operator is
    /// self-adjoint for the reference product.
    pub self_adjoint: bool,
    /// (γ): positive definite.
    pub positive: bool,
    /// (δ): commutes with the algebra action.
    pub commutes: bool,
    pub condition_number: f64,
    pub commutation_residual: f64,
    /// Transition operator `A` with `⟨v,w⟩_G = ⟨Av,w⟩_ref`, in the matrix-unit
    /// basis of the commutant; present when (δ) holds.
    pub transition: Option<CommutantOperator>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.invertible && self.self_adjoint && self.positive && self.commutes
    }
}

#[derive(Debug, Clone)]
pub struct HilbertianModule {
    algebra: Arc<FiniteVonNeumannAlgebra>,
    multiplicities: Vec<usize>,
    basis_map: Option<CMatrix>,
    reference_gram: CommutantOperator,
}

impl HilbertianModule {
    pub fn new(algebra: Arc<FiniteVonNeumannAlgebra>, multiplicities: Vec<usize>) -> Result<Self> {
        if multiplicities.len() != algebra.num_blocks() {
            return Err(Error::shape(format!(
                "{} multiplicities for {} algebra blocks",
                multiplicities.len(),
                algebra.num_blocks()
            )));
        }
        let reference_gram = CommutantOperator {
            blocks: multiplicities.iter().map(|&m| linalg::identity(m)).collect(),
        };
        Ok(Self { algebra, multiplicities, basis_map: None, reference_gram })
    }

    /// `ℓ²(A) ⊗ C^rank`.
    pub fn free(algebra: Arc<FiniteVonNeumannAlgebra>, rank: usize) -> Self {
        let mults = algebra.dims().map(|n| n * rank).collect();
        Self::new(algebra, mults).expect("multiplicities match blocks")
    }

    pub fn zero(algebra: Arc<FiniteVonNeumannAlgebra>) -> Self {
        let mults = vec![0; algebra.num_blocks()];
        Self::new(algebra, mults).expect("multiplicities match blocks")
    }

    /// `ℓ²(G)` with the left regular action, in group-basis coordinates.
    pub fn regular(group: &GroupAlgebra) -> Self {
        let mut m = Self::free(group.algebra.clone(), 1);
        m.basis_map = Some(group.change_of_basis.clone());
        m
    }

    /// Builds a module from the images of algebra generators on `C^d`,
    /// normalized to isotypic form.
    ///
    /// With `group = Some(g)`, `action[i]` is the image of group element `i`
    /// and the irreducible summands are matched to the blocks of `C[G]` by
    /// their characters. Without a group the algebra is the *-algebra the
    /// action generates, each block with trace weight 1.
    pub fn from_action(action: &[CMatrix], group: Option<&GroupAlgebra>) -> Result<Self> {
        let dim = action.first().map(|m| m.nrows()).unwrap_or(0);
        for (i, m) in action.iter().enumerate() {
            if m.shape() != (dim, dim) {
                return Err(Error::shape(format!("action generator {i} is {:?}, expected {dim}x{dim}", m.shape())));
            }
        }
        if dim > 48 {
            return Err(Error::validation("action_generators", "raw-action modules are limited to carriers of dimension 48"));
        }
        let commutant = wedderburn::commutant_by_nullspace(action, dim);
        let mut sampler = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut acc = linalg::zeros(dim, dim);
            for b in &commutant {
                acc += b * linalg::random_c64(rng);
            }
            acc
        };
        let dec = wedderburn::decompose(action, dim, &mut sampler, &DecompositionOptions::default())?;
        match group {
            None => {
                let algebra = Arc::new(FiniteVonNeumannAlgebra::new(
                    dec.blocks
                        .iter()
                        .map(|b| crate::algebra::Block { dim: b.irrep_dim, weight: 1.0 })
                        .collect(),
                )?);
                let mults = dec.blocks.iter().map(|b| b.multiplicity).collect();
                let mut m = Self::new(algebra, mults)?;
                m.basis_map = Some(dec.basis);
                Ok(m)
            }
            Some(group) => {
                if action.len() > group.table.order() {
                    return Err(Error::validation("action_generators", "more images than group elements"));
                }
                // Match each found irrep to an algebra block by comparing characters.
                let mut assignment = Vec::with_capacity(dec.blocks.len());
                for (j, b) in dec.blocks.iter().enumerate() {
                    let found = group.algebra.blocks().iter().enumerate().position(|(k, blk)| {
                        blk.dim == b.irrep_dim
                            && (0..action.len()).all(|g| {
                                let ours = linalg::trace(&b.images[g]);
                                let theirs = linalg::trace(&group.images[g].blocks[k]);
                                (ours - theirs).norm() < 1e-7
                            })
                    });
                    match found {
                        Some(k) if !assignment.iter().any(|&(kk, _)| kk == k) => assignment.push((k, j)),
                        _ => {
                            return Err(Error::DecompositionFailure(format!(
                                "summand {j} could not be matched to a unique block of the group algebra"
                            )))
                        }
                    }
                }
                let mut mults = vec![0; group.algebra.num_blocks()];
                for &(k, j) in &assignment {
                    mults[k] = dec.blocks[j].multiplicity;
                }
                // Reorder columns into the algebra's block order and rotate each
                // irreducible copy onto the algebra's own matrices x_k(g).
                let mut basis = linalg::zeros(dim, dim);
                let mut col = 0;
                let mut src_offsets = Vec::new();
                let mut off = 0;
                for b in &dec.blocks {
                    src_offsets.push(off);
                    off += b.irrep_dim * b.multiplicity;
                }
                for k in 0..group.algebra.num_blocks() {
                    let Some(&(_, j)) = assignment.iter().find(|&&(kk, _)| kk == k) else { continue };
                    let b = &dec.blocks[j];
                    let n = b.irrep_dim;
                    let m = b.multiplicity;
                    let target: Vec<&CMatrix> = (0..action.len()).map(|g| &group.images[g].blocks[k]).collect();
                    let s = intertwiner(&b.images, &target)?;
                    // New copy basis: V_j S, so the action reads x_k(g) on it.
                    for a in 0..n {
                        for copy in 0..m {
                            let mut v = nalgebra::DVector::<C64>::zeros(dim);
                            for a2 in 0..n {
                                let c = s[(a2, a)];
                                let src = src_offsets[j] + a2 * m + copy;
                                v += dec.basis.column(src) * c;
                            }
                            basis.set_column(col, &v);
                            col += 1;
                        }
                    }
                }
                let mut module = Self::new(group.algebra.clone(), mults)?;
                module.basis_map = Some(basis);
                for (g, l) in action.iter().enumerate() {
                    let r = linalg::max_abs(&(module.action_matrix(&group.images[g]) - l));
                    if r > 1e-8 {
                        return Err(Error::DecompositionFailure(format!("element {g} not reproduced ({r:.2e})")));
                    }
                }
                Ok(module)
            }
        }
    }

    pub fn with_reference_gram(mut self, gram: CommutantOperator) -> Result<Self> {
        self.check_operator_shape(&gram)?;
        for (k, g) in gram.blocks.iter().enumerate() {
            if g.nrows() == 0 {
                continue;
            }
            if linalg::relative_residual(g, &g.adjoint()) > COMMUTE_TOL {
                return Err(Error::NotAdmissible(format!("reference Gram block {k} is not Hermitian")));
            }
            let (vals, _) = linalg::herm_eig(g);
            if vals[0] <= POSITIVITY_TOL * vals[vals.len() - 1] {
                return Err(Error::NotAdmissible(format!("reference Gram block {k} is not positive definite")));
            }
        }
        self.reference_gram = gram;
        Ok(self)
    }

    pub fn with_basis_map(mut self, basis_map: CMatrix) -> Result<Self> {
        let d = self.carrier_dim();
        if basis_map.shape() != (d, d) {
            return Err(Error::shape(format!("basis map is {:?}, carrier has dimension {d}", basis_map.shape())));
        }
        if linalg::max_abs(&(basis_map.adjoint() * &basis_map - linalg::identity(d))) > 1e-10 {
            return Err(Error::validation("basis_map", "basis map must be unitary"));
        }
        self.basis_map = Some(basis_map);
        Ok(self)
    }

    pub fn algebra(&self) -> &Arc<FiniteVonNeumannAlgebra> {
        &self.algebra
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn basis_map(&self) -> Option<&CMatrix> {
        self.basis_map.as_ref()
    }

    pub fn reference_gram(&self) -> &CommutantOperator {
        &self.reference_gram
    }

    pub fn carrier_dim(&self) -> usize {
        self.algebra.dims().zip(&self.multiplicities).map(|(n, &m)| n * m).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.multiplicities.iter().all(|&m| m == 0)
    }

    pub fn same_algebra(&self, other: &HilbertianModule) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra
    }

    /// `dim_τ(M) = Σ_k w_k m_k`.
    pub fn von_neumann_dimension(&self) -> f64 {
        self.algebra.weights().zip(&self.multiplicities).map(|(w, &m)| w * m as f64).sum()
    }

    /// Same module with the reference replaced; `self`'s reference is dropped.
    pub fn rereferenced(&self, gram: &CommutantOperator) -> Result<Self> {
        self.clone().with_reference_gram(gram.clone())
    }

    /// The same module over the algebra with trace `λτ`.
    pub fn with_scaled_trace(&self, lambda: f64) -> Result<Self> {
        let mut m = self.clone();
        m.algebra = Arc::new(self.algebra.scaled(lambda)?);
        Ok(m)
    }

    pub fn check_operator_shape(&self, op: &CommutantOperator) -> Result<()> {
        if op.blocks.len() != self.multiplicities.len() {
            return Err(Error::shape(format!(
                "operator has {} blocks, module has {}",
                op.blocks.len(),
                self.multiplicities.len()
            )));
        }
        for (k, (b, &m)) in op.blocks.iter().zip(&self.multiplicities).enumerate() {
            if b.shape() != (m, m) {
                return Err(Error::shape(format!("operator block {k} is {:?}, expected {m}x{m}", b.shape())));
            }
        }
        Ok(())
    }

    pub fn check_morphism_shape(&self, target: &HilbertianModule, f: &ModuleMorphism) -> Result<()> {
        if !self.same_algebra(target) {
            return Err(Error::AlgebraMismatch);
        }
        if f.blocks.len() != self.multiplicities.len() {
            return Err(Error::shape("morphism block count differs from the number of algebra blocks"));
        }
        for (k, b) in f.blocks.iter().enumerate() {
            let expected = (target.multiplicities[k], self.multiplicities[k]);
            if b.shape() != expected {
                return Err(Error::shape(format!("morphism block {k} is {:?}, expected {:?}", b.shape(), expected)));
            }
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.multiplicities.len());
        let mut off = 0;
        for (n, &m) in self.algebra.dims().zip(&self.multiplicities) {
            out.push(off);
            off += n * m;
        }
        out
    }

    fn canonical_to_carrier(&self, m: CMatrix) -> CMatrix {
        match &self.basis_map {
            Some(u) => u * m * u.adjoint(),
            None => m,
        }
    }

    /// The action of `x` on the carrier.
    pub fn action_matrix(&self, x: &AlgebraElement) -> CMatrix {
        let blocks: Vec<CMatrix> = x
            .blocks
            .iter()
            .zip(&self.multiplicities)
            .map(|(xk, &m)| linalg::kron(xk, &linalg::identity(m)))
            .collect();
        self.canonical_to_carrier(linalg::block_diag(&blocks))
    }

    pub fn operator_to_carrier(&self, op: &CommutantOperator) -> CMatrix {
        let blocks: Vec<CMatrix> = op
            .blocks
            .iter()
            .zip(self.algebra.dims())
            .map(|(b, n)| linalg::kron(&linalg::identity(n), b))
            .collect();
        self.canonical_to_carrier(linalg::block_diag(&blocks))
    }

    /// Extracts the block form of a carrier matrix; fails with
    /// `NotInCommutant` when it does not commute with the action.
    pub fn operator_from_carrier(&self, matrix: &CMatrix) -> Result<CommutantOperator> {
        let f = Self::morphism_from_carrier(self, self, matrix)?;
        Ok(f.as_operator())
    }

    pub fn morphism_to_carrier(source: &HilbertianModule, target: &HilbertianModule, f: &ModuleMorphism) -> CMatrix {
        let mut canon = linalg::zeros(target.carrier_dim(), source.carrier_dim());
        let (so, to) = (source.offsets(), target.offsets());
        for (k, n) in source.algebra.dims().enumerate() {
            let b = linalg::kron(&linalg::identity(n), &f.blocks[k]);
            canon.view_mut((to[k], so[k]), b.shape()).copy_from(&b);
        }
        let left = match &target.basis_map {
            Some(u) => u * canon,
            None => canon,
        };
        match &source.basis_map {
            Some(u) => left * u.adjoint(),
            None => left,
        }
    }

    pub fn morphism_from_carrier(
        source: &HilbertianModule,
        target: &HilbertianModule,
        matrix: &CMatrix,
    ) -> Result<ModuleMorphism> {
        if !source.same_algebra(target) {
            return Err(Error::AlgebraMismatch);
        }
        if matrix.shape() != (target.carrier_dim(), source.carrier_dim()) {
            return Err(Error::shape(format!(
                "matrix is {:?}, expected {}x{}",
                matrix.shape(),
                target.carrier_dim(),
                source.carrier_dim()
            )));
        }
        let mut canon = match &target.basis_map {
            Some(u) => u.adjoint() * matrix,
            None => matrix.clone(),
        };
        if let Some(u) = &source.basis_map {
            canon = canon * u;
        }
        let (so, to) = (source.offsets(), target.offsets());
        let blocks: Vec<CMatrix> = source
            .multiplicities
            .iter()
            .zip(&target.multiplicities)
            .enumerate()
            .map(|(k, (&ms, &mt))| canon.view((to[k], so[k]), (mt, ms)).into_owned())
            .collect();
        let f = ModuleMorphism { blocks };
        let rebuilt = Self::morphism_to_carrier(source, target, &f);
        let residual = linalg::relative_residual(&rebuilt, matrix);
        if residual > COMMUTE_TOL && linalg::max_abs(&(rebuilt - matrix)) > 1e-14 {
            return Err(Error::NotInCommutant { residual });
        }
        Ok(f)
    }

    /// Matrix units `E_{ij}` of every block: a basis of the commutant of
    /// size `Σ m_k²`.
    pub fn commutant_basis(&self) -> Vec<CommutantOperator> {
        let mut out = Vec::new();
        for (k, &m) in self.multiplicities.iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    let mut op = CommutantOperator::zero(self);
                    op.blocks[k][(i, j)] = cr(1.0);
                    out.push(op);
                }
            }
        }
        out
    }

    /// `Tr_τ(f) = Σ_k w_k tr(B_k)`.
    pub fn canonical_trace(&self, f: &CommutantOperator) -> Result<C64> {
        self.check_operator_shape(f)?;
        Ok(self
            .algebra
            .weights()
            .zip(&f.blocks)
            .map(|(w, b)| linalg::trace(b) * cr(w))
            .sum())
    }

    /// `Tr_τ` of an operator given on the carrier.
    pub fn canonical_trace_carrier(&self, matrix: &CMatrix) -> Result<C64> {
        let op = self.operator_from_carrier(matrix)?;
        self.canonical_trace(&op)
    }

    /// Checks a Gram matrix given on the carrier against conditions (α)–(δ).
    pub fn check_admissible(&self, gram: &CMatrix) -> AdmissibilityReport {
        let d = self.carrier_dim();
        if gram.shape() != (d, d) {
            return AdmissibilityReport {
                invertible: false,
                self_adjoint: false,
                positive: false,
                commutes: false,
                condition_number: f64::INFINITY,
                commutation_residual: f64::INFINITY,
                transition: None,
            };
        }
        let cond = linalg::condition_number(gram);
        let self_adjoint = linalg::relative_residual(gram, &gram.adjoint()) <= COMMUTE_TOL;
        let positive = if d == 0 {
            true
        } else {
            let (vals, _) = linalg::herm_eig(gram);
            self_adjoint && vals[0] > POSITIVITY_TOL * vals[d - 1].abs() && vals[0] > 0.0
        };
        let (commutes, residual, transition) = match self.operator_from_carrier(gram) {
            Ok(g) => {
                let t = self
                    .reference_gram
                    .inverse()
                    .map(|r| r.compose(&g))
                    .ok();
                (true, 0.0, t)
            }
            Err(Error::NotInCommutant { residual }) => (false, residual, None),
            Err(_) => (false, f64::INFINITY, None),
        };
        AdmissibilityReport {
            invertible: cond < MAX_CONDITION,
            self_adjoint,
            positive,
            commutes,
            condition_number: cond,
            commutation_residual: residual,
            transition,
        }
    }

    /// Carrier form of the reference scalar product.
    pub fn reference_gram_carrier(&self) -> CMatrix {
        self.operator_to_carrier(&self.reference_gram)
    }

    /// `M ⊕ N` with the block-sum reference product.
    pub fn direct_sum(&self, other: &HilbertianModule) -> Result<HilbertianModule> {
        if !self.same_algebra(other) {
            return Err(Error::AlgebraMismatch);
        }
        let mults: Vec<usize> = self.multiplicities.iter().zip(&other.multiplicities).map(|(a, b)| a + b).collect();
        let gram = self.reference_gram.direct_sum(&other.reference_gram);
        let mut sum = HilbertianModule::new(self.algebra.clone(), mults)?;
        sum.reference_gram = gram;
        if self.basis_map.is_some() || other.basis_map.is_some() {
            // Canonical index (k, a, j) of M ⊕ N maps to M's (k, a, j) for
            // j < m_k, else to N's (k, a, j - m_k), shifted past M's carrier.
            let d = sum.carrier_dim();
            let dm = self.carrier_dim();
            let mut perm = linalg::zeros(d, d);
            let (om, on, os) = (self.offsets(), other.offsets(), sum.offsets());
            for (k, n) in self.algebra.dims().enumerate() {
                let (mk, nk) = (self.multiplicities[k], other.multiplicities[k]);
                for a in 0..n {
                    for j in 0..mk + nk {
                        let src = os[k] + a * (mk + nk) + j;
                        let dst = if j < mk { om[k] + a * mk + j } else { dm + on[k] + a * nk + (j - mk) };
                        perm[(dst, src)] = cr(1.0);
                    }
                }
            }
            let um = self.basis_map.clone().unwrap_or_else(|| linalg::identity(dm));
            let un = other.basis_map.clone().unwrap_or_else(|| linalg::identity(other.carrier_dim()));
            sum.basis_map = Some(linalg::block_diag(&[um, un]) * perm);
        }
        Ok(sum)
    }

    /// `self^{⊕ copies}`.
    pub fn power(&self, copies: usize) -> Result<HilbertianModule> {
        let mut acc = HilbertianModule::zero(self.algebra.clone());
        if self.basis_map.is_none() {
            acc.multiplicities = self.multiplicities.iter().map(|m| m * copies).collect();
            acc.reference_gram = CommutantOperator {
                blocks: self
                    .reference_gram
                    .blocks
                    .iter()
                    .map(|g| linalg::block_diag(&vec![g.clone(); copies]))
                    .collect(),
            };
            return Ok(acc);
        }
        for _ in 0..copies {
            acc = acc.direct_sum(self)?;
        }
        Ok(acc)
    }

    /// `B = sqrt(G₁⁻¹ G₂)`, the positive square root in the commutant; it
    /// satisfies `B* G₁ B = G₂`.
    pub fn isometry_between(&self, g1: &CommutantOperator, g2: &CommutantOperator) -> Result<CommutantOperator> {
        self.check_operator_shape(g1)?;
        self.check_operator_shape(g2)?;
        let blocks = g1
            .blocks
            .iter()
            .zip(&g2.blocks)
            .map(|(a, b)| {
                let half = linalg::sqrt_psd(a);
                let half_inv = linalg::inv_sqrt_pd(a);
                let inner = &half_inv * b * &half_inv;
                half_inv * linalg::sqrt_psd(&inner) * half
            })
            .collect();
        Ok(CommutantOperator { blocks })
    }
}

/// Unitary `S` with `S^{-1} X_g S = Y_g` for two equivalent irreducible
/// representations given on the same generators.
fn intertwiner(x: &[CMatrix], y: &[&CMatrix]) -> Result<CMatrix> {
    let n = y.first().map(|m| m.nrows()).unwrap_or(0);
    if n == 1 {
        return Ok(linalg::identity(1));
    }
    // Average Σ_g X_g R Y_g^* over the generators via a linear solve: the
    // intertwiners are the null space of S ↦ X_g S - S Y_g.
    let id = linalg::identity(n);
    let mut system = linalg::zeros(2 * x.len() * n * n, n * n);
    let mut r0 = 0;
    for (xg, yg) in x.iter().zip(y) {
        for (a, b) in [((*xg).clone(), (*yg).clone()), (xg.adjoint(), yg.adjoint())] {
            let block = linalg::kron(&id, &a) - linalg::kron(&b.transpose(), &id);
            system.view_mut((r0, 0), block.shape()).copy_from(&block);
            r0 += block.nrows();
        }
    }
    let kernel = linalg::null_space(&system, 1e-9);
    if kernel.ncols() != 1 {
        return Err(Error::DecompositionFailure(format!(
            "expected a one-dimensional space of intertwiners, found {}",
            kernel.ncols()
        )));
    }
    let s = CMatrix::from_fn(n, n, |i, j| kernel[(j * n + i, 0)]);
    let c = linalg::frobenius(&s).powi(2) / n as f64;
    Ok(s * cr(1.0 / c.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{group_algebra, FiniteGroupTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c_plus_c() -> Arc<FiniteVonNeumannAlgebra> {
        Arc::new(FiniteVonNeumannAlgebra::from_pairs(&[(1, 0.5), (1, 0.5)]).unwrap())
    }

    #[test]
    fn commutant_sizes() {
        let m = HilbertianModule::new(c_plus_c(), vec![1, 1]).unwrap();
        assert_eq!(m.commutant_basis().len(), 2);
        let m2 = Arc::new(FiniteVonNeumannAlgebra::from_pairs(&[(2, 1.0)]).unwrap());
        let free = HilbertianModule::free(m2, 1);
        assert_eq!(free.commutant_basis().len(), 4);
        assert!(HilbertianModule::zero(c_plus_c()).commutant_basis().is_empty());
    }

    #[test]
    fn commutant_basis_matches_nullspace_count() {
        let ga = group_algebra(&FiniteGroupTable::symmetric(3)).unwrap();
        let m = HilbertianModule::regular(&ga);
        let action: Vec<CMatrix> = (0..6).map(|g| m.action_matrix(ga.image(g))).collect();
        let null = wedderburn::commutant_by_nullspace(&action, 6);
        assert_eq!(null.len(), m.commutant_basis().len());
        for b in m.commutant_basis() {
            let carrier = m.operator_to_carrier(&b);
            for l in &action {
                assert!(linalg::max_abs(&(l * &carrier - &carrier * l)) < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_examples() {
        let ga = group_algebra(&FiniteGroupTable::cyclic(2)).unwrap();
        let l2 = HilbertianModule::regular(&ga);
        assert!((l2.von_neumann_dimension() - 1.0).abs() < 1e-15);
        let sum = l2.direct_sum(&l2).unwrap();
        assert!((sum.von_neumann_dimension() - 2.0).abs() < 1e-15);
        assert_eq!(HilbertianModule::zero(ga.algebra.clone()).von_neumann_dimension(), 0.0);
    }

    #[test]
    fn trace_of_identity_is_dimension() {
        let m = HilbertianModule::new(c_plus_c(), vec![3, 2]).unwrap();
        let t = m.canonical_trace(&CommutantOperator::identity(&m)).unwrap();
        assert!((t.re - m.von_neumann_dimension()).abs() < 1e-15);
    }

    #[test]
    fn right_multiplication_on_regular_module_has_trace_tau() {
        let table = FiniteGroupTable::symmetric(3);
        let ga = group_algebra(&table).unwrap();
        let m = HilbertianModule::regular(&ga);
        for g in 0..6 {
            let op = m.operator_from_carrier(&table.right_regular(g)).unwrap();
            let tr = m.canonical_trace(&op).unwrap();
            let tau = ga.algebra.trace(ga.image(g)).unwrap();
            assert!((tr - tau).norm() < 1e-10);
        }
    }

    #[test]
    fn non_commuting_operator_is_rejected() {
        let ga = group_algebra(&FiniteGroupTable::cyclic(2)).unwrap();
        let m = HilbertianModule::regular(&ga);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(1.0), cr(2.0)]));
        assert!(matches!(m.canonical_trace_carrier(&diag), Err(Error::NotInCommutant { .. })));
        let report = m.check_admissible(&diag);
        assert!(report.invertible && report.self_adjoint && report.positive);
        assert!(!report.commutes && !report.admissible());
    }

    #[test]
    fn admissibility_of_scalar_grams() {
        let ga = group_algebra(&FiniteGroupTable::cyclic(3)).unwrap();
        let m = HilbertianModule::regular(&ga);
        let id = linalg::identity(3);
        let r = m.check_admissible(&id);
        assert!(r.admissible());
        assert!(r.transition.unwrap().max_abs_diff(&CommutantOperator::identity(&m)) < 1e-12);
        let r2 = m.check_admissible(&(id * cr(2.0)));
        assert!(r2.admissible());
        assert!(r2.transition.unwrap().max_abs_diff(&CommutantOperator::scalar(&m, cr(2.0))) < 1e-12);
    }

    #[test]
    fn direct_sum_adds_and_keeps_carrier_consistent() {
        let ga = group_algebra(&FiniteGroupTable::symmetric(3)).unwrap();
        let m = HilbertianModule::regular(&ga);
        let n = HilbertianModule::new(ga.algebra.clone(), vec![0, 2, 1]).unwrap();
        let s = m.direct_sum(&n).unwrap();
        assert_eq!(s.multiplicities(), &[1, 3, 3]);
        assert_eq!(s.commutant_basis().len(), 1 + 9 + 9);
        // The action on the sum is the block sum of the actions.
        for g in 0..6 {
            let x = ga.image(g);
            let expected = linalg::block_diag(&[m.action_matrix(x), n.action_matrix(x)]);
            assert!(linalg::max_abs(&(s.action_matrix(x) - expected)) < 1e-10);
        }
        let zero = HilbertianModule::zero(ga.algebra.clone());
        assert_eq!(m.direct_sum(&zero).unwrap().multiplicities(), m.multiplicities());
    }

    #[test]
    fn direct_sum_rejects_different_algebras() {
        let a = HilbertianModule::new(c_plus_c(), vec![1, 1]).unwrap();
        let b = HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1);
        assert!(matches!(a.direct_sum(&b), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn isometry_between_grams() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = HilbertianModule::new(c_plus_c(), vec![3, 2]).unwrap();
        let g1 = CommutantOperator::random_positive(&m, &mut rng);
        let g2 = CommutantOperator::random_positive(&m, &mut rng);
        let b = m.isometry_between(&g1, &g2).unwrap();
        let lhs = b.conj_transpose().compose(&g1).compose(&b);
        assert!(lhs.max_abs_diff(&g2) < 1e-9);
    }

    #[test]
    fn from_action_recovers_group_blocks() {
        let table = FiniteGroupTable::symmetric(3);
        let ga = group_algebra(&table).unwrap();
        // Permutation representation of S3 on C^3 = trivial ⊕ standard.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = linalg::random_unitary(&mut rng, 3);
        let perms = {
            let mut p: Vec<Vec<usize>> = Vec::new();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        if a != b && b != c && a != c {
                            p.push(vec![a, b, c]);
                        }
                    }
                }
            }
            p
        };
        let action: Vec<CMatrix> = perms
            .iter()
            .map(|p| {
                let mut m = linalg::zeros(3, 3);
                for i in 0..3 {
                    m[(p[i], i)] = cr(1.0);
                }
                &u * m * u.adjoint()
            })
            .collect();
        let module = HilbertianModule::from_action(&action, Some(&ga)).unwrap();
        assert_eq!(module.multiplicities(), &[1, 0, 1]);
        assert!((module.von_neumann_dimension() - (1.0 / 6.0 + 1.0 / 3.0)).abs() < 1e-14);
    }
}

//! Finite von Neumann algebras in block normal form `⊕_k M_{n_k}(C)` with a
//! weighted trace, finite group tables, and group algebras `C[G]` built from
//! the left regular representation.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, C64};
use crate::wedderburn::{self, DecompositionOptions};

/// One simple summand `M_n(C)` carrying trace weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

/// `A = ⊕_k M_{n_k}(C)` with trace `τ(x) = Σ_k w_k tr(x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteVonNeumannAlgebra {
    blocks: Vec<Block>,
}

impl FiniteVonNeumannAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::validation("algebra.blocks", "at least one block is required"));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::validation(format!("algebra.blocks[{k}]"), "block dimension must be >= 1"));
            }
            if !(b.weight.is_finite() && b.weight > 0.0) {
                return Err(Error::validation(format!("algebra.blocks[{k}]"), "trace weight must be finite and > 0"));
            }
        }
        Ok(Self { blocks })
    }

    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(dim, weight)| Block { dim, weight }).collect())
    }

    /// `C` with its standard trace.
    pub fn complex_numbers() -> Self {
        Self { blocks: vec![Block { dim: 1, weight: 1.0 }] }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(|b| b.dim)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().map(|b| b.weight)
    }

    /// `τ(1) = Σ_k w_k n_k`.
    pub fn trace_of_unit(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }

    /// The same algebra with trace `λτ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.blocks.iter().map(|b| Block { dim: b.dim, weight: lambda * b.weight }).collect())
    }

    pub fn trace(&self, x: &AlgebraElement) -> Result<C64> {
        self.check_shape(x)?;
        Ok(self
            .blocks
            .iter()
            .zip(&x.blocks)
            .map(|(b, m)| linalg::trace(m) * cr(b.weight))
            .sum())
    }

    pub fn check_shape(&self, x: &AlgebraElement) -> Result<()> {
        if x.blocks.len() != self.blocks.len() {
            return Err(Error::shape(format!(
                "element has {} blocks, algebra has {}",
                x.blocks.len(),
                self.blocks.len()
            )));
        }
        for (k, (b, m)) in self.blocks.iter().zip(&x.blocks).enumerate() {
            if m.shape() != (b.dim, b.dim) {
                return Err(Error::shape(format!("block {k} is {:?}, expected {}x{}", m.shape(), b.dim, b.dim)));
            }
        }
        Ok(())
    }
}

/// Free function form of [`FiniteVonNeumannAlgebra::trace`].
pub fn trace(algebra: &FiniteVonNeumannAlgebra, x: &AlgebraElement) -> Result<C64> {
    algebra.trace(x)
}

/// An element of `⊕_k M_{n_k}(C)`, stored blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn identity(algebra: &FiniteVonNeumannAlgebra) -> Self {
        Self { blocks: algebra.dims().map(linalg::identity).collect() }
    }

    pub fn zero(algebra: &FiniteVonNeumannAlgebra) -> Self {
        Self { blocks: algebra.dims().map(|n| linalg::zeros(n, n)).collect() }
    }

    pub fn random<R: rand::Rng + ?Sized>(algebra: &FiniteVonNeumannAlgebra, rng: &mut R) -> Self {
        Self { blocks: algebra.dims().map(|n| linalg::random_matrix(rng, n, n)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|m| m.adjoint()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }
}

/// Multiplication table of a finite group on indices `0..order`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroupTable {
    order: usize,
    product: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroupTable {
    /// Validates identity, inverse and associativity laws exhaustively.
    pub fn new(product: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let order = product.len();
        if order == 0 {
            return Err(Error::NonAssociativeTable("empty table".into()));
        }
        if identity >= order {
            return Err(Error::NonAssociativeTable(format!("identity index {identity} out of range")));
        }
        for (i, row) in product.iter().enumerate() {
            if row.len() != order {
                return Err(Error::NonAssociativeTable(format!("row {i} has length {}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= order) {
                return Err(Error::NonAssociativeTable(format!("entry {bad} in row {i} out of range")));
            }
        }
        for g in 0..order {
            if product[identity][g] != g || product[g][identity] != g {
                return Err(Error::NonAssociativeTable(format!("{identity} is not a two-sided identity for {g}")));
            }
        }
        let mut inverse = vec![usize::MAX; order];
        for g in 0..order {
            match (0..order).find(|&h| product[g][h] == identity) {
                Some(h) if product[h][g] == identity => inverse[g] = h,
                _ => return Err(Error::NonAssociativeTable(format!("element {g} has no two-sided inverse"))),
            }
        }
        for a in 0..order {
            for b in 0..order {
                let ab = product[a][b];
                for c in 0..order {
                    if product[ab][c] != product[a][product[b][c]] {
                        return Err(Error::NonAssociativeTable(format!("({a}*{b})*{c} != {a}*({b}*{c})")));
                    }
                }
            }
        }
        Ok(Self { order, product, identity, inverse })
    }

    pub fn trivial() -> Self {
        Self::new(vec![vec![0]], 0).expect("trivial group")
    }

    /// `Z/n` with generator index 1.
    pub fn cyclic(n: usize) -> Self {
        let product = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(product, 0).expect("cyclic group table")
    }

    /// The group of permutations of `0..k` (`k ≤ 5`), elements in
    /// lexicographic order so index 0 is the identity.
    pub fn symmetric(k: usize) -> Self {
        let mut perms: Vec<Vec<usize>> = Vec::new();
        permutations(&mut (0..k).collect::<Vec<_>>(), 0, &mut perms);
        perms.sort();
        let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap();
        let product = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| index(&(0..k).map(|i| a[b[i]]).collect()))
                    .collect()
            })
            .collect();
        Self::new(product, 0).expect("symmetric group table")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.product[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn product_table(&self) -> &[Vec<usize>] {
        &self.product
    }

    /// A small generating set, chosen greedily in index order.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![false; self.order];
        span[self.identity] = true;
        let mut count = 1;
        for g in 0..self.order {
            if span[g] {
                continue;
            }
            gens.push(g);
            // Close the span under right multiplication by all generators.
            let mut frontier: Vec<usize> = (0..self.order).filter(|&x| span[x]).collect();
            while let Some(x) = frontier.pop() {
                for &s in &gens {
                    let y = self.mul(x, s);
                    if !span[y] {
                        span[y] = true;
                        count += 1;
                        frontier.push(y);
                    }
                }
            }
            if count == self.order {
                break;
            }
        }
        gens
    }

    /// Left translation `δ_x ↦ δ_{gx}` on `C^{|G|}`.
    pub fn left_regular(&self, g: usize) -> CMatrix {
        let mut m = linalg::zeros(self.order, self.order);
        for x in 0..self.order {
            m[(self.mul(g, x), x)] = cr(1.0);
        }
        m
    }

    /// Right translation `δ_x ↦ δ_{xg}`; these span the commutant of the
    /// left regular representation.
    pub fn right_regular(&self, g: usize) -> CMatrix {
        let mut m = linalg::zeros(self.order, self.order);
        for x in 0..self.order {
            m[(self.mul(x, g), x)] = cr(1.0);
        }
        m
    }
}

fn permutations(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items, start + 1, out);
        items.swap(start, i);
    }
}

/// Options for [`build_group_algebra`].
#[derive(Debug, Clone)]
pub struct GroupAlgebraOptions {
    pub max_order: usize,
    pub decomposition: DecompositionOptions,
}

impl Default for GroupAlgebraOptions {
    fn default() -> Self {
        Self { max_order: 256, decomposition: DecompositionOptions::default() }
    }
}

/// `C[G]` in block form together with the Wedderburn change of basis.
#[derive(Debug, Clone)]
pub struct GroupAlgebra {
    pub table: FiniteGroupTable,
    pub algebra: Arc<FiniteVonNeumannAlgebra>,
    /// Columns are the canonical basis of `⊕_k C^{n_k} ⊗ C^{n_k}` written in
    /// the group basis `{δ_g}` of `C^{|G|}`.
    pub change_of_basis: CMatrix,
    /// Block-form image of every group element, indexed like the table.
    pub images: Vec<AlgebraElement>,
}

impl GroupAlgebra {
    pub fn image(&self, g: usize) -> &AlgebraElement {
        &self.images[g]
    }

    /// The element `Σ_g a_g g`.
    pub fn element(&self, coefficients: &[C64]) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(&self.algebra);
        for (g, &a) in coefficients.iter().enumerate() {
            if a != C64::new(0.0, 0.0) {
                acc = acc.add(&self.images[g].scale(a));
            }
        }
        acc
    }
}

/// Splits the left regular representation of `G` into isotypic blocks and
/// normalizes the block weights so that `τ(Σ a_g g) = a_e`.
pub fn build_group_algebra(table: &FiniteGroupTable, options: &GroupAlgebraOptions) -> Result<GroupAlgebra> {
    let order = table.order();
    if order > options.max_order {
        return Err(Error::validation(
            "group_table.order",
            format!("order {order} exceeds configured limit {}", options.max_order),
        ));
    }
    let generators = table.generating_set();
    let action: Vec<CMatrix> = generators.iter().map(|&g| table.left_regular(g)).collect();
    // Right translations span the commutant, so a random commutant element is a
    // random combination of them.
    let mut sampler = |rng: &mut ChaCha8Rng| {
        let mut m = linalg::zeros(order, order);
        for g in 0..order {
            let c = linalg::random_c64(rng);
            for x in 0..order {
                m[(table.mul(x, g), x)] += c;
            }
        }
        m
    };
    let decomposition = wedderburn::decompose(&action, order, &mut sampler, &options.decomposition)?;

    let mut blocks = Vec::with_capacity(decomposition.blocks.len());
    for (k, b) in decomposition.blocks.iter().enumerate() {
        if b.multiplicity != b.irrep_dim {
            return Err(Error::DecompositionFailure(format!(
                "block {k}: multiplicity {} differs from dimension {} in the regular representation",
                b.multiplicity, b.irrep_dim
            )));
        }
        blocks.push(Block { dim: b.irrep_dim, weight: b.irrep_dim as f64 / order as f64 });
    }
    let algebra = Arc::new(FiniteVonNeumannAlgebra::new(blocks)?);

    // Image of every group element: restrict L_g to the first copy of each irrep.
    let basis = &decomposition.basis;
    let mut offsets = Vec::new();
    let mut off = 0;
    for b in &decomposition.blocks {
        offsets.push(off);
        off += b.irrep_dim * b.multiplicity;
    }
    let images = (0..order)
        .map(|g| {
            let blocks = decomposition
                .blocks
                .iter()
                .zip(&offsets)
                .map(|(b, &o)| {
                    let m = b.multiplicity;
                    let first: CMatrix = CMatrix::from_fn(order, b.irrep_dim, |r, a| basis[(r, o + a * m)]);
                    // (L_g v)[g x] = v[x]
                    let mut moved = linalg::zeros(order, b.irrep_dim);
                    for x in 0..order {
                        let gx = table.mul(g, x);
                        for a in 0..b.irrep_dim {
                            moved[(gx, a)] = first[(x, a)];
                        }
                    }
                    first.adjoint() * moved
                })
                .collect();
            AlgebraElement::new(blocks)
        })
        .collect();

    Ok(GroupAlgebra { table: table.clone(), algebra, change_of_basis: decomposition.basis.clone(), images })
}

/// Convenience: the default-option build with a fixed seed.
pub fn group_algebra(table: &FiniteGroupTable) -> Result<GroupAlgebra> {
    build_group_algebra(table, &GroupAlgebraOptions::default())
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

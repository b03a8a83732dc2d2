//! Combinatorial L² torsion of a finite cell complex with coefficients in a
//! unimodular representation.
//!
//! Side conventions live here and nowhere else:
//!
//! * homology uses a right action; `C_q = M^{#q-cells}` and the block of `∂_q`
//!   at `(j, i)` is `Σ n_g ρ_R(g)` for the entry `a_{ji} = Σ n_g g` of the
//!   cellular boundary. Since `m·(gh) = (m·g)·h`, a word `g_1⋯g_r` acts as
//!   `ρ_R(g_r)⋯ρ_R(g_1)`;
//! * cohomology uses a left action; the coboundary `d_q: C^q → C^{q+1}` has
//!   block `ρ_L(a_{ji})` at `(i, j)`, words acting in their natural order.
//!   A right action becomes a left one through `ρ_L(g) = ρ_R(g)^{-1}`.

pub mod fixtures;
pub mod subdivision;
pub mod words;

use serde::Serialize;

use crate::algebra::GroupAlgebra;
use crate::chain::{self, ClassVerdict, Convention, HilbertianChainComplex, HodgeData};
use crate::error::{Error, Result};
use crate::fk;
use crate::linalg::{self, cr, CMatrix};
use crate::module::{CommutantOperator, HilbertianModule, ModuleMorphism};

pub use subdivision::{elementary_subdivide, SubdivisionData};
pub use words::{GroupRingElement, Word};

/// Tolerance for `Det_τ(ρ(g)) = 1`.
pub const UNIMODULAR_TOL: f64 = 1e-9;
/// Tolerance for relators evaluated through a representation.
pub const RELATION_TOL: f64 = 1e-9;

type Matrix = Vec<Vec<GroupRingElement>>;

#[derive(Debug, Clone)]
pub struct CellComplex {
    pub generators: Vec<String>,
    /// Cell labels per dimension.
    pub cells: Vec<Vec<String>>,
    /// `boundaries[q - 1][j][i]`: coefficient of `(q-1)`-cell `j` in `∂` of `q`-cell `i`.
    pub boundaries: Vec<Matrix>,
    /// Words that must act trivially (the relations of π that are used).
    pub relators: Vec<Word>,
    /// π is abelian, so group-ring identities may be checked after abelianizing.
    pub abelian: bool,
}

impl CellComplex {
    pub fn new(generators: Vec<String>, cells: Vec<Vec<String>>, boundaries: Vec<Matrix>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::validation("cells", "a complex needs cells in dimension 0"));
        }
        if boundaries.len() + 1 != cells.len() {
            return Err(Error::validation(
                "boundaries",
                format!("{} dimensions need {} boundary matrices, got {}", cells.len(), cells.len() - 1, boundaries.len()),
            ));
        }
        for (q0, m) in boundaries.iter().enumerate() {
            let q = q0 + 1;
            if m.len() != cells[q - 1].len() || m.iter().any(|row| row.len() != cells[q].len()) {
                return Err(Error::validation(
                    format!("boundaries.{q}"),
                    format!("expected a {}x{} matrix", cells[q - 1].len(), cells[q].len()),
                ));
            }
            for row in m {
                for e in row {
                    for (_, w) in e.terms() {
                        if w.letters().iter().any(|&(g, _)| g >= generators.len()) {
                            return Err(Error::validation(format!("boundaries.{q}"), "word uses an unknown generator"));
                        }
                    }
                }
            }
        }
        Ok(Self { generators, cells, boundaries, relators: Vec::new(), abelian: false })
    }

    pub fn with_relators(mut self, relators: Vec<Word>) -> Self {
        self.relators = relators;
        self
    }

    pub fn with_abelian(mut self, abelian: bool) -> Self {
        self.abelian = abelian;
        self
    }

    pub fn dimension(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn num_cells(&self, q: usize) -> usize {
        self.cells.get(q).map_or(0, Vec::len)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells
            .iter()
            .enumerate()
            .map(|(q, c)| if q % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) })
            .sum()
    }

    /// `∂_q` for `q ≥ 1`.
    pub fn boundary(&self, q: usize) -> &Matrix {
        &self.boundaries[q - 1]
    }

    /// Entry `(k, i)` of `∂_{q-1}∘∂_q` in the group ring: `Σ_j a^{(q)}_{ji} a^{(q-1)}_{kj}`.
    pub fn formal_square(&self, q: usize) -> Matrix {
        let (outer, inner) = (self.boundary(q - 1), self.boundary(q));
        (0..self.num_cells(q - 2))
            .map(|k| {
                (0..self.num_cells(q))
                    .map(|i| {
                        (0..self.num_cells(q - 1)).fold(GroupRingElement::zero(), |acc, j| {
                            acc.add(&inner[j][i].mul(&outer[k][j]))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Whether `∂∂ = 0` holds formally: in the free group ring, or after
    /// abelianizing when π is abelian. `false` is inconclusive for
    /// non-abelian π, where relators are needed.
    pub fn square_vanishes_formally(&self) -> bool {
        (2..=self.dimension()).all(|q| {
            self.formal_square(q)
                .iter()
                .flatten()
                .all(|e| e.is_zero() || (self.abelian && e.abelianize(self.generators.len()).is_empty()))
        })
    }

    /// Re-chooses the lift of `q`-cell `i` as `g·ẽ_i`; returns the new complex
    /// and the chain isomorphism from the old cells to the new ones.
    pub fn relift(&self, q: usize, i: usize, g: &Word) -> (CellComplex, ChainMap) {
        let mut k = self.clone();
        if q >= 1 {
            for row in k.boundaries[q - 1].iter_mut() {
                row[i] = row[i].left_mul_word(g);
            }
        }
        if q < self.dimension() {
            let ginv = g.inverse();
            for e in k.boundaries[q][i].iter_mut() {
                *e = e.right_mul_word(&ginv);
            }
        }
        let mut psi = ChainMap::identity(self);
        psi.matrices[q][i][i] = GroupRingElement::monomial(1, g.inverse());
        (k, psi)
    }
}

/// A map of based free chain complexes over the group ring: entry `(j, i)` of
/// degree `q` is the coefficient of the new cell `j` in the image of cell `i`.
#[derive(Debug, Clone)]
pub struct ChainMap {
    pub matrices: Vec<Matrix>,
}

impl ChainMap {
    pub fn identity(k: &CellComplex) -> Self {
        let matrices = k
            .cells
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|j| (0..c.len()).map(|i| if i == j { GroupRingElement::one() } else { GroupRingElement::zero() }).collect())
                    .collect()
            })
            .collect();
        Self { matrices }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Side::Right),
            "left" => Ok(Side::Left),
            _ => Err(Error::validation("side", format!("unknown side '{s}' (right|left)"))),
        }
    }
}

/// Images of the generators of π as invertible commutant operators of `M`.
#[derive(Debug, Clone)]
pub struct GroupRepresentation {
    module: HilbertianModule,
    images: Vec<CommutantOperator>,
    inverses: Vec<CommutantOperator>,
    side: Side,
}

impl GroupRepresentation {
    pub fn new(module: HilbertianModule, images: Vec<CommutantOperator>, side: Side) -> Result<Self> {
        let mut inverses = Vec::with_capacity(images.len());
        for (g, img) in images.iter().enumerate() {
            module
                .check_operator_shape(img)
                .map_err(|e| Error::validation(format!("generator_images[{g}]"), e.to_string()))?;
            inverses.push(img.inverse().map_err(|e| Error::validation(format!("generator_images[{g}]"), e.to_string()))?);
        }
        Ok(Self { module, images, inverses, side })
    }

    /// Every generator acts as the identity.
    pub fn trivial(module: HilbertianModule, generators: usize, side: Side) -> Self {
        let id = CommutantOperator::identity(&module);
        Self::new(module, vec![id; generators], side).expect("identity is invertible")
    }

    /// Generators act by the given scalars on `M`.
    pub fn scalar(module: HilbertianModule, scalars: &[crate::linalg::C64], side: Side) -> Result<Self> {
        let images = scalars.iter().map(|&s| CommutantOperator::scalar(&module, s)).collect();
        Self::new(module, images, side)
    }

    /// Right multiplication on `ℓ²(G)` by the given group elements.
    pub fn regular(group: &GroupAlgebra, elements: &[usize]) -> Result<Self> {
        let module = HilbertianModule::regular(group);
        let images = elements
            .iter()
            .map(|&g| module.operator_from_carrier(&group.table.right_regular(g)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(module, images, Side::Right)
    }

    pub fn module(&self) -> &HilbertianModule {
        &self.module
    }

    pub fn images(&self) -> &[CommutantOperator] {
        &self.images
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Swaps `ρ(g) ↔ ρ(g)^{-1}`, turning a right action into a left one and back.
    pub fn flipped(&self) -> Self {
        let side = match self.side {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        };
        Self { module: self.module.clone(), images: self.inverses.clone(), inverses: self.images.clone(), side }
    }

    pub fn to_left(&self) -> Self {
        if self.side == Side::Left { self.clone() } else { self.flipped() }
    }

    pub fn to_right(&self) -> Self {
        if self.side == Side::Right { self.clone() } else { self.flipped() }
    }

    /// The same operators on `M` with a different reference product.
    pub fn with_module(&self, module: HilbertianModule) -> Result<Self> {
        Self::new(module, self.images.clone(), self.side)
    }

    fn letter(&self, g: usize, e: i64) -> CommutantOperator {
        let base = if e > 0 { &self.images[g] } else { &self.inverses[g] };
        let mut acc = base.clone();
        for _ in 1..e.unsigned_abs() {
            acc = acc.compose(base);
        }
        acc
    }

    pub fn evaluate_word(&self, w: &Word) -> CommutantOperator {
        let mut acc = CommutantOperator::identity(&self.module);
        for &(g, e) in w.letters() {
            let l = self.letter(g, e);
            acc = match self.side {
                Side::Left => acc.compose(&l),
                Side::Right => l.compose(&acc),
            };
        }
        acc
    }

    pub fn evaluate(&self, x: &GroupRingElement) -> CommutantOperator {
        let mut acc = CommutantOperator::zero(&self.module);
        for (n, w) in x.terms() {
            acc = acc.add(&self.evaluate_word(w).scale(cr(n as f64)));
        }
        acc
    }

    /// Largest relative deviation `‖ρ(r) − I‖/‖I‖` over the relators.
    pub fn relator_residual(&self, relators: &[Word]) -> f64 {
        let id = CommutantOperator::identity(&self.module);
        relators
            .iter()
            .map(|r| self.evaluate_word(r).max_abs_diff(&id))
            .fold(0.0, f64::max)
    }
}

/// Block matrix over `M` whose `(r, c)` block is `entry(r, c)`, per algebra block.
fn assemble_blocks(
    rho: &GroupRepresentation,
    rows: usize,
    cols: usize,
    entry: impl Fn(usize, usize) -> Option<GroupRingElement>,
) -> ModuleMorphism {
    let mults = rho.module.multiplicities();
    let mut blocks: Vec<CMatrix> = mults.iter().map(|&m| linalg::zeros(rows * m, cols * m)).collect();
    for r in 0..rows {
        for c in 0..cols {
            let Some(e) = entry(r, c) else { continue };
            if e.is_zero() {
                continue;
            }
            let op = rho.evaluate(&e);
            for (k, &m) in mults.iter().enumerate() {
                blocks[k].view_mut((r * m, c * m), (m, m)).copy_from(&op.blocks[k]);
            }
        }
    }
    ModuleMorphism::new(blocks)
}

/// `C_*(K, M)` for a right action (chain convention) or `C^*(K, M)` for a left
/// action (cochain convention).
pub fn assemble_coefficients(k: &CellComplex, rho: &GroupRepresentation) -> Result<HilbertianChainComplex> {
    if rho.images.len() != k.generators.len() {
        return Err(Error::validation(
            "generator_images",
            format!("{} images for {} generators", rho.images.len(), k.generators.len()),
        ));
    }
    let residual = rho.relator_residual(&k.relators);
    if residual > RELATION_TOL {
        return Err(Error::RelationViolation { degree: 2, residual });
    }
    let m = &rho.module;
    let modules = (0..=k.dimension()).map(|q| m.power(k.num_cells(q))).collect::<Result<Vec<_>>>()?;
    let (maps, convention) = match rho.side {
        Side::Right => {
            let maps = (1..=k.dimension())
                .map(|q| {
                    let a = k.boundary(q);
                    assemble_blocks(rho, k.num_cells(q - 1), k.num_cells(q), |j, i| Some(a[j][i].clone()))
                })
                .collect();
            (maps, Convention::Chain)
        }
        Side::Left => {
            let maps = (0..k.dimension())
                .map(|q| {
                    let a = k.boundary(q + 1);
                    assemble_blocks(rho, k.num_cells(q + 1), k.num_cells(q), |i, j| Some(a[j][i].clone()))
                })
                .collect();
            (maps, Convention::Cochain)
        }
    };
    let complex = HilbertianChainComplex::new(modules, maps, convention)?;
    let report = chain::validate_complex(&complex);
    for (i, &r) in report.composition_residuals.iter().enumerate() {
        if r > 1e-10 {
            return Err(Error::RelationViolation { degree: i + 2, residual: r });
        }
    }
    Ok(complex)
}

#[derive(Debug, Clone, Serialize)]
pub struct UnimodularEntry {
    pub generator: String,
    pub det: f64,
    pub unitary: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnimodularReport {
    pub entries: Vec<UnimodularEntry>,
    pub pass: bool,
}

/// `Det_τ(ρ(g)) = 1` for every generator; unitary images pass outright.
pub fn check_unimodular(rho: &GroupRepresentation, generator_names: &[String]) -> Result<UnimodularReport> {
    let m = &rho.module;
    let r = m.reference_gram();
    let id = CommutantOperator::identity(m);
    let mut entries = Vec::with_capacity(rho.images.len());
    for (g, img) in rho.images.iter().enumerate() {
        let unitary = img.adjoint_wrt(r)?.compose(img).max_abs_diff(&id) < 1e-10;
        let det = if unitary { 1.0 } else { fk::fk_det(m, img, r)?.value };
        let name = generator_names.get(g).cloned().unwrap_or_else(|| format!("g{g}"));
        entries.push(UnimodularEntry { generator: name, det, unitary, pass: unitary || (det - 1.0).abs() <= UNIMODULAR_TOL });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(UnimodularReport { entries, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceData {
    /// Fingerprint of `M`'s reference Gram operator.
    pub module_gram: String,
    /// Fingerprints of the harmonic bases defining the Hodge products.
    pub hodge: Vec<String>,
    pub lifts: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorsionReport {
    pub euler_characteristic: i64,
    pub betti: Vec<f64>,
    pub class_verdicts: Vec<ClassVerdict>,
    /// Coordinate of `ρ_K` against `(reference of M)^{-χ} ⊗ (Hodge products on H_*)`.
    pub coordinate: f64,
    pub log_coordinate: f64,
    /// The same coordinate through the exact-sequence route.
    pub coordinate_exact_route: f64,
    pub route_discrepancy: f64,
    pub convention: Convention,
    pub unimodularity: UnimodularReport,
    pub reference: ReferenceData,
}

/// Torsion together with the data needed to compare it with another complex.
#[derive(Debug, Clone)]
pub struct TorsionComputation {
    pub report: TorsionReport,
    pub complex: HilbertianChainComplex,
    pub hodge: HodgeData,
}

pub fn torsion(k: &CellComplex, rho: &GroupRepresentation) -> Result<TorsionReport> {
    Ok(torsion_full(k, rho)?.report)
}

pub fn torsion_full(k: &CellComplex, rho: &GroupRepresentation) -> Result<TorsionComputation> {
    let unimodularity = check_unimodular(rho, &k.generators)?;
    if let Some(bad) = unimodularity.entries.iter().find(|e| !e.pass) {
        return Err(Error::NotUnimodular { generator: bad.generator.clone(), det: bad.det });
    }
    compute(k, rho, unimodularity)
}

/// As [`torsion_full`] without the unimodularity gate; used to exhibit what
/// goes wrong when the hypothesis fails.
pub fn torsion_unchecked(k: &CellComplex, rho: &GroupRepresentation) -> Result<TorsionComputation> {
    let unimodularity = check_unimodular(rho, &k.generators)?;
    compute(k, rho, unimodularity)
}

fn compute(k: &CellComplex, rho: &GroupRepresentation, unimodularity: UnimodularReport) -> Result<TorsionComputation> {
    let complex = assemble_coefficients(k, rho)?;
    let hodge = chain::hodge(&complex)?;
    let class_verdicts: Vec<ClassVerdict> = chain::determinant_class_check(&complex)?;
    if let Some(v) = class_verdicts.iter().find(|v| v.convergence.verdict != fk::Verdict::Pass) {
        return Err(Error::NotDeterminantClass { degree: v.degree, detail: v.convergence.detail.clone() });
    }
    let lap = chain::phi_from_hodge(&complex, &hodge);
    let exact = chain::phi_via_exact_sequences(&complex)?;
    let discrepancy = (lap.coordinate - exact.coordinate).abs() / lap.coordinate;
    let reference = ReferenceData {
        module_gram: rho.module.reference_gram().fingerprint(),
        hodge: hodge.degrees.iter().map(|d| d.embedding.as_operator().fingerprint()).collect(),
        lifts: "as given".into(),
    };
    let report = TorsionReport {
        euler_characteristic: k.euler_characteristic(),
        betti: hodge.betti_numbers(),
        class_verdicts,
        coordinate: lap.coordinate,
        log_coordinate: lap.coordinate.ln(),
        coordinate_exact_route: exact.coordinate,
        route_discrepancy: discrepancy,
        convention: complex.convention(),
        unimodularity,
        reference,
    };
    Ok(TorsionComputation { report, complex, hodge })
}

/// L² Betti numbers of `K` with coefficients in `ρ`.
pub fn betti_numbers(k: &CellComplex, rho: &GroupRepresentation) -> Result<Vec<f64>> {
    let complex = assemble_coefficients(k, rho)?;
    Ok(chain::hodge(&complex)?.betti_numbers())
}

/// The chain map `ψ ⊗ M` between assembled complexes (right action).
pub fn tensor_chain_map(psi: &ChainMap, rho: &GroupRepresentation) -> Vec<ModuleMorphism> {
    psi.matrices
        .iter()
        .map(|m| {
            let rows = m.len();
            let cols = m.first().map_or(0, Vec::len);
            assemble_blocks(rho, rows, cols, |j, i| Some(m[j][i].clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub source: f64,
    pub target: f64,
    /// `Π_i Det(H_i(ψ))^{(-1)^i}` between the two Hodge references.
    pub homology_factor: f64,
    /// `source · homology_factor`, the pushed-forward coordinate.
    pub pushed: f64,
    pub discrepancy: f64,
}

/// Pushes the source torsion along `ψ` on reduced homology and compares it
/// with the target torsion.
pub fn compare_along(
    source: &TorsionComputation,
    target: &TorsionComputation,
    psi: &[ModuleMorphism],
) -> Result<ComparisonReport> {
    let n = source.hodge.degrees.len();
    if target.hodge.degrees.len() != n || psi.len() != n {
        return Err(Error::shape("complexes and chain map differ in length"));
    }
    let weights: Vec<f64> = source.complex.modules()[0].algebra().weights().collect();
    let mut log_factor = 0.0;
    for i in 0..n {
        let (hs, ht) = (&source.hodge.degrees[i], &target.hodge.degrees[i]);
        let gt = &target.complex.grams()[i];
        for (k, w) in weights.iter().enumerate() {
            // Coordinates of ψ on harmonic representatives: J'^* G' ψ J.
            let f = ht.embedding.blocks[k].adjoint() * &gt.blocks[k] * &psi[i].blocks[k] * &hs.embedding.blocks[k];
            if f.nrows() != f.ncols() {
                return Err(Error::NotIso(format!(
                    "degree {i}, block {k}: reduced homology dimensions {} and {} differ",
                    f.ncols(),
                    f.nrows()
                )));
            }
            if f.nrows() == 0 {
                continue;
            }
            let det = f.clone().determinant().norm();
            if !(det > 1e-12) {
                return Err(Error::NotIso(format!("degree {i}, block {k}: induced map on homology is singular")));
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            log_factor += sign * w * det.ln();
        }
    }
    let homology_factor = log_factor.exp();
    let pushed = source.report.coordinate * homology_factor;
    let target_c = target.report.coordinate;
    Ok(ComparisonReport {
        source: source.report.coordinate,
        target: target_c,
        homology_factor,
        pushed,
        discrepancy: (pushed - target_c).abs() / target_c,
    })
}

/// Compares `ρ_K` and `ρ_{K'}` along the subdivision chain map `ψ`.
pub fn invariance_check(
    k: &CellComplex,
    k2: &CellComplex,
    psi: &ChainMap,
    rho: &GroupRepresentation,
) -> Result<ComparisonReport> {
    if rho.side != Side::Right {
        return Err(Error::validation("side", "subdivision invariance is checked on the homological complex"));
    }
    let a = torsion_full(k, rho)?;
    let b = torsion_full(k2, rho)?;
    compare_along(&a, &b, &tensor_chain_map(psi, rho))
}

/// Torsion of `K` for two reference products on `M`, compared through the
/// identity on reduced homology. The coordinates agree when `χ(K) = 0`.
pub fn metric_comparison(k: &CellComplex, rho: &GroupRepresentation, gram: &CommutantOperator) -> Result<ComparisonReport> {
    let a = torsion_full(k, rho)?;
    let other = rho.with_module(rho.module.rereferenced(gram)?)?;
    let b = torsion_full(k, &other)?;
    let id = tensor_chain_map(&ChainMap::identity(k), rho);
    compare_along(&a, &b, &id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteVonNeumannAlgebra;
    use std::sync::Arc;

    fn c() -> HilbertianModule {
        HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1)
    }

    #[test]
    fn circle_with_sign_representation() {
        let k = fixtures::circle(1);
        let rho = GroupRepresentation::scalar(c(), &[cr(-1.0)], Side::Right).unwrap();
        let cx = assemble_coefficients(&k, &rho).unwrap();
        assert!((cx.maps()[0].blocks[0][(0, 0)].re + 2.0).abs() < 1e-15);
        let r = torsion(&k, &rho).unwrap();
        assert_eq!(r.euler_characteristic, 0);
        assert!((r.coordinate - 0.5).abs() < 1e-14);
        assert!(r.route_discrepancy < 1e-12);
    }

    #[test]
    fn unimodularity_examples() {
        let rho = GroupRepresentation::scalar(c(), &[cr(2.0)], Side::Right).unwrap();
        let rep = check_unimodular(&rho, &["t".into()]).unwrap();
        assert!(!rep.pass);
        assert!((rep.entries[0].det - 2.0).abs() < 1e-14);
        match torsion(&fixtures::circle(1), &rho) {
            Err(Error::NotUnimodular { det, .. }) => assert!((det - 2.0).abs() < 1e-14),
            other => panic!("expected refusal, got {other:?}"),
        }
        let alg = Arc::new(FiniteVonNeumannAlgebra::from_pairs(&[(1, 0.5), (1, 0.5)]).unwrap());
        let m = HilbertianModule::new(alg, vec![1, 1]).unwrap();
        let img = CommutantOperator::new(vec![CMatrix::from_element(1, 1, cr(2.0)), CMatrix::from_element(1, 1, cr(0.5))]);
        let rho = GroupRepresentation::new(m, vec![img], Side::Right).unwrap();
        let rep = check_unimodular(&rho, &["t".into()]).unwrap();
        assert!(rep.pass && !rep.entries[0].unitary);
        assert!((rep.entries[0].det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_action_reverses_words() {
        let alg = Arc::new(FiniteVonNeumannAlgebra::complex_numbers());
        let m = HilbertianModule::free(alg, 2);
        let a = CommutantOperator::new(vec![CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])]);
        let b = CommutantOperator::new(vec![CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(0.0), cr(1.0)])]);
        let right = GroupRepresentation::new(m.clone(), vec![a.clone(), b.clone()], Side::Right).unwrap();
        let left = GroupRepresentation::new(m, vec![a.clone(), b.clone()], Side::Left).unwrap();
        let ab = Word::from_letters([(0, 1), (1, 1)]);
        assert!(right.evaluate_word(&ab).max_abs_diff(&b.compose(&a)) < 1e-15);
        assert!(left.evaluate_word(&ab).max_abs_diff(&a.compose(&b)) < 1e-15);
    }
}

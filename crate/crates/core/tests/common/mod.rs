//! Random complexes shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use l2torsion::algebra::{group_algebra, FiniteGroupTable, FiniteVonNeumannAlgebra};
use l2torsion::chain::{Convention, HilbertianChainComplex};
use l2torsion::linalg::{self, CMatrix};
use l2torsion::module::{CommutantOperator, HilbertianModule, ModuleMorphism};
use rand::Rng;

/// The four coefficient algebras exercised everywhere: C, C[Z/2], C[Z/3], C[S₃].
pub fn algebra_fixtures() -> Vec<(&'static str, Arc<FiniteVonNeumannAlgebra>)> {
    vec![
        ("C", Arc::new(FiniteVonNeumannAlgebra::complex_numbers())),
        ("C[Z/2]", group_algebra(&FiniteGroupTable::cyclic(2)).unwrap().algebra),
        ("C[Z/3]", group_algebra(&FiniteGroupTable::cyclic(3)).unwrap().algebra),
        ("C[S3]", group_algebra(&FiniteGroupTable::symmetric(3)).unwrap().algebra),
    ]
}

fn low_rank<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, rank: usize) -> CMatrix {
    linalg::random_matrix(rng, rows, rank) * linalg::random_matrix(rng, rank, cols)
}

/// Orthogonal projector onto the complement of the column space of `b`.
fn co_range(b: &CMatrix) -> CMatrix {
    let q = linalg::range_basis(b, 1e-12);
    linalg::identity(b.nrows()) - &q * q.adjoint()
}

/// A random complex with `lengths + 1` modules and `∂∂ = 0` built blockwise.
/// With `acyclic`, every differential has the largest rank allowed by
/// exactness, so homology vanishes whenever the dimensions permit it.
pub fn random_complex<R: Rng + ?Sized>(
    rng: &mut R,
    algebra: &Arc<FiniteVonNeumannAlgebra>,
    degrees: usize,
    convention: Convention,
    acyclic: bool,
    random_grams: bool,
) -> HilbertianChainComplex {
    let blocks = algebra.num_blocks();
    // Chain-ordered multiplicities D_0..D_N and maps f_i: D_{i+1} → D_i.
    let mults: Vec<Vec<usize>> = (0..=degrees).map(|_| (0..blocks).map(|_| rng.random_range(0..=3)).collect()).collect();
    let mut maps: Vec<Vec<CMatrix>> = vec![Vec::new(); degrees];
    for k in 0..blocks {
        let mut above: Option<CMatrix> = None;
        for i in (0..degrees).rev() {
            let (rows, cols) = (mults[i][k], mults[i + 1][k]);
            let used = above.as_ref().map_or(0, |a| linalg::range_basis(a, 1e-12).ncols());
            let room = (cols - used).min(rows);
            let rank = if acyclic { room } else { rng.random_range(0..=room) };
            let mut f = low_rank(rng, rows, cols, rank);
            if let Some(a) = &above {
                f = f * co_range(a);
            }
            maps[i].push(f.clone());
            above = Some(f);
        }
    }
    let modules: Vec<HilbertianModule> =
        mults.iter().map(|m| HilbertianModule::new(algebra.clone(), m.clone()).unwrap()).collect();
    let maps: Vec<ModuleMorphism> = maps.into_iter().map(ModuleMorphism::new).collect();
    let (modules, maps) = match convention {
        Convention::Chain => (modules, maps),
        Convention::Cochain => (modules.into_iter().rev().collect(), maps.into_iter().rev().collect()),
    };
    let c = HilbertianChainComplex::new(modules, maps, convention).unwrap();
    if random_grams {
        let grams = c.modules().iter().map(|m| CommutantOperator::random_positive(m, rng)).collect();
        c.with_grams(grams).unwrap()
    } else {
        c
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

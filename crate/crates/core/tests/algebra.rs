use std::sync::Arc;

use l2torsion::algebra::{group_algebra, AlgebraElement, FiniteGroupTable, FiniteVonNeumannAlgebra, GroupAlgebra};
use l2torsion::error::Error;
use l2torsion::linalg::{self, cr, CMatrix, C64};
use l2torsion::module::{CommutantOperator, HilbertianModule};
use l2torsion::wedderburn::commutant_by_nullspace;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn algebra(pairs: &[(usize, f64)]) -> Arc<FiniteVonNeumannAlgebra> {
    Arc::new(FiniteVonNeumannAlgebra::from_pairs(pairs).unwrap())
}

fn blocks_of(ga: &GroupAlgebra) -> Vec<(usize, f64)> {
    let mut b: Vec<_> = ga.algebra.blocks().iter().map(|b| (b.dim, b.weight)).collect();
    b.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    b
}

fn group_trace(ga: &GroupAlgebra, g: usize) -> C64 {
    ga.algebra.trace(ga.image(g)).unwrap()
}

#[test]
fn z2_blocks_and_trace() {
    let ga = group_algebra(&FiniteGroupTable::cyclic(2)).unwrap();
    assert_eq!(blocks_of(&ga), vec![(1, 0.5), (1, 0.5)]);
    assert!((group_trace(&ga, 0) - cr(1.0)).norm() < 1e-12);
    assert!(group_trace(&ga, 1).norm() < 1e-12);
}

#[test]
fn trivial_group_is_one_block() {
    let ga = group_algebra(&FiniteGroupTable::trivial()).unwrap();
    assert_eq!(blocks_of(&ga), vec![(1, 1.0)]);
}

#[test]
fn s3_blocks_and_regular_character() {
    let table = FiniteGroupTable::symmetric(3);
    let ga = group_algebra(&table).unwrap();
    let b = blocks_of(&ga);
    let dims: Vec<usize> = b.iter().map(|x| x.0).collect();
    assert_eq!(dims, vec![1, 1, 2]);
    for (got, want) in b.iter().map(|x| x.1).zip([1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    // τ(g) against (1/6)·Tr of the regular representation.
    for g in 0..6 {
        let regular = linalg::trace(&table.left_regular(g)) / cr(6.0);
        assert!((group_trace(&ga, g) - regular).norm() < 1e-12, "g = {g}");
        let expected = if g == table.identity() { 1.0 } else { 0.0 };
        assert!((group_trace(&ga, g) - cr(expected)).norm() < 1e-12);
    }
}

#[test]
fn trace_examples() {
    let a = algebra(&[(1, 0.5), (1, 0.5)]);
    assert!((a.trace(&AlgebraElement::identity(&a)).unwrap() - cr(1.0)).norm() < 1e-15);
    let x = AlgebraElement::new(vec![CMatrix::from_element(1, 1, cr(2.0)), CMatrix::from_element(1, 1, cr(0.0))]);
    assert!((a.trace(&x).unwrap() - cr(1.0)).norm() < 1e-15);
    let wrong = AlgebraElement::new(vec![CMatrix::from_element(2, 2, cr(1.0))]);
    assert!(a.trace(&wrong).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_is_cyclic_on_s3(seed in any::<u64>()) {
        let ga = group_algebra(&FiniteGroupTable::symmetric(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = AlgebraElement::random(&ga.algebra, &mut rng);
        let y = AlgebraElement::random(&ga.algebra, &mut rng);
        let xy = ga.algebra.trace(&x.mul(&y)).unwrap();
        let yx = ga.algebra.trace(&y.mul(&x)).unwrap();
        prop_assert!((xy - yx).norm() < 1e-12);
    }

    #[test]
    fn trace_is_additive_on_block_operators(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = algebra(&[(1, 0.3), (2, 0.2), (3, 0.1)]);
        let m = HilbertianModule::new(a.clone(), vec![1, 2, 1]).unwrap();
        let n = HilbertianModule::new(a, vec![2, 0, 1]).unwrap();
        let (p, d) = (CommutantOperator::random(&m, &mut rng), CommutantOperator::random(&n, &mut rng));
        let b = l2torsion::module::ModuleMorphism::random(&n, &m, &mut rng);
        let sum = m.direct_sum(&n).unwrap();
        let whole = CommutantOperator::block_2x2(&p, Some(&b), None, &d);
        let lhs = sum.canonical_trace(&whole).unwrap();
        let rhs = m.canonical_trace(&p).unwrap() + n.canonical_trace(&d).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
    }
}

#[test]
fn commutant_sizes_match_nullspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases: Vec<(Arc<FiniteVonNeumannAlgebra>, Vec<usize>, usize)> = vec![
        (algebra(&[(1, 0.5), (1, 0.5)]), vec![1, 1], 2),
        (algebra(&[(2, 1.0)]), vec![2], 4),
        (algebra(&[(1, 0.5), (2, 0.25)]), vec![0, 0], 0),
        (algebra(&[(1, 0.5), (2, 0.25)]), vec![3, 1], 10),
    ];
    for (a, mults, expected) in cases {
        let m = HilbertianModule::new(a.clone(), mults).unwrap();
        assert_eq!(m.commutant_basis().len(), expected);
        if m.carrier_dim() > 0 {
            let action: Vec<CMatrix> =
                (0..2).map(|_| m.action_matrix(&AlgebraElement::random(&a, &mut rng))).collect();
            assert_eq!(commutant_by_nullspace(&action, m.carrier_dim()).len(), expected);
        }
    }
}

#[test]
fn trace_of_identity_is_dimension() {
    let a = algebra(&[(1, 0.25), (2, 0.125), (3, 0.5)]);
    let m = HilbertianModule::new(a, vec![2, 1, 3]).unwrap();
    let tr = m.canonical_trace(&CommutantOperator::identity(&m)).unwrap();
    assert!((tr.re - (0.25 * 2.0 + 0.125 + 0.5 * 3.0)).abs() < 1e-15);
    assert!((tr.re - m.von_neumann_dimension()).abs() < 1e-15);
}

/// Right multiplication by `a = Σ a_g g` on `ℓ²(G)` in the group basis.
fn right_multiplication(table: &FiniteGroupTable, a: &[C64]) -> CMatrix {
    let n = table.order();
    let mut m = linalg::zeros(n, n);
    for (g, &c) in a.iter().enumerate() {
        for x in 0..n {
            m[(table.mul(x, g), x)] += c;
        }
    }
    m
}

#[test]
fn free_module_trace_is_sum_of_diagonal_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for table in [FiniteGroupTable::cyclic(3), FiniteGroupTable::symmetric(3)] {
        let ga = group_algebra(&table).unwrap();
        let order = table.order();
        let l2g = HilbertianModule::regular(&ga);
        // Rank 1: Tr_τ(R_a) = τ(a) = a_e.
        let a: Vec<C64> = (0..order).map(|_| linalg::random_c64(&mut rng)).collect();
        let tr = l2g.canonical_trace_carrier(&right_multiplication(&table, &a)).unwrap();
        assert!((tr - a[table.identity()]).norm() < 1e-10);
        // Rank 2: α ∈ M_2(C[G]) acting blockwise; Tr_τ = τ(α_00) + τ(α_11).
        let free2 = l2g.power(2).unwrap();
        let alpha: Vec<Vec<Vec<C64>>> = (0..2)
            .map(|_| (0..2).map(|_| (0..order).map(|_| linalg::random_c64(&mut rng)).collect()).collect())
            .collect();
        let mut carrier = linalg::zeros(2 * order, 2 * order);
        for i in 0..2 {
            for j in 0..2 {
                carrier.view_mut((i * order, j * order), (order, order)).copy_from(&right_multiplication(&table, &alpha[i][j]));
            }
        }
        let tr = free2.canonical_trace_carrier(&carrier).unwrap();
        let expected = alpha[0][0][table.identity()] + alpha[1][1][table.identity()];
        assert!((tr - expected).norm() < 1e-10, "{tr} vs {expected}");
    }
}

#[test]
fn dimensions() {
    let ga = group_algebra(&FiniteGroupTable::cyclic(2)).unwrap();
    let l2 = HilbertianModule::regular(&ga);
    assert!((l2.von_neumann_dimension() - 1.0).abs() < 1e-15);
    assert!((l2.direct_sum(&l2).unwrap().von_neumann_dimension() - 2.0).abs() < 1e-15);
    assert_eq!(HilbertianModule::zero(ga.algebra.clone()).von_neumann_dimension(), 0.0);
}

#[test]
fn admissibility_examples() {
    let ga = group_algebra(&FiniteGroupTable::cyclic(2)).unwrap();
    let m = HilbertianModule::regular(&ga);
    let id = linalg::identity(2);
    let r = m.check_admissible(&id);
    assert!(r.invertible && r.self_adjoint && r.positive && r.commutes);
    assert!(m.check_admissible(&(&id * cr(2.0))).admissible());
    // Positive but not invariant under the swap δ_e ↔ δ_g.
    let skew = CMatrix::from_row_slice(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(1.0)]);
    let r = m.check_admissible(&skew);
    assert!(r.positive && r.self_adjoint && !r.commutes && !r.admissible());
    assert!(matches!(m.operator_from_carrier(&skew), Err(Error::NotInCommutant { .. })));
}

#[test]
fn direct_sums() {
    let a = algebra(&[(1, 0.5), (2, 0.25)]);
    let m = HilbertianModule::new(a.clone(), vec![2, 1]).unwrap();
    let n = HilbertianModule::new(a.clone(), vec![1, 3]).unwrap();
    let zero = HilbertianModule::zero(a.clone());
    let mz = m.direct_sum(&zero).unwrap();
    assert_eq!(mz.multiplicities(), m.multiplicities());
    assert_eq!(mz.carrier_dim(), m.carrier_dim());
    let s = m.direct_sum(&n).unwrap();
    assert!((s.von_neumann_dimension() - m.von_neumann_dimension() - n.von_neumann_dimension()).abs() < 1e-15);
    assert_eq!(s.commutant_basis().len(), 3 * 3 + 4 * 4);
    let other = HilbertianModule::new(algebra(&[(1, 1.0)]), vec![1]).unwrap();
    assert!(m.direct_sum(&other).is_err());
}

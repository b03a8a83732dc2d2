use std::sync::Arc;

use l2torsion::algebra::{group_algebra, FiniteGroupTable, FiniteVonNeumannAlgebra};
use l2torsion::chain::Convention;
use l2torsion::error::Error;
use l2torsion::linalg::{cr, C64};
use l2torsion::module::{CommutantOperator, HilbertianModule};
use l2torsion::torsion::fixtures;
use l2torsion::torsion::subdivision::edge_subdivision;
use l2torsion::torsion::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar_rep(values: &[f64]) -> GroupRepresentation {
    let c = HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1);
    let v: Vec<C64> = values.iter().map(|&x| cr(x)).collect();
    GroupRepresentation::scalar(c, &v, Side::Right).unwrap()
}

fn trivial_rep(generators: usize) -> GroupRepresentation {
    scalar_rep(&vec![1.0; generators])
}

fn regular_z(n: usize, generators: &[usize]) -> GroupRepresentation {
    let ga = group_algebra(&FiniteGroupTable::cyclic(n)).unwrap();
    GroupRepresentation::regular(&ga, generators).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn circle_minus_one_gives_one_half() {
    let k = fixtures::circle(1);
    let r = torsion(&k, &scalar_rep(&[-1.0])).unwrap();
    // 1×1 complex C → C with ∂ = −2: |ρ(t) − 1|^{-1}.
    assert!(close(r.coordinate, 1.0 / (-1.0f64 - 1.0).abs(), 1e-14));
    assert!(close(r.coordinate_exact_route, 0.5, 1e-12));
    assert_eq!(r.euler_characteristic, 0);
    assert_eq!(r.convention, Convention::Chain);
    assert!(r.betti.iter().all(|b| b.abs() < 1e-12));
}

#[test]
fn regular_representation_of_cyclic_group_on_circle() {
    for n in [2, 3, 5] {
        let b = betti_numbers(&fixtures::circle(1), &regular_z(n, &[1])).unwrap();
        assert!(close(b[0], 1.0 / n as f64, 1e-12) && close(b[1], 1.0 / n as f64, 1e-12), "{n}: {b:?}");
    }
}

#[test]
fn trivial_coefficients_reproduce_rational_betti_numbers() {
    let cases: [(CellComplex, Vec<f64>); 5] = [
        (fixtures::circle(3), vec![1.0, 1.0]),
        (fixtures::torus(), vec![1.0, 2.0, 1.0]),
        (fixtures::klein(), vec![1.0, 1.0, 0.0]),
        (fixtures::rp2(), vec![1.0, 0.0, 0.0]),
        (fixtures::lens(4), vec![1.0, 0.0, 0.0, 1.0]),
    ];
    for (k, expected) in cases {
        let b = betti_numbers(&k, &trivial_rep(k.generators.len())).unwrap();
        for (x, y) in b.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-10, "{b:?} vs {expected:?}");
        }
    }
}

#[test]
fn interval_against_hand_hodge_computation() {
    let r = torsion(&fixtures::interval(), &trivial_rep(0)).unwrap();
    // ∂ = (−1, 1)ᵀ; Δ₁⁺ has spectrum {2}, so the coordinate is 2^{-1/2}.
    assert_eq!(r.euler_characteristic, 1);
    assert!(close(r.betti[0], 1.0, 1e-12) && r.betti[1].abs() < 1e-12);
    assert!(close(r.coordinate, 2f64.powf(-0.5), 1e-13));
}

fn classical_cyclic_torsion(n: usize, j: usize) -> f64 {
    // Lens L(n,1) with t ↦ ω^j: ∂₁ = ∂₃ = ω^j − 1, ∂₂ = Σ ω^{jk}.
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
    let d1 = (w - 1.0).norm();
    let d2: f64 = (0..n).map(|k| w.powu(k as u32)).sum::<C64>().norm();
    if d1 < 1e-12 {
        d2
    } else {
        1.0 / (d1 * d1)
    }
}

#[test]
fn lens_with_regular_representation_matches_characters() {
    for n in [2usize, 3, 5] {
        let k = fixtures::lens(n);
        let r = torsion(&k, &regular_z(n, &[1])).unwrap();
        let oracle: f64 = (0..n).map(|j| classical_cyclic_torsion(n, j).powf(1.0 / n as f64)).product();
        assert!(close(r.coordinate, oracle, 1e-10), "n={n}: {} vs {oracle}", r.coordinate);
        assert!(close(oracle, (n as f64).powf(-1.0 / n as f64), 1e-12));
        // Per-character runs with A = C, combined with trace weights 1/n.
        let mut combined = 1.0;
        for j in 0..n {
            let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let c = HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1);
            let rho = GroupRepresentation::scalar(c, &[w], Side::Right).unwrap();
            combined *= torsion(&k, &rho).unwrap().coordinate.powf(1.0 / n as f64);
        }
        assert!(close(r.coordinate, combined, 1e-10));
    }
}

#[test]
fn non_unimodular_representation_is_refused() {
    match torsion(&fixtures::circle(1), &scalar_rep(&[2.0])) {
        Err(e @ Error::NotUnimodular { .. }) => assert!(e.is_refusal()),
        other => panic!("expected NotUnimodular, got {other:?}"),
    }
}

#[test]
fn relators_are_enforced() {
    let c = HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1);
    let rho = GroupRepresentation::scalar(c, &[C64::i(), cr(1.0)], Side::Right).unwrap();
    assert!(matches!(torsion(&fixtures::klein(), &rho), Err(Error::RelationViolation { .. })));
}

fn subdivision_discrepancy(k: &CellComplex, data: &SubdivisionData, rho: &GroupRepresentation) -> f64 {
    let (k2, psi) = elementary_subdivide(k, data).unwrap();
    invariance_check(k, &k2, &psi, rho).unwrap().discrepancy
}

#[test]
fn interval_subdivision_with_trivial_coefficients() {
    let k = fixtures::interval();
    let rho = trivial_rep(0);
    let (k2, psi) = elementary_subdivide(&k, &edge_subdivision(&k, 0)).unwrap();
    let rep = invariance_check(&k, &k2, &psi, &rho).unwrap();
    // Path with three vertices: det of the reduced Laplacian is 3.
    assert!(close(rep.target, 3f64.powf(-0.5), 1e-12));
    assert!(close(rep.homology_factor, 2.0 / 6f64.sqrt(), 1e-12));
    assert!(rep.discrepancy < 1e-9);
}

#[test]
fn circle_subdivisions() {
    let k = fixtures::circle(1);
    let data = edge_subdivision(&k, 0);
    assert!(subdivision_discrepancy(&k, &data, &scalar_rep(&[-1.0])) < 1e-9);
    assert!(subdivision_discrepancy(&k, &data, &trivial_rep(1)) < 1e-9);
    assert!(subdivision_discrepancy(&k, &data, &regular_z(3, &[1])) < 1e-8);
    let k3 = fixtures::circle(3);
    for cell in 0..3 {
        assert!(subdivision_discrepancy(&k3, &edge_subdivision(&k3, cell), &regular_z(4, &[1])) < 1e-8);
    }
}

#[test]
fn torus_subdivisions() {
    let k = fixtures::torus();
    let reps = [trivial_rep(2), scalar_rep(&[-1.0, 1.0]), regular_z(3, &[1, 2])];
    for rho in &reps {
        assert!(subdivision_discrepancy(&k, &fixtures::torus_diagonal(), rho) < 1e-8);
        assert!(subdivision_discrepancy(&k, &edge_subdivision(&k, 1), rho) < 1e-8);
    }
}

#[test]
fn lift_independence_and_its_failure_without_unimodularity() {
    let k = fixtures::torus();
    let rho = regular_z(3, &[1, 2]);
    let g = Word::parse("a b^-1", &k.generators).unwrap();
    for (q, i) in [(0, 0), (1, 1), (2, 0)] {
        let (k2, psi) = k.relift(q, i, &g);
        let a = torsion_full(&k, &rho).unwrap();
        let b = torsion_full(&k2, &rho).unwrap();
        assert!(compare_along(&a, &b, &tensor_chain_map(&psi, &rho)).unwrap().discrepancy < 1e-9);
    }
    // ρ(t) = 2 is not unimodular: re-lifting the edge by t shifts the
    // coordinate by exactly Det ρ(t) = 2.
    let k = fixtures::circle(1);
    let rho = scalar_rep(&[2.0]);
    let t = Word::generator(0);
    let (k2, psi) = k.relift(1, 0, &t);
    let a = torsion_unchecked(&k, &rho).unwrap();
    let b = torsion_unchecked(&k2, &rho).unwrap();
    let rep = compare_along(&a, &b, &tensor_chain_map(&psi, &rho)).unwrap();
    assert!(close(rep.pushed / rep.target, 2.0, 1e-12));
}

#[test]
fn metric_independence_when_euler_characteristic_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ga = group_algebra(&FiniteGroupTable::cyclic(3)).unwrap();
    let rho = GroupRepresentation::regular(&ga, &[1, 2]).unwrap();
    for _ in 0..5 {
        let gram = CommutantOperator::random_positive(rho.module(), &mut rng);
        assert!(metric_comparison(&fixtures::torus(), &rho, &gram).unwrap().discrepancy < 1e-8);
        let circle_rho = GroupRepresentation::regular(&ga, &[1]).unwrap();
        assert!(metric_comparison(&fixtures::circle(2), &circle_rho, &gram).unwrap().discrepancy < 1e-8);
    }
    // χ = 1: scaling the reference product by 4 rescales the coordinate.
    let rho = trivial_rep(0);
    let gram = CommutantOperator::scalar(rho.module(), cr(4.0));
    assert!(metric_comparison(&fixtures::interval(), &rho, &gram).unwrap().discrepancy > 0.1);
}

#[test]
fn cohomology_route_inverts_homology_route_for_unitary_coefficients() {
    // 1×1 oracle: a block x contributes |x|^{-1} to the chain coordinate and |x| to the cochain one.
    let h = torsion(&fixtures::circle(1), &scalar_rep(&[-1.0])).unwrap();
    let c = torsion(&fixtures::circle(1), &scalar_rep(&[-1.0]).to_left()).unwrap();
    assert_eq!(c.convention, Convention::Cochain);
    assert!(close(h.coordinate, 0.5, 1e-14) && close(c.coordinate, 2.0, 1e-14));

    let cases: Vec<(CellComplex, GroupRepresentation)> = vec![
        (fixtures::torus(), trivial_rep(2)),
        (fixtures::torus(), regular_z(3, &[1, 2])),
        (fixtures::klein(), scalar_rep(&[-1.0, 1.0])),
        (fixtures::klein(), scalar_rep(&[1.0, -1.0])),
        (fixtures::rp2(), scalar_rep(&[-1.0])),
    ];
    for (k, rho) in cases {
        let h = torsion(&k, &rho).unwrap();
        let c = torsion(&k, &rho.to_left()).unwrap();
        assert!(close(h.coordinate * c.coordinate, 1.0, 1e-8), "{} · {}", h.coordinate, c.coordinate);
        for (x, y) in h.betti.iter().zip(&c.betti) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn reports_are_deterministic_and_carry_references() {
    let rho = regular_z(3, &[1, 2]);
    let a = serde_json::to_string(&torsion(&fixtures::torus(), &rho).unwrap()).unwrap();
    let b = serde_json::to_string(&torsion(&fixtures::torus(), &rho).unwrap()).unwrap();
    assert_eq!(a, b);
    let r = torsion(&fixtures::torus(), &rho).unwrap();
    assert_eq!(r.reference.hodge.len(), 3);
    assert_eq!(r.reference.module_gram, rho.module().reference_gram().fingerprint());
    assert!(r.route_discrepancy < 1e-8);
}

use l2torsion::abelian::*;
use l2torsion::error::Error;
use l2torsion::fk::Verdict;
use l2torsion::linalg::{cr, max_abs, CMatrix, C64};
use l2torsion::torsion::fixtures;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn poly(terms: &[(i64, f64)]) -> LaurentMatrix {
    LaurentMatrix::scalar(1, &terms.iter().map(|&(k, c)| (vec![k], cr(c))).collect::<Vec<_>>()).unwrap()
}

fn grid1() -> TorusGrid {
    TorusGrid::default_for(1).unwrap()
}

/// `e^{-1/d²}·I₃`, `d` the distance of `θ` to `½`; `∫ log` diverges like `∫ d^{-2}`.
fn divergent_symbol() -> FnSymbol<impl Fn(&[f64]) -> CMatrix + Sync> {
    FnSymbol {
        rank: 1,
        size: 3,
        f: |theta: &[f64]| {
            let d = theta[0] - 0.5;
            CMatrix::identity(3, 3) * cr((-1.0 / (d * d)).exp())
        },
    }
}

#[test]
fn laurent_arithmetic_matches_pointwise_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rand_sym = |rng: &mut ChaCha8Rng| {
        let terms = (-2..=2).map(|k| {
            let m = CMatrix::from_fn(2, 2, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            (vec![k], m)
        });
        LaurentMatrix::from_terms(1, 2, 2, terms.collect::<Vec<_>>()).unwrap()
    };
    let (f, g) = (rand_sym(&mut rng), rand_sym(&mut rng));
    let fg = f.mul(&g).unwrap();
    let fa = f.adjoint();
    for j in 0..17 {
        let theta = [j as f64 / 17.0 + 0.013];
        let lhs = fg.eval(&theta);
        let rhs = f.eval(&theta) * g.eval(&theta);
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
        assert!(max_abs(&(fa.eval(&theta) - f.eval(&theta).adjoint())) < 1e-12);
    }
    // Trace by constant coefficient vs quadrature.
    let tr = laurent_trace(&fg);
    assert!((trace_by_quadrature(&fg, 32).unwrap() - tr).norm() < 1e-8);
}

#[test]
fn trace_examples() {
    assert_eq!(laurent_trace(&LaurentMatrix::identity(1, 1)), cr(1.0));
    assert_eq!(laurent_trace(&poly(&[(1, 1.0)])), cr(0.0));
    let s = poly(&[(1, 1.0), (-1, 1.0)]);
    assert_eq!(laurent_trace(&s.mul(&s).unwrap()), cr(2.0));
}

#[test]
fn spectral_density_examples() {
    let id = LaurentMatrix::identity(1, 2);
    let d = abelian_spectral_density(&id, TorusGrid::new(1, 16).unwrap()).unwrap().density;
    assert_eq!(d.total_mass, 2.0);
    assert_eq!(d.cdf(0.999), 0.0);
    assert_eq!(d.cdf(1.0), 2.0);

    let t2 = poly(&[(1, 1.0), (0, -2.0)]);
    let f = GramSymbol(&t2);
    let s = abelian_spectral_density(&f, grid1()).unwrap();
    assert_eq!(s.density.cdf(1.0 - 1e-9), 0.0);
    assert!((s.density.cdf(9.0) - 1.0).abs() < 1e-12);
    assert!(s.refinement_error < 1e-3);

    // |e^{2πiθ} − 1|² = 4 sin²(πθ) ≤ λ on a set of measure ≈ √λ/π near 0.
    let t1 = poly(&[(1, 1.0), (0, -1.0)]);
    let s = abelian_spectral_density(&GramSymbol(&t1), grid1()).unwrap();
    for lambda in [1e-2f64, 1e-3, 1e-4] {
        let expected = 2.0 * (lambda.sqrt() / 2.0).asin() / std::f64::consts::PI;
        let got = s.density.cdf(lambda);
        assert!((got - expected).abs() < 0.05 * expected, "{lambda}: {got} vs {expected}");
        assert!((got / lambda.sqrt() - 1.0 / std::f64::consts::PI).abs() < 0.02);
    }
}

#[test]
fn jensen_and_improper_integrals() {
    let t2 = poly(&[(1, 1.0), (0, -2.0)]);
    let d = abelian_fk_det(&GramSymbol(&t2), grid1()).unwrap();
    assert!((d.value - 4.0).abs() < 1e-6 * 4.0);
    assert!((abelian_fk_det_operator(&t2, grid1()).unwrap().value - 2.0).abs() < 1e-6);

    let c = LaurentMatrix::identity(1, 1).scale(cr(3.5));
    assert!((abelian_fk_det(&c, grid1()).unwrap().value - 3.5).abs() < 1e-12);

    let t1 = poly(&[(1, 1.0), (0, -1.0)]);
    let d = abelian_fk_det(&GramSymbol(&t1), grid1()).unwrap();
    assert_eq!(d.convergence.verdict, Verdict::Pass);
    assert!((d.value - 1.0).abs() < 1e-6);
}

#[test]
fn two_variable_symbols() {
    // (a − 2)(b − 3): Mahler measure 6.
    let g = TorusGrid::default_for(2).unwrap();
    let f = LaurentMatrix::scalar(
        2,
        &[(vec![1, 1], cr(1.0)), (vec![1, 0], cr(-3.0)), (vec![0, 1], cr(-2.0)), (vec![0, 0], cr(6.0))],
    )
    .unwrap();
    let d = abelian_fk_det_operator(&f, g).unwrap();
    assert!((d.value - 6.0).abs() < 1e-8, "{}", d.value);
    // 4 − (a + a⁻¹ + b + b⁻¹)/… with a point zero: |a−1|² + |b−1|² converges.
    let a1 = LaurentMatrix::scalar(2, &[(vec![1, 0], cr(1.0)), (vec![0, 0], cr(-1.0))]).unwrap();
    let b1 = LaurentMatrix::scalar(2, &[(vec![0, 1], cr(1.0)), (vec![0, 0], cr(-1.0))]).unwrap();
    let lap = a1.adjoint().mul(&a1).unwrap().add(&b1.adjoint().mul(&b1).unwrap()).unwrap();
    let q = abelian_log_det_report(&lap, g).unwrap();
    assert_eq!(q.convergence.verdict, Verdict::Pass, "{}", q.convergence.detail);
    // ∫∫ log(4 − 2cos 2πx − 2cos 2πy) = 4G/π (G Catalan's constant).
    let catalan = 0.915_965_594_177_219_f64;
    assert!((q.value - 4.0 * catalan / std::f64::consts::PI).abs() < 1e-3, "{}", q.value);
}

#[test]
fn monomials_are_unimodular() {
    for k in [-3i64, -1, 1, 2, 7] {
        let m = LaurentMatrix::monomial(vec![k], 2);
        assert!((abelian_fk_det_operator(&m, grid1()).unwrap().value - 1.0).abs() < 1e-10);
    }
    let g = TorusGrid::default_for(2).unwrap();
    let m = LaurentMatrix::monomial(vec![2, -1], 1);
    assert!((abelian_fk_det_operator(&m, g).unwrap().value - 1.0).abs() < 1e-10);
}

#[test]
fn multiplicativity_on_commuting_symbols() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        // Positive symbols c + |p|² with p a random trigonometric polynomial.
        let mut make = || {
            let terms: Vec<(i64, f64)> = (0..3).map(|k| (k, rng.random_range(-1.0..1.0))).collect();
            let p = poly(&terms);
            p.adjoint().mul(&p).unwrap().add(&LaurentMatrix::identity(1, 1).scale(cr(rng.random_range(0.1..1.0)))).unwrap()
        };
        let (f, g) = (make(), make());
        let fg = f.mul(&g).unwrap();
        let (a, b, c) = (
            abelian_fk_det(&f, grid1()).unwrap().value,
            abelian_fk_det(&g, grid1()).unwrap().value,
            abelian_fk_det(&fg, grid1()).unwrap().value,
        );
        assert!((c - a * b).abs() < 1e-6 * c);
    }
}

#[test]
fn refinement_stability() {
    let symbols = [poly(&[(1, 1.0), (0, -1.0)]), poly(&[(1, 1.0), (0, -2.0)]), poly(&[(2, 1.0), (1, 0.3), (0, -1.0)])];
    for s in &symbols {
        let f = GramSymbol(s);
        let a = abelian_fk_det(&f, TorusGrid::new(1, 4096).unwrap()).unwrap().value;
        let b = abelian_fk_det(&f, TorusGrid::new(1, 8192).unwrap()).unwrap().value;
        assert!((a - b).abs() < 1e-5 * a);
    }
}

#[test]
fn divergence_engineered_symbol_is_refused() {
    let f = divergent_symbol();
    let q = abelian_log_det_report(&f, grid1()).unwrap();
    assert_eq!(q.convergence.verdict, Verdict::Divergent, "{}", q.convergence.detail);
    match abelian_fk_det(&f, grid1()) {
        Err(e @ Error::DivergentIntegral(_)) => assert!(e.is_refusal()),
        other => panic!("expected DivergentIntegral, got {other:?}"),
    }
}

#[test]
fn kernel_bearing_symbol_is_refused() {
    let f = FnSymbol {
        rank: 1,
        size: 2,
        f: |theta: &[f64]| {
            let c = (2.0 * std::f64::consts::PI * theta[0]).cos();
            CMatrix::from_diagonal(&DVector::from_vec(vec![cr(2.0 - c), cr(0.0)]))
        },
    };
    assert!(matches!(abelian_fk_det(&f, grid1()), Err(Error::KernelDetected { .. })));
}

#[test]
fn d_admissible_elements() {
    // 2 − cos 2πθ: ∫ log = log((2 + √3)/2).
    let g = poly(&[(0, 2.0), (1, -0.5), (-1, -0.5)]);
    let e = abelian_element_from_d_admissible(&g, grid1()).unwrap();
    let closed = (-0.5 * ((2.0 + 3f64.sqrt()) / 2.0).ln()).exp();
    assert!((e.coefficient - closed).abs() < 1e-10);
    let fine = abelian_element_from_d_admissible(&g, TorusGrid::new(1, 3 * 4096).unwrap()).unwrap();
    assert!((e.coefficient - fine.coefficient).abs() < 1e-10);
}

#[test]
fn d_isomorphism_verdicts() {
    // t − 1 is injective with dense image and ∫ log|e^{2πiθ} − 1|² converges.
    assert!(check_d_isomorphism(&poly(&[(1, 1.0), (0, -1.0)]), grid1()).is_ok());
    let f = FnSymbol {
        rank: 1,
        size: 3,
        f: |theta: &[f64]| {
            let d = theta[0] - 0.5;
            CMatrix::identity(3, 3) * cr((-0.5 / (d * d)).exp())
        },
    };
    assert!(matches!(check_d_isomorphism(&f, grid1()), Err(Error::NotDExact(_))));
}

#[test]
fn complexes_from_free_abelian_fixtures() {
    let g1 = TorusGrid::new(1, 1024).unwrap();
    let c = AbelianChainComplex::from_cell_complex(&fixtures::circle(1)).unwrap();
    let r = c.torsion(g1).unwrap();
    assert!(r.betti.iter().all(|&b| b == 0.0));
    assert!((r.coordinate - 1.0).abs() < 1e-8);
    assert!(r.route_discrepancy < 1e-8);
    let c = AbelianChainComplex::from_cell_complex(&fixtures::circle(3)).unwrap();
    assert!((c.torsion(g1).unwrap().coordinate - 1.0).abs() < 1e-8);

    let g2 = TorusGrid::new(2, 32).unwrap();
    let t = AbelianChainComplex::from_cell_complex(&fixtures::torus()).unwrap();
    assert_eq!(t.euler_characteristic(), 0);
    let r = t.torsion(g2).unwrap();
    assert!(r.verdicts.iter().all(|v| v.quadrature.convergence.verdict == Verdict::Pass));
    assert!((r.coordinate - 1.0).abs() < 1e-4, "{}", r.coordinate);
    assert!(r.route_discrepancy < 1e-4);

    assert!(matches!(
        AbelianChainComplex::from_cell_complex(&fixtures::lens(3)),
        Err(Error::BackendUnsupported(_))
    ));
}

#[test]
fn acyclic_complex_with_nontrivial_torsion() {
    // 0 → ℓ²(Z) --(t − 2)--> ℓ²(Z) → 0: torsion = Mahler measure⁻¹ = ½.
    let c = AbelianChainComplex::new(1, vec![1, 1], vec![poly(&[(1, 1.0), (0, -2.0)])]).unwrap();
    let r = c.torsion(grid1()).unwrap();
    assert!((r.coordinate - 0.5).abs() < 1e-8);
    assert!((r.coordinate_pointwise - 0.5).abs() < 1e-8);
    let v = c.determinant_class_check(grid1()).unwrap();
    assert!((v[1].quadrature.value - 4f64.ln()).abs() < 1e-8);
    assert!(c.zeta().is_err());
}

#[test]
fn invalid_and_ill_conditioned_complexes() {
    let d = poly(&[(1, 1.0), (0, -1.0)]);
    // ∂∂ ≠ 0
    assert!(AbelianChainComplex::new(1, vec![1, 1, 1], vec![d.clone(), d.clone()]).is_err());
    // t + 1 vanishes at θ = ½, which the odd grid samples exactly.
    let c = AbelianChainComplex::new(1, vec![1, 1], vec![poly(&[(1, 1.0), (0, 1.0)])]).unwrap();
    assert!(matches!(c.betti_numbers(TorusGrid::new(1, 5).unwrap()), Err(Error::IllConditionedKernel { .. })));
    // Zero differential: constant kernel, b = size, torsion unsupported.
    let z = AbelianChainComplex::new(1, vec![2, 1], vec![LaurentMatrix::zero(1, 2, 1)]).unwrap();
    assert_eq!(z.betti_numbers(grid1()).unwrap(), vec![2.0, 1.0]);
    assert!(matches!(z.torsion(grid1()), Err(Error::BackendUnsupported(_))));
}

//! Determinant lines as positive coordinates.
//!
//! `det(M)` is one-dimensional and oriented, so an element is stored as a
//! positive number `c` meaning `c · [⟨,⟩_R]`, with `R` the module's reference
//! Gram operator. The only relation needed is
//! `[⟨A·,·⟩_1] = Det_τ(A)^{-1/2} [⟨,⟩_1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fk::{self, KERNEL_TOL};
use crate::linalg::{self, CMatrix};
use crate::module::{CommutantOperator, HilbertianModule, ModuleMorphism, COMMUTE_TOL, MAX_CONDITION, POSITIVITY_TOL};

/// Subspace angle (sine) above which `im α ≠ ker β`.
pub const EXACTNESS_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DetLineElement {
    pub module: HilbertianModule,
    pub coefficient: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetLineSummary {
    pub module: String,
    pub coefficient: f64,
    pub reference: String,
}

impl DetLineElement {
    pub fn new(module: HilbertianModule, coefficient: f64, provenance: impl Into<String>) -> Self {
        assert!(coefficient > 0.0 && coefficient.is_finite(), "det-line coefficient must be positive, got {coefficient}");
        Self { module, coefficient, provenance: provenance.into() }
    }

    /// The symbol of the reference product itself.
    pub fn reference(module: &HilbertianModule) -> Self {
        Self::new(module.clone(), 1.0, "reference")
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.module.clone(), self.coefficient * c, format!("{} scaled", self.provenance))
    }

    /// The same element written against a different reference product.
    pub fn rereference(&self, new_reference: &CommutantOperator) -> Result<Self> {
        let target = self.module.rereferenced(new_reference)?;
        // [R] = Det(R'^{-1} R)^{-1/2} [R'].
        let a = new_reference.inverse()?.compose(self.module.reference_gram());
        let det = fk::fk_det_spectral(&target, &a, new_reference)?;
        Ok(Self::new(target, self.coefficient * (-0.5 * det.log_value).exp(), self.provenance.clone()))
    }

    pub fn ratio_to(&self, other: &DetLineElement) -> f64 {
        self.coefficient / other.coefficient
    }

    pub fn summary(&self, module_id: &str) -> DetLineSummary {
        DetLineSummary {
            module: module_id.to_string(),
            coefficient: self.coefficient,
            reference: self.module.reference_gram().fingerprint(),
        }
    }
}

fn check_gram(module: &HilbertianModule, g: &CommutantOperator, require_admissible: bool) -> Result<()> {
    module.check_operator_shape(g)?;
    for (k, b) in g.blocks.iter().enumerate() {
        if b.nrows() == 0 {
            continue;
        }
        let residual = linalg::relative_residual(b, &b.adjoint());
        if residual > COMMUTE_TOL {
            return Err(Error::NotAdmissible(format!("block {k} is not Hermitian (residual {residual:.2e})")));
        }
        let (vals, _) = linalg::herm_eig(b);
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if require_admissible {
            if lo <= POSITIVITY_TOL * hi || hi / lo >= MAX_CONDITION {
                return Err(Error::NotAdmissible(format!(
                    "block {k} has spectrum [{lo:.3e}, {hi:.3e}], not positive definite within tolerance"
                )));
            }
        } else if lo < -POSITIVITY_TOL * hi {
            return Err(Error::NegativeSpectrum { min_eigenvalue: lo });
        }
    }
    Ok(())
}

/// `[⟨,⟩_G] = Det_τ(R^{-1}G)^{-1/2} [⟨,⟩_R]`.
pub fn element_from_product(module: &HilbertianModule, gram: &CommutantOperator) -> Result<DetLineElement> {
    check_gram(module, gram, true)?;
    let r = module.reference_gram();
    let a = r.inverse()?.compose(gram);
    let det = fk::fk_det_spectral(module, &a, r)?;
    Ok(DetLineElement::new(module.clone(), (-0.5 * det.log_value).exp(), "product"))
}

/// Carrier-matrix form of [`element_from_product`].
pub fn element_from_carrier_product(module: &HilbertianModule, gram: &CMatrix) -> Result<DetLineElement> {
    let report = module.check_admissible(gram);
    if !report.admissible() {
        return Err(Error::NotAdmissible(format!(
            "invertible={} self_adjoint={} positive={} commutes={}",
            report.invertible, report.self_adjoint, report.positive, report.commutes
        )));
    }
    element_from_product(module, &module.operator_from_carrier(gram)?)
}

/// Same coordinate for a positive injective product that need not be
/// admissible; zero modes are refused.
pub fn element_from_d_admissible(module: &HilbertianModule, gram: &CommutantOperator) -> Result<DetLineElement> {
    check_gram(module, gram, false)?;
    let r = module.reference_gram();
    let a = r.inverse()?.compose(gram);
    let density = fk::spectral_density(module, &a, r)?;
    let log = fk::log_det_from_density(&density, KERNEL_TOL)?;
    Ok(DetLineElement::new(module.clone(), (-0.5 * log).exp(), "D-admissible product"))
}

/// `f_*[⟨,⟩] = [⟨f^{-1}·, f^{-1}·⟩]` for an isomorphism `f: M → N`.
pub fn pushforward(f: &ModuleMorphism, target: &HilbertianModule, e: &DetLineElement) -> Result<DetLineElement> {
    let source = &e.module;
    source.check_morphism_shape(target, f)?;
    let mut inv_blocks = Vec::with_capacity(f.blocks.len());
    for (k, b) in f.blocks.iter().enumerate() {
        if b.nrows() != b.ncols() {
            return Err(Error::NotIso(format!("block {k} is {:?}", b.shape())));
        }
        let cond = linalg::condition_number(b);
        if !(cond < MAX_CONDITION) {
            return Err(Error::NotIso(format!("block {k} has condition number {cond:.3e}")));
        }
        inv_blocks.push(linalg::inverse(b).ok_or_else(|| Error::NotIso(format!("block {k} is singular")))?);
    }
    let f_inv = ModuleMorphism::new(inv_blocks);
    let r_m = source.reference_gram();
    let r_n = target.reference_gram();
    // Gram of the pushed product on N, written against R_N.
    let pushed = CommutantOperator::new(
        f_inv
            .blocks
            .iter()
            .zip(&r_m.blocks)
            .map(|(fi, g)| fi.adjoint() * g * fi)
            .collect(),
    );
    let a = r_n.inverse()?.compose(&pushed);
    let det = fk::fk_det_spectral(target, &a, r_n)?;
    Ok(DetLineElement::new(target.clone(), e.coefficient * (-0.5 * det.log_value).exp(), "pushforward"))
}

/// `det(M) ⊗ det(N) → det(M ⊕ N)`.
pub fn tensor_sum(e_m: &DetLineElement, e_n: &DetLineElement) -> Result<DetLineElement> {
    let sum = e_m.module.direct_sum(&e_n.module)?;
    Ok(DetLineElement::new(sum, e_m.coefficient * e_n.coefficient, "tensor sum"))
}

/// Checks that `0 → M' → M → M'' → 0` is exact blockwise.
pub fn check_short_exact(
    m1: &HilbertianModule,
    m: &HilbertianModule,
    m2: &HilbertianModule,
    alpha: &ModuleMorphism,
    beta: &ModuleMorphism,
) -> Result<()> {
    m1.check_morphism_shape(m, alpha)?;
    m.check_morphism_shape(m2, beta)?;
    for k in 0..alpha.blocks.len() {
        let (a, b) = (&alpha.blocks[k], &beta.blocks[k]);
        let rank_a = linalg::range_basis(a, 1e-10).ncols();
        if rank_a != a.ncols() {
            return Err(Error::NotExact(format!("α is not injective in block {k}")));
        }
        let rank_b = linalg::range_basis(b, 1e-10).ncols();
        if rank_b != b.nrows() {
            return Err(Error::NotExact(format!("β is not surjective in block {k}")));
        }
        let im_a = linalg::range_basis(a, 1e-10);
        let ker_b = linalg::null_space(b, 1e-10);
        if im_a.ncols() != ker_b.ncols() {
            return Err(Error::NotExact(format!(
                "block {k}: dim im α = {} but dim ker β = {}",
                im_a.ncols(),
                ker_b.ncols()
            )));
        }
        // Largest principal-angle sine between im α and ker β.
        let leak = &im_a - &ker_b * (ker_b.adjoint() * &im_a);
        let angle = linalg::spectral_norm(&leak);
        if angle > EXACTNESS_TOL {
            return Err(Error::NotExact(format!("block {k}: im α and ker β differ by angle {angle:.3e}")));
        }
    }
    Ok(())
}

/// The element of `det(M)` given by
/// `⟨v,w⟩ = ⟨r v, r w⟩_{M'} + ⟨β v, β w⟩_{M''}` from `e' ⊗ e''`.
///
/// `r` is the left inverse of `α` vanishing on `s(M'')`; without a splitting
/// `s` the reference-orthogonal complement of `im α` is used.
pub fn exact_sequence_iso(
    alpha: &ModuleMorphism,
    beta: &ModuleMorphism,
    m: &HilbertianModule,
    e1: &DetLineElement,
    e2: &DetLineElement,
    splitting: Option<&ModuleMorphism>,
) -> Result<DetLineElement> {
    let (m1, m2) = (&e1.module, &e2.module);
    check_short_exact(m1, m, m2, alpha, beta)?;
    let r_m = m.reference_gram();
    let mut q_blocks = Vec::with_capacity(alpha.blocks.len());
    for k in 0..alpha.blocks.len() {
        let a = &alpha.blocks[k];
        let b = &beta.blocks[k];
        let g = &r_m.blocks[k];
        let r = match splitting {
            None => {
                let ag = a.adjoint() * g;
                let normal = &ag * a;
                linalg::inverse(&normal).ok_or_else(|| Error::NotExact(format!("α is singular in block {k}")))? * ag
            }
            Some(s) => {
                let s = &s.blocks[k];
                if s.shape() != (a.nrows(), b.nrows()) {
                    return Err(Error::shape(format!("splitting block {k} has shape {:?}", s.shape())));
                }
                let bs = b * s;
                if linalg::max_abs(&(bs - linalg::identity(b.nrows()))) > 1e-9 {
                    return Err(Error::validation("splitting", format!("β∘s ≠ id in block {k}")));
                }
                let mut both = linalg::zeros(a.nrows(), a.nrows());
                both.view_mut((0, 0), a.shape()).copy_from(a);
                both.view_mut((0, a.ncols()), s.shape()).copy_from(s);
                let inv = linalg::inverse(&both).ok_or_else(|| Error::NotExact(format!("α ⊕ s singular in block {k}")))?;
                inv.rows(0, a.ncols()).into_owned()
            }
        };
        let q = r.adjoint() * &m1.reference_gram().blocks[k] * &r + b.adjoint() * &m2.reference_gram().blocks[k] * b;
        q_blocks.push(linalg::hermitian_part(&q));
    }
    let q = CommutantOperator::new(q_blocks);
    let base = element_from_product(m, &q)?;
    Ok(DetLineElement::new(
        m.clone(),
        e1.coefficient * e2.coefficient * base.coefficient,
        "exact sequence",
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct GradedFactor {
    pub degree: i64,
    pub coefficient: f64,
    pub dim_tau: f64,
}

/// `⊗_i det(M_i)^{(-1)^i}` with combined coordinate `Π c_i^{(-1)^i}`.
#[derive(Debug, Clone, Serialize)]
pub struct GradedDetLineElement {
    pub factors: Vec<GradedFactor>,
    pub coordinate: f64,
}

impl GradedDetLineElement {
    pub fn from_factors(mut factors: Vec<GradedFactor>) -> Result<Self> {
        factors.sort_by_key(|f| f.degree);
        for w in factors.windows(2) {
            if w[0].degree == w[1].degree {
                return Err(Error::DuplicateDegree(w[0].degree));
            }
        }
        let log: f64 = factors
            .iter()
            .map(|f| {
                assert!(f.coefficient > 0.0, "graded factor must be positive");
                if f.degree.rem_euclid(2) == 0 { f.coefficient.ln() } else { -f.coefficient.ln() }
            })
            .sum();
        Ok(Self { factors, coordinate: log.exp() })
    }

    /// All degrees raised by `k`.
    pub fn shift(&self, k: i64) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|f| GradedFactor { degree: f.degree + k, ..f.clone() })
            .collect();
        Self::from_factors(factors).expect("shifting keeps degrees distinct")
    }
}

pub fn graded_assemble(elements: Vec<(i64, DetLineElement)>) -> Result<GradedDetLineElement> {
    GradedDetLineElement::from_factors(
        elements
            .into_iter()
            .map(|(degree, e)| GradedFactor {
                degree,
                coefficient: e.coefficient,
                dim_tau: e.module.von_neumann_dimension(),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteVonNeumannAlgebra;
    use crate::linalg::cr;
    use std::sync::Arc;

    fn module() -> HilbertianModule {
        let alg = Arc::new(FiniteVonNeumannAlgebra::from_pairs(&[(1, 0.25), (2, 0.375)]).unwrap());
        HilbertianModule::new(alg, vec![2, 1]).unwrap()
    }

    #[test]
    fn reference_and_scaled_products() {
        let m = module();
        let e = element_from_product(&m, m.reference_gram()).unwrap();
        assert!((e.coefficient - 1.0).abs() < 1e-15);
        let lam = 1.7;
        let e = element_from_product(&m, &m.reference_gram().scale(cr(lam * lam))).unwrap();
        assert!((e.coefficient - lam.powf(-m.von_neumann_dimension())).abs() < 1e-13);
    }

    #[test]
    fn graded_examples() {
        let m = module();
        let e0 = DetLineElement::new(m.clone(), 6.0, "test");
        let e1 = DetLineElement::new(m.clone(), 3.0, "test");
        let g = graded_assemble(vec![(0, e0.clone())]).unwrap();
        assert_eq!(g.coordinate, 6.0);
        let g = graded_assemble(vec![(0, e0.clone()), (1, e1.clone())]).unwrap();
        assert!((g.coordinate - 2.0).abs() < 1e-15);
        assert!((g.shift(1).coordinate - 0.5).abs() < 1e-15);
        assert!(matches!(graded_assemble(vec![(1, e0), (1, e1)]), Err(Error::DuplicateDegree(1))));
    }

    #[test]
    fn pushforward_by_two() {
        let alg = Arc::new(FiniteVonNeumannAlgebra::complex_numbers());
        let m = HilbertianModule::free(alg, 1);
        let two = ModuleMorphism::new(vec![CMatrix::from_element(1, 1, cr(2.0))]);
        let e = pushforward(&two, &m, &DetLineElement::reference(&m)).unwrap();
        assert!((e.coefficient - 2.0).abs() < 1e-14);
        let zero = ModuleMorphism::new(vec![CMatrix::from_element(1, 1, cr(0.0))]);
        assert!(matches!(pushforward(&zero, &m, &DetLineElement::reference(&m)), Err(Error::NotIso(_))));
    }

    #[test]
    fn zero_mode_is_refused() {
        let m = module();
        let mut g = CommutantOperator::identity(&m);
        g.blocks[0][(1, 1)] = cr(0.0);
        assert!(matches!(element_from_d_admissible(&m, &g), Err(Error::KernelDetected { .. })));
        assert!(matches!(element_from_product(&m, &g), Err(Error::NotAdmissible(_))));
    }
}

//! `--fixtures`: built-in complexes checked against closed forms.

use std::sync::Arc;

use l2torsion::abelian::{AbelianChainComplex, LaurentMatrix, TorusGrid};
use l2torsion::algebra::{group_algebra, FiniteGroupTable, FiniteVonNeumannAlgebra};
use l2torsion::error::Result;
use l2torsion::linalg::C64;
use l2torsion::module::HilbertianModule;
use l2torsion::torsion::{self, elementary_subdivide, fixtures, GroupRepresentation, Side};
use serde::Serialize;

use crate::Options;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

impl Check {
    fn new(name: &str, expected: f64, tolerance: f64, observed: Result<f64>) -> Self {
        let (observed, error) = match observed {
            Ok(x) => (Some(x), None),
            Err(e) => (None, Some(format!("{}: {e}", e.kind()))),
        };
        let pass = observed.is_some_and(|x| (x - expected).abs() <= tolerance * expected.abs().max(1.0));
        Self { name: name.into(), expected, observed, tolerance, pass, error }
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match (&self.observed, &self.error) {
            (Some(x), _) => format!("{status} {}: {x:.12} (expected {:.12})", self.name, self.expected),
            (None, Some(e)) => format!("{status} {}: {e}", self.name),
            (None, None) => format!("{status} {}", self.name),
        }
    }
}

fn scalar(z: f64, generators: usize) -> GroupRepresentation {
    let m = HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1);
    GroupRepresentation::scalar(m, &vec![C64::new(z, 0.0); generators], Side::Right).expect("scalar representation")
}

fn regular(n: usize, generators: &[usize]) -> Result<GroupRepresentation> {
    GroupRepresentation::regular(&group_algebra(&FiniteGroupTable::cyclic(n))?, generators)
}

fn discrepancy(name: &str, rho: Result<GroupRepresentation>) -> Result<f64> {
    let (k, data) = fixtures::standard_subdivision(name).expect("fixture has a standard subdivision");
    let (k2, psi) = elementary_subdivide(&k, &data)?;
    Ok(torsion::invariance_check(&k, &k2, &psi, &rho?)?.discrepancy)
}

pub fn run(o: &Options) -> Vec<Check> {
    let mut checks = vec![
        Check::new("circle, t -> -1: torsion", 0.5, 1e-12, torsion::torsion(&fixtures::circle(1), &scalar(-1.0, 1)).map(|r| r.coordinate)),
        Check::new(
            "circle3, regular Z/3: b_0",
            1.0 / 3.0,
            1e-10,
            regular(3, &[1]).and_then(|r| torsion::betti_numbers(&fixtures::circle(3), &r)).map(|b| b[0]),
        ),
        Check::new("interval, trivial: torsion", 0.5f64.sqrt(), 1e-12, {
            let k = fixtures::interval();
            torsion::torsion(&k, &scalar(1.0, 0)).map(|r| r.coordinate)
        }),
    ];
    for n in [2usize, 3, 5] {
        checks.push(Check::new(
            &format!("lens{n}, regular Z/{n}: torsion"),
            (n as f64).powf(-1.0 / n as f64),
            1e-10,
            regular(n, &[1]).and_then(|r| torsion::torsion(&fixtures::lens(n), &r)).map(|r| r.coordinate),
        ));
    }
    checks.push(Check::new("interval subdivision: discrepancy", 0.0, 1e-9, discrepancy("interval", Ok(scalar(1.0, 0)))));
    checks.push(Check::new("circle subdivision, t -> -1: discrepancy", 0.0, 1e-9, discrepancy("circle", Ok(scalar(-1.0, 1)))));
    checks.push(Check::new("torus diagonal, regular Z/3: discrepancy", 0.0, 1e-9, discrepancy("torus", regular(3, &[1, 2]))));
    checks.push(Check::new(
        "klein, t -> -1: cohomology x homology",
        1.0,
        1e-9,
        (|| {
            let k = fixtures::klein();
            let rho = scalar(-1.0, 2);
            Ok(torsion::torsion(&k, &rho)?.coordinate * torsion::torsion(&k, &rho.to_left())?.coordinate)
        })(),
    ));
    let grid = |rank| match o.grid {
        Some(r) => TorusGrid::new(rank, r),
        None => TorusGrid::default_for(rank),
    };
    checks.push(Check::new(
        "abelian circle: torsion",
        1.0,
        1e-8,
        AbelianChainComplex::from_cell_complex(&fixtures::circle(1)).and_then(|c| Ok(c.torsion(grid(1)?)?.coordinate)),
    ));
    checks.push(Check::new("abelian 0 -> C -> C -> 0, t - 2: torsion", 0.5, 1e-8, {
        (|| {
            let f = LaurentMatrix::scalar(1, &[(vec![1], C64::new(1.0, 0.0)), (vec![0], C64::new(-2.0, 0.0))])?;
            Ok(AbelianChainComplex::new(1, vec![1, 1], vec![f])?.torsion(grid(1)?)?.coordinate)
        })()
    }));
    checks
}

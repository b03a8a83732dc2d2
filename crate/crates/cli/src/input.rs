//! Loading command-line arguments into library objects.

use std::sync::Arc;

use l2torsion::abelian::{AbelianChainComplex, LaurentMatrix, TorusGrid};
use l2torsion::algebra::{group_algebra, FiniteGroupTable, FiniteVonNeumannAlgebra};
use l2torsion::chain::{Convention, HilbertianChainComplex};
use l2torsion::doc::{self, AbelianComplexDoc, CellComplexDoc, ComplexDoc, MatrixDoc, ModuleDoc, RepresentationDoc, SymbolDoc, SubdivisionDoc};
use l2torsion::error::{Error, Result};
use l2torsion::linalg::C64;
use l2torsion::module::{CommutantOperator, HilbertianModule};
use l2torsion::torsion::fixtures;
use l2torsion::torsion::{CellComplex, GroupRepresentation, Side, SubdivisionData};
use serde::Deserialize;
use serde_json::Value;

pub const FIXTURE_PREFIX: &str = "fixture:";

pub fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Validation { location: path.into(), detail: e.to_string() })
}

fn read_value(path: &str) -> Result<Value> {
    doc::from_json(&read(path)?, path)
}

fn typed<T: serde::de::DeserializeOwned>(v: Value, path: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse { location: path.into(), detail: e.to_string() })
}

/// A complex given on the command line.
pub enum ComplexInput {
    /// A cell complex; `name` is set for built-in fixtures.
    Cells { complex: CellComplex, name: Option<String> },
    Hilbertian(HilbertianChainComplex),
    Abelian(AbelianChainComplex),
}

pub fn complex(arg: &str, convention: Option<Convention>) -> Result<ComplexInput> {
    if let Some(name) = arg.strip_prefix(FIXTURE_PREFIX) {
        let complex = fixtures::by_name(name)
            .ok_or_else(|| Error::Validation { location: arg.into(), detail: format!("no fixture named '{name}'") })?;
        return Ok(ComplexInput::Cells { complex, name: Some(name.into()) });
    }
    let v = read_value(arg)?;
    let has = |k: &str| v.get(k).is_some();
    if has("generators") {
        let complex = typed::<CellComplexDoc>(v, arg)?.load()?;
        Ok(ComplexInput::Cells { complex, name: None })
    } else if has("modules") {
        Ok(ComplexInput::Hilbertian(typed::<ComplexDoc>(v, arg)?.load(convention)?))
    } else if has("maps") {
        Ok(ComplexInput::Abelian(typed::<AbelianComplexDoc>(v, arg)?.load()?))
    } else {
        Err(Error::Parse {
            location: arg.into(),
            detail: "expected a cell complex (\"generators\"), a chain complex (\"modules\") or an abelian complex (\"maps\")"
                .into(),
        })
    }
}

fn scalar_module() -> HilbertianModule {
    HilbertianModule::free(Arc::new(FiniteVonNeumannAlgebra::complex_numbers()), 1)
}

/// `fixture:trivial`, `fixture:minus1`, `fixture:times2`, `fixture:regular<n>`;
/// every generator is sent to the same element.
fn fixture_representation(name: &str, generators: usize) -> Option<Result<GroupRepresentation>> {
    let scalar = |z: f64| GroupRepresentation::scalar(scalar_module(), &vec![C64::new(z, 0.0); generators], Side::Right);
    match name {
        "trivial" => Some(Ok(GroupRepresentation::trivial(scalar_module(), generators, Side::Right))),
        "minus1" => Some(scalar(-1.0)),
        "times2" => Some(scalar(2.0)),
        _ => {
            let n: usize = name.strip_prefix("regular")?.parse().ok().filter(|&n| n >= 1)?;
            Some(
                group_algebra(&FiniteGroupTable::cyclic(n)).and_then(|ga| GroupRepresentation::regular(&ga, &vec![1 % n; generators])),
            )
        }
    }
}

/// The representation argument, with its side forced by `--convention` when given.
pub fn representation(arg: &str, k: &CellComplex, convention: Option<Convention>) -> Result<GroupRepresentation> {
    let rho = if let Some(name) = arg.strip_prefix(FIXTURE_PREFIX) {
        fixture_representation(name, k.generators.len())
            .ok_or_else(|| Error::Validation { location: arg.into(), detail: format!("no representation fixture '{name}'") })??
    } else {
        typed::<RepresentationDoc>(read_value(arg)?, arg)?.load()?
    };
    if rho.images().len() != k.generators.len() {
        return Err(Error::Validation {
            location: arg.into(),
            detail: format!("{} generator images for {} generators", rho.images().len(), k.generators.len()),
        });
    }
    Ok(match convention {
        Some(Convention::Chain) => rho.to_right(),
        Some(Convention::Cochain) => rho.to_left(),
        None => rho,
    })
}

/// What a command runs on once the arguments are resolved.
pub enum Target {
    Cells { complex: CellComplex, rho: GroupRepresentation, name: Option<String> },
    Hilbertian(HilbertianChainComplex),
    Abelian(AbelianChainComplex),
}

/// Without a representation, abelian cell complexes without relators go to
/// the `N(Zⁿ)` backend and everything else gets trivial coefficients in `C`.
pub fn target(complex_arg: &str, rep_arg: Option<&str>, convention: Option<Convention>) -> Result<Target> {
    match (complex(complex_arg, convention)?, rep_arg) {
        (ComplexInput::Cells { complex, name }, Some(r)) => {
            let rho = representation(r, &complex, convention)?;
            Ok(Target::Cells { complex, rho, name })
        }
        (ComplexInput::Cells { complex, name }, None) => {
            if complex.abelian && complex.relators.is_empty() {
                if convention == Some(Convention::Cochain) {
                    return Err(Error::BackendUnsupported("the abelian backend computes chain conventions only".into()));
                }
                Ok(Target::Abelian(AbelianChainComplex::from_cell_complex(&complex)?))
            } else {
                let rho = representation("fixture:trivial", &complex, convention)?;
                Ok(Target::Cells { complex, rho, name })
            }
        }
        (ComplexInput::Hilbertian(c), None) => Ok(Target::Hilbertian(c)),
        (ComplexInput::Abelian(c), None) => Ok(Target::Abelian(c)),
        (_, Some(r)) => Err(Error::Validation {
            location: r.into(),
            detail: "a representation only applies to cell complexes".into(),
        }),
    }
}

pub fn subdivision(arg: Option<&str>, k: &CellComplex, name: Option<&str>) -> Result<SubdivisionData> {
    match arg {
        Some(path) => typed::<SubdivisionDoc>(read_value(path)?, path)?.load(k),
        None => name
            .and_then(fixtures::standard_subdivision)
            .map(|(_, d)| d)
            .ok_or_else(|| Error::Validation {
                location: "subdivision".into(),
                detail: "a subdivision document is required unless the complex is a fixture with a standard subdivision"
                    .into(),
            }),
    }
}

pub fn grid(rank: usize, resolution: Option<usize>) -> Result<TorusGrid> {
    match resolution {
        Some(r) => TorusGrid::new(rank, r),
        None => TorusGrid::default_for(rank),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OperatorFile {
    Wrapped {
        operator: MatrixDoc,
    },
    Bare(MatrixDoc),
}

/// What `det` works on.
pub enum DetInput {
    Operator { module: HilbertianModule, operator: CommutantOperator, method: Option<String> },
    Symbol(LaurentMatrix),
}

/// `det DOC` (either `{module, operator, method?}` or a symbol) or `det MODULE OPERATOR`.
pub fn det_input(args: &[String]) -> Result<DetInput> {
    match args {
        [one] => {
            let v = read_value(one)?;
            if v.get("coefficients").is_some() {
                return Ok(DetInput::Symbol(typed::<SymbolDoc>(v, one)?.load()?));
            }
            let d: doc::DetDoc = typed(v, one)?;
            let module = d.module.load(None, "module")?;
            let operator = doc::operator(&module, &d.operator, "operator")?;
            Ok(DetInput::Operator { module, operator, method: d.method })
        }
        [m, o] => {
            let module = typed::<ModuleDoc>(read_value(m)?, m)?.load(None, m)?;
            let op = match typed::<OperatorFile>(read_value(o)?, o)? {
                OperatorFile::Wrapped { operator } | OperatorFile::Bare(operator) => operator,
            };
            let operator = doc::operator(&module, &op, o)?;
            Ok(DetInput::Operator { module, operator, method: None })
        }
        _ => Err(Error::Validation { location: "det".into(), detail: "expects one or two documents".into() }),
    }
}

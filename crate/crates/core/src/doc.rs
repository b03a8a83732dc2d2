//! JSON document formats read by the command line.
//!
//! Complex matrices are nested arrays of `[re, im]` pairs; operators and
//! products are given in carrier coordinates and must commute with the
//! algebra action. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::abelian::{AbelianChainComplex, LaurentMatrix};
use crate::algebra::{group_algebra, FiniteGroupTable, FiniteVonNeumannAlgebra, GroupAlgebra};
use crate::chain::{Convention, HilbertianChainComplex};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::module::{CommutantOperator, HilbertianModule};
use crate::torsion::{CellComplex, GroupRepresentation, GroupRingElement, Side, SubdivisionData, Word};

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix(doc: &MatrixDoc, location: &str) -> Result<CMatrix> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if doc.iter().any(|r| r.len() != cols) {
        return Err(Error::parse(location, "rows of different lengths"));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(doc[i][j][0], doc[i][j][1])))
}

pub fn matrix_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTableDoc {
    pub order: usize,
    pub product: Vec<Vec<usize>>,
    pub identity: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlgebraDoc {
    Blocks {
        blocks: Vec<(usize, f64)>,
    },
    Group {
        group_table: GroupTableDoc,
    },
}

/// A finite algebra, with the group it came from when it is a group algebra.
pub struct LoadedAlgebra {
    pub algebra: Arc<FiniteVonNeumannAlgebra>,
    pub group: Option<GroupAlgebra>,
}

impl AlgebraDoc {
    pub fn load(&self) -> Result<LoadedAlgebra> {
        match self {
            AlgebraDoc::Blocks { blocks } => {
                Ok(LoadedAlgebra { algebra: Arc::new(FiniteVonNeumannAlgebra::from_pairs(blocks)?), group: None })
            }
            AlgebraDoc::Group { group_table } => {
                if group_table.product.len() != group_table.order {
                    return Err(Error::validation(
                        "group_table.order",
                        format!("order {} but {} rows", group_table.order, group_table.product.len()),
                    ));
                }
                let table = FiniteGroupTable::new(group_table.product.clone(), group_table.identity)?;
                let ga = group_algebra(&table)?;
                Ok(LoadedAlgebra { algebra: ga.algebra.clone(), group: Some(ga) })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ModuleDoc {
    Free {
        algebra: AlgebraDoc,
        multiplicities: Vec<usize>,
        #[serde(default)]
        reference_gram: Option<MatrixDoc>,
    },
    /// Multiplicities only; the algebra comes from the enclosing document.
    Bare {
        multiplicities: Vec<usize>,
        #[serde(default)]
        reference_gram: Option<MatrixDoc>,
    },
    Action {
        action_generators: Vec<MatrixDoc>,
        #[serde(default)]
        reference_gram: Option<MatrixDoc>,
    },
}

fn with_gram(m: HilbertianModule, gram: &Option<MatrixDoc>, location: &str) -> Result<HilbertianModule> {
    match gram {
        None => Ok(m),
        Some(g) => {
            let g = matrix(g, location)?;
            let op = m.operator_from_carrier(&g).map_err(|e| Error::validation(location, e.to_string()))?;
            m.with_reference_gram(op).map_err(|e| Error::validation(location, e.to_string()))
        }
    }
}

impl ModuleDoc {
    /// `algebra` is the enclosing document's algebra, used by bare modules.
    pub fn load(&self, algebra: Option<&LoadedAlgebra>, location: &str) -> Result<HilbertianModule> {
        let gram_loc = format!("{location}.reference_gram");
        match self {
            ModuleDoc::Free { algebra, multiplicities, reference_gram } => {
                let a = algebra.load()?;
                with_gram(HilbertianModule::new(a.algebra, multiplicities.clone())?, reference_gram, &gram_loc)
            }
            ModuleDoc::Bare { multiplicities, reference_gram } => {
                let a = algebra.ok_or_else(|| Error::validation(location, "module without an algebra"))?;
                with_gram(HilbertianModule::new(a.algebra.clone(), multiplicities.clone())?, reference_gram, &gram_loc)
            }
            ModuleDoc::Action { action_generators, reference_gram } => {
                let mats = action_generators
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(m, &format!("{location}.action_generators[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let group = algebra.and_then(|a| a.group.as_ref());
                with_gram(HilbertianModule::from_action(&mats, group)?, reference_gram, &gram_loc)
            }
        }
    }
}

/// An operator: a carrier matrix.
pub fn operator(m: &HilbertianModule, doc: &MatrixDoc, location: &str) -> Result<CommutantOperator> {
    let c = matrix(doc, location)?;
    if c.shape() != (m.carrier_dim(), m.carrier_dim()) {
        return Err(Error::validation(
            location,
            format!("expected a {0}x{0} matrix, got {1}x{2}", m.carrier_dim(), c.nrows(), c.ncols()),
        ));
    }
    m.operator_from_carrier(&c)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    #[serde(default)]
    pub algebra: Option<AlgebraDoc>,
    pub modules: Vec<ModuleDoc>,
    pub boundaries: Vec<MatrixDoc>,
    #[serde(default)]
    pub convention: Option<String>,
    #[serde(default)]
    pub grams: Option<Vec<MatrixDoc>>,
}

impl ComplexDoc {
    pub fn load(&self, convention_override: Option<Convention>) -> Result<HilbertianChainComplex> {
        let algebra = self.algebra.as_ref().map(AlgebraDoc::load).transpose()?;
        let modules = self
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| m.load(algebra.as_ref(), &format!("modules[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let convention = match (convention_override, &self.convention) {
            (Some(c), _) => c,
            (None, Some(s)) => s.parse()?,
            (None, None) => Convention::Chain,
        };
        if self.boundaries.len() + 1 != modules.len() {
            return Err(Error::validation(
                "boundaries",
                format!("{} modules need {} boundary matrices", modules.len(), modules.len().saturating_sub(1)),
            ));
        }
        let maps = self
            .boundaries
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let loc = format!("boundaries[{i}]");
                let (src, tgt) = match convention {
                    Convention::Chain => (&modules[i + 1], &modules[i]),
                    Convention::Cochain => (&modules[i], &modules[i + 1]),
                };
                let m = matrix(b, &loc)?;
                if m.shape() != (tgt.carrier_dim(), src.carrier_dim()) {
                    return Err(Error::validation(
                        &loc,
                        format!("expected {}x{}, got {}x{}", tgt.carrier_dim(), src.carrier_dim(), m.nrows(), m.ncols()),
                    ));
                }
                HilbertianModule::morphism_from_carrier(src, tgt, &m).map_err(|e| Error::validation(loc, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = HilbertianChainComplex::new(modules, maps, convention)?;
        if let Some(grams) = &self.grams {
            let ops = grams
                .iter()
                .enumerate()
                .map(|(i, g)| operator(&c.modules()[i], g, &format!("grams[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            c = c.with_grams(ops)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetDoc {
    pub module: ModuleDoc,
    pub operator: MatrixDoc,
    #[serde(default)]
    pub method: Option<String>,
}

pub type EntryDoc = Vec<(String, String)>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellComplexDoc {
    pub generators: Vec<String>,
    pub cells: BTreeMap<String, Vec<String>>,
    pub boundaries: BTreeMap<String, Vec<Vec<EntryDoc>>>,
    #[serde(default)]
    pub relators: Vec<String>,
    #[serde(default)]
    pub abelian: bool,
}

fn entry(e: &EntryDoc, gens: &[String], location: &str) -> Result<GroupRingElement> {
    GroupRingElement::parse_pairs(e, gens).map_err(|err| Error::parse(location, err.to_string()))
}

fn dim_key(k: &str, what: &str) -> Result<usize> {
    k.parse().map_err(|_| Error::parse(format!("{what}.{k}"), "dimension keys must be integers"))
}

impl CellComplexDoc {
    pub fn load(&self) -> Result<CellComplex> {
        let mut cells: Vec<Vec<String>> = Vec::new();
        for (k, v) in &self.cells {
            let q = dim_key(k, "cells")?;
            if cells.len() <= q {
                cells.resize(q + 1, Vec::new());
            }
            cells[q] = v.clone();
        }
        let mut boundaries = vec![Vec::new(); cells.len().saturating_sub(1)];
        for (k, m) in &self.boundaries {
            let q = dim_key(k, "boundaries")?;
            if q == 0 || q >= cells.len() {
                return Err(Error::validation(format!("boundaries.{k}"), "no cells in that dimension"));
            }
            boundaries[q - 1] = m
                .iter()
                .enumerate()
                .map(|(j, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(i, e)| entry(e, &self.generators, &format!("boundaries.{k}[{j}][{i}]")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
        }
        // Missing boundary matrices are zero.
        for q in 1..cells.len() {
            if boundaries[q - 1].is_empty() && !cells[q - 1].is_empty() {
                boundaries[q - 1] = vec![vec![GroupRingElement::zero(); cells[q].len()]; cells[q - 1].len()];
            }
        }
        let relators = self
            .relators
            .iter()
            .map(|r| Word::parse(r, &self.generators))
            .collect::<Result<Vec<_>>>()?;
        Ok(CellComplex::new(self.generators.clone(), cells, boundaries)?
            .with_relators(relators)
            .with_abelian(self.abelian))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationDoc {
    pub module: ModuleDoc,
    pub generator_images: Vec<MatrixDoc>,
    #[serde(default)]
    pub side: Option<String>,
}

impl RepresentationDoc {
    pub fn load(&self) -> Result<GroupRepresentation> {
        let m = self.module.load(None, "module")?;
        let images = self
            .generator_images
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let loc = format!("generator_images[{i}]");
                operator(&m, d, &loc).map_err(|e| Error::validation(loc, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let side = self.side.as_deref().map(str::parse).transpose()?.unwrap_or(Side::Right);
        GroupRepresentation::new(m, images, side)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdivisionDoc {
    pub dim: usize,
    /// Label of the cell to split.
    pub cell: String,
    pub plus: Vec<EntryDoc>,
    pub minus: Vec<EntryDoc>,
    #[serde(default)]
    pub new_cell_boundary: Vec<EntryDoc>,
}

impl SubdivisionDoc {
    pub fn load(&self, k: &CellComplex) -> Result<SubdivisionData> {
        let cell = k
            .cells
            .get(self.dim)
            .and_then(|c| c.iter().position(|l| *l == self.cell))
            .ok_or_else(|| Error::validation("cell", format!("no {}-cell labelled '{}'", self.dim, self.cell)))?;
        let conv = |v: &[EntryDoc], what: &str| {
            v.iter()
                .enumerate()
                .map(|(j, e)| entry(e, &k.generators, &format!("{what}[{j}]")))
                .collect::<Result<Vec<_>>>()
        };
        Ok(SubdivisionData {
            dim: self.dim,
            cell,
            plus: conv(&self.plus, "plus")?,
            minus: conv(&self.minus, "minus")?,
            new_cell_boundary: conv(&self.new_cell_boundary, "new_cell_boundary")?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub exponent: Vec<i64>,
    pub matrix: MatrixDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDoc {
    pub rank: usize,
    pub size: usize,
    pub coefficients: Vec<CoefficientDoc>,
}

impl SymbolDoc {
    pub fn load(&self) -> Result<LaurentMatrix> {
        self.load_shaped(self.size, self.size)
    }

    fn load_shaped(&self, rows: usize, cols: usize) -> Result<LaurentMatrix> {
        let mut f = LaurentMatrix::zero(self.rank, rows, cols);
        for (i, c) in self.coefficients.iter().enumerate() {
            let loc = format!("coefficients[{i}]");
            f.add_term(c.exponent.clone(), matrix(&c.matrix, &loc)?).map_err(|e| Error::validation(loc, e.to_string()))?;
        }
        Ok(f)
    }
}

/// A complex over `N(Zⁿ)`: chain convention, `maps[i]: C_{i+1} → C_i`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelianComplexDoc {
    pub rank: usize,
    pub sizes: Vec<usize>,
    pub maps: Vec<Vec<CoefficientDoc>>,
}

impl AbelianComplexDoc {
    pub fn load(&self) -> Result<AbelianChainComplex> {
        if self.maps.len() + 1 != self.sizes.len() {
            return Err(Error::validation("maps", "need one map fewer than sizes"));
        }
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, coeffs)| {
                let doc = SymbolDoc { rank: self.rank, size: 0, coefficients: coeffs.clone() };
                doc.load_shaped(self.sizes[i], self.sizes[i + 1])
                    .map_err(|e| Error::validation(format!("maps[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        AbelianChainComplex::new(self.rank, self.sizes.clone(), maps)
    }
}

/// Parses JSON, reporting the line and column of syntax or schema errors.
pub fn from_json<T: serde::de::DeserializeOwned>(text: &str, location: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(location, e.to_string()))
}

//! Elementary subdivision at the chain level: a `q`-cell `e` splits into
//! `e₊, e₋` separated by a new `(q-1)`-cell `e₀`.

use super::words::GroupRingElement;
use super::{CellComplex, ChainMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SubdivisionData {
    /// Dimension `q ≥ 1` of the cell being split.
    pub dim: usize,
    pub cell: usize,
    /// `∂e₊` over the `(q-1)`-cells of `K'`: the old ones, then `e₀` last.
    pub plus: Vec<GroupRingElement>,
    pub minus: Vec<GroupRingElement>,
    /// `∂e₀` over the `(q-2)`-cells (empty when `q = 1`).
    pub new_cell_boundary: Vec<GroupRingElement>,
}

fn same(a: &GroupRingElement, b: &GroupRingElement, abelian: bool, generators: usize) -> bool {
    let d = a.sub(b);
    d.is_zero() || (abelian && d.abelianize(generators).is_empty())
}

/// Splits a 1-cell: positive terms of `∂e` go to `e₊`, negative ones to `e₋`,
/// with `∂e₊ = (…) − e₀` and `∂e₋ = e₀ − (…)`.
pub fn edge_subdivision(k: &CellComplex, cell: usize) -> SubdivisionData {
    let col: Vec<&GroupRingElement> = k.boundary(1).iter().map(|row| &row[cell]).collect();
    let mut plus: Vec<GroupRingElement> = Vec::with_capacity(col.len() + 1);
    let mut minus: Vec<GroupRingElement> = Vec::with_capacity(col.len() + 1);
    for e in col {
        let (p, m): (Vec<_>, Vec<_>) = e.terms().map(|(n, w)| (n, w.clone())).partition(|(n, _)| *n > 0);
        plus.push(GroupRingElement::from_terms(p));
        minus.push(GroupRingElement::from_terms(m));
    }
    plus.push(GroupRingElement::one().neg());
    minus.push(GroupRingElement::one());
    SubdivisionData { dim: 1, cell, plus, minus, new_cell_boundary: Vec::new() }
}

pub fn elementary_subdivide(k: &CellComplex, data: &SubdivisionData) -> Result<(CellComplex, ChainMap)> {
    let q = data.dim;
    let bad = |msg: String| Err(Error::InvalidSubdivision(msg));
    if q == 0 || q > k.dimension() {
        return bad(format!("cannot split a cell of dimension {q}"));
    }
    if data.cell >= k.num_cells(q) {
        return bad(format!("no {q}-cell with index {}", data.cell));
    }
    let below = k.num_cells(q - 1);
    if data.plus.len() != below + 1 || data.minus.len() != below + 1 {
        return bad(format!("boundaries of e± need {} entries", below + 1));
    }
    let below2 = if q >= 2 { k.num_cells(q - 2) } else { 0 };
    if data.new_cell_boundary.len() != below2 {
        return bad(format!("boundary of e₀ needs {below2} entries"));
    }
    let gens = k.generators.len();
    if data.plus[below].as_unit().is_none() {
        return bad("e₀ must enter ∂e₊ with coefficient ±g".into());
    }
    if !same(&data.plus[below], &data.minus[below].neg(), k.abelian, gens) {
        return bad("e₀ does not cancel in ∂e₊ + ∂e₋".into());
    }
    for j in 0..below {
        if !same(&data.plus[j].add(&data.minus[j]), &k.boundary(q)[j][data.cell], k.abelian, gens) {
            return bad(format!("∂e₊ + ∂e₋ differs from ∂e at cell {}", k.cells[q - 1][j]));
        }
    }

    let mut k2 = k.clone();
    let label = k.cells[q][data.cell].clone();
    k2.cells[q - 1].push(format!("{label}_0"));
    k2.cells[q][data.cell] = format!("{label}+");
    k2.cells[q].push(format!("{label}-"));
    if q >= 2 {
        for (row, e) in k2.boundaries[q - 2].iter_mut().zip(&data.new_cell_boundary) {
            row.push(e.clone());
        }
    }
    {
        let m = &mut k2.boundaries[q - 1];
        m.push(vec![GroupRingElement::zero(); k.num_cells(q)]);
        for (j, row) in m.iter_mut().enumerate() {
            row[data.cell] = data.plus[j].clone();
            row.push(data.minus[j].clone());
        }
    }
    if q < k.dimension() {
        let copy = k2.boundaries[q][data.cell].clone();
        k2.boundaries[q].push(copy);
    }

    // ∂'² = 0: formally, or (for non-abelian π, where relators are needed)
    // at least after augmentation.
    if !k2.square_vanishes_formally() {
        for d in 2..=k2.dimension() {
            if k2.formal_square(d).iter().flatten().any(|e| e.augmentation() != 0) {
                return bad(format!("∂² ≠ 0 in degree {d} of the subdivided complex"));
            }
        }
    }

    let mut psi = ChainMap::identity(k);
    // degree q-1 gains a row for e₀; degree q a row for e₋ with ψ(e) = e₊ + e₋.
    psi.matrices[q - 1].push(vec![GroupRingElement::zero(); below]);
    let mut row = vec![GroupRingElement::zero(); k.num_cells(q)];
    row[data.cell] = GroupRingElement::one();
    psi.matrices[q].push(row);
    Ok((k2, psi))
}

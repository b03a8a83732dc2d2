//! Built-in cell complexes and their elementary subdivisions.

use super::subdivision::{edge_subdivision, SubdivisionData};
use super::words::{GroupRingElement, Word};
use super::CellComplex;

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn el(terms: &[(i64, &str)], gens: &[String]) -> GroupRingElement {
    GroupRingElement::from_terms(terms.iter().map(|&(n, w)| (n, Word::parse(w, gens).expect("fixture word"))))
}

fn zero() -> GroupRingElement {
    GroupRingElement::zero()
}

/// Two vertices joined by an edge, trivial π.
pub fn interval() -> CellComplex {
    let g = names(&[]);
    let b = vec![vec![vec![el(&[(-1, "")], &g)], vec![el(&[(1, "")], &g)]]];
    CellComplex::new(g, vec![names(&["v0", "v1"]), names(&["e"])], b).expect("interval")
}

/// `k ≥ 1` vertices and edges around a loop, π = ⟨t⟩; the last edge closes up through `t`.
pub fn circle(k: usize) -> CellComplex {
    assert!(k >= 1);
    let g = names(&["t"]);
    let mut m = vec![vec![zero(); k]; k];
    for i in 0..k {
        let next = (i + 1) % k;
        let tip = if i + 1 == k { "t" } else { "" };
        m[next][i] = m[next][i].add(&el(&[(1, tip)], &g));
        m[i][i] = m[i][i].add(&el(&[(-1, "")], &g));
    }
    let v = (0..k).map(|i| format!("v{i}")).collect();
    let e = (0..k).map(|i| format!("e{i}")).collect();
    CellComplex::new(g, vec![v, e], vec![m]).expect("circle").with_abelian(true)
}

/// `T² = S¹ × S¹` with one cell of each type, π = Z².
pub fn torus() -> CellComplex {
    let g = names(&["a", "b"]);
    let d1 = vec![vec![el(&[(1, "a"), (-1, "")], &g), el(&[(1, "b"), (-1, "")], &g)]];
    let d2 = vec![vec![el(&[(1, ""), (-1, "b")], &g)], vec![el(&[(1, "a"), (-1, "")], &g)]];
    CellComplex::new(g, vec![names(&["v"]), names(&["a", "b"]), names(&["f"])], vec![d1, d2])
        .expect("torus")
        .with_abelian(true)
}

/// Klein bottle, π = ⟨a, b | abab⁻¹⟩.
pub fn klein() -> CellComplex {
    let g = names(&["a", "b"]);
    let d1 = vec![vec![el(&[(1, "a"), (-1, "")], &g), el(&[(1, "b"), (-1, "")], &g)]];
    let d2 = vec![vec![el(&[(1, ""), (1, "a b")], &g)], vec![el(&[(1, "a"), (-1, "")], &g)]];
    let relator = Word::parse("a b a b^-1", &g).expect("relator");
    CellComplex::new(g, vec![names(&["v"]), names(&["a", "b"]), names(&["f"])], vec![d1, d2])
        .expect("klein")
        .with_relators(vec![relator])
}

/// `RP²`, π = ⟨a | a²⟩.
pub fn rp2() -> CellComplex {
    let g = names(&["a"]);
    let d1 = vec![vec![el(&[(1, "a"), (-1, "")], &g)]];
    let d2 = vec![vec![el(&[(1, ""), (1, "a")], &g)]];
    let relator = Word::parse("a^2", &g).expect("relator");
    CellComplex::new(g, vec![names(&["v"]), names(&["e"]), names(&["f"])], vec![d1, d2])
        .expect("rp2")
        .with_relators(vec![relator])
        .with_abelian(true)
}

/// Lens-type `L(n, 1)`: one cell per dimension 0..3, π = ⟨t | tⁿ⟩.
pub fn lens(n: usize) -> CellComplex {
    assert!(n >= 1);
    let g = names(&["t"]);
    let tm1 = el(&[(1, "t"), (-1, "")], &g);
    let d2 = GroupRingElement::norm_element(0, n);
    let relator = Word::from_letters([(0, n as i64)]);
    CellComplex::new(
        g,
        vec![names(&["c0"]), names(&["c1"]), names(&["c2"]), names(&["c3"])],
        vec![vec![vec![tm1.clone()]], vec![vec![d2]], vec![vec![tm1]]],
    )
    .expect("lens")
    .with_relators(vec![relator])
    .with_abelian(true)
}

/// Splits the 2-cell of the torus along the diagonal `d` with `∂d = ab − 1`.
pub fn torus_diagonal() -> SubdivisionData {
    let g = names(&["a", "b"]);
    SubdivisionData {
        dim: 2,
        cell: 0,
        plus: vec![el(&[(1, "")], &g), el(&[(1, "a")], &g), el(&[(-1, "")], &g)],
        minus: vec![el(&[(-1, "b")], &g), el(&[(-1, "")], &g), el(&[(1, "")], &g)],
        new_cell_boundary: vec![el(&[(1, "a b"), (-1, "")], &g)],
    }
}

/// Complex named as on the command line: `interval`, `circle`, `circle<k>`,
/// `torus`, `klein`, `rp2`, `lens<n>`.
pub fn by_name(name: &str) -> Option<CellComplex> {
    match name {
        "interval" => Some(interval()),
        "circle" => Some(circle(1)),
        "torus" => Some(torus()),
        "klein" => Some(klein()),
        "rp2" => Some(rp2()),
        _ => {
            if let Some(k) = name.strip_prefix("circle") {
                k.parse().ok().filter(|&k| k >= 1).map(circle)
            } else if let Some(n) = name.strip_prefix("lens") {
                n.parse().ok().filter(|&n| n >= 1).map(lens)
            } else {
                None
            }
        }
    }
}

/// The standard subdivision of a named fixture: the first edge for
/// 1-dimensional complexes, the diagonal for the torus.
pub fn standard_subdivision(name: &str) -> Option<(CellComplex, SubdivisionData)> {
    let k = by_name(name)?;
    let data = match name {
        "torus" => torus_diagonal(),
        _ if k.dimension() == 1 => edge_subdivision(&k, 0),
        _ => return None,
    };
    Some((k, data))
}

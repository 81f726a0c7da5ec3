//! Discrete bilinear form of the clamped plate on a Winkler foundation.
//!
//! Unknowns are the interior node values; boundary nodes carry `w = 0` and
//! a missing neighbour across the boundary takes the mirrored value, which
//! realizes `∂w/∂n = 0`. Per node (weight `ω·Δ²`, `ω` the inside fraction
//! of the four adjacent cells):
//!
//! ```text
//! P1111 u11 v11 + P1122 (u11 v22 + u22 v11) + P2222 u22 v22
//!   + 2 P1112 (u11 v12 + u12 v11) + 2 P2212 (u22 v12 + u12 v22)
//! ```
//!
//! with `u12` the wide central mixed difference (zero on boundary nodes).
//! Per inside cell (weight `Δ²`): `4 P̄1212 u12 v12` with the compact
//! cell-centred mixed difference and `P̄` the corner average. Winkler term:
//! `k u v Δ²` on the diagonal.
//!
//! For constant isotropic `P` the form reduces to `P1111·Δ²` times the
//! clamped 13-point biharmonic stencil.

use std::sync::Arc;

use rayon::prelude::*;

use super::linalg::CsrMatrix;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::grid::DiscreteDomain;
use crate::material::PlateTensorField;

const NONE: usize = usize::MAX;

/// Assembled stiffness matrix plus the node/unknown correspondence.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: CsrMatrix,
    /// Node index of each unknown.
    pub unknowns: Vec<usize>,
    /// Unknown index of each node, `usize::MAX` for non-unknowns.
    pub node_to_unknown: Vec<usize>,
}

impl Assembled {
    pub fn dim(&self) -> usize {
        self.unknowns.len()
    }

    /// Gathers interior node values into an unknown vector.
    pub fn gather(&self, field: &ScalarField) -> Vec<f64> {
        self.unknowns.iter().map(|&k| field.get(k)).collect()
    }

    /// Scatters an unknown vector into a field: zero on boundary nodes,
    /// `NaN` on exterior nodes.
    pub fn scatter(&self, domain: &Arc<DiscreteDomain>, x: &[f64]) -> ScalarField {
        let mut f = ScalarField::zeros(domain);
        for (u, &k) in self.unknowns.iter().enumerate() {
            f.set(k, x[u]);
        }
        f
    }
}

/// Interior nodes ordered with the shorter lattice axis running fastest so
/// the matrix bandwidth is about twice the shorter interior width.
pub fn unknown_order(domain: &DiscreteDomain) -> Vec<usize> {
    let mut u = domain.interior_nodes().to_vec();
    if domain.nx() > domain.ny() {
        u.sort_by_key(|&k| {
            let (i, j) = domain.ij(k);
            (i, j)
        });
    }
    u
}

type Lin = Vec<(usize, f64)>;

struct Ctx<'a> {
    dom: &'a DiscreteDomain,
    unk: &'a [usize],
    inv_h2: f64,
}

impl Ctx<'_> {
    fn push_value(&self, out: &mut Lin, node: usize, c: f64) {
        let u = self.unk[node];
        if u != NONE {
            out.push((u, c));
        }
    }

    fn neighbour(&self, n: usize, di: isize, dj: isize) -> Option<usize> {
        self.dom
            .offset(n, di, dj)
            .filter(|&m| self.dom.is_inside(m))
    }

    /// Second difference along `(di, dj)` with mirror ghosts.
    fn second(&self, n: usize, di: isize, dj: isize) -> Result<Lin> {
        let mut out = Lin::with_capacity(3);
        let (p, m) = (self.neighbour(n, di, dj), self.neighbour(n, -di, -dj));
        match (p, m) {
            (Some(p), Some(m)) => {
                self.push_value(&mut out, p, self.inv_h2);
                self.push_value(&mut out, m, self.inv_h2);
            }
            (Some(q), None) | (None, Some(q)) => self.push_value(&mut out, q, 2.0 * self.inv_h2),
            (None, None) => {
                return Err(Error::InvalidDomain(format!(
                    "node {n} has no neighbour on either side"
                )));
            }
        }
        self.push_value(&mut out, n, -2.0 * self.inv_h2);
        Ok(out)
    }

    fn wide_mixed(&self, n: usize) -> Lin {
        let mut out = Lin::with_capacity(4);
        if self.unk[n] == NONE {
            return out;
        }
        for (di, dj, s) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
            if let Some(m) = self.neighbour(n, di, dj) {
                self.push_value(&mut out, m, 0.25 * s * self.inv_h2);
            }
        }
        out
    }

    fn compact_mixed(&self, ci: usize, cj: usize) -> Lin {
        let mut out = Lin::with_capacity(4);
        let a = self.dom.index(ci, cj);
        let nx = self.dom.nx();
        for (node, s) in [(a, 1.0), (a + 1, -1.0), (a + nx, -1.0), (a + nx + 1, 1.0)] {
            self.push_value(&mut out, node, s * self.inv_h2);
        }
        out
    }
}

fn outer(t: &mut Vec<(usize, usize, f64)>, a: &Lin, b: &Lin, w: f64) {
    if w == 0.0 {
        return;
    }
    for &(r, x) in a {
        for &(c, y) in b {
            t.push((r, c, w * x * y));
        }
    }
}

// `w (a⊗b + b⊗a)`.
fn sym_outer(t: &mut Vec<(usize, usize, f64)>, a: &Lin, b: &Lin, w: f64) {
    outer(t, a, b, w);
    outer(t, b, a, w);
}

/// Assembles the form for plate tensor `plate` and foundation `k` (values at
/// interior nodes are used).
pub fn assemble_operator(plate: &PlateTensorField, k: &ScalarField) -> Result<Assembled> {
    let dom = plate.domain();
    if !crate::fields::same_domain(dom, k.domain()) {
        return Err(Error::GridMismatch);
    }
    if dom.nx() < 7 || dom.ny() < 7 {
        return Err(Error::InvalidDomain(
            "domain too thin: fewer than 5 interior nodes across".into(),
        ));
    }
    let unknowns = unknown_order(dom);
    let mut node_to_unknown = vec![NONE; dom.len()];
    for (u, &n) in unknowns.iter().enumerate() {
        node_to_unknown[n] = u;
    }
    let h2 = dom.spacing().powi(2);
    let ctx = Ctx {
        dom,
        unk: &node_to_unknown,
        inv_h2: 1.0 / h2,
    };

    let node_terms: Vec<Vec<(usize, usize, f64)>> = (0..dom.len())
        .into_par_iter()
        .map(|n| -> Result<Vec<(usize, usize, f64)>> {
            let mut t = Vec::new();
            if !dom.is_inside(n) {
                return Ok(t);
            }
            let w = dom.node_weight(n) * h2;
            let p = plate.at(n);
            let l11 = ctx.second(n, 1, 0)?;
            let l22 = ctx.second(n, 0, 1)?;
            let m = ctx.wide_mixed(n);
            outer(&mut t, &l11, &l11, w * p.c1111);
            sym_outer(&mut t, &l11, &l22, w * p.c1122);
            outer(&mut t, &l22, &l22, w * p.c2222);
            sym_outer(&mut t, &l11, &m, 2.0 * w * p.c1112);
            sym_outer(&mut t, &l22, &m, 2.0 * w * p.c2212);
            let u = node_to_unknown[n];
            if u != NONE {
                t.push((u, u, w * k.get(n)));
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let (cx, cy) = (dom.nx() - 1, dom.ny() - 1);
    let cell_terms: Vec<Vec<(usize, usize, f64)>> = (0..cx * cy)
        .into_par_iter()
        .map(|c| {
            let (ci, cj) = (c % cx, c / cx);
            let mut t = Vec::new();
            if !dom.cell_inside(ci, cj) {
                return t;
            }
            let a = dom.index(ci, cj);
            let corners = [a, a + 1, a + dom.nx(), a + dom.nx() + 1];
            let pbar = corners.iter().map(|&n| plate.at(n).c1212).sum::<f64>() / 4.0;
            let l = ctx.compact_mixed(ci, cj);
            outer(&mut t, &l, &l, 4.0 * pbar * h2);
            t
        })
        .collect();

    let triplets: Vec<(usize, usize, f64)> =
        node_terms.into_iter().chain(cell_terms).flatten().collect();
    let matrix = CsrMatrix::from_triplets(unknowns.len(), triplets);
    Ok(Assembled {
        matrix,
        unknowns,
        node_to_unknown,
    })
}

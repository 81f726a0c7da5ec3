//! Piecewise-constant coefficients on random guillotine partitions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::grid::{DiscreteDomain, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    /// Number of pieces `J`.
    pub pieces: usize,
    /// Levels are drawn uniformly from `[lo, hi] ⊂ [0, k̄/ρ₀⁴]`.
    pub levels: [f64; 2],
    #[serde(default)]
    pub seed: Option<u64>,
    /// Per-piece perimeter bound `𝒫`, in units of `ρ₀`.
    #[serde(default)]
    pub perimeter_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    pub rect: Rect,
    pub level: f64,
    pub perimeter: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct PiecewiseK {
    pub field: ScalarField,
    pub pieces: Vec<Piece>,
    /// `max P(E_j)/ρ₀`.
    pub max_perimeter: f64,
}

// Inclusive node-index box.
#[derive(Debug, Clone, Copy)]
struct Block {
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

impl Block {
    fn width(&self) -> usize {
        self.i1 - self.i0 + 1
    }
    fn height(&self) -> usize {
        self.j1 - self.j0 + 1
    }
}

const MAX_ATTEMPTS: usize = 64;

/// Samples `k = Σ k_j χ_{E_j}` over a guillotine partition of the bounding
/// box. Cuts fall halfway between lattice lines so every node belongs to
/// exactly one piece. When a perimeter bound is set, partitions are redrawn
/// until every piece satisfies it.
pub fn piecewise_k(
    domain: &Arc<DiscreteDomain>,
    spec: &PiecewiseSpec,
    k_bar: f64,
) -> Result<PiecewiseK> {
    let [lo, hi] = spec.levels;
    let k_max = k_bar / domain.rho0().powi(4);
    if !(0.0 <= lo && lo <= hi && hi <= k_max * (1.0 + 1e-12)) {
        return Err(Error::Config(format!(
            "piecewise levels [{lo}, {hi}] must lie in [0, k̄/ρ₀⁴ = {k_max}]"
        )));
    }
    let max_pieces = (domain.nx() - 1) * (domain.ny() - 1);
    if spec.pieces == 0 || spec.pieces > max_pieces {
        return Err(Error::Config(format!(
            "piece count {} outside 1..={max_pieces}",
            spec.pieces
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
    for _ in 0..MAX_ATTEMPTS {
        let blocks = partition(domain, spec.pieces, &mut rng);
        let cells: Vec<(Rect, f64)> = blocks
            .iter()
            .map(|b| (block_rect(domain, b), rng.random_range(lo..=hi)))
            .collect();
        let pk = piecewise_from_cells(domain, &cells, 0.0)?;
        match spec.perimeter_bound {
            Some(bound) if pk.max_perimeter > bound => continue,
            _ => return Ok(pk),
        }
    }
    Err(Error::Config(format!(
        "infeasible perimeter bound {:?}: no partition into {} pieces found in {MAX_ATTEMPTS} draws",
        spec.perimeter_bound, spec.pieces
    )))
}

/// Field from explicit cells; a node takes the level of the first cell
/// containing it and `background` otherwise.
pub fn piecewise_from_cells(
    domain: &Arc<DiscreteDomain>,
    cells: &[(Rect, f64)],
    background: f64,
) -> Result<PiecewiseK> {
    let mut counts = vec![0usize; cells.len()];
    let mut values = vec![f64::NAN; domain.len()];
    for (k, v) in values.iter_mut().enumerate() {
        if !domain.is_inside(k) {
            continue;
        }
        let p = domain.node_point(k);
        *v = match cells.iter().position(|(r, _)| r.contains(p)) {
            Some(c) => {
                counts[c] += 1;
                cells[c].1
            }
            None => background,
        };
    }
    let rho0 = domain.rho0();
    let pieces: Vec<Piece> = cells
        .iter()
        .zip(counts)
        .map(|(&(rect, level), nodes)| Piece {
            rect,
            level,
            perimeter: rect.perimeter(),
            nodes,
        })
        .collect();
    let max_perimeter = pieces
        .iter()
        .map(|p| p.perimeter / rho0)
        .fold(0.0, f64::max);
    Ok(PiecewiseK {
        field: ScalarField::from_values(domain, values)?,
        pieces,
        max_perimeter,
    })
}

fn partition(domain: &DiscreteDomain, pieces: usize, rng: &mut ChaCha8Rng) -> Vec<Block> {
    let mut blocks = vec![Block {
        i0: 0,
        i1: domain.nx() - 1,
        j0: 0,
        j1: domain.ny() - 1,
    }];
    while blocks.len() < pieces {
        let splittable: Vec<usize> = (0..blocks.len())
            .filter(|&b| blocks[b].width() > 1 || blocks[b].height() > 1)
            .collect();
        // Pick proportionally to node count so small slivers are rarely cut.
        let total: usize = splittable
            .iter()
            .map(|&b| blocks[b].width() * blocks[b].height())
            .sum();
        let mut pick = rng.random_range(0..total);
        let mut chosen = splittable[0];
        for &b in &splittable {
            let size = blocks[b].width() * blocks[b].height();
            if pick < size {
                chosen = b;
                break;
            }
            pick -= size;
        }
        let b = blocks[chosen];
        let vertical = match (b.width() > 1, b.height() > 1) {
            (true, false) => true,
            (false, true) => false,
            _ if b.width() != b.height() => b.width() > b.height(),
            _ => rng.random_bool(0.5),
        };
        let (a0, a1) = if vertical { (b.i0, b.i1) } else { (b.j0, b.j1) };
        // Last index of the first half, cut fraction in [1/4, 3/4].
        let span = (a1 - a0) as f64;
        let cut = (a0 + (rng.random_range(0.25..=0.75) * span).round() as usize).clamp(a0, a1 - 1);
        let (first, second) = if vertical {
            (Block { i1: cut, ..b }, Block { i0: cut + 1, ..b })
        } else {
            (Block { j1: cut, ..b }, Block { j0: cut + 1, ..b })
        };
        blocks[chosen] = first;
        blocks.push(second);
    }
    blocks
}

fn block_rect(domain: &DiscreteDomain, b: &Block) -> Rect {
    let o = domain.origin();
    let h = domain.spacing();
    let (lx, ly) = domain.extents();
    let edge = |i: usize, last: usize, lo: bool, len: f64| -> f64 {
        match (lo, i) {
            (true, 0) => 0.0,
            (true, _) => (i as f64 - 0.5) * h,
            (false, _) if i == last => len,
            (false, _) => (i as f64 + 0.5) * h,
        }
    };
    Rect::new(
        o.x + edge(b.i0, domain.nx() - 1, true, lx),
        o.y + edge(b.j0, domain.ny() - 1, true, ly),
        o.x + edge(b.i1, domain.nx() - 1, false, lx),
        o.y + edge(b.j1, domain.ny() - 1, false, ly),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bv_embedding_check, frac_seminorm, total_variation};
    use crate::grid::NodeRegion;

    fn unit(n: usize) -> Arc<DiscreteDomain> {
        Arc::new(DiscreteDomain::rectangle(1.0, 1.0, n, None, &[]).unwrap())
    }

    fn spec(j: usize, seed: u64) -> PiecewiseSpec {
        PiecewiseSpec {
            pieces: j,
            levels: [0.1, 1.0],
            seed: Some(seed),
            perimeter_bound: None,
        }
    }

    #[test]
    fn one_piece_is_constant() {
        let d = unit(17);
        let pk = piecewise_k(&d, &spec(1, 5), 1.0).unwrap();
        let v0 = pk.field.get(0);
        assert!((0.1..=1.0).contains(&v0));
        assert!(pk.field.values().iter().all(|&v| v == v0));
        assert_eq!(pk.pieces.len(), 1);
        assert!((pk.max_perimeter - 4.0).abs() < 1e-12);
        assert_eq!(total_variation(&pk.field), 0.0);
    }

    #[test]
    fn partitions_tile_the_box() {
        let d = unit(33);
        for seed in 0..5 {
            let pk = piecewise_k(&d, &spec(10, seed), 1.0).unwrap();
            assert_eq!(pk.pieces.len(), 10);
            assert_eq!(pk.pieces.iter().map(|p| p.nodes).sum::<usize>(), d.len());
            let area: f64 = pk.pieces.iter().map(|p| p.rect.area()).sum();
            assert!((area - 1.0).abs() < 1e-12);
            assert!(pk.pieces.iter().all(|p| p.nodes > 0));
        }
        let a = piecewise_k(&d, &spec(10, 7), 1.0).unwrap();
        let b = piecewise_k(&d, &spec(10, 7), 1.0).unwrap();
        assert_eq!(a.field.values(), b.field.values());
    }

    #[test]
    fn quadrants_variation_by_hand() {
        // n = 33: cuts snap to x, y = 15.5Δ, so each internal interface
        // segment is 15.5Δ or 16.5Δ long.
        let d = unit(33);
        let h = d.spacing();
        let c = 15.5 * h;
        let (a, b, cc, dd) = (1.0, 0.25, 0.5, 0.0);
        let cells = [
            (Rect::new(0.0, 0.0, c, c), a),
            (Rect::new(c, 0.0, 1.0, c), b),
            (Rect::new(0.0, c, c, 1.0), cc),
            (Rect::new(c, c, 1.0, 1.0), dd),
        ];
        let pk = piecewise_from_cells(&d, &cells, f64::NAN).unwrap();
        let (lo, hi) = (c, 1.0 - c);
        let expected = f64::abs(a - b) * lo
            + f64::abs(cc - dd) * hi
            + f64::abs(a - cc) * lo
            + f64::abs(b - dd) * hi;
        assert!((total_variation(&pk.field) - expected).abs() < 1e-12);
    }

    #[test]
    fn ten_pieces_satisfy_the_embedding() {
        let d = unit(33);
        let pk = piecewise_k(&d, &spec(10, 11), 1.0).unwrap();
        let sn = frac_seminorm(&pk.field, &NodeRegion::all_interior(&d), 0.25).unwrap();
        assert!(sn.is_finite() && sn > 0.0);
        let bv = bv_embedding_check(&pk.field, 0.25).unwrap();
        assert!(bv.fitted_cs.is_finite() && bv.fitted_cs > 0.0);
    }

    #[test]
    fn perimeter_bound_enforced() {
        let d = unit(17);
        let ok = PiecewiseSpec {
            perimeter_bound: Some(4.0),
            ..spec(4, 1)
        };
        assert!(piecewise_k(&d, &ok, 1.0).unwrap().max_perimeter <= 4.0);
        let bad = PiecewiseSpec {
            perimeter_bound: Some(0.5),
            ..spec(4, 1)
        };
        assert!(matches!(piecewise_k(&d, &bad, 1.0), Err(Error::Config(_))));
        let out_of_range = PiecewiseSpec {
            levels: [0.0, 2.0],
            ..spec(4, 1)
        };
        assert!(piecewise_k(&d, &out_of_range, 1.0).is_err());
    }
}

//! Lattice geometry: an axis-aligned rectangle sampled with uniform spacing,
//! optionally perforated by rectangular holes.
//!
//! Nodes are indexed row-major, `idx = j * nx + i`, with `x` the fast axis.
//! Every node is classified as interior, boundary (outer edge or hole ring)
//! or exterior (strictly inside a hole). Hole rectangles are snapped inward
//! to the lattice: the closed node box of a hole is every node whose
//! coordinates fall inside the closed hole rectangle.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * ((self.x1 - self.x0) + (self.y1 - self.y0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Node box of a hole in lattice indices, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HoleBox {
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

impl HoleBox {
    fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }

    fn on_ring(&self, i: usize, j: usize) -> bool {
        self.contains(i, j) && (i == self.i0 || i == self.i1 || j == self.j0 || j == self.j1)
    }

    fn contains_cell(&self, ci: usize, cj: usize) -> bool {
        ci >= self.i0 && ci < self.i1 && cj >= self.j0 && cj < self.j1
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    origin: Point,
    lx: f64,
    ly: f64,
    spacing: f64,
    nx: usize,
    ny: usize,
    rho0: f64,
    holes: Vec<Rect>,
    class: Vec<NodeClass>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    cell_inside: Vec<bool>,
    boundary_distance: Vec<f64>,
}

impl DiscreteDomain {
    /// Uniform lattice over `[0, lx] × [0, ly]` with `n` nodes on the shorter
    /// side. `rho0` defaults to `min(lx, ly)`.
    pub fn rectangle(
        lx: f64,
        ly: f64,
        n: usize,
        rho0: Option<f64>,
        holes: &[Rect],
    ) -> Result<Self> {
        Self::rectangle_at(Point::new(0.0, 0.0), lx, ly, n, rho0, holes)
    }

    pub fn rectangle_at(
        origin: Point,
        lx: f64,
        ly: f64,
        n: usize,
        rho0: Option<f64>,
        holes: &[Rect],
    ) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "degenerate extents ({lx}, {ly})"
            )));
        }
        if n < 9 {
            return Err(Error::InvalidDomain(format!(
                "need at least 9 nodes per side, got {n}"
            )));
        }
        let rho0 = rho0.unwrap_or(lx.min(ly));
        if !(rho0 > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "rho0 must be positive, got {rho0}"
            )));
        }
        let spacing = lx.min(ly) / (n - 1) as f64;
        let cells_x = lx / spacing;
        let cells_y = ly / spacing;
        let (nx, ny) = (cells_x.round() as usize + 1, cells_y.round() as usize + 1);
        if (cells_x - cells_x.round()).abs() > 1e-9 * cells_x
            || (cells_y - cells_y.round()).abs() > 1e-9 * cells_y
        {
            return Err(Error::InvalidDomain(format!(
                "extents ({lx}, {ly}) are not commensurate with spacing {spacing}"
            )));
        }

        let mut hole_boxes = Vec::with_capacity(holes.len());
        for h in holes {
            if !(h.x1 > h.x0 && h.y1 > h.y0) {
                return Err(Error::InvalidDomain(format!("degenerate hole {h:?}")));
            }
            if h.x0 <= origin.x
                || h.y0 <= origin.y
                || h.x1 >= origin.x + lx
                || h.y1 >= origin.y + ly
            {
                return Err(Error::InvalidDomain(format!(
                    "hole {h:?} touches the outer boundary"
                )));
            }
            let snap_lo = |v: f64, o: f64| ((v - o) / spacing - 1e-9).ceil() as usize;
            let snap_hi = |v: f64, o: f64| ((v - o) / spacing + 1e-9).floor() as usize;
            let b = HoleBox {
                i0: snap_lo(h.x0, origin.x),
                i1: snap_hi(h.x1, origin.x),
                j0: snap_lo(h.y0, origin.y),
                j1: snap_hi(h.y1, origin.y),
            };
            if b.i1 < b.i0 + 2 || b.j1 < b.j0 + 2 {
                return Err(Error::InvalidDomain(format!(
                    "hole {h:?} spans fewer than 3 lattice nodes per side"
                )));
            }
            if b.i0 < 2 || b.j0 < 2 || b.i1 + 2 >= nx || b.j1 + 2 >= ny {
                return Err(Error::InvalidDomain(format!(
                    "hole {h:?} touches the outer boundary"
                )));
            }
            for other in &hole_boxes {
                let other: &HoleBox = other;
                let apart_x = b.i0 >= other.i1 + 2 || other.i0 >= b.i1 + 2;
                let apart_y = b.j0 >= other.j1 + 2 || other.j0 >= b.j1 + 2;
                if !(apart_x || apart_y) {
                    return Err(Error::InvalidDomain(format!(
                        "hole {h:?} overlaps another hole"
                    )));
                }
            }
            hole_boxes.push(b);
        }

        let mut class = vec![NodeClass::Interior; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = &mut class[j * nx + i];
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    *c = NodeClass::Boundary;
                } else if let Some(b) = hole_boxes.iter().find(|b| b.contains(i, j)) {
                    *c = if b.on_ring(i, j) {
                        NodeClass::Boundary
                    } else {
                        NodeClass::Exterior
                    };
                }
            }
        }
        let mut cell_inside = vec![true; (nx - 1) * (ny - 1)];
        for cj in 0..ny - 1 {
            for ci in 0..nx - 1 {
                if hole_boxes.iter().any(|b| b.contains_cell(ci, cj)) {
                    cell_inside[cj * (nx - 1) + ci] = false;
                }
            }
        }
        let interior: Vec<usize> = (0..nx * ny)
            .filter(|&k| class[k] == NodeClass::Interior)
            .collect();
        let boundary: Vec<usize> = (0..nx * ny)
            .filter(|&k| class[k] == NodeClass::Boundary)
            .collect();

        let mut dom = Self {
            origin,
            lx,
            ly,
            spacing,
            nx,
            ny,
            rho0,
            holes: holes.to_vec(),
            class,
            interior,
            boundary,
            cell_inside,
            boundary_distance: Vec::new(),
        };
        dom.boundary_distance = dom.compute_boundary_distance();
        debug_assert!(dom.check_interior_neighbours());
        Ok(dom)
    }

    // Exact minimum over boundary nodes.
    fn compute_boundary_distance(&self) -> Vec<f64> {
        let bpts: Vec<Point> = self.boundary.iter().map(|&b| self.node_point(b)).collect();
        let mut out = vec![f64::NAN; self.nx * self.ny];
        for &b in &self.boundary {
            out[b] = 0.0;
        }
        for &k in &self.interior {
            let p = self.node_point(k);
            let d2 = bpts
                .iter()
                .map(|q| (p.x - q.x).powi(2) + (p.y - q.y).powi(2))
                .fold(f64::INFINITY, f64::min);
            out[k] = d2.sqrt();
        }
        out
    }

    fn check_interior_neighbours(&self) -> bool {
        self.interior.iter().all(|&k| {
            let (i, j) = self.ij(k);
            i >= 1
                && j >= 1
                && i + 1 < self.nx
                && j + 1 < self.ny
                && (-1..=1).all(|dj| {
                    (-1..=1).all(|di| {
                        let n = self.offset(k, di, dj).expect("inside lattice");
                        self.class[n] != NodeClass::Exterior
                    })
                })
        })
    }

    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn extents(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }
    pub fn rho0(&self) -> f64 {
        self.rho0
    }
    pub fn holes(&self) -> &[Rect] {
        &self.holes
    }
    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }
    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }
    pub fn is_inside(&self, idx: usize) -> bool {
        self.class[idx] != NodeClass::Exterior
    }

    /// Distance from a node to the nearest boundary node (0 on the boundary,
    /// NaN for exterior nodes).
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        self.boundary_distance[idx]
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_point(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        Point::new(
            self.origin.x + i as f64 * self.spacing,
            self.origin.y + j as f64 * self.spacing,
        )
    }

    /// Lattice neighbour at `(i + di, j + dj)`, if it exists.
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
            None
        } else {
            Some(nj as usize * self.nx + ni as usize)
        }
    }

    pub fn cell_inside(&self, ci: usize, cj: usize) -> bool {
        self.cell_inside[cj * (self.nx - 1) + ci]
    }

    /// Fraction of the four lattice cells around a node that lie in the
    /// domain. 1 for interior nodes, 1/2 on straight edges, 1/4 at convex
    /// corners, 3/4 at hole corners, 0 for exterior nodes.
    pub fn node_weight(&self, idx: usize) -> f64 {
        let (i, j) = self.ij(idx);
        let mut inside = 0usize;
        for (ci, cj) in [
            (i.wrapping_sub(1), j.wrapping_sub(1)),
            (i, j.wrapping_sub(1)),
            (i.wrapping_sub(1), j),
            (i, j),
        ] {
            if ci < self.nx - 1 && cj < self.ny - 1 && self.cell_inside(ci, cj) {
                inside += 1;
            }
        }
        inside as f64 / 4.0
    }

    pub fn bounding_box(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.lx,
            self.origin.y + self.ly,
        )
    }

    /// `(#interior + #boundary)·Δ²`.
    pub fn discrete_area(&self) -> f64 {
        (self.interior.len() + self.boundary.len()) as f64 * self.spacing * self.spacing
    }

    /// Continuum area `Lx·Ly − Σ hole areas`.
    pub fn nominal_area(&self) -> f64 {
        self.lx * self.ly - self.holes.iter().map(Rect::area).sum::<f64>()
    }

    /// `|Ω| ≤ M1·ρ₀²` on the discrete area.
    pub fn satisfies_area_bound(&self, m1: f64) -> bool {
        self.discrete_area() <= m1 * self.rho0 * self.rho0
    }

    /// Nearest lattice node to `p`. Ties resolve to the smallest `x`, then the
    /// smallest `y`.
    pub fn nearest_node(&self, p: Point) -> Result<usize> {
        if !self.bounding_box().contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let fx = (p.x - self.origin.x) / self.spacing;
        let fy = (p.y - self.origin.y) / self.spacing;
        let (bi, bj) = (fx.floor().max(0.0) as usize, fy.floor().max(0.0) as usize);
        let tie = 1e-9 * self.spacing * self.spacing;
        let mut best: Option<(f64, usize, usize)> = None;
        for i in bi..=(bi + 1).min(self.nx - 1) {
            for j in bj..=(bj + 1).min(self.ny - 1) {
                let q = self.node_point(self.index(i, j));
                let d2 = (q.x - p.x).powi(2) + (q.y - p.y).powi(2);
                best = match best {
                    None => Some((d2, i, j)),
                    Some((bd, bi_, bj_)) => {
                        if d2 < bd - tie || ((d2 - bd).abs() <= tie && (i, j) < (bi_, bj_)) {
                            Some((d2, i, j))
                        } else {
                            Some((bd, bi_, bj_))
                        }
                    }
                };
            }
        }
        let (_, i, j) = best.expect("bounding box contains at least one cell");
        Ok(self.index(i, j))
    }

    /// Distance from an arbitrary point to the nearest boundary node.
    pub fn point_boundary_distance(&self, p: Point) -> f64 {
        self.boundary
            .iter()
            .map(|&b| self.node_point(b).dist(&p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A set of interior nodes of a domain.
#[derive(Debug, Clone)]
pub struct NodeRegion {
    domain: Arc<DiscreteDomain>,
    label: String,
    members: Vec<usize>,
}

impl NodeRegion {
    /// Builds a region from arbitrary node indices; duplicates are removed.
    pub fn new(
        domain: &Arc<DiscreteDomain>,
        label: impl Into<String>,
        mut members: Vec<usize>,
    ) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members
            .iter()
            .find(|&&k| k >= domain.len() || domain.class(k) != NodeClass::Interior)
        {
            return Err(Error::InvalidRegion(format!(
                "node {bad} is not an interior node"
            )));
        }
        Ok(Self {
            domain: Arc::clone(domain),
            label: label.into(),
            members,
        })
    }

    pub fn all_interior(domain: &Arc<DiscreteDomain>) -> Self {
        Self {
            domain: Arc::clone(domain),
            label: "interior".into(),
            members: domain.interior_nodes().to_vec(),
        }
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn members(&self) -> &[usize] {
        &self.members
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_subset(&self, other: &NodeRegion) -> bool {
        self.members.iter().all(|&k| other.contains(k))
    }

    pub fn intersection(&self, other: &NodeRegion) -> NodeRegion {
        let members = self
            .members
            .iter()
            .copied()
            .filter(|&k| other.contains(k))
            .collect();
        Self {
            domain: Arc::clone(&self.domain),
            label: format!("{}∩{}", self.label, other.label),
            members,
        }
    }

    pub fn difference(&self, other: &NodeRegion) -> NodeRegion {
        let members = self
            .members
            .iter()
            .copied()
            .filter(|&k| !other.contains(k))
            .collect();
        Self {
            domain: Arc::clone(&self.domain),
            label: format!("{}∖{}", self.label, other.label),
            members,
        }
    }

    pub fn filter(
        &self,
        label: impl Into<String>,
        mut keep: impl FnMut(usize) -> bool,
    ) -> NodeRegion {
        let members = self.members.iter().copied().filter(|&k| keep(k)).collect();
        Self {
            domain: Arc::clone(&self.domain),
            label: label.into(),
            members,
        }
    }

    /// Members whose distance to the nearest lattice node outside the region
    /// exceeds `r`: the discrete counterpart of `{x ∈ U : dist(x, ∂U) > r}`.
    pub fn offset(&self, r: f64) -> NodeRegion {
        let dom = &self.domain;
        // The nearest non-member of any member is 4-adjacent to some member.
        let mut frontier = Vec::new();
        let mut seen = vec![false; dom.len()];
        for &k in &self.members {
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if let Some(n) = dom.offset(k, di, dj) {
                    if !seen[n] && !self.contains(n) {
                        seen[n] = true;
                        frontier.push(dom.node_point(n));
                    }
                }
            }
        }
        let r2 = r * r;
        let members = self
            .members
            .iter()
            .copied()
            .filter(|&k| {
                let p = dom.node_point(k);
                frontier
                    .iter()
                    .all(|q| (p.x - q.x).powi(2) + (p.y - q.y).powi(2) > r2)
            })
            .collect();
        Self {
            domain: Arc::clone(dom),
            label: format!("{}_{r}", self.label),
            members,
        }
    }
}

/// `Ω_r`: interior nodes farther than `r` from every boundary node.
pub fn interior_offset(domain: &Arc<DiscreteDomain>, r: f64) -> Result<NodeRegion> {
    if !(r >= 0.0) {
        return Err(Error::InvalidRegion(format!(
            "offset must be non-negative, got {r}"
        )));
    }
    let members = domain
        .interior_nodes()
        .iter()
        .copied()
        .filter(|&k| domain.boundary_distance(k) > r)
        .collect();
    Ok(NodeRegion {
        domain: Arc::clone(domain),
        label: format!("omega_{r}"),
        members,
    })
}

fn check_center(domain: &DiscreteDomain, center: Point) -> Result<()> {
    if domain.bounding_box().contains(center) {
        Ok(())
    } else {
        Err(Error::OutsideDomain {
            x: center.x,
            y: center.y,
        })
    }
}

/// Interior nodes with `|x − center| < radius`.
pub fn disc_region(domain: &Arc<DiscreteDomain>, center: Point, radius: f64) -> Result<NodeRegion> {
    check_center(domain, center)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidRegion(format!(
            "disc radius must be positive, got {radius}"
        )));
    }
    let members = domain
        .interior_nodes()
        .iter()
        .copied()
        .filter(|&k| domain.node_point(k).dist(&center) < radius)
        .collect();
    Ok(NodeRegion {
        domain: Arc::clone(domain),
        label: format!("disc_{radius}"),
        members,
    })
}

/// Interior nodes with `r1 ≤ |x − center| < r2`.
pub fn annulus_region(
    domain: &Arc<DiscreteDomain>,
    center: Point,
    r1: f64,
    r2: f64,
) -> Result<NodeRegion> {
    check_center(domain, center)?;
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::InvalidRegion(format!(
            "annulus needs 0 < r1 < r2, got ({r1}, {r2})"
        )));
    }
    let members = domain
        .interior_nodes()
        .iter()
        .copied()
        .filter(|&k| {
            let d = domain.node_point(k).dist(&center);
            !(d < r1) && d < r2
        })
        .collect();
    Ok(NodeRegion {
        domain: Arc::clone(domain),
        label: format!("annulus_{r1}_{r2}"),
        members,
    })
}

/// One closed square of a covering.
#[derive(Debug, Clone)]
pub struct CoverSquare {
    pub rect: Rect,
    pub center: Point,
    /// Lattice node nearest to the geometric center.
    pub center_node: usize,
    /// Region members lying in the closed square.
    pub members: NodeRegion,
}

/// Covers `region` with closed squares of side `side` aligned to the domain
/// origin. Squares have pairwise-disjoint interiors; only squares holding at
/// least one region node are returned, ordered by row then column.
pub fn cover_with_squares(region: &NodeRegion, side: f64) -> Result<Vec<CoverSquare>> {
    let dom = region.domain();
    if !(side >= 2.0 * dom.spacing() * (1.0 - 1e-12)) {
        return Err(Error::InvalidRegion(format!(
            "square side {side} below twice the lattice spacing {}",
            dom.spacing()
        )));
    }
    let o = dom.origin();
    let mut cells: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
    for &k in region.members() {
        let p = dom.node_point(k);
        let fx = (p.x - o.x) / side;
        let fy = (p.y - o.y) / side;
        // A node on a shared edge belongs to every closed square touching it.
        let range = |f: f64| {
            let lo = f.floor();
            let mut v = vec![lo as usize];
            if (f - lo).abs() < 1e-9 && lo >= 1.0 {
                v.push(lo as usize - 1);
            }
            v
        };
        for a in range(fx) {
            for b in range(fy) {
                cells.entry((b, a)).or_default().push(k);
            }
        }
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((b, a), members) in cells {
        let rect = Rect::new(
            o.x + a as f64 * side,
            o.y + b as f64 * side,
            o.x + (a + 1) as f64 * side,
            o.y + (b + 1) as f64 * side,
        );
        let center = Point::new(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1));
        let clamped = Point::new(
            center.x.clamp(o.x, o.x + dom.extents().0),
            center.y.clamp(o.y, o.y + dom.extents().1),
        );
        let center_node = dom.nearest_node(clamped)?;
        out.push(CoverSquare {
            rect,
            center,
            center_node,
            members: NodeRegion::new(dom, format!("square_{a}_{b}"), members)?,
        });
    }
    Ok(out)
}

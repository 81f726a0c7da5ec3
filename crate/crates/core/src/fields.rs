//! Node-indexed scalar fields, finite-difference derivatives and the
//! `ρ₀`-normalized functionals used throughout the crate.
//!
//! Values are stored for every lattice node; exterior nodes (inside holes)
//! and nodes outside a derivative's region hold `NaN`. All norms are
//! midpoint (node) quadratures with weight `Δ²` per node.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiscreteDomain, NodeClass, NodeRegion, Point};

/// Node budget above which pairwise double sums are stratified-subsampled.
pub const SEMINORM_NODE_CAP: usize = 20_000;

#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: Arc<DiscreteDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: &Arc<DiscreteDomain>) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: &Arc<DiscreteDomain>, c: f64) -> Self {
        Self::from_fn(domain, |_| c)
    }

    /// Samples `f` at every non-exterior node.
    pub fn from_fn(domain: &Arc<DiscreteDomain>, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..domain.len())
            .map(|k| {
                if domain.is_inside(k) {
                    f(domain.node_point(k))
                } else {
                    f64::NAN
                }
            })
            .collect();
        Self {
            domain: Arc::clone(domain),
            values,
        }
    }

    pub fn from_values(domain: &Arc<DiscreteDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            domain: Arc::clone(domain),
            values,
        })
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        same_domain(&self.domain, &other.domain)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            domain: Arc::clone(&self.domain),
            values,
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Keeps values on `region`, `NaN` elsewhere.
    pub fn restrict(&self, region: &NodeRegion) -> Self {
        let mut values = vec![f64::NAN; self.values.len()];
        for &k in region.members() {
            values[k] = self.values[k];
        }
        Self {
            domain: Arc::clone(&self.domain),
            values,
        }
    }

    /// Largest `|value|` over finite entries.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_on(&self, region: &NodeRegion) -> f64 {
        region
            .members()
            .iter()
            .fold(0.0, |m, &k| m.max(self.values[k].abs()))
    }

    /// CSV with header `x,y,value`, one row per non-exterior node in index
    /// order. Nodes without a value are written with an empty value column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(["x", "y", "value"])?;
        for k in 0..self.domain.len() {
            if !self.domain.is_inside(k) {
                continue;
            }
            let p = self.domain.node_point(k);
            let v = self.values[k];
            let v = if v.is_finite() {
                v.to_string()
            } else {
                String::new()
            };
            w.write_record([p.x.to_string(), p.y.to_string(), v])?;
        }
        Ok(())
    }

    /// Binary grid dump: little-endian `u64 nx, u64 ny, f64 Δ, f64 ρ₀`, then
    /// `nx·ny` row-major `f64` values (`x` fastest, `NaN` for missing).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.domain.nx() as u64).to_le_bytes())?;
        w.write_all(&(self.domain.ny() as u64).to_le_bytes())?;
        w.write_all(&self.domain.spacing().to_le_bytes())?;
        w.write_all(&self.domain.rho0().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`ScalarField::write_binary`] onto a domain
    /// with the same lattice.
    pub fn read_binary<R: Read>(domain: &Arc<DiscreteDomain>, mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let nx = u64::from_le_bytes(next(&mut r)?) as usize;
        let ny = u64::from_le_bytes(next(&mut r)?) as usize;
        let h = f64::from_le_bytes(next(&mut r)?);
        let rho0 = f64::from_le_bytes(next(&mut r)?);
        if nx != domain.nx() || ny != domain.ny() || h != domain.spacing() || rho0 != domain.rho0()
        {
            return Err(Error::GridMismatch);
        }
        let mut values = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            values.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_values(domain, values)
    }
}

pub fn same_domain(a: &Arc<DiscreteDomain>, b: &Arc<DiscreteDomain>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.nx() == b.nx()
            && a.ny() == b.ny()
            && a.spacing() == b.spacing()
            && a.origin() == b.origin()
            && a.rho0() == b.rho0()
            && a.classes() == b.classes())
}

/// Derivative multi-index: `dx` derivatives in `x`, `dy` in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub dx: u8,
    pub dy: u8,
}

impl MultiIndex {
    pub const fn new(dx: u8, dy: u8) -> Self {
        Self { dx, dy }
    }

    pub fn order(&self) -> u8 {
        self.dx + self.dy
    }

    /// Lattice reach of the composed stencil along each axis.
    pub fn reach(&self) -> (usize, usize) {
        (self.dx.div_ceil(2) as usize, self.dy.div_ceil(2) as usize)
    }

    /// All multi-indices of order `i` with their multinomial multiplicity
    /// (the number of ordered index tuples giving the same derivative).
    pub fn of_order(i: u8) -> Vec<(MultiIndex, f64)> {
        (0..=i)
            .map(|a| (MultiIndex::new(a, i - a), binomial(i, a)))
            .collect()
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

// Central second-order stencils in one variable, unit spacing.
fn stencil_1d(order: u8) -> &'static [f64] {
    match order {
        0 => &[1.0],
        1 => &[-0.5, 0.0, 0.5],
        2 => &[1.0, -2.0, 1.0],
        3 => &[-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => &[1.0, -4.0, 6.0, -4.0, 1.0],
        _ => unreachable!("derivative order above 4"),
    }
}

fn check_order(mi: MultiIndex) -> Result<()> {
    if mi.dx > 4 || mi.dy > 4 || mi.order() > 4 {
        return Err(Error::InvalidRegion(format!(
            "derivative order {:?} above 4",
            mi
        )));
    }
    Ok(())
}

/// Derivative at a single node; `None` when the stencil leaves the lattice
/// or touches a node without a value.
pub fn diff_at(field: &ScalarField, mi: MultiIndex, idx: usize) -> Option<f64> {
    let dom = field.domain();
    let sx = stencil_1d(mi.dx);
    let sy = stencil_1d(mi.dy);
    let (hx, hy) = ((sx.len() / 2) as isize, (sy.len() / 2) as isize);
    let mut acc = 0.0;
    for (b, &wy) in sy.iter().enumerate() {
        for (a, &wx) in sx.iter().enumerate() {
            let n = dom.offset(idx, a as isize - hx, b as isize - hy)?;
            let v = field.values[n];
            if !v.is_finite() {
                return None;
            }
            if wx != 0.0 && wy != 0.0 {
                acc += wx * wy * v;
            }
        }
    }
    Some(acc / dom.spacing().powi(i32::from(mi.order())))
}

/// Applies the tensor-product central stencil for `mi` on every node of
/// `region`; the result holds `NaN` off the region.
pub fn diff(field: &ScalarField, mi: MultiIndex, region: &NodeRegion) -> Result<ScalarField> {
    check_order(mi)?;
    if !same_domain(field.domain(), region.domain()) {
        return Err(Error::GridMismatch);
    }
    let mut values = vec![f64::NAN; field.values.len()];
    for &k in region.members() {
        values[k] = diff_at(field, mi, k).ok_or(Error::StencilOutOfRange {
            dx: mi.dx,
            dy: mi.dy,
            node: k,
        })?;
    }
    Ok(ScalarField {
        domain: Arc::clone(field.domain()),
        values,
    })
}

/// Interior nodes at which every stencil up to `order` stays on non-exterior
/// lattice nodes (reach `⌈order/2⌉` in each axis).
pub fn stencil_region(domain: &Arc<DiscreteDomain>, order: u8) -> NodeRegion {
    let r = order.div_ceil(2) as isize;
    NodeRegion::all_interior(domain).filter(format!("stencil_{order}"), |k| {
        (-r..=r).all(|dj| {
            (-r..=r).all(|di| {
                domain
                    .offset(k, di, dj)
                    .is_some_and(|n| domain.class(n) != NodeClass::Exterior)
            })
        })
    })
}

/// `‖u‖_{L²} = ρ₀⁻¹ (Σ u² Δ²)^{1/2}` over the region.
pub fn norm_l2(field: &ScalarField, region: &NodeRegion) -> Result<f64> {
    if !same_domain(field.domain(), region.domain()) {
        return Err(Error::GridMismatch);
    }
    let h2 = field.domain().spacing().powi(2);
    let s: f64 = region
        .members()
        .iter()
        .map(|&k| field.values[k].powi(2))
        .sum();
    Ok((s * h2).sqrt() / field.domain().rho0())
}

/// `Σ_nodes |∇ⁱu|² Δ²` with mixed derivatives counted by multiplicity.
fn gradient_energy(field: &ScalarField, region: &NodeRegion, i: u8) -> Result<f64> {
    let h2 = field.domain().spacing().powi(2);
    let mut total = 0.0;
    for (mi, mult) in MultiIndex::of_order(i) {
        let mut s = 0.0;
        for &k in region.members() {
            let d = diff_at(field, mi, k).ok_or(Error::StencilOutOfRange {
                dx: mi.dx,
                dy: mi.dy,
                node: k,
            })?;
            s += d * d;
        }
        total += mult * s * h2;
    }
    Ok(total)
}

/// `‖u‖_{H^k} = ρ₀⁻¹ (Σ_{i≤k} ρ₀^{2i} ∫|∇ⁱu|²)^{1/2}`.
pub fn norm_hk(field: &ScalarField, region: &NodeRegion, k: u8) -> Result<f64> {
    if k > 4 {
        return Err(Error::InvalidRegion(format!("H^{k} not supported (k ≤ 4)")));
    }
    if !same_domain(field.domain(), region.domain()) {
        return Err(Error::GridMismatch);
    }
    let rho0 = field.domain().rho0();
    let mut s = 0.0;
    for i in 0..=k {
        s += rho0.powi(2 * i32::from(i)) * gradient_energy(field, region, i)?;
    }
    Ok(s.sqrt() / rho0)
}

/// Result of a pairwise fractional double sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seminorm {
    pub value: f64,
    /// Lattice stride of the stratified subsample (1 = every node).
    pub stride: usize,
    pub nodes_used: usize,
}

/// Stride keeping a stratified subsample within [`SEMINORM_NODE_CAP`].
pub fn default_stride(nodes: usize) -> usize {
    if nodes <= SEMINORM_NODE_CAP {
        1
    } else {
        (nodes as f64 / SEMINORM_NODE_CAP as f64).sqrt().ceil() as usize
    }
}

struct Sample {
    i: i64,
    j: i64,
    v: f64,
}

fn subsample(field: &ScalarField, nodes: &[usize], stride: usize) -> Vec<Sample> {
    let dom = field.domain();
    nodes
        .iter()
        .filter_map(|&k| {
            let (i, j) = dom.ij(k);
            (i % stride == 0 && j % stride == 0).then(|| Sample {
                i: (i / stride) as i64,
                j: (j / stride) as i64,
                v: field.values[k],
            })
        })
        .collect()
}

// Σ_{x≠y} |u(x)−u(y)|² / |x−y|^{2+2s} · h⁴ over the samples, with an ordered
// reduction so the result does not depend on thread scheduling.
fn pair_sum(samples: &[Sample], s: f64, h: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let (imin, imax) = samples
        .iter()
        .fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.i), b.max(p.i)));
    let (jmin, jmax) = samples
        .iter()
        .fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.j), b.max(p.j)));
    let (wi, wj) = ((imax - imin + 1) as usize, (jmax - jmin + 1) as usize);
    let mut kernel = vec![0.0; wi * wj];
    for dj in 0..wj {
        for di in 0..wi {
            let r2 = (di * di + dj * dj) as f64;
            if r2 > 0.0 {
                kernel[dj * wi + di] = r2.powf(-(1.0 + s));
            }
        }
    }
    let partial: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(a, p)| {
            let mut acc = 0.0;
            for q in &samples[a + 1..] {
                let d = p.v - q.v;
                let di = (p.i - q.i).unsigned_abs() as usize;
                let dj = (p.j - q.j).unsigned_abs() as usize;
                acc += d * d * kernel[dj * wi + di];
            }
            acc
        })
        .collect();
    let total: f64 = partial.iter().sum();
    // Ordered pairs: each unordered pair counted twice.
    2.0 * total * h.powf(2.0 - 2.0 * s)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidRegion(format!(
            "fractional order must lie in (0, 1), got {s}"
        )));
    }
    Ok(())
}

/// Gagliardo seminorm `[u]_s` by node-pair midpoint quadrature (diagonal
/// excluded), with the default subsampling rule.
pub fn frac_seminorm(field: &ScalarField, region: &NodeRegion, s: f64) -> Result<f64> {
    Ok(frac_seminorm_with(field, region, s, None)?.value)
}

/// As [`frac_seminorm`] with an explicit subsampling stride.
pub fn frac_seminorm_with(
    field: &ScalarField,
    region: &NodeRegion,
    s: f64,
    stride: Option<usize>,
) -> Result<Seminorm> {
    check_s(s)?;
    if !same_domain(field.domain(), region.domain()) {
        return Err(Error::GridMismatch);
    }
    seminorm_on_nodes(field, region.members(), s, stride)
}

fn seminorm_on_nodes(
    field: &ScalarField,
    nodes: &[usize],
    s: f64,
    stride: Option<usize>,
) -> Result<Seminorm> {
    let stride = stride.unwrap_or_else(|| default_stride(nodes.len())).max(1);
    let samples = subsample(field, nodes, stride);
    if let Some(bad) = samples.iter().find(|p| !p.v.is_finite()) {
        return Err(Error::InvalidRegion(format!(
            "field has no value at lattice ({}, {})",
            bad.i, bad.j
        )));
    }
    let h = field.domain().spacing() * stride as f64;
    Ok(Seminorm {
        value: pair_sum(&samples, s, h).sqrt(),
        stride,
        nodes_used: samples.len(),
    })
}

/// `‖u‖_{H^{k+s}} = ‖u‖_{H^k} + ρ₀^{s−1}[u]_s`.
pub fn norm_hks(field: &ScalarField, region: &NodeRegion, k: u8, s: f64) -> Result<f64> {
    Ok(norm_report(field, region, k, s)?.hks)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub region: String,
    pub l2: f64,
    pub k: u8,
    pub hk: f64,
    pub s: f64,
    pub seminorm: f64,
    pub hks: f64,
    pub rho0: f64,
    pub stride: usize,
}

pub fn norm_report(field: &ScalarField, region: &NodeRegion, k: u8, s: f64) -> Result<NormReport> {
    let l2 = norm_l2(field, region)?;
    let hk = norm_hk(field, region, k)?;
    let sn = frac_seminorm_with(field, region, s, None)?;
    let rho0 = field.domain().rho0();
    Ok(NormReport {
        region: region.label().to_string(),
        l2,
        k,
        hk,
        s,
        seminorm: sn.value,
        hks: hk + rho0.powf(s - 1.0) * sn.value,
        rho0,
        stride: sn.stride,
    })
}

/// Anisotropic total variation: `Σ_edges |jump|·Δ`, each lattice edge
/// weighted by the fraction of its two adjacent cells inside the domain.
pub fn total_variation(field: &ScalarField) -> f64 {
    let dom = field.domain();
    let (nx, ny) = (dom.nx(), dom.ny());
    let h = dom.spacing();
    let inside = |ci: isize, cj: isize| -> f64 {
        if ci < 0 || cj < 0 || ci as usize >= nx - 1 || cj as usize >= ny - 1 {
            0.0
        } else if dom.cell_inside(ci as usize, cj as usize) {
            1.0
        } else {
            0.0
        }
    };
    let v = field.values();
    let mut tv = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let k = dom.index(i, j);
            if i + 1 < nx {
                let w = 0.5 * (inside(i as isize, j as isize - 1) + inside(i as isize, j as isize));
                if w > 0.0 {
                    tv += w * (v[k + 1] - v[k]).abs() * h;
                }
            }
            if j + 1 < ny {
                let w = 0.5 * (inside(i as isize - 1, j as isize) + inside(i as isize, j as isize));
                if w > 0.0 {
                    tv += w * (v[k + nx] - v[k]).abs() * h;
                }
            }
        }
    }
    tv
}

/// Terms of `[k]_s² ≤ C_s ‖k‖_∞^{2s} (∫k²)^{1−2s} (TV k)^{2s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvCheck {
    pub lhs: f64,
    pub rhs_without_constant: f64,
    pub fitted_cs: f64,
    pub stride: usize,
}

/// Evaluates both sides of the BV–fractional embedding on the non-exterior
/// nodes of the field's domain. Both the seminorm and the variation are
/// taken over the domain itself; the field is not extended outside it.
pub fn bv_embedding_check(field: &ScalarField, s: f64) -> Result<BvCheck> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::InvalidRegion(format!(
            "embedding order must lie in (0, 1/2), got {s}"
        )));
    }
    let dom = field.domain();
    let nodes: Vec<usize> = (0..dom.len()).filter(|&k| dom.is_inside(k)).collect();
    let sn = seminorm_on_nodes(field, &nodes, s, None)?;
    let lhs = sn.value * sn.value;
    let sup = nodes
        .iter()
        .fold(0.0f64, |m, &k| m.max(field.values[k].abs()));
    let l2sq: f64 =
        nodes.iter().map(|&k| field.values[k].powi(2)).sum::<f64>() * dom.spacing().powi(2);
    let tv = total_variation(field);
    let rhs = sup.powf(2.0 * s) * l2sq.powf(1.0 - 2.0 * s) * tv.powf(2.0 * s);
    let fitted_cs = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(BvCheck {
        lhs,
        rhs_without_constant: rhs,
        fitted_cs,
        stride: sn.stride,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{interior_offset, Rect};
    use std::f64::consts::PI;

    fn unit(n: usize) -> Arc<DiscreteDomain> {
        Arc::new(DiscreteDomain::rectangle(1.0, 1.0, n, Some(1.0), &[]).unwrap())
    }

    #[test]
    fn quadratic_exactness_and_constants() {
        let d = unit(17);
        let all = NodeRegion::all_interior(&d);
        let u = ScalarField::from_fn(&d, |p| p.x * p.x);
        let u11 = diff(&u, MultiIndex::new(2, 0), &all).unwrap();
        for &k in all.members() {
            assert!((u11.get(k) - 2.0).abs() < 1e-9);
        }
        let c = ScalarField::constant(&d, 3.5);
        let r4 = stencil_region(&d, 4);
        for i in 0..=4u8 {
            for (mi, _) in MultiIndex::of_order(i).into_iter().filter(|_| i > 0) {
                let dv = diff(&c, mi, &r4).unwrap();
                assert!(r4.members().iter().all(|&k| dv.get(k).abs() < 1e-6));
            }
        }
    }

    #[test]
    fn fourth_derivative_second_order_convergence() {
        let err = |n: usize| {
            let d = unit(n);
            let u = ScalarField::from_fn(&d, |p| (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin());
            let region = interior_offset(&d, 4.0 * d.spacing()).unwrap();
            let du = diff(&u, MultiIndex::new(2, 2), &region).unwrap();
            region
                .members()
                .iter()
                .map(|&k| {
                    let p = d.node_point(k);
                    let exact =
                        (2.0 * PI).powi(4) * (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin();
                    (du.get(k) - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(33) / err(65);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn stencil_out_of_range_is_reported() {
        let d = unit(17);
        let u = ScalarField::from_fn(&d, |p| p.x);
        let all = NodeRegion::all_interior(&d);
        assert!(diff(&u, MultiIndex::new(4, 0), &all).is_err());
        assert!(diff(&u, MultiIndex::new(4, 0), &stencil_region(&d, 4)).is_ok());
    }

    #[test]
    fn mixed_derivatives_commute() {
        let d = unit(17);
        let u = ScalarField::from_fn(&d, |p| (p.x * 3.0).exp() * (p.y * 2.0).cos());
        let r = stencil_region(&d, 2);
        let ux = diff(&u, MultiIndex::new(1, 0), &stencil_region(&d, 1)).unwrap();
        let uy = diff(&u, MultiIndex::new(0, 1), &stencil_region(&d, 1)).unwrap();
        let r2 = interior_offset(&d, 2.5 * d.spacing()).unwrap();
        let a = diff(&ux, MultiIndex::new(0, 1), &r2).unwrap();
        let b = diff(&uy, MultiIndex::new(1, 0), &r2).unwrap();
        let c = diff(&u, MultiIndex::new(1, 1), &r).unwrap();
        for &k in r2.members() {
            assert!((a.get(k) - b.get(k)).abs() <= 1e-9 * a.get(k).abs().max(1.0));
            assert!((a.get(k) - c.get(k)).abs() <= 1e-9 * a.get(k).abs().max(1.0));
        }
    }

    #[test]
    fn l2_examples() {
        let d = unit(65);
        let all = NodeRegion::all_interior(&d);
        let one = ScalarField::constant(&d, 1.0);
        assert!((norm_l2(&one, &all).unwrap() - 1.0).abs() < 3.0 * d.spacing());
        // ∫ sin²(πx) sin²(πy) = 1/4.
        let errs: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&n| {
                let d = unit(n);
                let u = ScalarField::from_fn(&d, |p| (PI * p.x).sin() * (PI * p.y).sin());
                (norm_l2(&u, &NodeRegion::all_interior(&d)).unwrap() - 0.5).abs()
            })
            .collect();
        assert!(errs.iter().all(|&e| e < 1e-12), "{errs:?}");
        let d2 = Arc::new(DiscreteDomain::rectangle(1.0, 1.0, 65, Some(2.0), &[]).unwrap());
        let one2 = ScalarField::constant(&d2, 1.0);
        let a = norm_l2(&one, &all).unwrap();
        let b = norm_l2(&one2, &NodeRegion::all_interior(&d2)).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn h2_norm_of_manufactured_field() {
        // u = sin(πx) sin(πy): ∫u² = 1/4, ∫|∇u|² = π²/2, ∫|∇²u|² = π⁴ (with
        // ∂₁₂ counted twice).
        let exact = (0.25 + PI * PI / 2.0 + PI.powi(4)).sqrt();
        let err = |n: usize| {
            let d = unit(n);
            let u = ScalarField::from_fn(&d, |p| (PI * p.x).sin() * (PI * p.y).sin());
            (norm_hk(&u, &NodeRegion::all_interior(&d), 2).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(65), err(129));
        // Boundary nodes carry no derivative terms: first-order quadrature.
        assert!(e2 < 0.6 * e1 && e2 / exact < 1e-2, "{e1} {e2}");
        let d = unit(33);
        let u = ScalarField::constant(&d, 2.0);
        let all = NodeRegion::all_interior(&d);
        let l2 = norm_l2(&u, &all).unwrap();
        assert!((norm_hks(&u, &all, 0, 0.3).unwrap() - l2).abs() < 1e-12);
    }

    #[test]
    fn hk_monotone_in_region() {
        let d = unit(33);
        let u = ScalarField::from_fn(&d, |p| (3.0 * p.x).sin() + p.y * p.y * p.x);
        let big = interior_offset(&d, 0.05).unwrap();
        let small = interior_offset(&d, 0.2).unwrap();
        for k in 0..=4 {
            assert!(norm_hk(&u, &small, k).unwrap() <= norm_hk(&u, &big, k).unwrap());
        }
        let r = stencil_region(&d, 4);
        assert!(norm_hks(&u, &r, 4, 0.25).unwrap() >= norm_hk(&u, &r, 4).unwrap());
    }

    // Independent reference: straightforward double loop with powf.
    fn brute_seminorm(field: &ScalarField, region: &NodeRegion, s: f64) -> f64 {
        let d = field.domain();
        let h = d.spacing();
        let mut acc = 0.0;
        for &a in region.members() {
            for &b in region.members() {
                if a == b {
                    continue;
                }
                let r = d.node_point(a).dist(&d.node_point(b));
                acc += (field.get(a) - field.get(b)).powi(2) / r.powf(2.0 + 2.0 * s) * h.powi(4);
            }
        }
        acc.sqrt()
    }

    #[test]
    fn seminorm_matches_brute_force_and_grows_with_s() {
        let d = unit(21);
        let all = NodeRegion::all_interior(&d);
        let step = ScalarField::from_fn(&d, |p| if p.x > 0.5 { 1.0 } else { 0.0 });
        let a = frac_seminorm(&step, &all, 0.25).unwrap();
        let b = frac_seminorm(&step, &all, 0.45).unwrap();
        assert!(a.is_finite() && b > a);
        for s in [0.25, 0.45] {
            let fast = frac_seminorm(&step, &all, s).unwrap();
            let slow = brute_seminorm(&step, &all, s);
            assert!((fast - slow).abs() <= 1e-12 * slow, "{fast} {slow}");
        }
        assert_eq!(
            frac_seminorm(&ScalarField::constant(&d, 2.0), &all, 0.3).unwrap(),
            0.0
        );
        assert!(frac_seminorm(&step, &all, 1.0).is_err());
    }

    #[test]
    fn seminorm_change_of_variables() {
        // v(x) = u(2x) on the half-size square: [v]_s = 2^{s−1}[u]_s.
        let s = 0.3;
        let u_fn = |p: Point| (p.x * 2.0).sin() * p.y + p.x * p.x;
        let d1 = unit(25);
        let d2 = Arc::new(DiscreteDomain::rectangle(0.5, 0.5, 25, Some(1.0), &[]).unwrap());
        let u = ScalarField::from_fn(&d1, u_fn);
        let v = ScalarField::from_fn(&d2, |p| u_fn(Point::new(2.0 * p.x, 2.0 * p.y)));
        let su = frac_seminorm(&u, &NodeRegion::all_interior(&d1), s).unwrap();
        let sv = frac_seminorm(&v, &NodeRegion::all_interior(&d2), s).unwrap();
        assert!((sv / su - 2f64.powf(s - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn subsampling_uses_stride() {
        let d = unit(33);
        let all = NodeRegion::all_interior(&d);
        let u = ScalarField::from_fn(&d, |p| (PI * p.x).sin() * (PI * p.y).sin());
        let full = frac_seminorm_with(&u, &all, 0.5, Some(1)).unwrap();
        let sub = frac_seminorm_with(&u, &all, 0.5, Some(2)).unwrap();
        assert_eq!(sub.stride, 2);
        assert!(sub.nodes_used < full.nodes_used);
        assert!((sub.value / full.value - 1.0).abs() < 0.1);
        assert_eq!(default_stride(10_000), 1);
        assert_eq!(default_stride(65_000), 2);
    }

    #[test]
    fn total_variation_examples() {
        let d = unit(17);
        let ind = ScalarField::from_fn(&d, |p| {
            if Rect::new(0.25, 0.25, 0.75, 0.75).contains(p) {
                1.0
            } else {
                0.0
            }
        });
        // Snapped node set spans 9 nodes per side.
        let tv = total_variation(&ind);
        assert!((tv - 4.0 * 9.0 * d.spacing()).abs() < 1e-12);
        assert!((tv - 2.0).abs() <= 4.0 * d.spacing() + 1e-12);
        assert_eq!(total_variation(&ScalarField::constant(&d, 4.0)), 0.0);
        // ∫|∂x u| + |∂y u| for u = x² + y: 1 + 1.
        let errs: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&n| {
                let d = unit(n);
                (total_variation(&ScalarField::from_fn(&d, |p| p.x * p.x + p.y)) - 2.0).abs()
            })
            .collect();
        assert!(
            errs[2] < 1e-12 || (errs[2] < errs[1] && errs[1] < errs[0]),
            "{errs:?}"
        );
        let d = unit(33);
        let u = ScalarField::from_fn(&d, |p| (PI * p.x).sin() * (PI * p.y).cos());
        // ∫∫ π|cos πx||cos πy| + π|sin πx||sin πy| = 8/π.
        assert!((total_variation(&u) - 8.0 / PI).abs() < 0.02);
    }

    #[test]
    fn bv_check_examples() {
        let d = unit(33);
        let z = bv_embedding_check(&ScalarField::zeros(&d), 0.25).unwrap();
        assert_eq!(
            (z.lhs, z.rhs_without_constant, z.fitted_cs),
            (0.0, 0.0, 0.0)
        );
        let two_level = |n: usize| {
            let d = unit(n);
            let k = ScalarField::from_fn(&d, |p| if p.x < 0.3 + 0.5 * p.y { 1.0 } else { 3.0 });
            bv_embedding_check(&k, 0.25).unwrap().fitted_cs
        };
        let (a, b) = (two_level(33), two_level(65));
        assert!(
            a.is_finite() && a > 0.0 && (a / b - 1.0).abs() < 0.2,
            "{a} {b}"
        );
        assert!(bv_embedding_check(&ScalarField::zeros(&d), 0.5).is_err());
    }

    #[test]
    fn binary_dump_round_trip() {
        let d = Arc::new(
            DiscreteDomain::rectangle(1.0, 1.0, 17, None, &[Rect::new(0.3, 0.3, 0.6, 0.6)])
                .unwrap(),
        );
        let u = ScalarField::from_fn(&d, |p| p.x - 2.0 * p.y);
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * d.len());
        let back = ScalarField::read_binary(&d, &buf[..]).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!(a.to_bits() == b.to_bits());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn seminorm_translation_invariant(c in -50.0f64..50.0, a in -3.0f64..3.0, s in 0.05f64..0.95) {
                let d = unit(13);
                let all = NodeRegion::all_interior(&d);
                let u = ScalarField::from_fn(&d, |p| (a * p.x).sin() + p.y * p.y);
                let v = u.map(|x| x + c);
                let su = frac_seminorm(&u, &all, s).unwrap();
                let sv = frac_seminorm(&v, &all, s).unwrap();
                prop_assert!((su - sv).abs() <= 1e-9 * su.max(1e-12));
            }

            #[test]
            fn seminorm_zero_iff_constant(vals in proptest::collection::vec(-1.0f64..1.0, 121)) {
                let d = unit(13);
                let all = NodeRegion::all_interior(&d);
                let mut u = ScalarField::zeros(&d);
                for (n, &k) in all.members().iter().enumerate() {
                    u.set(k, vals[n]);
                }
                let nonconst = vals.iter().any(|&v| v != vals[0]);
                let s = frac_seminorm(&u, &all, 0.4).unwrap();
                prop_assert_eq!(s > 0.0, nonconst);
            }
        }
    }
}

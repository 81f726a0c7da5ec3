//! Pointwise recovery of the foundation coefficient from interior
//! deflection data.
//!
//! Away from the load point the plate equation gives
//! `k = −div div(P∇²w) / w`. The derivatives are the composed central
//! stencils of [`crate::fields`]; nodes where `|w|` is small, nodes near the
//! load point and nodes within a derivative margin of the boundary are
//! excluded. This is a direct formula, not a regularized inversion.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, MultiIndex, ScalarField};
use crate::grid::{interior_offset, DiscreteDomain, NodeRegion, Point};
use crate::material::PlateTensorField;

/// Observed deflection.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub w_obs: ScalarField,
    /// Relative noise level `η`: std is `η·max|w|`.
    pub noise: f64,
    pub seed: Option<u64>,
    pub provenance: String,
}

impl Measurement {
    pub fn exact(w: ScalarField, provenance: impl Into<String>) -> Self {
        Self {
            w_obs: w,
            noise: 0.0,
            seed: None,
            provenance: provenance.into(),
        }
    }

    /// Adds i.i.d. Gaussian noise with std `eta·max|w|` at interior nodes.
    pub fn noisy(
        w: &ScalarField,
        eta: f64,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Reconstruction(format!(
                "noise level must be non-negative, got {eta}"
            )));
        }
        let std = eta * w.max_abs();
        let mut obs = w.clone();
        if std > 0.0 {
            let normal = Normal::new(0.0, std).map_err(|e| Error::Reconstruction(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for &n in w.domain().interior_nodes() {
                obs.set(n, w.get(n) + normal.sample(&mut rng));
            }
        }
        Ok(Self {
            w_obs: obs,
            noise: eta,
            seed: Some(seed),
            provenance: provenance.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    /// Smallness threshold relative to `max|w|`.
    #[serde(default = "default_w_min_rel")]
    pub w_min_rel: f64,
    /// Radius of the excluded disc around the load point; `None` uses
    /// [`default_exclude_radius`].
    #[serde(default)]
    pub exclude_radius: Option<f64>,
    /// Gaussian smoothing std (length); `0` disables.
    #[serde(default)]
    pub mollify_width: f64,
    /// Reporting region `Ω_{σρ₀}`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_w_min_rel() -> f64 {
    1e-3
}

fn default_sigma() -> f64 {
    0.1
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            w_min_rel: default_w_min_rel(),
            exclude_radius: None,
            mollify_width: 0.0,
            sigma: default_sigma(),
        }
    }
}

/// `max(0.1·ρ₀, 4Δ)`: a fixed physical radius, so the region polluted by
/// the discrete delta does not grow relative to the mask under refinement.
pub fn default_exclude_radius(domain: &DiscreteDomain) -> f64 {
    (0.1 * domain.rho0()).max(4.0 * domain.spacing())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionError {
    pub l2: f64,
    pub relative_l2: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// `NaN` off the mask.
    pub k_hat: ScalarField,
    pub valid_mask: NodeRegion,
    /// Nodes where a negative value was clipped to zero.
    pub clamped: usize,
    pub w_min: f64,
    pub exclude_radius: f64,
    pub f: f64,
    pub error: Option<ReconstructionError>,
}

impl ReconstructionResult {
    /// Error metrics of `k_hat` against `k_true` on the valid mask.
    pub fn compare(&self, k_true: &ScalarField) -> Result<ReconstructionError> {
        if !self.k_hat.same_grid(k_true) {
            return Err(Error::GridMismatch);
        }
        let diff = self.k_hat.sub(k_true)?;
        let l2 = fields::norm_l2(&diff, &self.valid_mask)?;
        let base = fields::norm_l2(k_true, &self.valid_mask)?;
        Ok(ReconstructionError {
            l2,
            relative_l2: if base > 0.0 { l2 / base } else { l2 },
            max_abs: diff.max_abs_on(&self.valid_mask),
        })
    }

    pub fn with_truth(mut self, k_true: &ScalarField) -> Result<Self> {
        self.error = Some(self.compare(k_true)?);
        Ok(self)
    }
}

/// Truncated Gaussian smoothing (std `width`, cut at `3·width`), normalized
/// over the non-exterior nodes inside the window.
pub fn mollify(w: &ScalarField, width: f64) -> Result<ScalarField> {
    if !(width >= 0.0) {
        return Err(Error::Reconstruction(format!(
            "mollifier width must be non-negative, got {width}"
        )));
    }
    let dom = w.domain();
    let h = dom.spacing();
    if width == 0.0 || 3.0 * width < h {
        return Ok(w.clone());
    }
    let r = (3.0 * width / h).floor() as isize;
    let cut = (3.0 * width / h).powi(2);
    let mut kernel = Vec::new();
    for dj in -r..=r {
        for di in -r..=r {
            let q = (di * di + dj * dj) as f64;
            if q <= cut {
                kernel.push((di, dj, (-q * h * h / (2.0 * width * width)).exp()));
            }
        }
    }
    let values: Vec<f64> = (0..dom.len())
        .into_par_iter()
        .map(|n| {
            if !dom.is_inside(n) {
                return f64::NAN;
            }
            let (mut acc, mut norm) = (0.0, 0.0);
            for &(di, dj, g) in &kernel {
                if let Some(m) = dom.offset(n, di, dj) {
                    let v = w.get(m);
                    if dom.is_inside(m) && v.is_finite() {
                        acc += g * v;
                        norm += g;
                    }
                }
            }
            acc / norm
        })
        .collect();
    ScalarField::from_values(dom, values)
}

/// `div div(P∇²w) = ∂₁₁M₁₁ + 2∂₁₂M₁₂ + ∂₂₂M₂₂` on `region`, with
/// `M = P∇²w`.
pub fn divdiv(
    plate: &PlateTensorField,
    w: &ScalarField,
    region: &NodeRegion,
) -> Result<ScalarField> {
    let dom = w.domain();
    if !fields::same_domain(dom, plate.domain()) {
        return Err(Error::GridMismatch);
    }
    let inner = fields::stencil_region(dom, 2);
    let w11 = fields::diff(w, MultiIndex::new(2, 0), &inner)?;
    let w22 = fields::diff(w, MultiIndex::new(0, 2), &inner)?;
    let w12 = fields::diff(w, MultiIndex::new(1, 1), &inner)?;
    let mut m11 = ScalarField::constant(dom, f64::NAN);
    let mut m22 = m11.clone();
    let mut m12 = m11.clone();
    for &n in inner.members() {
        let p = plate.at(n);
        let (a, b, c) = (w11.get(n), w22.get(n), w12.get(n));
        m11.set(n, p.c1111 * a + p.c1122 * b + 2.0 * p.c1112 * c);
        m22.set(n, p.c1122 * a + p.c2222 * b + 2.0 * p.c2212 * c);
        m12.set(n, p.c1112 * a + p.c2212 * b + 2.0 * p.c1212 * c);
    }
    let d11 = fields::diff(&m11, MultiIndex::new(2, 0), region)?;
    let d22 = fields::diff(&m22, MultiIndex::new(0, 2), region)?;
    let d12 = fields::diff(&m12, MultiIndex::new(1, 1), region)?;
    let mut out = ScalarField::constant(dom, f64::NAN);
    for &n in region.members() {
        out.set(n, d11.get(n) + 2.0 * d12.get(n) + d22.get(n));
    }
    Ok(out)
}

/// Nodes of `Ω_{σρ₀}` at least `2Δ` further in, outside the exclusion disc.
pub fn reconstruction_region(
    domain: &Arc<DiscreteDomain>,
    p0: Point,
    sigma: f64,
    exclude_radius: f64,
) -> Result<NodeRegion> {
    if !(sigma > 0.0) {
        return Err(Error::Reconstruction(format!(
            "σ must be positive, got {sigma}"
        )));
    }
    let h = domain.spacing();
    if exclude_radius < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::Reconstruction(format!(
            "exclusion radius {exclude_radius} below 2Δ = {}",
            2.0 * h
        )));
    }
    let offset = interior_offset(domain, sigma * domain.rho0() + 2.0 * h)?;
    let safe = fields::stencil_region(domain, 4);
    let inner = offset.intersection(&safe);
    let region = inner.filter("reconstruction", |n| {
        domain.node_point(n).dist(&p0) >= exclude_radius
    });
    if region.is_empty() {
        return Err(Error::Reconstruction(if inner.is_empty() {
            format!("offset region Ω_(σρ₀) is empty for σ = {sigma}")
        } else {
            format!("exclusion disc of radius {exclude_radius} covers the offset region")
        }));
    }
    Ok(region)
}

pub fn reconstruct(
    measurement: &Measurement,
    plate: &PlateTensorField,
    p0: Point,
    f: f64,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    if !(f > 0.0) {
        return Err(Error::Reconstruction(format!(
            "load must be positive, got {f}"
        )));
    }
    let dom = measurement.w_obs.domain();
    let exclude_radius = config
        .exclude_radius
        .unwrap_or_else(|| default_exclude_radius(dom));
    let region = reconstruction_region(dom, p0, config.sigma, exclude_radius)?;
    let ws = mollify(&measurement.w_obs, config.mollify_width)?;
    let w_min = config.w_min_rel * ws.max_abs();
    let mask = region.filter("valid_mask", |n| ws.get(n).abs() > w_min);
    if mask.is_empty() {
        return Err(Error::Reconstruction(format!(
            "no node with |w| > w_min = {w_min}"
        )));
    }
    let dd = divdiv(plate, &ws, &mask)?;
    let mut k_hat = ScalarField::constant(dom, f64::NAN);
    let mut clamped = 0;
    for &n in mask.members() {
        let v = -dd.get(n) / ws.get(n);
        if v < 0.0 {
            clamped += 1;
            k_hat.set(n, 0.0);
        } else {
            k_hat.set(n, v);
        }
    }
    Ok(ReconstructionResult {
        k_hat,
        valid_mask: mask,
        clamped,
        w_min,
        exclude_radius,
        f,
        error: None,
    })
}

/// `ε = ‖w₁ − w₂‖_{L²(Ω)}/f`, integrating with the node weights so that the
/// measure of `Ω` is exact.
pub fn discrepancy(w1: &ScalarField, w2: &ScalarField, f: f64) -> Result<f64> {
    if !w1.same_grid(w2) {
        return Err(Error::GridMismatch);
    }
    let dom = w1.domain();
    let h2 = dom.spacing().powi(2);
    let s: f64 = (0..dom.len())
        .filter(|&n| dom.is_inside(n))
        .map(|n| dom.node_weight(n) * (w1.get(n) - w2.get(n)).powi(2))
        .sum();
    Ok((s * h2).sqrt() / dom.rho0() / f)
}

/// `δ = ‖k₁ − k₂‖_{L²(Ω_{σρ₀})}`.
pub fn coefficient_error(k1: &ScalarField, k2: &ScalarField, sigma: f64) -> Result<f64> {
    if !k1.same_grid(k2) {
        return Err(Error::GridMismatch);
    }
    let region = interior_offset(k1.domain(), sigma * k1.domain().rho0())?;
    if region.is_empty() {
        return Err(Error::InvalidRegion(format!(
            "Ω_(σρ₀) is empty for σ = {sigma}"
        )));
    }
    fields::norm_l2(&k1.sub(k2)?, &region)
}

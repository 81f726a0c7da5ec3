//! Empirical counterparts of the constants in the stability argument.
//!
//! Every scalar here is homogeneous of degree zero in `w`, so the audits can
//! be compared across loads and resolutions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    self, diff, frac_seminorm_with, norm_hk, norm_l2, stencil_region, MultiIndex, ScalarField,
};
use crate::forward::ForwardProblem;
use crate::grid::{
    cover_with_squares, disc_region, interior_offset, DiscreteDomain, NodeRegion, Point,
};
use crate::inverse::divdiv;
use crate::material::PlateTensorField;

/// `U = Ω ∖ B_{σ̄ρ₀}(P0)`, where the solution is free of the load.
pub fn homogeneous_region(problem: &ForwardProblem) -> NodeRegion {
    let dom = &problem.domain;
    let r = problem.sigma_bar() * dom.rho0();
    NodeRegion::all_interior(dom).filter("U", |n| dom.node_point(n).dist(&problem.p0) >= r)
}

/// `Ω_{σρ₀}` restricted to nodes with full order-4 stencils.
pub fn audit_region(domain: &Arc<DiscreteDomain>, sigma: f64) -> Result<NodeRegion> {
    let off = interior_offset(domain, sigma * domain.rho0())?;
    let region = off
        .intersection(&stencil_region(domain, 4))
        .with_label("omega_sigma");
    if region.is_empty() {
        return Err(Error::InvalidRegion(format!(
            "Ω_(σρ₀) has no node with order-4 stencils for σ = {sigma}"
        )));
    }
    Ok(region)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofAudit {
    /// `∫ k₂² w²`.
    pub i1: f64,
    /// `∫ (div div(P∇²w))²`.
    pub i2: f64,
    /// `∫ (k₂ − k₁)² w₁²`.
    pub lhs: f64,
    /// `2(I₁ + I₂)`.
    pub rhs: f64,
    pub holds: bool,
    /// `‖r‖ / ‖(k₂ − k₁) w₁‖` for the difference-equation residual `r`.
    pub residual: f64,
    pub nodes: usize,
}

/// Terms of the difference problem for `w = w₁ − w₂` on `Ω_{σρ₀}`.
pub fn proof_audit(
    plate: &PlateTensorField,
    k1: &ScalarField,
    k2: &ScalarField,
    w1: &ScalarField,
    w2: &ScalarField,
    sigma: f64,
    tol: f64,
) -> Result<ProofAudit> {
    let w = w1.sub(w2)?;
    let region = audit_region(w.domain(), sigma)?;
    let a = divdiv(plate, &w, &region)?;
    let (mut i1, mut i2, mut lhs, mut res) = (0.0, 0.0, 0.0, 0.0);
    for &n in region.members() {
        let (b, src) = (k2.get(n) * w.get(n), (k2.get(n) - k1.get(n)) * w1.get(n));
        i1 += b * b;
        i2 += a.get(n).powi(2);
        lhs += src * src;
        res += (a.get(n) + b - src).powi(2);
    }
    let h2 = w.domain().spacing().powi(2);
    let (i1, i2, lhs) = (i1 * h2, i2 * h2, lhs * h2);
    let rhs = 2.0 * (i1 + i2);
    let residual = if lhs > 0.0 {
        (res * h2 / lhs).sqrt()
    } else {
        0.0
    };
    Ok(ProofAudit {
        i1,
        i2,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + tol),
        residual,
        nodes: region.len(),
    })
}

fn check_tau(domain: &DiscreteDomain, tau: f64) -> Result<f64> {
    let r = tau * domain.rho0();
    if !(r >= 3.0 * domain.spacing() * (1.0 - 1e-12)) {
        return Err(Error::UnderResolved(format!(
            "τρ₀ = {r} below 3Δ = {}",
            3.0 * domain.spacing()
        )));
    }
    Ok(r)
}

/// Sample points: the member of each covering square of `U_{c·τρ₀}`
/// closest to the square's center.
fn sample_points(u: &NodeRegion, tau_rho0: f64, c: f64) -> Result<Vec<usize>> {
    let inner = u.offset(c * tau_rho0);
    if inner.is_empty() {
        return Err(Error::InvalidRegion(format!(
            "no admissible sample point: U_(c·τρ₀) is empty for c·τρ₀ = {}",
            c * tau_rho0
        )));
    }
    let dom = u.domain();
    let squares = cover_with_squares(&inner, std::f64::consts::SQRT_2 * tau_rho0)?;
    Ok(squares
        .iter()
        .map(|sq| {
            *sq.members
                .members()
                .iter()
                .min_by(|&&a, &&b| {
                    dom.node_point(a)
                        .dist(&sq.center)
                        .total_cmp(&dom.node_point(b).dist(&sq.center))
                        .then(a.cmp(&b))
                })
                .expect("covering squares are non-empty")
        })
        .collect())
}

fn ball(u: &NodeRegion, center: Point, r: f64) -> Result<NodeRegion> {
    Ok(disc_region(u.domain(), center, r)?.intersection(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsAudit {
    /// Empirical `c_τ`: the smallest disc-to-`U` energy fraction.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: Point,
    pub samples: usize,
    pub tau_rho0: f64,
    pub passes: bool,
}

/// `min_x ∫_{B_{τρ₀}(x)} w² / ∫_U w²` over samples in `U_{c₁τρ₀}`.
pub fn lps_audit(w: &ScalarField, u: &NodeRegion, tau: f64, c1: f64) -> Result<LpsAudit> {
    let dom = w.domain();
    if !fields::same_domain(dom, u.domain()) {
        return Err(Error::GridMismatch);
    }
    let r = check_tau(dom, tau)?;
    let total: f64 = u.members().iter().map(|&n| w.get(n).powi(2)).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidRegion("w vanishes on U".into()));
    }
    let mut out = LpsAudit {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        argmin: Point::new(f64::NAN, f64::NAN),
        samples: 0,
        tau_rho0: r,
        passes: false,
    };
    for x in sample_points(u, r, c1)? {
        let p = dom.node_point(x);
        let b = ball(u, p, r)?;
        let ratio = b.members().iter().map(|&n| w.get(n).powi(2)).sum::<f64>() / total;
        if ratio < out.min_ratio {
            out.min_ratio = ratio;
            out.argmin = p;
        }
        out.max_ratio = out.max_ratio.max(ratio);
        out.samples += 1;
    }
    out.passes = out.min_ratio > 0.0;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApAudit {
    /// Empirical `B`: the largest product over the sampled discs.
    pub max_product: f64,
    pub argmax: Point,
    pub p: f64,
    pub samples: usize,
    /// Nodes with `w = 0` left out of the negative-power averages.
    pub zero_nodes: usize,
    /// Discs on which `w` vanishes identically.
    pub degenerate_discs: usize,
    pub tau_rho0: f64,
}

/// `max_x (avg_B w²)(avg_B |w|^{−2/(p−1)})^{p−1}` over samples in
/// `U_{c₂τρ₀}`.
pub fn ap_audit(w: &ScalarField, u: &NodeRegion, tau: f64, p: f64, c2: f64) -> Result<ApAudit> {
    let dom = w.domain();
    if !fields::same_domain(dom, u.domain()) {
        return Err(Error::GridMismatch);
    }
    if !(p > 1.0) {
        return Err(Error::InvalidRegion(format!(
            "A_p exponent must exceed 1, got {p}"
        )));
    }
    let r = check_tau(dom, tau)?;
    let q = -2.0 / (p - 1.0);
    let mut out = ApAudit {
        max_product: 0.0,
        argmax: Point::new(f64::NAN, f64::NAN),
        p,
        samples: 0,
        zero_nodes: 0,
        degenerate_discs: 0,
        tau_rho0: r,
    };
    for x in sample_points(u, r, c2)? {
        let pt = dom.node_point(x);
        let b = ball(u, pt, r)?;
        let vals: Vec<f64> = b.members().iter().map(|&n| w.get(n)).collect();
        let nonzero: Vec<f64> = vals.iter().copied().filter(|&v| v != 0.0).collect();
        out.samples += 1;
        out.zero_nodes += vals.len() - nonzero.len();
        if nonzero.is_empty() {
            out.degenerate_discs += 1;
            continue;
        }
        let avg_sq = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        let avg_neg = nonzero.iter().map(|v| v.abs().powf(q)).sum::<f64>() / nonzero.len() as f64;
        let prod = avg_sq * avg_neg.powf(p - 1.0);
        if prod > out.max_product {
            out.max_product = prod;
            out.argmax = pt;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAudit {
    /// `‖w‖_{H^{1/2}(U)} / ‖w‖_{L²(U)}`.
    pub ratio: f64,
    pub l2: f64,
    pub seminorm: f64,
    pub stride: usize,
}

/// Frequency ratio with `H^{1/2} = L² + ρ₀^{−1/2}[·]_{1/2}`.
pub fn frequency_ratio(
    w: &ScalarField,
    u: &NodeRegion,
    subsample: Option<usize>,
) -> Result<FrequencyAudit> {
    if u.is_empty() {
        return Err(Error::InvalidRegion(
            "frequency ratio on an empty region".into(),
        ));
    }
    let l2 = norm_l2(w, u)?;
    if !(l2 > 0.0) {
        return Err(Error::InvalidRegion("w vanishes on U".into()));
    }
    let sn = frac_seminorm_with(w, u, 0.5, subsample)?;
    let rho0 = w.domain().rho0();
    Ok(FrequencyAudit {
        ratio: (l2 + sn.value / rho0.sqrt()) / l2,
        l2,
        seminorm: sn.value,
        stride: sn.stride,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationAudit {
    pub ratio: f64,
    pub h4: f64,
    pub h4s: f64,
    pub l2: f64,
    /// `[∇⁴w]_s`, componentwise seminorms summed in quadrature.
    pub seminorm: f64,
    /// `∇⁴w` vanishes on the region, so the inequality carries no
    /// information and `ratio` is reported as 0.
    pub degenerate: bool,
    pub nodes: usize,
}

// Relative size of ρ₀⁴|∇⁴w| against |w| below which ∇⁴w counts as zero.
const DEGENERATE_TOL: f64 = 1e-6;

/// `‖w‖_{H⁴} / (‖w‖_{H^{4+s}}^{4/(4+s)} ‖w‖_{L²}^{s/(4+s)})` on `Ω_{σρ₀}`.
pub fn interpolation_audit(w: &ScalarField, sigma: f64, s: f64) -> Result<InterpolationAudit> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidRegion(format!(
            "fractional order must lie in (0, 1), got {s}"
        )));
    }
    let dom = w.domain();
    let region = audit_region(dom, sigma)?;
    let rho0 = dom.rho0();
    let l2 = norm_l2(w, &region)?;
    let h4 = norm_hk(w, &region, 4)?;
    let mut sq = 0.0;
    let mut top = 0.0f64;
    for (mi, mult) in MultiIndex::of_order(4) {
        let d = diff(w, mi, &region)?;
        top = top.max(d.max_abs_on(&region));
        sq += mult * frac_seminorm_with(&d, &region, s, None)?.value.powi(2);
    }
    let seminorm = sq.sqrt();
    // ρ₀⁴ puts the top-order term on the same footing as the H⁴ weights.
    let h4s = h4 + rho0.powf(s - 1.0) * rho0.powi(4) * seminorm;
    let wmax = w.max_abs_on(&region);
    let degenerate = !(wmax > 0.0) || top * rho0.powi(4) <= DEGENERATE_TOL * wmax;
    let ratio = if degenerate {
        0.0
    } else {
        h4 / (h4s.powf(4.0 / (4.0 + s)) * l2.powf(s / (4.0 + s)))
    };
    Ok(InterpolationAudit {
        ratio,
        h4,
        h4s,
        l2,
        seminorm,
        degenerate,
        nodes: region.len(),
    })
}

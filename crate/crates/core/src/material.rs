//! Elasticity and plate tensor fields.
//!
//! A tensor with the usual minor and major symmetries is stored through its
//! six independent components. Strong convexity is checked on the action
//! `A ↦ CA` restricted to symmetric 2×2 matrices, written in the orthonormal
//! basis `diag(1,0)`, `diag(0,1)`, `(e₁⊗e₂ + e₂⊗e₁)/√2`.

use std::sync::Arc;

use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, MultiIndex, ScalarField};
use crate::grid::{DiscreteDomain, Point};

/// Default structural tolerance relative to `a0⁶`.
pub const STRUCTURAL_TOL: f64 = 1e-9;

/// The six independent components of a symmetric fourth-order tensor in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stiffness {
    pub c1111: f64,
    pub c1122: f64,
    pub c1112: f64,
    pub c1212: f64,
    pub c2212: f64,
    pub c2222: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    C1111,
    C1122,
    C1112,
    C1212,
    C2212,
    C2222,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::C1111,
        Component::C1122,
        Component::C1112,
        Component::C1212,
        Component::C2212,
        Component::C2222,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::C1111 => "C1111",
            Component::C1122 => "C1122",
            Component::C1112 => "C1112",
            Component::C1212 => "C1212",
            Component::C2212 => "C2212",
            Component::C2222 => "C2222",
        }
    }
}

impl Stiffness {
    pub const NAN: Stiffness = Stiffness::splat(f64::NAN);

    const fn splat(v: f64) -> Self {
        Self {
            c1111: v,
            c1122: v,
            c1112: v,
            c1212: v,
            c2212: v,
            c2222: v,
        }
    }

    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        Self {
            c1111: lambda + 2.0 * mu,
            c1122: lambda,
            c1112: 0.0,
            c1212: mu,
            c2212: 0.0,
            c2222: lambda + 2.0 * mu,
        }
    }

    pub fn orthotropic(c1111: f64, c1122: f64, c1212: f64, c2222: f64) -> Self {
        Self {
            c1111,
            c1122,
            c1112: 0.0,
            c1212,
            c2212: 0.0,
            c2222,
        }
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::C1111 => self.c1111,
            Component::C1122 => self.c1122,
            Component::C1112 => self.c1112,
            Component::C1212 => self.c1212,
            Component::C2212 => self.c2212,
            Component::C2222 => self.c2222,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c1111: s * self.c1111,
            c1122: s * self.c1122,
            c1112: s * self.c1112,
            c1212: s * self.c1212,
            c2212: s * self.c2212,
            c2222: s * self.c2222,
        }
    }

    pub fn add(&self, o: &Stiffness) -> Self {
        Self {
            c1111: self.c1111 + o.c1111,
            c1122: self.c1122 + o.c1122,
            c1112: self.c1112 + o.c1112,
            c1212: self.c1212 + o.c1212,
            c2212: self.c2212 + o.c2212,
            c2222: self.c2222 + o.c2222,
        }
    }

    pub fn is_finite(&self) -> bool {
        Component::ALL.iter().all(|&c| self.get(c).is_finite())
    }

    /// Matrix of `A ↦ CA` on symmetric matrices in the orthonormal basis.
    pub fn convexity_matrix(&self) -> Matrix3<f64> {
        let r2 = std::f64::consts::SQRT_2;
        Matrix3::new(
            self.c1111,
            self.c1122,
            r2 * self.c1112,
            self.c1122,
            self.c2222,
            r2 * self.c2212,
            r2 * self.c1112,
            r2 * self.c2212,
            2.0 * self.c1212,
        )
    }

    /// Smallest and largest eigenvalue of [`Stiffness::convexity_matrix`].
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let ev = self.convexity_matrix().symmetric_eigenvalues();
        (ev.min(), ev.max())
    }

    /// Coefficients `a0..a4` of the quartic symbol `Σ aᵢ t^{4−i}`.
    pub fn symbol_coefficients(&self) -> [f64; 5] {
        [
            self.c1111,
            4.0 * self.c1112,
            2.0 * self.c1122 + 4.0 * self.c1212,
            4.0 * self.c2212,
            self.c2222,
        ]
    }
}

/// 7×7 Sylvester-type matrix of the symbol and its derivative.
pub fn structural_matrix(a: &[f64; 5]) -> SMatrix<f64, 7, 7> {
    let mut s = SMatrix::<f64, 7, 7>::zeros();
    for r in 0..3 {
        for (c, &v) in a.iter().enumerate() {
            s[(r, r + c)] = v;
        }
    }
    let da = [4.0 * a[0], 3.0 * a[1], 2.0 * a[2], a[3]];
    for r in 0..4 {
        for (c, &v) in da.iter().enumerate() {
            s[(3 + r, r + c)] = v;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Isotropic,
    Orthotropic,
    General,
}

/// Per-node elasticity tensor on the non-exterior nodes of a domain.
#[derive(Debug, Clone)]
pub struct ElasticityTensorField {
    domain: Arc<DiscreteDomain>,
    nodes: Vec<Stiffness>,
    thickness: f64,
    xi0: f64,
    xi1: f64,
    kind: MaterialKind,
}

/// Plate tensor `P = (h³/12) C`, node by node.
#[derive(Debug, Clone)]
pub struct PlateTensorField {
    domain: Arc<DiscreteDomain>,
    nodes: Vec<Stiffness>,
    thickness: f64,
    kind: MaterialKind,
}

fn check_thickness(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "thickness must be positive, got {h}"
        )));
    }
    Ok(())
}

pub fn make_isotropic(
    lambda: f64,
    mu: f64,
    h: f64,
    domain: &Arc<DiscreteDomain>,
) -> Result<ElasticityTensorField> {
    if !(mu > 0.0 && lambda + mu > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "Lamé moduli need μ > 0 and λ + μ > 0, got λ={lambda}, μ={mu}"
        )));
    }
    build(domain, h, MaterialKind::Isotropic, |_| {
        Stiffness::isotropic(lambda, mu)
    })
}

pub fn make_orthotropic(
    c1111: f64,
    c1122: f64,
    c1212: f64,
    c2222: f64,
    h: f64,
    domain: &Arc<DiscreteDomain>,
) -> Result<ElasticityTensorField> {
    build(domain, h, MaterialKind::Orthotropic, |_| {
        Stiffness::orthotropic(c1111, c1122, c1212, c2222)
    })
}

/// Samples the components from `f` at every non-exterior node.
pub fn make_general(
    f: impl Fn(Point) -> Stiffness,
    h: f64,
    domain: &Arc<DiscreteDomain>,
) -> Result<ElasticityTensorField> {
    build(domain, h, MaterialKind::General, f)
}

fn build(
    domain: &Arc<DiscreteDomain>,
    h: f64,
    kind: MaterialKind,
    f: impl Fn(Point) -> Stiffness,
) -> Result<ElasticityTensorField> {
    check_thickness(h)?;
    let mut nodes = vec![Stiffness::NAN; domain.len()];
    let (mut xi0, mut xi1) = (f64::INFINITY, 0.0f64);
    for (k, slot) in nodes.iter_mut().enumerate() {
        if !domain.is_inside(k) {
            continue;
        }
        let c = f(domain.node_point(k));
        if !c.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "non-finite component at node {k}"
            )));
        }
        let (lo, hi) = c.eigen_bounds();
        if lo <= 0.0 {
            return Err(Error::ConvexityViolation {
                node: k,
                eigenvalue: lo,
            });
        }
        xi0 = xi0.min(lo);
        xi1 = xi1.max(hi);
        *slot = c;
    }
    Ok(ElasticityTensorField {
        domain: Arc::clone(domain),
        nodes,
        thickness: h,
        xi0,
        xi1,
        kind,
    })
}

impl ElasticityTensorField {
    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn nodes(&self) -> &[Stiffness] {
        &self.nodes
    }

    pub fn at(&self, idx: usize) -> &Stiffness {
        &self.nodes[idx]
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    /// Convexity bounds `(ξ0, ξ1)` over all nodes.
    pub fn convexity_bounds(&self) -> (f64, f64) {
        (self.xi0, self.xi1)
    }

    pub fn kind(&self) -> MaterialKind {
        self.kind
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        Ok(Self {
            nodes: self.nodes.iter().map(|s| s.scaled(c)).collect(),
            xi0: c * self.xi0,
            xi1: c * self.xi1,
            ..self.clone()
        })
    }

    pub fn component_field(&self, c: Component) -> ScalarField {
        let values = self.nodes.iter().map(|s| s.get(c)).collect();
        ScalarField::from_values(&self.domain, values).expect("one value per node")
    }
}

pub fn plate_tensor(c: &ElasticityTensorField) -> PlateTensorField {
    let factor = c.thickness.powi(3) / 12.0;
    PlateTensorField {
        domain: Arc::clone(&c.domain),
        nodes: c.nodes.iter().map(|s| s.scaled(factor)).collect(),
        thickness: c.thickness,
        kind: c.kind,
    }
}

impl PlateTensorField {
    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn nodes(&self) -> &[Stiffness] {
        &self.nodes
    }

    pub fn at(&self, idx: usize) -> &Stiffness {
        &self.nodes[idx]
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn kind(&self) -> MaterialKind {
        self.kind
    }

    /// Smallest convexity eigenvalue of `P` over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|s| s.is_finite())
            .map(|s| s.eigen_bounds().0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn component_field(&self, c: Component) -> ScalarField {
        let values = self.nodes.iter().map(|s| s.get(c)).collect();
        ScalarField::from_values(&self.domain, values).expect("one value per node")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuralReport {
    /// Non-exterior nodes in index order.
    pub nodes: Vec<usize>,
    pub coefficients: Vec<[f64; 5]>,
    /// `D(x) = |det S(x)| / a0(x)`.
    pub d: Vec<f64>,
    /// `D(x) / a0(x)⁶`.
    pub normalized: Vec<f64>,
    pub max_d: f64,
    pub max_normalized: f64,
    pub tol: f64,
    pub passes: bool,
}

/// Evaluates `D(x)` at every non-exterior node; passes when
/// `D(x) ≤ tol · a0(x)⁶` everywhere.
pub fn structural_condition(c: &ElasticityTensorField, tol: f64) -> StructuralReport {
    let nodes: Vec<usize> = (0..c.domain.len())
        .filter(|&k| c.domain.is_inside(k))
        .collect();
    let coefficients: Vec<[f64; 5]> = nodes
        .iter()
        .map(|&k| c.nodes[k].symbol_coefficients())
        .collect();
    let d: Vec<f64> = coefficients
        .iter()
        .map(|a| structural_matrix(a).lu().determinant().abs() / a[0])
        .collect();
    let normalized: Vec<f64> = d
        .iter()
        .zip(&coefficients)
        .map(|(d, a)| d / a[0].powi(6))
        .collect();
    let max_d = d.iter().copied().fold(0.0, f64::max);
    let max_normalized = normalized.iter().copied().fold(0.0, f64::max);
    StructuralReport {
        nodes,
        coefficients,
        d,
        normalized,
        max_d,
        max_normalized,
        tol,
        passes: max_normalized <= tol,
    }
}

/// Discrete `W^{2,∞}` and `H^{2+s}` size of the tensor field. Norms are
/// taken componentwise and the largest component is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityBounds {
    pub sup: f64,
    pub sup_d1: f64,
    pub sup_d2: f64,
    /// `max(sup, ρ₀·sup_d1, ρ₀²·sup_d2)`.
    pub m2: f64,
    /// Largest componentwise `H^{2+s}` norm.
    pub m3: f64,
    pub s: f64,
}

pub fn regularity_bounds(c: &ElasticityTensorField, s: f64) -> Result<RegularityBounds> {
    let dom = &c.domain;
    let rho0 = dom.rho0();
    let r1 = fields::stencil_region(dom, 1);
    let r2 = fields::stencil_region(dom, 2);
    let (mut sup, mut sup_d1, mut sup_d2, mut m3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for comp in Component::ALL {
        let u = c.component_field(comp);
        sup = sup.max(
            (0..dom.len())
                .filter(|&k| dom.is_inside(k))
                .fold(0.0, |m, k| m.max(u.get(k).abs())),
        );
        for (mi, _) in MultiIndex::of_order(1) {
            sup_d1 = sup_d1.max(fields::diff(&u, mi, &r1)?.max_abs_on(&r1));
        }
        for (mi, _) in MultiIndex::of_order(2) {
            sup_d2 = sup_d2.max(fields::diff(&u, mi, &r2)?.max_abs_on(&r2));
        }
        m3 = m3.max(fields::norm_hks(&u, &r2, 2, s)?);
    }
    Ok(RegularityBounds {
        sup,
        sup_d1,
        sup_d2,
        m2: sup.max(rho0 * sup_d1).max(rho0 * rho0 * sup_d2),
        m3,
        s,
    })
}

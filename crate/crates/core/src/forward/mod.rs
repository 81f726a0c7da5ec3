//! Clamped plate on a Winkler foundation under a concentrated load.
//!
//! The problem `div div(P∇²w) + k w = f δ_{P0}/ρ₀²`, `w = ∂w/∂n = 0` on the
//! boundary, is discretized through its bilinear form (see [`assembly`]) and
//! solved with a banded Cholesky factorization or preconditioned CG.

pub mod assembly;
pub mod linalg;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, ScalarField};
use crate::grid::{annulus_region, disc_region, DiscreteDomain, NodeRegion, Point};
use crate::material::PlateTensorField;

pub use assembly::{assemble_operator, Assembled};
pub use linalg::{BandCholesky, CsrMatrix};

/// Band storage limit (entries) above which `Auto` switches to CG.
const DIRECT_BAND_LIMIT: usize = 60_000_000;

#[derive(Debug, Clone)]
pub struct ForwardProblem {
    pub domain: Arc<DiscreteDomain>,
    pub plate: PlateTensorField,
    pub k: ScalarField,
    pub p0: Point,
    pub f: f64,
    pub d: f64,
    pub k_bar: f64,
    pub c0: f64,
}

impl ForwardProblem {
    /// Validates `0 ≤ k ≤ k̄/ρ₀⁴`, `f > 0`, `dist(P0, ∂Ω) ≥ d·ρ₀` and that
    /// the load node is interior.
    pub fn new(
        plate: PlateTensorField,
        k: ScalarField,
        p0: Point,
        f: f64,
        d: f64,
        k_bar: f64,
    ) -> Result<Self> {
        let domain = Arc::clone(plate.domain());
        if !fields::same_domain(&domain, k.domain()) {
            return Err(Error::GridMismatch);
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "load must be positive, got {f}"
            )));
        }
        if !(d > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "standoff d must be positive, got {d}"
            )));
        }
        if !(k_bar >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "k̄ must be non-negative, got {k_bar}"
            )));
        }
        let kmax = k_bar / domain.rho0().powi(4);
        for n in 0..domain.len() {
            if !domain.is_inside(n) {
                continue;
            }
            let v = k.get(n);
            if !(v >= 0.0 && v <= kmax * (1.0 + 1e-12)) {
                return Err(Error::InvalidProblem(format!(
                    "k = {v} at node {n} outside [0, k̄/ρ₀⁴] = [0, {kmax}]"
                )));
            }
        }
        let dist = domain.point_boundary_distance(p0);
        if !(dist >= d * domain.rho0() * (1.0 - 1e-12)) {
            return Err(Error::InvalidProblem(format!(
                "load point ({}, {}) lies {dist} from the boundary, below d·ρ₀ = {}",
                p0.x,
                p0.y,
                d * domain.rho0()
            )));
        }
        let node = domain.nearest_node(p0)?;
        if domain.interior_nodes().binary_search(&node).is_err() {
            return Err(Error::InvalidProblem(format!(
                "load point maps to non-interior node {node}"
            )));
        }
        Ok(Self {
            domain,
            plate,
            k,
            p0,
            f,
            d,
            k_bar,
            c0: 1.0,
        })
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn with_k(&self, k: ScalarField) -> Result<Self> {
        let p = Self::new(self.plate.clone(), k, self.p0, self.f, self.d, self.k_bar)?;
        p.with_c0(self.c0)
    }

    pub fn with_load(&self, f: f64) -> Result<Self> {
        let p = Self::new(
            self.plate.clone(),
            self.k.clone(),
            self.p0,
            f,
            self.d,
            self.k_bar,
        )?;
        p.with_c0(self.c0)
    }

    pub fn load_node(&self) -> usize {
        self.domain
            .nearest_node(self.p0)
            .expect("validated on construction")
    }

    pub fn sigma_bar(&self) -> f64 {
        sigma_bar(self.d, self.c0, 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Direct when the band fits in memory, CG otherwise.
    #[default]
    Auto,
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub solver: SolverKind,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            solver: SolverKind::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverStats {
    pub method: String,
    pub unknowns: usize,
    pub nnz: usize,
    pub bandwidth: usize,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub w: ScalarField,
    pub load_node: usize,
    pub w_at_load: f64,
    /// `B(w, w)`.
    pub energy: f64,
    /// `|B(w,w) − f·w(P0)/ρ₀²| / B(w,w)`.
    pub energy_residual: f64,
    pub h2_norm: f64,
    /// `‖w‖_{H²}/f`.
    pub apriori_constant: f64,
    pub sigma_bar: f64,
    /// Minimum of `w` over `B_{2σ̄ρ₀}(P0)`.
    pub min_w_near_p0: f64,
    pub stats: SolverStats,
}

/// Discrete delta at the node nearest `P0`: density `f/(ρ₀²Δ²)` there and
/// zero elsewhere. Ties go to the smallest `x`, then the smallest `y`.
pub fn point_load_rhs(problem: &ForwardProblem) -> Result<ScalarField> {
    let dom = &problem.domain;
    let node = dom.nearest_node(problem.p0)?;
    if dom.interior_nodes().binary_search(&node).is_err() {
        return Err(Error::InvalidProblem(format!(
            "load point maps to non-interior node {node}"
        )));
    }
    let mut g = ScalarField::zeros(dom);
    g.set(
        node,
        problem.f / (dom.rho0().powi(2) * dom.spacing().powi(2)),
    );
    Ok(g)
}

pub fn assemble(problem: &ForwardProblem) -> Result<Assembled> {
    assemble_operator(&problem.plate, &problem.k)
}

/// Solves `A x = b` with the selected method; returns the solution and
/// solver statistics.
pub fn solve_system(
    asm: &Assembled,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolverStats)> {
    let a = &asm.matrix;
    let n = a.dim();
    let bw = a.bandwidth();
    let direct = match opts.solver {
        SolverKind::Direct => true,
        SolverKind::Cg => false,
        SolverKind::Auto => n.saturating_mul(bw + 1) <= DIRECT_BAND_LIMIT,
    };
    let bnorm = linalg::norm(b);
    let rel = |x: &[f64]| -> f64 {
        if bnorm == 0.0 {
            return 0.0;
        }
        let ax = a.mul(x);
        linalg::norm(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>()) / bnorm
    };
    if direct {
        let chol = BandCholesky::factor(a)?;
        let mut x = chol.solve(b);
        let mut res = rel(&x);
        let mut steps = 0;
        // Iterative refinement against the factor.
        while res > opts.tol && steps < 3 {
            let ax = a.mul(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = chol.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            res = rel(&x);
            steps += 1;
        }
        if res > opts.tol {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: res,
            });
        }
        let stats = SolverStats {
            method: "banded-cholesky".into(),
            unknowns: n,
            nnz: a.nnz(),
            bandwidth: bw,
            iterations: steps,
            relative_residual: res,
        };
        Ok((x, stats))
    } else {
        let (x, cg) = linalg::conjugate_gradient(a, b, opts.tol, 50 * n.max(100))?;
        let stats = SolverStats {
            method: "jacobi-cg".into(),
            unknowns: n,
            nnz: a.nnz(),
            bandwidth: bw,
            iterations: cg.iterations,
            relative_residual: cg.residual,
        };
        Ok((x, stats))
    }
}

/// Solves the discrete problem with right-hand side density `g` (the load
/// vector is `Δ² g` at interior nodes).
pub fn solve_density(
    plate: &PlateTensorField,
    k: &ScalarField,
    g: &ScalarField,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolverStats)> {
    let asm = assemble_operator(plate, k)?;
    let h2 = plate.domain().spacing().powi(2);
    let b: Vec<f64> = asm.unknowns.iter().map(|&n| h2 * g.get(n)).collect();
    let (x, stats) = solve_system(&asm, &b, opts)?;
    Ok((asm.scatter(plate.domain(), &x), stats))
}

pub fn solve(problem: &ForwardProblem, tol: f64) -> Result<SolveReport> {
    solve_with(
        problem,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(problem: &ForwardProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let dom = &problem.domain;
    let asm = assemble(problem)?;
    let g = point_load_rhs(problem)?;
    let h2 = dom.spacing().powi(2);
    let b: Vec<f64> = asm.unknowns.iter().map(|&n| h2 * g.get(n)).collect();
    let (x, stats) = solve_system(&asm, &b, opts)?;
    let w = asm.scatter(dom, &x);
    let load_node = problem.load_node();
    let w_at_load = w.get(load_node);
    if !(w_at_load > 0.0) {
        return Err(Error::NegativeLoadDeflection { value: w_at_load });
    }
    let energy = asm.matrix.form(&x, &x);
    let work = problem.f * w_at_load / dom.rho0().powi(2);
    let energy_residual = (energy - work).abs() / energy;
    let h2_norm = fields::norm_hk(&w, &NodeRegion::all_interior(dom), 2)?;
    let sb = problem.sigma_bar();
    let near = disc_region(dom, problem.p0, 2.0 * sb * dom.rho0())?;
    let min_w_near_p0 = if near.is_empty() {
        w_at_load
    } else {
        near.members()
            .iter()
            .map(|&n| w.get(n))
            .fold(f64::INFINITY, f64::min)
    };
    Ok(SolveReport {
        w,
        load_node,
        w_at_load,
        energy,
        energy_residual,
        h2_norm,
        apriori_constant: h2_norm / problem.f,
        sigma_bar: sb,
        min_w_near_p0,
        stats,
    })
}

/// `σ̄ = min(d/4, ½ (c0·d/2)^{1/α})`.
pub fn sigma_bar(d: f64, c0: f64, alpha: f64) -> f64 {
    (d / 4.0).min(0.5 * (c0 * d / 2.0).powf(1.0 / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityAudit {
    pub min_w: f64,
    /// `min_w / (d² f)`.
    pub c_lower: f64,
    pub radius: f64,
    pub nodes: usize,
    pub passes: bool,
}

/// Minimum of `w` over the interior nodes of `B_{2σ̄ρ₀}(P0)`.
pub fn positivity_audit(
    report: &SolveReport,
    problem: &ForwardProblem,
    sigma_bar: f64,
) -> Result<PositivityAudit> {
    let dom = &problem.domain;
    let radius = 2.0 * sigma_bar * dom.rho0();
    let disc = disc_region(dom, problem.p0, radius)?;
    if disc.is_empty() {
        return Err(Error::UnderResolved(format!(
            "disc of radius {radius} contains no interior node"
        )));
    }
    let min_w = disc
        .members()
        .iter()
        .map(|&n| report.w.get(n))
        .fold(f64::INFINITY, f64::min);
    Ok(PositivityAudit {
        min_w,
        c_lower: min_w / (problem.d * problem.d * problem.f),
        radius,
        nodes: disc.len(),
        passes: min_w > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusAudit {
    pub sigma: f64,
    /// `∫_{B_{2σρ₀}∖B_{σρ₀}} w²`.
    pub annulus_integral: f64,
    pub h2_norm: f64,
    /// `annulus_integral / (σ² d² ρ₀² ‖w‖²_{H²})`.
    pub ratio: f64,
    pub nodes: usize,
    pub passes: bool,
}

/// Empirical constant of the annulus lower bound for `0 < σ ≤ σ̄`.
pub fn annulus_energy_audit(
    report: &SolveReport,
    problem: &ForwardProblem,
    sigma: f64,
) -> Result<AnnulusAudit> {
    let dom = &problem.domain;
    let rho0 = dom.rho0();
    if !(sigma > 0.0 && sigma <= problem.sigma_bar() * (1.0 + 1e-12)) {
        return Err(Error::InvalidProblem(format!(
            "σ = {sigma} must lie in (0, σ̄ = {}]",
            problem.sigma_bar()
        )));
    }
    if sigma * rho0 < 2.0 * dom.spacing() {
        return Err(Error::UnderResolved(format!(
            "annulus inner radius {} below 2Δ = {}",
            sigma * rho0,
            2.0 * dom.spacing()
        )));
    }
    let ann = annulus_region(dom, problem.p0, sigma * rho0, 2.0 * sigma * rho0)?;
    let annulus_integral = ann
        .members()
        .iter()
        .map(|&n| report.w.get(n).powi(2))
        .sum::<f64>()
        * dom.spacing().powi(2);
    let h2_norm = fields::norm_hk(&report.w, &NodeRegion::all_interior(dom), 2)?;
    let ratio = annulus_integral
        / (sigma * sigma * problem.d * problem.d * rho0 * rho0 * h2_norm * h2_norm);
    Ok(AnnulusAudit {
        sigma,
        annulus_integral,
        h2_norm,
        ratio,
        nodes: ann.len(),
        passes: ratio > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{make_general, make_isotropic, plate_tensor, Stiffness};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Arc<DiscreteDomain> {
        Arc::new(DiscreteDomain::rectangle(1.0, 1.0, n, None, &[]).unwrap())
    }

    fn baseline(n: usize, k: f64) -> ForwardProblem {
        let dom = unit(n);
        let p = plate_tensor(&make_isotropic(1.0, 1.0, 0.1, &dom).unwrap());
        ForwardProblem::new(
            p,
            ScalarField::constant(&dom, k),
            Point::new(0.5, 0.5),
            1.0,
            0.4,
            1.0,
        )
        .unwrap()
    }

    pub(crate) fn manufactured_error(n: usize) -> f64 {
        let dom = unit(n);
        let p = plate_tensor(&make_isotropic(1.0, 1.0, 0.1, &dom).unwrap());
        let d = p.at(dom.interior_nodes()[0]).c1111;
        let s = |t: f64| (PI * t).sin().powi(2);
        let s2 = |t: f64| 2.0 * PI * PI * (2.0 * PI * t).cos();
        let s4 = |t: f64| -8.0 * PI.powi(4) * (2.0 * PI * t).cos();
        let exact = ScalarField::from_fn(&dom, |q| s(q.x) * s(q.y));
        let g = ScalarField::from_fn(&dom, |q| {
            d * (s4(q.x) * s(q.y) + 2.0 * s2(q.x) * s2(q.y) + s(q.x) * s4(q.y)) + s(q.x) * s(q.y)
        });
        let k = ScalarField::constant(&dom, 1.0);
        let (w, _) = solve_density(&p, &k, &g, &SolveOptions::default()).unwrap();
        fields::norm_l2(&w.sub(&exact).unwrap(), &NodeRegion::all_interior(&dom)).unwrap()
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let ratio = manufactured_error(33) / manufactured_error(65);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn point_load_examples() {
        let prob = baseline(17, 0.0);
        let g = point_load_rhs(&prob).unwrap();
        assert_eq!(g.get(prob.load_node()), 256.0);
        let mass: f64 = g.values().iter().sum::<f64>() * prob.domain.spacing().powi(2);
        assert_eq!(mass, 1.0);
        // Cell centre: four equidistant nodes.
        let dom = unit(17);
        let h = dom.spacing();
        let node = dom
            .nearest_node(Point::new(0.5 + 0.5 * h, 0.5 + 0.5 * h))
            .unwrap();
        assert_eq!(dom.ij(node), (8, 8));
    }

    #[test]
    fn energy_identity_and_positivity() {
        let prob = baseline(33, 0.5);
        let rep = solve(&prob, 1e-10).unwrap();
        assert!(rep.energy_residual <= 1e-8, "{}", rep.energy_residual);
        assert!(rep.w_at_load > 0.0 && rep.min_w_near_p0 > 0.0);
        let pa = positivity_audit(&rep, &prob, prob.sigma_bar()).unwrap();
        assert!(pa.passes);
        let prob2 = prob.with_load(2.0).unwrap();
        let rep2 = solve(&prob2, 1e-10).unwrap();
        let pa2 = positivity_audit(&rep2, &prob2, prob2.sigma_bar()).unwrap();
        assert!((pa2.min_w / pa.min_w - 2.0).abs() < 1e-9);
    }

    #[test]
    fn foundation_stiffens_the_plate() {
        let soft = solve(&baseline(33, 0.0), 1e-10).unwrap();
        let stiff_prob = baseline(33, 1.0);
        let stiff = solve(&stiff_prob, 1e-10).unwrap();
        let dom = &stiff_prob.domain;
        assert!(stiff.w_at_load < soft.w_at_load);
        let a = positivity_audit(&soft, &stiff_prob, stiff_prob.sigma_bar()).unwrap();
        let b = positivity_audit(&stiff, &stiff_prob, stiff_prob.sigma_bar()).unwrap();
        assert!(b.passes && b.c_lower < a.c_lower);
        let max = |w: &ScalarField| {
            dom.interior_nodes()
                .iter()
                .map(|&n| w.get(n))
                .fold(0.0, f64::max)
        };
        assert!(max(&stiff.w) < max(&soft.w));
    }

    #[test]
    fn linearity_in_the_load() {
        let prob = baseline(17, 0.3);
        let p = &prob.plate;
        let g1 = ScalarField::from_fn(&prob.domain, |q| q.x);
        let g2 = ScalarField::from_fn(&prob.domain, |q| (3.0 * q.y).cos());
        let opts = SolveOptions::default();
        let (w1, _) = solve_density(p, &prob.k, &g1, &opts).unwrap();
        let (w2, _) = solve_density(p, &prob.k, &g2, &opts).unwrap();
        let (w12, _) = solve_density(p, &prob.k, &g1.add(&g2).unwrap(), &opts).unwrap();
        let scale = w12.max_abs();
        for n in prob.domain.interior_nodes() {
            assert!((w12.get(*n) - w1.get(*n) - w2.get(*n)).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn dihedral_symmetry() {
        let prob = baseline(33, 0.7);
        let rep = solve(&prob, 1e-12).unwrap();
        let dom = &prob.domain;
        let m = dom.nx() - 1;
        let scale = rep.w.max_abs();
        for &n in dom.interior_nodes() {
            let (i, j) = dom.ij(n);
            let v = rep.w.get(n);
            for (a, b) in [
                (m - i, j),
                (i, m - j),
                (m - i, m - j),
                (j, i),
                (m - j, i),
                (j, m - i),
                (m - j, m - i),
            ] {
                assert!((rep.w.get(dom.index(a, b)) - v).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn cg_matches_direct() {
        let prob = baseline(17, 0.2);
        let a = solve_with(
            &prob,
            &SolveOptions {
                tol: 1e-12,
                solver: SolverKind::Direct,
            },
        )
        .unwrap();
        let b = solve_with(
            &prob,
            &SolveOptions {
                tol: 1e-12,
                solver: SolverKind::Cg,
            },
        )
        .unwrap();
        assert_eq!(b.stats.method, "jacobi-cg");
        for &n in prob.domain.interior_nodes() {
            assert!((a.w.get(n) - b.w.get(n)).abs() <= 1e-8 * a.w_at_load);
        }
    }

    #[test]
    fn problem_validation() {
        let dom = unit(17);
        let p = plate_tensor(&make_isotropic(1.0, 1.0, 0.1, &dom).unwrap());
        let k = ScalarField::zeros(&dom);
        let c = Point::new(0.5, 0.5);
        assert!(ForwardProblem::new(p.clone(), k.clone(), c, 0.0, 0.4, 1.0).is_err());
        assert!(
            ForwardProblem::new(p.clone(), k.clone(), Point::new(0.1, 0.5), 1.0, 0.4, 1.0).is_err()
        );
        assert!(ForwardProblem::new(
            p.clone(),
            ScalarField::constant(&dom, 2.0),
            c,
            1.0,
            0.4,
            1.0
        )
        .is_err());
        assert!(ForwardProblem::new(
            p.clone(),
            ScalarField::constant(&dom, -0.1),
            c,
            1.0,
            0.4,
            1.0
        )
        .is_err());
        assert!(ForwardProblem::new(p, k, c, 1.0, 0.4, 1.0).is_ok());
    }

    #[test]
    fn sigma_bar_examples() {
        assert!((sigma_bar(0.4, 1.0, 0.5) - 0.02).abs() < 1e-15);
        assert_eq!(sigma_bar(4.0, 2.0, 0.5), 1.0);
        let mut last = 0.0;
        for i in 1..=50 {
            let s = sigma_bar(i as f64 * 0.02, 1.0, 0.5);
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn annulus_audit_is_scale_free() {
        let prob = baseline(65, 0.0).with_c0(2.0).unwrap();
        let rep = solve(&prob, 1e-10).unwrap();
        let a = annulus_energy_audit(&rep, &prob, prob.sigma_bar()).unwrap();
        assert!(a.passes);
        let mut scaled = rep.clone();
        scaled.w = rep.w.scaled(10.0);
        let b = annulus_energy_audit(&scaled, &prob, prob.sigma_bar()).unwrap();
        assert!((a.ratio / b.ratio - 1.0).abs() < 1e-12);
        assert!(annulus_energy_audit(&rep, &prob, 2.0 * prob.sigma_bar()).is_err());
        assert!(matches!(
            annulus_energy_audit(&rep, &prob, 0.01),
            Err(Error::UnderResolved(_))
        ));
    }

    #[test]
    fn apriori_constant_is_uniform_over_admissible_family() {
        let dom = unit(17);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut consts = Vec::new();
        for _ in 0..10 {
            let (lam, mu) = (rng.random_range(0.0..2.0), rng.random_range(0.5..2.0));
            let (a, b) = (rng.random_range(-0.2..0.2), rng.random_range(0.0..1.0));
            let c = make_general(
                |q| Stiffness {
                    c1112: a * q.x,
                    ..Stiffness::isotropic(lam, mu * (1.0 + 0.3 * q.y))
                },
                0.1,
                &dom,
            )
            .unwrap();
            let k = ScalarField::from_fn(&dom, |q| b * (1.0 + (PI * q.x).sin()) / 2.0);
            let prob =
                ForwardProblem::new(plate_tensor(&c), k, Point::new(0.5, 0.5), 1.0, 0.4, 1.0)
                    .unwrap();
            let rep = solve(&prob, 1e-10).unwrap();
            assert!(rep.apriori_constant.is_finite() && rep.apriori_constant > 0.0);
            consts.push(rep.apriori_constant);
        }
        let (lo, hi) = consts
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(hi / lo < 10.0, "{consts:?}");
    }
}

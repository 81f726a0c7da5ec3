//! JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::piecewise::{piecewise_k, PiecewiseSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::ScalarField;
use crate::forward::{ForwardProblem, SolveOptions, SolverKind};
use crate::grid::{DiscreteDomain, Point, Rect};
use crate::inverse::ReconstructionConfig;
use crate::material::{
    make_general, make_isotropic, make_orthotropic, plate_tensor, ElasticityTensorField, Stiffness,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub material: MaterialConfig,
    pub forward: ForwardConfig,
    #[serde(default)]
    pub reconstruction: ReconstructionBlock,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub audits: AuditConfig,
    /// Fractional regularity order of the coefficients.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Reporting offset `Ω_{σρ₀}`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_s() -> f64 {
    0.25
}

fn default_sigma() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lx: f64,
    pub ly: f64,
    pub n: usize,
    #[serde(default)]
    pub rho0: Option<f64>,
    #[serde(default)]
    pub holes: Vec<Rect>,
    /// A priori bound metadata; `m1` is checked against `|Ω| ≤ M1 ρ₀²`.
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub m1: Option<f64>,
}

/// A number or an expression in `x`, `y`, `kbar`, `rho0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    fn compile(&self, constants: &BTreeMap<String, f64>) -> Result<Expr> {
        match self {
            Scalar::Number(v) => Expr::parse(&format!("({v:e})")),
            Scalar::Expr(s) => Expr::parse_with(s, constants),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialConfig {
    Isotropic {
        lambda: f64,
        mu: f64,
        h: f64,
    },
    Orthotropic {
        c1111: f64,
        c1122: f64,
        c1212: f64,
        c2222: f64,
        h: f64,
    },
    General {
        c1111: Scalar,
        c1122: Scalar,
        #[serde(default = "zero_scalar")]
        c1112: Scalar,
        c1212: Scalar,
        #[serde(default = "zero_scalar")]
        c2212: Scalar,
        c2222: Scalar,
        h: f64,
    },
}

fn zero_scalar() -> Scalar {
    Scalar::Number(0.0)
}

impl MaterialConfig {
    pub fn thickness(&self) -> f64 {
        match self {
            MaterialConfig::Isotropic { h, .. }
            | MaterialConfig::Orthotropic { h, .. }
            | MaterialConfig::General { h, .. } => *h,
        }
    }

    pub fn build(&self, domain: &Arc<DiscreteDomain>) -> Result<ElasticityTensorField> {
        match self {
            MaterialConfig::Isotropic { lambda, mu, h } => make_isotropic(*lambda, *mu, *h, domain),
            MaterialConfig::Orthotropic {
                c1111,
                c1122,
                c1212,
                c2222,
                h,
            } => make_orthotropic(*c1111, *c1122, *c1212, *c2222, *h, domain),
            MaterialConfig::General {
                c1111,
                c1122,
                c1112,
                c1212,
                c2212,
                c2222,
                h,
            } => {
                let consts = constants(domain, 0.0);
                let e = [c1111, c1122, c1112, c1212, c2212, c2222]
                    .map(|s| s.compile(&consts))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                make_general(
                    |p| Stiffness {
                        c1111: e[0].eval(p.x, p.y),
                        c1122: e[1].eval(p.x, p.y),
                        c1112: e[2].eval(p.x, p.y),
                        c1212: e[3].eval(p.x, p.y),
                        c2212: e[4].eval(p.x, p.y),
                        c2222: e[5].eval(p.x, p.y),
                    },
                    *h,
                    domain,
                )
            }
        }
    }
}

/// Coefficient field specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KSpec {
    Constant {
        value: f64,
    },
    Expr {
        expr: String,
    },
    /// `amplitude · exp(−|x − center|²/(2 width²))`.
    Bump {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
    },
    /// Seeded sine series `Σ a_pq sin(pπx̂) sin(qπŷ)` scaled to sup `amplitude`.
    RandomSmooth {
        #[serde(default = "default_modes")]
        modes: usize,
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Piecewise(PiecewiseSpec),
}

fn default_modes() -> usize {
    3
}

fn constants(domain: &DiscreteDomain, k_bar: f64) -> BTreeMap<String, f64> {
    let mut c = BTreeMap::new();
    c.insert("kbar".to_string(), k_bar);
    c.insert("rho0".to_string(), domain.rho0());
    c
}

impl KSpec {
    /// Samples the field; `seed` is used when the variant carries none.
    pub fn build(
        &self,
        domain: &Arc<DiscreteDomain>,
        k_bar: f64,
        seed: u64,
    ) -> Result<ScalarField> {
        match self {
            KSpec::Constant { value } => Ok(ScalarField::constant(domain, *value)),
            KSpec::Expr { expr } => {
                let e = Expr::parse_with(expr, &constants(domain, k_bar))?;
                Ok(ScalarField::from_fn(domain, |p| e.eval(p.x, p.y)))
            }
            KSpec::Bump {
                center,
                width,
                amplitude,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                let c = Point::new(center[0], center[1]);
                Ok(ScalarField::from_fn(domain, |p| {
                    let r2 = (p.x - c.x).powi(2) + (p.y - c.y).powi(2);
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                }))
            }
            KSpec::RandomSmooth {
                modes,
                amplitude,
                seed: s,
            } => random_smooth(domain, *modes, *amplitude, s.unwrap_or(seed)),
            KSpec::Piecewise(spec) => {
                let spec = PiecewiseSpec {
                    seed: Some(spec.seed.unwrap_or(seed)),
                    ..spec.clone()
                };
                Ok(piecewise_k(domain, &spec, k_bar)?.field)
            }
        }
    }
}

fn random_smooth(
    domain: &Arc<DiscreteDomain>,
    modes: usize,
    amplitude: f64,
    seed: u64,
) -> Result<ScalarField> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    if modes == 0 {
        return Err(Error::Config(
            "random_smooth needs at least one mode".into(),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut coef = Vec::with_capacity(modes * modes);
    for q in 1..=modes {
        for p in 1..=modes {
            let a: f64 = StandardNormal.sample(&mut rng);
            coef.push((p as f64, q as f64, a / (p * p + q * q) as f64));
        }
    }
    let bb = domain.bounding_box();
    let (wx, wy) = (bb.x1 - bb.x0, bb.y1 - bb.y0);
    let pi = std::f64::consts::PI;
    let raw = ScalarField::from_fn(domain, |pt| {
        let (u, v) = ((pt.x - bb.x0) / wx, (pt.y - bb.y0) / wy);
        coef.iter()
            .map(|&(p, q, a)| a * (p * pi * u).sin() * (q * pi * v).sin())
            .sum()
    });
    let m = raw.max_abs();
    Ok(if m > 0.0 {
        raw.scaled(amplitude / m)
    } else {
        raw
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    pub k: KSpec,
    pub p0: [f64; 2],
    pub f: f64,
    pub d: f64,
    pub k_bar: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub solver: SolverKind,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

impl ForwardConfig {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            solver: self.solver,
        }
    }
}

/// Reconstruction parameters; unset fields take the
/// [`ReconstructionConfig`] defaults and `sigma` the top-level value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionBlock {
    #[serde(default)]
    pub w_min_rel: Option<f64>,
    #[serde(default)]
    pub exclude_radius: Option<f64>,
    #[serde(default)]
    pub mollify_width: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Relative measurement noise level.
    #[serde(default)]
    pub noise: f64,
}

/// Amplitudes `t`, either listed or log-spaced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TSpec {
    List(Vec<f64>),
    LogSpace { from: f64, to: f64, count: usize },
}

impl TSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TSpec::List(v) => v.clone(),
            TSpec::LogSpace { from, to, count } => {
                if *count < 2 {
                    return vec![*from];
                }
                let (a, b) = (from.log10(), to.log10());
                (0..*count)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / (*count - 1) as f64))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t: TSpec,
    pub delta_k: KSpec,
    /// Fraction of the `log ε` span used by the fit.
    #[serde(default = "default_fit_range")]
    pub fit_range: [f64; 2],
}

fn default_fit_range() -> [f64; 2] {
    [0.2, 0.8]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "yes")]
    pub proof: bool,
    #[serde(default = "yes")]
    pub lps: bool,
    #[serde(default = "yes")]
    pub ap: bool,
    #[serde(default = "yes")]
    pub frequency: bool,
    #[serde(default = "yes")]
    pub interpolation: bool,
    #[serde(default = "yes")]
    pub bv: bool,
    /// Disc radius `τ` (units of `ρ₀`) for the smallness and `A_p` audits.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "four")]
    pub c1: f64,
    #[serde(default = "four")]
    pub c2: f64,
    #[serde(default = "default_audit_tol")]
    pub tol: f64,
    /// Stride for the frequency-ratio seminorm; `None` uses the node cap.
    #[serde(default)]
    pub subsample: Option<usize>,
}

fn yes() -> bool {
    true
}

fn default_tau() -> f64 {
    0.05
}

fn default_p() -> f64 {
    2.0
}

fn four() -> f64 {
    4.0
}

fn default_audit_tol() -> f64 {
    1e-6
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            proof: true,
            lps: true,
            ap: true,
            frequency: true,
            interpolation: true,
            bv: true,
            tau: default_tau(),
            p: default_p(),
            c1: four(),
            c2: four(),
            tol: default_audit_tol(),
            subsample: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Write field dumps under `fields/`.
    #[serde(default = "yes")]
    pub fields: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out(),
            fields: true,
        }
    }
}

/// Parses a config, reporting the line, column and field path on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let msg = inner.to_string();
        let msg = msg
            .strip_suffix(&format!(" at line {line} column {column}"))
            .unwrap_or(&msg);
        Error::Config(format!(
            "line {line} column {column}, field `{path}`: {msg}"
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Config(format!(
                "field `s`: must lie in (0, 1), got {}",
                self.s
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!(
                "field `sigma`: must be positive, got {}",
                self.sigma
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("field `workers`: must be at least 1".into()));
        }
        if let Some(sw) = &self.sweep {
            let t = sw.t.values();
            if t.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config(
                    "field `sweep.t`: amplitudes must be positive".into(),
                ));
            }
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(
                    "field `sweep.t`: amplitudes must be strictly increasing".into(),
                ));
            }
            let [a, b] = sw.fit_range;
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::Config(format!(
                    "field `sweep.fit_range`: need 0 ≤ a < b ≤ 1, got [{a}, {b}]"
                )));
            }
        }
        let a = &self.audits;
        if !(a.p > 1.0) {
            return Err(Error::Config(format!(
                "field `audits.p`: must exceed 1, got {}",
                a.p
            )));
        }
        if !(a.tau > 0.0 && a.c1 >= 1.0 && a.c2 >= 1.0) {
            return Err(Error::Config(
                "fields `audits.tau`, `c1`, `c2`: need τ > 0 and c ≥ 1".into(),
            ));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Arc<DiscreteDomain>> {
        let d = &self.domain;
        let dom = DiscreteDomain::rectangle(d.lx, d.ly, d.n, d.rho0, &d.holes)?;
        if let Some(m1) = d.m1 {
            if !dom.satisfies_area_bound(m1) {
                return Err(Error::InvalidDomain(format!(
                    "|Ω| exceeds M1·ρ₀² with M1 = {m1}"
                )));
            }
        }
        Ok(Arc::new(dom))
    }

    /// Noisy data is mollified at `3Δ` unless a width is given.
    pub fn reconstruction_config(&self, spacing: f64) -> ReconstructionConfig {
        let p = &self.reconstruction;
        let base = ReconstructionConfig::default();
        let default_width = if p.noise > 0.0 { 3.0 * spacing } else { 0.0 };
        ReconstructionConfig {
            w_min_rel: p.w_min_rel.unwrap_or(base.w_min_rel),
            exclude_radius: p.exclude_radius,
            mollify_width: p.mollify_width.unwrap_or(default_width),
            sigma: p.sigma.unwrap_or(self.sigma),
        }
    }

    /// Domain, material and the baseline problem with `k = k1`.
    pub fn build_problem(
        &self,
        domain: &Arc<DiscreteDomain>,
    ) -> Result<(ElasticityTensorField, ForwardProblem)> {
        let c = self.material.build(domain)?;
        let fw = &self.forward;
        let k1 = fw.k.build(domain, fw.k_bar, self.seed)?;
        let prob = ForwardProblem::new(
            plate_tensor(&c),
            k1,
            Point::new(fw.p0[0], fw.p0[1]),
            fw.f,
            fw.d,
            fw.k_bar,
        )?
        .with_c0(fw.c0)?;
        Ok((c, prob))
    }
}

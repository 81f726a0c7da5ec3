//! Stability sweep `k₂ = k₁ + t·δk` and the Hölder fit of `δ` against `ε`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audits::{
    ap_audit, frequency_ratio, homogeneous_region, interpolation_audit, lps_audit, proof_audit,
    ProofAudit,
};
use super::config::AuditConfig;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::forward::{solve_with, ForwardProblem, SolveOptions, SolverStats};
use crate::inverse::{coefficient_error, discrepancy};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub t: f64,
    /// `‖w₁ − w₂‖_{L²(Ω)}/f`.
    pub epsilon: f64,
    /// `‖k₁ − k₂‖_{L²(Ω_{σρ₀})}`.
    pub delta: f64,
    /// Nodes where `k₂` hit the admissible range.
    pub clamped: usize,
    pub stats: Option<SolverStats>,
    pub proof: Option<ProofAudit>,
    /// Audits on `w₂` over `U`.
    pub lps_min: Option<f64>,
    pub ap_max: Option<f64>,
    pub freq_ratio: Option<f64>,
    /// Interpolation audit on `w₁ − w₂`.
    pub interp_ratio: Option<f64>,
    /// Set when the record was aborted or an audit failed.
    pub error: Option<String>,
}

impl StabilityRecord {
    fn failed(t: f64, e: Error) -> Self {
        Self {
            t,
            epsilon: f64::NAN,
            delta: f64::NAN,
            clamped: 0,
            stats: None,
            proof: None,
            lps_min: None,
            ap_max: None,
            freq_ratio: None,
            interp_ratio: None,
            error: Some(e.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.epsilon.is_finite() && self.delta.is_finite()
    }
}

/// Inputs shared by every sweep point.
#[derive(Debug, Clone)]
pub struct SweepSetup<'a> {
    pub base: &'a ForwardProblem,
    /// Baseline deflection for `k₁`.
    pub w1: &'a ScalarField,
    pub delta_k: &'a ScalarField,
    pub sigma: f64,
    pub s: f64,
    pub audits: &'a AuditConfig,
    pub options: SolveOptions,
}

/// `clamp(k₁ + t·δk, [0, k̄/ρ₀⁴])` and the number of clamped nodes.
pub fn perturbed_k(
    base: &ForwardProblem,
    delta_k: &ScalarField,
    t: f64,
) -> Result<(ScalarField, usize)> {
    let hi = base.k_bar / base.domain.rho0().powi(4);
    let raw = base.k.zip_with(delta_k, |a, b| a + t * b)?;
    let clamped = raw.values().iter().filter(|&&v| v < 0.0 || v > hi).count();
    Ok((raw.map(|v| v.clamp(0.0, hi)), clamped))
}

/// One sweep point. Solver failures abort the record; audit failures are
/// noted and leave the audit columns empty.
pub fn sweep_point(setup: &SweepSetup, t: f64) -> StabilityRecord {
    let core = || -> Result<StabilityRecord> {
        let base = setup.base;
        let (k2, clamped) = perturbed_k(base, setup.delta_k, t)?;
        let prob2 = base.with_k(k2.clone())?;
        let rep = solve_with(&prob2, &setup.options)?;
        let w2 = &rep.w;
        Ok(StabilityRecord {
            t,
            epsilon: discrepancy(setup.w1, w2, base.f)?,
            delta: coefficient_error(&base.k, &k2, setup.sigma)?,
            clamped,
            stats: Some(rep.stats.clone()),
            proof: None,
            lps_min: None,
            ap_max: None,
            freq_ratio: None,
            interp_ratio: None,
            error: None,
        }
        .with_audits(setup, &k2, w2))
    };
    core().unwrap_or_else(|e| StabilityRecord::failed(t, e))
}

impl StabilityRecord {
    fn with_audits(mut self, setup: &SweepSetup, k2: &ScalarField, w2: &ScalarField) -> Self {
        let a = setup.audits;
        let base = setup.base;
        let mut errs = Vec::new();
        let mut note = |name: &str, e: Error| errs.push(format!("{name}: {e}"));
        if a.proof {
            match proof_audit(&base.plate, &base.k, k2, setup.w1, w2, setup.sigma, a.tol) {
                Ok(p) => self.proof = Some(p),
                Err(e) => note("proof", e),
            }
        }
        let u = homogeneous_region(base);
        if a.lps {
            match lps_audit(w2, &u, a.tau, a.c1) {
                Ok(r) => self.lps_min = Some(r.min_ratio),
                Err(e) => note("lps", e),
            }
        }
        if a.ap {
            match ap_audit(w2, &u, a.tau, a.p, a.c2) {
                Ok(r) => self.ap_max = Some(r.max_product),
                Err(e) => note("ap", e),
            }
        }
        if a.frequency {
            match frequency_ratio(w2, &u, a.subsample) {
                Ok(r) => self.freq_ratio = Some(r.ratio),
                Err(e) => note("frequency", e),
            }
        }
        if a.interpolation {
            match setup
                .w1
                .sub(w2)
                .and_then(|w| interpolation_audit(&w, setup.sigma, setup.s))
            {
                Ok(r) => self.interp_ratio = Some(r.ratio),
                Err(e) => note("interpolation", e),
            }
        }
        if !errs.is_empty() {
            self.error = Some(errs.join("; "));
        }
        self
    }
}

/// Runs every `t` on the current rayon pool; records come back in input
/// order.
pub fn stability_sweep(setup: &SweepSetup, ts: &[f64]) -> Vec<StabilityRecord> {
    ts.par_iter().map(|&t| sweep_point(setup, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// Slope of `log δ` against `log ε`.
    pub beta: f64,
    /// Natural-log intercept, so `δ ≈ C ε^β` with `C = exp(log_c)`.
    pub log_c: f64,
    pub r2: f64,
    /// `ε` bounds of the records used.
    pub eps_range: [f64; 2],
    pub used: usize,
    /// Fraction of the `log ε` span requested.
    pub fit_range: [f64; 2],
}

/// Least-squares line through `(log ε, log δ)` over the records whose
/// `log ε` lies in the `fit_range` fraction of the observed span.
pub fn fit_holder(points: &[(f64, f64)], fit_range: [f64; 2]) -> Result<HolderFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, d)| *e > 0.0 && *d > 0.0 && e.is_finite() && d.is_finite())
        .map(|&(e, d)| (e.ln(), d.ln()))
        .collect();
    if logs.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 records with ε, δ > 0, have {}",
            logs.len()
        )));
    }
    let lo = logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < 1.0 {
        return Err(Error::Fit(format!(
            "ε spans only {decades:.3} decades; need at least one"
        )));
    }
    let (a, b) = (lo + fit_range[0] * (hi - lo), lo + fit_range[1] * (hi - lo));
    let slack = 1e-9 * (hi - lo);
    let used: Vec<(f64, f64)> = logs
        .into_iter()
        .filter(|p| p.0 >= a - slack && p.0 <= b + slack)
        .collect();
    if used.len() < 5 {
        return Err(Error::Fit(format!(
            "fit range {fit_range:?} keeps {} records; need at least 5",
            used.len()
        )));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let beta = sxy / sxx;
    let log_c = my - beta * mx;
    let ss_res: f64 = used
        .iter()
        .map(|p| (p.1 - log_c - beta * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let eps_lo = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).exp();
    let eps_hi = used
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    Ok(HolderFit {
        beta,
        log_c,
        r2,
        eps_range: [eps_lo, eps_hi],
        used: used.len(),
        fit_range,
    })
}

/// Exponent shape `2s/(p(4+s))·½` from the stability argument, for
/// comparison with the fitted slope.
pub fn beta_shape(s: f64, p: f64) -> f64 {
    s / (p * (4.0 + s))
}

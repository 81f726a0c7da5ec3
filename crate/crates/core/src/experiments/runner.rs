//! Command execution and artifact writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::audits::{
    ap_audit, frequency_ratio, homogeneous_region, interpolation_audit, lps_audit, ApAudit,
    FrequencyAudit, InterpolationAudit, LpsAudit, ProofAudit,
};
use super::config::{ExperimentConfig, KSpec};
use super::piecewise::{piecewise_k, PiecewiseSpec};
use super::sweep::{
    beta_shape, fit_holder, stability_sweep, HolderFit, StabilityRecord, SweepSetup,
};
use crate::error::{Error, Result};
use crate::fields::{bv_embedding_check, BvCheck};
use crate::forward::{
    annulus_energy_audit, positivity_audit, solve_with, ForwardProblem, SolveReport,
};
use crate::inverse::{reconstruct, Measurement};
use crate::material::{
    regularity_bounds, structural_condition, ElasticityTensorField, STRUCTURAL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Baseline, audits and the stability sweep.
    Run,
    /// Forward solve only.
    Solve,
    /// Baseline solve followed by coefficient reconstruction.
    Reconstruct,
    /// Baseline solve and audits, no sweep.
    Audit,
}

/// Column order of `records.csv`.
pub const RECORD_COLUMNS: [&str; 10] = [
    "t",
    "epsilon",
    "delta",
    "I1",
    "I2",
    "residual",
    "lps_min",
    "ap_max",
    "freq_ratio",
    "interp_ratio",
];

#[derive(Debug, Clone, Serialize)]
pub struct ProofRow {
    pub t: f64,
    #[serde(flatten)]
    pub audit: ProofAudit,
}

/// One table per enabled audit; failures are kept next to the tables.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AuditReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lps: Option<LpsAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap: Option<ApAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<Vec<ProofRow>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub bv: BTreeMap<String, BvCheck>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

/// Executes `cmd`, writing artifacts under `cfg.output.dir`, and returns the
/// summary that was written to `summary.json`.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Value> {
    cfg.validate()?;
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| execute_inner(cmd, cfg)),
        None => execute_inner(cmd, cfg),
    }
}

struct Baseline {
    material: ElasticityTensorField,
    problem: ForwardProblem,
    report: SolveReport,
}

fn baseline(cfg: &ExperimentConfig) -> Result<Baseline> {
    let domain = cfg.build_domain()?;
    let (material, problem) = cfg.build_problem(&domain)?;
    let report = solve_with(&problem, &cfg.forward.solve_options())?;
    Ok(Baseline {
        material,
        problem,
        report,
    })
}

fn execute_inner(cmd: Command, cfg: &ExperimentConfig) -> Result<Value> {
    let out = &cfg.output.dir;
    fs::create_dir_all(out)?;
    if cfg.output.fields {
        fs::create_dir_all(out.join("fields"))?;
    }
    let base = baseline(cfg)?;
    let mut summary = json!({
        "command": format!("{cmd:?}").to_lowercase(),
        "config": cfg,
        "a_priori": a_priori(cfg, &base),
        "baseline": baseline_summary(cfg, &base),
    });
    if cfg.output.fields {
        base.report.w.write_csv(&out.join("fields/w1.csv"))?;
        base.problem.k.write_csv(&out.join("fields/k1.csv"))?;
        base.report
            .w
            .write_binary(fs::File::create(out.join("fields/w1.bin"))?)?;
    }
    match cmd {
        Command::Solve => {}
        Command::Reconstruct => summary["reconstruction"] = run_reconstruction(cfg, &base)?,
        Command::Audit | Command::Run => {
            let mut audits = baseline_audits(cfg, &base)?;
            if cmd == Command::Run {
                if let Some(sweep) = &cfg.sweep {
                    let (records, fit) = run_sweep(cfg, &base, sweep, &mut audits)?;
                    write_records(&out.join("records.csv"), &records)?;
                    write_loglog(&out.join("loglog.csv"), &records, fit.as_ref().ok())?;
                    summary["fit"] = match &fit {
                        Ok(f) => serde_json::to_value(f)?,
                        Err(e) => json!({ "error": e.to_string() }),
                    };
                    summary["beta_shape"] = json!(beta_shape(cfg.s, cfg.audits.p));
                    summary["records"] = serde_json::to_value(&records)?;
                } else {
                    write_records(&out.join("records.csv"), &[])?;
                }
            }
            summary["audits"] = serde_json::to_value(&audits)?;
        }
    }
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("summary.json"), text + "\n")?;
    Ok(summary)
}

fn a_priori(cfg: &ExperimentConfig, b: &Baseline) -> Value {
    let (xi0, xi1) = b.material.convexity_bounds();
    let reg = regularity_bounds(&b.material, cfg.s);
    let p = &b.problem;
    json!({
        "h": b.material.thickness(),
        "d": p.d,
        "rho0": p.domain.rho0(),
        "m0": cfg.domain.m0,
        "m1": cfg.domain.m1,
        "m2": reg.as_ref().ok().map(|r| r.m2),
        "m3": reg.as_ref().ok().map(|r| r.m3),
        "regularity_error": reg.as_ref().err().map(|e| e.to_string()),
        "xi0": xi0,
        "xi1": xi1,
        "k_bar": p.k_bar,
        "s": cfg.s,
        "sigma": cfg.sigma,
        "sigma_bar": p.sigma_bar(),
        "c0": p.c0,
        // Inputs of the covering argument, not verified constants.
        "c1": cfg.audits.c1,
        "c2": cfg.audits.c2,
        "tau": cfg.audits.tau,
        "p": cfg.audits.p,
        "frequency_bound_shape": 1.0 / (p.sigma_bar() * p.d),
    })
}

fn baseline_summary(cfg: &ExperimentConfig, b: &Baseline) -> Value {
    let r = &b.report;
    let st = structural_condition(&b.material, STRUCTURAL_TOL);
    let pos = positivity_audit(r, &b.problem, b.problem.sigma_bar());
    let ann = annulus_energy_audit(r, &b.problem, b.problem.sigma_bar());
    let as_value = |res: Result<Value>| res.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let mut v = json!({
        "nodes": b.problem.domain.len(),
        "spacing": b.problem.domain.spacing(),
        "w_at_load": r.w_at_load,
        "energy": r.energy,
        "energy_residual": r.energy_residual,
        "h2_norm": r.h2_norm,
        "apriori_constant": r.apriori_constant,
        "min_w_near_p0": r.min_w_near_p0,
        "solver": r.stats,
        "structural": {
            "material": b.material.kind(),
            "max_d": st.max_d,
            "max_normalized": st.max_normalized,
            "tol": st.tol,
            "passes": st.passes,
        },
        "positivity": as_value(pos.and_then(|a| Ok(serde_json::to_value(a)?))),
        "annulus": as_value(ann.and_then(|a| Ok(serde_json::to_value(a)?))),
    });
    if let KSpec::Piecewise(spec) = &cfg.forward.k {
        v["k1_partition"] = partition_summary(cfg, b, spec);
    }
    v
}

fn partition_summary(cfg: &ExperimentConfig, b: &Baseline, spec: &PiecewiseSpec) -> Value {
    let spec = PiecewiseSpec {
        seed: Some(spec.seed.unwrap_or(cfg.seed)),
        ..spec.clone()
    };
    match piecewise_k(&b.problem.domain, &spec, b.problem.k_bar) {
        Ok(pk) => json!({
            "pieces": pk.pieces,
            "max_perimeter_over_rho0": pk.max_perimeter,
            "perimeter_bound": spec.perimeter_bound,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn baseline_audits(cfg: &ExperimentConfig, b: &Baseline) -> Result<AuditReport> {
    let a = &cfg.audits;
    let w = &b.report.w;
    let u = homogeneous_region(&b.problem);
    let mut rep = AuditReport::default();
    let fail = |rep: &mut AuditReport, name: &str, e: Error| {
        rep.errors.insert(name.to_string(), e.to_string());
    };
    if a.lps {
        match lps_audit(w, &u, a.tau, a.c1) {
            Ok(v) => rep.lps = Some(v),
            Err(e) => fail(&mut rep, "lps", e),
        }
    }
    if a.ap {
        match ap_audit(w, &u, a.tau, a.p, a.c2) {
            Ok(v) => rep.ap = Some(v),
            Err(e) => fail(&mut rep, "ap", e),
        }
    }
    if a.frequency {
        match frequency_ratio(w, &u, a.subsample) {
            Ok(v) => rep.frequency = Some(v),
            Err(e) => fail(&mut rep, "frequency", e),
        }
    }
    if a.interpolation {
        match interpolation_audit(w, cfg.sigma, cfg.s) {
            Ok(v) => rep.interpolation = Some(v),
            Err(e) => fail(&mut rep, "interpolation", e),
        }
    }
    if a.bv && cfg.s < 0.5 && matches!(cfg.forward.k, KSpec::Piecewise(_)) {
        match bv_embedding_check(&b.problem.k, cfg.s) {
            Ok(v) => {
                rep.bv.insert("k1".into(), v);
            }
            Err(e) => fail(&mut rep, "bv_k1", e),
        }
    }
    Ok(rep)
}

fn run_sweep(
    cfg: &ExperimentConfig,
    b: &Baseline,
    sweep: &super::config::SweepConfig,
    audits: &mut AuditReport,
) -> Result<(Vec<StabilityRecord>, Result<HolderFit>)> {
    let dom = &b.problem.domain;
    let delta_k = sweep
        .delta_k
        .build(dom, b.problem.k_bar, cfg.seed.wrapping_add(1))?;
    if cfg.output.fields {
        delta_k.write_csv(&cfg.output.dir.join("fields/delta_k.csv"))?;
    }
    if cfg.audits.bv && cfg.s < 0.5 && matches!(sweep.delta_k, KSpec::Piecewise(_)) {
        match bv_embedding_check(&delta_k, cfg.s) {
            Ok(v) => {
                audits.bv.insert("delta_k".into(), v);
            }
            Err(e) => {
                audits.errors.insert("bv_delta_k".into(), e.to_string());
            }
        }
    }
    let setup = SweepSetup {
        base: &b.problem,
        w1: &b.report.w,
        delta_k: &delta_k,
        sigma: cfg.sigma,
        s: cfg.s,
        audits: &cfg.audits,
        options: cfg.forward.solve_options(),
    };
    let records = stability_sweep(&setup, &sweep.t.values());
    if cfg.audits.proof {
        audits.proof = Some(
            records
                .iter()
                .filter_map(|r| r.proof.map(|audit| ProofRow { t: r.t, audit }))
                .collect(),
        );
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.epsilon, r.delta))
        .collect();
    let fit = fit_holder(&points, sweep.fit_range);
    Ok((records, fit))
}

fn run_reconstruction(cfg: &ExperimentConfig, b: &Baseline) -> Result<Value> {
    let rc = cfg.reconstruction_config(b.report.w.domain().spacing());
    let noise = cfg.reconstruction.noise;
    let m = if noise > 0.0 {
        Measurement::noisy(&b.report.w, noise, cfg.seed, "baseline solve")?
    } else {
        Measurement::exact(b.report.w.clone(), "baseline solve")
    };
    let res = reconstruct(&m, &b.problem.plate, b.problem.p0, b.problem.f, &rc)?
        .with_truth(&b.problem.k)?;
    if cfg.output.fields {
        res.k_hat
            .write_csv(&cfg.output.dir.join("fields/k_hat.csv"))?;
        if noise > 0.0 {
            m.w_obs
                .write_csv(&cfg.output.dir.join("fields/w_obs.csv"))?;
        }
    }
    Ok(json!({
        "parameters": rc,
        "noise": noise,
        "mask_nodes": res.valid_mask.len(),
        "clamped": res.clamped,
        "w_min": res.w_min,
        "exclude_radius": res.exclude_radius,
        "error": res.error,
    }))
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => String::new(),
    }
}

fn write_records(path: &Path, records: &[StabilityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        let p = r.proof.as_ref();
        w.write_record([
            fmt(Some(r.t)),
            fmt(Some(r.epsilon)),
            fmt(Some(r.delta)),
            fmt(p.map(|a| a.i1)),
            fmt(p.map(|a| a.i2)),
            fmt(p.map(|a| a.residual)),
            fmt(r.lps_min),
            fmt(r.ap_max),
            fmt(r.freq_ratio),
            fmt(r.interp_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_loglog(path: &Path, records: &[StabilityRecord], fit: Option<&HolderFit>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "log10_epsilon", "log10_delta", "in_fit"])?;
    for r in records
        .iter()
        .filter(|r| r.is_ok() && r.epsilon > 0.0 && r.delta > 0.0)
    {
        let used = fit.is_some_and(|f| r.epsilon >= f.eps_range[0] && r.epsilon <= f.eps_range[1]);
        w.write_record([
            fmt(Some(r.t)),
            fmt(Some(r.epsilon.log10())),
            fmt(Some(r.delta.log10())),
            used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

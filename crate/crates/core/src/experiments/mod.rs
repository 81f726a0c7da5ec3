//! Stability sweeps, proof-term audits and report emission.

pub mod audits;
pub mod config;
pub mod piecewise;
pub mod runner;
pub mod sweep;

pub use audits::{
    ap_audit, audit_region, frequency_ratio, homogeneous_region, interpolation_audit, lps_audit,
    proof_audit, ApAudit, FrequencyAudit, InterpolationAudit, LpsAudit, ProofAudit,
};
pub use config::{load_config, parse_config, ExperimentConfig, KSpec};
pub use piecewise::{piecewise_from_cells, piecewise_k, Piece, PiecewiseK, PiecewiseSpec};
pub use runner::{execute, AuditReport, Command, RECORD_COLUMNS};
pub use sweep::{beta_shape, fit_holder, stability_sweep, HolderFit, StabilityRecord, SweepSetup};

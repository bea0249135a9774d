//! Monte-Carlo scheme comparisons on the bandwidth game or the synthetic
//! problem.
//!
//! A run writes a bundle directory:
//!
//! * `traces.csv`: `setting_id,scheme,k,mse,ci_low,ci_high` per recorded iteration
//! * `summary.csv`: the same columns at the last iteration
//! * `bounds.csv`: DASA MSE against the error bound, `setting_id,scheme,k,observed,predicted,ratio`
//! * `manifest.json`: resolved config, topology, constants, reference
//!   solutions, seeds, resolved policies and warnings
//!
//! Numbers in the CSV files carry six significant digits. The synthetic
//! problem is reported as setting 0.

mod config;
mod run;
mod summary;

pub use config::{
    ConstantsOverride, ExperimentConfig, InstanceSpec, PolicySpec, SchemeSpec, SettingOverride, PAPER_PROTOCOL,
};
pub use run::{
    fmt6, read_manifest, reference_solutions, replay, resolve_policy, run_experiment, CaseRecord, Manifest,
    ReferenceReport, ResolvedPolicy, SchemeRecord, BOUNDS_FILE, MANIFEST_FILE, SUMMARY_FILE, TRACES_FILE,
};
pub use summary::{compare, read_summary, summarize, ComparisonTable, SummaryRow};

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InstanceSpec, PolicySpec, SchemeSpec};
use crate::bandwidth::{build_instance, solve_projected_gradient, solve_reference, NetworkTopology, SettingParams};
use crate::engine::{reduce_mse, run_replications, MseTrace, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::error_model::{compare_sequences, ErrorRecursion};
use crate::stepsize::{DasaPlayerPolicy, HarmonicPolicy, SteplengthPolicy};
use crate::synthetic::affine_instance;
use crate::vi::{estimate_constants, natural_residual, GameInstance, ProblemConstants};

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const MANIFEST_FORMAT: u32 = 1;
/// Empirical `η̂` at or below this is reported as a lost monotonicity certificate.
const ETA_FLOOR: f64 = 1e-10;

/// Everything needed to recompute a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub config: ExperimentConfig,
    /// Canonical text of the topology used by bandwidth instances.
    pub topology: Option<String>,
    pub cases: Vec<CaseRecord>,
    /// False if any case or scheme failed.
    pub complete: bool,
}

/// One instance: a bandwidth setting, or the synthetic problem (id 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub setting_id: usize,
    pub params: Option<SettingParams>,
    /// Constants the policies were built from.
    pub constants: Option<ProblemConstants>,
    pub estimated: Option<ProblemConstants>,
    pub reference_solution: Vec<f64>,
    /// Natural residual of the reference solution at `γ = 1/L`.
    pub reference_residual: Option<f64>,
    pub warnings: Vec<String>,
    pub failed: Option<String>,
    pub schemes: Vec<SchemeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRecord {
    pub name: String,
    pub policy: Option<ResolvedPolicy>,
    pub seeds: Vec<u64>,
    pub initial_mse: Option<f64>,
    pub final_mse: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Share of recorded iterations where the MSE stays below the error bound.
    pub bound_fraction_within: Option<f64>,
    pub failed: Option<String>,
}

/// Policy parameters after defaults and caps are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResolvedPolicy {
    Harmonic { theta: f64 },
    Dasa { c: f64, beta: f64, r: Vec<f64>, certified: bool },
}

impl ResolvedPolicy {
    pub fn build(&self, constants: Option<&ProblemConstants>, players: usize) -> Result<Vec<SteplengthPolicy>> {
        match self {
            Self::Harmonic { theta } => Ok(vec![HarmonicPolicy::new(*theta)?.into(); players]),
            Self::Dasa { c, r, .. } => {
                let constants = constants.ok_or_else(|| invalid("DASA needs problem constants"))?;
                if r.len() != players {
                    return Err(Error::LengthMismatch(format!("{} r values for {players} players", r.len())));
                }
                r.iter()
                    .map(|&ri| DasaPlayerPolicy::relaxed(constants, *c, ri).map(Into::into))
                    .collect()
            }
        }
    }
}

/// Fills in `c`, `r` and records why a choice was made.
pub fn resolve_policy(
    spec: &SchemeSpec,
    constants: Option<&ProblemConstants>,
    players: usize,
    warnings: &mut Vec<String>,
) -> Result<ResolvedPolicy> {
    match &spec.policy {
        PolicySpec::Harmonic { theta } => Ok(ResolvedPolicy::Harmonic { theta: *theta }),
        PolicySpec::Dasa { c, c_fraction, r } => {
            let k = constants.ok_or_else(|| invalid("DASA needs problem constants"))?;
            let d = k.require_diameter()?;
            let c = match c {
                Some(c) => *c,
                None => {
                    let wanted = c_fraction * k.eta / 2.0;
                    // keeps c γ_0 / r <= 1/2 when D is large relative to ν/L
                    let cap = k.nu / (std::f64::consts::SQRT_2 * d);
                    if cap < wanted {
                        warnings.push(format!("{}: c capped at nu/(sqrt(2) D) = {cap:.6e}", spec.name));
                    }
                    wanted.min(cap)
                }
            };
            let beta = (k.eta - 2.0 * c) / k.lipschitz;
            let r = match r {
                Some(r) => r.clone(),
                None if players == 1 => vec![1.0],
                None => (0..players)
                    .map(|i| 1.0 + beta * i as f64 / (players - 1) as f64)
                    .collect(),
            };
            let certified = d < std::f64::consts::SQRT_2 * k.nu / k.lipschitz;
            if !certified {
                warnings.push(format!(
                    "{}: D = {d:.6e} violates D < sqrt(2) nu / L = {:.6e}; the rule is still a valid diminishing sequence but not certified optimal",
                    spec.name,
                    std::f64::consts::SQRT_2 * k.nu / k.lipschitz
                ));
            }
            Ok(ResolvedPolicy::Dasa { c, beta, r, certified })
        }
    }
}

fn load_topology(spec: &str) -> Result<NetworkTopology> {
    if spec == "default" {
        Ok(NetworkTopology::default_network())
    } else {
        NetworkTopology::from_file(Path::new(spec))
    }
}

fn apply_override(base: ProblemConstants, cfg: &ExperimentConfig) -> Result<ProblemConstants> {
    let InstanceSpec::Bandwidth { constants: o, .. } = &cfg.instance else {
        return Ok(base);
    };
    ProblemConstants::new(
        o.eta.unwrap_or(base.eta),
        o.lipschitz.unwrap_or(base.lipschitz),
        o.nu.unwrap_or(base.nu),
        o.diameter.or(base.diameter),
    )
}

/// Builds an instance and its constants; the reference solution is not attached.
fn case_instance(
    cfg: &ExperimentConfig,
    topology: Option<&NetworkTopology>,
    params: Option<&SettingParams>,
) -> Result<GameInstance> {
    match (&cfg.instance, topology, params) {
        (InstanceSpec::SyntheticAffine { dimension, eta, lipschitz, nu }, _, _) => {
            affine_instance(*dimension, *eta, *lipschitz, *nu)
        }
        (InstanceSpec::Bandwidth { .. }, Some(t), Some(p)) => {
            let inst = build_instance(t, p)?;
            let k = apply_override(*inst.constants().expect("bandwidth constants"), cfg)?;
            inst.with_constants(k)
        }
        _ => Err(invalid("bandwidth case without topology or parameters")),
    }
}

fn residual_of(instance: &GameInstance, x: &DVector<f64>) -> Result<f64> {
    let l = instance.constants().map_or(1.0, |k| k.lipschitz);
    let d = instance.decision(x.clone())?;
    natural_residual(instance.set(), instance.mapping(), &d, 1.0 / l)
}

fn solver_config(cfg: &ExperimentConfig, policies: Vec<SteplengthPolicy>) -> SolverConfig {
    let mut sc = SolverConfig::new(cfg.iterations, policies, cfg.base_seed);
    sc.record_every = cfg.record_every;
    sc.record_residual = false;
    sc
}

/// Six significant digits.
pub fn fmt6(v: f64) -> String {
    format!("{v:.5e}")
}

struct Writers {
    traces: csv::Writer<fs::File>,
    summary: csv::Writer<fs::File>,
    bounds: csv::Writer<fs::File>,
}

impl Writers {
    fn create(dir: &Path) -> Result<Self> {
        let open = |name: &str| csv::Writer::from_path(dir.join(name)).map_err(csv_err);
        let mut w = Self {
            traces: open(TRACES_FILE)?,
            summary: open(SUMMARY_FILE)?,
            bounds: open(BOUNDS_FILE)?,
        };
        let header = ["setting_id", "scheme", "k", "mse", "ci_low", "ci_high"];
        w.traces.write_record(header).map_err(csv_err)?;
        w.summary.write_record(header).map_err(csv_err)?;
        w.bounds
            .write_record(["setting_id", "scheme", "k", "observed", "predicted", "ratio"])
            .map_err(csv_err)?;
        Ok(w)
    }

    fn flush(&mut self) -> Result<()> {
        self.traces.flush()?;
        self.summary.flush()?;
        self.bounds.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn mse_row(id: usize, scheme: &str, k: usize, mse: f64, lo: f64, hi: f64) -> [String; 6] {
    [id.to_string(), scheme.to_string(), k.to_string(), fmt6(mse), fmt6(lo), fmt6(hi)]
}

/// Runs every (case, scheme) pair and writes the bundle into `out`.
///
/// Failures are recorded in the manifest and the run continues; check
/// [`Manifest::complete`]. I/O and configuration errors abort.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let topology = match &cfg.instance {
        InstanceSpec::Bandwidth { topology, .. } => Some(load_topology(topology)?),
        InstanceSpec::SyntheticAffine { .. } => None,
    };
    let settings = cfg.resolved_settings()?;
    let cases: Vec<Option<SettingParams>> = if topology.is_some() {
        settings.into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    let mut writers = Writers::create(out)?;
    let mut records = Vec::with_capacity(cases.len());
    for params in &cases {
        let record = run_case(cfg, topology.as_ref(), params.as_ref(), &mut writers)?;
        records.push(record);
    }
    writers.flush()?;

    let complete = records
        .iter()
        .all(|c| c.failed.is_none() && c.schemes.iter().all(|s| s.failed.is_none()));
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        config: cfg.clone(),
        topology: topology.as_ref().map(NetworkTopology::to_text),
        cases: records,
        complete,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(out.join(MANIFEST_FILE), json + "\n")?;
    Ok(manifest)
}

fn run_case(
    cfg: &ExperimentConfig,
    topology: Option<&NetworkTopology>,
    params: Option<&SettingParams>,
    writers: &mut Writers,
) -> Result<CaseRecord> {
    let id = params.map_or(0, |p| p.id);
    let mut record = CaseRecord {
        setting_id: id,
        params: params.copied(),
        constants: None,
        estimated: None,
        reference_solution: Vec::new(),
        reference_residual: None,
        warnings: Vec::new(),
        failed: None,
        schemes: Vec::new(),
    };
    let instance = match prepare_case(cfg, topology, params, &mut record) {
        Ok(inst) => inst,
        Err(e) => {
            log::error!("setting {id}: {e}");
            record.failed = Some(e.to_string());
            return Ok(record);
        }
    };

    for scheme in &cfg.schemes {
        log::info!("setting {id}: running {}", scheme.name);
        let mut sr = SchemeRecord {
            name: scheme.name.clone(),
            policy: None,
            seeds: (0..cfg.replications as u64).map(|i| cfg.base_seed.wrapping_add(i)).collect(),
            initial_mse: None,
            final_mse: None,
            ci_low: None,
            ci_high: None,
            bound_fraction_within: None,
            failed: None,
        };
        if let Err(e) = run_scheme(cfg, &instance, scheme, &mut record, &mut sr, writers) {
            if matches!(e, Error::Io(_)) {
                return Err(e);
            }
            log::error!("setting {id}, {}: {e}", scheme.name);
            sr.failed = Some(e.to_string());
        }
        record.schemes.push(sr);
    }
    Ok(record)
}

fn prepare_case(
    cfg: &ExperimentConfig,
    topology: Option<&NetworkTopology>,
    params: Option<&SettingParams>,
    record: &mut CaseRecord,
) -> Result<GameInstance> {
    let instance = case_instance(cfg, topology, params)?;
    record.constants = instance.constants().copied();

    if cfg.estimate_samples >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
        rng.set_stream(2);
        let est = estimate_constants(instance.mapping(), instance.set(), cfg.estimate_samples, &mut rng)?;
        if est.eta <= ETA_FLOOR {
            record
                .warnings
                .push(format!("estimated eta = {:.6e} is not safely positive", est.eta));
        }
        if let Some(k) = instance.constants() {
            if est.lipschitz > k.lipschitz * (1.0 + 1e-9) {
                record.warnings.push(format!(
                    "estimated L = {:.6e} exceeds the analytic L = {:.6e}",
                    est.lipschitz, k.lipschitz
                ));
            }
        }
        record.estimated = Some(est);
    }

    let solution = match instance.solution() {
        Some(x) => x.clone(),
        None => solve_reference(&instance, cfg.reference_tol)?,
    };
    record.reference_residual = Some(residual_of(&instance, &solution)?);
    record.reference_solution = solution.iter().copied().collect();
    instance.with_solution(solution)
}

fn run_scheme(
    cfg: &ExperimentConfig,
    instance: &GameInstance,
    scheme: &SchemeSpec,
    record: &mut CaseRecord,
    sr: &mut SchemeRecord,
    w: &mut Writers,
) -> Result<()> {
    let players = instance.num_players();
    let policy = resolve_policy(scheme, instance.constants(), players, &mut record.warnings)?;
    let policies = policy.build(instance.constants(), players)?;
    sr.policy = Some(policy.clone());

    let results = run_replications(instance, &solver_config(cfg, policies), cfg.replications, cfg.base_seed)?;
    let trace = reduce_mse(&results)?;
    let id = record.setting_id;
    for i in 0..trace.k.len() {
        let row = mse_row(id, &scheme.name, trace.k[i], trace.mse[i], trace.ci_low[i], trace.ci_high[i]);
        w.traces.write_record(&row).map_err(csv_err)?;
    }
    let (mse, lo, hi) = trace.last();
    w.summary
        .write_record(mse_row(id, &scheme.name, *trace.k.last().expect("K >= 1"), mse, lo, hi))
        .map_err(csv_err)?;
    sr.initial_mse = Some(trace.initial_mse);
    sr.final_mse = Some(mse);
    sr.ci_low = Some(lo);
    sr.ci_high = Some(hi);

    if let (ResolvedPolicy::Dasa { beta, .. }, Some(k)) = (&policy, instance.constants()) {
        match bound_rows(k, *beta, &trace, cfg.iterations) {
            Ok((fraction, rows)) => {
                sr.bound_fraction_within = Some(fraction);
                for (kk, o, p, r) in rows {
                    w.bounds
                        .write_record([id.to_string(), scheme.name.clone(), kk.to_string(), fmt6(o), fmt6(p), fmt6(r)])
                        .map_err(csv_err)?;
                }
            }
            Err(e) => record.warnings.push(format!("{}: no error bound ({e})", scheme.name)),
        }
    }
    Ok(())
}

type BoundRow = (usize, f64, f64, f64);

/// Compares the MSE trace with `e_k(δ*)` started from `e_0 = D²`.
fn bound_rows(k: &ProblemConstants, beta: f64, trace: &MseTrace, iterations: usize) -> Result<(f64, Vec<BoundRow>)> {
    let d = k.require_diameter()?;
    let rec = ErrorRecursion::new(k.eta, k.lipschitz, k.nu, beta, d * d)?;
    let bound = rec.optimal_trace(iterations)?;
    let predicted: Vec<f64> = trace.k.iter().map(|&kk| bound[kk]).collect();
    let report = compare_sequences(&predicted, &trace.mse)?;
    let rows = trace
        .k
        .iter()
        .zip(&report.observed)
        .zip(&report.predicted)
        .zip(&report.ratios)
        .map(|(((&kk, &o), &p), &r)| (kk, o, p, r))
        .collect();
    Ok((report.fraction_within, rows))
}

/// Recomputes the MSE trace of one (setting, scheme) pair from the manifest alone.
pub fn replay(manifest: &Manifest, setting_id: usize, scheme: &str) -> Result<MseTrace> {
    let case = manifest
        .cases
        .iter()
        .find(|c| c.setting_id == setting_id)
        .ok_or_else(|| invalid(format!("no setting {setting_id} in manifest")))?;
    let sr = case
        .schemes
        .iter()
        .find(|s| s.name == scheme)
        .ok_or_else(|| invalid(format!("no scheme '{scheme}' for setting {setting_id}")))?;
    let policy = sr
        .policy
        .as_ref()
        .ok_or_else(|| invalid(format!("scheme '{scheme}' failed before it ran")))?;
    let first = *sr.seeds.first().ok_or(Error::Empty("seeds"))?;
    if sr.seeds.iter().enumerate().any(|(i, &s)| s != first.wrapping_add(i as u64)) {
        return Err(invalid("seeds are not consecutive"));
    }

    let cfg = &manifest.config;
    let topology = manifest.topology.as_deref().map(NetworkTopology::parse).transpose()?;
    let mut instance = case_instance(cfg, topology.as_ref(), case.params.as_ref())?;
    if let Some(k) = case.constants {
        instance = instance.with_constants(k)?;
    }
    let instance = instance.with_solution(DVector::from_vec(case.reference_solution.clone()))?;
    let policies = policy.build(case.constants.as_ref(), instance.num_players())?;
    let mut sc = solver_config(cfg, policies);
    sc.seed = first;
    let results = run_replications(&instance, &sc, sr.seeds.len(), first)?;
    reduce_mse(&results)
}

/// Reference solution of one case, checked against a second solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceReport {
    pub setting_id: usize,
    pub solution: Vec<f64>,
    /// Natural residual at `γ = 1/L`.
    pub residual: f64,
    /// `||x_eg - x_pg||∞` between extragradient and projected gradient.
    pub cross_check: f64,
}

/// Solves every case of `cfg` with both reference solvers.
pub fn reference_solutions(cfg: &ExperimentConfig) -> Result<Vec<ReferenceReport>> {
    let topology = match &cfg.instance {
        InstanceSpec::Bandwidth { topology, .. } => Some(load_topology(topology)?),
        InstanceSpec::SyntheticAffine { .. } => None,
    };
    let cases: Vec<Option<SettingParams>> = if topology.is_some() {
        cfg.resolved_settings()?.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    cases
        .iter()
        .map(|p| {
            let inst = case_instance(cfg, topology.as_ref(), p.as_ref())?;
            let x = solve_reference(&inst, cfg.reference_tol)?;
            let k = inst.constants().ok_or_else(|| invalid("reference solve needs L"))?;
            // both shipped families are gradient fields, so 1/L is a safe step
            let y = solve_projected_gradient(&inst, 1.0 / k.lipschitz, cfg.reference_tol)?;
            Ok(ReferenceReport {
                setting_id: p.as_ref().map_or(0, |p| p.id),
                residual: residual_of(&inst, &x)?,
                cross_check: (&x - &y).amax(),
                solution: x.iter().copied().collect(),
            })
        })
        .collect()
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", MANIFEST_FILE)))
}

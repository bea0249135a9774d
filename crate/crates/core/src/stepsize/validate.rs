use serde::Serialize;

use super::DasaPlayerPolicy;
use crate::error::{invalid, Error, Result};

/// Relative slack used when comparing stepsizes computed along different
/// floating-point paths.
const REL_SLACK: f64 = 1e-12;

/// Partial-sum diagnostics for one player's stepsize sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityDiagnostics {
    /// `Σ_{k<K} γ_k`
    pub sum: f64,
    /// `Σ_{k<K/2} γ_k`
    pub half_sum: f64,
    /// `Σ_{k<K} γ_k²`
    pub sum_sq: f64,
    /// `Σ_{K/2<=k<K} γ_k²`
    pub tail_sum_sq: f64,
    /// The partial sum grew by more than 1% between `K/2` and `K`.
    pub diverging: bool,
    /// The squared tail is under 1% of the squared total.
    pub square_summable: bool,
}

impl SummabilityDiagnostics {
    pub fn of(steps: &[f64]) -> Self {
        let half = steps.len() / 2;
        let half_sum: f64 = steps[..half].iter().sum();
        let sum = half_sum + steps[half..].iter().sum::<f64>();
        let head_sq: f64 = steps[..half].iter().map(|g| g * g).sum();
        let tail_sum_sq: f64 = steps[half..].iter().map(|g| g * g).sum();
        let sum_sq = head_sq + tail_sum_sq;
        Self {
            sum,
            half_sum,
            sum_sq,
            tail_sum_sq,
            diverging: sum > 1.01 * half_sum,
            square_summable: tail_sum_sq < 0.01 * sum_sq,
        }
    }
}

/// Outcome of checking stepsize sequences against the envelope, spread and
/// summability conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFamilyReport {
    pub horizon: usize,
    /// `δ_k <= min_i γ_{k,i}` and `Γ_k >= max_i γ_{k,i}` for every `k`.
    pub envelope_holds: bool,
    pub first_envelope_violation: Option<usize>,
    /// `(Γ_k - δ_k)/δ_k <= β` for every `k`.
    pub spread_holds: bool,
    pub max_spread: f64,
    pub players: Vec<SummabilityDiagnostics>,
}

impl StepFamilyReport {
    pub fn summability_holds(&self) -> bool {
        self.players
            .iter()
            .all(|p| p.diverging && p.square_summable)
    }

    pub fn passed(&self) -> bool {
        self.envelope_holds && self.spread_holds && self.summability_holds()
    }
}

/// Checks lower/upper envelopes `deltas`/`uppers`, their spread bound `beta`,
/// and per-player summability heuristics, over the first `horizon` terms.
pub fn validate_step_family(
    deltas: &[f64],
    gammas_per_player: &[Vec<f64>],
    uppers: &[f64],
    beta: f64,
    horizon: usize,
) -> Result<StepFamilyReport> {
    if horizon == 0 || gammas_per_player.is_empty() {
        return Err(Error::Empty("stepsize sequences"));
    }
    let lengths_ok = deltas.len() == horizon
        && uppers.len() == horizon
        && gammas_per_player.iter().all(|g| g.len() == horizon);
    if !lengths_ok {
        return Err(Error::LengthMismatch(format!(
            "all sequences must have length K = {horizon}"
        )));
    }
    if deltas.iter().any(|&d| d <= 0.0) {
        return Err(invalid("lower envelope must be positive"));
    }

    let mut first_violation = None;
    let mut max_spread = f64::NEG_INFINITY;
    for k in 0..horizon {
        let (lo, hi) = gammas_per_player
            .iter()
            .map(|g| g[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
                (lo.min(g), hi.max(g))
            });
        let ok = deltas[k] <= lo * (1.0 + REL_SLACK) && uppers[k] >= hi * (1.0 - REL_SLACK);
        if !ok && first_violation.is_none() {
            first_violation = Some(k);
        }
        max_spread = max_spread.max((uppers[k] - deltas[k]) / deltas[k]);
    }

    Ok(StepFamilyReport {
        horizon,
        envelope_holds: first_violation.is_none(),
        first_envelope_violation: first_violation,
        spread_holds: max_spread <= beta * (1.0 + REL_SLACK) + REL_SLACK,
        max_spread,
        players: gammas_per_player
            .iter()
            .map(|g| SummabilityDiagnostics::of(g))
            .collect(),
    })
}

/// `γ_{k,i} / r_i` for every player. All policies must share `c`, `η`, `L`,
/// `ν`, `D` and have emitted their stepsize for iteration `k`.
pub fn coordination_ratio(policies: &[DasaPlayerPolicy], k: usize) -> Result<Vec<f64>> {
    let first = policies.first().ok_or(Error::Empty("player policies"))?;
    for p in policies {
        if p.c() != first.c() || p.constants() != first.constants() {
            return Err(invalid("players do not share c and the problem constants"));
        }
        if p.last_index() != Some(k) {
            return Err(invalid(format!(
                "player policy is at index {:?}, not {k}",
                p.last_index()
            )));
        }
    }
    Ok(policies
        .iter()
        .map(|p| p.current().expect("advanced past k") / p.r())
        .collect())
}

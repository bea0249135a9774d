//! Numerical certification of the stepsize and error-bound identities.
//!
//! Each check draws random admissible parameters, runs the recursions to
//! `10⁴` terms and reports the worst deviation next to its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::error_model::{restriction_holds, ErrorRecursion};
use crate::stepsize::{
    coordination_ratio, normalized_sequence, scaled_sequence, validate_step_family, AdaptiveMode,
    CentralizedAdaptivePolicy, DasaPlayerPolicy, StepRule,
};
use crate::vi::ProblemConstants;

const HORIZON: usize = 10_000;
const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation (or `0`/`1` for yes/no checks).
    pub worst: f64,
    pub limit: f64,
}

fn check(name: &'static str, worst: f64, limit: f64) -> Check {
    Check {
        name,
        passed: worst <= limit,
        worst,
        limit,
    }
}

fn flag(name: &'static str, ok: bool) -> Check {
    check(name, if ok { 0.0 } else { 1.0 }, 0.0)
}

fn rel_dev(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

fn take(policy: &mut impl StepRule, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|k| policy.next_step(k)).collect()
}

/// Random certified problem: `0 <= β < η/L`, `e_0 < 2ν²/L²`.
fn random_problem(rng: &mut ChaCha8Rng) -> (ProblemConstants, f64, f64) {
    let eta = rng.random_range(0.2..2.0);
    let lipschitz = eta * rng.random_range(1.0..5.0);
    let nu = rng.random_range(0.2..3.0);
    let beta = rng.random_range(0.0..0.95) * eta / lipschitz;
    let e0 = rng.random_range(0.01..0.99) * 2.0 * nu * nu / (lipschitz * lipschitz);
    let k = ProblemConstants::new(eta, lipschitz, nu, None).expect("valid by construction");
    (k, beta, e0)
}

fn normalized_coupling(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let gamma0 = rng.random_range(0.001..0.999) / c;
        let lambda = normalized_sequence(c * gamma0, HORIZON + 1);
        let gamma: Vec<f64> = scaled_sequence(c, gamma0, HORIZON + 1).iter().map(|g| c * g).collect();
        worst = worst.max(rel_dev(&lambda, &gamma, lambda[0]));
    }
    check("lambda_k = c gamma_k", worst, TOL)
}

fn envelope_scaling(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (k, beta, e0) = random_problem(rng);
        let mut lo = CentralizedAdaptivePolicy::new(&k, beta, Some(e0), AdaptiveMode::LowerSequence)?;
        let mut hi = CentralizedAdaptivePolicy::new(&k, beta, Some(e0), AdaptiveMode::UpperSequence)?;
        let lo = take(&mut lo, HORIZON + 1)?;
        let hi = take(&mut hi, HORIZON + 1)?;
        let scaled: Vec<f64> = lo.iter().map(|d| (1.0 + beta) * d).collect();
        worst = worst.max(rel_dev(&hi, &scaled, hi[0]));
    }
    Ok(check("Gamma*_k = (1+beta) delta*_k", worst, TOL))
}

fn closed_form(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (k, beta, e0) = random_problem(rng);
        let rec = ErrorRecursion::new(k.eta, k.lipschitz, k.nu, beta, e0)?;
        let steps = rec.optimal_steps(HORIZON)?;
        let trace = rec.evaluate(&steps)?;
        for (e, d) in trace.iter().zip(&steps) {
            worst = worst.max((e - rec.closed_form(*d)).abs() / e0);
        }
    }
    Ok(check("e_k(delta*) closed form", worst, TOL))
}

fn gap_bound(rng: &mut ChaCha8Rng) -> Result<Check> {
    const K: usize = 50;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (k, beta, e0) = random_problem(rng);
        let rec = ErrorRecursion::new(k.eta, k.lipschitz, k.nu, beta, e0)?;
        let cap = rec.step_cap();
        let steps: Vec<f64> = (0..K).map(|_| cap * rng.random_range(1e-6..=1.0)).collect();
        let gap = rec.minimizer_gap(&steps)?;
        let bound = rec.gap_lower_bound(&steps)?;
        // positive means the bound is violated
        worst = worst.max((bound - gap) / e0);
    }
    Ok(check("e_K - e*_K >= (1+beta)^2 nu^2 (delta - delta*)^2", worst, TOL))
}

fn coordination(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut spread = 0.0f64;
    let mut attain = 0.0f64;
    for _ in 0..10 {
        let eta = rng.random_range(0.5..2.0);
        let lipschitz = eta * rng.random_range(1.0..4.0);
        let nu = rng.random_range(0.5..2.0);
        let d = rng.random_range(0.05..0.95) * std::f64::consts::SQRT_2 * nu / lipschitz;
        let k = ProblemConstants::new(eta, lipschitz, nu, Some(d))?;
        let c = rng.random_range(0.05..0.95) * eta / 2.0;
        let beta = (eta - 2.0 * c) / lipschitz;
        let mut rs = vec![1.0, 1.0 + beta];
        rs.extend((0..3).map(|_| 1.0 + beta * rng.random::<f64>()));
        let mut players: Vec<DasaPlayerPolicy> =
            rs.iter().map(|&r| DasaPlayerPolicy::new(&k, c, r)).collect::<Result<_>>()?;
        let mut lo = CentralizedAdaptivePolicy::new(&k, beta, None, AdaptiveMode::LowerSequence)?;
        let mut hi = CentralizedAdaptivePolicy::new(&k, beta, None, AdaptiveMode::UpperSequence)?;
        for step in 0..=HORIZON {
            let g: Vec<f64> = players.iter_mut().map(|p| p.next_step(step)).collect::<Result<_>>()?;
            let ratios = coordination_ratio(&players, step)?;
            let (min, max) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            spread = spread.max((max - min) / min);
            let (d_k, g_k) = (lo.next_step(step)?, hi.next_step(step)?);
            attain = attain.max((g[0] - d_k).abs() / d_k).max((g[1] - g_k).abs() / g_k);
        }
    }
    Ok(vec![
        check("gamma_k,i / r_i shared across players", spread, TOL),
        check("r = 1 tracks delta*, r = 1 + beta tracks Gamma*", attain, TOL),
    ])
}

fn summability() -> Result<Vec<Check>> {
    const K: usize = 1_000_000;
    let k = ProblemConstants::new(1.0, 2.0, 1.0, Some(0.5))?;
    let c = 0.25;
    let beta = (1.0 - 2.0 * c) / 2.0;
    let mut gammas = Vec::new();
    for r in [1.0, 1.1, 1.0 + beta] {
        gammas.push(take(&mut DasaPlayerPolicy::new(&k, c, r)?, K)?);
    }
    let deltas = take(&mut CentralizedAdaptivePolicy::new(&k, beta, None, AdaptiveMode::LowerSequence)?, K)?;
    let uppers = take(&mut CentralizedAdaptivePolicy::new(&k, beta, None, AdaptiveMode::UpperSequence)?, K)?;
    let dasa = validate_step_family(&deltas, &gammas, &uppers, beta, K)?;

    let p_series: Vec<f64> = (0..K).map(|i| 0.1 / ((i + 1) as f64).powi(2)).collect();
    let fast = validate_step_family(&p_series, std::slice::from_ref(&p_series), &p_series, 0.0, K)?;
    Ok(vec![
        flag("DASA envelope, spread and summability at K = 1e6", dasa.passed()),
        flag("theta/(k+1)^2 fails the divergence heuristic", !fast.players[0].diverging),
    ])
}

fn restriction(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut ok = true;
    for _ in 0..100 {
        let (k, beta, e0) = random_problem(rng);
        let rec = ErrorRecursion::new(k.eta, k.lipschitz, k.nu, beta, e0)?;
        let cap = rec.step_cap();
        ok &= restriction_holds(&rec, cap) && restriction_holds(&rec, cap * rng.random::<f64>());
        ok &= !restriction_holds(&rec, cap * 1.01);
    }
    Ok(flag("quadratic restriction on (0, cap]", ok))
}

/// Runs every check with parameters drawn from `seed`.
pub fn run_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![normalized_coupling(&mut rng), envelope_scaling(&mut rng)?, closed_form(&mut rng)?, gap_bound(&mut rng)?];
    out.extend(coordination(&mut rng)?);
    out.extend(summability()?);
    out.push(restriction(&mut rng)?);
    Ok(out)
}

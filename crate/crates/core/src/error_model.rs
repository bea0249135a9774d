//! The deterministic error-bound recursion
//!
//! ```text
//! e_{k+1} = (1 - (η - βL) δ_k) e_k + (1 + β)² δ_k² ν²
//! ```
//!
//! and checks on the optimality of the adaptive lower envelope `δ*`.
//! Evaluated at `δ*`, the bound has the closed form
//! `e_k = 2(1+β)²ν² / (η-βL) · δ*_k`, and any other admissible stepsize
//! vector does worse by at least `(1+β)²ν²(δ_{k-1} - δ*_{k-1})²`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::stepsize::{AdaptiveMode, CentralizedAdaptivePolicy, StepRule};
use crate::vi::ProblemConstants;

/// Parameters of the error-bound recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRecursion {
    eta: f64,
    lipschitz: f64,
    nu: f64,
    beta: f64,
    e0: f64,
}

impl ErrorRecursion {
    pub fn new(eta: f64, lipschitz: f64, nu: f64, beta: f64, e0: f64) -> Result<Self> {
        ProblemConstants::new(eta, lipschitz, nu, None)?;
        if nu <= 0.0 {
            return Err(invalid("nu must be positive"));
        }
        if !(beta >= 0.0 && beta < eta / lipschitz) {
            return Err(invalid(format!("beta = {beta} outside [0, eta/L)")));
        }
        if !(e0 > 0.0 && e0.is_finite()) {
            return Err(invalid(format!("e0 must be positive, got {e0}")));
        }
        Ok(Self {
            eta,
            lipschitz,
            nu,
            beta,
            e0,
        })
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `η - βL`
    pub fn rate(&self) -> f64 {
        self.eta - self.beta * self.lipschitz
    }

    /// `(1 + β)² ν²`, the noise coefficient.
    pub fn noise_coefficient(&self) -> f64 {
        (1.0 + self.beta).powi(2) * self.nu * self.nu
    }

    /// Upper end of the admissible step interval, `(η-βL) / ((1+β)² L²)`.
    pub fn step_cap(&self) -> f64 {
        self.rate() / ((1.0 + self.beta).powi(2) * self.lipschitz.powi(2))
    }

    /// `e0 < 2ν²/L²`, under which `δ*` is admissible and optimal.
    pub fn certified(&self) -> bool {
        self.e0 < 2.0 * self.nu * self.nu / self.lipschitz.powi(2)
    }

    /// `e_0, ..., e_K` for steps `δ_0, ..., δ_{K-1}`.
    pub fn evaluate(&self, steps: &[f64]) -> Result<Vec<f64>> {
        if let Some(bad) = steps.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(invalid(format!("steps must be positive, got {bad}")));
        }
        let (a, q) = (self.rate(), self.noise_coefficient());
        let mut trace = Vec::with_capacity(steps.len() + 1);
        trace.push(self.e0);
        let mut e = self.e0;
        for &d in steps {
            e = (1.0 - a * d) * e + q * d * d;
            trace.push(e);
        }
        Ok(trace)
    }

    /// `δ*_0, ..., δ*_{K-1}`.
    pub fn optimal_steps(&self, horizon: usize) -> Result<Vec<f64>> {
        let constants = ProblemConstants::new(self.eta, self.lipschitz, self.nu, None)?;
        CentralizedAdaptivePolicy::relaxed(
            &constants,
            self.beta,
            Some(self.e0),
            AdaptiveMode::LowerSequence,
        )?
        .take_steps(horizon)
    }

    /// `e_0, ..., e_K` evaluated at `δ*`.
    pub fn optimal_trace(&self, horizon: usize) -> Result<Vec<f64>> {
        self.evaluate(&self.optimal_steps(horizon)?)
    }

    /// `2(1+β)²ν² / (η-βL) · δ*_k`.
    pub fn closed_form(&self, optimal_step: f64) -> f64 {
        2.0 * self.noise_coefficient() / self.rate() * optimal_step
    }

    fn check_admissible(&self, steps: &[f64]) -> Result<()> {
        if steps.is_empty() {
            return Err(Error::Empty("step sequence"));
        }
        if !self.certified() {
            return Err(invalid("e0 >= 2 nu^2 / L^2: the minimizer property is not claimed"));
        }
        let cap = self.step_cap();
        if let Some((j, d)) = steps
            .iter()
            .enumerate()
            .find(|(_, &d)| !(d > 0.0 && d <= cap))
        {
            return Err(invalid(format!(
                "step {j} = {d} outside the admissible interval (0, {cap}]"
            )));
        }
        Ok(())
    }

    /// `e_K(steps) - e_K(δ*)` for admissible `steps` of length `K`.
    pub fn minimizer_gap(&self, steps: &[f64]) -> Result<f64> {
        self.check_admissible(steps)?;
        let k = steps.len();
        let ours = self.evaluate(steps)?[k];
        let best = self.optimal_trace(k)?[k];
        Ok(ours - best)
    }

    /// `(1+β)²ν²(δ_{K-1} - δ*_{K-1})²`, the guaranteed lower bound on the gap.
    pub fn gap_lower_bound(&self, steps: &[f64]) -> Result<f64> {
        self.check_admissible(steps)?;
        let k = steps.len();
        let star = self.optimal_steps(k)?[k - 1];
        Ok(self.noise_coefficient() * (steps[k - 1] - star).powi(2))
    }
}

/// `1 - 2aδ + (1+β)²L²δ² <= 1 - aδ`, i.e. `δ((1+β)²L²δ - a) <= 0`.
///
/// The right end of the interval is included; the factor is compared with
/// a relative slack of `1e-12` so that `δ = cap` is not lost to rounding.
pub fn restriction_holds(rec: &ErrorRecursion, delta: f64) -> bool {
    let a = rec.rate();
    let c = (1.0 + rec.beta).powi(2) * rec.lipschitz.powi(2);
    delta >= 0.0 && c * delta - a <= 1e-12 * a
}

/// Observed versus predicted errors, iteration by iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub predicted: Vec<f64>,
    pub observed: Vec<f64>,
    /// `observed / predicted`
    pub ratios: Vec<f64>,
    /// Share of iterations with `observed <= predicted`.
    pub fraction_within: f64,
}

impl ComparisonReport {
    /// CSV with columns `k,observed,predicted,ratio`, `k` counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,observed,predicted,ratio\n");
        for (j, ((o, p), r)) in self
            .observed
            .iter()
            .zip(&self.predicted)
            .zip(&self.ratios)
            .enumerate()
        {
            out.push_str(&format!("{},{o:.6e},{p:.6e},{r:.6e}\n", j + 1));
        }
        out
    }
}

/// Compares two aligned sequences.
pub fn compare_sequences(predicted: &[f64], observed: &[f64]) -> Result<ComparisonReport> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted vs {} observed values",
            predicted.len(),
            observed.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::Empty("observed sequence"));
    }
    let ratios: Vec<f64> = observed.iter().zip(predicted).map(|(o, p)| o / p).collect();
    let within = observed
        .iter()
        .zip(predicted)
        .filter(|(o, p)| o <= p)
        .count();
    Ok(ComparisonReport {
        predicted: predicted.to_vec(),
        observed: observed.to_vec(),
        ratios,
        fraction_within: within as f64 / observed.len() as f64,
    })
}

/// Compares an observed MSE trace `observed[j]` (after `j + 1` iterations)
/// with the bound `e_{j+1}(δ*)`.
///
/// The bound holds in expectation, so `observed` should be a mean over
/// replications rather than a single run.
pub fn predicted_vs_observed(rec: &ErrorRecursion, observed: &[f64]) -> Result<ComparisonReport> {
    let predicted = rec.optimal_trace(observed.len())?;
    compare_sequences(&predicted[1..], observed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ErrorRecursion {
        ErrorRecursion::new(1.0, 2.0, 1.0, 0.25, 0.4).unwrap()
    }

    #[test]
    fn one_step_hand_value() {
        let e = worked().evaluate(&[0.064]).unwrap();
        assert!((e[1] - 0.3936).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_first_step() {
        let rec = worked();
        let steps = rec.optimal_steps(2).unwrap();
        let trace = rec.evaluate(&steps).unwrap();
        assert!((steps[1] - 0.062976).abs() < 1e-15);
        assert!((rec.closed_form(steps[1]) - 0.3936).abs() < 1e-15);
        assert!((trace[1] - 0.3936).abs() < 1e-15);
    }

    #[test]
    fn vanishing_steps_keep_e0() {
        let rec = worked();
        let e = rec.evaluate(&[1e-300; 5]).unwrap();
        assert!(e.iter().all(|&v| (v - 0.4).abs() < 1e-15));
        assert!(rec.evaluate(&[0.0]).is_err());
    }

    #[test]
    fn gap_at_optimum_is_zero() {
        let rec = worked();
        let star = rec.optimal_steps(20).unwrap();
        assert_eq!(rec.minimizer_gap(&star).unwrap(), 0.0);
    }

    #[test]
    fn one_step_gap_is_the_quadratic() {
        let rec = worked();
        let d = rec.optimal_steps(1).unwrap()[0] + 0.01;
        assert!(d <= rec.step_cap());
        let gap = rec.minimizer_gap(&[d]).unwrap();
        assert!((gap - 1.5625e-4).abs() < 1e-16);
        assert!((rec.gap_lower_bound(&[d]).unwrap() - gap).abs() < 1e-16);
    }

    #[test]
    fn gap_rejects_inadmissible_steps() {
        let rec = worked();
        assert!(rec.minimizer_gap(&[rec.step_cap() * 1.01]).is_err());
        assert!(rec.minimizer_gap(&[rec.step_cap()]).is_ok());
        assert!(rec.minimizer_gap(&[]).is_err());
        let wide = ErrorRecursion::new(1.0, 2.0, 1.0, 0.25, 0.6).unwrap();
        assert!(wide.minimizer_gap(&[0.01]).is_err());
    }

    #[test]
    fn restriction_on_interval_boundary() {
        let rec = worked();
        let cap = rec.step_cap();
        assert!(restriction_holds(&rec, cap));
        assert!(restriction_holds(&rec, cap * 0.5));
        assert!(!restriction_holds(&rec, cap * 1.001));
    }

    #[test]
    fn identical_sequences_have_unit_ratio() {
        let rec = worked();
        let predicted = rec.optimal_trace(10).unwrap()[1..].to_vec();
        let report = predicted_vs_observed(&rec, &predicted).unwrap();
        assert!(report.ratios.iter().all(|&r| r == 1.0));
        assert_eq!(report.fraction_within, 1.0);
        assert!(compare_sequences(&[1.0], &[1.0, 2.0]).is_err());
    }
}

//! Stepsize rules and checks on their envelope and summability properties.
//!
//! The adaptive rules all share the normalized form
//! `λ_{k+1} = λ_k (1 - λ_k)`: any recursion `s_{k+1} = s_k (1 - a s_k)`
//! satisfies `a s_k = λ_k` when started from `λ_0 = a s_0`. That is why
//! the DASA players stay proportional to their `r_i` forever.

mod policy;
mod validate;

pub use policy::{
    AdaptiveMode, CentralizedAdaptivePolicy, ConstantPolicy, DasaPlayerPolicy, HarmonicPolicy,
    StepRule, SteplengthPolicy,
};
pub use validate::{
    coordination_ratio, validate_step_family, StepFamilyReport, SummabilityDiagnostics,
};

/// The normalized sequence `λ_{k+1} = λ_k (1 - λ_k)`, `len` terms from `λ_0`.
pub fn normalized_sequence(lambda0: f64, len: usize) -> Vec<f64> {
    std::iter::successors(Some(lambda0), |l| Some(l * (1.0 - l)))
        .take(len)
        .collect()
}

/// The scaled recursion `s_{k+1} = s_k (1 - a s_k)`, `len` terms from `s_0`.
pub fn scaled_sequence(a: f64, s0: f64, len: usize) -> Vec<f64> {
    std::iter::successors(Some(s0), |s| Some(s * (1.0 - a * s)))
        .take(len)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::ProblemConstants;

    fn family(rs: &[f64]) -> Vec<DasaPlayerPolicy> {
        let c = ProblemConstants::new(1.0, 2.0, 1.0, Some(0.5)).unwrap();
        rs.iter()
            .map(|&r| DasaPlayerPolicy::new(&c, 0.25, r).unwrap())
            .collect()
    }

    #[test]
    fn coordination_ratio_hand_values() {
        let mut ps = family(&[1.0, 1.25]);
        let gammas: Vec<f64> = ps.iter_mut().map(|p| p.next_step(0).unwrap()).collect();
        assert!((gammas[0] - 0.04).abs() < 1e-16 && (gammas[1] - 0.05).abs() < 1e-16);
        let ratios = coordination_ratio(&ps, 0).unwrap();
        assert!(ratios.iter().all(|r| (r - 0.04).abs() < 1e-16));
    }

    #[test]
    fn coordination_ratio_single_player_and_errors() {
        let mut ps = family(&[1.1]);
        assert!(coordination_ratio(&ps, 0).is_err());
        ps[0].next_step(0).unwrap();
        assert_eq!(coordination_ratio(&ps, 0).unwrap().len(), 1);
        assert!(coordination_ratio(&[], 0).is_err());

        let other = ProblemConstants::new(1.0, 2.0, 1.0, Some(0.4)).unwrap();
        let mut mixed = family(&[1.0]);
        mixed.push(DasaPlayerPolicy::new(&other, 0.25, 1.0).unwrap());
        for p in &mut mixed {
            p.next_step(0).unwrap();
        }
        assert!(coordination_ratio(&mixed, 0).is_err());
    }

    #[test]
    fn harmonic_identical_players_pass() {
        let g = HarmonicPolicy::new(1.0).unwrap().take_steps(10_000).unwrap();
        let report = validate_step_family(&g, &[g.clone(), g.clone()], &g, 0.0, 10_000).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn inverse_square_fails_divergence() {
        let g: Vec<f64> = (0..10_000).map(|k| 1.0 / ((k + 1) as f64).powi(2)).collect();
        let report = validate_step_family(&g, std::slice::from_ref(&g), &g, 0.0, 10_000).unwrap();
        assert!(!report.players[0].diverging);
        assert!(!report.passed());
    }

    #[test]
    fn validation_input_errors() {
        assert!(validate_step_family(&[], &[vec![]], &[], 0.0, 0).is_err());
        assert!(matches!(
            validate_step_family(&[1.0], &[vec![1.0, 1.0]], &[1.0], 0.0, 1),
            Err(crate::Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn envelope_violation_is_located() {
        let g = vec![1.0, 0.5, 0.25];
        let lower = vec![1.0, 0.6, 0.2];
        let report = validate_step_family(&lower, std::slice::from_ref(&g), &g, 0.0, 3).unwrap();
        assert_eq!(report.first_envelope_violation, Some(1));
    }
}

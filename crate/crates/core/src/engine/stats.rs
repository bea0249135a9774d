use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ReplicationResult;
use crate::error::{invalid, Error, Result};

/// Mean squared error across replications with a two-sided 90% Student-t band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseTrace {
    pub replications: usize,
    pub k: Vec<usize>,
    pub mse: Vec<f64>,
    pub stddev: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Mean of `||x_0 - x*||²`.
    pub initial_mse: f64,
}

impl MseTrace {
    /// `(mse, ci_low, ci_high)` at the last recorded iteration.
    pub fn last(&self) -> (f64, f64, f64) {
        let i = self.mse.len() - 1;
        (self.mse[i], self.ci_low[i], self.ci_high[i])
    }
}

/// Upper `p` quantile of Student's t with `df` degrees of freedom.
pub fn student_t_quantile(p: f64, df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(p)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-iteration MSE and `mean ± t_{0.95, R-1} · sd / √R`.
///
/// With a single replication the band collapses to the mean.
pub fn reduce_mse(results: &[ReplicationResult]) -> Result<MseTrace> {
    let first = results.first().ok_or(Error::Empty("replication results"))?;
    let len = first.trace.len();
    if results.iter().any(|r| r.trace.len() != len) {
        return Err(Error::LengthMismatch("replication traces differ in length".into()));
    }
    let reps = results.len();
    let half_width_factor = if reps > 1 {
        student_t_quantile(0.95, reps - 1) / (reps as f64).sqrt()
    } else {
        0.0
    };
    let missing = || invalid("MSE needs a reference solution on the instance");

    let initial: Vec<f64> = results
        .iter()
        .map(|r| r.initial_sq_error.ok_or_else(missing))
        .collect::<Result<_>>()?;

    let mut out = MseTrace {
        replications: reps,
        k: first.trace.iter().map(|r| r.k).collect(),
        mse: Vec::with_capacity(len),
        stddev: Vec::with_capacity(len),
        ci_low: Vec::with_capacity(len),
        ci_high: Vec::with_capacity(len),
        initial_mse: mean_sd(&initial).0,
    };
    let mut column = vec![0.0; reps];
    for i in 0..len {
        for (c, r) in column.iter_mut().zip(results) {
            if r.trace[i].k != out.k[i] {
                return Err(Error::LengthMismatch("replication traces are misaligned".into()));
            }
            *c = r.trace[i].sq_error.ok_or_else(missing)?;
        }
        let (mean, sd) = mean_sd(&column);
        let half = half_width_factor * sd;
        out.mse.push(mean);
        out.stddev.push(sd);
        out.ci_low.push(mean - half);
        out.ci_high.push(mean + half);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TraceRecord;
    use crate::vi::DecisionVector;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn result(values: &[f64]) -> ReplicationResult {
        ReplicationResult {
            seed: 0,
            initial_sq_error: Some(1.0),
            trace: values
                .iter()
                .enumerate()
                .map(|(i, &v)| TraceRecord {
                    k: i + 1,
                    sq_error: Some(v),
                    residual: None,
                })
                .collect(),
            final_point: DecisionVector::single(dvector![0.0]).unwrap(),
        }
    }

    #[test]
    fn t_quantiles() {
        assert!((student_t_quantile(0.95, 1) - 6.313751514675).abs() < 1e-9);
        assert!((student_t_quantile(0.95, 24) - 1.710882079909).abs() < 1e-9);
    }

    #[test]
    fn identical_traces_have_zero_width() {
        let t = reduce_mse(&[result(&[1.0, 2.0]), result(&[1.0, 2.0])]).unwrap();
        assert_eq!(t.ci_low, t.ci_high);
        assert_eq!(t.mse, vec![1.0, 2.0]);
    }

    #[test]
    fn two_value_hand_example() {
        let t = reduce_mse(&[result(&[1.0]), result(&[3.0])]).unwrap();
        assert_eq!(t.mse[0], 2.0);
        assert!((t.stddev[0] - 2f64.sqrt()).abs() < 1e-15);
        let half = student_t_quantile(0.95, 1);
        assert!((t.ci_high[0] - (2.0 + half)).abs() < 1e-12);
        assert!((t.ci_low[0] - (2.0 - half)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(reduce_mse(&[]).is_err());
        assert!(matches!(
            reduce_mse(&[result(&[1.0]), result(&[1.0, 2.0])]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn ninety_percent_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let mut covered = 0;
        for _ in 0..trials {
            // uniform on [-√3, √3] has unit variance and mean 0
            let reps: Vec<_> = (0..25)
                .map(|_| result(&[3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0)]))
                .collect();
            let t = reduce_mse(&reps).unwrap();
            if t.ci_low[0] <= 0.0 && 0.0 <= t.ci_high[0] {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((0.87..=0.93).contains(&rate), "coverage {rate}");
    }
}

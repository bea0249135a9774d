//! The distributed stochastic approximation iteration
//!
//! ```text
//! x_{k+1,i} = Π_{X_i}(x_{k,i} - γ_{k,i} F̂_i(x_k, ξ_k))
//! ```
//!
//! with one stepsize policy per player, and a seeded replication runner.

mod stats;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::stepsize::{StepRule, SteplengthPolicy};
use crate::vi::{block_ranges, natural_residual, DecisionVector, GameInstance};

pub use stats::{reduce_mse, student_t_quantile, MseTrace};

/// Where the iteration starts. The point is projected onto the feasible set.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialPoint {
    #[default]
    Zero,
    /// A feasible point drawn from a stream independent of the noise.
    RandomFeasible,
    Given(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub iterations: usize,
    /// One policy per player, in block order.
    pub policies: Vec<SteplengthPolicy>,
    pub initial_point: InitialPoint,
    pub seed: u64,
    /// Record every `record_every`-th iterate.
    pub record_every: usize,
    /// Also record the natural residual (costs one extra evaluation and projection).
    pub record_residual: bool,
}

impl SolverConfig {
    pub fn new(iterations: usize, policies: Vec<SteplengthPolicy>, seed: u64) -> Self {
        Self {
            iterations,
            policies,
            initial_point: InitialPoint::Zero,
            seed,
            record_every: 1,
            record_residual: true,
        }
    }
}

/// One recorded iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Number of completed iterations.
    pub k: usize,
    /// `||x_k - x*||²` when the instance carries a reference solution.
    pub sq_error: Option<f64>,
    /// `||x_k - Π_X(x_k - F(x_k))||`, when recorded.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub seed: u64,
    /// `||x_0 - x*||²`
    pub initial_sq_error: Option<f64>,
    pub trace: Vec<TraceRecord>,
    pub final_point: DecisionVector,
}

fn initial_point(instance: &GameInstance, config: &SolverConfig) -> Result<DVector<f64>> {
    let n = instance.dim();
    let raw = match &config.initial_point {
        InitialPoint::Zero => DVector::zeros(n),
        InitialPoint::RandomFeasible => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(1);
            instance.set().sample_point(&mut rng)?
        }
        InitialPoint::Given(x) => x.clone(),
    };
    instance.set().project(&raw)
}

/// Runs one replication. Deterministic in `(instance, config)`.
///
/// `ξ_k` is drawn once per iteration and shared by all players. Box-type
/// sets are projected block by block; a coupled polyhedron is projected
/// jointly after every player has taken its own step.
pub fn run_sa(instance: &GameInstance, config: &SolverConfig) -> Result<ReplicationResult> {
    if config.iterations == 0 {
        return Err(invalid("iterations must be >= 1"));
    }
    if config.record_every == 0 {
        return Err(invalid("record_every must be >= 1"));
    }
    if config.policies.len() != instance.num_players() {
        return Err(Error::LengthMismatch(format!(
            "{} policies for {} players",
            config.policies.len(),
            instance.num_players()
        )));
    }
    let set = instance.set();
    let map = instance.mapping();
    let ranges: Vec<_> = block_ranges(instance.block_sizes()).collect();
    let mut policies = config.policies.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut x = initial_point(instance, config)?;
    let sq_error = |x: &DVector<f64>| instance.solution().map(|s| (x - s).norm_squared());
    let initial_sq_error = sq_error(&x);

    let mut trace = Vec::with_capacity(config.iterations / config.record_every);
    let mut y = DVector::zeros(x.len());
    for k in 0..config.iterations {
        let noisy = map.sample(&x, &mut rng);
        for (policy, r) in policies.iter_mut().zip(&ranges) {
            let gamma = policy.next_step(k)?;
            for j in r.clone() {
                y[j] = x[j] - gamma * noisy[j];
            }
        }
        x = set.project(&y)?;

        if (k + 1) % config.record_every == 0 {
            let residual = if config.record_residual {
                let d = instance.decision(x.clone())?;
                Some(natural_residual(set, map, &d, 1.0)?)
            } else {
                None
            };
            trace.push(TraceRecord {
                k: k + 1,
                sq_error: sq_error(&x),
                residual,
            });
        }
    }

    Ok(ReplicationResult {
        seed: config.seed,
        initial_sq_error,
        trace,
        final_point: instance.decision(x)?,
    })
}

/// Runs `reps` replications with seeds `base_seed, base_seed + 1, ...`,
/// in parallel. Results are ordered by seed offset.
pub fn run_replications(
    instance: &GameInstance,
    config: &SolverConfig,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<ReplicationResult>> {
    if reps == 0 {
        return Err(invalid("replications must be >= 1"));
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SolverConfig {
                seed: base_seed.wrapping_add(i),
                ..config.clone()
            };
            run_sa(instance, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepsize::{ConstantPolicy, HarmonicPolicy};
    use crate::vi::{AffineMapping, BoxSet, FeasibleSet};
    use nalgebra::{dvector, DMatrix};
    use std::sync::Arc;

    fn shifted_identity(noise: f64) -> GameInstance {
        let map = AffineMapping::new(DMatrix::identity(1, 1), dvector![-1.0])
            .unwrap()
            .with_uniform_noise(dvector![noise])
            .unwrap();
        GameInstance::new(
            "shifted-identity",
            Arc::new(map),
            FeasibleSet::Box(BoxSet::uniform(1, 0.0, 2.0).unwrap()),
            vec![1],
        )
        .unwrap()
        .with_solution(dvector![1.0])
        .unwrap()
    }

    fn constant(gamma: f64, k: usize) -> SolverConfig {
        SolverConfig {
            initial_point: InitialPoint::Given(dvector![2.0]),
            ..SolverConfig::new(k, vec![ConstantPolicy::new(gamma).unwrap().into()], 0)
        }
    }

    #[test]
    fn hand_iteration_noise_free() {
        let res = run_sa(&shifted_identity(0.0), &constant(0.5, 30)).unwrap();
        assert_eq!(res.initial_sq_error, Some(1.0));
        assert_eq!(res.trace[0].sq_error, Some(0.25)); // x_1 = 1.5
        assert_eq!(res.trace[1].sq_error, Some(0.0625)); // x_2 = 1.25
        assert!((res.final_point.values()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_step_is_a_fixed_point() {
        let res = run_sa(&shifted_identity(0.5), &constant(0.0, 10)).unwrap();
        assert_eq!(res.final_point.values()[0], 2.0);
        assert!(res.trace.iter().all(|r| r.sq_error == Some(1.0)));
    }

    #[test]
    fn same_seed_same_trace() {
        let inst = shifted_identity(0.5);
        let cfg = SolverConfig::new(200, vec![HarmonicPolicy::new(1.0).unwrap().into()], 42);
        assert_eq!(run_sa(&inst, &cfg).unwrap(), run_sa(&inst, &cfg).unwrap());
    }

    #[test]
    fn replications_are_ordered_by_seed() {
        let inst = shifted_identity(0.5);
        let cfg = SolverConfig::new(50, vec![HarmonicPolicy::new(1.0).unwrap().into()], 0);
        let reps = run_replications(&inst, &cfg, 6, 100).unwrap();
        let seeds: Vec<u64> = reps.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (100..106).collect::<Vec<_>>());
        let single = run_sa(&inst, &SolverConfig { seed: 103, ..cfg.clone() }).unwrap();
        assert_eq!(reps[3], single);
        assert!(run_replications(&inst, &cfg, 0, 0).is_err());
    }

    #[test]
    fn noise_free_replications_coincide() {
        let inst = shifted_identity(0.0);
        let cfg = SolverConfig::new(50, vec![HarmonicPolicy::new(1.0).unwrap().into()], 0);
        let reps = run_replications(&inst, &cfg, 25, 9).unwrap();
        assert!(reps.windows(2).all(|w| w[0].trace == w[1].trace));
    }

    #[test]
    fn config_errors() {
        let inst = shifted_identity(0.0);
        assert!(run_sa(&inst, &constant(0.1, 0)).is_err());
        let mut cfg = constant(0.1, 5);
        cfg.record_every = 0;
        assert!(run_sa(&inst, &cfg).is_err());
        cfg.record_every = 1;
        cfg.policies.push(ConstantPolicy::new(0.1).unwrap().into());
        assert!(matches!(run_sa(&inst, &cfg), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn record_stride() {
        let inst = shifted_identity(0.0);
        let mut cfg = constant(0.1, 10);
        cfg.record_every = 3;
        let ks: Vec<usize> = run_sa(&inst, &cfg).unwrap().trace.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![3, 6, 9]);
    }
}

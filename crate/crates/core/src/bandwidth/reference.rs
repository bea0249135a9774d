use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::vi::GameInstance;

/// Iteration cap of the deterministic reference solvers.
pub const REFERENCE_ITERATION_CAP: usize = 1_000_000;

fn lipschitz(instance: &GameInstance) -> Result<f64> {
    instance
        .constants()
        .map(|c| c.lipschitz)
        .ok_or_else(|| invalid("reference solve needs the instance's Lipschitz constant"))
}

/// Solves VI(X, F) for the deterministic mapping with the extragradient
/// method (stepsize `1/(2L)`), stopping once the natural residual with
/// `γ = 1/L` is at most `tol`.
pub fn solve_reference(instance: &GameInstance, tol: f64) -> Result<DVector<f64>> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let l = lipschitz(instance)?;
    let (set, map) = (instance.set(), instance.mapping());
    let step = 0.5 / l;
    let mut x = set.project(&DVector::zeros(instance.dim()))?;
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_ITERATION_CAP {
        let fx = map.evaluate(&x);
        residual = (&x - set.project(&(&x - &fx / l))?).norm();
        if residual <= tol {
            return Ok(x);
        }
        let y = set.project(&(&x - &fx * step))?;
        x = set.project(&(&x - map.evaluate(&y) * step))?;
    }
    Err(Error::IterationCap {
        cap: REFERENCE_ITERATION_CAP,
        residual,
    })
}

/// Plain projected iteration `x ← Π_X(x - s F(x))`, stopping once
/// `||x - Π_X(x - F(x)/L)|| <= tol`.
///
/// Converges for `s = 1/L` when `F` is the gradient of a convex function
/// (as in the bandwidth game) and for `s <= η/L²` for any strongly
/// monotone `F`.
pub fn solve_projected_gradient(instance: &GameInstance, step: f64, tol: f64) -> Result<DVector<f64>> {
    if !(step > 0.0 && tol > 0.0) {
        return Err(invalid("step and tolerance must be positive"));
    }
    let l = lipschitz(instance)?;
    let (set, map) = (instance.set(), instance.mapping());
    let mut x = set.project(&DVector::zeros(instance.dim()))?;
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_ITERATION_CAP {
        let fx = map.evaluate(&x);
        residual = (&x - set.project(&(&x - &fx / l))?).norm();
        if residual <= tol {
            return Ok(x);
        }
        x = set.project(&(&x - fx * step))?;
    }
    Err(Error::IterationCap {
        cap: REFERENCE_ITERATION_CAP,
        residual,
    })
}

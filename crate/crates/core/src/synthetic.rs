//! A synthetic strongly monotone affine instance with a known solution.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::vi::{AffineMapping, BoxSet, FeasibleSet, GameInstance, ProblemConstants};

/// `F(x) = B (x - x*)` on `[0, 1]^n`, one player per coordinate.
///
/// `B` is diagonal with entries evenly spaced on `[η, L]`, so the strong
/// monotonicity and Lipschitz constants are exactly `η` and `L`. The noise
/// is uniform per coordinate with `E||w||² = ν²`. The solution
/// `x*_j = 0.2 + 0.6 j/(n-1)` lies in the interior.
pub fn affine_instance(n: usize, eta: f64, lipschitz: f64, nu: f64) -> Result<GameInstance> {
    if n == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(invalid("nu must be >= 0"));
    }
    let spread = |lo: f64, hi: f64, j: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * j as f64 / (n - 1) as f64
        }
    };
    let diag = DVector::from_fn(n, |j, _| spread(eta, lipschitz, j));
    let solution = DVector::from_fn(n, |j, _| spread(0.2, 0.8, j));
    let matrix = DMatrix::from_diagonal(&diag);
    let offset = -(&matrix * &solution);
    // n h^2 / 3 = nu^2
    let halfwidth = DVector::from_element(n, nu * (3.0 / n as f64).sqrt());
    let map = AffineMapping::new(matrix, offset)?.with_uniform_noise(halfwidth)?;
    let set = FeasibleSet::Box(BoxSet::uniform(n, 0.0, 1.0)?);
    let diameter = set.diameter();
    GameInstance::new("synthetic-affine", Arc::new(map), set, vec![1; n])?
        .with_constants(ProblemConstants::new(eta, lipschitz, nu, diameter)?)?
        .with_solution(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::{estimate_constants, natural_residual, DecisionVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants_and_solution() {
        let inst = affine_instance(10, 1.0, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let est = estimate_constants(inst.mapping(), inst.set(), 200, &mut rng).unwrap();
        let c = inst.constants().unwrap();
        assert!(est.eta >= c.eta - 1e-12 && est.lipschitz <= c.lipschitz + 1e-12);
        assert!((est.nu - 1.0).abs() < 0.1);
        let x = DecisionVector::from_flat(inst.solution().unwrap().clone(), inst.block_sizes()).unwrap();
        assert!(natural_residual(inst.set(), inst.mapping(), &x, 1.0).unwrap() < 1e-15);
    }
}

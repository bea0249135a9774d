use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{FeasibleSet, Mapping};
use crate::error::{invalid, Error, Result};

/// Problem constants: strong monotonicity modulus, Lipschitz constant,
/// noise second-moment bound and set diameter (bounded sets only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub eta: f64,
    pub lipschitz: f64,
    pub nu: f64,
    pub diameter: Option<f64>,
}

impl ProblemConstants {
    pub fn new(eta: f64, lipschitz: f64, nu: f64, diameter: Option<f64>) -> Result<Self> {
        let c = Self {
            eta,
            lipschitz,
            nu,
            diameter,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks `0 < eta <= L`, `nu >= 0` and finiteness. `nu = 0` is allowed
    /// for noise-free instances; policies that divide by it reject it.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.lipschitz, self.nu]
            .iter()
            .chain(self.diameter.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("problem constants"));
        }
        if self.eta <= 0.0 || self.lipschitz <= 0.0 {
            return Err(invalid(format!(
                "need eta > 0 and L > 0, got eta = {}, L = {}",
                self.eta, self.lipschitz
            )));
        }
        if self.eta > self.lipschitz * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "eta = {} exceeds L = {}",
                self.eta, self.lipschitz
            )));
        }
        if self.nu < 0.0 || self.diameter.is_some_and(|d| d <= 0.0) {
            return Err(invalid("nu must be >= 0 and D > 0"));
        }
        Ok(())
    }

    pub fn require_diameter(&self) -> Result<f64> {
        self.diameter
            .ok_or(Error::UnboundedSet("diameter D is required"))
    }
}

/// Empirical constants from `samples` random feasible points.
///
/// `L̂` and `η̂` are the extreme ratios over all sampled pairs, `ν̂²` is the
/// largest per-point mean of `||F̂ - F||^2` over `samples` noise draws, and
/// `D̂` the largest pairwise distance. The returned value is not validated:
/// a non-monotone map yields `η̂ <= 0`, which callers should inspect.
pub fn estimate_constants(
    map: &dyn Mapping,
    set: &FeasibleSet,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<ProblemConstants> {
    if samples < 2 {
        return Err(invalid("estimate_constants needs at least 2 samples"));
    }
    if set.diameter().is_none() {
        return Err(Error::UnboundedSet("diameter undefined for an unbounded set"));
    }
    if map.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            actual: map.dim(),
        });
    }
    let points: Vec<DVector<f64>> = (0..samples)
        .map(|_| set.sample_point(rng))
        .collect::<Result<_>>()?;
    let values: Vec<DVector<f64>> = points.iter().map(|p| map.evaluate(p)).collect();

    let mut eta = f64::INFINITY;
    let mut lip = 0.0f64;
    let mut diam = 0.0f64;
    for i in 0..samples {
        for j in (i + 1)..samples {
            let dx = &points[i] - &points[j];
            let d2 = dx.norm_squared();
            if d2 == 0.0 {
                continue;
            }
            let df = &values[i] - &values[j];
            lip = lip.max(df.norm() / d2.sqrt());
            eta = eta.min(dx.dot(&df) / d2);
            diam = diam.max(d2.sqrt());
        }
    }
    if !eta.is_finite() {
        return Err(invalid("all sampled points coincide"));
    }

    let mut nu_sq = 0.0f64;
    for (p, f) in points.iter().zip(&values) {
        let moment = (0..samples)
            .map(|_| (map.sample(p, rng) - f).norm_squared())
            .sum::<f64>()
            / samples as f64;
        nu_sq = nu_sq.max(moment);
    }

    Ok(ProblemConstants {
        eta,
        lipschitz: lip,
        nu: nu_sq.sqrt(),
        diameter: Some(diam),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::{AffineMapping, BoxSet};
    use nalgebra::{dmatrix, DMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_multiple_of_identity_is_exact() {
        let map = AffineMapping::new(DMatrix::identity(3, 3) * 2.5, DVector::zeros(3)).unwrap();
        let set = FeasibleSet::Box(BoxSet::uniform(3, -1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = estimate_constants(&map, &set, 20, &mut rng).unwrap();
        assert!((c.eta - 2.5).abs() < 1e-12);
        assert!((c.lipschitz - 2.5).abs() < 1e-12);
        assert_eq!(c.nu, 0.0);
    }

    #[test]
    fn rotation_dominated_matrix_approaches_analytic_values() {
        // symmetric part 2I, B^T B = 5I
        let map = AffineMapping::new(dmatrix![2.0, 1.0; -1.0, 2.0], DVector::zeros(2)).unwrap();
        let set = FeasibleSet::Box(BoxSet::uniform(2, 0.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = estimate_constants(&map, &set, 60, &mut rng).unwrap();
        assert!((c.eta - 2.0).abs() < 1e-12);
        assert!((c.lipschitz - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unbounded_set_rejected() {
        let map = AffineMapping::new(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        let set = FeasibleSet::Box(
            BoxSet::new(DVector::zeros(1), DVector::from_element(1, f64::INFINITY)).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            estimate_constants(&map, &set, 5, &mut rng),
            Err(Error::UnboundedSet(_))
        ));
    }

    #[test]
    fn constants_validation() {
        assert!(ProblemConstants::new(1.0, 2.0, 1.0, Some(0.5)).is_ok());
        assert!(ProblemConstants::new(3.0, 2.0, 1.0, None).is_err());
        assert!(ProblemConstants::new(0.0, 2.0, 1.0, None).is_err());
        assert!(ProblemConstants::new(1.0, f64::NAN, 1.0, None).is_err());
    }
}

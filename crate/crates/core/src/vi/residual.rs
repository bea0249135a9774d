use super::{DecisionVector, FeasibleSet, Mapping};
use crate::error::{invalid, Error, Result};

/// Natural residual `||x - Π_X(x - γ F(x))||`; zero exactly at solutions of VI(X, F).
pub fn natural_residual(
    set: &FeasibleSet,
    map: &dyn Mapping,
    x: &DecisionVector,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("residual stepsize must be > 0, got {gamma}")));
    }
    if x.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            actual: x.dim(),
        });
    }
    let v = x.values();
    let step = v - map.evaluate(v) * gamma;
    Ok((v - set.project(&step)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::{AffineMapping, BoxSet};
    use nalgebra::{dvector, DMatrix, DVector};

    fn shifted_identity() -> (FeasibleSet, AffineMapping) {
        // F(x) = x - 1 on [0, 2]
        let map = AffineMapping::new(DMatrix::identity(1, 1), DVector::from_element(1, -1.0))
            .unwrap();
        (FeasibleSet::Box(BoxSet::uniform(1, 0.0, 2.0).unwrap()), map)
    }

    #[test]
    fn zero_at_root() {
        let (set, map) = shifted_identity();
        let x = DecisionVector::single(dvector![1.0]).unwrap();
        assert_eq!(natural_residual(&set, &map, &x, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn hand_value_at_boundary() {
        let (set, map) = shifted_identity();
        let x = DecisionVector::single(dvector![2.0]).unwrap();
        assert!((natural_residual(&set, &map, &x, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let (set, map) = shifted_identity();
        let x = DecisionVector::single(dvector![2.0]).unwrap();
        assert!(natural_residual(&set, &map, &x, 0.0).is_err());
    }
}

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use super::decision::DecisionVector;
use crate::error::{Error, Result};

/// A VI mapping `F` together with its stochastic oracle `F̂(x, ξ)`.
///
/// Implementations must satisfy `E[F̂(x, ξ)] = F(x)` for every feasible `x`,
/// and `evaluate` must be deterministic. `sample` draws one `ξ` per call; the
/// whole stacked vector is computed from that single draw.
pub trait Mapping: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &DVector<f64>) -> DVector<f64>;

    fn sample(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64>;
}

fn check_dim(map: &dyn Mapping, x: &DecisionVector) -> Result<()> {
    if x.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// `F(x)`, with dimension checking.
pub fn evaluate_mapping(map: &dyn Mapping, x: &DecisionVector) -> Result<DVector<f64>> {
    check_dim(map, x)?;
    Ok(map.evaluate(x.values()))
}

/// One draw of `F̂(x, ξ)`, with dimension checking.
pub fn sample_noisy_mapping(
    map: &dyn Mapping,
    x: &DecisionVector,
    rng: &mut dyn RngCore,
) -> Result<DVector<f64>> {
    check_dim(map, x)?;
    Ok(map.sample(x.values(), rng))
}

/// `F(x) = M x + q` with additive noise uniform on `[-h_j, h_j]` per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMapping {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    noise_halfwidth: DVector<f64>,
}

impl AffineMapping {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: offset.len(),
            });
        }
        let n = offset.len();
        Ok(Self {
            matrix,
            offset,
            noise_halfwidth: DVector::zeros(n),
        })
    }

    pub fn with_uniform_noise(mut self, halfwidth: DVector<f64>) -> Result<Self> {
        if halfwidth.len() != self.offset.len() {
            return Err(Error::DimensionMismatch {
                expected: self.offset.len(),
                actual: halfwidth.len(),
            });
        }
        if halfwidth.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::InvalidParameter("noise half-width must be >= 0".into()));
        }
        self.noise_halfwidth = halfwidth;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `E||w||^2 = sum_j h_j^2 / 3` for the uniform noise.
    pub fn noise_second_moment(&self) -> f64 {
        self.noise_halfwidth.norm_squared() / 3.0
    }
}

impl Mapping for AffineMapping {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    fn sample(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let mut f = self.evaluate(x);
        for (fj, &h) in f.iter_mut().zip(self.noise_halfwidth.iter()) {
            if h > 0.0 {
                *fj += h * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        f
    }
}

use std::ops::Range;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A stacked strategy profile `x = (x_1; ...; x_N)` with its per-player block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    values: DVector<f64>,
    block_sizes: Vec<usize>,
}

impl DecisionVector {
    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let block_sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let values = DVector::from_iterator(
            block_sizes.iter().sum(),
            blocks.into_iter().flatten(),
        );
        Self::from_flat(values, &block_sizes)
    }

    pub fn from_flat(values: DVector<f64>, block_sizes: &[usize]) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::Empty("decision vector needs at least one player"));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("player block of size zero".into()));
        }
        let total: usize = block_sizes.iter().sum();
        if total != values.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decision vector"));
        }
        Ok(Self {
            values,
            block_sizes: block_sizes.to_vec(),
        })
    }

    /// A single-player vector.
    pub fn single(values: DVector<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_flat(values, &[n])
    }

    pub fn zeros(block_sizes: &[usize]) -> Result<Self> {
        Self::from_flat(DVector::zeros(block_sizes.iter().sum()), block_sizes)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn num_players(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn block_range(&self, player: usize) -> Range<usize> {
        block_ranges(&self.block_sizes)
            .nth(player)
            .expect("player index out of range")
    }

    pub fn block(&self, player: usize) -> &[f64] {
        &self.values.as_slice()[self.block_range(player)]
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }
}

/// Index ranges of consecutive blocks with the given sizes.
pub fn block_ranges(sizes: &[usize]) -> impl Iterator<Item = Range<usize>> + '_ {
    sizes.iter().scan(0usize, |start, &len| {
        let r = *start..*start + len;
        *start += len;
        Some(r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_round_trip() {
        let x = DecisionVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
        assert_eq!(x.dim(), 3);
        assert_eq!(x.num_players(), 2);
        assert_eq!(x.block(0), &[1.0, 2.0]);
        assert_eq!(x.block(1), &[3.0]);
        assert_eq!(x.block_range(1), 2..3);
    }

    #[test]
    fn rejects_nan_and_empty() {
        assert!(matches!(
            DecisionVector::from_blocks(vec![vec![f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
        assert!(DecisionVector::from_blocks(vec![]).is_err());
        assert!(DecisionVector::from_flat(DVector::zeros(3), &[1, 1]).is_err());
    }
}

use std::sync::Arc;

use nalgebra::DVector;

use super::{DecisionVector, FeasibleSet, Mapping, ProblemConstants};
use crate::error::{Error, Result};

/// A stochastic VI instance: mapping, feasible set, player layout and,
/// when known, its constants and reference solution.
///
/// Immutable once built, so replication threads can share it.
#[derive(Debug, Clone)]
pub struct GameInstance {
    name: String,
    mapping: Arc<dyn Mapping>,
    set: FeasibleSet,
    block_sizes: Vec<usize>,
    constants: Option<ProblemConstants>,
    solution: Option<DVector<f64>>,
}

impl GameInstance {
    pub fn new(
        name: impl Into<String>,
        mapping: Arc<dyn Mapping>,
        set: FeasibleSet,
        block_sizes: Vec<usize>,
    ) -> Result<Self> {
        let n: usize = block_sizes.iter().sum();
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("bad player block layout".into()));
        }
        if mapping.dim() != n || set.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: if mapping.dim() != n { mapping.dim() } else { set.dim() },
            });
        }
        if let FeasibleSet::ProductOfBoxes(boxes) = &set {
            let sizes: Vec<usize> = boxes.iter().map(|b| b.dim()).collect();
            if sizes != block_sizes {
                return Err(Error::InvalidParameter(
                    "product-of-boxes layout differs from the player blocks".into(),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            mapping,
            set,
            block_sizes,
            constants: None,
            solution: None,
        })
    }

    pub fn with_constants(mut self, constants: ProblemConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = Some(constants);
        Ok(self)
    }

    pub fn with_solution(mut self, solution: DVector<f64>) -> Result<Self> {
        if solution.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: solution.len(),
            });
        }
        self.solution = Some(solution);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mapping(&self) -> &dyn Mapping {
        self.mapping.as_ref()
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_players(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn constants(&self) -> Option<&ProblemConstants> {
        self.constants.as_ref()
    }

    pub fn solution(&self) -> Option<&DVector<f64>> {
        self.solution.as_ref()
    }

    pub fn decision(&self, values: DVector<f64>) -> Result<DecisionVector> {
        DecisionVector::from_flat(values, &self.block_sizes)
    }
}

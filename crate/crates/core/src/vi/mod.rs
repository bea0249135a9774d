//! Decision vectors, feasible sets, VI mappings, projection and residuals.

mod constants;
mod decision;
mod instance;
mod mapping;
mod residual;
mod set;

pub use constants::{estimate_constants, ProblemConstants};
pub use decision::{block_ranges, DecisionVector};
pub use instance::GameInstance;
pub use mapping::{evaluate_mapping, sample_noisy_mapping, AffineMapping, Mapping};
pub use residual::natural_residual;
pub use set::{BoxSet, FeasibleSet, Polyhedron, DYKSTRA_TOL};

/// Euclidean projection of `point` onto `set`.
pub fn project(
    set: &FeasibleSet,
    point: &nalgebra::DVector<f64>,
) -> crate::Result<nalgebra::DVector<f64>> {
    set.project(point)
}

//! The stochastic bandwidth-sharing game.
//!
//! User `i` sends flow `x_i(r)` on each of its routes and pays
//! `-Σ_r ξ_i(r) log(1 + x_i(r))`; all users share the congestion cost
//! `m_c ||A x||²` and the link capacities `A x <= m_b b`, `x >= 0`. The
//! resulting mapping is
//!
//! ```text
//! F(x) = -(ξ̄(r) / (1 + x(r)))_r + 2 m_c AᵀA x
//! ```
//!
//! with `ξ(r)` uniform around `ξ̄(r) = m_xi μ_r` with half-width `d_xi w_r`.

mod reference;
mod settings;
mod topology;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};

use crate::error::Result;
use crate::vi::{FeasibleSet, GameInstance, Mapping, Polyhedron, ProblemConstants};

pub use reference::{solve_projected_gradient, solve_reference, REFERENCE_ITERATION_CAP};
pub use settings::{settings_table, SettingParams};
pub use topology::NetworkTopology;

/// The bandwidth mapping and its noisy oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthMapping {
    /// `2 m_c AᵀA`
    congestion: DMatrix<f64>,
    mean: DVector<f64>,
    halfwidth: DVector<f64>,
}

impl BandwidthMapping {
    pub fn new(topology: &NetworkTopology, params: &SettingParams) -> Result<Self> {
        params.validate()?;
        let a = topology.routing();
        Ok(Self {
            congestion: a.transpose() * a * (2.0 * params.m_c),
            mean: topology.route_mean() * params.m_xi,
            halfwidth: topology.route_halfwidth() * params.d_xi,
        })
    }

    /// `ξ̄`
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn congestion(&self) -> &DMatrix<f64> {
        &self.congestion
    }

    /// One draw of the route-indexed `ξ`.
    pub fn sample_xi(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        DVector::from_iterator(
            self.mean.len(),
            self.mean
                .iter()
                .zip(self.halfwidth.iter())
                .map(|(&m, &w)| if w > 0.0 { m + w * (2.0 * rng.random::<f64>() - 1.0) } else { m }),
        )
    }

    /// `Σ_r w_r² / 3`, the bound on `E||F̂ - F||²` (attained at `x = 0`).
    pub fn noise_second_moment(&self) -> f64 {
        self.halfwidth.norm_squared() / 3.0
    }

    fn with_xi(&self, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
        let mut f = &self.congestion * x;
        for ((fr, &xr), &x_r) in f.iter_mut().zip(xi.iter()).zip(x.iter()) {
            *fr -= xr / (1.0 + x_r);
        }
        f
    }

    /// `Σ_r ξ̄(r) log(1 + x(r))` negated plus `m_c ||Ax||²`, whose gradient is `F`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let utility: f64 = self
            .mean
            .iter()
            .zip(x.iter())
            .map(|(m, v)| m * (1.0 + v).ln())
            .sum();
        0.5 * x.dot(&(&self.congestion * x)) - utility
    }
}

impl Mapping for BandwidthMapping {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        self.with_xi(x, &self.mean)
    }

    fn sample(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let xi = self.sample_xi(rng);
        self.with_xi(x, &xi)
    }
}

/// One draw of `ξ` for `params` on `topology`.
pub fn sample_xi(
    topology: &NetworkTopology,
    params: &SettingParams,
    rng: &mut dyn RngCore,
) -> Result<DVector<f64>> {
    Ok(BandwidthMapping::new(topology, params)?.sample_xi(rng))
}

/// Analytic constants of the bandwidth game.
///
/// * `L = max_r ξ̄(r) + 2 m_c λ_max(AᵀA)`
/// * `η = λ_min(diag(ξ̄/(1+u)²) + 2 m_c AᵀA)`, a lower bound on the
///   Jacobian's smallest eigenvalue over the box hull `[0, u]`
/// * `ν² = Σ_r (d_xi w_r)² / 3`
/// * `D = ||u||` with `u_r = min_{l ∋ r} m_b b_l`
pub fn analytic_constants(topology: &NetworkTopology, params: &SettingParams) -> Result<ProblemConstants> {
    let map = BandwidthMapping::new(topology, params)?;
    let upper = box_hull(topology, params);
    let gram_eigs = SymmetricEigen::new(map.congestion.clone()).eigenvalues;
    let lipschitz = map.mean.max() + gram_eigs.max();

    let mut jac_at_upper = map.congestion.clone();
    for r in 0..map.dim() {
        jac_at_upper[(r, r)] += map.mean[r] / (1.0 + upper[r]).powi(2);
    }
    let eta = SymmetricEigen::new(jac_at_upper).eigenvalues.min();
    ProblemConstants::new(
        eta,
        lipschitz,
        map.noise_second_moment().sqrt(),
        Some(upper.norm()),
    )
}

/// Per-route upper bounds `u_r = min_{l ∋ r} m_b b_l`.
pub fn box_hull(topology: &NetworkTopology, params: &SettingParams) -> DVector<f64> {
    let a = topology.routing();
    DVector::from_iterator(
        topology.num_routes(),
        (0..topology.num_routes()).map(|r| {
            (0..topology.num_links())
                .filter(|&l| a[(l, r)] > 0.0)
                .map(|l| params.m_b * topology.capacities()[l])
                .fold(f64::INFINITY, f64::min)
        }),
    )
}

/// Builds the game instance for one setting, with analytic constants attached.
/// The reference solution is attached separately (see [`solve_reference`]).
pub fn build_instance(topology: &NetworkTopology, params: &SettingParams) -> Result<GameInstance> {
    let map = BandwidthMapping::new(topology, params)?;
    let set = FeasibleSet::Polyhedron(Polyhedron::new(
        topology.routing().clone(),
        topology.capacities() * params.m_b,
    )?);
    GameInstance::new(
        format!("bandwidth-S{}", params.id),
        Arc::new(map),
        set,
        topology.user_routes().to_vec(),
    )?
    .with_constants(analytic_constants(topology, params)?)
}

//! Couplings between node divergences and the spatial/temporal dynamics
//! built on them.

pub mod coupling;
pub mod distribution;
pub mod spatial;
pub mod temporal;

pub use coupling::{Coupling, CouplingModel};
pub use distribution::{
    check_max_distribution, distribution_ratio, equivalent_condition_residual, CheckMode,
    DistributionCheck, DistributionRatio,
};
pub use spatial::{
    chain_derivative, check_spatial_dynamics, inverse_derivatives, link_derivative,
    spatial_derivative, spatial_derivative_at, spatial_dynamics, spatial_td_rate,
    SpatialDerivative, SpatialDynamicsCheck,
};
pub use temporal::{
    temporal_rate_bound, temporal_td_rate, DivergenceProfile, DivergenceTrajectory, TemporalBound,
};

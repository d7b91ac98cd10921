//! Block renormalization: window variables of the environment, the
//! dominating process `Z`, the closed-edge bounds and the good-block grid.

mod calibrate;
mod containment;
mod delta;
mod env;
mod good;
mod interval;
mod zprocess;

pub use calibrate::{calibrate, calibrate_r0, Calibration};
pub use containment::{interval_containment_replica, ContainmentReport};
pub use delta::{delta_bound, edge_chain_conditionals, DeltaBounds};
pub use env::{edge_chain_statistics, EdgeChainStats, EnvTrajectory, Tally};
pub use good::{block_interval, good_block_grid, seeded_block_propagation, GoodBlockConfig, GoodBlockGrid, Propagation};
pub use interval::{interval_block_variables, vertex_block_variables, IntervalBlockGrid, VertexBlockVariables};
pub use zprocess::{
    contiguous_z0, infected_blocks, interval_geometry, interval_z0, run_z, vertex_containment_check, vertex_z0,
    z_containment_check, z_step, BernoulliDrivers, Drivers, GridDrivers, ZGeometry, ZTrace,
};

//! Exact computations on tiny instances, used as references for the
//! simulators.

mod ctmc;
mod fixtures;
mod zexact;

pub use ctmc::{
    exact_mean_extinction_time, exact_survival_to_horizon, integrated_survival, CtmcModel, ZetaInit,
    MAX_DENSE_TRANSIENT, MAX_STATE_BITS, POISSON_TAIL,
};
pub use fixtures::{compute_instance, instances, parse_fixture, OracleInstance, OracleRow, FIXTURE};
pub use zexact::{exact_z_one_step, interval_count_law, ZOneStep, MAX_RADIUS};

//! Monte Carlo estimation on top of the simulator.

mod crossover;
mod csv;
mod lambda0;
pub mod stats;
mod survival;
mod sweep;

pub use crossover::{crossover_experiment, CrossoverConfig, CrossoverResult, CrossoverRow};
pub use csv::{CsvRow, CSV_HEADER};
pub use lambda0::{estimate_lambda0, BracketEval, Lambda0Bracket, Lambda0Config};
pub use survival::{
    estimate_mean_extinction_time, estimate_survival, extinction_stats, replica_key, run_replicas,
    survival_estimate, Estimate, EstimateMethod, ExtinctionStats, InitialEnvironment, InitialInfection,
    McConfig,
};
pub use sweep::{sweep_phase_diagram, SweepCell, SweepGrid, SweepResult};

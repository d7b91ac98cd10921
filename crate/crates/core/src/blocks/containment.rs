//! Pathwise comparison of the CPDE with its dominating `Z` process.

use crate::engine::{simulate_cpde, SimOptions};
use crate::error::Result;
use crate::model::{sample_initial_environment, Params};
use crate::rng::ReplicaKey;
use crate::streams::LazyStreams;
use crate::topology::Topology;

use super::env::EnvTrajectory;
use super::interval::interval_block_variables;
use super::zprocess::{interval_geometry, interval_z0, run_z, z_containment_check, GridDrivers};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContainmentReport {
    /// Infected blocks missing from `Z_n`.
    pub violations: usize,
    /// Levels with `Z_n` empty while the process is alive at `nT`.
    pub empty_z_alive: usize,
    pub n_ext: Option<u32>,
    pub cpde_alive_at_end: bool,
}

/// One replica: streams and stationary environment from `key`, interval
/// blocks of width `r0` over `windows` windows of length `t_len`, `Z` driven
/// by the extracted variables, and the containment count.
pub fn interval_containment_replica(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    r0: usize,
    t_len: f64,
    windows: usize,
    key: &ReplicaKey,
) -> Result<ContainmentReport> {
    let horizon = t_len * windows as f64;
    let params = params.with_horizon(horizon);
    params.validate()?;
    let streams = LazyStreams::new(topology, &params, *key, false)?;
    let zeta0 = sample_initial_environment(topology, params.p, key)?;
    let env = EnvTrajectory::from_streams(&streams, &zeta0)?;
    let grid = interval_block_variables(topology, &env, &streams, r0, t_len, windows)?;
    let options = SimOptions {
        snapshot_times: (0..=windows).map(|n| n as f64 * t_len).collect(),
        ..Default::default()
    };
    let out = simulate_cpde(topology, &params, eta0, &zeta0, &streams, &options)?;
    let trace = run_z(
        &interval_geometry(&grid),
        &GridDrivers::from(&grid),
        &interval_z0(&grid, eta0),
        windows as u32,
        true,
    )?;
    let violations = z_containment_check(&out.snapshots, &grid, &trace)?;
    let empty_z_alive = out
        .snapshots
        .iter()
        .enumerate()
        .filter(|(n, s)| trace.sizes.get(*n) == Some(&0) && s.infected() > 0)
        .count();
    Ok(ContainmentReport {
        violations,
        empty_z_alive,
        n_ext: trace.n_ext,
        cpde_alive_at_end: out.survived,
    })
}

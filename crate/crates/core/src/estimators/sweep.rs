//! Survival over a `(v, p, lambda)` grid.

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::ReplicaKey;
use crate::topology::Topology;

use super::survival::{estimate_survival, Estimate, InitialEnvironment, McConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub vs: Vec<f64>,
    pub ps: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl SweepGrid {
    pub fn cells(&self) -> usize {
        self.vs.len() * self.ps.len() * self.lambdas.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub v: f64,
    pub p: f64,
    pub lambda: f64,
    pub survival: Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Ordered by `v`, then `p`, then `lambda`.
    pub cells: Vec<SweepCell>,
    /// `(v, p)` pairs whose survival is at most `theta` even at the largest
    /// `lambda` of the grid: finite-horizon evidence of immunity, not proof.
    pub immune: Vec<(f64, f64)>,
    /// Survival decreasing in `lambda` or in `p` with disjoint intervals.
    pub monotonicity_flags: Vec<String>,
}

pub fn sweep_phase_diagram(
    topology: &Topology,
    grid: &SweepGrid,
    horizon: f64,
    eta0: &[bool],
    env: &InitialEnvironment,
    cfg: &McConfig,
    theta: f64,
) -> Result<SweepResult> {
    if grid.cells() == 0 {
        return Err(Error::Precondition("empty sweep grid".into()));
    }
    let mut cells = Vec::with_capacity(grid.cells());
    for &v in &grid.vs {
        for &p in &grid.ps {
            for &lambda in &grid.lambdas {
                let params = Params::new(lambda, v, p, horizon)?;
                let sub = ReplicaKey::derive(cfg.seed, &[cells.len() as u64]).digest();
                let mc = McConfig { seed: sub, ..*cfg };
                let survival = estimate_survival(topology, &params, eta0, env, &mc)?;
                cells.push(SweepCell { v, p, lambda, survival });
            }
        }
    }
    let nl = grid.lambdas.len();
    let np = grid.ps.len();
    let mut immune = Vec::new();
    let mut flags = Vec::new();
    for (iv, &v) in grid.vs.iter().enumerate() {
        for (ip, &p) in grid.ps.iter().enumerate() {
            let row = &cells[(iv * np + ip) * nl..(iv * np + ip + 1) * nl];
            let top = row.iter().max_by(|a, b| a.lambda.total_cmp(&b.lambda)).unwrap();
            if top.survival.point <= theta {
                immune.push((v, p));
            }
            for w in row.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                if b.lambda > a.lambda && b.survival.ci_high < a.survival.ci_low {
                    flags.push(format!("v={v} p={p}: survival drops from lambda={} to {}", a.lambda, b.lambda));
                }
            }
            if ip + 1 < np && grid.ps[ip + 1] > p {
                let next = &cells[(iv * np + ip + 1) * nl..(iv * np + ip + 2) * nl];
                for (a, b) in row.iter().zip(next) {
                    if b.survival.ci_high < a.survival.ci_low {
                        flags.push(format!("v={v} lambda={}: survival drops from p={p} to {}", a.lambda, b.p));
                    }
                }
            }
        }
    }
    Ok(SweepResult {
        cells,
        immune,
        monotonicity_flags: flags,
    })
}

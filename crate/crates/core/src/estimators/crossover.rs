//! Static versus slowly moving environment, for growing infected blocks.
//!
//! For each block size `n` the extinction times under `v = 0` (a frozen
//! Bernoulli(`p`) environment, fresh per replica) and under `v = v_small` are
//! compared through their medians. Static-arm runs are censored at the cap and
//! flagged when that happens for most of them.

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::ReplicaKey;
use crate::topology::Topology;

use super::stats::{isotonic_trend, linear_fit, LinearFit, TrendTest};
use super::survival::{extinction_stats, run_replicas, ExtinctionStats, InitialEnvironment, InitialInfection, McConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct CrossoverConfig {
    pub lambda: f64,
    pub p: f64,
    pub v_small: f64,
    pub sizes: Vec<usize>,
    /// Censoring time of both arms.
    pub cap: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossoverRow {
    pub n: usize,
    pub static_arm: ExtinctionStats,
    pub dynamic_arm: ExtinctionStats,
    pub ratio: f64,
    pub ratio_se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossoverResult {
    pub rows: Vec<CrossoverRow>,
    pub ratio_trend: TrendTest,
    /// Dynamic-arm median against `ln n`.
    pub dynamic_fit: LinearFit,
    pub truncated: bool,
}

pub fn crossover_experiment(
    topology: &Topology,
    cfg: &CrossoverConfig,
    mc: &McConfig,
) -> Result<CrossoverResult> {
    if !(cfg.v_small > 0.0) {
        return Err(Error::Domain {
            name: "v_small",
            value: cfg.v_small,
            expected: "a rate > 0",
        });
    }
    if cfg.sizes.len() < 2 || cfg.sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("sizes must be increasing, at least two".into()));
    }
    if let Some(&n) = cfg.sizes.iter().find(|&&n| n == 0 || n > topology.n_vertices()) {
        return Err(Error::Precondition(format!("block of {n} sites does not fit {topology}")));
    }
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for (i, &n) in cfg.sizes.iter().enumerate() {
        let eta0 = InitialInfection::Block(n).eta(topology.n_vertices())?;
        let arm = |v: f64, tag: u64| -> Result<ExtinctionStats> {
            let params = Params::new(cfg.lambda, v, cfg.p, cfg.cap)?;
            let seed = ReplicaKey::derive(mc.seed, &[i as u64, tag]).digest();
            let sub = McConfig { seed, ..*mc };
            let ext = run_replicas(topology, &params, &eta0, &InitialEnvironment::Stationary, &sub)?;
            Ok(extinction_stats(&ext, cfg.cap, seed, true))
        };
        let s = arm(0.0, 0)?;
        let d = arm(cfg.v_small, 1)?;
        let ratio = s.median.point / d.median.point;
        let rel = |e: &ExtinctionStats| e.median.se() / e.median.point;
        let ratio_se = ratio * (rel(&s).powi(2) + rel(&d).powi(2)).sqrt();
        rows.push(CrossoverRow {
            n,
            static_arm: s,
            dynamic_arm: d,
            ratio,
            ratio_se,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let ses: Vec<f64> = rows.iter().map(|r| r.ratio_se).collect();
    let ratio_trend = isotonic_trend(&ratios, &ses, cfg.alpha)?;
    let logn: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let dyn_med: Vec<f64> = rows.iter().map(|r| r.dynamic_arm.median.point).collect();
    let dynamic_fit = linear_fit(&logn, &dyn_med, None)?;
    let truncated = rows.iter().any(|r| r.static_arm.unreliable || r.dynamic_arm.unreliable);
    Ok(CrossoverResult {
        rows,
        ratio_trend,
        dynamic_fit,
        truncated,
    })
}

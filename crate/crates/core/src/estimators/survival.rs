//! Replica fan-out and the basic survival / extinction-time estimates.
//!
//! Survival always means survival to the configured horizon on the finite
//! graph: a replica survives if `eta_horizon` is non-empty.

use std::fmt;
use std::str::FromStr;

use crate::engine::{simulate_cpde, Extinction, SimOptions};
use crate::error::{Error, Result};
use crate::model::{sample_initial_environment, Params};
use crate::parallel::map_indexed;
use crate::rng::ReplicaKey;
use crate::streams::LazyStreams;
use crate::topology::Topology;

use super::stats::{bootstrap_median_ci, mean_se, median, wilson, Z95};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    BinomialWilson,
    MeanSe,
    MedianBootstrap,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: usize,
    pub seed: u64,
    pub method: EstimateMethod,
}

impl Estimate {
    /// Standard error implied by a symmetric 95% interval.
    pub fn se(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * Z95)
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Initially infected sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialInfection {
    Site(usize),
    /// Sites `0..n`.
    Block(usize),
    List(Vec<usize>),
    All,
}

impl InitialInfection {
    pub fn eta(&self, n_vertices: usize) -> Result<Vec<bool>> {
        let sites: Vec<usize> = match self {
            InitialInfection::Site(x) => vec![*x],
            InitialInfection::Block(n) => (0..*n).collect(),
            InitialInfection::List(v) => v.clone(),
            InitialInfection::All => (0..n_vertices).collect(),
        };
        crate::engine::eta_from_sites(n_vertices, &sites)
    }
}

impl fmt::Display for InitialInfection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialInfection::Site(x) => write!(f, "site:{x}"),
            InitialInfection::Block(n) => write!(f, "block:{n}"),
            InitialInfection::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(";"))
            }
            InitialInfection::All => f.write_str("all"),
        }
    }
}

impl FromStr for InitialInfection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Structure(format!("bad infection spec `{s}` (site:<x> | block:<n> | list:<x;y;..> | all)"));
        let s = s.trim();
        if s == "all" {
            return Ok(InitialInfection::All);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "site" => rest.parse().map(InitialInfection::Site).map_err(|_| bad()),
            "block" => rest.parse().map(InitialInfection::Block).map_err(|_| bad()),
            "list" => rest
                .split(';')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(InitialInfection::List)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// How each replica's initial environment is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialEnvironment {
    /// Fresh i.i.d. Bernoulli(`p`) per replica.
    Stationary,
    AllOpen,
    AllClosed,
    Fixed(Vec<bool>),
}

impl InitialEnvironment {
    pub fn zeta(&self, topology: &Topology, p: f64, key: &ReplicaKey) -> Result<Vec<bool>> {
        let ne = topology.n_edges();
        match self {
            InitialEnvironment::Stationary => sample_initial_environment(topology, p, key),
            InitialEnvironment::AllOpen => Ok(vec![true; ne]),
            InitialEnvironment::AllClosed => Ok(vec![false; ne]),
            InitialEnvironment::Fixed(z) if z.len() == ne => Ok(z.clone()),
            InitialEnvironment::Fixed(z) => Err(Error::Structure(format!(
                "fixed environment has {} edges, {topology} has {ne}",
                z.len()
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub replicas: usize,
    pub seed: u64,
    /// 0 = all cores.
    pub threads: usize,
}

impl McConfig {
    pub fn new(replicas: usize, seed: u64) -> Self {
        McConfig {
            replicas,
            seed,
            threads: 0,
        }
    }

    pub fn with_threads(self, threads: usize) -> Self {
        McConfig { threads, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain {
                name: "replicas",
                value: 0.0,
                expected: "at least 1",
            });
        }
        Ok(())
    }
}

/// Key of replica `i` under `seed`; independent of how replicas are scheduled.
pub fn replica_key(seed: u64, i: usize) -> ReplicaKey {
    ReplicaKey::derive(seed, &[i as u64])
}

/// Extinction time of every replica, in replica order.
pub fn run_replicas(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    env: &InitialEnvironment,
    cfg: &McConfig,
) -> Result<Vec<Extinction>> {
    cfg.check()?;
    params.validate()?;
    let results = map_indexed(cfg.replicas, cfg.threads, |i| -> Result<Extinction> {
        let key = replica_key(cfg.seed, i);
        let zeta0 = env.zeta(topology, params.p, &key)?;
        let streams = LazyStreams::new(topology, params, key, false)?;
        Ok(simulate_cpde(topology, params, eta0, &zeta0, &streams, &SimOptions::default())?.extinction)
    });
    results.into_iter().collect()
}

pub fn survival_estimate(extinctions: &[Extinction], seed: u64) -> Estimate {
    let n = extinctions.len();
    let alive = extinctions.iter().filter(|e| **e == Extinction::Survived).count();
    let (lo, hi) = wilson(alive as u64, n as u64, Z95);
    Estimate {
        point: alive as f64 / n as f64,
        ci_low: lo,
        ci_high: hi,
        replicas: n,
        seed,
        method: EstimateMethod::BinomialWilson,
    }
}

/// Fraction of replicas alive at `params.horizon`, with a 95% Wilson interval.
pub fn estimate_survival(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    env: &InitialEnvironment,
    cfg: &McConfig,
) -> Result<Estimate> {
    let ext = run_replicas(topology, params, eta0, env, cfg)?;
    Ok(survival_estimate(&ext, cfg.seed))
}

/// Mean and median of extinction times censored at a cap.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtinctionStats {
    pub mean: Estimate,
    pub median: Estimate,
    pub cap: f64,
    pub cap_hits: usize,
    /// More than half the replicas hit the cap; the figures are lower bounds.
    pub unreliable: bool,
}

const BOOTSTRAP_RESAMPLES: usize = 1000;

pub fn extinction_stats(extinctions: &[Extinction], cap: f64, seed: u64, with_median: bool) -> ExtinctionStats {
    let n = extinctions.len();
    let times: Vec<f64> = extinctions.iter().map(|e| e.censored(cap)).collect();
    let cap_hits = extinctions
        .iter()
        .filter(|e| e.time().is_none_or(|t| t >= cap))
        .count();
    let (mean, se) = mean_se(&times);
    let (med, (mlo, mhi)) = if with_median {
        let key = ReplicaKey::derive(seed, &[u64::MAX]);
        (median(&times), bootstrap_median_ci(&times, BOOTSTRAP_RESAMPLES, &key))
    } else {
        (f64::NAN, (f64::NAN, f64::NAN))
    };
    ExtinctionStats {
        mean: Estimate {
            point: mean,
            ci_low: mean - Z95 * se,
            ci_high: mean + Z95 * se,
            replicas: n,
            seed,
            method: EstimateMethod::MeanSe,
        },
        median: Estimate {
            point: med,
            ci_low: mlo.min(med),
            ci_high: mhi.max(med),
            replicas: n,
            seed,
            method: EstimateMethod::MedianBootstrap,
        },
        cap,
        cap_hits,
        unreliable: 2 * cap_hits > n,
    }
}

/// Extinction-time statistics with runs censored at `cap` (which becomes the
/// simulation horizon).
pub fn estimate_mean_extinction_time(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    env: &InitialEnvironment,
    cap: f64,
    cfg: &McConfig,
    with_median: bool,
) -> Result<ExtinctionStats> {
    if !(cap > 0.0 && cap <= params.horizon) {
        return Err(Error::Domain {
            name: "cap",
            value: cap,
            expected: "a time in (0, horizon]",
        });
    }
    let ext = run_replicas(topology, &params.with_horizon(cap), eta0, env, cfg)?;
    Ok(extinction_stats(&ext, cap, cfg.seed, with_median))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_death_survival() {
        let t = Topology::path(3).unwrap();
        let params = Params::new(0.0, 1.0, 0.5, 1.0).unwrap();
        let eta0 = InitialInfection::Site(1).eta(3).unwrap();
        let est = estimate_survival(&t, &params, &eta0, &InitialEnvironment::Stationary, &McConfig::new(20_000, 5)).unwrap();
        let truth = (-1.0f64).exp();
        assert!(est.ci_low <= truth && truth <= est.ci_high, "{est:?}");
    }

    #[test]
    fn harmonic_mean_extinction() {
        let t = Topology::path(3).unwrap();
        let params = Params::new(2.0, 1.0, 0.0, 200.0).unwrap();
        let eta0 = InitialInfection::All.eta(3).unwrap();
        let s = estimate_mean_extinction_time(
            &t,
            &params,
            &eta0,
            &InitialEnvironment::AllClosed,
            200.0,
            &McConfig::new(20_000, 4),
            true,
        )
        .unwrap();
        let h3 = 11.0 / 6.0;
        assert!((s.mean.point - h3).abs() < 3.0 * s.mean.se(), "{:?}", s.mean);
        assert_eq!(s.cap_hits, 0);
        assert!(s.median.ci_low <= s.median.point && s.median.point <= s.median.ci_high);
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let t = Topology::cycle(20).unwrap();
        let params = Params::new(2.0, 1.0, 0.6, 5.0).unwrap();
        let eta0 = InitialInfection::Block(3).eta(20).unwrap();
        let a = run_replicas(&t, &params, &eta0, &InitialEnvironment::Stationary, &McConfig::new(50, 9).with_threads(1)).unwrap();
        let b = run_replicas(&t, &params, &eta0, &InitialEnvironment::Stationary, &McConfig::new(50, 9).with_threads(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infection_specs_round_trip() {
        for s in ["site:3", "block:16", "list:1;4;9", "all"] {
            assert_eq!(s.parse::<InitialInfection>().unwrap().to_string(), s);
        }
        assert!("blob:1".parse::<InitialInfection>().is_err());
    }
}

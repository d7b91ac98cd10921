//! Bracketing the critical infection rate by bisection on finite-horizon
//! survival.
//!
//! A rate counts as supercritical if the fraction of replicas alive at the
//! horizon is at least `theta`. The result is a bracket `[lo, hi]` together
//! with every evaluation made; it is finite-size, finite-horizon evidence and
//! not a critical value.

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::splitmix64;
use crate::topology::Topology;

use super::survival::{estimate_survival, Estimate, InitialEnvironment, InitialInfection, McConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct Lambda0Config {
    pub theta: f64,
    pub horizon: f64,
    pub replicas: usize,
    /// Stop once `hi - lo <= tolerance`.
    pub tolerance: f64,
    pub lo: f64,
    pub hi: f64,
    pub eta0: InitialInfection,
    pub env: InitialEnvironment,
    /// Times the starting bracket may be widened when it does not straddle
    /// the threshold, and retries after an inconsistent history.
    pub max_widen: usize,
    pub threads: usize,
}

impl Lambda0Config {
    pub fn new(lo: f64, hi: f64, horizon: f64, replicas: usize) -> Self {
        Lambda0Config {
            theta: 0.02,
            horizon,
            replicas,
            tolerance: 0.02,
            lo,
            hi,
            eta0: InitialInfection::All,
            env: InitialEnvironment::Stationary,
            max_widen: 3,
            threads: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketEval {
    pub lambda: f64,
    pub survival: Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lambda0Bracket {
    pub lo: f64,
    pub hi: f64,
    pub history: Vec<BracketEval>,
    pub theta: f64,
    pub horizon: f64,
    pub topology: String,
    pub converged: bool,
    pub note: Option<String>,
}

struct Evaluator<'a> {
    topology: &'a Topology,
    v: f64,
    p: f64,
    cfg: &'a Lambda0Config,
    seed: u64,
    eta0: Vec<bool>,
    history: Vec<BracketEval>,
    replicas: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, lambda: f64) -> Result<bool> {
        let params = Params::new(lambda, self.v, self.p, self.cfg.horizon)?;
        // Fresh sub-seed per evaluation.
        let sub = splitmix64(self.seed ^ splitmix64(self.history.len() as u64 + 1));
        let mc = McConfig::new(self.replicas, sub).with_threads(self.cfg.threads);
        let survival = estimate_survival(self.topology, &params, &self.eta0, &self.cfg.env, &mc)?;
        let above = survival.point >= self.cfg.theta;
        self.history.push(BracketEval { lambda, survival });
        Ok(above)
    }

    /// Evaluations that contradict `[lo, hi]` beyond their own intervals.
    fn inconsistent(&self, lo: f64, hi: f64) -> bool {
        let theta = self.cfg.theta;
        self.history.iter().any(|h| {
            (h.lambda <= lo && h.survival.ci_low > theta) || (h.lambda >= hi && h.survival.ci_high < theta)
        })
    }
}

pub fn estimate_lambda0(topology: &Topology, v: f64, p: f64, cfg: &Lambda0Config, seed: u64) -> Result<Lambda0Bracket> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: cfg.theta,
            expected: "a threshold in (0, 1)",
        });
    }
    if !(cfg.lo >= 0.0 && cfg.hi > cfg.lo && cfg.hi.is_finite()) {
        return Err(Error::Domain {
            name: "hi",
            value: cfg.hi,
            expected: "a finite rate above lo >= 0",
        });
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::Domain {
            name: "tolerance",
            value: cfg.tolerance,
            expected: "a bracket width > 0",
        });
    }
    let mut ev = Evaluator {
        topology,
        v,
        p,
        cfg,
        seed,
        eta0: cfg.eta0.eta(topology.n_vertices())?,
        history: Vec::new(),
        replicas: cfg.replicas,
    };
    let (mut lo, mut hi) = (cfg.lo, cfg.hi);
    let mut note = None;
    for attempt in 0..=cfg.max_widen {
        let width = hi - lo;
        let mut widen = 0;
        while ev.eval(lo)? {
            widen += 1;
            if widen > cfg.max_widen || lo == 0.0 {
                return Ok(failure(ev, lo, hi, "survival stays above theta at the lower end"));
            }
            hi = lo;
            lo = (lo - width).max(0.0);
        }
        let mut widen = 0;
        while !ev.eval(hi)? {
            widen += 1;
            if widen > cfg.max_widen {
                return Ok(failure(ev, lo, hi, "survival stays below theta at the upper end"));
            }
            lo = hi;
            hi += width;
        }
        while hi - lo > cfg.tolerance {
            let mid = 0.5 * (lo + hi);
            if ev.eval(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !ev.inconsistent(lo, hi) {
            let topo = topology.label();
            return Ok(Lambda0Bracket {
                lo,
                hi,
                history: ev.history,
                theta: cfg.theta,
                horizon: cfg.horizon,
                topology: topo,
                converged: true,
                note,
            });
        }
        // Non-monotone beyond noise: retry on a wider bracket with more replicas.
        note = Some(format!("inconsistent history on attempt {attempt}, widened and retried"));
        let w = (hi - lo).max(cfg.tolerance) * 4.0;
        lo = (lo - w).max(0.0);
        hi += w;
        ev.replicas *= 2;
    }
    Ok(failure(ev, lo, hi, "survival is not monotone in lambda beyond noise"))
}

fn failure(ev: Evaluator<'_>, lo: f64, hi: f64, why: &str) -> Lambda0Bracket {
    Lambda0Bracket {
        lo,
        hi,
        theta: ev.cfg.theta,
        horizon: ev.cfg.horizon,
        topology: ev.topology.label(),
        history: ev.history,
        converged: false,
        note: Some(why.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brackets_small_static_threshold() {
        let t = Topology::cycle(64).unwrap();
        let mut cfg = Lambda0Config::new(0.5, 4.0, 30.0, 100);
        cfg.tolerance = 0.25;
        cfg.env = InitialEnvironment::AllOpen;
        let b = estimate_lambda0(&t, 0.0, 1.0, &cfg, 1).unwrap();
        assert!(b.converged);
        assert!(b.hi - b.lo <= 0.25);
        assert!(b.lo > 0.5 && b.hi < 4.0);
        assert!(b.history.iter().all(|h| h.survival.replicas == 100));
    }

    #[test]
    fn reports_failure_when_threshold_unreachable() {
        let t = Topology::cycle(16).unwrap();
        let mut cfg = Lambda0Config::new(0.1, 0.2, 20.0, 50);
        cfg.max_widen = 1;
        cfg.env = InitialEnvironment::AllOpen;
        let b = estimate_lambda0(&t, 0.0, 1.0, &cfg, 2).unwrap();
        assert!(!b.converged);
        assert!(b.note.is_some());
    }
}

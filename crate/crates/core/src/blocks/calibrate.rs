//! Choice of `(r0, T)` for the interval construction.

use crate::error::{Error, Result};
use crate::estimators::{run_replicas, InitialEnvironment, InitialInfection, McConfig};
use crate::model::Params;
use crate::topology::Topology;

use super::delta::delta_bound;

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub delta0: f64,
    /// Smallest `r0` with `(1 - delta0)^r0 < eps`.
    pub r0: usize,
    /// Smallest sampled time with estimated `P(tau >= T) + 2 sigma < eps` for
    /// the static process on `2 r0 + 1` sites started fully infected.
    pub t_len: f64,
    pub tail: f64,
    pub tail_se: f64,
    pub cap: f64,
}

/// Smallest `r0` with `(1 - delta0)^r0 < eps`.
pub fn calibrate_r0(delta0: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            expected: "a probability in (0, 1)",
        });
    }
    if !(delta0 > 0.0) {
        return Err(Error::Precondition(format!("delta0 = {delta0} gives no barrier")));
    }
    if delta0 >= 1.0 {
        return Ok(1);
    }
    let r = (eps.ln() / (1.0 - delta0).ln()).floor() as usize + 1;
    Ok(r.max(1))
}

pub fn calibrate(lambda: f64, p: f64, eps: f64, replicas: usize, seed: u64) -> Result<Calibration> {
    let delta0 = delta_bound(1.0, p, 1.0)?.delta0;
    let r0 = calibrate_r0(delta0, eps)?;
    let topology = Topology::path(2 * r0 + 1)?;
    let eta0 = InitialInfection::All.eta(topology.n_vertices())?;
    let cfg = McConfig::new(replicas, seed);
    let mut cap = 100.0;
    loop {
        let params = Params::new(lambda, 0.0, 1.0, cap)?;
        let ext = run_replicas(&topology, &params, &eta0, &InitialEnvironment::AllOpen, &cfg)?;
        let mut taus: Vec<f64> = ext.iter().map(|e| e.censored(cap)).collect();
        taus.sort_by(f64::total_cmp);
        let n = taus.len() as f64;
        // taus[i..] are the runs with tau >= taus[i].
        let found = (0..taus.len()).find_map(|i| {
            let q = (taus.len() - i) as f64 / n;
            let se = (q * (1.0 - q) / n).sqrt();
            (q + 2.0 * se < eps).then_some((taus[i], q, se))
        });
        match found {
            Some((t, q, se)) => {
                return Ok(Calibration {
                    delta0,
                    r0,
                    t_len: t,
                    tail: q,
                    tail_se: se,
                    cap,
                })
            }
            _ if cap >= 1e6 => {
                return Err(Error::Precondition(format!(
                    "the static process on {} sites at lambda = {lambda} outlives the cap {cap}",
                    2 * r0 + 1
                )))
            }
            _ => cap *= 10.0,
        }
    }
}

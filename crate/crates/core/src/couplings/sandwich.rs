//! Lower and upper contact processes coupled to the CPDE on shared streams.
//!
//! The upper process uses every infection attempt, the CPDE only the valid
//! ones (edge open), and the lower process a thinning of the valid ones that
//! is a Poisson process of rate `beta` on each edge.
//!
//! The thinning is built from the edge's own history. Let `pi(t)` be the
//! conditional probability that the edge is open given the valid infections
//! seen on it so far. Valid infections arrive with intensity `lambda pi(t)`
//! with respect to that history, so accepting each one with probability
//! `beta / (lambda pi(t-))` leaves an accepted stream of intensity `beta`,
//! i.e. Poisson(`beta`). Between arrivals `pi` follows
//! `pi' = lambda (pi - lo)(pi - hi)` with `lo = beta / lambda` the stable root,
//! and it jumps to 1 at each valid infection; it starts at `p` and never drops
//! below `lo`, so the acceptance probability never exceeds 1. The law of the
//! accepted stream is exact when the initial environment is Bernoulli(`p`).

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::ReplicaKey;
use crate::streams::{LazyStreams, StreamKind, StreamSet};
use crate::topology::Topology;
use crate::engine::{check_initial, Extinction, Replay};

use super::bounds::beta_rate;

/// Conditional open-probability of an edge between valid infections.
#[derive(Clone, Copy, Debug)]
pub struct OpenPosterior {
    lambda: f64,
    lo: f64,
    hi: f64,
    gap: f64,
}

impl OpenPosterior {
    pub fn new(lambda: f64, v: f64, p: f64) -> Result<Self> {
        let beta = beta_rate(lambda, v, p)?;
        if lambda == 0.0 {
            return Ok(OpenPosterior { lambda, lo: 0.0, hi: f64::INFINITY, gap: 0.0 });
        }
        let lo = beta / lambda;
        let hi = (lambda + v) / lambda - lo;
        Ok(OpenPosterior {
            lambda,
            lo,
            hi,
            gap: lambda * (hi - lo),
        })
    }

    /// Stable value `beta / lambda`.
    pub fn floor(&self) -> f64 {
        self.lo
    }

    /// Value `s` time units after it was `pi0`, with no arrival in between.
    pub fn evolve(&self, pi0: f64, s: f64) -> f64 {
        if s <= 0.0 || self.lambda == 0.0 {
            return pi0;
        }
        let d = pi0 - self.lo;
        if d.abs() <= 1e-15 || (pi0 - self.hi).abs() <= 1e-15 {
            return pi0;
        }
        if self.gap <= 1e-12 * self.lambda {
            // Double root.
            return self.lo + d / (1.0 + self.lambda * d * s);
        }
        let u = d / (pi0 - self.hi) * (-self.gap * s).exp();
        (self.lo - self.hi * u) / (1.0 - u)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SandwichFault {
    #[default]
    None,
    /// The lower process accepts every attempt; breaks containment.
    LowerIgnoresEnvironment,
}

#[derive(Clone, Debug, Default)]
pub struct SandwichOptions {
    pub sample_times: Vec<f64>,
    /// Keep the accepted inter-arrival times for goodness-of-fit checks.
    pub record_gaps: bool,
    pub fault: SandwichFault,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichOutcome {
    pub beta: f64,
    /// `(t, |lower|, |cpde|, |upper|)` at the sample times.
    pub traces: Vec<(f64, [usize; 3])>,
    pub extinction: [Extinction; 3],
    /// Vertex states found out of order after some event.
    pub violations: u64,
    pub attempts: u64,
    pub valid: u64,
    pub accepted: u64,
    /// Total edge-time observed (`n_edges * horizon`).
    pub edge_time: f64,
    /// Gaps between accepted points per edge, first one measured from 0.
    pub accepted_gaps: Vec<f64>,
    /// Largest acceptance probability used.
    pub max_acceptance: f64,
}

const LOWER: usize = 0;
const MIDDLE: usize = 1;
const UPPER: usize = 2;

/// Runs the three coupled processes on the streams of `key` up to the horizon.
pub fn simulate_sandwich(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    key: &ReplicaKey,
    options: &SandwichOptions,
) -> Result<SandwichOutcome> {
    let streams = LazyStreams::new(topology, params, *key, false)?;
    sandwich_on(topology, params, eta0, zeta0, &streams, options)
}

/// Same as [`simulate_sandwich`] on caller-provided streams.
pub fn sandwich_on<S: StreamSet>(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    streams: &S,
    options: &SandwichOptions,
) -> Result<SandwichOutcome> {
    streams.check_topology(topology)?;
    check_initial(topology, eta0, zeta0)?;
    params.validate()?;
    let horizon = params.horizon.min(streams.horizon());
    let beta = beta_rate(params.lambda, params.v, params.p)?;
    let posterior = OpenPosterior::new(params.lambda, params.v, params.p)?;
    let ne = topology.n_edges();

    let mut eta = [eta0.to_vec(), eta0.to_vec(), eta0.to_vec()];
    let mut count = [eta0.iter().filter(|&&b| b).count(); 3];
    let mut extinction: [Option<f64>; 3] = [None; 3];
    if count[0] == 0 {
        extinction = [Some(0.0); 3];
    }
    let mut zeta = zeta0.to_vec();
    let mut pi_ref = vec![params.p; ne];
    let mut t_ref = vec![0.0; ne];
    let mut last_accept = vec![0.0; ne];

    let mut out = SandwichOutcome {
        beta,
        traces: Vec::with_capacity(options.sample_times.len()),
        extinction: [Extinction::Survived; 3],
        violations: 0,
        attempts: 0,
        valid: 0,
        accepted: 0,
        edge_time: ne as f64 * horizon,
        accepted_gaps: Vec::new(),
        max_acceptance: 0.0,
    };
    let mut samples = options.sample_times.iter().copied().peekable();

    for ev in Replay::all(streams) {
        let t = ev.key.time;
        if t > horizon {
            break;
        }
        while let Some(s) = samples.next_if(|&s| s < t) {
            out.traces.push((s, count));
        }
        let id = ev.key.entity as usize;
        match ev.key.kind {
            StreamKind::Open => zeta[id] = true,
            StreamKind::Close => zeta[id] = false,
            StreamKind::Recover => {
                for k in 0..3 {
                    if eta[k][id] {
                        eta[k][id] = false;
                        count[k] -= 1;
                        if count[k] == 0 {
                            extinction[k] = Some(t);
                        }
                    }
                }
            }
            _ => {
                out.attempts += 1;
                let valid = zeta[id];
                let mut accept = false;
                if valid {
                    out.valid += 1;
                    let pi = posterior.evolve(pi_ref[id], t - t_ref[id]);
                    let q = if beta == 0.0 { 0.0 } else { beta / (params.lambda * pi) };
                    if !(q <= 1.0 + 1e-9) {
                        return Err(Error::Invariant(format!(
                            "thinning probability {q} > 1 on edge {id} at t = {t}"
                        )));
                    }
                    out.max_acceptance = out.max_acceptance.max(q);
                    accept = ev.mark < q;
                    pi_ref[id] = 1.0;
                    t_ref[id] = t;
                    if accept {
                        out.accepted += 1;
                        if options.record_gaps {
                            out.accepted_gaps.push(t - last_accept[id]);
                        }
                        last_accept[id] = t;
                    }
                }
                if options.fault == SandwichFault::LowerIgnoresEnvironment {
                    accept = true;
                }
                let (a, b) = topology.endpoints(id);
                let allowed = [accept, valid, true];
                for k in 0..3 {
                    if allowed[k] && eta[k][a] != eta[k][b] {
                        let target = if eta[k][a] { b } else { a };
                        eta[k][target] = true;
                        count[k] += 1;
                    }
                }
                for x in [a, b] {
                    if (eta[LOWER][x] && !eta[MIDDLE][x]) || (eta[MIDDLE][x] && !eta[UPPER][x]) {
                        out.violations += 1;
                    }
                }
            }
        }
    }
    for s in samples {
        out.traces.push((s, count));
    }
    for k in 0..3 {
        out.extinction[k] = extinction[k].map_or(Extinction::Survived, Extinction::At);
    }
    Ok(out)
}

/// The fallback domination check: the observed valid-infection rate per edge
/// should not fall below `beta` by more than `z` standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominationReport {
    pub beta: f64,
    pub valid_rate: f64,
    pub accepted_rate: f64,
    pub se: f64,
    pub holds: bool,
}

/// Pools sandwich outcomes and tests `valid rate >= beta - z se`.
pub fn domination_check(outcomes: &[SandwichOutcome], z: f64) -> Result<DominationReport> {
    let first = outcomes
        .first()
        .ok_or_else(|| Error::Precondition("no outcomes to pool".into()))?;
    let edge_time: f64 = outcomes.iter().map(|o| o.edge_time).sum();
    let valid: u64 = outcomes.iter().map(|o| o.valid).sum();
    let accepted: u64 = outcomes.iter().map(|o| o.accepted).sum();
    let valid_rate = valid as f64 / edge_time;
    // Poisson standard error of the pooled count, at rate beta.
    let se = (first.beta / edge_time).sqrt();
    Ok(DominationReport {
        beta: first.beta,
        valid_rate,
        accepted_rate: accepted as f64 / edge_time,
        se,
        holds: valid_rate >= first.beta - z * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_initial_environment;
    use approx::assert_relative_eq;

    #[test]
    fn posterior_solves_its_ode() {
        let post = OpenPosterior::new(2.0, 1.0, 0.5).unwrap();
        let rhs = |pi: f64| 1.0 * 0.5 - 1.0 * pi - 2.0 * pi * (1.0 - pi);
        let (mut pi, dt) = (0.9, 1e-5);
        for _ in 0..100_000 {
            pi += dt * rhs(pi);
        }
        assert_relative_eq!(post.evolve(0.9, 1.0), pi, epsilon = 1e-4);
        assert_relative_eq!(post.evolve(0.9, 1e3), post.floor(), epsilon = 1e-12);
        assert!(post.evolve(1.0, 0.3) > post.floor());
    }

    #[test]
    fn posterior_double_root() {
        // p = 1, v = lambda: both roots at 1.
        let post = OpenPosterior::new(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(post.evolve(1.0, 5.0), 1.0);
        assert_relative_eq!(post.floor(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn containment_and_fault_injection() {
        let t = Topology::cycle(32).unwrap();
        let params = Params::new(2.0, 1.0, 0.5, 10.0).unwrap();
        let eta0 = vec![true; 32];
        let mut faulty_violations = 0;
        for r in 0..20 {
            let key = ReplicaKey::derive(3, &[r]);
            let zeta0 = sample_initial_environment(&t, 0.5, &key.child(0)).unwrap();
            let ok = simulate_sandwich(&t, &params, &eta0, &zeta0, &key, &SandwichOptions::default()).unwrap();
            assert_eq!(ok.violations, 0);
            assert!(ok.max_acceptance <= 1.0);
            let bad = SandwichOptions {
                fault: SandwichFault::LowerIgnoresEnvironment,
                ..Default::default()
            };
            faulty_violations += simulate_sandwich(&t, &params, &eta0, &zeta0, &key, &bad).unwrap().violations;
        }
        assert!(faulty_violations > 0);
    }

    #[test]
    fn p_one_accepts_at_rate_min() {
        let t = Topology::cycle(16).unwrap();
        let params = Params::new(3.0, 1.0, 1.0, 50.0).unwrap();
        let outs: Vec<_> = (0..20)
            .map(|r| {
                let key = ReplicaKey::derive(8, &[r]);
                simulate_sandwich(&t, &params, &[true; 16], &[true; 16], &key, &SandwichOptions::default()).unwrap()
            })
            .collect();
        let rep = domination_check(&outs, 3.0).unwrap();
        assert_relative_eq!(rep.beta, 1.0, epsilon = 1e-12);
        assert!((rep.accepted_rate - 1.0).abs() < 3.0 * rep.se, "{rep:?}");
        assert!(rep.holds);
    }
}

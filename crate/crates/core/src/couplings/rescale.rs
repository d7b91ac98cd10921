//! Time-rescaling coupling: a sped-up CPDE against one with fewer recoveries.
//!
//! Process A is CPDE(`lambda`, `v`, `p`) run `v'/v` times faster, i.e. all
//! rates multiplied by `c = v'/v`, recoveries included. Process B uses the
//! same streams except that each recovery is kept only if its mark is below
//! `1/c`, which leaves unit-rate recoveries: B is CPDE(`c lambda`, `v'`, `p`).

use crate::engine::{check_initial, Extinction, Replay};
use crate::error::{Error, Result};
use crate::rng::ReplicaKey;
use crate::streams::{LazyStreams, StreamKind, StreamRates};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleReport {
    pub violations: u64,
    pub extinction_a: Extinction,
    pub extinction_b: Extinction,
}

impl RescaleReport {
    pub fn a_dies_first(&self) -> bool {
        match (self.extinction_a, self.extinction_b) {
            (Extinction::At(a), Extinction::At(b)) => a <= b,
            (_, Extinction::Survived) => true,
            (Extinction::Survived, Extinction::At(_)) => false,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn rescale_coupling_check(
    topology: &Topology,
    lambda: f64,
    v: f64,
    v_prime: f64,
    p: f64,
    horizon: f64,
    eta0: &[bool],
    zeta0: &[bool],
    key: &ReplicaKey,
) -> Result<RescaleReport> {
    check_initial(topology, eta0, zeta0)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain { name: "v", value: v, expected: "a finite rate > 0" });
    }
    if !(v_prime > v && v_prime.is_finite()) {
        return Err(Error::Domain { name: "v_prime", value: v_prime, expected: "a finite rate > v" });
    }
    crate::model::Params::new(lambda, v, p, horizon)?;
    let c = v_prime / v;
    let rates = StreamRates {
        open: v_prime * p,
        close: v_prime * (1.0 - p),
        recover: c,
        infect: c * lambda,
        infect_accept: 0.0,
        infect_reject: 0.0,
    };
    let streams = LazyStreams::with_rates(topology, rates, horizon, *key, false);
    let keep = 1.0 / c;
    let mut a = eta0.to_vec();
    let mut b = eta0.to_vec();
    let mut alive = [a.iter().filter(|&&x| x).count(); 2];
    let mut ext: [Option<f64>; 2] = if alive[0] == 0 { [Some(0.0); 2] } else { [None; 2] };
    let mut zeta = zeta0.to_vec();
    let mut violations = 0;
    for ev in Replay::all(&streams) {
        if ext[1].is_some() {
            break;
        }
        let t = ev.key.time;
        let id = ev.key.entity as usize;
        match ev.key.kind {
            StreamKind::Open => zeta[id] = true,
            StreamKind::Close => zeta[id] = false,
            StreamKind::Recover => {
                if a[id] {
                    a[id] = false;
                    alive[0] -= 1;
                    if alive[0] == 0 {
                        ext[0] = Some(t);
                    }
                }
                if b[id] && ev.mark < keep {
                    b[id] = false;
                    alive[1] -= 1;
                    if alive[1] == 0 {
                        ext[1] = Some(t);
                    }
                }
                violations += u64::from(a[id] && !b[id]);
            }
            _ => {
                if !zeta[id] {
                    continue;
                }
                let (x, y) = topology.endpoints(id);
                for (proc, n) in [(&mut a, 0), (&mut b, 1)] {
                    if proc[x] != proc[y] {
                        proc[x] = true;
                        proc[y] = true;
                        alive[n] += 1;
                    }
                }
                violations += u64::from((a[x] && !b[x]) || (a[y] && !b[y]));
            }
        }
    }
    let tag = |e: Option<f64>| e.map_or(Extinction::Survived, Extinction::At);
    Ok(RescaleReport {
        violations,
        extinction_a: tag(ext[0]),
        extinction_b: tag(ext[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_initial_environment;

    #[test]
    fn containment_on_a_cycle() {
        let t = Topology::cycle(30).unwrap();
        for r in 0..50 {
            let key = ReplicaKey::derive(11, &[r]);
            let zeta0 = sample_initial_environment(&t, 0.5, &key.child(0)).unwrap();
            let rep = rescale_coupling_check(&t, 2.0, 1.0, 2.0, 0.5, 20.0, &[true; 30], &zeta0, &key).unwrap();
            assert_eq!(rep.violations, 0);
            assert!(rep.a_dies_first());
        }
    }

    #[test]
    fn v_prime_must_exceed_v() {
        let t = Topology::cycle(5).unwrap();
        let key = ReplicaKey::new(1);
        let r = rescale_coupling_check(&t, 1.0, 1.0, 1.0, 0.5, 1.0, &[true; 5], &[true; 5], &key);
        assert!(matches!(r, Err(Error::Domain { name: "v_prime", .. })));
    }
}

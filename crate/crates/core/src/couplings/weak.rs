//! The CPDE together with its weakly valid and p-weakly valid relaxations.
//!
//! An edge is fresh at `t` if its latest event before `t` is an update rather
//! than an infection attempt; every edge starts unrefreshed. An attempt is
//! weakly valid if the edge is unrefreshed or open, and p-weakly valid if the
//! edge is fresh and open, or unrefreshed and the attempt belongs to the
//! rate-`lambda p` part of the split infection stream. All three processes
//! share the streams, so `eta` and `eta_p` stay inside `eta_w`.
//!
//! "Before `t`" means before the event in replay order. The endpoint states
//! used for `tau_k`, `N_p` and `N_bar_p` are those just before the attempt.

use crate::engine::{check_initial, Extinction, Replay};
use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::ReplicaKey;
use crate::streams::{LazyStreams, StreamKind, StreamSet};
use crate::topology::Topology;

#[derive(Clone, Debug, Default)]
pub struct WeakOptions {
    /// Radius and time `n` of the space-time box counted by `M_n`.
    pub m_radius: Option<u32>,
    /// Center of that box.
    pub origin: usize,
    /// Stop once `eta_p` is extinct (and the `M_n` box is done). `N_p` is
    /// final at that point, but the tallies then cover a shorter time.
    pub stop_when_p_extinct: bool,
    pub sample_times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassTallies {
    pub attempts: u64,
    pub valid: u64,
    pub weakly_valid: u64,
    pub p_weakly_valid: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeakCouplingStats {
    pub tau: Vec<f64>,
    pub x: Vec<usize>,
    pub n_p: u64,
    pub n_bar_p: u64,
    pub m_n: u64,
    pub tallies: ClassTallies,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakOutcome {
    pub stats: WeakCouplingStats,
    /// `(t, |eta|, |eta_w|, |eta_p|)` at the sample times.
    pub traces: Vec<(f64, [usize; 3])>,
    pub extinction: [Extinction; 3],
    /// Sites found in `eta` or `eta_p` but not in `eta_w` after some event.
    pub ordering_violations: u64,
    /// Time up to which events were classified.
    pub observed_until: f64,
}

const CPDE: usize = 0;
const WEAK: usize = 1;
const PWEAK: usize = 2;

/// Runs `eta`, `eta_w`, `eta_p` on split streams sampled from `key`.
pub fn simulate_weak_processes(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    key: &ReplicaKey,
    options: &WeakOptions,
) -> Result<WeakOutcome> {
    let streams = LazyStreams::new(topology, params, *key, true)?;
    weak_processes_on(topology, params, eta0, zeta0, &streams, options)
}

pub fn weak_processes_on<S: StreamSet>(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    streams: &S,
    options: &WeakOptions,
) -> Result<WeakOutcome> {
    streams.check_topology(topology)?;
    check_initial(topology, eta0, zeta0)?;
    params.validate()?;
    if !streams.split_infections() {
        return Err(Error::Structure("weak processes need split infection streams".into()));
    }
    if options.origin >= topology.n_vertices() {
        return Err(Error::Structure(format!("origin {} is not a site", options.origin)));
    }
    let horizon = params.horizon.min(streams.horizon());
    let ne = topology.n_edges();
    let (in_box, box_time) = match options.m_radius {
        Some(n) => {
            let (_, edges) = topology.ball(options.origin, n as usize);
            let mut mask = vec![false; ne];
            for e in edges {
                mask[e] = true;
            }
            (mask, f64::from(n))
        }
        None => (vec![false; ne], f64::NEG_INFINITY),
    };

    let mut eta = [eta0.to_vec(), eta0.to_vec(), eta0.to_vec()];
    let mut count = [eta0.iter().filter(|&&b| b).count(); 3];
    let mut extinction: [Option<f64>; 3] = [None; 3];
    if count[0] == 0 {
        extinction = [Some(0.0); 3];
    }
    let mut zeta = zeta0.to_vec();
    let mut fresh = vec![false; ne];
    let mut stats = WeakCouplingStats::default();
    let mut traces = Vec::with_capacity(options.sample_times.len());
    let mut samples = options.sample_times.iter().copied().peekable();
    let mut ordering_violations = 0;
    let mut observed_until = horizon;

    for ev in Replay::all(streams) {
        let t = ev.key.time;
        if t > horizon {
            break;
        }
        if options.stop_when_p_extinct && extinction[PWEAK].is_some() && t > box_time {
            observed_until = t;
            break;
        }
        while let Some(s) = samples.next_if(|&s| s < t) {
            traces.push((s, count));
        }
        let id = ev.key.entity as usize;
        match ev.key.kind {
            StreamKind::Open | StreamKind::Close => {
                zeta[id] = ev.key.kind == StreamKind::Open;
                fresh[id] = true;
            }
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
            kind => {
                let f = fresh[id];
                let valid = zeta[id];
                let weak = !f || valid;
                let pweak = (f && valid) || (!f && kind == StreamKind::InfectAccept);
                let tl = &mut stats.tallies;
                tl.attempts += 1;
                tl.valid += u64::from(valid);
                tl.weakly_valid += u64::from(weak);
                tl.p_weakly_valid += u64::from(pweak);
                let (a, b) = topology.endpoints(id);
                let p_state = (eta[PWEAK][a], eta[PWEAK][b]);
                if !f && kind == StreamKind::InfectReject && p_state.0 != p_state.1 {
                    stats.tau.push(t);
                    stats.x.push(if p_state.0 { b } else { a });
                }
                if !pweak && (p_state.0 || p_state.1) {
                    stats.n_bar_p += 1;
                }
                if !f && in_box[id] && t <= box_time {
                    stats.m_n += 1;
                }
                let allowed = [valid, weak, pweak];
                for k in 0..3 {
                    if allowed[k] && eta[k][a] != eta[k][b] {
                        let target = if eta[k][a] { b } else { a };
                        eta[k][target] = true;
                        count[k] += 1;
                    }
                }
                for x in [a, b] {
                    if (eta[CPDE][x] || eta[PWEAK][x]) && !eta[WEAK][x] {
                        ordering_violations += 1;
                    }
                }
                fresh[id] = false;
            }
        }
    }
    for s in samples {
        traces.push((s, count));
    }
    stats.n_p = stats.tau.len() as u64;
    Ok(WeakOutcome {
        stats,
        traces,
        extinction: extinction.map(|e| e.map_or(Extinction::Survived, Extinction::At)),
        ordering_violations,
        observed_until,
    })
}

/// Replays the updates and attempts of one edge and checks that every attempt
/// seen as fresh is preceded by an update. Returns the number of mismatches.
pub fn check_freshness<S: StreamSet>(streams: &S, edge: usize, horizon: f64) -> u64 {
    let mut kinds = vec![StreamKind::Open, StreamKind::Close];
    kinds.extend_from_slice(streams.infection_kinds());
    let cursors = kinds
        .into_iter()
        .map(|k| (k, edge, streams.cursor(k, edge)))
        .collect();
    let mut fresh = false;
    let mut last_was_update: Option<bool> = None;
    let mut mismatches = 0;
    for ev in Replay::new(cursors) {
        if ev.key.time > horizon {
            break;
        }
        if ev.key.kind.is_update() {
            fresh = true;
            last_was_update = Some(true);
        } else {
            if fresh && last_was_update != Some(true) {
                mismatches += 1;
            }
            fresh = false;
            last_was_update = Some(false);
        }
    }
    mismatches
}

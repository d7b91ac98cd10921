//! CPDE simulation on a fixed set of event streams.
//!
//! Two engines produce the same outcome from the same streams:
//!
//! * [`simulate_cpde`] keeps a heap of only those events that can change the
//!   infection: recoveries of infected sites and infection attempts on edges
//!   with at least one infected endpoint. The environment of an edge is
//!   reconstructed on demand by skipping its update streams forward, so the
//!   cost does not grow with `v` or with the number of healthy sites.
//! * [`simulate_cpde_reference`] replays every event of every stream through
//!   [`Replay`] and keeps the full state. It is the engine used for event logs
//!   and the baseline the fast one is tested against.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Configuration, Params};
use crate::streams::{Cursor, Event, EventKey, StreamKind, StreamSet};
use crate::topology::Topology;

/// Extinction time, or the sentinel for a process still alive at the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extinction {
    At(f64),
    Survived,
}

impl Extinction {
    pub fn time(self) -> Option<f64> {
        match self {
            Extinction::At(t) => Some(t),
            Extinction::Survived => None,
        }
    }

    /// Extinction time with survivors censored at `cap`.
    pub fn censored(self, cap: f64) -> f64 {
        self.time().map_or(cap, |t| t.min(cap))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounters {
    /// Infection attempts that infected a healthy site.
    pub infections_applied: u64,
    /// Attempts from an infected to a healthy site across a closed edge.
    pub infections_blocked: u64,
    /// Recoveries of infected sites.
    pub recoveries: u64,
    /// Environment updates replayed. Only the reference engine sees all of
    /// them; the active-set engine reports `None`.
    pub updates: Option<u64>,
}

/// One line of the event log: `<time> <kind> <entity> <state>`.
///
/// Updates log the edge id and the edge state afterwards, recoveries the
/// vertex and `0`, successful infections the newly infected vertex and `1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoggedEvent {
    pub time: f64,
    pub kind: StreamKind,
    pub entity: usize,
    pub state: bool,
}

impl fmt::Display for LoggedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.kind.is_infection() { "infect" } else { self.kind.name() };
        write!(f, "{:e} {} {} {}", self.time, kind, self.entity, u8::from(self.state))
    }
}

#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// Times at which `|eta_t|` is recorded (state after all events `<= t`).
    pub sample_times: Vec<f64>,
    /// Times at which the full configuration is recorded.
    pub snapshot_times: Vec<f64>,
    pub record_final: bool,
    /// Forces the reference engine.
    pub record_events: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub extinction: Extinction,
    pub survived: bool,
    pub infected_trace: Vec<(f64, usize)>,
    pub counters: EventCounters,
    pub snapshots: Vec<Configuration>,
    /// Configuration at the horizon.
    pub final_config: Option<Configuration>,
    pub event_log: Vec<LoggedEvent>,
}

/// Builds an infection indicator from a list of sites.
pub fn eta_from_sites(n_vertices: usize, sites: &[usize]) -> Result<Vec<bool>> {
    let mut eta = vec![false; n_vertices];
    for &x in sites {
        *eta.get_mut(x)
            .ok_or_else(|| Error::Structure(format!("site {x} outside 0..{n_vertices}")))? = true;
    }
    Ok(eta)
}

pub(crate) fn check_initial(topology: &Topology, eta0: &[bool], zeta0: &[bool]) -> Result<()> {
    if eta0.len() != topology.n_vertices() || zeta0.len() != topology.n_edges() {
        return Err(Error::Structure(format!(
            "initial state has {} sites / {} edges but {topology} has {} / {}",
            eta0.len(),
            zeta0.len(),
            topology.n_vertices(),
            topology.n_edges()
        )));
    }
    Ok(())
}

fn check_horizon<S: StreamSet>(params: &Params, streams: &S) -> Result<()> {
    params.validate()?;
    if params.horizon > streams.horizon() {
        return Err(Error::Structure(format!(
            "horizon {} exceeds the streams' horizon {}",
            params.horizon,
            streams.horizon()
        )));
    }
    Ok(())
}

/// K-way merge of a selection of streams in replay order.
pub struct Replay<'s> {
    cursors: Vec<(StreamKind, usize, Cursor<'s>)>,
    heap: BinaryHeap<Reverse<(EventKey, u32)>>,
    marks: Vec<f64>,
}

impl<'s> Replay<'s> {
    pub fn new(cursors: Vec<(StreamKind, usize, Cursor<'s>)>) -> Self {
        let mut replay = Replay {
            heap: BinaryHeap::with_capacity(cursors.len()),
            marks: vec![0.0; cursors.len()],
            cursors,
        };
        for slot in 0..replay.cursors.len() {
            replay.refill(slot);
        }
        replay
    }

    /// Every stream of `streams`.
    pub fn all<S: StreamSet>(streams: &'s S) -> Self {
        let mut kinds = vec![StreamKind::Open, StreamKind::Close];
        kinds.extend_from_slice(streams.infection_kinds());
        Self::edges_and_vertices(streams, &kinds, true)
    }

    /// The given edge stream kinds on every edge, plus recoveries if asked.
    pub fn edges_and_vertices<S: StreamSet>(streams: &'s S, edge_kinds: &[StreamKind], recoveries: bool) -> Self {
        let mut cursors = Vec::new();
        for &kind in edge_kinds {
            for e in 0..streams.n_edges() {
                if !streams.is_empty_stream(kind, e) {
                    cursors.push((kind, e, streams.cursor(kind, e)));
                }
            }
        }
        if recoveries {
            for x in 0..streams.n_vertices() {
                cursors.push((StreamKind::Recover, x, streams.cursor(StreamKind::Recover, x)));
            }
        }
        Self::new(cursors)
    }

    fn refill(&mut self, slot: usize) {
        let (kind, entity, cursor) = &mut self.cursors[slot];
        if let Some(p) = cursor.next_point() {
            self.marks[slot] = p.mark;
            self.heap.push(Reverse((EventKey::new(p.time, *kind, *entity), slot as u32)));
        }
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse((k, _))| k.time)
    }
}

impl Iterator for Replay<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let Reverse((key, slot)) = self.heap.pop()?;
        let mark = self.marks[slot as usize];
        self.refill(slot as usize);
        Some(Event { key, mark })
    }
}

/// Environment of one edge, reconstructed lazily from its update streams.
struct LazyEdge<'s> {
    state: bool,
    open: Cursor<'s>,
    close: Cursor<'s>,
    never_opens: bool,
    never_closes: bool,
}

impl LazyEdge<'_> {
    /// State after every update at time `<= t`. Calls must be non-decreasing in `t`.
    fn state_at(&mut self, t: f64) -> bool {
        if (self.state && self.never_closes) || (!self.state && self.never_opens) {
            return self.state;
        }
        let last_open = self.open.advance_through(t);
        let last_close = self.close.advance_through(t);
        self.state = match (last_open, last_close) {
            // Opens precede closes at equal times.
            (Some(o), Some(c)) => o.time > c.time,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => self.state,
        };
        self.state
    }
}

fn infection_slot(kind: StreamKind) -> usize {
    usize::from(kind == StreamKind::InfectReject)
}

struct ActiveEngine<'s, 't, S: StreamSet> {
    topology: &'t Topology,
    streams: &'s S,
    zeta0: &'t [bool],
    eta: Vec<bool>,
    n_infected: usize,
    recover: Vec<Option<Cursor<'s>>>,
    infect: Vec<[Option<Cursor<'s>>; 2]>,
    pending: Vec<[bool; 2]>,
    env: Vec<Option<LazyEdge<'s>>>,
    heap: BinaryHeap<Reverse<EventKey>>,
    counters: EventCounters,
}

impl<'s, 't, S: StreamSet> ActiveEngine<'s, 't, S> {
    fn env_at(&mut self, e: usize, t: f64) -> bool {
        let streams = self.streams;
        let zeta0 = self.zeta0[e];
        self.env[e]
            .get_or_insert_with(|| LazyEdge {
                state: zeta0,
                open: streams.cursor(StreamKind::Open, e),
                close: streams.cursor(StreamKind::Close, e),
                never_opens: streams.is_empty_stream(StreamKind::Open, e),
                never_closes: streams.is_empty_stream(StreamKind::Close, e),
            })
            .state_at(t)
    }

    fn schedule_recovery(&mut self, x: usize, after: &EventKey) {
        let streams = self.streams;
        let c = self.recover[x].get_or_insert_with(|| streams.cursor(StreamKind::Recover, x));
        c.skip_until_after(after, StreamKind::Recover, x);
        if let Some(p) = c.peek() {
            self.heap.push(Reverse(EventKey::new(p.time, StreamKind::Recover, x)));
        }
    }

    fn schedule_infections(&mut self, e: usize, after: &EventKey) {
        let kinds = self.streams.infection_kinds();
        for &kind in kinds {
            let slot = infection_slot(kind);
            if self.pending[e][slot] {
                continue;
            }
            let streams = self.streams;
            let c = self.infect[e][slot].get_or_insert_with(|| streams.cursor(kind, e));
            c.skip_until_after(after, kind, e);
            if let Some(p) = c.peek() {
                self.heap.push(Reverse(EventKey::new(p.time, kind, e)));
                self.pending[e][slot] = true;
            }
        }
    }

    fn infect_site(&mut self, x: usize, key: &EventKey) {
        self.eta[x] = true;
        self.n_infected += 1;
        self.schedule_recovery(x, key);
        let topology = self.topology;
        for (_, e) in topology.incident(x) {
            self.schedule_infections(e, key);
        }
    }

    fn handle(&mut self, key: EventKey) {
        match key.kind {
            StreamKind::Recover => {
                let x = key.entity as usize;
                self.eta[x] = false;
                self.n_infected -= 1;
                self.counters.recoveries += 1;
            }
            kind => {
                let e = key.entity as usize;
                self.pending[e][infection_slot(kind)] = false;
                let (a, b) = self.topology.endpoints(e);
                if !self.eta[a] && !self.eta[b] {
                    return;
                }
                self.schedule_infections(e, &key);
                if self.eta[a] != self.eta[b] {
                    let target = if self.eta[a] { b } else { a };
                    if self.env_at(e, key.time) {
                        self.counters.infections_applied += 1;
                        self.infect_site(target, &key);
                    } else {
                        self.counters.infections_blocked += 1;
                    }
                }
            }
        }
    }

    fn configuration(&mut self, t: f64) -> Configuration {
        let zeta = (0..self.topology.n_edges()).map(|e| self.env_at(e, t)).collect();
        Configuration {
            time: t,
            eta: self.eta.clone(),
            zeta,
        }
    }
}

/// Simulates the CPDE from `(eta0, zeta0)` driven by `streams` up to
/// `params.horizon`. Deterministic in its inputs.
pub fn simulate_cpde<S: StreamSet>(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    streams: &S,
    options: &SimOptions,
) -> Result<SimOutcome> {
    if options.record_events {
        return simulate_cpde_reference(topology, params, eta0, zeta0, streams, options);
    }
    streams.check_topology(topology)?;
    check_initial(topology, eta0, zeta0)?;
    check_horizon(params, streams)?;
    let horizon = params.horizon;
    let mut eng = ActiveEngine {
        topology,
        streams,
        zeta0,
        eta: vec![false; topology.n_vertices()],
        n_infected: 0,
        recover: (0..topology.n_vertices()).map(|_| None).collect(),
        infect: (0..topology.n_edges()).map(|_| [None, None]).collect(),
        pending: vec![[false; 2]; topology.n_edges()],
        env: (0..topology.n_edges()).map(|_| None).collect(),
        heap: BinaryHeap::new(),
        counters: EventCounters::default(),
    };
    let start = EventKey::new(f64::NEG_INFINITY, StreamKind::Open, 0);
    for x in (0..eta0.len()).filter(|&x| eta0[x]) {
        eng.infect_site(x, &start);
    }
    let mut samples = Recorder::new(options);
    let mut extinction = if eng.n_infected == 0 { Some(0.0) } else { None };
    while extinction.is_none() {
        let Some(&Reverse(key)) = eng.heap.peek() else { break };
        if key.time > horizon {
            break;
        }
        samples.before(key.time, &mut eng);
        eng.heap.pop();
        eng.handle(key);
        if eng.n_infected == 0 {
            extinction = Some(key.time);
        }
    }
    samples.finish(&mut eng);
    let final_config = options.record_final.then(|| eng.configuration(horizon));
    Ok(SimOutcome {
        extinction: extinction.map_or(Extinction::Survived, Extinction::At),
        survived: extinction.is_none(),
        infected_trace: samples.trace,
        counters: eng.counters,
        snapshots: samples.snapshots,
        final_config,
        event_log: Vec::new(),
    })
}

trait Observed {
    fn infected(&self) -> usize;
    fn snapshot(&mut self, t: f64) -> Configuration;
}

impl<S: StreamSet> Observed for ActiveEngine<'_, '_, S> {
    fn infected(&self) -> usize {
        self.n_infected
    }
    fn snapshot(&mut self, t: f64) -> Configuration {
        self.configuration(t)
    }
}

/// Records sample times and snapshots as the replay passes them.
struct Recorder<'o> {
    sample_times: &'o [f64],
    snapshot_times: &'o [f64],
    trace: Vec<(f64, usize)>,
    snapshots: Vec<Configuration>,
}

impl<'o> Recorder<'o> {
    fn new(options: &'o SimOptions) -> Self {
        Recorder {
            sample_times: &options.sample_times,
            snapshot_times: &options.snapshot_times,
            trace: Vec::with_capacity(options.sample_times.len()),
            snapshots: Vec::with_capacity(options.snapshot_times.len()),
        }
    }

    /// Records every pending time strictly before an event at `t`.
    fn before<O: Observed>(&mut self, t: f64, state: &mut O) {
        while let Some(&s) = self.sample_times.get(self.trace.len()) {
            if s >= t {
                break;
            }
            self.trace.push((s, state.infected()));
        }
        while let Some(&s) = self.snapshot_times.get(self.snapshots.len()) {
            if s >= t {
                break;
            }
            self.snapshots.push(state.snapshot(s));
        }
    }

    fn finish<O: Observed>(&mut self, state: &mut O) {
        self.before(f64::INFINITY, state);
    }
}

struct FullState<'t> {
    topology: &'t Topology,
    eta: Vec<bool>,
    zeta: Vec<bool>,
    n_infected: usize,
}

impl Observed for FullState<'_> {
    fn infected(&self) -> usize {
        self.n_infected
    }
    fn snapshot(&mut self, t: f64) -> Configuration {
        Configuration {
            time: t,
            eta: self.eta.clone(),
            zeta: self.zeta.clone(),
        }
    }
}

/// Full-replay engine. Same outcome as [`simulate_cpde`] on the same streams,
/// plus update counts and an optional event log.
pub fn simulate_cpde_reference<S: StreamSet>(
    topology: &Topology,
    params: &Params,
    eta0: &[bool],
    zeta0: &[bool],
    streams: &S,
    options: &SimOptions,
) -> Result<SimOutcome> {
    streams.check_topology(topology)?;
    check_initial(topology, eta0, zeta0)?;
    check_horizon(params, streams)?;
    let horizon = params.horizon;
    let mut st = FullState {
        topology,
        eta: eta0.to_vec(),
        zeta: zeta0.to_vec(),
        n_infected: eta0.iter().filter(|&&b| b).count(),
    };
    let mut counters = EventCounters {
        updates: Some(0),
        ..Default::default()
    };
    let mut log = Vec::new();
    let mut samples = Recorder::new(options);
    let mut extinction = if st.n_infected == 0 { Some(0.0) } else { None };
    // After extinction only updates matter, and only if someone looks at them.
    let keep_env = options.record_final || !options.snapshot_times.is_empty() || options.record_events;
    for ev in Replay::all(streams) {
        let key = ev.key;
        if key.time > horizon || (extinction.is_some() && !keep_env) {
            break;
        }
        samples.before(key.time, &mut st);
        let entity = key.entity as usize;
        match key.kind {
            StreamKind::Open | StreamKind::Close => {
                st.zeta[entity] = key.kind == StreamKind::Open;
                *counters.updates.as_mut().unwrap() += 1;
                if options.record_events {
                    log.push(LoggedEvent {
                        time: key.time,
                        kind: key.kind,
                        entity,
                        state: st.zeta[entity],
                    });
                }
            }
            StreamKind::Recover => {
                if st.eta[entity] {
                    st.eta[entity] = false;
                    st.n_infected -= 1;
                    counters.recoveries += 1;
                    if options.record_events {
                        log.push(LoggedEvent {
                            time: key.time,
                            kind: key.kind,
                            entity,
                            state: false,
                        });
                    }
                    if st.n_infected == 0 {
                        extinction = Some(key.time);
                    }
                }
            }
            _ => {
                let (a, b) = st.topology.endpoints(entity);
                if st.eta[a] != st.eta[b] {
                    if st.zeta[entity] {
                        let target = if st.eta[a] { b } else { a };
                        st.eta[target] = true;
                        st.n_infected += 1;
                        counters.infections_applied += 1;
                        if options.record_events {
                            log.push(LoggedEvent {
                                time: key.time,
                                kind: key.kind,
                                entity: target,
                                state: true,
                            });
                        }
                    } else {
                        counters.infections_blocked += 1;
                    }
                }
            }
        }
    }
    samples.finish(&mut st);
    let final_config = options.record_final.then(|| Configuration {
        time: horizon,
        eta: st.eta.clone(),
        zeta: st.zeta.clone(),
    });
    Ok(SimOutcome {
        extinction: extinction.map_or(Extinction::Survived, Extinction::At),
        survived: extinction.is_none(),
        infected_trace: samples.trace,
        counters,
        snapshots: samples.snapshots,
        final_config,
        event_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_initial_environment;
    use crate::rng::ReplicaKey;
    use crate::streams::{EventStreams, LazyStreams};

    fn run_both(topology: &Topology, params: &Params, eta0: &[bool], seed: u64, split: bool) {
        let key = ReplicaKey::new(seed);
        let zeta0 = sample_initial_environment(topology, params.p, &key.child(1)).unwrap();
        let streams = LazyStreams::new(topology, params, key, split).unwrap();
        let options = SimOptions {
            sample_times: vec![0.5, 1.0, 2.5, 7.0],
            snapshot_times: vec![1.0, 3.0],
            record_final: true,
            record_events: false,
        };
        let fast = simulate_cpde(topology, params, eta0, &zeta0, &streams, &options).unwrap();
        let slow = simulate_cpde_reference(topology, params, eta0, &zeta0, &streams, &options).unwrap();
        assert_eq!(fast.extinction, slow.extinction);
        assert_eq!(fast.infected_trace, slow.infected_trace);
        assert_eq!(fast.snapshots, slow.snapshots);
        assert_eq!(fast.final_config, slow.final_config);
        assert_eq!(fast.counters.infections_applied, slow.counters.infections_applied);
        assert_eq!(fast.counters.infections_blocked, slow.counters.infections_blocked);
        assert_eq!(fast.counters.recoveries, slow.counters.recoveries);
    }

    #[test]
    fn engines_agree_on_shared_streams() {
        let cycle = Topology::cycle(30).unwrap();
        let torus = Topology::torus2d(5, 4).unwrap();
        let mut seed = 0;
        for &(lambda, v, p) in &[(2.0, 1.0, 0.5), (3.0, 0.0, 0.7), (2.5, 20.0, 0.6), (4.0, 0.3, 1.0), (1.0, 2.0, 0.0)] {
            let params = Params::new(lambda, v, p, 8.0).unwrap();
            for split in [false, true] {
                seed += 1;
                run_both(&cycle, &params, &eta_from_sites(30, &[0, 1, 2, 15]).unwrap(), seed, split);
                run_both(&torus, &params, &[true; 20], seed, split);
            }
        }
    }

    #[test]
    fn pure_death_extinction_is_first_recovery() {
        let t = Topology::path(3).unwrap();
        let params = Params::new(0.0, 1.0, 0.5, 50.0).unwrap();
        let streams = LazyStreams::new(&t, &params, ReplicaKey::new(5), false).unwrap();
        let eta0 = eta_from_sites(3, &[1]).unwrap();
        let out = simulate_cpde(&t, &params, &eta0, &[true, true], &streams, &SimOptions::default()).unwrap();
        let first = streams.cursor(StreamKind::Recover, 1).next_point().unwrap().time;
        assert_eq!(out.extinction, Extinction::At(first));
        assert!(!out.survived);
    }

    #[test]
    fn hand_written_log() {
        // Path 0-1-2. Edge 0 open, edge 1 closed until it opens at 1.5.
        let t = Topology::path(3).unwrap();
        let params = Params::new(1.0, 1.0, 0.5, 10.0).unwrap();
        let mut s = EventStreams::for_topology(&t, 10.0, false);
        s.push(StreamKind::Infect, 0, 1.0).unwrap(); // 0 -> 1
        s.push(StreamKind::Infect, 1, 1.2).unwrap(); // blocked
        s.push(StreamKind::Open, 1, 1.5).unwrap();
        s.push(StreamKind::Infect, 1, 2.0).unwrap(); // 1 -> 2
        s.push(StreamKind::Recover, 0, 3.0).unwrap();
        s.push(StreamKind::Recover, 1, 4.0).unwrap();
        s.push(StreamKind::Recover, 2, 5.0).unwrap();
        s.push(StreamKind::Recover, 2, 6.0).unwrap();
        let eta0 = eta_from_sites(3, &[0]).unwrap();
        let options = SimOptions {
            record_events: true,
            ..Default::default()
        };
        let out = simulate_cpde(&t, &params, &eta0, &[true, false], &s, &options).unwrap();
        assert_eq!(out.extinction, Extinction::At(5.0));
        assert_eq!(out.counters.infections_applied, 2);
        assert_eq!(out.counters.infections_blocked, 1);
        assert_eq!(out.counters.recoveries, 3);
        let lines: Vec<String> = out.event_log.iter().map(|e| e.to_string()).collect();
        assert_eq!(lines[0], "1e0 infect 1 1");
        assert_eq!(lines[1], "1.5e0 open 1 1");
        assert_eq!(lines.last().unwrap(), "5e0 recover 2 0");
        let fast = simulate_cpde(&t, &params, &eta0, &[true, false], &s, &SimOptions::default()).unwrap();
        assert_eq!(fast.extinction, Extinction::At(5.0));
    }

    #[test]
    fn equal_time_update_precedes_infection() {
        let t = Topology::path(2).unwrap();
        let params = Params::new(1.0, 1.0, 0.5, 10.0).unwrap();
        let mut s = EventStreams::for_topology(&t, 10.0, false);
        s.push(StreamKind::Open, 0, 1.0).unwrap();
        s.push(StreamKind::Infect, 0, 1.0).unwrap();
        s.push(StreamKind::Recover, 0, 2.0).unwrap();
        let eta0 = eta_from_sites(2, &[0]).unwrap();
        let out = simulate_cpde(&t, &params, &eta0, &[false], &s, &SimOptions::default()).unwrap();
        assert_eq!(out.counters.infections_applied, 1);
        assert!(out.survived);
    }

    #[test]
    fn structural_mismatch_is_rejected() {
        let t = Topology::path(3).unwrap();
        let other = Topology::cycle(5).unwrap();
        let params = Params::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let s = LazyStreams::new(&other, &params, ReplicaKey::new(1), false).unwrap();
        let r = simulate_cpde(&t, &params, &[true; 3], &[true; 2], &s, &SimOptions::default());
        assert!(matches!(r, Err(Error::Structure(_))));
        let longer = params.with_horizon(2.0);
        let s3 = LazyStreams::new(&t, &params, ReplicaKey::new(1), false).unwrap();
        let r = simulate_cpde(&t, &longer, &[true; 3], &[true; 2], &s3, &SimOptions::default());
        assert!(matches!(r, Err(Error::Structure(_))));
    }
}

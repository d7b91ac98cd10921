//! Poisson event streams of the graphical representation.
//!
//! Each edge carries opening, closing and infection streams and each vertex a
//! recovery stream. A stream is a strictly increasing sequence of [`Point`]s in
//! `[0, horizon]`; every point carries an independent uniform `mark` that
//! couplings use for thinning.
//!
//! [`LazyStreams`] generates a stream window by window: window `w` of a stream
//! of rate `r` covers `[w L, (w + 1) L)` with `L = WINDOW_MEAN_POINTS / r` and
//! is drawn from its own keyed ChaCha stream, so windows can be produced in any
//! order and the realization does not depend on the horizon or on which
//! process asked first. [`EventStreams`] is the materialized form, used for
//! explicit event logs and for engines that replay every event.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::{stream_id, ReplicaKey};
use crate::topology::Topology;

const WINDOW_MEAN_POINTS: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    Open,
    Close,
    Recover,
    /// Infection attempts at rate `lambda`.
    Infect,
    /// The rate `lambda p` part of a split infection stream.
    InfectAccept,
    /// The rate `lambda (1 - p)` part of a split infection stream.
    InfectReject,
    /// Reserved for sampling the initial environment.
    InitialEnvironment,
}

impl StreamKind {
    pub const ALL_EVENTS: [StreamKind; 6] = [
        StreamKind::Open,
        StreamKind::Close,
        StreamKind::Recover,
        StreamKind::Infect,
        StreamKind::InfectAccept,
        StreamKind::InfectReject,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    /// Tie-break class at equal times: updates, then recoveries, then infections.
    pub fn rank(self) -> u8 {
        match self {
            StreamKind::Open | StreamKind::Close => 0,
            StreamKind::Recover => 1,
            StreamKind::Infect | StreamKind::InfectAccept | StreamKind::InfectReject => 2,
            StreamKind::InitialEnvironment => 3,
        }
    }

    pub fn is_infection(self) -> bool {
        self.rank() == 2
    }

    pub fn is_update(self) -> bool {
        self.rank() == 0
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Open => "open",
            StreamKind::Close => "close",
            StreamKind::Recover => "recover",
            StreamKind::Infect => "infect",
            StreamKind::InfectAccept => "infect_a",
            StreamKind::InfectReject => "infect_r",
            StreamKind::InitialEnvironment => "initial",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub time: f64,
    pub mark: f64,
}

/// Position of an event in the global replay order.
#[derive(Clone, Copy, Debug)]
pub struct EventKey {
    pub time: f64,
    pub kind: StreamKind,
    pub entity: u32,
}

impl EventKey {
    pub fn new(time: f64, kind: StreamKind, entity: usize) -> Self {
        EventKey {
            time,
            kind,
            entity: entity as u32,
        }
    }
}

impl Ord for EventKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.entity.cmp(&other.entity))
            .then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for EventKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for EventKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EventKey {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub key: EventKey,
    pub mark: f64,
}

/// Per-kind intensities. Unused kinds have rate 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamRates {
    pub open: f64,
    pub close: f64,
    pub recover: f64,
    pub infect: f64,
    pub infect_accept: f64,
    pub infect_reject: f64,
}

impl StreamRates {
    pub fn from_params(params: &Params, split_infections: bool) -> Self {
        let (infect, accept, reject) = if split_infections {
            (0.0, params.lambda * params.p, params.lambda * (1.0 - params.p))
        } else {
            (params.lambda, 0.0, 0.0)
        };
        StreamRates {
            open: params.open_rate(),
            close: params.close_rate(),
            recover: 1.0,
            infect,
            infect_accept: accept,
            infect_reject: reject,
        }
    }

    pub fn rate(&self, kind: StreamKind) -> f64 {
        match kind {
            StreamKind::Open => self.open,
            StreamKind::Close => self.close,
            StreamKind::Recover => self.recover,
            StreamKind::Infect => self.infect,
            StreamKind::InfectAccept => self.infect_accept,
            StreamKind::InfectReject => self.infect_reject,
            StreamKind::InitialEnvironment => 0.0,
        }
    }
}

/// A full set of event streams for one replica.
pub trait StreamSet {
    fn n_vertices(&self) -> usize;
    fn n_edges(&self) -> usize;
    fn horizon(&self) -> f64;
    fn split_infections(&self) -> bool;
    fn cursor(&self, kind: StreamKind, entity: usize) -> Cursor<'_>;
    /// True only if the stream certainly has no points.
    fn is_empty_stream(&self, kind: StreamKind, entity: usize) -> bool;

    fn infection_kinds(&self) -> &'static [StreamKind] {
        if self.split_infections() {
            &[StreamKind::InfectAccept, StreamKind::InfectReject]
        } else {
            &[StreamKind::Infect]
        }
    }

    fn check_topology(&self, topology: &Topology) -> Result<()> {
        if self.n_vertices() != topology.n_vertices() || self.n_edges() != topology.n_edges() {
            return Err(Error::Structure(format!(
                "streams cover {} vertices / {} edges but {} has {} / {}",
                self.n_vertices(),
                self.n_edges(),
                topology,
                topology.n_vertices(),
                topology.n_edges()
            )));
        }
        Ok(())
    }

    /// Every event of every stream, in replay order.
    fn merged_events(&self) -> Vec<Event> {
        let mut events = Vec::new();
        let edge_kinds = [StreamKind::Open, StreamKind::Close]
            .into_iter()
            .chain(self.infection_kinds().iter().copied());
        for kind in edge_kinds {
            for e in 0..self.n_edges() {
                let mut c = self.cursor(kind, e);
                while let Some(pt) = c.next_point() {
                    events.push(Event {
                        key: EventKey::new(pt.time, kind, e),
                        mark: pt.mark,
                    });
                }
            }
        }
        for x in 0..self.n_vertices() {
            let mut c = self.cursor(StreamKind::Recover, x);
            while let Some(pt) = c.next_point() {
                events.push(Event {
                    key: EventKey::new(pt.time, StreamKind::Recover, x),
                    mark: pt.mark,
                });
            }
        }
        events.sort_unstable_by_key(|e| e.key);
        events
    }
}

/// Lazily generated, keyed streams.
#[derive(Clone, Debug)]
pub struct LazyStreams {
    key: ReplicaKey,
    n_vertices: usize,
    n_edges: usize,
    horizon: f64,
    split: bool,
    rates: StreamRates,
    /// Window length per kind index; 0 for empty streams.
    window: [f64; 6],
}

impl LazyStreams {
    pub fn new(topology: &Topology, params: &Params, key: ReplicaKey, split_infections: bool) -> Result<Self> {
        params.validate()?;
        Ok(Self::with_rates(
            topology,
            StreamRates::from_params(params, split_infections),
            params.horizon,
            key,
            split_infections,
        ))
    }

    pub fn with_rates(topology: &Topology, rates: StreamRates, horizon: f64, key: ReplicaKey, split: bool) -> Self {
        let mut window = [0.0; 6];
        for kind in StreamKind::ALL_EVENTS {
            let r = rates.rate(kind);
            if r > 0.0 {
                // At most 2^31 windows inside the horizon.
                window[kind.index()] = (WINDOW_MEAN_POINTS / r).max(horizon / 2f64.powi(31));
            }
        }
        LazyStreams {
            key,
            n_vertices: topology.n_vertices(),
            n_edges: topology.n_edges(),
            horizon,
            split,
            rates,
            window,
        }
    }

    pub fn key(&self) -> &ReplicaKey {
        &self.key
    }

    pub fn rates(&self) -> &StreamRates {
        &self.rates
    }

    fn last_window(&self, len: f64) -> u64 {
        (self.horizon / len).floor() as u64
    }

    fn fill_window(&self, kind: StreamKind, entity: usize, w: u64, buf: &mut Vec<Point>) {
        buf.clear();
        let rate = self.rates.rate(kind);
        let len = self.window[kind.index()];
        let start = w as f64 * len;
        let end = ((w + 1) as f64 * len).min(self.horizon);
        let mut rng = self.key.rng(stream_id(kind.tag(), entity, w as u32));
        let mut t = start;
        loop {
            let gap: f64 = rng.sample(Exp1);
            t += gap / rate;
            // Windows are half-open; only the horizon itself is included.
            if t > end || (t == end && end < self.horizon) {
                break;
            }
            let mark: f64 = rng.random();
            buf.push(Point { time: t, mark });
        }
    }
}

impl StreamSet for LazyStreams {
    fn n_vertices(&self) -> usize {
        self.n_vertices
    }
    fn n_edges(&self) -> usize {
        self.n_edges
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn split_infections(&self) -> bool {
        self.split
    }

    fn cursor(&self, kind: StreamKind, entity: usize) -> Cursor<'_> {
        let len = self.window[kind.index()];
        if len == 0.0 {
            return Cursor::empty();
        }
        Cursor {
            src: Source::Lazy {
                streams: self,
                kind,
                entity,
                len,
                last: self.last_window(len),
            },
            buf: Vec::new(),
            idx: 0,
            window: None,
        }
    }

    fn is_empty_stream(&self, kind: StreamKind, _entity: usize) -> bool {
        self.window[kind.index()] == 0.0
    }
}

#[derive(Clone, Debug)]
enum Source<'a> {
    Empty,
    Slice(&'a [Point]),
    Lazy {
        streams: &'a LazyStreams,
        kind: StreamKind,
        entity: usize,
        len: f64,
        last: u64,
    },
}

/// Forward iterator over one stream with window skipping.
#[derive(Clone, Debug)]
pub struct Cursor<'a> {
    src: Source<'a>,
    buf: Vec<Point>,
    idx: usize,
    /// Window currently held in `buf` (lazy source only).
    window: Option<u64>,
}

impl<'a> Cursor<'a> {
    pub fn empty() -> Self {
        Cursor {
            src: Source::Empty,
            buf: Vec::new(),
            idx: 0,
            window: None,
        }
    }

    pub fn from_slice(points: &'a [Point]) -> Self {
        Cursor {
            src: Source::Slice(points),
            buf: Vec::new(),
            idx: 0,
            window: None,
        }
    }

    pub fn peek(&mut self) -> Option<Point> {
        match self.src {
            Source::Empty => None,
            Source::Slice(s) => s.get(self.idx).copied(),
            Source::Lazy {
                streams,
                kind,
                entity,
                last,
                ..
            } => loop {
                if self.idx < self.buf.len() {
                    return Some(self.buf[self.idx]);
                }
                let next = self.window.map_or(0, |w| w + 1);
                if next > last {
                    return None;
                }
                streams.fill_window(kind, entity, next, &mut self.buf);
                self.window = Some(next);
                self.idx = 0;
            },
        }
    }

    pub fn next_point(&mut self) -> Option<Point> {
        let p = self.peek()?;
        self.idx += 1;
        Some(p)
    }

    /// Consumes every point with `time <= t` and returns the last one consumed.
    /// Whole windows strictly between the current position and `t` are only
    /// generated if needed to find that last point.
    pub fn advance_through(&mut self, t: f64) -> Option<Point> {
        match self.src {
            Source::Empty => None,
            Source::Slice(s) => {
                let rest = &s[self.idx..];
                let k = rest.partition_point(|p| p.time <= t);
                self.idx += k;
                if k > 0 {
                    Some(rest[k - 1])
                } else {
                    None
                }
            }
            Source::Lazy {
                streams,
                kind,
                entity,
                len,
                last,
            } => {
                if t < 0.0 {
                    return None;
                }
                let target = ((t / len).floor() as u64).min(last);
                let current = self.window;
                if current.is_some_and(|w| w >= target) {
                    let rest = &self.buf[self.idx..];
                    let k = rest.partition_point(|p| p.time <= t);
                    let out = if k > 0 { Some(rest[k - 1]) } else { None };
                    self.idx += k;
                    return out;
                }
                let leftover = if self.idx < self.buf.len() {
                    self.buf.last().copied()
                } else {
                    None
                };
                let first_unseen = current.map_or(0, |w| w + 1);
                streams.fill_window(kind, entity, target, &mut self.buf);
                self.window = Some(target);
                let k = self.buf.partition_point(|p| p.time <= t);
                self.idx = k;
                if k > 0 {
                    return Some(self.buf[k - 1]);
                }
                let mut scratch = Vec::new();
                let mut w = target;
                while w > first_unseen {
                    w -= 1;
                    streams.fill_window(kind, entity, w, &mut scratch);
                    if let Some(&p) = scratch.last() {
                        return Some(p);
                    }
                }
                leftover
            }
        }
    }

    /// Consumes points until the next one would come after `key` in replay
    /// order, treating the points as events `(time, kind, entity)`.
    pub fn skip_until_after(&mut self, key: &EventKey, kind: StreamKind, entity: usize) {
        self.advance_through(key.time.next_down());
        while let Some(p) = self.peek() {
            if EventKey::new(p.time, kind, entity) <= *key {
                self.idx += 1;
            } else {
                break;
            }
        }
    }
}

/// Materialized streams.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStreams {
    n_vertices: usize,
    n_edges: usize,
    horizon: f64,
    split: bool,
    /// Indexed by kind, then entity.
    points: [Vec<Vec<Point>>; 6],
}

impl EventStreams {
    pub fn empty(n_vertices: usize, n_edges: usize, horizon: f64, split_infections: bool) -> Self {
        let per_edge = || vec![Vec::new(); n_edges];
        EventStreams {
            n_vertices,
            n_edges,
            horizon,
            split: split_infections,
            points: [
                per_edge(),
                per_edge(),
                vec![Vec::new(); n_vertices],
                per_edge(),
                per_edge(),
                per_edge(),
            ],
        }
    }

    pub fn for_topology(topology: &Topology, horizon: f64, split_infections: bool) -> Self {
        Self::empty(topology.n_vertices(), topology.n_edges(), horizon, split_infections)
    }

    /// Materializes any stream set over its full horizon.
    pub fn collect_from<S: StreamSet>(source: &S) -> Self {
        let mut out = Self::empty(source.n_vertices(), source.n_edges(), source.horizon(), source.split_infections());
        for kind in StreamKind::ALL_EVENTS {
            for entity in 0..out.points[kind.index()].len() {
                let mut c = source.cursor(kind, entity);
                let mut pts = Vec::new();
                while let Some(p) = c.next_point() {
                    pts.push(p);
                }
                out.points[kind.index()][entity] = pts;
            }
        }
        out
    }

    /// Appends a point with mark 0.5. Points must arrive in increasing time.
    pub fn push(&mut self, kind: StreamKind, entity: usize, time: f64) -> Result<()> {
        self.push_marked(kind, entity, time, 0.5)
    }

    pub fn push_marked(&mut self, kind: StreamKind, entity: usize, time: f64, mark: f64) -> Result<()> {
        if kind == StreamKind::InitialEnvironment {
            return Err(Error::Structure("initial environment is not an event stream".into()));
        }
        if !(0.0..=self.horizon).contains(&time) {
            return Err(Error::Range(format!("time {time} outside [0, {}]", self.horizon)));
        }
        let stream = self.points[kind.index()]
            .get_mut(entity)
            .ok_or_else(|| Error::Structure(format!("no {} stream for entity {entity}", kind.name())))?;
        if stream.last().is_some_and(|p| p.time >= time) {
            return Err(Error::Structure(format!(
                "{} stream of entity {entity} must be strictly increasing",
                kind.name()
            )));
        }
        stream.push(Point { time, mark });
        Ok(())
    }

    pub fn points(&self, kind: StreamKind, entity: usize) -> &[Point] {
        &self.points[kind.index()][entity]
    }

    pub fn count(&self, kind: StreamKind) -> usize {
        self.points[kind.index()].iter().map(Vec::len).sum()
    }

    /// Copy keeping only the points `keep` accepts.
    pub fn filtered(&self, mut keep: impl FnMut(StreamKind, usize, &Point) -> bool) -> Self {
        let mut out = self.clone();
        for kind in StreamKind::ALL_EVENTS {
            for (entity, pts) in out.points[kind.index()].iter_mut().enumerate() {
                pts.retain(|p| keep(kind, entity, p));
            }
        }
        out
    }
}

impl StreamSet for EventStreams {
    fn n_vertices(&self) -> usize {
        self.n_vertices
    }
    fn n_edges(&self) -> usize {
        self.n_edges
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn split_infections(&self) -> bool {
        self.split
    }
    fn cursor(&self, kind: StreamKind, entity: usize) -> Cursor<'_> {
        if kind == StreamKind::InitialEnvironment {
            return Cursor::empty();
        }
        Cursor::from_slice(&self.points[kind.index()][entity])
    }
    fn is_empty_stream(&self, kind: StreamKind, entity: usize) -> bool {
        kind == StreamKind::InitialEnvironment || self.points[kind.index()][entity].is_empty()
    }
}

/// Samples the streams of one replica.
pub fn sample_event_streams(
    topology: &Topology,
    params: &Params,
    key: ReplicaKey,
    split_infections: bool,
) -> Result<LazyStreams> {
    LazyStreams::new(topology, params, key, split_infections)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy(lambda: f64, v: f64, p: f64, horizon: f64, seed: u64) -> (Topology, LazyStreams) {
        let t = Topology::path(2).unwrap();
        let params = Params::new(lambda, v, p, horizon).unwrap();
        let s = LazyStreams::new(&t, &params, ReplicaKey::new(seed), false).unwrap();
        (t, s)
    }

    #[test]
    fn zero_rates_give_empty_streams() {
        let (_, s) = lazy(0.0, 0.0, 0.5, 100.0, 1);
        assert!(s.cursor(StreamKind::Infect, 0).next_point().is_none());
        assert!(s.cursor(StreamKind::Open, 0).next_point().is_none());
        assert!(s.cursor(StreamKind::Close, 0).next_point().is_none());
        assert!(s.cursor(StreamKind::Recover, 0).next_point().is_some());
    }

    #[test]
    fn points_are_increasing_and_inside_horizon() {
        let (_, s) = lazy(3.0, 1.0, 0.3, 50.0, 2);
        let mat = EventStreams::collect_from(&s);
        for kind in StreamKind::ALL_EVENTS {
            let entities = if kind == StreamKind::Recover { 2 } else { 1 };
            for e in 0..entities {
                let pts = mat.points(kind, e);
                assert!(pts.windows(2).all(|w| w[0].time < w[1].time));
                assert!(pts.iter().all(|p| p.time > 0.0 && p.time <= 50.0));
            }
        }
    }

    #[test]
    fn infection_count_matches_poisson_mean() {
        // lambda = 2, horizon = 100: mean 200, sd sqrt(200) per replica.
        let reps = 400;
        let total: usize = (0..reps)
            .map(|r| {
                let (_, s) = lazy(2.0, 1.0, 0.5, 100.0, 1000 + r);
                EventStreams::collect_from(&s).count(StreamKind::Infect)
            })
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (200.0f64 / reps as f64).sqrt();
        assert!((mean - 200.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn horizon_prefix_property() {
        let (_, short) = lazy(2.0, 1.0, 0.5, 10.0, 9);
        let (_, long) = lazy(2.0, 1.0, 0.5, 40.0, 9);
        let a = EventStreams::collect_from(&short);
        let b = EventStreams::collect_from(&long);
        let prefix: Vec<Point> = b
            .points(StreamKind::Infect, 0)
            .iter()
            .copied()
            .filter(|p| p.time <= 10.0)
            .collect();
        assert_eq!(a.points(StreamKind::Infect, 0), &prefix[..]);
    }

    #[test]
    fn advance_through_agrees_with_materialized() {
        let (_, s) = lazy(5.0, 1.0, 0.5, 200.0, 4);
        let mat = EventStreams::collect_from(&s);
        let pts = mat.points(StreamKind::Infect, 0);
        let mut lazy_cursor = s.cursor(StreamKind::Infect, 0);
        let mut slice_cursor = mat.cursor(StreamKind::Infect, 0);
        for &t in &[0.5, 0.7, 3.0, 3.0, 17.2, 90.0, 90.01, 150.0, 199.0, 250.0] {
            let a = lazy_cursor.advance_through(t);
            let b = slice_cursor.advance_through(t);
            assert_eq!(a, b, "t = {t}");
            assert_eq!(lazy_cursor.peek(), slice_cursor.peek());
            let expected_last = pts.iter().rev().find(|p| p.time <= t).copied();
            if let Some(p) = a {
                assert_eq!(Some(p), expected_last);
            }
        }
    }

    #[test]
    fn explicit_streams_reject_bad_input() {
        let mut s = EventStreams::empty(2, 1, 10.0, false);
        s.push(StreamKind::Infect, 0, 1.0).unwrap();
        assert!(s.push(StreamKind::Infect, 0, 1.0).is_err());
        assert!(s.push(StreamKind::Infect, 0, 11.0).is_err());
        assert!(s.push(StreamKind::Recover, 5, 1.0).is_err());
    }

    #[test]
    fn replay_order_breaks_ties_by_kind_then_entity() {
        let mut keys = vec![
            EventKey::new(1.0, StreamKind::Infect, 0),
            EventKey::new(1.0, StreamKind::Recover, 3),
            EventKey::new(1.0, StreamKind::Close, 7),
            EventKey::new(1.0, StreamKind::Recover, 1),
            EventKey::new(0.5, StreamKind::Infect, 9),
        ];
        keys.sort();
        let order: Vec<_> = keys.iter().map(|k| (k.kind, k.entity)).collect();
        assert_eq!(
            order,
            vec![
                (StreamKind::Infect, 9),
                (StreamKind::Close, 7),
                (StreamKind::Recover, 1),
                (StreamKind::Recover, 3),
                (StreamKind::Infect, 0)
            ]
        );
    }
}

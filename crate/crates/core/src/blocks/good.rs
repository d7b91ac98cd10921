//! Good blocks of the fixed-shape construction and their oriented percolation.

use crate::engine::{simulate_cpde, SimOptions};
use crate::error::{Error, Result};
use crate::model::{sample_initial_environment, Params};
use crate::rng::ReplicaKey;
use crate::streams::{LazyStreams, StreamKind, StreamSet};
use crate::topology::{Topology, TopologyKind};

/// Sites `4k - 2n, ..., 4k - 2n + 3` of block `(k, n)`.
pub fn block_interval(k: i64, n: i64) -> [i64; 4] {
    let a = 4 * k - 2 * n;
    [a, a + 1, a + 2, a + 3]
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodBlockConfig {
    /// `M = vT`.
    pub m: f64,
    /// Minimum gap of (c3) as a fraction of `T`; (c4) uses subwindows of
    /// length `gap_delta T / 6`.
    pub gap_delta: f64,
    /// Inclusive range of `k`.
    pub k_range: (i64, i64),
    pub windows: usize,
    /// Vertex playing the site `0`.
    pub origin: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodBlockGrid {
    pub m: f64,
    pub gap_delta: f64,
    pub t_len: f64,
    pub k_range: (i64, i64),
    /// `conditions[n][k - k_lo] = [c1, c2, c3, c4]`.
    pub conditions: Vec<Vec<[bool; 4]>>,
    /// Good blocks reachable from `(0, 0)` through `(k, n) -> (k, n+1), (k+1, n+1)`.
    pub reachable: Vec<Vec<bool>>,
}

impl GoodBlockGrid {
    pub fn good(&self, k: i64, n: usize) -> bool {
        self.index(k).is_some_and(|i| self.conditions[n][i].iter().all(|&c| c))
    }

    fn index(&self, k: i64) -> Option<usize> {
        (self.k_range.0..=self.k_range.1).contains(&k).then(|| (k - self.k_range.0) as usize)
    }

    /// Highest row reached by the percolation cluster of `(0, 0)`, if any.
    pub fn reach_depth(&self) -> Option<usize> {
        self.reachable.iter().rposition(|row| row.iter().any(|&r| r))
    }

    /// `k, n, c1, c2, c3, c4, W` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,c1,c2,c3,c4,W\n");
        for (n, row) in self.conditions.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                let k = self.k_range.0 + i as i64;
                let w = c.iter().all(|&b| b);
                out.push_str(&format!(
                    "{k},{n},{},{},{},{},{}\n",
                    c[0] as u8, c[1] as u8, c[2] as u8, c[3] as u8, w as u8
                ));
            }
        }
        out
    }
}

/// Maps lattice sites to vertices of a path or cycle.
#[derive(Clone, Copy, Debug)]
struct SiteMap {
    n: usize,
    periodic: bool,
    origin: usize,
}

impl SiteMap {
    fn new(topology: &Topology, origin: usize) -> Result<Self> {
        let periodic = match topology.kind() {
            TopologyKind::Path => false,
            TopologyKind::Cycle => true,
            TopologyKind::Torus2d => {
                return Err(Error::InvalidTopology(format!("good blocks need a path or cycle, got {topology}")))
            }
        };
        if origin >= topology.n_vertices() {
            return Err(Error::Structure(format!("origin {origin} outside {topology}")));
        }
        Ok(SiteMap {
            n: topology.n_vertices(),
            periodic,
            origin,
        })
    }

    fn vertex(&self, x: i64) -> Result<usize> {
        let y = self.origin as i64 + x;
        if self.periodic {
            Ok(y.rem_euclid(self.n as i64) as usize)
        } else if (0..self.n as i64).contains(&y) {
            Ok(y as usize)
        } else {
            Err(Error::Range(format!("site {x} falls off the path")))
        }
    }

    /// Vertices and inner edges of a block.
    fn block(&self, topology: &Topology, k: i64, n: i64) -> Result<([usize; 4], [usize; 3])> {
        let xs = block_interval(k, n);
        let mut vs = [0; 4];
        for (v, &x) in vs.iter_mut().zip(&xs) {
            *v = self.vertex(x)?;
        }
        let mut es = [0; 3];
        for i in 0..3 {
            es[i] = topology
                .edge_between(vs[i], vs[i + 1])
                .ok_or_else(|| Error::Structure(format!("sites {} and {} are not adjacent", vs[i], vs[i + 1])))?;
        }
        Ok((vs, es))
    }
}

/// Times of one stream inside `[a, b)`.
fn points_in<S: StreamSet>(streams: &S, kind: StreamKind, entity: usize, a: f64, b: f64, out: &mut Vec<f64>) {
    let mut c = streams.cursor(kind, entity);
    if a > 0.0 {
        c.advance_through(a.next_down());
    }
    while let Some(p) = c.peek() {
        if p.time >= b {
            break;
        }
        out.push(p.time);
        c.next_point();
    }
}

fn check_config(v: f64, cfg: &GoodBlockConfig) -> Result<f64> {
    if !(cfg.m > 0.0 && cfg.m.is_finite()) {
        return Err(Error::Domain {
            name: "M",
            value: cfg.m,
            expected: "a finite value > 0",
        });
    }
    if !(v > 0.0) {
        return Err(Error::Domain {
            name: "v",
            value: v,
            expected: "a rate > 0 (T = M/v)",
        });
    }
    if !(cfg.gap_delta > 0.0 && cfg.gap_delta < 1.0) {
        return Err(Error::Domain {
            name: "gap_delta",
            value: cfg.gap_delta,
            expected: "a fraction of the window in (0, 1)",
        });
    }
    if 6.0 / cfg.gap_delta > 1e7 {
        return Err(Error::Domain {
            name: "gap_delta",
            value: cfg.gap_delta,
            expected: "at least 6e-7 (at most 1e7 subwindows)",
        });
    }
    if cfg.k_range.0 > cfg.k_range.1 || cfg.windows == 0 {
        return Err(Error::Precondition("empty block grid".into()));
    }
    Ok(cfg.m / v)
}

/// Evaluates (c1)-(c4) for one block.
fn conditions<S: StreamSet>(
    topology: &Topology,
    streams: &S,
    map: &SiteMap,
    k: i64,
    n: usize,
    t_len: f64,
    gap_delta: f64,
) -> Result<[bool; 4]> {
    let (vs, es) = map.block(topology, k, n as i64)?;
    let (a, b) = (n as f64 * t_len, (n + 1) as f64 * t_len);
    let mut buf = Vec::new();
    let mut c1 = true;
    let mut c2 = true;
    let mut marks = vec![a, b];
    for &e in &es {
        buf.clear();
        points_in(streams, StreamKind::Open, e, a, b, &mut buf);
        c1 &= !buf.is_empty();
        marks.extend_from_slice(&buf);
        buf.clear();
        points_in(streams, StreamKind::Close, e, a, b, &mut buf);
        c2 &= buf.is_empty();
        marks.extend_from_slice(&buf);
    }
    for &x in &vs {
        points_in(streams, StreamKind::Recover, x, a, b, &mut marks);
    }
    marks.sort_by(f64::total_cmp);
    let gap = gap_delta * t_len;
    let c3 = marks.windows(2).all(|w| w[1] - w[0] > gap);
    let sub = gap_delta * t_len / 6.0;
    let n_sub = (6.0 / gap_delta).ceil() as usize;
    let mut c4 = true;
    for &e in &es {
        buf.clear();
        for &kind in streams.infection_kinds() {
            points_in(streams, kind, e, a, b, &mut buf);
        }
        buf.sort_by(f64::total_cmp);
        let mut hit = vec![false; n_sub];
        for &t in &buf {
            // Closed subwindows: a point on a shared endpoint serves both.
            let x = (t - a) / sub;
            let l = x.floor() as usize;
            if l < n_sub {
                hit[l] = true;
            }
            if x == x.floor() && l > 0 {
                hit[l - 1] = true;
            }
        }
        c4 &= hit.iter().all(|&h| h);
        if !c4 {
            break;
        }
    }
    Ok([c1, c2, c3, c4])
}

pub fn good_block_grid<S: StreamSet>(topology: &Topology, streams: &S, v: f64, cfg: &GoodBlockConfig) -> Result<GoodBlockGrid> {
    streams.check_topology(topology)?;
    let t_len = check_config(v, cfg)?;
    if streams.horizon() < cfg.windows as f64 * t_len * (1.0 - 1e-12) {
        return Err(Error::Range(format!(
            "streams end at {} before window {} ends",
            streams.horizon(),
            cfg.windows
        )));
    }
    let map = SiteMap::new(topology, cfg.origin)?;
    let width = (cfg.k_range.1 - cfg.k_range.0 + 1) as usize;
    let mut grid = GoodBlockGrid {
        m: cfg.m,
        gap_delta: cfg.gap_delta,
        t_len,
        k_range: cfg.k_range,
        conditions: Vec::with_capacity(cfg.windows),
        reachable: vec![vec![false; width]; cfg.windows],
    };
    for n in 0..cfg.windows {
        let row = (cfg.k_range.0..=cfg.k_range.1)
            .map(|k| conditions(topology, streams, &map, k, n, t_len, cfg.gap_delta))
            .collect::<Result<Vec<_>>>()?;
        grid.conditions.push(row);
    }
    if let Some(i0) = grid.index(0).filter(|_| grid.good(0, 0)) {
        grid.reachable[0][i0] = true;
        for n in 0..cfg.windows - 1 {
            for i in 0..width {
                if !grid.reachable[n][i] {
                    continue;
                }
                let k = cfg.k_range.0 + i as i64;
                for j in [k, k + 1] {
                    if let Some(ij) = grid.index(j).filter(|_| grid.good(j, n + 1)) {
                        grid.reachable[n + 1][ij] = true;
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Outcome of one replica of the seeded-block experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// Block `(0, 0)` was not good.
    NotConditioned,
    /// Good block; whether every site and inner edge of `I_{0,0}` was
    /// infected and open at `T`.
    Conditioned { filled: bool },
}

/// Seeds the two endpoints of inner edge `seed_edge` of `I_{0,0}` as infected
/// across an open edge, draws the rest of the environment from its stationary
/// law, evaluates (c1)-(c4) on block `(0, 0)` and, when it is good, runs the
/// process to `T`.
pub fn seeded_block_propagation(
    topology: &Topology,
    params: &Params,
    cfg: &GoodBlockConfig,
    seed_edge: usize,
    key: &ReplicaKey,
) -> Result<Propagation> {
    if seed_edge > 2 {
        return Err(Error::Precondition(format!("inner edge {seed_edge} of a 4-site block")));
    }
    let t_len = check_config(params.v, cfg)?;
    let params = params.with_horizon(t_len);
    params.validate()?;
    let map = SiteMap::new(topology, cfg.origin)?;
    let streams = LazyStreams::new(topology, &params, *key, false)?;
    let c = conditions(topology, &streams, &map, 0, 0, t_len, cfg.gap_delta)?;
    if !c.iter().all(|&b| b) {
        return Ok(Propagation::NotConditioned);
    }
    let (vs, es) = map.block(topology, 0, 0)?;
    let mut zeta0 = sample_initial_environment(topology, params.p, key)?;
    zeta0[es[seed_edge]] = true;
    let mut eta0 = vec![false; topology.n_vertices()];
    eta0[vs[seed_edge]] = true;
    eta0[vs[seed_edge + 1]] = true;
    let options = SimOptions {
        record_final: true,
        ..Default::default()
    };
    let out = simulate_cpde(topology, &params, &eta0, &zeta0, &streams, &options)?;
    let fin = out
        .final_config
        .ok_or_else(|| Error::Invariant("final configuration was not recorded".into()))?;
    let filled = vs.iter().all(|&x| fin.eta[x]) && es.iter().all(|&e| fin.zeta[e]);
    Ok(Propagation::Conditioned { filled })
}

//! Barrier-delimited interval blocks and their `U`, `V` variables.

use crate::engine::Replay;
use crate::error::{Error, Result};
use crate::streams::{StreamKind, StreamSet};
use crate::topology::{Topology, TopologyKind};

use super::env::EnvTrajectory;

/// Blocks `B_{k,n}` around the sites `k r0`, one row per window.
///
/// On a cycle of `N` sites the block indices run over `0..N/r0` and wrap; on a
/// path of `N = K r0 + 1` sites they run over `0..=K`, the outer blocks being
/// cut at the ends.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBlockGrid {
    pub r0: usize,
    pub t_len: f64,
    pub n_sites: usize,
    pub periodic: bool,
    /// `closed[n][e]`.
    pub closed: Vec<Vec<bool>>,
    /// `v[n][k] = V_{{k,k+1},n}`, one entry per pair of neighboring blocks.
    pub v: Vec<Vec<bool>>,
    /// `barrier[n][k] = e_{k,n}`, paired with `v`.
    pub barrier: Vec<Vec<usize>>,
    /// `blocks[n][k] = (first site, length)`; sites wrap on a cycle.
    pub blocks: Vec<Vec<(usize, usize)>>,
    /// `u[n][k] = U_{k,n}`.
    pub u: Vec<Vec<bool>>,
}

impl IntervalBlockGrid {
    pub fn windows(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }

    pub fn sites(&self, n: usize, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (start, len) = self.blocks[n][k];
        (0..len).map(move |i| (start + i) % self.n_sites)
    }

    /// `block_of[x]` in window `n`.
    pub fn block_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_sites];
        for k in 0..self.n_blocks() {
            for x in self.sites(n, k) {
                out[x] = k;
            }
        }
        out
    }

    /// `k, n, V, U, block_left, block_right` rows; `V` refers to the pair
    /// `{k, k+1}` and is empty for the last block of a path.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,V,U,block_left,block_right\n");
        for n in 0..self.windows() {
            for k in 0..self.n_blocks() {
                let (start, len) = self.blocks[n][k];
                let v = self.v[n].get(k).map_or(String::new(), |&b| (b as u8).to_string());
                let right = (start + len - 1) % self.n_sites;
                out.push_str(&format!("{k},{n},{v},{},{start},{right}\n", self.u[n][k] as u8));
            }
        }
        out
    }
}

fn layout(topology: &Topology, r0: usize) -> Result<(usize, bool, usize)> {
    if r0 == 0 {
        return Err(Error::Precondition("r0 must be at least 1".into()));
    }
    let n = topology.n_vertices();
    match topology.kind() {
        TopologyKind::Cycle if n.is_multiple_of(r0) && n / r0 >= 3 => Ok((n, true, n / r0)),
        TopologyKind::Path if (n - 1).is_multiple_of(r0) && (n - 1) / r0 >= 1 => Ok((n, false, (n - 1) / r0 + 1)),
        _ => Err(Error::InvalidTopology(format!(
            "interval blocks of width {r0} need a cycle of m*r0 sites (m >= 3) or a path of K*r0 + 1 sites, got {topology}"
        ))),
    }
}

/// Barrier edges, `V` and blocks from the `n`-closed indicators of a single
/// window. Edge `i` joins sites `i` and `i + 1` on both paths and cycles.
fn row_blocks(closed: &[bool], r0: usize, n_sites: usize, periodic: bool, m: usize) -> (Vec<bool>, Vec<usize>, Vec<(usize, usize)>) {
    let pairs = if periodic { m } else { m - 1 };
    let mut v = Vec::with_capacity(pairs);
    let mut barrier = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let first = (0..r0).map(|j| k * r0 + j).find(|&e| closed[e % n_sites]);
        v.push(first.is_none());
        barrier.push(first.unwrap_or((k + 1) * r0 - 1));
    }
    let blocks = (0..m)
        .map(|k| {
            // Right vertex of e_{k-1}, left vertex of e_k, as unwrapped positions.
            let left = if k > 0 {
                barrier[k - 1] + 1
            } else if periodic {
                barrier[m - 1] + 1
            } else {
                0
            };
            let right = if k < pairs { barrier[k] } else { n_sites - 1 };
            let (left, right) = if k == 0 && periodic && left > right { (left, right + n_sites) } else { (left, right) };
            (left % n_sites, right - left + 1)
        })
        .collect();
    (v, barrier, blocks)
}

/// Blocks, `V` and `U` for `windows` windows of length `t_len`.
///
/// `U_{k,n}` is decided by running, inside every block at once, the infection
/// restricted to the block's own edges and started fully infected at `nT`:
/// it is `1` iff the block is still infected at `(n+1)T`.
pub fn interval_block_variables<S: StreamSet>(
    topology: &Topology,
    env: &EnvTrajectory,
    streams: &S,
    r0: usize,
    t_len: f64,
    windows: usize,
) -> Result<IntervalBlockGrid> {
    streams.check_topology(topology)?;
    if env.n_edges() != topology.n_edges() {
        return Err(Error::Structure("trajectory and topology disagree on the edge count".into()));
    }
    let (n_sites, periodic, m) = layout(topology, r0)?;
    let closed = env.n_closed_edges(t_len, windows)?;
    if streams.horizon() < windows as f64 * t_len * (1.0 - 1e-12) {
        return Err(Error::Range(format!(
            "streams end at {} before the last window ends",
            streams.horizon()
        )));
    }
    let mut grid = IntervalBlockGrid {
        r0,
        t_len,
        n_sites,
        periodic,
        closed,
        v: Vec::with_capacity(windows),
        barrier: Vec::with_capacity(windows),
        blocks: Vec::with_capacity(windows),
        u: Vec::with_capacity(windows),
    };
    for n in 0..windows {
        let (v, b, blocks) = row_blocks(&grid.closed[n], r0, n_sites, periodic, m);
        grid.v.push(v);
        grid.barrier.push(b);
        grid.blocks.push(blocks);
    }
    grid.u = restricted_survival(topology, env, streams, &grid)?;
    Ok(grid)
}

fn restricted_survival<S: StreamSet>(
    topology: &Topology,
    env: &EnvTrajectory,
    streams: &S,
    grid: &IntervalBlockGrid,
) -> Result<Vec<Vec<bool>>> {
    let windows = grid.windows();
    let end = windows as f64 * grid.t_len;
    let replay = Replay::edges_and_vertices(streams, streams.infection_kinds(), true);
    let mut u = Vec::with_capacity(windows);
    let mut infected = vec![true; grid.n_sites];
    let mut current = 0usize;
    let mut block_of = grid.block_of(0);
    let mut close_window = |infected: &mut Vec<bool>, block_of: &[usize]| {
        let mut row = vec![false; grid.n_blocks()];
        for (x, &i) in infected.iter().enumerate() {
            row[block_of[x]] |= i;
        }
        u.push(row);
        infected.iter_mut().for_each(|i| *i = true);
    };
    for ev in replay {
        let t = ev.key.time;
        if t >= end {
            break;
        }
        let w = ((t / grid.t_len).floor() as usize).min(windows - 1);
        while current < w {
            close_window(&mut infected, &block_of);
            current += 1;
            block_of = grid.block_of(current);
        }
        let entity = ev.key.entity as usize;
        match ev.key.kind {
            StreamKind::Recover => infected[entity] = false,
            _ => {
                let (a, b) = topology.endpoints(entity);
                if block_of[a] == block_of[b] && (infected[a] || infected[b]) && env.state_at(entity, t) {
                    infected[a] = true;
                    infected[b] = true;
                }
            }
        }
    }
    while current < windows {
        close_window(&mut infected, &block_of);
        current += 1;
        if current < windows {
            block_of = grid.block_of(current);
        }
    }
    Ok(u)
}

/// Per-site and per-edge window variables of the vertex construction.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexBlockVariables {
    /// `u[n][x]`: no recovery at `x` in window `n`.
    pub u: Vec<Vec<bool>>,
    /// `v[n][e]`: edge `e` open at some time of window `n`.
    pub v: Vec<Vec<bool>>,
}

pub fn vertex_block_variables<S: StreamSet>(
    env: &EnvTrajectory,
    streams: &S,
    t_len: f64,
    windows: usize,
) -> Result<VertexBlockVariables> {
    if env.n_edges() != streams.n_edges() {
        return Err(Error::Structure("trajectory and streams disagree on the edge count".into()));
    }
    let closed = env.n_closed_edges(t_len, windows)?;
    let mut u = vec![vec![true; streams.n_vertices()]; windows];
    for x in 0..streams.n_vertices() {
        let mut c = streams.cursor(StreamKind::Recover, x);
        while let Some(p) = c.next_point() {
            let w = (p.time / t_len).floor() as usize;
            if w >= windows {
                break;
            }
            u[w][x] = false;
        }
    }
    let v = closed.into_iter().map(|row| row.into_iter().map(|c| !c).collect()).collect();
    Ok(VertexBlockVariables { u, v })
}

//! The dominating process `Z` on the renormalized graph `H`.
//!
//! Level `n + 1` of `Z` is obtained from level `n` by first closing `Z_n`
//! under the same-level edges (`V = 1`) and then stepping up from every
//! element whose block is open to the next row, either through its own `U` or
//! through a `V` on one of its sides.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::Configuration;
use crate::rng::hashed_uniform;
use crate::topology::Topology;

use super::interval::{IntervalBlockGrid, VertexBlockVariables};

/// Index structure of the blocks.
#[derive(Clone, Debug, PartialEq)]
pub enum ZGeometry {
    /// Blocks indexed by the integers; edge `k` joins `k` and `k + 1` and a
    /// step reaches `k - 1`, `k`, `k + 1`.
    Line,
    /// As `Line`, restricted to the blocks `lo..=hi`.
    Segment(i64, i64),
    /// As `Line`, modulo `m`.
    Ring(usize),
    /// One block per vertex of the graph; edges are its edges and a step stays
    /// at the same vertex.
    Graph(Topology),
}

/// Values of the block variables. `v(e, n)` is indexed by edge: the left
/// endpoint on `Line` and `Ring`, the edge id on `Graph`.
pub trait Drivers {
    fn u(&self, k: i64, n: u32) -> bool;
    fn v(&self, e: i64, n: u32) -> bool;
}

/// I.i.d. Bernoulli(`eps`) variables from a hashed lattice, so the same seed
/// couples the variables across values of `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliDrivers {
    pub eps: f64,
    pub seed: u64,
}

impl Drivers for BernoulliDrivers {
    fn u(&self, k: i64, n: u32) -> bool {
        hashed_uniform(self.seed, 1, k, n as u64) < self.eps
    }
    fn v(&self, e: i64, n: u32) -> bool {
        hashed_uniform(self.seed, 2, e, n as u64) < self.eps
    }
}

/// Variables stored per level, `false` outside the stored range.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridDrivers {
    pub u: Vec<Vec<bool>>,
    pub v: Vec<Vec<bool>>,
}

fn lookup(rows: &[Vec<bool>], i: i64, n: u32) -> bool {
    rows.get(n as usize)
        .and_then(|row| usize::try_from(i).ok().and_then(|i| row.get(i)))
        .copied()
        .unwrap_or(false)
}

impl Drivers for GridDrivers {
    fn u(&self, k: i64, n: u32) -> bool {
        lookup(&self.u, k, n)
    }
    fn v(&self, e: i64, n: u32) -> bool {
        lookup(&self.v, e, n)
    }
}

impl From<&IntervalBlockGrid> for GridDrivers {
    fn from(g: &IntervalBlockGrid) -> Self {
        GridDrivers {
            u: g.u.clone(),
            v: g.v.clone(),
        }
    }
}

impl From<&VertexBlockVariables> for GridDrivers {
    fn from(g: &VertexBlockVariables) -> Self {
        GridDrivers {
            u: g.u.clone(),
            v: g.v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZTrace {
    /// `|Z_n|` for every computed level, starting at `Z_0`.
    pub sizes: Vec<usize>,
    /// The levels themselves, sorted, when recorded.
    pub sets: Option<Vec<Vec<i64>>>,
    /// First level with `Z_n` empty; `None` if `Z` is alive at the budget.
    pub n_ext: Option<u32>,
}

impl ZTrace {
    pub fn budget_hit(&self) -> bool {
        self.n_ext.is_none()
    }

    pub fn contains(&self, n: usize, k: i64) -> bool {
        match &self.sets {
            Some(sets) => sets.get(n).is_some_and(|s| s.binary_search(&k).is_ok()),
            None => false,
        }
    }

    /// `n, size` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,size\n");
        for (n, s) in self.sizes.iter().enumerate() {
            out.push_str(&format!("{n},{s}\n"));
        }
        out
    }
}

impl ZGeometry {
    fn normalize(&self, k: i64) -> i64 {
        match self {
            ZGeometry::Ring(m) => k.rem_euclid(*m as i64),
            _ => k,
        }
    }

    /// `(edge, neighbor)` pairs of block `k`.
    fn edges(&self, k: i64, out: &mut Vec<(i64, i64)>) {
        out.clear();
        match self {
            ZGeometry::Line => out.extend([(k - 1, k - 1), (k, k + 1)]),
            ZGeometry::Segment(lo, hi) => {
                if k > *lo {
                    out.push((k - 1, k - 1));
                }
                if k < *hi {
                    out.push((k, k + 1));
                }
            }
            ZGeometry::Ring(m) => {
                let m = *m as i64;
                out.extend([((k - 1).rem_euclid(m), (k - 1).rem_euclid(m)), (k, (k + 1) % m)]);
            }
            ZGeometry::Graph(t) => out.extend(t.incident(k as usize).map(|(y, e)| (e as i64, y as i64))),
        }
    }

    fn check(&self, k: i64) -> Result<()> {
        let ok = match self {
            ZGeometry::Line => true,
            ZGeometry::Segment(lo, hi) => (*lo..=*hi).contains(&k),
            ZGeometry::Ring(m) => (0..*m as i64).contains(&k),
            ZGeometry::Graph(t) => (0..t.n_vertices() as i64).contains(&k),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Structure(format!("block index {k} outside the geometry")))
        }
    }
}

/// Largest level held in memory; only reachable on an unbounded line.
pub const MAX_LEVEL_SIZE: usize = 1 << 24;

/// One level of `Z`.
pub fn z_step<D: Drivers + ?Sized>(geometry: &ZGeometry, drivers: &D, z: &[i64], n: u32) -> Result<Vec<i64>> {
    let mut seen: HashSet<i64> = z.iter().copied().collect();
    let mut stack: Vec<i64> = z.to_vec();
    let mut saturated = Vec::with_capacity(z.len());
    let mut edges = Vec::with_capacity(4);
    while let Some(k) = stack.pop() {
        saturated.push(k);
        if saturated.len() > MAX_LEVEL_SIZE {
            return Err(Error::TooLarge {
                size: saturated.len() as u64,
                limit: MAX_LEVEL_SIZE as u64,
            });
        }
        geometry.edges(k, &mut edges);
        for &(e, y) in &edges {
            if drivers.v(e, n) && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    let mut next = Vec::with_capacity(3 * saturated.len());
    for &k in &saturated {
        geometry.edges(k, &mut edges);
        let open = edges.iter().any(|&(e, _)| drivers.v(e, n)) || drivers.u(k, n);
        if !open {
            continue;
        }
        match geometry {
            ZGeometry::Graph(_) => next.push(k),
            ZGeometry::Segment(lo, hi) => next.extend([k - 1, k, k + 1].into_iter().filter(|j| (lo..=hi).contains(&j))),
            _ => next.extend([k - 1, k, k + 1].map(|j| geometry.normalize(j))),
        }
    }
    next.sort_unstable();
    next.dedup();
    Ok(next)
}

/// Runs `Z` from `z0` for at most `budget` levels.
pub fn run_z<D: Drivers + ?Sized>(
    geometry: &ZGeometry,
    drivers: &D,
    z0: &[i64],
    budget: u32,
    record_sets: bool,
) -> Result<ZTrace> {
    if budget == 0 {
        return Err(Error::Domain {
            name: "window_budget",
            value: 0.0,
            expected: "at least one level",
        });
    }
    if let ZGeometry::Ring(m) = geometry {
        if *m < 3 {
            return Err(Error::InvalidTopology(format!("a ring of {m} blocks")));
        }
    }
    for &k in z0 {
        geometry.check(k)?;
    }
    let mut z: Vec<i64> = z0.to_vec();
    z.sort_unstable();
    z.dedup();
    let mut sizes = vec![z.len()];
    let mut sets = record_sets.then(|| vec![z.clone()]);
    let mut n_ext = z.is_empty().then_some(0);
    let mut n = 0u32;
    while n_ext.is_none() && n < budget {
        z = z_step(geometry, drivers, &z, n)?;
        n += 1;
        sizes.push(z.len());
        if let Some(s) = sets.as_mut() {
            s.push(z.clone());
        }
        if z.is_empty() {
            n_ext = Some(n);
        }
    }
    Ok(ZTrace { sizes, sets, n_ext })
}

/// Indices of the blocks holding an infected site in window `n`.
pub fn infected_blocks(grid: &IntervalBlockGrid, n: usize, eta: &[bool]) -> Vec<i64> {
    let block_of = grid.block_of(n);
    let mut out: Vec<i64> = eta.iter().enumerate().filter(|(_, &i)| i).map(|(x, _)| block_of[x] as i64).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Geometry of the interval blocks of `grid`.
pub fn interval_geometry(grid: &IntervalBlockGrid) -> ZGeometry {
    if grid.periodic {
        ZGeometry::Ring(grid.n_blocks())
    } else {
        ZGeometry::Segment(0, grid.n_blocks() as i64 - 1)
    }
}

/// Counts pairs `(k, n)` with an infected site of `B_{k,n}` at `nT` and
/// `k` missing from `Z_n`. `snapshots[n]` must be the configuration at `nT`.
pub fn z_containment_check(snapshots: &[Configuration], grid: &IntervalBlockGrid, trace: &ZTrace) -> Result<usize> {
    check_snapshots(snapshots, grid.n_sites, grid.t_len, trace)?;
    let levels = snapshots.len().min(grid.windows()).min(trace.sizes.len());
    Ok((0..levels)
        .map(|n| {
            infected_blocks(grid, n, &snapshots[n].eta)
                .into_iter()
                .filter(|&k| !trace.contains(n, k))
                .count()
        })
        .sum())
}

/// Counts `(x, n)` with `x` infected at `nT` and missing from `Z_n` for the
/// per-vertex construction.
pub fn vertex_containment_check(snapshots: &[Configuration], t_len: f64, trace: &ZTrace) -> Result<usize> {
    let n_sites = snapshots.first().map_or(0, |s| s.eta.len());
    check_snapshots(snapshots, n_sites, t_len, trace)?;
    let levels = snapshots.len().min(trace.sizes.len());
    Ok((0..levels)
        .map(|n| {
            snapshots[n]
                .eta
                .iter()
                .enumerate()
                .filter(|&(x, &i)| i && !trace.contains(n, x as i64))
                .count()
        })
        .sum())
}

fn check_snapshots(snapshots: &[Configuration], n_sites: usize, t_len: f64, trace: &ZTrace) -> Result<()> {
    if trace.sets.is_none() {
        return Err(Error::Structure("the Z trace was run without recording its levels".into()));
    }
    for (n, s) in snapshots.iter().enumerate() {
        if s.eta.len() != n_sites || (s.time - n as f64 * t_len).abs() > 1e-9 * (1.0 + s.time) {
            return Err(Error::Structure(format!(
                "snapshot {n} at time {} with {} sites does not belong to window start {} on {n_sites} sites",
                s.time,
                s.eta.len(),
                n as f64 * t_len
            )));
        }
    }
    Ok(())
}

/// `Z_0` of the interval construction for an initial infection.
pub fn interval_z0(grid: &IntervalBlockGrid, eta0: &[bool]) -> Vec<i64> {
    infected_blocks(grid, 0, eta0)
}

/// `Z_0` of the vertex construction.
pub fn vertex_z0(eta0: &[bool]) -> Vec<i64> {
    eta0.iter().enumerate().filter(|(_, &i)| i).map(|(x, _)| x as i64).collect()
}

/// `{0, ..., size - 1}`.
pub fn contiguous_z0(size: usize) -> Vec<i64> {
    (0..size as i64).collect()
}

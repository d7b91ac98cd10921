//! Finite base graphs: path, cycle and 2D torus.
//!
//! Numbering is canonical. On the path and cycle, vertex `i` is the site `i`
//! and edge `i` joins `i` to `i + 1` (mod `n` on the cycle), so edge endpoints
//! are always stored as `(left, right)`. On an `w x h` torus vertex `(i, j)` is
//! `i + w j`; edge `v` is the horizontal edge leaving `v` to the right and
//! edge `w h + v` the vertical edge leaving `v` upwards.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Path,
    Cycle,
    Torus2d,
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Path => "path",
            TopologyKind::Cycle => "cycle",
            TopologyKind::Torus2d => "torus2d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    extents: Vec<usize>,
    edges: Vec<(u32, u32)>,
    offsets: Vec<u32>,
    /// `(neighbor, edge)` pairs, grouped by vertex through `offsets`.
    incidence: Vec<(u32, u32)>,
}

impl Topology {
    pub fn path(n: usize) -> Result<Self> {
        Self::build(TopologyKind::Path, &[n])
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::build(TopologyKind::Cycle, &[n])
    }

    pub fn torus2d(width: usize, height: usize) -> Result<Self> {
        Self::build(TopologyKind::Torus2d, &[width, height])
    }

    pub fn build(kind: TopologyKind, extents: &[usize]) -> Result<Self> {
        let dims = match kind {
            TopologyKind::Path | TopologyKind::Cycle => 1,
            TopologyKind::Torus2d => 2,
        };
        if extents.len() != dims {
            return Err(Error::InvalidTopology(format!(
                "{} takes {dims} extent(s), got {}",
                kind.name(),
                extents.len()
            )));
        }
        // Periodic extents of 2 would give the same pair of vertices two edge ids.
        let min = if kind == TopologyKind::Path { 2 } else { 3 };
        if let Some(&bad) = extents.iter().find(|&&e| e < min) {
            return Err(Error::InvalidTopology(format!(
                "{} extent {bad} is below the minimum {min}",
                kind.name()
            )));
        }
        let n: usize = extents.iter().product();
        if n > crate::rng::MAX_ENTITY / 2 {
            return Err(Error::InvalidTopology(format!("{n} vertices is too many")));
        }
        let edges: Vec<(u32, u32)> = match kind {
            TopologyKind::Path => (0..n - 1).map(|i| (i as u32, i as u32 + 1)).collect(),
            TopologyKind::Cycle => (0..n).map(|i| (i as u32, ((i + 1) % n) as u32)).collect(),
            TopologyKind::Torus2d => {
                let (w, h) = (extents[0], extents[1]);
                let horizontal = (0..n).map(|v| {
                    let (i, j) = (v % w, v / w);
                    (v as u32, ((i + 1) % w + w * j) as u32)
                });
                let vertical = (0..n).map(|v| {
                    let (i, j) = (v % w, v / w);
                    (v as u32, (i + w * ((j + 1) % h)) as u32)
                });
                horizontal.chain(vertical).collect()
            }
        };
        let mut degree = vec![0u32; n];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u32);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut incidence = vec![(0u32, 0u32); edges.len() * 2];
        for (id, &(a, b)) in edges.iter().enumerate() {
            incidence[fill[a as usize] as usize] = (b, id as u32);
            fill[a as usize] += 1;
            incidence[fill[b as usize] as usize] = (a, id as u32);
            fill[b as usize] += 1;
        }
        Ok(Topology {
            kind,
            extents: extents.to_vec(),
            edges,
            offsets,
            incidence,
        })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(left, right)` endpoints of an edge.
    #[inline]
    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        let (a, b) = self.edges[edge];
        (a as usize, b as usize)
    }

    /// `(neighbor, edge)` pairs of a vertex.
    #[inline]
    pub fn incident(&self, vertex: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (lo, hi) = (self.offsets[vertex] as usize, self.offsets[vertex + 1] as usize);
        self.incidence[lo..hi].iter().map(|&(y, e)| (y as usize, e as usize))
    }

    #[inline]
    pub fn degree(&self, vertex: usize) -> usize {
        (self.offsets[vertex + 1] - self.offsets[vertex]) as usize
    }

    /// Id of the edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.incident(a).find(|&(y, _)| y == b).map(|(_, e)| e)
    }

    /// Graph distances from `origin` (`usize::MAX` for unreachable).
    pub fn distances(&self, origin: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_vertices()];
        let mut queue = VecDeque::from([origin]);
        dist[origin] = 0;
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.incident(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Vertices within graph distance `radius` of `origin`, and the edges with
    /// both endpoints among them.
    pub fn ball(&self, origin: usize, radius: usize) -> (Vec<usize>, Vec<usize>) {
        let dist = self.distances(origin);
        let vertices = (0..self.n_vertices()).filter(|&x| dist[x] <= radius).collect();
        let edges = (0..self.n_edges())
            .filter(|&e| {
                let (a, b) = self.endpoints(e);
                dist[a] <= radius && dist[b] <= radius
            })
            .collect();
        (vertices, edges)
    }

    /// Compact label such as `cycle:64` or `torus2d:8x8`; parsed back by
    /// [`Topology::from_label`].
    pub fn label(&self) -> String {
        let ext: Vec<String> = self.extents.iter().map(|e| e.to_string()).collect();
        format!("{}:{}", self.kind.name(), ext.join("x"))
    }

    pub fn from_label(label: &str) -> Result<Self> {
        let (kind, ext) = label
            .split_once(':')
            .ok_or_else(|| Error::InvalidTopology(format!("expected <kind>:<extent>, got `{label}`")))?;
        let kind = match kind.trim() {
            "path" => TopologyKind::Path,
            "cycle" => TopologyKind::Cycle,
            "torus2d" | "torus" => TopologyKind::Torus2d,
            other => return Err(Error::InvalidTopology(format!("unknown kind `{other}`"))),
        };
        let extents = ext
            .split('x')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidTopology(format!("bad extents `{ext}`")))?;
        Self::build(kind, &extents)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_three() {
        let t = Topology::path(3).unwrap();
        assert_eq!((t.n_vertices(), t.n_edges()), (3, 2));
        assert_eq!(t.degree(0), 1);
        assert_eq!(t.degree(1), 2);
    }

    #[test]
    fn cycle_four() {
        let t = Topology::cycle(4).unwrap();
        assert_eq!((t.n_vertices(), t.n_edges()), (4, 4));
        assert!((0..4).all(|x| t.degree(x) == 2));
        assert_eq!(t.endpoints(3), (3, 0));
    }

    #[test]
    fn torus_three_by_three() {
        let t = Topology::torus2d(3, 3).unwrap();
        assert_eq!((t.n_vertices(), t.n_edges()), (9, 18));
        assert!((0..9).all(|x| t.degree(x) == 4));
        let mut pairs: Vec<_> = (0..18)
            .map(|e| {
                let (a, b) = t.endpoints(e);
                (a.min(b), a.max(b))
            })
            .collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs.len(), 18, "every undirected edge has exactly one id");
    }

    #[test]
    fn small_extents_are_rejected() {
        assert!(matches!(Topology::path(1), Err(Error::InvalidTopology(_))));
        assert!(matches!(Topology::cycle(2), Err(Error::InvalidTopology(_))));
        assert!(matches!(Topology::torus2d(3, 1), Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn labels_round_trip() {
        for label in ["path:5", "cycle:64", "torus2d:4x3"] {
            assert_eq!(Topology::from_label(label).unwrap().label(), label);
        }
        assert!(Topology::from_label("ring:5").is_err());
    }

    #[test]
    fn ball_on_a_cycle() {
        let t = Topology::cycle(20).unwrap();
        let (v, e) = t.ball(0, 2);
        assert_eq!(v, vec![0, 1, 2, 18, 19]);
        assert_eq!(e.len(), 4);
    }
}

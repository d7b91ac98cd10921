//! Edge state trajectories and their per-window summaries.

use crate::error::{Error, Result};
use crate::streams::{StreamKind, StreamSet};

/// Piecewise-constant state of every edge on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvTrajectory {
    horizon: f64,
    initial: Vec<bool>,
    /// Times at which the edge changes state, increasing.
    flips: Vec<Vec<f64>>,
}

impl EnvTrajectory {
    /// Replays the open and close streams of every edge from `zeta0`.
    pub fn from_streams<S: StreamSet>(streams: &S, zeta0: &[bool]) -> Result<Self> {
        if zeta0.len() != streams.n_edges() {
            return Err(Error::Structure(format!(
                "{} initial edge states for {} edges",
                zeta0.len(),
                streams.n_edges()
            )));
        }
        let flips = zeta0
            .iter()
            .enumerate()
            .map(|(e, &z0)| {
                let mut open = streams.cursor(StreamKind::Open, e);
                let mut close = streams.cursor(StreamKind::Close, e);
                let mut state = z0;
                let mut out = Vec::new();
                loop {
                    let (o, c) = (open.peek(), close.peek());
                    let (t, opens) = match (o, c) {
                        (None, None) => break,
                        (Some(o), None) => (open.next_point().map(|_| o.time).unwrap(), true),
                        (None, Some(c)) => (close.next_point().map(|_| c.time).unwrap(), false),
                        (Some(o), Some(c)) if o.time <= c.time => {
                            open.next_point();
                            (o.time, true)
                        }
                        (Some(_), Some(c)) => {
                            close.next_point();
                            (c.time, false)
                        }
                    };
                    if opens != state {
                        state = opens;
                        out.push(t);
                    }
                }
                out
            })
            .collect();
        Ok(EnvTrajectory {
            horizon: streams.horizon(),
            initial: zeta0.to_vec(),
            flips,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_edges(&self) -> usize {
        self.initial.len()
    }

    pub fn flips(&self, edge: usize) -> &[f64] {
        &self.flips[edge]
    }

    /// State after every update at time `<= t`.
    pub fn state_at(&self, edge: usize, t: f64) -> bool {
        let n = self.flips[edge].partition_point(|&s| s <= t);
        self.initial[edge] ^ (n % 2 == 1)
    }

    /// `true` if the edge is open at some time of `[a, b)`.
    pub fn ever_open(&self, edge: usize, a: f64, b: f64) -> bool {
        if self.state_at(edge, a) {
            return true;
        }
        // Closed at `a`, so the next flip opens it.
        let f = &self.flips[edge];
        let i = f.partition_point(|&s| s <= a);
        i < f.len() && f[i] < b
    }

    fn check_windows(&self, t_len: f64, windows: usize) -> Result<()> {
        if !(t_len > 0.0 && t_len.is_finite()) {
            return Err(Error::Domain {
                name: "T",
                value: t_len,
                expected: "a window length > 0",
            });
        }
        let end = t_len * windows as f64;
        if end > self.horizon * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "{windows} windows of length {t_len} end at {end}, beyond the trajectory's horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `closed[n][e]`: edge `e` is closed throughout `[nT, (n+1)T)`.
    pub fn n_closed_edges(&self, t_len: f64, windows: usize) -> Result<Vec<Vec<bool>>> {
        self.check_windows(t_len, windows)?;
        Ok((0..windows)
            .map(|n| {
                let (a, b) = (n as f64 * t_len, (n + 1) as f64 * t_len);
                (0..self.n_edges()).map(|e| !self.ever_open(e, a, b)).collect()
            })
            .collect())
    }
}

/// Successes out of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub hits: u64,
    pub total: u64,
}

impl Tally {
    pub fn add(&mut self, hit: bool) {
        self.hits += hit as u64;
        self.total += 1;
    }

    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    /// Binomial standard error of the fraction at probability `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.total as f64).sqrt()
    }

    /// Binomial standard error at the observed fraction.
    pub fn sigma(&self) -> f64 {
        self.sigma_at(self.fraction())
    }
}

/// Window statistics of the single-edge chain, pooled over edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeChainStats {
    /// Closed at the start of window `n` given, at the start of window `n - 1`:
    /// open; closed and opened during it; closed throughout it.
    pub conditionals: [Tally; 3],
    /// `w_0 = 0`.
    pub first_window: Tally,
    /// `w_n = 0` given `(w_{n-1}, ..., w_{n-depth})`, the history read as
    /// bits with `w_{n-1}` least significant.
    pub closed_given_history: Vec<Tally>,
    pub depth: usize,
}

/// Tallies of `zeta` and `w` across consecutive windows of every edge.
pub fn edge_chain_statistics(traj: &EnvTrajectory, t_len: f64, windows: usize, depth: usize) -> Result<EdgeChainStats> {
    traj.check_windows(t_len, windows)?;
    if depth > 8 {
        return Err(Error::Precondition(format!("history depth {depth} exceeds 8")));
    }
    let mut stats = EdgeChainStats {
        closed_given_history: vec![Tally::default(); 1 << depth],
        depth,
        ..Default::default()
    };
    for e in 0..traj.n_edges() {
        let mut w = Vec::with_capacity(windows);
        for n in 0..windows {
            let a = n as f64 * t_len;
            w.push(traj.ever_open(e, a, a + t_len));
        }
        stats.first_window.add(!w.first().copied().unwrap_or(true));
        for n in 1..windows {
            let prev_start = traj.state_at(e, (n - 1) as f64 * t_len);
            let now = traj.state_at(e, n as f64 * t_len);
            let class = match (prev_start, w[n - 1]) {
                (true, _) => 0,
                (false, true) => 1,
                (false, false) => 2,
            };
            stats.conditionals[class].add(!now);
            if n >= depth {
                let h = (1..=depth).fold(0usize, |acc, j| acc | ((w[n - j] as usize) << (j - 1)));
                stats.closed_given_history[h].add(!w[n]);
            }
        }
    }
    Ok(stats)
}

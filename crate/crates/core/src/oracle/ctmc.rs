//! The CPDE on a tiny graph as an explicit continuous-time Markov chain.
//!
//! A state packs the infection bits of the vertices (bit `x`) followed by the
//! edge bits (bit `n_vertices + e`). States without infection are absorbing.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::topology::Topology;

/// Largest state space handled.
pub const MAX_STATE_BITS: usize = 20;
/// Largest transient block solved by dense LU.
pub const MAX_DENSE_TRANSIENT: usize = 2048;
/// Poisson mass left out of a uniformization sum.
pub const POISSON_TAIL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CtmcModel {
    topology: Topology,
    lambda: f64,
    v: f64,
    p: f64,
    /// Transitions of state `s` are `targets[offsets[s]..offsets[s+1]]`.
    offsets: Vec<u32>,
    targets: Vec<(u32, f64)>,
    outflow: Vec<f64>,
}

/// Initial environment of an oracle computation.
#[derive(Clone, Debug, PartialEq)]
pub enum ZetaInit {
    Fixed(Vec<bool>),
    /// I.i.d. Bernoulli(`p`) edges.
    Stationary,
}

impl CtmcModel {
    pub fn new(topology: &Topology, params: &Params) -> Result<Self> {
        params.validate()?;
        let bits = topology.n_vertices() + topology.n_edges();
        if bits > MAX_STATE_BITS {
            return Err(Error::TooLarge {
                size: bits as u64,
                limit: MAX_STATE_BITS as u64,
            });
        }
        let mut model = CtmcModel {
            topology: topology.clone(),
            lambda: params.lambda,
            v: params.v,
            p: params.p,
            offsets: Vec::with_capacity((1 << bits) + 1),
            targets: Vec::new(),
            outflow: Vec::with_capacity(1 << bits),
        };
        model.offsets.push(0);
        let mut buf = Vec::new();
        for s in 0..1u32 << bits {
            model.transitions_into(s, &mut buf);
            model.outflow.push(buf.iter().map(|&(_, r)| r).sum());
            model.targets.extend_from_slice(&buf);
            model.offsets.push(model.targets.len() as u32);
        }
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.outflow.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.topology.n_vertices()
    }

    fn eta_mask(&self) -> u32 {
        (1u32 << self.n_vertices()) - 1
    }

    pub fn is_absorbing(&self, s: u32) -> bool {
        s & self.eta_mask() == 0
    }

    pub fn encode(&self, eta: &[bool], zeta: &[bool]) -> Result<u32> {
        if eta.len() != self.n_vertices() || zeta.len() != self.topology.n_edges() {
            return Err(Error::Structure("state does not match the model's graph".into()));
        }
        Ok(eta.iter().chain(zeta).enumerate().fold(0, |acc, (i, &b)| acc | ((b as u32) << i)))
    }

    fn transitions_into(&self, s: u32, out: &mut Vec<(u32, f64)>) {
        out.clear();
        if self.is_absorbing(s) {
            return;
        }
        let nv = self.n_vertices();
        let infected = |x: usize| s >> x & 1 == 1;
        let open = |e: usize| s >> (nv + e) & 1 == 1;
        for x in 0..nv {
            if infected(x) {
                out.push((s & !(1 << x), 1.0));
            } else {
                let pressure = self.topology.incident(x).filter(|&(y, e)| infected(y) && open(e)).count();
                if pressure > 0 && self.lambda > 0.0 {
                    out.push((s | 1 << x, self.lambda * pressure as f64));
                }
            }
        }
        for e in 0..self.topology.n_edges() {
            let bit = 1 << (nv + e);
            let rate = if open(e) { self.v * (1.0 - self.p) } else { self.v * self.p };
            if rate > 0.0 {
                out.push((s ^ bit, rate));
            }
        }
    }

    pub fn transitions(&self, s: u32) -> &[(u32, f64)] {
        &self.targets[self.offsets[s as usize] as usize..self.offsets[s as usize + 1] as usize]
    }

    pub fn outflow(&self, s: u32) -> f64 {
        self.outflow[s as usize]
    }

    /// Distribution over states for an initial infection and environment.
    pub fn initial_distribution(&self, eta0: &[bool], zeta0: &ZetaInit) -> Result<Vec<f64>> {
        let ne = self.topology.n_edges();
        let mut dist = vec![0.0; self.n_states()];
        match zeta0 {
            ZetaInit::Fixed(z) => dist[self.encode(eta0, z)? as usize] = 1.0,
            ZetaInit::Stationary => {
                let base = self.encode(eta0, &vec![false; ne])?;
                for mask in 0..1u32 << ne {
                    let open = mask.count_ones() as i32;
                    let w = self.p.powi(open) * (1.0 - self.p).powi(ne as i32 - open);
                    dist[(base | mask << self.n_vertices()) as usize] += w;
                }
            }
        }
        Ok(dist)
    }

    fn uniformization_rate(&self) -> f64 {
        self.outflow.iter().copied().fold(0.0, f64::max)
    }

    /// One step of the uniformized chain `I + Q / rate`.
    fn step(&self, rate: f64, from: &[f64], to: &mut [f64]) {
        for (s, t) in to.iter_mut().enumerate() {
            *t = from[s] * (1.0 - self.outflow[s] / rate);
        }
        for (s, &mass) in from.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(y, r) in self.transitions(s as u32) {
                to[y as usize] += mass * r / rate;
            }
        }
    }

    fn alive_mass(&self, dist: &[f64]) -> f64 {
        let mask = self.eta_mask();
        dist.iter().enumerate().filter(|(s, _)| *s as u32 & mask != 0).map(|(_, &m)| m).sum()
    }

    /// Distribution at time `t` from `dist` at time 0.
    pub fn transient(&self, dist: &[f64], t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                expected: "a finite time >= 0",
            });
        }
        let rate = self.uniformization_rate();
        if t == 0.0 || rate == 0.0 {
            return Ok(dist.to_vec());
        }
        let mean = rate * t;
        let mut acc = vec![0.0; dist.len()];
        let mut cur = dist.to_vec();
        let mut next = vec![0.0; dist.len()];
        let mut covered = 0.0;
        let mut k = 0u64;
        loop {
            let w = (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp();
            if w > 0.0 {
                acc.iter_mut().zip(&cur).for_each(|(a, &c)| *a += w * c);
            }
            covered += w;
            if k as f64 > mean && 1.0 - covered < POISSON_TAIL {
                break;
            }
            if k > 100 + (mean + 50.0 * mean.sqrt()) as u64 {
                return Err(Error::Numerical(format!("uniformization did not cover the Poisson mass at rate*t = {mean}")));
            }
            self.step(rate, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            k += 1;
        }
        Ok(acc)
    }

    /// `P(eta_t != empty)`.
    pub fn survival(&self, dist: &[f64], t: f64) -> Result<f64> {
        Ok(self.alive_mass(&self.transient(dist, t)?).clamp(0.0, 1.0))
    }

    /// `P(eta_t != empty)` on the grid `0, dt, 2 dt, ...` until it drops
    /// below `floor`.
    pub fn survival_curve(&self, dist: &[f64], dt: f64, floor: f64, max_steps: usize) -> Result<Vec<f64>> {
        let mut cur = dist.to_vec();
        let mut out = vec![self.alive_mass(&cur)];
        while *out.last().unwrap() >= floor {
            if out.len() > max_steps {
                return Err(Error::Numerical(format!("survival still above {floor} after {max_steps} steps")));
            }
            cur = self.transient(&cur, dt)?;
            out.push(self.alive_mass(&cur));
        }
        Ok(out)
    }

    /// Expected absorption time from every transient state, in the order of
    /// the returned state list.
    pub fn mean_extinction_times(&self) -> Result<(Vec<u32>, Vec<f64>)> {
        let transient: Vec<u32> = (0..self.n_states() as u32).filter(|&s| !self.is_absorbing(s)).collect();
        let n = transient.len();
        if n > MAX_DENSE_TRANSIENT {
            return Err(Error::TooLarge {
                size: n as u64,
                limit: MAX_DENSE_TRANSIENT as u64,
            });
        }
        let mut index = vec![usize::MAX; self.n_states()];
        for (i, &s) in transient.iter().enumerate() {
            index[s as usize] = i;
        }
        // (-Q restricted to transient states) m = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, &s) in transient.iter().enumerate() {
            a[(i, i)] = self.outflow(s);
            for &(y, r) in self.transitions(s) {
                if let Some(&j) = index.get(y as usize).filter(|&&j| j != usize::MAX) {
                    a[(i, j)] -= r;
                }
            }
        }
        let ones = DVector::<f64>::from_element(n, 1.0);
        let m = a
            .clone()
            .lu()
            .solve(&ones)
            .ok_or_else(|| Error::Numerical("singular absorption system".into()))?;
        let residual = (&a * &m - &ones).amax();
        let scale = m.amax().max(1.0);
        if residual > 1e-10 * scale {
            return Err(Error::Numerical(format!("absorption solve residual {residual:e}")));
        }
        Ok((transient, m.iter().copied().collect()))
    }

    /// `E(tau_ext)` from an initial distribution.
    pub fn mean_extinction_time(&self, dist: &[f64]) -> Result<f64> {
        let (states, times) = self.mean_extinction_times()?;
        Ok(states.iter().zip(&times).map(|(&s, &m)| dist[s as usize] * m).sum())
    }
}

pub fn exact_survival_to_horizon(model: &CtmcModel, eta0: &[bool], zeta0: &ZetaInit, horizon: f64) -> Result<f64> {
    let dist = model.initial_distribution(eta0, zeta0)?;
    model.survival(&dist, horizon)
}

pub fn exact_mean_extinction_time(model: &CtmcModel, eta0: &[bool], zeta0: &ZetaInit) -> Result<f64> {
    let dist = model.initial_distribution(eta0, zeta0)?;
    model.mean_extinction_time(&dist)
}

/// Simpson integral of the survival curve on a grid of step `dt`.
pub fn integrated_survival(model: &CtmcModel, eta0: &[bool], zeta0: &ZetaInit, dt: f64) -> Result<f64> {
    let dist = model.initial_distribution(eta0, zeta0)?;
    let mut curve = model.survival_curve(&dist, dt, 1e-13, 10_000_000)?;
    if curve.len() % 2 == 0 {
        curve.push(0.0);
    }
    let n = curve.len() - 1;
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * curve[i]).sum();
    Ok(dt / 3.0 * (curve[0] + inner + curve[n]))
}

//! Parameters, configurations and the environment's single-edge law.

use rand::Rng;

use crate::error::{check_range, Error, Result};
use crate::rng::{stream_id, ReplicaKey};
use crate::streams::StreamKind;
use crate::topology::Topology;

/// Rates of the coupled infection/environment dynamics.
///
/// Each infected site recovers at rate 1 and infects each neighbor across an
/// open edge at rate `lambda`; each edge opens at rate `v p` and closes at rate
/// `v (1 - p)`. `v = 0` freezes the environment, `p` in `{0, 1}` makes it
/// absorbing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub v: f64,
    pub p: f64,
    pub horizon: f64,
}

impl Params {
    pub fn new(lambda: f64, v: f64, p: f64, horizon: f64) -> Result<Self> {
        let params = Params { lambda, v, p, horizon };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("lambda", self.lambda, 0.0, f64::MAX, "a finite rate >= 0")?;
        check_range("v", self.v, 0.0, f64::MAX, "a finite rate >= 0")?;
        check_range("p", self.p, 0.0, 1.0, "a density in [0, 1]")?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain {
                name: "horizon",
                value: self.horizon,
                expected: "a finite time > 0",
            });
        }
        Ok(())
    }

    pub fn open_rate(&self) -> f64 {
        self.v * self.p
    }

    pub fn close_rate(&self) -> f64 {
        self.v * (1.0 - self.p)
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        Params { horizon, ..self }
    }
}

/// `P(edge open at time t)` given its state at time 0:
/// `zeta0 e^{-v t} + p (1 - e^{-v t})`.
pub fn edge_marginal(zeta0: bool, v: f64, p: f64, t: f64) -> Result<f64> {
    check_range("t", t, 0.0, f64::INFINITY, "a time >= 0")?;
    check_range("v", v, 0.0, f64::MAX, "a rate >= 0")?;
    check_range("p", p, 0.0, 1.0, "a density in [0, 1]")?;
    let decay = (-v * t).exp();
    Ok(if zeta0 { decay } else { 0.0 } + p * (1.0 - decay))
}

/// I.i.d. Bernoulli(`p`) edge states, deterministic in `key`.
pub fn sample_initial_environment(topology: &Topology, p: f64, key: &ReplicaKey) -> Result<Vec<bool>> {
    check_range("p", p, 0.0, 1.0, "a density in [0, 1]")?;
    let mut rng = key.rng(stream_id(StreamKind::InitialEnvironment.tag(), 0, 0));
    Ok((0..topology.n_edges()).map(|_| rng.random::<f64>() < p).collect())
}

/// Infected sites and edge states at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub time: f64,
    pub eta: Vec<bool>,
    pub zeta: Vec<bool>,
}

impl Configuration {
    pub fn infected(&self) -> usize {
        self.eta.iter().filter(|&&b| b).count()
    }

    /// Snapshot line `<time> <n_vertices> <n_edges> <hex>`. The hex payload packs
    /// the eta bits followed by the zeta bits, least significant bit first
    /// within each byte, bytes in increasing order.
    pub fn to_hex_line(&self) -> String {
        let bits = self.eta.iter().chain(self.zeta.iter());
        let mut bytes = vec![0u8; (self.eta.len() + self.zeta.len()).div_ceil(8)];
        for (i, &b) in bits.enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        format!("{:e} {} {} {}", self.time, self.eta.len(), self.zeta.len(), hex)
    }

    pub fn from_hex_line(line: &str) -> Result<Self> {
        let bad = || Error::Structure(format!("malformed snapshot line `{line}`"));
        let mut fields = line.split_whitespace();
        let time: f64 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let nv: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let ne: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let hex = fields.next().ok_or_else(bad)?;
        if hex.len() != 2 * (nv + ne).div_ceil(8) || fields.next().is_some() {
            return Err(bad());
        }
        let bytes = (0..hex.len() / 2)
            .map(|i| u8::from_str_radix(&hex[2 * i..2 * i + 2], 16))
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map_err(|_| bad())?;
        let bit = |i: usize| bytes[i / 8] >> (i % 8) & 1 == 1;
        Ok(Configuration {
            time,
            eta: (0..nv).map(bit).collect(),
            zeta: (nv..nv + ne).map(bit).collect(),
        })
    }
}

//! Browser bindings: a space-time picture of one run, a survival estimate and
//! the closed-form rates, all on a cycle.

use cpde::blocks::delta_bound;
use cpde::couplings::{beta_rate, lambda_hat};
use cpde::estimators::{estimate_survival, InitialEnvironment, InitialInfection, McConfig};
use cpde::{sample_initial_environment, simulate_cpde, LazyStreams, Params, ReplicaKey, SimOptions, Topology};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn msg(e: cpde::Error) -> String {
    e.to_string()
}

fn js<T>(r: Res<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn site_spec(n: usize, initial: &str) -> Res<Vec<bool>> {
    let spec: InitialInfection = initial.parse().map_err(msg)?;
    spec.eta(n).map_err(msg)
}

/// One run on `cycle:n`, sampled at `rows` equally spaced times in
/// `[0, horizon]`. Row `r` of the result holds the infected sites (1) at time
/// `r * horizon / (rows - 1)`, followed by the open edges (2 = open) in a
/// second block of `rows * n` bytes.
pub fn space_time_values(
    n: usize,
    lambda: f64,
    v: f64,
    p: f64,
    horizon: f64,
    rows: usize,
    initial: &str,
    seed: u64,
) -> Res<Vec<u8>> {
    if rows < 2 {
        return Err("need at least two rows".into());
    }
    let topology = Topology::cycle(n).map_err(msg)?;
    let params = Params::new(lambda, v, p, horizon).map_err(msg)?;
    let eta0 = site_spec(n, initial)?;
    let key = ReplicaKey::new(seed);
    let zeta0 = sample_initial_environment(&topology, p, &key).map_err(msg)?;
    let streams = LazyStreams::new(&topology, &params, key, false).map_err(msg)?;
    let options = SimOptions {
        snapshot_times: (0..rows).map(|r| horizon * r as f64 / (rows - 1) as f64).collect(),
        ..Default::default()
    };
    let out = simulate_cpde(&topology, &params, &eta0, &zeta0, &streams, &options).map_err(msg)?;
    let mut pixels = vec![0u8; 2 * rows * n];
    for (r, snap) in out.snapshots.iter().enumerate() {
        for x in 0..n {
            pixels[r * n + x] = snap.eta[x] as u8;
            pixels[(rows + r) * n + x] = 2 * snap.zeta[x] as u8;
        }
    }
    Ok(pixels)
}

/// `[survival, ci_low, ci_high]` to `horizon` on `cycle:n` from a stationary
/// environment.
pub fn survival_values(
    n: usize,
    lambda: f64,
    v: f64,
    p: f64,
    horizon: f64,
    initial: &str,
    replicas: usize,
    seed: u64,
) -> Res<Vec<f64>> {
    let topology = Topology::cycle(n).map_err(msg)?;
    let params = Params::new(lambda, v, p, horizon).map_err(msg)?;
    let eta0 = site_spec(n, initial)?;
    let e = estimate_survival(&topology, &params, &eta0, &InitialEnvironment::Stationary, &McConfig::new(replicas, seed))
        .map_err(msg)?;
    Ok(vec![e.point, e.ci_low, e.ci_high])
}

/// `[beta, lambda_hat, delta]`: the dominated rate, the upper bound on the
/// critical rate for a static critical rate `lambda_bar` (infinite when
/// there is none) and the closed-window bound for windows of length `1 / v`.
pub fn rates_values(lambda: f64, v: f64, p: f64, lambda_bar: f64) -> Res<Vec<f64>> {
    let beta = beta_rate(lambda, v, p).map_err(msg)?;
    let hat = lambda_hat(lambda_bar, v, p).map_err(msg)?.finite().unwrap_or(f64::INFINITY);
    let delta = if v > 0.0 { delta_bound(v, p, 1.0 / v).map_err(msg)?.delta } else { 0.0 };
    Ok(vec![beta, hat, delta])
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn space_time(n: usize, lambda: f64, v: f64, p: f64, horizon: f64, rows: usize, initial: &str, seed: u64) -> Result<Vec<u8>, JsError> {
    js(space_time_values(n, lambda, v, p, horizon, rows, initial, seed))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn survival(n: usize, lambda: f64, v: f64, p: f64, horizon: f64, initial: &str, replicas: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    js(survival_values(n, lambda, v, p, horizon, initial, replicas, seed))
}

#[wasm_bindgen]
pub fn rates(lambda: f64, v: f64, p: f64, lambda_bar: f64) -> Result<Vec<f64>, JsError> {
    js(rates_values(lambda, v, p, lambda_bar))
}

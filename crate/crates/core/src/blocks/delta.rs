//! Lower bounds on the probability that an edge stays closed for a window.

use crate::error::{check_range, Result};

/// `delta' = P(closed at nT | past windows)` lower bound, and
/// `delta = e^{-pvT} delta'`, the bound for a whole window staying closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaBounds {
    pub delta: f64,
    pub delta_prime: f64,
    /// `delta` at `vT = 1`.
    pub delta0: f64,
}

/// `1 - p (1 - e^{-m}) / (1 - e^{-pm})`, with its `p -> 0` limit.
fn delta_prime_at(m: f64, p: f64) -> f64 {
    if m == 0.0 {
        return 1.0 - p;
    }
    if p == 0.0 {
        return 1.0 + (-m).exp_m1() / m;
    }
    1.0 - p * (-m).exp_m1() / (-p * m).exp_m1()
}

fn delta_at(m: f64, p: f64) -> f64 {
    ((-p * m).exp() * delta_prime_at(m, p)).clamp(0.0, 1.0)
}

pub fn delta_bound(v: f64, p: f64, t_len: f64) -> Result<DeltaBounds> {
    check_range("v", v, 0.0, f64::MAX, "a rate >= 0")?;
    check_range("p", p, 0.0, 1.0, "a density in [0, 1]")?;
    check_range("T", t_len, 0.0, f64::MAX, "a window length >= 0")?;
    let m = v * t_len;
    Ok(DeltaBounds {
        delta: delta_at(m, p),
        delta_prime: delta_prime_at(m, p).clamp(0.0, 1.0),
        delta0: delta_at(1.0, p),
    })
}

/// `P(zeta_T = 0 | zeta_0 = 1)`, `P(zeta_T = 0 | zeta_0 = 0, opened in [0, T))`
/// and `P(zeta_T = 0 | zeta_0 = 0, closed throughout [0, T))`.
pub fn edge_chain_conditionals(v: f64, p: f64, t_len: f64) -> Result<[f64; 3]> {
    let b = delta_bound(v, p, t_len)?;
    Ok([(1.0 - p) * -(-v * t_len).exp_m1(), b.delta_prime, 1.0])
}

//! Exact law of `|Z_1|` from `Z_0 = {0}` under Bernoulli drivers.

use std::cell::Cell;
use std::collections::HashMap;

use crate::blocks::{z_step, Drivers, ZGeometry};
use crate::error::{check_range, Error, Result};

/// Largest window radius enumerated.
pub const MAX_RADIUS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct ZOneStep {
    pub epsilon: f64,
    pub radius: usize,
    /// `law[k] = P(|Z_1| = k)` with the drivers outside `{-R, ..., R}` set to 0.
    pub law: Vec<f64>,
    /// Number of distinct driver patterns that decide `Z_1`.
    pub leaves: usize,
    /// Total variation distance to [`interval_count_law`].
    pub tv_to_count: f64,
}

impl ZOneStep {
    pub fn mean(&self) -> f64 {
        self.law.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
    }
}

/// `P(|Z_1| = k)` from the interval count: `(1-e)^3` for `k = 0`,
/// `e (1-e)^2` for `k = 3` and `(k-2) e^{k-3} (1-e)^2` for `k >= 4`.
pub fn interval_count_law(eps: f64, k: usize) -> f64 {
    let q = 1.0 - eps;
    match k {
        0 => q.powi(3),
        3 => eps * q * q,
        k if k >= 4 => (k - 2) as f64 * eps.powi(k as i32 - 3) * q * q,
        _ => 0.0,
    }
}

/// Drivers that record the first variable asked for without a value.
struct Partial<'a> {
    radius: i64,
    assigned: &'a HashMap<(u8, i64), bool>,
    missing: Cell<Option<(u8, i64)>>,
}

impl Partial<'_> {
    fn get(&self, key: (u8, i64), inside: bool) -> bool {
        if !inside {
            return false;
        }
        match self.assigned.get(&key) {
            Some(&b) => b,
            None => {
                if self.missing.get().is_none() {
                    self.missing.set(Some(key));
                }
                false
            }
        }
    }
}

impl Drivers for Partial<'_> {
    fn u(&self, k: i64, n: u32) -> bool {
        n == 0 && self.get((0, k), k.abs() <= self.radius)
    }
    fn v(&self, e: i64, n: u32) -> bool {
        n == 0 && self.get((1, e), e >= -self.radius && e < self.radius)
    }
}

/// Enumerates every assignment of the drivers that one step of `Z` looks at,
/// branching only on variables it actually queries.
pub fn exact_z_one_step(eps: f64, radius: usize) -> Result<ZOneStep> {
    check_range("epsilon", eps, 0.0, 1.0, "a probability in [0, 1]")?;
    if radius > MAX_RADIUS {
        return Err(Error::TooLarge {
            size: radius as u64,
            limit: MAX_RADIUS as u64,
        });
    }
    let mut law = vec![0.0; 2 * radius + 4];
    let mut leaves = 0;
    let mut stack = vec![(HashMap::new(), 1.0)];
    while let Some((assigned, prob)) = stack.pop() {
        let drivers = Partial {
            radius: radius as i64,
            assigned: &assigned,
            missing: Cell::new(None),
        };
        let z1 = z_step(&ZGeometry::Line, &drivers, &[0], 0)?;
        match drivers.missing.get() {
            Some(key) => {
                for (value, w) in [(true, eps), (false, 1.0 - eps)] {
                    if w > 0.0 {
                        let mut next = assigned.clone();
                        next.insert(key, value);
                        stack.push((next, prob * w));
                    }
                }
            }
            None => {
                leaves += 1;
                law[z1.len()] += prob;
            }
        }
    }
    let mut tv = 0.0;
    let mut count_mass = 0.0;
    for (k, &p) in law.iter().enumerate() {
        let c = interval_count_law(eps, k);
        count_mass += c;
        tv += (p - c).abs();
    }
    // Count-law mass beyond the window, where the exact law has none.
    tv += (1.0 - count_mass).max(0.0);
    Ok(ZOneStep {
        epsilon: eps,
        radius,
        law,
        leaves,
        tv_to_count: tv / 2.0,
    })
}

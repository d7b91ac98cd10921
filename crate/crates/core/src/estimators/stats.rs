//! Small statistical toolbox used by the estimators and the checks.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::ReplicaKey;

pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes / n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let phat = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (phat + z2 / (2.0 * n_f)) / denom;
    let half = z * (phat * (1.0 - phat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    median_in_place(&mut v)
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    let (_, &mut hi, _) = v.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Percentile bootstrap interval for the median.
pub fn bootstrap_median_ci(xs: &[f64], resamples: usize, key: &ReplicaKey) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = key.rng(0);
    let mut buf = vec![0.0; n];
    let mut meds: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = xs[rng.random_range(0..n)];
            }
            median_in_place(&mut buf)
        })
        .collect();
    meds.sort_unstable_by(f64::total_cmp);
    let at = |q: f64| meds[((q * resamples as f64) as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

/// Asymptotic Kolmogorov tail `P(K > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Precondition("KS test needs at least one sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let root = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail((root + 0.12 + 0.11 / root) * d),
        n: s.len(),
    })
}

pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<KsResult> {
    ks_test(samples, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
}

/// Weighted pool-adjacent-violators fit of a non-decreasing sequence.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    // Blocks of (value, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let (v2, w2, l2) = blocks[blocks.len() - 1];
            let (v1, w1, l1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let wt = w1 + w2;
            blocks.push(((v1 * w1 + v2 * w2) / wt, wt, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, l)| std::iter::repeat_n(v, l)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub r2: f64,
}

/// Weighted least squares line `y = a + b x`; unit weights if `w` is `None`.
pub fn linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Precondition("a line fit needs two or more paired points".into()));
    }
    let known_variances = w.is_some();
    let ones = vec![1.0; n];
    let w = w.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = y.iter().zip(w).map(|(a, b)| b * (a - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    // With known weights 1/se^2 the slope variance is 1/sxx; with unit weights
    // use the residual variance.
    let slope_se = if known_variances {
        (1.0 / sxx).sqrt()
    } else if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        intercept,
        slope,
        slope_se,
        r2,
    })
}

/// Result of testing a sequence of estimates for a non-decreasing trend.
#[derive(Clone, Debug, PartialEq)]
pub struct TrendTest {
    pub fitted: Vec<f64>,
    /// Weighted squared distance to the isotonic fit.
    pub chi2: f64,
    /// Conservative p-value of the departure from monotonicity
    /// (chi-square with `k - 1` degrees of freedom bounds the chi-bar law).
    pub p_violation: f64,
    pub slope: f64,
    pub slope_z: f64,
    /// No significant departure from a non-decreasing sequence.
    pub non_decreasing: bool,
    /// Non-decreasing and the weighted slope is significantly positive.
    pub increasing: bool,
}

/// Isotonic trend test of estimates `y` with standard errors `se` at level `alpha`.
pub fn isotonic_trend(y: &[f64], se: &[f64], alpha: f64) -> Result<TrendTest> {
    let k = y.len();
    if k < 2 || se.len() != k {
        return Err(Error::Precondition("trend test needs two or more estimates with errors".into()));
    }
    // Zero standard errors (e.g. an all-equal arm) get a tiny floor.
    let floor = se.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor * 1e-3 } else { 1e-12 };
    let w: Vec<f64> = se.iter().map(|&s| 1.0 / s.max(floor).powi(2)).collect();
    let fitted = pava(y, &w);
    let chi2: f64 = (0..k).map(|i| w[i] * (y[i] - fitted[i]).powi(2)).sum();
    let dist = ChiSquared::new((k - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_violation = dist.sf(chi2);
    let idx: Vec<f64> = (0..k).map(|i| i as f64).collect();
    let fit = linear_fit(&idx, y, Some(&w))?;
    let slope_z = if fit.slope_se > 0.0 { fit.slope / fit.slope_se } else { f64::INFINITY * fit.slope.signum() };
    let normal = Normal::standard();
    let non_decreasing = p_violation >= alpha;
    Ok(TrendTest {
        fitted,
        chi2,
        p_violation,
        slope: fit.slope,
        slope_z,
        non_decreasing,
        increasing: non_decreasing && slope_z > normal.inverse_cdf(1.0 - alpha),
    })
}

/// Pearson chi-square test of independence on a 2x2 table; returns the p-value.
pub fn chi2_independence_2x2(table: [[u64; 2]; 2]) -> Result<f64> {
    let total: u64 = table.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Precondition("empty contingency table".into()));
    }
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if rows.contains(&0) || cols.contains(&0) {
        return Ok(1.0);
    }
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / total as f64;
            stat += (table[i][j] as f64 - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// `|observed - expected| <= k sigma` for a binomial count.
pub fn within_binomial_sigma(successes: u64, n: u64, p: f64, k: f64) -> bool {
    let n_f = n as f64;
    let sigma = (n_f * p * (1.0 - p)).sqrt();
    (successes as f64 - n_f * p).abs() <= k * sigma.max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wilson_contains_phat() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_relative_eq!(lo, 0.2189, epsilon = 1e-3);
        assert_eq!(wilson(0, 10, Z95).0, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn pava_pools_violators() {
        let fit = pava(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4]);
        assert_eq!(fit, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn trend_detects_increase_and_decrease() {
        let se = [0.1; 5];
        assert!(isotonic_trend(&[1.0, 1.5, 2.0, 2.5, 3.0], &se, 0.05).unwrap().increasing);
        let down = isotonic_trend(&[3.0, 2.5, 2.0, 1.5, 1.0], &se, 0.05).unwrap();
        assert!(!down.non_decreasing);
        let flat = isotonic_trend(&[1.0, 1.01, 0.99, 1.0, 1.0], &se, 0.05).unwrap();
        assert!(flat.non_decreasing && !flat.increasing);
    }

    #[test]
    fn ks_accepts_exponential_sample() {
        let key = ReplicaKey::new(2);
        let mut rng = key.rng(5);
        let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.random::<f64>()).ln() / 2.0).collect();
        assert!(ks_exponential(&xs, 2.0).unwrap().p_value > 0.01);
        assert!(ks_exponential(&xs, 3.0).unwrap().p_value < 0.01);
    }

    #[test]
    fn line_fit_exact() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], None).unwrap();
        assert_relative_eq!(f.slope, 2.0);
        assert_relative_eq!(f.intercept, 1.0);
        assert_relative_eq!(f.r2, 1.0);
    }

    #[test]
    fn independence_table() {
        assert!(chi2_independence_2x2([[50, 50], [50, 50]]).unwrap() > 0.99);
        assert!(chi2_independence_2x2([[90, 10], [10, 90]]).unwrap() < 1e-6);
    }
}

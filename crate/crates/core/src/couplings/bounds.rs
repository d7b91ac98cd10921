use crate::error::{check_range, Error, Result};

/// Infection rate of the contact process that the CPDE dominates:
/// `(lambda + v - sqrt((v + lambda)^2 - 4 lambda v p)) / 2`.
///
/// Evaluated in the rationalized form `2 lambda v p / (lambda + v + sqrt(D))`,
/// which has no cancellation for small `p`.
pub fn beta_rate(lambda: f64, v: f64, p: f64) -> Result<f64> {
    check_range("lambda", lambda, 0.0, f64::MAX, "a finite rate >= 0")?;
    check_range("v", v, 0.0, f64::MAX, "a finite rate >= 0")?;
    check_range("p", p, 0.0, 1.0, "a density in [0, 1]")?;
    if lambda == 0.0 || v == 0.0 || p == 0.0 {
        return Ok(0.0);
    }
    let s = lambda + v;
    let disc = (s * s - 4.0 * lambda * v * p).max(0.0);
    Ok(2.0 * lambda * v * p / (s + disc.sqrt()))
}

/// Upper bound on the critical rate, or the explicit infinity tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaHat {
    Finite(f64),
    Infinity,
}

impl LambdaHat {
    pub fn finite(self) -> Option<f64> {
        match self {
            LambdaHat::Finite(x) => Some(x),
            LambdaHat::Infinity => None,
        }
    }
}

impl std::fmt::Display for LambdaHat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LambdaHat::Finite(x) => write!(f, "{x}"),
            LambdaHat::Infinity => f.write_str("inf"),
        }
    }
}

/// `lambda_bar (v - lambda_bar) / (v p - lambda_bar)` when `v p > lambda_bar`.
pub fn lambda_hat(lambda_bar: f64, v: f64, p: f64) -> Result<LambdaHat> {
    if !(lambda_bar > 0.0 && lambda_bar.is_finite()) {
        return Err(Error::Domain {
            name: "lambda_bar",
            value: lambda_bar,
            expected: "a finite rate > 0",
        });
    }
    check_range("v", v, 0.0, f64::MAX, "a finite rate >= 0")?;
    check_range("p", p, 0.0, 1.0, "a density in [0, 1]")?;
    let vp = v * p;
    Ok(if vp > lambda_bar {
        LambdaHat::Finite(lambda_bar * (v - lambda_bar) / (vp - lambda_bar))
    } else {
        LambdaHat::Infinity
    })
}

/// Bound on the mean number of infections at unrefreshed edges in a ball of
/// `ball_size` sites up to time `n`: `ball_size (lambda sqrt(v) / (lambda + v)
/// + 4 (e/4)^sqrt(v))`. Only valid for `v > 16 lambda^2 n^2`.
pub fn m_n_bound(lambda: f64, v: f64, n: u32, ball_size: usize) -> Result<f64> {
    check_range("lambda", lambda, 0.0, f64::MAX, "a finite rate >= 0")?;
    check_range("v", v, 0.0, f64::MAX, "a finite rate >= 0")?;
    let need = 16.0 * lambda * lambda * f64::from(n) * f64::from(n);
    if v <= need {
        return Err(Error::Precondition(format!(
            "the bound needs v > 16 lambda^2 n^2 = {need}, got v = {v}"
        )));
    }
    let root = v.sqrt();
    let per_site = lambda * root / (lambda + v) + 4.0 * (std::f64::consts::E / 4.0).powf(root);
    Ok(ball_size as f64 * per_site)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_endpoints_and_value() {
        for &(l, v) in &[(0.5, 2.0), (3.0, 1.0), (2.0, 2.0)] {
            assert_eq!(beta_rate(l, v, 0.0).unwrap(), 0.0);
            assert_relative_eq!(beta_rate(l, v, 1.0).unwrap(), f64::min(l, v), epsilon = 1e-14);
        }
        assert_relative_eq!(beta_rate(1.0, 1.0, 0.5).unwrap(), 0.5 * (2.0 - 2f64.sqrt()), epsilon = 1e-15);
        assert!((beta_rate(1.0, 1.0, 0.5).unwrap() - 0.2928932).abs() < 1e-7);
        assert_eq!(beta_rate(0.0, 3.0, 0.5).unwrap(), 0.0);
        assert!(beta_rate(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn lambda_hat_cases() {
        assert_eq!(lambda_hat(1.0, 2.0, 1.0).unwrap(), LambdaHat::Finite(1.0));
        assert_eq!(lambda_hat(1.0, 1.0, 0.5).unwrap(), LambdaHat::Infinity);
        assert_eq!(lambda_hat(1.0, 4.0, 0.5).unwrap(), LambdaHat::Finite(3.0));
        let lh = lambda_hat(1.6, 10.0, 0.7).unwrap().finite().unwrap();
        assert_relative_eq!(beta_rate(lh, 10.0, 0.7).unwrap(), 1.6, epsilon = 1e-12);
    }

    #[test]
    fn m_n_bound_value_and_precondition() {
        let b = m_n_bound(1.0, 100.0, 2, 5).unwrap();
        let expected = 5.0 * (10.0 / 101.0 + 4.0 * (std::f64::consts::E / 4.0).powi(10));
        assert_relative_eq!(b, expected, epsilon = 1e-14);
        assert!((b - 0.9147).abs() < 1e-3, "{b}");
        assert!(matches!(m_n_bound(1.0, 64.0, 2, 5), Err(Error::Precondition(_))));
        assert!(m_n_bound(1.0, 1e8, 2, 5).unwrap() < 1e-2);
    }
}

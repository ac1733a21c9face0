//! Binomial interval and two-proportion test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::EvalError;

/// A proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub k: u64,
    pub n: u64,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    pub fn new(k: u64, n: u64) -> Result<Rate, EvalError> {
        let (ci_low, ci_high) = wilson_ci(k, n, 0.95)?;
        Ok(Rate {
            k,
            n,
            accuracy: k as f64 / n as f64,
            ci_low,
            ci_high,
        })
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_ci(k: u64, n: u64, confidence: f64) -> Result<(f64, f64), EvalError> {
    if n == 0 {
        return Err(EvalError::EmptyInput("interval over zero trials".into()));
    }
    if k > n {
        return Err(EvalError::InvalidCounts { k, n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::InvalidConfidence(confidence));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let low = if k == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let high = if k == n {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    Ok((low, high))
}

/// Pooled-variance two-proportion z statistic and two-sided p-value.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<(f64, f64), EvalError> {
    if n1 == 0 || n2 == 0 {
        return Err(EvalError::EmptyInput("proportion over zero trials".into()));
    }
    if k1 > n1 || k2 > n2 {
        return Err(EvalError::InvalidCounts {
            k: k1.max(k2),
            n: n1.min(n2),
        });
    }
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 || p1 == p2 {
        return Ok((0.0, 1.0));
    }
    let z = (p1 - p2) / se;
    Ok((z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_ci(62, 100, 0.95).unwrap();
        assert!(
            (lo - 0.522).abs() <= 0.001 && (hi - 0.709).abs() <= 0.001,
            "{lo} {hi}"
        );
        let (lo, hi) = wilson_ci(10, 10, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - 0.722).abs() < 0.001, "{lo}");
        assert_eq!(wilson_ci(0, 10, 0.95).unwrap().0, 0.0);
        assert!(wilson_ci(0, 0, 0.95).is_err());
    }

    #[test]
    fn z_examples() {
        assert_eq!(two_proportion_z(50, 100, 50, 100).unwrap(), (0.0, 1.0));
        let (z, p) = two_proportion_z(60, 100, 50, 100).unwrap();
        assert!(
            (z - 1.421).abs() < 0.001 && (p - 0.155).abs() < 0.002,
            "{z} {p}"
        );
        assert!(two_proportion_z(90, 100, 60, 100).unwrap().1 < 0.05);
        assert_eq!(two_proportion_z(0, 10, 0, 20).unwrap(), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn interval_contains_estimate(n in 1u64..2000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as u64;
            let (lo, hi) = wilson_ci(k, n, 0.95).unwrap();
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}

//! Statistical methods the pipeline can select for distribution questions:
//! Pearson correlation, a two-sided variance-ratio test, and a
//! skewness/kurtosis normality check. All run at significance level 0.05.

use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

pub const ALPHA: f64 = 0.05;

/// Upper 0.95 quantile of the chi-squared distribution with 2 degrees of
/// freedom. Closed form: with 2 df the distribution is Exp(1/2), so the
/// quantile is -2 ln(alpha).
pub const CHI_SQUARED_2_CRITICAL: f64 = 5.991464547107982;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

fn check_finite(name: &str, xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::DegenerateInput(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Product-moment correlation of two equal-length samples. Requires at
/// least 3 pairs and nonzero variance on both sides; the result is clamped
/// to [-1, 1] against rounding spill.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: x.len() });
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("a sample has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTest {
    /// Ratio of the larger sample variance to the smaller; always >= 1.
    pub f_statistic: f64,
    /// Degrees of freedom, numerator first (the larger-variance sample).
    pub df: (u64, u64),
    /// Upper critical value of the two-sided test at alpha = 0.05.
    pub critical_value: f64,
    pub significant: bool,
}

/// Two-sided F-test for equality of variances. The statistic puts the
/// larger sample variance in the numerator, so the test compares against
/// the upper alpha/2 quantile only.
pub fn variance_ratio_test(a: &[f64], b: &[f64]) -> Result<VarianceTest, StatsError> {
    if a.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: a.len() });
    }
    if b.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: b.len() });
    }
    check_finite("a", a)?;
    check_finite("b", b)?;
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::DegenerateInput("both samples have zero variance".into()));
    }
    if va == 0.0 || vb == 0.0 {
        return Err(StatsError::DegenerateInput("a sample has zero variance".into()));
    }
    let (f, df_num, df_den) = if va >= vb {
        (va / vb, (a.len() - 1) as u64, (b.len() - 1) as u64)
    } else {
        (vb / va, (b.len() - 1) as u64, (a.len() - 1) as u64)
    };
    let dist = FisherSnedecor::new(df_num as f64, df_den as f64)
        .map_err(|e| StatsError::DegenerateInput(e.to_string()))?;
    let critical = dist.inverse_cdf(1.0 - ALPHA / 2.0);
    Ok(VarianceTest {
        f_statistic: f,
        df: (df_num, df_den),
        critical_value: critical,
        significant: f > critical,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityTest {
    /// Jarque-Bera statistic: n/6 * (S^2 + K^2/4).
    pub statistic: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub critical_value: f64,
    /// True when the statistic stays at or below the critical value, i.e.
    /// the sample is consistent with a normal distribution at alpha = 0.05.
    pub normal: bool,
}

/// Jarque-Bera normality check against the chi-squared(2) critical value.
/// Needs at least 8 samples for the moment estimates to mean anything.
pub fn normality_check(x: &[f64]) -> Result<NormalityTest, StatsError> {
    if x.len() < 8 {
        return Err(StatsError::TooFewSamples { needed: 8, got: x.len() });
    }
    check_finite("x", x)?;
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(StatsError::DegenerateInput("sample has zero variance".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess = m4 / (m2 * m2) - 3.0;
    let statistic = n / 6.0 * (skewness * skewness + excess * excess / 4.0);
    Ok(NormalityTest {
        statistic,
        skewness,
        excess_kurtosis: excess,
        critical_value: CHI_SQUARED_2_CRITICAL,
        normal: statistic <= CHI_SQUARED_2_CRITICAL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chi_squared_critical_matches_closed_form() {
        assert_abs_diff_eq!(CHI_SQUARED_2_CRITICAL, -2.0 * ALPHA.ln(), epsilon = 1e-15);
    }

    #[test]
    fn pearson_exact_on_linear_data() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -0.5 * v + 2.0).collect();
        assert_abs_diff_eq!(pearson(&x, &up).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&x, &down).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_rejects_bad_input() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(StatsError::TooFewSamples { needed: 3, .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput(_))
        ));
        assert!(pearson(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn identical_samples_give_f_of_exactly_one() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.5, 3.25];
        let t = variance_ratio_test(&a, &a).unwrap();
        assert_eq!(t.f_statistic, 1.0);
        assert!(!t.significant);
    }

    #[test]
    fn f_statistic_is_order_independent_and_at_least_one() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [10.0, 30.0, 20.0, 50.0, 40.0];
        let t1 = variance_ratio_test(&a, &b).unwrap();
        let t2 = variance_ratio_test(&b, &a).unwrap();
        assert_eq!(t1.f_statistic, t2.f_statistic);
        assert!(t1.f_statistic >= 1.0);
        assert_eq!(t1.df, t2.df);
    }

    #[test]
    fn wildly_unequal_variances_are_significant() {
        let a: Vec<f64> = (0..30).map(|i| i as f64 * 0.01).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 * 100.0).collect();
        assert!(variance_ratio_test(&a, &b).unwrap().significant);
    }

    #[test]
    fn zero_variance_sample_is_degenerate() {
        assert!(matches!(
            variance_ratio_test(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn uniform_grid_fails_normality() {
        // An even grid has zero skew but excess kurtosis near -1.2, which
        // the statistic catches easily at n = 500.
        let xs: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let t = normality_check(&xs).unwrap();
        assert!(t.statistic > t.critical_value);
        assert!(!t.normal);
        assert_abs_diff_eq!(t.skewness, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_sample_passes_normality() {
        // Deterministic Box-Muller over a small multiplicative generator.
        let mut state: u64 = 88172645463325252;
        let mut unit = move || {
            // xorshift64
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut xs = Vec::with_capacity(500);
        while xs.len() < 500 {
            let (u1, u2) = (unit().max(1e-12), unit());
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            xs.push(r * theta.cos());
            xs.push(r * theta.sin());
        }
        xs.truncate(500);
        let t = normality_check(&xs).unwrap();
        assert!(t.normal, "JB = {} vs critical {}", t.statistic, t.critical_value);
    }

    #[test]
    fn normality_needs_enough_samples() {
        assert!(matches!(
            normality_check(&[1.0; 7]),
            Err(StatsError::TooFewSamples { needed: 8, .. })
        ));
    }
}

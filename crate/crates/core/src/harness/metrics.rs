//! Experiment metrics: localization error and empirical rate slopes.

use crate::error::{Error, Result};
use crate::game::StrategyProfile;
use crate::ode::linear_fit;

/// Mean localization error `(1/N)·√(Σ_i ‖x_i − x_i◇‖²)`.
pub fn mle(x: &StrategyProfile, x_true: &StrategyProfile) -> Result<f64> {
    if x.layout() != x_true.layout() {
        return Err(Error::Config("profiles have different layouts".into()));
    }
    let n = x.layout().players() as f64;
    Ok((x.as_vector() - x_true.as_vector()).norm() / n)
}

/// Least-squares slope of `log(value)` against `log(k)` over the trailing
/// `window` fraction of the series. Values must be positive on the window.
pub fn loglog_slope(series: &[(f64, f64)], window: f64) -> Result<f64> {
    if !(0.0 < window && window <= 1.0) {
        return Err(Error::Fit("window must lie in (0, 1]".into()));
    }
    let take = ((series.len() as f64) * window).ceil() as usize;
    let tail = &series[series.len().saturating_sub(take)..];
    if tail.len() < 2 {
        return Err(Error::Fit("too few points in the fit window".into()));
    }
    if tail.iter().any(|(k, v)| *k <= 0.0 || *v <= 0.0) {
        return Err(Error::Fit("log-log fit requires positive data".into()));
    }
    let xs: Vec<f64> = tail.iter().map(|(k, _)| k.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys)?;
    Ok(slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn mle_zero_at_truth() {
        let x = StrategyProfile::from_blocks(&[
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-1.0, 0.5]),
        ]);
        assert_eq!(mle(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn mle_uniform_offset() {
        // 10 nodes, each off by (0.1, 0): (1/10)·√(10·0.01) ≈ 0.0316.
        let truth: Vec<DVector<f64>> = (0..10).map(|i| DVector::from_vec(vec![i as f64, 0.0])).collect();
        let moved: Vec<DVector<f64>> = truth
            .iter()
            .map(|b| b + DVector::from_vec(vec![0.1, 0.0]))
            .collect();
        let a = StrategyProfile::from_blocks(&truth);
        let b = StrategyProfile::from_blocks(&moved);
        let v = mle(&b, &a).unwrap();
        assert!((v - 0.1f64 * (10.0f64).sqrt() / 10.0).abs() < 1e-12);
    }

    #[test]
    fn mle_dimension_mismatch() {
        let a = StrategyProfile::from_blocks(&[DVector::from_vec(vec![1.0])]);
        let b = StrategyProfile::from_blocks(&[DVector::from_vec(vec![1.0, 2.0])]);
        assert!(mle(&a, &b).is_err());
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let one_over_k: Vec<(f64, f64)> = (1..=500).map(|k| (k as f64, 1.0 / k as f64)).collect();
        let s = loglog_slope(&one_over_k, 0.8).unwrap();
        assert!((s + 1.0).abs() < 1e-6, "slope {s}");

        let inv_sqrt: Vec<(f64, f64)> =
            (1..=500).map(|k| (k as f64, 1.0 / (k as f64).sqrt())).collect();
        let s = loglog_slope(&inv_sqrt, 0.8).unwrap();
        assert!((s + 0.5).abs() < 1e-6, "slope {s}");
    }

    #[test]
    fn slope_rejects_nonpositive_values() {
        let series = vec![(1.0, 1.0), (2.0, 0.0), (3.0, 0.5)];
        assert!(loglog_slope(&series, 1.0).is_err());
    }
}

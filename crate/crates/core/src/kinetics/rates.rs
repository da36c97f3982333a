use std::f64::consts::LN_2;

use serde::Serialize;

use super::KineticsError;
use crate::stats::correlation;

/// Relative per-tick change of the inner-layer occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Depletion {
    pub lambda: f64,
    /// Ticks to halve the occupancy at this rate; only for `lambda < 0`.
    pub halving_time: Option<f64>,
}

/// `ln 2 / |lambda|` for a shrinking layer.
pub fn halving_time(lambda: f64) -> Option<f64> {
    (lambda < 0.0).then(|| LN_2 / lambda.abs())
}

/// `lambda = <f> / <I>`.
pub fn depletion_rate(f_bar: f64, i_bar: f64) -> Result<Depletion, KineticsError> {
    if i_bar <= 0.0 {
        return Err(KineticsError::EmptyInnerLayer);
    }
    let lambda = f_bar / i_bar;
    Ok(Depletion { lambda, halving_time: halving_time(lambda) })
}

pub const MIN_JOINT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointQuantile {
    pub theta: f64,
    pub p: f64,
    /// Realised `#{lambda^- < theta and lambda^+ < theta} / n`.
    pub fraction: f64,
    pub cross_correlation: Option<f64>,
    pub samples: usize,
}

/// Smallest sample value `theta` with `P(lambda^- < theta and lambda^+ <
/// theta) >= p`. Both rates lie below `theta` exactly when their maximum
/// does, so the search runs over the sorted pairwise maxima. Pairs with a
/// non-finite member are dropped.
pub fn joint_threshold_quantile(lam_minus: &[f64], lam_plus: &[f64], p: f64) -> Result<JointQuantile, KineticsError> {
    assert_eq!(lam_minus.len(), lam_plus.len());
    if !(p > 0.0 && p < 1.0) {
        return Err(KineticsError::InvalidParams("p must lie in (0, 1)"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        lam_minus.iter().zip(lam_plus).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).unzip();
    let n = xs.len();
    if n < MIN_JOINT_SAMPLES {
        return Err(KineticsError::InsufficientData { needed: MIN_JOINT_SAMPLES, got: n });
    }
    let mut m: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a.max(*b)).collect();
    m.sort_by(f64::total_cmp);
    let need = (p * n as f64).ceil() as usize;
    // m[j] has exactly `first index of its value` samples strictly below it.
    let mut j = need.min(n - 1);
    while j > 0 && m[j - 1] == m[j] {
        j -= 1;
    }
    while j < n && j < need {
        let v = m[j];
        while j < n && m[j] == v {
            j += 1;
        }
    }
    if j >= n {
        return Err(KineticsError::InsufficientData { needed: need + 1, got: n });
    }
    let theta = m[j];
    Ok(JointQuantile { theta, p, fraction: j as f64 / n as f64, cross_correlation: correlation(&xs, &ys), samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_and_halving() {
        assert_eq!(depletion_rate(0.0, 5.0).unwrap(), Depletion { lambda: 0.0, halving_time: None });
        let d = depletion_rate(-0.44, 10.0).unwrap();
        assert!((d.halving_time.unwrap() - 15.753).abs() < 1e-3);
        assert_eq!(depletion_rate(1.0, 0.0), Err(KineticsError::EmptyInnerLayer));
    }

    #[test]
    fn closed_form_decay() {
        let mut i = 1000.0f64;
        let (mut fs, mut is) = (0.0, 0.0);
        for _ in 0..50 {
            let f = -0.1 * i;
            fs += f;
            is += i;
            i += f;
        }
        let d = depletion_rate(fs / 50.0, is / 50.0).unwrap();
        assert!((d.lambda + 0.1).abs() < 1e-9);
    }

    #[test]
    fn identical_series_give_marginal_quantile() {
        let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 2000) as f64).collect();
        let q = joint_threshold_quantile(&x, &x, 0.05).unwrap();
        assert_eq!(q.theta, 100.0);
        assert!((q.fraction - 0.05).abs() < 1e-12);
        assert!((q.cross_correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_move_to_next_distinct_value() {
        let mut x = vec![0.0; 600];
        x.extend(vec![1.0; 600]);
        let q = joint_threshold_quantile(&x, &x, 0.2).unwrap();
        assert_eq!(q.theta, 1.0);
        assert!((q.fraction - 0.5).abs() < 1e-12);
        assert!(joint_threshold_quantile(&x[..10], &x[..10], 0.2).is_err());
    }
}

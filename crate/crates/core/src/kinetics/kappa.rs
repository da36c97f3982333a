use std::collections::BTreeMap;

use serde::Serialize;

use super::KineticsError;
use crate::stats::median_in_place;

pub const MIN_KAPPA_SAMPLES: usize = 100;

/// Fit of `Kn = kappa / <I>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaFit {
    pub kappa: f64,
    /// Uncentred coefficient of determination of the through-origin fit on
    /// the binned medians.
    pub r_squared: f64,
    pub samples: usize,
    pub bins: usize,
}

impl KappaFit {
    /// Smallest mean occupancy per side with `Kn < theta_kn`.
    pub fn min_occupancy(&self, theta_kn: f64) -> f64 {
        self.kappa / theta_kn
    }
}

/// Bins samples by `floor(<I>)`, takes the median of `Kn` and of `1/<I>`
/// per bin, then regresses the medians through the origin. Samples with a
/// non-finite `Kn` or with `<I> <= 0` are skipped.
pub fn fit_kappa(kn: &[f64], i_bar: &[f64]) -> Result<KappaFit, KineticsError> {
    assert_eq!(kn.len(), i_bar.len());
    let mut bins: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut samples = 0;
    for (&k, &i) in kn.iter().zip(i_bar) {
        if k.is_finite() && i.is_finite() && i > 0.0 {
            let e = bins.entry(i.floor() as i64).or_default();
            e.0.push(k);
            e.1.push(1.0 / i);
            samples += 1;
        }
    }
    if samples < MIN_KAPPA_SAMPLES {
        return Err(KineticsError::InsufficientData { needed: MIN_KAPPA_SAMPLES, got: samples });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        bins.into_values().map(|(mut k, mut inv)| (median_in_place(&mut inv), median_in_place(&mut k))).unzip();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let kappa = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - kappa * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(KappaFit { kappa, r_squared, samples, bins: xs.len() })
}

/// Symmetric form against the two-sided mean occupancy.
pub fn fit_kappa_symmetric(kn_sym: &[f64], i_bar_minus: &[f64], i_bar_plus: &[f64]) -> Result<KappaFit, KineticsError> {
    assert_eq!(i_bar_minus.len(), i_bar_plus.len());
    let mean: Vec<f64> = i_bar_minus.iter().zip(i_bar_plus).map(|(a, b)| 0.5 * (a + b)).collect();
    fit_kappa(kn_sym, &mean)
}

/// Returns `(kappa^-, kappa^+)`.
pub fn fit_kappa_per_side(
    kn_minus: &[f64],
    kn_plus: &[f64],
    i_bar_minus: &[f64],
    i_bar_plus: &[f64],
) -> Result<(KappaFit, KappaFit), KineticsError> {
    Ok((fit_kappa(kn_minus, i_bar_minus)?, fit_kappa(kn_plus, i_bar_plus)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_law() {
        let i: Vec<f64> = (0..300).map(|j| 2.0 + (j % 40) as f64).collect();
        let kn: Vec<f64> = i.iter().map(|x| 0.72 / x).collect();
        let fit = fit_kappa(&kn, &i).unwrap();
        assert!((fit.kappa - 0.72).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.bins, 40);
        assert!((fit.min_occupancy(0.1) - 7.2).abs() < 1e-9);
    }

    #[test]
    fn symmetric_uses_mean_occupancy() {
        let im: Vec<f64> = (0..200).map(|j| 5.0 + (j % 7) as f64).collect();
        let ip: Vec<f64> = im.iter().map(|x| x + 2.0).collect();
        let kn: Vec<f64> = im.iter().zip(&ip).map(|(a, b)| 0.72 * 2.0 / (a + b)).collect();
        assert!((fit_kappa_symmetric(&kn, &im, &ip).unwrap().kappa - 0.72).abs() < 1e-12);
        let (m, p) = fit_kappa_per_side(&kn, &kn, &im, &ip).unwrap();
        assert!(m.kappa > 0.0 && p.kappa > 0.0);
    }

    #[test]
    fn skips_unusable_samples() {
        let mut kn = vec![f64::INFINITY; 50];
        kn.extend(vec![0.1; 60]);
        let i = vec![5.0; 110];
        assert_eq!(fit_kappa(&kn, &i), Err(KineticsError::InsufficientData { needed: 100, got: 60 }));
    }
}

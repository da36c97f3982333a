//! Small numerical building blocks shared by the estimators.

/// One-pass mean, variance and covariance of a paired stream.
///
/// Uses Welford-style updates so long streams with large offsets keep their
/// precision. Two accumulators over disjoint data can be merged.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c_xy: f64,
}

impl CoMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&mut self, other: &CoMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        self.m2_x += other.m2_x + dx * dx * na * nb / n;
        self.m2_y += other.m2_y + dy * dy * na * nb / n;
        self.c_xy += other.c_xy + dx * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn mean_y(&self) -> f64 {
        self.mean_y
    }

    /// Population covariance.
    pub fn covariance(&self) -> Option<f64> {
        (self.n > 0).then(|| self.c_xy / self.n as f64)
    }

    /// Pearson correlation; `None` when either side has zero variance.
    pub fn correlation(&self) -> Option<f64> {
        if self.n < 2 || self.m2_x <= 0.0 || self.m2_y <= 0.0 {
            return None;
        }
        let r = self.c_xy / (self.m2_x.sqrt() * self.m2_y.sqrt());
        Some(r.clamp(-1.0, 1.0))
    }
}

/// Pearson correlation of two equally long slices.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let mut acc = CoMoments::new();
    for (&x, &y) in xs.iter().zip(ys) {
        acc.push(x, y);
    }
    acc.correlation()
}

/// Least-squares fit of `y = slope * x` (no intercept).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginFit {
    pub slope: f64,
    pub sxx: f64,
    pub n: usize,
}

/// Returns `None` when all regressors are zero.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Option<OriginFit> {
    assert_eq!(xs.len(), ys.len());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    Some(OriginFit { slope: sxy / sxx, sxx, n: xs.len() })
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { intercept: my - slope * mx, slope, r_squared })
}

/// Median of a non-empty slice (mean of the two middle values for even
/// lengths). The slice is reordered.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Compensated running sum (Neumaier). Removal is adding the negation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comoments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 10.0 + 1e6).collect();
        let ys: Vec<f64> = (0..50).map(|i| (i as f64 * 0.11).cos() + 0.5 * i as f64).collect();
        let mut whole = CoMoments::new();
        xs.iter().zip(&ys).for_each(|(&x, &y)| whole.push(x, y));
        let mut a = CoMoments::new();
        let mut b = CoMoments::new();
        xs[..17].iter().zip(&ys[..17]).for_each(|(&x, &y)| a.push(x, y));
        xs[17..].iter().zip(&ys[17..]).for_each(|(&x, &y)| b.push(x, y));
        a.merge(&b);
        let (r1, r2) = (whole.correlation().unwrap(), a.correlation().unwrap());
        assert!((r1 - r2).abs() < 1e-10, "{r1} {r2}");
        assert_eq!(a.count(), 50);
    }

    #[test]
    fn constant_series_has_no_correlation() {
        assert_eq!(correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert!((correlation(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn origin_fit_exact() {
        let xs = [1.0, -2.0, 3.5];
        let ys: Vec<f64> = xs.iter().map(|x| 0.38 * x).collect();
        assert!((fit_through_origin(&xs, &ys).unwrap().slope - 0.38).abs() < 1e-15);
        assert!(fit_through_origin(&[0.0, 0.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_in_place(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

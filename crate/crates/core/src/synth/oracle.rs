//! Reduced-form generators where the estimators' targets are known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{SynthConfig, SynthError};
use crate::kinetics::InnerLayerSample;
use crate::series::CoarseSeries;

/// Paired block series with `v = L* f + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSlope {
    pub f: CoarseSeries,
    pub v: CoarseSeries,
    pub l_star: f64,
}

/// `config.n_events` blocks of standard-normal flow `f` and velocity
/// `v = l_star * f + noise_sigma * z`, seeded from `config.seed`.
pub fn generate_known_slope(config: &SynthConfig, l_star: f64, noise_sigma: f64) -> Result<KnownSlope, SynthError> {
    if !l_star.is_finite() || !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(SynthError::ConfigInvalid("slope and noise must be finite, noise non-negative".into()));
    }
    if config.n_events < 2 {
        return Err(SynthError::ConfigInvalid("need at least two blocks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f = Vec::with_capacity(config.n_events);
    let mut v = Vec::with_capacity(config.n_events);
    for _ in 0..config.n_events {
        let x: f64 = StandardNormal.sample(&mut rng);
        let e: f64 = StandardNormal.sample(&mut rng);
        f.push(x);
        v.push(l_star * x + noise_sigma * e);
    }
    let block = |values| CoarseSeries { block_size: 1, values, origin_tick: 0 };
    Ok(KnownSlope { f: block(f), v: block(v), l_star })
}

/// `n` standard-normal pairs with correlation `rho`.
pub fn correlated_normal_pairs(seed: u64, n: usize, rho: f64) -> (Vec<f64>, Vec<f64>) {
    assert!((-1.0..=1.0).contains(&rho));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a, rho * a + c * b)
        })
        .unzip()
}

/// Inner-layer samples obeying `Kn = kappa / I` exactly: each regime holds
/// the occupancy `I` fixed on both sides for its tick count, and side
/// velocities respond to the flow with path length `gamma_c * kappa / I`.
pub fn kinetic_samples(seed: u64, kappa: f64, gamma_c: u32, regimes: &[(u64, u64)]) -> Vec<InnerLayerSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut tick = 0u64;
    let mut mid = 0.0;
    for &(ticks, inner) in regimes {
        assert!(inner > 0);
        let l = f64::from(gamma_c) * kappa / inner as f64;
        for _ in 0..ticks {
            tick += 1;
            let f_minus: i64 = rng.random_range(-3..=3);
            let f_plus: i64 = rng.random_range(-3..=3);
            let v_minus = l * f_minus as f64;
            let v_plus = -l * f_plus as f64;
            let v = (v_minus + v_plus) / 2.0;
            mid += v;
            out.push(InnerLayerSample {
                tick,
                f_minus,
                f_plus,
                i_minus: inner,
                i_plus: inner,
                mid: Some(mid),
                v: Some(v),
                v_minus: Some(v_minus),
                v_plus: Some(v_plus),
                ..InnerLayerSample::default()
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::correlation;

    #[test]
    fn noiseless_slope_is_exact() {
        let c = SynthConfig { n_events: 50, ..SynthConfig::default() };
        let k = generate_known_slope(&c, 2.5, 0.0).unwrap();
        for (f, v) in k.f.values.iter().zip(&k.v.values) {
            assert_eq!(*v, 2.5 * f);
        }
    }

    #[test]
    fn pairs_carry_requested_correlation() {
        let (a, b) = correlated_normal_pairs(4, 20_000, 0.6);
        let r = correlation(&a, &b).unwrap();
        // sampling sd of r is about (1 - rho^2) / sqrt(n) = 0.0045
        assert!((r - 0.6).abs() < 0.03, "{r}");
    }

    #[test]
    fn kinetic_samples_satisfy_velocity_identity() {
        for s in kinetic_samples(1, 2.0, 10, &[(100, 20), (100, 40)]) {
            let (a, b) = (s.v_minus.unwrap(), s.v_plus.unwrap());
            assert!((s.v.unwrap() - (a + b) / 2.0).abs() < 1e-15);
        }
    }
}

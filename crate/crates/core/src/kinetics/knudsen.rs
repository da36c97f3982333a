use serde::Serialize;

use super::KineticParams;

/// Outcome of a windowed mean-free-path estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathEstimate {
    Finite(f64),
    /// Too few valid blocks or a zero regressor.
    Missing,
    /// The side has no particles in its inner layer.
    Divergent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub enum Knudsen {
    Finite(f64),
    Infinite,
    #[default]
    Undefined,
}

impl Knudsen {
    pub fn value(self) -> Option<f64> {
        match self {
            Knudsen::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Knudsen::Infinite
    }

    /// Infinite exceeds every threshold; undefined exceeds none.
    pub fn exceeds(self, theta: f64) -> bool {
        match self {
            Knudsen::Finite(x) => x > theta,
            Knudsen::Infinite => true,
            Knudsen::Undefined => false,
        }
    }

    /// Two-sided average. Divergence on either side dominates.
    pub fn symmetric(a: Knudsen, b: Knudsen) -> Knudsen {
        match (a, b) {
            (Knudsen::Infinite, _) | (_, Knudsen::Infinite) => Knudsen::Infinite,
            (Knudsen::Finite(x), Knudsen::Finite(y)) => Knudsen::Finite(0.5 * (x + y)),
            _ => Knudsen::Undefined,
        }
    }
}

/// `Kn = L / gamma_c`.
pub fn knudsen_number(path: PathEstimate, gamma_c: u32) -> Knudsen {
    assert!(gamma_c >= 1);
    match path {
        PathEstimate::Finite(l) => Knudsen::Finite(l / f64::from(gamma_c)),
        PathEstimate::Missing => Knudsen::Undefined,
        PathEstimate::Divergent => Knudsen::Infinite,
    }
}

/// Returns `(Kn^-, Kn^+, Kn_sym)`.
pub fn knudsen(l_minus: PathEstimate, l_plus: PathEstimate, params: &KineticParams) -> (Knudsen, Knudsen, Knudsen) {
    let m = knudsen_number(l_minus, params.gamma_c_minus);
    let p = knudsen_number(l_plus, params.gamma_c_plus);
    (m, p, Knudsen::symmetric(m, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_boundary() {
        let p = KineticParams::default().with_gamma_c(18, 18);
        let (m, pl, s) = knudsen(PathEstimate::Finite(1.8), PathEstimate::Finite(1.8), &p);
        assert!((m.value().unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(m, pl);
        assert_eq!(s, m);
        assert!(!m.exceeds(0.1));
    }

    #[test]
    fn divergence_propagates() {
        let p = KineticParams::default();
        let (m, _, s) = knudsen(PathEstimate::Divergent, PathEstimate::Finite(0.5), &p);
        assert!(m.is_infinite() && s.is_infinite() && m.exceeds(1e300));
        let (m, _, s) = knudsen(PathEstimate::Missing, PathEstimate::Finite(0.5), &p);
        assert_eq!((m, s), (Knudsen::Undefined, Knudsen::Undefined));
        assert!(!m.exceeds(-1.0));
        assert!(Knudsen::symmetric(Knudsen::Undefined, Knudsen::Infinite).is_infinite());
    }
}

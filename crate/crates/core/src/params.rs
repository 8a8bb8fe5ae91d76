//! Statistics of the broadband squeezed vacuum reservoir.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const MINIMAL_TOLERANCE: f64 = 1e-12;

/// `sqrt(N (N + 1))`, the largest admissible squeezing correlation.
pub fn minimal_m(n: f64) -> Result<f64> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::param(
            "N",
            format!("mean photon number {n} must be >= 0"),
        ));
    }
    Ok((n * (n + 1.0)).sqrt())
}

/// Reservoir photon number `N`, phase-aligned correlation `M >= 0` and the
/// Purcell rate `gamma_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingParams {
    n: f64,
    m: f64,
    gamma_p: f64,
}

impl SqueezingParams {
    pub fn new(n: f64, m: f64, gamma_p: f64) -> Result<Self> {
        let bound = minimal_m(n)?;
        if !m.is_finite() || m < 0.0 {
            return Err(Error::param("M", format!("{m} must be >= 0")));
        }
        if m > bound + MINIMAL_TOLERANCE * (1.0 + bound) {
            return Err(Error::param(
                "M",
                format!("{m} exceeds sqrt(N(N+1)) = {bound}"),
            ));
        }
        if !gamma_p.is_finite() || gamma_p <= 0.0 {
            return Err(Error::param("gamma_p", format!("{gamma_p} must be > 0")));
        }
        Ok(Self { n, m, gamma_p })
    }

    /// Minimum-uncertainty squeezing, `M = sqrt(N(N+1))`.
    pub fn minimal(n: f64, gamma_p: f64) -> Result<Self> {
        Self::new(n, minimal_m(n)?, gamma_p)
    }

    pub fn vacuum(gamma_p: f64) -> Result<Self> {
        Self::new(0.0, 0.0, gamma_p)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn with_m(self, m: f64) -> Result<Self> {
        Self::new(self.n, m, self.gamma_p)
    }

    pub fn is_minimal_uncertainty(&self) -> bool {
        (self.m - (self.n * (self.n + 1.0)).sqrt()).abs() <= MINIMAL_TOLERANCE
    }

    /// `(2N + 2M + 1, 2N - 2M + 1)`.
    pub fn input_field_variances(&self) -> (f64, f64) {
        let (n, m) = (self.n, self.m);
        (2.0 * n + 2.0 * m + 1.0, 2.0 * n - 2.0 * m + 1.0)
    }
}

pub fn input_field_variances(p: &SqueezingParams) -> (f64, f64) {
    p.input_field_variances()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fig1_input_variances() {
        let p = SqueezingParams::new(1.0, 2f64.sqrt(), 1.0).unwrap();
        let (vx, vy) = p.input_field_variances();
        assert!((vx - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert!((vy - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert!((vx - 5.8284).abs() < 1e-4 && (vy - 0.1716).abs() < 1e-4);
        assert!((vx * vy - 1.0).abs() < 1e-12);
        assert!(p.is_minimal_uncertainty());
    }

    #[test]
    fn vacuum_is_symmetric() {
        let p = SqueezingParams::vacuum(1.0).unwrap();
        assert_eq!(p.input_field_variances(), (1.0, 1.0));
        assert!(p.is_minimal_uncertainty());
    }

    #[test]
    fn minimal_m_values() {
        assert_eq!(minimal_m(0.0).unwrap(), 0.0);
        assert!((minimal_m(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((minimal_m(4.2).unwrap() - 4.6733).abs() < 1e-4);
        assert!(minimal_m(-1.0).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(SqueezingParams::new(1.0, 1.5, 1.0).is_err());
        assert!(SqueezingParams::new(1.0, -0.1, 1.0).is_err());
        assert!(SqueezingParams::new(1.0, 1.0, 0.0).is_err());
        assert!(!SqueezingParams::new(1.0, 1.0, 1.0)
            .unwrap()
            .is_minimal_uncertainty());
    }

    proptest! {
        #[test]
        fn heisenberg_bound(n in 0.0..20.0f64, frac in 0.0..=1.0f64) {
            let m = frac * minimal_m(n).unwrap();
            let p = SqueezingParams::new(n, m, 1.0).unwrap();
            let (vx, vy) = p.input_field_variances();
            prop_assert!(vx * vy >= 1.0 - 1e-9);
            let pm = SqueezingParams::minimal(n, 1.0).unwrap();
            let (vx, vy) = pm.input_field_variances();
            prop_assert!((vx * vy - 1.0).abs() < 1e-9 * (1.0 + n));
        }
    }
}

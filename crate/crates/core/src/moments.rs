//! Closed-form moment equations for a single spin, an oscillator and a
//! collective spin in a squeezed reservoir.
//!
//! The collective right-hand sides are not closed in the first and second
//! moments; they are evaluated on an explicit [`QuantumState`].

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::params::SqueezingParams;
use crate::spin::{expectation, sym_covariance, third_moment, CollectiveOps, QuantumState};

/// First moments and transverse covariance matrix of a collective spin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

impl SpinMoments {
    pub fn of_state(state: &QuantumState, ops: &CollectiveOps) -> Result<Self> {
        Ok(Self {
            mean_x: expectation(&ops.sx, state)?.re,
            mean_y: expectation(&ops.sy, state)?.re,
            mean_z: expectation(&ops.sz, state)?.re,
            var_x: sym_covariance(&ops.sx, &ops.sx, state)?,
            var_y: sym_covariance(&ops.sy, &ops.sy, state)?,
            cov_xy: sym_covariance(&ops.sx, &ops.sy, state)?,
        })
    }

    /// Bloch vector with vanishing covariances; enough input for
    /// [`gardiner_rhs`].
    pub fn from_means(x: f64, y: f64, z: f64) -> Self {
        Self {
            mean_x: x,
            mean_y: y,
            mean_z: z,
            ..Self::default()
        }
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        [[self.var_x, self.cov_xy], [self.cov_xy, self.var_y]]
    }
}

/// Quadrature moments of an oscillator, `X = a + a^dagger`, `Y = i(a^dagger - a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

impl OscillatorMoments {
    /// Coherent state: displaced vacuum with unit quadrature variances.
    pub fn coherent(mean_x: f64, mean_y: f64) -> Self {
        Self {
            mean_x,
            mean_y,
            var_x: 1.0,
            var_y: 1.0,
            cov_xy: 0.0,
        }
    }

    /// `V_X V_Y - C_XY^2`, bounded below by 1 for physical states.
    pub fn uncertainty_product(&self) -> f64 {
        self.var_x * self.var_y - self.cov_xy * self.cov_xy
    }

    pub fn is_physical(&self) -> bool {
        self.var_x > 0.0 && self.var_y > 0.0 && self.uncertainty_product() >= 1.0 - 1e-9
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.mean_x,
            self.mean_y,
            self.var_x,
            self.var_y,
            self.cov_xy,
        ]
    }

    pub fn from_array(y: &[f64]) -> Self {
        Self {
            mean_x: y[0],
            mean_y: y[1],
            var_x: y[2],
            var_y: y[3],
            cov_xy: y[4],
        }
    }
}

/// Time derivative of the three spin means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDerivative {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Time derivative of two quadrature means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureDerivative {
    pub x: f64,
    pub y: f64,
}

/// Time derivative of `(V_x, V_y, C_xy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceDerivative {
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

/// Decay rates of the two transverse spin components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
}

/// A decay rate split into the part carried by the reservoir fluctuations
/// and the part due to self-reaction of the emitted field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDecomposition {
    pub total: f64,
    pub ff_part: f64,
    pub sr_part: f64,
}

/// Single spin-1/2 in a squeezed reservoir (Gardiner's equations).
pub fn gardiner_rhs(m: &SpinMoments, p: &SqueezingParams) -> MeanDerivative {
    let (n, s, g) = (p.n(), p.m(), p.gamma_p());
    MeanDerivative {
        x: -g * (n + s + 0.5) * m.mean_x,
        y: -g * (n - s + 0.5) * m.mean_y,
        z: -g * (2.0 * n + 1.0) * m.mean_z - g,
    }
}

/// Quadrature means damp at `gamma_p / 2` for any bath statistics.
pub fn oscillator_mean_rhs(m: &OscillatorMoments, p: &SqueezingParams) -> QuadratureDerivative {
    let half = 0.5 * p.gamma_p();
    QuadratureDerivative {
        x: -half * m.mean_x,
        y: -half * m.mean_y,
    }
}

/// Quadrature covariances relax at `gamma_p` to the input-field variances.
pub fn oscillator_cov_rhs(m: &OscillatorMoments, p: &SqueezingParams) -> CovarianceDerivative {
    let g = p.gamma_p();
    let (vx_in, vy_in) = p.input_field_variances();
    CovarianceDerivative {
        var_x: -g * (m.var_x - vx_in),
        var_y: -g * (m.var_y - vy_in),
        cov_xy: -g * m.cov_xy,
    }
}

/// Full oscillator moment vector field on `[X, Y, V_X, V_Y, C_XY]`.
pub fn oscillator_rhs(y: &[f64], p: &SqueezingParams, dy: &mut [f64]) {
    let m = OscillatorMoments::from_array(y);
    let mean = oscillator_mean_rhs(&m, p);
    let cov = oscillator_cov_rhs(&m, p);
    dy[0] = mean.x;
    dy[1] = mean.y;
    dy[2] = cov.var_x;
    dy[3] = cov.var_y;
    dy[4] = cov.cov_xy;
}

/// Collective spin mean equations evaluated on `state`.
pub fn collective_mean_rhs(
    state: &QuantumState,
    ops: &CollectiveOps,
    p: &SqueezingParams,
) -> Result<MeanDerivative> {
    let (n, s, g) = (p.n(), p.m(), p.gamma_p());
    let sm_sz = &ops.sm * &ops.sz;
    let sz_sp = &ops.sz * &ops.sp;
    let plus = expectation(&(&sm_sz + &sz_sp), state)?;
    let minus = expectation(&(&sm_sz - &sz_sp), state)?;
    let lowering_raising = expectation(&(&ops.sm * &ops.sp), state)?.re;
    let sx = expectation(&ops.sx, state)?.re;
    let sy = expectation(&ops.sy, state)?.re;
    let sz = expectation(&ops.sz, state)?.re;
    Ok(MeanDerivative {
        x: 0.5 * g * plus.re - g * (n + s + 1.0) * sx,
        y: (C64::i() * minus).re * 0.5 * g - g * (n - s + 1.0) * sy,
        z: -2.0 * g * lowering_raising - 2.0 * g * (n + 1.0) * sz,
    })
}

/// Collective spin covariance equations evaluated on `state`.
pub fn collective_cov_rhs(
    state: &QuantumState,
    ops: &CollectiveOps,
    p: &SqueezingParams,
) -> Result<CovarianceDerivative> {
    let (n, g) = (p.n(), p.gamma_p());
    let (vx_in, vy_in) = p.input_field_variances();
    let (sx, sy, sz) = (&ops.sx, &ops.sy, &ops.sz);
    let sz_mean = expectation(sz, state)?.re;
    let sz_sq = expectation(&(sz * sz), state)?.re;
    let var_x = sym_covariance(sx, sx, state)?;
    let var_y = sym_covariance(sy, sy, state)?;
    let cov_xy = sym_covariance(sx, sy, state)?;
    let c_xxz = third_moment(sx, sx, sz, state)?;
    let c_yyz = third_moment(sy, sy, sz, state)?;
    let c_xyz = third_moment(sx, sy, sz, state)?;
    let c_yxz = third_moment(sy, sx, sz, state)?;
    Ok(CovarianceDerivative {
        var_x: -g * (vx_in * (var_x - sz_sq) + sz_mean - c_xxz),
        var_y: -g * (vy_in * (var_y - sz_sq) + sz_mean - c_yyz),
        cov_xy: -g * ((2.0 * n + 1.0) * cov_xy - 0.5 * (c_xyz + c_yxz)),
    })
}

/// Decay rates of `<Sx>` and `<Sy>` on a spin coherent state at polar
/// angle `theta`, for `n >= 1` spins.
pub fn decay_rates(n: usize, theta: f64, p: &SqueezingParams) -> DecayRates {
    let (bn, s, g) = (p.n(), p.m(), p.gamma_p());
    let collective = 0.5 * (n as f64 - 1.0) * theta.cos();
    DecayRates {
        x: g * (bn + s + 0.5 - collective),
        y: g * (bn - s + 0.5 - collective),
    }
}

/// Splits [`decay_rates`] into the reservoir-fluctuation damping
/// `gamma_p (N +- M + 1)` and the self-reaction remainder.
pub fn rate_decomposition(
    n: usize,
    theta: f64,
    p: &SqueezingParams,
    component: Component,
) -> RateDecomposition {
    let rates = decay_rates(n, theta, p);
    let (total, ff_part) = match component {
        Component::X => (rates.x, p.gamma_p() * (p.n() + p.m() + 1.0)),
        Component::Y => (rates.y, p.gamma_p() * (p.n() - p.m() + 1.0)),
    };
    RateDecomposition {
        total,
        ff_part,
        sr_part: total - ff_part,
    }
}

/// The oscillator quadratures are damped by self-reaction alone.
pub fn oscillator_rate_decomposition(p: &SqueezingParams) -> RateDecomposition {
    let sr_part = 0.5 * p.gamma_p();
    RateDecomposition {
        total: sr_part,
        ff_part: 0.0,
        sr_part,
    }
}

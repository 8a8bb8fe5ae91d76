//! Explicit Runge-Kutta integration over flat `f64` state arrays.
//!
//! Two methods are provided: classical fixed-step RK4 and the adaptive
//! Dormand-Prince 5(4) pair with FSAL. Complex-valued systems are integrated
//! as interleaved `(re, im)` arrays. Records are taken at accepted steps; when
//! a record interval is set, steps are shortened to land on the record times
//! exactly, so no dense-output interpolation is involved.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    FixedRk4 {
        dt: f64,
    },
    AdaptiveRk45 {
        rtol: f64,
        atol: f64,
        dt_min: f64,
        dt_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Time between records; `None` records every accepted step.
    pub record_every: Option<f64>,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64) -> Self {
        Self {
            method: Method::FixedRk4 { dt },
            record_every: None,
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        Self {
            method: Method::AdaptiveRk45 {
                rtol,
                atol,
                dt_min: 1e-14,
                dt_max: f64::INFINITY,
            },
            record_every: None,
        }
    }

    pub fn with_record_every(mut self, interval: f64) -> Self {
        self.record_every = Some(interval);
        self
    }

    pub fn with_step_bounds(mut self, min: f64, max: f64) -> Self {
        if let Method::AdaptiveRk45 { dt_min, dt_max, .. } = &mut self.method {
            *dt_min = min;
            *dt_max = max;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::FixedRk4 { dt } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::param("dt", format!("{dt} must be > 0")));
                }
            }
            Method::AdaptiveRk45 {
                rtol,
                atol,
                dt_min,
                dt_max,
            } => {
                if !(rtol > 0.0 && rtol.is_finite()) {
                    return Err(Error::param("rtol", format!("{rtol} must be > 0")));
                }
                if !(atol > 0.0 && atol.is_finite()) {
                    return Err(Error::param("atol", format!("{atol} must be > 0")));
                }
                if !(dt_min > 0.0 && dt_min <= dt_max) {
                    return Err(Error::param(
                        "dt_min",
                        format!("need 0 < dt_min <= dt_max, got {dt_min}, {dt_max}"),
                    ));
                }
            }
        }
        if let Some(r) = self.record_every {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::param("record_every", format!("{r} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest normalized local error estimate among accepted steps
    /// (always `<= 1` for adaptive runs, zero for fixed-step runs).
    pub max_error_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
}

impl Solution {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("solution always holds the initial state")
    }
}

/// Integrate `dy/dt = rhs(t, y)` over `t_span = (t0, t1)` with `t1 > t0`.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_observed(rhs, y0, t_span, cfg, |_, _| {})
}

/// Like [`integrate`], calling `observer` after every accepted step.
pub fn integrate_observed<F, O>(
    mut rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    let (t0, t1) = t_span;
    if t1.partial_cmp(&t0) != Some(core::cmp::Ordering::Greater) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::param(
            "t_span",
            format!("need t0 < t1, got ({t0}, {t1})"),
        ));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("y0", "initial state must be finite"));
    }
    let mut stepper = match cfg.method {
        Method::FixedRk4 { .. } => Stepper::Rk4(Rk4::new(y0.len())),
        Method::AdaptiveRk45 { .. } => Stepper::Dopri(Dopri5::new(y0.len())),
    };
    let mut out = Solution {
        times: vec![t0],
        states: vec![y0.to_vec()],
        stats: IntegratorStats::default(),
    };
    observer(t0, y0);

    let span = t1 - t0;
    let landing_slack = 1e-12 * span.max(t1.abs());
    let mut next_record = cfg.record_every.map(|r| t0 + r);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; y0.len()];

    let mut h = match cfg.method {
        Method::FixedRk4 { dt } => dt,
        Method::AdaptiveRk45 {
            rtol, atol, dt_max, ..
        } => {
            let mut dopri_init = Dopri5::new(y0.len());
            let h = dopri_init.initial_step(&mut rhs, t0, y0, rtol, atol, &mut out.stats);
            check_finite(&dopri_init.k[0], t0, &out.stats)?;
            h.min(dt_max).min(span)
        }
    };

    while t1 - t > landing_slack {
        let target = match next_record {
            Some(r) if r < t1 - landing_slack => r,
            _ => t1,
        };
        let remaining = target - t;
        let (step, lands) = if h >= remaining - landing_slack {
            (remaining, true)
        } else {
            (h, false)
        };

        match (&mut stepper, cfg.method) {
            (Stepper::Rk4(rk), _) => {
                rk.step(&mut rhs, t, &y, step, &mut y_new, &mut out.stats);
                check_finite(&y_new, t, &out.stats)?;
            }
            (
                Stepper::Dopri(dp),
                Method::AdaptiveRk45 {
                    rtol,
                    atol,
                    dt_min,
                    dt_max,
                },
            ) => {
                let err = dp.step(
                    &mut rhs,
                    t,
                    &y,
                    step,
                    &mut y_new,
                    rtol,
                    atol,
                    &mut out.stats,
                );
                if !err.is_finite() {
                    return Err(Error::NonFiniteDerivative {
                        t,
                        stats: out.stats,
                    });
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err > 1.0 {
                    out.stats.rejected += 1;
                    dp.fsal_valid = true;
                    h = step * factor.min(1.0);
                    if h < dt_min {
                        return Err(Error::StepUnderflow {
                            t,
                            step: h,
                            stats: out.stats,
                        });
                    }
                    continue;
                }
                out.stats.max_error_norm = out.stats.max_error_norm.max(err);
                dp.k.swap(0, 6);
                let proposed = (step * factor).min(dt_max);
                // a step shortened only to land on a record keeps the old size
                h = if lands { h.max(proposed) } else { proposed };
                h = h.min(dt_max);
            }
            _ => unreachable!(),
        }

        out.stats.accepted += 1;
        t = if lands { target } else { t + step };
        core::mem::swap(&mut y, &mut y_new);
        observer(t, &y);

        let record = match next_record {
            None => true,
            Some(r) if lands && target == r => {
                next_record = cfg.record_every.map(|every| r + every);
                true
            }
            _ => t1 - t <= landing_slack,
        };
        if record {
            out.times.push(t);
            out.states.push(y.clone());
        }
    }
    if *out.times.last().unwrap() != t {
        out.times.push(t);
        out.states.push(y);
    }
    Ok(out)
}

fn check_finite(v: &[f64], t: f64, stats: &IntegratorStats) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteDerivative { t, stats: *stats });
    }
    Ok(())
}

enum Stepper {
    Rk4(Rk4),
    Dopri(Dopri5),
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn step<F>(
        &mut self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        out: &mut [f64],
        stats: &mut IntegratorStats,
    ) where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let [k1, k2, k3, k4] = &mut self.k;
        rhs(t, y, k1);
        axpy_into(&mut self.tmp, y, 0.5 * h, k1);
        rhs(t + 0.5 * h, &self.tmp, k2);
        axpy_into(&mut self.tmp, y, 0.5 * h, k2);
        rhs(t + 0.5 * h, &self.tmp, k3);
        axpy_into(&mut self.tmp, y, h, k3);
        rhs(t + h, &self.tmp, k4);
        stats.rhs_evals += 4;
        for i in 0..y.len() {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], a: f64, k: &[f64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dopri5 {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    fsal_valid: bool,
}

impl Dopri5 {
    fn new(n: usize) -> Self {
        Self {
            k: core::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            fsal_valid: false,
        }
    }

    fn initial_step<F>(
        &mut self,
        rhs: &mut F,
        t0: f64,
        y0: &[f64],
        rtol: f64,
        atol: f64,
        stats: &mut IntegratorStats,
    ) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        rhs(t0, y0, &mut self.k[0]);
        stats.rhs_evals += 1;
        let sc = |i: usize| atol + rtol * y0[i].abs();
        let rms = |v: &dyn Fn(usize) -> f64| {
            let n = y0.len().max(1) as f64;
            ((0..y0.len()).map(|i| v(i) * v(i)).sum::<f64>() / n).sqrt()
        };
        let f0 = &self.k[0];
        let d0 = rms(&|i| y0[i] / sc(i));
        let d1 = rms(&|i| f0[i] / sc(i));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        axpy_into(&mut self.tmp, y0, h0, &self.k[0]);
        let (head, tail) = self.k.split_at_mut(1);
        rhs(t0 + h0, &self.tmp, &mut tail[0]);
        stats.rhs_evals += 1;
        let d2 = rms(&|i| (tail[0][i] - head[0][i]) / sc(i)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// One trial step; returns the normalized error estimate.
    #[allow(clippy::too_many_arguments)]
    fn step<F>(
        &mut self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        out: &mut [f64],
        rtol: f64,
        atol: f64,
        stats: &mut IntegratorStats,
    ) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        if !self.fsal_valid {
            rhs(t, y, &mut self.k[0]);
            stats.rhs_evals += 1;
            self.fsal_valid = true;
        }
        for s in 1..7 {
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &self.tmp, &mut self.k[s]);
            stats.rhs_evals += 1;
        }
        // stage 7 is evaluated at the 5th order solution
        out.copy_from_slice(&self.tmp);
        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, w) in E.iter().enumerate() {
                e += w * self.k[s][i];
            }
            let scale = atol + rtol * y[i].abs().max(out[i].abs());
            let r = h * e / scale;
            sum += r * r;
        }
        (sum / n.max(1) as f64).sqrt()
    }
}

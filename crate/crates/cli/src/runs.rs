//! Single trajectories and steady states.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use squeezelax_core::lindblad::{oscillator_oracle, steady_state};
use squeezelax_core::spin::{min_eigenvalue, trace_product};
use squeezelax_core::{
    evolve, spin_coherent_state, BlochAngles, CollectiveOps, DickeSpace, Liouvillian, QuantumState,
    SpinMoments, SqueezingParams,
};

use crate::config::{squeezing, SqueezingM};
use crate::dataset::FigureDataset;
use crate::error::AppResult;
use crate::figures::oracle_config;
use crate::pool::par_map;

/// Least-squares slope of `ln|y|` against `t`, negated.
pub fn fitted_rate(t: &[f64], y: &[f64]) -> f64 {
    let logs: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(&logs).map(|(a, b)| (a - tm) * (b - lm)).sum();
    let den: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    -num / den
}

pub const SINGLE_SPIN_COLUMNS: &[&str] = &[
    "t", "mean_x", "mean_y", "mean_z", "var_x", "var_y", "cov_xy", "closed_x", "closed_y",
    "closed_z",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SingleSpin {
    pub params: SqueezingParams,
    pub theta: f64,
    pub phi: f64,
    pub t_final: f64,
    pub dt: f64,
    pub rtol: f64,
}

impl Default for SingleSpin {
    fn default() -> Self {
        Self {
            params: squeezing(0.5, SqueezingM::Minimal).expect("valid defaults"),
            theta: 0.5,
            phi: 0.25 * PI,
            t_final: 3.0,
            dt: 0.05,
            rtol: 1e-12,
        }
    }
}

impl SingleSpin {
    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = &self.params;
        let space = DickeSpace::new(1)?;
        let ops = CollectiveOps::new(space);
        let l = Liouvillian::collective(&ops, *p);
        let state = spin_coherent_state(space, BlochAngles::new(self.theta * PI, self.phi)?);
        let traj = evolve(
            &l,
            &state.density_matrix(),
            self.t_final,
            &oracle_config(self.rtol).with_record_every(self.dt),
        )?;
        let moments = traj.spin_moments(&ops)?;
        let m0 = moments[0];

        // Gardiner's equations are linear; their solution is closed-form
        let g = p.gamma_p();
        let (gx, gy, gz) = (
            g * (p.n() + p.m() + 0.5),
            g * (p.n() - p.m() + 0.5),
            g * (2.0 * p.n() + 1.0),
        );
        let z_ss = -1.0 / (2.0 * p.n() + 1.0);

        let mut ds = FigureDataset::new("single-spin", SINGLE_SPIN_COLUMNS);
        ds.meta("squeezing_n", p.n())
            .meta("squeezing_m", p.m())
            .meta("theta_over_pi", self.theta)
            .meta("phi", self.phi)
            .meta("version", env!("CARGO_PKG_VERSION"));
        for (t, m) in traj.times.iter().zip(&moments) {
            ds.push(vec![
                *t,
                m.mean_x,
                m.mean_y,
                m.mean_z,
                m.var_x,
                m.var_y,
                m.cov_xy,
                m0.mean_x * (-gx * t).exp(),
                m0.mean_y * (-gy * t).exp(),
                z_ss + (m0.mean_z - z_ss) * (-gz * t).exp(),
            ]);
        }
        let mx: Vec<f64> = moments.iter().map(|m| m.mean_x).collect();
        let my: Vec<f64> = moments.iter().map(|m| m.mean_y).collect();
        if m0.mean_x.abs() > 1e-12 {
            ds.meta("fitted_gamma_x", fitted_rate(&traj.times, &mx));
        }
        if m0.mean_y.abs() > 1e-12 {
            ds.meta("fitted_gamma_y", fitted_rate(&traj.times, &my));
        }
        ds.meta("gamma_x", gx).meta("gamma_y", gy);
        let d = traj.diagnostics;
        ds.meta("max_trace_drift", d.max_trace_drift)
            .meta("min_eigenvalue", d.min_eigenvalue);
        Ok(ds)
    }
}

pub const OSCILLATOR_COLUMNS: &[&str] = &[
    "t",
    "mean_x",
    "mean_y",
    "var_x",
    "var_y",
    "cov_xy",
    "closed_mean_x",
    "closed_mean_y",
    "closed_var_x",
    "closed_var_y",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator {
    pub params: SqueezingParams,
    pub cutoff: Option<usize>,
    pub x0: f64,
    pub y0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub rtol: f64,
}

impl Default for Oscillator {
    fn default() -> Self {
        Self {
            params: squeezing(1.0, SqueezingM::Minimal).expect("valid defaults"),
            cutoff: None,
            x0: 1.0,
            y0: 0.0,
            t_final: 20.0,
            dt: 0.5,
            rtol: 1e-10,
        }
    }
}

impl Oscillator {
    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = &self.params;
        let g = p.gamma_p();
        // <X> = 2 Re alpha, <Y> = 2 Im alpha
        let alpha = C64::new(0.5 * self.x0, 0.5 * self.y0);
        let cfg = oracle_config(self.rtol).with_record_every(self.dt);
        let run = oscillator_oracle(self.cutoff, p, alpha, self.t_final, &cfg)?;
        let (vx_in, vy_in) = p.input_field_variances();
        let mut ds = FigureDataset::new("oscillator", OSCILLATOR_COLUMNS);
        ds.meta("squeezing_n", p.n())
            .meta("squeezing_m", p.m())
            .meta("cutoff", run.cutoff)
            .meta("max_top_population", run.max_top_population)
            .meta("version", env!("CARGO_PKG_VERSION"));
        for (t, m) in run.trajectory.times.iter().zip(run.moments()) {
            let decay = (-0.5 * g * t).exp();
            let relax = (-g * t).exp();
            ds.push(vec![
                *t,
                m.mean_x,
                m.mean_y,
                m.var_x,
                m.var_y,
                m.cov_xy,
                self.x0 * decay,
                self.y0 * decay,
                vx_in + (1.0 - vx_in) * relax,
                vy_in + (1.0 - vy_in) * relax,
            ]);
        }
        Ok(ds)
    }
}

pub const STEADY_STATE_COLUMNS: &[&str] = &[
    "n",
    "purity",
    "mean_z",
    "var_x",
    "var_y",
    "cov_xy",
    "target_var_x",
    "target_var_y",
    "rel_dev_x",
    "rel_dev_y",
    "min_eigenvalue",
    "residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub spins: Vec<usize>,
    pub params: SqueezingParams,
    pub jobs: usize,
}

impl Default for SteadyState {
    fn default() -> Self {
        Self {
            spins: vec![1, 2, 10, 20, 40],
            params: squeezing(0.05, SqueezingM::Minimal).expect("valid defaults"),
            jobs: 0,
        }
    }
}

impl SteadyState {
    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = self.params;
        let (vx_in, vy_in) = p.input_field_variances();
        let rows = par_map(self.jobs, &self.spins, |&n| {
            let ops = CollectiveOps::new(DickeSpace::new(n)?);
            let l = Liouvillian::collective(&ops, p);
            let rho = steady_state(&l)?;
            let residual = l.apply(&rho)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let m = SpinMoments::of_state(&QuantumState::Mixed(rho.clone()), &ops)?;
            let nf = n as f64;
            let (tx, ty) = (nf * vx_in, nf * vy_in);
            Ok(vec![
                nf,
                trace_product(&rho, &rho).re,
                m.mean_z,
                m.var_x,
                m.var_y,
                m.cov_xy,
                tx,
                ty,
                (m.var_x - tx) / tx,
                (m.var_y - ty) / ty,
                min_eigenvalue(&rho),
                residual,
            ])
        })?;
        let mut ds = FigureDataset::new("steady-state", STEADY_STATE_COLUMNS);
        ds.meta("squeezing_n", p.n())
            .meta("squeezing_m", p.m())
            .meta("version", env!("CARGO_PKG_VERSION"));
        for r in rows {
            ds.push(r);
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_rate_exact_exponential() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert!((fitted_rate(&t, &y) - 0.7).abs() < 1e-13);
    }

    #[test]
    fn single_spin_tracks_closed_form() {
        let ds = SingleSpin::default().run().unwrap();
        for r in &ds.rows {
            for k in 0..3 {
                assert!((r[1 + k] - r[7 + k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oscillator_tracks_closed_form() {
        let ds = Oscillator {
            t_final: 4.0,
            ..Oscillator::default()
        }
        .run()
        .unwrap();
        for r in &ds.rows {
            assert!(
                (r[1] - r[6]).abs() < 1e-6
                    && (r[3] - r[8]).abs() < 1e-6
                    && (r[4] - r[9]).abs() < 1e-6
            );
        }
    }

    #[test]
    fn steady_state_pair_is_pure() {
        let ds = SteadyState {
            spins: vec![2],
            params: squeezing(0.5, SqueezingM::Minimal).unwrap(),
            jobs: 1,
        }
        .run()
        .unwrap();
        assert!(ds.rows[0][1] > 1.0 - 1e-6);
        assert!(ds.rows[0][11] < 1e-10);
    }
}

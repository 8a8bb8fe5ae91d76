//! Datasets behind the decay-map, error-ellipse, rate and variance figures.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use squeezelax_core::moments::{
    collective_cov_rhs, decay_rates, oscillator_mean_rhs, oscillator_rhs,
};
use squeezelax_core::{
    evolve, integrate, spin_coherent_state, BlochAngles, CollectiveOps, DickeSpace,
    IntegratorConfig, Liouvillian, OscillatorMoments, SpinMoments, SqueezingParams,
};

use crate::config::{squeezing, SqueezingM};
use crate::dataset::FigureDataset;
use crate::error::{AppError, AppResult};
use crate::pool::par_map;

/// Absolute tolerance paired with a relative one for oracle runs.
pub fn oracle_config(rtol: f64) -> IntegratorConfig {
    IntegratorConfig::rk45(rtol, rtol * 1e-3)
}

fn angles(theta_over_pi: f64, phi: f64) -> AppResult<BlochAngles> {
    Ok(BlochAngles::new(theta_over_pi * PI, phi)?)
}

fn phi_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 2.0 * PI * k as f64 / count as f64)
        .collect()
}

fn n_max(spins: &[usize]) -> usize {
    spins.iter().copied().max().unwrap_or(1)
}

fn params_meta(ds: &mut FigureDataset, p: &SqueezingParams) {
    ds.meta("squeezing_n", p.n())
        .meta("squeezing_m", p.m())
        .meta("gamma_p", p.gamma_p())
        .meta("version", env!("CARGO_PKG_VERSION"));
}

/// Principal axes of a 2x2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub major: f64,
    pub minor: f64,
    /// Orientation of the major axis, in `(-pi/2, pi/2]`.
    pub angle: f64,
}

pub fn ellipse(var_x: f64, var_y: f64, cov_xy: f64) -> Ellipse {
    let mid = 0.5 * (var_x + var_y);
    let half = (0.25 * (var_x - var_y).powi(2) + cov_xy * cov_xy).sqrt();
    Ellipse {
        major: (mid + half).max(0.0).sqrt(),
        minor: (mid - half).max(0.0).sqrt(),
        angle: 0.5 * (2.0 * cov_xy).atan2(var_x - var_y),
    }
}

// ---------------------------------------------------------------- fig3a

pub const FIG3A_COLUMNS: &[&str] = &[
    "panel",
    "kind",
    "n",
    "theta_over_pi",
    "phi",
    "t",
    "mean_x",
    "mean_y",
    "dmean_x",
    "dmean_y",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3a {
    pub spins: Vec<usize>,
    pub params: SqueezingParams,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub guide_theta: Vec<f64>,
    pub guide_phi: f64,
    pub t_final: f64,
    pub dt: f64,
    pub rtol: f64,
    pub jobs: usize,
}

impl Default for Fig3a {
    fn default() -> Self {
        Self {
            spins: vec![1, 5, 15],
            params: squeezing(0.5, SqueezingM::Minimal).expect("valid defaults"),
            theta: vec![0.55, 0.65, 0.75, 0.85, 0.95],
            phi: phi_grid(16),
            guide_theta: vec![0.55, 0.75, 0.87],
            guide_phi: 0.75 * PI,
            t_final: 2.0,
            dt: 0.05,
            rtol: 1e-10,
            jobs: 0,
        }
    }
}

impl Fig3a {
    pub fn run(&self) -> AppResult<FigureDataset> {
        if self.theta.is_empty() || self.phi.is_empty() {
            return Err(AppError::config(
                "fig3a needs a non-empty theta and phi grid",
            ));
        }
        if let Some(bad) = self.theta.iter().find(|t| !(**t > 0.5 && **t <= 1.0)) {
            return Err(AppError::config(format!(
                "fig3a grid covers the lower hemisphere, theta/pi in (0.5, 1], got {bad}"
            )));
        }
        let p = &self.params;
        let mut ds = FigureDataset::new("fig3a", FIG3A_COLUMNS);
        params_meta(&mut ds, p);
        ds.meta("panel", "0 spin, 1 oscillator")
            .meta(
                "kind",
                "0 decay arrow, 1 guide trajectory (illustrative initial states)",
            )
            .meta("oscillator_radius", "sqrt(n_max) sin(theta)");

        for &n in &self.spins {
            for &th in &self.theta {
                for &phi in &self.phi {
                    let r = n as f64 * (th * PI).sin();
                    let (mx, my) = (r * phi.cos(), r * phi.sin());
                    let g = decay_rates(n, th * PI, p);
                    ds.push(vec![
                        0.0,
                        0.0,
                        n as f64,
                        th,
                        phi,
                        0.0,
                        mx,
                        my,
                        -g.x * mx,
                        -g.y * my,
                    ]);
                }
            }
        }

        let big = n_max(&self.spins) as f64;
        for &th in &self.theta {
            for &phi in &self.phi {
                let r = big.sqrt() * (th * PI).sin();
                let m = OscillatorMoments::coherent(r * phi.cos(), r * phi.sin());
                let d = oscillator_mean_rhs(&m, p);
                ds.push(vec![
                    1.0, 0.0, 0.0, th, phi, 0.0, m.mean_x, m.mean_y, d.x, d.y,
                ]);
            }
        }

        let jobs: Vec<(usize, f64)> = self
            .spins
            .iter()
            .flat_map(|&n| self.guide_theta.iter().map(move |&t| (n, t)))
            .collect();
        let cfg = oracle_config(self.rtol).with_record_every(self.dt);
        let guides = par_map(self.jobs, &jobs, |&(n, th)| {
            let space = DickeSpace::new(n)?;
            let ops = CollectiveOps::new(space);
            let l = Liouvillian::collective(&ops, *p);
            let rho0 = spin_coherent_state(space, angles(th, self.guide_phi)?).density_matrix();
            let traj = evolve(&l, &rho0, self.t_final, &cfg)?;
            let mut rows = Vec::with_capacity(traj.times.len());
            for (t, rho) in traj.times.iter().zip(&traj.states) {
                let d = l.mean_derivative(&ops, rho)?;
                let mx = squeezelax_core::spin::trace_product(&ops.sx, rho).re;
                let my = squeezelax_core::spin::trace_product(&ops.sy, rho).re;
                rows.push(vec![
                    0.0,
                    1.0,
                    n as f64,
                    th,
                    self.guide_phi,
                    *t,
                    mx,
                    my,
                    d.x,
                    d.y,
                ]);
            }
            Ok(rows)
        })?;
        for row in guides.into_iter().flatten() {
            ds.push(row);
        }
        Ok(ds)
    }
}

// ---------------------------------------------------------------- fig3b

pub const FIG3B_COLUMNS: &[&str] = &[
    "panel",
    "n",
    "theta_over_pi",
    "phi",
    "scale",
    "stage",
    "t",
    "mean_x",
    "mean_y",
    "var_x",
    "var_y",
    "cov_xy",
    "axis_major",
    "axis_minor",
    "angle",
    "scaled_major",
    "scaled_minor",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3b {
    pub spins: Vec<usize>,
    pub params: SqueezingParams,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub scales: BTreeMap<usize, f64>,
    /// Overrides the spin evolution time `0.008 n`.
    pub t_final: Option<f64>,
    pub oscillator_time: f64,
    pub rtol: f64,
    pub jobs: usize,
}

impl Default for Fig3b {
    fn default() -> Self {
        Self {
            spins: vec![1, 5, 15],
            params: squeezing(5.0, SqueezingM::Minimal).expect("valid defaults"),
            theta: vec![0.55, 0.75, 0.87],
            phi: phi_grid(8),
            scales: BTreeMap::from([(1, 0.12), (5, 0.25), (15, 0.4)]),
            t_final: None,
            oscillator_time: 0.1,
            rtol: 1e-10,
            jobs: 0,
        }
    }
}

impl Fig3b {
    pub fn scale(&self, n: usize) -> f64 {
        self.scales.get(&n).copied().unwrap_or(1.0)
    }

    pub fn evolution_time(&self, n: usize) -> f64 {
        self.t_final
            .unwrap_or(0.008 * n as f64 / self.params.gamma_p())
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        panel: f64,
        n: usize,
        th: f64,
        phi: f64,
        scale: f64,
        stage: f64,
        t: f64,
        m: [f64; 5],
    ) -> Vec<f64> {
        let [mx, my, vx, vy, c] = m;
        let e = ellipse(vx, vy, c);
        vec![
            panel,
            n as f64,
            th,
            phi,
            scale,
            stage,
            t,
            mx,
            my,
            vx,
            vy,
            c,
            e.major,
            e.minor,
            e.angle,
            scale * e.major,
            scale * e.minor,
        ]
    }

    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = self.params;
        let mut ds = FigureDataset::new("fig3b", FIG3B_COLUMNS);
        params_meta(&mut ds, &p);
        ds.meta("panel", "0 spin, 1 oscillator")
            .meta("stage", "0 before, 1 after the short evolution")
            .meta("spin_evolution", "exact state through the master equation")
            .meta("oscillator_evolution", "closed quadrature moment equations");

        let items: Vec<(usize, f64, f64)> = self
            .spins
            .iter()
            .flat_map(|&n| {
                self.theta
                    .iter()
                    .flat_map(move |&t| self.phi.iter().map(move |&f| (n, t, f)))
            })
            .collect();
        let spin_rows = par_map(self.jobs, &items, |&(n, th, phi)| {
            let space = DickeSpace::new(n)?;
            let ops = CollectiveOps::new(space);
            let l = Liouvillian::collective(&ops, p);
            let state = spin_coherent_state(space, angles(th, phi)?);
            let dt = self.evolution_time(n);
            let traj = evolve(&l, &state.density_matrix(), dt, &oracle_config(self.rtol))?;
            let moments = traj.spin_moments(&ops)?;
            let pick = |m: &SpinMoments| [m.mean_x, m.mean_y, m.var_x, m.var_y, m.cov_xy];
            let s = self.scale(n);
            Ok([
                Self::row(0.0, n, th, phi, s, 0.0, 0.0, pick(&moments[0])),
                Self::row(
                    0.0,
                    n,
                    th,
                    phi,
                    s,
                    1.0,
                    dt,
                    pick(moments.last().expect("final state")),
                ),
            ])
        })?;
        for row in spin_rows.into_iter().flatten() {
            ds.push(row);
        }

        let big = n_max(&self.spins);
        let scale = self.scale(big);
        let cfg = IntegratorConfig::rk45(1e-12, 1e-14);
        for &th in &self.theta {
            for &phi in &self.phi {
                let r = (big as f64).sqrt() * (th * PI).sin();
                let m0 = OscillatorMoments::coherent(r * phi.cos(), r * phi.sin());
                let sol = integrate(
                    |_, y, dy| oscillator_rhs(y, &p, dy),
                    &m0.to_array(),
                    (0.0, self.oscillator_time),
                    &cfg,
                )?;
                let m1 = OscillatorMoments::from_array(sol.last());
                ds.push(Self::row(1.0, 0, th, phi, scale, 0.0, 0.0, m0.to_array()));
                ds.push(Self::row(
                    1.0,
                    0,
                    th,
                    phi,
                    scale,
                    1.0,
                    self.oscillator_time,
                    m1.to_array(),
                ));
            }
        }
        Ok(ds)
    }
}

// ---------------------------------------------------------------- fig4a

pub const FIG4A_COLUMNS: &[&str] = &[
    "n",
    "theta_over_pi",
    "gamma_x",
    "gamma_y",
    "collective_reference",
    "oscillator_reference",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4a {
    pub spins: Vec<usize>,
    pub params: SqueezingParams,
    pub theta: Vec<f64>,
}

impl Default for Fig4a {
    fn default() -> Self {
        Self {
            spins: (1..=50).collect(),
            params: squeezing(0.05, SqueezingM::Minimal).expect("valid defaults"),
            theta: vec![0.55, 0.75, 0.87, 0.99],
        }
    }
}

impl Fig4a {
    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = &self.params;
        let g = p.gamma_p();
        let mut ds = FigureDataset::new("fig4a", FIG4A_COLUMNS);
        params_meta(&mut ds, p);
        for &th in &self.theta {
            for &n in &self.spins {
                let r = decay_rates(n, th * PI, p);
                ds.push(vec![n as f64, th, r.x, r.y, 0.5 * n as f64 * g, 0.5 * g]);
            }
        }
        Ok(ds)
    }
}

// ---------------------------------------------------------------- fig4b

pub const FIG4B_COLUMNS: &[&str] = &[
    "n",
    "theta_over_pi",
    "phi",
    "dvar_x",
    "dvar_y",
    "oscillator_dvar_x",
    "oscillator_dvar_y",
    "hpa_dvar_x",
    "hpa_dvar_y",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4b {
    pub spins: Vec<usize>,
    pub params: SqueezingParams,
    pub theta: Vec<f64>,
    pub phi: f64,
    pub jobs: usize,
}

impl Default for Fig4b {
    fn default() -> Self {
        Self {
            spins: (1..=50).collect(),
            params: squeezing(0.05, SqueezingM::Minimal).expect("valid defaults"),
            theta: vec![0.55, 0.75, 0.87, 0.99],
            phi: 0.0,
            jobs: 0,
        }
    }
}

impl Fig4b {
    pub fn run(&self) -> AppResult<FigureDataset> {
        let p = self.params;
        let g = p.gamma_p();
        let (vx_in, vy_in) = p.input_field_variances();
        let mut ds = FigureDataset::new("fig4b", FIG4B_COLUMNS);
        params_meta(&mut ds, &p);
        ds.meta("oscillator_reference", "unit-variance oscillator")
            .meta(
                "hpa_reference",
                "pole-state spin variance n in the large-n limit",
            );
        let items: Vec<(f64, usize)> = self
            .theta
            .iter()
            .flat_map(|&t| self.spins.iter().map(move |&n| (t, n)))
            .collect();
        let rows = par_map(self.jobs, &items, |&(th, n)| {
            let space = DickeSpace::new(n)?;
            let ops = CollectiveOps::new(space);
            let state = spin_coherent_state(space, angles(th, self.phi)?);
            let d = collective_cov_rhs(&state, &ops, &p)?;
            let nf = n as f64;
            Ok(vec![
                nf,
                th,
                self.phi,
                d.var_x,
                d.var_y,
                -g * (1.0 - vx_in),
                -g * (1.0 - vy_in),
                nf * nf * g * (vx_in - 1.0),
                nf * nf * g * (vy_in - 1.0),
            ])
        })?;
        for row in rows {
            ds.push(row);
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_axes() {
        let e = ellipse(4.0, 1.0, 0.0);
        assert!((e.major - 2.0).abs() < 1e-15 && (e.minor - 1.0).abs() < 1e-15 && e.angle == 0.0);
        let e = ellipse(1.0, 4.0, 0.0);
        assert!((e.angle - PI / 2.0).abs() < 1e-15);
        let e = ellipse(2.0, 2.0, 1.0);
        assert!((e.major - 3f64.sqrt()).abs() < 1e-15 && (e.minor - 1.0).abs() < 1e-15);
        assert!((e.angle - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn fig4a_single_spin_values() {
        let ds = Fig4a {
            spins: vec![1],
            theta: vec![0.75],
            ..Fig4a::default()
        }
        .run()
        .unwrap();
        let row = &ds.rows[0];
        assert!((row[2] - 0.7791).abs() < 1e-4 && (row[3] - 0.3209).abs() < 1e-4);
    }

    #[test]
    fn fig4a_rate_gap_is_constant() {
        let ds = Fig4a::default().run().unwrap();
        let m = ds.rows.iter().map(|r| r[2] - r[3]);
        let two_m = 2.0 * Fig4a::default().params.m();
        assert!(m.into_iter().all(|d| (d - two_m).abs() < 1e-12));
    }

    #[test]
    fn fig4a_hpa_limit() {
        let ds = Fig4a {
            spins: vec![100],
            theta: vec![0.99],
            ..Fig4a::default()
        }
        .run()
        .unwrap();
        let r = &ds.rows[0];
        assert!((r[2] / r[4] - 1.0).abs() < 0.01 && (r[3] / r[4] - 1.0).abs() < 0.01);
    }

    #[test]
    fn fig3a_single_spin_anisotropy() {
        let cfg = Fig3a {
            spins: vec![1],
            guide_theta: vec![],
            ..Fig3a::default()
        };
        let ds = cfg.run().unwrap();
        let (n, m) = (cfg.params.n(), cfg.params.m());
        let expected = (n + m + 0.5) / (n - m + 0.5);
        for r in ds.filter("panel", 0.0) {
            let (mx, my, dx, dy) = (r[6], r[7], r[8], r[9]);
            if mx.abs() > 1e-6 && my.abs() > 1e-6 {
                assert!(((dx / mx) / (dy / my) - expected).abs() < 1e-12);
            }
            if r[4] == 0.0 {
                assert_eq!(dy, 0.0);
            }
        }
    }

    #[test]
    fn fig3a_rejects_upper_hemisphere() {
        let cfg = Fig3a {
            theta: vec![0.3],
            ..Fig3a::default()
        };
        assert!(matches!(cfg.run(), Err(AppError::Config(_))));
    }

    #[test]
    fn fig3a_oscillator_arrows_are_radial() {
        let ds = Fig3a {
            guide_theta: vec![],
            ..Fig3a::default()
        }
        .run()
        .unwrap();
        for r in ds.filter("panel", 1.0) {
            assert!((r[8] + 0.5 * r[6]).abs() < 1e-15 && (r[9] + 0.5 * r[7]).abs() < 1e-15);
        }
    }

    #[test]
    fn fig3b_pole_state_stays_centered() {
        let ds = Fig3b {
            spins: vec![1, 5],
            theta: vec![1.0],
            phi: vec![0.0, 1.0],
            ..Fig3b::default()
        }
        .run()
        .unwrap();
        for r in ds.filter("stage", 1.0) {
            assert!(r[7].abs() < 1e-9 && r[8].abs() < 1e-9);
        }
    }

    #[test]
    fn fig3b_oscillator_squeezes() {
        let cfg = Fig3b::default();
        let ds = cfg.run().unwrap();
        let vy_in = cfg.params.input_field_variances().1;
        for r in ds.filter("panel", 1.0) {
            if r[5] == 1.0 {
                let expected = vy_in + (1.0 - vy_in) * (-0.1f64).exp();
                assert!((r[10] - expected).abs() < 1e-10);
                assert!(r[10] < 1.0);
            }
        }
    }
}

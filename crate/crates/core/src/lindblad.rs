//! Squeezed-reservoir master equation on dense density matrices.
//!
//! For a system operator `d` (the collective `S-`, or a truncated bosonic
//! annihilation operator) the generator is
//!
//! ```text
//! L rho = gamma_p { (N+1) D[d+, d] + N D[d, d+] - M D[d+, d+] - M D[d, d] } rho
//! D[u, v] rho = v rho u - (u v rho + rho u v) / 2
//! ```
//!
//! with a real, phase-aligned `M`. This is the exact reference the closed-form
//! moment equations are checked against.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DVector, FullPivLU};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::moments::{CovarianceDerivative, MeanDerivative, OscillatorMoments, SpinMoments};
use crate::ode::{integrate_observed, IntegratorConfig, IntegratorStats};
use crate::params::SqueezingParams;
use crate::spin::{min_eigenvalue, trace_product, CMatrix, CVector, CollectiveOps, QuantumState};

/// Largest Hilbert dimension handled by the explicit null-space solver.
pub const NULL_SPACE_MAX_DIM: usize = 64;
/// Largest Fock cutoff the oscillator oracle will grow to.
pub const MAX_CUTOFF: usize = 512;
/// Population allowed in the highest retained Fock level.
pub const TOP_POPULATION_LIMIT: f64 = 1e-8;

const PIVOT_RATIO: f64 = 1e-12;

/// `D[u, v] rho = v rho u - (u v rho + rho u v) / 2`.
pub fn dissipator(u: &CMatrix, v: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    let d = rho.nrows();
    for m in [u, v, rho] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
    }
    let uv = u * v;
    Ok(v * rho * u - (&uv * rho + rho * &uv) * C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    entries.push((i, j, z));
                }
            }
        }
        Self { entries }
    }

    /// `out += coef * self * rho`
    fn left_acc(&self, coef: C64, rho: &CMatrix, out: &mut CMatrix) {
        let d = rho.ncols();
        for &(i, k, a) in &self.entries {
            let w = coef * a;
            for j in 0..d {
                out[(i, j)] += w * rho[(k, j)];
            }
        }
    }

    /// `out += coef * rho * self`
    fn right_acc(&self, coef: C64, rho: &CMatrix, out: &mut CMatrix) {
        let d = rho.nrows();
        for &(l, j, b) in &self.entries {
            let w = coef * b;
            for i in 0..d {
                out[(i, j)] += rho[(i, l)] * w;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Sandwich {
    coef: C64,
    left: SparseOp,
    right: SparseOp,
}

/// Master-equation generator for a fixed system operator and reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    d: CMatrix,
    params: SqueezingParams,
    jumps: Vec<Sandwich>,
    // gamma_p[(N+1) d+d + N dd+ - M d+d+ - M dd]; enters as -(K rho + rho K)/2
    anti: SparseOp,
}

impl Liouvillian {
    pub fn new(d: CMatrix, params: SqueezingParams) -> Result<Self> {
        if d.nrows() != d.ncols() || d.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: d.nrows(),
                rows: d.nrows(),
                cols: d.ncols(),
            });
        }
        let dd = d.adjoint();
        let g = params.gamma_p();
        let (n, m) = (params.n(), params.m());
        let re = |x: f64| C64::new(x, 0.0);
        let sparse = SparseOp::from_dense;
        let jumps = vec![
            Sandwich {
                coef: re(g * (n + 1.0)),
                left: sparse(&d),
                right: sparse(&dd),
            },
            Sandwich {
                coef: re(g * n),
                left: sparse(&dd),
                right: sparse(&d),
            },
            Sandwich {
                coef: re(-g * m),
                left: sparse(&dd),
                right: sparse(&dd),
            },
            Sandwich {
                coef: re(-g * m),
                left: sparse(&d),
                right: sparse(&d),
            },
        ];
        let k = (&dd * &d) * re(g * (n + 1.0)) + (&d * &dd) * re(g * n)
            - (&dd * &dd) * re(g * m)
            - (&d * &d) * re(g * m);
        Ok(Self {
            d,
            params,
            jumps,
            anti: SparseOp::from_dense(&k),
        })
    }

    /// Collective emission, `d = S-`.
    pub fn collective(ops: &CollectiveOps, params: SqueezingParams) -> Self {
        Self::new(ops.sm.clone(), params).expect("collective operators are square")
    }

    /// Oscillator limit, `d = a` truncated to `cutoff` Fock levels.
    pub fn oscillator(cutoff: usize, params: SqueezingParams) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::param("cutoff", format!("{cutoff} must be >= 2")));
        }
        Self::new(annihilation(cutoff), params)
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn system_operator(&self) -> &CMatrix {
        &self.d
    }

    pub fn params(&self) -> &SqueezingParams {
        &self.params
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let dim = self.dim();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                rows: rho.nrows(),
                cols: rho.ncols(),
            });
        }
        let mut out = CMatrix::zeros(dim, dim);
        let mut scratch = CMatrix::zeros(dim, dim);
        self.apply_into(rho, &mut out, &mut scratch);
        Ok(out)
    }

    /// Overwrites `out` with `L rho`; `scratch` must have the same shape.
    pub fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        let one = C64::new(1.0, 0.0);
        out.fill(C64::new(0.0, 0.0));
        for jump in &self.jumps {
            if jump.coef == C64::new(0.0, 0.0) {
                continue;
            }
            scratch.fill(C64::new(0.0, 0.0));
            jump.left.left_acc(one, rho, scratch);
            jump.right.right_acc(jump.coef, scratch, out);
        }
        let half = C64::new(-0.5, 0.0);
        self.anti.left_acc(half, rho, out);
        self.anti.right_acc(half, rho, out);
    }

    /// Non-zero superoperator entries `(row, col, value)` on column-major
    /// vectorized density matrices (`index = i + j * dim`). Entries may repeat.
    pub fn superoperator_entries(&self) -> Vec<(usize, usize, C64)> {
        let dim = self.dim();
        let idx = |i: usize, j: usize| i + j * dim;
        let mut out = Vec::new();
        for jump in &self.jumps {
            if jump.coef == C64::new(0.0, 0.0) {
                continue;
            }
            for &(i, k, a) in &jump.left.entries {
                for &(l, j, b) in &jump.right.entries {
                    out.push((idx(i, j), idx(k, l), jump.coef * a * b));
                }
            }
        }
        for &(i, k, v) in &self.anti.entries {
            let w = v * -0.5;
            for j in 0..dim {
                // -K rho / 2 and -rho K / 2
                out.push((idx(i, j), idx(k, j), w));
                out.push((idx(j, k), idx(j, i), w));
            }
        }
        out
    }

    /// Dense `dim^2 x dim^2` superoperator matrix.
    pub fn superoperator(&self) -> CMatrix {
        let n = self.dim() * self.dim();
        let mut s = CMatrix::zeros(n, n);
        for (r, c, v) in self.superoperator_entries() {
            s[(r, c)] += v;
        }
        s
    }

    /// `d<S_i>/dt = Tr(S_i L rho)` for the three spin components.
    pub fn mean_derivative(&self, ops: &CollectiveOps, rho: &CMatrix) -> Result<MeanDerivative> {
        let drho = self.apply(rho)?;
        Ok(MeanDerivative {
            x: trace_product(&ops.sx, &drho).re,
            y: trace_product(&ops.sy, &drho).re,
            z: trace_product(&ops.sz, &drho).re,
        })
    }

    /// Transverse covariance derivatives assembled by the product rule from
    /// `Tr(A L rho)` of first and symmetrized second moments.
    pub fn covariance_derivative(
        &self,
        ops: &CollectiveOps,
        rho: &CMatrix,
    ) -> Result<CovarianceDerivative> {
        let drho = self.apply(rho)?;
        let (sx, sy) = (&ops.sx, &ops.sy);
        let mx = trace_product(sx, rho).re;
        let my = trace_product(sy, rho).re;
        let dmx = trace_product(sx, &drho).re;
        let dmy = trace_product(sy, &drho).re;
        let xx = sx * sx;
        let yy = sy * sy;
        let xy = (sx * sy + sy * sx) * C64::new(0.5, 0.0);
        Ok(CovarianceDerivative {
            var_x: trace_product(&xx, &drho).re - 2.0 * mx * dmx,
            var_y: trace_product(&yy, &drho).re - 2.0 * my * dmy,
            cov_xy: trace_product(&xy, &drho).re - mx * dmy - my * dmx,
        })
    }
}

/// Integrator health collected along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryDiagnostics {
    pub stats: IntegratorStats,
    /// Largest `|Tr rho - 1|` over all accepted steps.
    pub max_trace_drift: f64,
    /// Largest `max|rho - rho+|` over all accepted steps.
    pub max_hermiticity_residue: f64,
    /// Smallest eigenvalue over the recorded states.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub fn state(&self, i: usize) -> QuantumState {
        QuantumState::Mixed(self.states[i].clone())
    }

    pub fn last(&self) -> &CMatrix {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn spin_moments(&self, ops: &CollectiveOps) -> Result<Vec<SpinMoments>> {
        self.states
            .iter()
            .map(|rho| SpinMoments::of_state(&QuantumState::Mixed(rho.clone()), ops))
            .collect()
    }
}

pub(crate) fn pack(rho: &CMatrix, y: &mut [f64]) {
    for (c, z) in rho.as_slice().iter().enumerate() {
        y[2 * c] = z.re;
        y[2 * c + 1] = z.im;
    }
}

pub(crate) fn unpack(y: &[f64], rho: &mut CMatrix) {
    for (c, z) in rho.as_mut_slice().iter_mut().enumerate() {
        *z = C64::new(y[2 * c], y[2 * c + 1]);
    }
}

fn flat_trace_and_herm(y: &[f64], dim: usize) -> (f64, f64) {
    let at = |i: usize, j: usize| {
        let c = i + j * dim;
        C64::new(y[2 * c], y[2 * c + 1])
    };
    let mut tr = C64::new(0.0, 0.0);
    let mut herm = 0.0_f64;
    for j in 0..dim {
        tr += at(j, j);
        for i in 0..=j {
            herm = herm.max((at(i, j) - at(j, i).conj()).norm());
        }
    }
    ((tr - C64::new(1.0, 0.0)).norm(), herm)
}

/// Integrate the master equation from `rho0` to `t_final`.
pub fn evolve(
    l: &Liouvillian,
    rho0: &CMatrix,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_inner(l, rho0, t_final, cfg, |_, _| {})
}

fn evolve_inner<O>(
    l: &Liouvillian,
    rho0: &CMatrix,
    t_final: f64,
    cfg: &IntegratorConfig,
    mut extra: O,
) -> Result<Trajectory>
where
    O: FnMut(usize, &[f64]),
{
    let dim = l.dim();
    QuantumState::mixed(rho0.clone())?;
    if rho0.nrows() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            rows: rho0.nrows(),
            cols: rho0.ncols(),
        });
    }
    let mut y0 = vec![0.0; 2 * dim * dim];
    pack(rho0, &mut y0);

    let mut rho = CMatrix::zeros(dim, dim);
    let mut out = CMatrix::zeros(dim, dim);
    let mut scratch = CMatrix::zeros(dim, dim);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        unpack(y, &mut rho);
        l.apply_into(&rho, &mut out, &mut scratch);
        pack(&out, dy);
    };
    let mut max_trace_drift = 0.0_f64;
    let mut max_herm = 0.0_f64;
    let observer = |_t: f64, y: &[f64]| {
        let (tr, herm) = flat_trace_and_herm(y, dim);
        max_trace_drift = max_trace_drift.max(tr);
        max_herm = max_herm.max(herm);
        extra(dim, y);
    };
    let sol = integrate_observed(rhs, &y0, (0.0, t_final), cfg, observer)?;

    let mut states = Vec::with_capacity(sol.states.len());
    let mut min_eig = f64::INFINITY;
    for y in &sol.states {
        let mut m = CMatrix::zeros(dim, dim);
        unpack(y, &mut m);
        min_eig = min_eig.min(min_eigenvalue(&m));
        states.push(m);
    }
    Ok(Trajectory {
        times: sol.times,
        states,
        diagnostics: TrajectoryDiagnostics {
            stats: sol.stats,
            max_trace_drift,
            max_hermiticity_residue: max_herm,
            min_eigenvalue: min_eig,
        },
    })
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn block_matrix(
    members: &[usize],
    local: &[usize],
    entries: &[(usize, usize, C64)],
    comp: &[usize],
    root: usize,
) -> CMatrix {
    let m = members.len();
    let mut b = CMatrix::zeros(m, m);
    for &(r, c, v) in entries {
        if comp[r] == root {
            b[(local[r], local[c])] += v;
        }
    }
    b
}

fn pivots_ok(lu: &FullPivLU<C64, nalgebra::Dyn, nalgebra::Dyn>) -> bool {
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows().min(u.ncols()))
        .map(|i| u[(i, i)].norm())
        .collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    let smallest = diag.iter().copied().fold(f64::INFINITY, f64::min);
    largest > 0.0 && smallest > PIVOT_RATIO * largest
}

/// Unique stationary state of `l`.
///
/// Up to [`NULL_SPACE_MAX_DIM`] the null vector of the superoperator is
/// computed directly. The superoperator decouples into blocks of coherences;
/// the block carrying the populations is solved with the trace constraint and
/// every other block must be non-singular, otherwise
/// [`Error::DegenerateSteadyState`] is returned. Larger systems fall back to
/// long-time integration.
pub fn steady_state(l: &Liouvillian) -> Result<CMatrix> {
    if l.dim() <= NULL_SPACE_MAX_DIM {
        steady_state_null_space(l)
    } else {
        steady_state_relaxation(l, &IntegratorConfig::rk45(1e-12, 1e-16))
    }
}

fn steady_state_null_space(l: &Liouvillian) -> Result<CMatrix> {
    let dim = l.dim();
    let size = dim * dim;
    let entries: Vec<_> = l
        .superoperator_entries()
        .into_iter()
        .filter(|e| e.2 != C64::new(0.0, 0.0))
        .collect();
    let mut sets = DisjointSet::new(size);
    for &(r, c, _) in &entries {
        sets.union(r, c);
    }
    let comp: Vec<usize> = (0..size).map(|i| sets.find(i)).collect();

    let mut roots: Vec<usize> = comp.clone();
    roots.sort_unstable();
    roots.dedup();
    let diag_roots = {
        let mut r: Vec<usize> = (0..dim).map(|k| comp[k + k * dim]).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    if diag_roots.len() > 1 {
        return Err(Error::DegenerateSteadyState {
            nullity: diag_roots.len(),
        });
    }
    let trace_root = diag_roots[0];

    let mut local = vec![usize::MAX; size];
    let mut rho = CMatrix::zeros(dim, dim);
    for &root in &roots {
        let members: Vec<usize> = (0..size).filter(|&i| comp[i] == root).collect();
        for (k, &g) in members.iter().enumerate() {
            local[g] = k;
        }
        let mut b = block_matrix(&members, &local, &entries, &comp, root);
        if root != trace_root {
            if !pivots_ok(&FullPivLU::new(b)) {
                return Err(Error::DegenerateSteadyState { nullity: 2 });
            }
            continue;
        }
        // the population rows are linearly dependent (trace preservation),
        // so one of them can carry the normalization instead
        let first_diag = local[0];
        let m = members.len();
        for c in 0..m {
            b[(first_diag, c)] = C64::new(0.0, 0.0);
        }
        for k in 0..dim {
            b[(first_diag, local[k + k * dim])] = C64::new(1.0, 0.0);
        }
        let lu = FullPivLU::new(b);
        if !pivots_ok(&lu) {
            return Err(Error::DegenerateSteadyState { nullity: 2 });
        }
        let mut rhs = DVector::from_element(m, C64::new(0.0, 0.0));
        rhs[first_diag] = C64::new(1.0, 0.0);
        let x = lu
            .solve(&rhs)
            .ok_or(Error::DegenerateSteadyState { nullity: 2 })?;
        for (k, &g) in members.iter().enumerate() {
            rho[(g % dim, g / dim)] = x[k];
        }
    }
    let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = herm.trace();
    Ok(herm / tr)
}

fn steady_state_relaxation(l: &Liouvillian, cfg: &IntegratorConfig) -> Result<CMatrix> {
    let dim = l.dim();
    let scale = l.params().gamma_p();
    let chunk = 10.0 / scale;
    let mut rho = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
    let mut t = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..1000 {
        let traj = evolve(l, &rho, chunk, cfg)?;
        rho = traj.last().clone();
        t += chunk;
        let drho = l.apply(&rho)?;
        residual = drho.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual < 1e-12 {
            let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
            let tr = herm.trace();
            return Ok(herm / tr);
        }
    }
    Err(Error::SteadyStateNotConverged { t, residual })
}

/// Truncated bosonic annihilation operator on `cutoff` Fock levels.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for k in 1..cutoff {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `(X, Y) = (a + a+, i(a+ - a))` on the truncated space.
pub fn quadratures(cutoff: usize) -> (CMatrix, CMatrix) {
    let a = annihilation(cutoff);
    let ad = a.adjoint();
    (&a + &ad, (&ad - &a) * C64::i())
}

/// Coherent state `|alpha>` truncated and renormalized.
pub fn coherent_fock_state(cutoff: usize, alpha: C64) -> QuantumState {
    let mut psi = CVector::zeros(cutoff);
    let mut amp = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..cutoff {
        if k > 0 {
            amp = amp * alpha / (k as f64).sqrt();
        }
        psi[k] = amp;
    }
    let norm = psi.norm();
    psi.unscale_mut(norm);
    QuantumState::Pure(psi)
}

pub fn oscillator_moments(rho: &CMatrix) -> OscillatorMoments {
    let (x, y) = quadratures(rho.nrows());
    let mx = trace_product(&x, rho).re;
    let my = trace_product(&y, rho).re;
    let xx = trace_product(&(&x * &x), rho).re;
    let yy = trace_product(&(&y * &y), rho).re;
    let xy = trace_product(&((&x * &y + &y * &x) * C64::new(0.5, 0.0)), rho).re;
    OscillatorMoments {
        mean_x: mx,
        mean_y: my,
        var_x: xx - mx * mx,
        var_y: yy - my * my,
        cov_xy: xy - mx * my,
    }
}

/// Default Fock cutoff: ten times the larger input-field variance.
pub fn default_cutoff(p: &SqueezingParams) -> usize {
    let (vx, _) = p.input_field_variances();
    ((10.0 * vx).ceil() as usize).max(8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorRun {
    pub cutoff: usize,
    pub trajectory: Trajectory,
    /// Largest population of the top Fock level over every accepted step.
    pub max_top_population: f64,
}

impl OscillatorRun {
    pub fn moments(&self) -> Vec<OscillatorMoments> {
        self.trajectory
            .states
            .iter()
            .map(oscillator_moments)
            .collect()
    }
}

/// Master equation with `d = a`, started from the coherent state `|alpha>`.
///
/// With `cutoff = None` the cutoff starts at [`default_cutoff`] and doubles
/// until the top level stays below [`TOP_POPULATION_LIMIT`]; an explicit
/// cutoff that fails the check is an error.
pub fn oscillator_oracle(
    cutoff: Option<usize>,
    p: &SqueezingParams,
    alpha: C64,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<OscillatorRun> {
    let mut levels = cutoff.unwrap_or_else(|| default_cutoff(p));
    loop {
        if levels > MAX_CUTOFF {
            return Err(Error::param(
                "cutoff",
                format!("{levels} exceeds {MAX_CUTOFF}"),
            ));
        }
        let l = Liouvillian::oscillator(levels, *p)?;
        let rho0 = coherent_fock_state(levels, alpha).density_matrix();
        let mut top = rho0[(levels - 1, levels - 1)].re;
        let trajectory = evolve_inner(&l, &rho0, t_final, cfg, |dim, y| {
            let c = (dim - 1) * (dim + 1);
            top = top.max(y[2 * c]);
        })?;
        if top < TOP_POPULATION_LIMIT {
            return Ok(OscillatorRun {
                cutoff: levels,
                trajectory,
                max_top_population: top,
            });
        }
        if cutoff.is_some() || 2 * levels > MAX_CUTOFF {
            return Err(Error::CutoffViolation {
                cutoff: levels,
                top_population: top,
            });
        }
        levels *= 2;
    }
}

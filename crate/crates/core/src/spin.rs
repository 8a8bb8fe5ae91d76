//! Collective spin operators on the symmetric Dicke subspace.
//!
//! Basis vectors are indexed by the number of excited spins `k = 0..=n`, so
//! `Sz |k> = (2k - n) |k>` and the lowering operator is strictly upper
//! bidiagonal. Spin components carry no factor 1/2: for a single spin they
//! are the Pauli matrices, and `[S-, S+] = -Sz`.

use alloc::format;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance used when validating user supplied states.
pub const STATE_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Permutation-symmetric subspace of `n` two-level systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DickeSpace {
    n: usize,
}

impl DickeSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidSpinCount(n));
        }
        Ok(Self { n })
    }

    pub fn spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `Sz` eigenvalue of the basis state with `k` excitations.
    pub fn sz_eigenvalue(&self, k: usize) -> f64 {
        2.0 * k as f64 - self.n as f64
    }
}

/// `<k-1| S- |k>` for `n` spins.
pub fn lowering_element(n: usize, k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= n);
    ((k * (n - k + 1)) as f64).sqrt()
}

/// Dense collective operators over a [`DickeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOps {
    pub space: DickeSpace,
    pub sm: CMatrix,
    pub sp: CMatrix,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl CollectiveOps {
    pub fn new(space: DickeSpace) -> Self {
        let n = space.spins();
        let dim = space.dim();
        let mut sm = CMatrix::zeros(dim, dim);
        for k in 1..=n {
            sm[(k - 1, k)] = C64::new(lowering_element(n, k), 0.0);
        }
        let sp = sm.adjoint();
        let sx = &sm + &sp;
        let sy = (&sm - &sp) * C64::i();
        let sz = CMatrix::from_diagonal(&CVector::from_fn(dim, |k, _| {
            C64::new(space.sz_eigenvalue(k), 0.0)
        }));
        Self {
            space,
            sm,
            sp,
            sx,
            sy,
            sz,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

pub fn build_collective_ops(space: DickeSpace) -> CollectiveOps {
    CollectiveOps::new(space)
}

/// Polar and azimuthal angles on the (collective) Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

impl BlochAngles {
    /// `theta` must lie in `[0, pi]`; `phi` is reduced into `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::param("theta", format!("{theta} not in [0, pi]")));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        let mut phi = num_traits::Euclid::rem_euclid(&phi, &(2.0 * PI));
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// A pure state vector or a density matrix over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QuantumState {
    /// Normalized state vector (checked to 1e-12).
    pub fn pure(psi: CVector) -> Result<Self> {
        let state = QuantumState::Pure(psi);
        state.validate()?;
        Ok(state)
    }

    /// Hermitian, unit-trace, positive semidefinite density matrix.
    pub fn mixed(rho: CMatrix) -> Result<Self> {
        let state = QuantumState::Mixed(rho);
        state.validate()?;
        Ok(state)
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut psi = CVector::zeros(dim);
        psi[k] = C64::new(1.0, 0.0);
        QuantumState::Pure(psi)
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(psi) => psi.len(),
            QuantumState::Mixed(rho) => rho.nrows(),
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match self {
            QuantumState::Pure(psi) => psi * psi.adjoint(),
            QuantumState::Mixed(rho) => rho.clone(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            QuantumState::Pure(_) => 1.0,
            QuantumState::Mixed(rho) => trace_product(rho, rho).re,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QuantumState::Pure(psi) => {
                let norm = psi.norm();
                if (norm - 1.0).abs() > STATE_TOLERANCE {
                    return Err(Error::InvalidState(format!("vector norm {norm}")));
                }
            }
            QuantumState::Mixed(rho) => {
                if rho.nrows() != rho.ncols() {
                    return Err(Error::ShapeMismatch {
                        expected: rho.nrows(),
                        rows: rho.nrows(),
                        cols: rho.ncols(),
                    });
                }
                let herm = hermiticity_residue(rho);
                if herm > STATE_TOLERANCE {
                    return Err(Error::InvalidState(format!("Hermiticity residue {herm:e}")));
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
                    return Err(Error::InvalidState(format!("trace {tr}")));
                }
                let lo = min_eigenvalue(rho);
                if lo < EIGENVALUE_FLOOR {
                    return Err(Error::InvalidState(format!("eigenvalue {lo:e}")));
                }
            }
        }
        Ok(())
    }
}

/// Max-norm of `rho - rho^dagger`.
pub fn hermiticity_residue(rho: &CMatrix) -> f64 {
    let d = rho.nrows();
    let mut worst = 0.0_f64;
    for j in 0..d {
        for i in 0..=j {
            worst = worst.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Spin coherent state `|theta, phi>`: every spin in
/// `cos(theta/2)|up> + sin(theta/2) e^{i phi}|down>`.
pub fn spin_coherent_state(space: DickeSpace, angles: BlochAngles) -> QuantumState {
    let n = space.spins();
    let (s, c) = (angles.theta() / 2.0).sin_cos();
    let mut psi = CVector::zeros(space.dim());
    let mut binom = 1.0_f64;
    for k in 0..=n {
        if k > 0 {
            binom *= (n - k + 1) as f64 / k as f64;
        }
        let magnitude = binom.sqrt() * c.powi(k as i32) * s.powi((n - k) as i32);
        psi[k] = C64::from_polar(magnitude, (n - k) as f64 * angles.phi());
    }
    let norm = psi.norm();
    psi.unscale_mut(norm);
    QuantumState::Pure(psi)
}

fn check_shape(op: &CMatrix, dim: usize) -> Result<()> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            rows: op.nrows(),
            cols: op.ncols(),
        });
    }
    Ok(())
}

/// `<psi|A|psi>` or `Tr(A rho)`.
pub fn expectation(op: &CMatrix, state: &QuantumState) -> Result<C64> {
    check_shape(op, state.dim())?;
    Ok(match state {
        QuantumState::Pure(psi) => psi.dotc(&(op * psi)),
        QuantumState::Mixed(rho) => trace_product(op, rho),
    })
}

/// Symmetrized covariance `1/2 <AB + BA> - <A><B>`.
pub fn sym_covariance(a: &CMatrix, b: &CMatrix, state: &QuantumState) -> Result<f64> {
    check_shape(a, state.dim())?;
    check_shape(b, state.dim())?;
    let anti = a * b + b * a;
    let sym = expectation(&anti, state)? * 0.5;
    Ok((sym - expectation(a, state)? * expectation(b, state)?).re)
}

/// `1/2 (<A(BC) + (CB)A> - <A><BC + CB>)`.
pub fn third_moment(a: &CMatrix, b: &CMatrix, c: &CMatrix, state: &QuantumState) -> Result<f64> {
    Ok(third_moment_complex(a, b, c, state)?.re)
}

pub(crate) fn third_moment_complex(
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    state: &QuantumState,
) -> Result<C64> {
    for m in [a, b, c] {
        check_shape(m, state.dim())?;
    }
    let bc = b * c;
    let cb = c * b;
    let outer = a * &bc + &cb * a;
    let value =
        expectation(&outer, state)? - expectation(a, state)? * expectation(&(bc + cb), state)?;
    Ok(value * 0.5)
}

/// Largest deviation of the matrix elements of `S-/sqrt(n)` from those of a
/// bosonic annihilation operator, over the first `k_max` excitations.
pub fn hpa_residual(space: DickeSpace, k_max: usize) -> Result<f64> {
    let n = space.spins();
    if k_max > n {
        return Err(Error::param(
            "k_max",
            format!("{k_max} exceeds spin count {n}"),
        ));
    }
    let sqrt_n = (n as f64).sqrt();
    Ok((1..=k_max)
        .map(|k| (lowering_element(n, k) / sqrt_n - (k as f64).sqrt()).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ops(n: usize) -> CollectiveOps {
        CollectiveOps::new(DickeSpace::new(n).unwrap())
    }

    fn coherent(n: usize, theta: f64, phi: f64) -> QuantumState {
        spin_coherent_state(
            DickeSpace::new(n).unwrap(),
            BlochAngles::new(theta, phi).unwrap(),
        )
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_empty_ensemble() {
        assert_eq!(DickeSpace::new(0), Err(Error::InvalidSpinCount(0)));
    }

    #[test]
    fn single_spin_is_pauli() {
        let o = ops(1);
        assert_eq!(o.sz[(0, 0)].re, -1.0);
        assert_eq!(o.sz[(1, 1)].re, 1.0);
        assert_eq!(o.sm[(0, 1)].re, 1.0);
        assert_eq!(o.sm[(1, 0)].norm(), 0.0);
        // sigma_y |g> = -i |e>... in (g, e) ordering <g|Sy|e> = i
        assert_eq!(o.sy[(0, 1)], C64::new(0.0, 1.0));
    }

    #[test]
    fn two_spin_lowering_elements() {
        let o = ops(2);
        assert!((o.sm[(0, 1)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((o.sm[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spin_algebra_up_to_64() {
        for n in 1..=64 {
            let o = ops(n);
            let c1 = &o.sm * &o.sp - &o.sp * &o.sm + &o.sz;
            let c2 = &o.sz * &o.sp - &o.sp * &o.sz - &o.sp * C64::new(2.0, 0.0);
            let c3 = &o.sz * &o.sm - &o.sm * &o.sz + &o.sm * C64::new(2.0, 0.0);
            assert!(max_abs(&c1) < 1e-12, "n={n}");
            assert!(max_abs(&c2) < 1e-12, "n={n}");
            assert!(max_abs(&c3) < 1e-12, "n={n}");
            for m in [&o.sx, &o.sy, &o.sz] {
                assert!(hermiticity_residue(m) < 1e-15);
            }
        }
    }

    #[test]
    fn coherent_state_poles() {
        let north = coherent(5, 0.0, 0.0);
        let south = coherent(5, PI, 1.3);
        let o = ops(5);
        if let QuantumState::Pure(psi) = &north {
            assert!((psi[5].norm() - 1.0).abs() < 1e-15);
        }
        assert!((expectation(&o.sz, &north).unwrap().re - 5.0).abs() < 1e-12);
        assert!((expectation(&o.sz, &south).unwrap().re + 5.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_fig3b_angle() {
        let (n, theta, phi) = (15, 0.75 * PI, PI / 3.0);
        let s = coherent(n, theta, phi);
        let o = ops(n);
        let sx = expectation(&o.sx, &s).unwrap();
        let sy = expectation(&o.sy, &s).unwrap();
        let sz = expectation(&o.sz, &s).unwrap();
        assert!((sx.re - 15.0 * theta.sin() * phi.cos()).abs() < 1e-10 * 15.0);
        assert!((sy.re - 15.0 * theta.sin() * phi.sin()).abs() < 1e-10 * 15.0);
        assert!((sz.re - 15.0 * theta.cos()).abs() < 1e-10 * 15.0);
        assert!(sx.im.abs() < 1e-10);
    }

    #[test]
    fn expectation_examples() {
        let o4 = ops(4);
        let eq = coherent(4, PI / 2.0, 0.0);
        assert!(expectation(&o4.sz, &eq).unwrap().norm() < 1e-12);
        let ground = QuantumState::basis(5, 0);
        assert!(expectation(&o4.sx, &ground).unwrap().norm() < 1e-15);

        // second moment of 2k - n under Binomial(n, cos^2(theta/2))
        for &(n, theta) in &[(3usize, 0.3), (7, 1.1), (12, 2.5)] {
            let o = ops(n);
            let s = coherent(n, theta, 0.4);
            let sz2 = &o.sz * &o.sz;
            let got = expectation(&sz2, &s).unwrap().re;
            let p = (theta / 2.0).cos().powi(2);
            let mut brute = 0.0;
            let mut binom = 1.0;
            for k in 0..=n {
                if k > 0 {
                    binom *= (n - k + 1) as f64 / k as f64;
                }
                let w = binom * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                brute += w * (2.0 * k as f64 - n as f64).powi(2);
            }
            let closed = n as f64 + (n * (n - 1)) as f64 * theta.cos().powi(2);
            assert!((got - brute).abs() < 1e-10 * n as f64);
            assert!((got - closed).abs() < 1e-10 * n as f64);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let o = ops(3);
        let s = QuantumState::basis(3, 0);
        assert!(matches!(
            expectation(&o.sz, &s),
            Err(Error::ShapeMismatch { expected: 3, .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let o1 = ops(1);
        let s = coherent(1, PI, 0.0);
        assert!((sym_covariance(&o1.sx, &o1.sx, &s).unwrap() - 1.0).abs() < 1e-12);
        for n in [1, 4, 9] {
            let o = ops(n);
            let s = coherent(n, PI, 0.7);
            assert!(sym_covariance(&o.sx, &o.sy, &s).unwrap().abs() < 1e-12);
        }
        let o10 = ops(10);
        let s = coherent(10, PI, 0.0);
        assert!((sym_covariance(&o10.sx, &o10.sx, &s).unwrap() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn third_moment_examples() {
        let o1 = ops(1);
        let g = QuantumState::basis(2, 0);
        // 2x2 by hand: (sx sx sz + sz sx sx) / 2 = sz, so <sz> V_sx = -1
        assert!((third_moment(&o1.sx, &o1.sx, &o1.sz, &g).unwrap() + 1.0).abs() < 1e-14);

        let o5 = ops(5);
        let s = coherent(5, PI, 0.0);
        // direct evaluation: Sz acts as -5 on the pole, <Sx^2> = 5
        assert!((third_moment(&o5.sx, &o5.sx, &o5.sz, &s).unwrap() + 25.0).abs() < 1e-10);
        for n in [2, 6] {
            let o = ops(n);
            let s = coherent(n, PI, 0.0);
            assert!(third_moment(&o.sy, &o.sx, &o.sz, &s).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn hpa_residual_examples() {
        let big = DickeSpace::new(10_000).unwrap();
        let r = hpa_residual(big, 3).unwrap();
        let brute = (1..=3usize)
            .map(|k| ((k * (10_000 - k + 1)) as f64 / 10_000.0).sqrt() - (k as f64).sqrt())
            .map(f64::abs)
            .fold(0.0, f64::max);
        assert!(r < 2e-4);
        assert!((r - brute).abs() < 1e-15);
        assert_eq!(hpa_residual(DickeSpace::new(1).unwrap(), 1).unwrap(), 0.0);
        assert!(hpa_residual(DickeSpace::new(100).unwrap(), 1).unwrap() < 1e-15);
        assert!(hpa_residual(DickeSpace::new(3).unwrap(), 4).is_err());

        let mut last = f64::INFINITY;
        for n in [10, 100, 1000, 10_000] {
            let r = hpa_residual(DickeSpace::new(n).unwrap(), 3).unwrap();
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn state_validation() {
        let mut psi = CVector::zeros(3);
        psi[0] = C64::new(0.5, 0.0);
        assert!(QuantumState::pure(psi).is_err());
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = C64::new(1.2, 0.0);
        rho[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(QuantumState::mixed(rho).is_err());
        assert!(BlochAngles::new(4.0, 0.0).is_err());
        assert!((BlochAngles::new(1.0, -PI / 2.0).unwrap().phi() - 1.5 * PI).abs() < 1e-15);
    }

    fn random_state(dim: usize, re: &[f64], im: &[f64]) -> QuantumState {
        let mut psi = CVector::from_fn(dim, |i, _| C64::new(re[i], im[i]));
        let norm = psi.norm().max(1e-3);
        psi.unscale_mut(norm);
        let norm = psi.norm();
        psi.unscale_mut(norm);
        QuantumState::Pure(psi)
    }

    proptest! {
        #[test]
        fn coherent_expectations_match_bloch_vector(
            n in 1usize..30, theta in 0.0..PI, phi in 0.0..(2.0 * PI)
        ) {
            let o = ops(n);
            let s = coherent(n, theta, phi);
            let nf = n as f64;
            let sx = expectation(&o.sx, &s).unwrap().re;
            let sy = expectation(&o.sy, &s).unwrap().re;
            let sz = expectation(&o.sz, &s).unwrap().re;
            prop_assert!((sx - nf * theta.sin() * phi.cos()).abs() < 1e-10 * nf);
            prop_assert!((sy - nf * theta.sin() * phi.sin()).abs() < 1e-10 * nf);
            prop_assert!((sz - nf * theta.cos()).abs() < 1e-10 * nf);
        }

        #[test]
        fn variance_is_nonnegative(
            re in proptest::collection::vec(-1.0..1.0f64, 6),
            im in proptest::collection::vec(-1.0..1.0f64, 6),
            h in proptest::collection::vec(-2.0..2.0f64, 36),
        ) {
            let dim = 6;
            let s = random_state(dim, &re, &im);
            let raw = CMatrix::from_fn(dim, dim, |i, j| C64::new(h[i * dim + j], h[j * dim + i] - h[i * dim + j]));
            let a = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
            prop_assert!(sym_covariance(&a, &a, &s).unwrap() >= -1e-10);
            let rho = QuantumState::Mixed(s.density_matrix());
            prop_assert!(sym_covariance(&a, &a, &rho).unwrap() >= -1e-10);
        }

        #[test]
        fn third_moment_symmetric_in_last_two(
            re in proptest::collection::vec(-1.0..1.0f64, 5),
            im in proptest::collection::vec(-1.0..1.0f64, 5),
        ) {
            let o = ops(4);
            let s = random_state(5, &re, &im);
            let a = third_moment(&o.sx, &o.sy, &o.sz, &s).unwrap();
            let b = third_moment(&o.sx, &o.sz, &o.sy, &s).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
            let c = third_moment_complex(&o.sx, &o.sy, &o.sz, &s).unwrap();
            prop_assert!(c.im.abs() < 1e-10);
        }

        #[test]
        fn uncertainty_relation_on_coherent_states(n in 1usize..25, theta in 0.0..PI, phi in 0.0..6.0f64) {
            let o = ops(n);
            let s = coherent(n, theta, phi);
            let vx = sym_covariance(&o.sx, &o.sx, &s).unwrap();
            let vy = sym_covariance(&o.sy, &o.sy, &s).unwrap();
            let sz = expectation(&o.sz, &s).unwrap().re;
            prop_assert!(vx * vy >= sz * sz - 1e-9 * (n * n) as f64);
        }
    }
}

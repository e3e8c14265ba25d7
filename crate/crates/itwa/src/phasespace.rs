//! Continuous spin phase space.
//!
//! A spin-1/2 is represented by a point `(θ, φ)` on the sphere. The
//! phase-point kernel maps that point to a 2×2 Hermitian operator with unit
//! trace, and the Weyl symbol of an operator is its trace against the kernel.
//! Complex matrices only appear here, as a verification surface; every
//! simulation path works with plain real angle arrays.

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, Matrix2};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::trajectory_stream;

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Polar and azimuthal angle of a single spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinAngles {
    theta: f64,
    phi: f64,
}

impl SpinAngles {
    /// `theta` must lie in `[0, π]`; `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(invalid(format!("angles out of range: theta={theta}, phi={phi}")));
        }
        Ok(Self { theta, phi: wrap_phi(phi) })
    }

    /// Builds the angles from `u = cos θ`, clamping `u` into `[-1, 1]`.
    pub fn from_cos(u: f64, phi: f64) -> Result<Self> {
        Self::new(u.clamp(-1.0, 1.0).acos(), phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

pub(crate) fn wrap_phi(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// The phase-point kernel `Δ(θ, φ) = ½ (𝟙 + √3 n·σ)`.
pub fn phase_point_kernel(a: SpinAngles) -> Matrix2<Complex<f64>> {
    let (s, c) = a.theta.sin_cos();
    let off = SQRT_3 * s;
    Matrix2::new(
        Complex::new(0.5 * (1.0 + SQRT_3 * c), 0.0),
        Complex::from_polar(0.5 * off, -a.phi),
        Complex::from_polar(0.5 * off, a.phi),
        Complex::new(0.5 * (1.0 - SQRT_3 * c), 0.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn matrix(self) -> Matrix2<Complex<f64>> {
        let z = Complex::new(0.0, 0.0);
        let one = Complex::new(1.0, 0.0);
        let i = Complex::new(0.0, 1.0);
        match self {
            PauliAxis::X => Matrix2::new(z, one, one, z),
            PauliAxis::Y => Matrix2::new(z, -i, i, z),
            PauliAxis::Z => Matrix2::new(one, z, z, -one),
        }
    }
}

/// Weyl symbol of a Pauli matrix, `Tr{σ^a Δ(θ, φ)} = √3 n_a`.
pub fn pauli_weyl(axis: PauliAxis, a: SpinAngles) -> f64 {
    let (s, c) = a.theta.sin_cos();
    match axis {
        PauliAxis::X => SQRT_3 * s * a.phi.cos(),
        PauliAxis::Y => SQRT_3 * s * a.phi.sin(),
        PauliAxis::Z => SQRT_3 * c,
    }
}

/// Draws one spin from the infinite-temperature Wigner distribution, which is
/// uniform on the sphere. `cos θ` is sampled directly so the density near the
/// poles is exact.
pub fn sample_spin<R: Rng + ?Sized>(rng: &mut R) -> SpinAngles {
    let u: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    SpinAngles { theta: u.acos(), phi }
}

/// Angles of `n_spins` spins on each of `n_traj` trajectories, stored
/// trajectory-major in two flat arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnsembleState {
    n_spins: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl SpinEnsembleState {
    pub fn new(n_spins: usize, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins must be at least 1"));
        }
        if theta.len() != phi.len() || !theta.len().is_multiple_of(n_spins) {
            return Err(invalid(format!(
                "angle arrays of length {} / {} do not hold whole trajectories of {n_spins} spins",
                theta.len(),
                phi.len()
            )));
        }
        Ok(Self { n_spins, theta, phi })
    }

    /// Builds a state from per-trajectory spin lists; all must have equal length.
    pub fn from_trajectories(trajectories: &[Vec<SpinAngles>]) -> Result<Self> {
        let n_spins = trajectories.first().map_or(0, Vec::len);
        if trajectories.iter().any(|t| t.len() != n_spins) {
            return Err(invalid("trajectories have differing spin counts"));
        }
        let theta = trajectories.iter().flatten().map(|a| a.theta).collect();
        let phi = trajectories.iter().flatten().map(|a| a.phi).collect();
        Self::new(n_spins, theta, phi)
    }

    /// `n_traj` independent draws from the fully mixed state; trajectory `k`
    /// uses stream `k` of `seed`.
    pub fn fully_mixed(n_spins: usize, n_traj: usize, seed: u64) -> Result<Self> {
        if n_spins == 0 || n_traj == 0 {
            return Err(invalid("n_spins and n_traj must be at least 1"));
        }
        let mut theta = vec![0.0; n_spins * n_traj];
        let mut phi = vec![0.0; n_spins * n_traj];
        for (k, (t, p)) in theta.chunks_mut(n_spins).zip(phi.chunks_mut(n_spins)).enumerate() {
            let mut rng = trajectory_stream(seed, k as u64);
            fill_fully_mixed(t, p, &mut rng);
        }
        Self::new(n_spins, theta, phi)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_traj(&self) -> usize {
        self.theta.len() / self.n_spins
    }

    pub fn theta(&self, k: usize) -> &[f64] {
        &self.theta[k * self.n_spins..(k + 1) * self.n_spins]
    }

    pub fn phi(&self, k: usize) -> &[f64] {
        &self.phi[k * self.n_spins..(k + 1) * self.n_spins]
    }

    pub fn angles(&self, k: usize) -> Vec<SpinAngles> {
        self.theta(k)
            .iter()
            .zip(self.phi(k))
            .map(|(&theta, &phi)| SpinAngles { theta, phi })
            .collect()
    }

    pub fn theta_all(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi_all(&self) -> &[f64] {
        &self.phi
    }

    pub(crate) fn arrays_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.theta, &mut self.phi)
    }
}

/// One trajectory sampled from the fully mixed state.
pub fn sample_fully_mixed<R: Rng + ?Sized>(n_spins: usize, rng: &mut R) -> Result<SpinEnsembleState> {
    if n_spins == 0 {
        return Err(invalid("n_spins must be at least 1"));
    }
    let mut theta = vec![0.0; n_spins];
    let mut phi = vec![0.0; n_spins];
    fill_fully_mixed(&mut theta, &mut phi, rng);
    SpinEnsembleState::new(n_spins, theta, phi)
}

pub(crate) fn fill_fully_mixed<R: Rng + ?Sized>(theta: &mut [f64], phi: &mut [f64], rng: &mut R) {
    for (t, p) in theta.iter_mut().zip(phi.iter_mut()) {
        let a = sample_spin(rng);
        *t = a.theta;
        *p = a.phi;
    }
}

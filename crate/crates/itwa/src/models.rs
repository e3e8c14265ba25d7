//! The two concrete systems: the antiferromagnetic Ising model on a regular
//! graph and the nearest-neighbor transverse-field Ising model (TFIM) on a
//! chain or square lattice.
//!
//! Each model supplies three things to the integrator: the Weyl symbol of its
//! Hamiltonian (which drives the trajectory weights), a drift vector, and
//! noise amplitudes. The graph model has no noise at all; its diffusion matrix
//! is not positive and is dropped, so randomness enters only through the
//! initial sampling. The TFIM carries a constant shift of `-dJ` per site and
//! block-diagonal noise: a truncated diagonal θ block and a constant φ block
//! factored once per lattice.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::graphs::RegularGraph;
use crate::phasespace::{SpinAngles, SQRT_3};
use crate::rng::TrajectoryRng;

/// Minimum distance of θ from either pole.
pub const POLE_EPS: f64 = 1e-6;
/// Largest deterministic θ change (or `cos θ` change for the graph model)
/// allowed per step. The noise increment is not capped.
pub const MAX_ANGLE_STEP: f64 = 0.1;

/// A system that can be integrated in imaginary time.
pub trait ItwaModel: Send + Sync {
    fn n_spins(&self) -> usize;

    /// Weyl symbol of the Hamiltonian as it enters the trajectory weights.
    fn weight_energy(&self, theta: &[f64], phi: &[f64]) -> f64;

    /// Constant to add to [`ItwaModel::weight_energy`] to obtain the symbol of
    /// the physical Hamiltonian.
    fn energy_offset(&self) -> f64 {
        0.0
    }

    /// Advances one trajectory by `steps` Euler–Maruyama steps of size
    /// `d_tau`, subtracting `weight_energy(pre-step state) * d_tau` from
    /// `log_weight` on every step.
    fn advance(
        &self,
        theta: &mut [f64],
        phi: &mut [f64],
        log_weight: &mut f64,
        steps: usize,
        d_tau: f64,
        rng: &mut TrajectoryRng,
    );
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, found })
    }
}

#[inline]
fn clamp_theta(t: f64) -> f64 {
    t.clamp(POLE_EPS, PI - POLE_EPS)
}

#[inline]
fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Ising model on a regular graph

/// `H = J Σ_edges σ^z_i σ^z_j` with `J > 0`.
#[derive(Debug, Clone)]
pub struct IsingGraphModel {
    graph: RegularGraph,
    j: f64,
}

impl IsingGraphModel {
    pub fn new(graph: RegularGraph, j: f64) -> Result<Self> {
        if !(j > 0.0 && j.is_finite()) {
            return Err(invalid(format!("coupling J must be positive and finite (got {j})")));
        }
        Ok(Self { graph, j })
    }

    pub fn graph(&self) -> &RegularGraph {
        &self.graph
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    /// `3J Σ_edges cos θ_i cos θ_j`.
    pub fn weyl_energy(&self, spins: &[SpinAngles]) -> Result<f64> {
        check_len(self.graph.n(), spins.len())?;
        let u: Vec<f64> = spins.iter().map(|a| a.theta().cos()).collect();
        Ok(self.energy_u(&u))
    }

    fn energy_u(&self, u: &[f64]) -> f64 {
        3.0 * self.j * self.graph.edges().iter().map(|&(a, b)| u[a] * u[b]).sum::<f64>()
    }

    /// `dθ_i/dτ = -J (2/sin θ_i - 3 sin θ_i) Σ_j cos θ_j`; `dφ/dτ = 0`.
    /// `sin θ` is floored at `sin(POLE_EPS)`.
    pub fn drift(&self, spins: &[SpinAngles]) -> Result<Vec<f64>> {
        check_len(self.graph.n(), spins.len())?;
        let floor = POLE_EPS.sin();
        Ok((0..spins.len())
            .map(|i| {
                let s = spins[i].theta().sin().max(floor);
                let sum: f64 = self.graph.neighbors(i).iter().map(|&j| spins[j].theta().cos()).sum();
                -self.j * (2.0 / s - 3.0 * s) * sum
            })
            .collect())
    }

    /// The same flow in `u = cos θ`: `du_i/dτ = J (3u_i² - 1) Σ_j u_j`.
    pub fn drift_u(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.graph.n(), u.len())?;
        let mut out = vec![0.0; u.len()];
        self.drift_u_into(u, &mut out);
        Ok(out)
    }

    #[inline]
    fn drift_u_into(&self, u: &[f64], out: &mut [f64]) {
        let k = self.graph.degree();
        let table = self.graph.neighbor_table();
        for (i, o) in out.iter_mut().enumerate() {
            let sum: f64 = table[i * k..(i + 1) * k].iter().map(|&j| u[j]).sum();
            *o = self.j * (3.0 * u[i] * u[i] - 1.0) * sum;
        }
    }
}

impl ItwaModel for IsingGraphModel {
    fn n_spins(&self) -> usize {
        self.graph.n()
    }

    fn weight_energy(&self, theta: &[f64], _phi: &[f64]) -> f64 {
        let u: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        self.energy_u(&u)
    }

    fn advance(
        &self,
        theta: &mut [f64],
        _phi: &mut [f64],
        log_weight: &mut f64,
        steps: usize,
        d_tau: f64,
        _rng: &mut TrajectoryRng,
    ) {
        // integrated in u = cos θ; φ is constant
        let mut u: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let mut du = vec![0.0; u.len()];
        for _ in 0..steps {
            *log_weight -= self.energy_u(&u) * d_tau;
            self.drift_u_into(&u, &mut du);
            for (x, d) in u.iter_mut().zip(&du) {
                *x = (*x + (d * d_tau).clamp(-MAX_ANGLE_STEP, MAX_ANGLE_STEP)).clamp(-1.0, 1.0);
            }
        }
        for (t, x) in theta.iter_mut().zip(&u) {
            *t = clamp_theta(x.acos());
        }
    }
}

// ---------------------------------------------------------------------------
// Lattices

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// A hypercubic lattice of dimension 0 (a single site), 1 or 2. Site `(x, y)`
/// has index `x + Lx * y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSpec {
    lengths: Vec<usize>,
    boundary: Boundary,
    neighbors: Vec<Vec<usize>>,
}

impl LatticeSpec {
    pub fn new(lengths: &[usize], boundary: Boundary) -> Result<Self> {
        if lengths.len() > 2 {
            return Err(invalid(format!("lattice dimension must be 0, 1 or 2 (got {})", lengths.len())));
        }
        if lengths.contains(&0) {
            return Err(invalid("lattice side lengths must be positive"));
        }
        if boundary == Boundary::Periodic && lengths.iter().any(|&l| l < 2) {
            return Err(invalid("periodic lattices need side length >= 2"));
        }
        let n: usize = lengths.iter().product();
        let mut neighbors = vec![Vec::with_capacity(2 * lengths.len()); n];
        let mut stride = 1;
        for &l in lengths {
            for (site, nb) in neighbors.iter_mut().enumerate() {
                let x = (site / stride) % l;
                let base = site - x * stride;
                match boundary {
                    Boundary::Periodic => {
                        nb.push(base + ((x + l - 1) % l) * stride);
                        nb.push(base + ((x + 1) % l) * stride);
                    }
                    Boundary::Open => {
                        if x > 0 {
                            nb.push(base + (x - 1) * stride);
                        }
                        if x + 1 < l {
                            nb.push(base + (x + 1) * stride);
                        }
                    }
                }
            }
            stride *= l;
        }
        Ok(Self { lengths: lengths.to_vec(), boundary, neighbors })
    }

    pub fn chain(n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(&[n], boundary)
    }

    pub fn square(lx: usize, ly: usize, boundary: Boundary) -> Result<Self> {
        Self::new(&[lx, ly], boundary)
    }

    pub fn single_site() -> Self {
        Self::new(&[], Boundary::Open).expect("empty lattice spec is valid")
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Undirected bonds `(i, j)` with `i < j`, one entry per ordered neighbor
    /// pair divided by two. A periodic side of length 2 yields a doubled bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.neighbors.iter().enumerate() {
            out.extend(nb.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Transverse-field Ising model

/// `B_φφ` with `B_φφ B_φφᵀ = D_φφ`, where `D_φφ` has `2dJ` on the diagonal
/// and `-J` for every neighbor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiDiffusionFactor {
    n: usize,
    diffusion: Vec<f64>,
    factor: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl PhiDiffusionFactor {
    pub fn new(lattice: &LatticeSpec, j: f64) -> Result<Self> {
        let n = lattice.n_sites();
        if n == 0 {
            return Err(invalid("lattice has no sites"));
        }
        let d = lattice.dimension() as f64;
        let mut dm = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dm[(i, i)] += 2.0 * d * j;
            for &k in lattice.neighbors(i) {
                dm[(i, k)] -= j;
            }
        }
        let eig = SymmetricEigen::new(dm.clone());
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let mut factor = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                factor[r * n + c] = eig.eigenvectors[(r, c)] * eigenvalues[c].sqrt();
            }
        }
        let diffusion = (0..n * n).map(|idx| dm[(idx / n, idx % n)]).collect();
        Ok(Self { n, diffusion, factor, eigenvalues })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major `D_φφ`.
    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// Row-major `B_φφ`.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Eigenvalues of `D_φφ` after clipping at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `max |B Bᵀ - D|`.
    pub fn residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let bbt: f64 = (0..n).map(|k| self.factor[r * n + k] * self.factor[c * n + k]).sum();
                worst = worst.max((bbt - self.diffusion[r * n + c]).abs());
            }
        }
        worst
    }
}

/// `H = -h Σ σ^x - (J/2) Σ_<ij> σ^z_i σ^z_j`, the bond sum running over
/// ordered neighbor pairs (so `J` per undirected bond).
#[derive(Debug, Clone)]
pub struct TfimModel {
    lattice: LatticeSpec,
    j: f64,
    h: f64,
    phi_factor: PhiDiffusionFactor,
}

impl TfimModel {
    pub fn new(lattice: LatticeSpec, j: f64, h: f64) -> Result<Self> {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(invalid(format!("coupling J must be non-negative and finite (got {j})")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(invalid(format!("field h must be non-negative and finite (got {h})")));
        }
        let phi_factor = PhiDiffusionFactor::new(&lattice, j)?;
        Ok(Self { lattice, j, h, phi_factor })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    pub fn field(&self) -> f64 {
        self.h
    }

    pub fn phi_factor(&self) -> &PhiDiffusionFactor {
        &self.phi_factor
    }

    /// The constant `-dJN` added to the Hamiltonian for the stochastic mapping.
    pub fn energy_shift(&self) -> f64 {
        -(self.lattice.dimension() as f64) * self.j * self.lattice.n_sites() as f64
    }

    fn d(&self) -> f64 {
        self.lattice.dimension() as f64
    }

    fn neighbor_cos_sum(&self, i: usize, cos: &[f64]) -> f64 {
        self.lattice.neighbors(i).iter().map(|&k| cos[k]).sum()
    }

    /// Shifted Weyl energy
    /// `-h√3 Σ sin θ cos φ - 3J Σ_bonds cos θ_i cos θ_j - dJN`.
    pub fn weyl_energy(&self, spins: &[SpinAngles]) -> Result<f64> {
        check_len(self.lattice.n_sites(), spins.len())?;
        let (theta, phi): (Vec<f64>, Vec<f64>) = spins.iter().map(|a| (a.theta(), a.phi())).unzip();
        Ok(self.weight_energy(&theta, &phi))
    }

    /// Per-spin `(dθ/dτ, dφ/dτ)`.
    pub fn drift(&self, spins: &[SpinAngles]) -> Result<Vec<(f64, f64)>> {
        check_len(self.lattice.n_sites(), spins.len())?;
        let cos: Vec<f64> = spins.iter().map(|a| a.theta().cos()).collect();
        let r3 = self.h / SQRT_3;
        let dj = self.d() * self.j;
        Ok(spins
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (s, c) = a.theta().sin_cos();
                let (sp, cp) = a.phi().sin_cos();
                let ns = self.neighbor_cos_sum(i, &cos);
                let dtheta = -self.j * s * ns + r3 * c * cp + dj * s * c;
                let dphi = -r3 * sp / s.max(POLE_EPS.sin());
                (dtheta, dphi)
            })
            .collect())
    }

    /// Diagonal θ noise amplitudes `sqrt(max(a_i, 0))` with
    /// `a_i = 4J cos θ_i Σ_j cos θ_j + (4h/√3) sin θ_i cos φ_i - 2dJ sin² θ_i`.
    pub fn theta_noise(&self, spins: &[SpinAngles]) -> Result<Vec<f64>> {
        check_len(self.lattice.n_sites(), spins.len())?;
        let cos: Vec<f64> = spins.iter().map(|a| a.theta().cos()).collect();
        Ok(spins
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (s, c) = a.theta().sin_cos();
                self.theta_diffusion(s, c, a.phi().cos(), self.neighbor_cos_sum(i, &cos)).max(0.0).sqrt()
            })
            .collect())
    }

    #[inline]
    fn theta_diffusion(&self, s: f64, c: f64, cos_phi: f64, neighbor_sum: f64) -> f64 {
        4.0 * self.j * c * neighbor_sum + 4.0 * self.h / SQRT_3 * s * cos_phi - 2.0 * self.d() * self.j * s * s
    }
}

impl ItwaModel for TfimModel {
    fn n_spins(&self) -> usize {
        self.lattice.n_sites()
    }

    fn weight_energy(&self, theta: &[f64], phi: &[f64]) -> f64 {
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let mut field = 0.0;
        let mut bonds = 0.0;
        for i in 0..theta.len() {
            field += theta[i].sin() * phi[i].cos();
            bonds += cos[i] * self.neighbor_cos_sum(i, &cos);
        }
        -self.h * SQRT_3 * field - 1.5 * self.j * bonds + self.energy_shift()
    }

    fn energy_offset(&self) -> f64 {
        -self.energy_shift()
    }

    fn advance(
        &self,
        theta: &mut [f64],
        phi: &mut [f64],
        log_weight: &mut f64,
        steps: usize,
        d_tau: f64,
        rng: &mut TrajectoryRng,
    ) {
        let n = theta.len();
        let sqrt_dt = d_tau.sqrt();
        let r3 = self.h / SQRT_3;
        let dj = self.d() * self.j;
        let shift = self.energy_shift();
        let pole_floor = POLE_EPS.sin();
        let b = self.phi_factor.factor();
        let mut sin = vec![0.0; n];
        let mut cos = vec![0.0; n];
        let mut xi = vec![0.0; n];
        for _ in 0..steps {
            for i in 0..n {
                let (s, c) = theta[i].sin_cos();
                sin[i] = s;
                cos[i] = c;
            }
            let mut field = 0.0;
            let mut bonds = 0.0;
            for i in 0..n {
                let (sp, cp) = phi[i].sin_cos();
                let (s, c) = (sin[i], cos[i]);
                let ns = self.neighbor_cos_sum(i, &cos);
                field += s * cp;
                bonds += c * ns;
                let drift_theta = -self.j * s * ns + r3 * c * cp + dj * s * c;
                let amp = self.theta_diffusion(s, c, cp, ns).max(0.0).sqrt();
                let noise: f64 = rng.sample(StandardNormal);
                let dtheta = (drift_theta * d_tau).clamp(-MAX_ANGLE_STEP, MAX_ANGLE_STEP) + amp * sqrt_dt * noise;
                theta[i] = clamp_theta(theta[i] + dtheta);
                // φ drift uses the pre-step sin θ
                phi[i] -= r3 * sp / s.max(pole_floor) * d_tau;
            }
            *log_weight -= (-self.h * SQRT_3 * field - 1.5 * self.j * bonds + shift) * d_tau;
            if dj > 0.0 {
                for x in xi.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                for i in 0..n {
                    let row = &b[i * n..(i + 1) * n];
                    let kick: f64 = row.iter().zip(&xi).map(|(bij, x)| bij * x).sum();
                    phi[i] += sqrt_dt * kick;
                }
            }
            for p in phi.iter_mut() {
                *p = wrap(*p);
            }
        }
    }
}

/// `θ → π - θ` applied to every spin (the σ^z → -σ^z map in phase space).
pub fn reflect_z(spins: &[SpinAngles]) -> Vec<SpinAngles> {
    spins
        .iter()
        .map(|a| SpinAngles::new(PI - a.theta(), a.phi()).expect("reflection stays in range"))
        .collect()
}

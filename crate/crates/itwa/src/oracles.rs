//! Reference solvers: exhaustive enumeration for the graph model, dense exact
//! diagonalization for small TFIM instances, and simulated annealing as a
//! heuristic ground-state estimate for graphs too large to enumerate.
//!
//! Configurations are encoded little-endian: bit `i` of a code is spin `i`,
//! clear meaning `+1` (see [`SpinAssignment::from_code`]).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::graphs::{config_energy, RegularGraph, SpinAssignment};
use crate::models::TfimModel;
use crate::rng::trajectory_stream;

pub const MAX_ENUMERATION_SPINS: usize = 26;
pub const MAX_ED_SPINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Enumeration,
    Annealing,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::Enumeration => "enumeration",
            OracleMethod::Annealing => "annealing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateReport {
    pub energy: f64,
    /// One optimal (enumeration) or best-found (annealing) configuration.
    pub assignment: SpinAssignment,
    /// Number of optimal configurations; enumeration only.
    pub degeneracy: Option<u64>,
    pub method: OracleMethod,
}

/// Number of configurations per cut size, from a full enumeration of the
/// `2^N` assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSpectrum {
    n: usize,
    n_edges: usize,
    j: f64,
    counts: Vec<u64>,
    max_cut_code: u64,
}

impl CutSpectrum {
    pub fn enumerate(g: &RegularGraph, j: f64) -> Result<Self> {
        let n = g.n();
        if n > MAX_ENUMERATION_SPINS {
            return Err(Error::TooLarge {
                what: "exhaustive enumeration",
                n,
                limit: MAX_ENUMERATION_SPINS,
                hint: "use simulated annealing for larger graphs",
            });
        }
        let m = g.edges().len();
        let mut counts = vec![0u64; m + 1];
        let mut spins = vec![1i8; n];
        let mut cut = 0usize;
        counts[0] = 1;
        let (mut best_cut, mut best_code) = (0usize, 0u64);
        // Gray-code walk: step k flips spin trailing_zeros(k)
        for k in 1u64..(1u64 << n) {
            let i = k.trailing_zeros() as usize;
            for &nb in g.neighbors(i) {
                if spins[nb] == spins[i] {
                    cut += 1;
                } else {
                    cut -= 1;
                }
            }
            spins[i] = -spins[i];
            counts[cut] += 1;
            if cut >= best_cut {
                let code = k ^ (k >> 1);
                if cut > best_cut || code < best_code {
                    best_cut = cut;
                    best_code = code;
                }
            }
        }
        Ok(Self { n, n_edges: m, j, counts, max_cut_code: best_code })
    }

    /// Configuration count for each cut size `0..=|E|`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn energy_of_cut(&self, cut: usize) -> f64 {
        self.j * (self.n_edges as f64 - 2.0 * cut as f64)
    }

    pub fn ground_state(&self) -> GroundStateReport {
        let cut = self.counts.iter().rposition(|&c| c > 0).expect("spectrum is non-empty");
        GroundStateReport {
            energy: self.energy_of_cut(cut),
            assignment: SpinAssignment::from_code(self.max_cut_code, self.n),
            degeneracy: Some(self.counts[cut]),
            method: OracleMethod::Enumeration,
        }
    }

    fn boltzmann(&self, tau: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let e0 = self.ground_state().energy;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(cut, &c)| {
                let e = self.energy_of_cut(cut);
                (e, c as f64 * (-tau * (e - e0)).exp())
            })
    }

    /// `Σ E e^{-τE} / Σ e^{-τE}`.
    pub fn thermal_energy(&self, tau: f64) -> f64 {
        let (num, den) = self.boltzmann(tau).fold((0.0, 0.0), |(n, d), (e, w)| (n + e * w, d + w));
        num / den
    }

    /// `log Z(τ)`.
    pub fn log_partition(&self, tau: f64) -> f64 {
        let e0 = self.ground_state().energy;
        let den: f64 = self.boltzmann(tau).map(|(_, w)| w).sum();
        den.ln() - tau * e0
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("tau must be finite and non-negative (got {tau})")))
    }
}

pub fn enumerate_ground_state(g: &RegularGraph, j: f64) -> Result<GroundStateReport> {
    Ok(CutSpectrum::enumerate(g, j)?.ground_state())
}

pub fn enumerate_thermal_energy(g: &RegularGraph, j: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(CutSpectrum::enumerate(g, j)?.thermal_energy(tau))
}

/// Settings for [`sa_estimate_ground_state`]. Temperatures are in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingParams {
    pub restarts: usize,
    pub sweeps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub seed: u64,
}

impl Default for AnnealingParams {
    fn default() -> Self {
        Self { restarts: 64, sweeps: 1000, t_start: 3.0, t_end: 0.05, seed: 0 }
    }
}

/// Best energy over independent single-spin-flip Metropolis runs with a
/// geometric cooling schedule. An upper bound on the true ground energy.
pub fn sa_estimate_ground_state(g: &RegularGraph, j: f64, params: AnnealingParams) -> Result<GroundStateReport> {
    if params.restarts == 0 || params.sweeps == 0 {
        return Err(invalid("annealing needs at least one restart and one sweep"));
    }
    if !(params.t_start > 0.0 && params.t_end > 0.0) {
        return Err(invalid("annealing temperatures must be positive"));
    }
    let (energy_units, code) = (0..params.restarts)
        .into_par_iter()
        .map(|r| anneal_once(g, params, r as u64))
        .min_by(|a, b| a.cmp(b))
        .expect("restarts >= 1");
    let assignment = SpinAssignment::from_code_vec(&code, g.n());
    let energy = config_energy(g, &assignment, j)?;
    debug_assert_eq!(energy, j * energy_units as f64);
    Ok(GroundStateReport { energy, assignment, degeneracy: None, method: OracleMethod::Annealing })
}

/// One annealing run; returns the best energy in units of `J` and its
/// configuration as a bit vector packed into words.
fn anneal_once(g: &RegularGraph, p: AnnealingParams, restart: u64) -> (i64, Vec<u64>) {
    let n = g.n();
    let mut rng = trajectory_stream(p.seed, restart);
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut energy: i64 = g.edges().iter().map(|&(a, b)| (s[a] * s[b]) as i64).sum();
    let mut best = (energy, s.clone());
    let ratio = if p.sweeps > 1 { (p.t_end / p.t_start).powf(1.0 / (p.sweeps - 1) as f64) } else { 1.0 };
    let mut t = p.t_start;
    // acceptance probabilities for ΔE ∈ {2, 4, ..., 2·degree}
    let max_de = 2 * g.degree();
    let mut accept = vec![0.0; max_de + 1];
    for _ in 0..p.sweeps {
        for (de, a) in accept.iter_mut().enumerate() {
            *a = (-(de as f64) / t).exp();
        }
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let field: i64 = g.neighbors(i).iter().map(|&k| s[k] as i64).sum();
            let de = -2 * s[i] as i64 * field;
            if de <= 0 || rng.random::<f64>() < accept[de as usize] {
                s[i] = -s[i];
                energy += de;
                if energy < best.0 {
                    best = (energy, s.clone());
                }
            }
        }
        t *= ratio;
    }
    let mut words = vec![0u64; n.div_ceil(64)];
    for (i, &x) in best.1.iter().enumerate() {
        if x < 0 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    (best.0, words)
}

// ---------------------------------------------------------------------------
// Exact diagonalization of the TFIM

/// Full spectrum of a small TFIM instance (unshifted Hamiltonian), with the
/// diagonal `M²` expectation of every eigenvector, `M = (1/N) Σ σ^z`.
///
/// The global spin flip `Π σ^x` commutes with `H` and `M²`, so the Hilbert
/// space is split into its two parity sectors before diagonalizing.
#[derive(Debug, Clone)]
pub struct TfimSpectrum {
    energies: Vec<f64>,
    m_sq: Vec<f64>,
}

impl TfimSpectrum {
    pub fn new(model: &TfimModel) -> Result<Self> {
        let lattice = model.lattice();
        let n = lattice.n_sites();
        if n > MAX_ED_SPINS {
            return Err(Error::TooLarge {
                what: "exact diagonalization",
                n,
                limit: MAX_ED_SPINS,
                hint: "use the stochastic simulation for larger lattices",
            });
        }
        let bonds = lattice.bonds();
        let (j, h) = (model.coupling(), model.field());
        let mask = (1usize << n) - 1;
        let top = 1usize << (n - 1);
        let dim = top;
        let z = |code: usize, i: usize| if (code >> i) & 1 == 0 { 1.0 } else { -1.0 };
        let diag: Vec<f64> = (0..dim)
            .map(|r| -j * bonds.iter().map(|&(a, b)| z(r, a) * z(r, b)).sum::<f64>())
            .collect();
        let msq: Vec<f64> = (0..dim)
            .map(|r| {
                let m = (0..n).map(|i| z(r, i)).sum::<f64>() / n as f64;
                m * m
            })
            .collect();
        let mut energies = Vec::with_capacity(2 * dim);
        let mut m_sq = Vec::with_capacity(2 * dim);
        for parity in [1.0, -1.0] {
            let mut hm = DMatrix::<f64>::zeros(dim, dim);
            for r in 0..dim {
                hm[(r, r)] += diag[r];
                for i in 0..n {
                    let t = r ^ (1 << i);
                    let (rep, sign) = if t & top == 0 { (t, 1.0) } else { (t ^ mask, parity) };
                    hm[(rep, r)] -= h * sign;
                }
            }
            let eig = SymmetricEigen::new(hm);
            for (k, &e) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(k);
                energies.push(e);
                m_sq.push(v.iter().zip(&msq).map(|(c, m)| c * c * m).sum());
            }
        }
        Ok(Self { energies, m_sq })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `(⟨H⟩, ⟨M²⟩)` in the Gibbs state at inverse temperature `tau`.
    pub fn thermal(&self, tau: f64) -> (f64, f64) {
        let e0 = self.ground_energy();
        let (mut z, mut e, mut m) = (0.0, 0.0, 0.0);
        for (&ek, &mk) in self.energies.iter().zip(&self.m_sq) {
            let w = (-tau * (ek - e0)).exp();
            z += w;
            e += w * ek;
            m += w * mk;
        }
        (e / z, m / z)
    }
}

pub fn ed_thermal_tfim(model: &TfimModel, tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    Ok(TfimSpectrum::new(model)?.thermal(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::generate_random_regular;
    use crate::models::{Boundary, LatticeSpec};
    use approx::assert_abs_diff_eq;

    fn k33() -> RegularGraph {
        let edges: Vec<_> = (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect();
        RegularGraph::from_edges(6, &edges).unwrap()
    }

    fn prism() -> RegularGraph {
        RegularGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)])
            .unwrap()
    }

    /// Direct loop over all codes, independent of the Gray-code walk.
    fn brute_force(g: &RegularGraph) -> Vec<f64> {
        (0..1u64 << g.n()).map(|c| config_energy(g, &SpinAssignment::from_code(c, g.n()), 1.0).unwrap()).collect()
    }

    #[test]
    fn small_ground_states() {
        let k4 = enumerate_ground_state(&RegularGraph::k4(), 1.0).unwrap();
        assert_eq!((k4.energy, k4.degeneracy), (-2.0, Some(6)));
        assert_eq!(enumerate_ground_state(&k33(), 1.0).unwrap().energy, -9.0);
        assert_eq!(enumerate_ground_state(&k33(), 1.0).unwrap().degeneracy, Some(2));
        assert_eq!(enumerate_ground_state(&prism(), 1.0).unwrap().energy, -5.0);
    }

    #[test]
    fn gray_code_matches_brute_force() {
        for seed in 0..5 {
            let g = generate_random_regular(12, 3, seed).unwrap();
            let energies = brute_force(&g);
            let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = energies.iter().position(|&e| e == e0).unwrap() as u64;
            let report = enumerate_ground_state(&g, 1.0).unwrap();
            assert_eq!(report.energy, e0);
            assert_eq!(report.degeneracy, Some(energies.iter().filter(|&&e| e == e0).count() as u64));
            assert_eq!(report.assignment.code(), first);
            assert_eq!(config_energy(&g, &report.assignment, 1.0).unwrap(), report.energy);
            let spectrum = CutSpectrum::enumerate(&g, 1.0).unwrap();
            for tau in [0.3, 1.7] {
                let (num, den) = energies
                    .iter()
                    .fold((0.0, 0.0), |(n, d), &e| (n + e * (-tau * e).exp(), d + (-tau * e).exp()));
                assert_abs_diff_eq!(spectrum.thermal_energy(tau), num / den, epsilon = 1e-10);
                assert_abs_diff_eq!(spectrum.log_partition(tau), den.ln(), epsilon = 1e-10);
            }
            // parity of E/J relative to 3N/2
            assert_eq!((report.energy as i64 - 18).rem_euclid(2), 0);
        }
    }

    #[test]
    fn thermal_energy_examples() {
        let k4 = RegularGraph::k4();
        assert_abs_diff_eq!(enumerate_thermal_energy(&k4, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-14);
        let e = std::f64::consts::E;
        let closed = (2.0 * 6.0 * e.powi(-6) - 12.0 * e * e) / (2.0 * e.powi(-6) + 8.0 + 6.0 * e * e);
        let value = enumerate_thermal_energy(&k4, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(value, closed, epsilon = 1e-12);
        assert_abs_diff_eq!(value, -1.6936, epsilon = 1e-4);
        assert_abs_diff_eq!(enumerate_thermal_energy(&k4, 1.0, 60.0).unwrap(), -2.0, epsilon = 1e-12);
        assert!(enumerate_thermal_energy(&k4, 1.0, -1.0).is_err());
    }

    #[test]
    fn enumeration_size_guard() {
        let g = generate_random_regular(28, 3, 0).unwrap();
        assert!(matches!(enumerate_ground_state(&g, 1.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn annealing_small_graphs() {
        let r = sa_estimate_ground_state(&RegularGraph::k4(), 1.0, AnnealingParams::default()).unwrap();
        assert_eq!(r.energy, -2.0);
        assert_eq!(r.method, OracleMethod::Annealing);
        let g = generate_random_regular(16, 3, 3).unwrap();
        let params = AnnealingParams { seed: 5, ..Default::default() };
        let a = sa_estimate_ground_state(&g, 1.0, params).unwrap();
        assert_eq!(a, sa_estimate_ground_state(&g, 1.0, params).unwrap());
        assert_eq!(config_energy(&g, &a.assignment, 1.0).unwrap(), a.energy);
        assert!(a.energy >= enumerate_ground_state(&g, 1.0).unwrap().energy);
        assert!(sa_estimate_ground_state(&g, 1.0, AnnealingParams { restarts: 0, ..params }).is_err());
    }

    #[test]
    fn ed_limits() {
        let chain = |h| TfimModel::new(LatticeSpec::chain(6, Boundary::Periodic).unwrap(), 1.0, h).unwrap();
        let (_, m) = ed_thermal_tfim(&chain(0.0), 40.0).unwrap();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-10);
        let free = TfimModel::new(LatticeSpec::chain(6, Boundary::Periodic).unwrap(), 0.0, 1.0).unwrap();
        let (e, m) = ed_thermal_tfim(&free, 40.0).unwrap();
        assert_abs_diff_eq!(m, 1.0 / 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e, -6.0, epsilon = 1e-10);
        let (e0, _) = ed_thermal_tfim(&chain(0.7), 0.0).unwrap();
        assert_abs_diff_eq!(e0, 0.0, epsilon = 1e-12);
        let big = TfimModel::new(LatticeSpec::chain(13, Boundary::Periodic).unwrap(), 1.0, 1.0).unwrap();
        assert!(matches!(ed_thermal_tfim(&big, 1.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn ed_single_spin() {
        let m = TfimModel::new(LatticeSpec::single_site(), 0.0, 0.8).unwrap();
        let spectrum = TfimSpectrum::new(&m).unwrap();
        let mut e = spectrum.energies().to_vec();
        e.sort_by(f64::total_cmp);
        assert_eq!(e.len(), 2);
        assert_abs_diff_eq!(e[0], -0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 0.8, epsilon = 1e-14);
        let (energy, m_sq) = spectrum.thermal(1.3);
        assert_abs_diff_eq!(energy, -0.8 * (0.8f64 * 1.3).tanh(), epsilon = 1e-14);
        assert_abs_diff_eq!(m_sq, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ed_two_site_open_chain_regression() {
        let m = TfimModel::new(LatticeSpec::chain(2, Boundary::Open).unwrap(), 1.0, 1.0).unwrap();
        let (e, m_sq) = ed_thermal_tfim(&m, 0.5).unwrap();
        assert_abs_diff_eq!(e, -1.26766928404253, epsilon = 1e-12);
        assert_abs_diff_eq!(m_sq, 0.700667942914553, epsilon = 1e-12);
        let (e, m_sq) = ed_thermal_tfim(&m, 2.0).unwrap();
        assert_abs_diff_eq!(e, -2.1348639107859744, epsilon = 1e-12);
        assert_abs_diff_eq!(m_sq, 0.7440028916262171, epsilon = 1e-12);
    }

    #[test]
    fn ed_energy_is_monotone_in_tau() {
        let m = TfimModel::new(LatticeSpec::square(2, 3, Boundary::Open).unwrap(), 1.0, 1.4).unwrap();
        let spectrum = TfimSpectrum::new(&m).unwrap();
        let energies: Vec<f64> = (0..60).map(|k| spectrum.thermal(0.1 * k as f64).0).collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

//! Euler–Maruyama integration of trajectory ensembles in imaginary time.
//!
//! Every trajectory starts from the fully mixed state and carries a log-weight
//! `L = -∫ ℋ(Ω(τ')) dτ'`, accumulated with the left-endpoint rule (the energy
//! of the pre-step state) to match the Itô convention of the update. Expectation
//! values at inverse temperature τ are ratios of weighted trajectory averages,
//! so any constant common to all log-weights cancels.
//!
//! Trajectories are independent between snapshots and each owns its own
//! counter-based random stream, so results depend only on the model and the
//! schedule, never on the number of worker threads.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::models::ItwaModel;
use crate::phasespace::{fill_fully_mixed, SpinEnsembleState};
use crate::rng::{trajectory_stream, TrajectoryRng};

/// Default step size in units of `1/J`.
pub const DEFAULT_D_TAU: f64 = 1e-3;

const GRID_TOL: f64 = 1e-12;

/// Step size, output times, ensemble size and seed of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    d_tau: f64,
    snapshot_taus: Vec<f64>,
    n_traj: usize,
    seed: u64,
}

impl Schedule {
    pub fn new(d_tau: f64, snapshot_taus: Vec<f64>, n_traj: usize, seed: u64) -> Result<Self> {
        if !(d_tau > 0.0 && d_tau.is_finite()) {
            return Err(invalid(format!("d_tau must be positive (got {d_tau})")));
        }
        if n_traj == 0 {
            return Err(invalid("n_traj must be at least 1"));
        }
        if snapshot_taus.is_empty() {
            return Err(invalid("at least one snapshot time is required"));
        }
        if snapshot_taus.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(invalid("snapshot times must be finite and non-negative"));
        }
        if snapshot_taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("snapshot times must be strictly increasing"));
        }
        for &t in &snapshot_taus {
            let steps = t / d_tau;
            if (steps - steps.round()).abs() > GRID_TOL * steps.max(1.0) {
                return Err(invalid(format!("snapshot time {t} is not a multiple of d_tau = {d_tau}")));
            }
        }
        Ok(Self { d_tau, snapshot_taus, n_traj, seed })
    }

    /// Snapshots at `0, every, 2·every, …` up to and including `tau_max`.
    pub fn uniform(d_tau: f64, tau_max: f64, every: f64, n_traj: usize, seed: u64) -> Result<Self> {
        if every.is_nan() || every <= 0.0 {
            return Err(invalid("snapshot spacing must be positive"));
        }
        let count = (tau_max / every + 1e-9).floor() as usize;
        Self::new(d_tau, (0..=count).map(|i| i as f64 * every).collect(), n_traj, seed)
    }

    pub fn d_tau(&self) -> f64 {
        self.d_tau
    }

    pub fn snapshot_taus(&self) -> &[f64] {
        &self.snapshot_taus
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Step counts at which snapshots are taken.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_taus.iter().map(|t| (t / self.d_tau).round() as usize).collect()
    }

    /// The same schedule with half the step size.
    pub fn halved(&self) -> Self {
        Self { d_tau: self.d_tau / 2.0, ..self.clone() }
    }
}

/// The ensemble at one inverse temperature.
///
/// `log_weights` are stabilized so that the largest valid entry is zero;
/// `log_weight_offset` is the constant that was subtracted, so
/// `log_weights[k] + log_weight_offset` is the accumulated `-∫ℋ dτ'`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSnapshot {
    pub tau: f64,
    pub state: SpinEnsembleState,
    pub log_weights: Vec<f64>,
    pub log_weight_offset: f64,
    pub valid: Vec<bool>,
}

impl WeightedSnapshot {
    pub fn n_traj(&self) -> usize {
        self.valid.len()
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Indices of trajectories that stayed finite.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter(|(_, &v)| v).map(|(k, _)| k)
    }

    pub fn valid_log_weights(&self) -> Vec<f64> {
        self.valid_indices().map(|k| self.log_weights[k]).collect()
    }

    /// Evaluates a per-trajectory function `f(θ, φ)` on every valid trajectory.
    pub fn per_trajectory<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &[f64]) -> f64,
    {
        self.valid_indices().map(|k| f(self.state.theta(k), self.state.phi(k))).collect()
    }
}

/// A running trajectory ensemble.
#[derive(Debug, Clone)]
pub struct Ensemble {
    state: SpinEnsembleState,
    log_weights: Vec<f64>,
    valid: Vec<bool>,
    rngs: Vec<TrajectoryRng>,
    steps: usize,
}

impl Ensemble {
    /// `n_traj` trajectories drawn from the fully mixed state; trajectory `k`
    /// uses random stream `k` of `seed` for both its initial point and its noise.
    pub fn fully_mixed(n_spins: usize, n_traj: usize, seed: u64) -> Result<Self> {
        if n_spins == 0 || n_traj == 0 {
            return Err(invalid("n_spins and n_traj must be at least 1"));
        }
        let mut rngs: Vec<TrajectoryRng> = (0..n_traj as u64).map(|k| trajectory_stream(seed, k)).collect();
        let mut theta = vec![0.0; n_spins * n_traj];
        let mut phi = vec![0.0; n_spins * n_traj];
        for ((t, p), rng) in theta.chunks_mut(n_spins).zip(phi.chunks_mut(n_spins)).zip(rngs.iter_mut()) {
            fill_fully_mixed(t, p, rng);
        }
        Ok(Self {
            state: SpinEnsembleState::new(n_spins, theta, phi)?,
            log_weights: vec![0.0; n_traj],
            valid: vec![true; n_traj],
            rngs,
            steps: 0,
        })
    }

    /// Continues from an existing snapshot with fresh streams `(seed, k)`.
    pub fn from_snapshot(snapshot: &WeightedSnapshot, seed: u64) -> Self {
        let n_traj = snapshot.n_traj();
        Self {
            state: snapshot.state.clone(),
            log_weights: snapshot.log_weights.iter().map(|l| l + snapshot.log_weight_offset).collect(),
            valid: snapshot.valid.clone(),
            rngs: (0..n_traj as u64).map(|k| trajectory_stream(seed, k)).collect(),
            steps: 0,
        }
    }

    pub fn state(&self) -> &SpinEnsembleState {
        &self.state
    }

    /// Unstabilized accumulated log-weights.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }

    /// Advances every valid trajectory by `steps` steps. Trajectories whose
    /// angles or weight become non-finite are flagged and frozen. Returns the
    /// number of trajectories newly flagged.
    pub fn advance(&mut self, model: &dyn ItwaModel, steps: usize, d_tau: f64) -> Result<usize> {
        let n = self.state.n_spins();
        if model.n_spins() != n {
            return Err(Error::SizeMismatch { expected: model.n_spins(), found: n });
        }
        if !(d_tau > 0.0 && d_tau.is_finite()) {
            return Err(invalid(format!("d_tau must be positive (got {d_tau})")));
        }
        let before = self.invalid_count();
        let (theta, phi) = self.state.arrays_mut();
        theta
            .par_chunks_mut(n)
            .zip(phi.par_chunks_mut(n))
            .zip(self.log_weights.par_iter_mut())
            .zip(self.valid.par_iter_mut())
            .zip(self.rngs.par_iter_mut())
            .for_each(|((((t, p), lw), ok), rng)| {
                if !*ok {
                    return;
                }
                model.advance(t, p, lw, steps, d_tau, rng);
                if !(lw.is_finite() && t.iter().chain(p.iter()).all(|x| x.is_finite())) {
                    *ok = false;
                }
            });
        self.steps += steps;
        Ok(self.invalid_count() - before)
    }

    /// One Euler–Maruyama step.
    pub fn step(&mut self, model: &dyn ItwaModel, d_tau: f64) -> Result<usize> {
        self.advance(model, 1, d_tau)
    }

    /// Copies the current ensemble into a snapshot with max-stabilized weights.
    pub fn snapshot(&self, tau: f64) -> Result<WeightedSnapshot> {
        let offset = self
            .log_weights
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        if offset == f64::NEG_INFINITY {
            return Err(Error::AllTrajectoriesInvalid(self.valid.len()));
        }
        let log_weights = self
            .log_weights
            .iter()
            .zip(&self.valid)
            .map(|(&l, &v)| if v { l - offset } else { f64::NEG_INFINITY })
            .collect();
        Ok(WeightedSnapshot {
            tau,
            state: self.state.clone(),
            log_weights,
            log_weight_offset: offset,
            valid: self.valid.clone(),
        })
    }
}

/// One step applied to a snapshot, with caller-supplied per-trajectory streams.
pub fn step(
    snapshot: &WeightedSnapshot,
    model: &dyn ItwaModel,
    d_tau: f64,
    rngs: &mut [TrajectoryRng],
) -> Result<WeightedSnapshot> {
    if rngs.len() != snapshot.n_traj() {
        return Err(invalid(format!(
            "{} random streams supplied for {} trajectories",
            rngs.len(),
            snapshot.n_traj()
        )));
    }
    let mut ens = Ensemble::from_snapshot(snapshot, 0);
    ens.rngs = rngs.to_vec();
    ens.step(model, d_tau)?;
    rngs.clone_from_slice(&ens.rngs);
    ens.snapshot(snapshot.tau + d_tau)
}

/// Snapshots of a full run plus its invalid-trajectory count.
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub snapshots: Vec<WeightedSnapshot>,
    pub invalid_trajectories: usize,
    pub n_traj: usize,
}

impl EvolveOutput {
    pub fn invalid_fraction(&self) -> f64 {
        self.invalid_trajectories as f64 / self.n_traj as f64
    }
}

/// Integrates a fresh fully mixed ensemble through the schedule, emitting a
/// snapshot at every requested time.
pub fn evolve(model: &dyn ItwaModel, schedule: &Schedule) -> Result<EvolveOutput> {
    let mut snapshots = Vec::with_capacity(schedule.snapshot_taus.len());
    let invalid_trajectories = evolve_each(model, schedule, |snap| {
        snapshots.push(snap);
        Ok(())
    })?;
    Ok(EvolveOutput { snapshots, invalid_trajectories, n_traj: schedule.n_traj })
}

/// Streaming form of [`evolve`]: each snapshot is handed to `visit` as soon
/// as it is taken and not retained. Returns the invalid-trajectory count.
pub fn evolve_each<F>(model: &dyn ItwaModel, schedule: &Schedule, mut visit: F) -> Result<usize>
where
    F: FnMut(WeightedSnapshot) -> Result<()>,
{
    let mut ens = Ensemble::fully_mixed(model.n_spins(), schedule.n_traj, schedule.seed)?;
    for (&target, &tau) in schedule.snapshot_steps().iter().zip(&schedule.snapshot_taus) {
        ens.advance(model, target - ens.steps, schedule.d_tau)?;
        visit(ens.snapshot(tau)?)?;
    }
    Ok(ens.invalid_count())
}

/// [`evolve`] on a dedicated pool of `threads` workers (`None` uses the
/// global pool). The output does not depend on the worker count.
pub fn evolve_with_threads(model: &dyn ItwaModel, schedule: &Schedule, threads: Option<usize>) -> Result<EvolveOutput> {
    match threads {
        None => evolve(model, schedule),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
            pool.install(|| evolve(model, schedule))
        }
    }
}

/// Wraps a model and adds a constant `shift` to its Weyl energy. Observables
/// computed as weight ratios are unaffected; only the partition-function
/// ratio changes, by `-shift·τ`.
#[derive(Debug, Clone)]
pub struct EnergyShift<M> {
    pub inner: M,
    pub shift: f64,
}

impl<M: ItwaModel> ItwaModel for EnergyShift<M> {
    fn n_spins(&self) -> usize {
        self.inner.n_spins()
    }

    fn weight_energy(&self, theta: &[f64], phi: &[f64]) -> f64 {
        self.inner.weight_energy(theta, phi) + self.shift
    }

    fn energy_offset(&self) -> f64 {
        self.inner.energy_offset() - self.shift
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
        self.inner.advance(theta, phi, log_weight, steps, d_tau, rng);
        *log_weight -= self.shift * d_tau * steps as f64;
    }
}

//! Reweighted ensemble estimators.
//!
//! A canonical expectation value is the ratio `Σ_k A_k w_k / Σ_k w_k` with
//! trajectory weights `w_k = exp(L_k)`. All ratio estimators here subtract
//! `max L` before exponentiating, so a common shift of the log-weights never
//! changes a result; `log_partition_ratio` is the one quantity that depends
//! on the absolute weights and reads them from the snapshot offset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::ItwaModel;
use crate::phasespace::SQRT_3;
use crate::sde::WeightedSnapshot;

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = Sum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Normalized weights `exp(L_k - max L)`.
fn stabilized_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::Estimator("empty input"));
    }
    if log_weights.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::Estimator("log-weights must be finite or -inf"));
    }
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Estimator("all weights are zero"));
    }
    Ok(log_weights.iter().map(|l| (l - max).exp()).collect())
}

fn check_values(values: &[f64], log_weights: &[f64]) -> Result<()> {
    if values.len() != log_weights.len() {
        return Err(Error::Estimator("values and log-weights differ in length"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimator("non-finite value"));
    }
    Ok(())
}

/// `Σ v_k w_k / Σ w_k`.
pub fn reweighted_mean(values: &[f64], log_weights: &[f64]) -> Result<f64> {
    check_values(values, log_weights)?;
    let w = stabilized_weights(log_weights)?;
    let num = compensated(values.iter().zip(&w).map(|(v, w)| v * w));
    Ok(num / compensated(w.iter().copied()))
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn effective_sample_size(log_weights: &[f64]) -> Result<f64> {
    let w = stabilized_weights(log_weights)?;
    let s = compensated(w.iter().copied());
    Ok(s * s / compensated(w.iter().map(|x| x * x)))
}

/// Leave-one-out jackknife standard deviation of [`reweighted_mean`].
pub fn jackknife_error(values: &[f64], log_weights: &[f64]) -> Result<f64> {
    check_values(values, log_weights)?;
    let n = values.len();
    if n < 2 {
        return Err(Error::Estimator("jackknife needs at least two samples"));
    }
    let w = stabilized_weights(log_weights)?;
    // Leave-one-out sums from prefix and suffix sums avoid the cancellation in
    // `total - w_i` when one weight dominates.
    let mut pre_w = vec![0.0; n + 1];
    let mut pre_vw = vec![0.0; n + 1];
    for i in 0..n {
        pre_w[i + 1] = pre_w[i] + w[i];
        pre_vw[i + 1] = pre_vw[i] + w[i] * values[i];
    }
    let mut suf_w = 0.0;
    let mut suf_vw = 0.0;
    let mut loo = vec![0.0; n];
    for i in (0..n).rev() {
        let den = pre_w[i] + suf_w;
        if den <= 0.0 {
            return Err(Error::Estimator("jackknife undefined: one trajectory carries all the weight"));
        }
        loo[i] = (pre_vw[i] + suf_vw) / den;
        suf_w += w[i];
        suf_vw += w[i] * values[i];
    }
    let mean = compensated(loo.iter().copied()) / n as f64;
    let ss = compensated(loo.iter().map(|m| (m - mean) * (m - mean)));
    Ok(((n as f64 - 1.0) / n as f64 * ss).sqrt())
}

/// Bootstrap standard deviation of [`reweighted_mean`] from `resamples`
/// resamples with replacement. Offered as a cross-check of the jackknife.
pub fn bootstrap_error(values: &[f64], log_weights: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    check_values(values, log_weights)?;
    if resamples < 2 {
        return Err(Error::Estimator("bootstrap needs at least two resamples"));
    }
    let w = stabilized_weights(log_weights)?;
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reps = Vec::with_capacity(resamples);
    while reps.len() < resamples {
        let mut num = Sum::default();
        let mut den = Sum::default();
        for _ in 0..n {
            let k = rng.random_range(0..n);
            num.add(values[k] * w[k]);
            den.add(w[k]);
        }
        if den.value() > 0.0 {
            reps.push(num.value() / den.value());
        }
    }
    let mean = compensated(reps.iter().copied()) / resamples as f64;
    let var = compensated(reps.iter().map(|r| (r - mean) * (r - mean))) / (resamples as f64 - 1.0);
    Ok(var.sqrt())
}

/// How the error bar of a ratio estimate is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMethod {
    #[default]
    Jackknife,
    Bootstrap {
        resamples: usize,
        seed: u64,
    },
}

/// A reweighted estimate with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub ess: f64,
    pub n_traj: usize,
}

pub fn estimate(values: &[f64], log_weights: &[f64]) -> Result<Estimate> {
    estimate_with(values, log_weights, ErrorMethod::Jackknife)
}

pub fn estimate_with(values: &[f64], log_weights: &[f64], method: ErrorMethod) -> Result<Estimate> {
    let value = reweighted_mean(values, log_weights)?;
    let stderr = match method {
        ErrorMethod::Jackknife => jackknife_error(values, log_weights)?,
        ErrorMethod::Bootstrap { resamples, seed } => bootstrap_error(values, log_weights, resamples, seed)?,
    };
    Ok(Estimate { value, stderr, ess: effective_sample_size(log_weights)?, n_traj: values.len() })
}

/// Estimates the snapshot average of a per-trajectory function `f(θ, φ)`.
pub fn observable<F>(snapshot: &WeightedSnapshot, f: F) -> Result<Estimate>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    estimate(&snapshot.per_trajectory(f), &snapshot.valid_log_weights())
}

/// `⟨H⟩` of the physical Hamiltonian (model shifts added back).
pub fn energy_observable(model: &dyn ItwaModel, snapshot: &WeightedSnapshot) -> Result<Estimate> {
    if model.n_spins() != snapshot.state.n_spins() {
        return Err(Error::SizeMismatch { expected: model.n_spins(), found: snapshot.state.n_spins() });
    }
    let offset = model.energy_offset();
    observable(snapshot, |t, p| model.weight_energy(t, p) + offset)
}

/// Per-trajectory symbol of `m² = (N + Σ_{i≠j} σ^z_i σ^z_j) / N²`.
pub fn magnetization_sq_symbol(theta: &[f64]) -> f64 {
    let n = theta.len() as f64;
    let (sum, sum_sq) = theta.iter().fold((0.0, 0.0), |(s, q), t| {
        let c = t.cos();
        (s + c, q + c * c)
    });
    (n + 3.0 * (sum * sum - sum_sq)) / (n * n)
}

pub fn magnetization_sq(snapshot: &WeightedSnapshot) -> Result<Estimate> {
    observable(snapshot, |t, _| magnetization_sq_symbol(t))
}

/// Spin-averaged `⟨σ^x⟩`.
pub fn transverse_magnetization(snapshot: &WeightedSnapshot) -> Result<Estimate> {
    observable(snapshot, |t, p| {
        SQRT_3 * t.iter().zip(p).map(|(t, p)| t.sin() * p.cos()).sum::<f64>() / t.len() as f64
    })
}

/// Estimate of `log(Z(τ)/Z(0))` as the log of the mean absolute weight.
pub fn log_partition_ratio(snapshot: &WeightedSnapshot) -> Result<f64> {
    let lw = snapshot.valid_log_weights();
    let w = stabilized_weights(&lw)?;
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = compensated(w.iter().copied()) / w.len() as f64;
    Ok(snapshot.log_weight_offset + max + mean.ln())
}

/// One row of an observable time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub tau: f64,
    pub value: f64,
    pub stderr: f64,
    pub ess: f64,
    pub n_traj: usize,
}

/// Rows of one observable on a strictly increasing τ grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    rows: Vec<SeriesRow>,
}

impl ObservableSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: SeriesRow) -> Result<()> {
        if self.rows.last().is_some_and(|last| row.tau <= last.tau) {
            return Err(Error::Estimator("series rows must have strictly increasing tau"));
        }
        if row.stderr.is_nan() || row.stderr < 0.0 {
            return Err(Error::Estimator("stderr must be non-negative"));
        }
        if !(row.ess > 0.0 && row.ess <= row.n_traj as f64 * (1.0 + 1e-12)) {
            return Err(Error::Estimator("ess must lie in (0, n_traj]"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_estimate(&mut self, tau: f64, e: Estimate) -> Result<()> {
        self.push(SeriesRow { tau, value: e.value, stderr: e.stderr, ess: e.ess, n_traj: e.n_traj })
    }

    pub fn rows(&self) -> &[SeriesRow] {
        &self.rows
    }
}

/// Mean of the rows with `tau` in `[tau_min, tau_max]`. The error bar is the
/// larger of the mean row stderr (rows from one run are correlated) and the
/// standard error of the scatter across rows.
pub fn window_average(series: &ObservableSeries, tau_min: f64, tau_max: f64) -> Result<(f64, f64)> {
    let eps = 1e-9 * tau_max.abs().max(1.0);
    let rows: Vec<&SeriesRow> =
        series.rows.iter().filter(|r| r.tau >= tau_min - eps && r.tau <= tau_max + eps).collect();
    if rows.is_empty() {
        return Err(Error::Estimator("averaging window contains no rows"));
    }
    let n = rows.len() as f64;
    let mean = compensated(rows.iter().map(|r| r.value)) / n;
    let propagated = compensated(rows.iter().map(|r| r.stderr)) / n;
    let scatter = if rows.len() > 1 {
        (compensated(rows.iter().map(|r| (r.value - mean).powi(2))) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, propagated.max(scatter)))
}

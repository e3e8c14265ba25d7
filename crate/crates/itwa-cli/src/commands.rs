use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use itwa::estimators::{
    energy_observable, magnetization_sq, transverse_magnetization, window_average, Estimate, ObservableSeries,
};
use itwa::graphs::{generate_random_regular, serialize_graph};
use itwa::oracles::{sa_estimate_ground_state, AnnealingParams, CutSpectrum, TfimSpectrum};
use itwa::sde::{evolve_each, WeightedSnapshot};
use serde::{Deserialize, Serialize};

use crate::config::{BuiltModel, ModelConfig, Observable, RunConfig};
use crate::error::{validation, CliError, CliResult};

pub const CSV_HEADER: &str = "tau,observable,value,stderr,ess,n_traj";

pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(CliError::io(p)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_graph(n: usize, k: usize, seed: u64) -> CliResult<(String, usize)> {
    let g = generate_random_regular(n, k, seed).map_err(|e| validation(format!("--n/--k: {e}")))?;
    Ok((serialize_graph(&g), g.edges().len()))
}

fn measure(model: &BuiltModel, obs: Observable, snap: &WeightedSnapshot) -> itwa::Result<Estimate> {
    match obs {
        Observable::Energy => energy_observable(model.as_dyn(), snap),
        Observable::M2 => magnetization_sq(snap),
        Observable::Sx => transverse_magnetization(snap),
    }
}

/// Result of a simulation run: estimates per observable, in snapshot order.
pub struct RunOutput {
    pub series: Vec<(Observable, ObservableSeries)>,
    pub relative_error: Option<ObservableSeries>,
    pub invalid_trajectories: usize,
}

pub fn execute_run(cfg: &RunConfig) -> CliResult<RunOutput> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let schedule = cfg.schedule()?;
    let mut series: Vec<(Observable, ObservableSeries)> =
        cfg.observables.iter().map(|&o| (o, ObservableSeries::new())).collect();
    let mut relative = cfg.e0.map(|_| ObservableSeries::new());
    let invalid = evolve_each(model.as_dyn(), &schedule, |snap| {
        for (obs, s) in series.iter_mut() {
            s.push_estimate(snap.tau, measure(&model, *obs, &snap)?)?;
        }
        if let (Some(rel), Some(e0)) = (relative.as_mut(), cfg.e0) {
            let e = energy_observable(model.as_dyn(), &snap)?;
            rel.push_estimate(
                snap.tau,
                Estimate { value: (e.value - e0) / e0.abs(), stderr: e.stderr / e0.abs(), ..e },
            )?;
        }
        Ok(())
    })?;
    let fraction = invalid as f64 / cfg.n_traj as f64;
    if fraction > cfg.invalid_tolerance {
        return Err(CliError::Numerical(format!(
            "{invalid} of {} trajectories became non-finite (tolerance {})",
            cfg.n_traj, cfg.invalid_tolerance
        )));
    }
    Ok(RunOutput { series, relative_error: relative, invalid_trajectories: invalid })
}

impl RunOutput {
    /// One row per (snapshot, observable), snapshots outermost.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let named: Vec<(&str, &ObservableSeries)> = self
            .series
            .iter()
            .map(|(o, s)| (o.name(), s))
            .chain(self.relative_error.iter().map(|s| ("rel_error", s)))
            .collect();
        let rows = named.first().map_or(0, |(_, s)| s.rows().len());
        for k in 0..rows {
            for (name, s) in &named {
                let r = s.rows()[k];
                writeln!(out, "{},{name},{},{},{},{}", num(r.tau), num(r.value), num(r.stderr), num(r.ess), r.n_traj)
                    .unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub wall_time_seconds: f64,
    pub invalid_trajectories: usize,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(config: RunConfig, invalid_trajectories: usize, started: Instant) -> Self {
        Self {
            tool: "itwa".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            invalid_trajectories,
            config,
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Manifest { path: path.into(), msg: e.to_string() })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self).map_err(|e| CliError::Manifest { path: path.into(), msg: e.to_string() })?;
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleChoice {
    /// Enumeration for graphs, exact diagonalization for lattices.
    Exact,
    /// Simulated annealing ground-state estimate (graphs only).
    Annealing,
}

pub fn cmd_oracle(model: &ModelConfig, taus: &[f64], choice: OracleChoice, anneal: AnnealingParams) -> CliResult<String> {
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(validation(format!("--taus: tau must be finite and non-negative (got {t})")));
    }
    let mut out = format!("{CSV_HEADER},method\n");
    let mut row = |tau: String, obs: &str, value: f64, method: &str| {
        writeln!(out, "{tau},{obs},{},{},n/a,n/a,{method}", num(value), num(0.0)).unwrap();
    };
    match (model.build()?, choice) {
        (BuiltModel::Ising(m), OracleChoice::Exact) => {
            let spectrum = CutSpectrum::enumerate(m.graph(), m.coupling())?;
            for &t in taus {
                row(num(t), "energy", spectrum.thermal_energy(t), "enumeration");
            }
            let ground = spectrum.ground_state();
            row("inf".into(), "ground_energy", ground.energy, "enumeration");
            row("inf".into(), "degeneracy", ground.degeneracy.unwrap_or(0) as f64, "enumeration");
        }
        (BuiltModel::Ising(m), OracleChoice::Annealing) => {
            let report = sa_estimate_ground_state(m.graph(), m.coupling(), anneal)?;
            row("inf".into(), "ground_energy", report.energy, "annealing");
        }
        (BuiltModel::Tfim(m), OracleChoice::Exact) => {
            let spectrum = TfimSpectrum::new(&m)?;
            for &t in taus {
                let (e, m_sq) = spectrum.thermal(t);
                row(num(t), "energy", e, "ed");
                row(num(t), "m2", m_sq, "ed");
            }
            row("inf".into(), "ground_energy", spectrum.ground_energy(), "ed");
        }
        (BuiltModel::Tfim(_), OracleChoice::Annealing) => {
            return Err(validation("--method annealing applies to the ising model only"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    /// Transverse field; one run per value.
    H,
    /// End of the averaging window; one run to the largest value.
    TauEnd,
}

pub struct SweepPlan {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub window: (f64, f64),
    pub observable: Observable,
}

pub fn cmd_sweep(base: &RunConfig, plan: &SweepPlan) -> CliResult<String> {
    if plan.values.is_empty() || plan.values.iter().any(|v| !v.is_finite()) {
        return Err(validation("--values: need at least one finite value"));
    }
    let (lo, hi) = plan.window;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(validation("--window: start must not exceed end"));
    }
    let last = base.taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = String::from("param,value,stderr\n");
    let mut cfg = base.clone();
    cfg.observables = vec![plan.observable];
    cfg.e0 = None;
    match plan.axis {
        SweepAxis::H => {
            if hi > last + 1e-9 {
                return Err(validation("--window must lie inside the snapshot range"));
            }
            for &h in &plan.values {
                match &mut cfg.model {
                    ModelConfig::Tfim { h: field, .. } => *field = h,
                    ModelConfig::Ising { .. } => return Err(validation("--axis h requires the tfim model")),
                }
                let run = execute_run(&cfg)?;
                let (v, se) = window_average(&run.series[0].1, lo, hi)?;
                writeln!(out, "{},{},{}", num(h), num(v), num(se)).unwrap();
            }
        }
        SweepAxis::TauEnd => {
            if plan.values.iter().any(|&t| t < lo || t > last + 1e-9) {
                return Err(validation("--values: every window end must lie between the window start and the last snapshot"));
            }
            let run = execute_run(&cfg)?;
            for &end in &plan.values {
                let (v, se) = window_average(&run.series[0].1, lo, end)?;
                writeln!(out, "{},{},{}", num(end), num(v), num(se)).unwrap();
            }
        }
    }
    Ok(out)
}

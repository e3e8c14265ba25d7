//! Run configuration, as parsed from flags or read back from a manifest.

use std::path::{Path, PathBuf};

use itwa::graphs::parse_graph;
use itwa::models::{Boundary, IsingGraphModel, ItwaModel, LatticeSpec, TfimModel};
use itwa::sde::Schedule;
use serde::{Deserialize, Serialize};

use crate::error::{validation, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Periodic,
    Open,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::Open => Boundary::Open,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Ising {
        graph: PathBuf,
        j: f64,
    },
    Tfim {
        /// Side lengths; empty for a single site.
        dims: Vec<usize>,
        boundary: BoundaryArg,
        j: f64,
        h: f64,
    },
}

pub enum BuiltModel {
    Ising(IsingGraphModel),
    Tfim(TfimModel),
}

impl BuiltModel {
    pub fn as_dyn(&self) -> &dyn ItwaModel {
        match self {
            BuiltModel::Ising(m) => m,
            BuiltModel::Tfim(m) => m,
        }
    }
}

pub fn read_graph(path: &Path) -> CliResult<itwa::graphs::RegularGraph> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_graph(&text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

impl ModelConfig {
    pub fn build(&self) -> CliResult<BuiltModel> {
        match self {
            ModelConfig::Ising { graph, j } => {
                let g = read_graph(graph)?;
                Ok(BuiltModel::Ising(
                    IsingGraphModel::new(g, *j).map_err(|e| validation(format!("--j: {e}")))?,
                ))
            }
            ModelConfig::Tfim { dims, boundary, j, h } => {
                let lattice = LatticeSpec::new(dims, (*boundary).into()).map_err(|e| validation(format!("--dims: {e}")))?;
                Ok(BuiltModel::Tfim(TfimModel::new(lattice, *j, *h).map_err(|e| validation(format!("--j/--h: {e}")))?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Energy of the physical Hamiltonian.
    Energy,
    /// Squared longitudinal magnetization per site.
    M2,
    /// Transverse magnetization per site.
    Sx,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Energy => "energy",
            Observable::M2 => "m2",
            Observable::Sx => "sx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub d_tau: f64,
    pub taus: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub observables: Vec<Observable>,
    /// Reference ground energy; adds a relative-error row per snapshot.
    pub e0: Option<f64>,
    /// Largest tolerated fraction of non-finite trajectories.
    pub invalid_tolerance: f64,
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn schedule(&self) -> CliResult<Schedule> {
        Schedule::new(self.d_tau, self.taus.clone(), self.n_traj, self.seed)
            .map_err(|e| validation(format!("schedule (--d-tau/--taus/--n-traj): {e}")))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.observables.is_empty() {
            return Err(validation("--observables: at least one observable is required"));
        }
        if !(0.0..=1.0).contains(&self.invalid_tolerance) {
            return Err(validation("--invalid-tolerance must lie in [0, 1]"));
        }
        if let Some(e0) = self.e0 {
            if !(e0.is_finite() && e0 != 0.0) {
                return Err(validation("--e0 must be finite and non-zero"));
            }
        }
        if matches!(self.model, ModelConfig::Ising { .. }) && self.observables.contains(&Observable::Sx) {
            return Err(validation("--observables: sx is only defined for the tfim model"));
        }
        self.schedule().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

/// Parses `8`, `4x4` or `site`.
pub fn parse_dims(s: &str) -> Result<Dims, String> {
    if s == "site" {
        return Ok(Dims(Vec::new()));
    }
    s.split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad side length {p:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Dims)
}

pub fn taus_from(taus: Option<Vec<f64>>, tau_max: Option<f64>, every: f64) -> CliResult<Vec<f64>> {
    match (taus, tau_max) {
        (Some(_), Some(_)) => Err(validation("--taus and --tau-max are mutually exclusive")),
        (Some(t), None) => Ok(t),
        (None, Some(max)) => {
            if every.is_nan() || every <= 0.0 || max.is_nan() || max < 0.0 {
                return Err(validation("--every must be positive and --tau-max non-negative"));
            }
            let count = (max / every + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| i as f64 * every).collect())
        }
        (None, None) => Err(validation("one of --taus or --tau-max is required")),
    }
}

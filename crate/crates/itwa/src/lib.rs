//! Imaginary-time truncated Wigner approximation (iTWA) for spin-1/2 systems.
//!
//! Thermal expectation values `Tr(A e^{-τH}) / Tr(e^{-τH})` are estimated from
//! an ensemble of classical spin trajectories. Each trajectory starts from the
//! fully mixed state (uniform on the sphere), follows a stochastic differential
//! equation in imaginary time and carries an exponential weight
//! `exp(-∫ ℋ dτ')`, where `ℋ` is the Weyl symbol of the Hamiltonian.
//! Observables are weighted averages of their Weyl symbols.
//!
//! Two models are provided: the antiferromagnetic Ising model on a regular
//! graph ([`IsingGraphModel`]) and the transverse-field Ising model on a
//! chain or square lattice ([`TfimModel`]). Exact enumeration, dense
//! diagonalization and simulated annealing live in [`oracles`].
//!
//! ```
//! use itwa::{evolve, energy_observable, IsingGraphModel, RegularGraph, Schedule};
//!
//! let model = IsingGraphModel::new(RegularGraph::k4(), 1.0)?;
//! let schedule = Schedule::uniform(1e-3, 2.0, 1.0, 2000, 7)?;
//! let run = evolve(&model, &schedule)?;
//! let e = energy_observable(&model, &run.snapshots[2])?;
//! assert!(e.value < -1.0 && e.value > -2.1);
//! # Ok::<(), itwa::Error>(())
//! ```

pub mod error;
pub mod estimators;
pub mod graphs;
pub mod models;
pub mod oracles;
pub mod phasespace;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
pub use estimators::{energy_observable, magnetization_sq, transverse_magnetization, Estimate};
pub use graphs::{generate_random_regular, RegularGraph, SpinAssignment};
pub use models::{Boundary, IsingGraphModel, ItwaModel, LatticeSpec, TfimModel};
pub use phasespace::{SpinAngles, SpinEnsembleState};
pub use sde::{evolve, Schedule, WeightedSnapshot};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/phase-space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

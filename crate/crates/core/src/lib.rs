//! Dissipative quantum annealing with the Schrödinger-Langevin-Kostin
//! equation.
//!
//! The crate covers a continuous one-dimensional model, where the friction
//! potential is proportional to the phase of the wavefunction, and the
//! discrete chain `{1, ..., s}`, where it is the cumulative sum of sines of
//! neighbouring phase differences. Both dissipate ⟨H⟩ while preserving the
//! norm, driving the state toward the ground state of the cost potential.
//!
//! Module map:
//! - [`state`]: grids, lattices, wavefunctions, inner products, polar form.
//! - [`potentials`]: the model potentials and seeded disorder.
//! - [`continuous`] / [`discrete`]: the two propagators.
//! - [`spectral`]: exact diagonalization used as a reference.
//! - [`observables`]: recorded time series.
//! - [`experiments`]: configs, presets, runs and disorder ensembles.
//! - [`output`]: CSV and manifest emission.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod experiments;
mod integrator;
pub mod observables;
pub mod output;
pub mod potentials;
pub mod spectral;
pub mod state;
pub mod tridiag;

pub use continuous::{
    energy, gaussian_packet, reconstruct_w, run_continuous, slk_step, ContinuousSolver, ReconstructedPotential,
    RunOptions, RunResult, SlkParams, Snapshot,
};
pub use discrete::{
    discrete_step, dissipation_rate, kostin_field, lattice_energy, run_discrete, sine_packet, DiscreteSlkParams,
    DiscreteSolver, KostinField, LatticeRunOptions, SinePacket,
};
pub use error::{Error, Result};
pub use experiments::{
    disorder_ensemble, run_ensemble, run_experiment, run_spectrum, EnsembleResult, ExperimentConfig, ExperimentKind,
    Manifest, Plan, Resolved, PRESETS,
};
pub use integrator::Scheme;
pub use observables::{arrival_probability, vacuum_overlap, ObservableSeries};
pub use potentials::{
    anderson_disorder, double_well, linear_tilt, toy1_ground_state, toy1_potential, DisorderSpec, DoubleWellParams,
    PotentialField, TripleGaussianGroundState,
};
pub use spectral::{
    build_hamiltonian_matrix, ground_state, propagate_linear, spectrum, LinearPropagator, SpectrumResult,
    LATTICE_HOPPING,
};
pub use state::{inner, normalize, to_density_phase, DensityPhase, Domain, Grid1D, Lattice, WaveFunction};

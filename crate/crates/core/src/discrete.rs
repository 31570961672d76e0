//! Discrete SLK dynamics on the open chain `Λ_s`:
//!
//! ```text
//! i ∂ψ(x)/∂t = −½ (ψ(x+1) + ψ(x−1)) + V(x) ψ(x) + K(x) ψ(x)
//! K(x) = β Σ_{y=2..x} sin(S(y) − S(y−1))
//! ```
//!
//! Phase differences are taken from `ψ(y)·conj(ψ(y−1))`, so no phase
//! unwrapping is involved anywhere on the lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuous::{check_nonnegative, check_positive, RunResult, Snapshot};
use crate::error::{Error, Result};
use crate::integrator::{Scheme, StepStats, Stepper};
use crate::observables::{arrival_probability, ObservableSeries};
use crate::potentials::PotentialField;
use crate::spectral::{build_hamiltonian_matrix, LATTICE_HOPPING};
use crate::state::{normalize, to_density_phase, Domain, Lattice, WaveFunction};
use crate::tridiag::SymTridiagonal;

/// Sites whose density is at or below this carry no phase information.
pub const ZERO_AMPLITUDE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSlkParams {
    pub beta: f64,
    pub dt: f64,
    pub t_max: f64,
    pub scheme: Scheme,
}

impl Default for DiscreteSlkParams {
    fn default() -> Self {
        Self {
            beta: 0.0,
            dt: 0.02,
            t_max: 400.0,
            scheme: Scheme::Midpoint,
        }
    }
}

impl DiscreteSlkParams {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("lattice.beta", self.beta)?;
        check_positive("lattice.dt", self.dt)?;
        check_nonnegative("lattice.t_max", self.t_max)
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// `√(2/(ε+1)) sin(kπx/(ε+1))` on sites `1..=ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinePacket {
    pub epsilon: usize,
    pub k: usize,
}

pub fn sine_packet(spec: &SinePacket, lattice: &Lattice) -> Result<WaveFunction> {
    let SinePacket { epsilon, k } = *spec;
    if epsilon == 0 || epsilon >= lattice.sites() {
        return Err(Error::param(
            "lattice.epsilon",
            format!("need 1 <= epsilon < s = {}, got {epsilon}", lattice.sites()),
        ));
    }
    if k == 0 || k > epsilon {
        return Err(Error::param(
            "lattice.k",
            format!("need 1 <= k <= epsilon = {epsilon}, got {k}"),
        ));
    }
    let width = (epsilon + 1) as f64;
    let coeff = (2.0 / width).sqrt();
    let values: Vec<f64> = lattice
        .labels()
        .map(|x| {
            if x <= epsilon {
                coeff * (k as f64 * std::f64::consts::PI * x as f64 / width).sin()
            } else {
                0.0
            }
        })
        .collect();
    WaveFunction::from_real(*lattice, &values)
}

/// The cumulative-sine Kostin potential, indexed by site `1..=s` as
/// `values[x - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KostinField {
    pub values: Vec<f64>,
}

/// `sin(S(y) − S(y−1))` for each bond, zero across a vanishing amplitude.
fn bond_sines(amps: &[Complex64]) -> impl Iterator<Item = f64> + '_ {
    amps.windows(2).map(|w| {
        if w[0].norm_sqr() <= ZERO_AMPLITUDE_FLOOR || w[1].norm_sqr() <= ZERO_AMPLITUDE_FLOOR {
            0.0
        } else {
            let prod = w[1] * w[0].conj();
            prod.im / prod.norm()
        }
    })
}

pub(crate) fn kostin_values(amps: &[Complex64], beta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(amps.len());
    let mut acc = 0.0;
    out.push(0.0);
    for s in bond_sines(amps) {
        acc += beta * s;
        out.push(acc);
    }
    out
}

pub fn kostin_field(psi: &WaveFunction, beta: f64) -> KostinField {
    KostinField {
        values: kostin_values(psi.amplitudes(), beta),
    }
}

/// Right-hand side of the lattice dissipation identity,
/// `−Σ √(ρ(x+1)ρ(x)) (K(x+1) − K(x)) sin(S(x+1) − S(x))`.
pub fn dissipation_rate(psi: &WaveFunction, beta: f64) -> f64 {
    let amps = psi.amplitudes();
    let k = kostin_values(amps, beta);
    -amps
        .windows(2)
        .zip(bond_sines(amps))
        .zip(k.windows(2))
        .map(|((a, s), kk)| a[0].norm() * a[1].norm() * (kk[1] - kk[0]) * s)
        .sum::<f64>()
}

/// ⟨ψ|h|ψ⟩ for the chain Hamiltonian without the Kostin term.
pub fn lattice_energy(psi: &WaveFunction, v: &PotentialField) -> f64 {
    build_hamiltonian_matrix(v, LATTICE_HOPPING).quadratic_form(psi.amplitudes())
}

fn lattice_of(domain: &Domain) -> Result<Lattice> {
    match domain {
        Domain::Lattice(l) => Ok(*l),
        Domain::Grid(_) => Err(Error::DomainMismatch("discrete dynamics need a lattice".into())),
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteSolver {
    lattice: Lattice,
    params: DiscreteSlkParams,
    hamiltonian: SymTridiagonal,
    stepper: Stepper,
}

impl DiscreteSolver {
    pub fn new(v: &PotentialField, params: DiscreteSlkParams) -> Result<Self> {
        params.validate()?;
        let lattice = lattice_of(v.domain())?;
        let hamiltonian = build_hamiltonian_matrix(v, LATTICE_HOPPING);
        let hopping = build_hamiltonian_matrix(&PotentialField::zero(lattice), LATTICE_HOPPING);
        let stepper = Stepper::new(hopping, v.values().to_vec(), params.dt, params.scheme);
        Ok(Self {
            lattice,
            params,
            hamiltonian,
            stepper,
        })
    }

    pub fn params(&self) -> &DiscreteSlkParams {
        &self.params
    }

    fn advance(&self, amps: &[Complex64]) -> (Vec<Complex64>, StepStats) {
        let beta = self.params.beta;
        if beta > 0.0 {
            self.stepper.step(amps, Some(|x: &[Complex64]| kostin_values(x, beta)))
        } else {
            self.stepper.step::<fn(&[Complex64]) -> Vec<f64>>(amps, None)
        }
    }

    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        Domain::Lattice(self.lattice).ensure_same(psi.domain())?;
        let (next, _) = self.advance(psi.amplitudes());
        if next.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite {
                step: 1,
                t: self.params.dt,
            });
        }
        normalize(&WaveFunction::new(self.lattice, next)?)
    }

    pub fn energy(&self, psi: &WaveFunction) -> f64 {
        self.hamiltonian.quadratic_form(psi.amplitudes())
    }
}

pub fn discrete_step(psi: &WaveFunction, v: &PotentialField, p: &DiscreteSlkParams) -> Result<WaveFunction> {
    DiscreteSolver::new(v, *p)?.step(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeRunOptions {
    pub record_every: usize,
    /// Density-map cadence in steps; `None` keeps only the endpoints.
    pub snapshot_every: Option<usize>,
    /// Number of rightmost sites counted by the arrival probability.
    pub delta: usize,
}

pub fn run_discrete(
    psi0: &WaveFunction,
    v: &PotentialField,
    p: &DiscreteSlkParams,
    opts: &LatticeRunOptions,
) -> Result<RunResult> {
    let solver = DiscreteSolver::new(v, *p)?;
    Domain::Lattice(solver.lattice).ensure_same(psi0.domain())?;
    if opts.record_every == 0 {
        return Err(Error::param("lattice.record_every", "must be positive"));
    }
    if opts.delta == 0 || opts.delta >= solver.lattice.sites() {
        return Err(Error::param(
            "lattice.delta",
            format!("need 1 <= delta < s = {}, got {}", solver.lattice.sites(), opts.delta),
        ));
    }
    let steps = p.steps();
    let mut series = ObservableSeries::new(false, true);
    let mut snapshots = Vec::new();
    let mut psi = normalize(psi0)?;
    let mut amps = psi.amplitudes().to_vec();
    let mut unconverged_steps = 0;

    let record = |series: &mut ObservableSeries, psi: &WaveFunction, t: f64| -> Result<()> {
        let arrival = arrival_probability(psi, opts.delta)?;
        series.push(t, psi.norm(), solver.energy(psi), None, Some(arrival));
        Ok(())
    };
    let snapshot = |psi: &WaveFunction, t: f64| Snapshot {
        t,
        density_phase: to_density_phase(psi, 0.0),
        w: None,
    };

    record(&mut series, &psi, 0.0)?;
    snapshots.push(snapshot(&psi, 0.0));
    for k in 1..=steps {
        let (next, stats) = solver.advance(&amps);
        unconverged_steps += usize::from(!stats.converged);
        let norm_sqr: f64 = next.iter().map(|a| a.norm_sqr()).sum();
        let t = k as f64 * p.dt;
        if !norm_sqr.is_finite() || norm_sqr <= 0.0 {
            return Err(Error::NonFinite { step: k, t });
        }
        let inv = 1.0 / norm_sqr.sqrt();
        amps = next.into_iter().map(|a| a * inv).collect();

        let is_last = k == steps;
        let want_record = k % opts.record_every == 0 || is_last;
        let want_snapshot = opts.snapshot_every.is_some_and(|s| s > 0 && k % s == 0) || is_last;
        if want_record || want_snapshot {
            psi = WaveFunction::new(solver.lattice, amps.clone())?;
            if want_record {
                record(&mut series, &psi, t)?;
            }
            if want_snapshot {
                snapshots.push(snapshot(&psi, t));
            }
        }
    }
    if steps > 0 {
        psi = WaveFunction::new(solver.lattice, amps)?;
    }
    Ok(RunResult {
        final_state: psi,
        series,
        snapshots,
        unconverged_steps,
    })
}

//! Continuous Schrödinger-Langevin-Kostin dynamics on a [`Grid1D`]:
//!
//! ```text
//! i ∂ψ/∂t = −(ν²/2) ∂²ψ/∂x² + V(x) ψ + β S(t,x) ψ,   S = Arg ψ
//! ```
//!
//! `S` is the unwrapped phase of the current state. By default the
//! density-weighted mean phase is subtracted first; this only rotates the
//! global phase of ψ and keeps `S` from drifting secularly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Scheme, StepStats, Stepper};
use crate::observables::{vacuum_overlap, ObservableSeries};
use crate::potentials::PotentialField;
use crate::spectral::build_hamiltonian_matrix;
use crate::state::{
    normalize, relative_floor, to_density_phase, unwrapped_phase, weighted_norm_sqr, DensityPhase, Domain, Grid1D,
    WaveFunction, DEFAULT_RELATIVE_RHO_FLOOR,
};
use crate::tridiag::SymTridiagonal;

/// Relative density threshold below which the reconstructed W is absent.
pub const DEFAULT_W_RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlkParams {
    pub nu: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Phase reliability threshold relative to `max ρ`.
    pub rho_floor: f64,
    pub subtract_mean_phase: bool,
    pub scheme: Scheme,
}

impl Default for SlkParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            beta: 0.0,
            dt: 1e-3,
            t_max: 50.0,
            rho_floor: DEFAULT_RELATIVE_RHO_FLOOR,
            subtract_mean_phase: true,
            scheme: Scheme::Midpoint,
        }
    }
}

impl SlkParams {
    /// Both schemes use an implicit kinetic step, so `dt` is bounded by
    /// accuracy only; validation checks signs and finiteness.
    pub fn validate(&self) -> Result<()> {
        check_positive("continuous.nu", self.nu)?;
        check_nonnegative("continuous.beta", self.beta)?;
        check_positive("continuous.dt", self.dt)?;
        check_nonnegative("continuous.t_max", self.t_max)?;
        check_nonnegative("continuous.rho_floor", self.rho_floor)?;
        if self.rho_floor >= 1.0 {
            return Err(Error::param("continuous.rho_floor", "relative floor must be below 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

pub(crate) fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_nonnegative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be nonnegative and finite, got {v}")))
    }
}

fn grid_of(domain: &Domain) -> Result<Grid1D> {
    match domain {
        Domain::Grid(g) => Ok(*g),
        Domain::Lattice(_) => Err(Error::DomainMismatch("continuous dynamics need a grid".into())),
    }
}

/// Friction potential `β (S − ⟨S⟩)` for an arbitrary (not necessarily
/// normalized) amplitude vector.
pub(crate) fn friction_potential(amps: &[Complex64], p: &SlkParams) -> Vec<f64> {
    let floor = relative_floor(amps, p.rho_floor);
    let mut phase = unwrapped_phase(amps, floor);
    if p.subtract_mean_phase {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, s) in amps.iter().zip(&phase) {
            let r = a.norm_sqr();
            num += r * s;
            den += r;
        }
        if den > 0.0 {
            let mean = num / den;
            phase.iter_mut().for_each(|s| *s -= mean);
        }
    }
    phase.into_iter().map(|s| p.beta * s).collect()
}

/// Reusable propagator for one potential and parameter set.
#[derive(Debug, Clone)]
pub struct ContinuousSolver {
    grid: Grid1D,
    params: SlkParams,
    hamiltonian: SymTridiagonal,
    stepper: Stepper,
}

impl ContinuousSolver {
    pub fn new(v: &PotentialField, params: SlkParams) -> Result<Self> {
        params.validate()?;
        let grid = grid_of(v.domain())?;
        let hamiltonian = build_hamiltonian_matrix(v, params.nu);
        let kinetic = build_hamiltonian_matrix(&PotentialField::zero(grid), params.nu);
        let stepper = Stepper::new(kinetic, v.values().to_vec(), params.dt, params.scheme);
        Ok(Self {
            grid,
            params,
            hamiltonian,
            stepper,
        })
    }

    pub fn params(&self) -> &SlkParams {
        &self.params
    }

    /// Advances one `dt` and renormalizes.
    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        Domain::Grid(self.grid).ensure_same(psi.domain())?;
        let (amps, _) = self.advance(psi.amplitudes());
        normalize(&WaveFunction::new(self.grid, amps)?)
    }

    fn advance(&self, amps: &[Complex64]) -> (Vec<Complex64>, StepStats) {
        let p = self.params;
        if p.beta > 0.0 {
            self.stepper
                .step(amps, Some(|x: &[Complex64]| friction_potential(x, &p)))
        } else {
            self.stepper.step::<fn(&[Complex64]) -> Vec<f64>>(amps, None)
        }
    }

    /// ⟨ψ|H_ν|ψ⟩ with the propagator's own discrete Laplacian.
    pub fn energy(&self, psi: &WaveFunction) -> f64 {
        self.hamiltonian.quadratic_form(psi.amplitudes()) * self.grid.dx()
    }
}

/// One step of the SLK equation.
pub fn slk_step(psi: &WaveFunction, v: &PotentialField, p: &SlkParams) -> Result<WaveFunction> {
    ContinuousSolver::new(v, *p)?.step(psi)
}

/// ⟨ψ|H_ν|ψ⟩ using the Dirichlet three-point Laplacian.
pub fn energy(psi: &WaveFunction, v: &PotentialField, nu: f64) -> f64 {
    build_hamiltonian_matrix(v, nu).quadratic_form(psi.amplitudes()) * psi.domain().weight()
}

/// `W(x) = (ν²/2) Δψ/ψ + E`, absent where `|ψ|² ≤ rho_floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedPotential {
    pub grid: Grid1D,
    pub values: Vec<Option<f64>>,
    /// Largest |Im((ν²/2) Δψ/ψ)| over the defined points.
    pub max_imag_residual: f64,
}

impl ReconstructedPotential {
    /// Largest |W − V| over the points where W is defined.
    pub fn max_deviation(&self, v: &PotentialField) -> f64 {
        self.values
            .iter()
            .zip(v.values())
            .filter_map(|(w, v)| w.map(|w| (w - v).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest |W − V| restricted to points with `rho > rho_min`.
    pub fn max_deviation_where(&self, v: &PotentialField, rho: &[f64], rho_min: f64) -> f64 {
        self.values
            .iter()
            .zip(v.values())
            .zip(rho)
            .filter(|(_, &r)| r > rho_min)
            .filter_map(|((w, v), _)| w.map(|w| (w - v).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn reconstruct_w(psi: &WaveFunction, nu: f64, energy_value: f64, rho_floor: f64) -> Result<ReconstructedPotential> {
    let grid = grid_of(psi.domain())?;
    let a = psi.amplitudes();
    let n = a.len();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let zero = Complex64::new(0.0, 0.0);
    let mut max_imag = 0.0f64;
    let values = (0..n)
        .map(|j| {
            if a[j].norm_sqr() <= rho_floor {
                return None;
            }
            let left = if j > 0 { a[j - 1] } else { zero };
            let right = if j + 1 < n { a[j + 1] } else { zero };
            let lap = (left - 2.0 * a[j] + right) * inv_dx2;
            let ratio = 0.5 * nu * nu * lap / a[j];
            max_imag = max_imag.max(ratio.im.abs());
            Some(ratio.re + energy_value)
        })
        .collect();
    Ok(ReconstructedPotential {
        grid,
        values,
        max_imag_residual: max_imag,
    })
}

/// Normalized `exp(−(x − center)²/(4σ²))`.
pub fn gaussian_packet(grid: &Grid1D, center: f64, sigma: f64) -> Result<WaveFunction> {
    check_positive("sigma", sigma)?;
    let vals: Vec<f64> = grid
        .points()
        .map(|x| (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp())
        .collect();
    normalize(&WaveFunction::from_real(*grid, &vals)?)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub density_phase: DensityPhase,
    pub w: Option<ReconstructedPotential>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: WaveFunction,
    pub series: ObservableSeries,
    pub snapshots: Vec<Snapshot>,
    /// Steps whose midpoint fixed-point iteration hit its iteration cap.
    pub unconverged_steps: usize,
}

/// What to record during a run. The initial and final states are always
/// recorded and snapshotted.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub record_every: usize,
    /// Snapshot cadence in steps; `None` keeps only the endpoints.
    pub snapshot_every: Option<usize>,
    pub reference: Option<WaveFunction>,
}

impl RunOptions {
    pub fn every(record_every: usize) -> Self {
        Self {
            record_every,
            ..Self::default()
        }
    }
}

pub fn run_continuous(psi0: &WaveFunction, v: &PotentialField, p: &SlkParams, opts: &RunOptions) -> Result<RunResult> {
    let solver = ContinuousSolver::new(v, *p)?;
    Domain::Grid(solver.grid).ensure_same(psi0.domain())?;
    if opts.record_every == 0 {
        return Err(Error::param("continuous.record_every", "must be positive"));
    }
    if let Some(r) = &opts.reference {
        psi0.domain().ensure_same(r.domain())?;
    }
    let steps = p.steps();
    let dx = solver.grid.dx();
    let mut series = ObservableSeries::new(opts.reference.is_some(), false);
    let mut snapshots = Vec::new();
    let mut psi = normalize(psi0)?;
    let mut amps = psi.amplitudes().to_vec();
    let mut unconverged_steps = 0;

    let record = |series: &mut ObservableSeries, psi: &WaveFunction, t: f64| -> Result<f64> {
        let e = solver.energy(psi);
        let overlap = opts.reference.as_ref().map(|r| vacuum_overlap(psi, r)).transpose()?;
        series.push(t, psi.norm(), e, overlap, None);
        Ok(e)
    };
    let snapshot = |psi: &WaveFunction, t: f64, e: f64| -> Result<Snapshot> {
        let w_floor = DEFAULT_W_RELATIVE_FLOOR * psi.densities().into_iter().fold(0.0, f64::max);
        Ok(Snapshot {
            t,
            density_phase: to_density_phase(psi, relative_floor(psi.amplitudes(), p.rho_floor)),
            w: Some(reconstruct_w(psi, p.nu, e, w_floor)?),
        })
    };

    let e0 = record(&mut series, &psi, 0.0)?;
    snapshots.push(snapshot(&psi, 0.0, e0)?);

    for k in 1..=steps {
        let (next, stats) = solver.advance(&amps);
        unconverged_steps += usize::from(!stats.converged);
        let norm_sqr = weighted_norm_sqr(&next, dx);
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
            psi = WaveFunction::new(solver.grid, amps.clone())?;
            let e = record(&mut series, &psi, t)?;
            if want_snapshot {
                snapshots.push(snapshot(&psi, t, e)?);
            }
        }
    }
    if steps > 0 {
        psi = WaveFunction::new(solver.grid, amps)?;
    }
    Ok(RunResult {
        final_state: psi,
        series,
        snapshots,
        unconverged_steps,
    })
}

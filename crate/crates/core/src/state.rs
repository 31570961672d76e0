//! Discretized domains and the complex state living on them.
//!
//! A continuous problem is sampled on a uniform [`Grid1D`]; inner products
//! carry the `dx` weight so observables converge to their L² values under
//! refinement. A discrete problem lives on the site chain [`Lattice`]
//! `{1, ..., s}` with plain ℓ² inner products.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative density floor used when the caller does not supply one.
pub const DEFAULT_RELATIVE_RHO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::param(
                "grid",
                format!("require finite x_min < x_max, got [{x_min}, {x_max}]"),
            ));
        }
        if n < 3 {
            return Err(Error::param("grid.n", format!("need at least 3 points, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.n).map(move |i| self.x_min + i as f64 * dx)
    }
}

/// The chain `Λ_s = {1, ..., s}` with nearest-neighbour edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    s: usize,
}

impl Lattice {
    pub fn new(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::param("lattice.s", "site count must be positive"));
        }
        Ok(Self { s })
    }

    pub fn sites(&self) -> usize {
        self.s
    }

    /// Site labels `1..=s`.
    pub fn labels(&self) -> impl Iterator<Item = usize> {
        1..=self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Grid(Grid1D),
    Lattice(Lattice),
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Grid(g) => g.len(),
            Domain::Lattice(l) => l.sites(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one point: `dx` on a grid, 1 on a lattice.
    pub fn weight(&self) -> f64 {
        match self {
            Domain::Grid(g) => g.dx(),
            Domain::Lattice(_) => 1.0,
        }
    }

    /// Coordinate of the i-th point (0-based index). Lattice sites are
    /// reported by their 1-based label.
    pub fn coordinate(&self, i: usize) -> f64 {
        match self {
            Domain::Grid(g) => g.x(i),
            Domain::Lattice(_) => (i + 1) as f64,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coordinate(i)).collect()
    }

    pub(crate) fn ensure_same(&self, other: &Domain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl From<Grid1D> for Domain {
    fn from(g: Grid1D) -> Self {
        Domain::Grid(g)
    }
}

impl From<Lattice> for Domain {
    fn from(l: Lattice) -> Self {
        Domain::Lattice(l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    domain: Domain,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(domain: impl Into<Domain>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let domain = domain.into();
        if amplitudes.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "{} amplitudes for a domain of {} points",
                amplitudes.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, amplitudes })
    }

    pub fn from_real(domain: impl Into<Domain>, values: &[f64]) -> Result<Self> {
        Self::new(domain, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        weighted_norm_sqr(&self.amplitudes, self.domain.weight())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let f = Complex64::from_polar(1.0, alpha);
        Self {
            domain: self.domain,
            amplitudes: self.amplitudes.iter().map(|a| a * f).collect(),
        }
    }

    /// ℓ² distance under the domain weighting.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.domain.ensure_same(&other.domain)?;
        let d: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((d * self.domain.weight()).sqrt())
    }
}

pub(crate) fn weighted_norm_sqr(amps: &[Complex64], weight: f64) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * weight
}

/// Rescales ψ to unit norm under the domain weighting.
pub fn normalize(psi: &WaveFunction) -> Result<WaveFunction> {
    let norm = psi.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegenerateState);
    }
    let inv = 1.0 / norm;
    Ok(WaveFunction {
        domain: psi.domain,
        amplitudes: psi.amplitudes.iter().map(|a| a * inv).collect(),
    })
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    a.domain.ensure_same(&b.domain)?;
    let sum: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.domain.weight())
}

/// Polar decomposition ψ = √ρ·e^{iS}.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPhase {
    pub rho: Vec<f64>,
    pub phase: Vec<f64>,
    /// Quadrature weight used for Σ ρ·weight.
    pub weight: f64,
    /// Absolute floor below which the phase was held rather than measured.
    pub rho_floor: f64,
}

impl DensityPhase {
    pub fn total_probability(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.weight
    }

    pub fn recombine(&self) -> Vec<Complex64> {
        self.rho
            .iter()
            .zip(&self.phase)
            .map(|(&r, &s)| Complex64::from_polar(r.sqrt(), s))
            .collect()
    }
}

/// Absolute floor `DEFAULT_RELATIVE_RHO_FLOOR × max ρ`.
pub fn default_rho_floor(psi: &WaveFunction) -> f64 {
    relative_floor(psi.amplitudes(), DEFAULT_RELATIVE_RHO_FLOOR)
}

pub(crate) fn relative_floor(amps: &[Complex64], relative: f64) -> f64 {
    relative * amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max)
}

pub fn to_density_phase(psi: &WaveFunction, rho_floor: f64) -> DensityPhase {
    DensityPhase {
        rho: psi.densities(),
        phase: unwrapped_phase(psi.amplitudes(), rho_floor),
        weight: psi.domain.weight(),
        rho_floor,
    }
}

/// Phase of each amplitude, unwrapped left to right so consecutive reliable
/// points (|ψ|² > `rho_floor`) differ by less than π. Unreliable points hold
/// the last reliable value; points before the first reliable one take its
/// value. An all-unreliable state has phase 0 everywhere.
pub(crate) fn unwrapped_phase(amps: &[Complex64], rho_floor: f64) -> Vec<f64> {
    let mut phase = vec![0.0; amps.len()];
    let mut last: Option<f64> = None;
    let mut first_reliable = amps.len();
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() > rho_floor {
            let theta = a.arg();
            let s = match last {
                None => {
                    first_reliable = i;
                    theta
                }
                Some(prev) => prev + wrap_to_pi(theta - prev),
            };
            phase[i] = s;
            last = Some(s);
        } else if let Some(prev) = last {
            phase[i] = prev;
        }
    }
    if first_reliable < amps.len() {
        let lead = phase[first_reliable];
        phase[..first_reliable].fill(lead);
    }
    phase
}

/// Maps an angle into `[-π, π)`.
pub(crate) fn wrap_to_pi(angle: f64) -> f64 {
    let w = (angle + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

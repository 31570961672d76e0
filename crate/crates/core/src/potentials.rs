//! Potential profiles: the inverse-problem triple-Gaussian well, the
//! asymmetric quartic double well, the lattice tilt and Gaussian site
//! disorder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{normalize, Domain, Grid1D, Lattice, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    domain: Domain,
    values: Vec<f64>,
}

impl PotentialField {
    /// Tabulated profile. Every value must be finite.
    pub fn new(domain: impl Into<Domain>, values: Vec<f64>) -> Result<Self> {
        let domain = domain.into();
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch(format!(
                "{} potential values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("potential", format!("non-finite value at index {i}")));
        }
        Ok(Self { domain, values })
    }

    pub fn zero(domain: impl Into<Domain>) -> Self {
        let domain = domain.into();
        Self {
            values: vec![0.0; domain.len()],
            domain,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Pointwise sum of two profiles on the same domain.
    pub fn add(&self, other: &PotentialField) -> Result<Self> {
        self.domain.ensure_same(&other.domain)?;
        Ok(Self {
            domain: self.domain,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A positive mixture of three Gaussians centred at `+a`, `-a` and 0,
/// prescribed as the zero-energy ground state of `-(ν²/2)∂² + V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleGaussianGroundState {
    pub a: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub sigma_0: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub c_0: f64,
}

impl Default for TripleGaussianGroundState {
    fn default() -> Self {
        Self {
            a: 1.5,
            sigma_plus: 0.45,
            sigma_minus: 0.55,
            sigma_0: 0.5,
            c_plus: 1.0,
            c_minus: 0.8,
            c_0: 0.3,
        }
    }
}

impl TripleGaussianGroundState {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("toy1.sigma_plus", self.sigma_plus),
            ("toy1.sigma_minus", self.sigma_minus),
            ("toy1.sigma_0", self.sigma_0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("width must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("toy1.a", self.a),
            ("toy1.c_plus", self.c_plus),
            ("toy1.c_minus", self.c_minus),
            ("toy1.c_0", self.c_0),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn terms(&self) -> [(f64, f64, f64); 3] {
        [
            (self.c_plus, self.a, self.sigma_plus),
            (self.c_minus, -self.a, self.sigma_minus),
            (self.c_0, 0.0, self.sigma_0),
        ]
    }

    /// Returns `(log_scale, φ/e^{log_scale}, φ''/e^{log_scale})` so that
    /// the ratio φ''/φ stays finite far in the tails.
    fn scaled_eval(&self, x: f64) -> (f64, f64, f64) {
        let exponents = self.terms().map(|(c, m, s)| {
            if c == 0.0 {
                f64::NEG_INFINITY
            } else {
                -(x - m).powi(2) / (4.0 * s * s)
            }
        });
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut phi = 0.0;
        let mut d2 = 0.0;
        for ((c, m, s), e) in self.terms().into_iter().zip(exponents) {
            if c == 0.0 {
                continue;
            }
            let g = c * (e - shift).exp();
            phi += g;
            d2 += g * ((x - m).powi(2) / (4.0 * s.powi(4)) - 1.0 / (2.0 * s * s));
        }
        (shift, phi, d2)
    }

    /// Unnormalized φ(x).
    pub fn value(&self, x: f64) -> f64 {
        let (shift, phi, _) = self.scaled_eval(x);
        phi * shift.exp()
    }

    /// Analytic φ''(x).
    pub fn second_derivative(&self, x: f64) -> f64 {
        let (shift, _, d2) = self.scaled_eval(x);
        d2 * shift.exp()
    }

    fn check_positive(&self, grid: &Grid1D) -> Result<()> {
        self.validate()?;
        for (i, x) in grid.points().enumerate() {
            let (_, phi, _) = self.scaled_eval(x);
            if !(phi > 0.0) {
                return Err(Error::NonPositiveGroundState {
                    index: i,
                    x,
                    value: phi,
                });
            }
        }
        Ok(())
    }
}

/// The prescribed ground state sampled on `grid` and normalized.
pub fn toy1_ground_state(params: &TripleGaussianGroundState, grid: &Grid1D) -> Result<WaveFunction> {
    params.check_positive(grid)?;
    let values: Vec<f64> = grid.points().map(|x| params.value(x)).collect();
    normalize(&WaveFunction::from_real(*grid, &values)?)
}

/// `V(x) = (ν²/2)·φ''(x)/φ(x)` using the analytic second derivative.
pub fn toy1_potential(params: &TripleGaussianGroundState, nu: f64, grid: &Grid1D) -> Result<PotentialField> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::param("nu", format!("must be positive, got {nu}")));
    }
    params.check_positive(grid)?;
    let values = grid
        .points()
        .map(|x| {
            let (_, phi, d2) = params.scaled_eval(x);
            0.5 * nu * nu * d2 / phi
        })
        .collect();
    PotentialField::new(*grid, values)
}

/// Asymmetric quartic double well with a linear tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub v0: f64,
    pub delta: f64,
}

impl Default for DoubleWellParams {
    fn default() -> Self {
        Self {
            a_plus: 2.25,
            a_minus: 1.75,
            v0: 1.0,
            delta: 0.1,
        }
    }
}

impl DoubleWellParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("toy2.a_plus", self.a_plus),
            ("toy2.a_minus", self.a_minus),
            ("toy2.v0", self.v0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(Error::param("toy2.delta", "must be finite"));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        let a = if x >= 0.0 { self.a_plus } else { self.a_minus };
        self.v0 * (x * x - a * a).powi(2) / a.powi(4) + self.delta * x
    }
}

pub fn double_well(params: &DoubleWellParams, grid: &Grid1D) -> Result<PotentialField> {
    params.validate()?;
    PotentialField::new(*grid, grid.points().map(|x| params.value(x)).collect())
}

/// `V(x) = -g·x` on sites `x = 1..s`.
pub fn linear_tilt(g: f64, lattice: &Lattice) -> PotentialField {
    PotentialField {
        domain: (*lattice).into(),
        values: lattice.labels().map(|x| -g * x as f64).collect(),
    }
}

/// Independent N(0, σ²) site energies.
///
/// Draws come from a `ChaCha8Rng` seeded with `seed_from_u64(seed)` and
/// rand_distr's `StandardNormal` (ziggurat), scaled by `sigma`, one draw per
/// site in label order. The stream is fixed by the pinned crate versions, so
/// equal seeds give bit-identical fields on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub sigma: f64,
    pub seed: u64,
}

pub fn anderson_disorder(spec: &DisorderSpec, lattice: &Lattice) -> Result<PotentialField> {
    if !(spec.sigma.is_finite() && spec.sigma >= 0.0) {
        return Err(Error::param(
            "lattice.sigma",
            format!("must be nonnegative, got {}", spec.sigma),
        ));
    }
    let s = lattice.sites();
    if spec.sigma == 0.0 {
        return Ok(PotentialField::zero(*lattice));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = (0..s)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.sigma * z
        })
        .collect();
    PotentialField::new(*lattice, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(-10.0, 10.0, 1024).unwrap()
    }

    #[test]
    fn symmetric_mixture_is_even() {
        let p = TripleGaussianGroundState {
            a: 2.0,
            sigma_plus: 0.5,
            sigma_minus: 0.5,
            sigma_0: 0.7,
            c_plus: 1.0,
            c_minus: 1.0,
            c_0: 0.4,
        };
        // Odd point count puts x = 0 on the grid and pairs i with n-1-i.
        let g = Grid1D::new(-6.0, 6.0, 401).unwrap();
        let phi = toy1_ground_state(&p, &g).unwrap();
        let a = phi.amplitudes();
        for i in 0..a.len() {
            assert!((a[i].re - a[a.len() - 1 - i].re).abs() < 1e-12);
        }
    }

    #[test]
    fn single_gaussian_reduction() {
        let p = TripleGaussianGroundState {
            a: 1.0,
            sigma_plus: 0.6,
            sigma_minus: 0.3,
            sigma_0: 0.3,
            c_plus: 2.0,
            c_minus: 0.0,
            c_0: 0.0,
        };
        let g = grid();
        let phi = toy1_ground_state(&p, &g).unwrap();
        let raw: Vec<f64> = g
            .points()
            .map(|x| (-(x - 1.0f64).powi(2) / (4.0 * 0.36)).exp())
            .collect();
        let norm = (raw.iter().map(|v| v * v).sum::<f64>() * g.dx()).sqrt();
        for (a, r) in phi.amplitudes().iter().zip(&raw) {
            assert!((a.re - r / norm).abs() < 1e-12);
        }
        assert!((phi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_mixture_matches_direct_formula() {
        // Direct evaluation of c₊e^{-(x-a)²/4σ₊²} + c₋e^{-(x+a)²/4σ₋²} + c₀e^{-x²/4σ₀²}.
        let p = TripleGaussianGroundState::default();
        let direct = |x: f64| {
            p.c_plus * (-(x - p.a).powi(2) / (4.0 * p.sigma_plus.powi(2))).exp()
                + p.c_minus * (-(x + p.a).powi(2) / (4.0 * p.sigma_minus.powi(2))).exp()
                + p.c_0 * (-(x * x) / (4.0 * p.sigma_0.powi(2))).exp()
        };
        for x in [-3.0, -1.5, 0.0, 0.7, 1.5] {
            assert!((p.value(x) - direct(x)).abs() < 1e-14 * direct(x).max(1.0));
        }
    }

    #[test]
    fn single_gaussian_potential_closed_form() {
        let sigma = 0.6;
        let nu = 1.3;
        let p = TripleGaussianGroundState {
            a: 1.0,
            sigma_plus: sigma,
            sigma_minus: 1.0,
            sigma_0: 1.0,
            c_plus: 1.0,
            c_minus: 0.0,
            c_0: 0.0,
        };
        let g = Grid1D::new(-4.0, 6.0, 1001).unwrap();
        let v = toy1_potential(&p, nu, &g).unwrap();
        for (x, val) in g.points().zip(v.values()) {
            let expected = 0.5 * nu * nu * ((x - 1.0).powi(2) / (4.0 * sigma.powi(4)) - 1.0 / (2.0 * sigma * sigma));
            assert!((val - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
        // x = a is a grid point here (index 500).
        let at_a = v.values()[500];
        assert!((at_a + nu * nu / (4.0 * sigma * sigma)).abs() < 1e-12);
    }

    #[test]
    fn toy1_potential_grows_quadratically() {
        let p = TripleGaussianGroundState::default();
        let far = Grid1D::new(20.0, 40.0, 3).unwrap();
        let v = toy1_potential(&p, 1.0, &far).unwrap();
        // Dominant tail is the widest right-side Gaussian; V ~ x²/(8σ⁴).
        let ratio = v.values()[2] / v.values()[0];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn toy1_analytic_identity() {
        let p = TripleGaussianGroundState::default();
        let g = grid();
        let v = toy1_potential(&p, 1.0, &g).unwrap();
        for (x, val) in g.points().zip(v.values()) {
            let lhs = 0.5 * p.second_derivative(x);
            let rhs = val * p.value(x);
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 {
                assert!((lhs - rhs).abs() <= 1e-10 * scale, "x = {x}");
            }
        }
    }

    #[test]
    fn nonpositive_mixture_rejected() {
        let p = TripleGaussianGroundState {
            c_0: -5.0,
            ..TripleGaussianGroundState::default()
        };
        assert!(matches!(
            toy1_potential(&p, 1.0, &grid()),
            Err(Error::NonPositiveGroundState { .. })
        ));
    }

    #[test]
    fn double_well_reference_values() {
        let p = DoubleWellParams::default();
        assert_eq!(p.value(0.0), 1.0);
        assert!((p.value(2.25) - 0.225).abs() < 1e-15);
        assert!((p.value(-1.75) + 0.175).abs() < 1e-15);
    }

    #[test]
    fn double_well_symmetric_without_tilt() {
        let p = DoubleWellParams {
            a_plus: 2.0,
            a_minus: 2.0,
            v0: 1.5,
            delta: 0.0,
        };
        for x in [0.3, 1.0, 2.7, 5.0] {
            assert_eq!(p.value(x), p.value(-x));
        }
    }

    #[test]
    fn double_well_rejects_zero_offset() {
        let p = DoubleWellParams {
            a_minus: 0.0,
            ..DoubleWellParams::default()
        };
        assert!(double_well(&p, &grid()).is_err());
    }

    #[test]
    fn tilt_values() {
        let l = Lattice::new(100).unwrap();
        assert!(linear_tilt(0.0, &l).values().iter().all(|&v| v == 0.0));
        let g = 3.0 * 2.0 / 100.0;
        let v = linear_tilt(g, &l);
        assert!((v.values()[99] + 6.0).abs() < 1e-12);
        assert!((v.values()[0] - v.values()[99] - g * 99.0).abs() < 1e-12);
    }

    #[test]
    fn disorder_zero_sigma_and_determinism() {
        let l = Lattice::new(100).unwrap();
        let z = anderson_disorder(&DisorderSpec { sigma: 0.0, seed: 9 }, &l).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let sigma0 = (10.0f64 / 100.0).powf(1.5);
        let spec = DisorderSpec {
            sigma: 2.0 * sigma0,
            seed: 42,
        };
        assert!((spec.sigma - 0.063_245_553_203_367_6).abs() < 1e-15);
        let a = anderson_disorder(&spec, &l).unwrap();
        let b = anderson_disorder(&spec, &l).unwrap();
        assert_eq!(a, b);
        let c = anderson_disorder(&DisorderSpec { seed: 43, ..spec }, &l).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn disorder_statistics() {
        let n = 100_000;
        let sigma = 0.25;
        let l = Lattice::new(n).unwrap();
        let v = anderson_disorder(&DisorderSpec { sigma, seed: 7 }, &l).unwrap();
        let mean = v.values().iter().sum::<f64>() / n as f64;
        let var = v.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.02);
    }
}

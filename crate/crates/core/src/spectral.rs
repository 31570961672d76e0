//! Exact diagonalization of the discretized Hamiltonians.
//!
//! This is the reference the propagators are checked against, so it shares
//! only the matrix assembly with them: eigenvalues come from Sturm-sequence
//! bisection, the ground-state vector from inverse iteration, and exact
//! linear propagation from a dense symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::PotentialField;
use crate::state::{Domain, WaveFunction};
use crate::tridiag::{solve_real_tridiagonal, SymTridiagonal};

/// Largest dimension accepted by the dense eigendecomposition.
pub const DENSE_SIZE_CAP: usize = 4096;

/// Lattice hopping amplitude of the chain Hamiltonian `h`.
pub const LATTICE_HOPPING: f64 = 0.5;

/// Assembles the Hamiltonian as a symmetric tridiagonal matrix.
///
/// On a grid, `nu_or_hopping` is ν and the kinetic term is the Dirichlet
/// three-point Laplacian `-(ν²/2)Δ` (amplitude zero just outside the grid).
/// On a lattice it is the hopping amplitude J, giving off-diagonals `-J`.
pub fn build_hamiltonian_matrix(v: &PotentialField, nu_or_hopping: f64) -> SymTridiagonal {
    let n = v.values().len();
    match v.domain() {
        Domain::Grid(g) => {
            let c = nu_or_hopping * nu_or_hopping / (2.0 * g.dx() * g.dx());
            SymTridiagonal::new(
                v.values().iter().map(|x| x + 2.0 * c).collect(),
                vec![-c; n.saturating_sub(1)],
            )
        }
        Domain::Lattice(_) => SymTridiagonal::new(v.values().to_vec(), vec![-nu_or_hopping; n.saturating_sub(1)]),
    }
}

/// Lowest eigenvalues and the ground state.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub ground_state: WaveFunction,
    pub n_computed: usize,
    /// `‖Hφ − E₀φ‖` in the unweighted ℓ² norm of the unit eigenvector.
    pub residual: f64,
}

pub fn ground_state(v: &PotentialField, nu_or_hopping: f64) -> Result<SpectrumResult> {
    spectrum(v, nu_or_hopping, 1)
}

/// The `count` lowest eigenvalues (clamped to the dimension) and the
/// ground state, sign-fixed so its largest-magnitude entry is positive.
pub fn spectrum(v: &PotentialField, nu_or_hopping: f64, count: usize) -> Result<SpectrumResult> {
    let h = build_hamiltonian_matrix(v, nu_or_hopping);
    let n = h.dim();
    let count = count.clamp(1, n);
    let eigenvalues: Vec<f64> = (0..count).map(|k| h.eigenvalue(k)).collect();
    let e0 = eigenvalues[0];

    let scale = h.scale();
    let tolerance = 1e-8 * scale;
    let shift = e0 - 1e-9 * scale.max(e0.abs());
    let mut vec = vec![1.0 / (n as f64).sqrt(); n];
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let next = solve_real_tridiagonal(&h, shift, &vec);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        vec = next.into_iter().map(|x| x / norm).collect();
        let hv = h.apply_real(&vec);
        residual = hv
            .iter()
            .zip(&vec)
            .map(|(a, b)| (a - e0 * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < 1e-3 * tolerance {
            break;
        }
    }
    if !(residual < tolerance) {
        return Err(Error::EigenConvergence { residual, tolerance });
    }

    let pivot = vec
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    let inv_sqrt_w = 1.0 / v.domain().weight().sqrt();
    let amplitudes = vec.iter().map(|x| Complex64::new(sign * x * inv_sqrt_w, 0.0)).collect();

    Ok(SpectrumResult {
        eigenvalues,
        ground_state: WaveFunction::new(*v.domain(), amplitudes)?,
        n_computed: count,
        residual,
    })
}

/// Full eigendecomposition, reusable for propagation to many times.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    domain: Domain,
    eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors (unweighted ℓ²).
    eigenvectors: DMatrix<f64>,
}

impl LinearPropagator {
    pub fn new(v: &PotentialField, nu_or_hopping: f64) -> Result<Self> {
        let n = v.values().len();
        if n > DENSE_SIZE_CAP {
            return Err(Error::SizeCapExceeded {
                size: n,
                cap: DENSE_SIZE_CAP,
            });
        }
        let h = build_hamiltonian_matrix(v, nu_or_hopping);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = h.diag()[i];
            if i + 1 < n {
                dense[(i, i + 1)] = h.off()[i];
                dense[(i + 1, i)] = h.off()[i];
            }
        }
        let eig = SymmetricEigen::new(dense);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self {
            domain: *v.domain(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `e^{-iHt} ψ₀`.
    pub fn propagate(&self, psi0: &WaveFunction, t: f64) -> Result<WaveFunction> {
        self.domain.ensure_same(psi0.domain())?;
        let n = self.eigenvalues.len();
        let amps = psi0.amplitudes();
        let u = &self.eigenvectors;
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let c: Complex64 = (0..n).map(|i| amps[i] * u[(i, k)]).sum();
                c * Complex64::from_polar(1.0, -self.eigenvalues[k] * t)
            })
            .collect();
        let out = (0..n).map(|i| (0..n).map(|k| coeffs[k] * u[(i, k)]).sum()).collect();
        WaveFunction::new(self.domain, out)
    }
}

/// Exact linear propagation `e^{-iHt} ψ₀` by full eigendecomposition.
pub fn propagate_linear(psi0: &WaveFunction, v: &PotentialField, nu_or_hopping: f64, t: f64) -> Result<WaveFunction> {
    LinearPropagator::new(v, nu_or_hopping)?.propagate(psi0, t)
}

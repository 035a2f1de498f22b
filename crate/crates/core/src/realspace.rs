//! Single-excitation Hamiltonian of the finite chain: spectra, edge-state
//! profiles, inverse participation ratios and collective decay rates.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::dipole_coupling::CouplingMatrices;
use crate::error::{Error, Result};

/// Tolerance used to decide that two edge populations are tied.
pub const EDGE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceHamiltonian {
    /// Matrix in units of Γ₀, relative to ω₀.
    pub matrix: DMatrix<f64>,
    pub includes_intrasublattice: bool,
    /// Amplitude Δ₀ of the staggered potential, if present.
    pub staggered_delta: Option<f64>,
    pub phi: f64,
}

impl RealSpaceHamiltonian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Staggered on-site energy of 0-based site `i`: `(−1)^(i+1) Δ₀ cos 2φ`,
/// i.e. `−Δ` on the A sublattice and `+Δ` on B.
pub fn staggered_onsite(i: usize, delta0: f64, phi: f64) -> f64 {
    let delta = delta0 * (2.0 * phi).cos();
    if i.is_multiple_of(2) {
        -delta
    } else {
        delta
    }
}

/// Single-excitation Hamiltonian `Σ Ω_ij σ_i†σ_j`, optionally with the
/// staggered potential `Δ₀ cos(2φ) Σ (−1)^i σ_i†σ_i`.
pub fn build_hamiltonian(couplings: &CouplingMatrices, staggered_delta: Option<f64>) -> RealSpaceHamiltonian {
    let mut matrix = couplings.omega.clone();
    if let Some(d0) = staggered_delta {
        for i in 0..matrix.nrows() {
            matrix[(i, i)] = staggered_onsite(i, d0, couplings.phi);
        }
    }
    RealSpaceHamiltonian {
        matrix,
        includes_intrasublattice: true,
        staggered_delta,
        phi: couplings.phi,
    }
}

/// Removes every coupling between sites of the same sublattice.
pub fn strip_intrasublattice(h: &RealSpaceHamiltonian) -> Result<RealSpaceHamiltonian> {
    if h.staggered_delta.is_some() {
        return Err(Error::InvalidParameter(
            "strip_intrasublattice expects a Hamiltonian without staggered potential".into(),
        ));
    }
    let n = h.n();
    let mut matrix = h.matrix.clone();
    for i in 0..n {
        for j in 0..n {
            if (i + j) % 2 == 0 {
                matrix[(i, j)] = 0.0;
            }
        }
    }
    Ok(RealSpaceHamiltonian {
        matrix,
        includes_intrasublattice: false,
        staggered_delta: None,
        phi: h.phi,
    })
}

/// Inverse participation ratio `Σ_i |ψ_i|⁴` of a normalized state.
pub fn ipr<'a>(state: impl IntoIterator<Item = &'a f64>) -> f64 {
    state.into_iter().map(|x| x.powi(4)).sum()
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending eigenvalues `ω − ω₀` in units of Γ₀.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub ipr: Vec<f64>,
    /// Maximal IPR over all eigenstates.
    pub loc: f64,
}

impl SpectrumResult {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Site populations `|⟨i|ψ_m⟩|²` of eigenstate `m`.
    pub fn populations(&self, m: usize) -> Vec<f64> {
        self.eigenvectors.column(m).iter().map(|x| x * x).collect()
    }

    /// Population of eigenstate `m` on the `width` first and `width` last sites.
    pub fn boundary_weight(&self, m: usize, width: usize) -> f64 {
        let n = self.n();
        let col = self.eigenvectors.column(m);
        (0..n)
            .filter(|&i| i < width || i >= n.saturating_sub(width))
            .map(|i| col[i] * col[i])
            .sum()
    }

    /// Indices of eigenvalues with `|ω − center| < half_width`.
    pub fn states_within(&self, center: f64, half_width: f64) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, w)| (**w - center).abs() < half_width)
            .map(|(i, _)| i)
            .collect()
    }

    /// `max_m |ω_m + ω_{N−1−m}|`; zero for a spectrum symmetric about 0.
    pub fn particle_hole_asymmetry(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|m| (self.eigenvalues[m] + self.eigenvalues[n - 1 - m]).abs())
            .fold(0.0, f64::max)
    }
}

/// Diagonalizes a real symmetric Hamiltonian.
pub fn diagonalize(h: &RealSpaceHamiltonian) -> Result<SpectrumResult> {
    diagonalize_matrix(&h.matrix)
}

pub(crate) fn diagonalize_matrix(matrix: &DMatrix<f64>) -> Result<SpectrumResult> {
    let n = matrix.nrows();
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 1000 * n.max(1)).ok_or_else(|| {
        let asym = (matrix - matrix.transpose()).amax();
        Error::NumericalFailure(format!(
            "symmetric eigensolver did not converge (n = {n}, |H|_F = {:.3e}, max asymmetry = {asym:.3e})",
            matrix.norm()
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvectors = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // Sign convention: the largest-magnitude component is positive.
        let pivot = col.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[(i, dst)] = sign * col[i];
        }
    }

    let ipr: Vec<f64> = (0..n).map(|m| ipr(eigenvectors.column(m).iter())).collect();
    let loc = ipr.iter().copied().fold(0.0, f64::max);
    Ok(SpectrumResult { eigenvalues, eigenvectors, ipr, loc })
}

/// Eigenstate with the largest population on the first site.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeProfile {
    pub state_index: usize,
    pub eigenvalue: f64,
    pub populations: Vec<f64>,
    /// Set when several states shared the maximal edge population; the one
    /// with the lowest eigenvalue was chosen.
    pub tie: bool,
}

pub fn edge_profile(spectrum: &SpectrumResult) -> EdgeProfile {
    let first_site: Vec<f64> = (0..spectrum.n())
        .map(|m| spectrum.eigenvectors[(0, m)].powi(2))
        .collect();
    let best = first_site.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..first_site.len())
        .filter(|&m| best - first_site[m] <= EDGE_TIE_TOL)
        .collect();
    // Eigenvalues are ascending, so the first tied index has the lowest energy.
    let state_index = tied[0];
    EdgeProfile {
        state_index,
        eigenvalue: spectrum.eigenvalues[state_index],
        populations: spectrum.populations(state_index),
        tie: tied.len() > 1,
    }
}

/// Total decay rate `Σ_ij Γ_ij ψ_i* ψ_j` of a normalized single-excitation state.
pub fn decay_expectation(state: &[Complex64], gamma: &DMatrix<f64>) -> Result<f64> {
    let n = state.len();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "state has {n} amplitudes but the decay matrix is {}x{}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(norm));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += state[j] * gamma[(i, j)];
        }
        acc += state[i].conj() * row;
    }
    Ok(acc.re)
}

/// [`decay_expectation`] for real amplitudes.
pub fn decay_expectation_real(state: &[f64], gamma: &DMatrix<f64>) -> Result<f64> {
    let z: Vec<Complex64> = state.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    decay_expectation(&z, gamma)
}

//! Free-space dyadic Green's tensor and the dipole-dipole coupling matrices.
//!
//! The complex pair kernel is
//!
//! ```text
//! Ω_ij − iΓ_ij/2 = −Γ₀ (3π/k₀) p̂ · G(r_i − r_j) · p̂
//! G(r) = e^{ik₀r}/(4π k₀² r³) [ (k₀²r² + ik₀r − 1) 𝟙 + (−k₀²r² − 3ik₀r + 3) r̂⊗r̂ ]
//! ```

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{dipole, ChainGeometry, ModelParams};
use crate::output::fmt_e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTensor {
    pub value: [[Complex64; 3]; 3],
    pub separation: [f64; 3],
}

fn norm3(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// Scalar prefactors `(A, B)` with `G = A·𝟙 + B·r̂⊗r̂`.
fn green_coefficients(r: f64, k0: f64) -> (Complex64, Complex64) {
    let kr = k0 * r;
    let pref = Complex64::from_polar(1.0, kr) / (4.0 * PI * k0 * k0 * r * r * r);
    let transverse = Complex64::new(kr * kr - 1.0, kr);
    let longitudinal = Complex64::new(3.0 - kr * kr, -3.0 * kr);
    (pref * transverse, pref * longitudinal)
}

/// Evaluates the free-space Green's tensor at `separation`.
pub fn green_tensor(separation: [f64; 3], k0: f64) -> Result<GreenTensor> {
    let r = norm3(&separation);
    if r == 0.0 {
        return Err(Error::SingularSeparation);
    }
    let (a, b) = green_coefficients(r, k0);
    let n = [separation[0] / r, separation[1] / r, separation[2] / r];
    let mut value = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in value.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = b * (n[i] * n[j]);
            if i == j {
                *v += a;
            }
        }
    }
    Ok(GreenTensor { value, separation })
}

/// `Ω − iΓ/2` for two dipoles along the unit vector `p` separated by `sep`
/// (in units of λ₀). Skips building the full tensor.
pub(crate) fn coupling_kernel(sep: [f64; 3], p: &[f64; 3], params: &ModelParams) -> Result<Complex64> {
    let r_lambda = norm3(&sep);
    if r_lambda == 0.0 {
        return Err(Error::SingularSeparation);
    }
    let r = r_lambda * params.lambda0;
    let (a, b) = green_coefficients(r, params.k0);
    let proj = (sep[0] * p[0] + sep[1] * p[1] + sep[2] * p[2]) / r_lambda;
    let pgp = a + b * (proj * proj);
    Ok(pgp * (-params.gamma0 * 3.0 * PI / params.k0))
}

/// Coherent coupling `Ω_ij` and collective decay `Γ_ij` between two emitters.
pub fn pair_coupling(r_i: [f64; 3], r_j: [f64; 3], phi: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let sep = [r_i[0] - r_j[0], r_i[1] - r_j[1], r_i[2] - r_j[2]];
    let z = coupling_kernel(sep, &dipole(phi), params)?;
    Ok((z.re, -2.0 * z.im))
}

/// Real symmetric Ω and Γ matrices of a chain at fixed polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    /// Coherent couplings in units of Γ₀; zero diagonal (frame rotating at ω₀).
    pub omega: DMatrix<f64>,
    /// Collective decay rates in units of Γ₀; diagonal is Γ₀.
    pub gamma: DMatrix<f64>,
    pub phi: f64,
}

impl CouplingMatrices {
    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    /// Smallest eigenvalue of Γ.
    pub fn gamma_min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.gamma.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major dump with header `i,j,omega,gamma` (1-based site indices).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,omega,gamma")?;
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                writeln!(
                    w,
                    "{},{},{},{}",
                    i + 1,
                    j + 1,
                    fmt_e12(self.omega[(i, j)]),
                    fmt_e12(self.gamma[(i, j)])
                )?;
            }
        }
        Ok(())
    }
}

/// Assembles Ω and Γ over all pairs of the chain.
pub fn build_coupling_matrices(geometry: &ChainGeometry, phi: f64, params: &ModelParams) -> Result<CouplingMatrices> {
    let n = geometry.n_atoms;
    let p = dipole(phi);
    let mut omega = DMatrix::zeros(n, n);
    let mut gamma = DMatrix::zeros(n, n);
    for i in 0..n {
        gamma[(i, i)] = params.gamma0;
        let ri = geometry.positions[i];
        for j in i + 1..n {
            let rj = geometry.positions[j];
            let z = coupling_kernel([ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]], &p, params)?;
            omega[(i, j)] = z.re;
            omega[(j, i)] = z.re;
            gamma[(i, j)] = -2.0 * z.im;
            gamma[(j, i)] = -2.0 * z.im;
        }
    }
    Ok(CouplingMatrices { omega, gamma, phi })
}

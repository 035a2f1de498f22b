//! Polarization as a synthetic dimension.
//!
//! A staggered potential `Δ(φ) = Δ₀ cos 2φ` (−Δ on A, +Δ on B) turns the
//! chain into a Rice-Mele model whose Bloch bands live on the torus
//! `(k, φ) ∈ (−π/a, π/a] × (−π/2, π/2]`. Berry curvature is computed from
//! gauge-invariant link variables, giving integer Chern numbers by
//! construction; integrating the curvature along φ at fixed k gives the pumped
//! displacement of a Bloch state after a half turn of the dipoles.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{BlochVector, LatticeSums};
use crate::dipole_coupling::build_coupling_matrices;
use crate::error::{Error, Result};
use crate::geometry::{build_chain, ChainGeometry, ModelParams};
use crate::realspace::decay_expectation;

/// Bands closer than this are treated as degenerate.
pub const GAP_EPS: f64 = 1e-8;
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Band {
    Lower,
    Upper,
}

/// `dz` of the Rice-Mele Bloch vector in the (A, B) basis.
pub fn rice_mele_dz(delta0: f64, phi: f64) -> f64 {
    -delta0 * (2.0 * phi).cos()
}

/// Bloch vector of the chain plus the staggered potential.
pub fn rice_mele_bloch(
    geometry: &ChainGeometry,
    phi: f64,
    k: f64,
    delta0: f64,
    cutoff: usize,
    params: &ModelParams,
) -> Result<BlochVector> {
    let mut b = LatticeSums::new(geometry, phi, cutoff, params)?.bloch_vector(k);
    b.d[2] = rice_mele_dz(delta0, phi);
    Ok(b)
}

/// Normalized eigenvector of `d·σ` for the requested band, in the (A, B) basis.
pub fn band_eigenvector(d: [f64; 3], band: Band) -> [Complex64; 2] {
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let lambda = match band {
        Band::Lower => -norm,
        Band::Upper => norm,
    };
    let off = Complex64::new(d[0], -d[1]);
    // Two equivalent forms; pick the better conditioned one.
    let v1 = [off, Complex64::new(lambda - d[2], 0.0)];
    let v2 = [Complex64::new(lambda + d[2], 0.0), off.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let s = n.sqrt();
    [v[0] / s, v[1] / s]
}

/// Bands, Berry curvature and (optionally) collective decay rates over the
/// synthetic Brillouin zone. All grids are indexed `j * nphi + l` for
/// `k_grid[j]`, `phi_grid[l]`.
#[derive(Debug, Clone, Serialize)]
pub struct SyntheticBandGrid {
    pub lattice_const: f64,
    pub delta0: f64,
    pub nk: usize,
    pub nphi: usize,
    /// `k_j = −π/a + (j + 1)·2π/(a·nk)`.
    pub k_grid: Vec<f64>,
    /// `φ_l = −π/2 + (l + 1)·π/nphi`.
    pub phi_grid: Vec<f64>,
    /// `(d₀, dx, dy, dz)` at each grid point.
    pub bloch: Vec<[f64; 4]>,
    pub omega_minus: Vec<f64>,
    pub omega_plus: Vec<f64>,
    /// Berry flux through plaquette `(j, l)`, spanning
    /// `[k_j, k_{j+1}] × [φ_l, φ_{l+1}]` (wrapping at the zone edge).
    pub flux_minus: Vec<f64>,
    pub flux_plus: Vec<f64>,
    /// Flux divided by plaquette area, assigned to the plaquette center.
    pub berry_minus: Vec<f64>,
    pub berry_plus: Vec<f64>,
    pub gamma_minus: Option<Vec<f64>>,
    pub gamma_plus: Option<Vec<f64>>,
}

impl SyntheticBandGrid {
    pub fn dk(&self) -> f64 {
        TAU / (self.lattice_const * self.nk as f64)
    }

    pub fn dphi(&self) -> f64 {
        PI / self.nphi as f64
    }

    /// Center of plaquette column `j`.
    pub fn k_center(&self, j: usize) -> f64 {
        self.k_grid[j] + 0.5 * self.dk()
    }

    pub fn phi_center(&self, l: usize) -> f64 {
        self.phi_grid[l] + 0.5 * self.dphi()
    }

    pub fn index(&self, j: usize, l: usize) -> usize {
        j * self.nphi + l
    }

    pub fn min_gap(&self) -> f64 {
        self.omega_plus
            .iter()
            .zip(&self.omega_minus)
            .map(|(p, m)| p - m)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn k_grid(lattice_const: f64, nk: usize) -> Vec<f64> {
    let dk = TAU / (lattice_const * nk as f64);
    (0..nk).map(|j| -PI / lattice_const + (j + 1) as f64 * dk).collect()
}

pub fn phi_grid(nphi: usize) -> Vec<f64> {
    let dphi = PI / nphi as f64;
    (0..nphi).map(|l| -FRAC_PI_2 + (l + 1) as f64 * dphi).collect()
}

fn overlap(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Berry flux `∮A` around every plaquette of a periodic `nk × nphi` grid of
/// eigenvectors, with `A = i⟨u|∂u⟩` and counterclockwise orientation in (k, φ).
fn plaquette_fluxes(states: &[[Complex64; 2]], nk: usize, nphi: usize) -> Vec<f64> {
    let at = |j: usize, l: usize| &states[(j % nk) * nphi + (l % nphi)];
    (0..nk)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..nphi).map(move |l| {
                let u00 = at(j, l);
                let u10 = at(j + 1, l);
                let u11 = at(j + 1, l + 1);
                let u01 = at(j, l + 1);
                let loop_product = overlap(u00, u10) * overlap(u10, u11) * overlap(u11, u01) * overlap(u01, u00);
                -loop_product.arg()
            })
        })
        .collect()
}

/// Bands and link-variable Berry curvature on the synthetic Brillouin zone.
pub fn berry_curvature_grid(
    geometry: &ChainGeometry,
    delta0: f64,
    nk: usize,
    nphi: usize,
    cutoff: usize,
    params: &ModelParams,
) -> Result<SyntheticBandGrid> {
    if nk < MIN_GRID || nphi < MIN_GRID {
        return Err(Error::InvalidParameter(format!(
            "synthetic grid must be at least {MIN_GRID}x{MIN_GRID}, got {nk}x{nphi}"
        )));
    }
    if delta0 == 0.0 || !delta0.is_finite() {
        return Err(Error::InvalidParameter(format!("delta0 must be finite and nonzero, got {delta0}")));
    }
    let a = geometry.lattice_const;
    let ks = k_grid(a, nk);
    let phis = phi_grid(nphi);

    // One φ-line per task; the lattice sums are shared along the line.
    let lines: Vec<Vec<[f64; 4]>> = phis
        .par_iter()
        .map(|&phi| {
            let sums = LatticeSums::new(geometry, phi, cutoff, params)?;
            let dz = rice_mele_dz(delta0, phi);
            Ok(sums
                .evaluate_uniform(ks[0], nk)
                .into_iter()
                .map(|(d0, f)| [d0, f.re, -f.im, dz])
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut bloch = vec![[0.0; 4]; nk * nphi];
    for (l, line) in lines.iter().enumerate() {
        for (j, v) in line.iter().enumerate() {
            bloch[j * nphi + l] = *v;
        }
    }

    let mut omega_minus = Vec::with_capacity(nk * nphi);
    let mut omega_plus = Vec::with_capacity(nk * nphi);
    for (idx, v) in bloch.iter().enumerate() {
        let norm = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
        if 2.0 * norm < GAP_EPS {
            return Err(Error::DegenerateBands { k: ks[idx / nphi], phi: phis[idx % nphi], gap: 2.0 * norm });
        }
        omega_minus.push(v[0] - norm);
        omega_plus.push(v[0] + norm);
    }

    let lower: Vec<[Complex64; 2]> = bloch.iter().map(|v| band_eigenvector([v[1], v[2], v[3]], Band::Lower)).collect();
    let upper: Vec<[Complex64; 2]> = bloch.iter().map(|v| band_eigenvector([v[1], v[2], v[3]], Band::Upper)).collect();
    let flux_minus = plaquette_fluxes(&lower, nk, nphi);
    let flux_plus = plaquette_fluxes(&upper, nk, nphi);
    let area = TAU / (a * nk as f64) * PI / nphi as f64;
    let berry_minus = flux_minus.iter().map(|f| f / area).collect();
    let berry_plus = flux_plus.iter().map(|f| f / area).collect();

    Ok(SyntheticBandGrid {
        lattice_const: a,
        delta0,
        nk,
        nphi,
        k_grid: ks,
        phi_grid: phis,
        bloch,
        omega_minus,
        omega_plus,
        flux_minus,
        flux_plus,
        berry_minus,
        berry_plus,
        gamma_minus: None,
        gamma_plus: None,
    })
}

/// Pairwise summation; the result does not depend on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct PumpResult {
    /// Plaquette-center momenta the displacements refer to.
    pub k_centers: Vec<f64>,
    /// Displacement of the lower-band state after φ → φ + π, in unit cells.
    pub displacement_minus: Vec<f64>,
    pub displacement_plus: Vec<f64>,
    pub chern_minus: i32,
    pub chern_plus: i32,
    /// Total flux / 2π before rounding.
    pub chern_raw_minus: f64,
    pub chern_raw_plus: f64,
}

fn chern_number(flux: &[f64]) -> Result<(i32, f64)> {
    let raw = pairwise_sum(flux) / TAU;
    let c = raw.round();
    if (raw - c).abs() > 1e-6 {
        return Err(Error::NumericalFailure(format!("non-integer Chern number {raw}")));
    }
    Ok((c as i32, raw))
}

/// Pumped displacement per k and Chern numbers of both bands.
pub fn pump_displacement(grid: &SyntheticBandGrid) -> Result<PumpResult> {
    let (nk, nphi) = (grid.nk, grid.nphi);
    // Δx/a = (1/a) Σ_l F Δφ = Σ_l flux / (a Δk) = Σ_l flux · nk / 2π.
    let column = |flux: &[f64]| -> Vec<f64> {
        (0..nk)
            .map(|j| pairwise_sum(&flux[j * nphi..(j + 1) * nphi]) * nk as f64 / TAU)
            .collect()
    };
    let (chern_minus, chern_raw_minus) = chern_number(&grid.flux_minus)?;
    let (chern_plus, chern_raw_plus) = chern_number(&grid.flux_plus)?;
    Ok(PumpResult {
        k_centers: (0..nk).map(|j| grid.k_center(j)).collect(),
        displacement_minus: column(&grid.flux_minus),
        displacement_plus: column(&grid.flux_plus),
        chern_minus,
        chern_plus,
        chern_raw_minus,
        chern_raw_plus,
    })
}

/// Plane-wave state `ψ_i ∝ u_s e^{ik·a·cell(i)}` on the finite chain.
pub fn bloch_state(u: &[Complex64; 2], k: f64, n_atoms: usize, lattice_const: f64) -> Vec<Complex64> {
    let norm = ((n_atoms / 2) as f64).sqrt();
    (0..n_atoms)
        .map(|i| u[i % 2] * Complex64::from_polar(1.0 / norm, k * lattice_const * (i / 2) as f64))
        .collect()
}

/// Collective decay rate of a Bloch state evaluated on a finite chain.
#[allow(clippy::too_many_arguments)]
pub fn bloch_decay_rate(
    geometry: &ChainGeometry,
    k: f64,
    phi: f64,
    band: Band,
    n_atoms: usize,
    delta0: f64,
    cutoff: usize,
    params: &ModelParams,
) -> Result<f64> {
    let chain = build_chain(n_atoms, geometry.lattice_const, geometry.shift_x, geometry.shift_y)?;
    let couplings = build_coupling_matrices(&chain, phi, params)?;
    let b = rice_mele_bloch(geometry, phi, k, delta0, cutoff, params)?;
    let u = band_eigenvector(b.d, band);
    let psi = bloch_state(&u, b.k, n_atoms, geometry.lattice_const);
    decay_expectation(&psi, &couplings.gamma)
}

/// Fills `gamma_minus`/`gamma_plus` with finite-chain decay rates of the grid's
/// Bloch states.
pub fn fill_decay_rates(
    grid: &mut SyntheticBandGrid,
    geometry: &ChainGeometry,
    n_atoms: usize,
    params: &ModelParams,
) -> Result<()> {
    let chain = build_chain(n_atoms, geometry.lattice_const, geometry.shift_x, geometry.shift_y)?;
    let (nk, nphi) = (grid.nk, grid.nphi);
    let lines: Vec<(Vec<f64>, Vec<f64>)> = (0..nphi)
        .into_par_iter()
        .map(|l| {
            let couplings = build_coupling_matrices(&chain, grid.phi_grid[l], params)?;
            let mut lo = Vec::with_capacity(nk);
            let mut hi = Vec::with_capacity(nk);
            for j in 0..nk {
                let v = grid.bloch[grid.index(j, l)];
                for (band, out) in [(Band::Lower, &mut lo), (Band::Upper, &mut hi)] {
                    let u = band_eigenvector([v[1], v[2], v[3]], band);
                    let psi = bloch_state(&u, grid.k_grid[j], n_atoms, grid.lattice_const);
                    out.push(decay_expectation(&psi, &couplings.gamma)?);
                }
            }
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    let mut gm = vec![0.0; nk * nphi];
    let mut gp = vec![0.0; nk * nphi];
    for (l, (lo, hi)) in lines.iter().enumerate() {
        for j in 0..nk {
            gm[j * nphi + l] = lo[j];
            gp[j * nphi + l] = hi[j];
        }
    }
    grid.gamma_minus = Some(gm);
    grid.gamma_plus = Some(gp);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_chain;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn zigzag(a: f64) -> ChainGeometry {
        build_chain(2, a, 0.0, 0.0).unwrap()
    }

    #[test]
    fn staggering_vanishes_at_quarter_turn() {
        let g = zigzag(0.3);
        let p = ModelParams::default();
        let rm = rice_mele_bloch(&g, FRAC_PI_4, 0.7, 1.0, 512, &p).unwrap();
        let plain = crate::bloch::bloch_hamiltonian(&g, FRAC_PI_4, 0.7, 512, &p).unwrap();
        assert!(rm.d[2].abs() < 1e-15);
        assert_eq!(rm.d[0], plain.d[0]);
        assert_eq!(rm.d0, plain.d0);
        for &phi in &[0.1, -0.7, 1.3] {
            assert_abs_diff_eq!(rice_mele_dz(1.0, phi + FRAC_PI_2), -rice_mele_dz(1.0, phi), epsilon = 1e-15);
        }
    }

    #[test]
    fn staggering_lifts_degeneracies() {
        let g = zigzag(0.3);
        let p = ModelParams::default();
        for &phi in &[0.0, FRAC_PI_2, -FRAC_PI_2] {
            let k = PI / 0.3;
            let plain = crate::bloch::bloch_hamiltonian(&g, phi, k, 4096, &p).unwrap();
            let rm = rice_mele_bloch(&g, phi, k, 1.0, 4096, &p).unwrap();
            assert!(plain.d_norm() < 1e-6);
            assert!(rm.omega_plus() - rm.omega_minus() > 1.9);
        }
    }

    #[test]
    fn eigenvectors_solve_two_band_problem() {
        for d in [[0.3f64, -0.4, 1.2], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0], [0.0, 0.0, 2.0], [-0.2, 0.9, 0.0]] {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            for (band, lambda) in [(Band::Lower, -n), (Band::Upper, n)] {
                let u = band_eigenvector(d, band);
                let h0 = Complex64::new(d[2], 0.0) * u[0] + Complex64::new(d[0], -d[1]) * u[1];
                let h1 = Complex64::new(d[0], d[1]) * u[0] - Complex64::new(d[2], 0.0) * u[1];
                assert!((h0 - u[0] * lambda).norm() < 1e-12);
                assert!((h1 - u[1] * lambda).norm() < 1e-12);
                assert_abs_diff_eq!(u[0].norm_sqr() + u[1].norm_sqr(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn grid_preconditions() {
        let g = zigzag(0.3);
        let p = ModelParams::default();
        assert!(berry_curvature_grid(&g, 1.0, 32, 64, 256, &p).is_err());
        assert!(berry_curvature_grid(&g, 0.0, 64, 64, 256, &p).is_err());
    }

    #[test]
    fn chern_numbers_and_pump() {
        let g = zigzag(0.3);
        let p = ModelParams::default();
        let grid = berry_curvature_grid(&g, 1.0, 64, 64, 1024, &p).unwrap();
        assert!(grid.min_gap() > 0.0);
        let pump = pump_displacement(&grid).unwrap();
        assert_eq!(pump.chern_minus + pump.chern_plus, 0);
        assert_eq!(pump.chern_minus.abs(), 1);
        let mean: f64 = pump.displacement_minus.iter().sum::<f64>() / grid.nk as f64;
        assert_abs_diff_eq!(mean, pump.chern_minus as f64, epsilon = 1e-10);
        for (m, q) in grid.flux_minus.iter().zip(&grid.flux_plus) {
            assert!((m + q).abs() < 1e-8);
        }
    }

    #[test]
    fn decay_rates_bright_and_dark() {
        let g = zigzag(0.3);
        let p = ModelParams::default();
        let bright = bloch_decay_rate(&g, 0.0, 0.2, Band::Lower, 50, 1.0, 2048, &p).unwrap();
        assert!(bright > 1.0, "{bright}");
        let k = 0.8 * PI / 0.3;
        let dark = bloch_decay_rate(&g, k, 0.2, Band::Lower, 50, 1.0, 2048, &p).unwrap();
        let dark_longer = bloch_decay_rate(&g, k, 0.2, Band::Lower, 100, 1.0, 2048, &p).unwrap();
        assert!(dark < 0.1, "{dark}");
        assert!(dark_longer < dark, "{dark_longer} !< {dark}");
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_abs_diff_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>(), epsilon = 1e-10);
    }
}

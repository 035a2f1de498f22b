//! Emitter positions of the zigzag chain and the polarization angle.
//!
//! The chain has two sublattices. Site `2j` (0-based) is an A atom at
//! `(j·a, 0, 0)`; site `2j + 1` is a B atom at
//! `(j·a + a/2 + Δx·a, a/2 + Δy·a, 0)`. With `Δx = Δy = 0` both bonds of an
//! A atom make ±45° with the chain axis.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs closer than this (in units of λ₀) are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Physical constants of a single emitter.
///
/// All library outputs are expressed in units of `gamma0` (energies) and
/// `lambda0` (lengths). `omega0` is only a reference: spectra are reported
/// as `ω − ω₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub gamma0: f64,
    pub lambda0: f64,
    pub k0: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, gamma0: f64, lambda0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be > 0, got {gamma0}")));
        }
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda0 must be > 0, got {lambda0}")));
        }
        Ok(Self { omega0, gamma0, lambda0, k0: TAU / lambda0 })
    }
}

impl Default for ModelParams {
    /// Natural units: Γ₀ = 1, λ₀ = 1, k₀ = 2π.
    fn default() -> Self {
        Self { omega0: 0.0, gamma0: 1.0, lambda0: 1.0, k0: TAU }
    }
}

/// Sublattice label of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    /// Sublattice of 0-based site `i`.
    pub fn of_site(i: usize) -> Self {
        if i.is_multiple_of(2) {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }
}

/// Positions of a finite zigzag chain, in units of λ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    pub n_atoms: usize,
    /// Lattice constant `a` in units of λ₀.
    pub lattice_const: f64,
    /// Shift of the B sublattice along x, in units of `a`.
    pub shift_x: f64,
    /// Shift of the B sublattice along y, in units of `a`.
    pub shift_y: f64,
    pub positions: Vec<[f64; 3]>,
}

impl ChainGeometry {
    /// Offset of the B atom relative to the A atom of the same unit cell.
    pub fn basis_offset(&self) -> [f64; 3] {
        basis_offset(self.lattice_const, self.shift_x, self.shift_y)
    }

    /// Number of unit cells.
    pub fn n_cells(&self) -> usize {
        self.n_atoms / 2
    }

    /// Unit-cell index of 0-based site `i`.
    pub fn cell_of(&self, i: usize) -> usize {
        i / 2
    }
}

fn basis_offset(a: f64, shift_x: f64, shift_y: f64) -> [f64; 3] {
    [a * (0.5 + shift_x), a * (0.5 + shift_y), 0.0]
}

/// Builds the zigzag chain with `n_atoms` emitters.
pub fn build_chain(n_atoms: usize, lattice_const: f64, shift_x: f64, shift_y: f64) -> Result<ChainGeometry> {
    if n_atoms < 2 || !n_atoms.is_multiple_of(2) {
        return Err(Error::InvalidGeometry(format!(
            "n_atoms must be even and >= 2, got {n_atoms}"
        )));
    }
    if !(lattice_const > 0.0 && lattice_const.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "lattice_const must be > 0, got {lattice_const}"
        )));
    }
    if !shift_x.is_finite() || !shift_y.is_finite() {
        return Err(Error::InvalidGeometry("shifts must be finite".into()));
    }

    let b = basis_offset(lattice_const, shift_x, shift_y);
    let mut positions = Vec::with_capacity(n_atoms);
    for j in 0..n_atoms / 2 {
        let x = j as f64 * lattice_const;
        positions.push([x, 0.0, 0.0]);
        positions.push([x + b[0], b[1], b[2]]);
    }

    for i in 0..n_atoms {
        for j in i + 1..n_atoms {
            let distance = distance(&positions[i], &positions[j]);
            if distance < COINCIDENCE_TOL {
                return Err(Error::CoincidentAtoms { i, j, distance });
            }
        }
    }

    Ok(ChainGeometry { n_atoms, lattice_const, shift_x, shift_y, positions })
}

pub(crate) fn distance(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// In-plane orientation of all transition dipoles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization {
    /// Angle to the x axis in radians, within (−π/2, π/2].
    pub phi: f64,
}

impl Polarization {
    /// Unit dipole vector `(cos φ, sin φ, 0)`.
    pub fn dipole(&self) -> [f64; 3] {
        dipole(self.phi)
    }
}

pub(crate) fn dipole(phi: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [c, s, 0.0]
}

/// Maps any finite angle onto its representative in (−π/2, π/2].
pub fn canonicalize_phi(phi_raw: f64) -> Result<Polarization> {
    if !phi_raw.is_finite() {
        return Err(Error::InvalidAngle(phi_raw));
    }
    let mut phi = phi_raw - PI * ((phi_raw + FRAC_PI_2) / PI).floor();
    if phi <= -FRAC_PI_2 {
        phi = FRAC_PI_2;
    }
    Ok(Polarization { phi })
}

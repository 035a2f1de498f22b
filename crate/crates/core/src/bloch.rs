//! Long-range Bloch Hamiltonian `H(k) = d₀σ₀ + d·σ` and its winding number.
//!
//! The chain couplings decay like `1/r` with an oscillating phase, so plain
//! truncated lattice sums converge only as `1/M`. All sums here use a smooth
//! window: terms with `|m| ≤ M/2` carry full weight and the weight falls to
//! zero at `|m| = M` through a C^∞ step. This summation converges to the same
//! limit and does so faster than any power of `M` away from the light line
//! `|k| = k₀`, where the sums diverge logarithmically.
//!
//! Fourier phases use the unit-cell index only, so `H(k + 2π/a) = H(k)` and
//!
//! ```text
//! d₀(k)      = Σ_{m≥1} 2 Ω_AA(m) cos(kam)
//! dx − i dy  = Σ_m Ω_AB(m) e^{ikam}
//! ```
//!
//! with `Ω_AB(m)` the coupling between the A atom of cell 0 and the B atom of
//! cell `m`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::dipole_coupling::coupling_kernel;
use crate::error::{Error, Result};
use crate::geometry::{dipole, ChainGeometry, ModelParams};

pub const DEFAULT_K_POINTS: usize = 1024;
pub const DEFAULT_CUTOFF: usize = 4096;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Minimum of `|(dx, dy)|` below which the winding number is ill-defined.
pub const DEGENERACY_EPS: f64 = 1e-6;
pub const MIN_K_POINTS: usize = 64;
/// Upper limit for automatic k-grid refinement in [`winding_number`].
pub const MAX_K_POINTS: usize = 1 << 16;
pub const CONVERGE_START: usize = 256;
pub const CONVERGE_CAP: usize = 1 << 20;

/// C^∞ window: 1 for `|m| ≤ M/2`, 0 for `|m| ≥ M`.
pub fn window(m: usize, cutoff: usize) -> f64 {
    if cutoff == 1 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let x = m as f64 / cutoff as f64;
    if x <= 0.5 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let t = 2.0 * x - 1.0;
    let rise = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let up = rise(t);
    1.0 - up / (up + rise(1.0 - t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub k: f64,
    pub phi: f64,
    pub d0: f64,
    /// `(dx, dy, dz)`.
    pub d: [f64; 3],
    pub cutoff_cells: usize,
    pub converged: bool,
    /// Set when the requested `k` was outside (−π/a, π/a] and got wrapped.
    pub wrapped: bool,
}

impl BlochVector {
    pub fn dxy_norm(&self) -> f64 {
        self.d[0].hypot(self.d[1])
    }

    pub fn d_norm(&self) -> f64 {
        (self.d[0] * self.d[0] + self.d[1] * self.d[1] + self.d[2] * self.d[2]).sqrt()
    }

    pub fn omega_minus(&self) -> f64 {
        self.d0 - self.d_norm()
    }

    pub fn omega_plus(&self) -> f64 {
        self.d0 + self.d_norm()
    }
}

/// Wraps `k` into (−π/a, π/a]; the flag tells whether it moved.
pub fn wrap_k(k: f64, lattice_const: f64) -> (f64, bool) {
    let g = TAU / lattice_const;
    let half = PI / lattice_const;
    if k > -half && k <= half {
        return (k, false);
    }
    let mut w = k - g * ((k + half) / g).floor();
    if w <= -half {
        w += g;
    }
    (w, true)
}

/// Windowed real-space couplings of one unit cell, ready for Fourier sums.
#[derive(Debug, Clone)]
pub struct LatticeSums {
    pub lattice_const: f64,
    pub phi: f64,
    pub cutoff: usize,
    /// `w(m)·Ω_AA(m)` for `m = 1..=M` at index `m − 1`.
    intra: Vec<f64>,
    /// `w(|m|)·Ω_AB(m)` for `m = −M..=M` at index `m + M`.
    inter: Vec<f64>,
}

impl LatticeSums {
    pub fn new(geometry: &ChainGeometry, phi: f64, cutoff: usize, params: &ModelParams) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        let a = geometry.lattice_const;
        let b = geometry.basis_offset();
        let p = dipole(phi);
        let intra = (1..=cutoff)
            .map(|m| Ok(window(m, cutoff) * coupling_kernel([m as f64 * a, 0.0, 0.0], &p, params)?.re))
            .collect::<Result<Vec<_>>>()?;
        let m_max = cutoff as i64;
        let inter = (-m_max..=m_max)
            .map(|m| {
                let sep = [m as f64 * a + b[0], b[1], b[2]];
                Ok(window(m.unsigned_abs() as usize, cutoff) * coupling_kernel(sep, &p, params)?.re)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lattice_const: a, phi, cutoff, intra, inter })
    }

    /// Drops the intra-sublattice couplings, so `d₀ ≡ 0`.
    pub fn stripped(mut self) -> Self {
        self.intra.iter_mut().for_each(|x| *x = 0.0);
        self
    }

    /// Inter-sublattice coupling `w(|m|)·Ω_AB(m)`.
    pub fn inter_coupling(&self, m: i64) -> f64 {
        self.inter[(m + self.cutoff as i64) as usize]
    }

    /// `(d₀, dx − i dy)` at a single `k` by direct summation.
    pub fn evaluate(&self, k: f64) -> (f64, Complex64) {
        let a = self.lattice_const;
        let d0: f64 = self
            .intra
            .iter()
            .enumerate()
            .map(|(i, w)| 2.0 * w * (k * a * (i + 1) as f64).cos())
            .sum();
        let m_max = self.cutoff as i64;
        let f: Complex64 = (-m_max..=m_max)
            .zip(&self.inter)
            .map(|(m, w)| Complex64::from_polar(*w, k * a * m as f64))
            .sum();
        (d0, f)
    }

    /// Bloch vector at `k` (wrapped into the Brillouin zone).
    pub fn bloch_vector(&self, k: f64) -> BlochVector {
        let (k, wrapped) = wrap_k(k, self.lattice_const);
        let (d0, f) = self.evaluate(k);
        BlochVector {
            k,
            phi: self.phi,
            d0,
            d: [f.re, -f.im, 0.0],
            cutoff_cells: self.cutoff,
            converged: true,
            wrapped,
        }
    }

    /// `(d₀, dx − i dy)` on `k_j = k_start + 2πj/(a·nk)`, `j = 0..nk`.
    ///
    /// Aliases the couplings modulo `nk` and evaluates the resulting length-`nk`
    /// discrete Fourier transform, so the cost is `O(M + nk²)`.
    pub fn evaluate_uniform(&self, k_start: f64, nk: usize) -> Vec<(f64, Complex64)> {
        let a = self.lattice_const;
        let mut intra_folded = vec![Complex64::new(0.0, 0.0); nk];
        let mut inter_folded = vec![Complex64::new(0.0, 0.0); nk];
        for (i, w) in self.intra.iter().enumerate() {
            let m = (i + 1) as i64;
            let phase = Complex64::from_polar(2.0 * w, k_start * a * m as f64);
            intra_folded[m.rem_euclid(nk as i64) as usize] += phase;
        }
        let m_max = self.cutoff as i64;
        for (m, w) in (-m_max..=m_max).zip(&self.inter) {
            let phase = Complex64::from_polar(*w, k_start * a * m as f64);
            inter_folded[m.rem_euclid(nk as i64) as usize] += phase;
        }
        let twiddle: Vec<Complex64> = (0..nk)
            .map(|t| Complex64::from_polar(1.0, TAU * t as f64 / nk as f64))
            .collect();
        (0..nk)
            .map(|j| {
                let mut d0 = Complex64::new(0.0, 0.0);
                let mut f = Complex64::new(0.0, 0.0);
                for r in 0..nk {
                    let tw = twiddle[(j * r) % nk];
                    d0 += intra_folded[r] * tw;
                    f += inter_folded[r] * tw;
                }
                (d0.re, f)
            })
            .collect()
    }
}

/// Bloch vector of the plain (unstaggered) chain at `(k, φ)`.
pub fn bloch_hamiltonian(
    geometry: &ChainGeometry,
    phi: f64,
    k: f64,
    cutoff_cells: usize,
    params: &ModelParams,
) -> Result<BlochVector> {
    Ok(LatticeSums::new(geometry, phi, cutoff_cells, params)?.bloch_vector(k))
}

/// Doubles the window size from [`CONVERGE_START`] until `d₀` and `d` change
/// by less than `tolerance`, or [`CONVERGE_CAP`] is reached.
pub fn converge_bloch(
    geometry: &ChainGeometry,
    phi: f64,
    k: f64,
    tolerance: f64,
    params: &ModelParams,
) -> Result<BlochVector> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tolerance}")));
    }
    let mut cutoff = CONVERGE_START;
    let mut prev = bloch_hamiltonian(geometry, phi, k, cutoff, params)?;
    while cutoff < CONVERGE_CAP {
        cutoff *= 2;
        let next = bloch_hamiltonian(geometry, phi, k, cutoff, params)?;
        let dd = ((next.d[0] - prev.d[0]).powi(2) + (next.d[1] - prev.d[1]).powi(2)).sqrt();
        let dd0 = (next.d0 - prev.d0).abs();
        prev = next;
        if dd < tolerance && dd0 < tolerance {
            return Ok(prev);
        }
    }
    prev.converged = false;
    Ok(prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingResult {
    pub nu: i32,
    /// Accumulated angle divided by 2π before rounding.
    pub raw: f64,
    /// Minimum of `|(dx, dy)|` over the k-loop, units of Γ₀.
    pub min_dxy: f64,
    pub well_defined: bool,
    /// Number of k-points after refinement.
    pub k_points: usize,
}

/// Winding of a closed loop of `(dx, dy)` samples, plus the largest angle
/// step taken.
pub fn winding_of_loop(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for j in 0..n {
        let (x0, y0) = points[j];
        let (x1, y1) = points[(j + 1) % n];
        // Angle from (x0, y0) to (x1, y1), in (−π, π].
        let step = (x0 * y1 - y0 * x1).atan2(x0 * x1 + y0 * y1);
        max_step = max_step.max(step.abs());
        total += step;
    }
    (total / TAU, max_step)
}

fn winding_from_sums(sums: &LatticeSums, k_grid_size: usize) -> Result<WindingResult> {
    if k_grid_size < MIN_K_POINTS {
        return Err(Error::InvalidParameter(format!(
            "k_grid_size must be >= {MIN_K_POINTS}, got {k_grid_size}"
        )));
    }
    let k_start = -PI / sums.lattice_const;
    let mut nk = k_grid_size;
    loop {
        let values = sums.evaluate_uniform(k_start, nk);
        let points: Vec<(f64, f64)> = values.iter().map(|(_, f)| (f.re, -f.im)).collect();
        let (raw, max_step) = winding_of_loop(&points);
        let min_dxy = points.iter().map(|(x, y)| x.hypot(*y)).fold(f64::INFINITY, f64::min);
        if max_step >= PI / 2.0 && nk < MAX_K_POINTS && min_dxy > DEGENERACY_EPS {
            nk *= 2;
            continue;
        }
        let nu = raw.round();
        if (raw - nu).abs() > 1e-3 {
            return Err(Error::NumericalFailure(format!("non-integer winding {raw}")));
        }
        return Ok(WindingResult {
            nu: nu as i32,
            raw,
            min_dxy,
            well_defined: min_dxy > DEGENERACY_EPS,
            k_points: nk,
        });
    }
}

/// Winding number of `(dx, dy)` around the origin over the Brillouin zone.
pub fn winding_number(
    geometry: &ChainGeometry,
    phi: f64,
    k_grid_size: usize,
    cutoff_cells: usize,
    params: &ModelParams,
) -> Result<WindingResult> {
    let sums = LatticeSums::new(geometry, phi, cutoff_cells, params)?;
    winding_from_sums(&sums, k_grid_size)
}

/// [`winding_number`] for precomputed (possibly stripped) sums.
pub fn winding_number_for(sums: &LatticeSums, k_grid_size: usize) -> Result<WindingResult> {
    winding_from_sums(sums, k_grid_size)
}

/// `min_k |(dx, dy)|` on a uniform grid of `nk` points; the band gap of the
/// chain without intra-sublattice couplings is twice this value.
pub fn min_dxy(sums: &LatticeSums, nk: usize) -> f64 {
    sums.evaluate_uniform(-PI / sums.lattice_const, nk)
        .iter()
        .map(|(_, f)| f.norm())
        .fold(f64::INFINITY, f64::min)
}

//! C ABI for `ztopo`.
//!
//! Objects are opaque handles created by `*_new`/`*_compute` and released by
//! the matching `*_free`. Every fallible call returns a [`ZtopoStatus`]; on
//! failure a description is available from [`ztopo_last_error`] on the same
//! thread. Array outputs are written into caller buffers whose capacity is
//! passed alongside; a short buffer yields `ZTOPO_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ztopo::bloch::{bloch_hamiltonian, winding_number};
use ztopo::dipole_coupling::build_coupling_matrices;
use ztopo::realspace::{build_hamiltonian, diagonalize, strip_intrasublattice, SpectrumResult};
use ztopo::synthetic::{berry_curvature_grid, pump_displacement, PumpResult, SyntheticBandGrid};
use ztopo::{build_chain, canonicalize_phi, ChainGeometry, Error, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZtopoStatus {
    Ok = 0,
    NullPointer = 1,
    BufferTooSmall = 2,
    InvalidGeometry = 3,
    CoincidentAtoms = 4,
    InvalidAngle = 5,
    InvalidCutoff = 6,
    InvalidParameter = 7,
    InvalidState = 8,
    DegenerateBands = 9,
    NumericalFailure = 10,
    SingularSeparation = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZtopoBand {
    Lower = 0,
    Upper = 1,
}

/// Emitter chain plus model constants.
pub struct ZtopoChain {
    geometry: ChainGeometry,
    params: ModelParams,
}

/// Real-space spectrum of a chain at one polarization angle.
pub struct ZtopoSpectrum {
    inner: SpectrumResult,
}

/// Berry curvature and pumping over the synthetic Brillouin zone.
pub struct ZtopoSyntheticGrid {
    grid: SyntheticBandGrid,
    pump: PumpResult,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZtopoBlochVector {
    pub k: f64,
    pub phi: f64,
    pub d0: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Nonzero when `k` lay outside (−π/a, π/a] and was folded back.
    pub wrapped: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZtopoWinding {
    pub nu: i32,
    pub raw: f64,
    pub min_dxy: f64,
    pub well_defined: u8,
    pub k_points: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ZtopoStatus {
    match e {
        Error::InvalidGeometry(_) => ZtopoStatus::InvalidGeometry,
        Error::CoincidentAtoms { .. } => ZtopoStatus::CoincidentAtoms,
        Error::InvalidAngle(_) => ZtopoStatus::InvalidAngle,
        Error::SingularSeparation => ZtopoStatus::SingularSeparation,
        Error::NumericalFailure(_) => ZtopoStatus::NumericalFailure,
        Error::InvalidState(_) => ZtopoStatus::InvalidState,
        Error::InvalidCutoff(_) => ZtopoStatus::InvalidCutoff,
        Error::DegenerateBands { .. } => ZtopoStatus::DegenerateBands,
        Error::InvalidParameter(_) | Error::Usage(_) | Error::Validation(_) => ZtopoStatus::InvalidParameter,
        Error::Io(_) | Error::Json(_) => ZtopoStatus::Internal,
    }
}

enum Failure {
    Status(ZtopoStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(ZtopoStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZtopoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZtopoStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            ZtopoStatus::Internal
        }
    }
}

/// Copies `src` into the caller buffer `(out, capacity)`.
///
/// # Safety
/// `out` must be valid for `capacity` writes of `f64`.
unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if capacity < src.len() {
        return Err(Failure::Status(
            ZtopoStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ztopo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ztopo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a zigzag chain of `n_atoms` emitters with lattice constant
/// `lattice_const` (units of λ₀) and sublattice-B shifts in units of `a`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_chain_new(
    n_atoms: usize,
    lattice_const: f64,
    shift_x: f64,
    shift_y: f64,
    out: *mut *mut ZtopoChain,
) -> ZtopoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let geometry = build_chain(n_atoms, lattice_const, shift_x, shift_y)?;
        let chain = Box::new(ZtopoChain { geometry, params: ModelParams::default() });
        *out = Box::into_raw(chain);
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a handle from [`ztopo_chain_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ztopo_chain_free(chain: *mut ZtopoChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of emitters, or 0 for a NULL handle.
///
/// # Safety
/// `chain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_chain_len(chain: *const ZtopoChain) -> usize {
    chain.as_ref().map_or(0, |c| c.geometry.n_atoms)
}

/// Writes positions as `x0, y0, z0, x1, ...` (`3 * n_atoms` values).
///
/// # Safety
/// `chain` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_chain_positions(chain: *const ZtopoChain, out: *mut f64, capacity: usize) -> ZtopoStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let flat: Vec<f64> = chain.geometry.positions.iter().flatten().copied().collect();
        copy_out(&flat, out, capacity)
    })
}

/// Diagonalizes the real-space Hamiltonian at polarization `phi`. A nonzero
/// `delta0` adds the staggered potential; `stripped` removes
/// intra-sublattice couplings (requires `delta0 == 0`).
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_compute(
    chain: *const ZtopoChain,
    phi: f64,
    delta0: f64,
    stripped: bool,
    out: *mut *mut ZtopoSpectrum,
) -> ZtopoStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let phi = canonicalize_phi(phi)?.phi;
        let couplings = build_coupling_matrices(&chain.geometry, phi, &chain.params)?;
        let mut h = build_hamiltonian(&couplings, (delta0 != 0.0).then_some(delta0));
        if stripped {
            h = strip_intrasublattice(&h)?;
        }
        let inner = diagonalize(&h)?;
        *out = Box::into_raw(Box::new(ZtopoSpectrum { inner }));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_free(spectrum: *mut ZtopoSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of eigenstates, or 0 for NULL.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_len(spectrum: *const ZtopoSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.n())
}

/// Ascending eigenvalues `ω − ω₀` in units of Γ₀.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_eigenvalues(
    spectrum: *const ZtopoSpectrum,
    out: *mut f64,
    capacity: usize,
) -> ZtopoStatus {
    guard(|| copy_out(&spectrum.as_ref().ok_or_else(|| null("spectrum"))?.inner.eigenvalues, out, capacity))
}

/// Inverse participation ratio of every eigenstate.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_ipr(spectrum: *const ZtopoSpectrum, out: *mut f64, capacity: usize) -> ZtopoStatus {
    guard(|| copy_out(&spectrum.as_ref().ok_or_else(|| null("spectrum"))?.inner.ipr, out, capacity))
}

/// Maximal IPR over all eigenstates, or NaN for NULL.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_loc(spectrum: *const ZtopoSpectrum) -> f64 {
    spectrum.as_ref().map_or(f64::NAN, |s| s.inner.loc)
}

/// Real amplitudes of eigenstate `index` (ascending order).
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_spectrum_eigenvector(
    spectrum: *const ZtopoSpectrum,
    index: usize,
    out: *mut f64,
    capacity: usize,
) -> ZtopoStatus {
    guard(|| {
        let s = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.inner;
        if index >= s.n() {
            return Err(Failure::Status(
                ZtopoStatus::InvalidParameter,
                format!("eigenstate {index} out of range (n = {})", s.n()),
            ));
        }
        let col: Vec<f64> = s.eigenvectors.column(index).iter().copied().collect();
        copy_out(&col, out, capacity)
    })
}

/// Bloch vector of the infinite chain with the unit cell of `chain`.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_bloch_vector(
    chain: *const ZtopoChain,
    phi: f64,
    k: f64,
    cutoff: usize,
    out: *mut ZtopoBlochVector,
) -> ZtopoStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let phi = canonicalize_phi(phi)?.phi;
        let b = bloch_hamiltonian(&chain.geometry, phi, k, cutoff, &chain.params)?;
        *out = ZtopoBlochVector {
            k: b.k,
            phi: b.phi,
            d0: b.d0,
            dx: b.d[0],
            dy: b.d[1],
            dz: b.d[2],
            wrapped: b.wrapped as u8,
        };
        Ok(())
    })
}

/// Winding number of `(dx, dy)` over the Brillouin zone.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_winding_number(
    chain: *const ZtopoChain,
    phi: f64,
    k_points: usize,
    cutoff: usize,
    out: *mut ZtopoWinding,
) -> ZtopoStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let phi = canonicalize_phi(phi)?.phi;
        let w = winding_number(&chain.geometry, phi, k_points, cutoff, &chain.params)?;
        *out = ZtopoWinding {
            nu: w.nu,
            raw: w.raw,
            min_dxy: w.min_dxy,
            well_defined: w.well_defined as u8,
            k_points: w.k_points,
        };
        Ok(())
    })
}

/// Rice-Mele bands, Berry curvature and pumped displacement on an
/// `nk × nphi` grid.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_compute(
    chain: *const ZtopoChain,
    delta0: f64,
    nk: usize,
    nphi: usize,
    cutoff: usize,
    out: *mut *mut ZtopoSyntheticGrid,
) -> ZtopoStatus {
    guard(|| {
        let chain = chain.as_ref().ok_or_else(|| null("chain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = berry_curvature_grid(&chain.geometry, delta0, nk, nphi, cutoff, &chain.params)?;
        let pump = pump_displacement(&grid)?;
        *out = Box::into_raw(Box::new(ZtopoSyntheticGrid { grid, pump }));
        Ok(())
    })
}

/// # Safety
/// `grid` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_free(grid: *mut ZtopoSyntheticGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Grid dimensions.
///
/// # Safety
/// `grid` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_shape(grid: *const ZtopoSyntheticGrid, nk: *mut usize, nphi: *mut usize) -> ZtopoStatus {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        *nk.as_mut().ok_or_else(|| null("nk"))? = g.nk;
        *nphi.as_mut().ok_or_else(|| null("nphi"))? = g.nphi;
        Ok(())
    })
}

/// Chern numbers of the lower and upper band.
///
/// # Safety
/// `grid` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_chern(
    grid: *const ZtopoSyntheticGrid,
    chern_minus: *mut i32,
    chern_plus: *mut i32,
) -> ZtopoStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        *chern_minus.as_mut().ok_or_else(|| null("chern_minus"))? = g.pump.chern_minus;
        *chern_plus.as_mut().ok_or_else(|| null("chern_plus"))? = g.pump.chern_plus;
        Ok(())
    })
}

/// Berry curvature per plaquette, `nk * nphi` values indexed `j * nphi + l`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_berry(
    grid: *const ZtopoSyntheticGrid,
    band: ZtopoBand,
    out: *mut f64,
    capacity: usize,
) -> ZtopoStatus {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.grid;
        let src = match band {
            ZtopoBand::Lower => &g.berry_minus,
            ZtopoBand::Upper => &g.berry_plus,
        };
        copy_out(src, out, capacity)
    })
}

/// Pumped displacement per k column (`nk` values, units of unit cells).
///
/// # Safety
/// `grid` must be a live handle and `out` valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ztopo_synthetic_displacement(
    grid: *const ZtopoSyntheticGrid,
    band: ZtopoBand,
    out: *mut f64,
    capacity: usize,
) -> ZtopoStatus {
    guard(|| {
        let p = &grid.as_ref().ok_or_else(|| null("grid"))?.pump;
        let src = match band {
            ZtopoBand::Lower => &p.displacement_minus,
            ZtopoBand::Upper => &p.displacement_plus,
        };
        copy_out(src, out, capacity)
    })
}

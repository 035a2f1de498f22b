//! Polarization-dependent topology of zigzag chains of dipole-coupled
//! quantum emitters.
//!
//! Lengths are measured in units of the transition wavelength λ₀ and
//! energies in units of the single-emitter decay rate Γ₀, so the default
//! [`ModelParams`] has `k0 = 2π`. Spectra are reported relative to the
//! transition frequency ω₀.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: emitter positions of the (shifted) zigzag chain.
//! * [`dipole_coupling`]: free-space Green's tensor and the Ω/Γ matrices.
//! * [`realspace`]: single-excitation Hamiltonian, spectra, IPR, decay.
//! * [`bloch`]: long-range Bloch vector by lattice sums, winding number.
//! * [`sweep`]: parallel phase diagrams of winding number and localization.
//! * [`synthetic`]: polarization as a synthetic dimension (Berry curvature,
//!   Chern numbers, pumping, collective decay of Bloch states).
//! * [`cli`]: batch front end used by the `ztopo` binary.

pub mod bloch;
pub mod cli;
pub mod dipole_coupling;
pub mod error;
pub mod geometry;
pub mod output;
pub mod realspace;
pub mod sweep;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{build_chain, canonicalize_phi, ChainGeometry, ModelParams, Polarization};

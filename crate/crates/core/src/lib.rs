//! Simulation toolkit for finite-temperature Bose gases in rotating traps.
//!
//! The gas is split at an energy cutoff into a classical-field band evolved
//! by a stochastic projected Gross-Pitaevskii equation in the rotating frame,
//! and a static thermal reservoir above the cutoff that feeds the band
//! through growth and scattering processes. The band lives in the basis of
//! rotating-frame harmonic-oscillator modes (Laguerre polynomials in radius,
//! angular-momentum eigenstates in angle), where projection is exact and the
//! cutoff is a clean surface in the single-particle spectrum.
//!
//! Module map:
//! - [`basis`]: mode enumeration, Gauss-Laguerre/Fourier quadrature, and the
//!   exact spectral transforms between coefficients and the position grid.
//! - [`reservoir`]: closed forms for the reservoir thermodynamics (critical
//!   temperature, cloud density and angular momentum) and the growth and
//!   scattering rates that couple it to the band.
//! - [`sampler`]: thermal initial ensembles with symmetric-ordering noise.
//! - [`dynamics`]: the stochastic equation of motion and its integrator.
//! - [`analysis`]: condensate identification, dense rendering, vortex
//!   detection, and pair statistics.
//! - [`oracle`]: slow brute-force reference implementations used only by the
//!   validation suite.
//!
//! Dimensionless conventions: energies and rotation rates are measured in
//! units of the radial trap frequency, times in its inverse, and lengths in
//! `r0 = sqrt(hbar / (2 m omega_r))`; reservoir-facing routines take SI
//! inputs and make the conversions explicit at the boundary.

pub mod analysis;
pub mod basis;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod oracle;
pub mod reservoir;
pub mod rng;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};

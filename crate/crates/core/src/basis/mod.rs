//! Single-particle basis for the rotating-frame condensate band.
//!
//! The low-energy band is spanned by the Laguerre-Gaussian eigenmodes
//! `Y_{nl}` of the 2D rotating harmonic trap. In trap units
//! (lengths in `r0 = sqrt(hbar / 2 m omega_r)`, frequencies in `omega_r`)
//! a mode has frequency
//!
//! ```text
//! omega_nl = 2n + |l| - (Omega/omega_r) l + 1
//! ```
//!
//! and the band keeps every mode with `2n + |l| - (Omega/omega_r) l <= Nbar`,
//! i.e. single-particle energy at most `E_R = hbar omega_r (Nbar + 1)`.

pub mod laguerre;
pub mod quadrature;
pub mod transform;

pub use quadrature::{build_quadrature, QuadratureTables};
pub use transform::TransformScratch;

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// Harmonic trap plus rotation, in SI units.
#[derive(Debug, Clone, Copy)]
pub struct TrapGeometry {
    /// Radial trap frequency `omega_r` [rad/s].
    pub omega_r: f64,
    /// Axial trap frequency `omega_z` [rad/s].
    pub omega_z: f64,
    /// Rotation frequency `Omega` [rad/s]; must satisfy `|Omega| < omega_r`.
    pub omega_rot: f64,
    /// Atomic mass [kg].
    pub mass: f64,
}

impl TrapGeometry {
    pub fn new(omega_r: f64, omega_z: f64, omega_rot: f64, mass: f64) -> Result<Self> {
        if !(omega_r > 0.0 && omega_z > 0.0 && mass > 0.0) {
            return Err(Error::InvalidParam(
                "trap frequencies and mass must be positive".into(),
            ));
        }
        if omega_rot.abs() >= omega_r {
            return Err(Error::InvalidParam(format!(
                "rotation {omega_rot} rad/s must stay below the radial trap frequency {omega_r}"
            )));
        }
        Ok(Self {
            omega_r,
            omega_z,
            omega_rot,
            mass,
        })
    }

    /// `Omega / omega_r`, the dimensionless rotation rate.
    pub fn omega_frac(&self) -> f64 {
        self.omega_rot / self.omega_r
    }

    /// Radial length unit `r0 = sqrt(hbar / 2 m omega_r)` [m].
    pub fn r0(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega_r)).sqrt()
    }

    /// Centrifugally weakened radial frequency `sqrt(omega_r^2 - Omega^2)`.
    pub fn omega_perp(&self) -> f64 {
        (self.omega_r * self.omega_r - self.omega_rot * self.omega_rot).sqrt()
    }

    /// Effective rotating-frame potential at cylindrical `(r, z)` [J].
    pub fn v_eff(&self, r: f64, z: f64) -> f64 {
        let wp = self.omega_perp();
        0.5 * self.mass * (wp * wp * r * r + self.omega_z * self.omega_z * z * z)
    }

    /// Axial oscillator thickness `sqrt(2 pi hbar / m omega_z)` [m], used to
    /// reduce the 3D interaction strength to the 2D plane.
    pub fn axial_thickness(&self) -> f64 {
        (2.0 * std::f64::consts::PI * HBAR / (self.mass * self.omega_z)).sqrt()
    }
}

/// Energy cutoff for the condensate band, stored as the integer band depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffSpec {
    /// `Nbar`: the band keeps modes with `2n + |l| - (Omega/omega_r) l <= Nbar`.
    pub nbar: u32,
}

impl CutoffSpec {
    pub fn new(nbar: u32) -> Self {
        Self { nbar }
    }

    /// Cutoff energy in units of `hbar omega_r`.
    pub fn e_r_dimless(&self) -> f64 {
        self.nbar as f64 + 1.0
    }

    /// Cutoff energy `E_R = hbar omega_r (Nbar + 1)` [J].
    pub fn e_r(&self, trap: &TrapGeometry) -> f64 {
        HBAR * trap.omega_r * self.e_r_dimless()
    }
}

/// Radial and angular quantum numbers of one basis mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub n: u32,
    pub l: i32,
}

/// Dimensionless rotating-frame mode frequency `2n + |l| - of*l + 1`.
pub fn mode_frequency(idx: ModeIndex, omega_frac: f64) -> f64 {
    2.0 * idx.n as f64 + idx.l.unsigned_abs() as f64 - omega_frac * idx.l as f64 + 1.0
}

/// Enumerated condensate band: modes ordered by `n`, then `l` ascending.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub modes: Vec<ModeIndex>,
    /// `omega_nl` for each mode, same order as `modes`.
    pub freqs: Vec<f64>,
    pub omega_frac: f64,
    pub nbar: u32,
    /// Largest `-l` present at `n = 0` (magnitude).
    pub lbar_minus: u32,
    /// Largest `+l` present at `n = 0`.
    pub lbar_plus: u32,
    /// `(first, count)` of the contiguous run of modes for each `n`.
    n_runs: Vec<(usize, usize)>,
}

impl ModeTable {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest radial quantum number in the band.
    pub fn n_max(&self) -> u32 {
        self.n_runs.len() as u32 - 1
    }

    /// Contiguous slice positions `[first, first+count)` of the modes with
    /// radial number `n`.
    pub fn run(&self, n: u32) -> Option<(usize, usize)> {
        self.n_runs.get(n as usize).copied()
    }

    /// Position of mode `(n, l)` in the table, if the band contains it.
    pub fn index_of(&self, idx: ModeIndex) -> Option<usize> {
        let (first, count) = self.run(idx.n)?;
        let l0 = self.modes[first].l;
        let off = idx.l.checked_sub(l0)?;
        if off >= 0 && (off as usize) < count {
            Some(first + off as usize)
        } else {
            None
        }
    }

    /// True when `(n, l)` satisfies the band inequality.
    pub fn contains(nbar: u32, omega_frac: f64, n: u32, l: i64) -> bool {
        // Small slack keeps exactly representable boundary cases (for example
        // Omega/omega_r = 1/2) from being dropped by rounding in the product.
        2.0 * n as f64 + l.unsigned_abs() as f64 - omega_frac * l as f64
            <= nbar as f64 + 1e-9
    }

    /// Build the band directly from the dimensionless parameters.
    pub fn build(nbar: u32, omega_frac: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&omega_frac) {
            return Err(Error::InvalidParam(format!(
                "rotation fraction {omega_frac} must lie in [0, 1)"
            )));
        }
        let mut modes = Vec::new();
        let mut n_runs = Vec::new();
        let mut lbar_minus = 0u32;
        let mut lbar_plus = 0u32;
        for n in 0..=(nbar / 2) {
            // Floor of the closed-form bound, then bump across the boundary
            // to make the integer range exact in floating point.
            let budget = (nbar - 2 * n) as f64;
            let mut l_plus = (budget / (1.0 - omega_frac)).floor() as i64;
            while Self::contains(nbar, omega_frac, n, l_plus + 1) {
                l_plus += 1;
            }
            while l_plus > 0 && !Self::contains(nbar, omega_frac, n, l_plus) {
                l_plus -= 1;
            }
            let mut l_minus = (budget / (1.0 + omega_frac)).floor() as i64;
            while Self::contains(nbar, omega_frac, n, -(l_minus + 1)) {
                l_minus += 1;
            }
            while l_minus > 0 && !Self::contains(nbar, omega_frac, n, -l_minus) {
                l_minus -= 1;
            }
            if n == 0 {
                lbar_minus = l_minus as u32;
                lbar_plus = l_plus as u32;
            }
            let first = modes.len();
            for l in -l_minus..=l_plus {
                modes.push(ModeIndex {
                    n,
                    l: i32::try_from(l).map_err(|_| {
                        Error::InvalidParam("angular index exceeds i32 range".into())
                    })?,
                });
            }
            n_runs.push((first, modes.len() - first));
        }
        let freqs = modes
            .iter()
            .map(|&m| mode_frequency(m, omega_frac))
            .collect();
        Ok(Self {
            modes,
            freqs,
            omega_frac,
            nbar,
            lbar_minus,
            lbar_plus,
            n_runs,
        })
    }
}

/// Enumerate the condensate band for a trap and cutoff.
pub fn enumerate_modes(trap: &TrapGeometry, cutoff: CutoffSpec) -> Result<ModeTable> {
    if trap.omega_rot < 0.0 {
        return Err(Error::InvalidParam(
            "mode enumeration assumes corotating frame (Omega >= 0)".into(),
        ));
    }
    ModeTable::build(cutoff.nbar, trap.omega_frac())
}

//! Physical constants (SI) and the default atomic species.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K].
pub const KB: f64 = 1.380_649e-23;

/// Bohr radius [m].
pub const A_BOHR: f64 = 5.291_772_109e-11;

/// Mass of 87Rb [kg].
pub const MASS_RB87: f64 = 1.443_160_6e-25;

/// s-wave scattering length of 87Rb, 100.4 Bohr radii [m].
///
/// Literature input, not derived from anything in this crate.
pub const A_RB87: f64 = 100.4 * A_BOHR;

//! Condensate-band field state.

use num_complex::Complex64;

/// Mode coefficients of the condensate-band field at one instant.
///
/// Coefficient order matches the owning [`crate::basis::ModeTable`]. Time is
/// in trap units (`1/omega_r`).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(coeffs: Vec<Complex64>, time: f64) -> Self {
        Self { coeffs, time }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![Complex64::default(); n],
            time: 0.0,
        }
    }

    /// Total condensate-band population `N_GP = sum |alpha|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

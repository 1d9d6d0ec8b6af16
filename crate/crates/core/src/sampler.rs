//! Truncated-Wigner sampling of the grand-canonical ideal-gas initial state.
//!
//! For a non-interacting gas in the rotating frame, each band mode is an
//! independent thermal oscillator. The Wigner distribution of mode `(n, l)`
//! is the complex Gaussian
//!
//! ```text
//! W(alpha) = exp(-|alpha|^2 / (N_nl + 1/2)) / (pi (N_nl + 1/2))
//! N_nl     = 1 / (exp[(omega_nl - mu0) / T0] - 1)
//! ```
//!
//! with all energies in trap units (`omega_nl` the rotating-frame mode
//! frequency, `mu0` and `T0` the reduced chemical potential and temperature).
//! The half quantum is the symmetric-ordering vacuum contribution; observables
//! built from sample averages must subtract it where appropriate.

use crate::basis::ModeTable;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::rng::{complex_unit_normal, SeedLineage};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Parameters of the initial thermal ensemble, in trap units.
///
/// SI temperatures and chemical potentials are converted at the configuration
/// boundary: `t0 = k_B T0 / hbar omega_r`, and `mu0` is the 2D reduced
/// chemical potential (the axial zero-point energy has already been removed).
#[derive(Debug, Clone, Copy)]
pub struct InitialEnsembleSpec {
    /// Reduced temperature `k_B T0 / hbar omega_r`.
    pub t0: f64,
    /// Reduced chemical potential; must lie below every band frequency.
    pub mu0: f64,
    pub n_samples: usize,
    pub seed: SeedLineage,
}

/// Thermal occupation of a mode with rotating-frame frequency `omega`.
pub fn thermal_occupation(omega: f64, spec: &InitialEnsembleSpec) -> Result<f64> {
    if spec.t0 <= 0.0 {
        return Err(Error::InvalidParam("temperature must be positive".into()));
    }
    if omega <= spec.mu0 {
        return Err(Error::Domain(format!(
            "mode frequency {omega} at or below the chemical potential {}; \
             the ideal-gas occupation diverges",
            spec.mu0
        )));
    }
    Ok(1.0 / (((omega - spec.mu0) / spec.t0).exp_m1()))
}

/// Draw one Wigner sample of the band field (sample index `j`).
///
/// Sampling is reproducible and order-independent: sample `j` depends only on
/// the lineage root and `j`.
pub fn sample_wigner(spec: &InitialEnsembleSpec, table: &ModeTable, j: u64) -> Result<FieldState> {
    let mut rng = spec.seed.sample(j);
    let mut coeffs = Vec::with_capacity(table.len());
    for &omega in &table.freqs {
        let n_th = thermal_occupation(omega, spec)?;
        let sigma = (n_th + 0.5).sqrt();
        coeffs.push(sigma * complex_unit_normal(&mut rng));
    }
    Ok(FieldState::new(coeffs, 0.0))
}

/// Draw the full ensemble `0..n_samples`.
pub fn sample_ensemble(spec: &InitialEnsembleSpec, table: &ModeTable) -> Result<Vec<FieldState>> {
    (0..spec.n_samples as u64)
        .map(|j| sample_wigner(spec, table, j))
        .collect()
}

/// One-body density matrix from an ensemble of Wigner samples.
///
/// `rho[(i, j)] = <alpha_i alpha_j^*> - delta_ij / 2`; the half subtracts the
/// symmetric-ordering vacuum so diagonal entries estimate true occupations.
/// The index order matches the trajectory-averaged matrix used for condensate
/// extraction, so the dominant eigenvector is the mode itself rather than its
/// conjugate.
pub fn ensemble_onebody_matrix(samples: &[FieldState]) -> Result<DMatrix<Complex64>> {
    let m = samples
        .first()
        .ok_or_else(|| Error::InvalidParam("empty ensemble".into()))?
        .coeffs
        .len();
    let mut rho = DMatrix::<Complex64>::zeros(m, m);
    for s in samples {
        if s.coeffs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: s.coeffs.len(),
            });
        }
        for i in 0..m {
            let ai = s.coeffs[i];
            for j in 0..m {
                rho[(i, j)] += ai * s.coeffs[j].conj();
            }
        }
    }
    let inv = Complex64::new(1.0 / samples.len() as f64, 0.0);
    rho.iter_mut().for_each(|v| *v *= inv);
    for i in 0..m {
        rho[(i, i)] -= Complex64::new(0.5, 0.0);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ModeTable;
    use approx::assert_relative_eq;

    fn spec(t0: f64, mu0: f64, n: usize) -> InitialEnsembleSpec {
        InitialEnsembleSpec {
            t0,
            mu0,
            n_samples: n,
            seed: SeedLineage::new(42),
        }
    }

    #[test]
    fn occupation_matches_bose_formula() {
        let s = spec(2.0, 0.3, 1);
        let n = thermal_occupation(1.0, &s).unwrap();
        assert_relative_eq!(n, 1.0 / ((0.35f64).exp() - 1.0), max_relative = 1e-14);
        assert!(thermal_occupation(0.3, &s).is_err());
        assert!(thermal_occupation(0.2, &s).is_err());
    }

    #[test]
    fn samples_are_reproducible_and_distinct() {
        let t = ModeTable::build(6, 0.5).unwrap();
        let s = spec(5.0, 0.4, 4);
        let a = sample_wigner(&s, &t, 3).unwrap();
        let b = sample_wigner(&s, &t, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_wigner(&s, &t, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_match_occupations() {
        // Mode-resolved variance over a seeded ensemble: <|alpha|^2> should
        // approach N_nl + 1/2 with relative error ~ 1/sqrt(samples).
        let t = ModeTable::build(4, 0.5).unwrap();
        let s = spec(8.0, 0.7, 4000);
        let ens = sample_ensemble(&s, &t).unwrap();
        for (i, &omega) in t.freqs.iter().enumerate() {
            let target = thermal_occupation(omega, &s).unwrap() + 0.5;
            let mean: f64 =
                ens.iter().map(|f| f.coeffs[i].norm_sqr()).sum::<f64>() / ens.len() as f64;
            assert!(
                (mean / target - 1.0).abs() < 0.1,
                "mode {i}: mean {mean} target {target}"
            );
        }
    }

    #[test]
    fn onebody_matrix_is_hermitian_with_thermal_diagonal() {
        let t = ModeTable::build(4, 0.5).unwrap();
        let s = spec(8.0, 0.7, 3000);
        let ens = sample_ensemble(&s, &t).unwrap();
        let rho = ensemble_onebody_matrix(&ens).unwrap();
        let m = rho.nrows();
        for i in 0..m {
            for j in 0..m {
                let dev = (rho[(i, j)] - rho[(j, i)].conj()).norm();
                assert!(dev < 1e-12, "hermiticity ({i},{j})");
            }
        }
        for (i, &omega) in t.freqs.iter().enumerate() {
            let target = thermal_occupation(omega, &s).unwrap();
            assert!(
                (rho[(i, i)].re / target - 1.0).abs() < 0.15,
                "diagonal {i}: {} vs {target}",
                rho[(i, i)].re
            );
        }
    }
}

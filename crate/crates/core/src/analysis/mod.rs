//! Condensate identification and fraction estimates.
//!
//! The condensate is the dominant eigenpair of the one-body density matrix.
//! For a single stochastic trajectory the matrix is built by *short-time*
//! averaging: snapshots from a brief window replace the ensemble average,
//! which avoids the spurious decoherence that ensemble-averaging over
//! broken-symmetry vortex positions would produce.

pub mod grid;
pub mod vortex;

use crate::dynamics::TrajectoryArchive;
use crate::error::{Error, Result};
use crate::field::FieldState;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default number of snapshots in the short-time average.
pub const DEFAULT_PO_SAMPLES: usize = 50;
/// Default averaging window length: 2.5 trap periods, in trap time units.
pub const DEFAULT_PO_WINDOW: f64 = 2.5 * 2.0 * std::f64::consts::PI;

/// Dominant eigenpair of a one-body density matrix.
#[derive(Debug, Clone)]
pub struct CondensateResult {
    /// Condensate population (largest eigenvalue).
    pub n0: f64,
    /// Unit-norm condensate mode in the band basis (global phase fixed so the
    /// largest component is real positive).
    pub mode: FieldState,
    /// Full eigenvalue spectrum, descending.
    pub spectrum: Vec<f64>,
}

impl CondensateResult {
    /// Condensate wave function scaled to its population.
    pub fn scaled_mode(&self) -> Vec<Complex64> {
        let s = self.n0.max(0.0).sqrt();
        self.mode.coeffs.iter().map(|c| s * c).collect()
    }
}

/// One-body matrix `rho_ij = <a_i^* a_j> - delta_ij / 2` from a set of
/// coefficient vectors.
fn onebody_matrix<'a>(states: impl ExactSizeIterator<Item = &'a FieldState>) -> Result<DMatrix<Complex64>> {
    let count = states.len();
    let mut iter = states;
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidParam("no states for the one-body matrix".into()))?;
    let m = first.coeffs.len();
    let mut rho = DMatrix::<Complex64>::zeros(m, m);
    let mut accumulate = |s: &FieldState| -> Result<()> {
        if s.coeffs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: s.coeffs.len(),
            });
        }
        // rho_ij = <a_i a_j^*>: with this index order the dominant
        // eigenvector *is* the condensate's coefficient vector (the
        // transposed convention would conjugate it, flipping every phase
        // winding of the extracted mode).
        for i in 0..m {
            let ai = s.coeffs[i];
            for j in 0..m {
                rho[(i, j)] += ai * s.coeffs[j].conj();
            }
        }
        Ok(())
    };
    accumulate(first)?;
    for s in iter {
        accumulate(s)?;
    }
    let inv = Complex64::new(1.0 / count as f64, 0.0);
    rho.iter_mut().for_each(|v| *v *= inv);
    for i in 0..m {
        rho[(i, i)] -= Complex64::new(0.5, 0.0);
    }
    Ok(rho)
}

/// One-body density matrix by short-time averaging over a trajectory window.
///
/// `n_samples` snapshots are taken evenly across the snapshots recorded
/// inside `[window.0, window.1]`; fewer available snapshots is an error.
pub fn short_time_density_matrix(
    archive: &TrajectoryArchive,
    window: (f64, f64),
    n_samples: usize,
) -> Result<DMatrix<Complex64>> {
    if n_samples == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let in_window = archive.window(window.0, window.1);
    if in_window.len() < n_samples {
        return Err(Error::InsufficientSnapshots {
            found: in_window.len(),
            need: n_samples,
        });
    }
    let count = in_window.len();
    let picked: Vec<&FieldState> = if n_samples == 1 {
        vec![in_window[count / 2]]
    } else {
        (0..n_samples)
            .map(|i| in_window[i * (count - 1) / (n_samples - 1)])
            .collect()
    };
    onebody_matrix(picked.into_iter())
}

/// Largest eigenpair of a Hermitian one-body matrix.
///
/// Errors with [`Error::NotHermitian`] when the matrix deviates from its
/// adjoint by more than `1e-10` (relative to its largest entry).
pub fn penrose_onsager(rho: &DMatrix<Complex64>) -> Result<CondensateResult> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::InvalidParam("one-body matrix must be square".into()));
    }
    let scale = rho.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut dev = 0.0f64;
    for i in 0..rho.nrows() {
        for j in i..rho.ncols() {
            dev = dev.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let eig = rho.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let col = eig.eigenvectors.column(order[0]);
    let mut coeffs: Vec<Complex64> = col.iter().copied().collect();
    // Fix the arbitrary global phase deterministically.
    if let Some(big) = coeffs
        .iter()
        .cloned()
        .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
    {
        if big.norm() > 0.0 {
            let rot = big.conj() / big.norm();
            for c in coeffs.iter_mut() {
                *c *= rot;
            }
        }
    }
    Ok(CondensateResult {
        n0: spectrum[0],
        mode: FieldState::new(coeffs, 0.0),
        spectrum,
    })
}

/// Condensate fraction bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct CondensateFraction {
    /// Condensate population from the Penrose-Onsager eigenvalue.
    pub n0: f64,
    /// Band population (window mean of `N_GP`, optionally with the
    /// symmetric-ordering half quantum per mode removed).
    pub n_band: f64,
    /// Thermal-cloud population above the cutoff.
    pub n_nc: f64,
    /// `n0 / (n_band + n_nc)`.
    pub fraction: f64,
}

/// Condensate fraction relative to the full (band + cloud) atom number.
pub fn condensate_fraction(
    result: &CondensateResult,
    archive: &TrajectoryArchive,
    window: (f64, f64),
    n_nc: f64,
    subtract_half: bool,
) -> Result<CondensateFraction> {
    let in_window: Vec<f64> = archive
        .observables
        .iter()
        .filter(|o| o.time >= window.0 && o.time <= window.1)
        .map(|o| o.n_gp)
        .collect();
    if in_window.is_empty() {
        return Err(Error::InsufficientSnapshots { found: 0, need: 1 });
    }
    let mut n_band = in_window.iter().sum::<f64>() / in_window.len() as f64;
    if subtract_half {
        n_band -= 0.5 * result.mode.coeffs.len() as f64;
    }
    let fraction = result.n0 / (n_band + n_nc);
    Ok(CondensateFraction {
        n0: result.n0,
        n_band,
        n_nc,
        fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{EvolutionParams, ObservableRecord, RngLineageInfo};

    fn archive_from(states: Vec<FieldState>) -> TrajectoryArchive {
        let observables = states
            .iter()
            .map(|s| ObservableRecord {
                time: s.time,
                n_gp: s.norm_sq(),
                e_gp: 0.0,
                l_z: 0.0,
            })
            .collect();
        TrajectoryArchive {
            snapshots: states,
            observables,
            params: EvolutionParams {
                lambda: 0.0,
                mu_tilde: 0.0,
                t_tilde: 1.0,
                gamma: 0.0,
                dt: 0.1,
                t_end: 1.0,
                noise_on: false,
                snapshot_stride: 1,
            },
            lineage: RngLineageInfo {
                root_seed: 0,
                trajectory_index: 0,
            },
            stability_warning: false,
        }
    }

    #[test]
    fn pure_state_snapshots_give_rank_one_matrix() {
        // Snapshots that are the same mode with rotating phase: the one-body
        // matrix is rank one with eigenvalue |c|^2 - 1/2 on top of the -1/2
        // vacuum floor in the other modes.
        let c = 3.0;
        let states: Vec<FieldState> = (0..40)
            .map(|k| {
                let ph = Complex64::new(0.0, -0.37 * k as f64).exp();
                FieldState::new(
                    vec![c * ph * Complex64::new(0.6, 0.0), c * ph * Complex64::new(0.0, 0.8)],
                    0.1 * k as f64,
                )
            })
            .collect();
        let arch = archive_from(states);
        let rho = short_time_density_matrix(&arch, (0.0, 4.0), 20).unwrap();
        let res = penrose_onsager(&rho).unwrap();
        assert!((res.n0 - (c * c - 0.5)).abs() < 1e-10);
        assert!((res.spectrum[1] + 0.5).abs() < 1e-10);
        // Mode recovered up to phase; the convention rotates the largest
        // component (here index 1, magnitude 0.8) to the real positive axis,
        // carrying the other component to -0.6i.
        assert!((res.mode.coeffs[1] - Complex64::new(0.8, 0.0)).norm() < 1e-10);
        assert!((res.mode.coeffs[0] - Complex64::new(0.0, -0.6)).norm() < 1e-10);
        let overlap = (res.mode.coeffs[0].conj() * Complex64::new(0.6, 0.0)
            + res.mode.coeffs[1].conj() * Complex64::new(0.0, 0.8))
        .norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn insufficient_window_errors() {
        let states: Vec<FieldState> = (0..5)
            .map(|k| FieldState::new(vec![Complex64::new(1.0, 0.0)], k as f64))
            .collect();
        let arch = archive_from(states);
        match short_time_density_matrix(&arch, (0.0, 2.0), 10) {
            Err(Error::InsufficientSnapshots { found, need }) => {
                assert_eq!(found, 3);
                assert_eq!(need, 10);
            }
            other => panic!("expected InsufficientSnapshots, got {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_matrix_is_rejected() {
        let mut rho = DMatrix::<Complex64>::zeros(2, 2);
        rho[(0, 1)] = Complex64::new(0.3, 0.0);
        rho[(1, 0)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            penrose_onsager(&rho),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn fraction_bookkeeping() {
        let states: Vec<FieldState> = (0..11)
            .map(|k| FieldState::new(vec![Complex64::new(4.0, 0.0), Complex64::default()], k as f64))
            .collect();
        let arch = archive_from(states);
        let rho = short_time_density_matrix(&arch, (0.0, 10.0), 5).unwrap();
        let res = penrose_onsager(&rho).unwrap();
        let f = condensate_fraction(&res, &arch, (0.0, 10.0), 4.0, true).unwrap();
        // N_band = 16 - 1 (half quantum for two modes), N0 = 15.5.
        assert!((f.n_band - 15.0).abs() < 1e-12);
        assert!((f.n0 - 15.5).abs() < 1e-12);
        assert!((f.fraction - 15.5 / 19.0).abs() < 1e-12);
    }
}

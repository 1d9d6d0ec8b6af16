//! Stochastic projected Gross-Pitaevskii evolution in the mode basis.
//!
//! In trap units the band coefficients obey the Stratonovich SDE
//!
//! ```text
//! d a_nl = -(i + Gamma) (omega_nl a_nl + lambda F_nl) dtau
//!          + Gamma mu a_nl dtau + dW_nl
//! <dW*_nl dW_mk> = 2 Gamma T delta dtau
//! ```
//!
//! with `F = P[|psi|^2 psi]` the projected cubic term, `Gamma` the
//! dimensionless growth rate, `mu` the reservoir chemical potential and `T`
//! the reservoir temperature (both reduced). The noise is additive, so the
//! Stratonovich and Ito forms coincide; we integrate the deterministic drift
//! with classical RK4 and add the Gaussian increment at the end of each step.
//! Without noise and damping this reduces to the projected GPE, whose
//! invariants (norm, energy, angular momentum) gate the integrator accuracy.

use crate::basis::{ModeTable, QuadratureTables, TransformScratch};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::rng::{complex_unit_normal, SeedLineage};
use num_complex::Complex64;
use rand::Rng;

/// Parameters of one SGPE evolution, all in trap units.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionParams {
    /// Dimensionless 2D interaction strength.
    pub lambda: f64,
    /// Reduced reservoir chemical potential.
    pub mu_tilde: f64,
    /// Reduced reservoir temperature `k_B T / hbar omega_r`.
    pub t_tilde: f64,
    /// Dimensionless damping `hbar gamma / k_B T`.
    pub gamma: f64,
    /// Time step.
    pub dt: f64,
    /// Total evolution time.
    pub t_end: f64,
    /// Include the stochastic increment (off = damped/pure GPE).
    pub noise_on: bool,
    /// Record a snapshot every this many steps.
    pub snapshot_stride: usize,
}

impl EvolutionParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_end >= 0.0) {
            return Err(Error::InvalidParam("dt and t_end must be positive".into()));
        }
        if self.gamma < 0.0 || self.t_tilde < 0.0 {
            return Err(Error::InvalidParam(
                "damping and temperature must be non-negative".into(),
            ));
        }
        if self.noise_on && self.gamma > 0.0 && self.t_tilde == 0.0 {
            return Err(Error::InvalidParam(
                "noise requires a positive reservoir temperature".into(),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParam("snapshot_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Band observables recorded at snapshot times.
#[derive(Debug, Clone, Copy)]
pub struct ObservableRecord {
    pub time: f64,
    /// `N_GP = sum |a|^2`
    pub n_gp: f64,
    /// `E_GP = sum omega |a|^2 + (lambda/2) int |psi|^4`
    pub e_gp: f64,
    /// `L_z = sum l |a|^2`
    pub l_z: f64,
}

/// Seed metadata stored with a trajectory so it can be reproduced exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngLineageInfo {
    pub root_seed: u64,
    pub trajectory_index: u64,
}

/// Output of one SGPE trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryArchive {
    pub snapshots: Vec<FieldState>,
    pub observables: Vec<ObservableRecord>,
    pub params: EvolutionParams,
    pub lineage: RngLineageInfo,
    /// Set when `dt * (max linear frequency + nonlinear shift)` exceeded 0.1
    /// at any recorded snapshot.
    pub stability_warning: bool,
}

impl TrajectoryArchive {
    /// Snapshots with time inside the closed window.
    pub fn window(&self, t0: f64, t1: f64) -> Vec<&FieldState> {
        self.snapshots
            .iter()
            .filter(|s| s.time >= t0 && s.time <= t1)
            .collect()
    }
}

/// Conservative part of the equation of motion: `da/dtau = -i (omega a + lambda F)`.
pub fn gpe_rhs(
    field: &FieldState,
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    scratch: &mut TransformScratch,
) -> Result<Vec<Complex64>> {
    let mut g = growth_target(&field.coeffs, params, table, quad, scratch)?;
    for v in g.iter_mut() {
        *v *= Complex64::new(0.0, -1.0);
    }
    Ok(g)
}

/// Deterministic damping increment `Gamma (mu a - omega a - lambda F) dt`.
pub fn apply_growth(
    field: &FieldState,
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    scratch: &mut TransformScratch,
) -> Result<Vec<Complex64>> {
    let g = growth_target(&field.coeffs, params, table, quad, scratch)?;
    Ok(field
        .coeffs
        .iter()
        .zip(&g)
        .map(|(&a, &gi)| params.gamma * params.dt * (params.mu_tilde * a - gi))
        .collect())
}

/// One end-of-step noise increment for every mode:
/// complex Gaussian with `<|dW|^2> = 2 Gamma T dt`.
pub fn sample_noise(params: &EvolutionParams, rng: &mut impl Rng, n_modes: usize) -> Vec<Complex64> {
    let amp = (2.0 * params.gamma * params.t_tilde * params.dt).sqrt();
    (0..n_modes).map(|_| amp * complex_unit_normal(rng)).collect()
}

/// `g = omega a + lambda F`, shared by the conservative and damping parts.
fn growth_target(
    coeffs: &[Complex64],
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    scratch: &mut TransformScratch,
) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::default(); coeffs.len()];
    if params.lambda != 0.0 {
        quad.nonlinear_term_into(coeffs, scratch, &mut out)?;
        for (o, (&a, &w)) in out.iter_mut().zip(coeffs.iter().zip(&table.freqs)) {
            *o = w * a + params.lambda * *o;
        }
    } else {
        for (o, (&a, &w)) in out.iter_mut().zip(coeffs.iter().zip(&table.freqs)) {
            *o = w * a;
        }
    }
    Ok(out)
}

/// Band observables of a coefficient vector.
pub fn observables(
    coeffs: &[Complex64],
    time: f64,
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    scratch: &mut TransformScratch,
) -> Result<ObservableRecord> {
    let n_gp: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let l_z: f64 = coeffs
        .iter()
        .zip(&table.modes)
        .map(|(c, m)| m.l as f64 * c.norm_sqr())
        .sum();
    let mut e_gp: f64 = coeffs
        .iter()
        .zip(&table.freqs)
        .map(|(c, &w)| w * c.norm_sqr())
        .sum();
    if params.lambda != 0.0 {
        e_gp += 0.5 * params.lambda * quad.quartic_integral(coeffs, scratch)?;
    }
    Ok(ObservableRecord {
        time,
        n_gp,
        e_gp,
        l_z,
    })
}

struct Stepper {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
    f: Vec<Complex64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::default(); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z.clone(),
            f: z,
        }
    }
}

/// Full drift `-(i + Gamma)(omega a + lambda F) + Gamma mu a` into `out`.
fn drift(
    coeffs: &[Complex64],
    out: &mut [Complex64],
    f_buf: &mut [Complex64],
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    scratch: &mut TransformScratch,
) -> Result<()> {
    let damp = Complex64::new(params.gamma, 1.0); // i + Gamma
    let feed = params.gamma * params.mu_tilde;
    if params.lambda != 0.0 {
        quad.nonlinear_term_into(coeffs, scratch, f_buf)?;
        for i in 0..coeffs.len() {
            let g = table.freqs[i] * coeffs[i] + params.lambda * f_buf[i];
            out[i] = -damp * g + feed * coeffs[i];
        }
    } else {
        for i in 0..coeffs.len() {
            out[i] = -damp * (table.freqs[i] * coeffs[i]) + feed * coeffs[i];
        }
    }
    Ok(())
}

/// Integrate one SGPE trajectory.
///
/// The RNG stream is derived from `(lineage, trajectory_index)` alone, so
/// trajectories are reproducible and independent regardless of scheduling.
/// Aborts with [`Error::NonFinite`] if the field leaves the finite range.
pub fn evolve(
    initial: &FieldState,
    params: &EvolutionParams,
    table: &ModeTable,
    quad: &QuadratureTables,
    lineage: SeedLineage,
    trajectory_index: u64,
) -> Result<TrajectoryArchive> {
    params.validate()?;
    if initial.coeffs.len() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            got: initial.coeffs.len(),
        });
    }
    let n = table.len();
    let n_steps = (params.t_end / params.dt).round().max(0.0) as usize;
    let mut rng = lineage.trajectory(trajectory_index);
    let mut scratch = TransformScratch::new(quad);
    let mut st = Stepper::new(n);

    let mut a = initial.coeffs.clone();
    let mut time = initial.time;
    let noise_amp = if params.noise_on {
        (2.0 * params.gamma * params.t_tilde * params.dt).sqrt()
    } else {
        0.0
    };

    let mut snapshots = Vec::new();
    let mut obs = Vec::new();
    let mut warning = false;
    let mut record = |coeffs: &[Complex64],
                      time: f64,
                      scratch: &mut TransformScratch,
                      warning: &mut bool|
     -> Result<()> {
        let rec = observables(coeffs, time, params, table, quad, scratch)?;
        // Crude stiffness estimate: linear band edge plus peak mean-field
        // shift. RK4 is acceptably accurate well below dt * rate ~ 0.1.
        let peak_density = if params.lambda != 0.0 {
            scratch
                .grid()
                .iter()
                .map(|v| v.norm_sqr())
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        let rate = (table.nbar as f64 + 1.0) + params.lambda.abs() * peak_density;
        if params.dt * rate > 0.1 {
            *warning = true;
        }
        snapshots.push(FieldState::new(coeffs.to_vec(), time));
        obs.push(rec);
        Ok(())
    };

    record(&a, time, &mut scratch, &mut warning)?;

    let half = 0.5 * params.dt;
    for step in 1..=n_steps {
        drift(&a, &mut st.k1, &mut st.f, params, table, quad, &mut scratch)?;
        for i in 0..n {
            st.tmp[i] = a[i] + half * st.k1[i];
        }
        drift(&st.tmp, &mut st.k2, &mut st.f, params, table, quad, &mut scratch)?;
        for i in 0..n {
            st.tmp[i] = a[i] + half * st.k2[i];
        }
        drift(&st.tmp, &mut st.k3, &mut st.f, params, table, quad, &mut scratch)?;
        for i in 0..n {
            st.tmp[i] = a[i] + params.dt * st.k3[i];
        }
        drift(&st.tmp, &mut st.k4, &mut st.f, params, table, quad, &mut scratch)?;
        let sixth = params.dt / 6.0;
        for i in 0..n {
            a[i] += sixth * (st.k1[i] + 2.0 * (st.k2[i] + st.k3[i]) + st.k4[i]);
        }
        if noise_amp > 0.0 {
            for v in a.iter_mut() {
                *v += noise_amp * complex_unit_normal(&mut rng);
            }
        }
        time = initial.time + step as f64 * params.dt;

        let mut max_sq = 0.0f64;
        let mut finite = true;
        for v in &a {
            let m = v.norm_sqr();
            finite &= m.is_finite();
            if m > max_sq {
                max_sq = m;
            }
        }
        if !finite {
            return Err(Error::NonFinite {
                time,
                step: step as u64,
                max_abs: max_sq.sqrt(),
            });
        }

        if step % params.snapshot_stride == 0 || step == n_steps {
            record(&a, time, &mut scratch, &mut warning)?;
        }
    }

    Ok(TrajectoryArchive {
        snapshots,
        observables: obs,
        params: *params,
        lineage: RngLineageInfo {
            root_seed: lineage.root,
            trajectory_index,
        },
        stability_warning: warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_quadrature, ModeIndex, ModeTable};
    use approx::assert_relative_eq;

    fn setup(nbar: u32, of: f64) -> (ModeTable, QuadratureTables) {
        let t = ModeTable::build(nbar, of).unwrap();
        let q = build_quadrature(&t).unwrap();
        (t, q)
    }

    fn params(lambda: f64, gamma: f64, dt: f64, t_end: f64, noise: bool) -> EvolutionParams {
        EvolutionParams {
            lambda,
            mu_tilde: 0.2,
            t_tilde: 5.0,
            gamma,
            dt,
            t_end,
            noise_on: noise,
            snapshot_stride: 100,
        }
    }

    #[test]
    fn linear_mode_rotates_at_its_frequency() {
        let (t, q) = setup(6, 0.5);
        let idx = t.index_of(ModeIndex { n: 1, l: 2 }).unwrap();
        let omega = t.freqs[idx];
        let mut init = FieldState::zeros(t.len());
        init.coeffs[idx] = Complex64::new(1.0, 0.0);
        let p = params(0.0, 0.0, 1e-3, 1.0, false);
        let arch = evolve(&init, &p, &t, &q, SeedLineage::new(1), 0).unwrap();
        let last = arch.snapshots.last().unwrap();
        let expect = Complex64::new(0.0, -omega * last.time).exp();
        assert!((last.coeffs[idx] - expect).norm() < 1e-11);
        assert!(!arch.stability_warning);
    }

    #[test]
    fn damped_linear_mode_matches_closed_form() {
        let (t, q) = setup(6, 0.5);
        let idx = t.index_of(ModeIndex { n: 0, l: 1 }).unwrap();
        let omega = t.freqs[idx];
        let mut init = FieldState::zeros(t.len());
        init.coeffs[idx] = Complex64::new(0.7, -0.2);
        let p = params(0.0, 0.3, 1e-3, 2.0, false);
        let arch = evolve(&init, &p, &t, &q, SeedLineage::new(1), 0).unwrap();
        let last = arch.snapshots.last().unwrap();
        // a(t) = a0 exp{ [-(i + Gamma) omega + Gamma mu] t }
        let rate = Complex64::new(-p.gamma * (omega - p.mu_tilde), -omega);
        let expect = init.coeffs[idx] * (rate * last.time).exp();
        assert!((last.coeffs[idx] - expect).norm() < 1e-9);
    }

    #[test]
    fn growth_and_rhs_are_consistent() {
        let (t, q) = setup(6, 0.5);
        let mut s = TransformScratch::new(&q);
        let mut rng = SeedLineage::new(5).sample(0);
        let coeffs: Vec<Complex64> = (0..t.len())
            .map(|_| crate::rng::complex_unit_normal(&mut rng))
            .collect();
        let field = FieldState::new(coeffs, 0.0);
        let p = params(0.08, 0.4, 1e-3, 1.0, false);
        let rhs = gpe_rhs(&field, &p, &t, &q, &mut s).unwrap();
        let grow = apply_growth(&field, &p, &t, &q, &mut s).unwrap();
        // growth = Gamma dt (mu a - i * rhs), since rhs = -i g.
        for i in 0..t.len() {
            let expect =
                p.gamma * p.dt * (p.mu_tilde * field.coeffs[i] - Complex64::i() * rhs[i]);
            assert!((grow[i] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_reservoir_equilibrates_to_bose_occupation() {
        // One-mode band: an exactly solvable complex OU process with
        // stationary <|a|^2> = T / (omega - mu).
        let (t, q) = setup(0, 0.5);
        let p = EvolutionParams {
            lambda: 0.0,
            mu_tilde: 0.2,
            t_tilde: 5.0,
            gamma: 0.5,
            dt: 0.01,
            t_end: 1600.0,
            noise_on: true,
            snapshot_stride: 50,
        };
        let init = FieldState::zeros(1);
        let arch = evolve(&init, &p, &t, &q, SeedLineage::new(99), 0).unwrap();
        // Discard the relaxation transient, then time-average.
        let tail: Vec<f64> = arch
            .snapshots
            .iter()
            .filter(|s| s.time > 40.0)
            .map(|s| s.norm_sq())
            .collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let target = p.t_tilde / (1.0 - p.mu_tilde);
        assert!(
            (mean / target - 1.0).abs() < 0.2,
            "mean {mean} target {target}"
        );
    }

    #[test]
    fn trajectories_are_bit_reproducible() {
        let (t, q) = setup(4, 0.5);
        let mut init = FieldState::zeros(t.len());
        init.coeffs[0] = Complex64::new(1.0, 0.0);
        let p = params(0.05, 0.2, 5e-3, 2.0, true);
        let a = evolve(&init, &p, &t, &q, SeedLineage::new(7), 3).unwrap();
        let b = evolve(&init, &p, &t, &q, SeedLineage::new(7), 3).unwrap();
        assert_eq!(a.snapshots.last().unwrap(), b.snapshots.last().unwrap());
        let c = evolve(&init, &p, &t, &q, SeedLineage::new(7), 4).unwrap();
        assert_ne!(c.snapshots.last().unwrap(), a.snapshots.last().unwrap());
    }

    #[test]
    fn unstable_step_size_aborts_with_nonfinite() {
        let (t, q) = setup(6, 0.5);
        let mut init = FieldState::zeros(t.len());
        for v in init.coeffs.iter_mut() {
            *v = Complex64::new(3.0, 1.0);
        }
        let p = params(1.0, 0.0, 0.8, 80.0, false);
        match evolve(&init, &p, &t, &q, SeedLineage::new(1), 0) {
            Err(Error::NonFinite { step, .. }) => assert!(step >= 1),
            other => panic!("expected NonFinite abort, got {other:?}"),
        }
    }

    #[test]
    fn stability_warning_flags_coarse_steps() {
        let (t, q) = setup(6, 0.5);
        let mut init = FieldState::zeros(t.len());
        init.coeffs[0] = Complex64::new(1.0, 0.0);
        // dt * (Nbar + 1) = 0.35 > 0.1 but still linearly stable for RK4.
        let p = params(0.0, 0.0, 0.05, 1.0, false);
        let arch = evolve(&init, &p, &t, &q, SeedLineage::new(1), 0).unwrap();
        assert!(arch.stability_warning);
    }

    #[test]
    fn observables_record_invariants() {
        let (t, q) = setup(6, 0.5);
        let mut s = TransformScratch::new(&q);
        let mut a = vec![Complex64::default(); t.len()];
        let i = t.index_of(ModeIndex { n: 0, l: 3 }).unwrap();
        a[i] = Complex64::new(2.0, 0.0);
        let p = params(0.0, 0.0, 1e-3, 1.0, false);
        let rec = observables(&a, 0.0, &p, &t, &q, &mut s).unwrap();
        assert_relative_eq!(rec.n_gp, 4.0);
        assert_relative_eq!(rec.l_z, 12.0);
        assert_relative_eq!(rec.e_gp, t.freqs[i] * 4.0);
    }
}

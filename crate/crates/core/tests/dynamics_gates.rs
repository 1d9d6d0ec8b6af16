//! Integrator gates: conserved quantities, an exactly solvable linear case,
//! and reproducibility of the stochastic stream.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rotbec::basis::{build_quadrature, ModeTable};
use rotbec::dynamics::{evolve, EvolutionParams};
use rotbec::field::FieldState;
use rotbec::rng::{complex_unit_normal, SeedLineage};

fn random_state(n: usize, norm_sq: f64, seed: u64) -> FieldState {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut coeffs: Vec<Complex64> = (0..n).map(|_| complex_unit_normal(&mut rng)).collect();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let scale = (norm_sq / total).sqrt();
    for c in coeffs.iter_mut() {
        *c *= scale;
    }
    FieldState::new(coeffs, 0.0)
}

#[test]
fn undamped_evolution_conserves_norm_energy_and_angular_momentum() {
    let table = ModeTable::build(6, 0.5).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let params = EvolutionParams {
        lambda: 0.5,
        mu_tilde: 0.0,
        t_tilde: 0.0,
        gamma: 0.0,
        dt: 5e-4,
        t_end: 0.5,
        noise_on: false,
        snapshot_stride: 200,
    };
    let initial = random_state(table.len(), 10.0, 31);
    let arch = evolve(&initial, &params, &table, &quad, SeedLineage::new(1), 0).unwrap();
    assert!(!arch.stability_warning);

    let first = &arch.observables[0];
    assert!(arch.observables.len() >= 6);
    for rec in &arch.observables[1..] {
        let dn = (rec.n_gp - first.n_gp).abs() / first.n_gp;
        let de = (rec.e_gp - first.e_gp).abs() / first.e_gp.abs();
        let dl = (rec.l_z - first.l_z).abs() / first.n_gp;
        assert!(dn <= 1e-10, "norm drift {dn:.3e} at t = {}", rec.time);
        assert!(de <= 1e-8, "energy drift {de:.3e} at t = {}", rec.time);
        assert!(dl <= 1e-9, "L_z drift {dl:.3e} at t = {}", rec.time);
    }

    // Snapshots land every stride * dt = 0.1 plus the endpoints.
    let windowed = arch.window(0.2, 0.5);
    assert_eq!(windowed.len(), 4);
}

#[test]
fn linear_damped_modes_follow_the_closed_form() {
    // With lambda = 0 every mode is decoupled:
    //   a_k(t) = a_k(0) exp[(-i - Gamma) w_k t + Gamma mu t].
    let table = ModeTable::build(6, 0.5).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let params = EvolutionParams {
        lambda: 0.0,
        mu_tilde: 3.0,
        t_tilde: 0.0,
        gamma: 0.2,
        dt: 1e-3,
        t_end: 1.0,
        noise_on: false,
        snapshot_stride: 1000,
    };
    let initial = random_state(table.len(), 1.0, 77);
    let arch = evolve(&initial, &params, &table, &quad, SeedLineage::new(2), 0).unwrap();
    let last = arch.snapshots.last().unwrap();
    assert!((last.time - 1.0).abs() < 1e-12);
    let mut worst = 0.0f64;
    for (k, (&a0, &w)) in initial.coeffs.iter().zip(&table.freqs).enumerate() {
        let phase = Complex64::new(-1.0, 0.0) * Complex64::i() - params.gamma;
        let exact = a0
            * (phase * w * params.t_end + params.gamma * params.mu_tilde * params.t_end).exp();
        let rel = (last.coeffs[k] - exact).norm() / exact.norm();
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-8, "worst mode deviation {worst:.3e}");
}

#[test]
fn stochastic_trajectories_replay_bitwise_from_the_lineage() {
    let table = ModeTable::build(6, 0.5).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let params = EvolutionParams {
        lambda: 0.3,
        mu_tilde: 2.0,
        t_tilde: 1.0,
        gamma: 0.1,
        dt: 2e-3,
        t_end: 0.2,
        noise_on: true,
        snapshot_stride: 25,
    };
    let initial = random_state(table.len(), 4.0, 5);
    let lineage = SeedLineage::new(99);
    let a = evolve(&initial, &params, &table, &quad, lineage, 7).unwrap();
    let b = evolve(&initial, &params, &table, &quad, lineage, 7).unwrap();
    let c = evolve(&initial, &params, &table, &quad, lineage, 8).unwrap();

    let fa = &a.snapshots.last().unwrap().coeffs;
    let fb = &b.snapshots.last().unwrap().coeffs;
    let fc = &c.snapshots.last().unwrap().coeffs;
    assert_eq!(fa, fb, "same trajectory index must replay exactly");
    assert!(
        fa.iter().zip(fc).any(|(x, y)| x != y),
        "different trajectory index must get fresh noise"
    );
    assert_eq!(a.lineage.root_seed, 99);
    assert_eq!(c.lineage.trajectory_index, 8);
}

#[test]
fn coarse_steps_raise_the_stability_warning() {
    let table = ModeTable::build(6, 0.5).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let params = EvolutionParams {
        lambda: 0.5,
        mu_tilde: 0.0,
        t_tilde: 0.0,
        gamma: 0.0,
        dt: 0.05,
        t_end: 0.1,
        noise_on: false,
        snapshot_stride: 1,
    };
    let initial = random_state(table.len(), 10.0, 31);
    let arch = evolve(&initial, &params, &table, &quad, SeedLineage::new(3), 0).unwrap();
    assert!(arch.stability_warning);
}

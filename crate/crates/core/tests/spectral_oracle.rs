//! Transform exactness against the dense-integration oracle.
//!
//! The production transforms use the half-scale Gauss-Laguerre/Fourier rule;
//! the oracle integrates on composite Gauss-Legendre panels with an
//! oversampled angular grid. Agreement to ~1e-9 on random in-band fields is
//! the end-to-end check that the production quadrature really is exact for
//! the projected cubic term.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rotbec::basis::{build_quadrature, ModeIndex, ModeTable, TransformScratch};
use rotbec::oracle::DenseOracle;
use rotbec::rng::complex_unit_normal;

fn random_fields(n_modes: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n_modes).map(|_| complex_unit_normal(&mut rng)).collect())
        .collect()
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

#[test]
fn cubic_term_matches_dense_oracle_moderate_band() {
    let table = ModeTable::build(6, 0.5).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let oracle = DenseOracle::new(&table);
    assert!(oracle.gram_worst() < 1e-12, "oracle grid self-check");
    let mut scratch = TransformScratch::new(&quad);
    let mut worst = 0.0f64;
    for field in random_fields(table.len(), 100, 2024) {
        let produced = quad.nonlinear_term(&field, &mut scratch).unwrap();
        let expected = oracle.nonlinear(&field).unwrap();
        worst = worst.max(rel_err(&produced, &expected));
    }
    assert!(worst <= 1e-9, "worst cubic-term deviation {worst:.3e}");
}

#[test]
fn cubic_term_matches_dense_oracle_reference_band() {
    let table = ModeTable::build(4, 0.979).unwrap();
    assert_eq!(table.len(), 291);
    let quad = build_quadrature(&table).unwrap();
    let oracle = DenseOracle::new(&table);
    assert!(oracle.gram_worst() < 1e-11, "oracle grid self-check");
    let mut scratch = TransformScratch::new(&quad);
    let mut worst = 0.0f64;
    for field in random_fields(table.len(), 6, 77) {
        let produced = quad.nonlinear_term(&field, &mut scratch).unwrap();
        let expected = oracle.nonlinear(&field).unwrap();
        worst = worst.max(rel_err(&produced, &expected));
    }
    assert!(worst <= 1e-9, "worst cubic-term deviation {worst:.3e}");
}

#[test]
fn round_trip_is_identity_on_reference_band() {
    let table = ModeTable::build(4, 0.979).unwrap();
    let quad = build_quadrature(&table).unwrap();
    let mut scratch = TransformScratch::new(&quad);
    let mut back = vec![Complex64::default(); table.len()];
    let mut worst = 0.0f64;
    for field in random_fields(table.len(), 10, 4242) {
        let grid = quad.to_position(&field, &mut scratch).unwrap();
        quad.project_samples(&grid, &mut scratch, &mut back).unwrap();
        worst = worst.max(rel_err(&back, &field));
    }
    assert!(worst <= 1e-12, "worst round-trip deviation {worst:.3e}");
}

#[test]
fn out_of_band_mode_projects_to_nothing() {
    // (n=3, l=0) sits outside the Nbar=4 cutoff but shares its angular
    // sector with three retained modes, against which it is orthogonal on
    // the exact measure; sampling it on the grid must produce coefficients
    // at the quadrature-rounding floor.
    let table = ModeTable::build(4, 0.979).unwrap();
    assert!(table.index_of(ModeIndex { n: 3, l: 0 }).is_none());
    let quad = build_quadrature(&table).unwrap();
    let mut scratch = TransformScratch::new(&quad);
    let mut out = vec![Complex64::default(); table.len()];
    quad.project_fn(
        |r, _| Complex64::new(rotbec::basis::quadrature::radial_mode(3, 0, r * r), 0.0),
        &mut scratch,
        &mut out,
    )
    .unwrap();
    let worst = out.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "out-of-band leakage {worst:.3e}");
}

#[test]
fn mode_count_without_rotation_matches_lattice_count() {
    // At Omega = 0 the band inequality is 2n + |l| <= Nbar; counting lattice
    // points for Nbar = 2m gives the hexagonal numbers (m+1)(2m+1).
    for (nbar, expect) in [(0u32, 1usize), (2, 6), (4, 15), (6, 28), (8, 45)] {
        let table = ModeTable::build(nbar, 0.0).unwrap();
        assert_eq!(table.len(), expect, "Nbar = {nbar}");
        let brute = {
            let mut count = 0usize;
            for n in 0..=nbar {
                for l in -(nbar as i32)..=(nbar as i32) {
                    if 2 * n + l.unsigned_abs() <= nbar {
                        count += 1;
                    }
                }
            }
            count
        };
        assert_eq!(table.len(), brute, "Nbar = {nbar} brute-force count");
    }
}

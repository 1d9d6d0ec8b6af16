//! Reservoir growth rates against independent integration paths.
//!
//! The production rates resum the Bose factors into special functions
//! (logarithms, Lerch transcendents, Bessel sums); the oracles integrate the
//! kinematically constrained momentum-space collision integrals directly.

use rotbec::constants::KB;
use rotbec::oracle::{g1_momentum, g2_in_direct};
use rotbec::reservoir::{
    growth_rate_g1_in, growth_rate_g2_in, growth_rate_general, rate_set, ReservoirSpec, Species,
};

const OMEGA_R: f64 = 2.0 * std::f64::consts::PI * 8.3;

fn spec_at(t_nk: f64, mu_over_kt: f64, er_over_kt: f64) -> ReservoirSpec {
    let t = t_nk * 1e-9;
    let kt = KB * t;
    ReservoirSpec::new(t, mu_over_kt * kt, 0.6 * OMEGA_R, er_over_kt * kt).unwrap()
}

#[test]
fn general_rate_matches_momentum_integral_across_the_band() {
    let spec = spec_at(20.0, 0.1, 0.3);
    let species = Species::rb87();
    // Effective potential from the trap centre (flat-rate region) through the
    // kinematic crossover at 2 E_R / 3 and up to the band edge.
    for frac in [0.0, 0.3, 0.6, 2.0 / 3.0, 0.75, 0.85, 0.95, 1.0] {
        let v = frac * spec.e_r;
        let closed = growth_rate_general(v, &spec, &species).unwrap();
        let direct = g1_momentum(v, &spec, &species).unwrap();
        let rel = (closed - direct).abs() / direct;
        assert!(
            rel <= 5e-7,
            "V = {frac:.3} E_R: closed {closed:.12e}, momentum {direct:.12e}, rel {rel:.3e}"
        );
    }
}

#[test]
fn rate_is_flat_inside_two_thirds_of_the_band() {
    let spec = spec_at(20.0, 0.1, 0.3);
    let species = Species::rb87();
    let flat = growth_rate_g1_in(&spec, &species).unwrap();
    let origin = growth_rate_general(0.0, &spec, &species).unwrap();
    // The double sum truncates a slowly decaying fugacity tail (~4e-12 of the
    // total here); the closed-form logarithm does not.
    assert!((origin - flat).abs() <= 1e-10 * flat);
    for frac in [0.2, 0.5, 0.666] {
        let v = frac * spec.e_r;
        let g = growth_rate_general(v, &spec, &species).unwrap();
        assert!(
            (g - origin).abs() <= 1e-13 * origin,
            "V = {frac} E_R should sit on the plateau"
        );
    }
    // Above the crossover the phase-space constraint only removes weight.
    let mut prev = origin;
    for frac in [0.7, 0.85, 1.0] {
        let g = growth_rate_general(frac * spec.e_r, &spec, &species).unwrap();
        assert!(g > 0.0 && g < prev, "V = {frac} E_R");
        prev = g;
    }
}

#[test]
fn pair_rate_series_matches_direct_sum() {
    let species = Species::rb87();
    for (mu, er) in [(0.1, 0.3), (0.05, 0.2), (0.02, 0.5)] {
        let spec = spec_at(20.0, mu, er);
        let closed = growth_rate_g2_in(&spec, &species).unwrap();
        let direct = g2_in_direct(&spec, &species).unwrap();
        let rel = (closed - direct).abs() / direct;
        assert!(rel <= 1e-9, "mu/kT = {mu}, E_R/kT = {er}: rel {rel:.3e}");
    }
}

#[test]
fn rates_scale_with_temperature_and_scattering_length_squared() {
    let species = Species::rb87();
    let base = spec_at(20.0, 0.1, 0.3);
    // Doubling T at fixed beta*mu and beta*E_R leaves every dimensionless sum
    // untouched; the whole rate set carries the (a k_B T)^2 prefactor.
    let hot = spec_at(40.0, 0.1, 0.3);
    let rb = rate_set(&base, &species).unwrap();
    let rh = rate_set(&hot, &species).unwrap();
    for (lo, hi) in [
        (rb.g1_in, rh.g1_in),
        (rb.g2_in, rh.g2_in),
        (rb.g1_out, rh.g1_out),
        (rb.g2_out, rh.g2_out),
        (rb.gamma, rh.gamma),
    ] {
        assert!((hi / lo - 4.0).abs() <= 1e-12, "T^2 scaling: ratio {}", hi / lo);
    }

    let stretched = Species {
        scattering_length: 3.0 * species.scattering_length,
        ..species
    };
    let rs = rate_set(&base, &stretched).unwrap();
    assert!((rs.g1_in / rb.g1_in - 9.0).abs() <= 1e-12);
    assert!((rs.g2_out / rb.g2_out - 9.0).abs() <= 1e-12);
    // The scattering amplitude carries a^2 k_B T instead.
    assert!((rs.m_amp / rb.m_amp - 9.0).abs() <= 1e-12);
    let rh_amp = rate_set(&hot, &species).unwrap();
    assert!((rh_amp.m_amp / rb.m_amp - 2.0).abs() <= 1e-12);
}

#[test]
fn band_edge_to_inner_ratio_stays_tame_over_the_sweep() {
    let species = Species::rb87();
    let mut prev: Option<f64> = None;
    for i in 0..10 {
        let mu = 0.01 + 0.01 * i as f64;
        let spec = spec_at(20.0, mu, 3.0 * mu);
        let r = rate_set(&spec, &species).unwrap();
        let ratio = (r.g1_out + r.g2_out) / (r.g1_in + r.g2_in);
        assert!(
            ratio.is_finite() && ratio > 0.0 && ratio < 100.0,
            "mu/kT = {mu}: ratio {ratio}"
        );
        if let Some(p) = prev {
            assert!(
                (ratio / p - 1.0).abs() < 0.5,
                "ratio jumps from {p} to {ratio} at mu/kT = {mu}"
            );
        }
        prev = Some(ratio);
    }
}

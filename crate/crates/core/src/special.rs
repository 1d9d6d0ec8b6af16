//! Special functions for the reservoir thermodynamics and rates:
//! the incomplete Bose-Einstein function g_nu(z, y), the Lerch transcendent
//! Phi[z, 1, a], and the modified Bessel function K_1.

use crate::error::{Error, Result};
use statrs::function::gamma::gamma_ur;
use std::sync::OnceLock;

/// Relative tolerance targeted by all series in this module.
const SERIES_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 2_000_000;

/// Incomplete Bose-Einstein function
/// g_nu(z, y) = sum_{l>=1} z^l Gamma(nu, y l) / (Gamma(nu) l^nu).
///
/// Converges iff z e^{-y} < 1, or y = 0 with z < 1, or y = 0, z = 1, nu > 1
/// (where it reduces to the Riemann zeta function). Note z may exceed 1 when
/// y > 0; the exponential tail of the upper incomplete gamma keeps the series
/// summable, which is exactly the regime of a quenched reservoir with mu > 0.
pub fn incomplete_bose(nu: f64, z: f64, y: f64) -> Result<f64> {
    if !(nu >= 1.0) {
        return Err(Error::InvalidParam(format!("nu = {nu}, need nu >= 1")));
    }
    if !(z > 0.0) || !(y >= 0.0) || !z.is_finite() || !y.is_finite() {
        return Err(Error::InvalidParam(format!("z = {z}, y = {y}")));
    }
    if y == 0.0 {
        if z < 1.0 {
            return Ok(polylog_series(nu, z));
        }
        if z == 1.0 && nu > 1.0 {
            return Ok(zeta(nu));
        }
        return Err(Error::DivergentSeries(format!(
            "g_{nu}({z}, 0) diverges (need z < 1, or z = 1 with nu > 1)"
        )));
    }
    let ratio = z * (-y).exp();
    if ratio >= 1.0 {
        return Err(Error::DivergentSeries(format!(
            "g_{nu}(z, y) needs z e^(-y) < 1, got {ratio}"
        )));
    }
    // Term ratio t_{l+1}/t_l <= z e^{-y} for nu >= 1, so the tail after t_l is
    // bounded by t_l ratio/(1 - ratio).
    let mut sum = 0.0;
    let lnz = z.ln();
    for l in 1..MAX_TERMS {
        let lf = l as f64;
        let q = gamma_ur(nu, y * lf);
        if q == 0.0 && l > 1 {
            break;
        }
        let term = (lf * lnz - nu * lf.ln()).exp() * q;
        sum += term;
        if term * ratio / (1.0 - ratio) < SERIES_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Ok(sum)
}

/// Ordinary polylog Li_nu(z) for 0 < z < 1 by direct summation.
fn polylog_series(nu: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let lnz = z.ln();
    for l in 1..MAX_TERMS {
        let lf = l as f64;
        let term = (lf * lnz - nu * lf.ln()).exp();
        sum += term;
        if term * z / (1.0 - z) < SERIES_TOL * sum {
            break;
        }
    }
    sum
}

/// Riemann zeta for nu > 1: partial sum plus Euler-Maclaurin tail.
pub fn zeta(nu: f64) -> f64 {
    assert!(nu > 1.0);
    let cut = 4000usize;
    let mut sum = 0.0;
    for l in 1..cut {
        sum += (-nu * (l as f64).ln()).exp();
    }
    let lf = cut as f64;
    // integral + half endpoint + first two Bernoulli corrections
    sum += lf.powf(1.0 - nu) / (nu - 1.0) + 0.5 * lf.powf(-nu) + nu * lf.powf(-nu - 1.0) / 12.0
        - nu * (nu + 1.0) * (nu + 2.0) * lf.powf(-nu - 3.0) / 720.0;
    sum
}

/// Lerch transcendent Phi[z, 1, a] = sum_{k>=0} z^k/(a+k) for 0 <= z < 1, a > 0.
pub fn lerch_phi(z: f64, a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) || !(a > 0.0) {
        return Err(Error::InvalidParam(format!(
            "lerch_phi needs 0 <= z < 1 and a > 0, got z = {z}, a = {a}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0 / a);
    }
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 0..MAX_TERMS {
        let term = zk / (a + k as f64);
        sum += term;
        if term * z / (1.0 - z) < SERIES_TOL * sum {
            break;
        }
        zk *= z;
    }
    Ok(sum)
}

/// Modified Bessel function of the second kind, K_1(x), x > 0.
///
/// Power series (with the log term) below x = 2; above that, the integral
/// K_1(x) = sqrt(2/x) e^{-x} Int_0^inf e^{-u} u^{1/2} (1 + u/(2x))^{1/2} du
/// evaluated with a fixed generalized Gauss-Laguerre rule (weight u^{1/2}e^{-u}).
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k1 needs x > 0");
    if x <= 2.0 {
        k1_series(x)
    } else {
        let (nodes, weights) = half_laguerre_rule();
        let mut s = 0.0;
        for (&u, &w) in nodes.iter().zip(weights) {
            s += w * (1.0 + u / (2.0 * x)).sqrt();
        }
        (2.0 / x).sqrt() * (-x).exp() * s
    }
}

/// Ascending series: K_1(x) = ln(x/2) I_1(x) + 1/x
///   - (x/4) sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k!(k+1)!).
fn k1_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut i1 = 0.0f64;
    let mut s = 0.0f64;
    let mut coeff = 1.0; // (x^2/4)^k / (k!(k+1)!)
    let mut psi1 = -0.577_215_664_901_532_9; // psi(1)
    let mut psi2 = psi1 + 1.0; // psi(2)
    let mut k = 0usize;
    loop {
        i1 += coeff;
        let term = (psi1 + psi2) * coeff;
        s += term;
        if coeff < 1e-18 * (i1.abs() + 1.0) && k > 3 {
            break;
        }
        k += 1;
        coeff *= q / ((k as f64) * (k as f64 + 1.0));
        psi1 = psi2;
        psi2 += 1.0 / (k as f64 + 1.0);
    }
    i1 *= x / 2.0;
    (x / 2.0).ln() * i1 + 1.0 / x - (x / 4.0) * s
}

/// 48-point Gauss-Laguerre rule for weight u^{1/2} e^{-u}, built once.
fn half_laguerre_rule() -> (&'static [f64], &'static [f64]) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| crate::basis::laguerre::generalized_rule(48, 0.5));
    (n, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bose_reduces_to_zeta_at_unit_fugacity() {
        // zeta(3) is a standard mathematical constant
        assert!((incomplete_bose(3.0, 1.0, 0.0).unwrap() - 1.202_056_903_159_594_2).abs() < 1e-13);
        assert!((incomplete_bose(4.0, 1.0, 0.0).unwrap() - 1.082_323_233_711_138).abs() < 1e-13);
        assert!((incomplete_bose(1.5, 1.0, 0.0).unwrap() - 2.612_375_348_685_488).abs() < 1e-12);
    }

    #[test]
    fn bose_vanishes_at_large_cutoff() {
        let v = incomplete_bose(3.0, 0.5, 600.0).unwrap();
        assert!(v >= 0.0 && v < 1e-250);
    }

    #[test]
    fn bose_monotonicity() {
        let g = |z: f64, y: f64| incomplete_bose(2.5, z, y).unwrap();
        assert!(g(0.5, 0.3) > g(0.5, 0.6));
        assert!(g(0.7, 0.3) > g(0.5, 0.3));
    }

    #[test]
    fn bose_accepts_fugacity_above_one_with_cutoff() {
        // convergent because z e^{-y} < 1
        let v = incomplete_bose(3.0, 6.0, 12.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(incomplete_bose(3.0, 6.0, 1.0).is_err());
        assert!(incomplete_bose(3.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn bose_complement_identity_against_direct_integration() {
        // g(z,0) - g(z,y) = sum z^l P(nu, y l)/l^nu with P the regularized lower
        // incomplete gamma, here integrated directly by Simpson's rule.
        let (nu, z, y) = (2.5, 0.6, 0.8);
        let full = incomplete_bose(nu, z, 0.0).unwrap();
        let cut = incomplete_bose(nu, z, y).unwrap();
        let gamma_nu = statrs::function::gamma::gamma(nu);
        let mut sum = 0.0;
        for l in 1..200 {
            let lf = l as f64;
            // lower incomplete gamma by Simpson on [0, y l]
            let b = y * lf;
            let m = 4000;
            let h = b / m as f64;
            let f = |t: f64| if t == 0.0 { 0.0 } else { t.powf(nu - 1.0) * (-t).exp() };
            let mut integral = f(0.0) + f(b);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                integral += w * f(i as f64 * h);
            }
            integral *= h / 3.0;
            sum += z.powi(l) * (integral / gamma_nu) / lf.powf(nu);
        }
        assert!((full - cut - sum).abs() < 1e-10 * full);
    }

    #[test]
    fn lerch_matches_logarithm_identity() {
        // Phi[z,1,1] = -ln(1-z)/z
        for &z in &[0.1, 0.5, 0.9, 0.99] {
            let phi = lerch_phi(z, 1.0).unwrap();
            assert!((phi - (-(1.0 - z).ln() / z)).abs() < 1e-12 * phi);
        }
        assert!((lerch_phi(0.0, 2.5).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn k1_branches_agree_at_the_switch() {
        // series and integral evaluations must agree where both are valid
        for &x in &[1.2, 1.6, 2.0] {
            let series = k1_series(x);
            let (nodes, weights) = half_laguerre_rule();
            let mut s = 0.0;
            for (&u, &w) in nodes.iter().zip(weights) {
                s += w * (1.0 + u / (2.0 * x)).sqrt();
            }
            let integral = (2.0 / x).sqrt() * (-x).exp() * s;
            assert!(
                (series - integral).abs() < 5e-13 * series.abs(),
                "x = {x}: {series} vs {integral}"
            );
        }
    }

    #[test]
    fn k1_against_direct_integral_representation() {
        // K_1(x) = int_0^inf e^{-x cosh t} cosh t dt, Simpson on [0, 40/x^0 ..]
        for &x in &[0.5f64, 1.0, 3.0, 8.0] {
            let upper: f64 = (750.0 / x).ln() + 5.0; // e^{-x cosh t} negligible beyond
            let m = 200_000;
            let h = upper / m as f64;
            let f = |t: f64| (-x * t.cosh()).exp() * t.cosh();
            let mut integral = f(0.0) + f(upper);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                integral += w * f(i as f64 * h);
            }
            integral *= h / 3.0;
            let k1 = bessel_k1(x);
            assert!(
                (k1 - integral).abs() < 1e-11 * integral,
                "x = {x}: {k1} vs {integral}"
            );
        }
    }

    #[test]
    fn k1_asymptotic_limit() {
        // K_1(x) -> sqrt(pi/2x) e^{-x} (1 + 3/8x) for large x
        let x = 60.0;
        let asym = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 3.0 / (8.0 * x));
        assert!((bessel_k1(x) - asym).abs() < 1e-4 * asym);
    }
}

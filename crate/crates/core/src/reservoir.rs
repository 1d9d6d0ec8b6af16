//! Reservoir (non-condensate band) thermodynamics and coupling rates.
//!
//! The thermal cloud above the cutoff is described semiclassically by a
//! Bose-Einstein phase-space distribution restricted to rotating-frame
//! single-particle energies above `E_R`. Everything in this module works in
//! SI units; reduction to the dimensionless evolution parameters happens at
//! the configuration boundary.
//!
//! Closed forms for the growth rates exist in the spatially invariant inner
//! region (`V_eff <= 2 E_R / 3`) and at the band edge (`V_eff = E_R`); the
//! general rate interpolates between them through a one-dimensional integral
//! evaluated numerically.

use crate::basis::TrapGeometry;
use crate::constants::{A_RB87, HBAR, KB, MASS_RB87};
use crate::error::{Error, Result};
use crate::special::{bessel_k1, incomplete_bose, lerch_phi, zeta};
use std::f64::consts::PI;

/// Maximum summation index for the rate series; generous for any reasonable
/// fugacity (`e^{beta(mu - E_R)}` close to 1 converges slowly but the Bessel
/// factor still truncates the sums long before this).
const MAX_SUM: usize = 4000;
const SUM_TOL: f64 = 1e-14;

/// Equilibrium parameters of the non-condensate band.
#[derive(Debug, Clone, Copy)]
pub struct ReservoirSpec {
    /// Temperature [K].
    pub temperature: f64,
    /// Chemical potential [J].
    pub mu: f64,
    /// Rotation frequency of the cloud [rad/s].
    pub omega_rot: f64,
    /// Band cutoff energy [J].
    pub e_r: f64,
}

impl ReservoirSpec {
    pub fn new(temperature: f64, mu: f64, omega_rot: f64, e_r: f64) -> Result<Self> {
        if temperature <= 0.0 {
            return Err(Error::InvalidParam("temperature must be positive".into()));
        }
        if e_r < 0.0 {
            return Err(Error::InvalidParam("cutoff energy must be >= 0".into()));
        }
        Ok(Self {
            temperature,
            mu,
            omega_rot,
            e_r,
        })
    }

    /// Inverse temperature `1 / k_B T` [1/J].
    pub fn beta(&self) -> f64 {
        1.0 / (KB * self.temperature)
    }

    fn require_mu_below_cutoff(&self) -> Result<()> {
        if self.mu >= self.e_r {
            return Err(Error::Domain(format!(
                "rates require mu < E_R (mu = {:.3e} J, E_R = {:.3e} J)",
                self.mu, self.e_r
            )));
        }
        Ok(())
    }
}

/// Atomic species entering the collision rates.
#[derive(Debug, Clone, Copy)]
pub struct Species {
    /// Mass [kg].
    pub mass: f64,
    /// s-wave scattering length [m].
    pub scattering_length: f64,
}

impl Species {
    pub fn rb87() -> Self {
        Self {
            mass: MASS_RB87,
            scattering_length: A_RB87,
        }
    }
}

/// The set of reservoir coupling rates [1/s] plus the scattering amplitude.
#[derive(Debug, Clone, Copy)]
pub struct RateSet {
    pub g1_in: f64,
    pub g2_in: f64,
    pub g1_out: f64,
    pub g2_out: f64,
    /// Growth rate used by the evolution: `gamma = G1_in + G2_in`.
    pub gamma: f64,
    /// Scattering amplitude `M` [1/s]; the momentum kernel is
    /// `M / ((2 pi)^3 |k|)`.
    pub m_amp: f64,
}

/// Spatial classification of the growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `V_eff <= 2 E_R / 3`: rate equals the inner closed form exactly.
    Inner,
    /// `2 E_R / 3 < V_eff <= E_R`: weak spatial dependence.
    Outer,
    /// `V_eff > E_R`: outside the condensate band; rate reported as 0.
    Beyond,
}

/// One sample of the radial growth-rate profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    /// Radius [m].
    pub q: f64,
    /// Potential at the sample [J].
    pub v_eff: f64,
    /// `G1(V_eff)` [1/s].
    pub g1: f64,
    pub region: Region,
}

/// Ideal-gas condensation temperature of `n` atoms in the rotating trap [K].
///
/// `k_B T_C = hbar (omega_perp^2 omega_z)^{1/3} (n / zeta(3))^{1/3}`, which
/// carries the usual `(1 - Omega^2/omega_r^2)^{1/3}` suppression.
pub fn transition_temperature(n: f64, trap: &TrapGeometry) -> Result<f64> {
    if n <= 0.0 {
        return Err(Error::InvalidParam("atom number must be positive".into()));
    }
    let wbar = (trap.omega_perp().powi(2) * trap.omega_z).cbrt();
    Ok(HBAR * wbar * (n / zeta(3.0)).cbrt() / KB)
}

/// Semiclassical non-condensate density at cylindrical `(r, z)` [1/m^3].
///
/// `n_NC = g_{3/2}(e^{beta(mu - V_eff)}, beta max(E_R - V_eff, 0)) / lambda_dB^3`.
pub fn noncondensate_density(
    r: f64,
    z: f64,
    spec: &ReservoirSpec,
    trap: &TrapGeometry,
) -> Result<f64> {
    let beta = spec.beta();
    let v = trap.v_eff(r, z);
    let lambda_db = (2.0 * PI * beta * HBAR * HBAR / trap.mass).sqrt();
    let fugacity = (beta * (spec.mu - v)).exp();
    let y = (beta * (spec.e_r - v)).max(0.0);
    Ok(incomplete_bose(1.5, fugacity, y)? / lambda_db.powi(3))
}

/// Total non-condensate atom number.
///
/// `N_NC = g_3(e^{beta mu}, beta E_R) / (beta hbar wbar)^3` with
/// `wbar = (omega_z omega_perp^2)^{1/3}`.
pub fn noncondensate_number(spec: &ReservoirSpec, trap: &TrapGeometry) -> Result<f64> {
    let beta = spec.beta();
    let wbar3 = trap.omega_z * trap.omega_perp().powi(2);
    let g3 = incomplete_bose(3.0, (beta * spec.mu).exp(), beta * spec.e_r)?;
    Ok(g3 / ((beta * HBAR).powi(3) * wbar3))
}

/// Angular momentum content of the thermal cloud.
#[derive(Debug, Clone, Copy)]
pub struct AngularMomentumMoments {
    /// `<L_z>` summed over the cloud [J s].
    pub lz_total: f64,
    /// `<L_z^2>` summed over the cloud [J^2 s^2].
    pub lz2_total: f64,
    /// `<L_z> / N_NC` [J s].
    pub lz_per_atom: f64,
    /// `sqrt(<L_z^2>/N_NC - (<L_z>/N_NC)^2)` [J s].
    pub sigma_per_atom: f64,
}

/// Mean and variance of the cloud angular momentum.
///
/// ```text
/// <L_z>   = 2 hbar (Omega/omega_perp) g_4(e^{beta mu}, beta E_R) / (beta hbar w')^4
/// <L_z^2> = 2 hbar^2 g_5(e^{beta mu}, beta E_R) (1 + 4 Omega^2/omega_perp^2)
///           / (beta hbar wt)^5
/// ```
///
/// with `w' = (omega_z omega_perp^3)^{1/4}` and `wt = (omega_z omega_perp^4)^{1/5}`.
pub fn angular_momentum_moments(
    spec: &ReservoirSpec,
    trap: &TrapGeometry,
) -> Result<AngularMomentumMoments> {
    let beta = spec.beta();
    let wp = trap.omega_perp();
    let fug = (beta * spec.mu).exp();
    let y = beta * spec.e_r;
    let g4 = incomplete_bose(4.0, fug, y)?;
    let g5 = incomplete_bose(5.0, fug, y)?;
    let wprime4 = trap.omega_z * wp.powi(3);
    let wtilde5 = trap.omega_z * wp.powi(4);
    let lz_total = 2.0 * HBAR * (spec.omega_rot / wp) * g4 / ((beta * HBAR).powi(4) * wprime4);
    let lz2_total = 2.0 * HBAR * HBAR * g5 * (1.0 + 4.0 * spec.omega_rot.powi(2) / (wp * wp))
        / ((beta * HBAR).powi(5) * wtilde5);
    let n_nc = noncondensate_number(spec, trap)?;
    let lz_per = lz_total / n_nc;
    let var = lz2_total / n_nc - lz_per * lz_per;
    Ok(AngularMomentumMoments {
        lz_total,
        lz2_total,
        lz_per_atom: lz_per,
        sigma_per_atom: var.max(0.0).sqrt(),
    })
}

/// Common prefactor `(4 m / pi hbar^3)(a k_B T)^2` [1/s].
fn rate_prefactor(spec: &ReservoirSpec, species: &Species) -> f64 {
    4.0 * species.mass * (species.scattering_length * KB * spec.temperature).powi(2)
        / (PI * HBAR.powi(3))
}

/// Inner-region one-distribution growth rate
/// `G1_in = pre * ln^2(1 - e^{beta(mu - E_R)})`.
pub fn growth_rate_g1_in(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    let x = (spec.beta() * (spec.mu - spec.e_r)).exp();
    Ok(rate_prefactor(spec, species) * (1.0 - x).ln().powi(2))
}

/// Inner-region two-distribution growth rate
/// `G2_in = pre * e^{2 beta(mu-E_R)} sum_r e^{r beta(mu-2E_R)} Phi[e^{beta(mu-E_R)}, 1, r+1]^2`.
pub fn growth_rate_g2_in(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    let beta = spec.beta();
    let z = (beta * (spec.mu - spec.e_r)).exp();
    let ratio = (beta * (spec.mu - 2.0 * spec.e_r)).exp();
    let mut total = 0.0;
    let mut weight = 1.0;
    for r in 1..=MAX_SUM {
        weight *= ratio;
        let phi = lerch_phi(z, r as f64 + 1.0)?;
        let term = weight * phi * phi;
        total += term;
        if r >= 4 && term <= SUM_TOL * total {
            let tail = term * ratio / (1.0 - ratio);
            return Ok(rate_prefactor(spec, species) * z * z * (total + tail));
        }
    }
    Err(Error::NoConvergence(
        "inner two-distribution rate series did not converge".into(),
    ))
}

/// Band-edge one-distribution rate
/// `G1_out = pre * beta E_R * sum_pq e^{beta(mu-E_R)(p+q)} K_1(beta E_R sqrt(pq)) / sqrt(pq)`.
pub fn growth_rate_g1_out(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    let beta = spec.beta();
    let ye = beta * spec.e_r;
    let w = (beta * (spec.mu - spec.e_r)).exp();
    let mut total = 0.0;
    for p in 1..=MAX_SUM {
        let mut row = 0.0;
        for q in 1..=MAX_SUM {
            let pq = (p * q) as f64;
            let term = w.powi((p + q) as i32) * bessel_k1(ye * pq.sqrt()) / pq.sqrt();
            row += term;
            if q >= 4 && term <= SUM_TOL * (total + row) {
                break;
            }
        }
        total += row;
        if p >= 4 && row <= SUM_TOL * total {
            return Ok(rate_prefactor(spec, species) * ye * total);
        }
    }
    Err(Error::NoConvergence(
        "band-edge one-distribution rate series did not converge".into(),
    ))
}

/// Band-edge two-distribution rate (triple sum analog of `G1_out`).
pub fn growth_rate_g2_out(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    let beta = spec.beta();
    let ye = beta * spec.e_r;
    let w = (beta * (spec.mu - spec.e_r)).exp();
    let ratio = (beta * (spec.mu - 2.0 * spec.e_r)).exp();
    let mut total = 0.0;
    let mut rw = 1.0;
    for r in 1..=MAX_SUM {
        rw *= ratio;
        let mut shell = 0.0;
        for p in 1..=MAX_SUM {
            let mut row = 0.0;
            for q in 1..=MAX_SUM {
                let arg = ((p + r) * (q + r)) as f64;
                let term = w.powi((p + q) as i32) * bessel_k1(ye * arg.sqrt()) / arg.sqrt();
                row += term;
                if q >= 4 && term <= SUM_TOL * (shell + row).max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            shell += row;
            if p >= 4 && row <= SUM_TOL * shell.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let term = rw * shell;
        total += term;
        if r >= 4 && term <= SUM_TOL * total.max(f64::MIN_POSITIVE) {
            return Ok(rate_prefactor(spec, species) * ye * total);
        }
    }
    Err(Error::NoConvergence(
        "band-edge two-distribution rate series did not converge".into(),
    ))
}

/// Scattering amplitude
/// `M = (16 pi a^2 k_B T / hbar) e^{beta(E_R-mu)} / (e^{beta(E_R-mu)} - 1)^2` [1/s].
pub fn scattering_amplitude(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    let x = spec.beta() * (spec.e_r - spec.mu);
    let em1 = x.exp_m1();
    Ok(16.0 * PI * species.scattering_length.powi(2) * KB * spec.temperature / HBAR * x.exp()
        / (em1 * em1))
}

/// Momentum-space scattering kernel `M / ((2 pi)^3 |k|)` for `k` in 1/m.
pub fn scattering_kernel(k: f64, m_amp: f64) -> Result<f64> {
    if k <= 0.0 {
        return Err(Error::Domain("kernel needs |k| > 0".into()));
    }
    Ok(m_amp / ((2.0 * PI).powi(3) * k))
}

/// All closed-form rates at once.
pub fn rate_set(spec: &ReservoirSpec, species: &Species) -> Result<RateSet> {
    let g1_in = growth_rate_g1_in(spec, species)?;
    let g2_in = growth_rate_g2_in(spec, species)?;
    Ok(RateSet {
        g1_in,
        g2_in,
        g1_out: growth_rate_g1_out(spec, species)?,
        g2_out: growth_rate_g2_out(spec, species)?,
        gamma: g1_in + g2_in,
        m_amp: scattering_amplitude(spec, species)?,
    })
}

/// Dimensionless damping `Gamma = hbar gamma / k_B T` for the evolution.
pub fn dimensionless_damping(rates: &RateSet, spec: &ReservoirSpec) -> f64 {
    HBAR * rates.gamma / (KB * spec.temperature)
}

/// General one-distribution growth rate at effective potential `v` [J].
///
/// ```text
/// G1(V) = pre * sum_pq e^{beta(mu-V)(p+q)}/(pq) * I(p, q)
/// I     = int_{s_min}^inf e^{-s - t_min(s)} ds
/// s_min = p beta (E_R - V),  t_min(s) = max(q beta (E_R - V), (beta V)^2 pq / 4s)
/// ```
///
/// The `t_min` branch with `c/s = (beta V)^2 pq / 4s` dominates for
/// `s < s_c = c / t_q`; on `[s_min, s_c]` the integral is evaluated
/// numerically and the pure-exponential tail is added in closed form. For
/// `V <= 2 E_R / 3` one has `s_min >= s_c` for every `(p, q)` and the whole
/// integral collapses to `e^{-(p+q) beta (E_R - V)}`, making the rate exactly
/// independent of position.
pub fn growth_rate_general(v: f64, spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    spec.require_mu_below_cutoff()?;
    if v < 0.0 {
        return Err(Error::Domain("potential must be >= 0".into()));
    }
    if v > spec.e_r {
        return Err(Error::Domain(
            "general growth rate is defined inside the band (V <= E_R)".into(),
        ));
    }
    let beta = spec.beta();
    let fug = (beta * (spec.mu - v)).exp();
    let mut total = 0.0;
    for p in 1..=MAX_SUM {
        let mut row = 0.0;
        for q in 1..=MAX_SUM {
            let term = fug.powi((p + q) as i32) / (p * q) as f64
                * lower_cut_integral(p as f64, q as f64, v, spec.e_r, beta);
            row += term;
            if q >= 4 && term <= SUM_TOL * (total + row).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        total += row;
        if p >= 4 && row <= SUM_TOL * total.max(f64::MIN_POSITIVE) {
            return Ok(rate_prefactor(spec, species) * total);
        }
    }
    Err(Error::NoConvergence(
        "general growth rate series did not converge".into(),
    ))
}

/// `I(p, q) = int_{s_min}^inf exp(-s - max(t_q, c/s)) ds`.
fn lower_cut_integral(p: f64, q: f64, v: f64, e_r: f64, beta: f64) -> f64 {
    let smin = p * beta * (e_r - v);
    let tq = q * beta * (e_r - v);
    let c = (beta * v).powi(2) * p * q / 4.0;
    if c == 0.0 {
        // V = 0: no kinematic constraint beyond the cutoff.
        return (-smin - tq).exp();
    }
    let g = |s: f64| (-s - c / s).exp();
    let peak = c.sqrt();
    if tq == 0.0 {
        // Band edge V = E_R: smin = 0 and the constraint never saturates.
        let hi = 2.0 * peak + 60.0;
        return adaptive_simpson(&g, 0.0, peak, 1e-13) + adaptive_simpson(&g, peak, hi, 1e-13);
    }
    let s_c = c / tq;
    if smin >= s_c {
        return (-smin - tq).exp();
    }
    let tail = (-tq - s_c).exp();
    let numeric = if peak > smin && peak < s_c {
        adaptive_simpson(&g, smin, peak, 1e-13) + adaptive_simpson(&g, peak, s_c, 1e-13)
    } else {
        adaptive_simpson(&g, smin, s_c, 1e-13)
    };
    numeric + tail
}

/// Radial profile of `G1` in a spherical parabolic potential
/// `V(Q) = m omega_r^2 Q^2 / 2` (the standard illustration of the weak
/// spatial dependence of the rates). Radii in meters.
pub fn growth_rate_profile(
    radii: &[f64],
    spec: &ReservoirSpec,
    trap: &TrapGeometry,
    species: &Species,
) -> Result<Vec<ProfilePoint>> {
    radii
        .iter()
        .map(|&q| {
            let v = 0.5 * trap.mass * trap.omega_r.powi(2) * q * q;
            let (g1, region) = if v > spec.e_r {
                (0.0, Region::Beyond)
            } else {
                let region = if v <= 2.0 * spec.e_r / 3.0 + 1e-12 * spec.e_r {
                    Region::Inner
                } else {
                    Region::Outer
                };
                (growth_rate_general(v, spec, species)?, region)
            };
            Ok(ProfilePoint {
                q,
                v_eff: v,
                g1,
                region,
            })
        })
        .collect()
}

/// Recursive adaptive Simpson quadrature with absolute tolerance scaled to
/// the first coarse estimate.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = (rel_tol * whole.abs()).max(1e-300);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

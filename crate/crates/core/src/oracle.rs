//! Brute-force reference implementations for the validation suite.
//!
//! Everything here deliberately avoids the production code paths: projected
//! nonlinear terms are integrated on a fine uniform grid instead of the
//! Gauss-Laguerre rule, reservoir rates are integrated directly in momentum
//! space instead of the resummed series, and cloud moments are estimated by
//! Monte Carlo instead of closed forms. These routines are slow and exist
//! only to cross-check the fast ones; nothing in the simulation pipeline may
//! call them.

use crate::basis::{ModeTable, TrapGeometry};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::reservoir::{ReservoirSpec, Species};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Truncation threshold for the plain series used by the oracles.
const SERIES_TOL: f64 = 1e-13;
/// Hard cap on series length before giving up.
const SERIES_CAP: usize = 4000;

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Composite Simpson rule on a uniform grid with `n` (even) intervals.
fn simpson_uniform(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even interval count");
    let h = (b - a) / n as f64;
    let mut total = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(a + i as f64 * h);
    }
    total * h / 3.0
}

/// Nodes and weights of the 16-point Gauss-Legendre rule on [-1, 1], found
/// by Newton iteration on the three-term recurrence from Chebyshev seeds.
fn gauss_legendre_16() -> ([f64; 16], [f64; 16]) {
    const N: usize = 16;
    let legendre_pair = |t: f64| -> (f64, f64) {
        let (mut p0, mut p1) = (1.0f64, t);
        for k in 2..=N {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        (p0, p1)
    };
    let mut x = [0.0f64; N];
    let mut w = [0.0f64; N];
    for (i, (xi, wi)) in x.iter_mut().zip(w.iter_mut()).enumerate() {
        let mut t = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
        for _ in 0..50 {
            let (p_nm1, p_n) = legendre_pair(t);
            let dp = N as f64 * (t * p_n - p_nm1) / (t * t - 1.0);
            let dt = p_n / dp;
            t -= dt;
            if dt.abs() <= 1e-14 {
                break;
            }
        }
        let (p_nm1, p_n) = legendre_pair(t);
        let dp = N as f64 * (t * p_n - p_nm1) / (t * t - 1.0);
        *xi = t;
        *wi = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Radial mode values for one angular sector, `out[n] = Phi_{n,|l|}(u)`,
/// built from the n = 0 closed form and the associated-Laguerre recurrence.
fn radial_chain(l_abs: u32, u: f64, out: &mut [f64]) {
    let la = l_abs as f64;
    let log_u_term = if l_abs == 0 { 0.0 } else { 0.5 * la * u.ln() };
    let base = (-0.5 * ln_gamma(la + 1.0) - 0.5 * PI.ln() + log_u_term - 0.5 * u).exp();
    let mut pre = base;
    let mut lag_prev = 0.0f64;
    let mut lag = 1.0f64;
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = pre * lag;
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + la - u) * lag - (nf + la) * lag_prev) / (nf + 1.0);
        lag_prev = lag;
        lag = next;
        pre *= ((nf + 1.0) / (nf + 1.0 + la)).sqrt();
    }
}

/// Dense-grid projector: composite Gauss-Legendre panels in the squared
/// radius and an oversampled uniform angular grid, instead of the production
/// quadrature (which is Gauss-Laguerre on half the scale, with different
/// nodes, weights, and truncation).
pub struct DenseOracle {
    /// Distinct angular indices with their mode positions, ordered by n.
    chains: Vec<(i32, Vec<usize>)>,
    u: Vec<f64>,
    /// Panel quadrature weights (already scaled to the panel width).
    sw: Vec<f64>,
    n_theta: usize,
    /// Radial values, row per u node, column per mode (table order).
    rad: Vec<f64>,
    modes: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl DenseOracle {
    pub fn new(table: &ModeTable) -> Self {
        let modes = table.len();
        let mut chains: Vec<(i32, Vec<usize>)> = Vec::new();
        for (idx, mode) in table.modes.iter().enumerate() {
            match chains.iter_mut().find(|(l, _)| *l == mode.l) {
                Some((_, v)) => v.push(idx),
                None => chains.push((mode.l, vec![idx])),
            }
        }
        // Unit-width panels with a 16-point Gauss-Legendre rule each. Every
        // radial integrand is analytic and varies on a scale no shorter than
        // O(1) in u wherever it is non-negligible, so each panel is resolved
        // to rounding. The slowest-decaying products fall like u^{lbar+} e^{-u}
        // past the turning point near u = lbar_plus; twice that plus a fixed
        // pad puts the truncated tail below 1e-20 of the peak.
        let n_panels = 2 * table.lbar_plus as usize + 60;
        let (gx, gw) = gauss_legendre_16();
        let mut u = Vec::with_capacity(16 * n_panels);
        let mut sw = Vec::with_capacity(16 * n_panels);
        for p in 0..n_panels {
            let c = p as f64 + 0.5;
            for i in 0..16 {
                u.push(c + 0.5 * gx[i]);
                sw.push(0.5 * gw[i]);
            }
        }
        let span = (table.lbar_plus + table.lbar_minus) as usize;
        let n_theta = (3 * span + 1).next_power_of_two().max(8);
        let mut rad = vec![0.0f64; u.len() * modes];
        let mut buf = vec![0.0f64; modes];
        for (i, &ui) in u.iter().enumerate() {
            let row = &mut rad[i * modes..(i + 1) * modes];
            for (l, idxs) in chains.iter() {
                let chain_buf = &mut buf[..idxs.len()];
                radial_chain(l.unsigned_abs(), ui, chain_buf);
                for (n, &idx) in idxs.iter().enumerate() {
                    row[idx] = chain_buf[n];
                }
            }
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n_theta);
        let fft_inv = planner.plan_fft_inverse(n_theta);
        DenseOracle {
            chains,
            u,
            sw,
            n_theta,
            rad,
            modes,
            fft_fwd,
            fft_inv,
        }
    }

    /// Worst deviation of `pi * integral(Phi_a Phi_b du)` from the identity,
    /// over all same-sector mode pairs: a self-check that the grid resolves
    /// every radial function it will be asked to integrate.
    pub fn gram_worst(&self) -> f64 {
        let mut worst = 0.0f64;
        for (_, idxs) in self.chains.iter() {
            for (a_pos, &a) in idxs.iter().enumerate() {
                for &b in idxs.iter().skip(a_pos) {
                    let mut s = 0.0;
                    for i in 0..self.u.len() {
                        let row = &self.rad[i * self.modes..];
                        s += self.sw[i] * row[a] * row[b];
                    }
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((PI * s - target).abs());
                }
            }
        }
        worst
    }

    /// Projection of `|psi|^2 psi` onto every mode by dense integration.
    pub fn nonlinear(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: coeffs.len(),
            });
        }
        let nt = self.n_theta;
        let mut line = vec![Complex64::default(); nt];
        let mut scratch = vec![
            Complex64::default();
            self.fft_fwd
                .get_inplace_scratch_len()
                .max(self.fft_inv.get_inplace_scratch_len())
        ];
        let mut acc = vec![Complex64::default(); self.modes];
        let inv_nt = 1.0 / nt as f64;
        for (i, w) in self.sw.iter().enumerate() {
            let row = &self.rad[i * self.modes..(i + 1) * self.modes];
            line.fill(Complex64::default());
            for (l, idxs) in self.chains.iter() {
                let bin = l.rem_euclid(nt as i32) as usize;
                let mut amp = Complex64::default();
                for &idx in idxs {
                    amp += coeffs[idx] * row[idx];
                }
                line[bin] += amp;
            }
            self.fft_inv.process_with_scratch(&mut line, &mut scratch);
            for v in line.iter_mut() {
                *v *= v.norm_sqr();
            }
            self.fft_fwd.process_with_scratch(&mut line, &mut scratch);
            for (l, idxs) in self.chains.iter() {
                let bin = l.rem_euclid(nt as i32) as usize;
                let chi = line[bin] * inv_nt;
                for &idx in idxs {
                    acc[idx] += chi * (w * row[idx]);
                }
            }
        }
        for v in acc.iter_mut() {
            *v *= PI;
        }
        Ok(acc)
    }
}

/// Polylogarithm by numeric quadrature of its integral representation,
/// `Li_nu(z) = 1/Gamma(nu) * integral_0^inf t^(nu-1) / (exp(t)/z - 1) dt`,
/// evaluated after the substitution `t = s^2` to tame the endpoint.
///
/// Valid for `0 < z < 1` and `nu > 1/2`; accurate to ~1e-13.
pub fn polylog_integral(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0 && z < 1.0, "integral representation needs 0 < z < 1");
    assert!(nu > 0.5);
    let g = |s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let e = (-s * s).exp();
        s.powf(2.0 * nu - 1.0) * z * e / (1.0 - z * e)
    };
    let coarse = simpson_uniform(g, 0.0, 12.0, 1 << 16);
    let fine = simpson_uniform(g, 0.0, 12.0, 1 << 17);
    let richardson = (16.0 * fine - coarse) / 15.0;
    2.0 / statrs::function::gamma::gamma(nu) * richardson
}

/// Single-particle growth rate by direct momentum-space integration.
///
/// The two incoming thermal atoms carry momenta `K1, K2` restricted to the
/// region above the cutoff, `K1, K2 >= K_R` with `K1 K2 >= m V / hbar^2`
/// where `K_R^2 = 2m(E_R - V)/hbar^2`. After expanding both Bose factors in
/// powers of the fugacities, each term needs a Gaussian double integral over
/// that region; the inner integral is done in closed form and the outer one
/// numerically. No change of variables, no special-function resummation.
pub fn g1_momentum(v_eff: f64, spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    if !(0.0..=spec.e_r).contains(&v_eff) {
        return Err(Error::Domain(
            "potential must lie between zero and the cutoff".into(),
        ));
    }
    if spec.mu >= spec.e_r {
        return Err(Error::Domain("chemical potential must sit below the cutoff".into()));
    }
    let beta = spec.beta();
    let m = species.mass;
    let aa = beta * HBAR * HBAR / (2.0 * m); // exponent coefficient: exp(-aa * p * K^2)
    let kr2 = 2.0 * m * (spec.e_r - v_eff) / (HBAR * HBAR);
    let kr = kr2.sqrt();
    let c = m * v_eff / (HBAR * HBAR); // hyperbola K1 K2 >= c
    let zv = (beta * (spec.mu - v_eff)).exp();
    let pre0 = 4.0 * HBAR * species.scattering_length.powi(2) / (PI * m);

    // One (p, q) term of the fugacity expansion, without the zv^(p+q) factor.
    let term = |p: f64, q: f64| -> f64 {
        if kr > 0.0 {
            let k1_star = c / kr; // where the hyperbola crosses K2 = K_R
            let tail_from = |k_lo: f64| (-aa * p * k_lo * k_lo).exp() / (2.0 * aa * p);
            let const_k2 = (-aa * q * kr2).exp() / (2.0 * aa * q);
            if k1_star <= kr {
                // Hyperbola lies entirely below the cutoff corner: the domain
                // is the plain quadrant and both integrals are Gaussian.
                tail_from(kr) * const_k2
            } else {
                // Curved part K1 in [kr, k1_star], then the flat tail.
                let f = |k1: f64| -> f64 {
                    let k2min = c / k1;
                    k1 * (-aa * p * k1 * k1 - aa * q * k2min * k2min).exp() / (2.0 * aa * q)
                };
                simpson_uniform(f, kr, k1_star, 4000) + tail_from(k1_star) * const_k2
            }
        } else {
            // V = E_R: only the hyperbola bounds the domain. The integrand
            // vanishes superexponentially at both ends; integrate the window
            // where either exponential is within e^-80 of its peak.
            let k_hi = (80.0 / (aa * p)).sqrt();
            let k_lo = (c * (aa * q / 80.0).sqrt()).min(0.5 * k_hi);
            let f = |k1: f64| -> f64 {
                let k2min = c / k1;
                k1 * (-aa * p * k1 * k1 - aa * q * k2min * k2min).exp() / (2.0 * aa * q)
            };
            simpson_uniform(f, k_lo, k_hi, 6000)
        }
    };

    let mut total = 0.0f64;
    let mut zp = 1.0f64;
    for p in 1..=SERIES_CAP {
        zp *= zv;
        let mut row = 0.0f64;
        let mut zq = zp;
        for q in 1..=SERIES_CAP {
            zq *= zv;
            let contrib = zq * term(p as f64, q as f64);
            row += contrib;
            if q >= 4 && contrib.abs() <= SERIES_TOL * (total + row).abs().max(f64::MIN_POSITIVE) {
                break;
            }
            if q == SERIES_CAP {
                return Err(Error::NoConvergence("fugacity sum in q".into()));
            }
        }
        total += row;
        if p >= 4 && row.abs() <= SERIES_TOL * total.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if p == SERIES_CAP {
            return Err(Error::NoConvergence("fugacity sum in p".into()));
        }
    }
    Ok(pre0 * total)
}

/// Pair growth rate by expanding the Lerch transcendents into plain sums.
pub fn g2_in_direct(spec: &ReservoirSpec, species: &Species) -> Result<f64> {
    if spec.mu >= spec.e_r {
        return Err(Error::Domain("chemical potential must sit below the cutoff".into()));
    }
    let beta = spec.beta();
    let kbt = 1.0 / beta;
    let z = (beta * (spec.mu - spec.e_r)).exp();
    let pre = 4.0 * species.mass / (PI * HBAR.powi(3))
        * (species.scattering_length * kbt).powi(2);
    // Plain Lerch sum: Phi[z, 1, a] = sum_k z^k / (a + k).
    let lerch = |a: f64| -> f64 {
        let mut s = 0.0;
        let mut zk = 1.0;
        for k in 0..200_000 {
            let t = zk / (a + k as f64);
            s += t;
            zk *= z;
            if k > 8 && t <= 1e-17 * s {
                break;
            }
        }
        s
    };
    let r_factor = (beta * (spec.mu - 2.0 * spec.e_r)).exp();
    let mut total = 0.0;
    let mut rf = 1.0;
    for r in 1..=SERIES_CAP {
        rf *= r_factor;
        let l = lerch(r as f64 + 1.0);
        let t = rf * l * l;
        total += t;
        if r >= 4 && t <= 1e-16 * total {
            break;
        }
        if r == SERIES_CAP {
            return Err(Error::NoConvergence("pair-process sum".into()));
        }
    }
    Ok(pre * z * z * total)
}

/// Monte Carlo estimates of the above-cutoff cloud moments.
#[derive(Debug, Clone, Copy)]
pub struct CloudMoments {
    /// Atom number above the cutoff.
    pub n_nc: f64,
    /// Total angular momentum of the cloud (SI units).
    pub lz_total: f64,
    /// Total squared angular momentum, `sum <L_z^2>` (SI units).
    pub lz2_total: f64,
    pub n_nc_se: f64,
    pub lz_se: f64,
    pub lz2_se: f64,
}

/// Importance-sampled phase-space integrals of the semiclassical cloud.
///
/// Samples the classical Boltzmann measure of the effective (centrifugally
/// weakened) trap — Gaussian in every coordinate — and reweights each sample
/// with the Bose-Einstein factor over the Boltzmann one, restricted to
/// energies above the cutoff. The lab-frame angular momentum at a sampled
/// point is `hbar (x K'_y - y K'_x) + m Omega r^2` in the shifted momentum
/// variables that diagonalize the rotating-frame energy.
pub fn mc_cloud_moments(
    spec: &ReservoirSpec,
    trap: &TrapGeometry,
    n_samples: u64,
    seed: u64,
) -> Result<CloudMoments> {
    if spec.mu >= spec.e_r {
        return Err(Error::Domain("chemical potential must sit below the cutoff".into()));
    }
    if (spec.omega_rot - trap.omega_rot).abs() > 1e-9 * trap.omega_r {
        return Err(Error::InvalidParam(
            "reservoir and trap disagree on the rotation rate".into(),
        ));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let beta = spec.beta();
    let m = trap.mass;
    let om_perp = trap.omega_perp();
    let om_z = trap.omega_z;
    let om_rot = trap.omega_rot;
    let sig_r = (1.0 / (beta * m)).sqrt() / om_perp;
    let sig_z = (1.0 / (beta * m)).sqrt() / om_z;
    let sig_k = (m / beta).sqrt() / HBAR;
    // Phase-space normalization of the Boltzmann measure.
    let z1 = 1.0 / (beta * HBAR).powi(3) / (om_z * om_perp * om_perp);
    let fug = (beta * spec.mu).exp();

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut draws = || -> [f64; 6] {
        let mut out = [0.0; 6];
        for v in out.iter_mut() {
            *v = normal.sample(&mut rng);
        }
        out
    };
    let (mut sw, mut sw2) = (0.0f64, 0.0f64);
    let (mut sl, mut sl2) = (0.0f64, 0.0f64);
    let (mut sq, mut sq2) = (0.0f64, 0.0f64);
    for _ in 0..n_samples {
        let [gx, gy, gz, g1, g2, g3] = draws();
        let x = sig_r * gx;
        let y = sig_r * gy;
        let z = sig_z * gz;
        let kx = sig_k * g1;
        let ky = sig_k * g2;
        let kz = sig_k * g3;
        let r = x.hypot(y);
        let e = HBAR * HBAR * (kx * kx + ky * ky + kz * kz) / (2.0 * m) + trap.v_eff(r, z);
        if e <= spec.e_r {
            continue;
        }
        let w = fug / (1.0 - (beta * (spec.mu - e)).exp());
        let lz = HBAR * (x * ky - y * kx) + m * om_rot * r * r;
        sw += w;
        sw2 += w * w;
        sl += w * lz;
        sl2 += (w * lz) * (w * lz);
        sq += w * lz * lz;
        sq2 += (w * lz * lz) * (w * lz * lz);
    }
    let n = n_samples as f64;
    let mean_se = |s: f64, s2: f64| -> (f64, f64) {
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0);
        (z1 * mean, z1 * (var / n).sqrt())
    };
    let (n_nc, n_nc_se) = mean_se(sw, sw2);
    let (lz_total, lz_se) = mean_se(sl, sl2);
    let (lz2_total, lz2_se) = mean_se(sq, sq2);
    Ok(CloudMoments {
        n_nc,
        lz_total,
        lz2_total,
        n_nc_se,
        lz_se,
        lz2_se,
    })
}

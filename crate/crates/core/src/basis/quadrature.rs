//! Gauss-Laguerre / Fourier quadrature tables for the condensate band.
//!
//! Radial integrals use the `N_x`-point Gauss-Laguerre rule in the variable
//! `x = 2 r^2` (so mode products of the form `poly(x) e^{-x}` are integrated
//! exactly), angular integrals use a uniform grid of `N_theta` points. With
//!
//! ```text
//! N_x     = lbar_plus + 1
//! N_theta = 2 (lbar_minus + lbar_plus) + 1
//! ```
//!
//! every integral needed for the cubic nonlinearity and the quartic energy
//! integral is *exact* to rounding: the radial integrands are polynomials of
//! degree at most `2 lbar_plus <= 2 N_x - 1` times `e^{-x}`, and `N_theta` is
//! the smallest odd length for which no angular harmonic generated by a cubic
//! product of band modes aliases onto a different band harmonic.
//!
//! *Quadratic* products of band modes are a different matter: a product of
//! two modes decays like `e^{-x/2}` on the `x` grid, so the rule above does
//! not integrate it exactly and the raw discrete Gram matrix of the band
//! deviates from the identity (negligibly for large rules, but at the few
//! permille level for small bands). Projection of band-limited *fields* is
//! made exact anyway by applying the inverse of that Gram matrix, which is
//! block diagonal over the angular number `l`; the blocks are precomputed
//! here as [`BandFix`] entries and applied by the analysis transform.

use super::laguerre::{assoc_laguerre, gauss_laguerre};
use super::ModeTable;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Radial mode function values for the contiguous run of modes sharing one
/// radial quantum number `n`.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    /// Position in the mode table of the first `(n, l)` mode of this run.
    pub first_mode: usize,
    /// Angular quantum numbers, ascending.
    pub ls: Vec<i32>,
    /// FFT bin of each `l`: `l mod N_theta`.
    pub bins: Vec<usize>,
    /// `P[k * ls.len() + j] = Phi_{n,|l_j|}(u_k)`, row-major over radial nodes.
    pub p: Vec<f64>,
}

/// Same-`l` ladder of modes together with the inverse of its discrete Gram
/// matrix under the `wtilde` weights. Applying the inverse after the raw
/// quadrature projection makes the band projection exactly unitary.
#[derive(Debug, Clone)]
pub(crate) struct BandFix {
    /// Mode-table positions of the ladder, ascending in `n`.
    pub idx: Vec<usize>,
    /// Inverse Gram matrix, row-major `idx.len() x idx.len()`.
    pub ginv: Vec<f64>,
}

/// Precomputed spectral-transform tables for one `(Nbar, Omega_frac)` band.
#[derive(Debug, Clone)]
pub struct QuadratureTables {
    pub n_x: usize,
    pub n_theta: usize,
    /// Gauss-Laguerre nodes `x_k`, ascending.
    pub nodes_x: Vec<f64>,
    /// Radial evaluation points `u_k = x_k / 2` (equals `r_k^2` in trap units).
    pub u: Vec<f64>,
    /// Scaled weights `w_k e^{x_k}`.
    pub w_scaled: Vec<f64>,
    /// Transform weights `wtilde_k = (pi/2) w_k e^{x_k}`.
    pub wtilde: Vec<f64>,
    /// Angular grid `theta_j = 2 pi j / N_theta`.
    pub theta: Vec<f64>,
    pub mode_count: usize,
    pub(crate) blocks: Vec<Block>,
    pub(crate) band_fix: Vec<BandFix>,
}

impl QuadratureTables {
    /// Radii `r_k = sqrt(u_k)` of the quadrature grid, in trap units.
    pub fn radii(&self) -> Vec<f64> {
        self.u.iter().map(|&u| u.sqrt()).collect()
    }
}

/// Normalized radial mode function `Phi_{n,|l|}(u)`.
///
/// `Phi = sqrt(n! / (pi (n+|l|)!)) u^{|l|/2} e^{-u/2} L_n^{|l|}(u)`, assembled
/// with a log-space prefactor so large `|l|` neither underflows nor overflows.
pub fn radial_mode(n: u32, l_abs: u32, u: f64) -> f64 {
    let nf = n as f64;
    let la = l_abs as f64;
    let lag = assoc_laguerre(n as usize, la, u);
    if lag == 0.0 {
        return 0.0;
    }
    // `0.5 * la * u.ln()` would produce 0 * -inf = NaN for the s-wave
    // functions evaluated at the origin, where the power factor is just 1.
    let power = if l_abs == 0 { 0.0 } else { 0.5 * la * u.ln() };
    let ln_pre =
        0.5 * (ln_gamma(nf + 1.0) - ln_gamma(nf + la + 1.0) - PI.ln()) + power - 0.5 * u;
    lag.signum() * (ln_pre + lag.abs().ln()).exp()
}

/// Build the quadrature tables for a mode table.
pub fn build_quadrature(table: &ModeTable) -> Result<QuadratureTables> {
    let n_x = table.lbar_plus as usize + 1;
    let n_theta = 2 * (table.lbar_minus as usize + table.lbar_plus as usize) + 1;

    let rule = gauss_laguerre(n_x)?;
    let u: Vec<f64> = rule.nodes.iter().map(|&x| 0.5 * x).collect();
    let wtilde: Vec<f64> = rule.scaled_weights.iter().map(|&w| 0.5 * PI * w).collect();
    let theta: Vec<f64> = (0..n_theta)
        .map(|j| 2.0 * PI * j as f64 / n_theta as f64)
        .collect();

    let mut blocks = Vec::new();
    for n in 0..=table.n_max() {
        let (first, count) = table.run(n).expect("runs cover 0..=n_max");
        let ls: Vec<i32> = table.modes[first..first + count].iter().map(|m| m.l).collect();
        let bins: Vec<usize> = ls
            .iter()
            .map(|&l| (l.rem_euclid(n_theta as i32)) as usize)
            .collect();
        let mut p = vec![0.0; n_x * count];
        for (k, &uk) in u.iter().enumerate() {
            for (j, &l) in ls.iter().enumerate() {
                p[k * count + j] = radial_mode(n, l.unsigned_abs(), uk);
            }
        }
        blocks.push(Block {
            first_mode: first,
            ls,
            bins,
            p,
        });
    }

    // Group the band into same-l ladders and invert each ladder's discrete
    // Gram matrix (see the module docs: quadratic products are not integrated
    // exactly, so these are close to but not equal to the identity).
    let mut ladders: std::collections::BTreeMap<i32, Vec<(u32, usize)>> =
        std::collections::BTreeMap::new();
    for (i, m) in table.modes.iter().enumerate() {
        ladders.entry(m.l).or_default().push((m.n, i));
    }
    let mut band_fix = Vec::with_capacity(ladders.len());
    for (&l, rungs) in &ladders {
        let m = rungs.len();
        let la = l.unsigned_abs();
        let phi: Vec<Vec<f64>> = rungs
            .iter()
            .map(|&(n, _)| u.iter().map(|&uk| radial_mode(n, la, uk)).collect())
            .collect();
        let gram = DMatrix::from_fn(m, m, |a, b| {
            (0..n_x).map(|k| wtilde[k] * phi[a][k] * phi[b][k]).sum()
        });
        let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| {
            Error::NoConvergence(format!("band Gram matrix for l = {l} is not positive"))
        })?;
        let ginv = chol.inverse();
        band_fix.push(BandFix {
            idx: rungs.iter().map(|&(_, i)| i).collect(),
            ginv: ginv.transpose().as_slice().to_vec(),
        });
    }

    Ok(QuadratureTables {
        n_x,
        n_theta,
        nodes_x: rule.nodes,
        u,
        w_scaled: rule.scaled_weights,
        wtilde,
        theta,
        mode_count: table.len(),
        blocks,
        band_fix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ModeTable;
    use approx::assert_relative_eq;

    #[test]
    fn grid_sizes_for_reference_bands() {
        let t = ModeTable::build(4, 0.979).unwrap();
        let q = build_quadrature(&t).unwrap();
        assert_eq!(q.n_x, 191);
        assert_eq!(q.n_theta, 385);

        let t = ModeTable::build(6, 0.5).unwrap();
        let q = build_quadrature(&t).unwrap();
        assert_eq!(q.n_x, 13);
        assert_eq!(q.n_theta, 33);

        let t = ModeTable::build(0, 0.9).unwrap();
        let q = build_quadrature(&t).unwrap();
        assert_eq!(q.n_x, 1);
        assert_eq!(q.n_theta, 1);
    }

    #[test]
    fn nodes_and_weights_are_sane() {
        let t = ModeTable::build(6, 0.5).unwrap();
        let q = build_quadrature(&t).unwrap();
        for w in q.nodes_x.windows(2) {
            assert!(w[0] < w[1]);
        }
        for k in 0..q.n_x {
            assert!(q.wtilde[k] > 0.0 && q.wtilde[k].is_finite());
            assert_relative_eq!(q.u[k], 0.5 * q.nodes_x[k]);
        }
        assert_relative_eq!(q.theta[1], 2.0 * PI / 33.0);
    }

    /// Discrete orthonormality of the radial functions under the wtilde
    /// weights. The quadratic integrand is not polynomial times e^{-x} (it
    /// carries a residual e^{x/2}), so the raw Gram matrix only approximates
    /// the identity -- well below rounding for the large reference rule, but
    /// at the permille level for a 13-point rule. The precomputed inverse
    /// Gram blocks must repair it to the identity exactly.
    #[test]
    fn discrete_radial_orthonormality_moderate_band() {
        let t = ModeTable::build(6, 0.5).unwrap();
        let q = build_quadrature(&t).unwrap();
        let mut worst_raw = 0.0f64;
        let mut worst_fixed = 0.0f64;
        for fix in &q.band_fix {
            let m = fix.idx.len();
            let la = t.modes[fix.idx[0]].l.unsigned_abs();
            let gram: Vec<f64> = (0..m * m)
                .map(|ab| {
                    let (a, b) = (ab / m, ab % m);
                    let na = t.modes[fix.idx[a]].n;
                    let nb = t.modes[fix.idx[b]].n;
                    (0..q.n_x)
                        .map(|k| {
                            q.wtilde[k]
                                * radial_mode(na, la, q.u[k])
                                * radial_mode(nb, la, q.u[k])
                        })
                        .sum()
                })
                .collect();
            for a in 0..m {
                for b in 0..m {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    worst_raw = worst_raw.max((gram[a * m + b] - expect).abs());
                    let prod: f64 =
                        (0..m).map(|c| fix.ginv[a * m + c] * gram[c * m + b]).sum();
                    worst_fixed = worst_fixed.max((prod - expect).abs());
                }
            }
        }
        // Raw deviation is real but small; the corrected Gram is the identity.
        assert!(worst_raw < 2e-2, "raw gram deviation {worst_raw}");
        assert!(worst_raw > 1e-8, "raw gram unexpectedly exact {worst_raw}");
        assert!(worst_fixed <= 1e-12, "corrected gram deviation {worst_fixed}");
    }

    #[test]
    fn discrete_radial_orthonormality_headline_band() {
        let t = ModeTable::build(4, 0.979).unwrap();
        let q = build_quadrature(&t).unwrap();
        // Spot-check the extremes: the l = 190 single mode and the n-ladder
        // at l = 0.
        let s: f64 = (0..q.n_x)
            .map(|k| q.wtilde[k] * radial_mode(0, 190, q.u[k]).powi(2))
            .sum();
        assert!((s - 1.0).abs() <= 1e-11, "l=190 norm {s}");
        for (n, m, expect) in [(0u32, 0u32, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 2, 0.0)] {
            let s: f64 = (0..q.n_x)
                .map(|k| q.wtilde[k] * radial_mode(n, 0, q.u[k]) * radial_mode(m, 0, q.u[k]))
                .sum();
            assert!((s - expect).abs() <= 1e-12, "gram({n},{m}) = {s}");
        }
    }

    #[test]
    fn ground_mode_value() {
        // Phi_00(u) = e^{-u/2} / sqrt(pi)
        assert_relative_eq!(
            radial_mode(0, 0, 0.8),
            (-0.4f64).exp() / PI.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn blocks_cover_all_modes() {
        let t = ModeTable::build(4, 0.979).unwrap();
        let q = build_quadrature(&t).unwrap();
        let total: usize = q.blocks.iter().map(|b| b.ls.len()).sum();
        assert_eq!(total, t.len());
        // Bins are unique across the whole band: no two distinct l share one.
        let mut seen = std::collections::HashSet::new();
        for b in &q.blocks {
            for (&l, &bin) in b.ls.iter().zip(&b.bins) {
                assert!(bin < q.n_theta);
                if seen.insert(bin) {
                    // first time: fine
                } else {
                    // Same bin must mean same l (different n runs share l).
                    assert!(
                        q.blocks
                            .iter()
                            .flat_map(|bb| bb.ls.iter().zip(&bb.bins))
                            .filter(|&(_, &bn)| bn == bin)
                            .all(|(&ll, _)| ll == l),
                        "bin collision between different l"
                    );
                }
            }
        }
    }
}

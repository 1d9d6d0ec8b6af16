//! Laguerre polynomial evaluation and Gauss-Laguerre quadrature rules.
//!
//! Everything here works with the *scaled* polynomials
//! `Lt_n(x) = L_n(x) e^{-x/2}`, which stay O(1) across the full node range
//! of large rules, so no log-space bookkeeping is needed for the classical
//! (alpha = 0) rule even at several hundred points.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

/// Evaluate the scaled Laguerre pair `(Lt_{n-1}(x), Lt_n(x))`.
///
/// Uses the three-term recurrence
/// `Lt_{k+1} = ((2k+1-x) Lt_k - k Lt_{k-1}) / (k+1)` seeded with
/// `Lt_0 = e^{-x/2}`. For `n = 0` the first element is 0 by convention.
pub fn scaled_laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = (-0.5 * x).exp();
    for k in 0..n {
        let next = ((2.0 * k as f64 + 1.0 - x) * cur - k as f64 * prev) / (k as f64 + 1.0);
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Plain associated Laguerre polynomial `L_n^{alpha}(x)` by upward recurrence.
///
/// No exponential damping is applied; callers combine the result with their
/// own (log-space) prefactors. Stable upward for the small `n` used here.
pub fn assoc_laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Classical Gauss-Laguerre rule (weight `e^{-x}` on `[0, inf)`).
///
/// Returns nodes in ascending order together with the *scaled* weights
/// `w_k e^{x_k}`, computed directly as `x_k / ((N+1)^2 Lt_{N+1}(x_k)^2)` so
/// large rules neither underflow nor overflow.
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    /// `w_k e^{x_k}`
    pub scaled_weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Plain weight `w_k` (underflows to 0 for very large nodes; fine for
    /// diagnostics, not used in production transforms).
    pub fn plain_weight(&self, k: usize) -> f64 {
        self.scaled_weights[k] * (-self.nodes[k]).exp()
    }
}

/// Build the `n`-point classical Gauss-Laguerre rule.
///
/// Golub-Welsch eigenvalues of the Jacobi matrix seed a Newton iteration on
/// the scaled polynomial; each root is polished to machine precision.
pub fn gauss_laguerre(n: usize) -> Result<GaussLaguerre> {
    if n == 0 {
        return Err(Error::InvalidParam("quadrature order must be >= 1".into()));
    }
    let mut nodes = jacobi_eigenvalues(n, 0.0);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for x in nodes.iter_mut() {
        newton_polish(n, x)?;
    }
    // Roots of orthogonal polynomials are simple and distinct; a merged pair
    // means the seeds or the polish went wrong.
    for w in nodes.windows(2) {
        if w[1] - w[0] <= 0.0 {
            return Err(Error::NoConvergence(format!(
                "Gauss-Laguerre nodes collided near x = {}",
                w[0]
            )));
        }
    }

    let np1 = (n + 1) as f64;
    let scaled_weights = nodes
        .iter()
        .map(|&x| {
            let (_, lt_np1) = scaled_laguerre_pair(n + 1, x);
            x / (np1 * np1 * lt_np1 * lt_np1)
        })
        .collect();

    Ok(GaussLaguerre {
        nodes,
        scaled_weights,
    })
}

/// Newton iteration for a root of `Lt_n` starting from `x`.
///
/// `d/dx [L_n e^{-x/2}] = (L_n' - L_n/2) e^{-x/2}` with
/// `L_n'(x) = n (L_n(x) - L_{n-1}(x)) / x`.
fn newton_polish(n: usize, x: &mut f64) -> Result<()> {
    let nf = n as f64;
    let mut prev_step = f64::INFINITY;
    for _ in 0..64 {
        let (lt_nm1, lt_n) = scaled_laguerre_pair(n, *x);
        let deriv = nf * (lt_n - lt_nm1) / *x - 0.5 * lt_n;
        let dx = lt_n / deriv;
        *x -= dx;
        let step = dx.abs();
        if step <= 1e-15 * x.abs() {
            return Ok(());
        }
        // The recurrence evaluates Lt_n with a roundoff floor of roughly
        // n * eps relative to the node, so near the smallest nodes of large
        // rules Newton settles into a machine-precision limit cycle instead
        // of shrinking further. No progress while already far below any
        // useful tolerance means the root is done.
        if step >= 0.5 * prev_step && step <= 1e-11 * x.abs() {
            return Ok(());
        }
        prev_step = step;
    }
    Err(Error::NoConvergence(format!(
        "Laguerre Newton iteration stalled at order {n}, node {x}"
    )))
}

/// Generalized Gauss-Laguerre rule for weight `u^alpha e^{-u}` on `[0, inf)`.
///
/// Jacobi-matrix eigenvalues seed a Newton polish on `L_n^{(alpha)}`; the
/// weights come from the Christoffel-Darboux identity
/// `w_k = 1 / sum_j p_j(x_k)^2` over the orthonormal polynomials, which keeps
/// full precision where eigenvector-based weights lose ~7 digits in the
/// tails. Returns plain (unscaled) weights; intended for moderate orders
/// where they do not underflow.
pub fn generalized_rule(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0);
    let mut nodes = jacobi_eigenvalues(n, alpha);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    for x in nodes.iter_mut() {
        // Newton on the plain polynomial: for orders up to ~10^2 the values
        // stay within f64 range, and x L' = n L_n - (n + alpha) L_{n-1}.
        let mut prev_step = f64::INFINITY;
        for _ in 0..64 {
            let cur = assoc_laguerre(n, alpha, *x);
            let low = assoc_laguerre(n - 1, alpha, *x);
            let deriv = (nf * cur - (nf + alpha) * low) / *x;
            let dx = cur / deriv;
            *x -= dx;
            let step = dx.abs();
            if step <= 1e-15 * x.abs() || (step >= 0.5 * prev_step && step <= 1e-11 * x.abs()) {
                break;
            }
            prev_step = step;
        }
    }
    let mu0 = gamma(alpha + 1.0);
    let weights = nodes
        .iter()
        .map(|&x| {
            // Orthonormal recurrence with the same Jacobi coefficients.
            let mut total = 0.0f64;
            let mut prev = 0.0f64;
            let mut cur = 1.0 / mu0.sqrt();
            for j in 0..n {
                total += cur * cur;
                let jf = j as f64;
                let b_next = ((jf + 1.0) * (jf + 1.0 + alpha)).sqrt();
                let b_cur = (jf * (jf + alpha)).sqrt();
                let next = ((x - (2.0 * jf + alpha + 1.0)) * cur - b_cur * prev) / b_next;
                prev = cur;
                cur = next;
            }
            1.0 / total
        })
        .collect();
    (nodes, weights)
}

/// Eigenvalues of the symmetric Jacobi matrix for weight `u^alpha e^{-u}`.
fn jacobi_eigenvalues(n: usize, alpha: f64) -> Vec<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + alpha + 1.0
        } else if j == i + 1 || i == j + 1 {
            let k = i.min(j) as f64;
            ((k + 1.0) * (k + 1.0 + alpha)).sqrt()
        } else {
            0.0
        }
    });
    m.symmetric_eigen().eigenvalues.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_rule_is_exact() {
        let rule = gauss_laguerre(1).unwrap();
        assert_relative_eq!(rule.nodes[0], 1.0, epsilon = 1e-14);
        // w_1 = 1, so the scaled weight is e^1.
        assert_relative_eq!(rule.scaled_weights[0], 1.0_f64.exp(), epsilon = 1e-13);
    }

    #[test]
    fn plain_weight_moments() {
        let rule = gauss_laguerre(12).unwrap();
        let s0: f64 = (0..12).map(|k| rule.plain_weight(k)).sum();
        let s1: f64 = (0..12).map(|k| rule.plain_weight(k) * rule.nodes[k]).sum();
        assert_relative_eq!(s0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn polynomial_exactness_degree_five() {
        // integral of x^5 e^{-x} = 5! = 120, exact for an 8-point rule.
        let rule = gauss_laguerre(8).unwrap();
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.scaled_weights)
            .map(|(&x, &we)| we * x.powi(5) * (-x).exp())
            .sum();
        assert_relative_eq!(s, 120.0, max_relative = 1e-12);
    }

    #[test]
    fn non_polynomial_integrand_converges() {
        // integral of x e^{-2x} dx = 1/4 using the scaled weights on
        // h(x) = x e^{-2x} = [x e^{-x}] e^{-x}; convergence is
        // superexponential in the rule order.
        let rule = gauss_laguerre(40).unwrap();
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.scaled_weights)
            .map(|(&x, &we)| we * x * (-2.0 * x).exp())
            .sum();
        assert_relative_eq!(s, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn large_rule_roots_are_converged() {
        let n = 191;
        let rule = gauss_laguerre(n).unwrap();
        assert_eq!(rule.nodes.len(), n);
        for &x in &rule.nodes {
            let (lt_nm1, lt_n) = scaled_laguerre_pair(n, x);
            let deriv = n as f64 * (lt_n - lt_nm1) / x - 0.5 * lt_n;
            // Residual measured against the local derivative scale. The
            // Newton polish stops at its rounding limit cycle, which for the
            // tightly clustered small nodes of a 191-point rule sits near
            // 1e-12 relative; anything at that level is converged.
            assert!(
                (lt_n / (deriv * x)).abs() <= 1e-11,
                "unconverged root x = {x}"
            );
        }
        // All scaled weights are finite and positive even at the largest node.
        for &we in &rule.scaled_weights {
            assert!(we.is_finite() && we > 0.0);
        }
    }

    #[test]
    fn generalized_rule_matches_gamma_moments() {
        // integral of u^{m + 1/2} e^{-u} = Gamma(m + 3/2).
        let (nodes, weights) = generalized_rule(48, 0.5);
        for m in [0usize, 1, 2, 5, 10, 20] {
            let s: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&u, &w)| w * u.powi(m as i32))
                .sum();
            let exact = gamma(m as f64 + 1.5);
            assert_relative_eq!(s, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn generalized_alpha_zero_matches_classical() {
        let (nodes, weights) = generalized_rule(12, 0.0);
        let rule = gauss_laguerre(12).unwrap();
        for k in 0..12 {
            assert_relative_eq!(nodes[k], rule.nodes[k], max_relative = 1e-10);
            assert_relative_eq!(weights[k], rule.plain_weight(k), max_relative = 1e-9);
        }
    }

    #[test]
    fn assoc_laguerre_small_orders() {
        // L_2^1(x) = 3 - 3x + x^2/2
        let x = 0.7;
        assert_relative_eq!(
            assoc_laguerre(2, 1.0, x),
            3.0 - 3.0 * x + 0.5 * x * x,
            epsilon = 1e-14
        );
        // L_1^alpha(x) = 1 + alpha - x
        assert_relative_eq!(assoc_laguerre(1, 2.5, x), 3.5 - x, epsilon = 1e-14);
    }
}

//! Vortex detection and pair statistics on rendered density grids.
//!
//! Cores are located by the phase winding around each grid plaquette; a
//! winding of +-2pi marks a singly charged vortex, larger magnitudes are
//! split into unit charges and flagged. Core positions are then refined to
//! sub-cell accuracy from the common zero of Re(psi) and Im(psi) under
//! bilinear interpolation.

use super::grid::DensityGrid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A phase singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    /// Circulation quantum; +-1 after splitting of multiply charged cells.
    pub charge: i32,
}

/// All singularities found inside the analysis radius.
#[derive(Debug, Clone)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
    /// Radial cut applied to the detections.
    pub filter_radius: f64,
    /// Number of plaquettes whose winding exceeded one quantum (each was
    /// split into unit charges at the same location).
    pub multi_flagged: usize,
}

impl VortexSet {
    /// Sum of charges.
    pub fn total_charge(&self) -> i64 {
        self.vortices.iter().map(|v| v.charge as i64).sum()
    }

    /// Counts of (positive, negative) unit charges.
    pub fn charge_census(&self) -> (usize, usize) {
        let pos = self.vortices.iter().filter(|v| v.charge > 0).count();
        (pos, self.vortices.len() - pos)
    }
}

/// Wrap a phase difference into (-pi, pi].
fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Net winding of the four-segment loop around plaquette corners.
fn plaquette_winding(c: [Complex64; 4]) -> f64 {
    let ph: Vec<f64> = c.iter().map(|v| v.im.atan2(v.re)).collect();
    wrap(ph[1] - ph[0]) + wrap(ph[2] - ph[1]) + wrap(ph[3] - ph[2]) + wrap(ph[0] - ph[3])
}

/// Refine a core position inside the unit cell by Newton iteration on the
/// bilinear interpolant of the complex field; returns fractional (u, v).
fn refine(c: [Complex64; 4]) -> (f64, f64) {
    // Corners ordered (0,0), (1,0), (1,1), (0,1).
    let f = |u: f64, v: f64| -> Complex64 {
        c[0] * ((1.0 - u) * (1.0 - v)) + c[1] * (u * (1.0 - v)) + c[2] * (u * v) + c[3] * ((1.0 - u) * v)
    };
    let mut u = 0.5;
    let mut v = 0.5;
    for _ in 0..12 {
        let val = f(u, v);
        let du = (c[1] - c[0]) * (1.0 - v) + (c[2] - c[3]) * v;
        let dv = (c[3] - c[0]) * (1.0 - u) + (c[2] - c[1]) * u;
        // Solve the real 2x2 system [Re du, Re dv; Im du, Im dv] d = -val.
        let det = du.re * dv.im - dv.re * du.im;
        if det.abs() < 1e-300 {
            break;
        }
        let step_u = (-val.re * dv.im + val.im * dv.re) / det;
        let step_v = (-du.re * val.im + du.im * val.re) / det;
        u = (u + step_u).clamp(0.0, 1.0);
        v = (v + step_v).clamp(0.0, 1.0);
        if step_u.abs() + step_v.abs() < 1e-12 {
            break;
        }
    }
    (u, v)
}

/// Locate phase singularities within `filter_radius` of the frame centre.
pub fn detect_vortices(grid: &DensityGrid, filter_radius: f64) -> VortexSet {
    let m = grid.m;
    let h = grid.spacing();
    let mut vortices = Vec::new();
    let mut multi_flagged = 0usize;
    for iy in 0..m - 1 {
        for ix in 0..m - 1 {
            let corners = [
                grid.value(ix, iy),
                grid.value(ix + 1, iy),
                grid.value(ix + 1, iy + 1),
                grid.value(ix, iy + 1),
            ];
            let w = plaquette_winding(corners);
            let quanta = (w / (2.0 * PI)).round() as i32;
            if quanta == 0 {
                continue;
            }
            let (u, v) = refine(corners);
            let x = grid.x(ix) + u * h;
            let y = grid.y(iy) + v * h;
            if x.hypot(y) > filter_radius {
                continue;
            }
            if quanta.abs() > 1 {
                multi_flagged += 1;
            }
            let sign = quanta.signum();
            for _ in 0..quanta.abs() {
                vortices.push(Vortex { x, y, charge: sign });
            }
        }
    }
    VortexSet {
        vortices,
        filter_radius,
        multi_flagged,
    }
}

/// Total phase winding of `f` around a circle of given radius, in quanta.
///
/// Independent cross-check for the plaquette detector: counts the net charge
/// enclosed by the contour.
pub fn contour_winding(f: impl Fn(f64, f64) -> Complex64, radius: f64, n_points: usize) -> i64 {
    let n = n_points.max(8);
    let mut total = 0.0;
    let mut prev = {
        let v = f(radius, 0.0);
        v.im.atan2(v.re)
    };
    for k in 1..=n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        let v = f(radius * theta.cos(), radius * theta.sin());
        let ph = v.im.atan2(v.re);
        total += wrap(ph - prev);
        prev = ph;
    }
    (total / (2.0 * PI)).round() as i64
}

/// Histogram of pairwise core separations.
#[derive(Debug, Clone)]
pub struct PairHistogram {
    /// `counts.len() + 1` monotone edges starting at zero.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl PairHistogram {
    /// Midpoint of bin `i`.
    pub fn centre(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histogram of all pairwise distances with fixed bin width.
///
/// The edges always cover the largest separation, so the counts sum to
/// `n (n - 1) / 2` exactly.
pub fn pair_histogram(set: &VortexSet, bin_width: f64) -> Result<PairHistogram> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParam("bin width must be positive".into()));
    }
    let pts = &set.vortices;
    let mut dists = Vec::with_capacity(pts.len().saturating_sub(1) * pts.len() / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            dists.push((pts[i].x - pts[j].x).hypot(pts[i].y - pts[j].y));
        }
    }
    let max_d = dists.iter().cloned().fold(0.0f64, f64::max);
    let n_bins = ((max_d / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0u64; n_bins];
    for d in dists {
        let mut b = (d / bin_width) as usize;
        if b >= n_bins {
            b = n_bins - 1;
        }
        counts[b] += 1;
    }
    let bin_edges = (0..=n_bins).map(|i| i as f64 * bin_width).collect();
    Ok(PairHistogram { bin_edges, counts })
}

/// Centres of resolved histogram peaks.
///
/// The counts are smoothed with a centred moving average of half-width
/// `smooth`, then local maxima are kept when their prominence (height above
/// the higher of the two flanking valleys) exceeds `min_prominence` times the
/// global maximum. Suited to counting discrete lattice peaks, not a general
/// spectral estimator.
pub fn histogram_peaks(hist: &PairHistogram, smooth: usize, min_prominence: f64) -> Vec<f64> {
    let values: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    profile_peaks(&values, smooth, min_prominence)
        .into_iter()
        .map(|i| hist.centre(i))
        .collect()
}

/// Pair counts divided by the annulus area of each bin.
///
/// Removes the geometric `~r` growth of the raw pair counts, so lattice
/// shells appear as peaks on a flat background (a radial distribution
/// function up to overall normalization).
pub fn annulus_normalized(hist: &PairHistogram) -> Vec<f64> {
    hist.counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let lo = hist.bin_edges[i];
            let hi = hist.bin_edges[i + 1];
            c as f64 / (PI * (hi * hi - lo * lo))
        })
        .collect()
}

/// Shared peak finder over an arbitrary profile; returns bin indices.
pub fn profile_peaks(values: &[f64], smooth: usize, min_prominence: f64) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(smooth);
            let hi = (i + smooth).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let global_max = s.iter().cloned().fold(0.0f64, f64::max);
    if global_max <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(s[i] > s[i - 1] && s[i] >= s[i + 1]) {
            continue;
        }
        // Walk outwards to the nearest higher bar, tracking the valley floor.
        let mut left_min = s[i];
        for j in (0..i).rev() {
            if s[j] > s[i] {
                break;
            }
            left_min = left_min.min(s[j]);
        }
        let mut right_min = s[i];
        for val in s.iter().take(n).skip(i + 1) {
            if *val > s[i] {
                break;
            }
            right_min = right_min.min(*val);
        }
        let prominence = s[i] - left_min.max(right_min);
        if prominence >= min_prominence * global_max {
            peaks.push(i);
        }
    }
    peaks
}

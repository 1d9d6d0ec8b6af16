//! Command implementations: reservoir tables, rate profiles, ensemble
//! sampling, trajectory evolution, windowed condensate analysis, the full
//! quench pipeline, and the fast verification gates.
//!
//! Concurrency: trajectories are independent workers scheduled on a local
//! thread pool (size from `ROTBEC_WORKERS`, default = available cores); every
//! worker writes only inside its own trajectory directory, and aggregation is
//! a final single-writer pass.

use crate::checkpoint::{self, GridHeader};
use crate::config::RunConfig;
use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rotbec::analysis::grid::{density_grid, DensityGrid};
use rotbec::analysis::vortex::{annulus_normalized, detect_vortices, pair_histogram, PairHistogram, VortexSet};
use rotbec::analysis::{
    condensate_fraction, penrose_onsager, short_time_density_matrix, CondensateResult,
};
use rotbec::basis::{build_quadrature, ModeTable, QuadratureTables, TrapGeometry, TransformScratch};
use rotbec::constants::HBAR;
use rotbec::dynamics::{evolve, EvolutionParams, ObservableRecord, TrajectoryArchive};
use rotbec::field::FieldState;
use rotbec::reservoir::{
    angular_momentum_moments, dimensionless_damping, growth_rate_profile, noncondensate_number,
    rate_set, transition_temperature, Region, ReservoirSpec,
};
use rotbec::rng::SeedLineage;
use rotbec::sampler::{ensemble_onebody_matrix, sample_ensemble, sample_wigner, thermal_occupation};
use std::fs;
use std::path::{Path, PathBuf};

/// Worker-pool size: `ROTBEC_WORKERS` when set, otherwise the host's
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("ROTBEC_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

// ---------------------------------------------------------------------------
// CSV helpers (full double precision; fields quoted only when necessary)
// ---------------------------------------------------------------------------

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&csv_line(row));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn f(x: f64) -> String {
    // Shortest representation that parses back to the same double.
    format!("{x}")
}

// ---------------------------------------------------------------------------
// Shared simulation context
// ---------------------------------------------------------------------------

pub struct SimContext {
    pub cfg: RunConfig,
    pub table: ModeTable,
    pub quad: QuadratureTables,
    pub params: EvolutionParams,
}

impl SimContext {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let table = ModeTable::build(cfg.cutoff.nbar, cfg.trap.omega_frac)
            .map_err(|e| anyhow!("building the mode table: {e}"))?;
        let quad = build_quadrature(&table).map_err(|e| anyhow!("building quadrature: {e}"))?;
        Ok(Self {
            cfg: cfg.clone(),
            table,
            quad,
            params: cfg.evolution_params(),
        })
    }
}

// ---------------------------------------------------------------------------
// Trajectory archives on disk
// ---------------------------------------------------------------------------

/// Writes snapshots, the observables CSV, and the lineage record.
pub fn write_archive(dir: &Path, archive: &TrajectoryArchive, cfg: &RunConfig) -> Result<()> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (i, snap) in archive.snapshots.iter().enumerate() {
        checkpoint::write_state(
            &snap_dir.join(format!("snap_{i:06}.sgpf")),
            snap,
            cfg.cutoff.nbar,
            cfg.trap.omega_frac,
        )?;
    }
    let rows: Vec<Vec<String>> = archive
        .observables
        .iter()
        .map(|o| vec![f(o.time), f(o.n_gp), f(o.e_gp), f(o.l_z)])
        .collect();
    write_csv(&dir.join("observables.csv"), "time,n_gp,e_gp,l_z", &rows)?;
    let meta = format!(
        "root_seed = {}\ntrajectory_index = {}\nstability_warning = {}\n",
        archive.lineage.root_seed, archive.lineage.trajectory_index, archive.stability_warning
    );
    fs::write(dir.join("trajectory.txt"), meta)?;
    Ok(())
}

/// Rebuilds a [`TrajectoryArchive`] from a directory written by
/// [`write_archive`]; the evolution parameters come from the configuration.
pub fn read_archive(dir: &Path, ctx: &SimContext) -> Result<TrajectoryArchive> {
    let snap_dir = dir.join("snapshots");
    let mut names: Vec<PathBuf> = fs::read_dir(&snap_dir)
        .with_context(|| format!("listing {}", snap_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sgpf"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("{} holds no snapshots", snap_dir.display());
    }
    let mut snapshots = Vec::with_capacity(names.len());
    for name in &names {
        let (header, state) = checkpoint::read_field(name)?;
        if header.nbar != ctx.cfg.cutoff.nbar
            || (header.omega_frac - ctx.cfg.trap.omega_frac).abs() > 1e-12
        {
            bail!(
                "{}: band (Nbar={}, Omega_frac={}) does not match the configuration",
                name.display(),
                header.nbar,
                header.omega_frac
            );
        }
        snapshots.push(state);
    }
    let obs_text = fs::read_to_string(dir.join("observables.csv"))?;
    let mut observables = Vec::new();
    for line in obs_text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            bail!("malformed observables row `{line}`");
        }
        observables.push(ObservableRecord {
            time: cols[0].parse()?,
            n_gp: cols[1].parse()?,
            e_gp: cols[2].parse()?,
            l_z: cols[3].parse()?,
        });
    }
    let meta = fs::read_to_string(dir.join("trajectory.txt")).unwrap_or_default();
    let mut root_seed = ctx.cfg.ensemble.seed;
    let mut trajectory_index = 0u64;
    let mut stability_warning = false;
    for line in meta.lines() {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "root_seed" => root_seed = v.trim().parse().unwrap_or(root_seed),
                "trajectory_index" => trajectory_index = v.trim().parse().unwrap_or(0),
                "stability_warning" => stability_warning = v.trim() == "true",
                _ => {}
            }
        }
    }
    Ok(TrajectoryArchive {
        snapshots,
        observables,
        params: ctx.params.clone(),
        lineage: rotbec::dynamics::RngLineageInfo {
            root_seed,
            trajectory_index,
        },
        stability_warning,
    })
}

// ---------------------------------------------------------------------------
// Windowed condensate analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct WindowSummary {
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_center: f64,
    /// Mean band population over the window.
    pub n_gp_mean: f64,
    /// Dominant eigenvalue of the window-averaged one-body matrix.
    pub n0: f64,
    /// Same-sign vortex counts inside the filter radius of the condensate
    /// mode (positive, negative).
    pub n_plus: usize,
    pub n_minus: usize,
}

pub struct ArchiveAnalysis {
    pub windows: Vec<WindowSummary>,
    /// Penrose-Onsager result over the closing window.
    pub condensate: CondensateResult,
    pub vortices: VortexSet,
    pub histogram: Option<PairHistogram>,
    /// (n0, n_band, n_nc, fraction) without the half-quantum subtraction.
    pub fraction_raw: (f64, f64, f64, f64),
    /// Same with `mode_count/2` removed from the band population.
    pub fraction_half: (f64, f64, f64, f64),
    pub t_c_nk: f64,
    pub ideal_fraction: f64,
    pub final_window: (f64, f64),
}

fn window_bounds(t_last: f64, width: f64) -> Vec<(f64, f64)> {
    if t_last <= width {
        return vec![(0.0, t_last)];
    }
    let count = (t_last / width).ceil() as usize;
    (0..count)
        .map(|j| {
            let hi = t_last - (count - 1 - j) as f64 * width;
            ((hi - width).max(0.0), hi)
        })
        .collect()
}

fn census_of(
    result: &CondensateResult,
    ctx: &SimContext,
    time: f64,
) -> Result<(VortexSet, DensityGrid)> {
    let field = FieldState::new(result.scaled_mode(), time);
    let grid = density_grid(
        &field,
        &ctx.table,
        ctx.cfg.analysis.grid_extent,
        ctx.cfg.analysis.grid_m,
        Some(ctx.params.mu_tilde),
    )
    .map_err(|e| anyhow!("density grid: {e}"))?;
    let set = detect_vortices(&grid, ctx.cfg.analysis.filter_radius);
    Ok((set, grid))
}

/// Sliding-window Penrose-Onsager analysis of one trajectory.
pub fn analyze_archive(ctx: &SimContext, archive: &TrajectoryArchive) -> Result<ArchiveAnalysis> {
    let t_last = archive
        .snapshots
        .last()
        .ok_or_else(|| anyhow!("archive holds no snapshots"))?
        .time;
    let eps = 1e-9 * ctx.cfg.analysis.window.max(1.0);
    let bounds = window_bounds(t_last, ctx.cfg.analysis.window);

    let mut windows = Vec::with_capacity(bounds.len());
    let mut last_result: Option<(CondensateResult, VortexSet, (f64, f64))> = None;
    for &(lo, hi) in &bounds {
        let window = (lo - eps, hi + eps);
        let available = archive.window(window.0, window.1).len();
        if available == 0 {
            continue;
        }
        let n_samples = ctx.cfg.analysis.n_samples.min(available);
        let rho = short_time_density_matrix(archive, window, n_samples)
            .map_err(|e| anyhow!("window [{lo}, {hi}]: {e}"))?;
        let result = penrose_onsager(&rho).map_err(|e| anyhow!("window [{lo}, {hi}]: {e}"))?;
        let t_center = 0.5 * (lo + hi);
        let (set, _) = census_of(&result, ctx, t_center)?;
        let (n_plus, n_minus) = set.charge_census();
        let obs: Vec<f64> = archive
            .observables
            .iter()
            .filter(|o| o.time >= window.0 && o.time <= window.1)
            .map(|o| o.n_gp)
            .collect();
        let n_gp_mean = if obs.is_empty() {
            f64::NAN
        } else {
            obs.iter().sum::<f64>() / obs.len() as f64
        };
        windows.push(WindowSummary {
            t_lo: lo,
            t_hi: hi,
            t_center,
            n_gp_mean,
            n0: result.n0,
            n_plus,
            n_minus,
        });
        last_result = Some((result, set, window));
    }
    let (condensate, vortices, final_window) =
        last_result.ok_or_else(|| anyhow!("no analysis window held any snapshots"))?;

    let histogram = if vortices.vortices.len() >= 2 {
        Some(
            pair_histogram(&vortices, ctx.cfg.analysis.bin_width)
                .map_err(|e| anyhow!("pair histogram: {e}"))?,
        )
    } else {
        None
    };

    let spec = ctx.cfg.reservoir_spec(&ctx.cfg.quench)?;
    let trap = ctx.cfg.trap_geometry();
    let n_nc =
        noncondensate_number(&spec, &trap).map_err(|e| anyhow!("non-condensate number: {e}"))?;
    let raw = condensate_fraction(&condensate, archive, final_window, n_nc, false)
        .map_err(|e| anyhow!("condensate fraction: {e}"))?;
    let half = condensate_fraction(&condensate, archive, final_window, n_nc, true)
        .map_err(|e| anyhow!("condensate fraction: {e}"))?;
    let n_total = half.n_band.max(0.0) + n_nc;
    let t_c = transition_temperature(n_total, &trap)
        .map_err(|e| anyhow!("transition temperature: {e}"))?;
    let t_c_nk = t_c * 1e9;
    let t_ratio = ctx.cfg.quench.temperature_nk / t_c_nk;
    let ideal_fraction = (1.0 - t_ratio.powi(3)).max(0.0);

    Ok(ArchiveAnalysis {
        windows,
        condensate,
        vortices,
        histogram,
        fraction_raw: (raw.n0, raw.n_band, raw.n_nc, raw.fraction),
        fraction_half: (half.n0, half.n_band, half.n_nc, half.fraction),
        t_c_nk,
        ideal_fraction,
        final_window,
    })
}

fn grid_values(grid: &DensityGrid, m: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(m * m);
    for ix in 0..m {
        for iy in 0..m {
            values.push(grid.density(ix, iy));
        }
    }
    values
}

/// Writes the full analysis artifact set into `dir`.
pub fn write_analysis(
    dir: &Path,
    ctx: &SimContext,
    archive: &TrajectoryArchive,
    analysis: &ArchiveAnalysis,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let rows: Vec<Vec<String>> = analysis
        .windows
        .iter()
        .map(|w| {
            vec![
                f(w.t_lo),
                f(w.t_hi),
                f(w.t_center),
                f(w.n_gp_mean),
                f(w.n0),
                w.n_plus.to_string(),
                w.n_minus.to_string(),
            ]
        })
        .collect();
    write_csv(
        &dir.join("windows.csv"),
        "t_lo,t_hi,t_center,n_gp_mean,n0,n_plus,n_minus",
        &rows,
    )?;

    let rows: Vec<Vec<String>> = analysis
        .condensate
        .spectrum
        .iter()
        .enumerate()
        .map(|(rank, &occ)| vec![rank.to_string(), f(occ)])
        .collect();
    write_csv(&dir.join("condensate_spectrum.csv"), "rank,occupation", &rows)?;

    let rows: Vec<Vec<String>> = ctx
        .table
        .modes
        .iter()
        .zip(&analysis.condensate.mode.coeffs)
        .map(|(m, c)| vec![m.n.to_string(), m.l.to_string(), f(c.re), f(c.im)])
        .collect();
    write_csv(&dir.join("condensate_mode.csv"), "n,l,re,im", &rows)?;

    let rows: Vec<Vec<String>> = analysis
        .vortices
        .vortices
        .iter()
        .map(|v| vec![f(v.x), f(v.y), v.charge.to_string()])
        .collect();
    write_csv(&dir.join("vortices.csv"), "x_r0,y_r0,charge", &rows)?;

    let rows: Vec<Vec<String>> = match &analysis.histogram {
        Some(hist) => {
            let norm = annulus_normalized(hist);
            hist.counts
                .iter()
                .enumerate()
                .map(|(i, &c)| vec![f(hist.centre(i)), c.to_string(), f(norm[i])])
                .collect()
        }
        None => Vec::new(),
    };
    write_csv(
        &dir.join("histogram.csv"),
        "bin_center_r0,count,annulus_normalized",
        &rows,
    )?;

    let (n0, nb_raw, n_nc, frac_raw) = analysis.fraction_raw;
    let (_, nb_half, _, frac_half) = analysis.fraction_half;
    write_csv(
        &dir.join("fraction.csv"),
        "temperature_nk,n0,n_band_raw,n_band_half_subtracted,n_nc,fraction_raw,fraction_half_subtracted,t_c_nk,ideal_fraction",
        &[vec![
            f(ctx.cfg.quench.temperature_nk),
            f(n0),
            f(nb_raw),
            f(nb_half),
            f(n_nc),
            f(frac_raw),
            f(frac_half),
            f(analysis.t_c_nk),
            f(analysis.ideal_fraction),
        ]],
    )?;

    // Density grids: the condensate mode scaled to its population, and the
    // final recorded field.
    let m = ctx.cfg.analysis.grid_m;
    let t_final = analysis.final_window.1;
    let (_, cond_grid) = census_of(&analysis.condensate, ctx, t_final)?;
    checkpoint::write_grid(
        &dir.join("condensate_density.sgpg"),
        &GridHeader {
            m: m as u32,
            extent: ctx.cfg.analysis.grid_extent,
            time: t_final,
        },
        &grid_values(&cond_grid, m),
    )?;
    let last = archive.snapshots.last().unwrap();
    let final_grid = density_grid(
        last,
        &ctx.table,
        ctx.cfg.analysis.grid_extent,
        m,
        Some(ctx.params.mu_tilde),
    )
    .map_err(|e| anyhow!("density grid: {e}"))?;
    checkpoint::write_grid(
        &dir.join("final_density.sgpg"),
        &GridHeader {
            m: m as u32,
            extent: ctx.cfg.analysis.grid_extent,
            time: last.time,
        },
        &grid_values(&final_grid, m),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// thermo
// ---------------------------------------------------------------------------

/// Transition-temperature and cloud angular-momentum tables over a rotation
/// grid.  The atom number is the one implied by the configured quench
/// reservoir; the angular-momentum row is evaluated for the ideal gas at
/// criticality (mu = 0, no cutoff).
pub fn cmd_thermo(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let trap = cfg.trap_geometry();
    let spec = cfg.reservoir_spec(&cfg.quench)?;
    let n_ref = noncondensate_number(&spec, &trap)
        .map_err(|e| anyhow!("atom number of the quench reservoir: {e}"))?;
    println!(
        "thermo: using N = {n_ref:.6e} atoms (non-condensate number of the configured quench reservoir)"
    );

    let mut grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
    if !grid
        .iter()
        .any(|&x| (x - cfg.trap.omega_frac).abs() < 1e-12)
    {
        grid.push(cfg.trap.omega_frac);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let mut tc_rows = Vec::new();
    let mut lz_rows = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &frac in &grid {
        let trap_om = TrapGeometry::new(
            cfg.omega_r(),
            cfg.omega_z(),
            frac * cfg.omega_r(),
            cfg.species.mass_kg,
        )
        .map_err(|e| anyhow!("trap at Omega_frac = {frac}: {e}"))?;
        let t_c = transition_temperature(n_ref, &trap_om)
            .map_err(|e| anyhow!("T_C at Omega_frac = {frac}: {e}"))?;
        let crit = ReservoirSpec::new(t_c, 0.0, frac * cfg.omega_r(), 0.0)
            .map_err(|e| anyhow!("critical reservoir at Omega_frac = {frac}: {e}"))?;
        // Thermal population at criticality; equals the reference atom
        // number up to rounding, recorded as a visible cross-check.
        let n_nc = noncondensate_number(&crit, &trap_om)
            .map_err(|e| anyhow!("N_NC at Omega_frac = {frac}: {e}"))?;
        tc_rows.push(vec![f(frac), f(t_c * 1e9), f(n_nc)]);
        let moments = angular_momentum_moments(&crit, &trap_om)
            .map_err(|e| anyhow!("moments at Omega_frac = {frac}: {e}"))?;
        lz_rows.push(vec![
            f(frac),
            f(moments.lz_per_atom / HBAR),
            f(moments.sigma_per_atom / HBAR),
        ]);
        last = Some((frac, moments.lz_per_atom / HBAR));
    }
    write_csv(
        &out.join("thermo_tc.csv"),
        "omega_frac,t_c_nk,n_nc_at_t_c",
        &tc_rows,
    )?;
    write_csv(
        &out.join("thermo_lz.csv"),
        "omega_frac,lz_per_atom_hbar,sigma_lz_per_atom_hbar",
        &lz_rows,
    )?;
    if let Some((frac, lz)) = last {
        println!(
            "thermo: <L_z>/N = {lz:.3} hbar at Omega_frac = {frac} and grows without bound as Omega -> omega_r"
        );
    }
    println!("thermo: wrote {} and {}", out.join("thermo_tc.csv").display(), out.join("thermo_lz.csv").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// rates
// ---------------------------------------------------------------------------

/// Growth-rate summary and radial profile for the quench reservoir.
pub fn cmd_rates(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let spec = cfg.reservoir_spec(&cfg.quench)?;
    let trap = cfg.trap_geometry();
    let species = cfg.species();
    let rates = rate_set(&spec, &species).map_err(|e| anyhow!("rate set: {e}"))?;
    let gamma = dimensionless_damping(&rates, &spec);
    let summary = format!(
        "g1_in = {} 1/s\ng2_in = {} 1/s\ng1_out = {} 1/s\ng2_out = {} 1/s\n\
         gamma_total = {} 1/s\nm_amplitude = {} 1/s\ndimensionless_damping = {}\n\
         configured_gamma = {}\n",
        rates.g1_in,
        rates.g2_in,
        rates.g1_out,
        rates.g2_out,
        rates.gamma,
        rates.m_amp,
        gamma,
        cfg.dynamics.gamma,
    );
    fs::write(out.join("rates_summary.txt"), summary)?;

    let r_edge = (2.0 * spec.e_r / (trap.mass * trap.omega_r.powi(2))).sqrt();
    let radii: Vec<f64> = (0..=230).map(|i| r_edge * 1.1 * i as f64 / 230.0).collect();
    let profile = growth_rate_profile(&radii, &spec, &trap, &species)
        .map_err(|e| anyhow!("rate profile: {e}"))?;
    let r0 = trap.r0();
    let rows: Vec<Vec<String>> = profile
        .iter()
        .map(|p| {
            let region = match p.region {
                Region::Inner => "inner",
                Region::Outer => "outer",
                Region::Beyond => "beyond",
            };
            vec![
                f(p.q),
                f(p.q / r0),
                f(p.v_eff / spec.e_r),
                f(p.g1),
                region.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("rates_profile.csv"),
        "q_m,q_over_r0,v_over_er,g1_per_s,region",
        &rows,
    )?;
    println!("rates: wrote {}", out.join("rates_profile.csv").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

/// Draws `count` initial-ensemble states, writes them as checkpoints, and
/// tabulates per-mode occupations against the thermal target.
pub fn cmd_sample(cfg: &RunConfig, count: usize, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let ctx = SimContext::build(cfg)?;
    let spec = cfg.initial_ensemble(count);
    let samples =
        sample_ensemble(&spec, &ctx.table).map_err(|e| anyhow!("sampling the ensemble: {e}"))?;
    for (i, s) in samples.iter().enumerate() {
        checkpoint::write_state(
            &out.join(format!("sample_{i:04}.sgpf")),
            s,
            cfg.cutoff.nbar,
            cfg.trap.omega_frac,
        )?;
    }
    let mut rows = Vec::with_capacity(ctx.table.len());
    for (k, mode) in ctx.table.modes.iter().enumerate() {
        let omega = ctx.table.freqs[k];
        let target = thermal_occupation(omega, &spec).map_err(|e| anyhow!("occupation: {e}"))?;
        let mean: f64 = samples
            .iter()
            .map(|s| s.coeffs[k].norm_sqr())
            .sum::<f64>()
            / samples.len() as f64
            - 0.5;
        rows.push(vec![
            mode.n.to_string(),
            mode.l.to_string(),
            f(omega),
            f(target),
            f(mean),
        ]);
    }
    write_csv(
        &out.join("occupations.csv"),
        "n,l,omega,target_occupation,sampled_occupation",
        &rows,
    )?;
    println!(
        "sample: wrote {count} states and occupations.csv under {}",
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evolve / analyze
// ---------------------------------------------------------------------------

/// Evolves one trajectory (from a checkpoint when given, otherwise from a
/// fresh initial-ensemble draw with the given trajectory index) and writes
/// the archive.
pub fn cmd_evolve(
    cfg: &RunConfig,
    input: Option<&Path>,
    traj_index: u64,
    out: &Path,
) -> Result<()> {
    let ctx = SimContext::build(cfg)?;
    for line in cfg.conversion_log() {
        println!("evolve: {line}");
    }
    let initial = match input {
        Some(path) => {
            let (header, state) = checkpoint::read_field(path)?;
            if header.nbar != cfg.cutoff.nbar
                || (header.omega_frac - cfg.trap.omega_frac).abs() > 1e-12
            {
                bail!(
                    "checkpoint band (Nbar={}, Omega_frac={}) does not match the configuration (Nbar={}, Omega_frac={})",
                    header.nbar,
                    header.omega_frac,
                    cfg.cutoff.nbar,
                    cfg.trap.omega_frac
                );
            }
            state
        }
        None => sample_wigner(&cfg.initial_ensemble(1), &ctx.table, traj_index)
            .map_err(|e| anyhow!("sampling the initial state: {e}"))?,
    };
    let archive = evolve(
        &initial,
        &ctx.params,
        &ctx.table,
        &ctx.quad,
        SeedLineage::new(cfg.ensemble.seed),
        traj_index,
    )
    .map_err(|e| anyhow!("evolution failed: {e}"))?;
    fs::create_dir_all(out)?;
    write_archive(out, &archive, cfg)?;
    if archive.stability_warning {
        println!("evolve: WARNING: the step dt = {} is coarse for this band; results may be inaccurate", cfg.dynamics.dt);
    }
    println!(
        "evolve: {} snapshots, final N_GP = {:.6}, archive at {}",
        archive.snapshots.len(),
        archive.observables.last().map(|o| o.n_gp).unwrap_or(0.0),
        out.display()
    );
    Ok(())
}

/// Re-analyzes an archive directory produced by `evolve` or `quench`.
pub fn cmd_analyze(cfg: &RunConfig, archive_dir: &Path, out: &Path) -> Result<()> {
    let ctx = SimContext::build(cfg)?;
    let archive = read_archive(archive_dir, &ctx)?;
    let analysis = analyze_archive(&ctx, &archive)?;
    write_analysis(out, &ctx, &archive, &analysis)?;
    println!(
        "analyze: N0 = {:.4} over the closing window, {} vortices ({} positive, {} negative), outputs at {}",
        analysis.condensate.n0,
        analysis.vortices.vortices.len(),
        analysis.vortices.charge_census().0,
        analysis.vortices.charge_census().1,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// quench
// ---------------------------------------------------------------------------

struct TrajOutcome {
    windows: Vec<WindowSummary>,
    fraction_raw: (f64, f64, f64, f64),
    fraction_half: (f64, f64, f64, f64),
    t_c_nk: f64,
    ideal_fraction: f64,
    histogram: Option<PairHistogram>,
}

fn run_trajectory(ctx: &SimContext, out: &Path, index: usize) -> Result<TrajOutcome> {
    let cfg = &ctx.cfg;
    let initial = sample_wigner(
        &cfg.initial_ensemble(cfg.ensemble.n_traj),
        &ctx.table,
        index as u64,
    )
    .map_err(|e| anyhow!("sampling trajectory {index}: {e}"))?;
    let archive = evolve(
        &initial,
        &ctx.params,
        &ctx.table,
        &ctx.quad,
        SeedLineage::new(cfg.ensemble.seed),
        index as u64,
    )
    .map_err(|e| anyhow!("evolving trajectory {index}: {e}"))?;
    let traj_dir = out.join(format!("traj_{index:03}"));
    fs::create_dir_all(&traj_dir)?;
    write_archive(&traj_dir, &archive, cfg)?;
    let analysis = analyze_archive(ctx, &archive)?;
    write_analysis(&traj_dir, ctx, &archive, &analysis)?;
    Ok(TrajOutcome {
        windows: analysis.windows,
        fraction_raw: analysis.fraction_raw,
        fraction_half: analysis.fraction_half,
        t_c_nk: analysis.t_c_nk,
        ideal_fraction: analysis.ideal_fraction,
        histogram: analysis.histogram,
    })
}

fn fraction_rows(label: &str, raw: (f64, f64, f64, f64), half: (f64, f64, f64, f64), t_nk: f64, t_c_nk: f64, ideal: f64) -> Vec<String> {
    vec![
        label.to_string(),
        f(t_nk),
        f(raw.0),
        f(raw.1),
        f(half.1),
        f(raw.2),
        f(raw.3),
        f(half.3),
        f(t_c_nk),
        f(ideal),
    ]
}

/// The full pipeline: sample, evolve, and analyze `n_traj` trajectories,
/// then aggregate growth curves, fraction rows, and histograms.  With
/// `t_end = 0` the raw initial ensemble is analyzed instead (`n_traj`
/// samples, ensemble one-body matrix).
pub fn cmd_quench(cfg: &RunConfig, label: &str, out_root: &Path) -> Result<PathBuf> {
    let out = out_root.join(label);
    fs::create_dir_all(&out)?;
    let ctx = SimContext::build(cfg)?;
    let workers = worker_count();
    for line in cfg.conversion_log() {
        println!("quench[{label}]: {line}");
    }

    let mut failures: Vec<(usize, String)> = Vec::new();
    if cfg.dynamics.t_end == 0.0 {
        quench_raw_ensemble(&ctx, &out)?;
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building the worker pool")?;
        let outcomes: Vec<(usize, Result<TrajOutcome>)> = pool.install(|| {
            (0..cfg.ensemble.n_traj)
                .into_par_iter()
                .map(|i| (i, run_trajectory(&ctx, &out, i)))
                .collect()
        });

        let mut ok: Vec<(usize, TrajOutcome)> = Vec::new();
        for (i, outcome) in outcomes {
            match outcome {
                Ok(o) => ok.push((i, o)),
                Err(e) => failures.push((i, format!("{e:#}"))),
            }
        }
        if ok.is_empty() {
            let detail = failures
                .iter()
                .map(|(i, e)| format!("trajectory {i}: {e}"))
                .collect::<Vec<_>>()
                .join("; ");
            bail!("every trajectory failed: {detail}");
        }
        aggregate(&ctx, &out, &ok)?;
    }

    let manifest = manifest_text(cfg, label, workers, cfg.ensemble.n_traj, &failures);
    fs::write(out.join("manifest.txt"), manifest)?;
    if failures.is_empty() {
        println!("quench[{label}]: complete, artifacts at {}", out.display());
    } else {
        println!(
            "quench[{label}]: complete with {} failed trajectories (see manifest.txt)",
            failures.len()
        );
    }
    Ok(out)
}

/// Fig.-3-style path: no evolution, Penrose-Onsager analysis of the raw
/// initial ensemble.
fn quench_raw_ensemble(ctx: &SimContext, out: &Path) -> Result<()> {
    let cfg = &ctx.cfg;
    let spec = cfg.initial_ensemble(cfg.ensemble.n_traj);
    let samples =
        sample_ensemble(&spec, &ctx.table).map_err(|e| anyhow!("sampling the ensemble: {e}"))?;
    let rho =
        ensemble_onebody_matrix(&samples).map_err(|e| anyhow!("one-body matrix: {e}"))?;
    let result = penrose_onsager(&rho).map_err(|e| anyhow!("eigen decomposition: {e}"))?;
    let (set, cond_grid) = census_of(&result, ctx, 0.0)?;
    let (n_plus, n_minus) = set.charge_census();

    // Band population: ensemble mean of N_GP, with and without the
    // symmetric-ordering half quantum per mode.
    let n_gp_mean: f64 =
        samples.iter().map(|s| s.norm_sq()).sum::<f64>() / samples.len() as f64;
    let n_band_half = n_gp_mean - 0.5 * ctx.table.len() as f64;
    // The raw-ensemble path quantifies the *initial* reservoir.
    let spec_res = cfg.reservoir_spec(&cfg.initial)?;
    let trap = cfg.trap_geometry();
    let n_nc = noncondensate_number(&spec_res, &trap)
        .map_err(|e| anyhow!("non-condensate number: {e}"))?;
    let t_c = transition_temperature(n_band_half.max(0.0) + n_nc, &trap)
        .map_err(|e| anyhow!("transition temperature: {e}"))?;
    let t_c_nk = t_c * 1e9;
    let ideal = (1.0 - (cfg.initial.temperature_nk / t_c_nk).powi(3)).max(0.0);

    write_csv(
        &out.join("windows.csv"),
        "t_lo,t_hi,t_center,n_gp_mean,n0,n_plus,n_minus",
        &[vec![
            f(0.0),
            f(0.0),
            f(0.0),
            f(n_gp_mean),
            f(result.n0),
            n_plus.to_string(),
            n_minus.to_string(),
        ]],
    )?;
    let rows: Vec<Vec<String>> = result
        .spectrum
        .iter()
        .enumerate()
        .map(|(rank, &occ)| vec![rank.to_string(), f(occ)])
        .collect();
    write_csv(&out.join("condensate_spectrum.csv"), "rank,occupation", &rows)?;
    let rows: Vec<Vec<String>> = ctx
        .table
        .modes
        .iter()
        .zip(&result.mode.coeffs)
        .map(|(m, c)| vec![m.n.to_string(), m.l.to_string(), f(c.re), f(c.im)])
        .collect();
    write_csv(&out.join("condensate_mode.csv"), "n,l,re,im", &rows)?;
    let rows: Vec<Vec<String>> = set
        .vortices
        .iter()
        .map(|v| vec![f(v.x), f(v.y), v.charge.to_string()])
        .collect();
    write_csv(&out.join("vortices.csv"), "x_r0,y_r0,charge", &rows)?;
    let hist_rows: Vec<Vec<String>> = if set.vortices.len() >= 2 {
        let hist = pair_histogram(&set, cfg.analysis.bin_width)
            .map_err(|e| anyhow!("pair histogram: {e}"))?;
        let norm = annulus_normalized(&hist);
        hist.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![f(hist.centre(i)), c.to_string(), f(norm[i])])
            .collect()
    } else {
        Vec::new()
    };
    write_csv(
        &out.join("histogram.csv"),
        "bin_center_r0,count,annulus_normalized",
        &hist_rows,
    )?;
    let frac_raw = result.n0 / (n_gp_mean + n_nc);
    let frac_half = result.n0 / (n_band_half + n_nc);
    write_csv(
        &out.join("fraction.csv"),
        "label,temperature_nk,n0,n_band_raw,n_band_half_subtracted,n_nc,fraction_raw,fraction_half_subtracted,t_c_nk,ideal_fraction",
        &[fraction_rows(
            "ensemble",
            (result.n0, n_gp_mean, n_nc, frac_raw),
            (result.n0, n_band_half, n_nc, frac_half),
            cfg.initial.temperature_nk,
            t_c_nk,
            ideal,
        )],
    )?;
    let m = cfg.analysis.grid_m;
    checkpoint::write_grid(
        &out.join("condensate_density.sgpg"),
        &GridHeader {
            m: m as u32,
            extent: cfg.analysis.grid_extent,
            time: 0.0,
        },
        &grid_values(&cond_grid, m),
    )?;
    println!(
        "quench: raw-ensemble analysis of {} samples, N0 = {:.4}, {} singularities",
        cfg.ensemble.n_traj,
        result.n0,
        set.vortices.len()
    );
    Ok(())
}

fn aggregate(ctx: &SimContext, out: &Path, ok: &[(usize, TrajOutcome)]) -> Result<()> {
    let cfg = &ctx.cfg;
    // Growth curve: the window layouts agree across trajectories because the
    // evolution length is shared.
    let n_windows = ok.iter().map(|(_, o)| o.windows.len()).min().unwrap_or(0);
    let mut growth_rows = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let n0s: Vec<f64> = ok.iter().map(|(_, o)| o.windows[w].n0).collect();
        let mean = n0s.iter().sum::<f64>() / n0s.len() as f64;
        let sem = if n0s.len() > 1 {
            let var = n0s.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                / (n0s.len() - 1) as f64;
            (var / n0s.len() as f64).sqrt()
        } else {
            0.0
        };
        let mean_of = |pick: &dyn Fn(&WindowSummary) -> f64| {
            ok.iter().map(|(_, o)| pick(&o.windows[w])).sum::<f64>() / ok.len() as f64
        };
        growth_rows.push(vec![
            w.to_string(),
            f(ok[0].1.windows[w].t_center),
            ok.len().to_string(),
            f(mean_of(&|s| s.n_gp_mean)),
            f(mean),
            f(sem),
            f(mean_of(&|s| s.n_plus as f64)),
            f(mean_of(&|s| s.n_minus as f64)),
        ]);
    }
    write_csv(
        &out.join("growth.csv"),
        "window,t_center,n_traj,n_gp_mean,n0_mean,n0_sem,n_plus_mean,n_minus_mean",
        &growth_rows,
    )?;

    let mut rows: Vec<Vec<String>> = ok
        .iter()
        .map(|(i, o)| {
            fraction_rows(
                &format!("traj_{i:03}"),
                o.fraction_raw,
                o.fraction_half,
                cfg.quench.temperature_nk,
                o.t_c_nk,
                o.ideal_fraction,
            )
        })
        .collect();
    let count = ok.len() as f64;
    let mean4 = |pick: &dyn Fn(&TrajOutcome) -> (f64, f64, f64, f64)| {
        let mut acc = (0.0, 0.0, 0.0, 0.0);
        for (_, o) in ok {
            let v = pick(o);
            acc = (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2, acc.3 + v.3);
        }
        (acc.0 / count, acc.1 / count, acc.2 / count, acc.3 / count)
    };
    rows.push(fraction_rows(
        "mean",
        mean4(&|o| o.fraction_raw),
        mean4(&|o| o.fraction_half),
        cfg.quench.temperature_nk,
        ok.iter().map(|(_, o)| o.t_c_nk).sum::<f64>() / count,
        ok.iter().map(|(_, o)| o.ideal_fraction).sum::<f64>() / count,
    ));
    write_csv(
        &out.join("fraction.csv"),
        "label,temperature_nk,n0,n_band_raw,n_band_half_subtracted,n_nc,fraction_raw,fraction_half_subtracted,t_c_nk,ideal_fraction",
        &rows,
    )?;

    // Ensemble-mean pair histogram over the closing windows.
    let n_bins = ok
        .iter()
        .filter_map(|(_, o)| o.histogram.as_ref().map(|h| h.counts.len()))
        .max()
        .unwrap_or(0);
    let mut hist_rows = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let mut total = 0.0;
        let mut norm_total = 0.0;
        let mut present = 0usize;
        for (_, o) in ok {
            if let Some(hist) = &o.histogram {
                present += 1;
                if b < hist.counts.len() {
                    total += hist.counts[b] as f64;
                    norm_total += annulus_normalized(hist)[b];
                }
            }
        }
        if present == 0 {
            break;
        }
        let centre = (b as f64 + 0.5) * cfg.analysis.bin_width;
        hist_rows.push(vec![
            f(centre),
            f(total / present as f64),
            f(norm_total / present as f64),
        ]);
    }
    write_csv(
        &out.join("histogram.csv"),
        "bin_center_r0,mean_count,mean_annulus_normalized",
        &hist_rows,
    )?;
    Ok(())
}

fn manifest_text(
    cfg: &RunConfig,
    label: &str,
    workers: usize,
    n_traj: usize,
    failures: &[(usize, String)],
) -> String {
    let mut s = String::new();
    s.push_str("# quench manifest\n");
    s.push_str(&format!("code_version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("label = {label}\n"));
    s.push_str(&format!("workers = {workers}\n"));
    s.push_str(&format!("seed = {}\n", cfg.ensemble.seed));
    s.push_str(&format!("n_traj = {n_traj}\n"));
    s.push_str(&format!("failures = {}\n", failures.len()));
    for i in 0..n_traj {
        match failures.iter().find(|(j, _)| *j == i) {
            Some((_, e)) => s.push_str(&format!("trajectory_{i:03} = failed: {}\n", e.replace('\n', " "))),
            None => s.push_str(&format!("trajectory_{i:03} = ok\n")),
        }
    }
    for line in cfg.conversion_log() {
        s.push_str(&format!("# {line}\n"));
    }
    s.push_str("--- config ---\n");
    s.push_str(&cfg.to_text());
    s
}

/// Extracts the configuration block from a quench manifest; together with the
/// recorded seed this is enough to reproduce the artifact.
pub fn manifest_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let config_text = text
        .split_once("--- config ---\n")
        .ok_or_else(|| anyhow!("{}: no config block", path.display()))?
        .1;
    RunConfig::parse(config_text)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Fast invariant gates; returns true when every gate passes.
pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let mut all = true;
    let mut gate = |name: &str, pass: bool, detail: String| {
        all &= pass;
        println!("{name} {} ({detail})", if pass { "PASS" } else { "FAIL" });
    };

    // Gate 1: the band enumeration matches a direct double-loop count.
    let ctx = SimContext::build(cfg)?;
    let mut direct = 0usize;
    for n in 0..=(cfg.cutoff.nbar / 2) {
        // Generous range: |l| never exceeds Nbar / (1 - Omega_frac) + 1.
        let l_max = (cfg.cutoff.nbar as f64 / (1.0 - cfg.trap.omega_frac)).ceil() as i64 + 2;
        for l in -l_max..=l_max {
            if ModeTable::contains(cfg.cutoff.nbar, cfg.trap.omega_frac, n, l) {
                direct += 1;
            }
        }
    }
    gate(
        &format!("modes={}", ctx.table.len()),
        ctx.table.len() == direct,
        format!("direct count {direct}"),
    );

    // Gate 2: projection round trip on a deterministic in-band field.
    let spec = cfg.initial_ensemble(1);
    let state = sample_wigner(&spec, &ctx.table, 0)
        .map_err(|e| anyhow!("sampling for the round-trip gate: {e}"))?;
    let mut scratch = TransformScratch::new(&ctx.quad);
    let grid = ctx
        .quad
        .to_position(&state.coeffs, &mut scratch)
        .map_err(|e| anyhow!("to_position: {e}"))?;
    let mut back = vec![Complex64::default(); ctx.table.len()];
    ctx.quad
        .project_samples(&grid, &mut scratch, &mut back)
        .map_err(|e| anyhow!("project_samples: {e}"))?;
    let norm: f64 = state.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let err: f64 = state
        .coeffs
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / norm.max(1e-300);
    gate("round-trip", err <= 1e-12, format!("relative error {err:.3e}"));

    // Gate 3: conservation smoke test, a quarter trap period without
    // damping or noise.
    let mut params = ctx.params.clone();
    params.gamma = 0.0;
    params.noise_on = false;
    params.dt = 1e-3;
    params.t_end = std::f64::consts::PI / 2.0;
    params.snapshot_stride = 200;
    let archive = evolve(
        &state,
        &params,
        &ctx.table,
        &ctx.quad,
        SeedLineage::new(cfg.ensemble.seed),
        0,
    )
    .map_err(|e| anyhow!("conservation smoke run: {e}"))?;
    let first = archive.observables.first().unwrap();
    let drift = archive
        .observables
        .iter()
        .map(|o| {
            let dn = ((o.n_gp - first.n_gp) / first.n_gp).abs();
            let de = ((o.e_gp - first.e_gp) / first.e_gp.abs().max(1e-300)).abs();
            let dl = ((o.l_z - first.l_z) / first.l_z.abs().max(first.n_gp)).abs();
            dn.max(de).max(dl)
        })
        .fold(0.0f64, f64::max);
    gate(
        "conservation",
        drift <= 1e-8,
        format!("max relative drift {drift:.3e} over a quarter period"),
    );

    // Gate 4: sampler moments; each mode's mean occupation sits within five
    // standard errors of the thermal target (|alpha|^2 is exponential with
    // scale N + 1/2, so the standard error is (N + 1/2)/sqrt(n)).
    let n_check = 2000;
    let spec = cfg.initial_ensemble(n_check);
    let samples =
        sample_ensemble(&spec, &ctx.table).map_err(|e| anyhow!("moment gate sampling: {e}"))?;
    let mut max_z = 0.0f64;
    for k in 0..ctx.table.len() {
        let omega = ctx.table.freqs[k];
        let target = thermal_occupation(omega, &spec)
            .map_err(|e| anyhow!("thermal occupation: {e}"))?
            + 0.5;
        let mean: f64 =
            samples.iter().map(|s| s.coeffs[k].norm_sqr()).sum::<f64>() / n_check as f64;
        let z = ((mean - target) / (target / (n_check as f64).sqrt())).abs();
        max_z = max_z.max(z);
    }
    gate(
        "sampler-moments",
        max_z < 5.0,
        format!("max |z| = {max_z:.2} over {} modes, {n_check} samples", ctx.table.len()),
    );

    // Gate 5: checkpoint round trip and corrupted-magic rejection.
    let tmp = std::env::temp_dir().join(format!(
        "rotbec-verify-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    fs::create_dir_all(&tmp)?;
    let ck = tmp.join("state.sgpf");
    checkpoint::write_state(&ck, &state, cfg.cutoff.nbar, cfg.trap.omega_frac)?;
    let (_, back) = checkpoint::read_field(&ck)?;
    let bit_exact = back.time.to_bits() == state.time.to_bits()
        && back
            .coeffs
            .iter()
            .zip(&state.coeffs)
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    let mut bytes = fs::read(&ck)?;
    bytes[0] = b'Q';
    fs::write(&ck, &bytes)?;
    let magic_rejected = match checkpoint::read_field(&ck) {
        Err(e) => format!("{e:#}").contains("bad magic"),
        Ok(_) => false,
    };
    let _ = fs::remove_dir_all(&tmp);
    gate(
        "checkpoint",
        bit_exact && magic_rejected,
        format!("round trip bit-exact: {bit_exact}, corrupted magic rejected: {magic_rejected}"),
    );

    Ok(all)
}

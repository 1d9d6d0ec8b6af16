//! Run configuration: a small nested key-value text format with explicit
//! unit tags, plus the conversions from laboratory units to the reduced
//! quantities consumed by the simulation core.
//!
//! # Format
//!
//! ```text
//! # comment
//! [trap]
//! omega_r = 8.3 Hz
//! omega_frac = 0.979 dimensionless
//! ```
//!
//! Every physical quantity carries a unit tag; bare numbers are reserved for
//! counts and seeds, and booleans are `true`/`false`.  Parse errors cite the
//! offending line.  `RunConfig::to_text` emits the canonical form and
//! `parse(to_text(c)) == c` holds for every valid configuration.
//!
//! # Unit conventions
//!
//! * Trap frequencies are laboratory linear frequencies in Hz and are
//!   multiplied by 2π at the boundary.
//! * Temperatures are in nK; reduced temperatures are `t = k_B T / ħω_r`.
//! * Chemical potentials accept two tags.  `eps000` measures from the
//!   potential minimum in units of the 3D zero-point energy
//!   `ε_000 = ħω_r + ħω_z/2`.  `homega_r` is the reduced 2D value used
//!   directly by the band dynamics, whose energy origin already excludes the
//!   axial zero point.  The two are related by
//!   `mu_tilde = (mu_abs - ħω_z/2) / ħω_r`.
//! * Times (`dt`, `t_end`, `window`) are in units of `1/omega_r`; lengths in
//!   the analysis section are in units of the basis length `r0`.
//! * Reservoir (3D) energies are absolute: the cutoff handed to the reservoir
//!   integrals is `E_R = ħω_r (Nbar + 1) + ħω_z/2` so the band edge and the
//!   reservoir boundary coincide as absolute energies.

use anyhow::{anyhow, bail, Context, Result};
use rotbec::basis::{CutoffSpec, TrapGeometry};
use rotbec::constants::{A_RB87, HBAR, KB, MASS_RB87};
use rotbec::dynamics::EvolutionParams;
use rotbec::reservoir::{ReservoirSpec, Species};
use rotbec::rng::SeedLineage;
use rotbec::sampler::InitialEnsembleSpec;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Radial trap frequency [Hz].
    pub omega_r_hz: f64,
    /// Axial trap frequency [Hz].
    pub omega_z_hz: f64,
    /// Rotation rate as a fraction of `omega_r`.
    pub omega_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesConfig {
    /// Atomic mass [kg].
    pub mass_kg: f64,
    /// s-wave scattering length [m].
    pub scattering_length_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffConfig {
    /// Band cutoff: modes with `2n + |l| - (Ω/ω_r) l <= Nbar` are kept.
    pub nbar: u32,
}

/// Unit tag attached to a chemical potential in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuUnit {
    /// Multiples of the 3D zero-point energy `ε_000 = ħω_r + ħω_z/2`,
    /// measured from the potential minimum.
    Eps000,
    /// Reduced 2D chemical potential in units of `ħω_r` (axial zero point
    /// already removed); passed through unchanged to the dynamics.
    HbarOmegaR,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuValue {
    pub value: f64,
    pub unit: MuUnit,
}

/// One reservoir state point (used for both the initial and quench stages).
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirPoint {
    /// Temperature [nK].
    pub temperature_nk: f64,
    pub mu: MuValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    /// Dimensionless damping `ħγ/k_B T`.
    pub gamma: f64,
    /// Step [1/omega_r].
    pub dt: f64,
    /// Total evolution time [1/omega_r].
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub noise_on: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Short-time averaging window [1/omega_r].
    pub window: f64,
    /// Snapshots averaged per window.
    pub n_samples: usize,
    /// Vortex detections are kept inside this radius [r0].
    pub filter_radius: f64,
    /// Pair-histogram bin width [r0].
    pub bin_width: f64,
    /// Cartesian grid points per side.
    pub grid_m: usize,
    /// Grid half-width [r0].
    pub grid_extent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trap: TrapConfig,
    pub species: SpeciesConfig,
    pub cutoff: CutoffConfig,
    pub initial: ReservoirPoint,
    pub quench: ReservoirPoint,
    pub dynamics: DynamicsConfig,
    pub analysis: AnalysisConfig,
    pub ensemble: EnsembleConfig,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct RawEntry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, RawEntry>;

fn split_sections(text: &str) -> Result<BTreeMap<String, (usize, Section)>> {
    let mut sections: BTreeMap<String, (usize, Section)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {line_no}: unterminated section header `{line}`"))?
                .trim()
                .to_string();
            if name.is_empty() {
                bail!("line {line_no}: empty section name");
            }
            if sections.contains_key(&name) {
                bail!("line {line_no}: duplicate section [{name}]");
            }
            sections.insert(name.clone(), (line_no, Section::new()));
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`, found `{line}`"))?;
        let key = key.trim().to_string();
        let mut value = value.trim();
        // Tagged values may be quoted for readability; the quotes are not
        // part of the value.
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        let section_name = current
            .clone()
            .ok_or_else(|| anyhow!("line {line_no}: key `{key}` appears before any [section]"))?;
        let section = &mut sections.get_mut(&section_name).unwrap().1;
        if section.contains_key(&key) {
            bail!("line {line_no}: duplicate key `{key}` in [{section_name}]");
        }
        section.insert(
            key,
            RawEntry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

/// A section being consumed key by key; leftover keys are reported as errors.
struct SectionReader {
    name: String,
    header_line: usize,
    entries: Section,
}

impl SectionReader {
    fn take(&mut self, key: &str) -> Result<RawEntry> {
        self.entries.remove(key).ok_or_else(|| {
            anyhow!(
                "section [{}] (line {}): missing key `{key}`",
                self.name,
                self.header_line
            )
        })
    }

    fn take_optional(&mut self, key: &str) -> Option<RawEntry> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some((key, entry)) = self.entries.into_iter().next() {
            bail!(
                "line {}: unknown key `{key}` in [{}]",
                entry.line,
                self.name
            );
        }
        Ok(())
    }
}

fn parse_tagged(entry: &RawEntry, key: &str, unit: &str) -> Result<f64> {
    let mut parts = entry.value.split_whitespace();
    let number = parts
        .next()
        .ok_or_else(|| anyhow!("line {}: empty value for `{key}`", entry.line))?;
    let tag = parts.next().ok_or_else(|| {
        anyhow!(
            "line {}: `{key}` needs an explicit unit tag `{unit}` after the value",
            entry.line
        )
    })?;
    if parts.next().is_some() {
        bail!(
            "line {}: trailing text after `{number} {tag}` for `{key}`",
            entry.line
        );
    }
    if tag != unit {
        bail!(
            "line {}: `{key}` expects unit `{unit}`, found `{tag}`",
            entry.line
        );
    }
    number
        .parse::<f64>()
        .map_err(|_| anyhow!("line {}: cannot parse `{number}` as a number", entry.line))
}

fn parse_mu(entry: &RawEntry, key: &str) -> Result<MuValue> {
    let mut parts = entry.value.split_whitespace();
    let number = parts
        .next()
        .ok_or_else(|| anyhow!("line {}: empty value for `{key}`", entry.line))?;
    let tag = parts.next().ok_or_else(|| {
        anyhow!(
            "line {}: `{key}` needs a unit tag `eps000` or `homega_r`",
            entry.line
        )
    })?;
    let unit = match tag {
        "eps000" => MuUnit::Eps000,
        "homega_r" => MuUnit::HbarOmegaR,
        other => bail!(
            "line {}: `{key}` expects unit `eps000` or `homega_r`, found `{other}`",
            entry.line
        ),
    };
    let value = number
        .parse::<f64>()
        .map_err(|_| anyhow!("line {}: cannot parse `{number}` as a number", entry.line))?;
    Ok(MuValue { value, unit })
}

fn parse_integer<T>(entry: &RawEntry, key: &str) -> Result<T>
where
    T: std::str::FromStr,
{
    entry.value.parse::<T>().map_err(|_| {
        anyhow!(
            "line {}: cannot parse `{}` as an integer for `{key}`",
            entry.line,
            entry.value
        )
    })
}

fn parse_bool(entry: &RawEntry, key: &str) -> Result<bool> {
    match entry.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => bail!(
            "line {}: `{key}` must be `true` or `false`, found `{other}`",
            entry.line
        ),
    }
}

fn require_positive(value: f64, what: &str, line: usize) -> Result<f64> {
    if !(value > 0.0) || !value.is_finite() {
        bail!("line {line}: `{what}` must be positive and finite, found {value}");
    }
    Ok(value)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = split_sections(text)?;
        let mut reader = |name: &str| -> Result<SectionReader> {
            let (header_line, entries) = sections
                .remove(name)
                .ok_or_else(|| anyhow!("missing section [{name}]"))?;
            Ok(SectionReader {
                name: name.to_string(),
                header_line,
                entries,
            })
        };

        let mut trap = reader("trap")?;
        let omega_r_entry = trap.take("omega_r")?;
        let omega_r_hz = require_positive(
            parse_tagged(&omega_r_entry, "omega_r", "Hz")?,
            "omega_r",
            omega_r_entry.line,
        )?;
        let omega_z_entry = trap.take("omega_z")?;
        let omega_z_hz = require_positive(
            parse_tagged(&omega_z_entry, "omega_z", "Hz")?,
            "omega_z",
            omega_z_entry.line,
        )?;
        let frac_entry = trap.take("omega_frac")?;
        let omega_frac = parse_tagged(&frac_entry, "omega_frac", "dimensionless")?;
        if !(0.0..1.0).contains(&omega_frac) {
            bail!(
                "line {}: omega_frac must lie in [0, 1), found {omega_frac}",
                frac_entry.line
            );
        }
        trap.finish()?;

        let mut species = reader("species")?;
        let mass_entry = species.take("mass")?;
        let mass_kg = require_positive(
            parse_tagged(&mass_entry, "mass", "kg")?,
            "mass",
            mass_entry.line,
        )?;
        let a_entry = species.take("scattering_length")?;
        let scattering_length_m = require_positive(
            parse_tagged(&a_entry, "scattering_length", "m")?,
            "scattering_length",
            a_entry.line,
        )?;
        species.finish()?;

        let mut cutoff = reader("cutoff")?;
        let nbar_entry = cutoff.take_optional("nbar");
        let er_entry = cutoff.take_optional("e_r");
        let nbar = match (nbar_entry, er_entry) {
            (Some(entry), None) => parse_integer::<u32>(&entry, "nbar")?,
            (None, Some(entry)) => {
                // E_R in reduced band units equals Nbar + 1.
                let e_r = parse_tagged(&entry, "e_r", "homega_r")?;
                let nbar = e_r - 1.0;
                if nbar < -1e-9 || (nbar - nbar.round()).abs() > 1e-9 {
                    bail!(
                        "line {}: e_r = {e_r} homega_r does not correspond to an \
                         integer band cutoff (expects Nbar + 1)",
                        entry.line
                    );
                }
                nbar.round() as u32
            }
            (Some(a), Some(_)) => bail!(
                "line {}: give either `nbar` or `e_r` in [cutoff], not both",
                a.line
            ),
            (None, None) => bail!(
                "section [cutoff] (line {}): missing key `nbar` (or `e_r`)",
                cutoff.header_line
            ),
        };
        cutoff.finish()?;

        let read_point = |reader: &mut SectionReader| -> Result<ReservoirPoint> {
            let t_entry = reader.take("temperature")?;
            let temperature_nk = require_positive(
                parse_tagged(&t_entry, "temperature", "nK")?,
                "temperature",
                t_entry.line,
            )?;
            let mu_entry = reader.take("mu")?;
            let mu = parse_mu(&mu_entry, "mu")?;
            Ok(ReservoirPoint {
                temperature_nk,
                mu,
            })
        };
        let mut initial = reader("initial")?;
        let initial_point = read_point(&mut initial)?;
        initial.finish()?;
        let mut quench = reader("quench")?;
        let quench_point = read_point(&mut quench)?;
        quench.finish()?;

        let mut dynamics = reader("dynamics")?;
        let gamma_entry = dynamics.take("gamma")?;
        let gamma = parse_tagged(&gamma_entry, "gamma", "dimensionless")?;
        if gamma < 0.0 {
            bail!(
                "line {}: gamma must be non-negative, found {gamma}",
                gamma_entry.line
            );
        }
        let dt_entry = dynamics.take("dt")?;
        let dt = require_positive(
            parse_tagged(&dt_entry, "dt", "1/omega_r")?,
            "dt",
            dt_entry.line,
        )?;
        let tend_entry = dynamics.take("t_end")?;
        let t_end = parse_tagged(&tend_entry, "t_end", "1/omega_r")?;
        if t_end < 0.0 {
            bail!(
                "line {}: t_end must be non-negative, found {t_end}",
                tend_entry.line
            );
        }
        let stride_entry = dynamics.take("snapshot_stride")?;
        let snapshot_stride: usize = parse_integer(&stride_entry, "snapshot_stride")?;
        if snapshot_stride == 0 {
            bail!(
                "line {}: snapshot_stride must be >= 1",
                stride_entry.line
            );
        }
        let noise_entry = dynamics.take("noise_on")?;
        let noise_on = parse_bool(&noise_entry, "noise_on")?;
        dynamics.finish()?;

        let mut analysis = reader("analysis")?;
        let window_entry = analysis.take("window")?;
        let window = require_positive(
            parse_tagged(&window_entry, "window", "1/omega_r")?,
            "window",
            window_entry.line,
        )?;
        let n_samples_entry = analysis.take("n_samples")?;
        let n_samples: usize = parse_integer(&n_samples_entry, "n_samples")?;
        if n_samples == 0 {
            bail!("line {}: n_samples must be >= 1", n_samples_entry.line);
        }
        let filter_entry = analysis.take("filter_radius")?;
        let filter_radius = require_positive(
            parse_tagged(&filter_entry, "filter_radius", "r0")?,
            "filter_radius",
            filter_entry.line,
        )?;
        let bin_entry = analysis.take("bin_width")?;
        let bin_width = require_positive(
            parse_tagged(&bin_entry, "bin_width", "r0")?,
            "bin_width",
            bin_entry.line,
        )?;
        let grid_m_entry = analysis.take("grid_m")?;
        let grid_m: usize = parse_integer(&grid_m_entry, "grid_m")?;
        if grid_m < 2 {
            bail!("line {}: grid_m must be >= 2", grid_m_entry.line);
        }
        let extent_entry = analysis.take("grid_extent")?;
        let grid_extent = require_positive(
            parse_tagged(&extent_entry, "grid_extent", "r0")?,
            "grid_extent",
            extent_entry.line,
        )?;
        analysis.finish()?;

        let mut ensemble = reader("ensemble")?;
        let n_traj_entry = ensemble.take("n_traj")?;
        let n_traj: usize = parse_integer(&n_traj_entry, "n_traj")?;
        if n_traj == 0 {
            bail!("line {}: n_traj must be >= 1", n_traj_entry.line);
        }
        let seed_entry = ensemble.take("seed")?;
        let seed: u64 = parse_integer(&seed_entry, "seed")?;
        ensemble.finish()?;

        if let Some((name, (line, _))) = sections.into_iter().next() {
            bail!("line {line}: unknown section [{name}]");
        }

        Ok(RunConfig {
            trap: TrapConfig {
                omega_r_hz,
                omega_z_hz,
                omega_frac,
            },
            species: SpeciesConfig {
                mass_kg,
                scattering_length_m,
            },
            cutoff: CutoffConfig { nbar },
            initial: initial_point,
            quench: quench_point,
            dynamics: DynamicsConfig {
                gamma,
                dt,
                t_end,
                snapshot_stride,
                noise_on,
            },
            analysis: AnalysisConfig {
                window,
                n_samples,
                filter_radius,
                bin_width,
                grid_m,
                grid_extent,
            },
            ensemble: EnsembleConfig { n_traj, seed },
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Canonical text form; parsing it reproduces the exact configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[trap]");
        let _ = writeln!(s, "omega_r = {} Hz", self.trap.omega_r_hz);
        let _ = writeln!(s, "omega_z = {} Hz", self.trap.omega_z_hz);
        let _ = writeln!(s, "omega_frac = {} dimensionless", self.trap.omega_frac);
        let _ = writeln!(s, "\n[species]");
        let _ = writeln!(s, "mass = {} kg", self.species.mass_kg);
        let _ = writeln!(
            s,
            "scattering_length = {} m",
            self.species.scattering_length_m
        );
        let _ = writeln!(s, "\n[cutoff]");
        let _ = writeln!(s, "nbar = {}", self.cutoff.nbar);
        let point = |s: &mut String, name: &str, p: &ReservoirPoint| {
            let _ = writeln!(s, "\n[{name}]");
            let _ = writeln!(s, "temperature = {} nK", p.temperature_nk);
            let unit = match p.mu.unit {
                MuUnit::Eps000 => "eps000",
                MuUnit::HbarOmegaR => "homega_r",
            };
            let _ = writeln!(s, "mu = {} {}", p.mu.value, unit);
        };
        point(&mut s, "initial", &self.initial);
        point(&mut s, "quench", &self.quench);
        let _ = writeln!(s, "\n[dynamics]");
        let _ = writeln!(s, "gamma = {} dimensionless", self.dynamics.gamma);
        let _ = writeln!(s, "dt = {} 1/omega_r", self.dynamics.dt);
        let _ = writeln!(s, "t_end = {} 1/omega_r", self.dynamics.t_end);
        let _ = writeln!(s, "snapshot_stride = {}", self.dynamics.snapshot_stride);
        let _ = writeln!(s, "noise_on = {}", self.dynamics.noise_on);
        let _ = writeln!(s, "\n[analysis]");
        let _ = writeln!(s, "window = {} 1/omega_r", self.analysis.window);
        let _ = writeln!(s, "n_samples = {}", self.analysis.n_samples);
        let _ = writeln!(s, "filter_radius = {} r0", self.analysis.filter_radius);
        let _ = writeln!(s, "bin_width = {} r0", self.analysis.bin_width);
        let _ = writeln!(s, "grid_m = {}", self.analysis.grid_m);
        let _ = writeln!(s, "grid_extent = {} r0", self.analysis.grid_extent);
        let _ = writeln!(s, "\n[ensemble]");
        let _ = writeln!(s, "n_traj = {}", self.ensemble.n_traj);
        let _ = writeln!(s, "seed = {}", self.ensemble.seed);
        s
    }

    // -----------------------------------------------------------------
    // Derived quantities
    // -----------------------------------------------------------------

    /// Radial angular frequency [rad/s].
    pub fn omega_r(&self) -> f64 {
        2.0 * PI * self.trap.omega_r_hz
    }

    /// Axial angular frequency [rad/s].
    pub fn omega_z(&self) -> f64 {
        2.0 * PI * self.trap.omega_z_hz
    }

    pub fn trap_geometry(&self) -> TrapGeometry {
        // Positivity and the rotation bound are enforced at parse time.
        TrapGeometry::new(
            self.omega_r(),
            self.omega_z(),
            self.trap.omega_frac * self.omega_r(),
            self.species.mass_kg,
        )
        .expect("parse validation guarantees a valid trap")
    }

    pub fn species(&self) -> Species {
        Species {
            mass: self.species.mass_kg,
            scattering_length: self.species.scattering_length_m,
        }
    }

    /// 3D zero-point energy `ε_000 = ħω_r + ħω_z/2` [J].
    pub fn eps000(&self) -> f64 {
        HBAR * (self.omega_r() + 0.5 * self.omega_z())
    }

    /// Absolute chemical potential measured from the potential minimum [J].
    pub fn mu_joules(&self, point: &ReservoirPoint) -> f64 {
        match point.mu.unit {
            MuUnit::Eps000 => point.mu.value * self.eps000(),
            MuUnit::HbarOmegaR => {
                point.mu.value * HBAR * self.omega_r() + 0.5 * HBAR * self.omega_z()
            }
        }
    }

    /// Reduced 2D chemical potential in units of `ħω_r` with the axial
    /// zero point removed; this is the value handed to the band dynamics.
    pub fn mu_tilde(&self, point: &ReservoirPoint) -> f64 {
        (self.mu_joules(point) - 0.5 * HBAR * self.omega_z()) / (HBAR * self.omega_r())
    }

    /// Reduced temperature `k_B T / ħω_r`.
    pub fn t_tilde(&self, point: &ReservoirPoint) -> f64 {
        KB * point.temperature_nk * 1e-9 / (HBAR * self.omega_r())
    }

    /// Absolute reservoir cutoff energy [J]: the band edge plus the axial
    /// zero point, so 3D reservoir integrals and the 2D band agree on where
    /// the coherent region ends.
    pub fn e_r_joules(&self) -> f64 {
        CutoffSpec::new(self.cutoff.nbar).e_r(&self.trap_geometry()) + 0.5 * HBAR * self.omega_z()
    }

    pub fn reservoir_spec(&self, point: &ReservoirPoint) -> Result<ReservoirSpec> {
        ReservoirSpec::new(
            point.temperature_nk * 1e-9,
            self.mu_joules(point),
            self.trap.omega_frac * self.omega_r(),
            self.e_r_joules(),
        )
        .map_err(|e| anyhow!("reservoir parameters: {e}"))
    }

    /// Dimensionless 2D interaction strength `λ = sqrt(8π) a / l_z` with
    /// `l_z = sqrt(ħ / m ω_z)`.
    pub fn lambda(&self) -> f64 {
        let l_z = (HBAR / (self.species.mass_kg * self.omega_z())).sqrt();
        (8.0 * PI).sqrt() * self.species.scattering_length_m / l_z
    }

    pub fn evolution_params(&self) -> EvolutionParams {
        EvolutionParams {
            lambda: self.lambda(),
            mu_tilde: self.mu_tilde(&self.quench),
            t_tilde: self.t_tilde(&self.quench),
            gamma: self.dynamics.gamma,
            dt: self.dynamics.dt,
            t_end: self.dynamics.t_end,
            noise_on: self.dynamics.noise_on,
            snapshot_stride: self.dynamics.snapshot_stride,
        }
    }

    pub fn initial_ensemble(&self, n_samples: usize) -> InitialEnsembleSpec {
        InitialEnsembleSpec {
            t0: self.t_tilde(&self.initial),
            mu0: self.mu_tilde(&self.initial),
            n_samples,
            seed: SeedLineage::new(self.ensemble.seed),
        }
    }

    /// Human-readable record of every unit conversion applied at the
    /// configuration boundary.
    pub fn conversion_log(&self) -> Vec<String> {
        let mu_fmt = |p: &ReservoirPoint| match p.mu.unit {
            MuUnit::Eps000 => format!("{} eps000", p.mu.value),
            MuUnit::HbarOmegaR => format!("{} homega_r", p.mu.value),
        };
        let l_z = (HBAR / (self.species.mass_kg * self.omega_z())).sqrt();
        vec![
            format!(
                "eps000 = hbar*(omega_r + omega_z/2) = {:.6e} J",
                self.eps000()
            ),
            format!(
                "mu(initial) = {} -> mu_tilde = {:.12} (axial zero point hbar*omega_z/2 removed)",
                mu_fmt(&self.initial),
                self.mu_tilde(&self.initial)
            ),
            format!(
                "mu(quench)  = {} -> mu_tilde = {:.12}",
                mu_fmt(&self.quench),
                self.mu_tilde(&self.quench)
            ),
            format!(
                "T(initial) = {} nK -> t_tilde = {:.12}",
                self.initial.temperature_nk,
                self.t_tilde(&self.initial)
            ),
            format!(
                "T(quench)  = {} nK -> t_tilde = {:.12}",
                self.quench.temperature_nk,
                self.t_tilde(&self.quench)
            ),
            format!(
                "lambda = sqrt(8 pi)*a/l_z = {:.12e} (l_z = {:.6e} m)",
                self.lambda(),
                l_z
            ),
            format!(
                "E_R(reservoir) = hbar*omega_r*(Nbar+1) + hbar*omega_z/2 = {:.6e} J",
                self.e_r_joules()
            ),
        ]
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// The reference rotating-trap quench: 12 nK / 0.5 ε_000 ensemble quenched to
/// 1 nK / 3.5 ε_000 at Ω = 0.979 ω_r with Γ = 0.01.  Runs the full protocol
/// length (hours of CPU); use the smoke presets for quick turnarounds.
pub fn headline() -> RunConfig {
    RunConfig {
        trap: TrapConfig {
            omega_r_hz: 8.3,
            omega_z_hz: 5.3,
            omega_frac: 0.979,
        },
        species: SpeciesConfig {
            mass_kg: MASS_RB87,
            // 100.4 Bohr radii: standard literature value for the species;
            // an input here, adjust in the config if a different value is
            // preferred.
            scattering_length_m: A_RB87,
        },
        cutoff: CutoffConfig { nbar: 4 },
        initial: ReservoirPoint {
            temperature_nk: 12.0,
            mu: MuValue {
                value: 0.5,
                unit: MuUnit::Eps000,
            },
        },
        quench: ReservoirPoint {
            temperature_nk: 1.0,
            mu: MuValue {
                value: 3.5,
                unit: MuUnit::Eps000,
            },
        },
        dynamics: DynamicsConfig {
            gamma: 0.01,
            dt: 0.004,
            // 50 s of laboratory time: omega_r * 50 s = 830 pi.
            t_end: 830.0 * PI,
            snapshot_stride: 250,
            noise_on: true,
        },
        analysis: AnalysisConfig {
            // 2.5 trap periods.
            window: 5.0 * PI,
            n_samples: 50,
            filter_radius: 10.0,
            bin_width: 0.25,
            grid_m: 256,
            grid_extent: 12.0,
        },
        ensemble: EnsembleConfig {
            n_traj: 8,
            seed: 7_041_776,
        },
    }
}

/// Short single-trajectory variant of the reference quench (50 trap periods,
/// slightly stronger damping so the growth plateaus inside the run).
fn smoke(temperature_nk: f64, seed: u64) -> RunConfig {
    let mut cfg = headline();
    cfg.quench.temperature_nk = temperature_nk;
    cfg.dynamics.gamma = 0.03;
    cfg.dynamics.t_end = 100.0 * PI;
    cfg.dynamics.snapshot_stride = 75;
    cfg.analysis.grid_m = 321;
    cfg.analysis.grid_extent = 16.0;
    cfg.ensemble.n_traj = 1;
    cfg.ensemble.seed = seed;
    cfg
}

/// Final temperatures of the sweep preset [nK].
pub const SWEEP_TEMPERATURES_NK: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 9.0, 11.0];

/// Named preset lookup.  `sweep` expands to one labeled configuration per
/// final temperature; the others yield a single configuration.
pub fn preset_configs(name: &str) -> Result<Vec<(String, RunConfig)>> {
    match name {
        "headline" => Ok(vec![("headline".to_string(), headline())]),
        "smoke-low" => Ok(vec![("smoke-low".to_string(), smoke(1.0, 11))]),
        "smoke-high" => Ok(vec![("smoke-high".to_string(), smoke(11.0, 13))]),
        "sweep" => Ok(SWEEP_TEMPERATURES_NK
            .iter()
            .map(|&t| {
                let mut cfg = headline();
                cfg.quench.temperature_nk = t;
                (format!("T{:02}nK", t as u32), cfg)
            })
            .collect()),
        other => bail!(
            "unknown preset `{other}` (available: headline, smoke-low, smoke-high, sweep)"
        ),
    }
}

/// Single-configuration preset lookup; errors for multi-config presets.
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut configs = preset_configs(name)?;
    if configs.len() != 1 {
        bail!("preset `{name}` expands to {} configurations; run it through `quench`", configs.len());
    }
    Ok(configs.remove(0).1)
}

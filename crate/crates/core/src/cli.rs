//! Batch front end.
//!
//! Parameters resolve as: command-line flag, then config file, then the
//! per-command default. The worker count additionally honours `ZTOPO_JOBS`
//! between the flag and the config file. The resolved configuration is
//! echoed to `manifest.json`, which can itself be passed back with
//! `--config` (or replayed with `ztopo run --config manifest.json`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bloch::{winding_number_for, LatticeSums, DEFAULT_CUTOFF, DEFAULT_K_POINTS};
use crate::dipole_coupling::build_coupling_matrices;
use crate::error::{Error, Result};
use crate::geometry::{build_chain, canonicalize_phi, ChainGeometry, ModelParams};
use crate::output::{atomic_write, svg_heatmap, svg_scatter, Cell, CsvTable, PlotAxis};
use crate::realspace::{build_hamiltonian, diagonalize, edge_profile, strip_intrasublattice, SpectrumResult};
use crate::sweep::{order_parameter_summary, run_sweep, Axis, FixedParams, SweepSpec, NU_FAILED};
use crate::synthetic::{self, berry_curvature_grid, fill_decay_rates, pump_displacement, rice_mele_dz};

pub const JOBS_ENV: &str = "ZTOPO_JOBS";
pub const MANIFEST: &str = "manifest.json";

/// Exit status for a run in which some sweep cells failed.
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    EdgeProfile,
    PhaseDiagram,
    Bloch,
    Synthetic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::EdgeProfile => "edge-profile",
            Command::PhaseDiagram => "phase-diagram",
            Command::Bloch => "bloch",
            Command::Synthetic => "synthetic",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::Usage(format!("unknown command '{s}'")))
    }
}

/// Every physical and numerical parameter. Not all commands use all of them;
/// the manifest records the full set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub n_atoms: usize,
    pub lattice_const: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub delta0: f64,
    /// Polarization angle for single-angle commands.
    pub phi: f64,
    /// Polarization samples `phi_start..=phi_end` for spectrum and bloch.
    pub phi_start: f64,
    pub phi_end: f64,
    pub phi_count: usize,
    /// Drop intra-sublattice couplings (restores chiral symmetry).
    pub stripped: bool,
    pub nk: usize,
    pub nphi: usize,
    /// k-grid for winding numbers.
    pub k_points: usize,
    /// Lattice-sum cutoff in unit cells.
    pub cutoff: usize,
    pub axis1: String,
    pub axis2: String,
}

impl Parameters {
    pub fn defaults(command: Command) -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            n_atoms: 50,
            lattice_const: if command == Command::PhaseDiagram { 0.35 } else { 0.3 },
            shift_x: 0.0,
            shift_y: 0.0,
            delta0: if command == Command::Synthetic { 1.0 } else { 0.0 },
            phi: -FRAC_PI_4,
            phi_start: -FRAC_PI_2,
            phi_end: FRAC_PI_2,
            phi_count: 101,
            stripped: false,
            nk: 256,
            nphi: 256,
            k_points: DEFAULT_K_POINTS,
            cutoff: DEFAULT_CUTOFF,
            axis1: format!("phi:{}:{}:101", -FRAC_PI_2, FRAC_PI_2),
            axis2: "shift_y:-0.5:0.5:101".into(),
        }
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        let v = |msg: &str| Err(Error::Validation(msg.to_string()));
        if !self.lattice_const.is_finite() || self.lattice_const <= 0.0 {
            return v("lattice_const must be > 0");
        }
        if self.n_atoms < 2 || !self.n_atoms.is_multiple_of(2) {
            return v("n_atoms must be even and >= 2");
        }
        for (name, x) in [
            ("shift_x", self.shift_x),
            ("shift_y", self.shift_y),
            ("delta0", self.delta0),
            ("phi", self.phi),
            ("phi_start", self.phi_start),
            ("phi_end", self.phi_end),
        ] {
            if !x.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }
        if self.phi_count < 1 {
            return v("phi_count must be >= 1");
        }
        if self.cutoff < 1 {
            return v("cutoff must be >= 1");
        }
        if self.k_points < crate::bloch::MIN_K_POINTS {
            return Err(Error::Validation(format!("k_points must be >= {}", crate::bloch::MIN_K_POINTS)));
        }
        if self.nk < 2 {
            return v("nk must be >= 2");
        }
        if command == Command::Synthetic {
            if self.nk < synthetic::MIN_GRID || self.nphi < synthetic::MIN_GRID {
                return Err(Error::Validation(format!("nk and nphi must be >= {}", synthetic::MIN_GRID)));
            }
            if self.delta0 == 0.0 {
                return v("delta0 must be nonzero");
            }
        }
        if self.stripped && self.delta0 != 0.0 && command != Command::Synthetic {
            return v("stripped requires delta0 = 0");
        }
        if command == Command::PhaseDiagram {
            self.sweep_spec()?.validate()?;
        }
        Ok(())
    }

    pub fn phi_samples(&self) -> Vec<f64> {
        if self.phi_count == 1 {
            return vec![self.phi_start];
        }
        let step = (self.phi_end - self.phi_start) / (self.phi_count - 1) as f64;
        (0..self.phi_count)
            .map(|i| if i + 1 == self.phi_count { self.phi_end } else { self.phi_start + i as f64 * step })
            .collect()
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            axis1: self.axis1.parse()?,
            axis2: self.axis2.parse()?,
            fixed: FixedParams {
                n_atoms: self.n_atoms,
                lattice_const: self.lattice_const,
                shift_x: self.shift_x,
                shift_y: self.shift_y,
                phi: self.phi,
                delta0: self.delta0,
                k_points: self.k_points,
                cutoff: self.cutoff,
            },
        })
    }

    fn geometry(&self) -> Result<ChainGeometry> {
        build_chain(self.n_atoms, self.lattice_const, self.shift_x, self.shift_y)
    }
}

/// Fully resolved run configuration. No randomness is used anywhere, so
/// there is no seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub parameters: Parameters,
    pub output_dir: PathBuf,
    /// Worker count; 0 means one per logical core.
    pub jobs: usize,
    pub plots: bool,
    pub seedless: bool,
}

#[derive(Parser, Debug)]
#[command(name = "ztopo", version, about = "Topology of dipole-coupled zigzag emitter chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Real-space spectrum and edge profiles over a range of polarization angles.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        phis: PhiRangeArgs,
        /// Drop intra-sublattice couplings.
        #[arg(long)]
        stripped: bool,
    },
    /// Population profile of the edge state at a single polarization angle.
    EdgeProfile {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        #[arg(long)]
        stripped: bool,
    },
    /// Winding-number and localization phase diagram over two parameters.
    PhaseDiagram {
        #[command(flatten)]
        common: CommonArgs,
        /// `name:start:end:count`, name in {phi, shift_x, shift_y, lattice_const, delta0}.
        #[arg(long, allow_hyphen_values = true)]
        axis1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        axis2: Option<String>,
        /// Value of phi when it is not swept.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        #[arg(long)]
        k_points: Option<usize>,
    },
    /// Bloch vector, bands and winding number.
    Bloch {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        phis: PhiRangeArgs,
        #[arg(long)]
        nk: Option<usize>,
        #[arg(long)]
        k_points: Option<usize>,
        #[arg(long)]
        stripped: bool,
    },
    /// Rice-Mele bands, Berry curvature, pumping and decay over (k, phi).
    Synthetic {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        nk: Option<usize>,
        #[arg(long)]
        nphi: Option<usize>,
    },
    /// Replays a saved manifest or config file that names its command.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON config file or a previous run's manifest.json.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (default: logical cores, or $ZTOPO_JOBS).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plots: bool,
    /// Number of emitters.
    #[arg(long = "n")]
    pub n_atoms: Option<usize>,
    /// Lattice constant in units of lambda0.
    #[arg(long = "a", allow_hyphen_values = true)]
    pub lattice_const: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub shift_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub shift_y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: Option<f64>,
    /// Lattice-sum cutoff in unit cells.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct PhiRangeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub phi_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_end: Option<f64>,
    #[arg(long)]
    pub phi_count: Option<usize>,
}

type Overrides = Vec<(&'static str, Value)>;

fn push<T: Into<Value>>(o: &mut Overrides, key: &'static str, v: Option<T>) {
    if let Some(v) = v {
        o.push((key, v.into()));
    }
}

impl CommonArgs {
    fn overrides(&self, o: &mut Overrides) {
        push(o, "n_atoms", self.n_atoms);
        push(o, "lattice_const", self.lattice_const);
        push(o, "shift_x", self.shift_x);
        push(o, "shift_y", self.shift_y);
        push(o, "delta0", self.delta0);
        push(o, "cutoff", self.cutoff);
    }
}

impl PhiRangeArgs {
    fn overrides(&self, o: &mut Overrides) {
        push(o, "phi_start", self.phi_start);
        push(o, "phi_end", self.phi_end);
        push(o, "phi_count", self.phi_count);
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub command: Option<Command>,
    pub parameters: Map<String, Value>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub plots: Option<bool>,
}

const META_KEYS: [&str; 5] = ["command", "jobs", "output_dir", "plots", "seedless"];
const MANIFEST_ONLY_KEYS: [&str; 6] = ["tool", "version", "parameters", "outputs", "summary", "timings"];

fn parameter_names() -> Vec<String> {
    match serde_json::to_value(Parameters::defaults(Command::Spectrum)) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => unreachable!("parameters serialize to an object"),
    }
}

fn unknown_key(key: &str, known: &[String]) -> Error {
    let best = known
        .iter()
        .map(|k| (strsim::levenshtein(key, k), k))
        .min_by_key(|(d, _)| *d)
        .filter(|(d, _)| *d <= 3.max(key.len() / 3));
    match best {
        Some((_, k)) => Error::Usage(format!("unknown config key '{key}' (did you mean '{k}'?)")),
        None => Error::Usage(format!("unknown config key '{key}'")),
    }
}

/// Parses a flat config object (`{"lattice_const": 0.35, ...}`) or a
/// manifest written by a previous run.
pub fn parse_config_file(text: &str) -> Result<ConfigFile> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Usage(format!("config is not valid JSON: {e}")))?;
    let Value::Object(top) = value else {
        return Err(Error::Usage("config must be a JSON object".into()));
    };
    let params = parameter_names();
    let is_manifest = top.contains_key("parameters");
    let mut cfg = ConfigFile::default();
    let mut known: Vec<String> = META_KEYS.iter().map(|s| s.to_string()).collect();
    if is_manifest {
        known.extend(MANIFEST_ONLY_KEYS.iter().map(|s| s.to_string()));
    } else {
        known.extend(params.iter().cloned());
    }

    for (key, v) in top {
        let bad = |what: &str| Error::Usage(format!("config key '{key}' must be {what}"));
        match key.as_str() {
            "command" => cfg.command = Some(Command::parse(v.as_str().ok_or_else(|| bad("a string"))?)?),
            "jobs" => cfg.jobs = Some(v.as_u64().ok_or_else(|| bad("a non-negative integer"))? as usize),
            "output_dir" => cfg.output_dir = Some(PathBuf::from(v.as_str().ok_or_else(|| bad("a string"))?)),
            "plots" => cfg.plots = Some(v.as_bool().ok_or_else(|| bad("a boolean"))?),
            "seedless" => {}
            "parameters" if is_manifest => {
                let Value::Object(m) = v else { return Err(bad("an object")) };
                for (k, pv) in m {
                    if !params.contains(&k) {
                        return Err(unknown_key(&k, &params));
                    }
                    cfg.parameters.insert(k, pv);
                }
            }
            k if is_manifest && MANIFEST_ONLY_KEYS.contains(&k) => {}
            k if !is_manifest && params.iter().any(|p| p == k) => {
                cfg.parameters.insert(key, v);
            }
            _ => return Err(unknown_key(&key, &known)),
        }
    }
    Ok(cfg)
}

fn jobs_from_env() -> Result<Option<usize>> {
    match std::env::var(JOBS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Usage(format!("{JOBS_ENV}='{s}' is not a non-negative integer"))),
        _ => Ok(None),
    }
}

/// Merges defaults, config file and command-line overrides.
pub fn resolve(
    command: Command,
    file: Option<ConfigFile>,
    overrides: Overrides,
    common: &CommonArgs,
    env_jobs: Option<usize>,
) -> Result<RunConfig> {
    let file = file.unwrap_or_default();
    let Value::Object(mut map) = serde_json::to_value(Parameters::defaults(command))? else {
        unreachable!("parameters serialize to an object")
    };
    for (k, v) in file.parameters {
        map.insert(k, v);
    }
    for (k, v) in overrides {
        map.insert(k.to_string(), v);
    }
    let parameters: Parameters =
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Usage(format!("invalid parameter value: {e}")))?;
    parameters.validate(command)?;
    Ok(RunConfig {
        command,
        parameters,
        output_dir: common
            .output_dir
            .clone()
            .or(file.output_dir)
            .unwrap_or_else(|| PathBuf::from("ztopo_output")),
        jobs: common.jobs.or(env_jobs).or(file.jobs).unwrap_or(0),
        plots: common.plots || file.plots.unwrap_or(false),
        seedless: true,
    })
}

/// Parses the command line (without running anything).
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    config_from_cli(cli)
}

fn config_from_cli(cli: Cli) -> Result<RunConfig> {
    let mut o = Overrides::new();
    let (command, common) = match &cli.command {
        CliCommand::Spectrum { common, phis, stripped } => {
            phis.overrides(&mut o);
            push(&mut o, "stripped", stripped.then_some(true));
            (Some(Command::Spectrum), common)
        }
        CliCommand::EdgeProfile { common, phi, stripped } => {
            push(&mut o, "phi", *phi);
            push(&mut o, "stripped", stripped.then_some(true));
            (Some(Command::EdgeProfile), common)
        }
        CliCommand::PhaseDiagram { common, axis1, axis2, phi, k_points } => {
            push(&mut o, "axis1", axis1.clone());
            push(&mut o, "axis2", axis2.clone());
            push(&mut o, "phi", *phi);
            push(&mut o, "k_points", *k_points);
            (Some(Command::PhaseDiagram), common)
        }
        CliCommand::Bloch { common, phis, nk, k_points, stripped } => {
            phis.overrides(&mut o);
            push(&mut o, "nk", *nk);
            push(&mut o, "k_points", *k_points);
            push(&mut o, "stripped", stripped.then_some(true));
            (Some(Command::Bloch), common)
        }
        CliCommand::Synthetic { common, nk, nphi } => {
            push(&mut o, "nk", *nk);
            push(&mut o, "nphi", *nphi);
            (Some(Command::Synthetic), common)
        }
        CliCommand::Run { common } => (None, common),
    };
    common.overrides(&mut o);

    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
            Some(parse_config_file(&text)?)
        }
        None => None,
    };
    let command = match (command, file.as_ref().and_then(|f| f.command)) {
        (Some(c), _) => c,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::Usage("`run` needs a --config file that names its command".into())),
    };
    resolve(command, file, o, common, jobs_from_env()?)
}

/// What a command produced, for the manifest.
struct Outcome {
    summary: Value,
    partial_failure: bool,
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        table.write_to(&self.dir.join(name))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        atomic_write(&self.dir.join(name), text.as_bytes())?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

fn real_space_spectrum(geometry: &ChainGeometry, p: &Parameters, phi: f64, params: &ModelParams) -> Result<SpectrumResult> {
    let canonical = canonicalize_phi(phi)?.phi;
    let couplings = build_coupling_matrices(geometry, canonical, params)?;
    let h = build_hamiltonian(&couplings, (p.delta0 != 0.0).then_some(p.delta0));
    let h = if p.stripped { strip_intrasublattice(&h)? } else { h };
    diagonalize(&h)
}

fn run_spectrum(cfg: &RunConfig, w: &mut Writer) -> Result<Outcome> {
    let p = &cfg.parameters;
    let params = ModelParams::default();
    let geometry = p.geometry()?;
    let phis = p.phi_samples();
    let spectra: Vec<SpectrumResult> = thread_pool(cfg.jobs)?.install(|| {
        phis.par_iter().map(|&phi| real_space_spectrum(&geometry, p, phi, &params)).collect::<Result<_>>()
    })?;

    let mut spectrum = CsvTable::new(&["phi", "index", "omega_minus_omega0", "ipr"]);
    let mut profile = CsvTable::new(&["phi", "site", "population"]);
    let mut points = Vec::new();
    let mut ties = 0;
    for (&phi, s) in phis.iter().zip(&spectra) {
        for m in 0..s.n() {
            spectrum.row(vec![phi.into(), (m + 1).into(), s.eigenvalues[m].into(), s.ipr[m].into()]);
            points.push((phi / std::f64::consts::PI, s.eigenvalues[m], s.ipr[m]));
        }
        let e = edge_profile(s);
        ties += e.tie as usize;
        for (i, pop) in e.populations.iter().enumerate() {
            profile.row(vec![phi.into(), (i + 1).into(), (*pop).into()]);
        }
    }
    w.csv("spectrum.csv", &spectrum)?;
    w.csv("edge_profile.csv", &profile)?;
    if cfg.plots {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q.1), hi.max(q.1)));
        let x = PlotAxis { label: "phi / pi".into(), min: p.phi_start.min(p.phi_end) / std::f64::consts::PI, max: p.phi_start.max(p.phi_end) / std::f64::consts::PI };
        let y = PlotAxis { label: "(omega - omega0) / Gamma0".into(), min: lo, max: hi };
        w.text("spectrum.svg", &svg_scatter("Spectrum, colored by IPR", &x, &y, &points))?;
    }
    let max_loc = spectra.iter().map(|s| s.loc).fold(0.0, f64::max);
    Ok(Outcome {
        summary: json!({ "phi_samples": phis.len(), "max_loc": max_loc, "edge_profile_ties": ties }),
        partial_failure: false,
    })
}

fn run_edge_profile(cfg: &RunConfig, w: &mut Writer) -> Result<Outcome> {
    let p = &cfg.parameters;
    let s = real_space_spectrum(&p.geometry()?, p, p.phi, &ModelParams::default())?;
    let e = edge_profile(&s);
    let mut profile = CsvTable::new(&["phi", "site", "population"]);
    for (i, pop) in e.populations.iter().enumerate() {
        profile.row(vec![p.phi.into(), (i + 1).into(), (*pop).into()]);
    }
    w.csv("edge_profile.csv", &profile)?;
    Ok(Outcome {
        summary: json!({
            "state_index": e.state_index + 1,
            "eigenvalue": e.eigenvalue,
            "tie": e.tie,
            "outer_four_sites_population": s.boundary_weight(e.state_index, 2),
            "loc": s.loc,
        }),
        partial_failure: false,
    })
}

fn run_bloch(cfg: &RunConfig, w: &mut Writer) -> Result<Outcome> {
    let p = &cfg.parameters;
    let params = ModelParams::default();
    let geometry = p.geometry()?;
    let phis = p.phi_samples();
    let ks = synthetic::k_grid(p.lattice_const, p.nk);
    type Line = (Vec<(f64, num_complex::Complex64)>, crate::bloch::WindingResult);
    let lines: Vec<Line> = thread_pool(cfg.jobs)?.install(|| {
        phis.par_iter()
            .map(|&phi| {
                let canonical = canonicalize_phi(phi)?.phi;
                let sums = LatticeSums::new(&geometry, canonical, p.cutoff, &params)?;
                let sums = if p.stripped { sums.stripped() } else { sums };
                Ok((sums.evaluate_uniform(ks[0], p.nk), winding_number_for(&sums, p.k_points)?))
            })
            .collect::<Result<_>>()
    })?;

    let mut bands = CsvTable::new(&["k", "phi", "d0", "dx", "dy", "dz", "omega_minus", "omega_plus"]);
    let mut winding = CsvTable::new(&["phi", "nu", "raw", "min_dxy", "well_defined"]);
    let mut nus = Vec::new();
    for (&phi, (values, wr)) in phis.iter().zip(&lines) {
        let dz = if p.delta0 != 0.0 { rice_mele_dz(p.delta0, phi) } else { 0.0 };
        for (&k, (d0, f)) in ks.iter().zip(values) {
            let (dx, dy) = (f.re, -f.im);
            let norm = (dx * dx + dy * dy + dz * dz).sqrt();
            bands.row(vec![
                k.into(),
                phi.into(),
                (*d0).into(),
                dx.into(),
                dy.into(),
                dz.into(),
                (d0 - norm).into(),
                (d0 + norm).into(),
            ]);
        }
        winding.row(vec![phi.into(), wr.nu.into(), wr.raw.into(), wr.min_dxy.into(), wr.well_defined.into()]);
        nus.push(json!({ "phi": phi, "nu": wr.nu, "well_defined": wr.well_defined }));
    }
    w.csv("bloch_bands.csv", &bands)?;
    w.csv("winding.csv", &winding)?;
    Ok(Outcome { summary: json!({ "winding": nus }), partial_failure: false })
}

fn run_phase_diagram(cfg: &RunConfig, w: &mut Writer) -> Result<Outcome> {
    let spec = cfg.parameters.sweep_spec()?;
    let last_decile = std::sync::atomic::AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let decile = done * 10 / total;
        if last_decile.fetch_max(decile, std::sync::atomic::Ordering::Relaxed) < decile {
            eprintln!("phase-diagram: {}% ({done}/{total} cells)", decile * 10);
        }
    };
    let grid = run_sweep(&spec, &ModelParams::default(), cfg.jobs, Some(&progress))?;
    w.csv("phase_nu.csv", &grid.nu_table())?;
    w.csv("phase_loc.csv", &grid.loc_table())?;
    if !grid.errors.is_empty() {
        w.json("phase_errors.json", &serde_json::to_value(&grid.errors)?)?;
    }
    if cfg.plots {
        let axis = |a: &Axis| PlotAxis {
            label: a.param.label().into(),
            min: a.start * a.param.plot_scale(),
            max: a.end * a.param.plot_scale(),
        };
        let (nx, ny) = grid.shape();
        let nu: Vec<f64> = grid.nu.iter().map(|&n| if n <= NU_FAILED + 1 { f64::NAN } else { n as f64 }).collect();
        w.text("phase_nu.svg", &svg_heatmap("Winding number", &axis(&spec.axis1), &axis(&spec.axis2), nx, ny, &nu))?;
        w.text("phase_loc.svg", &svg_heatmap("Loc (max IPR)", &axis(&spec.axis1), &axis(&spec.axis2), nx, ny, &grid.loc))?;
    }
    let summary = order_parameter_summary(&grid, None);
    Ok(Outcome {
        summary: json!({
            "order_parameters": summary,
            "failed_cells": grid.errors.len(),
            "runtime_per_cell_seconds": grid.runtime_per_cell,
        }),
        partial_failure: !grid.errors.is_empty(),
    })
}

fn run_synthetic(cfg: &RunConfig, w: &mut Writer) -> Result<Outcome> {
    let p = &cfg.parameters;
    let params = ModelParams::default();
    let geometry = p.geometry()?;
    let (grid, pump) = thread_pool(cfg.jobs)?.install(|| -> Result<_> {
        let mut grid = berry_curvature_grid(&geometry, p.delta0, p.nk, p.nphi, p.cutoff, &params)?;
        fill_decay_rates(&mut grid, &geometry, p.n_atoms, &params)?;
        let pump = pump_displacement(&grid)?;
        Ok((grid, pump))
    })?;

    let mut bands = CsvTable::new(&["k", "phi", "omega_minus", "omega_plus"]);
    let mut berry = CsvTable::new(&["k", "phi", "F_minus", "F_plus"]);
    let mut decay = CsvTable::new(&["k", "phi", "gamma_minus", "gamma_plus"]);
    let gm = grid.gamma_minus.as_ref().expect("decay rates filled");
    let gp = grid.gamma_plus.as_ref().expect("decay rates filled");
    for j in 0..grid.nk {
        for l in 0..grid.nphi {
            let c = grid.index(j, l);
            let (k, phi) = (grid.k_grid[j], grid.phi_grid[l]);
            bands.row(vec![k.into(), phi.into(), grid.omega_minus[c].into(), grid.omega_plus[c].into()]);
            berry.row(vec![
                grid.k_center(j).into(),
                grid.phi_center(l).into(),
                grid.berry_minus[c].into(),
                grid.berry_plus[c].into(),
            ]);
            decay.row(vec![k.into(), phi.into(), gm[c].into(), gp[c].into()]);
        }
    }
    let mut pump_csv = CsvTable::new(&["k", "displacement"]);
    for (k, d) in pump.k_centers.iter().zip(&pump.displacement_minus) {
        pump_csv.row(vec![Cell::Float(*k), Cell::Float(*d)]);
    }
    w.csv("bands.csv", &bands)?;
    w.csv("berry.csv", &berry)?;
    w.csv("pump.csv", &pump_csv)?;
    w.csv("decay.csv", &decay)?;

    let max_disp = pump.displacement_minus.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let mean_disp = synthetic::pairwise_sum(&pump.displacement_minus) / grid.nk as f64;
    let summary = json!({
        "chern_minus": pump.chern_minus,
        "chern_plus": pump.chern_plus,
        "chern_raw_minus": pump.chern_raw_minus,
        "chern_raw_plus": pump.chern_raw_plus,
        "min_band_gap": grid.min_gap(),
        "max_abs_displacement": max_disp,
        "mean_displacement": mean_disp,
    });
    w.json("synthetic_summary.json", &summary)?;

    if cfg.plots {
        let a = p.lattice_const;
        let kx = PlotAxis { label: "a k / pi".into(), min: -1.0, max: 1.0 };
        let py = PlotAxis { label: "phi / pi".into(), min: -0.5, max: 0.5 };
        let (nk, nphi) = (grid.nk, grid.nphi);
        w.text("omega_minus.svg", &svg_heatmap("Lower band", &kx, &py, nk, nphi, &grid.omega_minus))?;
        w.text("berry_minus.svg", &svg_heatmap("Berry curvature, lower band", &kx, &py, nk, nphi, &grid.berry_minus))?;
        w.text("decay_minus.svg", &svg_heatmap("Decay rate, lower band", &kx, &py, nk, nphi, gm))?;
        let points: Vec<(f64, f64, f64)> = pump
            .k_centers
            .iter()
            .zip(&pump.displacement_minus)
            .map(|(k, d)| (k * a / std::f64::consts::PI, *d, 0.0))
            .collect();
        let (lo, hi) = points.iter().fold((0.0f64, 0.0f64), |(lo, hi), q| (lo.min(q.1), hi.max(q.1)));
        let dy = PlotAxis { label: "displacement / a".into(), min: lo, max: hi };
        w.text("pump.svg", &svg_scatter("Pumped displacement", &kx, &dy, &points))?;
    }
    Ok(Outcome { summary, partial_failure: false })
}

/// Runs a resolved configuration and returns the exit code.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let started = Instant::now();
    let mut w = Writer { dir: &cfg.output_dir, outputs: Vec::new() };
    let outcome = match cfg.command {
        Command::Spectrum => run_spectrum(cfg, &mut w),
        Command::EdgeProfile => run_edge_profile(cfg, &mut w),
        Command::PhaseDiagram => run_phase_diagram(cfg, &mut w),
        Command::Bloch => run_bloch(cfg, &mut w),
        Command::Synthetic => run_synthetic(cfg, &mut w),
    }?;
    let mut outputs = w.outputs.clone();
    outputs.push(MANIFEST.into());

    let manifest = json!({
        "tool": "ztopo",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
        "parameters": cfg.parameters,
        "jobs": cfg.jobs,
        "plots": cfg.plots,
        "seedless": cfg.seedless,
        "outputs": outputs,
        "summary": outcome.summary,
        "timings": { "total_seconds": started.elapsed().as_secs_f64() },
    });
    w.json(MANIFEST, &manifest)?;
    Ok(if outcome.partial_failure { EXIT_PARTIAL } else { 0 })
}

/// Entry point of the `ztopo` binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match config_from_cli(cli).and_then(|cfg| run(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ztopo: {e}");
            EXIT_FATAL
        }
    }
}

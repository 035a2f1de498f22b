//! Parallel two-parameter sweeps of the winding number and the localization
//! `Loc = max IPR`.
//!
//! Cells are independent. The grid is split into contiguous static blocks,
//! one per worker, and every cell writes only its own slot, so results do not
//! depend on the number of workers or on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{winding_number_for, LatticeSums, DEFAULT_CUTOFF, DEFAULT_K_POINTS};
use crate::dipole_coupling::build_coupling_matrices;
use crate::error::{Error, Result};
use crate::geometry::{build_chain, canonicalize_phi, ModelParams};
use crate::output::{Cell, CsvTable};
use crate::realspace::{build_hamiltonian, diagonalize};

/// Marks a cell whose winding number is not well defined (gap closing).
pub const NU_ILL_DEFINED: i32 = -999;
/// Marks a cell whose evaluation failed; see [`PhaseDiagramGrid::errors`].
pub const NU_FAILED: i32 = -1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Phi,
    ShiftX,
    ShiftY,
    LatticeConst,
    Delta0,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::Phi, Param::ShiftX, Param::ShiftY, Param::LatticeConst, Param::Delta0];

    pub fn name(self) -> &'static str {
        match self {
            Param::Phi => "phi",
            Param::ShiftX => "shift_x",
            Param::ShiftY => "shift_y",
            Param::LatticeConst => "lattice_const",
            Param::Delta0 => "delta0",
        }
    }

    /// Axis label for plots.
    pub fn label(self) -> &'static str {
        match self {
            Param::Phi => "phi / pi",
            Param::ShiftX => "shift_x / a",
            Param::ShiftY => "shift_y / a",
            Param::LatticeConst => "a / lambda0",
            Param::Delta0 => "Delta0 / Gamma0",
        }
    }

    /// Scale applied to axis values in plot labels.
    pub fn plot_scale(self) -> f64 {
        match self {
            Param::Phi => std::f64::consts::FRAC_1_PI,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
            Error::Usage(format!("unknown sweep parameter '{s}', expected one of {}", names.join(", ")))
        })
    }
}

/// A uniform axis `start..=end` with `count` samples. When `start == end`
/// the axis collapses to that single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Validation(format!("axis {} count must be >= 2", self.param)));
        }
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::Validation(format!("axis {} range must be finite", self.param)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.start == self.end {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.end } else { self.start + i as f64 * step })
            .collect()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.param, self.start, self.end, self.count)
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Parses `name:start:end:count`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Usage(format!("axis '{s}' must look like name:start:end:count")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("axis '{s}': '{t}' is not a number")))
        };
        let axis = Axis {
            param: parts[0].trim().parse()?,
            start: num(parts[1])?,
            end: num(parts[2])?,
            count: parts[3]
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("axis '{s}': '{}' is not a count", parts[3])))?,
        };
        axis.validate()?;
        Ok(axis)
    }
}

/// Values of the parameters that are not swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub n_atoms: usize,
    pub lattice_const: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub phi: f64,
    /// Staggered potential added to the real-space Hamiltonian; it does not
    /// enter the winding number.
    pub delta0: f64,
    pub k_points: usize,
    pub cutoff: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            n_atoms: 50,
            lattice_const: 0.35,
            shift_x: 0.0,
            shift_y: 0.0,
            phi: -std::f64::consts::FRAC_PI_4,
            delta0: 0.0,
            k_points: DEFAULT_K_POINTS,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: FixedParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.param == self.axis2.param {
            return Err(Error::Validation(format!("both axes sweep {}", self.axis1.param)));
        }
        Ok(())
    }

    /// Parameters of cell `(i, j)`.
    pub fn cell_params(&self, x: f64, y: f64) -> FixedParams {
        let mut p = self.fixed;
        for (axis, v) in [(self.axis1, x), (self.axis2, y)] {
            match axis.param {
                Param::Phi => p.phi = v,
                Param::ShiftX => p.shift_x = v,
                Param::ShiftY => p.shift_y = v,
                Param::LatticeConst => p.lattice_const = v,
                Param::Delta0 => p.delta0 = v,
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellResult {
    pub nu: i32,
    pub nu_raw: f64,
    pub well_defined: bool,
    pub min_dxy: f64,
    pub loc: f64,
}

/// Winding number and localization for one parameter set.
pub fn evaluate_cell(p: &FixedParams, params: &ModelParams) -> Result<CellResult> {
    let geometry = build_chain(p.n_atoms, p.lattice_const, p.shift_x, p.shift_y)?;
    let phi = canonicalize_phi(p.phi)?.phi;
    let sums = LatticeSums::new(&geometry, phi, p.cutoff, params)?;
    let w = winding_number_for(&sums, p.k_points)?;
    let couplings = build_coupling_matrices(&geometry, phi, params)?;
    let delta = (p.delta0 != 0.0).then_some(p.delta0);
    let spectrum = diagonalize(&build_hamiltonian(&couplings, delta))?;
    Ok(CellResult {
        nu: if w.well_defined { w.nu } else { NU_ILL_DEFINED },
        nu_raw: w.raw,
        well_defined: w.well_defined,
        min_dxy: w.min_dxy,
        loc: spectrum.loc,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CellError {
    pub index: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub message: String,
}

/// Sweep results, row-major with `axis1` outermost: cell `(i, j)` is at
/// `i * axis2_values.len() + j`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramGrid {
    pub spec: SweepSpec,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    pub nu: Vec<i32>,
    pub nu_raw: Vec<f64>,
    pub well_defined: Vec<bool>,
    pub min_dxy: Vec<f64>,
    pub loc: Vec<f64>,
    pub errors: Vec<CellError>,
    /// Mean wall time per cell in seconds; informational only.
    pub runtime_per_cell: f64,
}

impl PhaseDiagramGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1_values.len(), self.axis2_values.len())
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.axis2_values.len() + j
    }

    fn table(&self, value: impl Fn(usize) -> Cell) -> CsvTable {
        let mut t = CsvTable::new(&["axis1", "axis2", "value"]);
        for (i, &x) in self.axis1_values.iter().enumerate() {
            for (j, &y) in self.axis2_values.iter().enumerate() {
                t.row(vec![x.into(), y.into(), value(self.index(i, j))]);
            }
        }
        t
    }

    pub fn nu_table(&self) -> CsvTable {
        self.table(|c| self.nu[c].into())
    }

    pub fn loc_table(&self) -> CsvTable {
        self.table(|c| self.loc[c].into())
    }
}

/// Runs the sweep on `jobs` workers (0 = rayon default). `progress` is
/// called with the number of finished cells.
pub fn run_sweep(
    spec: &SweepSpec,
    params: &ModelParams,
    jobs: usize,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<PhaseDiagramGrid> {
    spec.validate()?;
    let xs = spec.axis1.values();
    let ys = spec.axis2.values();
    let total = xs.len() * ys.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let workers = pool.current_num_threads().max(1);
    let block = total.div_ceil(workers).max(1);

    let done = AtomicUsize::new(0);
    let mut cells: Vec<Option<std::result::Result<CellResult, String>>> = vec![None; total];
    let start = Instant::now();
    pool.install(|| {
        cells.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
            for (offset, slot) in chunk.iter_mut().enumerate() {
                let c = b * block + offset;
                let p = spec.cell_params(xs[c / ys.len()], ys[c % ys.len()]);
                *slot = Some(evaluate_cell(&p, params).map_err(|e| e.to_string()));
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(cb) = progress {
                    cb(n, total);
                }
            }
        });
    });
    let elapsed = start.elapsed().as_secs_f64();

    let mut grid = PhaseDiagramGrid {
        spec: spec.clone(),
        axis1_values: xs.clone(),
        axis2_values: ys.clone(),
        nu: Vec::with_capacity(total),
        nu_raw: Vec::with_capacity(total),
        well_defined: Vec::with_capacity(total),
        min_dxy: Vec::with_capacity(total),
        loc: Vec::with_capacity(total),
        errors: Vec::new(),
        runtime_per_cell: elapsed * workers as f64 / total as f64,
    };
    for (c, cell) in cells.into_iter().enumerate() {
        match cell.expect("every cell is evaluated") {
            Ok(r) => {
                grid.nu.push(r.nu);
                grid.nu_raw.push(r.nu_raw);
                grid.well_defined.push(r.well_defined);
                grid.min_dxy.push(r.min_dxy);
                grid.loc.push(r.loc);
            }
            Err(message) => {
                grid.nu.push(NU_FAILED);
                grid.nu_raw.push(f64::NAN);
                grid.well_defined.push(false);
                grid.min_dxy.push(f64::NAN);
                grid.loc.push(f64::NAN);
                grid.errors.push(CellError { index: c, axis1: xs[c / ys.len()], axis2: ys[c % ys.len()], message });
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct NuSummary {
    pub nu: i32,
    pub cells: usize,
    pub area_fraction: f64,
    /// Connected components under 4-neighbour adjacency.
    pub components: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderParameterSummary {
    pub loc_threshold: f64,
    pub by_nu: Vec<NuSummary>,
    /// Well-defined cells with `ν ≠ 0`.
    pub nontrivial_cells: usize,
    /// Fraction of nontrivial cells with `Loc ≥ threshold`.
    pub edge_confirmed_fraction: f64,
    /// Fraction of nontrivial cells with `Loc < threshold`: the winding
    /// number predicts edge states that the finite chain does not show.
    pub violation_fraction: f64,
    pub failed_cells: usize,
}

/// Default localization threshold `4/N`.
pub fn default_loc_threshold(n_atoms: usize) -> f64 {
    4.0 / n_atoms as f64
}

pub fn order_parameter_summary(grid: &PhaseDiagramGrid, loc_threshold: Option<f64>) -> OrderParameterSummary {
    let threshold = loc_threshold.unwrap_or_else(|| default_loc_threshold(grid.spec.fixed.n_atoms));
    let (nx, ny) = grid.shape();
    let total = nx * ny;

    let mut by_nu: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    let mut seen = vec![false; total];
    for start in 0..total {
        let nu = grid.nu[start];
        let entry = by_nu.entry(nu).or_default();
        entry.0 += 1;
        if seen[start] {
            continue;
        }
        entry.1 += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            let (i, j) = (c / ny, c % ny);
            let mut neighbours = Vec::with_capacity(4);
            if i > 0 {
                neighbours.push(c - ny);
            }
            if i + 1 < nx {
                neighbours.push(c + ny);
            }
            if j > 0 {
                neighbours.push(c - 1);
            }
            if j + 1 < ny {
                neighbours.push(c + 1);
            }
            for nb in neighbours {
                if !seen[nb] && grid.nu[nb] == nu {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }

    let nontrivial: Vec<usize> = (0..total)
        .filter(|&c| grid.well_defined[c] && grid.nu[c] != 0)
        .collect();
    let confirmed = nontrivial.iter().filter(|&&c| grid.loc[c] >= threshold).count();
    let (edge_confirmed_fraction, violation_fraction) = if nontrivial.is_empty() {
        (0.0, 0.0)
    } else {
        let f = confirmed as f64 / nontrivial.len() as f64;
        (f, 1.0 - f)
    };

    OrderParameterSummary {
        loc_threshold: threshold,
        by_nu: by_nu
            .into_iter()
            .map(|(nu, (cells, components))| NuSummary {
                nu,
                cells,
                area_fraction: cells as f64 / total as f64,
                components,
            })
            .collect(),
        nontrivial_cells: nontrivial.len(),
        edge_confirmed_fraction,
        violation_fraction,
        failed_cells: grid.errors.len(),
    }
}

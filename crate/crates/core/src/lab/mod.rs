//! Batch experiments over study corpora.
//!
//! [`run_grid`] replays every study for every (window size, frame rate)
//! cell, plus the baseline capsule once per study, and aggregates the
//! results per cell. Simulations run in parallel; aggregation walks cells
//! and studies in a fixed order so results are reproducible bit for bit.

mod report;
mod stats;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{read_grid, report, write_grid_csv, write_results_csv, write_summary_json};
pub use stats::{summarize, summarize_delays, DelaySummary};

use crate::capsule::{run_baseline, stride, Capsule, CapsuleConfig, SimResult};
use crate::classifier::{load_trace, StudyTrace};
use crate::error::{Error, Result};

pub const DEFAULT_WINDOWS: [usize; 5] = [10, 20, 30, 40, 50];
pub const DEFAULT_FPS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub window_sizes: Vec<usize>,
    pub fps_values: Vec<f64>,
    pub base_config: CapsuleConfig,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            window_sizes: DEFAULT_WINDOWS.to_vec(),
            fps_values: DEFAULT_FPS.to_vec(),
            base_config: CapsuleConfig::default(),
        }
    }
}

impl GridSpec {
    /// Cells in reporting order: window-major, then frame rate.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.window_sizes
            .iter()
            .flat_map(|&w| self.fps_values.iter().map(move |&f| (w, f)))
            .collect()
    }

    pub fn config_for(&self, window: usize, fps: f64) -> CapsuleConfig {
        CapsuleConfig {
            window_size: window,
            fps_pre: fps,
            ..self.base_config.clone()
        }
    }

    pub fn validate(&self, corpus: &[StudyTrace]) -> Result<()> {
        if self.window_sizes.is_empty() || self.fps_values.is_empty() {
            return Err(Error::Config("grid axes must be non-empty".into()));
        }
        if corpus.is_empty() {
            return Err(Error::Config("grid needs at least one study".into()));
        }
        for (w, fps) in self.cells() {
            if w == 0 {
                return Err(Error::Config(format!(
                    "cell (W={w}, fps={fps}): window must be >= 1"
                )));
            }
            for trace in corpus {
                stride(trace.recorded_fps, fps).map_err(|e| {
                    let msg = match e {
                        Error::Config(m) => m,
                        other => other.to_string(),
                    };
                    Error::Config(format!(
                        "cell (W={w}, fps={fps}), study {}: {msg}",
                        trace.study_id
                    ))
                })?;
            }
        }
        for trace in corpus {
            stride(trace.recorded_fps, self.base_config.fps_screen)?;
        }
        self.base_config.validate()
    }
}

/// Aggregates of one (window size, frame rate) cell over the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub window: usize,
    pub fps: f64,
    pub avg_energy_pre_si_mj: f64,
    /// Over studies with a defined delay; `None` if there are none.
    pub avg_delay_frames: Option<f64>,
    pub avg_delay_seconds: Option<f64>,
    pub median_delay: Option<f64>,
    pub premature_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub baseline_avg_energy_mj: f64,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn cell(&self, window: usize, fps: f64) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.window == window && c.fps == fps)
    }

    /// Fractional energy saved by a cell relative to the baseline capsule.
    pub fn savings(&self, window: usize, fps: f64) -> Option<f64> {
        self.cell(window, fps)
            .map(|c| 1.0 - c.avg_energy_pre_si_mj / self.baseline_avg_energy_mj)
    }
}

/// Everything a grid run produced, including per-study results.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub grid: GridResult,
    pub baseline: Vec<SimResult>,
    /// `per_cell[i][j]` is study `j` under cell `i` of [`GridSpec::cells`].
    pub per_cell: Vec<Vec<SimResult>>,
    pub cells: Vec<(usize, f64)>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn aggregate(window: usize, fps: f64, results: &[SimResult]) -> GridCell {
    let energies: Vec<f64> = results.iter().map(|r| r.energy_pre_si.total_mj()).collect();
    let delays: Vec<f64> = results
        .iter()
        .filter_map(|r| r.delay_frames)
        .map(|d| d as f64)
        .collect();
    let seconds: Vec<f64> = results.iter().filter_map(|r| r.delay_seconds).collect();
    GridCell {
        window,
        fps,
        avg_energy_pre_si_mj: mean(&energies).unwrap_or(0.0),
        avg_delay_frames: mean(&delays),
        avg_delay_seconds: mean(&seconds),
        median_delay: summarize(&delays).ok().map(|s| s.median),
        premature_count: results.iter().filter(|r| r.is_premature()).count(),
    }
}

pub fn run_grid(spec: &GridSpec, corpus: &[StudyTrace]) -> Result<GridOutcome> {
    spec.validate(corpus)?;
    let cells = spec.cells();
    let capsules: Vec<Capsule> = cells
        .iter()
        .map(|&(w, f)| Capsule::new(spec.config_for(w, f)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..corpus.len()).map(move |s| (c, s)))
        .collect();
    let flat: Vec<SimResult> = jobs
        .par_iter()
        .map(|&(c, s)| capsules[c].run(&corpus[s]))
        .collect::<Result<_>>()?;
    let per_cell: Vec<Vec<SimResult>> = flat.chunks(corpus.len()).map(|c| c.to_vec()).collect();

    let baseline: Vec<SimResult> = corpus
        .par_iter()
        .map(|t| run_baseline(t, &spec.base_config.power))
        .collect::<Result<_>>()?;
    let baseline_energy: Vec<f64> = baseline
        .iter()
        .map(|r| r.energy_pre_si.total_mj())
        .collect();

    let grid = GridResult {
        baseline_avg_energy_mj: mean(&baseline_energy).unwrap_or(0.0),
        cells: cells
            .iter()
            .zip(&per_cell)
            .map(|(&(w, f), rs)| aggregate(w, f, rs))
            .collect(),
    };
    Ok(GridOutcome {
        grid,
        baseline,
        per_cell,
        cells,
    })
}

/// Loads every `*.csv` trace in `dir`, in file-name order.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<StudyTrace>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())
        .map_err(Error::io_at(dir.as_ref()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Load(format!(
            "no trace CSVs in {}",
            dir.as_ref().display()
        )));
    }
    paths.iter().map(load_trace).collect()
}

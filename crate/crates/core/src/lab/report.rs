//! CSV/JSON reports of grid runs. Real numbers carry three decimals.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridCell, GridOutcome, GridResult};
use crate::capsule::SimResult;
use crate::error::{Error, Result};

const GRID_HEADER: [&str; 7] = [
    "W",
    "fps",
    "avg_energy_mJ",
    "avg_delay_frames",
    "avg_delay_s",
    "median_delay",
    "premature_count",
];

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

fn fmt3_opt(x: Option<f64>) -> String {
    x.map(fmt3).unwrap_or_default()
}

fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    // Normalize -0.0 so JSON output does not depend on the sign of zero.
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn write_grid_csv<W: Write>(out: W, grid: &GridResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER)?;
    for c in &grid.cells {
        w.write_record([
            c.window.to_string(),
            fmt3(c.fps),
            fmt3(c.avg_energy_pre_si_mj),
            fmt3_opt(c.avg_delay_frames),
            fmt3_opt(c.avg_delay_seconds),
            fmt3_opt(c.median_delay),
            c.premature_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SummaryCell {
    window: usize,
    fps: f64,
    avg_energy_pre_si_mj: f64,
    savings: f64,
    avg_delay_frames: Option<f64>,
    avg_delay_seconds: Option<f64>,
    median_delay: Option<f64>,
    premature_count: usize,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    n_studies: usize,
    baseline_avg_energy_mj: f64,
    cells: Vec<SummaryCell>,
}

pub fn write_summary_json<W: Write>(mut out: W, outcome: &GridOutcome) -> Result<()> {
    let grid = &outcome.grid;
    let summary = Summary {
        n_studies: outcome.baseline.len(),
        baseline_avg_energy_mj: round3(grid.baseline_avg_energy_mj),
        cells: grid
            .cells
            .iter()
            .map(|c| SummaryCell {
                window: c.window,
                fps: round3(c.fps),
                avg_energy_pre_si_mj: round3(c.avg_energy_pre_si_mj),
                savings: round3(1.0 - c.avg_energy_pre_si_mj / grid.baseline_avg_energy_mj),
                avg_delay_frames: c.avg_delay_frames.map(round3),
                avg_delay_seconds: c.avg_delay_seconds.map(round3),
                median_delay: c.median_delay.map(round3),
                premature_count: c.premature_count,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut out, &summary)?;
    out.write_all(b"\n")?;
    Ok(())
}

const RESULTS_HEADER: [&str; 12] = [
    "study_id",
    "variant",
    "W",
    "fps",
    "detection_frame",
    "first_si_frame",
    "delay_frames",
    "delay_s",
    "energy_pre_si_mJ",
    "energy_total_mJ",
    "frames_captured",
    "frames_transmitted",
];

fn result_row(r: &SimResult, variant: &str, window: Option<usize>, fps: f64) -> Vec<String> {
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    vec![
        r.study_id.clone(),
        variant.to_string(),
        opt(window),
        fmt3(fps),
        opt(r.detection_frame),
        opt(r.first_si_frame),
        r.delay_frames.map(|d| d.to_string()).unwrap_or_default(),
        fmt3_opt(r.delay_seconds),
        fmt3(r.energy_pre_si.total_mj()),
        fmt3(r.energy_total.total_mj()),
        r.frames_captured.to_string(),
        r.frames_transmitted.to_string(),
    ]
}

/// One row per (study, cell) plus one baseline row per study.
pub fn write_results_csv<W: Write>(out: W, outcome: &GridOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in &outcome.baseline {
        w.write_record(result_row(r, "baseline", None, r.recorded_fps))?;
    }
    for (&(window, fps), results) in outcome.cells.iter().zip(&outcome.per_cell) {
        for r in results {
            w.write_record(result_row(r, "smart", Some(window), fps))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(Error::io_at(path))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes `grid.csv`, `summary.json` and `results.csv` into `dir`.
pub fn report(outcome: &GridOutcome, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(Error::io_at(dir))?;
    let mut f = create(&dir.join("grid.csv"))?;
    write_grid_csv(&mut f, &outcome.grid)?;
    f.flush()?;
    let mut f = create(&dir.join("summary.json"))?;
    write_summary_json(&mut f, outcome)?;
    f.flush()?;
    let mut f = create(&dir.join("results.csv"))?;
    write_results_csv(&mut f, outcome)?;
    f.flush()?;
    Ok(())
}

fn parse_opt(field: &str, row: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Load(format!("grid.csv row {row}: {field:?} is not a number")))
}

/// Reads a report directory back into a [`GridResult`] (three-decimal
/// precision).
pub fn read_grid(dir: impl AsRef<Path>) -> Result<GridResult> {
    let dir = dir.as_ref();
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json"))?)?;
    let mut reader = csv::Reader::from_path(dir.join("grid.csv"))?;
    if !reader.headers()?.iter().eq(GRID_HEADER) {
        return Err(Error::Load("grid.csv has an unexpected header".into()));
    }
    let mut cells = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let need = |f: &str| {
            parse_opt(f, row)?
                .ok_or_else(|| Error::Load(format!("grid.csv row {row}: empty field")))
        };
        cells.push(GridCell {
            window: rec[0]
                .parse()
                .map_err(|_| Error::Load(format!("grid.csv row {row}: bad W")))?,
            fps: need(&rec[1])?,
            avg_energy_pre_si_mj: need(&rec[2])?,
            avg_delay_frames: parse_opt(&rec[3], row)?,
            avg_delay_seconds: parse_opt(&rec[4], row)?,
            median_delay: parse_opt(&rec[5], row)?,
            premature_count: rec[6]
                .parse()
                .map_err(|_| Error::Load(format!("grid.csv row {row}: bad premature_count")))?,
        });
    }
    Ok(GridResult {
        baseline_avg_energy_mj: summary.baseline_avg_energy_mj,
        cells,
    })
}

impl GridResult {
    /// The same result at report precision.
    pub fn rounded(&self) -> GridResult {
        GridResult {
            baseline_avg_energy_mj: round3(self.baseline_avg_energy_mj),
            cells: self
                .cells
                .iter()
                .map(|c| GridCell {
                    window: c.window,
                    fps: round3(c.fps),
                    avg_energy_pre_si_mj: round3(c.avg_energy_pre_si_mj),
                    avg_delay_frames: c.avg_delay_frames.map(round3),
                    avg_delay_seconds: c.avg_delay_seconds.map(round3),
                    median_delay: c.median_delay.map(round3),
                    premature_count: c.premature_count,
                })
                .collect(),
        }
    }
}

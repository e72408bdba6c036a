//! Order statistics for delay distributions.

use serde::{Deserialize, Serialize};

use crate::capsule::SimResult;
use crate::error::{Error, Result};

/// Box-plot summary. Quartiles use linear interpolation between order
/// statistics, so the median of an even count is the mean of the two middle
/// values. Outliers lie beyond 1.5 × IQR from the quartiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub outliers: Vec<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<DelaySummary> {
    if values.is_empty() {
        return Err(Error::Usage("no delays to summarize".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;
    Ok(DelaySummary {
        count: sorted.len(),
        min: sorted[0],
        q1,
        median: quantile(&sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        lower_fence,
        upper_fence,
        outliers: sorted
            .iter()
            .copied()
            .filter(|&v| v < lower_fence || v > upper_fence)
            .collect(),
    })
}

/// Summary of the delays (recorded frames) of every result whose delay is
/// defined.
pub fn summarize_delays(results: &[SimResult]) -> Result<DelaySummary> {
    let delays: Vec<f64> = results
        .iter()
        .filter_map(|r| r.delay_frames)
        .map(|d| d as f64)
        .collect();
    summarize(&delays)
}

//! Per-frame observation sources: recorded prediction traces and synthetic
//! studies.
//!
//! Synthetic studies draw a monotone organ timeline with log-normal dwell
//! times, then emit labels through the HMM emission rows. Runs of corrupted
//! frames ("dirt bursts", e.g. bubbles or debris) replace the emission row
//! with a fixed corrupt distribution regardless of the true organ.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Geometric, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::Observation;
use crate::error::{Error, Result};
use crate::markov::{uniform_confusion, HmmParams, Matrix, Organ, Vector, NUM_STATES};
use crate::power::PowerTable;

pub const DEFAULT_RECORDED_FPS: f64 = 2.0;

/// One recorded frame: ground truth and what the classifier reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub truth: Organ,
    pub obs: Observation<f64>,
}

/// A recorded or synthesized study replayed at `recorded_fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTrace {
    pub study_id: String,
    pub recorded_fps: f64,
    frames: Vec<Frame>,
}

impl StudyTrace {
    /// Validates anatomical order and a uniform observation form. A trace
    /// without a small-intestine frame is accepted here; [`load_trace`]
    /// rejects it.
    pub fn new(study_id: impl Into<String>, recorded_fps: f64, frames: Vec<Frame>) -> Result<Self> {
        if !(recorded_fps > 0.0) || !recorded_fps.is_finite() {
            return Err(Error::Load(format!(
                "recorded_fps must be positive, got {recorded_fps}"
            )));
        }
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].truth < w[0].truth {
                return Err(Error::Load(format!(
                    "non-monotone ground truth at row {}",
                    i + 2
                )));
            }
            if std::mem::discriminant(&w[0].obs) != std::mem::discriminant(&w[1].obs) {
                return Err(Error::Load(format!(
                    "mixed observation forms at row {}",
                    i + 2
                )));
            }
        }
        Ok(StudyTrace {
            study_id: study_id.into(),
            recorded_fps,
            frames,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Index of the first ground-truth small-intestine frame.
    pub fn first_si_frame(&self) -> Option<usize> {
        self.frames
            .iter()
            .position(|f| f.truth == Organ::SmallIntestine)
    }

    pub fn is_score_form(&self) -> bool {
        matches!(
            self.frames.first(),
            Some(Frame {
                obs: Observation::Scores(_),
                ..
            })
        )
    }

    pub fn truth(&self) -> impl Iterator<Item = Organ> + '_ {
        self.frames.iter().map(|f| f.truth)
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation<f64>> + '_ {
        self.frames.iter().map(|f| f.obs)
    }
}

/// Sidecar metadata stored next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub study_id: String,
    pub recorded_fps: f64,
}

const LABEL_HEADER: [&str; 3] = ["frame", "truth", "pred"];
const SCORE_HEADER: [&str; 6] = ["frame", "truth", "s0", "s1", "s2", "s3"];

fn parse_organ(field: &str, row: usize, column: &str) -> Result<Organ> {
    field
        .trim()
        .parse::<usize>()
        .ok()
        .and_then(Organ::from_index)
        .ok_or_else(|| {
            Error::Load(format!(
                "row {row}: {column} {field:?} is not an organ 0..=3"
            ))
        })
}

/// Parses the CSV body of a trace. Rows are numbered from 1 in messages.
pub fn read_trace<R: Read>(input: R, meta: TraceMeta) -> Result<StudyTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let score_form = if header.iter().eq(LABEL_HEADER) {
        false
    } else if header.iter().eq(SCORE_HEADER) {
        true
    } else {
        return Err(Error::Load(format!(
            "unexpected header {:?}; want `frame,truth,pred` or `frame,truth,s0,s1,s2,s3`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    };

    let mut frames = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Load(format!("row {row}: {e}")))?;
        let index: usize = record[0].trim().parse().map_err(|_| {
            Error::Load(format!(
                "row {row}: frame {:?} is not an integer",
                &record[0]
            ))
        })?;
        if index != i {
            return Err(Error::Load(format!(
                "row {row}: frame index {index}, expected {i}"
            )));
        }
        let truth = parse_organ(&record[1], row, "truth")?;
        let obs = if score_form {
            let mut s = [0.0f64; NUM_STATES];
            for (k, slot) in s.iter_mut().enumerate() {
                let field = &record[2 + k];
                *slot = field.trim().parse().map_err(|_| {
                    Error::Load(format!("row {row}: s{k} {field:?} is not a number"))
                })?;
                if slot.is_nan() {
                    return Err(Error::Load(format!("row {row}: s{k} is NaN")));
                }
            }
            Observation::Scores(s)
        } else {
            Observation::Label(parse_organ(&record[2], row, "pred")?)
        };
        if let Some(prev) = frames.last().map(|f: &Frame| f.truth) {
            if truth < prev {
                return Err(Error::Load(format!(
                    "non-monotone ground truth at row {row}"
                )));
            }
        }
        frames.push(Frame { truth, obs });
    }
    StudyTrace::new(meta.study_id, meta.recorded_fps, frames)
}

/// Writes the CSV body of a trace.
pub fn write_trace<W: Write>(out: W, trace: &StudyTrace) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    if trace.is_score_form() {
        w.write_record(SCORE_HEADER)?;
    } else {
        w.write_record(LABEL_HEADER)?;
    }
    for (i, f) in trace.frames.iter().enumerate() {
        let mut rec = vec![i.to_string(), f.truth.to_string()];
        match f.obs {
            Observation::Label(o) => rec.push(o.to_string()),
            Observation::Scores(s) => rec.extend(s.iter().map(|x| x.to_string())),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar path for a trace CSV (`study.csv` → `study.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Loads a trace CSV and its sidecar. Without a sidecar the file stem is the
/// study id and the recording rate is 2 fps.
pub fn load_trace(path: impl AsRef<Path>) -> Result<StudyTrace> {
    let path = path.as_ref();
    let meta_path = sidecar_path(path);
    let meta = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(Error::io_at(&meta_path))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Load(format!("{}: {e}", meta_path.display())))?
    } else {
        TraceMeta {
            study_id: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            recorded_fps: DEFAULT_RECORDED_FPS,
        }
    };
    let file = std::fs::File::open(path).map_err(Error::io_at(path))?;
    let trace = read_trace(std::io::BufReader::new(file), meta).map_err(|e| match e {
        Error::Load(msg) => Error::Load(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if trace.first_si_frame().is_none() {
        return Err(Error::Load(format!(
            "{}: no small-intestine frame (row {}); delay is undefined",
            path.display(),
            trace.len()
        )));
    }
    Ok(trace)
}

/// Writes `path` (CSV) and its JSON sidecar.
pub fn save_trace(path: impl AsRef<Path>, trace: &StudyTrace) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(Error::io_at(path))?;
    write_trace(std::io::BufWriter::new(file), trace)?;
    let meta = TraceMeta {
        study_id: trace.study_id.clone(),
        recorded_fps: trace.recorded_fps,
    };
    std::fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Corrupted-frame runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstConfig {
    /// Expected burst starts per 1000 frames.
    pub rate: f64,
    /// Mean burst length in frames (geometric, at least 1).
    pub mean_len: f64,
    /// Observed-label distribution during a burst.
    pub corrupt_emission: Vector<f64>,
}

impl Default for BurstConfig {
    fn default() -> Self {
        BurstConfig {
            rate: 1.0,
            mean_len: 6.0,
            corrupt_emission: [0.05, 0.15, 0.7, 0.1],
        }
    }
}

impl BurstConfig {
    pub fn none() -> Self {
        BurstConfig {
            rate: 0.0,
            ..BurstConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || self.rate > 1000.0 {
            return Err(Error::Parameter(format!(
                "burst rate {} outside [0, 1000]",
                self.rate
            )));
        }
        if !(self.mean_len >= 1.0) || !self.mean_len.is_finite() {
            return Err(Error::Parameter(format!(
                "burst mean_len {} must be >= 1",
                self.mean_len
            )));
        }
        check_row(&self.corrupt_emission, "corrupt_emission")
    }
}

fn check_row(row: &Vector<f64>, what: &str) -> Result<()> {
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Parameter(format!(
            "{what} {row:?} is not a distribution"
        )));
    }
    Ok(())
}

/// Per-organ dwell times (recorded frames), log-normal with the given means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwellModel {
    pub mean_frames: Vector<f64>,
    /// Shape parameter of the log-normal; 0 makes durations deterministic.
    pub sigma: f64,
}

impl Default for DwellModel {
    fn default() -> Self {
        DwellModel {
            mean_frames: [20.0, 1100.0, 600.0, 200.0],
            sigma: 0.4,
        }
    }
}

impl DwellModel {
    pub fn validate(&self) -> Result<()> {
        if self
            .mean_frames
            .iter()
            .any(|m| !(*m > 0.0) || !m.is_finite())
        {
            return Err(Error::Parameter(format!(
                "dwell means {:?} must be positive",
                self.mean_frames
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "dwell sigma {} must be >= 0",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Log-normal draw with the given mean (not median).
fn lognormal_with_mean<R: Rng + ?Sized>(rng: &mut R, mean: f64, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(mean);
    }
    let mu = mean.ln() - sigma * sigma / 2.0;
    let d = LogNormal::new(mu, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(d.sample(rng))
}

/// A synthesized study together with the corrupted runs it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthStudy {
    pub trace: StudyTrace,
    pub bursts: Vec<Range<usize>>,
}

fn row_samplers(emission: &Matrix<f64>) -> Result<Vec<WeightedIndex<f64>>> {
    emission
        .iter()
        .map(|row| {
            WeightedIndex::new(row).map_err(|e| Error::Parameter(format!("emission row: {e}")))
        })
        .collect()
}

/// Burst starts are Bernoulli per frame (a discretized Poisson process);
/// overlapping bursts merge into one run.
fn draw_bursts<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    burst: &BurstConfig,
) -> Result<Vec<Range<usize>>> {
    let mut runs: Vec<Range<usize>> = Vec::new();
    if burst.rate == 0.0 {
        return Ok(runs);
    }
    let p_start = burst.rate / 1000.0;
    let len_dist =
        Geometric::new(1.0 / burst.mean_len).map_err(|e| Error::Parameter(e.to_string()))?;
    for t in 0..n {
        if rng.random::<f64>() < p_start {
            let len = 1 + len_dist.sample(rng) as usize;
            let run = t..(t + len).min(n);
            match runs.last_mut() {
                Some(last) if last.end >= run.start => last.end = last.end.max(run.end),
                _ => runs.push(run),
            }
        }
    }
    Ok(runs)
}

fn synth_from_durations(
    rng: &mut ChaCha8Rng,
    study_id: String,
    recorded_fps: f64,
    durations: [usize; NUM_STATES],
    emission: &Matrix<f64>,
    burst: &BurstConfig,
) -> Result<SynthStudy> {
    let n: usize = durations.iter().sum();
    let truth: Vec<Organ> = durations
        .iter()
        .enumerate()
        .flat_map(|(organ, &d)| std::iter::repeat_n(Organ::ALL[organ], d))
        .collect();
    let bursts = draw_bursts(rng, n, burst)?;
    let clean = row_samplers(emission)?;
    let corrupt = WeightedIndex::new(burst.corrupt_emission)
        .map_err(|e| Error::Parameter(format!("corrupt_emission: {e}")))?;

    let mut frames = Vec::with_capacity(n);
    let mut runs = bursts.iter().peekable();
    for (t, &organ) in truth.iter().enumerate() {
        while runs.peek().is_some_and(|r| r.end <= t) {
            runs.next();
        }
        let in_burst = runs.peek().is_some_and(|r| r.contains(&t));
        let label = if in_burst {
            corrupt.sample(rng)
        } else {
            clean[organ.index()].sample(rng)
        };
        frames.push(Frame {
            truth: organ,
            obs: Observation::Label(Organ::ALL[label]),
        });
    }
    Ok(SynthStudy {
        trace: StudyTrace::new(study_id, recorded_fps, frames)?,
        bursts,
    })
}

/// Synthesizes one study, returning the burst runs as well.
pub fn synth_study_detailed(
    seed: u64,
    dwell: &DwellModel,
    hmm: &HmmParams<f64>,
    burst: &BurstConfig,
) -> Result<SynthStudy> {
    dwell.validate()?;
    burst.validate()?;
    hmm.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut durations = [0usize; NUM_STATES];
    for (d, &mean) in durations.iter_mut().zip(&dwell.mean_frames) {
        *d = (lognormal_with_mean(&mut rng, mean, dwell.sigma)?.round() as usize).max(1);
    }
    synth_from_durations(
        &mut rng,
        format!("synth-{seed}"),
        DEFAULT_RECORDED_FPS,
        durations,
        &hmm.emission,
        burst,
    )
}

/// Synthesizes one label-form study at 2 fps, reproducible from `seed`.
pub fn synth_study(
    seed: u64,
    dwell: &DwellModel,
    hmm: &HmmParams<f64>,
    burst: &BurstConfig,
) -> Result<StudyTrace> {
    synth_study_detailed(seed, dwell, hmm, burst).map(|s| s.trace)
}

/// Parameters of [`calibrated_corpus_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Target mean baseline energy spent before the small intestine.
    pub target_baseline_mj: f64,
    /// Log-normal shape of the per-study pre-small-intestine frame counts.
    pub dispersion: f64,
    pub esophagus_mean_frames: f64,
    pub small_intestine_mean_frames: f64,
    pub colon_mean_frames: f64,
    /// Log-normal shape of the esophagus, small-intestine and colon dwells.
    pub dwell_sigma: f64,
    pub emission: Matrix<f64>,
    pub burst: BurstConfig,
    pub recorded_fps: f64,
    pub power: PowerTable,
}

/// Mean baseline pre-small-intestine energy the corpus is calibrated to.
pub const TARGET_BASELINE_MJ: f64 = 719.934;

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            target_baseline_mj: TARGET_BASELINE_MJ,
            dispersion: 0.5,
            esophagus_mean_frames: 20.0,
            small_intestine_mean_frames: 600.0,
            colon_mean_frames: 200.0,
            dwell_sigma: 0.4,
            emission: uniform_confusion(0.9),
            burst: BurstConfig::default(),
            recorded_fps: DEFAULT_RECORDED_FPS,
            power: PowerTable::default(),
        }
    }
}

impl CorpusConfig {
    /// Mean recorded frames before the small intestine implied by the
    /// energy target: baseline frames cost capture plus transmission.
    pub fn mean_pre_si_frames(&self) -> f64 {
        let per_frame = self.power.capture_uj() + self.power.tx_uj();
        self.target_baseline_mj * 1000.0 / per_frame
    }
}

/// Splits `total` into integer parts proportional to `weights`
/// (largest remainder), each at least `floor`.
fn apportion(weights: &[f64], total: usize, floor: usize) -> Vec<usize> {
    let n = weights.len();
    let spare = total.saturating_sub(floor * n);
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * spare as f64).collect();
    let mut parts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = spare - parts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        parts[i] += 1;
        left -= 1;
    }
    parts.into_iter().map(|p| p + floor).collect()
}

/// Corpus whose mean baseline pre-small-intestine energy equals
/// `cfg.target_baseline_mj` up to integer rounding of the frame total.
pub fn calibrated_corpus_with(
    seed: u64,
    n_studies: usize,
    cfg: &CorpusConfig,
) -> Result<Vec<StudyTrace>> {
    if n_studies == 0 {
        return Err(Error::Parameter("corpus needs at least one study".into()));
    }
    cfg.burst.validate()?;
    for (i, row) in cfg.emission.iter().enumerate() {
        check_row(row, &format!("emission row {i}"))?;
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n_studies)
        .map(|_| lognormal_with_mean(&mut master, 1.0, cfg.dispersion))
        .collect::<Result<_>>()?;
    let total = (cfg.mean_pre_si_frames() * n_studies as f64).round() as usize;
    let pre_si = apportion(&weights, total, 2);
    let seeds: Vec<u64> = (0..n_studies).map(|_| master.random()).collect();

    pre_si
        .par_iter()
        .zip(seeds.par_iter())
        .enumerate()
        .map(|(i, (&pre, &study_seed))| {
            let mut rng = ChaCha8Rng::seed_from_u64(study_seed);
            let esophagus =
                (lognormal_with_mean(&mut rng, cfg.esophagus_mean_frames, cfg.dwell_sigma)?.round()
                    as usize)
                    .clamp(1, pre - 1);
            let si =
                (lognormal_with_mean(&mut rng, cfg.small_intestine_mean_frames, cfg.dwell_sigma)?
                    .round() as usize)
                    .max(1);
            let colon = (lognormal_with_mean(&mut rng, cfg.colon_mean_frames, cfg.dwell_sigma)?
                .round() as usize)
                .max(1);
            let durations = [esophagus, pre - esophagus, si, colon];
            synth_from_durations(
                &mut rng,
                format!("study-{i:03}"),
                cfg.recorded_fps,
                durations,
                &cfg.emission,
                &cfg.burst,
            )
            .map(|s| s.trace)
        })
        .collect()
}

/// [`calibrated_corpus_with`] using the default [`CorpusConfig`].
pub fn calibrated_corpus(seed: u64, n_studies: usize) -> Result<Vec<StudyTrace>> {
    calibrated_corpus_with(seed, n_studies, &CorpusConfig::default())
}

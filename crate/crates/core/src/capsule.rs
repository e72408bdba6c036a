//! Capsule controller replay.
//!
//! Before detection the capsule captures at a reduced rate, classifies each
//! frame, feeds the label to a fixed-point windowed Viterbi decoder and keeps
//! the radio off. Once the detection policy fires it switches to the
//! screening rate and transmits every captured frame, starting with the
//! triggering one. There is no way back.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::StudyTrace;
use crate::decoder::{DecodedPath, WindowedDecoder};
use crate::error::{Error, Result};
use crate::markov::{quantize, to_log, HmmConfig, Organ, QFormat, QuantHmm};
use crate::power::{frame_energy, EnergyBreakdown, FrameActions, PowerTable};

/// When a decoded window counts as having reached the small intestine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionPolicy {
    /// The window is full and every decoded state is small intestine or later.
    #[default]
    FullWindow,
    /// The newest decoded state is small intestine or later.
    LastState,
}

/// Evaluates `policy` on a decoded window of capacity `window_size`.
pub fn policy_check<T>(
    window_path: &DecodedPath<T>,
    policy: DetectionPolicy,
    window_size: usize,
) -> bool {
    match policy {
        DetectionPolicy::FullWindow => {
            window_path.len() == window_size
                && window_path
                    .states
                    .iter()
                    .all(|&s| s >= Organ::SmallIntestine)
        }
        DetectionPolicy::LastState => window_path
            .last()
            .is_some_and(|s| s >= Organ::SmallIntestine),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsuleConfig {
    /// Capture rate before detection.
    pub fps_pre: f64,
    /// Capture rate after detection.
    pub fps_screen: f64,
    pub window_size: usize,
    pub policy: DetectionPolicy,
    pub qformat: QFormat,
    /// Decoder model. Its `qformat`, if given, must match [`Self::qformat`].
    pub hmm: HmmConfig,
    pub power: PowerTable,
}

impl Default for CapsuleConfig {
    fn default() -> Self {
        CapsuleConfig {
            fps_pre: 0.25,
            fps_screen: 2.0,
            window_size: 20,
            policy: DetectionPolicy::FullWindow,
            qformat: QFormat::default(),
            hmm: HmmConfig::default(),
            power: PowerTable::default(),
        }
    }
}

impl CapsuleConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = Error::read_config(path)?;
        let cfg: CapsuleConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 {
            return Err(Error::Config("window_size must be at least 1".into()));
        }
        for (name, fps) in [("fps_pre", self.fps_pre), ("fps_screen", self.fps_screen)] {
            if !(fps > 0.0) || !fps.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {fps}")));
            }
        }
        self.qformat
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(q) = self.hmm.qformat {
            if q != self.qformat {
                return Err(Error::Config(format!(
                    "hmm.qformat {q:?} conflicts with qformat {:?}",
                    self.qformat
                )));
            }
        }
        self.hmm.params()?;
        self.power.validate()
    }

    /// The decoder model in the configured Q format.
    pub fn quant_model(&self) -> Result<QuantHmm> {
        Ok(quantize(&to_log(&self.hmm.params()?), self.qformat))
    }
}

/// Recorded frames between captures when replaying a `recorded_fps`
/// recording at `fps`. Only whole strides are supported.
pub fn stride(recorded_fps: f64, fps: f64) -> Result<usize> {
    let ratio = recorded_fps / fps;
    let rounded = ratio.round();
    if !(rounded >= 1.0) || (ratio - rounded).abs() > 1e-9 * rounded {
        return Err(Error::Config(format!(
            "{fps} fps is not a whole-stride rate of a {recorded_fps} fps recording"
        )));
    }
    Ok(rounded as usize)
}

/// Outcome of replaying one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub study_id: String,
    pub recorded_fps: f64,
    /// Recorded-frame index at which transmission started.
    pub detection_frame: Option<usize>,
    /// Recorded-frame index of the first ground-truth small-intestine frame.
    pub first_si_frame: Option<usize>,
    /// `detection_frame - first_si_frame`; negative means premature.
    pub delay_frames: Option<i64>,
    pub delay_seconds: Option<f64>,
    /// Energy of frames captured strictly before `first_si_frame`.
    pub energy_pre_si: EnergyBreakdown,
    pub energy_total: EnergyBreakdown,
    pub frames_captured: usize,
    pub frames_transmitted: usize,
}

impl SimResult {
    fn new(
        trace: &StudyTrace,
        detection_frame: Option<usize>,
        energy_pre_si: EnergyBreakdown,
        energy_total: EnergyBreakdown,
        frames_captured: usize,
        frames_transmitted: usize,
    ) -> Self {
        let first_si_frame = trace.first_si_frame();
        let delay_frames = match (detection_frame, first_si_frame) {
            (Some(d), Some(s)) => Some(d as i64 - s as i64),
            _ => None,
        };
        SimResult {
            study_id: trace.study_id.clone(),
            recorded_fps: trace.recorded_fps,
            detection_frame,
            first_si_frame,
            delay_frames,
            delay_seconds: delay_frames.map(|d| d as f64 / trace.recorded_fps),
            energy_pre_si,
            energy_total,
            frames_captured,
            frames_transmitted,
        }
    }

    pub fn is_premature(&self) -> bool {
        self.delay_frames.is_some_and(|d| d < 0)
    }
}

/// Signed detection delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    pub frames: i64,
    pub seconds: f64,
}

pub fn delay_metric(result: &SimResult) -> Result<Delay> {
    match (result.delay_frames, result.delay_seconds) {
        (Some(frames), Some(seconds)) => Ok(Delay { frames, seconds }),
        _ => Err(Error::Usage(format!(
            "study {}: delay undefined ({})",
            result.study_id,
            if result.first_si_frame.is_none() {
                "no small-intestine frame"
            } else {
                "no detection"
            }
        ))),
    }
}

/// A configuration bound to its quantized model, reusable across studies.
#[derive(Debug, Clone)]
pub struct Capsule {
    cfg: CapsuleConfig,
    model: QuantHmm,
}

impl Capsule {
    pub fn new(cfg: CapsuleConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.quant_model()?;
        Ok(Capsule { cfg, model })
    }

    pub fn config(&self) -> &CapsuleConfig {
        &self.cfg
    }

    pub fn run(&self, trace: &StudyTrace) -> Result<SimResult> {
        let cfg = &self.cfg;
        let stride_pre = stride(trace.recorded_fps, cfg.fps_pre)?;
        let stride_screen = stride(trace.recorded_fps, cfg.fps_screen)?;
        let first_si = trace.first_si_frame().unwrap_or(usize::MAX);
        let frame_ms = 1000.0 / trace.recorded_fps;
        let mut decoder = WindowedDecoder::fixed(&self.model, cfg.window_size)?;

        let mut detection = None;
        let mut pre_si = EnergyBreakdown::default();
        let mut total = EnergyBreakdown::default();
        let (mut captured, mut transmitted) = (0, 0);
        let mut t = 0;
        while t < trace.len() {
            if detection.is_none() {
                let obs = trace.frames()[t].obs.quantized(self.model.format);
                let path = decoder.push(obs);
                if policy_check(&path, cfg.policy, cfg.window_size) {
                    detection = Some(t);
                }
            }
            // After detection the decoder result no longer changes anything,
            // but the device keeps classifying, so the energy is still charged.
            let sending = detection.is_some();
            let next_stride = if sending { stride_screen } else { stride_pre };
            let e = frame_energy(
                &cfg.power,
                FrameActions::smart(sending),
                next_stride as f64 * frame_ms,
            )?;
            total += e;
            if t < first_si {
                pre_si += e;
            }
            captured += 1;
            transmitted += sending as usize;
            t += next_stride;
        }
        Ok(SimResult::new(
            trace,
            detection,
            pre_si,
            total,
            captured,
            transmitted,
        ))
    }
}

/// Replays `trace` through the smart capsule.
pub fn run_capsule(trace: &StudyTrace, cfg: &CapsuleConfig) -> Result<SimResult> {
    Capsule::new(cfg.clone())?.run(trace)
}

/// Replays `trace` through a capsule that captures and transmits every
/// recorded frame without on-board processing. Its detection frame is 0.
pub fn run_baseline(trace: &StudyTrace, power: &PowerTable) -> Result<SimResult> {
    let period_ms = 1000.0 / trace.recorded_fps;
    let e = frame_energy(power, FrameActions::BASELINE, period_ms)?;
    let mut pre_si = EnergyBreakdown::default();
    let mut total = EnergyBreakdown::default();
    let first_si = trace.first_si_frame().unwrap_or(usize::MAX);
    for t in 0..trace.len() {
        total += e;
        if t < first_si {
            pre_si += e;
        }
    }
    Ok(SimResult::new(
        trace,
        Some(0),
        pre_si,
        total,
        trace.len(),
        trace.len(),
    ))
}

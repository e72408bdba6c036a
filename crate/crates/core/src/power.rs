//! Per-event energy model of the capsule.
//!
//! Powers are in mW, durations in ms and energies in μJ (mW × ms = μJ).
//! The stored per-event energies are authoritative; powers and durations
//! back the consistency check and the recompute mode.

use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance between `P × t` and a stored energy.
pub const CONSISTENCY_TOLERANCE: f64 = 0.005;

/// Bytes in one packed 320×320 frame.
pub const FRAME_BYTES: f64 = 102_400.0;

/// Link rate that moves one frame in 50 ms ("2 Mi" read as 2 × 1024 kB/s).
pub const LINK_RATE_BYTES_PER_S: f64 = 2_048_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapturePower {
    pub sensor_mw: f64,
    pub leds_mw: f64,
    pub mcu_mw: f64,
    pub duration_ms: f64,
    pub sensor_uj: f64,
    pub leds_uj: f64,
    pub mcu_uj: f64,
}

impl Default for CapturePower {
    fn default() -> Self {
        CapturePower {
            sensor_mw: 8.51,
            leds_mw: 14.78,
            mcu_mw: 7.23,
            duration_ms: 12.79,
            sensor_uj: 108.93,
            leds_uj: 189.15,
            mcu_uj: 92.56,
        }
    }
}

/// Power, duration and stored energy of one event type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPower {
    pub power_mw: f64,
    pub duration_ms: f64,
    pub energy_uj: f64,
}

impl EventPower {
    fn dnn() -> Self {
        EventPower {
            power_mw: 16.63,
            duration_ms: 0.31,
            energy_uj: 5.14,
        }
    }

    fn hmm() -> Self {
        EventPower {
            power_mw: 9.94,
            duration_ms: 0.02,
            energy_uj: 0.17,
        }
    }

    fn tx() -> Self {
        EventPower {
            power_mw: 5.0,
            duration_ms: 50.0,
            energy_uj: 250.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdlePower {
    pub mcu_mw: f64,
    pub sensor_mw: f64,
}

impl Default for IdlePower {
    fn default() -> Self {
        IdlePower {
            mcu_mw: 5.85,
            sensor_mw: 3.0,
        }
    }
}

/// Where per-event energies come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// Use the stored energy of each event.
    #[default]
    Stored,
    /// Recompute every event energy as power × duration.
    Recompute,
}

/// Energy constants of the capsule. The defaults are the measured values of
/// the reference demonstrator, so an empty JSON object reproduces them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerTable {
    pub capture: CapturePower,
    pub dnn: EventPower,
    pub hmm: EventPower,
    pub idle: IdlePower,
    pub tx: EventPower,
    pub include_idle: bool,
    pub mode: EnergyMode,
}

impl Default for PowerTable {
    fn default() -> Self {
        PowerTable {
            capture: CapturePower::default(),
            dnn: EventPower::dnn(),
            hmm: EventPower::hmm(),
            idle: IdlePower::default(),
            tx: EventPower::tx(),
            include_idle: false,
            mode: EnergyMode::Stored,
        }
    }
}

fn consistent(power_mw: f64, duration_ms: f64, energy_uj: f64) -> bool {
    ((power_mw * duration_ms - energy_uj) / energy_uj).abs() <= CONSISTENCY_TOLERANCE
}

impl PowerTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = Error::read_config(path)?;
        let t: PowerTable = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        t.validate()?;
        Ok(t)
    }

    /// Positivity of every constant and, in stored mode, agreement of
    /// `P × t` with the stored energy. The HMM row is exempt: its measured
    /// triple does not multiply out (9.94 mW × 0.02 ms ≠ 0.17 μJ).
    pub fn validate(&self) -> Result<()> {
        let c = &self.capture;
        let values = [
            ("capture.sensor_mw", c.sensor_mw),
            ("capture.leds_mw", c.leds_mw),
            ("capture.mcu_mw", c.mcu_mw),
            ("capture.duration_ms", c.duration_ms),
            ("capture.sensor_uj", c.sensor_uj),
            ("capture.leds_uj", c.leds_uj),
            ("capture.mcu_uj", c.mcu_uj),
            ("dnn.power_mw", self.dnn.power_mw),
            ("dnn.duration_ms", self.dnn.duration_ms),
            ("dnn.energy_uj", self.dnn.energy_uj),
            ("hmm.power_mw", self.hmm.power_mw),
            ("hmm.duration_ms", self.hmm.duration_ms),
            ("hmm.energy_uj", self.hmm.energy_uj),
            ("idle.mcu_mw", self.idle.mcu_mw),
            ("idle.sensor_mw", self.idle.sensor_mw),
            ("tx.power_mw", self.tx.power_mw),
            ("tx.duration_ms", self.tx.duration_ms),
            ("tx.energy_uj", self.tx.energy_uj),
        ];
        for (name, v) in values {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.mode == EnergyMode::Stored {
            let rows = [
                ("capture sensor", c.sensor_mw, c.duration_ms, c.sensor_uj),
                ("capture LEDs", c.leds_mw, c.duration_ms, c.leds_uj),
                ("capture MCU", c.mcu_mw, c.duration_ms, c.mcu_uj),
                (
                    "dnn",
                    self.dnn.power_mw,
                    self.dnn.duration_ms,
                    self.dnn.energy_uj,
                ),
                (
                    "tx",
                    self.tx.power_mw,
                    self.tx.duration_ms,
                    self.tx.energy_uj,
                ),
            ];
            for (name, p, t, e) in rows {
                if !consistent(p, t, e) {
                    return Err(Error::Config(format!(
                        "{name}: {p} mW x {t} ms = {} uJ disagrees with stored {e} uJ",
                        p * t
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn capture_uj(&self) -> f64 {
        energy_capture(self)
    }

    pub fn dnn_uj(&self) -> f64 {
        self.event_uj(&self.dnn)
    }

    pub fn hmm_uj(&self) -> f64 {
        self.event_uj(&self.hmm)
    }

    pub fn tx_uj(&self) -> f64 {
        self.event_uj(&self.tx)
    }

    /// On-board processing per frame (inference plus decoding).
    pub fn processing_uj(&self) -> f64 {
        self.dnn_uj() + self.hmm_uj()
    }

    fn event_uj(&self, e: &EventPower) -> f64 {
        match self.mode {
            EnergyMode::Stored => e.energy_uj,
            EnergyMode::Recompute => e.power_mw * e.duration_ms,
        }
    }

    pub fn idle_mw(&self) -> f64 {
        self.idle.mcu_mw + self.idle.sensor_mw
    }
}

/// Energy of one image capture (sensor, LEDs and MCU).
pub fn energy_capture(t: &PowerTable) -> f64 {
    let c = &t.capture;
    match t.mode {
        EnergyMode::Stored => c.sensor_uj + c.leds_uj + c.mcu_uj,
        EnergyMode::Recompute => (c.sensor_mw + c.leds_mw + c.mcu_mw) * c.duration_ms,
    }
}

/// Link time and energy for sending `bytes` at `rate_bytes_per_s` while
/// drawing `power_mw`. Returns `(duration_ms, energy_uj)`.
pub fn energy_tx_formula(bytes: f64, rate_bytes_per_s: f64, power_mw: f64) -> (f64, f64) {
    let duration_ms = bytes / rate_bytes_per_s * 1000.0;
    (duration_ms, power_mw * duration_ms)
}

/// What the capsule did with one captured frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameActions {
    pub captured: bool,
    pub inferred: bool,
    pub decoded: bool,
    pub transmitted: bool,
}

impl FrameActions {
    pub const BASELINE: FrameActions = FrameActions {
        captured: true,
        inferred: false,
        decoded: false,
        transmitted: true,
    };

    pub const fn smart(transmitted: bool) -> Self {
        FrameActions {
            captured: true,
            inferred: true,
            decoded: true,
            transmitted,
        }
    }
}

/// Accumulated energy per task, in μJ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub capture_uj: f64,
    pub dnn_uj: f64,
    pub hmm_uj: f64,
    pub tx_uj: f64,
    pub idle_uj: f64,
    pub total_uj: f64,
}

impl EnergyBreakdown {
    pub fn total_mj(&self) -> f64 {
        self.total_uj / 1000.0
    }

    pub fn component_sum(&self) -> f64 {
        self.capture_uj + self.dnn_uj + self.hmm_uj + self.tx_uj + self.idle_uj
    }
}

impl AddAssign for EnergyBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.capture_uj += o.capture_uj;
        self.dnn_uj += o.dnn_uj;
        self.hmm_uj += o.hmm_uj;
        self.tx_uj += o.tx_uj;
        self.idle_uj += o.idle_uj;
        self.total_uj += o.total_uj;
    }
}

impl Add for EnergyBreakdown {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

/// Energy of one frame period. With `include_idle`, the time of the period
/// not spent in active events is charged at idle power.
pub fn frame_energy(
    t: &PowerTable,
    actions: FrameActions,
    period_ms: f64,
) -> Result<EnergyBreakdown> {
    let mut e = EnergyBreakdown::default();
    let mut active_ms = 0.0;
    if actions.captured {
        e.capture_uj = energy_capture(t);
        active_ms += t.capture.duration_ms;
    }
    if actions.inferred {
        e.dnn_uj = t.dnn_uj();
        active_ms += t.dnn.duration_ms;
    }
    if actions.decoded {
        e.hmm_uj = t.hmm_uj();
        active_ms += t.hmm.duration_ms;
    }
    if actions.transmitted {
        e.tx_uj = t.tx_uj();
        active_ms += t.tx.duration_ms;
    }
    if period_ms < active_ms {
        return Err(Error::Timing {
            period_ms,
            active_ms,
        });
    }
    if t.include_idle {
        e.idle_uj = t.idle_mw() * (period_ms - active_ms);
    }
    e.total_uj = e.component_sum();
    Ok(e)
}

//! Four-organ left-to-right hidden Markov model.
//!
//! The model exists in three domains: probabilities ([`HmmParams`]), natural
//! logs ([`LogHmm`] over a float scalar) and fixed-point logs ([`QuantHmm`]).
//! Impossible events are `-inf` in the float log domain and the most
//! negative word in the fixed-point domain.

mod fixed;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use fixed::{quantize_value, QFormat};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NUM_STATES: usize = 4;

/// Gastrointestinal organ, in traversal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Organ {
    Esophagus = 0,
    Stomach = 1,
    SmallIntestine = 2,
    Colon = 3,
}

impl Organ {
    pub const ALL: [Organ; NUM_STATES] = [
        Organ::Esophagus,
        Organ::Stomach,
        Organ::SmallIntestine,
        Organ::Colon,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Organ> {
        Organ::ALL.get(i).copied()
    }
}

impl From<Organ> for u8 {
    fn from(o: Organ) -> u8 {
        o as u8
    }
}

impl TryFrom<u8> for Organ {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Organ::from_index(v as usize).ok_or_else(|| format!("organ index {v} out of range 0..=3"))
    }
}

impl fmt::Display for Organ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

pub type Vector<T> = [T; NUM_STATES];
pub type Matrix<T> = [[T; NUM_STATES]; NUM_STATES];

/// Probability-domain model. `emission[i][j]` is the probability of the
/// classifier reporting organ `j` while the capsule is in organ `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmParams<F> {
    pub initial: Vector<F>,
    pub transition: Matrix<F>,
    pub emission: Matrix<F>,
}

const ROW_TOLERANCE: f64 = 1e-9;

fn check_distribution<F: Real>(row: &Vector<F>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        let p = p.to_f64_lossy();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!(
                "{what}: entry {p} outside [0, 1]"
            )));
        }
        sum += p;
    }
    let tol = ROW_TOLERANCE.max(16.0 * F::epsilon().to_f64_lossy());
    if (sum - 1.0).abs() > tol {
        return Err(Error::Parameter(format!(
            "{what}: sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl<F: Real> HmmParams<F> {
    pub fn new(initial: Vector<F>, transition: Matrix<F>, emission: Matrix<F>) -> Result<Self> {
        let h = HmmParams {
            initial,
            transition,
            emission,
        };
        h.validate()?;
        Ok(h)
    }

    /// Checks stochasticity and the left-to-right sparsity of `transition`.
    pub fn validate(&self) -> Result<()> {
        check_distribution(&self.initial, "initial")?;
        for (i, row) in self.transition.iter().enumerate() {
            check_distribution(row, &format!("transition row {i}"))?;
            for (j, &p) in row.iter().enumerate() {
                if (j < i || j > i + 1) && p != F::zero() {
                    return Err(Error::Parameter(format!(
                        "transition[{i}][{j}] = {p} breaks the left-to-right structure"
                    )));
                }
            }
        }
        for (i, row) in self.emission.iter().enumerate() {
            check_distribution(row, &format!("emission row {i}"))?;
        }
        Ok(())
    }

    pub fn cast<G: Real>(&self) -> HmmParams<G> {
        let c = |x: F| G::from_f64_lossy(x.to_f64_lossy());
        HmmParams {
            initial: self.initial.map(c),
            transition: self.transition.map(|r| r.map(c)),
            emission: self.emission.map(|r| r.map(c)),
        }
    }
}

/// Log-domain model over any metric scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHmm<T> {
    pub initial: Vector<T>,
    pub transition: Matrix<T>,
    pub emission: Matrix<T>,
}

impl<T: Copy> LogHmm<T> {
    pub fn map<U>(&self, mut f: impl FnMut(T) -> U) -> LogHmm<U> {
        LogHmm {
            initial: self.initial.map(&mut f),
            transition: self.transition.map(|r| r.map(&mut f)),
            emission: self.emission.map(|r| r.map(&mut f)),
        }
    }

    pub fn with_initial(mut self, initial: Vector<T>) -> Self {
        self.initial = initial;
        self
    }
}

/// Entry-wise natural log; zero probabilities become `-inf`.
pub fn to_log<F: Real>(p: &HmmParams<F>) -> LogHmm<F> {
    let ln = |x: F| {
        if x == F::zero() {
            F::neg_infinity()
        } else {
            x.ln()
        }
    };
    LogHmm {
        initial: p.initial.map(ln),
        transition: p.transition.map(|r| r.map(ln)),
        emission: p.emission.map(|r| r.map(ln)),
    }
}

/// Fixed-point log-domain model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantHmm {
    pub format: QFormat,
    pub table: LogHmm<i64>,
}

impl QuantHmm {
    pub fn dequantize(&self) -> LogHmm<f64> {
        let q = self.format;
        self.table.map(|raw| q.dequantize(raw))
    }
}

/// Entry-wise [`quantize_value`]; `-inf` becomes the sentinel.
pub fn quantize<F: Real>(h: &LogHmm<F>, q: QFormat) -> QuantHmm {
    QuantHmm {
        format: q,
        table: h.map(|x| q.quantize(x.to_f64_lossy())),
    }
}

/// Left-to-right transition matrix from mean dwell times (in frames) of the
/// first three organs. The colon is absorbing.
pub fn from_dwell(mean_dwell_frames: [f64; 3]) -> Result<Matrix<f64>> {
    let mut t = [[0.0; NUM_STATES]; NUM_STATES];
    for (i, &d) in mean_dwell_frames.iter().enumerate() {
        if !(d >= 1.0) || !d.is_finite() {
            return Err(Error::Parameter(format!(
                "mean dwell of organ {i} is {d}; must be a finite value >= 1 frame"
            )));
        }
        t[i][i + 1] = 1.0 / d;
        t[i][i] = 1.0 - t[i][i + 1];
    }
    t[3][3] = 1.0;
    Ok(t)
}

/// Emission matrix with `diag` on the diagonal and the rest spread evenly.
pub fn uniform_confusion(diag: f64) -> Matrix<f64> {
    let off = (1.0 - diag) / (NUM_STATES - 1) as f64;
    let mut m = [[off; NUM_STATES]; NUM_STATES];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = diag;
    }
    m
}

pub const DEFAULT_DWELL_FRAMES: [f64; 3] = [10.0, 200.0, 1000.0];
pub const DEFAULT_EMISSION_DIAGONAL: f64 = 0.9;

/// JSON model description.
///
/// `transition` and `dwell_frames` are alternatives; when both are absent
/// the transitions come from [`DEFAULT_DWELL_FRAMES`]. Missing `initial`
/// means uniform, missing `emission` means [`uniform_confusion`] with
/// [`DEFAULT_EMISSION_DIAGONAL`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vector<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Matrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Matrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_frames: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qformat: Option<QFormat>,
}

impl HmmConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = Error::read_config(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<HmmParams<f64>> {
        let transition = match (self.transition, self.dwell_frames) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `transition` or `dwell_frames`, not both".into(),
                ))
            }
            (Some(t), None) => t,
            (None, Some(d)) => from_dwell(d)?,
            (None, None) => from_dwell(DEFAULT_DWELL_FRAMES)?,
        };
        let initial = self.initial.unwrap_or([0.25; NUM_STATES]);
        let emission = self
            .emission
            .unwrap_or_else(|| uniform_confusion(DEFAULT_EMISSION_DIAGONAL));
        HmmParams::new(initial, transition, emission).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn format(&self) -> Result<QFormat> {
        let q = self.qformat.unwrap_or_default();
        q.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> HmmParams<f64> {
        HmmConfig::default().params().unwrap()
    }

    #[test]
    fn log_reference_values() {
        let mut p = default_params();
        p.initial = [0.5, 0.5, 0.0, 0.0];
        let l = to_log(&p);
        assert!((l.initial[0] - (-std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(l.initial[2], f64::NEG_INFINITY);
        assert_eq!(l.transition[3][3], 0.0);
    }

    #[test]
    fn exp_of_log_recovers_probabilities() {
        let p = default_params();
        let l = to_log(&p);
        for i in 0..4 {
            for j in 0..4 {
                let src = p.emission[i][j];
                assert!((l.emission[i][j].exp() - src).abs() < 1e-12);
                if l.transition[i][j].is_finite() {
                    assert!((l.transition[i][j].exp() - p.transition[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_initial_quantizes_to_reference() {
        let p = default_params();
        let q = quantize(&to_log(&p), QFormat::default());
        // ln(0.25) * 65536 = -90852.18...
        assert_eq!(q.table.initial, [-90852; 4]);
    }

    #[test]
    fn one_hot_emission_quantizes_to_sentinel() {
        let mut p = default_params();
        p.emission = uniform_confusion(1.0);
        let fmt = QFormat::default();
        let q = quantize(&to_log(&p), fmt);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0 } else { fmt.neg_inf() };
                assert_eq!(q.table.emission[i][j], want);
            }
        }
    }

    #[test]
    fn quantization_error_within_half_lsb() {
        let p = default_params();
        let l = to_log(&p);
        let fmt = QFormat::default();
        let back = quantize(&l, fmt).dequantize();
        let bound = 2f64.powi(-17);
        let pairs = l
            .emission
            .iter()
            .flatten()
            .zip(back.emission.iter().flatten());
        for (a, b) in pairs.chain(
            l.transition
                .iter()
                .flatten()
                .zip(back.transition.iter().flatten()),
        ) {
            if a.is_finite() {
                assert!((a - b).abs() <= bound, "{a} vs {b}");
            } else {
                assert_eq!(*b, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn sparsity_identical_across_domains() {
        let p = default_params();
        let l = to_log(&p);
        let q = quantize(&l, QFormat::default());
        for i in 0..4 {
            for j in 0..4 {
                let zero = p.transition[i][j] == 0.0;
                assert_eq!(zero, l.transition[i][j] == f64::NEG_INFINITY);
                assert_eq!(zero, q.table.transition[i][j] == q.format.neg_inf());
            }
        }
    }

    #[test]
    fn dwell_examples() {
        let t = from_dwell([1.0, 1.0, 1.0]).unwrap();
        for i in 0..3 {
            assert_eq!(t[i][i], 0.0);
            assert_eq!(t[i][i + 1], 1.0);
        }
        let t = from_dwell([100.0, 1000.0, 5000.0]).unwrap();
        assert!((t[1][1] - 0.999).abs() < 1e-15);
        assert!((t[1][2] - 0.001).abs() < 1e-15);
        assert_eq!(t[3][3], 1.0);
        assert!(matches!(
            from_dwell([0.5, 2.0, 2.0]),
            Err(Error::Parameter(_))
        ));
        assert!(from_dwell([f64::NAN, 2.0, 2.0]).is_err());
    }

    #[test]
    fn validation_catches_backward_transition() {
        let mut p = default_params();
        p.transition[2] = [0.1, 0.0, 0.9, 0.0];
        assert!(matches!(p.validate(), Err(Error::Parameter(_))));
        let mut p = default_params();
        p.transition[1] = [0.0, 0.5, 0.25, 0.25];
        assert!(p.validate().is_err());
        let mut p = default_params();
        p.emission[0][0] += 1e-6;
        assert!(p.validate().is_err());
    }

    #[test]
    fn config_rejects_both_transition_sources() {
        let cfg: HmmConfig = serde_json::from_str(
            r#"{"transition": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "dwell_frames": [2,2,2]}"#,
        )
        .unwrap();
        assert!(matches!(cfg.params(), Err(Error::Config(_))));
    }

    #[test]
    fn config_with_dwell_and_format() {
        let cfg: HmmConfig = serde_json::from_str(
            r#"{"dwell_frames": [100, 1000, 5000], "qformat": {"word_bits": 24, "frac_bits": 10}}"#,
        )
        .unwrap();
        let p = cfg.params().unwrap();
        assert!((p.transition[1][2] - 0.001).abs() < 1e-15);
        assert_eq!(cfg.format().unwrap(), QFormat::new(24, 10).unwrap());
    }

    #[test]
    fn organ_order() {
        assert!(Organ::Esophagus < Organ::Stomach);
        assert!(Organ::SmallIntestine < Organ::Colon);
        assert_eq!(Organ::from_index(2), Some(Organ::SmallIntestine));
        assert_eq!(Organ::from_index(4), None);
    }
}

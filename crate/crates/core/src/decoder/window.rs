//! Sliding-window decoding for streaming detection.

use std::collections::VecDeque;

use super::{max_sum, DecodedPath, Observation};
use crate::error::{Error, Result};
use crate::markov::{LogHmm, QuantHmm, NUM_STATES};
use crate::scalar::{FloatArith, MaxPlus, Real};

/// Re-decodes the most recent `window` observations on every push.
///
/// Each window starts from a uniform initial distribution regardless of
/// what earlier windows decoded, so a window's result depends only on the
/// observations it holds.
#[derive(Debug, Clone)]
pub struct WindowedDecoder<A: MaxPlus> {
    arith: A,
    model: LogHmm<A::Value>,
    window: usize,
    buffer: VecDeque<Observation<A::Value>>,
}

impl<A: MaxPlus> WindowedDecoder<A> {
    /// `model.initial` is replaced by the uniform distribution.
    pub fn with_arith(arith: A, model: LogHmm<A::Value>, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Parameter("window size must be at least 1".into()));
        }
        let uniform = arith.lift_log((1.0 / NUM_STATES as f64).ln());
        Ok(WindowedDecoder {
            model: model.with_initial([uniform; NUM_STATES]),
            arith,
            window,
            buffer: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.window
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
    }

    /// The model actually used per window (uniform initial).
    pub fn model(&self) -> &LogHmm<A::Value> {
        &self.model
    }

    /// Appends `o`, evicting the oldest observation when full, and decodes
    /// the buffered window from scratch.
    pub fn push(&mut self, o: Observation<A::Value>) -> DecodedPath<A::Value> {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(o);
        max_sum(&self.arith, &self.model, self.buffer.make_contiguous())
            .expect("buffer is non-empty after push")
    }
}

impl WindowedDecoder<crate::markov::QFormat> {
    pub fn fixed(model: &QuantHmm, window: usize) -> Result<Self> {
        WindowedDecoder::with_arith(model.format, model.table, window)
    }
}

impl<F: Real> WindowedDecoder<FloatArith<F>> {
    pub fn float(model: &LogHmm<F>, window: usize) -> Result<Self> {
        WindowedDecoder::with_arith(FloatArith::new(), *model, window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::viterbi_fixed;
    use crate::markov::{quantize, to_log, HmmConfig, Organ, QFormat};

    fn quant() -> QuantHmm {
        quantize(
            &to_log(&HmmConfig::default().params().unwrap()),
            QFormat::default(),
        )
    }

    #[test]
    fn window_of_one_is_single_step_argmax() {
        let q = quant();
        let mut d = WindowedDecoder::fixed(&q, 1).unwrap();
        for label in [0, 1, 1, 2, 1, 3, 0] {
            let path = d.push(Observation::Label(Organ::ALL[label]));
            assert_eq!(path.states, vec![Organ::ALL[label]]);
        }
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn zero_window_rejected() {
        assert!(matches!(
            WindowedDecoder::fixed(&quant(), 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn buffer_never_exceeds_window() {
        let q = quant();
        let mut d = WindowedDecoder::fixed(&q, 5).unwrap();
        for i in 0..12 {
            let path = d.push(Observation::Label(Organ::ALL[i % 4]));
            assert_eq!(path.len(), (i + 1).min(5));
            assert!(d.len() <= 5);
        }
        assert!(d.is_full());
    }

    #[test]
    fn full_window_matches_batch_decode() {
        let q = quant();
        let uniform = q.format.quantize(0.25f64.ln());
        let batch_model = QuantHmm {
            format: q.format,
            table: q.table.with_initial([uniform; 4]),
        };
        let obs: Vec<Observation<i64>> = (0..80)
            .map(|i| Observation::Label(Organ::ALL[(i / 20 + (i % 7 == 0) as usize) % 4]))
            .collect();
        let mut d = WindowedDecoder::fixed(&q, 50).unwrap();
        let mut last = None;
        for o in &obs {
            last = Some(d.push(*o));
        }
        let expect = viterbi_fixed(&batch_model, &obs[30..]).unwrap();
        assert_eq!(last.unwrap(), expect);
    }
}

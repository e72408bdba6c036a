//! Viterbi decoding over the four-organ model.
//!
//! One max-sum recurrence ([`max_sum`]) serves every arithmetic: IEEE floats
//! for the reference decoder and saturating Q-format words for the
//! deployment decoder. Ties always resolve toward the lower organ index, both
//! when choosing a predecessor and when choosing the final state.

mod brute;
mod window;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_decode, path_score, MAX_BRUTE_FORCE_LEN};
pub use window::WindowedDecoder;

use crate::error::{Error, Result};
use crate::markov::{LogHmm, Organ, QFormat, QuantHmm, NUM_STATES};
use crate::scalar::{FloatArith, MaxPlus, Real};

/// One classifier output: a discrete label or per-organ log-likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation<T> {
    Label(Organ),
    Scores([T; NUM_STATES]),
}

impl<T: Copy> Observation<T> {
    pub fn map_scores<U>(self, f: impl FnMut(T) -> U) -> Observation<U> {
        match self {
            Observation::Label(o) => Observation::Label(o),
            Observation::Scores(s) => Observation::Scores(s.map(f)),
        }
    }

    pub fn label(self) -> Option<Organ> {
        match self {
            Observation::Label(o) => Some(o),
            Observation::Scores(_) => None,
        }
    }

    #[inline]
    pub(crate) fn emission(&self, model: &LogHmm<T>, state: usize) -> T {
        match self {
            Observation::Label(o) => model.emission[state][o.index()],
            Observation::Scores(s) => s[state],
        }
    }
}

impl<F: Real> Observation<F> {
    /// Converts score-form observations into the given Q format.
    pub fn quantized(self, q: QFormat) -> Observation<i64> {
        self.map_scores(|x| q.quantize(x.to_f64_lossy()))
    }
}

/// Most likely state sequence and its accumulated log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath<T> {
    pub states: Vec<Organ>,
    pub metric: T,
}

impl<T> DecodedPath<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<Organ> {
        self.states.last().copied()
    }
}

/// Max-sum dynamic program with backtracking. Never fails on infeasible
/// input; the returned metric is then the arithmetic's `neg_inf`.
pub fn max_sum<A: MaxPlus>(
    arith: &A,
    model: &LogHmm<A::Value>,
    obs: &[Observation<A::Value>],
) -> Result<DecodedPath<A::Value>> {
    let Some(first) = obs.first() else {
        return Err(Error::Usage(
            "cannot decode an empty observation sequence".into(),
        ));
    };
    let mut delta: [A::Value; NUM_STATES] =
        std::array::from_fn(|s| arith.add(model.initial[s], first.emission(model, s)));
    let mut back = Vec::with_capacity(obs.len().saturating_sub(1));

    for o in &obs[1..] {
        let mut next = [arith.neg_inf(); NUM_STATES];
        let mut ptr = [0u8; NUM_STATES];
        for s in 0..NUM_STATES {
            let mut best = arith.add(delta[0], model.transition[0][s]);
            let mut arg = 0;
            for (p, &d) in delta.iter().enumerate().skip(1) {
                let cand = arith.add(d, model.transition[p][s]);
                if cand > best {
                    best = cand;
                    arg = p;
                }
            }
            next[s] = arith.add(best, o.emission(model, s));
            ptr[s] = arg as u8;
        }
        delta = next;
        back.push(ptr);
    }

    let mut last = 0;
    for s in 1..NUM_STATES {
        if delta[s] > delta[last] {
            last = s;
        }
    }
    let metric = delta[last];
    let mut states = vec![Organ::Esophagus; obs.len()];
    let mut cur = last;
    states[obs.len() - 1] = Organ::ALL[cur];
    for (t, ptr) in back.iter().enumerate().rev() {
        cur = ptr[cur] as usize;
        states[t] = Organ::ALL[cur];
    }
    Ok(DecodedPath { states, metric })
}

/// Reference decoder in floating point.
///
/// Fails with [`Error::NoFeasiblePath`] when every state sequence has zero
/// probability.
pub fn viterbi_float<F: Real>(model: &LogHmm<F>, obs: &[Observation<F>]) -> Result<DecodedPath<F>> {
    let arith = FloatArith::<F>::new();
    let path = max_sum(&arith, model, obs)?;
    if arith.is_neg_inf(path.metric) {
        return Err(Error::NoFeasiblePath);
    }
    Ok(path)
}

/// Deployment decoder on saturating fixed-point words.
///
/// Score-form observations must already be in `model.format`. An infeasible
/// sequence is not an error here: the metric saturates at the sentinel and
/// the path follows the tie-break rule, as it would on the device.
pub fn viterbi_fixed(model: &QuantHmm, obs: &[Observation<i64>]) -> Result<DecodedPath<i64>> {
    max_sum(&model.format, &model.table, obs)
}

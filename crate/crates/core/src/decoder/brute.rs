//! Exhaustive decoding, used as an independent oracle for the recurrence.

use std::cmp::Ordering;

use super::{DecodedPath, Observation};
use crate::error::{Error, Result};
use crate::markov::{LogHmm, Organ, NUM_STATES};
use crate::scalar::Real;

/// Longest sequence [`brute_force_decode`] accepts (4^12 paths).
pub const MAX_BRUTE_FORCE_LEN: usize = 12;

/// Log-likelihood of one state sequence, summed left to right as
/// `init + emis_0 + trans_01 + emis_1 + ...`.
pub fn path_score<F: Real>(model: &LogHmm<F>, obs: &[Observation<F>], states: &[Organ]) -> F {
    assert_eq!(obs.len(), states.len(), "one state per observation");
    let mut acc = F::zero();
    for (t, (o, s)) in obs.iter().zip(states).enumerate() {
        let s = s.index();
        acc = if t == 0 {
            model.initial[s]
        } else {
            acc + model.transition[states[t - 1].index()][s]
        };
        acc = acc + o.emission(model, s);
    }
    acc
}

/// Later positions dominate, matching how backtracking resolves ties.
fn tie_order(a: &[usize], b: &[usize]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Enumerates every state sequence and returns the most likely one.
///
/// Among equally likely sequences the one that is smallest when compared
/// from the last position backwards wins.
pub fn brute_force_decode<F: Real>(
    model: &LogHmm<F>,
    obs: &[Observation<F>],
) -> Result<DecodedPath<F>> {
    if obs.is_empty() {
        return Err(Error::Usage(
            "cannot decode an empty observation sequence".into(),
        ));
    }
    if obs.len() > MAX_BRUTE_FORCE_LEN {
        return Err(Error::Usage(format!(
            "brute force refused for {} observations (limit {MAX_BRUTE_FORCE_LEN})",
            obs.len()
        )));
    }

    struct Search<'a, F> {
        model: &'a LogHmm<F>,
        obs: &'a [Observation<F>],
        current: Vec<usize>,
        best: Option<(F, Vec<usize>)>,
    }

    impl<F: Real> Search<'_, F> {
        fn visit(&mut self, prefix: F) {
            let t = self.current.len();
            if t == self.obs.len() {
                let better = match &self.best {
                    None => true,
                    Some((score, path)) => {
                        prefix > *score
                            || (prefix == *score
                                && tie_order(&self.current, path) == Ordering::Less)
                    }
                };
                if better {
                    self.best = Some((prefix, self.current.clone()));
                }
                return;
            }
            for s in 0..NUM_STATES {
                let mut acc = match self.current.last() {
                    None => self.model.initial[s],
                    Some(&p) => prefix + self.model.transition[p][s],
                };
                acc = acc + self.obs[t].emission(self.model, s);
                self.current.push(s);
                self.visit(acc);
                self.current.pop();
            }
        }
    }

    let mut search = Search {
        model,
        obs,
        current: Vec::with_capacity(obs.len()),
        best: None,
    };
    search.visit(F::zero());
    let (metric, path) = search.best.expect("at least one path enumerated");
    if metric == F::neg_infinity() || metric.is_nan() {
        return Err(Error::NoFeasiblePath);
    }
    Ok(DecodedPath {
        states: path.into_iter().map(|i| Organ::ALL[i]).collect(),
        metric,
    })
}

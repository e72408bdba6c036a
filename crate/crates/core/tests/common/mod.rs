#![allow(dead_code)]

use rand::Rng;
use smartcap::classifier::{Frame, StudyTrace};
use smartcap::decoder::Observation;
use smartcap::markov::{LogHmm, Organ};

/// Random distribution over 4 outcomes; each entry is zeroed with
/// probability `p_zero` (at least one entry stays positive).
pub fn random_row<R: Rng>(rng: &mut R, p_zero: f64) -> [f64; 4] {
    loop {
        let mut row = [0.0; 4];
        for x in row.iter_mut() {
            if !rng.random_bool(p_zero) {
                *x = -rng.random::<f64>().max(1e-12).ln();
            }
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            return row.map(|x| x / s);
        }
    }
}

fn ln(p: f64) -> f64 {
    if p == 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Random log-domain model. Half of the models are left-to-right.
pub fn random_log_model<R: Rng>(rng: &mut R, p_zero: f64) -> LogHmm<f64> {
    let left_to_right = rng.random_bool(0.5);
    let initial = random_row(rng, p_zero);
    let mut transition = [[0.0; 4]; 4];
    for (i, row) in transition.iter_mut().enumerate() {
        if left_to_right {
            if i == 3 {
                row[3] = 1.0;
            } else {
                let stay = rng.random_range(0.05..0.999);
                row[i] = stay;
                row[i + 1] = 1.0 - stay;
            }
        } else {
            *row = random_row(rng, p_zero);
        }
    }
    let emission = [0; 4].map(|_| random_row(rng, p_zero));
    LogHmm {
        initial: initial.map(ln),
        transition: transition.map(|r| r.map(ln)),
        emission: emission.map(|r| r.map(ln)),
    }
}

pub fn random_observations<R: Rng>(rng: &mut R, len: usize, scores: bool) -> Vec<Observation<f64>> {
    (0..len)
        .map(|_| {
            if scores {
                Observation::Scores([0; 4].map(|_| -rng.random_range(0.0..8.0)))
            } else {
                Observation::Label(Organ::ALL[rng.random_range(0..4)])
            }
        })
        .collect()
}

/// Label-form trace whose observations equal the truth: `pre` stomach
/// frames, then `si` small-intestine frames.
pub fn noiseless_trace(pre: usize, si: usize) -> StudyTrace {
    let frames = (0..pre + si)
        .map(|i| {
            let truth = if i < pre {
                Organ::Stomach
            } else {
                Organ::SmallIntestine
            };
            Frame {
                truth,
                obs: Observation::Label(truth),
            }
        })
        .collect();
    StudyTrace::new(format!("noiseless-{pre}-{si}"), 2.0, frames).unwrap()
}

/// Brute-force frame walk for noiseless traces: captures on the stride grid
/// starting at frame 0 and fires once `window` consecutive captures show the
/// small intestine.
pub fn frame_walk_detection(trace: &StudyTrace, window: usize, stride: usize) -> Option<usize> {
    let mut run = 0;
    let mut t = 0;
    while t < trace.len() {
        if trace.frames()[t].truth >= Organ::SmallIntestine {
            run += 1;
        } else {
            run = 0;
        }
        if run >= window {
            return Some(t);
        }
        t += stride;
    }
    None
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smartcap::decoder::{brute_force_decode, path_score, viterbi_fixed, viterbi_float};
use smartcap::markov::{quantize, to_log, HmmConfig, QFormat};

/// Compares `viterbi_float` with the brute-force oracle on `n` random
/// instances of length at most 8 and on every length-4 label sequence of the
/// default model. Returns the number of disagreements and cases checked.
pub fn oracle_disagreements(seed: u64, n: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut checked = 0;
    let mut check = |model: &LogHmm<f64>, obs: &[Observation<f64>]| {
        let fast = viterbi_float(model, obs);
        let slow = brute_force_decode(model, obs);
        let same = match (&fast, &slow) {
            (Ok(a), Ok(b)) => a.states == b.states && a.metric == b.metric,
            (Err(a), Err(b)) => a.to_string() == b.to_string(),
            _ => false,
        };
        bad += !same as usize;
        checked += 1;
    };
    for i in 0..n {
        let model = random_log_model(&mut rng, 0.15);
        let len = rng.random_range(1..=8);
        let obs = random_observations(&mut rng, len, i % 3 == 0);
        check(&model, &obs);
    }
    let fixed = to_log(&HmmConfig::default().params().unwrap());
    for code in 0..256usize {
        let obs: Vec<_> = (0..4)
            .map(|k| Observation::Label(Organ::ALL[(code >> (2 * k)) & 3]))
            .collect();
        check(&fixed, &obs);
    }
    (bad, checked)
}

pub struct Fidelity {
    pub instances: usize,
    pub agree: usize,
    /// Mismatches whose float margin exceeds `len · 2^-15`.
    pub violations: usize,
    pub worst_margin: f64,
}

/// Fixed-point (32/16) versus float decoding on `n` random feasible
/// instances of length at most 50.
pub fn quantization_fidelity(seed: u64, n: usize) -> Fidelity {
    let q = QFormat::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Fidelity {
        instances: 0,
        agree: 0,
        violations: 0,
        worst_margin: 0.0,
    };
    while f.instances < n {
        let model = random_log_model(&mut rng, 0.1);
        let len = rng.random_range(1..=50);
        let scores = rng.random_bool(0.5);
        let obs = random_observations(&mut rng, len, scores);
        let Ok(float) = viterbi_float(&model, &obs) else {
            continue;
        };
        let qobs: Vec<_> = obs.iter().map(|o| o.quantized(q)).collect();
        let fixed = viterbi_fixed(&quantize(&model, q), &qobs).unwrap();
        f.instances += 1;
        if fixed.states == float.states {
            f.agree += 1;
            continue;
        }
        let margin = float.metric - path_score(&model, &obs, &fixed.states);
        f.worst_margin = f.worst_margin.max(margin);
        if margin.is_nan() || margin > len as f64 * 2f64.powi(-15) {
            f.violations += 1;
        }
    }
    f
}

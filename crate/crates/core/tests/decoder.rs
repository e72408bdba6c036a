mod common;

use common::{random_log_model, random_observations};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartcap::decoder::{viterbi_fixed, viterbi_float, Observation, WindowedDecoder};
use smartcap::markov::{
    from_dwell, quantize, to_log, uniform_confusion, HmmParams, Organ, QFormat,
};

#[test]
fn float_decoder_matches_brute_force() {
    let (bad, checked) = common::oracle_disagreements(1, 1000);
    assert_eq!(checked, 1256);
    assert_eq!(bad, 0);
}

#[test]
fn fixed_decoder_tracks_float() {
    let f = common::quantization_fidelity(2, 1000);
    assert!(
        f.agree * 100 >= f.instances * 99,
        "{} of {} agree",
        f.agree,
        f.instances
    );
    assert_eq!(f.violations, 0, "worst margin {}", f.worst_margin);
}

fn left_to_right(rng: &mut ChaCha8Rng) -> HmmParams<f64> {
    let dwell = [0; 3].map(|_| rng.random_range(1.0..500.0));
    let initial = common::random_row(rng, 0.3);
    let emission = [0; 4].map(|_| common::random_row(rng, 0.0));
    HmmParams::new(initial, from_dwell(dwell).unwrap(), emission).unwrap()
}

proptest! {
    #[test]
    fn left_to_right_paths_never_go_back(seed in any::<u64>(), len in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = left_to_right(&mut rng);
        let log = to_log(&p);
        let scores = rng.random_bool(0.3);
        let obs = random_observations(&mut rng, len, scores);
        let path = viterbi_float(&log, &obs).unwrap();
        prop_assert!(path.states.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(viterbi_float(&log, &obs).unwrap(), path);

        let q = quantize(&log, QFormat::default());
        let qobs: Vec<_> = obs.iter().map(|o| o.quantized(q.format)).collect();
        let fixed = viterbi_fixed(&q, &qobs).unwrap();
        prop_assert!(fixed.states.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn window_equals_slice_redecode() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = left_to_right(&mut rng);
    p.initial = [1.0, 0.0, 0.0, 0.0];
    let q = QFormat::default();
    let model = quantize(&to_log(&p), q);
    let mut uniform = p;
    uniform.initial = [0.25; 4];
    let oracle_model = quantize(&to_log(&uniform), q);

    let obs: Vec<_> = random_observations(&mut rng, 200, false)
        .into_iter()
        .map(|o| o.quantized(q))
        .collect();
    let mut dec = WindowedDecoder::fixed(&model, 10).unwrap();
    for t in 0..obs.len() {
        let got = dec.push(obs[t]);
        let slice = &obs[t.saturating_sub(9)..=t];
        assert_eq!(
            got,
            viterbi_fixed(&oracle_model, slice).unwrap(),
            "push {t}"
        );
    }
}

#[test]
fn float_window_equals_slice_redecode() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let log = random_log_model(&mut rng, 0.0);
    let oracle = log.with_initial([0.25f64.ln(); 4]);
    let obs = random_observations(&mut rng, 60, true);
    let mut dec = WindowedDecoder::float(&log, 7).unwrap();
    for t in 0..obs.len() {
        let got = dec.push(obs[t]);
        assert_eq!(
            got,
            viterbi_float(&oracle, &obs[t.saturating_sub(6)..=t]).unwrap()
        );
    }
}

#[test]
fn window_inside_one_organ_reports_it() {
    let p = HmmParams::new(
        [0.25; 4],
        from_dwell([10.0, 200.0, 1000.0]).unwrap(),
        uniform_confusion(0.99),
    )
    .unwrap();
    let q = quantize(&to_log(&p), QFormat::default());
    for organ in Organ::ALL {
        for w in 1..=50 {
            let mut dec = WindowedDecoder::fixed(&q, w).unwrap();
            let mut last = None;
            for _ in 0..w {
                last = Some(dec.push(Observation::Label(organ)));
            }
            assert!(
                last.unwrap().states.iter().all(|&s| s == organ),
                "{organ} W={w}"
            );
        }
    }
}

#[test]
fn single_precision_agrees_on_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agree = 0;
    for _ in 0..200 {
        let log = random_log_model(&mut rng, 0.0);
        let obs = random_observations(&mut rng, 30, false);
        let wide = viterbi_float(&log, &obs).unwrap();
        let narrow = viterbi_float(
            &log.map(|x| x as f32),
            &obs.iter()
                .map(|o| o.map_scores(|x| x as f32))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        agree += (wide.states == narrow.states) as usize;
    }
    assert!(agree >= 196, "{agree}");
}

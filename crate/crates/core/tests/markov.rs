use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartcap::markov::{from_dwell, HmmConfig, HmmParams, QFormat};

#[test]
fn simulated_dwell_matches_mean() {
    let means = [3.0, 10.0, 50.0];
    let t = from_dwell(means).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = 100_000;
    let mut time_in = [0u64; 3];
    for _ in 0..runs {
        let mut s = 0;
        while s < 3 {
            time_in[s] += 1;
            if rng.random::<f64>() >= t[s][s] {
                s += 1;
            }
        }
    }
    for (i, &m) in means.iter().enumerate() {
        let got = time_in[i] as f64 / runs as f64;
        assert!(
            (got - m).abs() / m < 0.05,
            "organ {i}: mean dwell {got} vs {m}"
        );
    }
}

#[test]
fn shipped_config_equals_defaults() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/hmm_default.json"
    );
    let cfg = HmmConfig::load(path).unwrap();
    let shipped = cfg.params().unwrap();
    let default = HmmConfig::default().params().unwrap();
    for i in 0..4 {
        assert!((shipped.initial[i] - default.initial[i]).abs() < 1e-12);
        for j in 0..4 {
            assert!((shipped.transition[i][j] - default.transition[i][j]).abs() < 1e-12);
            assert!((shipped.emission[i][j] - default.emission[i][j]).abs() < 1e-3);
        }
    }
    assert_eq!(cfg.format().unwrap(), QFormat::default());
}

#[test]
fn float_width_cast_roundtrip() {
    let p = HmmConfig::default().params().unwrap();
    let narrow: HmmParams<f32> = p.cast();
    narrow.validate().unwrap();
    let wide: HmmParams<f64> = narrow.cast();
    assert!((wide.transition[2][2] - p.transition[2][2]).abs() < 1e-6);
}

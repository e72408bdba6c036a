use smartcap::capsule::run_baseline;
use smartcap::classifier::{
    calibrated_corpus, load_trace, save_trace, synth_study, synth_study_detailed, BurstConfig,
    DwellModel, TARGET_BASELINE_MJ,
};
use smartcap::markov::{from_dwell, uniform_confusion, HmmParams, Organ};
use smartcap::power::PowerTable;

fn model(emission: [[f64; 4]; 4]) -> HmmParams<f64> {
    HmmParams::new(
        [0.25; 4],
        from_dwell([10.0, 200.0, 1000.0]).unwrap(),
        emission,
    )
    .unwrap()
}

fn flat_dwell(frames: f64) -> DwellModel {
    DwellModel {
        mean_frames: [frames; 4],
        sigma: 0.0,
    }
}

#[test]
fn saved_trace_reloads_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let trace = synth_study(
        4,
        &DwellModel::default(),
        &model(uniform_confusion(0.9)),
        &BurstConfig::default(),
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    save_trace(&a, &trace).unwrap();
    let back = load_trace(&a).unwrap();
    assert_eq!(back, trace);
    save_trace(&b, &back).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn label_accuracy_converges() {
    let trace = synth_study(
        8,
        &flat_dwell(25_000.0),
        &model(uniform_confusion(0.9)),
        &BurstConfig::none(),
    )
    .unwrap();
    assert_eq!(trace.len(), 100_000);
    for organ in Organ::ALL {
        let rows: Vec<_> = trace.frames().iter().filter(|f| f.truth == organ).collect();
        let hits = rows.iter().filter(|f| f.obs.label() == Some(organ)).count();
        let acc = hits as f64 / rows.len() as f64;
        assert!((acc - 0.9).abs() <= 0.01, "{organ}: {acc}");
    }
}

#[test]
fn emission_frequencies_pass_chi_square() {
    let emission = [
        [0.7, 0.2, 0.08, 0.02],
        [0.1, 0.8, 0.05, 0.05],
        [0.02, 0.18, 0.75, 0.05],
        [0.01, 0.04, 0.15, 0.8],
    ];
    let trace = synth_study(
        12,
        &flat_dwell(25_000.0),
        &model(emission),
        &BurstConfig::none(),
    )
    .unwrap();
    // 3 degrees of freedom, upper 0.1% point.
    let critical = 16.266;
    for organ in Organ::ALL {
        let mut counts = [0usize; 4];
        for f in trace.frames().iter().filter(|f| f.truth == organ) {
            counts[f.obs.label().unwrap().index()] += 1;
        }
        let n: usize = counts.iter().sum();
        let chi2: f64 = counts
            .iter()
            .zip(emission[organ.index()])
            .map(|(&c, p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < critical, "{organ}: chi2 {chi2}");
    }
}

#[test]
fn burst_rate_and_length() {
    let burst = BurstConfig {
        rate: 2.0,
        mean_len: 6.0,
        ..BurstConfig::default()
    };
    let s = synth_study_detailed(
        3,
        &flat_dwell(125_000.0),
        &model(uniform_confusion(0.9)),
        &burst,
    )
    .unwrap();
    let expected = 2.0 * 500.0;
    let got = s.bursts.len() as f64;
    assert!((got - expected).abs() / expected < 0.15, "{got} bursts");
    let covered: usize = s.bursts.iter().map(|r| r.len()).sum();
    let mean_len = covered as f64 / got;
    assert!((mean_len - 6.0).abs() / 6.0 < 0.15, "mean run {mean_len}");
    assert!(s.bursts.windows(2).all(|w| w[0].end < w[1].start));
}

#[test]
fn noiseless_synthesis_copies_truth() {
    let trace = synth_study(
        1,
        &DwellModel::default(),
        &model(uniform_confusion(1.0)),
        &BurstConfig::none(),
    )
    .unwrap();
    assert!(trace
        .frames()
        .iter()
        .all(|f| f.obs.label() == Some(f.truth)));
    for organ in Organ::ALL {
        assert!(trace.truth().any(|t| t == organ));
    }
}

#[test]
fn calibrated_corpus_hits_target() {
    let corpus = calibrated_corpus(42, 60).unwrap();
    assert_eq!(corpus.len(), 60);
    let power = PowerTable::default();
    let mut sum = 0.0;
    for t in &corpus {
        assert!(t
            .truth()
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] <= w[1]));
        assert!(t.first_si_frame().is_some());
        sum += run_baseline(t, &power).unwrap().energy_pre_si.total_mj();
    }
    let mean = sum / corpus.len() as f64;
    assert!(
        (mean - TARGET_BASELINE_MJ).abs() / TARGET_BASELINE_MJ < 0.01,
        "{mean}"
    );
    assert_eq!(calibrated_corpus(42, 60).unwrap(), corpus);
    assert_ne!(calibrated_corpus(43, 60).unwrap(), corpus);
}

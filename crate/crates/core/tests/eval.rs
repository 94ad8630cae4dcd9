use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankset::data::{generate_synthetic, SyntheticSpec};
use rankset::eval::{stratify, SizeSampling};
use rankset::{
    calibrate_refs, derive_m, fdp, predict_query, run_trials, sweep, CalibrationConfig,
    LabeledQuery, SetFamily, SweepParam, TrialProtocol,
};

fn dataset(seed: u64, n: usize) -> Vec<LabeledQuery> {
    generate_synthetic(&SyntheticSpec::new(seed, n)).unwrap()
}

#[test]
fn single_trial_matches_manual_split() {
    let data = dataset(1, 300);
    let cfg = CalibrationConfig::new(0.3, 0.1).with_family(SetFamily::diverse(3));
    let protocol = TrialProtocol::new(1, 200, 42, cfg);
    let report = run_trials(&data, &protocol).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    rng.set_stream(0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let cal: Vec<&LabeledQuery> = order[..200].iter().map(|&i| &data[i]).collect();
    let lambda = calibrate_refs(&cal, &cfg).unwrap().lambda_hat;
    let losses: Vec<f64> = order[200..]
        .iter()
        .map(|&i| {
            let q = &data[i];
            let set = predict_query(q, lambda, &cfg).unwrap();
            fdp(&set, &q.ranking, derive_m(q.k(), cfg.m_rule)).unwrap()
        })
        .collect();
    let rec = &report.records[0];
    assert_eq!(rec.lambda_hat, lambda);
    assert_eq!(rec.n_test, 100);
    assert!((rec.test_fdr - losses.iter().sum::<f64>() / 100.0).abs() < 1e-12);
    assert_eq!(report.risk_histogram.counts.iter().sum::<usize>(), 1);
}

#[test]
fn reports_are_reproducible_and_worker_independent() {
    let data = dataset(2, 400);
    let cfg = CalibrationConfig::new(0.3, 0.1).with_family(SetFamily::diverse(2));
    let protocol = TrialProtocol::new(12, 250, 7, cfg);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&data, &protocol).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run_trials(&data, &protocol).unwrap());
    assert!(one.records.iter().all(|r| r.n_test == 150));
    let other = run_trials(
        &data,
        &TrialProtocol {
            seed: 8,
            ..protocol
        },
    )
    .unwrap();
    assert_ne!(one, other);
}

#[test]
fn strata_average_back_to_pooled_fdr() {
    let data = dataset(3, 500);
    let protocol = TrialProtocol::new(5, 300, 1, CalibrationConfig::new(0.35, 0.1));
    let report = run_trials(&data, &protocol).unwrap();
    let total: usize = report.strata.iter().map(|s| s.count).sum();
    assert_eq!(total, 5 * 200);
    let weighted: f64 = report
        .strata
        .iter()
        .map(|s| s.fdr.unwrap_or(0.0) * s.count as f64)
        .sum::<f64>()
        / total as f64;
    assert!((weighted - report.pooled_fdr).abs() < 1e-12);
    let sizes: usize = report.size_histogram.iter().map(|(_, c)| c).sum();
    assert_eq!(sizes, 5 * 200);
}

#[test]
fn quartile_strata_by_hand() {
    // sizes 1..=8: nearest-rank quartiles are 2, 4, 6, 8
    let entries: Vec<(usize, f64)> = (1..=8).map(|s| (s, s as f64 / 10.0)).collect();
    let strata = stratify(&entries).unwrap();
    let bounds: Vec<(usize, usize, usize)> =
        strata.iter().map(|s| (s.lower, s.upper, s.count)).collect();
    assert_eq!(bounds, vec![(1, 2, 2), (2, 4, 2), (4, 6, 2), (6, 8, 2)]);
    assert!((strata[0].fdr.unwrap() - 0.15).abs() < 1e-12);
    assert!((strata[3].fdr.unwrap() - 0.75).abs() < 1e-12);

    // ties push everything into the lowest bin that contains them
    let tied = vec![(3, 0.0), (3, 1.0), (3, 0.5), (5, 0.2)];
    let strata = stratify(&tied).unwrap();
    let counts: Vec<usize> = strata.iter().map(|s| s.count).collect();
    assert_eq!(counts, vec![3, 0, 0, 1]);
    assert_eq!(strata[1].fdr, None);
    assert!(stratify(&tied[..3]).is_err());
}

#[test]
fn single_uniform_sampling_records_one_size_per_trial() {
    let data = dataset(4, 300);
    let mut protocol = TrialProtocol::new(9, 200, 3, CalibrationConfig::new(0.3, 0.1));
    protocol.size_sampling = SizeSampling::SingleUniform;
    let report = run_trials(&data, &protocol).unwrap();
    assert!(report.records.iter().all(|r| r.set_sizes.len() == 1));
    assert_eq!(
        report.size_histogram.iter().map(|(_, c)| c).sum::<usize>(),
        9
    );
}

#[test]
fn one_point_sweep_equals_run_trials() {
    let data = dataset(5, 400);
    let base = TrialProtocol::new(6, 250, 11, CalibrationConfig::new(0.3, 0.1));
    let rows = sweep(&data, &SweepParam::Alpha(vec![0.3]), &base).unwrap();
    let report = run_trials(&data, &base).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].mean_test_fdr, report.mean_test_fdr);
    assert_eq!(rows[0].fraction_modified, None);
    assert!(sweep(&data, &SweepParam::Alpha(vec![]), &base).is_err());
}

#[test]
fn sweep_shapes() {
    let data = dataset(5, 3000);
    let base = TrialProtocol::new(
        20,
        1500,
        9,
        CalibrationConfig::new(0.3, 0.1).with_family(SetFamily::diverse(3)),
    );

    let caps = sweep(&data, &SweepParam::MaxItems((2..=9).collect()), &base).unwrap();
    let fractions: Vec<f64> = caps.iter().map(|r| r.fraction_modified.unwrap()).collect();
    assert!(fractions.windows(2).all(|w| w[1] <= w[0]), "{fractions:?}");
    assert!(fractions[0] > 0.0);

    let alphas: Vec<f64> = (1..=6).map(|i| i as f64 / 10.0).collect();
    let rows = sweep(&data, &SweepParam::Alpha(alphas), &base).unwrap();
    let fdrs: Vec<f64> = rows.iter().map(|r| r.mean_test_fdr).collect();
    assert!(fdrs.windows(2).all(|w| w[1] >= w[0]), "{fdrs:?}");
    let modified: Vec<f64> = rows.iter().map(|r| r.fraction_modified.unwrap()).collect();
    assert!(modified.windows(2).all(|w| w[1] >= w[0]), "{modified:?}");
    for (r, alpha) in rows.iter().zip(1..=6) {
        assert!(r.mean_test_fdr <= alpha as f64 / 10.0);
    }
}

#[test]
fn violation_rate_stays_near_delta() {
    let data = dataset(6, 3000);
    let protocol = TrialProtocol::new(100, 2000, 5, CalibrationConfig::new(0.3, 0.1));
    let report = run_trials(&data, &protocol).unwrap();
    assert_eq!(report.risk_histogram.counts.iter().sum::<usize>(), 100);
    // test-split FDR is itself noisy, so allow generous slack over delta
    assert!(
        report.violation_fraction <= 0.25,
        "{}",
        report.violation_fraction
    );
}

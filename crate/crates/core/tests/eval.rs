use mlphash::eval::{
    collect_linkage_scores, collect_scores, fmr_at_threshold, run_verification_experiment,
    run_verification_experiment_with, threshold_at_fmr, timing_benchmark, tmr_at_threshold,
    unlinkability_report, ScoreSet, DEFAULT_BINS,
};
use mlphash::protocol::{build_protocol, synth_generate, Scenario, SynthParams};
use mlphash::{Dataset, KeyStream, SchemeConfig, SchemeKind, UserKey};

fn dataset(ids: usize, samples: usize, d: usize) -> Dataset {
    synth_generate(&SynthParams {
        identities: ids,
        samples_per_identity: samples,
        dim: d,
        within_sigma: 0.05,
        seed: 8,
    })
    .unwrap()
}

fn all_configs(d: usize) -> Vec<SchemeConfig> {
    let mut v = vec![SchemeConfig::Unprotected { dim: d }];
    v.extend(SchemeKind::ALL.iter().map(|&k| SchemeConfig::default_for(k, d)));
    v
}

#[test]
fn score_counts_follow_the_protocol() {
    let ds = dataset(6, 3, 16);
    for scenario in [Scenario::Normal, Scenario::Stolen] {
        let p = build_protocol(&ds, scenario, UserKey(1)).unwrap();
        assert_eq!(p.genuine_count(), 6 * 2);
        assert_eq!(p.impostor_count(), 6 * 2 * 5);
        for cfg in all_configs(16) {
            let s = collect_scores(&ds, &p, &cfg).unwrap();
            assert_eq!(s.genuine.len(), p.genuine_count());
            assert_eq!(s.impostor.len(), p.impostor_count());
            assert!(s.genuine.iter().chain(&s.impostor).all(|x| (-1.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let ds = dataset(3, 2, 16);
    let p = build_protocol(&ds, Scenario::Normal, UserKey(1)).unwrap();
    let cfg = SchemeConfig::default_for(SchemeKind::MlpHash, 8);
    assert!(collect_scores(&ds, &p, &cfg).is_err());
    assert!(collect_linkage_scores(&ds, &cfg, 3, UserKey(1)).is_err());
}

#[test]
fn unprotected_scores_ignore_the_scenario() {
    let ds = dataset(5, 3, 16);
    let cfg = SchemeConfig::Unprotected { dim: 16 };
    let a = collect_scores(&ds, &build_protocol(&ds, Scenario::Normal, UserKey(1)).unwrap(), &cfg);
    let b = collect_scores(&ds, &build_protocol(&ds, Scenario::Stolen, UserKey(2)).unwrap(), &cfg);
    assert_eq!(a.unwrap(), b.unwrap());
}

#[test]
fn verification_experiment_shape() {
    let ds = dataset(20, 4, 32);
    let cfg = SchemeConfig::default_for(SchemeKind::MlpHash, 32);
    let mut seen = Vec::new();
    let r = run_verification_experiment_with(
        &ds,
        &cfg,
        Scenario::Normal,
        3,
        UserKey(9),
        1e-2,
        |trial, s| seen.push((trial, s.genuine.len(), s.impostor.len())),
    )
    .unwrap();
    assert_eq!(seen, vec![(0, 60, 1140), (1, 60, 1140), (2, 60, 1140)]);
    assert_eq!(r.trials.len(), 3);
    for t in &r.trials {
        assert!((0.0..=1.0).contains(&t.tmr));
        assert_eq!(t.key_seed, UserKey(9).derive(t.trial as u64));
    }
    let again = run_verification_experiment(&ds, &cfg, Scenario::Normal, 3, UserKey(9), 1e-2).unwrap();
    assert_eq!(r, again);
    assert!(run_verification_experiment(&ds, &cfg, Scenario::Normal, 0, UserKey(9), 1e-2).is_err());
}

#[test]
fn stolen_keys_do_not_help_on_small_synthetic_data() {
    let ds = dataset(30, 4, 32);
    for kind in SchemeKind::ALL {
        let cfg = SchemeConfig::default_for(kind, 32);
        let n = run_verification_experiment(&ds, &cfg, Scenario::Normal, 2, UserKey(4), 1e-2).unwrap();
        let s = run_verification_experiment(&ds, &cfg, Scenario::Stolen, 2, UserKey(4), 1e-2).unwrap();
        assert!(s.tmr_mean <= n.tmr_mean + 0.01, "{kind}: {} vs {}", s.tmr_mean, n.tmr_mean);
    }
}

#[test]
fn threshold_meets_its_fmr_on_random_lists() {
    let mut s = KeyStream::new(UserKey(10), 0);
    for _ in 0..1000 {
        let n = 1 + s.next_below(300) as usize;
        let imp: Vec<f64> = (0..n).map(|_| s.next_normal()).collect();
        let gen: Vec<f64> = (0..50).map(|_| s.next_normal() + 2.0).collect();
        let fmrs = [0.2, 0.05, 0.01, 1e-3];
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_tmr = f64::INFINITY;
        for f in fmrs {
            let t = threshold_at_fmr(&imp, f).unwrap();
            assert!(fmr_at_threshold(&imp, t).unwrap() <= f);
            assert!(t >= prev_t);
            let tmr = tmr_at_threshold(&gen, t).unwrap();
            assert!(tmr <= prev_tmr);
            prev_t = t;
            prev_tmr = tmr;
        }
    }
}

#[test]
fn linkage_separates_unprotected_from_protected() {
    let ds = dataset(30, 2, 32);
    for cfg in all_configs(32) {
        let s = collect_linkage_scores(&ds, &cfg, 4, UserKey(2)).unwrap();
        assert_eq!(s.mated.len(), 30 * 6);
        assert_eq!(s.non_mated.len(), 30 * 29 / 2 * 4);
        let r = unlinkability_report(&s, 1.0, DEFAULT_BINS).unwrap();
        assert_eq!(r.local_measure.len(), DEFAULT_BINS);
        if cfg.uses_key() {
            assert!(r.global_measure < 0.2, "{}: {}", cfg.name(), r.global_measure);
        } else {
            assert!(r.global_measure > 0.9, "{}", r.global_measure);
        }
    }
}

#[test]
fn affine_score_maps_leave_d_sys_unchanged() {
    let mut s = KeyStream::new(UserKey(11), 0);
    let mut set = ScoreSet::default();
    set.mated = (0..2000).map(|_| s.next_normal() * 0.1 + 0.6).collect();
    set.non_mated = (0..4000).map(|_| s.next_normal() * 0.1 + 0.5).collect();
    let base = unlinkability_report(&set, 1.0, DEFAULT_BINS).unwrap().global_measure;
    let mut mapped = ScoreSet::default();
    mapped.mated = set.mated.iter().map(|x| 3.0 * x - 1.0).collect();
    mapped.non_mated = set.non_mated.iter().map(|x| 3.0 * x - 1.0).collect();
    let after = unlinkability_report(&mapped, 1.0, DEFAULT_BINS).unwrap().global_measure;
    assert!((base - after).abs() < 1e-9, "{base} vs {after}");
    // a gently curved monotone map only moves bin edges a little
    let mut curved = ScoreSet::default();
    curved.mated = set.mated.iter().map(|x| x + 0.1 * x * x).collect();
    curved.non_mated = set.non_mated.iter().map(|x| x + 0.1 * x * x).collect();
    let bent = unlinkability_report(&curved, 1.0, DEFAULT_BINS).unwrap().global_measure;
    assert!((base - bent).abs() < 0.03, "{base} vs {bent}");
}

#[test]
fn bench_report_shape() {
    let r = timing_benchmark(&all_configs(16)[1..], 10, 3).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert_eq!(r.warmup, 1);
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,mean_ms,std_ms,trials");
    assert_eq!(lines.len(), 5);
    assert!(r.rows.iter().all(|row| row.mean_ms >= 0.0 && row.std_ms >= 0.0 && row.trials == 10));
    assert!(timing_benchmark(&all_configs(16), 9, 3).is_err());
}

use mlphash::attack::{
    inversion_loss, invert_from_starts, linear_loss, success_attack_rate, AttackConfig,
    AttackDistribution, InversionTarget, LinearTarget,
};
use mlphash::protocol::{synth_generate, SynthParams};
use mlphash::{
    Dataset, Embedding, Error, KeyStream, KeyedScheme, MlpHashParams, SchemeConfig, SchemeKind,
    UserKey,
};

fn unit(stream: &mut KeyStream, d: usize) -> Embedding {
    Embedding::new(stream.normals::<f64>(d)).unwrap().normalized().unwrap()
}

fn small_dataset(d: usize, ids: usize) -> Dataset {
    synth_generate(&SynthParams {
        identities: ids,
        samples_per_identity: 4,
        dim: d,
        within_sigma: 0.05,
        seed: 3,
    })
    .unwrap()
}

fn keyed_mlp(d: usize, key: u64) -> KeyedScheme<f64> {
    SchemeConfig::MlpHash(MlpHashParams::for_embedding_dim(d))
        .keyed(UserKey(key))
        .unwrap()
}

#[test]
fn loss_vanishes_at_the_true_preimage_without_margin() {
    let mut s = KeyStream::new(UserKey(1), 0);
    for kind in SchemeKind::ALL {
        let cfg = SchemeConfig::default_for(kind, 16);
        for trial in 0..20 {
            let keyed = cfg.keyed::<f64>(UserKey(trial)).unwrap();
            let u = unit(&mut s, 16);
            let t = keyed.protect_template(&u).unwrap();
            assert_eq!(inversion_loss(&u, &t, &keyed, 0.0).unwrap(), 0.0, "{kind}");
            // with a margin the residual stays at margin level per component
            let l = inversion_loss(&u, &t, &keyed, 1e-3).unwrap();
            assert!(l <= 1e-3 * (t.len() * 16) as f64, "{kind}: {l}");
        }
    }
}

#[test]
fn zero_loss_implies_bit_exact_rehash() {
    let mut s = KeyStream::new(UserKey(2), 0);
    let keyed = keyed_mlp(8, 5);
    let mut zero_seen = 0;
    for _ in 0..500 {
        let target_src = unit(&mut s, 8);
        let target = keyed.protect_template(&target_src).unwrap();
        let x = unit(&mut s, 8);
        if inversion_loss(&x, &target, &keyed, 1e-3).unwrap() == 0.0 {
            zero_seen += 1;
            assert_eq!(keyed.protect_template(&x).unwrap(), target);
        }
    }
    assert!(zero_seen > 0, "no zero-loss case sampled");
}

#[test]
fn loss_rejects_wrong_dimension_and_scheme() {
    let keyed = keyed_mlp(8, 1);
    let t = keyed.protect_template(&Embedding::new(vec![0.3; 8]).unwrap()).unwrap();
    assert!(matches!(
        inversion_loss(&Embedding::new(vec![0.3; 9]).unwrap(), &t, &keyed, 1e-3),
        Err(Error::DimensionMismatch { .. })
    ));
    let bio = SchemeConfig::default_for(SchemeKind::BioHash, 8)
        .keyed::<f64>(UserKey(1))
        .unwrap();
    assert!(matches!(
        inversion_loss(&Embedding::new(vec![0.3; 8]).unwrap(), &t, &bio, 1e-3),
        Err(Error::SchemeMismatch)
    ));
}

// Line scan from a random start to a known pre-image on a d = 2 network:
// the hinge surrogate should be non-increasing along most such segments.
#[test]
fn toy_loss_decreases_toward_preimage() {
    let keyed = keyed_mlp(2, 9);
    let mut s = KeyStream::new(UserKey(3), 0);
    let mut monotone = 0;
    for _ in 0..100 {
        let u = unit(&mut s, 2);
        let t = keyed.protect_template(&u).unwrap();
        let x0 = unit(&mut s, 2);
        let losses: Vec<f64> = (0..=200)
            .map(|i| {
                let a = i as f64 / 200.0;
                let x: Vec<f64> = x0.iter().zip(u.iter()).map(|(p, q)| p + a * (q - p)).collect();
                inversion_loss(&Embedding::new(x).unwrap(), &t, &keyed, 1e-3).unwrap()
            })
            .collect();
        if losses.windows(2).all(|w| w[1] <= w[0] + 1e-12) {
            monotone += 1;
        }
    }
    assert!(monotone >= 80, "monotone on {monotone}/100 segments");
}

#[test]
fn planted_preimage_converges_on_its_start() {
    let keyed = keyed_mlp(16, 4);
    let mut s = KeyStream::new(UserKey(4), 0);
    let u = unit(&mut s, 16);
    let target = InversionTarget::Template(keyed.protect_template(&u).unwrap());
    let cfg = AttackConfig {
        margin: 0.0,
        max_evals: Some(200),
        ..AttackConfig::default()
    };
    let starts = vec![unit(&mut s, 16), u.clone(), unit(&mut s, 16)];
    let inv = invert_from_starts(&target, &keyed, &cfg, &starts).unwrap();
    assert!(inv.starts[1].converged);
    assert_eq!(inv.starts[1].evals, 1);
    assert_eq!(inv.points[1], u);
    assert_eq!(inv.certificate_failures, 0);
}

#[test]
fn linear_mode_recovers_closed_form_preimage() {
    let d = 8;
    let mut s = KeyStream::new(UserKey(5), 0);
    let u = unit(&mut s, d);
    let lt = LinearTarget::new(UserKey(6), &u).unwrap();
    // closed form: u = y M^T, i.e. u_j = <row_j(M), y>
    let m = lt.matrix();
    let closed: Vec<f64> = (0..d)
        .map(|j| m.row(j).iter().zip(lt.output()).map(|(a, b)| a * b).sum())
        .collect();
    let err = closed.iter().zip(u.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12);

    let cfg = AttackConfig {
        loss_tolerance: 1e-16,
        ..AttackConfig::linear_sanity()
    };
    let starts: Vec<Embedding> = (0..5).map(|_| unit(&mut s, d)).collect();
    let inv = invert_from_starts(
        &InversionTarget::Linear(lt.clone()),
        &KeyedScheme::Unprotected { dim: d },
        &cfg,
        &starts,
    )
    .unwrap();
    for (st, x) in inv.starts.iter().zip(&inv.points) {
        assert!(st.converged, "{st:?}");
        let num: f64 = x.iter().zip(&closed).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = closed.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den < 1e-6, "relative error {}", num / den);
        assert!(linear_loss(x, &lt).unwrap() <= 1e-16);
    }
}

#[test]
fn unreachable_tolerance_gives_zero_sar() {
    let ds = small_dataset(8, 10);
    let cfg = AttackConfig {
        loss_tolerance: -1.0,
        max_evals: Some(100),
        n_starts: 2,
        n_victims: Some(4),
        ..AttackConfig::default()
    };
    let r = success_attack_rate(&ds, &SchemeConfig::default_for(SchemeKind::MlpHash, 8), &cfg)
        .unwrap();
    assert!(r.operating_points.iter().all(|p| p.sar == 0.0));
    assert!(r.victims.iter().all(|v| v.best_inverted.is_none()));
}

#[test]
fn sar_report_properties() {
    let ds = small_dataset(8, 12);
    let cfg = AttackConfig {
        n_starts: 3,
        max_evals: Some(4000),
        n_victims: Some(6),
        ..AttackConfig::default()
    };
    for kind in SchemeKind::ALL {
        let scheme = SchemeConfig::default_for(kind, 8);
        let a = success_attack_rate(&ds, &scheme, &cfg).unwrap();
        let b = success_attack_rate(&ds, &scheme, &cfg).unwrap();
        assert_eq!(a, b, "{kind}: not deterministic");
        assert_eq!(a.victims.len(), 6);
        assert!(a.sar(1e-3).unwrap() <= a.sar(1e-2).unwrap());
        for v in &a.victims {
            assert_eq!(v.certificate_failures, 0);
            assert_eq!(v.best_inverted.is_some(), v.converged.iter().any(|&c| c));
            if v.success.iter().any(|&s| s) {
                assert!(v.converged.iter().any(|&c| c));
            }
        }
    }
}

#[test]
fn linear_mode_sar_is_full() {
    let ds = small_dataset(8, 20);
    let cfg = AttackConfig {
        n_starts: 2,
        n_victims: Some(10),
        ..AttackConfig::linear_sanity()
    };
    let r = success_attack_rate(&ds, &SchemeConfig::default_for(SchemeKind::MlpHash, 8), &cfg)
        .unwrap();
    assert_eq!(r.sar(1e-2), Some(1.0));
}

#[test]
fn moments_distribution_and_validation() {
    let ds = small_dataset(8, 6);
    let cfg = AttackConfig {
        distribution: AttackDistribution::Moments,
        n_starts: 2,
        max_evals: Some(500),
        n_victims: Some(2),
        ..AttackConfig::default()
    };
    let r = success_attack_rate(&ds, &SchemeConfig::default_for(SchemeKind::BioHash, 8), &cfg)
        .unwrap();
    assert_eq!(r.victims.len(), 2);

    let bad = AttackConfig {
        n_starts: 0,
        ..AttackConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = AttackConfig {
        fmr_operating_points: vec![1.0],
        ..AttackConfig::default()
    };
    assert!(bad.validate().is_err());
    assert!(success_attack_rate(&ds, &SchemeConfig::Unprotected { dim: 8 }, &cfg).is_err());
}

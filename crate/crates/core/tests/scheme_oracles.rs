//! Schemes checked against straight-line re-implementations that only share
//! the key stream with the library.

use mlphash::schemes::{
    argmax, BitVector, MlpHashParams, Payload, BIOHASH_STREAM, GRP_STREAM_BASE, URP_STREAM_BASE,
};
use mlphash::{
    biohash, hamming_score, iom_grp, iom_urp, mlp_hash, seeded_prng, Embedding, KeyStream,
    SchemeConfig, SchemeKind, UserKey,
};
use proptest::prelude::*;

/// Normals drawn row by row, then modified Gram-Schmidt restarting every
/// `cols` rows.
fn oracle_layer(key: UserKey, stream: u64, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut s = seeded_prng(key, stream);
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| s.next().unwrap()).collect())
        .collect();
    for i in 0..rows {
        let start = (i / cols) * cols;
        for j in start..i {
            let mut c = 0.0;
            for t in 0..cols {
                c += m[i][t] * m[j][t];
            }
            for t in 0..cols {
                m[i][t] -= c * m[j][t];
            }
        }
        let n = m[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for t in 0..cols {
            m[i][t] /= n;
        }
    }
    m
}

fn oracle_mlp_bits(u: &[f64], key: UserKey, widths: &[usize]) -> Vec<bool> {
    let mut g = u.to_vec();
    for l in 1..widths.len() {
        let w = oracle_layer(key, l as u64, widths[l - 1], widths[l]);
        let mut next = vec![0.0; widths[l]];
        for j in 0..widths[l] {
            for k in 0..widths[l - 1] {
                next[j] += g[k] * w[k][j];
            }
            if next[j] < 0.0 {
                next[j] = 0.0;
            }
        }
        g = next;
    }
    let tau = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|&v| v > tau).collect()
}

fn bits_of(t: &mlphash::ProtectedTemplate) -> Vec<bool> {
    t.bits().unwrap().iter().collect()
}

fn emb(v: &[f64]) -> Embedding {
    Embedding::new(v.to_vec()).unwrap()
}

fn random_unit(stream: &mut KeyStream, d: usize) -> Embedding {
    emb(&mlphash::protocol::unit_sphere_draw(stream, d))
}

#[test]
fn mlp_micro_oracle_fixed_input() {
    let params = MlpHashParams::new(vec![2, 4, 2]).unwrap();
    let key = UserKey(1234);
    let u = [1.0, -1.0];
    let t = mlp_hash(&emb(&u), key, &params).unwrap();
    assert_eq!(bits_of(&t), oracle_mlp_bits(&u, key, &[2, 4, 2]));
}

#[test]
fn mlp_micro_oracle_random_inputs() {
    let params = MlpHashParams::new(vec![2, 4, 2]).unwrap();
    let mut st = KeyStream::new(UserKey(99), 0);
    for i in 0..100 {
        let key = UserKey(1000 + i);
        let u = [st.next_normal(), st.next_normal()];
        let t = mlp_hash(&emb(&u), key, &params).unwrap();
        assert_eq!(bits_of(&t), oracle_mlp_bits(&u, key, &[2, 4, 2]), "input {i}");
    }
}

#[test]
fn mlp_default_shape_matches_oracle() {
    let d = 8;
    let params = MlpHashParams::for_embedding_dim(d);
    assert_eq!(params.layer_lengths, vec![8, 16, 16, 16, 8]);
    let mut st = KeyStream::new(UserKey(5), 0);
    for i in 0..20 {
        let u = random_unit(&mut st, d);
        let t = mlp_hash(&u, UserKey(i), &params).unwrap();
        assert_eq!(bits_of(&t), oracle_mlp_bits(&u, UserKey(i), &params.layer_lengths));
    }
}

#[test]
fn zero_input_gives_zero_bits() {
    for (d, h) in [(1, 0), (2, 1), (8, 3), (33, 2)] {
        let params = MlpHashParams::with_shape(d, h, 2 * d, d);
        let t = mlp_hash(&Embedding::zeros(d), UserKey(d as u64), &params).unwrap();
        assert_eq!(t.bits().unwrap().count_ones(), 0);
        assert_eq!(t.len(), d);
    }
    let b = biohash(&Embedding::zeros(6), UserKey(1), 4).unwrap();
    assert_eq!(b.bits().unwrap(), &BitVector::zeros(4));
}

#[test]
fn mlp_rejects_wrong_dimension() {
    let params = MlpHashParams::for_embedding_dim(4);
    assert!(matches!(
        mlp_hash(&emb(&[1.0, 2.0]), UserKey(0), &params),
        Err(mlphash::Error::DimensionMismatch { expected: 4, found: 2 })
    ));
}

#[test]
fn output_activation_flag_changes_only_the_last_layer() {
    let mut params = MlpHashParams::new(vec![3, 6, 3]).unwrap();
    params.activation_on_output = false;
    let u = emb(&[0.2, -0.7, 0.4]);
    let key = UserKey(17);
    let trace = mlphash::schemes::MlpHasher::new(key, &params).unwrap().forward(&u).unwrap();
    let w1 = oracle_layer(key, 1, 3, 6);
    let w2 = oracle_layer(key, 2, 6, 3);
    let h: Vec<f64> = (0..6)
        .map(|j| (0..3).map(|k| u[k] * w1[k][j]).sum::<f64>().max(0.0))
        .collect();
    for j in 0..3 {
        let g: f64 = (0..6).map(|k| h[k] * w2[k][j]).sum();
        assert!((trace.gamma[j] - g).abs() < 1e-12);
    }
    assert!((trace.tau - trace.gamma.iter().sum::<f64>() / 3.0).abs() < 1e-15);
}

fn oracle_biohash(u: &[f64], key: UserKey, out: usize) -> Vec<bool> {
    let w = oracle_layer(key, BIOHASH_STREAM, out, u.len());
    w.iter()
        .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() > 0.0)
        .collect()
}

#[test]
fn biohash_oracle() {
    let u = [1.0, 0.0, -1.0];
    let key = UserKey(42);
    let t = biohash(&emb(&u), key, 2).unwrap();
    assert_eq!(bits_of(&t), oracle_biohash(&u, key, 2));
    assert!(biohash(&emb(&u), key, 4).is_err());
}

#[test]
fn biohash_positive_scaling() {
    let mut st = KeyStream::new(UserKey(8), 1);
    for i in 0..50 {
        let u = random_unit(&mut st, 16);
        let c = 0.01 + 100.0 * st.next_uniform();
        let a = biohash(&u, UserKey(i), 12).unwrap();
        assert_eq!(a, biohash(&u.scaled(c), UserKey(i), 12).unwrap());
    }
}

#[test]
fn iom_grp_oracle() {
    let u = [1.0, 2.0];
    let key = UserKey(7);
    let t = iom_grp(&emb(&u), key, 3, 4).unwrap();
    let want: Vec<u32> = (1..=3u64)
        .map(|j| {
            let mut s = seeded_prng(key, GRP_STREAM_BASE + j);
            let proj: Vec<f64> = (0..4)
                .map(|_| {
                    let row = [s.next().unwrap(), s.next().unwrap()];
                    row[0] * u[0] + row[1] * u[1]
                })
                .collect();
            let mut best = 0;
            for k in 1..4 {
                if proj[k] > proj[best] {
                    best = k;
                }
            }
            best as u32
        })
        .collect();
    assert_eq!(t.indices().unwrap(), want.as_slice());
    assert!(iom_grp(&emb(&u), key, 3, 1).is_err());
    assert!(t.indices().unwrap().iter().all(|&i| i < 4));
}

fn oracle_permutation(key: UserKey, j: u64, n: usize) -> Vec<usize> {
    let mut s = KeyStream::new(key, URP_STREAM_BASE + j);
    let mut p: Vec<usize> = (0..n).collect();
    let mut i = n;
    while i > 1 {
        i -= 1;
        let r = s.next_below(i as u64 + 1) as usize;
        p.swap(i, r);
    }
    p
}

#[test]
fn iom_urp_oracle() {
    let u = [0.1, 0.4, -0.2, 0.3];
    let key = UserKey(11);
    let t = iom_urp(&emb(&u), key, 5, 2).unwrap();
    let want: Vec<u32> = (1..=5)
        .map(|j| {
            let p = oracle_permutation(key, j, 4);
            if u[p[1]] > u[p[0]] { 1 } else { 0 }
        })
        .collect();
    assert_eq!(t.indices().unwrap(), want.as_slice());
    assert!(iom_urp(&emb(&u), key, 5, 1).is_err());
    assert!(iom_urp(&emb(&u), key, 5, 5).is_err());
}

#[test]
fn iom_urp_full_window_tracks_global_argmax() {
    let mut st = KeyStream::new(UserKey(3), 3);
    for i in 0..30 {
        let u = random_unit(&mut st, 10);
        let key = UserKey(i);
        let t = iom_urp(&u, key, 7, 10).unwrap();
        let top = argmax(&u);
        for (j, &ix) in t.indices().unwrap().iter().enumerate() {
            let p = oracle_permutation(key, j as u64 + 1, 10);
            assert_eq!(p[ix as usize], top);
        }
    }
}

#[test]
fn ties_go_to_lowest_index() {
    assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    assert_eq!(argmax(&[0.0, 0.0]), 0);
}

#[test]
fn every_scheme_is_deterministic() {
    let mut st = KeyStream::new(UserKey(77), 0);
    for kind in SchemeKind::ALL {
        let cfg = SchemeConfig::default_for(kind, 24);
        for i in 0..25 {
            let u = random_unit(&mut st, 24);
            let key = UserKey(st.next_below(u64::MAX));
            let a = cfg.protect(&u, key).unwrap();
            assert_eq!(a, cfg.protect(&u, key).unwrap(), "{kind} #{i}");
        }
    }
}

#[test]
fn independent_keys_give_near_independent_bits() {
    let d = 32;
    let params = MlpHashParams::for_embedding_dim(d);
    let mut st = KeyStream::new(UserKey(21), 0);
    let u = random_unit(&mut st, d);
    let mut total = 0.0;
    let pairs = 1000;
    for i in 0..pairs {
        let a = mlp_hash(&u, UserKey(2 * i), &params).unwrap();
        let b = mlp_hash(&u, UserKey(2 * i + 1), &params).unwrap();
        total += 1.0 - hamming_score(&a, &b).unwrap();
    }
    let mean = total / pairs as f64;
    assert!(mean > 0.35 && mean < 0.65, "mean normalized distance {mean}");
}

#[test]
fn tiny_perturbations_keep_the_template() {
    let d = 64;
    let params = MlpHashParams::for_embedding_dim(d);
    let mut st = KeyStream::new(UserKey(31), 0);
    for i in 0..100 {
        let u = random_unit(&mut st, d);
        let eps = random_unit(&mut st, d).scaled(1e-6 * st.next_uniform());
        let v = emb(&u.iter().zip(eps.iter()).map(|(a, b)| a + b).collect::<Vec<_>>());
        let key = UserKey(500 + i);
        assert_eq!(
            mlp_hash(&u, key, &params).unwrap(),
            mlp_hash(&v, key, &params).unwrap(),
            "trial {i}"
        );
    }
}

#[test]
fn f32_and_f64_agree_on_clear_margins() {
    let d = 16;
    let cfg = SchemeConfig::default_for(SchemeKind::BioHash, d);
    let mut st = KeyStream::new(UserKey(4), 0);
    let u = random_unit(&mut st, d);
    let u32v = mlphash::Embedding32::new(u.iter().map(|&v| v as f32).collect()).unwrap();
    let a = cfg.keyed::<f64>(UserKey(1)).unwrap().protect_template(&u).unwrap();
    let b = cfg.keyed::<f32>(UserKey(1)).unwrap().protect_template(&u32v).unwrap();
    assert!(hamming_score(&a, &b).unwrap() >= 0.9);
}

#[test]
fn template_lengths_follow_config() {
    let u = Embedding::zeros(20);
    for kind in SchemeKind::ALL {
        let cfg = SchemeConfig::default_for(kind, 20);
        let t = cfg.keyed::<f64>(UserKey(0)).unwrap().protect_template(&u).unwrap();
        assert_eq!(t.len(), 20);
        assert_eq!(t.params_digest, cfg.digest());
        if let Payload::Indices(ix) = &t.payload {
            assert!(ix.iter().all(|&i| (i as usize) < 16));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_are_symmetric(seed in any::<u64>(), k1 in any::<u64>(), k2 in any::<u64>()) {
        let mut st = KeyStream::new(UserKey(seed), 0);
        let u = random_unit(&mut st, 12);
        let v = random_unit(&mut st, 12);
        for kind in SchemeKind::ALL {
            let cfg = SchemeConfig::default_for(kind, 12);
            let a = cfg.protect(&u, UserKey(k1)).unwrap();
            let b = cfg.protect(&v, UserKey(k2)).unwrap();
            let s = a.score(&b).unwrap();
            prop_assert_eq!(s, b.score(&a).unwrap());
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}

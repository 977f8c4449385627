//! Metric and profile functions checked against naive reimplementations on
//! randomly drawn small instances. Each check panics on the first mismatch.

use std::collections::{BTreeMap, BTreeSet};

use feedrank_core::eval::{c_d_rate, r_precision};
use feedrank_core::{cosine_score, update_profile, ProfileConfig, TermVector, UserProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: [&str; 10] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet",
];

fn random_vector(rng: &mut ChaCha8Rng, min_len: usize) -> TermVector {
    let len = rng.random_range(min_len..=VOCAB.len());
    let mut terms: Vec<usize> = (0..VOCAB.len()).collect();
    for i in 0..len {
        let j = rng.random_range(i..VOCAB.len());
        terms.swap(i, j);
    }
    TermVector::from_weights(
        terms[..len]
            .iter()
            .map(|&t| (VOCAB[t], rng.random_range(0.001..5.0))),
    )
}

/// Scores on a coarse grid so ties are common.
fn random_offer(rng: &mut ChaCha8Rng) -> Vec<(String, f64)> {
    let n = rng.random_range(1..=6);
    (0..n)
        .map(|i| {
            let score = if rng.random_bool(0.5) {
                f64::from(rng.random_range(0..=4u8)) / 4.0
            } else {
                rng.random_range(0.0..1.0)
            };
            (format!("https://o.test/{i}"), score)
        })
        .collect()
}

fn cd_by_hand(offered: &[(String, f64)], mask: u32) -> f64 {
    let chosen: Vec<f64> = (0..offered.len())
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| offered[i].1)
        .collect();
    let n = chosen.len();
    let mean_chosen = chosen.iter().sum::<f64>() / n as f64;
    let mut all: Vec<f64> = offered.iter().map(|o| o.1).collect();
    all.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mean_top = all.iter().take(n).sum::<f64>() / n as f64;
    if mean_top == 0.0 {
        1.0
    } else {
        mean_chosen / mean_top
    }
}

fn rp_by_hand(mask: u32) -> f64 {
    let r = mask.count_ones() as usize;
    let within = (0..r).filter(|i| mask & (1 << i) != 0).count();
    within as f64 / r as f64
}

/// Every non-empty choice from `instances` random offers. Returns how many
/// (offer, choice) pairs were compared.
pub fn metrics_match_exhaustive_enumeration(seed: u64, instances: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for _ in 0..instances {
        let offered = random_offer(&mut rng);
        for mask in 1u32..(1 << offered.len()) {
            let chosen: BTreeSet<String> = (0..offered.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| offered[i].0.clone())
                .collect();
            let cd = c_d_rate(&offered, &chosen).unwrap().unwrap();
            let rp = r_precision(&offered, &chosen).unwrap();
            assert!((cd - cd_by_hand(&offered, mask)).abs() <= 1e-9);
            assert!((rp - rp_by_hand(mask)).abs() <= 1e-9);
            checked += 1;
        }
    }
    checked
}

pub fn cd_is_one_exactly_for_top_sets(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.random_range(1..=6);
        let offered: Vec<(String, f64)> = (0..n)
            .map(|i| (format!("l{i}"), f64::from(rng.random_range(0..=4u8)) / 4.0))
            .collect();
        let mut sorted: Vec<f64> = offered.iter().map(|o| o.1).collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for mask in 1u32..(1 << n) {
            let mut picked: Vec<f64> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| offered[i].1)
                .collect();
            picked.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let is_top = picked[..] == sorted[..picked.len()];
            let chosen = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| offered[i].0.clone())
                .collect();
            let cd = c_d_rate(&offered, &chosen).unwrap().unwrap();
            assert!(cd <= 1.0);
            assert_eq!(cd == 1.0, is_top, "{offered:?} mask {mask:b} cd {cd}");
        }
    }
}

pub fn update_matches_transcription_bit_for_bit(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let a = rng.random_range(0.0..=1.0);
        let config = ProfileConfig::new(a, 1.0 - a).unwrap();
        let stored = random_vector(&mut rng, 0);
        let session = random_vector(&mut rng, 1);
        let summary = if rng.random_bool(0.3) {
            TermVector::new()
        } else {
            random_vector(&mut rng, 1)
        };
        let profile = UserProfile {
            sessions_completed: u64::from(!stored.is_empty()),
            vector: stored.clone(),
            config,
        };
        let next = update_profile(&profile, &session, &summary).unwrap();

        let mut expected: BTreeMap<String, f64> = BTreeMap::new();
        for term in VOCAB {
            let ps = session.get(term).unwrap_or(0.0);
            let pr = summary.get(term).unwrap_or(0.0);
            let w = match stored.get(term) {
                Some(p) => config.a() * p + config.b() * ps + pr,
                None => ps + pr,
            };
            if w > 0.0 {
                expected.insert(term.to_string(), w);
            }
        }
        let got: BTreeMap<String, f64> = next.vector.clone().into();
        assert_eq!(got.len(), expected.len());
        for (t, w) in &expected {
            assert_eq!(got[t].to_bits(), w.to_bits(), "term {t}");
        }
        assert_eq!(next.sessions_completed, profile.sessions_completed + 1);
    }
}

pub fn cosine_matches_dense_computation(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let p = random_vector(&mut rng, 0);
        let h = random_vector(&mut rng, 0);
        let dense = |v: &TermVector| VOCAB.map(|t| v.get(t).unwrap_or(0.0));
        let (x, y) = (dense(&p), dense(&h));
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        let expected = if nx == 0.0 || ny == 0.0 {
            0.0
        } else {
            dot / (nx * ny)
        };
        assert!((cosine_score(&p, &h) - expected).abs() <= 1e-9);
    }
}

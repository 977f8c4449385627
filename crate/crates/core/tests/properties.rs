use std::collections::BTreeSet;

use chrono::{Duration, TimeZone, Utc};
use feedrank_core::eval::{c_d_rate, r_precision};
use feedrank_core::{
    apply_session, binary_score, cosine_score, rank_candidates, replay_profile, tf_vector, update_profile,
    vector_sum_scaled, Candidate, Execution, NewsItem, ProfileConfig, RankingMode, SessionSelections,
    TermVector, Tokenizer, UserProfile,
};
use proptest::prelude::*;

const WORDS: [&str; 12] = [
    "river", "stone", "market", "vote", "storm", "engine", "garden", "league", "orbit", "price", "harbor",
    "violin",
];

fn term_vector(min: usize) -> impl Strategy<Value = TermVector> {
    prop::collection::btree_map(prop::sample::select(&WORDS[..]), 0.001f64..100.0, min..8)
        .prop_map(TermVector::from_weights)
}

fn headline() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&WORDS[..]), 1..6).prop_map(|w| w.join(" "))
}

fn item(i: usize, headline: String, summary: Option<String>, minutes: i64) -> NewsItem {
    NewsItem {
        headline,
        hyperlink: format!("https://p.test/{i}"),
        summary,
        feed_id: "f".into(),
        fetched_at: Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap() + Duration::minutes(minutes),
    }
}

fn items() -> impl Strategy<Value = Vec<NewsItem>> {
    prop::collection::vec((headline(), prop::option::of(headline()), 0i64..5), 0..25).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (h, s, m))| item(i, h, s, m))
            .collect()
    })
}

fn sessions() -> impl Strategy<Value = Vec<SessionSelections>> {
    prop::collection::vec(
        prop::collection::vec((headline(), prop::option::of(headline())), 0..5),
        0..50,
    )
    .prop_map(|log| {
        log.into_iter()
            .enumerate()
            .map(|(s, chosen)| {
                let items = chosen
                    .into_iter()
                    .enumerate()
                    .map(|(i, (h, r))| item(s * 10 + i, h, r, 0))
                    .collect();
                SessionSelections::new(items).unwrap()
            })
            .collect()
    })
}

fn close(a: &TermVector, b: &TermVector, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .all(|(t, w)| b.get(t).is_some_and(|v| (v - w).abs() <= tol))
}

proptest! {
    #[test]
    fn tf_weights_sum_to_one_over_distinct_terms(text in "[a-zA-Z ,.'-]{0,80}") {
        let tok = Tokenizer::default();
        let tokens = tok.tokenize(&text);
        let v = tf_vector(&tokens);
        let distinct: BTreeSet<&str> = tokens.iter().collect();
        prop_assert_eq!(v.terms().collect::<BTreeSet<_>>(), distinct);
        if !tokens.is_empty() {
            prop_assert!((v.sum() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,60}") {
        let tok = Tokenizer::default();
        let once = tok.tokenize(&text);
        let twice = tok.tokenize(&once.as_slice().join(" "));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sum_scaled_ignores_order_and_grouping(
        vs in prop::collection::vec(term_vector(0), 0..6),
        split in 0usize..6,
        scale in 0.01f64..10.0,
    ) {
        let whole = vector_sum_scaled(&vs, scale);
        let mut rev = vs.clone();
        rev.reverse();
        prop_assert!(close(&whole, &vector_sum_scaled(&rev, scale), 1e-9));

        let k = split.min(vs.len());
        let grouped = vec![vector_sum_scaled(&vs[..k], 1.0), vector_sum_scaled(&vs[k..], 1.0)];
        prop_assert!(close(&whole, &vector_sum_scaled(&grouped, scale), 1e-9));
    }

    #[test]
    fn update_keeps_weights_valid_and_support_grows(
        p in term_vector(0), s in term_vector(1), r in term_vector(0), a in 0.0f64..=1.0,
    ) {
        let config = ProfileConfig::new(a, 1.0 - a).unwrap();
        let profile = UserProfile { sessions_completed: 1, vector: p, config };
        let next = update_profile(&profile, &s, &r).unwrap();
        for (_, w) in &next.vector {
            prop_assert!(w.is_finite() && *w > 0.0);
        }
        for t in s.terms().chain(r.terms()) {
            prop_assert!(next.vector.contains(t));
        }
    }

    #[test]
    fn equal_weights_stay_between_old_and_session(p in term_vector(0), s in term_vector(1)) {
        let config = ProfileConfig::new(0.5, 0.5).unwrap();
        let profile = UserProfile { sessions_completed: 1, vector: p.clone(), config };
        let next = update_profile(&profile, &s, &TermVector::new()).unwrap();
        for (t, w) in &next.vector {
            let x = p.get(t).unwrap_or(0.0);
            let y = s.get(t).unwrap_or(0.0);
            // A term new to the profile takes the session weight unchanged.
            let (lo, hi) = if p.contains(t) { (x.min(y), x.max(y)) } else { (y, y) };
            prop_assert!(*w >= lo - 1e-12 && *w <= hi + 1e-12, "{t}: {w} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn replay_equals_incremental_profile(log in sessions(), a in 0.0f64..=1.0) {
        let tok = Tokenizer::default();
        let config = ProfileConfig::new(a, 1.0 - a).unwrap();
        let mut live = UserProfile::empty(config);
        for s in &log {
            live = apply_session(&live, s, &tok);
        }
        let replayed = replay_profile(&log, config, &tok);
        prop_assert_eq!(&replayed, &live);
        prop_assert_eq!(live.sessions_completed == 0, live.vector.is_empty());
    }

    #[test]
    fn cosine_is_symmetric_and_scale_free(
        p in term_vector(0), h in term_vector(0), c in 0.001f64..1000.0,
    ) {
        let base = cosine_score(&p, &h);
        prop_assert!((base - cosine_score(&h, &p)).abs() <= 1e-9);
        prop_assert!((base - cosine_score(&p.scaled(c), &h)).abs() <= 1e-9);
        prop_assert!((base - cosine_score(&p, &h.scaled(c))).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn cosine_of_self_is_one(v in term_vector(1)) {
        prop_assert!((cosine_score(&v, &v) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn binary_agrees_with_positive_cosine(p in term_vector(1), h in term_vector(1)) {
        prop_assert_eq!(binary_score(&p, &h) == 1.0, cosine_score(&p, &h) > 0.0);
    }

    #[test]
    fn ranked_pages_are_well_formed(
        profile in term_vector(0),
        pool in items(),
        page in 0usize..20,
        seed in any::<u64>(),
        mode in 0u8..3,
    ) {
        let tok = Tokenizer::default();
        let mode = match mode {
            0 => RankingMode::Cosine,
            1 => RankingMode::Binary,
            _ => RankingMode::Random { seed },
        };
        let cands: Vec<Candidate> = pool.iter().map(|i| Candidate::new(i.clone(), &tok)).collect();
        let out = rank_candidates(&profile, &cands, mode, page, Execution::Sequential);
        prop_assert_eq!(out.len(), page.min(pool.len()));
        prop_assert_eq!(out.iter().map(|s| s.rank).collect::<Vec<_>>(), (1..=out.len()).collect::<Vec<_>>());
        let links: BTreeSet<&str> = out.iter().map(|s| s.item.hyperlink.as_str()).collect();
        prop_assert_eq!(links.len(), out.len());
        match mode {
            RankingMode::Random { .. } => prop_assert!(out.iter().all(|s| s.score == 0.0)),
            _ => prop_assert!(out.windows(2).all(|w| w[0].score >= w[1].score)),
        }
        let again = rank_candidates(&profile, &cands, mode, page, Execution::Parallel);
        prop_assert_eq!(out, again);
    }

    #[test]
    fn scaling_the_profile_keeps_cosine_order(
        profile in term_vector(1), pool in items(), c in 0.001f64..1000.0,
    ) {
        let tok = Tokenizer::default();
        let cands: Vec<Candidate> = pool.iter().map(|i| Candidate::new(i.clone(), &tok)).collect();
        let n = cands.len();
        let a = rank_candidates(&profile, &cands, RankingMode::Cosine, n, Execution::Sequential);
        let b = rank_candidates(&profile.scaled(c), &cands, RankingMode::Cosine, n, Execution::Sequential);
        for (x, y) in a.iter().zip(&b) {
            // Rounding may reorder exact ties only.
            prop_assert!(x.item.hyperlink == y.item.hyperlink || (x.score - y.score).abs() <= 1e-9);
            prop_assert!((x.score - y.score).abs() <= 1e-9);
        }
    }

    #[test]
    fn metrics_stay_in_range(
        scores in prop::collection::vec(0.0f64..1.0, 1..14),
        mask in any::<u16>(),
    ) {
        let offered: Vec<(String, f64)> =
            scores.iter().enumerate().map(|(i, s)| (format!("l{i}"), *s)).collect();
        let chosen: BTreeSet<String> = (0..offered.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| offered[i].0.clone())
            .collect();
        match c_d_rate(&offered, &chosen).unwrap() {
            Some(cd) => {
                prop_assert!((0.0..=1.0).contains(&cd));
                let rp = r_precision(&offered, &chosen).unwrap();
                prop_assert!((0.0..=1.0).contains(&rp));
            }
            None => prop_assert!(chosen.is_empty()),
        }
    }
}

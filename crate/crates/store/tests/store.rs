use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use feedrank_core::{replay_profile, NewsItem, ProfileConfig, RankingMode, ScoredItem};
use feedrank_ingest::FeedSource;
use feedrank_store::{NewSession, Store, StoreError, StoreOptions};

fn at(minutes: i64) -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 1, 8, 0, 0).unwrap() + Duration::minutes(minutes)
}

fn news(i: usize, headline: &str, summary: Option<&str>) -> NewsItem {
    NewsItem {
        headline: headline.into(),
        hyperlink: format!("https://news.test/{i}"),
        summary: summary.map(Into::into),
        feed_id: "feed".into(),
        fetched_at: at(i as i64),
    }
}

fn page(headlines: &[&str]) -> Vec<ScoredItem> {
    headlines
        .iter()
        .enumerate()
        .map(|(i, h)| ScoredItem {
            item: news(i, h, (i % 2 == 0).then_some("longer summary text about it")),
            score: 1.0 / (i as f64 + 3.0),
            rank: i + 1,
        })
        .collect()
}

fn open(dir: &Path) -> Store {
    Store::open(dir, StoreOptions::default()).unwrap()
}

/// Opens a session on `page`, clicks `clicks` (by index) and ends it.
fn session(store: &Store, user: &str, clicks: &[usize], minute: i64) {
    let p = page(&[
        "Quiet river rising",
        "Market opens flat",
        "New violin maker",
        "Storm season",
    ]);
    let links: Vec<String> = clicks.iter().map(|&i| p[i].item.hyperlink.clone()).collect();
    store
        .open_session(user, RankingMode::Cosine, p, at(minute))
        .unwrap();
    for l in links {
        store.record_click(user, &l, at(minute + 1)).unwrap();
    }
    store.end_session(user, None, at(minute + 2)).unwrap();
}

fn assert_replays(store: &Store, user: &str) {
    let sessions = store.list_sessions(user).unwrap();
    let snapshot = store.load_profile(user).unwrap();
    let selections: Vec<_> = sessions.iter().map(|s| s.selections()).collect();
    let replayed = replay_profile(&selections, snapshot.config, &store.options().tokenizer);
    assert_eq!(replayed, snapshot.profile());
}

#[test]
fn fresh_user_has_empty_version_zero() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let p = store.load_profile("ana").unwrap();
    assert_eq!(p.version, 0);
    assert!(p.vector.is_empty());
    assert!(store.list_sessions("ana").unwrap().is_empty());
    assert!(store.list_users().unwrap().is_empty());
}

#[test]
fn session_ids_and_versions_advance() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    session(&store, "ana", &[0, 2], 0);
    let first = &store.list_sessions("ana").unwrap()[0];
    assert_eq!(first.session_id, 1);
    assert_eq!(
        (first.profile_version_before, first.profile_version_after),
        (0, 1)
    );

    for k in 1..5 {
        session(&store, "ana", &[k % 4], 10 * k as i64);
    }
    session(&store, "ana", &[1], 100);
    let sessions = store.list_sessions("ana").unwrap();
    assert_eq!(sessions.last().unwrap().session_id, 6);
    assert_eq!(store.load_profile("ana").unwrap().version, 6);
    let versions: Vec<u64> = store
        .profile_history("ana")
        .unwrap()
        .iter()
        .map(|s| s.version)
        .collect();
    assert_eq!(versions, (0..=6).collect::<Vec<_>>());
    assert_replays(&store, "ana");
}

#[test]
fn session_without_clicks_is_logged_but_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    session(&store, "bo", &[1], 0);
    session(&store, "bo", &[], 10);
    let s = store.list_sessions("bo").unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!((s[1].profile_version_before, s[1].profile_version_after), (1, 1));
    assert_eq!(store.load_profile("bo").unwrap().sessions_completed, 1);
    assert_replays(&store, "bo");
}

#[test]
fn reopening_restores_state_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    for k in 0..4 {
        session(&store, "cy", &[k, (k + 1) % 4], 10 * k as i64);
    }
    let profile = store.load_profile("cy").unwrap();
    let sessions = store.list_sessions("cy").unwrap();
    drop(store);

    let store = open(dir.path());
    let again = store.load_profile("cy").unwrap();
    assert_eq!(again, profile);
    for ((t, w), (t2, w2)) in profile.vector.iter().zip(again.vector.iter()) {
        assert_eq!((t, w.to_bits()), (t2, w2.to_bits()));
    }
    assert_eq!(store.list_sessions("cy").unwrap(), sessions);
    assert_eq!(store.list_users().unwrap(), vec!["cy".to_string()]);
}

#[test]
fn open_session_and_clicks_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let p = page(&["Alpha beta", "Gamma delta"]);
    let link = p[1].item.hyperlink.clone();
    store
        .open_session("di", RankingMode::Random { seed: 4 }, p, at(0))
        .unwrap();
    assert!(store.record_click("di", &link, at(1)).unwrap());
    assert!(!store.record_click("di", &link, at(2)).unwrap());
    drop(store);

    let store = open(dir.path());
    let open = store.current_session("di").unwrap().unwrap();
    assert_eq!(open.clicks, BTreeSet::from([link]));
    assert_eq!(open.mode, RankingMode::Random { seed: 4 });
    let record = store.end_session("di", Some(open.session_id), at(3)).unwrap();
    assert_eq!(record.chosen.len(), 1);
    assert!(store.current_session("di").unwrap().is_none());
}

#[test]
fn invalid_operations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    assert!(matches!(
        store.record_click("ed", "https://x", at(0)),
        Err(StoreError::NoOpenSession(_))
    ));
    assert!(matches!(
        store.end_session("ed", None, at(0)),
        Err(StoreError::NoOpenSession(_))
    ));
    store
        .open_session("ed", RankingMode::Binary, page(&["One two"]), at(0))
        .unwrap();
    assert!(matches!(
        store.open_session("ed", RankingMode::Binary, page(&["One two"]), at(1)),
        Err(StoreError::SessionAlreadyOpen { session_id: 1, .. })
    ));
    assert!(matches!(
        store.record_click("ed", "https://elsewhere.test/", at(1)),
        Err(StoreError::NotOffered(_))
    ));
    assert!(matches!(
        store.end_session("ed", Some(7), at(1)),
        Err(StoreError::Conflict { expected: 7, .. })
    ));
    assert!(matches!(
        store.load_profile("../etc"),
        Err(StoreError::InvalidId(_))
    ));
    let mut dup = page(&["One two", "Three four"]);
    dup[1].item.hyperlink = dup[0].item.hyperlink.clone();
    assert!(matches!(
        store.open_session("fy", RankingMode::Cosine, dup, at(0)),
        Err(StoreError::InvalidSession(_))
    ));
}

#[test]
fn racing_closes_have_one_winner() {
    for round in 0..20 {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(open(dir.path()));
        let p = page(&["Garden party", "Orbit change"]);
        let link = p[0].item.hyperlink.clone();
        let s = store.open_session("gu", RankingMode::Cosine, p, at(0)).unwrap();
        store.record_click("gu", &link, at(1)).unwrap();
        let handles: Vec<_> = (0..2)
            .map(|_| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || store.end_session("gu", Some(s.session_id), at(2)))
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let wins = results.iter().filter(|r| r.is_ok()).count();
        let conflicts = results
            .iter()
            .filter(|r| matches!(r, Err(StoreError::Conflict { .. })))
            .count();
        assert_eq!((wins, conflicts), (1, 1), "round {round}");
        assert_eq!(store.list_sessions("gu").unwrap().len(), 1);
        assert_eq!(store.load_profile("gu").unwrap().version, 1);
    }
}

#[test]
fn append_session_validates_and_commits() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let p = page(&["Harbor lights", "Engine room"]);
    let good = NewSession {
        user_id: "hal".into(),
        mode: RankingMode::Cosine,
        chosen: BTreeSet::from([p[0].item.hyperlink.clone()]),
        offered: p.clone(),
        started_at: at(0),
        ended_at: at(5),
    };
    let mut stray = good.clone();
    stray.chosen.insert("https://nowhere.test/".into());
    assert!(matches!(
        store.append_session(stray),
        Err(StoreError::NotOffered(_))
    ));
    let mut backwards = good.clone();
    backwards.ended_at = at(-1);
    assert!(matches!(
        store.append_session(backwards),
        Err(StoreError::InvalidSession(_))
    ));
    let r = store.append_session(good).unwrap();
    assert_eq!((r.session_id, r.profile_version_after), (1, 1));
    assert_replays(&store, "hal");
}

#[test]
fn user_keeps_the_constants_it_started_with() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(
        dir.path(),
        StoreOptions {
            default_config: ProfileConfig::new(0.9, 0.1).unwrap(),
            ..StoreOptions::default()
        },
    )
    .unwrap();
    session(&store, "ivy", &[0], 0);
    drop(store);
    let store = open(dir.path());
    assert_eq!(store.load_profile("ivy").unwrap().config.a(), 0.9);
    session(&store, "ivy", &[1], 10);
    assert_replays(&store, "ivy");
}

#[test]
fn corruption_before_the_tail_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    session(&store, "jo", &[0], 0);
    session(&store, "jo", &[1], 10);
    drop(store);
    let path = dir.path().join("users/jo/journal.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1] = "{\"schema_version\":1,\"kind\":\"open\"";
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let store = open(dir.path());
    assert!(matches!(
        store.load_profile("jo"),
        Err(StoreError::Corrupt { line: 2, .. })
    ));
}

#[test]
fn unknown_schema_version_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("users/kai/journal.jsonl");
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(&path, "{\"schema_version\":99,\"kind\":\"init\"}\n").unwrap();
    let store = open(dir.path());
    assert!(matches!(
        store.list_sessions("kai"),
        Err(StoreError::Corrupt { .. })
    ));
}

#[test]
fn items_are_deduplicated_and_filtered_by_time() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let batch = vec![
        news(1, "One", None),
        news(2, "Two", Some("s")),
        news(1, "One again", None),
    ];
    assert_eq!(store.store_items("abc123", &batch).unwrap(), 2);
    assert_eq!(store.store_items("abc123", &batch).unwrap(), 0);
    assert_eq!(store.load_items("abc123", None).unwrap().len(), 2);
    assert_eq!(store.load_items("abc123", Some(at(2))).unwrap().len(), 1);
    assert!(store.load_items("abc123", Some(at(1000))).unwrap().is_empty());
    assert!(store.load_items("unknown", None).unwrap().is_empty());
    drop(store);
    let store = open(dir.path());
    assert_eq!(store.load_items("abc123", None).unwrap()[1], batch[1]);
}

#[test]
fn subscriptions_persist_and_sources_are_shared() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let src = FeedSource::new("https://a.test/rss".parse().unwrap(), Some("A".into()));
    let (_, new) = store.subscribe("lu", src.clone()).unwrap();
    assert!(new);
    assert!(!store.subscribe("lu", src.clone()).unwrap().1);
    store.subscribe("mo", src.clone()).unwrap();
    assert_eq!(store.sources().len(), 1);

    let mut polled = src.clone();
    polled.record_success(at(0), Some("\"v1\"".into()), None);
    store.update_source(&polled).unwrap();
    drop(store);

    let store = open(dir.path());
    assert_eq!(store.user_feeds("lu").unwrap(), vec![polled.clone()]);
    assert!(store.unsubscribe("lu", &src.feed_id).unwrap());
    assert!(!store.unsubscribe("lu", &src.feed_id).unwrap());
    assert_eq!(store.sources().len(), 1);
    assert!(store.unsubscribe("mo", &src.feed_id).unwrap());
    assert!(store.sources().is_empty());
    assert!(matches!(
        store.update_source(&polled),
        Err(StoreError::UnknownFeed(_))
    ));
}

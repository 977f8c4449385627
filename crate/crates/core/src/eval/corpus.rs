//! Seeded synthetic news corpus: topic vocabularies plus shared background terms.

use std::collections::HashSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::item::NewsItem;
use crate::text::Tokenizer;

/// Shape of the generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub topics: usize,
    pub topic_vocabulary: usize,
    pub background_vocabulary: usize,
    /// Zipf exponent of term popularity inside a topic (0 = uniform).
    pub topic_zipf: f64,
    pub background_zipf: f64,
    /// Candidate headlines generated per session.
    pub pool_size: usize,
    pub headline_topic_terms: [usize; 2],
    pub headline_background_terms: [usize; 2],
    pub summary_probability: f64,
    pub summary_terms: [usize; 2],
    /// Share of summary terms drawn from the headline's topic.
    pub summary_topic_share: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            topics: 12,
            topic_vocabulary: 150,
            background_vocabulary: 1000,
            topic_zipf: 0.3,
            background_zipf: 0.2,
            pool_size: 100,
            headline_topic_terms: [3, 5],
            headline_background_terms: [1, 3],
            summary_probability: 0.7,
            summary_terms: [10, 20],
            summary_topic_share: 0.5,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), String> {
        let ranges = [
            ("headline_topic_terms", self.headline_topic_terms),
            ("headline_background_terms", self.headline_background_terms),
            ("summary_terms", self.summary_terms),
        ];
        for (name, [lo, hi]) in ranges {
            if lo > hi {
                return Err(format!("corpus.{name}: lower bound {lo} exceeds {hi}"));
            }
        }
        if self.topics == 0 || self.topic_vocabulary == 0 || self.pool_size == 0 {
            return Err("corpus topics, topic_vocabulary and pool_size must be positive".into());
        }
        if self.headline_topic_terms[1] == 0 {
            return Err("corpus.headline_topic_terms must allow at least one term".into());
        }
        if self.background_vocabulary == 0 && self.headline_background_terms[1] > 0 {
            return Err("corpus.background_vocabulary is 0 but headlines need background terms".into());
        }
        for (name, v) in [
            ("topic_zipf", self.topic_zipf),
            ("background_zipf", self.background_zipf),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("corpus.{name} must be a finite non-negative number"));
            }
        }
        for (name, v) in [
            ("summary_probability", self.summary_probability),
            ("summary_topic_share", self.summary_topic_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("corpus.{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr", "kl", "pl",
    "st", "tr", "sh", "ch",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

/// Splits one 64-bit seed into independent streams by label.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the seed and each part
    let mut x = seed;
    for &p in parts {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

fn pick_count(rng: &mut impl Rng, [lo, hi]: [usize; 2]) -> usize {
    rng.random_range(lo..=hi)
}

/// Term sampler with Zipf-shaped popularity over a shuffled vocabulary.
#[derive(Debug, Clone)]
struct TermPool {
    terms: Vec<String>,
    zipf: Option<Zipf<f64>>,
}

impl TermPool {
    fn new(terms: Vec<String>, exponent: f64) -> Self {
        let zipf = (!terms.is_empty() && exponent > 0.0)
            .then(|| Zipf::new(terms.len() as f64, exponent).expect("valid zipf parameters"));
        Self { terms, zipf }
    }

    fn sample<'a>(&'a self, rng: &mut impl Rng) -> &'a str {
        let i = match &self.zipf {
            Some(z) => (z.sample(rng) as usize).clamp(1, self.terms.len()) - 1,
            None => rng.random_range(0..self.terms.len()),
        };
        &self.terms[i]
    }

    /// Up to `n` distinct terms.
    fn sample_distinct(&self, rng: &mut impl Rng, n: usize) -> Vec<String> {
        let n = n.min(self.terms.len());
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        // Rejection sampling; bounded so heavy skew cannot loop forever.
        for _ in 0..n * 50 {
            if out.len() == n {
                break;
            }
            let t = self.sample(rng);
            if seen.insert(t) {
                out.push(t.to_string());
            }
        }
        out
    }
}

/// A generated corpus: vocabularies and a per-(user, session) item generator.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    spec: CorpusSpec,
    seed: u64,
    topics: Vec<TermPool>,
    background: TermPool,
    epoch: DateTime<Utc>,
}

impl SyntheticCorpus {
    pub fn generate(spec: &CorpusSpec, seed: u64, tokenizer: &Tokenizer) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
        let total = spec.topics * spec.topic_vocabulary + spec.background_vocabulary;
        let mut seen: HashSet<String> = HashSet::with_capacity(total);
        let mut words = Vec::with_capacity(total);
        while words.len() < total {
            let syllables = rng.random_range(2..=4);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut rng).expect("non-empty"));
                w.push_str(VOWELS.choose(&mut rng).expect("non-empty"));
            }
            if !tokenizer.is_stopword(&w) && seen.insert(w.clone()) {
                words.push(w);
            }
        }
        let mut rest = words.split_off(spec.topics * spec.topic_vocabulary);
        rest.shuffle(&mut rng);
        let topics = words
            .chunks(spec.topic_vocabulary)
            .map(|c| TermPool::new(c.to_vec(), spec.topic_zipf))
            .collect();
        Self {
            spec: spec.clone(),
            seed,
            topics,
            background: TermPool::new(rest, spec.background_zipf),
            epoch: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn topic_terms(&self, topic: usize) -> &[String] {
        &self.topics[topic].terms
    }

    /// Candidate headlines for one user's session (1-based). Deterministic in
    /// the corpus seed, the user index and the session number.
    pub fn session_pool(&self, user: usize, session: usize) -> Vec<NewsItem> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[1, user as u64, session as u64]));
        let day = self.epoch + Duration::days(session as i64);
        (0..self.spec.pool_size)
            .map(|i| {
                let topic = rng.random_range(0..self.topics.len());
                let pool = &self.topics[topic];
                let n_topic = pick_count(&mut rng, self.spec.headline_topic_terms).max(1);
                let n_bg = if self.background.terms.is_empty() {
                    0
                } else {
                    pick_count(&mut rng, self.spec.headline_background_terms)
                };
                let mut words = pool.sample_distinct(&mut rng, n_topic);
                words.extend(self.background.sample_distinct(&mut rng, n_bg));
                words.shuffle(&mut rng);
                let headline = capitalize(&words.join(" "));

                let summary = rng.random_bool(self.spec.summary_probability).then(|| {
                    let n = pick_count(&mut rng, self.spec.summary_terms);
                    let words: Vec<&str> = (0..n)
                        .map(|_| {
                            if self.background.terms.is_empty()
                                || rng.random_bool(self.spec.summary_topic_share)
                            {
                                pool.sample(&mut rng)
                            } else {
                                self.background.sample(&mut rng)
                            }
                        })
                        .collect();
                    capitalize(&words.join(" ")) + "."
                });
                NewsItem {
                    headline,
                    hyperlink: format!("https://news.example/{}/u{user}/s{session}/{i}", topic + 1),
                    summary,
                    feed_id: format!("topic-{:02}", topic + 1),
                    fetched_at: day + Duration::seconds(i as i64),
                }
            })
            .collect()
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use feedrank_core::eval::{run_experiment, ExperimentPlan, SyntheticCorpus};
use feedrank_core::rank::{rank_candidates, Candidate, RankingMode};
use feedrank_core::text::{TermVector, Tokenizer};
use feedrank_core::Execution;

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn experiment(c: &mut Criterion) {
    let tok = Tokenizer::default();
    let plan = ExperimentPlan {
        n_users: 8,
        experimental_sessions: 10,
        ..ExperimentPlan::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| run_experiment(&plan, &tok, exec).expect("valid plan"))
        });
    }
    group.finish();
}

fn ranking(c: &mut Criterion) {
    let tok = Tokenizer::default();
    let plan = ExperimentPlan::default();
    let corpus = SyntheticCorpus::generate(&plan.corpus, 7, &tok);
    let mut group = c.benchmark_group("rank_cosine");
    for sessions in [1usize, 20, 100] {
        let candidates: Vec<Candidate> = (1..=sessions)
            .flat_map(|s| corpus.session_pool(0, s))
            .map(|item| Candidate::new(item, &tok))
            .collect();
        let profile = TermVector::from_weights(
            candidates
                .iter()
                .take(40)
                .flat_map(|c| c.headline.iter().map(|(t, w)| (t.clone(), *w))),
        );
        for (name, exec) in STRATEGIES {
            group.bench_with_input(
                BenchmarkId::new(name, candidates.len()),
                &candidates,
                |b, cands| b.iter(|| rank_candidates(&profile, cands, RankingMode::Cosine, 14, exec)),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, experiment, ranking);
criterion_main!(benches);

//! Simulated-user experiment: training sessions followed by one branch of
//! experimental sessions per ranking mode, all branches seeing the same pools.

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::corpus::{derive_seed, CorpusSpec, SyntheticCorpus};
use crate::eval::metrics::{difference_series, linear_fit, DifferencePoint, EvalError, SessionMetrics};
use crate::eval::simulate::{simulate_choices, SimulatedUser, UserModel};
use crate::exec::Execution;
use crate::profile::{apply_session, ProfileConfig, SessionSelections, UserProfile};
use crate::rank::{cosine_score, rank_candidates, Candidate, ModeKind, RankingMode};
use crate::text::Tokenizer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment plan: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "defaults::n_users")]
    pub n_users: usize,
    #[serde(default = "defaults::training_sessions")]
    pub training_sessions: usize,
    #[serde(default = "defaults::experimental_sessions")]
    pub experimental_sessions: usize,
    #[serde(default = "defaults::page_size")]
    pub page_size: usize,
    #[serde(default = "defaults::modes")]
    pub modes: Vec<ModeKind>,
    #[serde(default)]
    pub corpus_seed: u64,
    #[serde(default)]
    pub profile: ProfileConfig,
    /// Whether RANDOM branches still learn from their clicks.
    #[serde(default = "defaults::yes")]
    pub update_profile_in_random: bool,
    /// Which profile the non-cosine modes rank and are judged with.
    #[serde(default)]
    pub baseline_profile: BaselineProfile,
    #[serde(default)]
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub users: UserModel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineProfile {
    /// Each mode keeps and trains its own copy of the post-training profile.
    #[default]
    Independent,
    /// Each session, the other modes use the profile the cosine branch holds
    /// at that point and do not learn from their own clicks.
    FollowCosine,
}

mod defaults {
    use crate::rank::ModeKind;

    pub fn n_users() -> usize {
        15
    }
    pub fn training_sessions() -> usize {
        2
    }
    pub fn experimental_sessions() -> usize {
        30
    }
    pub fn page_size() -> usize {
        14
    }
    pub fn modes() -> Vec<ModeKind> {
        vec![ModeKind::Cosine, ModeKind::Binary, ModeKind::Random]
    }
    pub fn yes() -> bool {
        true
    }
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            n_users: defaults::n_users(),
            training_sessions: defaults::training_sessions(),
            experimental_sessions: defaults::experimental_sessions(),
            page_size: defaults::page_size(),
            modes: defaults::modes(),
            corpus_seed: 0,
            profile: ProfileConfig::default(),
            update_profile_in_random: true,
            baseline_profile: BaselineProfile::default(),
            corpus: CorpusSpec::default(),
            users: UserModel::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| Err(ExperimentError::Config(m));
        if self.n_users == 0
            || self.training_sessions == 0
            || self.experimental_sessions == 0
            || self.page_size == 0
        {
            return cfg("all session, user and page counts must be positive".into());
        }
        if self.modes.is_empty() {
            return cfg("modes must name at least one ranking mode".into());
        }
        let unique: BTreeSet<_> = self.modes.iter().collect();
        if unique.len() != self.modes.len() {
            return cfg("modes contains duplicates".into());
        }
        if self.baseline_profile == BaselineProfile::FollowCosine && !self.modes.contains(&ModeKind::Cosine) {
            return cfg("baseline_profile = follow_cosine needs the cosine mode".into());
        }
        self.corpus.validate().map_err(ExperimentError::Config)?;
        self.users
            .validate(self.corpus.topics)
            .map_err(ExperimentError::Config)
    }
}

/// Metrics of one user under one mode, experimental sessions only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: ModeKind,
    pub sessions: Vec<SessionMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRun {
    pub user_id: String,
    /// One entry per plan mode, in plan order.
    pub runs: Vec<ModeRun>,
}

impl UserRun {
    pub fn mode(&self, mode: ModeKind) -> Option<&ModeRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CD,
    RPrecision,
}

impl Metric {
    pub fn of(self, m: &SessionMetrics) -> Option<f64> {
        match self {
            Metric::CD => m.c_d,
            Metric::RPrecision => m.r_precision,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub plan: ExperimentPlan,
    pub users: Vec<UserRun>,
}

impl EvalReport {
    fn sessions(&self, user: usize, mode: ModeKind) -> Option<&[SessionMetrics]> {
        self.users.get(user)?.mode(mode).map(|r| r.sessions.as_slice())
    }

    /// Value of `metric` in the last experimental session.
    pub fn final_value(&self, user: usize, mode: ModeKind, metric: Metric) -> Option<f64> {
        metric.of(self.sessions(user, mode)?.last()?)
    }

    /// Mean of `metric` over the sessions where it is defined.
    pub fn mean_value(&self, user: usize, mode: ModeKind, metric: Metric) -> Option<f64> {
        mean(self.sessions(user, mode)?.iter().filter_map(|m| metric.of(m)))
    }

    /// `(session, value)` points where `metric` is defined.
    pub fn points(&self, user: usize, mode: ModeKind, metric: Metric) -> Vec<(f64, f64)> {
        self.sessions(user, mode)
            .unwrap_or_default()
            .iter()
            .filter_map(|m| Some((m.session_index as f64, metric.of(m)?)))
            .collect()
    }

    /// OLS `(slope, intercept)` of `metric` over sessions; `None` when the
    /// series has fewer than two defined points.
    pub fn trend(&self, user: usize, mode: ModeKind, metric: Metric) -> Option<(f64, f64)> {
        linear_fit(&self.points(user, mode, metric)).ok()
    }

    /// Per-session mean and spread of `a - b` over users.
    pub fn difference(&self, metric: Metric, a: ModeKind, b: ModeKind) -> Option<Vec<DifferencePoint>> {
        let table = |mode| -> Option<Vec<Vec<Option<f64>>>> {
            let per_user: Vec<&[SessionMetrics]> = (0..self.users.len())
                .map(|u| self.sessions(u, mode))
                .collect::<Option<_>>()?;
            Some(
                (0..self.plan.experimental_sessions)
                    .map(|s| per_user.iter().map(|ms| metric.of(&ms[s])).collect())
                    .collect(),
            )
        };
        difference_series(&table(a)?, &table(b)?).ok()
    }

    /// OLS slopes of the mean-difference and standard-deviation series.
    pub fn difference_trends(
        &self,
        metric: Metric,
        a: ModeKind,
        b: ModeKind,
    ) -> Option<(Option<f64>, Option<f64>)> {
        let d = self.difference(metric, a, b)?;
        let slope = |f: fn(&DifferencePoint) -> Option<f64>| {
            let pts: Vec<(f64, f64)> = d.iter().filter_map(|p| Some((p.session as f64, f(p)?))).collect();
            linear_fit(&pts).ok().map(|x| x.0)
        };
        Some((slope(|p| p.mean_diff), slope(|p| p.stddev)))
    }
}

/// Runs the whole plan. Users run independently under `exec`; results are
/// identical for every execution strategy.
pub fn run_experiment(
    plan: &ExperimentPlan,
    tokenizer: &Tokenizer,
    exec: Execution,
) -> Result<EvalReport, ExperimentError> {
    plan.validate()?;
    let corpus = SyntheticCorpus::generate(&plan.corpus, plan.corpus_seed, tokenizer);
    let indices: Vec<usize> = (0..plan.n_users).collect();
    let users = exec
        .map(&indices, |&u| {
            let user = plan.users.draw(&corpus, plan.corpus_seed, u);
            run_user(plan, &corpus, &user, u, tokenizer)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        plan: plan.clone(),
        users,
    })
}

struct Outcome {
    profile: UserProfile,
    metrics: SessionMetrics,
}

/// Offers one page, lets the user choose, and learns from the choices.
#[allow(clippy::too_many_arguments)]
fn play_session(
    plan: &ExperimentPlan,
    user: &SimulatedUser,
    profile: &UserProfile,
    candidates: &[Candidate],
    mode: RankingMode,
    session: usize,
    learn: bool,
    tokenizer: &Tokenizer,
) -> Result<Outcome, ExperimentError> {
    let page = rank_candidates(
        &profile.vector,
        candidates,
        mode,
        plan.page_size,
        Execution::Sequential,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(user.rng_seed, &[3, session as u64]));
    let chosen = simulate_choices(user, &page, &mut rng, tokenizer);

    // Every mode is judged by how well the offered headlines match the
    // profile it ranked with, whatever order it presented them in.
    let by_link: HashMap<&str, &Candidate> = candidates
        .iter()
        .map(|c| (c.item.hyperlink.as_str(), c))
        .collect();
    let judged: Vec<(&str, f64)> = page
        .iter()
        .map(|s| {
            let c = by_link[s.item.hyperlink.as_str()];
            (
                c.item.hyperlink.as_str(),
                cosine_score(&profile.vector, &c.headline),
            )
        })
        .collect();
    let metrics = SessionMetrics::compute(session, mode, &judged, &chosen)?;

    let profile = if learn {
        let picked = page
            .iter()
            .filter(|s| chosen.contains(&s.item.hyperlink))
            .map(|s| s.item.clone())
            .collect();
        let selections =
            SessionSelections::new(picked).map_err(|e| ExperimentError::Config(e.to_string()))?;
        apply_session(profile, &selections, tokenizer)
    } else {
        profile.clone()
    };
    Ok(Outcome { profile, metrics })
}

fn run_user(
    plan: &ExperimentPlan,
    corpus: &SyntheticCorpus,
    user: &SimulatedUser,
    index: usize,
    tokenizer: &Tokenizer,
) -> Result<UserRun, ExperimentError> {
    let pool = |session: usize| -> Vec<Candidate> {
        corpus
            .session_pool(index, session)
            .into_iter()
            .map(|item| Candidate::new(item, tokenizer))
            .collect()
    };
    let random_seed = |session: usize| derive_seed(plan.corpus_seed, &[4, index as u64, session as u64]);

    // Cold start: the first training page is random, later ones use the
    // profile learned so far.
    let mut profile = UserProfile::empty(plan.profile);
    for s in 1..=plan.training_sessions {
        let mode = if s == 1 {
            RankingMode::Random { seed: random_seed(s) }
        } else {
            RankingMode::Cosine
        };
        profile = play_session(plan, user, &profile, &pool(s), mode, s, true, tokenizer)?.profile;
    }

    let mut branches: Vec<(ModeKind, UserProfile, Vec<SessionMetrics>)> = plan
        .modes
        .iter()
        .map(|&m| (m, profile.clone(), Vec::with_capacity(plan.experimental_sessions)))
        .collect();
    for k in 1..=plan.experimental_sessions {
        let s = plan.training_sessions + k;
        let candidates = pool(s);
        let leader = (plan.baseline_profile == BaselineProfile::FollowCosine).then(|| {
            branches
                .iter()
                .find(|b| b.0 == ModeKind::Cosine)
                .map(|b| b.1.clone())
                .expect("validated: cosine mode present")
        });
        for (kind, branch, metrics) in &mut branches {
            let mode = kind.with_seed(random_seed(s));
            let follow = leader.as_ref().filter(|_| *kind != ModeKind::Cosine);
            let learn = follow.is_none() && (*kind != ModeKind::Random || plan.update_profile_in_random);
            let out = play_session(
                plan,
                user,
                follow.unwrap_or(branch),
                &candidates,
                mode,
                k,
                learn,
                tokenizer,
            )?;
            *branch = out.profile;
            metrics.push(out.metrics);
        }
    }
    Ok(UserRun {
        user_id: user.user_id.clone(),
        runs: branches
            .into_iter()
            .map(|(mode, _, sessions)| ModeRun { mode, sessions })
            .collect(),
    })
}

//! Content-based news ranking: tf term vectors, implicit-feedback user
//! profiles, cosine/binary/random ranking and an offline evaluation harness.

pub mod eval;
pub mod exec;
pub mod item;
pub mod profile;
pub mod rank;
pub mod text;

pub use exec::Execution;
pub use item::NewsItem;
pub use profile::{
    apply_session, replay_profile, session_profile, summary_profile, update_profile, ProfileConfig,
    ProfileError, SessionSelections, UserProfile,
};
pub use rank::{
    binary_score, cosine_score, rank, rank_candidates, Candidate, ModeKind, RankingMode, ScoredItem,
};
pub use text::{tf_vector, vector_sum_scaled, TermVector, TokenStream, Tokenizer};

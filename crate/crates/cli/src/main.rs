//! `feedrank`: run the reader service, poll feeds, print ranked pages, run
//! the simulated experiment and audit stored profiles.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Utc;
use clap::{Parser, Subcommand};
use feedrank_core::eval::{run_experiment, ExperimentPlan};
use feedrank_core::{apply_session, rank_candidates, Candidate, Execution, ModeKind, UserProfile};
use feedrank_ingest::Fetcher;
use feedrank_service::poll::{poll_once, PollOutcome};
use feedrank_service::pool::candidate_pool;
use feedrank_service::{open_store, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "feedrank",
    version,
    about = "Personalized feed reader that learns from clicks"
)]
struct Cli {
    /// Service config file (TOML). FEEDRANK_* variables override it, e.g.
    /// FEEDRANK_STORAGE__DATA_DIR or FEEDRANK_SERVER__PORT.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service with background feed polling.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        /// Log one JSON object per line instead of plain text.
        #[arg(long)]
        log_json: bool,
    },
    /// Fetch every subscribed feed once and print per-feed item counts.
    Fetch,
    /// Print the page a new session would show, as TSV.
    Rank {
        #[arg(long)]
        user: String,
        #[arg(long, default_value = "cosine")]
        mode: ModeKind,
        /// Shuffle seed for the random mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        page_size: Option<usize>,
    },
    /// Run the simulated-user experiment and write its six CSV tables.
    Experiment {
        /// Plan file, TOML or (with a .json extension) JSON.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run users one after another instead of on the thread pool.
        #[arg(long)]
        sequential: bool,
    },
    /// Rebuild a user's profile from the session journal and compare it with
    /// every stored snapshot.
    Replay {
        #[arg(long)]
        user: String,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Failure> {
    ServiceConfig::load(path).map_err(|e| Failure::Usage(e.to_string()))
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().map_err(Failure::runtime)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve { port, log_json } => {
            let mut config = load_config(cli.config.as_deref())?;
            if let Some(p) = port {
                config.server.port = p;
            }
            init_logging(log_json);
            runtime()?
                .block_on(feedrank_service::serve(config))
                .map_err(Failure::runtime)
        }
        Command::Fetch => fetch(&load_config(cli.config.as_deref())?),
        Command::Rank {
            user,
            mode,
            seed,
            page_size,
        } => {
            let config = load_config(cli.config.as_deref())?;
            rank(&config, &user, mode, seed, page_size)
        }
        Command::Experiment {
            plan,
            out,
            sequential,
        } => experiment(&plan, &out, sequential),
        Command::Replay { user } => replay(&load_config(cli.config.as_deref())?, &user),
    }
}

fn init_logging(json: bool) {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr);
    if json {
        builder.json().init();
    } else {
        builder.init();
    }
}

fn fetch(config: &ServiceConfig) -> Result<(), Failure> {
    let store = Arc::new(open_store(config).map_err(Failure::runtime)?);
    let fetcher = Fetcher::new(&config.fetch_config()).map_err(Failure::runtime)?;
    let reports = runtime()?.block_on(poll_once(store, fetcher, config, Utc::now(), true));
    let mut out = String::from("feed_id\tstatus\titems\tnew\turl\n");
    let mut failed = 0;
    for r in &reports {
        let (status, items, new) = match &r.outcome {
            PollOutcome::Updated { items, new } => ("updated".to_string(), *items, *new),
            PollOutcome::NotModified => ("not_modified".to_string(), 0, 0),
            PollOutcome::Failed { error, .. } => {
                failed += 1;
                (format!("failed: {error}"), 0, 0)
            }
        };
        let _ = writeln!(out, "{}\t{status}\t{items}\t{new}\t{}", r.feed_id, r.url);
    }
    print!("{out}");
    if failed > 0 {
        return Err(Failure::Runtime(format!(
            "{failed} of {} feeds failed",
            reports.len()
        )));
    }
    Ok(())
}

fn rank(
    config: &ServiceConfig,
    user: &str,
    mode: ModeKind,
    seed: u64,
    page_size: Option<usize>,
) -> Result<(), Failure> {
    let page_size = page_size.unwrap_or(config.ranking.page_size);
    if page_size == 0 {
        return Err(Failure::Usage("--page-size must be positive".into()));
    }
    let store = open_store(config).map_err(Failure::runtime)?;
    let profile = store.load_profile(user).map_err(Failure::runtime)?;
    let horizon = chrono::Duration::days(i64::from(config.ranking.item_horizon_days));
    let tokenizer = &store.options().tokenizer;
    let candidates: Vec<Candidate> = candidate_pool(&store, user, Utc::now(), page_size, horizon)
        .map_err(Failure::runtime)?
        .into_iter()
        .map(|item| Candidate::new(item, tokenizer))
        .collect();
    let page = rank_candidates(
        &profile.vector,
        &candidates,
        mode.with_seed(seed),
        page_size,
        Execution::default(),
    );
    let mut out = String::from("rank\tscore\thyperlink\theadline\n");
    for s in page {
        let headline = s.item.headline.replace(['\t', '\n'], " ");
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{}\t{headline}",
            s.rank, s.score, s.item.hyperlink
        );
    }
    print!("{out}");
    Ok(())
}

fn read_plan(path: &Path) -> Result<ExperimentPlan, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read plan {}: {e}", path.display())))?;
    let plan: ExperimentPlan = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    };
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(plan)
}

fn experiment(plan_path: &Path, out: &Path, sequential: bool) -> Result<(), Failure> {
    let plan = read_plan(plan_path)?;
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let report = run_experiment(&plan, &feedrank_core::Tokenizer::default(), exec).map_err(|e| match e {
        feedrank_core::eval::ExperimentError::Config(m) => Failure::Usage(m),
        other => Failure::runtime(other),
    })?;
    report.write_csvs(out).map_err(Failure::runtime)?;
    for (name, _) in report.csv_tables() {
        println!("{}", out.join(name).display());
    }
    Ok(())
}

fn replay(config: &ServiceConfig, user: &str) -> Result<(), Failure> {
    let store = open_store(config).map_err(Failure::runtime)?;
    let sessions = store.list_sessions(user).map_err(Failure::runtime)?;
    let history = store.profile_history(user).map_err(Failure::runtime)?;
    let tokenizer = &store.options().tokenizer;

    let mut profile: UserProfile = history[0].profile();
    let mut report = String::new();
    let mut mismatches = 0;
    for record in &sessions {
        profile = apply_session(&profile, &record.selections(), tokenizer);
        if record.profile_version_after == record.profile_version_before {
            continue;
        }
        let stored = &history[record.profile_version_after as usize];
        let diff = diff_profiles(&stored.profile(), &profile);
        if !diff.is_empty() {
            mismatches += 1;
            let _ = writeln!(
                report,
                "version {} (session {}):",
                stored.version, record.session_id
            );
            report.push_str(&diff);
        }
    }
    let latest = history.last().expect("version 0 always exists");
    if mismatches == 0 {
        println!(
            "ok\tuser={user}\tsessions={}\tversion={}\tterms={}",
            sessions.len(),
            latest.version,
            latest.vector.len()
        );
        Ok(())
    } else {
        print!("{report}");
        Err(Failure::Runtime(format!(
            "{mismatches} stored profile version(s) of {user} differ from the replayed journal"
        )))
    }
}

/// Terms whose stored and replayed weights are not bit-identical, as TSV lines.
fn diff_profiles(stored: &UserProfile, replayed: &UserProfile) -> String {
    let mut out = String::new();
    if stored.sessions_completed != replayed.sessions_completed {
        let _ = writeln!(
            out,
            "sessions_completed\t{}\t{}",
            stored.sessions_completed, replayed.sessions_completed
        );
    }
    let terms: std::collections::BTreeSet<&str> =
        stored.vector.terms().chain(replayed.vector.terms()).collect();
    for t in terms {
        let (a, b) = (stored.vector.get(t), replayed.vector.get(t));
        if a.map(f64::to_bits) != b.map(f64::to_bits) {
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
            let _ = writeln!(out, "{t}\t{}\t{}", show(a), show(b));
        }
    }
    out
}

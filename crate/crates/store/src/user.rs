use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use feedrank_core::{apply_session, ProfileConfig, RankingMode, ScoredItem, Tokenizer};
use serde::{Deserialize, Serialize};

use crate::journal::{self, Journal};
use crate::record::{NewSession, OpenSession, ProfileSnapshot, SessionRecord};
use crate::StoreError;

/// One line of a user journal.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Entry {
    Init {
        user_id: String,
        config: ProfileConfig,
        at: DateTime<Utc>,
    },
    Open {
        session: OpenSession,
    },
    Click {
        session_id: u64,
        hyperlink: String,
        at: DateTime<Utc>,
    },
    /// A finished session and, if the profile changed, its new version.
    Commit {
        record: SessionRecord,
        snapshot: Option<ProfileSnapshot>,
    },
}

#[derive(Debug)]
pub(crate) struct UserState {
    user_id: String,
    initialized: bool,
    /// Index 0 is the empty profile.
    pub snapshots: Vec<ProfileSnapshot>,
    pub sessions: Vec<SessionRecord>,
    pub open: Option<OpenSession>,
    journal: Journal,
}

impl UserState {
    pub fn load(path: PathBuf, user_id: &str, default_config: ProfileConfig) -> Result<Self, StoreError> {
        let loaded = journal::read::<Entry>(&path)?;
        let mut state = Self {
            user_id: user_id.to_string(),
            initialized: false,
            snapshots: vec![ProfileSnapshot::initial(user_id, default_config)],
            sessions: Vec::new(),
            open: None,
            journal: Journal::new(path.clone(), loaded.torn.then_some(loaded.valid_len)),
        };
        for (i, entry) in loaded.entries.into_iter().enumerate() {
            state.apply(entry).map_err(|reason| StoreError::Corrupt {
                path: path.clone(),
                line: i + 1,
                reason,
            })?;
        }
        Ok(state)
    }

    pub fn latest(&self) -> &ProfileSnapshot {
        self.snapshots.last().expect("version 0 always exists")
    }

    fn next_session_id(&self) -> u64 {
        self.sessions.last().map_or(1, |r| r.session_id + 1)
    }

    /// Folds one journal entry into memory, checking it fits what came before.
    fn apply(&mut self, entry: Entry) -> Result<(), String> {
        match entry {
            Entry::Init { user_id, config, .. } => {
                if self.initialized || !self.sessions.is_empty() || self.open.is_some() {
                    return Err("init entry after the journal start".into());
                }
                if user_id != self.user_id {
                    return Err(format!("journal belongs to {user_id:?}"));
                }
                self.snapshots = vec![ProfileSnapshot::initial(&user_id, config)];
                self.initialized = true;
            }
            Entry::Open { session } => {
                if let Some(open) = &self.open {
                    return Err(format!(
                        "session {} opened while {} is open",
                        session.session_id, open.session_id
                    ));
                }
                if session.session_id != self.next_session_id() {
                    return Err(format!("session id {} out of sequence", session.session_id));
                }
                self.open = Some(session);
            }
            Entry::Click {
                session_id,
                hyperlink,
                ..
            } => {
                let open = self
                    .open
                    .as_mut()
                    .filter(|o| o.session_id == session_id)
                    .ok_or_else(|| format!("click for session {session_id}, which is not open"))?;
                if !open.offers(&hyperlink) {
                    return Err(format!("click on {hyperlink:?}, which was not offered"));
                }
                open.clicks.insert(hyperlink);
            }
            Entry::Commit { record, snapshot } => {
                if record.session_id != self.next_session_id() {
                    return Err(format!("session id {} out of sequence", record.session_id));
                }
                let current = self.latest().version;
                if record.profile_version_before != current {
                    return Err(format!(
                        "session {} starts from profile version {}, expected {current}",
                        record.session_id, record.profile_version_before
                    ));
                }
                match &snapshot {
                    Some(s) if s.version != current + 1 || record.profile_version_after != s.version => {
                        return Err(format!(
                            "snapshot version {} does not follow {current}",
                            s.version
                        ));
                    }
                    None if record.profile_version_after != current => {
                        return Err(format!("session {} names a missing snapshot", record.session_id));
                    }
                    _ => {}
                }
                if self
                    .open
                    .as_ref()
                    .is_some_and(|o| o.session_id == record.session_id)
                {
                    self.open = None;
                }
                self.sessions.push(record);
                self.snapshots.extend(snapshot);
            }
        }
        Ok(())
    }

    /// Writes `entry` and only then applies it in memory.
    fn write(&mut self, entry: Entry) -> Result<(), StoreError> {
        if !self.initialized {
            let init = Entry::Init {
                user_id: self.user_id.clone(),
                config: self.latest().config,
                at: Utc::now(),
            };
            self.journal.append(&init)?;
            self.initialized = true;
        }
        self.journal.append(&entry)?;
        self.apply(entry).map_err(StoreError::InvalidSession)
    }

    pub fn open_session(
        &mut self,
        mode: RankingMode,
        offered: Vec<ScoredItem>,
        started_at: DateTime<Utc>,
    ) -> Result<OpenSession, StoreError> {
        if let Some(open) = &self.open {
            return Err(StoreError::SessionAlreadyOpen {
                user_id: self.user_id.clone(),
                session_id: open.session_id,
            });
        }
        check_offered(&offered)?;
        let session = OpenSession {
            session_id: self.next_session_id(),
            user_id: self.user_id.clone(),
            mode,
            offered,
            clicks: BTreeSet::new(),
            started_at,
        };
        self.write(Entry::Open {
            session: session.clone(),
        })?;
        Ok(session)
    }

    pub fn record_click(&mut self, hyperlink: &str, at: DateTime<Utc>) -> Result<bool, StoreError> {
        let open = self
            .open
            .as_ref()
            .ok_or_else(|| StoreError::NoOpenSession(self.user_id.clone()))?;
        if !open.offers(hyperlink) {
            return Err(StoreError::NotOffered(hyperlink.to_string()));
        }
        if open.clicks.contains(hyperlink) {
            return Ok(false);
        }
        let session_id = open.session_id;
        self.write(Entry::Click {
            session_id,
            hyperlink: hyperlink.to_string(),
            at,
        })?;
        Ok(true)
    }

    pub fn end_session(
        &mut self,
        expected: Option<u64>,
        ended_at: DateTime<Utc>,
        tokenizer: &Tokenizer,
    ) -> Result<SessionRecord, StoreError> {
        let open = match (&self.open, expected) {
            (Some(o), Some(id)) if o.session_id != id => None,
            (Some(o), _) => Some(o.clone()),
            (None, _) => None,
        };
        let Some(open) = open else {
            return Err(match expected {
                Some(id) => StoreError::Conflict {
                    user_id: self.user_id.clone(),
                    expected: id,
                },
                None => StoreError::NoOpenSession(self.user_id.clone()),
            });
        };
        self.commit(
            NewSession {
                user_id: open.user_id,
                mode: open.mode,
                offered: open.offered,
                chosen: open.clicks,
                started_at: open.started_at,
                ended_at,
            },
            open.session_id,
            tokenizer,
        )
    }

    pub fn append_session(
        &mut self,
        session: NewSession,
        tokenizer: &Tokenizer,
    ) -> Result<SessionRecord, StoreError> {
        if let Some(open) = &self.open {
            return Err(StoreError::SessionAlreadyOpen {
                user_id: self.user_id.clone(),
                session_id: open.session_id,
            });
        }
        check_offered(&session.offered)?;
        if let Some(stray) = session
            .chosen
            .iter()
            .find(|c| !session.offered.iter().any(|s| &s.item.hyperlink == *c))
        {
            return Err(StoreError::NotOffered(stray.clone()));
        }
        if session.ended_at < session.started_at {
            return Err(StoreError::InvalidSession("ended before it started".into()));
        }
        let id = self.next_session_id();
        self.commit(session, id, tokenizer)
    }

    fn commit(
        &mut self,
        session: NewSession,
        session_id: u64,
        tokenizer: &Tokenizer,
    ) -> Result<SessionRecord, StoreError> {
        let before = self.latest().clone();
        let mut record = SessionRecord {
            session_id,
            user_id: self.user_id.clone(),
            mode: session.mode,
            offered: session.offered,
            chosen: session.chosen,
            started_at: session.started_at,
            ended_at: session.ended_at,
            profile_version_before: before.version,
            profile_version_after: before.version,
        };
        let profile = before.profile();
        let next = apply_session(&profile, &record.selections(), tokenizer);
        let snapshot = (next.sessions_completed != profile.sessions_completed).then(|| {
            record.profile_version_after = before.version + 1;
            ProfileSnapshot::of(&self.user_id, before.version + 1, &next)
        });
        self.write(Entry::Commit {
            record: record.clone(),
            snapshot,
        })?;
        Ok(record)
    }
}

fn check_offered(offered: &[ScoredItem]) -> Result<(), StoreError> {
    let mut seen = HashSet::new();
    for s in offered {
        if !seen.insert(s.item.hyperlink.as_str()) {
            return Err(StoreError::InvalidSession(format!(
                "{:?} offered twice",
                s.item.hyperlink
            )));
        }
    }
    Ok(())
}

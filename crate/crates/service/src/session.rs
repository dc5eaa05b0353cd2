//! Per-session state machine and its journal.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use mealprint_core::llm::ChatSessionState;
use mealprint_core::matching::Proposal;
use mealprint_core::pipeline::AssessmentBundle;
use mealprint_core::recipe::ExtractionReport;

/// Forward-only. `Confirmed` exists only inside a selection request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Parsed,
    Proposed,
    Confirmed,
    Assessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub target_country: String,
    pub stage: Stage,
    pub recipe_text: String,
    pub created_at: u64,
    pub updated_at: u64,
    pub extraction: ExtractionReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<Proposal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<AssessmentBundle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat: Option<ChatSessionState>,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Session {
    pub fn new(target_country: String, recipe_text: String, extraction: ExtractionReport) -> Self {
        let t = now();
        Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            target_country,
            stage: Stage::Parsed,
            recipe_text,
            created_at: t,
            updated_at: t,
            extraction,
            proposal: None,
            bundle: None,
            chat: None,
        }
    }

    /// Moves to `next`, which must be later than the current stage.
    pub fn advance(&mut self, next: Stage) {
        assert!(next > self.stage, "stage {:?} cannot follow {:?}", next, self.stage);
        self.stage = next;
        self.updated_at = now();
    }

    pub fn touch(&mut self) {
        self.updated_at = now();
    }
}

/// Append-only JSON lines, one full snapshot per change; the last line per id wins.
pub struct Journal {
    path: PathBuf,
    file: StdMutex<File>,
}

impl Journal {
    pub fn open(path: &Path) -> std::io::Result<(Self, Vec<Session>)> {
        let mut latest: HashMap<String, Session> = HashMap::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Session>(&line) {
                    Ok(s) => {
                        latest.insert(s.id.clone(), s);
                    }
                    Err(e) => tracing::warn!(line = n + 1, error = %e, "skipping unreadable journal line"),
                }
            }
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut sessions: Vec<Session> = latest.into_values().collect();
        sessions.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        Ok((Journal { path: path.to_path_buf(), file: StdMutex::new(file) }, sessions))
    }

    pub fn append(&self, session: &Session) -> std::io::Result<()> {
        let mut line = serde_json::to_string(session).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    journal: Option<Journal>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore::default()
    }

    pub fn with_journal(path: &Path) -> std::io::Result<Self> {
        let (journal, restored) = Journal::open(path)?;
        tracing::info!(sessions = restored.len(), journal = %path.display(), "sessions restored");
        let sessions = restored.into_iter().map(|s| (s.id.clone(), Arc::new(Mutex::new(s)))).collect();
        Ok(SessionStore { sessions: RwLock::new(sessions), journal: Some(journal) })
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).get(id).cloned()
    }

    pub fn insert(&self, session: Session) -> std::io::Result<SessionHandle> {
        self.persist(&session)?;
        let id = session.id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id, handle.clone());
        Ok(handle)
    }

    pub fn persist(&self, session: &Session) -> std::io::Result<()> {
        match &self.journal {
            Some(j) => j.append(session),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mealprint_core::recipe::ExtractionMode;

    fn session() -> Session {
        let extraction = ExtractionReport { ingredients: vec![], mode: ExtractionMode::Deterministic, fallback_reason: None, skipped: vec![] };
        Session::new("NL".into(), "rice".into(), extraction)
    }

    #[test]
    fn ids_are_url_safe_and_distinct() {
        let a = session();
        let b = session();
        assert_ne!(a.id, b.id);
        assert!(a.id.chars().all(|c| c.is_ascii_alphanumeric()));
    }

    #[test]
    #[should_panic]
    fn stages_only_move_forward() {
        let mut s = session();
        s.advance(Stage::Assessed);
        s.advance(Stage::Proposed);
    }

    #[test]
    fn journal_keeps_last_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let mut s = session();
        {
            let store = SessionStore::with_journal(&path).unwrap();
            store.insert(s.clone()).unwrap();
            s.advance(Stage::Proposed);
            store.persist(&s).unwrap();
        }
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{broken\n").unwrap();
        let store = SessionStore::with_journal(&path).unwrap();
        assert_eq!(store.len(), 1);
        let restored = store.get(&s.id).unwrap();
        assert_eq!(restored.try_lock().unwrap().stage, Stage::Proposed);
    }
}

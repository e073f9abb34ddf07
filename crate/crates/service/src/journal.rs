//! Append-only per-session journals.
//!
//! Each session owns `<dir>/<session_id>.jsonl`. Every line is one entry with
//! a contiguous sequence number. Entries are fsynced before the HTTP response
//! that depends on them is sent. Replaying the inputs through the
//! deterministic state machine reconstructs the session exactly.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use screenprio_core::datastore::Dataset;
use screenprio_core::session::{Judgment, SessionConfig, SessionState};

pub const JOURNAL_EXT: &str = "jsonl";
pub const QUARANTINE_DIR: &str = "quarantine";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        created_at: String,
        config: SessionConfig,
    },
    BatchIssued {
        batch_token: String,
    },
    JudgmentsApplied {
        batch_token: String,
        judgments: Vec<Judgment>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub session_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Open journal for one session.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    session_id: String,
    next_seq: u64,
}

impl Journal {
    pub fn path_for(dir: &Path, session_id: &str) -> PathBuf {
        dir.join(format!("{session_id}.{JOURNAL_EXT}"))
    }

    pub fn create(dir: &Path, session_id: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = Self::path_for(dir, session_id);
        OpenOptions::new().write(true).create_new(true).open(&path)?;
        Ok(Self {
            path,
            session_id: session_id.to_string(),
            next_seq: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends the events as one write and syncs the file.
    pub fn append(&mut self, events: Vec<Event>) -> std::io::Result<()> {
        let mut buf = Vec::new();
        let mut seq = self.next_seq;
        for event in events {
            let entry = JournalEntry {
                session_id: self.session_id.clone(),
                seq,
                event,
            };
            serde_json::to_writer(&mut buf, &entry)?;
            buf.push(b'\n');
            seq += 1;
        }
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        file.write_all(&buf)?;
        file.sync_data()?;
        self.next_seq = seq;
        Ok(())
    }
}

/// A session rebuilt from its journal.
#[derive(Debug)]
pub struct Replayed {
    pub session_id: String,
    pub created_at: String,
    pub state: SessionState,
    pub journal: Journal,
}

/// Rebuilds one session. Any malformed, out-of-order or rejected entry is an
/// error naming the offending line.
pub fn replay(path: &Path, dataset: &Dataset) -> Result<Replayed, String> {
    let file = File::open(path).map_err(|e| format!("cannot open: {e}"))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut lineno = 0u64;
    let mut session: Option<(String, String, SessionState)> = None;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| format!("line {}: read error: {e}", lineno + 1))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if !line.ends_with('\n') {
            return Err(format!("line {lineno}: truncated entry"));
        }
        let entry: JournalEntry = serde_json::from_str(line.trim_end())
            .map_err(|e| format!("line {lineno}: malformed entry: {e}"))?;
        if entry.seq != lineno - 1 {
            return Err(format!(
                "line {lineno}: sequence {} where {} was expected",
                entry.seq,
                lineno - 1
            ));
        }
        let fail = |msg: String| format!("line {lineno}: {msg}");
        match (&mut session, entry.event) {
            (None, Event::Created { created_at, config }) => {
                let state = SessionState::start(config, dataset).map_err(|e| fail(e.to_string()))?;
                session = Some((entry.session_id, created_at, state));
            }
            (None, _) => return Err(fail("first entry is not `created`".into())),
            (Some((id, ..)), _) if *id != entry.session_id => {
                return Err(fail(format!("entry belongs to session `{}`", entry.session_id)))
            }
            (Some(_), Event::Created { .. }) => return Err(fail("duplicate `created`".into())),
            (Some((_, _, state)), Event::BatchIssued { batch_token }) => {
                let batch = state.next_batch(dataset).map_err(|e| fail(e.to_string()))?;
                if batch.token != batch_token {
                    return Err(fail(format!(
                        "replayed token `{}` differs from journaled `{batch_token}`",
                        batch.token
                    )));
                }
            }
            (Some((_, _, state)), Event::JudgmentsApplied { batch_token, judgments }) => {
                state
                    .submit_feedback(dataset, &batch_token, &judgments)
                    .map_err(|e| fail(e.to_string()))?;
            }
        }
    }
    let (session_id, created_at, state) = session.ok_or_else(|| "empty journal".to_string())?;
    let expected = Journal::path_for(path.parent().unwrap_or(Path::new(".")), &session_id);
    if expected.file_name() != path.file_name() {
        return Err(format!("file name does not match session `{session_id}`"));
    }
    Ok(Replayed {
        session_id: session_id.clone(),
        created_at,
        state,
        journal: Journal {
            path: path.to_path_buf(),
            session_id,
            next_seq: lineno,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Quarantined {
    pub file: PathBuf,
    pub diagnostic: String,
}

/// Replays every journal in `dir`. Journals that fail are moved to
/// `dir/quarantine/` next to a `.reason` file; the rest are restored.
pub fn recover_sessions(
    dir: &Path,
    dataset: &Dataset,
) -> std::io::Result<(Vec<Replayed>, Vec<Quarantined>)> {
    if !dir.exists() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == JOURNAL_EXT))
        .collect();
    paths.sort();
    let mut restored = Vec::new();
    let mut quarantined = Vec::new();
    for path in paths {
        match replay(&path, dataset) {
            Ok(r) => restored.push(r),
            Err(diagnostic) => {
                let qdir = dir.join(QUARANTINE_DIR);
                fs::create_dir_all(&qdir)?;
                let name = path.file_name().expect("journal file has a name");
                let target = qdir.join(name);
                fs::rename(&path, &target)?;
                let mut reason = target.clone().into_os_string();
                reason.push(".reason");
                fs::write(&reason, format!("{diagnostic}\n"))?;
                tracing::warn!(file = %path.display(), %diagnostic, "quarantined session journal");
                quarantined.push(Quarantined {
                    file: target,
                    diagnostic,
                });
            }
        }
    }
    Ok((restored, quarantined))
}

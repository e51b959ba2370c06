//! Append-only journal and the state derived from it.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use conjr_core::annotation::Consolidation;
use conjr_core::RewriteSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("journal {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Assign {
        batch: String,
        annotator: String,
    },
    Submission {
        submission: RewriteSet,
    },
    Consolidation {
        submissions: Vec<RewriteSet>,
        result: Consolidation,
    },
}

/// Everything derived from the journal. Cheap to clone relative to the
/// rate of writes at annotation scale.
#[derive(Debug, Clone, Default)]
pub struct State {
    /// Batch id → annotator.
    pub assignments: BTreeMap<String, String>,
    /// Instance id → every submission in arrival order.
    pub submissions: BTreeMap<String, Vec<RewriteSet>>,
    /// Instance id → latest consolidation and the submissions it used.
    pub consolidations: BTreeMap<String, (Vec<RewriteSet>, Consolidation)>,
    pub events: usize,
}

impl State {
    pub fn apply(&mut self, event: &Event) {
        self.events += 1;
        match event {
            Event::Assign { batch, annotator } => {
                self.assignments.insert(batch.clone(), annotator.clone());
            }
            Event::Submission { submission } => {
                self.submissions
                    .entry(submission.instance_id.clone())
                    .or_default()
                    .push(submission.clone());
            }
            Event::Consolidation {
                submissions,
                result,
            } => {
                self.consolidations.insert(
                    result.instance_id.clone(),
                    (submissions.clone(), result.clone()),
                );
            }
        }
    }

    /// The newest submission of each annotator for an instance, ordered by
    /// annotator id.
    pub fn latest_submissions(&self, instance: &str) -> Vec<RewriteSet> {
        let mut latest: BTreeMap<&str, &RewriteSet> = BTreeMap::new();
        for s in self.submissions.get(instance).into_iter().flatten() {
            latest.insert(&s.annotator, s);
        }
        latest.into_values().cloned().collect()
    }
}

/// The journal file plus the published snapshot of its state.
///
/// Writers serialize on one mutex, append, then publish a new snapshot.
/// Readers only clone the current `Arc`.
#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    writer: Mutex<(File, State)>,
    snapshot: RwLock<Arc<State>>,
}

impl Store {
    /// Opens (creating if needed) a journal and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        let mut state = State::default();
        for (i, line) in BufReader::new(&file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            state.apply(&event);
        }
        Ok(Store {
            snapshot: RwLock::new(Arc::new(state.clone())),
            writer: Mutex::new((file, state)),
            path,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn snapshot(&self) -> Arc<State> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    /// Runs `decide` against the current state under the writer lock and
    /// appends whatever events it returns. The decision and the append are
    /// atomic with respect to other writers.
    pub fn transact<T>(
        &self,
        decide: impl FnOnce(&State) -> (Vec<Event>, T),
    ) -> Result<T, StoreError> {
        let mut guard = self.writer.lock().expect("writer lock");
        let (file, state) = &mut *guard;
        let (events, out) = decide(state);
        if events.is_empty() {
            return Ok(out);
        }
        let mut buf = String::new();
        for e in &events {
            buf.push_str(&serde_json::to_string(e).expect("events serialize"));
            buf.push('\n');
        }
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        file.write_all(buf.as_bytes()).map_err(io)?;
        file.flush().map_err(io)?;
        for e in &events {
            state.apply(e);
        }
        *self.snapshot.write().expect("snapshot lock") = Arc::new(state.clone());
        Ok(out)
    }
}

//! Interactive acquisition sessions over a shared, read-only model.
//!
//! Each session holds raw answers and the current query. The model standardizes
//! answers itself, so the session only stores what the operator entered.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use dfs_core::observation::{Observation, Policy, Prediction, Predictor};
use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundle::ModelBundle;

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown session '{0}'")]
    NotFound(String),
    #[error("session '{0}' expired after being idle")]
    Expired(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("model failure: {0}")]
    Model(String),
}

impl From<dfs_core::Error> for SessionError {
    fn from(e: dfs_core::Error) -> Self {
        SessionError::Model(e.to_string())
    }
}

/// Source of monotonic time; replaceable so tests can advance it.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock {
    start: Instant,
    offset_ms: AtomicU64,
}

impl ManualClock {
    pub fn new() -> Self {
        ManualClock { start: Instant::now(), offset_ms: AtomicU64::new(0) }
    }

    pub fn advance(&self, by: Duration) {
        self.offset_ms.fetch_add(by.as_millis() as u64, Ordering::SeqCst);
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        self.start + Duration::from_millis(self.offset_ms.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Created {
    pub session_id: String,
    pub k: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Next {
    Query { group_index: usize, group_name: String, members: Vec<String> },
    Done { done: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PredictionValue {
    Classes(Vec<f64>),
    Value(f64),
}

impl From<&Prediction<f64>> for PredictionValue {
    fn from(p: &Prediction<f64>) -> Self {
        match p {
            Prediction::Classes(s) => PredictionValue::Classes(s.as_slice().to_vec()),
            Prediction::Value(v) => PredictionValue::Value(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answered {
    pub accepted: bool,
    pub prediction: PredictionValue,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerRecord {
    pub group_index: usize,
    pub group_name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub session_id: String,
    pub k: usize,
    pub step: usize,
    pub done: bool,
    pub answers: Vec<AnswerRecord>,
    pub mask: Vec<u8>,
    pub pending_query: Option<usize>,
    pub predictions: Vec<PredictionValue>,
    pub created_at: f64,
    pub updated_at: f64,
}

struct Session {
    id: String,
    budget: usize,
    obs: Observation<f64>,
    answers: Vec<AnswerRecord>,
    pending: Option<usize>,
    predictions: Vec<PredictionValue>,
    created_at: f64,
    updated_at: f64,
    last_touch: Instant,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub struct SessionManager {
    bundle: Arc<ModelBundle>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    idle_timeout: Duration,
    clock: Arc<dyn Clock>,
}

impl SessionManager {
    pub fn new(bundle: Arc<ModelBundle>, idle_timeout: Duration) -> Self {
        Self::with_clock(bundle, idle_timeout, Arc::new(SystemClock))
    }

    pub fn with_clock(bundle: Arc<ModelBundle>, idle_timeout: Duration, clock: Arc<dyn Clock>) -> Self {
        SessionManager { bundle, sessions: Mutex::new(HashMap::new()), idle_timeout, clock }
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, budget: Option<usize>) -> Result<Created, SessionError> {
        let meta = self.bundle.metadata();
        let g = meta.group_count;
        let k = budget.or(self.bundle.default_budget()).unwrap_or(g);
        if k == 0 || k > g {
            return Err(SessionError::BadRequest(format!("budget must be between 1 and {g}, got {k}")));
        }
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = unix_now();
        let session = Session {
            id: id.clone(),
            budget: k,
            obs: Observation::empty(meta.feature_count, g),
            answers: Vec::new(),
            pending: None,
            predictions: Vec::new(),
            created_at: now,
            updated_at: now,
            last_touch: self.clock.now(),
        };
        self.sessions.lock().insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(Created {
            session_id: id,
            k,
            feature_names: meta.feature_names.clone(),
            class_names: meta.class_names.clone(),
        })
    }

    /// The live session, or an expiry error (and eviction) if it idled out.
    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        let mut map = self.sessions.lock();
        let session = map.get(id).cloned().ok_or_else(|| SessionError::NotFound(id.to_string()))?;
        let idle = self.clock.now().saturating_duration_since(session.lock().last_touch);
        if idle > self.idle_timeout {
            map.remove(id);
            return Err(SessionError::Expired(id.to_string()));
        }
        Ok(session)
    }

    fn touch(&self, s: &mut Session) {
        s.last_touch = self.clock.now();
        s.updated_at = unix_now();
    }

    fn query(&self, s: &mut Session) -> Result<Option<usize>, SessionError> {
        if s.answers.len() >= s.budget {
            return Ok(None);
        }
        if let Some(q) = s.pending {
            return Ok(Some(q));
        }
        // the learned policy is deterministic; the rng is never consulted
        let q = self.bundle.model().select(&s.obs, &mut ChaCha8Rng::seed_from_u64(0))?;
        s.pending = Some(q);
        Ok(Some(q))
    }

    pub fn next(&self, id: &str) -> Result<Next, SessionError> {
        let session = self.get(id)?;
        let mut s = session.lock();
        self.touch(&mut s);
        let meta = self.bundle.metadata();
        Ok(match self.query(&mut s)? {
            None => Next::Done { done: true },
            Some(q) => Next::Query {
                group_index: q,
                group_name: meta.group_names[q].clone(),
                members: self.bundle.model().groups().members(q)?.iter().map(|&f| meta.feature_names[f].clone()).collect(),
            },
        })
    }

    pub fn answer(&self, id: &str, group_index: usize, values: &[f64]) -> Result<Answered, SessionError> {
        let session = self.get(id)?;
        let mut s = session.lock();
        self.touch(&mut s);
        let expected = match self.query(&mut s)? {
            None => {
                return Err(SessionError::Conflict(format!("budget of {} answers is exhausted", s.budget)));
            }
            Some(q) => q,
        };
        if group_index != expected {
            return Err(SessionError::Conflict(format!(
                "answer is for group {group_index} but the current query is group {expected}"
            )));
        }
        let members = self.bundle.model().groups().members(expected)?;
        if values.len() != members.len() {
            return Err(SessionError::BadRequest(format!(
                "group {expected} expects {} value(s), got {}",
                members.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(SessionError::BadRequest(format!("value {v} is not finite")));
        }
        let mut obs = s.obs.clone();
        obs.reveal_values(expected, values, self.bundle.model().groups())?;
        let prediction = self.bundle.model().predict(&obs)?;
        let prediction = PredictionValue::from(&prediction);
        s.obs = obs;
        s.pending = None;
        s.answers.push(AnswerRecord {
            group_index: expected,
            group_name: self.bundle.metadata().group_names[expected].clone(),
            values: values.to_vec(),
        });
        s.predictions.push(prediction.clone());
        Ok(Answered { accepted: true, prediction, step: s.answers.len() })
    }

    pub fn snapshot(&self, id: &str) -> Result<Snapshot, SessionError> {
        let session = self.get(id)?;
        let mut s = session.lock();
        self.touch(&mut s);
        Ok(Snapshot {
            session_id: s.id.clone(),
            k: s.budget,
            step: s.answers.len(),
            done: s.answers.len() >= s.budget,
            answers: s.answers.clone(),
            mask: s.obs.observed().iter().map(|&o| u8::from(o)).collect(),
            pending_query: s.pending,
            predictions: s.predictions.clone(),
            created_at: s.created_at,
            updated_at: s.updated_at,
        })
    }

    pub fn delete(&self, id: &str) -> Result<(), SessionError> {
        self.get(id)?;
        self.sessions.lock().remove(id);
        Ok(())
    }

    /// Drops every idle session; returns how many were removed.
    pub fn evict_expired(&self) -> usize {
        let now = self.clock.now();
        let mut map = self.sessions.lock();
        let before = map.len();
        map.retain(|_, s| now.saturating_duration_since(s.lock().last_touch) <= self.idle_timeout);
        before - map.len()
    }
}

//! Scoring through an external child process over a line-delimited JSON
//! protocol on standard streams.
//!
//! Each request is one JSON line:
//!
//! ```json
//! {"id":0,"kind":"coref","tokens":["The","doctor","..."],"mention_a":[1,2],"mention_b":[4,5]}
//! {"id":1,"kind":"lm","tokens":["He","is","a","doctor"],"prefix_len":3,"target":"doctor"}
//! ```
//!
//! The child must answer each request with exactly one JSON line,
//! `{"id":n,"score":x}` or `{"id":n,"error":"msg"}`, in request order. Ids
//! are assigned by the scorer and strictly increase from zero; exactly one
//! request is in flight at a time, so request `n + 1` is never written
//! before the response to `n` was read.
//!
//! The child is spawned lazily on the first request and terminated when the
//! scorer is dropped (TERM first, kill after a 2 s grace period). Scores
//! pass through as parsed JSON doubles with no re-encoding.

use std::io::Write;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bias::{ScoreRequest, Scorer, ScorerError};

/// How to run and talk to the child scorer.
#[derive(Debug, Clone)]
pub struct BridgeConfig {
    /// Program and arguments.
    pub command: Vec<String>,
    /// Per-request response deadline.
    pub timeout: Duration,
}

impl BridgeConfig {
    pub fn new(command: Vec<String>) -> Self {
        BridgeConfig {
            command,
            timeout: Duration::from_secs(30),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    kind: &'a str,
    tokens: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    mention_a: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mention_b: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prefix_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<&'a str>,
}

impl<'a> WireRequest<'a> {
    fn new(id: u64, request: &'a ScoreRequest) -> Self {
        match request {
            ScoreRequest::CorefPair {
                tokens,
                mention_a,
                mention_b,
            } => WireRequest {
                id,
                kind: "coref",
                tokens,
                mention_a: Some([mention_a.0, mention_a.1]),
                mention_b: Some([mention_b.0, mention_b.1]),
                prefix_len: None,
                target: None,
            },
            ScoreRequest::NextWord {
                tokens,
                prefix_len,
                target,
            } => WireRequest {
                id,
                kind: "lm",
                tokens,
                mention_a: None,
                mention_b: None,
                prefix_len: Some(*prefix_len),
                target: Some(target),
            },
        }
    }
}

#[derive(Deserialize)]
struct WireResponse {
    id: u64,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default)]
    error: Option<String>,
}

struct ChildState {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// A [`Scorer`] that forwards every request to a child process. Strictly
/// sequential and not concurrent-safe; the internal lock serializes
/// accidental concurrent use.
pub struct BridgeScorer {
    config: BridgeConfig,
    state: Mutex<Option<ChildState>>,
}

impl BridgeScorer {
    pub fn new(config: BridgeConfig) -> Self {
        BridgeScorer {
            config,
            state: Mutex::new(None),
        }
    }

    fn spawn_child(&self) -> Result<ChildState, ScorerError> {
        let (program, args) = self.config.command.split_first().ok_or_else(|| {
            ScorerError::Spawn(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "empty bridge command",
            ))
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(ScorerError::Spawn)?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        std::thread::Builder::new()
            .name("bridge-reader".to_string())
            .spawn(move || {
                use std::io::BufRead;
                let reader = std::io::BufReader::new(stdout);
                for line in reader.lines() {
                    let stop = line.is_err();
                    if tx.send(line).is_err() || stop {
                        break;
                    }
                }
            })
            .map_err(ScorerError::Spawn)?;
        Ok(ChildState {
            child,
            stdin,
            lines: rx,
            next_id: 0,
        })
    }

    fn exchange(&self, state: &mut ChildState, request: &ScoreRequest) -> Result<f64, ScorerError> {
        let id = state.next_id;
        state.next_id += 1;
        let mut line = serde_json::to_string(&WireRequest::new(id, request))
            .expect("request serialization is infallible");
        line.push('\n');
        state
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| state.stdin.flush())
            .map_err(|e| ScorerError::Protocol(format!("failed to write request: {e}")))?;

        let line = match state.lines.recv_timeout(self.config.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                return Err(ScorerError::Protocol(format!(
                    "failed to read from child: {e}"
                )))
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(ScorerError::Timeout(self.config.timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ScorerError::Protocol(
                    "child closed its output stream".to_string(),
                ))
            }
        };
        let response: WireResponse = serde_json::from_str(&line)
            .map_err(|e| ScorerError::Protocol(format!("bad response JSON: {e}")))?;
        if response.id != id {
            return Err(ScorerError::Protocol(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if let Some(message) = response.error {
            return Err(ScorerError::Child(message));
        }
        response.score.ok_or_else(|| {
            ScorerError::Protocol("response carries neither score nor error".to_string())
        })
    }
}

impl Scorer for BridgeScorer {
    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
        let mut guard = self
            .state
            .lock()
            .unwrap_or_else(std::sync::PoisonError::into_inner);
        if guard.is_none() {
            *guard = Some(self.spawn_child()?);
        }
        let state = guard.as_mut().expect("state was just initialized");
        let result = self.exchange(state, request);
        // A child error reply keeps the stream aligned; anything else may
        // have desynchronized it, so force a respawn on the next request.
        if !matches!(result, Ok(_) | Err(ScorerError::Child(_))) {
            shutdown(guard.take());
        }
        result
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

impl Drop for BridgeScorer {
    fn drop(&mut self) {
        let state = self
            .state
            .lock()
            .unwrap_or_else(std::sync::PoisonError::into_inner)
            .take();
        shutdown(state);
    }
}

fn shutdown(state: Option<ChildState>) {
    let Some(mut state) = state else {
        return;
    };
    drop(state.stdin);
    #[cfg(unix)]
    unsafe {
        libc::kill(state.child.id() as libc::pid_t, libc::SIGTERM);
    }
    let deadline = Instant::now() + Duration::from_secs(2);
    while Instant::now() < deadline {
        if matches!(state.child.try_wait(), Ok(Some(_))) {
            return;
        }
        std::thread::sleep(Duration::from_millis(25));
    }
    let _ = state.child.kill();
    let _ = state.child.wait();
}

/// Builds a bridge scorer; the spec'd operation name.
pub fn bridge_scorer(config: BridgeConfig) -> BridgeScorer {
    BridgeScorer::new(config)
}

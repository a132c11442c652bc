//! Adapter for evaluators running as child processes.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::protocol::{check_handshake, format_request, parse_response, ResponseError};
use super::EvalError;
use crate::seqcore::Sequence;

enum ReaderEvent {
    Line(String),
    Closed,
}

/// A launched evaluator process that has completed the handshake.
pub struct ExternalEvaluator {
    child: Mutex<Child>,
    stdin: Mutex<Option<ChildStdin>>,
    events: Mutex<Receiver<ReaderEvent>>,
    next_id: AtomicU64,
    lost: AtomicBool,
    timeout: Duration,
    n_jobs: usize,
    readers: Vec<JoinHandle<()>>,
}

impl std::fmt::Debug for ExternalEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalEvaluator")
            .field("timeout", &self.timeout)
            .field("n_jobs", &self.n_jobs)
            .finish_non_exhaustive()
    }
}

impl ExternalEvaluator {
    /// Spawns `command` and waits up to `handshake_timeout` for the handshake line.
    pub fn launch(
        command: &[String],
        timeout: Duration,
        n_jobs: usize,
        handshake_timeout: Duration,
    ) -> Result<Self, EvalError> {
        let (program, args) =
            command.split_first().ok_or_else(|| EvalError::Launch("empty evaluator command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EvalError::Launch(format!("{program}: {e}")))?;

        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let stdin = child.stdin.take().expect("piped stdin");

        let (tx, rx) = mpsc::channel();
        let stdout_reader = thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(ReaderEvent::Line(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(ReaderEvent::Closed);
        });
        let stderr_reader = thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                log::info!("evaluator stderr: {line}");
            }
        });

        let evaluator = ExternalEvaluator {
            child: Mutex::new(child),
            stdin: Mutex::new(Some(stdin)),
            events: Mutex::new(rx),
            next_id: AtomicU64::new(1),
            lost: AtomicBool::new(false),
            timeout,
            n_jobs: n_jobs.max(1),
            readers: vec![stdout_reader, stderr_reader],
        };

        let first = {
            let events = evaluator.events.lock().unwrap();
            events.recv_timeout(handshake_timeout)
        };
        match first {
            Ok(ReaderEvent::Line(line)) => {
                check_handshake(&line).map_err(EvalError::Handshake)?;
            }
            Ok(ReaderEvent::Closed) | Err(RecvTimeoutError::Disconnected) => {
                return Err(EvalError::Handshake("evaluator exited before handshake".into()));
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(EvalError::Handshake(format!("no handshake within {handshake_timeout:?}")));
            }
        }
        Ok(evaluator)
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn is_lost(&self) -> bool {
        self.lost.load(Ordering::SeqCst)
    }

    fn send(&self, id: u64, seq: &Sequence) -> bool {
        let mut guard = self.stdin.lock().unwrap();
        let Some(stdin) = guard.as_mut() else {
            return false;
        };
        let line = format_request(id, seq);
        stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).is_ok()
    }

    /// Scores `batch` in order, keeping at most `n_jobs` requests in flight.
    pub fn evaluate(&self, batch: &[Sequence], timeout: Duration) -> Vec<Result<f64, EvalError>> {
        let mut results: Vec<Option<Result<f64, EvalError>>> = vec![None; batch.len()];
        if self.is_lost() {
            return batch.iter().map(|_| Err(EvalError::Lost("evaluator is gone".into()))).collect();
        }
        let events = self.events.lock().unwrap();
        let mut pending: HashMap<u64, (usize, Instant)> = HashMap::new();
        let mut next = 0usize;

        loop {
            while pending.len() < self.n_jobs && next < batch.len() && !self.is_lost() {
                let id = self.next_id.fetch_add(1, Ordering::SeqCst);
                if self.send(id, &batch[next]) {
                    pending.insert(id, (next, Instant::now() + timeout));
                } else {
                    self.lost.store(true, Ordering::SeqCst);
                    results[next] = Some(Err(EvalError::Lost("write to evaluator failed".into())));
                }
                next += 1;
            }
            if pending.is_empty() && (next >= batch.len() || self.is_lost()) {
                break;
            }

            let now = Instant::now();
            let deadline = pending.values().map(|(_, d)| *d).min().unwrap_or(now);
            match events.recv_timeout(deadline.saturating_duration_since(now)) {
                Ok(ReaderEvent::Line(line)) => match parse_response(&line) {
                    Ok((id, score)) => match pending.remove(&id) {
                        Some((slot, _)) => results[slot] = Some(Ok(score)),
                        None => log::warn!("ignoring response for unknown or expired id {id}"),
                    },
                    Err(ResponseError::Unattributable(text)) => {
                        log::warn!("evaluator protocol error: unattributable line {text:?}");
                    }
                    Err(ResponseError::BadScore { id, message }) => {
                        if let Some((slot, _)) = pending.remove(&id) {
                            log::warn!("evaluator protocol error for {}: {message}", batch[slot]);
                            results[slot] =
                                Some(Err(EvalError::Protocol { sequence: Some(batch[slot].clone()), message }));
                        }
                    }
                    Err(ResponseError::NonFinite { id }) => {
                        if let Some((slot, _)) = pending.remove(&id) {
                            log::warn!("evaluator returned a non-finite score for {}", batch[slot]);
                            results[slot] = Some(Err(EvalError::NonFiniteScore(batch[slot].clone())));
                        }
                    }
                },
                Ok(ReaderEvent::Closed) | Err(RecvTimeoutError::Disconnected) => {
                    self.lost.store(true, Ordering::SeqCst);
                    for (_, (slot, _)) in pending.drain() {
                        results[slot] = Some(Err(EvalError::Lost("evaluator closed its output".into())));
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    let now = Instant::now();
                    let expired: Vec<u64> = pending.iter().filter(|(_, (_, d))| *d <= now).map(|(id, _)| *id).collect();
                    for id in expired {
                        let (slot, _) = pending.remove(&id).expect("present");
                        log::warn!("evaluator timed out on {} (request {id})", batch[slot]);
                        results[slot] = Some(Err(EvalError::Timeout(batch[slot].clone())));
                    }
                }
            }
        }

        results.into_iter().map(|r| r.unwrap_or_else(|| Err(EvalError::Lost("evaluator is gone".into())))).collect()
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved evaluator exit on its own.
        self.stdin.lock().unwrap().take();
        let mut child = self.child.lock().unwrap();
        let deadline = Instant::now() + Duration::from_millis(500);
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break;
                }
            }
        }
        drop(child);
        for handle in self.readers.drain(..) {
            let _ = handle.join();
        }
    }
}

/// Scores a batch through an external evaluator with an explicit per-request timeout.
pub fn evaluate_external(
    batch: &[Sequence],
    adapter: &ExternalEvaluator,
    timeout: Duration,
) -> Vec<Result<f64, EvalError>> {
    adapter.evaluate(batch, timeout)
}

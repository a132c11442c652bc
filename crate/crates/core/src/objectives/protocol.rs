//! Line-delimited JSON wire format spoken by external evaluators.
//!
//! ```text
//! evaluator -> {"protocol": "boga-eval", "version": 1}
//! engine    -> {"id": 7, "sequence": "EMAL"}
//! evaluator -> {"id": 7, "score": 1.0}
//! ```
//!
//! Responses may arrive in any order. Anything the evaluator writes to
//! standard error is logged and otherwise ignored.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::builtin::Landscape;
use crate::seqcore::Sequence;

pub const PROTOCOL_NAME: &str = "boga-eval";
pub const PROTOCOL_VERSION: u64 = 1;

pub fn handshake_line() -> String {
    format!("{{\"protocol\": \"{PROTOCOL_NAME}\", \"version\": {PROTOCOL_VERSION}}}\n")
}

pub fn format_request(id: u64, sequence: &Sequence) -> String {
    // Alphabet letters never need JSON escaping.
    format!("{{\"id\": {id}, \"sequence\": \"{sequence}\"}}\n")
}

pub fn format_response(id: u64, score: f64) -> String {
    format!("{{\"id\": {id}, \"score\": {}}}\n", serde_json::Value::from(score))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    /// The line could not be attributed to a request.
    #[error("unparseable response line: {0}")]
    Unattributable(String),
    #[error("response {id}: {message}")]
    BadScore { id: u64, message: String },
    #[error("response {id}: non-finite score")]
    NonFinite { id: u64 },
}

fn parse_json_lenient(line: &str) -> Option<(Value, bool)> {
    if let Ok(v) = serde_json::from_str::<Value>(line) {
        return Some((v, false));
    }
    // Python-style encoders emit bare NaN / Infinity tokens.
    if line.contains("NaN") || line.contains("Infinity") {
        let patched = line.replace("-Infinity", "null").replace("Infinity", "null").replace("NaN", "null");
        if let Ok(v) = serde_json::from_str::<Value>(&patched) {
            return Some((v, true));
        }
    }
    None
}

/// Parses one response line into `(id, score)`.
pub fn parse_response(line: &str) -> Result<(u64, f64), ResponseError> {
    let trimmed = line.trim();
    let (value, had_non_finite) =
        parse_json_lenient(trimmed).ok_or_else(|| ResponseError::Unattributable(trimmed.to_string()))?;
    let id =
        value.get("id").and_then(Value::as_u64).ok_or_else(|| ResponseError::Unattributable(trimmed.to_string()))?;
    match value.get("score") {
        Some(Value::Number(n)) => {
            let score = n
                .as_f64()
                .ok_or_else(|| ResponseError::BadScore { id, message: format!("score {n} is not representable") })?;
            if score.is_finite() {
                Ok((id, score))
            } else {
                Err(ResponseError::NonFinite { id })
            }
        }
        Some(Value::Null) if had_non_finite => Err(ResponseError::NonFinite { id }),
        Some(other) => Err(ResponseError::BadScore { id, message: format!("score must be a number, got {other}") }),
        None => Err(ResponseError::BadScore { id, message: "missing score".into() }),
    }
}

/// Checks the evaluator's first line.
pub fn check_handshake(line: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(line.trim()).map_err(|e| format!("handshake is not JSON: {e}"))?;
    let protocol = value.get("protocol").and_then(Value::as_str);
    let version = value.get("version").and_then(Value::as_u64);
    match (protocol, version) {
        (Some(PROTOCOL_NAME), Some(PROTOCOL_VERSION)) => Ok(()),
        _ => Err(format!("unexpected handshake {}", line.trim())),
    }
}

/// Parses one request line into `(id, sequence)`.
pub fn parse_request(line: &str) -> Result<(u64, Sequence), String> {
    let value: Value = serde_json::from_str(line.trim()).map_err(|e| e.to_string())?;
    let id = value.get("id").and_then(Value::as_u64).ok_or("missing id")?;
    let seq = value.get("sequence").and_then(Value::as_str).ok_or("missing sequence")?;
    let seq = Sequence::parse(seq).map_err(|e| e.to_string())?;
    Ok((id, seq))
}

/// Fault-injection knobs for the bundled mock evaluator.
///
/// Request ordinals (`*_nth`) count request lines from 1 in arrival order.
#[derive(Debug, Clone, Default)]
pub struct MockEvaluatorOptions {
    pub landscape: Option<Landscape>,
    /// Added latency for every request.
    pub latency: Duration,
    /// Extra delay for odd request ids, which makes replies overtake each other.
    pub delay_odd: Duration,
    pub hang_nth: HashSet<u64>,
    pub malformed_nth: HashSet<u64>,
    pub non_finite_nth: HashSet<u64>,
    pub garbage_nth: HashSet<u64>,
    /// Exit without replying once this many requests have been read.
    pub exit_after: Option<u64>,
    pub stderr_chatter: bool,
}

/// Runs the mock evaluator over the given streams until input closes.
pub fn serve_mock<R, W>(options: &MockEvaluatorOptions, input: R, output: W) -> std::io::Result<()>
where
    R: BufRead,
    W: Write + Send + 'static,
{
    let output = Arc::new(Mutex::new(output));
    {
        let mut out = output.lock().unwrap();
        out.write_all(handshake_line().as_bytes())?;
        out.flush()?;
    }
    let landscape = options.landscape.unwrap_or(Landscape::Length);
    let mut workers = Vec::new();
    let mut nth = 0u64;

    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        nth += 1;
        if options.stderr_chatter {
            eprintln!("mock evaluator: request #{nth}");
        }
        if options.exit_after.is_some_and(|limit| nth > limit) {
            break;
        }
        let (id, seq) = match parse_request(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("mock evaluator: bad request: {e}");
                continue;
            }
        };
        if options.hang_nth.contains(&nth) {
            continue;
        }
        let reply = if options.garbage_nth.contains(&nth) {
            "this is not json\n".to_string()
        } else if options.malformed_nth.contains(&nth) {
            format!("{{\"id\": {id}, \"score\": \"abc\"}}\n")
        } else if options.non_finite_nth.contains(&nth) {
            format!("{{\"id\": {id}, \"score\": NaN}}\n")
        } else {
            format_response(id, landscape.evaluate(&seq))
        };
        let mut delay = options.latency;
        if id % 2 == 1 {
            delay += options.delay_odd;
        }
        let out = Arc::clone(&output);
        let send = move || -> std::io::Result<()> {
            if !delay.is_zero() {
                thread::sleep(delay);
            }
            let mut out = out.lock().unwrap();
            out.write_all(reply.as_bytes())?;
            out.flush()
        };
        if delay.is_zero() {
            send()?;
        } else {
            workers.push(thread::spawn(send));
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_format_is_exact() {
        let s = Sequence::parse("EMAL").unwrap();
        assert_eq!(format_request(3, &s), "{\"id\": 3, \"sequence\": \"EMAL\"}\n");
        assert_eq!(handshake_line(), "{\"protocol\": \"boga-eval\", \"version\": 1}\n");
        assert_eq!(format_response(3, 4.0), "{\"id\": 3, \"score\": 4.0}\n");
    }

    #[test]
    fn parses_good_response() {
        assert_eq!(parse_response("{\"id\": 2, \"score\": -1.5}"), Ok((2, -1.5)));
        assert_eq!(parse_response("{\"score\":3,\"id\":9}\n"), Ok((9, 3.0)));
    }

    #[test]
    fn string_score_is_protocol_error() {
        assert!(matches!(
            parse_response("{\"id\": 1, \"score\": \"abc\"}"),
            Err(ResponseError::BadScore { id: 1, .. })
        ));
        assert!(matches!(parse_response("{\"id\": 1}"), Err(ResponseError::BadScore { id: 1, .. })));
    }

    #[test]
    fn nan_token_is_non_finite() {
        assert_eq!(parse_response("{\"id\": 4, \"score\": NaN}"), Err(ResponseError::NonFinite { id: 4 }));
        assert_eq!(parse_response("{\"id\": 4, \"score\": -Infinity}"), Err(ResponseError::NonFinite { id: 4 }));
    }

    #[test]
    fn garbage_is_unattributable() {
        assert!(matches!(parse_response("oops"), Err(ResponseError::Unattributable(_))));
        assert!(matches!(parse_response("{\"score\": 1.0}"), Err(ResponseError::Unattributable(_))));
    }

    #[test]
    fn handshake_check() {
        assert!(check_handshake(&handshake_line()).is_ok());
        assert!(check_handshake("{\"protocol\": \"other\", \"version\": 1}").is_err());
        assert!(check_handshake("{\"protocol\": \"boga-eval\", \"version\": 2}").is_err());
    }

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn mock_server_in_process() {
        let input = "{\"id\": 1, \"sequence\": \"AAAA\"}\n{\"id\": 2, \"sequence\": \"AA\"}\n{\"id\": 3, \"sequence\": \"A\"}\n";
        let sink = Shared::default();
        let opts = MockEvaluatorOptions { malformed_nth: [3].into_iter().collect(), ..Default::default() };
        serve_mock(&opts, input.as_bytes(), sink.clone()).unwrap();
        let text = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(check_handshake(lines[0]).is_ok());
        assert_eq!(parse_response(lines[1]), Ok((1, 4.0)));
        assert_eq!(parse_response(lines[2]), Ok((2, 2.0)));
        assert!(matches!(parse_response(lines[3]), Err(ResponseError::BadScore { id: 3, .. })));
    }
}

//! The child-process evaluator adapter, driven against the bundled mock.

use std::time::{Duration, Instant};

use boga_core::objectives::ExternalEvaluator;
use boga_core::{EvalError, Landscape, Objective, Sequence};

const MOCK: &str = env!("CARGO_BIN_EXE_boga-mock-evaluator");

fn launch(args: &[&str], timeout_ms: u64, n_jobs: usize) -> ExternalEvaluator {
    let mut command = vec![MOCK.to_string(), "--landscape".into(), "length".into()];
    command.extend(args.iter().map(|s| s.to_string()));
    ExternalEvaluator::launch(&command, Duration::from_millis(timeout_ms), n_jobs, Duration::from_secs(10))
        .expect("mock evaluator launches")
}

fn batch(n: usize) -> Vec<Sequence> {
    (1..=n).map(|len| Sequence::parse(&"A".repeat(len)).unwrap()).collect()
}

#[test]
fn replies_arriving_out_of_order_are_matched_by_id() {
    let ev = launch(&["--delay-odd-ms", "40"], 5_000, 4);
    let seqs = batch(12);
    let results = ev.evaluate_batch(&seqs);
    for (s, r) in seqs.iter().zip(&results) {
        assert_eq!(*r.as_ref().unwrap(), Landscape::Length.evaluate(s));
    }
}

#[test]
fn each_fault_maps_to_its_own_error() {
    // Requests are sent one at a time, so arrival ordinals match batch positions.
    let ev =
        launch(&["--hang", "2", "--malformed", "3", "--non-finite", "4", "--garbage", "5", "--stderr-chatter"], 300, 1);
    let seqs = batch(6);
    let results = ev.evaluate_batch(&seqs);
    assert_eq!(results[0], Ok(1.0));
    assert_eq!(results[1], Err(EvalError::Timeout(seqs[1].clone())));
    assert!(matches!(&results[2], Err(EvalError::Protocol { sequence: Some(s), .. }) if *s == seqs[2]));
    assert_eq!(results[3], Err(EvalError::NonFiniteScore(seqs[3].clone())));
    assert_eq!(results[4], Err(EvalError::Timeout(seqs[4].clone())));
    assert_eq!(results[5], Ok(6.0));
    assert!(!ev.is_lost());
}

#[test]
fn a_hung_request_does_not_block_the_others() {
    let ev = launch(&["--hang", "1"], 400, 4);
    let seqs = batch(8);
    let start = Instant::now();
    let results = ev.evaluate_batch(&seqs);
    assert!(start.elapsed() < Duration::from_secs(3));
    assert!(matches!(results[0], Err(EvalError::Timeout(_))));
    assert!(results[1..].iter().all(Result::is_ok));
}

#[test]
fn an_exiting_evaluator_is_lost_for_good() {
    let ev = launch(&["--exit-after", "2"], 2_000, 1);
    let results = ev.evaluate_batch(&batch(4));
    assert!(results[0].is_ok() && results[1].is_ok());
    let err = results[2].as_ref().unwrap_err();
    assert!(matches!(err, EvalError::Lost(_)), "{err:?}");
    assert!(err.is_fatal());
    assert!(ev.is_lost());
    let again = ev.evaluate_batch(&batch(1));
    assert!(matches!(again[0], Err(EvalError::Lost(_))));
}

#[test]
fn launch_and_handshake_failures_are_fatal() {
    let missing = vec!["/nonexistent/evaluator-binary".to_string()];
    let err = ExternalEvaluator::launch(&missing, Duration::from_secs(1), 1, Duration::from_secs(1)).unwrap_err();
    assert!(matches!(err, EvalError::Launch(_)) && err.is_fatal(), "{err:?}");

    let wrong = vec!["sh".into(), "-c".into(), "echo hello; exec sleep 5".into()];
    let err = ExternalEvaluator::launch(&wrong, Duration::from_secs(1), 1, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, EvalError::Handshake(_)) && err.is_fatal(), "{err:?}");

    let silent = vec!["sleep".into(), "5".into()];
    let start = Instant::now();
    let err = ExternalEvaluator::launch(&silent, Duration::from_secs(1), 1, Duration::from_millis(200)).unwrap_err();
    assert!(matches!(err, EvalError::Handshake(_)), "{err:?}");
    assert!(start.elapsed() < Duration::from_secs(3));
}

//! Stand-alone evaluator speaking the line protocol, with fault injection
//! for exercising the external-evaluator path.

use std::collections::HashSet;
use std::io;
use std::time::Duration;

use boga_core::objectives::protocol::{serve_mock, MockEvaluatorOptions};
use boga_core::Landscape;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "boga-mock-evaluator", version)]
struct Args {
    /// Built-in landscape used for scores.
    #[arg(long, default_value = "sheet")]
    landscape: Landscape,
    /// Delay before every reply.
    #[arg(long, default_value_t = 0)]
    latency_ms: u64,
    /// Extra delay for odd request ids, so replies arrive out of order.
    #[arg(long, default_value_t = 0)]
    delay_odd_ms: u64,
    /// Never answer these requests (1-based arrival order).
    #[arg(long, value_delimiter = ',')]
    hang: Vec<u64>,
    /// Answer these requests with a non-numeric score.
    #[arg(long, value_delimiter = ',')]
    malformed: Vec<u64>,
    /// Answer these requests with NaN.
    #[arg(long, value_delimiter = ',')]
    non_finite: Vec<u64>,
    /// Answer these requests with a line that is not JSON.
    #[arg(long, value_delimiter = ',')]
    garbage: Vec<u64>,
    /// Exit without replying once this many requests have arrived.
    #[arg(long)]
    exit_after: Option<u64>,
    /// Write a line to stderr for every request.
    #[arg(long)]
    stderr_chatter: bool,
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let set = |v: Vec<u64>| v.into_iter().collect::<HashSet<u64>>();
    let options = MockEvaluatorOptions {
        landscape: Some(args.landscape),
        latency: Duration::from_millis(args.latency_ms),
        delay_odd: Duration::from_millis(args.delay_odd_ms),
        hang_nth: set(args.hang),
        malformed_nth: set(args.malformed),
        non_finite_nth: set(args.non_finite),
        garbage_nth: set(args.garbage),
        exit_after: args.exit_after,
        stderr_chatter: args.stderr_chatter,
    };
    serve_mock(&options, io::stdin().lock(), io::stdout())
}

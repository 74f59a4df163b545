//! Console progress log for estimation.

use std::io::Write;
use std::time::Instant;

use ssm_core::{Estimate, EstimationMonitor, SeedRecord};

const WIDTH: usize = 62;

fn centered(text: &str) -> String {
    let len = text.chars().count();
    let pad = WIDTH.saturating_sub(len) / 2;
    format!("{}{text}", " ".repeat(pad))
}

pub fn rule(c: char) -> String {
    c.to_string().repeat(WIDTH)
}

pub fn banner(n_seeds: usize) -> Vec<String> {
    vec![
        rule('='),
        centered(concat!("ssm v", env!("CARGO_PKG_VERSION"))),
        rule('-'),
        centered("Starting state-space model estimation."),
        centered(&format!(
            "Initiating maximum likelihood estimation with {n_seeds} seeds."
        )),
        rule('-'),
        centered("Seed 0 is aimed at degenerate cases."),
        rule('-'),
        "||    seed    |     log-likelihood      |      time (s)     ||".to_string(),
    ]
}

pub fn seed_row(seed: usize, loglik: f64, secs: f64) -> String {
    format!(
        "||{:>8}    |{:>19}      |{:>14}     ||",
        seed,
        format!("{loglik:.4}"),
        format!("{secs:.2}")
    )
}

pub fn footer(loglik: f64) -> Vec<String> {
    vec![
        rule('-'),
        centered("Maximum likelihood estimation complete."),
        centered(&format!("Log-likelihood: {loglik:.4}")),
        centered("End of state-space model estimation."),
        rule('='),
    ]
}

/// Writes the estimation log to a stream. Verbosity 0 prints nothing, 1 the
/// banner and seed table, 2 adds one line per optimizer iteration.
pub struct ConsoleMonitor<W: Write> {
    out: W,
    verbosity: u8,
    start: Instant,
}

impl<W: Write> ConsoleMonitor<W> {
    pub fn new(out: W, verbosity: u8) -> Self {
        Self {
            out,
            verbosity,
            start: Instant::now(),
        }
    }

    fn lines(&mut self, min_verbosity: u8, lines: &[String]) {
        if self.verbosity < min_verbosity {
            return;
        }
        for line in lines {
            // Progress output is best effort; a closed stderr must not abort a fit.
            let _ = writeln!(self.out, "{line}");
        }
    }
}

impl<W: Write> EstimationMonitor for ConsoleMonitor<W> {
    fn elapsed_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn started(&mut self, n_seeds: usize) {
        self.start = Instant::now();
        self.lines(1, &banner(n_seeds));
    }

    fn iteration(&mut self, seed: usize, iteration: usize, loglik: f64, gradient_norm: f64) {
        self.lines(
            2,
            &[format!(
                "   seed {seed:>3}  iter {iteration:>6}  loglik {loglik:>18.6}  |grad| {gradient_norm:.3e}"
            )],
        );
    }

    fn seed_finished(&mut self, record: &SeedRecord) {
        self.lines(1, &[seed_row(record.seed, record.loglik, record.elapsed_secs)]);
    }

    fn finished(&mut self, estimate: &Estimate) {
        self.lines(1, &footer(estimate.loglik));
    }
}

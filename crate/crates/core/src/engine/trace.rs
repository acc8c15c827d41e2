use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{format_number, Scalar};

use super::{BetaSource, Protocol};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord<F> {
    pub iteration: u64,
    pub loss: F,
    /// `L(x_k) - L*` when the optimum is known.
    pub gap: Option<F>,
    /// Cumulative point-to-point messages over all nodes.
    pub messages_sent: u64,
    /// Simulated seconds in lockstep mode, wall-clock seconds in threaded mode.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    IterationCap,
    TargetGapReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<F> {
    pub records: Vec<EvalRecord<F>>,
    pub final_x: Vec<F>,
    pub seed: u64,
    pub beta: F,
    pub beta_source: BetaSource,
    pub protocol: Protocol,
    pub iterations: u64,
    pub stop: StopReason,
}

pub const TRACE_HEADER: &str = "iter,loss,gap,msgs_sent,elapsed_s";
/// Header used when the optimal value is unknown.
pub const TRACE_HEADER_NO_GAP: &str = "iter,loss,msgs_sent,elapsed_s";

fn provenance(
    seed: u64,
    beta: impl std::fmt::Display,
    source: BetaSource,
    protocol: Protocol,
) -> String {
    format!("# seed={seed}\n# beta={beta}\n# beta_source={source}\n# protocol={protocol}\n")
}

impl<F: Scalar> RunTrace<F> {
    pub fn last(&self) -> &EvalRecord<F> {
        self.records
            .last()
            .expect("trace always holds the initial record")
    }

    /// Whether the records carry `L(x_k) - L*`.
    pub fn has_gap(&self) -> bool {
        self.records.first().is_some_and(|r| r.gap.is_some())
    }

    /// CSV text: `#`-prefixed provenance lines, then the header and one row per evaluation.
    /// The gap column is present only when the optimum is known.
    pub fn to_csv(&self) -> String {
        let mut out = provenance(self.seed, self.beta, self.beta_source, self.protocol);
        let with_gap = self.has_gap();
        out.push_str(if with_gap {
            TRACE_HEADER
        } else {
            TRACE_HEADER_NO_GAP
        });
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{},", r.iteration, format_number(r.loss)).unwrap();
            if with_gap {
                let gap = r.gap.map_or_else(String::new, format_number);
                write!(out, "{gap},").unwrap();
            }
            writeln!(out, "{},{}", r.messages_sent, format_number(r.elapsed_s)).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Header-only trace text, for runs that never evaluate.
pub fn empty_trace_csv(
    seed: u64,
    beta: f64,
    source: BetaSource,
    protocol: Protocol,
    with_gap: bool,
) -> String {
    let header = if with_gap {
        TRACE_HEADER
    } else {
        TRACE_HEADER_NO_GAP
    };
    format!("{}{header}\n", provenance(seed, beta, source, protocol))
}

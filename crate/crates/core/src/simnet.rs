//! Simulated node/coordinator message layer.
//!
//! Enforces and accounts the communication contract: each node computes its
//! summary locally and emits exactly one message per run; the raw design and
//! response never cross the node boundary. The protocol is one-shot, so a
//! log always records a single round.
//!
//! Messages have a concrete wire layout so accounting is byte-exact even
//! though no real network is involved: a 24-byte header of three
//! little-endian u64 fields (node id, sample size, dimension) followed by
//! the two coefficient vectors as little-endian f64. Nothing in the layout
//! scales with the node's sample size, so uploads cost the same no matter
//! how much data a node holds. The scalar noise estimate rides alongside the
//! in-memory summary as coordinator metadata and is not part of the
//! accounted payload.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dataset, LocalSummary};
use crate::pipeline::{fit_node, NodeDiagnostics, PipelineConfig};

/// Message field names, audited by tests: no raw-sample field may appear.
pub const MESSAGE_SCHEMA: [&str; 5] = [
    "node_id",
    "sample_size",
    "dim",
    "lasso_coef",
    "debiased_coef",
];

/// Fixed header: node_id, sample_size, dim as u64.
pub const HEADER_BYTES: usize = 24;

/// Wire size of one summary message in dimension `d`.
pub fn message_byte_size(d: usize) -> usize {
    HEADER_BYTES + 2 * d * 8
}

/// One node's upload.
#[derive(Debug, Clone)]
pub struct SummaryMessage {
    pub node_id: u64,
    pub payload: LocalSummary,
    pub byte_size: usize,
}

impl SummaryMessage {
    pub fn new(node_id: u64, payload: LocalSummary) -> Self {
        let byte_size = message_byte_size(payload.lasso_coef.len());
        SummaryMessage {
            node_id,
            payload,
            byte_size,
        }
    }

    /// Serializes to the wire layout; the result is exactly `byte_size`
    /// bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.payload.lasso_coef.len();
        let mut out = Vec::with_capacity(message_byte_size(d));
        out.extend_from_slice(&self.node_id.to_le_bytes());
        out.extend_from_slice(&(self.payload.sample_size as u64).to_le_bytes());
        out.extend_from_slice(&(d as u64).to_le_bytes());
        for &v in &self.payload.lasso_coef {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &self.payload.debiased_coef {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the wire layout. The noise estimate is not transmitted and
    /// comes back as zero.
    pub fn from_bytes(bytes: &[u8]) -> Result<SummaryMessage> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::invalid("message shorter than header".to_string()));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let node_id = u64_at(0);
        let sample_size = u64_at(8) as usize;
        let d = u64_at(16) as usize;
        if bytes.len() != message_byte_size(d) {
            return Err(Error::invalid(format!(
                "message length {} does not match dimension {d}",
                bytes.len()
            )));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let lasso_coef = (0..d).map(|j| f64_at(HEADER_BYTES + 8 * j)).collect();
        let debiased_coef = (0..d)
            .map(|j| f64_at(HEADER_BYTES + 8 * (d + j)))
            .collect();
        Ok(SummaryMessage::new(
            node_id,
            LocalSummary {
                lasso_coef,
                debiased_coef,
                sample_size,
                noise_sd: 0.0,
            },
        ))
    }
}

/// Descriptor of a transmitted message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub node_id: u64,
    pub byte_size: usize,
}

/// Communication accounting for a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommLog {
    pub messages: Vec<MessageRecord>,
    pub total_bytes: usize,
    pub rounds: usize,
}

impl CommLog {
    pub fn empty() -> Self {
        CommLog {
            messages: Vec::new(),
            total_bytes: 0,
            rounds: 0,
        }
    }
}

/// Total uploaded bytes recorded in a log.
pub fn comm_bytes(log: &CommLog) -> usize {
    log.total_bytes
}

/// Everything the coordinator receives from one round.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub summaries: Vec<LocalSummary>,
    pub diagnostics: Vec<NodeDiagnostics>,
    pub log: CommLog,
}

/// Runs the single communication round: every node computes its summary
/// locally (penalized fit plus debiasing) and uploads one message. Nodes run
/// concurrently; the coordinator ingests messages in node order regardless
/// of completion order.
pub fn execute_round(datasets: &[Dataset], cfg: &PipelineConfig) -> Result<RoundOutput> {
    let per_node: Result<Vec<(LocalSummary, NodeDiagnostics)>> = datasets
        .par_iter()
        .map(|ds| fit_node(ds, cfg).map_err(|e| e.at_node(ds.node_id)))
        .collect();
    let per_node = per_node?;

    let mut summaries = Vec::with_capacity(per_node.len());
    let mut diagnostics = Vec::with_capacity(per_node.len());
    let mut messages = Vec::with_capacity(per_node.len());
    let mut total_bytes = 0usize;
    for (ds, (summary, diag)) in datasets.iter().zip(per_node) {
        let msg = SummaryMessage::new(ds.node_id, summary);
        total_bytes += msg.byte_size;
        messages.push(MessageRecord {
            node_id: msg.node_id,
            byte_size: msg.byte_size,
        });
        summaries.push(msg.payload);
        diagnostics.push(diag);
    }

    Ok(RoundOutput {
        summaries,
        diagnostics,
        log: CommLog {
            messages,
            total_bytes,
            rounds: 1,
        },
    })
}

//! JSON-lines traces: one header record, then one record per step and,
//! optionally, one per delivered message.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::SimConfig;
use crate::agent::{ChangeType, Method, Phase, Role};
use crate::lattice::{BoxId, Direction, Node};
use crate::path::PathKind;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Where a robot is. Travel legs and station slots are indexed waypoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Node(Node),
    Queue(usize),
    Outbound(usize),
    Slot(usize),
    Inbound(usize),
}

impl Location {
    pub fn phase(self) -> Phase {
        match self {
            Location::Node(_) => Phase::InShape,
            Location::Queue(_) => Phase::Queued,
            Location::Outbound(_) => Phase::ToStation,
            Location::Slot(_) => Phase::Charging,
            Location::Inbound(_) => Phase::ToShape,
        }
    }

    pub fn node(self) -> Option<Node> {
        match self {
            Location::Node(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeStatus {
    Propagating,
    Primary,
    Secondary,
    Resolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub entry: Node,
    pub exit: Node,
    pub boxes: Vec<BoxId>,
    pub robot_count: usize,
    pub seed: u64,
    pub config: SimConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub id: u32,
    pub loc: Location,
    pub phase: Phase,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heading: Option<Direction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub seq: u64,
    pub ct: ChangeType,
    #[serde(rename = "box")]
    pub target: BoxId,
    pub status: ChangeStatus,
    pub method: Method,
    pub injected_at: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Event {
    Entered { robot: u32 },
    Exited { robot: u32 },
    Docked { robot: u32, slot: usize },
    Departed { robot: u32, slot: usize },
    Yielded { robot: u32, slot: usize },
    Waited { robot: u32 },
    EntryGap,
    ChangeInjected { seq: u64, ct: ChangeType, #[serde(rename = "box")] target: BoxId },
    Rejected { reason: String },
    Inflection { robot: u32, node: Node },
    Scsn { robot: u32, node: Node },
    StatusChanged { status: ChangeStatus },
    PrimaryComplete { class: PathKind, sub_cycles: usize },
    Promoted { robot: u32 },
    PassBack { from: u32, to: u32, node: Node },
    PassBackDropped { from: u32, node: Node },
    CloneMemory { from: u32, to: u32, node: Node },
    DestinationSwap { change_robot: u32, robot: u32, w: Node, x: Node, y: Node, z: Node, class: PathKind, sub_cycles: usize },
    MemoryMessage { robot: u32, node: Node, heading_changed: bool },
    CommOverrun { rounds: usize },
    Resolved { class: PathKind, steps: u64 },
    CarriedDelta { robot: u32, updated: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub shape_version: u64,
    pub box_count: usize,
    pub robots: Vec<RobotRecord>,
    pub path_digest: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub change: Option<ChangeRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub events: Vec<Event>,
}

/// One delivered message, recorded only when `record_messages` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub step: u64,
    pub round: usize,
    pub kind: String,
    pub from: Option<u32>,
    pub to: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    Message(MessageRecord),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("malformed trace: {0}")]
    Malformed(String),
}

/// A complete trace held in memory.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    pub header: Option<TraceHeader>,
    pub steps: Vec<StepRecord>,
    pub messages: Vec<MessageRecord>,
}

impl Trace {
    pub fn lines(&self) -> impl Iterator<Item = TraceLine> + '_ {
        let head = self.header.clone().map(TraceLine::Header);
        // Messages of a step are written after its step record.
        let mut msgs = self.messages.iter().peekable();
        let body = self.steps.iter().flat_map(move |s| {
            let mut out = vec![TraceLine::Step(s.clone())];
            while let Some(m) = msgs.next_if(|m| m.step <= s.step) {
                out.push(TraceLine::Message(m.clone()));
            }
            out
        });
        head.into_iter().chain(body)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        for line in self.lines() {
            serde_json::to_writer(&mut w, &line).map_err(|e| TraceError::Json { line: 0, source: e })?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace, TraceError> {
        let mut t = Trace::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceLine =
                serde_json::from_str(&line).map_err(|e| TraceError::Json { line: i + 1, source: e })?;
            match rec {
                TraceLine::Header(h) if i == 0 => {
                    if h.schema_version != TRACE_SCHEMA_VERSION {
                        return Err(TraceError::Malformed(format!(
                            "schema_version {} (expected {TRACE_SCHEMA_VERSION})",
                            h.schema_version
                        )));
                    }
                    t.header = Some(h);
                }
                TraceLine::Header(_) => {
                    return Err(TraceError::Malformed(format!("header on line {}", i + 1)))
                }
                TraceLine::Step(s) => t.steps.push(s),
                TraceLine::Message(m) => t.messages.push(m),
            }
        }
        if t.header.is_none() {
            return Err(TraceError::Malformed("missing header".into()));
        }
        Ok(t)
    }

    /// SHA-256 of the JSON-lines encoding, hex.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_jsonl().as_bytes());
        crate::path::hex(&h.finalize())
    }

    pub fn events(&self) -> impl Iterator<Item = (u64, &Event)> {
        self.steps.iter().flat_map(|s| s.events.iter().map(move |e| (s.step, e)))
    }
}

//! Wire messages. Every frame is one JSON text message carrying a `type`
//! tag and the protocol `schema_version`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use swarmshape::agent::{Method, Role};
use swarmshape::engine::{ChangeHints, ChangeRecord, Event, Led, Location};
use swarmshape::lattice::Direction;
use swarmshape::{Node, Shape};

pub const PROTOCOL_VERSION: u32 = 1;

/// Upper bound accepted by `set_speed`.
pub const MAX_STEPS_PER_SECOND: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Comm,
    Movement,
}

impl From<Method> for MethodName {
    fn from(m: Method) -> Self {
        match m {
            Method::CommunicationBased => MethodName::Comm,
            Method::MovementBased => MethodName::Movement,
        }
    }
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Comm => Method::CommunicationBased,
            MethodName::Movement => Method::MovementBased,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    AddBox { i: i32, j: i32 },
    RemoveBox { i: i32, j: i32 },
    Pause,
    Resume,
    SetSpeed { steps_per_second: f64 },
    SelectMethod { method: MethodName },
    /// Ask for a fresh snapshot, e.g. after missing a diff.
    Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotView {
    pub id: u32,
    pub loc: Location,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heading: Option<Direction>,
    /// Only robots on the shape show a color.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub led: Option<Led>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub shape: Shape,
    pub nodes: Vec<Node>,
    pub robots: Vec<RobotView>,
    pub change: Option<ChangeRecord>,
    pub hints: ChangeHints,
    pub paused: bool,
    pub steps_per_second: f64,
    pub method: MethodName,
}

/// Changes since the previous frame. `robots` lists only robots whose view
/// changed; `shape`, `nodes` and `hints` appear only when they changed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diff {
    pub step: u64,
    pub robots: Vec<RobotView>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shape: Option<Shape>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nodes: Option<Vec<Node>>,
    pub change: Option<ChangeRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hints: Option<ChangeHints>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Snapshot(Snapshot),
    Diff(Diff),
    /// The change as injected, still propagating.
    Accepted { step: u64, change: ChangeRecord },
    /// Same codes as the engine's change errors.
    Rejected { code: String, message: String },
    Closed { code: String, reason: String },
}

/// A frame as sent on the socket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Frame<T> {
    pub fn new(body: T) -> Self {
        Frame { schema_version: PROTOCOL_VERSION, body }
    }
}

pub fn encode(msg: &ServerMsg) -> String {
    serde_json::to_string(&Frame::new(msg)).expect("server messages serialize")
}

/// A protocol violation. The session ends with this code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub reason: String,
}

impl Violation {
    pub fn new(code: &'static str, reason: impl Into<String>) -> Self {
        Violation { code, reason: reason.into() }
    }

    pub fn closed(&self) -> ServerMsg {
        ServerMsg::Closed { code: self.code.into(), reason: self.reason.clone() }
    }
}

pub fn decode(text: &str) -> Result<ClientMsg, Violation> {
    let v: Value = serde_json::from_str(text).map_err(|e| Violation::new("malformed_json", e.to_string()))?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(n) if n == u64::from(PROTOCOL_VERSION) => {}
        Some(n) => return Err(Violation::new("unsupported_version", format!("schema_version {n}"))),
        None => return Err(Violation::new("unsupported_version", "missing schema_version")),
    }
    let msg: ClientMsg = serde_json::from_value(v).map_err(|e| Violation::new("unknown_message", e.to_string()))?;
    if let ClientMsg::SetSpeed { steps_per_second: s } = msg {
        if !(s > 0.0 && s <= MAX_STEPS_PER_SECOND) {
            return Err(Violation::new("bad_argument", format!("steps_per_second {s} outside (0, {MAX_STEPS_PER_SECOND}]")));
        }
    }
    Ok(msg)
}

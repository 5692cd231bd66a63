//! JSON session messages exchanged with a live console.
//!
//! Every message is one JSON object carrying a `type` tag, a per-direction
//! sequence number `seq` and a timestamp `t` in seconds, for example
//! `{"seq":7,"type":"vest","t":0.07,"front":[..16],"back":[..16]}`.
//! Poses are sent zero-based.

use serde::{Deserialize, Serialize};

use crate::emg::{EmgSample, PoseUpdate, CHANNELS};
use crate::haptic::VestCommand;
use crate::harness::{Condition, TickOutput, TrialResult};
use crate::sim::WorldEvent;
use crate::tactile::ContactMetrics;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        t: f64,
        protocol: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        object: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        condition: Option<Condition>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
    Vest {
        t: f64,
        front: [u8; 16],
        back: [u8; 16],
    },
    FrameMetrics {
        t: f64,
        metrics: Vec<ContactMetrics>,
    },
    Pose {
        t: f64,
        per_channel: [u8; CHANNELS],
        fused: u8,
    },
    /// From the console: the requested activation. From the server: the
    /// activation actually applied on that tick.
    Activation {
        t: f64,
        value: f64,
    },
    Emg {
        t: f64,
        channels: [f64; CHANNELS],
    },
    TrialEvent {
        t: f64,
        event: WorldEvent,
        slip_events: u32,
        deformation_events: u32,
        height: f64,
    },
    TrialSummary {
        t: f64,
        success: bool,
        completion_time: f64,
        slip_count: u32,
        deformation_count: u32,
        crushed: bool,
    },
}

impl Message {
    pub fn t(&self) -> f64 {
        match self {
            Message::Hello { t, .. }
            | Message::Vest { t, .. }
            | Message::FrameMetrics { t, .. }
            | Message::Pose { t, .. }
            | Message::Activation { t, .. }
            | Message::Emg { t, .. }
            | Message::TrialEvent { t, .. }
            | Message::TrialSummary { t, .. } => *t,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::Vest { .. } => "vest",
            Message::FrameMetrics { .. } => "frame_metrics",
            Message::Pose { .. } => "pose",
            Message::Activation { .. } => "activation",
            Message::Emg { .. } => "emg",
            Message::TrialEvent { .. } => "trial_event",
            Message::TrialSummary { .. } => "trial_summary",
        }
    }

    pub fn vest(cmd: &VestCommand) -> Self {
        Message::Vest {
            t: cmd.t,
            front: cmd.front_flat(),
            back: cmd.back_flat(),
        }
    }

    pub fn pose(update: &PoseUpdate) -> Self {
        Message::Pose {
            t: update.t,
            per_channel: update.per_channel.map(|p| p.external()),
            fused: update.fused.external(),
        }
    }

    pub fn emg(sample: &EmgSample) -> Self {
        Message::Emg {
            t: sample.t,
            channels: sample.channels,
        }
    }

    pub fn summary(t: f64, result: &TrialResult) -> Self {
        Message::TrialSummary {
            t,
            success: result.success,
            completion_time: result.completion_time,
            slip_count: result.slip_count,
            deformation_count: result.deformation_count,
            crushed: result.crushed,
        }
    }

    /// Messages describing one simulation tick, in send order.
    pub fn from_tick(tick: &TickOutput<'_>) -> Vec<Message> {
        let t = tick.record.t;
        let mut out = vec![Message::FrameMetrics {
            t,
            metrics: tick.metrics.to_vec(),
        }];
        if let Some(u) = tick.pose_update {
            out.push(Message::pose(u));
        }
        out.push(Message::vest(tick.vest));
        out.push(Message::Activation {
            t,
            value: tick.record.activation,
        });
        for &event in tick.events {
            out.push(Message::TrialEvent {
                t,
                event,
                slip_events: tick.record.slip_events,
                deformation_events: tick.record.deformation_events,
                height: tick.record.height,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub message: Message,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("session messages always serialise")
    }
}

/// Result of decoding one inbound text frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Message(Envelope),
    /// Well-formed but of a type this side does not know.
    Unknown {
        seq: Option<u64>,
        type_name: String,
    },
    Malformed(String),
}

pub fn decode(text: &str) -> Decoded {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Decoded::Malformed(e.to_string()),
    };
    let Some(type_name) = value
        .get("type")
        .and_then(|v| v.as_str())
        .map(str::to_owned)
    else {
        return Decoded::Malformed("missing \"type\"".into());
    };
    match serde_json::from_value::<Envelope>(value.clone()) {
        Ok(env) => Decoded::Message(env),
        Err(e) => {
            const KNOWN: [&str; 8] = [
                "hello",
                "vest",
                "frame_metrics",
                "pose",
                "activation",
                "emg",
                "trial_event",
                "trial_summary",
            ];
            if KNOWN.contains(&type_name.as_str()) {
                Decoded::Malformed(e.to_string())
            } else {
                Decoded::Unknown {
                    seq: value.get("seq").and_then(|v| v.as_u64()),
                    type_name,
                }
            }
        }
    }
}

/// Stamps outgoing messages with strictly increasing sequence numbers.
#[derive(Debug, Default)]
pub struct Sequencer {
    next: u64,
}

impl Sequencer {
    pub fn new() -> Self {
        Self { next: 1 }
    }

    pub fn stamp(&mut self, message: Message) -> Envelope {
        let seq = self.next.max(1);
        self.next = seq + 1;
        Envelope { seq, message }
    }
}

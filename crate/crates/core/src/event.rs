//! Events emitted by the control modules and the append-only log that
//! stamps them with sequence numbers.

use serde::{Deserialize, Serialize};

use crate::ambient::AmbientAlertKind;
use crate::health::HealthAssessment;
use crate::irrigation::{EndReason, SessionKind};
use crate::time::SimTime;

/// Shown when watering is requested, or moisture rises, above the average level.
pub const SATURATION_ALERT_TEXT: &str =
    "Do not water the plant until the water level comes between a minimum and average level";

pub const MOTION_ALERT_TEXT: &str = "motion detected around the plants";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Saturated,
    AlreadyWatering,
    NoReading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    ValveOpened {
        session: SessionKind,
        target_moisture: f64,
    },
    ValveClosed {
        session: SessionKind,
    },
    WateringEnded {
        session: SessionKind,
        reason: EndReason,
        moisture: f64,
    },
    SaturationAlert {
        message: String,
        moisture: f64,
    },
    AmbientAlert {
        alert: AmbientAlertKind,
        message: String,
        value: f64,
    },
    MotionDetected {
        message: String,
    },
    Armed,
    Disarmed,
    HealthChanged {
        previous_score: Option<u8>,
        assessment: HealthAssessment,
    },
    ManualRejected {
        reason: RejectReason,
        message: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ValveOpened { .. } => "ValveOpened",
            EventKind::ValveClosed { .. } => "ValveClosed",
            EventKind::WateringEnded { .. } => "WateringEnded",
            EventKind::SaturationAlert { .. } => "SaturationAlert",
            EventKind::AmbientAlert { .. } => "AmbientAlert",
            EventKind::MotionDetected { .. } => "MotionDetected",
            EventKind::Armed => "Armed",
            EventKind::Disarmed => "Disarmed",
            EventKind::HealthChanged { .. } => "HealthChanged",
            EventKind::ManualRejected { .. } => "ManualRejected",
        }
    }

    pub const NAMES: [&'static str; 10] = [
        "ValveOpened",
        "ValveClosed",
        "WateringEnded",
        "SaturationAlert",
        "AmbientAlert",
        "MotionDetected",
        "Armed",
        "Disarmed",
        "HealthChanged",
        "ManualRejected",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub timestamp: SimTime,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

/// Append-only event log. Sequence numbers start at 1 and have no gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a log from previously persisted events. Returns `None` if
    /// the sequence is not `1..=n` in order or timestamps go backwards.
    pub fn from_history(events: Vec<Event>) -> Option<Self> {
        let seq_ok = events.iter().enumerate().all(|(i, e)| e.seq == i as u64 + 1);
        let time_ok = events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp);
        (seq_ok && time_ok).then_some(EventLog { events })
    }

    pub fn last_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Stamps and appends. Timestamps earlier than the last entry are raised
    /// to it so the log stays time-ordered.
    pub fn append(&mut self, timestamp: SimTime, kind: EventKind) -> &Event {
        let timestamp = self
            .events
            .last()
            .map_or(timestamp, |last| timestamp.max(last.timestamp));
        self.events.push(Event {
            seq: self.last_seq() + 1,
            timestamp,
            kind,
        });
        self.events.last().expect("just pushed")
    }

    pub fn all(&self) -> &[Event] {
        &self.events
    }

    /// Events with `seq > since`, in order.
    pub fn since(&self, since: u64) -> &[Event] {
        let start = (since as usize).min(self.events.len());
        &self.events[start..]
    }
}

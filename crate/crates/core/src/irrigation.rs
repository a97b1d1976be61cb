//! Watering state machine.
//!
//! Moisture is classified into three bands against the profile: `Dry` below
//! `moisture_low`, `Adequate` from `moisture_low` to `moisture_mid`
//! inclusive, `Saturated` above `moisture_mid`.
//!
//! * Dry soil opens the valve automatically until `moisture_low +
//!   auto_hysteresis`.
//! * A schedule slot waters up to `moisture_mid`, but only if the soil is
//!   below it when the slot fires.
//! * Manual watering also targets `moisture_mid` and is refused above it.
//! * Only one session runs at a time. Auto sessions are never preempted and a
//!   slot that fires during any session is skipped for that day.
//! * Every session closes after `max_session` as a fail-safe.
//!
//! Entering `Saturated` raises the saturation alert once; it clears when the
//! soil is back at or below `moisture_mid`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{EventKind, RejectReason, SATURATION_ALERT_TEXT};
use crate::thresholds::ThresholdProfile;
use crate::time::{SimDuration, SimTime, TimeOfDay};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrrigationError {
    #[error("soil moisture {0} is outside 0..=100")]
    MoistureOutOfRange(f64),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("a slot at {0} already exists")]
    DuplicateTime(TimeOfDay),
    #[error("no slot with id {0}")]
    UnknownSlot(SlotId),
    #[error("slot id {0} appears more than once")]
    DuplicateId(SlotId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoistureBand {
    Dry,
    Adequate,
    Saturated,
}

pub fn classify_moisture(m: f64, profile: &ThresholdProfile) -> Result<MoistureBand, IrrigationError> {
    if !(0.0..=100.0).contains(&m) {
        return Err(IrrigationError::MoistureOutOfRange(m));
    }
    Ok(if m < profile.moisture_low {
        MoistureBand::Dry
    } else if m <= profile.moisture_mid {
        MoistureBand::Adequate
    } else {
        MoistureBand::Saturated
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub u32);

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleSlot {
    pub id: SlotId,
    pub time_of_day: TimeOfDay,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionKind {
    Auto,
    Scheduled,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    TargetReached,
    Timeout,
    ManualStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WateringSession {
    pub kind: SessionKind,
    pub target_moisture: f64,
    pub started_at: SimTime,
    pub max_duration: SimDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrrigationConfig {
    /// Added to `moisture_low` to get the auto-watering stop level.
    pub auto_hysteresis: f64,
    #[serde(rename = "max_session_ms")]
    pub max_session: SimDuration,
}

impl Default for IrrigationConfig {
    fn default() -> Self {
        IrrigationConfig {
            auto_hysteresis: 5.0,
            max_session: SimDuration::from_mins(15),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManualAction {
    Start,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ManualOutcome {
    Started { session: WateringSession },
    Stopped,
    NoOp,
    Rejected { reason: RejectReason, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IrrigationState {
    valve_open: bool,
    session: Option<WateringSession>,
    slots: Vec<ScheduleSlot>,
    saturation_alert_active: bool,
    /// Day on which each slot last fired.
    fired: BTreeMap<SlotId, u64>,
    last_decision: Option<SimTime>,
}

impl IrrigationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_slots(slots: Vec<ScheduleSlot>) -> Result<Self, ScheduleError> {
        for (i, slot) in slots.iter().enumerate() {
            if slots[..i].iter().any(|s| s.id == slot.id) {
                return Err(ScheduleError::DuplicateId(slot.id));
            }
            if slots[..i].iter().any(|s| s.time_of_day == slot.time_of_day) {
                return Err(ScheduleError::DuplicateTime(slot.time_of_day));
            }
        }
        Ok(IrrigationState {
            slots,
            ..Self::default()
        })
    }

    pub fn valve_open(&self) -> bool {
        self.valve_open
    }

    pub fn session(&self) -> Option<&WateringSession> {
        self.session.as_ref()
    }

    pub fn saturation_alert_active(&self) -> bool {
        self.saturation_alert_active
    }

    pub fn list_slots(&self) -> &[ScheduleSlot] {
        &self.slots
    }

    /// Day on which `id` last fired, if ever.
    pub fn last_fired_day(&self, id: SlotId) -> Option<u64> {
        self.fired.get(&id).copied()
    }

    pub fn add_slot(&mut self, time_of_day: TimeOfDay) -> Result<ScheduleSlot, ScheduleError> {
        if self.slots.iter().any(|s| s.time_of_day == time_of_day) {
            return Err(ScheduleError::DuplicateTime(time_of_day));
        }
        let id = SlotId(self.slots.iter().map(|s| s.id.0).max().unwrap_or(0) + 1);
        let slot = ScheduleSlot {
            id,
            time_of_day,
            enabled: true,
        };
        self.slots.push(slot);
        Ok(slot)
    }

    pub fn remove_slot(&mut self, id: SlotId) -> Result<ScheduleSlot, ScheduleError> {
        let idx = self
            .slots
            .iter()
            .position(|s| s.id == id)
            .ok_or(ScheduleError::UnknownSlot(id))?;
        self.fired.remove(&id);
        Ok(self.slots.remove(idx))
    }

    fn open(&mut self, session: WateringSession) -> EventKind {
        self.session = Some(session);
        self.valve_open = true;
        EventKind::ValveOpened {
            session: session.kind,
            target_moisture: session.target_moisture,
        }
    }

    fn close(&mut self, reason: EndReason, m: f64, events: &mut Vec<EventKind>) {
        if let Some(session) = self.session.take() {
            self.valve_open = false;
            events.push(EventKind::WateringEnded {
                session: session.kind,
                reason,
                moisture: m,
            });
            events.push(EventKind::ValveClosed { session: session.kind });
        }
    }

    /// Slots whose occurrence falls in `(last_decision, clock]` and that have
    /// not fired on that day. On the first decision the window is `[clock, clock]`.
    fn due_slots(&mut self, clock: SimTime) -> usize {
        let window_start = self.last_decision.map_or(clock.0, |t| t.0 + 1);
        if window_start > clock.0 {
            return 0;
        }
        let first_day = SimTime(window_start).day();
        let mut fired_now = 0;
        for slot in self.slots.iter().filter(|s| s.enabled) {
            for day in first_day..=clock.day() {
                let at = slot.time_of_day.on_day(day);
                if at.0 < window_start || at > clock {
                    continue;
                }
                if self.fired.get(&slot.id) == Some(&day) {
                    continue;
                }
                self.fired.insert(slot.id, day);
                fired_now += 1;
            }
        }
        fired_now
    }

    /// One control decision for a moisture reading taken at `clock`.
    pub fn step_decision(
        &mut self,
        m: f64,
        clock: SimTime,
        profile: &ThresholdProfile,
        config: &IrrigationConfig,
    ) -> Result<Vec<EventKind>, IrrigationError> {
        let band = classify_moisture(m, profile)?;
        let mut events = Vec::new();

        let had_session = self.session.is_some();
        if let Some(session) = self.session {
            if m >= session.target_moisture {
                self.close(EndReason::TargetReached, m, &mut events);
            } else if clock.saturating_since(session.started_at) >= session.max_duration {
                self.close(EndReason::Timeout, m, &mut events);
            }
        }

        let slots_due = self.due_slots(clock);
        self.last_decision = Some(clock);

        if !had_session {
            if band == MoistureBand::Dry {
                let session = WateringSession {
                    kind: SessionKind::Auto,
                    target_moisture: (profile.moisture_low + config.auto_hysteresis).min(profile.moisture_high),
                    started_at: clock,
                    max_duration: config.max_session,
                };
                events.push(self.open(session));
            } else if slots_due > 0 && m < profile.moisture_mid {
                let session = WateringSession {
                    kind: SessionKind::Scheduled,
                    target_moisture: profile.moisture_mid,
                    started_at: clock,
                    max_duration: config.max_session,
                };
                events.push(self.open(session));
            }
        }

        if band == MoistureBand::Saturated && !self.saturation_alert_active {
            self.saturation_alert_active = true;
            events.push(EventKind::SaturationAlert {
                message: SATURATION_ALERT_TEXT.to_string(),
                moisture: m,
            });
        } else if band != MoistureBand::Saturated {
            self.saturation_alert_active = false;
        }

        Ok(events)
    }

    /// Handles a manual start/stop button press against the latest reading.
    pub fn request_manual(
        &mut self,
        action: ManualAction,
        m: f64,
        clock: SimTime,
        profile: &ThresholdProfile,
        config: &IrrigationConfig,
    ) -> (ManualOutcome, Vec<EventKind>) {
        let mut events = Vec::new();
        let outcome = match action {
            ManualAction::Start if self.session.is_some() => {
                reject(RejectReason::AlreadyWatering, "already watering", &mut events)
            }
            ManualAction::Start if m > profile.moisture_mid => {
                reject(RejectReason::Saturated, SATURATION_ALERT_TEXT, &mut events)
            }
            ManualAction::Start => {
                let session = WateringSession {
                    kind: SessionKind::Manual,
                    target_moisture: profile.moisture_mid,
                    started_at: clock,
                    max_duration: config.max_session,
                };
                events.push(self.open(session));
                ManualOutcome::Started { session }
            }
            ManualAction::Stop => match self.session {
                Some(s) if s.kind == SessionKind::Manual => {
                    self.close(EndReason::ManualStop, m, &mut events);
                    ManualOutcome::Stopped
                }
                _ => ManualOutcome::NoOp,
            },
        };
        (outcome, events)
    }
}

fn reject(reason: RejectReason, message: &str, events: &mut Vec<EventKind>) -> ManualOutcome {
    events.push(EventKind::ManualRejected {
        reason,
        message: message.to_string(),
    });
    ManualOutcome::Rejected {
        reason,
        message: message.to_string(),
    }
}

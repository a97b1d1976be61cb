//! The device loop: one sensor frame in, actuator commands and events out.
//!
//! Each tick evaluates health, ambient alerts, irrigation and security, in
//! that order. Operator commands are applied between ticks through
//! [`Controller::handle_command`]. The controller has a single owner; other
//! components only read [`StateView`] snapshots.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::{check_ambient, AmbientAlertKind};
use crate::event::{Event, EventKind, EventLog, RejectReason, SATURATION_ALERT_TEXT};
use crate::frame::{FrameError, SensorFrame};
use crate::health::{assess_health, HealthAssessment, HealthError};
use crate::irrigation::{
    classify_moisture, IrrigationConfig, IrrigationError, IrrigationState, ManualAction, ManualOutcome, MoistureBand,
    ScheduleError, ScheduleSlot, SlotId, WateringSession,
};
use crate::security::{SecurityConfig, SecurityState};
use crate::thresholds::ThresholdProfile;
use crate::time::{SimTime, TimeOfDay};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Health(#[from] HealthError),
    #[error(transparent)]
    Irrigation(#[from] IrrigationError),
    #[error("frame timestamp {frame} is earlier than controller clock {clock}")]
    ClockWentBackwards { frame: SimTime, clock: SimTime },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub irrigation: IrrigationConfig,
    pub security: SecurityConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActuatorCommands {
    pub valve_open: bool,
    pub buzzer_on: bool,
    pub lights_on: bool,
}

/// Operator commands, as sent by the app buttons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    WaterStart,
    WaterStop,
    Arm,
    Disarm,
    AddSlot { time: TimeOfDay },
    RemoveSlot { id: SlotId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CommandOutcome {
    Water(ManualOutcome),
    Security { state: SecurityState },
    SlotAdded { slot: ScheduleSlot },
    SlotRemoved { slot: ScheduleSlot },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertSource {
    TemperatureHigh,
    HumidityLow,
    Saturation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveAlert {
    pub source: AlertSource,
    pub message: String,
}

/// Read model handed to the service and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub clock: SimTime,
    pub frame: Option<SensorFrame>,
    pub health: Option<HealthAssessment>,
    pub moisture_band: Option<MoistureBand>,
    pub valve_open: bool,
    pub session: Option<WateringSession>,
    pub security: SecurityState,
    pub active_alerts: Vec<ActiveAlert>,
    pub slots: Vec<ScheduleSlot>,
    pub last_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControllerState {
    pub irrigation: IrrigationState,
    pub security: SecurityState,
    pub last_health: Option<HealthAssessment>,
    pub active_ambient_alerts: BTreeSet<AmbientAlertKind>,
    pub event_log: EventLog,
    pub last_frame: Option<SensorFrame>,
    pub clock: SimTime,
}

#[derive(Debug, Clone)]
pub struct Controller {
    profile: Arc<ThresholdProfile>,
    config: ControllerConfig,
    state: ControllerState,
}

impl Controller {
    pub fn new(profile: Arc<ThresholdProfile>, config: ControllerConfig) -> Self {
        Self::with_state(profile, config, ControllerState::default())
    }

    pub fn with_state(profile: Arc<ThresholdProfile>, config: ControllerConfig, state: ControllerState) -> Self {
        Controller { profile, config, state }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn profile(&self) -> &ThresholdProfile {
        &self.profile
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn events(&self) -> &[Event] {
        self.state.event_log.all()
    }

    pub fn commands(&self) -> ActuatorCommands {
        ActuatorCommands {
            valve_open: self.state.irrigation.valve_open(),
            buzzer_on: self.state.security.buzzer_on,
            lights_on: self.state.security.lights_on,
        }
    }

    fn append_all(&mut self, clock: SimTime, kinds: Vec<EventKind>) {
        for kind in kinds {
            self.state.event_log.append(clock, kind);
        }
    }

    /// Runs one control cycle. Returns the commands to apply and the number
    /// of events appended; an invalid frame leaves the state untouched.
    pub fn tick(&mut self, frame: &SensorFrame) -> Result<(ActuatorCommands, usize), ControllerError> {
        frame.validate()?;
        if frame.timestamp < self.state.clock {
            return Err(ControllerError::ClockWentBackwards {
                frame: frame.timestamp,
                clock: self.state.clock,
            });
        }
        let health = assess_health(frame.plant_temp, frame.plant_humidity, frame.leaf_color, &self.profile)?;

        // Everything that can fail has been checked; mutate from here on.
        let before = self.state.event_log.len();
        let clock = frame.timestamp;
        self.state.clock = clock;
        self.state.last_frame = Some(*frame);

        let previous_score = self.state.last_health.map(|h| h.score);
        if previous_score != Some(health.score) {
            self.state.event_log.append(
                clock,
                EventKind::HealthChanged {
                    previous_score,
                    assessment: health,
                },
            );
        }
        self.state.last_health = Some(health);

        let alerts = check_ambient(&frame.ambient(), &self.profile);
        let now_active: BTreeSet<_> = alerts.iter().map(|a| a.kind).collect();
        for alert in &alerts {
            if !self.state.active_ambient_alerts.contains(&alert.kind) {
                self.state.event_log.append(
                    clock,
                    EventKind::AmbientAlert {
                        alert: alert.kind,
                        message: alert.message().to_string(),
                        value: alert.value,
                    },
                );
            }
        }
        self.state.active_ambient_alerts = now_active;

        let irrigation_events =
            self.state
                .irrigation
                .step_decision(frame.soil_moisture, clock, &self.profile, &self.config.irrigation)?;
        self.append_all(clock, irrigation_events);

        let security_events = self
            .state
            .security
            .on_motion(frame.motion, clock, &self.config.security);
        self.append_all(clock, security_events);

        Ok((self.commands(), self.state.event_log.len() - before))
    }

    /// Applies an operator command at `clock`. Watering rejections are
    /// successful outcomes that also log a `ManualRejected` event.
    pub fn handle_command(&mut self, command: Command, clock: SimTime) -> Result<CommandOutcome, ControllerError> {
        let clock = clock.max(self.state.clock);
        match command {
            Command::WaterStart | Command::WaterStop => {
                let action = if command == Command::WaterStart {
                    ManualAction::Start
                } else {
                    ManualAction::Stop
                };
                let Some(frame) = self.state.last_frame else {
                    if action == ManualAction::Stop {
                        return Ok(CommandOutcome::Water(ManualOutcome::NoOp));
                    }
                    let message = "no soil moisture reading yet".to_string();
                    self.state.event_log.append(
                        clock,
                        EventKind::ManualRejected {
                            reason: RejectReason::NoReading,
                            message: message.clone(),
                        },
                    );
                    return Ok(CommandOutcome::Water(ManualOutcome::Rejected {
                        reason: RejectReason::NoReading,
                        message,
                    }));
                };
                let (outcome, events) = self.state.irrigation.request_manual(
                    action,
                    frame.soil_moisture,
                    clock,
                    &self.profile,
                    &self.config.irrigation,
                );
                self.append_all(clock, events);
                Ok(CommandOutcome::Water(outcome))
            }
            Command::Arm | Command::Disarm => {
                let event = self.state.security.set_armed(command == Command::Arm);
                self.state.event_log.append(clock, event);
                Ok(CommandOutcome::Security {
                    state: self.state.security,
                })
            }
            Command::AddSlot { time } => {
                let slot = self.state.irrigation.add_slot(time)?;
                Ok(CommandOutcome::SlotAdded { slot })
            }
            Command::RemoveSlot { id } => {
                let slot = self.state.irrigation.remove_slot(id)?;
                Ok(CommandOutcome::SlotRemoved { slot })
            }
        }
    }

    pub fn snapshot(&self) -> StateView {
        let s = &self.state;
        let mut active_alerts: Vec<ActiveAlert> = s
            .active_ambient_alerts
            .iter()
            .map(|kind| ActiveAlert {
                source: match kind {
                    AmbientAlertKind::TemperatureHigh => AlertSource::TemperatureHigh,
                    AmbientAlertKind::HumidityLow => AlertSource::HumidityLow,
                },
                message: kind.message().to_string(),
            })
            .collect();
        if s.irrigation.saturation_alert_active() {
            active_alerts.push(ActiveAlert {
                source: AlertSource::Saturation,
                message: SATURATION_ALERT_TEXT.to_string(),
            });
        }
        StateView {
            clock: s.clock,
            frame: s.last_frame,
            health: s.last_health,
            moisture_band: s
                .last_frame
                .and_then(|f| classify_moisture(f.soil_moisture, &self.profile).ok()),
            valve_open: s.irrigation.valve_open(),
            session: s.irrigation.session().copied(),
            security: s.security,
            active_alerts,
            slots: s.irrigation.list_slots().to_vec(),
            last_seq: s.event_log.last_seq(),
        }
    }
}

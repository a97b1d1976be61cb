//! Motion-triggered deterrence: buzzer and lights switch together while the
//! system is armed, and stay on for `deter_hold` after the last detection.

use serde::{Deserialize, Serialize};

use crate::event::{EventKind, MOTION_ALERT_TEXT};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityConfig {
    #[serde(rename = "deter_hold_ms")]
    pub deter_hold: SimDuration,
}

impl Default for SecurityConfig {
    fn default() -> Self {
        SecurityConfig {
            deter_hold: SimDuration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SecurityState {
    pub armed: bool,
    pub buzzer_on: bool,
    pub lights_on: bool,
    pub deter_until: Option<SimTime>,
    /// Motion seen on the previous reading; used for edge detection.
    #[serde(default)]
    pub motion_present: bool,
}

impl SecurityState {
    fn actuate(&mut self, on: bool) {
        self.buzzer_on = on;
        self.lights_on = on;
    }

    pub fn on_motion(&mut self, detected: bool, clock: SimTime, config: &SecurityConfig) -> Vec<EventKind> {
        let rising = detected && !self.motion_present;
        self.motion_present = detected;
        let mut events = Vec::new();

        if !self.armed {
            return events;
        }
        if detected {
            self.actuate(true);
            self.deter_until = Some(clock + config.deter_hold);
            if rising {
                events.push(EventKind::MotionDetected {
                    message: MOTION_ALERT_TEXT.to_string(),
                });
            }
        } else if self.deter_until.is_some_and(|until| clock >= until) {
            self.actuate(false);
            self.deter_until = None;
        }
        events
    }

    /// Always returns the matching Armed/Disarmed event, even when the state
    /// does not change.
    pub fn set_armed(&mut self, armed: bool) -> EventKind {
        self.armed = armed;
        if armed {
            EventKind::Armed
        } else {
            self.actuate(false);
            self.deter_until = None;
            EventKind::Disarmed
        }
    }
}

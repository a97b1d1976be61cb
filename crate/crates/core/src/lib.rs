//! Plant monitoring, watering and security control logic.
//!
//! The crate is organised around a single-owner [`controller::Controller`]
//! that consumes [`frame::SensorFrame`]s and drives the valve, buzzer and
//! lights. [`sim`] provides a deterministic garden to feed it, and [`batch`]
//! evaluates many readings or seeds at once.

pub mod ambient;
pub mod batch;
pub mod controller;
pub mod event;
pub mod frame;
pub mod health;
pub mod irrigation;
pub mod report;
pub mod scenarios;
pub mod security;
pub mod sim;
pub mod thresholds;
pub mod time;

pub use controller::{ActuatorCommands, Command, CommandOutcome, Controller, ControllerConfig, StateView};
pub use event::{Event, EventKind, SATURATION_ALERT_TEXT};
pub use frame::SensorFrame;
pub use health::{HealthAssessment, RgbReading};
pub use report::RunReport;
pub use sim::{Scenario, Trace};
pub use thresholds::{default_profile, load_profile, ThresholdProfile};
pub use time::{SimDuration, SimTime, TimeOfDay};

//! Deterministic, seeded stand-in for the physical garden.
//!
//! Soil moisture evolves by forward Euler at the scenario tick:
//!
//! ```text
//! m' = clamp(m - E*dt + (valve ? I*dt : 0), 0, 100)
//! E  = e0 * (1 + max(0, T_amb - 20) / 20) * (1 - H_amb / 100)    [%/min]
//! ```
//!
//! Ambient temperature and humidity follow a daily sinusoid, the plant
//! microclimate tracks the ambient with fixed offsets, and leaf colour drifts
//! toward a stress colour once the soil has stayed below the dry threshold
//! for the stress delay.
//!
//! A run interleaves `sample -> controller -> step` once per tick and records
//! every frame, actuator command and event. Identical scenarios produce
//! bit-identical traces.

mod garden;
mod scenario;

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use garden::{GardenSim, GardenState};
pub use scenario::{
    InitialConditions, LeafDynamics, MotionScript, PlantResponse, Scenario, ScenarioError, ScriptedCommand,
    SensorNoise, SoilDynamics, Weather,
};

use crate::controller::{ActuatorCommands, Command, Controller, ControllerError, StateView};
use crate::event::Event;
use crate::frame::SensorFrame;
use crate::thresholds::ThresholdProfile;
use crate::time::SimTime;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("controller fault at {at}: {source}")]
    Controller {
        at: SimTime,
        #[source]
        source: ControllerError,
    },
}

/// What the simulator needs from the device under test.
pub trait ControlHook {
    /// Applies an operator command between ticks; returns the events it logged.
    fn command(&mut self, command: Command, clock: SimTime) -> Result<Vec<Event>, ControllerError>;

    /// Processes one frame; returns the actuator commands and the events logged.
    fn tick(&mut self, frame: &SensorFrame) -> Result<(ActuatorCommands, Vec<Event>), ControllerError>;

    fn view(&self) -> StateView;
}

impl ControlHook for Controller {
    fn command(&mut self, command: Command, clock: SimTime) -> Result<Vec<Event>, ControllerError> {
        let before = self.state().event_log.last_seq();
        self.handle_command(command, clock)?;
        Ok(self.state().event_log.since(before).to_vec())
    }

    fn tick(&mut self, frame: &SensorFrame) -> Result<(ActuatorCommands, Vec<Event>), ControllerError> {
        let before = self.state().event_log.last_seq();
        let (commands, _) = Controller::tick(self, frame)?;
        Ok((commands, self.state().event_log.since(before).to_vec()))
    }

    fn view(&self) -> StateView {
        self.snapshot()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub timestamp: SimTime,
    pub frame: SensorFrame,
    pub commands: ActuatorCommands,
    /// Events logged by scripted commands applied before this tick, then by the tick itself.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario: String,
    pub entries: Vec<TraceEntry>,
    pub final_view: StateView,
}

impl Trace {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter().flat_map(|e| e.events.iter())
    }

    pub fn count(&self, name: &str) -> usize {
        self.events().filter(|e| e.name() == name).count()
    }

    /// Newline-delimited JSON, one record per tick.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

/// Operator commands implied by the scenario's initial setup: its schedule
/// slots and arming, applied at the start time before any scripted command.
fn setup_commands(scenario: &Scenario) -> impl Iterator<Item = Command> + '_ {
    let slots = scenario.slots.iter().map(|&time| Command::AddSlot { time });
    slots.chain(scenario.armed.then_some(Command::Arm))
}

/// Runs a scenario against any controller hook.
pub fn run_with<H: ControlHook>(
    scenario: &Scenario,
    profile: &ThresholdProfile,
    hook: &mut H,
) -> Result<Trace, RunError> {
    scenario.validate(profile)?;
    let sim = GardenSim::new(scenario.clone(), profile);
    let start = scenario.start();

    let mut scripted: Vec<(SimTime, Command)> = setup_commands(scenario)
        .map(|c| (start, c))
        .chain(
            scenario
                .commands
                .iter()
                .map(|c| (start + scenario::secs_to_duration(c.at_secs), c.command)),
        )
        .collect();
    scripted.sort_by_key(|(at, _)| *at);
    let mut scripted = scripted.into_iter().peekable();

    let mut state = sim.initial_state();
    let ticks = scenario.tick_count();
    let mut entries = Vec::with_capacity(ticks as usize);
    for tick in 0..ticks {
        let clock = state.sim_clock;
        let mut events = Vec::new();
        while let Some((_, command)) = scripted.next_if(|(at, _)| *at <= clock) {
            events.extend(
                hook.command(command, clock)
                    .map_err(|source| RunError::Controller { at: clock, source })?,
            );
        }

        let frame = sim.sample_sensors(&mut state);
        let (commands, tick_events) = hook
            .tick(&frame)
            .map_err(|source| RunError::Controller { at: clock, source })?;
        events.extend(tick_events);
        entries.push(TraceEntry {
            tick,
            timestamp: clock,
            frame,
            commands,
            events,
        });
        state = sim.step(&state, commands.valve_open);
    }

    Ok(Trace {
        scenario: scenario.name.clone(),
        entries,
        final_view: hook.view(),
    })
}

/// Runs a scenario with a fresh controller configured by the scenario.
pub fn run(scenario: &Scenario, profile: &ThresholdProfile) -> Result<Trace, RunError> {
    let mut controller = Controller::new(Arc::new(profile.clone()), scenario.controller);
    run_with(scenario, profile, &mut controller)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::default_profile;

    #[test]
    fn trace_has_one_entry_per_tick() {
        let scenario = Scenario {
            duration_secs: 10,
            ..Scenario::default()
        };
        let trace = run(&scenario, &default_profile()).unwrap();
        assert_eq!(trace.entries.len(), 10);
        assert_eq!(trace.to_ndjson().iter().filter(|&&b| b == b'\n').count(), 10);
    }

    #[test]
    fn no_motion_no_alerts() {
        let scenario = Scenario {
            duration_secs: 120,
            armed: true,
            ..Scenario::default()
        };
        let trace = run(&scenario, &default_profile()).unwrap();
        assert_eq!(trace.count("MotionDetected"), 0);
    }

    #[test]
    fn scripted_commands_apply_before_their_tick() {
        let mut scenario = Scenario {
            duration_secs: 10,
            ..Scenario::default()
        };
        scenario.commands.push(ScriptedCommand {
            at_secs: 3.0,
            command: Command::Arm,
        });
        let trace = run(&scenario, &default_profile()).unwrap();
        assert_eq!(trace.entries[3].events[0].name(), "Armed");
        assert!(trace.final_view.security.armed);
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let scenario = Scenario {
            tick_ms: 0,
            ..Scenario::default()
        };
        assert!(matches!(run(&scenario, &default_profile()), Err(RunError::Scenario(_))));
    }
}

//! The single owner of the controller and the simulated garden.
//!
//! Requests reach the engine through a bounded queue and are applied one at
//! a time between ticks, so the event log never interleaves partial effects.
//! After every mutation the engine persists new events, mirrors them into the
//! shared history, publishes them on the stream and refreshes the snapshot.

use std::collections::VecDeque;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::MissedTickBehavior;
use tracing::{error, warn};
use verdant_core::controller::{Command, CommandOutcome, Controller, ControllerError, ControllerState, StateView};
use verdant_core::event::Event;
use verdant_core::irrigation::IrrigationState;
use verdant_core::sim::{GardenSim, GardenState, Scenario};
use verdant_core::{SimDuration, SimTime, ThresholdProfile};

use crate::error::ServiceError;
use crate::store::Store;

/// One message on the push stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
pub enum StreamMessage {
    Event(Event),
    State(StateView),
}

pub(crate) enum Request {
    Command(Command, oneshot::Sender<Result<CommandOutcome, ControllerError>>),
    Step(u64, oneshot::Sender<StateView>),
}

/// Read side shared with request handlers.
#[derive(Clone)]
pub(crate) struct Shared {
    pub snapshot: watch::Receiver<StateView>,
    pub history: Arc<RwLock<Vec<Event>>>,
    pub stream: broadcast::Sender<StreamMessage>,
}

pub(crate) struct Engine {
    controller: Controller,
    sim: GardenSim,
    garden: GardenState,
    scripted: VecDeque<(SimTime, Command)>,
    store: Option<Store>,
    snapshot: watch::Sender<StateView>,
    history: Arc<RwLock<Vec<Event>>>,
    stream: broadcast::Sender<StreamMessage>,
    published: u64,
}

const STREAM_CAPACITY: usize = 4096;

impl Engine {
    /// Builds the engine, restoring schedules and events from `store` if given.
    pub fn new(
        scenario: &Scenario,
        profile: ThresholdProfile,
        store: Option<(Store, crate::store::Restored)>,
    ) -> Result<(Engine, Shared), ServiceError> {
        scenario.validate(&profile)?;
        let (store, restored) = match store {
            Some((s, r)) => (Some(s), r),
            None => (None, Default::default()),
        };

        let persisted_slots = restored.slots.is_some();
        let irrigation =
            IrrigationState::with_slots(restored.slots.unwrap_or_default()).expect("slots validated on load");
        let history: Vec<Event> = restored.events.all().to_vec();
        let state = ControllerState {
            irrigation,
            event_log: restored.events,
            ..ControllerState::default()
        };
        let controller = Controller::with_state(Arc::new(profile.clone()), scenario.controller, state);

        let sim = GardenSim::new(scenario.clone(), &profile);
        let garden = sim.initial_state();
        let start = scenario.start();

        let mut scripted: Vec<(SimTime, Command)> = Vec::new();
        if !persisted_slots {
            scripted.extend(scenario.slots.iter().map(|&time| (start, Command::AddSlot { time })));
        }
        if scenario.armed {
            scripted.push((start, Command::Arm));
        }
        scripted.extend(scenario.commands.iter().map(|c| {
            let offset = SimDuration((c.at_secs * 1000.0).round() as u64);
            (start + offset, c.command)
        }));
        scripted.sort_by_key(|(at, _)| *at);

        let published = controller.state().event_log.last_seq();
        let (snapshot, snapshot_rx) = watch::channel(controller.snapshot());
        let (stream, _) = broadcast::channel(STREAM_CAPACITY);
        let history = Arc::new(RwLock::new(history));
        let shared = Shared {
            snapshot: snapshot_rx,
            history: history.clone(),
            stream: stream.clone(),
        };
        let engine = Engine {
            controller,
            sim,
            garden,
            scripted: scripted.into(),
            store,
            snapshot,
            history,
            stream,
            published,
        };
        Ok((engine, shared))
    }

    fn now(&self) -> SimTime {
        self.garden.sim_clock
    }

    fn apply(&mut self, command: Command) -> Result<CommandOutcome, ControllerError> {
        let slots_before = self.controller.state().irrigation.list_slots().to_vec();
        let outcome = self.controller.handle_command(command, self.now());
        let slots = self.controller.state().irrigation.list_slots();
        if slots != slots_before.as_slice() {
            if let Some(store) = &self.store {
                if let Err(e) = store.save_schedule(slots) {
                    error!("failed to persist schedule: {e}");
                }
            }
        }
        outcome
    }

    fn tick(&mut self) {
        let clock = self.now();
        while self.scripted.front().is_some_and(|(at, _)| *at <= clock) {
            let (_, command) = self.scripted.pop_front().expect("checked front");
            if let Err(e) = self.apply(command) {
                warn!("scripted command {command:?} failed: {e}");
            }
        }
        let frame = self.sim.sample_sensors(&mut self.garden);
        match self.controller.tick(&frame) {
            Ok((commands, _)) => self.garden = self.sim.step(&self.garden, commands.valve_open),
            Err(e) => {
                error!("controller rejected frame at {clock}: {e}");
                self.garden = self.sim.step(&self.garden, self.controller.commands().valve_open);
            }
        }
        self.publish(true);
    }

    /// Persists, mirrors and broadcasts every event not yet published.
    fn publish(&mut self, with_state: bool) {
        let fresh: Vec<Event> = self.controller.state().event_log.since(self.published).to_vec();
        self.published = self.controller.state().event_log.last_seq();
        if let Some(store) = &mut self.store {
            if let Err(e) = store.append_events(&fresh) {
                error!("failed to persist events: {e}");
            }
        }
        self.history
            .write()
            .expect("history lock poisoned")
            .extend(fresh.iter().cloned());
        let view = self.controller.snapshot();
        for event in fresh {
            let _ = self.stream.send(StreamMessage::Event(event));
        }
        if with_state {
            let _ = self.stream.send(StreamMessage::State(view.clone()));
        }
        self.snapshot.send_replace(view);
    }

    fn handle(&mut self, request: Request) {
        match request {
            Request::Command(command, reply) => {
                let outcome = self.apply(command);
                self.publish(false);
                let _ = reply.send(outcome);
            }
            Request::Step(n, reply) => {
                for _ in 0..n {
                    self.tick();
                }
                let _ = reply.send(self.controller.snapshot());
            }
        }
    }

    /// Runs until every request sender is dropped. With `pacing` set to
    /// `(period, n)` the engine advances `n` ticks each period; otherwise it
    /// only advances on explicit step requests.
    pub async fn run(mut self, mut requests: mpsc::Receiver<Request>, pacing: Option<(Duration, u64)>) {
        let Some((period, per_wake)) = pacing else {
            while let Some(request) = requests.recv().await {
                self.handle(request);
            }
            return;
        };
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            tokio::select! {
                biased;
                request = requests.recv() => match request {
                    Some(request) => self.handle(request),
                    None => return,
                },
                _ = interval.tick() => {
                    for _ in 0..per_wake {
                        self.tick();
                    }
                }
            }
        }
    }
}

/// Wall-clock pacing for a simulated tick of `tick_ms` at `speed`×.
pub(crate) fn pacing(tick_ms: u64, speed: f64) -> (Duration, u64) {
    let wall = Duration::from_secs_f64(tick_ms as f64 / 1000.0 / speed);
    let floor = Duration::from_millis(1);
    if wall >= floor {
        (wall, 1)
    } else {
        let per_wake = (floor.as_secs_f64() / wall.as_secs_f64()).round().max(1.0) as u64;
        (floor, per_wake)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pacing_batches_fast_ticks() {
        assert_eq!(pacing(1000, 1.0), (Duration::from_secs(1), 1));
        assert_eq!(pacing(1000, 100.0), (Duration::from_millis(10), 1));
        assert_eq!(pacing(1000, 10_000.0), (Duration::from_millis(1), 10));
    }
}

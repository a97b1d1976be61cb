//! On-disk state: the schedule document and the append-only event file.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use verdant_core::event::{Event, EventLog};
use verdant_core::irrigation::{IrrigationState, ScheduleSlot};

use crate::error::ServiceError;

pub const SCHEDULES_FILE: &str = "schedules.json";
pub const EVENTS_FILE: &str = "events.ndjson";
pub const SCHEDULE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedSchedule {
    pub version: u32,
    pub slots: Vec<ScheduleSlot>,
}

impl PersistedSchedule {
    pub fn new(slots: &[ScheduleSlot]) -> Self {
        PersistedSchedule {
            version: SCHEDULE_VERSION,
            slots: slots.to_vec(),
        }
    }

    pub fn to_document(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schedule serialization cannot fail");
        s.push('\n');
        s
    }
}

/// What was found in the data directory at startup.
#[derive(Debug, Default)]
pub struct Restored {
    pub slots: Option<Vec<ScheduleSlot>>,
    pub events: EventLog,
}

#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    events: File,
}

fn io_error(path: &Path, source: io::Error) -> ServiceError {
    ServiceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> ServiceError {
    ServiceError::CorruptFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

impl Store {
    /// Opens (creating if needed) the data directory and loads its contents.
    pub fn open(dir: &Path) -> Result<(Store, Restored), ServiceError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let slots = load_schedule(&dir.join(SCHEDULES_FILE))?;
        let events_path = dir.join(EVENTS_FILE);
        let events = load_events(&events_path)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&events_path)
            .map_err(|e| io_error(&events_path, e))?;
        Ok((
            Store {
                dir: dir.to_path_buf(),
                events: file,
            },
            Restored { slots, events },
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Replaces the schedule document via a temporary file and rename.
    pub fn save_schedule(&self, slots: &[ScheduleSlot]) -> Result<(), ServiceError> {
        let path = self.dir.join(SCHEDULES_FILE);
        let tmp = self.dir.join(format!("{SCHEDULES_FILE}.tmp"));
        let doc = PersistedSchedule::new(slots).to_document();
        let write = || -> io::Result<()> {
            let mut f = File::create(&tmp)?;
            f.write_all(doc.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| io_error(&path, e))
    }

    pub fn append_events(&mut self, events: &[Event]) -> Result<(), ServiceError> {
        if events.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for event in events {
            serde_json::to_writer(&mut buf, event).expect("event serialization cannot fail");
            buf.push(b'\n');
        }
        let path = self.dir.join(EVENTS_FILE);
        self.events.write_all(&buf).map_err(|e| io_error(&path, e))?;
        self.events.flush().map_err(|e| io_error(&path, e))
    }
}

fn load_schedule(path: &Path) -> Result<Option<Vec<ScheduleSlot>>, ServiceError> {
    let doc = match fs::read_to_string(path) {
        Ok(doc) => doc,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_error(path, e)),
    };
    let schedule: PersistedSchedule = serde_json::from_str(&doc).map_err(|e| corrupt(path, e.to_string()))?;
    if schedule.version != SCHEDULE_VERSION {
        return Err(corrupt(path, format!("unsupported version {}", schedule.version)));
    }
    IrrigationState::with_slots(schedule.slots.clone()).map_err(|e| corrupt(path, e.to_string()))?;
    Ok(Some(schedule.slots))
}

fn load_events(path: &Path) -> Result<EventLog, ServiceError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(EventLog::new()),
        Err(e) => return Err(io_error(path, e)),
    };
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| corrupt(path, format!("line {}: {e}", i + 1)))?;
        events.push(event);
    }
    EventLog::from_history(events).ok_or_else(|| corrupt(path, "event sequence is not contiguous from 1"))
}

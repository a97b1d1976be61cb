//! Machine-readable summary of a simulated run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controller::StateView;
use crate::event::EventKind;
use crate::sim::{Scenario, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoistureStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub ticks: u64,
    pub final_state: StateView,
    /// Every event kind appears, including those with zero occurrences.
    pub event_counts: BTreeMap<String, usize>,
    pub soil_moisture: MoistureStats,
    pub valve_open_ms: u64,
}

impl RunReport {
    pub fn from_trace(scenario: &Scenario, trace: &Trace) -> Self {
        let mut event_counts: BTreeMap<String, usize> = EventKind::NAMES.iter().map(|n| (n.to_string(), 0)).collect();
        for event in trace.events() {
            *event_counts.entry(event.name().to_string()).or_default() += 1;
        }

        let readings = trace.entries.iter().map(|e| e.frame.soil_moisture);
        let (min, max, sum) = readings.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, sum), m| {
            (lo.min(m), hi.max(m), sum + m)
        });
        let n = trace.entries.len();
        let soil_moisture = if n == 0 {
            MoistureStats {
                min: 0.0,
                max: 0.0,
                mean: 0.0,
            }
        } else {
            MoistureStats {
                min,
                max,
                mean: sum / n as f64,
            }
        };

        let open_ticks = trace.entries.iter().filter(|e| e.commands.valve_open).count() as u64;
        RunReport {
            scenario: trace.scenario.clone(),
            seed: scenario.seed,
            duration_ms: n as u64 * scenario.tick_ms,
            ticks: n as u64,
            final_state: trace.final_view.clone(),
            event_counts,
            soil_moisture,
            valve_open_ms: open_ticks * scenario.tick_ms,
        }
    }

    pub fn count(&self, name: &str) -> usize {
        self.event_counts.get(name).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// One-paragraph human summary for the terminal.
    pub fn summary(&self) -> String {
        let nonzero: Vec<String> = self
            .event_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, c)| format!("{k}={c}"))
            .collect();
        let band = self
            .final_state
            .moisture_band
            .map_or_else(|| "-".to_string(), |b| format!("{b:?}"));
        format!(
            "scenario {} (seed {}): {} ticks, soil moisture min {:.2} / mean {:.2} / max {:.2} %, final band {}, valve open {:.1} s\nevents: {}",
            self.scenario,
            self.seed,
            self.ticks,
            self.soil_moisture.min,
            self.soil_moisture.mean,
            self.soil_moisture.max,
            band,
            self.valve_open_ms as f64 / 1000.0,
            if nonzero.is_empty() { "none".to_string() } else { nonzero.join(", ") }
        )
    }
}

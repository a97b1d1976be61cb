use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{Command, ControllerConfig};
use crate::health::{check_color, RgbReading};
use crate::thresholds::ThresholdProfile;
use crate::time::{SimDuration, SimTime, TimeOfDay, MS_PER_SECOND};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    pub soil_moisture: f64,
    /// Defaults to the leaf baseline colour.
    pub leaf_color: Option<RgbReading>,
}

/// Daily sinusoid: temperature peaks at `peak_hour`, humidity bottoms out then.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weather {
    pub temp_min: f64,
    pub temp_max: f64,
    pub humidity_min: f64,
    pub humidity_max: f64,
    pub peak_hour: f64,
}

impl Default for Weather {
    fn default() -> Self {
        Weather {
            temp_min: 22.0,
            temp_max: 30.0,
            humidity_min: 50.0,
            humidity_max: 60.0,
            peak_hour: 14.0,
        }
    }
}

impl Weather {
    /// `(temperature °C, humidity %)` at `clock`.
    pub fn at(&self, clock: SimTime) -> (f64, f64) {
        let phase = 2.0 * std::f64::consts::PI * (clock.hour_of_day() - self.peak_hour) / 24.0;
        let c = phase.cos();
        let t_mid = (self.temp_min + self.temp_max) / 2.0;
        let t_amp = (self.temp_max - self.temp_min) / 2.0;
        let h_mid = (self.humidity_min + self.humidity_max) / 2.0;
        let h_amp = (self.humidity_max - self.humidity_min) / 2.0;
        (t_mid + t_amp * c, (h_mid - h_amp * c).clamp(0.0, 100.0))
    }
}

/// Plant microclimate relative to the surroundings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantResponse {
    pub temp_offset: f64,
    pub humidity_offset: f64,
}

impl Default for PlantResponse {
    fn default() -> Self {
        PlantResponse {
            temp_offset: -1.0,
            humidity_offset: 15.0,
        }
    }
}

/// Rates in percent of saturation per simulated minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoilDynamics {
    pub evaporation_base: f64,
    pub inflow_rate: f64,
}

impl Default for SoilDynamics {
    fn default() -> Self {
        SoilDynamics {
            evaporation_base: 0.05,
            inflow_rate: 2.0,
        }
    }
}

impl SoilDynamics {
    /// Evaporation rate in %/min for the given surroundings.
    pub fn evaporation(&self, ambient_temp: f64, ambient_humidity: f64) -> f64 {
        self.evaporation_base * (1.0 + (ambient_temp - 20.0).max(0.0) / 20.0) * (1.0 - ambient_humidity / 100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeafDynamics {
    pub baseline: RgbReading,
    pub stress: RgbReading,
    pub stress_delay_mins: u64,
    /// Counts per minute, per channel, toward the stress colour.
    pub drift_per_min: f64,
    /// Counts per minute, per channel, back toward the baseline.
    pub relax_per_min: f64,
}

impl Default for LeafDynamics {
    fn default() -> Self {
        LeafDynamics {
            baseline: RgbReading::new(400, 600, 500),
            stress: RgbReading::new(900, 1200, 1400),
            stress_delay_mins: 60,
            drift_per_min: 10.0,
            relax_per_min: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionScript {
    /// Seconds after scenario start.
    pub events_secs: Vec<f64>,
    pub poisson_rate_per_hour: f64,
}

/// Zero-mean uniform noise amplitudes, added to sampled readings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    pub moisture: f64,
    pub temperature: f64,
    pub humidity: f64,
    pub color: f64,
}

impl SensorNoise {
    pub fn is_silent(&self) -> bool {
        self.moisture == 0.0 && self.temperature == 0.0 && self.humidity == 0.0 && self.color == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCommand {
    pub at_secs: f64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration_secs: u64,
    pub tick_ms: u64,
    pub start_time: TimeOfDay,
    pub initial: InitialConditions,
    pub weather: Weather,
    pub plant: PlantResponse,
    pub soil: SoilDynamics,
    pub leaf: LeafDynamics,
    pub motion: MotionScript,
    pub noise: SensorNoise,
    pub controller: ControllerConfig,
    pub armed: bool,
    pub slots: Vec<TimeOfDay>,
    pub commands: Vec<ScriptedCommand>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "unnamed".into(),
            seed: 0,
            duration_secs: 3600,
            tick_ms: 1000,
            start_time: TimeOfDay::new(0, 0).expect("midnight"),
            initial: InitialConditions {
                soil_moisture: 50.0,
                leaf_color: None,
            },
            weather: Weather::default(),
            plant: PlantResponse::default(),
            soil: SoilDynamics::default(),
            leaf: LeafDynamics::default(),
            motion: MotionScript::default(),
            noise: SensorNoise::default(),
            controller: ControllerConfig::default(),
            armed: false,
            slots: Vec::new(),
            commands: Vec::new(),
        }
    }
}

pub(crate) fn secs_to_duration(secs: f64) -> SimDuration {
    SimDuration((secs * MS_PER_SECOND as f64).round() as u64)
}

impl Scenario {
    pub fn from_json(document: &str) -> Result<Scenario, ScenarioError> {
        Ok(serde_json::from_str(document)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn tick(&self) -> SimDuration {
        SimDuration(self.tick_ms)
    }

    pub fn start(&self) -> SimTime {
        self.start_time.on_day(0)
    }

    /// Number of ticks in a run.
    pub fn tick_count(&self) -> u64 {
        self.duration_secs * MS_PER_SECOND / self.tick_ms.max(1)
    }

    pub fn validate(&self, profile: &ThresholdProfile) -> Result<(), ScenarioError> {
        if self.tick_ms == 0 {
            return Err(invalid("tick_ms", "must be greater than 0"));
        }
        if self.duration_secs * MS_PER_SECOND < self.tick_ms {
            return Err(invalid("duration_secs", "must cover at least one tick"));
        }
        let finite = [
            ("initial.soil_moisture", self.initial.soil_moisture),
            ("weather.temp_min", self.weather.temp_min),
            ("weather.temp_max", self.weather.temp_max),
            ("weather.humidity_min", self.weather.humidity_min),
            ("weather.humidity_max", self.weather.humidity_max),
            ("weather.peak_hour", self.weather.peak_hour),
            ("plant.temp_offset", self.plant.temp_offset),
            ("plant.humidity_offset", self.plant.humidity_offset),
            ("soil.evaporation_base", self.soil.evaporation_base),
            ("soil.inflow_rate", self.soil.inflow_rate),
            ("leaf.drift_per_min", self.leaf.drift_per_min),
            ("leaf.relax_per_min", self.leaf.relax_per_min),
            ("motion.poisson_rate_per_hour", self.motion.poisson_rate_per_hour),
            ("noise.moisture", self.noise.moisture),
            ("noise.temperature", self.noise.temperature),
            ("noise.humidity", self.noise.humidity),
            ("noise.color", self.noise.color),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, "must be a finite number"));
            }
        }
        if !(0.0..=100.0).contains(&self.initial.soil_moisture) {
            return Err(invalid("initial.soil_moisture", "must be within 0..=100"));
        }
        if self.weather.temp_min > self.weather.temp_max {
            return Err(invalid("weather.temp_max", "must be at least temp_min"));
        }
        if self.weather.humidity_min > self.weather.humidity_max {
            return Err(invalid("weather.humidity_max", "must be at least humidity_min"));
        }
        if self.weather.humidity_min < 0.0 || self.weather.humidity_max > 100.0 {
            return Err(invalid(
                "weather.humidity_min",
                "humidity range must lie within 0..=100",
            ));
        }
        if self.soil.inflow_rate <= 0.0 {
            return Err(invalid("soil.inflow_rate", "must be greater than 0"));
        }
        if self.soil.evaporation_base < 0.0 {
            return Err(invalid("soil.evaporation_base", "must not be negative"));
        }
        if self.leaf.drift_per_min < 0.0 || self.leaf.relax_per_min < 0.0 {
            return Err(invalid("leaf.drift_per_min", "leaf rates must not be negative"));
        }
        if !check_color(self.leaf.baseline, profile).ok {
            return Err(invalid(
                "leaf.baseline",
                "baseline colour falls inside an unhealthy interval of the active profile",
            ));
        }
        if self.motion.poisson_rate_per_hour < 0.0 {
            return Err(invalid("motion.poisson_rate_per_hour", "must not be negative"));
        }
        if self.motion.events_secs.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid(
                "motion.events_secs",
                "event times must be finite and non-negative",
            ));
        }
        if [
            self.noise.moisture,
            self.noise.temperature,
            self.noise.humidity,
            self.noise.color,
        ]
        .iter()
        .any(|a| *a < 0.0)
        {
            return Err(invalid("noise", "amplitudes must not be negative"));
        }
        if self.controller.irrigation.max_session.is_zero() {
            return Err(invalid("controller.irrigation.max_session", "must be greater than 0"));
        }
        if !self.controller.irrigation.auto_hysteresis.is_finite() || self.controller.irrigation.auto_hysteresis < 0.0 {
            return Err(invalid(
                "controller.irrigation.auto_hysteresis",
                "must be finite and non-negative",
            ));
        }
        if self.commands.iter().any(|c| !c.at_secs.is_finite() || c.at_secs < 0.0) {
            return Err(invalid("commands", "command times must be finite and non-negative"));
        }
        for (i, slot) in self.slots.iter().enumerate() {
            if self.slots[..i].contains(slot) {
                return Err(invalid("slots", format!("duplicate slot {slot}")));
            }
        }
        Ok(())
    }
}

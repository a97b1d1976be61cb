use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::AmbientReading;
use crate::health::RgbReading;
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid sensor frame: {field} = {value}")]
pub struct FrameError {
    pub field: &'static str,
    pub value: f64,
}

/// One reading of every sensor, taken at `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub timestamp: SimTime,
    pub soil_moisture: f64,
    pub plant_temp: f64,
    pub plant_humidity: f64,
    pub ambient_temp: f64,
    pub ambient_humidity: f64,
    pub leaf_color: RgbReading,
    pub motion: bool,
}

impl SensorFrame {
    pub fn ambient(&self) -> AmbientReading {
        AmbientReading {
            temperature: self.ambient_temp,
            humidity: self.ambient_humidity,
            timestamp: self.timestamp,
        }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let percent = |field, value: f64| {
            if (0.0..=100.0).contains(&value) {
                Ok(())
            } else {
                Err(FrameError { field, value })
            }
        };
        let finite = |field, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(FrameError { field, value })
            }
        };
        percent("soil_moisture", self.soil_moisture)?;
        percent("plant_humidity", self.plant_humidity)?;
        percent("ambient_humidity", self.ambient_humidity)?;
        finite("plant_temp", self.plant_temp)?;
        finite("ambient_temp", self.ambient_temp)
    }
}

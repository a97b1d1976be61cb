//! Surrounding temperature and humidity alerts.
//!
//! Unlike the plant-health ranges these comparisons are inclusive: the
//! alert fires at exactly the threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thresholds::ThresholdProfile;
use crate::time::SimTime;

pub const TEMPERATURE_HIGH_TEXT: &str = "surrounding temperature is high";
pub const HUMIDITY_LOW_TEXT: &str = "surrounding humidity is low";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmbientError {
    #[error("ambient temperature {0} is not a finite number")]
    NonFiniteTemperature(f64),
    #[error("ambient humidity {0} is outside 0..=100")]
    HumidityOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientReading {
    pub temperature: f64,
    pub humidity: f64,
    pub timestamp: SimTime,
}

impl AmbientReading {
    pub fn validate(&self) -> Result<(), AmbientError> {
        if !self.temperature.is_finite() {
            return Err(AmbientError::NonFiniteTemperature(self.temperature));
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            return Err(AmbientError::HumidityOutOfRange(self.humidity));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientAlertKind {
    TemperatureHigh,
    HumidityLow,
}

impl AmbientAlertKind {
    pub fn message(self) -> &'static str {
        match self {
            AmbientAlertKind::TemperatureHigh => TEMPERATURE_HIGH_TEXT,
            AmbientAlertKind::HumidityLow => HUMIDITY_LOW_TEXT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub kind: AmbientAlertKind,
    pub value: f64,
}

impl Alert {
    pub fn message(&self) -> &'static str {
        self.kind.message()
    }
}

/// Level-triggered check; the controller turns it into edge-triggered events.
pub fn check_ambient(reading: &AmbientReading, profile: &ThresholdProfile) -> Vec<Alert> {
    let mut alerts = Vec::with_capacity(2);
    if reading.temperature >= profile.ambient_temp_high {
        alerts.push(Alert {
            kind: AmbientAlertKind::TemperatureHigh,
            value: reading.temperature,
        });
    }
    if reading.humidity <= profile.ambient_humidity_low {
        alerts.push(Alert {
            kind: AmbientAlertKind::HumidityLow,
            value: reading.humidity,
        });
    }
    alerts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::default_profile;

    fn kinds(t: f64, h: f64) -> Vec<AmbientAlertKind> {
        let r = AmbientReading {
            temperature: t,
            humidity: h,
            timestamp: SimTime(0),
        };
        check_ambient(&r, &default_profile())
            .into_iter()
            .map(|a| a.kind)
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(kinds(42.0, 50.0), vec![AmbientAlertKind::TemperatureHigh]);
        assert_eq!(
            kinds(40.0, 30.0),
            vec![AmbientAlertKind::TemperatureHigh, AmbientAlertKind::HumidityLow]
        );
        assert!(kinds(25.0, 55.0).is_empty());
        assert!(kinds(39.99, 30.01).is_empty());
    }

    #[test]
    fn message_text_is_exact() {
        assert_eq!(
            AmbientAlertKind::TemperatureHigh.message(),
            "surrounding temperature is high"
        );
        assert_eq!(AmbientAlertKind::HumidityLow.message(), "surrounding humidity is low");
    }

    #[test]
    fn validation() {
        let mut r = AmbientReading {
            temperature: 25.0,
            humidity: 50.0,
            timestamp: SimTime(0),
        };
        assert!(r.validate().is_ok());
        r.humidity = 101.0;
        assert!(r.validate().is_err());
        r.humidity = 50.0;
        r.temperature = f64::NAN;
        assert!(r.validate().is_err());
    }
}

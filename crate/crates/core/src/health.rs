//! Three-factor plant health determination.
//!
//! Temperature and humidity pass when strictly inside the profile's plant
//! range. Leaf colour passes when no channel falls strictly inside any of
//! that channel's unhealthy intervals. Each passing factor is worth 30%; the
//! plant is healthy when at least two factors pass.
//!
//! The colour levels are read as unhealthy-leaf signatures because they were
//! collected from diseased leaves; there is no healthy-green baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thresholds::{Channel, ThresholdProfile};

pub const SCORE_PER_FACTOR: u8 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HealthError {
    #[error("plant temperature {0} is not a finite number")]
    NonFiniteTemperature(f64),
    #[error("plant humidity {0} is outside 0..=100")]
    HumidityOutOfRange(f64),
}

/// Raw per-channel counts from the leaf colour sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RgbReading {
    pub red: u32,
    pub green: u32,
    pub blue: u32,
}

impl RgbReading {
    pub const fn new(red: u32, green: u32, blue: u32) -> Self {
        RgbReading { red, green, blue }
    }

    pub fn channel(&self, channel: Channel) -> u32 {
        match channel {
            Channel::Red => self.red,
            Channel::Green => self.green,
            Channel::Blue => self.blue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    Temperature,
    Humidity,
    Color,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorVerdict {
    pub factor: Factor,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthAssessment {
    /// Always ordered temperature, humidity, colour.
    pub verdicts: [FactorVerdict; 3],
    pub score: u8,
    pub healthy: bool,
}

impl HealthAssessment {
    pub fn from_verdicts(temperature: bool, humidity: bool, color: bool) -> Self {
        let verdicts = [
            FactorVerdict {
                factor: Factor::Temperature,
                ok: temperature,
            },
            FactorVerdict {
                factor: Factor::Humidity,
                ok: humidity,
            },
            FactorVerdict {
                factor: Factor::Color,
                ok: color,
            },
        ];
        let ok_count = verdicts.iter().filter(|v| v.ok).count() as u8;
        HealthAssessment {
            verdicts,
            score: SCORE_PER_FACTOR * ok_count,
            healthy: ok_count >= 2,
        }
    }

    pub fn ok_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.ok).count()
    }

    pub fn verdict(&self, factor: Factor) -> FactorVerdict {
        self.verdicts[match factor {
            Factor::Temperature => 0,
            Factor::Humidity => 1,
            Factor::Color => 2,
        }]
    }
}

pub fn check_temperature(t: f64, profile: &ThresholdProfile) -> Result<FactorVerdict, HealthError> {
    if !t.is_finite() {
        return Err(HealthError::NonFiniteTemperature(t));
    }
    Ok(FactorVerdict {
        factor: Factor::Temperature,
        ok: profile.plant_temp_min < t && t < profile.plant_temp_max,
    })
}

pub fn check_humidity(h: f64, profile: &ThresholdProfile) -> Result<FactorVerdict, HealthError> {
    if !(0.0..=100.0).contains(&h) {
        return Err(HealthError::HumidityOutOfRange(h));
    }
    Ok(FactorVerdict {
        factor: Factor::Humidity,
        ok: profile.plant_humidity_min < h && h < profile.plant_humidity_max,
    })
}

/// True when `value` sits strictly inside one of the channel's unhealthy
/// intervals.
pub fn channel_unhealthy(channel: Channel, value: u32, profile: &ThresholdProfile) -> bool {
    profile.unhealthy_color.channel(channel).any_contains(value)
}

pub fn check_color(rgb: RgbReading, profile: &ThresholdProfile) -> FactorVerdict {
    let ok = Channel::ALL
        .iter()
        .all(|&ch| !channel_unhealthy(ch, rgb.channel(ch), profile));
    FactorVerdict {
        factor: Factor::Color,
        ok,
    }
}

pub fn assess_health(
    t: f64,
    h: f64,
    rgb: RgbReading,
    profile: &ThresholdProfile,
) -> Result<HealthAssessment, HealthError> {
    let temperature = check_temperature(t, profile)?;
    let humidity = check_humidity(h, profile)?;
    let color = check_color(rgb, profile);
    Ok(HealthAssessment::from_verdicts(temperature.ok, humidity.ok, color.ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::default_profile;

    #[test]
    fn temperature_range_is_strict() {
        let p = default_profile();
        assert!(check_temperature(25.0, &p).unwrap().ok);
        assert!(!check_temperature(20.0, &p).unwrap().ok);
        assert!(!check_temperature(35.0, &p).unwrap().ok);
        assert!(!check_temperature(40.0, &p).unwrap().ok);
        assert!(check_temperature(f64::NAN, &p).is_err());
        assert!(check_temperature(f64::INFINITY, &p).is_err());
    }

    #[test]
    fn humidity_range_is_strict() {
        let p = default_profile();
        assert!(check_humidity(70.0, &p).unwrap().ok);
        assert!(!check_humidity(60.0, &p).unwrap().ok);
        assert!(!check_humidity(80.0, &p).unwrap().ok);
        assert!(!check_humidity(95.0, &p).unwrap().ok);
        assert_eq!(check_humidity(100.5, &p), Err(HealthError::HumidityOutOfRange(100.5)));
        assert!(check_humidity(-0.1, &p).is_err());
        assert!(check_humidity(f64::NAN, &p).is_err());
    }

    #[test]
    fn color_examples() {
        let p = default_profile();
        assert!(!check_color(RgbReading::new(650, 900, 700), &p).ok);
        assert!(check_color(RgbReading::new(500, 900, 700), &p).ok);
        assert!(check_color(RgbReading::new(645, 900, 700), &p).ok);
    }

    #[test]
    fn overlapping_green_intervals_both_count() {
        let p = default_profile();
        // 1560 is in both [1050,1565] and [1550,2245]; 2000 only in the second.
        assert!(channel_unhealthy(Channel::Green, 1560, &p));
        assert!(channel_unhealthy(Channel::Green, 2000, &p));
        assert!(!channel_unhealthy(Channel::Green, 2245, &p));
    }

    #[test]
    fn score_aggregation() {
        let p = default_profile();
        let good = RgbReading::new(500, 900, 700);
        let bad = RgbReading::new(650, 900, 700);

        let all = assess_health(25.0, 70.0, good, &p).unwrap();
        assert_eq!((all.score, all.healthy), (90, true));

        let one = assess_health(25.0, 95.0, bad, &p).unwrap();
        assert_eq!((one.score, one.healthy), (30, false));

        let none = assess_health(40.0, 95.0, bad, &p).unwrap();
        assert_eq!((none.score, none.healthy), (0, false));
        assert_eq!(none.ok_count(), 0);
    }

    #[test]
    fn assessment_propagates_factor_errors() {
        let p = default_profile();
        assert!(assess_health(f64::NAN, 70.0, RgbReading::default(), &p).is_err());
        assert!(assess_health(25.0, 170.0, RgbReading::default(), &p).is_err());
    }

    #[test]
    fn verdict_lookup_follows_factor_order() {
        let a = HealthAssessment::from_verdicts(true, false, true);
        assert!(a.verdict(Factor::Temperature).ok);
        assert!(!a.verdict(Factor::Humidity).ok);
        assert_eq!(a.verdict(Factor::Color).factor, Factor::Color);
    }
}

//! Simulated clock types.
//!
//! All time in the system is simulated time, counted in milliseconds from
//! midnight of simulation day 0. Wall-clock time only enters through the
//! service's speed multiplier.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MS_PER_SECOND: u64 = 1_000;
pub const MS_PER_MINUTE: u64 = 60 * MS_PER_SECOND;
pub const MS_PER_DAY: u64 = 24 * 60 * MS_PER_MINUTE;

/// A point on the simulated timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(secs: u64) -> Self {
        SimTime(secs * MS_PER_SECOND)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn day(self) -> u64 {
        self.0 / MS_PER_DAY
    }

    /// Milliseconds elapsed since midnight of the current day.
    pub fn millis_of_day(self) -> u64 {
        self.0 % MS_PER_DAY
    }

    /// Fractional hour of day in `[0, 24)`.
    pub fn hour_of_day(self) -> f64 {
        self.millis_of_day() as f64 / (60.0 * MS_PER_MINUTE as f64)
    }

    pub fn saturating_since(self, earlier: SimTime) -> SimDuration {
        SimDuration(self.0.saturating_sub(earlier.0))
    }
}

impl Add<SimDuration> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimDuration) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimDuration;

    fn sub(self, rhs: SimTime) -> SimDuration {
        SimDuration(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.millis_of_day();
        let secs = ms / MS_PER_SECOND;
        write!(
            f,
            "d{} {:02}:{:02}:{:02}.{:03}",
            self.day(),
            secs / 3600,
            (secs / 60) % 60,
            secs % 60,
            ms % MS_PER_SECOND
        )
    }
}

/// A span of simulated time, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimDuration(pub u64);

impl SimDuration {
    pub fn from_secs(secs: u64) -> Self {
        SimDuration(secs * MS_PER_SECOND)
    }

    pub fn from_mins(mins: u64) -> Self {
        SimDuration(mins * MS_PER_MINUTE)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_minutes_f64(self) -> f64 {
        self.0 as f64 / MS_PER_MINUTE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid time of day {0:?}, expected HH:MM between 00:00 and 23:59")]
pub struct TimeOfDayError(pub String);

/// Wall time within a day at minute resolution, written `HH:MM` (24h).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay {
    minutes: u16,
}

impl TimeOfDay {
    pub fn new(hour: u8, minute: u8) -> Option<Self> {
        (hour < 24 && minute < 60).then(|| TimeOfDay {
            minutes: hour as u16 * 60 + minute as u16,
        })
    }

    pub fn hour(self) -> u8 {
        (self.minutes / 60) as u8
    }

    pub fn minute(self) -> u8 {
        (self.minutes % 60) as u8
    }

    pub fn millis_of_day(self) -> u64 {
        self.minutes as u64 * MS_PER_MINUTE
    }

    /// The instant this time of day occurs on simulation day `day`.
    pub fn on_day(self, day: u64) -> SimTime {
        SimTime(day * MS_PER_DAY + self.millis_of_day())
    }
}

impl FromStr for TimeOfDay {
    type Err = TimeOfDayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimeOfDayError(s.to_string());
        let (h, m) = s.split_once(':').ok_or_else(err)?;
        if h.len() != 2 || m.len() != 2 {
            return Err(err());
        }
        let hour: u8 = h.parse().map_err(|_| err())?;
        let minute: u8 = m.parse().map_err(|_| err())?;
        TimeOfDay::new(hour, minute).ok_or_else(err)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour(), self.minute())
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_valid_times() {
        assert_eq!("06:30".parse::<TimeOfDay>().unwrap(), TimeOfDay::new(6, 30).unwrap());
        assert_eq!("00:00".parse::<TimeOfDay>().unwrap().millis_of_day(), 0);
        assert_eq!("23:59".parse::<TimeOfDay>().unwrap().to_string(), "23:59");
    }

    #[test]
    fn rejects_invalid_times() {
        for bad in ["25:00", "24:00", "12:60", "6:30", "0630", "", "ab:cd", "12:5"] {
            assert!(bad.parse::<TimeOfDay>().is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn day_arithmetic() {
        let t = TimeOfDay::new(6, 0).unwrap().on_day(2);
        assert_eq!(t.day(), 2);
        assert_eq!(t.millis_of_day(), 6 * 60 * MS_PER_MINUTE);
        assert!((t.hour_of_day() - 6.0).abs() < 1e-12);
        assert_eq!(t.to_string(), "d2 06:00:00.000");
    }
}

//! Threshold profile: every numeric level the control logic compares against.
//!
//! The default profile carries the levels measured for turmeric grown in loam
//! soil. Other modules only read thresholds through [`ThresholdProfile`].
//!
//! Leaf colour levels are stored as *unhealthy signatures*: four raw-count
//! intervals per channel, built by pairing the i-th low value with the i-th
//! high value. The blue pair `(1698, 1290)` arrives inverted in the source
//! table (most likely a transposition) and is normalized to `[1290, 1698]`.
//! The green intervals `[1050, 1565]` and `[1550, 2245]` overlap; membership
//! in either counts.
//!
//! Raw colour counts are treated as opaque unitless numbers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("failed to parse threshold profile: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid threshold profile field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ProfileError {
    ProfileError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Red, Channel::Green, Channel::Blue];
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Red => "red",
            Channel::Green => "green",
            Channel::Blue => "blue",
        })
    }
}

/// A closed range of raw sensor counts, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorInterval(pub u32, pub u32);

impl ColorInterval {
    /// Builds an interval, swapping endpoints if they arrive inverted.
    pub fn normalized(a: u32, b: u32) -> Self {
        ColorInterval(a.min(b), a.max(b))
    }

    pub fn lo(self) -> u32 {
        self.0
    }

    pub fn hi(self) -> u32 {
        self.1
    }

    /// `lo < value < hi`. Endpoints are outside.
    pub fn contains_strict(self, value: u32) -> bool {
        self.0 < value && value < self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorIntervalSet {
    pub channel: Channel,
    pub intervals: Vec<ColorInterval>,
}

impl ColorIntervalSet {
    /// Pairs `lows[i]` with `highs[i]`, normalizing inverted pairs.
    pub fn from_levels(channel: Channel, lows: &[u32], highs: &[u32]) -> Self {
        assert_eq!(lows.len(), highs.len(), "low/high level lists must pair up");
        ColorIntervalSet {
            channel,
            intervals: lows
                .iter()
                .zip(highs)
                .map(|(&lo, &hi)| ColorInterval::normalized(lo, hi))
                .collect(),
        }
    }

    /// True when `value` lies strictly inside any interval of the set.
    pub fn any_contains(&self, value: u32) -> bool {
        self.intervals.iter().any(|iv| iv.contains_strict(value))
    }

    fn normalize(&mut self) {
        for iv in &mut self.intervals {
            *iv = ColorInterval::normalized(iv.0, iv.1);
        }
    }
}

/// Unhealthy-leaf colour signatures, one interval set per channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnhealthyColor {
    pub red: ColorIntervalSet,
    pub green: ColorIntervalSet,
    pub blue: ColorIntervalSet,
}

impl UnhealthyColor {
    pub fn channel(&self, channel: Channel) -> &ColorIntervalSet {
        match channel {
            Channel::Red => &self.red,
            Channel::Green => &self.green,
            Channel::Blue => &self.blue,
        }
    }
}

/// Moisture and humidity are percent; temperatures are °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default = "default_profile", deny_unknown_fields)]
pub struct ThresholdProfile {
    pub moisture_low: f64,
    pub moisture_mid: f64,
    pub moisture_high: f64,
    pub plant_temp_min: f64,
    pub plant_temp_max: f64,
    pub plant_humidity_min: f64,
    pub plant_humidity_max: f64,
    pub ambient_temp_high: f64,
    pub ambient_humidity_low: f64,
    pub unhealthy_color: UnhealthyColor,
}

impl Default for ThresholdProfile {
    fn default() -> Self {
        default_profile()
    }
}

/// The reference profile for turmeric in loam soil.
pub fn default_profile() -> ThresholdProfile {
    ThresholdProfile {
        moisture_low: 40.0,
        moisture_mid: 70.0,
        moisture_high: 100.0,
        plant_temp_min: 20.0,
        plant_temp_max: 35.0,
        plant_humidity_min: 60.0,
        plant_humidity_max: 80.0,
        ambient_temp_high: 40.0,
        ambient_humidity_low: 30.0,
        unhealthy_color: UnhealthyColor {
            red: ColorIntervalSet::from_levels(Channel::Red, &[5, 645, 820, 1110], &[9, 698, 1095, 1350]),
            green: ColorIntervalSet::from_levels(Channel::Green, &[4, 770, 1050, 1550], &[6, 835, 1565, 2245]),
            blue: ColorIntervalSet::from_levels(Channel::Blue, &[4, 1090, 1698, 2490], &[5, 1207, 1290, 2793]),
        },
    }
}

/// Parses a profile document. Missing fields fall back to the defaults;
/// inverted colour intervals are normalized before validation.
pub fn load_profile(document: &str) -> Result<ThresholdProfile, ProfileError> {
    let mut profile: ThresholdProfile = serde_json::from_str(document)?;
    let colors = &mut profile.unhealthy_color;
    colors.red.normalize();
    colors.green.normalize();
    colors.blue.normalize();
    profile.validate()?;
    Ok(profile)
}

impl ThresholdProfile {
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let scalars: [(&'static str, f64); 9] = [
            ("moisture_low", self.moisture_low),
            ("moisture_mid", self.moisture_mid),
            ("moisture_high", self.moisture_high),
            ("plant_temp_min", self.plant_temp_min),
            ("plant_temp_max", self.plant_temp_max),
            ("plant_humidity_min", self.plant_humidity_min),
            ("plant_humidity_max", self.plant_humidity_max),
            ("ambient_temp_high", self.ambient_temp_high),
            ("ambient_humidity_low", self.ambient_humidity_low),
        ];
        for (field, value) in scalars {
            if !value.is_finite() {
                return Err(invalid(field, "must be a finite number"));
            }
        }

        if self.moisture_low < 0.0 {
            return Err(invalid("moisture_low", "must be at least 0"));
        }
        if self.moisture_low >= self.moisture_mid {
            return Err(invalid("moisture_mid", "must be greater than moisture_low"));
        }
        if self.moisture_mid >= self.moisture_high {
            return Err(invalid("moisture_high", "must be greater than moisture_mid"));
        }
        if self.moisture_high > 100.0 {
            return Err(invalid("moisture_high", "must be at most 100"));
        }
        if self.plant_temp_min >= self.plant_temp_max {
            return Err(invalid("plant_temp_max", "must be greater than plant_temp_min"));
        }
        if self.plant_humidity_min >= self.plant_humidity_max {
            return Err(invalid("plant_humidity_max", "must be greater than plant_humidity_min"));
        }
        if !(0.0..=100.0).contains(&self.ambient_humidity_low) {
            return Err(invalid("ambient_humidity_low", "must be within 0..=100"));
        }

        for (field, channel) in [
            ("unhealthy_color.red", Channel::Red),
            ("unhealthy_color.green", Channel::Green),
            ("unhealthy_color.blue", Channel::Blue),
        ] {
            let set = self.unhealthy_color.channel(channel);
            if set.channel != channel {
                return Err(invalid(
                    field,
                    format!("channel is `{}`, expected `{channel}`", set.channel),
                ));
            }
            if set.intervals.is_empty() {
                return Err(invalid(field, "needs at least one interval"));
            }
            if let Some(iv) = set.intervals.iter().find(|iv| iv.lo() > iv.hi()) {
                return Err(invalid(
                    field,
                    format!("interval [{}, {}] is inverted", iv.lo(), iv.hi()),
                ));
            }
        }
        Ok(())
    }
}

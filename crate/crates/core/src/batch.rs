//! Bulk evaluation: health assessment over many readings and scenario runs
//! over many seeds.
//!
//! With the `parallel` feature (default) the entry points fan out over
//! rayon's global pool; without it they are the `*_sequential` versions.
//! Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::health::{assess_health, check_color, HealthAssessment, HealthError, RgbReading};
use crate::report::RunReport;
use crate::sim::{run, RunError, Scenario};
use crate::thresholds::ThresholdProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HealthSample {
    pub plant_temp: f64,
    pub plant_humidity: f64,
    pub leaf_color: RgbReading,
}

fn assess_one(sample: &HealthSample, profile: &ThresholdProfile) -> Result<HealthAssessment, HealthError> {
    assess_health(sample.plant_temp, sample.plant_humidity, sample.leaf_color, profile)
}

pub fn assess_batch_sequential(
    samples: &[HealthSample],
    profile: &ThresholdProfile,
) -> Vec<Result<HealthAssessment, HealthError>> {
    samples.iter().map(|s| assess_one(s, profile)).collect()
}

pub fn color_ok_batch_sequential(readings: &[RgbReading], profile: &ThresholdProfile) -> Vec<bool> {
    readings.iter().map(|&rgb| check_color(rgb, profile).ok).collect()
}

fn run_seed(scenario: &Scenario, profile: &ThresholdProfile, seed: u64) -> Result<RunReport, RunError> {
    let scenario = Scenario {
        seed,
        ..scenario.clone()
    };
    let trace = run(&scenario, profile)?;
    Ok(RunReport::from_trace(&scenario, &trace))
}

/// Runs the scenario once per seed.
pub fn sweep_seeds_sequential(
    scenario: &Scenario,
    profile: &ThresholdProfile,
    seeds: &[u64],
) -> Vec<Result<RunReport, RunError>> {
    seeds.iter().map(|&seed| run_seed(scenario, profile, seed)).collect()
}

#[cfg(feature = "parallel")]
pub fn assess_batch(
    samples: &[HealthSample],
    profile: &ThresholdProfile,
) -> Vec<Result<HealthAssessment, HealthError>> {
    samples.par_iter().map(|s| assess_one(s, profile)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn assess_batch(
    samples: &[HealthSample],
    profile: &ThresholdProfile,
) -> Vec<Result<HealthAssessment, HealthError>> {
    assess_batch_sequential(samples, profile)
}

#[cfg(feature = "parallel")]
pub fn color_ok_batch(readings: &[RgbReading], profile: &ThresholdProfile) -> Vec<bool> {
    readings.par_iter().map(|&rgb| check_color(rgb, profile).ok).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn color_ok_batch(readings: &[RgbReading], profile: &ThresholdProfile) -> Vec<bool> {
    color_ok_batch_sequential(readings, profile)
}

#[cfg(feature = "parallel")]
pub fn sweep_seeds(scenario: &Scenario, profile: &ThresholdProfile, seeds: &[u64]) -> Vec<Result<RunReport, RunError>> {
    seeds
        .par_iter()
        .map(|&seed| run_seed(scenario, profile, seed))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn sweep_seeds(scenario: &Scenario, profile: &ThresholdProfile, seeds: &[u64]) -> Vec<Result<RunReport, RunError>> {
    sweep_seeds_sequential(scenario, profile, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::default_profile;

    #[test]
    fn parallel_and_sequential_agree() {
        let p = default_profile();
        let samples: Vec<HealthSample> = (0..2000u32)
            .map(|i| HealthSample {
                plant_temp: 15.0 + (i % 25) as f64,
                plant_humidity: (i % 101) as f64,
                leaf_color: RgbReading::new(i % 1400, (i * 7) % 2300, (i * 13) % 2900),
            })
            .collect();
        assert_eq!(assess_batch(&samples, &p), assess_batch_sequential(&samples, &p));

        let colors: Vec<RgbReading> = samples.iter().map(|s| s.leaf_color).collect();
        assert_eq!(color_ok_batch(&colors, &p), color_ok_batch_sequential(&colors, &p));
    }

    #[test]
    fn sweep_keeps_seed_order() {
        let mut scenario = Scenario {
            duration_secs: 60,
            ..Scenario::default()
        };
        scenario.noise.moisture = 1.0;
        let p = default_profile();
        let seeds = [5, 1, 9, 3];
        let par: Vec<_> = sweep_seeds(&scenario, &p, &seeds)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        let seq: Vec<_> = sweep_seeds_sequential(&scenario, &p, &seeds)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assert_eq!(par, seq);
        assert_eq!(par.iter().map(|r| r.seed).collect::<Vec<_>>(), seeds);
    }
}

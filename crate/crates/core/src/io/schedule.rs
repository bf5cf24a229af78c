//! JSON draw-off schedules.
//!
//! A schedule file holds the daily volume, the 24 hourly fractions, and the
//! mains water temperature. All fields are optional; `{}` is the default
//! two-peak residential pattern.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::ConsumptionSchedule;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScheduleFile {
    daily_volume_l: f64,
    hourly_fractions: Vec<f64>,
    net_water_temp_c: f64,
}

impl Default for ScheduleFile {
    fn default() -> Self {
        let s = ConsumptionSchedule::default();
        ScheduleFile {
            daily_volume_l: s.daily_volume_l,
            hourly_fractions: s.hourly_fractions.to_vec(),
            net_water_temp_c: s.net_water_temp_c,
        }
    }
}

/// Parses a schedule from JSON text and validates it.
pub fn parse_schedule(json: &str) -> Result<ConsumptionSchedule> {
    let file: ScheduleFile = serde_json::from_str(json)
        .map_err(|e| Error::validation(format!("schedule parse error: {e}")))?;
    let fractions: [f64; 24] = file.hourly_fractions.clone().try_into().map_err(
        |v: Vec<f64>| {
            Error::validation(format!(
                "hourly_fractions must have exactly 24 entries, got {}",
                v.len()
            ))
        },
    )?;
    let schedule = ConsumptionSchedule {
        daily_volume_l: file.daily_volume_l,
        hourly_fractions: fractions,
        net_water_temp_c: file.net_water_temp_c,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Loads a schedule from a JSON file.
pub fn load_schedule(path: &Path) -> Result<ConsumptionSchedule> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading schedule file {}", path.display()), e))?;
    parse_schedule(&text).map_err(|e| match e {
        Error::Validation { violations } => Error::validations(
            violations
                .into_iter()
                .map(|v| format!("schedule file {}: {v}", path.display()))
                .collect(),
        ),
        other => other,
    })
}

/// The default schedule as pretty JSON.
pub fn default_schedule_json() -> String {
    serde_json::to_string_pretty(&ScheduleFile::default()).expect("default schedule serializes")
}

//! Weather input: validated irradiance/ambient series with zero-order-hold
//! sampling, plus a synthetic clear-sky generator for tests and demos.
//!
//! The simulation samples weather at the start of each step and holds the
//! value across the step (zero-order hold). That choice is exact for data
//! loggers that report instantaneous readings at fixed cadence and keeps
//! every step's energy terms consistent with a single irradiance value.

use crate::error::{Error, Result};

/// One weather sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRecord {
    /// Sample time, seconds from the start of the simulation horizon.
    pub timestamp_s: f64,
    /// Global irradiance in the collector plane, W/m².
    pub q_s_w_per_m2: f64,
    /// Ambient air temperature, °C.
    pub t_ambient_c: f64,
}

/// A validated, time-ordered weather series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    records: Vec<WeatherRecord>,
}

impl WeatherSeries {
    /// Builds a series, collecting every violation: the series must be
    /// non-empty, strictly increasing in time, finite, and non-negative in
    /// irradiance.
    pub fn new(records: Vec<WeatherRecord>) -> Result<Self> {
        let mut violations = Vec::new();
        if records.is_empty() {
            violations.push("weather series contains no records".to_string());
        }
        for (i, r) in records.iter().enumerate() {
            if !r.timestamp_s.is_finite() || !r.q_s_w_per_m2.is_finite() || !r.t_ambient_c.is_finite()
            {
                violations.push(format!("record {i}: non-finite value"));
            }
            if r.q_s_w_per_m2 < 0.0 {
                violations.push(format!(
                    "record {i}: irradiance {} W/m² must be non-negative",
                    r.q_s_w_per_m2
                ));
            }
        }
        for (i, pair) in records.windows(2).enumerate() {
            if !(pair[1].timestamp_s > pair[0].timestamp_s) {
                violations.push(format!(
                    "record {}: timestamp {} s does not increase over previous {} s",
                    i + 1,
                    pair[1].timestamp_s,
                    pair[0].timestamp_s
                ));
            }
        }
        if violations.is_empty() {
            Ok(WeatherSeries { records })
        } else {
            Err(Error::validations(violations))
        }
    }

    /// The underlying records, in time order.
    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    /// Zero-order-hold sample: the most recent record at or before `time_s`.
    /// Before the first record the first record is held.
    pub fn sample(&self, time_s: f64) -> WeatherRecord {
        let after = self
            .records
            .partition_point(|r| r.timestamp_s <= time_s);
        self.records[after.saturating_sub(1)]
    }

    /// Largest spacing between consecutive records, s (0 for a single
    /// record). A gap wider than the simulation step means some steps reuse
    /// a held sample.
    pub fn max_gap_s(&self) -> f64 {
        self.records
            .windows(2)
            .map(|pair| pair[1].timestamp_s - pair[0].timestamp_s)
            .fold(0.0, f64::max)
    }

    /// Verifies that the series covers every sample instant in
    /// `[start_s, last_sample_s]`.
    pub fn check_coverage(&self, start_s: f64, last_sample_s: f64) -> Result<()> {
        let mut violations = Vec::new();
        let first = self.records.first().expect("validated non-empty");
        let last = self.records.last().expect("validated non-empty");
        if first.timestamp_s > start_s {
            violations.push(format!(
                "weather starts at {} s but the simulation samples from {} s",
                first.timestamp_s, start_s
            ));
        }
        if last.timestamp_s < last_sample_s {
            violations.push(format!(
                "weather ends at {} s but the simulation samples until {} s",
                last.timestamp_s, last_sample_s
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Synthesizes an idealized clear-sky series: a half-sine irradiance arc
    /// between 06:00 and 18:00 peaking at `peak_w_per_m2`, and an ambient
    /// temperature swinging from 20 °C up to 28 °C between 08:00 and 20:00.
    /// Samples every `dt_s` seconds for `days` days (inclusive of the final
    /// instant, so the series always covers the horizon).
    pub fn clear_sky(days: u32, dt_s: f64, peak_w_per_m2: f64) -> Self {
        assert!(dt_s > 0.0 && peak_w_per_m2 >= 0.0);
        let horizon_s = f64::from(days) * 86_400.0;
        let steps = (horizon_s / dt_s).ceil() as u64;
        let records = (0..=steps)
            .map(|k| {
                let t = k as f64 * dt_s;
                let hour = (t % 86_400.0) / 3_600.0;
                WeatherRecord {
                    timestamp_s: t,
                    q_s_w_per_m2: clear_sky_irradiance(hour, peak_w_per_m2),
                    t_ambient_c: clear_sky_ambient(hour),
                }
            })
            .collect();
        WeatherSeries { records }
    }
}

fn clear_sky_irradiance(hour: f64, peak: f64) -> f64 {
    if (6.0..=18.0).contains(&hour) {
        (peak * (std::f64::consts::PI * (hour - 6.0) / 12.0).sin()).max(0.0)
    } else {
        0.0
    }
}

fn clear_sky_ambient(hour: f64) -> f64 {
    if (8.0..=20.0).contains(&hour) {
        20.0 + 8.0 * (std::f64::consts::PI * (hour - 8.0) / 12.0).sin()
    } else {
        20.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn record(t: f64, q: f64, a: f64) -> WeatherRecord {
        WeatherRecord {
            timestamp_s: t,
            q_s_w_per_m2: q,
            t_ambient_c: a,
        }
    }

    #[test]
    fn empty_series_is_rejected() {
        let err = WeatherSeries::new(vec![]).unwrap_err();
        assert!(err.to_string().contains("no records"));
    }

    #[test]
    fn all_violations_are_collected() {
        let err = WeatherSeries::new(vec![
            record(0.0, -5.0, 20.0),
            record(0.0, 100.0, f64::NAN),
        ])
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("3 validation errors"), "{text}");
        assert!(text.contains("non-negative"));
        assert!(text.contains("does not increase"));
        assert!(text.contains("non-finite"));
    }

    #[test]
    fn sampling_holds_the_previous_record() {
        let series = WeatherSeries::new(vec![
            record(0.0, 0.0, 10.0),
            record(600.0, 100.0, 11.0),
            record(1200.0, 200.0, 12.0),
        ])
        .unwrap();
        assert_eq!(series.sample(0.0).q_s_w_per_m2, 0.0);
        assert_eq!(series.sample(599.9).q_s_w_per_m2, 0.0);
        assert_eq!(series.sample(600.0).q_s_w_per_m2, 100.0);
        assert_eq!(series.sample(900.0).t_ambient_c, 11.0);
        assert_eq!(series.sample(5000.0).q_s_w_per_m2, 200.0);
        // Before the first record the first record is held.
        assert_eq!(series.sample(-1.0).t_ambient_c, 10.0);
    }

    #[test]
    fn max_gap_finds_the_widest_spacing() {
        let series = WeatherSeries::new(vec![
            record(0.0, 0.0, 20.0),
            record(600.0, 0.0, 20.0),
            record(4200.0, 0.0, 20.0),
        ])
        .unwrap();
        assert_eq!(series.max_gap_s(), 3600.0);
        let single = WeatherSeries::new(vec![record(0.0, 0.0, 20.0)]).unwrap();
        assert_eq!(single.max_gap_s(), 0.0);
    }

    #[test]
    fn coverage_check_reports_both_ends() {
        let series = WeatherSeries::new(vec![record(600.0, 0.0, 20.0), record(1200.0, 0.0, 20.0)])
            .unwrap();
        let err = series.check_coverage(0.0, 2400.0).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("starts at 600"));
        assert!(text.contains("ends at 1200"));
        assert!(series.check_coverage(600.0, 1200.0).is_ok());
    }

    #[test]
    fn clear_sky_has_the_expected_shape() {
        let series = WeatherSeries::clear_sky(1, 600.0, 900.0);
        assert!(series.check_coverage(0.0, 86_400.0).is_ok());
        // Midnight and early morning: dark, 20 °C.
        let midnight = series.sample(0.0);
        assert_eq!(midnight.q_s_w_per_m2, 0.0);
        assert_eq!(midnight.t_ambient_c, 20.0);
        // Noon: peak irradiance.
        let noon = series.sample(12.0 * 3600.0);
        assert_abs_diff_eq!(noon.q_s_w_per_m2, 900.0, epsilon = 1e-9);
        // 14:00: ambient peak 28 °C.
        let afternoon = series.sample(14.0 * 3600.0);
        assert_abs_diff_eq!(afternoon.t_ambient_c, 28.0, epsilon = 1e-9);
        // 19:00: sun down, air still warm.
        let evening = series.sample(19.0 * 3600.0);
        assert_eq!(evening.q_s_w_per_m2, 0.0);
        assert!(evening.t_ambient_c > 20.0);
        // Irradiance never negative across the whole day.
        assert!(series.records().iter().all(|r| r.q_s_w_per_m2 >= 0.0));
    }

    #[test]
    fn clear_sky_repeats_daily() {
        let series = WeatherSeries::clear_sky(3, 600.0, 800.0);
        let day0 = series.sample(10.0 * 3600.0);
        let day2 = series.sample(2.0 * 86_400.0 + 10.0 * 3600.0);
        assert_abs_diff_eq!(day0.q_s_w_per_m2, day2.q_s_w_per_m2, epsilon = 1e-9);
        assert_abs_diff_eq!(day0.t_ambient_c, day2.t_ambient_c, epsilon = 1e-9);
    }
}

//! Weather CSV: `t_seconds,q_s_w_per_m2,t_ambient_c`, one sample per row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{WeatherRecord, WeatherSeries};

const EXPECTED_HEADER: [&str; 3] = ["t_seconds", "q_s_w_per_m2", "t_ambient_c"];

#[derive(Debug, Serialize, Deserialize)]
struct WeatherRow {
    t_seconds: f64,
    q_s_w_per_m2: f64,
    t_ambient_c: f64,
}

/// Reads and validates a weather series from a CSV file.
///
/// The header must be exactly `t_seconds,q_s_w_per_m2,t_ambient_c`. Every
/// malformed row is reported with its line number, alongside any series-level
/// violations (ordering, negative irradiance), in a single validation error.
pub fn read_weather_csv(path: &Path) -> Result<WeatherSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("opening weather file {}", path.display()), io),
        other => Error::validation(format!(
            "reading weather file {}: {other:?}",
            path.display()
        )),
    })?;

    let mut violations = Vec::new();
    match reader.headers() {
        Ok(headers) => {
            let got: Vec<&str> = headers.iter().collect();
            if got != EXPECTED_HEADER {
                violations.push(format!(
                    "weather header must be exactly {:?}, got {:?}",
                    EXPECTED_HEADER.join(","),
                    got.join(",")
                ));
            }
        }
        Err(e) => violations.push(format!("weather header unreadable: {e}")),
    }

    let mut records = Vec::new();
    for row in reader.deserialize::<WeatherRow>() {
        match row {
            Ok(r) => records.push(WeatherRecord {
                timestamp_s: r.t_seconds,
                q_s_w_per_m2: r.q_s_w_per_m2,
                t_ambient_c: r.t_ambient_c,
            }),
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line().to_string())
                    .unwrap_or_else(|| "?".to_string());
                violations.push(format!("weather line {line}: {}", describe_csv_error(&e)));
            }
        }
    }

    if !violations.is_empty() {
        return Err(Error::validations(violations));
    }
    WeatherSeries::new(records).map_err(|e| match e {
        Error::Validation { violations } => Error::validations(
            violations
                .into_iter()
                .map(|v| format!("weather file {}: {v}", path.display()))
                .collect(),
        ),
        other => other,
    })
}

fn describe_csv_error(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, got {len}")
        }
        other => format!("{other:?}"),
    }
}

/// Writes a weather series as CSV with full round-trip precision.
pub fn write_weather_csv(path: &Path, series: &WeatherSeries) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("creating weather file {}", path.display()), io),
        other => Error::validation(format!(
            "creating weather file {}: {other:?}",
            path.display()
        )),
    })?;
    for r in series.records() {
        writer
            .serialize(WeatherRow {
                t_seconds: r.timestamp_s,
                q_s_w_per_m2: r.q_s_w_per_m2,
                t_ambient_c: r.t_ambient_c,
            })
            .map_err(|e| Error::validation(format!("serializing weather row: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(format!("writing weather file {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn valid_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let original = WeatherSeries::clear_sky(1, 600.0, 850.0);
        let path = dir.path().join("weather.csv");
        write_weather_csv(&path, &original).unwrap();
        let read_back = read_weather_csv(&path).unwrap();
        assert_eq!(read_back, original);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "w.csv", "time,solar,ambient\n0,0,20\n");
        let err = read_weather_csv(&path).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
    }

    #[test]
    fn malformed_rows_are_reported_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "w.csv",
            "t_seconds,q_s_w_per_m2,t_ambient_c\n0,0,20\nabc,100,21\n1200,oops,22\n",
        );
        let err = read_weather_csv(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("line 3"), "{text}");
        assert!(text.contains("line 4"), "{text}");
    }

    #[test]
    fn empty_file_reports_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "w.csv", "t_seconds,q_s_w_per_m2,t_ambient_c\n");
        let err = read_weather_csv(&path).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn series_violations_carry_the_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "w.csv",
            "t_seconds,q_s_w_per_m2,t_ambient_c\n600,-5,20\n0,0,20\n",
        );
        let err = read_weather_csv(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("w.csv"), "{text}");
        assert!(text.contains("non-negative"), "{text}");
        assert!(text.contains("does not increase"), "{text}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_weather_csv(Path::new("/nonexistent/weather.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }
}

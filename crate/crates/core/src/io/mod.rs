//! File formats: weather CSV input, JSON configuration and draw schedules,
//! and deterministic result artifacts (step CSV, summary JSON, SVG plots).

pub mod config;
mod plot;
pub mod results;
pub mod schedule;
pub mod weather;

pub use config::{default_config_json, load_config, parse_config, write_default_config};
pub use results::{read_steps_csv, write_results, ResultPaths};
pub use schedule::{load_schedule, parse_schedule};
pub use weather::{read_weather_csv, write_weather_csv};

//! Result artifacts: step-by-step CSV, summary JSON, optional SVG plots.
//!
//! Artifacts are deterministic: fixed column sets, fixed numeric precision,
//! fixed key order. Two runs of the same configuration over the same weather
//! produce byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{EnergyAudit, RunOutput, SimulationConfig, StepReport};
use crate::error::{Error, Result};
use crate::io::plot;

/// Scalar columns of `steps.csv`, before the per-sector temperature groups.
const SCALAR_HEADERS: [&str; 19] = [
    "timestamp_s",
    "q_s_w_per_m2",
    "t_ambient_c",
    "pump_on",
    "draw_volume_m3",
    "draw_temp_c",
    "q_solar_useful_w",
    "q_drawn_w",
    "q_lost_w",
    "pipe_loss_w",
    "heat_to_tank_w",
    "collector_in_c",
    "collector_out_c",
    "serpentine_out_c",
    "outer_iterations",
    "max_inner_iterations",
    "convection_sweeps",
    "energy_residual_j",
    "relative_residual",
];

/// Temperature snapshot groups, in pipeline order.
const STAGE_PREFIXES: [&str; 5] = [
    "after_discharge",
    "after_charge",
    "after_conduction",
    "after_losses",
    "end",
];

/// Where [`write_results`] put the artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPaths {
    /// Step-by-step CSV.
    pub steps_csv: PathBuf,
    /// Daily summary and audit JSON.
    pub summary_json: PathBuf,
    /// Temperature plot, when requested.
    pub plot_svg: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DaySummary {
    day_index: u32,
    delivered_energy_j: f64,
    drawn_volume_l: f64,
    collector_efficiency: f64,
    stratification_index_k: f64,
    mean_temp_c: f64,
    max_temp_c: f64,
}

#[derive(Debug, Serialize)]
struct Totals {
    delivered_energy_j: f64,
    solar_useful_j: f64,
    lost_j: f64,
    pipe_loss_j: f64,
    mean_collector_efficiency: f64,
}

#[derive(Debug, Serialize)]
struct AuditSection {
    initial_energy_j: f64,
    final_energy_j: f64,
    solar_useful_j: f64,
    drawn_j: f64,
    lost_j: f64,
    pipe_loss_j: f64,
    residual_j: f64,
    relative_residual: f64,
    max_step_relative_residual: f64,
}

#[derive(Debug, Serialize)]
struct SummaryFile {
    days: Vec<DaySummary>,
    totals: Totals,
    audit: AuditSection,
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn optional(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

fn scientific(x: f64) -> String {
    format!("{x:.6e}")
}

fn csv_row(report: &StepReport) -> Vec<String> {
    let mut row = vec![
        format!("{:.1}", report.timestamp_s),
        fixed(report.q_s_w_per_m2),
        fixed(report.t_ambient_c),
        if report.pump_on { "1" } else { "0" }.to_string(),
        format!("{:.9}", report.draw_volume_m3),
        optional(report.draw_temp_c),
        fixed(report.q_solar_useful_w),
        fixed(report.q_drawn_w),
        fixed(report.q_lost_w),
        fixed(report.pipe_loss_w),
        fixed(report.heat_to_tank_w),
        optional(report.collector_in_c),
        optional(report.collector_out_c),
        optional(report.serpentine_out_c),
        report.outer_iterations.to_string(),
        report.max_inner_iterations.to_string(),
        report.convection_sweeps.to_string(),
        scientific(report.energy_residual_j),
        scientific(report.relative_residual),
    ];
    for temps in [
        &report.temps_after_discharge,
        &report.temps_after_charge,
        &report.temps_after_conduction,
        &report.temps_after_losses,
        &report.temps_end,
    ] {
        row.extend(temps.iter().map(|&t| fixed(t)));
    }
    row
}

fn write_steps_csv(path: &Path, reports: &[StepReport], sector_count: usize) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("creating {}", path.display()), io),
        other => Error::validation(format!("creating {}: {other:?}", path.display())),
    })?;
    let mut headers: Vec<String> = SCALAR_HEADERS.iter().map(|s| s.to_string()).collect();
    for prefix in STAGE_PREFIXES {
        headers.extend((0..sector_count).map(|i| format!("{prefix}_{i}")));
    }
    writer
        .write_record(&headers)
        .map_err(|e| Error::validation(format!("writing CSV header: {e}")))?;
    for report in reports {
        writer
            .write_record(csv_row(report))
            .map_err(|e| Error::validation(format!("writing CSV row: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn day_summaries(reports: &[StepReport], config: &SimulationConfig) -> Vec<DaySummary> {
    let dt = config.dt_s;
    let area = config.collector.area_m2;
    let mut days: Vec<DaySummary> = Vec::new();
    let mut current: Option<(u32, Vec<&StepReport>)> = None;
    let flush = |day: u32, steps: &[&StepReport], days: &mut Vec<DaySummary>| {
        let mut delivered = 0.0;
        let mut volume_l = 0.0;
        let mut useful = 0.0;
        let mut incident = 0.0;
        let mut delta_sum = 0.0;
        let mut mean_sum = 0.0;
        let mut max_temp = f64::NEG_INFINITY;
        for r in steps {
            delivered += r.q_drawn_w * dt;
            volume_l += r.draw_volume_m3 * 1000.0;
            if r.q_s_w_per_m2 > 0.0 {
                useful += r.q_solar_useful_w * dt;
                incident += area * r.q_s_w_per_m2 * dt;
            }
            let temps = &r.temps_end;
            delta_sum += temps[temps.len() - 1] - temps[0];
            mean_sum += temps.iter().sum::<f64>() / temps.len() as f64;
            max_temp = max_temp.max(temps.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        let n = steps.len() as f64;
        days.push(DaySummary {
            day_index: day,
            delivered_energy_j: delivered,
            drawn_volume_l: volume_l,
            collector_efficiency: if incident > 0.0 { useful / incident } else { 0.0 },
            stratification_index_k: delta_sum / n,
            mean_temp_c: mean_sum / n,
            max_temp_c: max_temp,
        });
    };
    for report in reports {
        let day = (report.timestamp_s / 86_400.0).floor() as u32;
        match &mut current {
            Some((d, steps)) if *d == day => steps.push(report),
            Some((d, steps)) => {
                flush(*d, steps, &mut days);
                current = Some((day, vec![report]));
            }
            None => current = Some((day, vec![report])),
        }
    }
    if let Some((d, steps)) = &current {
        flush(*d, steps, &mut days);
    }
    days
}

fn summary_file(output: &RunOutput, config: &SimulationConfig) -> SummaryFile {
    let days = day_summaries(&output.reports, config);
    let dt = config.dt_s;
    let area = config.collector.area_m2;
    let mut delivered = 0.0;
    let mut useful = 0.0;
    let mut incident = 0.0;
    let mut lost = 0.0;
    let mut pipe = 0.0;
    for r in &output.reports {
        delivered += r.q_drawn_w * dt;
        lost += r.q_lost_w * dt;
        pipe += r.pipe_loss_w * dt;
        if r.q_s_w_per_m2 > 0.0 {
            useful += r.q_solar_useful_w * dt;
            incident += area * r.q_s_w_per_m2 * dt;
        }
    }
    let a: &EnergyAudit = &output.audit;
    SummaryFile {
        days,
        totals: Totals {
            delivered_energy_j: delivered,
            solar_useful_j: useful,
            lost_j: lost,
            pipe_loss_j: pipe,
            mean_collector_efficiency: if incident > 0.0 { useful / incident } else { 0.0 },
        },
        audit: AuditSection {
            initial_energy_j: a.initial_energy_j,
            final_energy_j: a.final_energy_j,
            solar_useful_j: a.solar_useful_j,
            drawn_j: a.drawn_j,
            lost_j: a.lost_j,
            pipe_loss_j: a.pipe_loss_j,
            residual_j: a.residual_j,
            relative_residual: a.relative_residual,
            max_step_relative_residual: a.max_step_relative_residual,
        },
    }
}

/// Writes `steps.csv`, `summary.json`, and (optionally) `temperatures.svg`
/// into `out_dir`, creating the directory if needed.
pub fn write_results(
    output: &RunOutput,
    config: &SimulationConfig,
    out_dir: &Path,
    with_plots: bool,
) -> Result<ResultPaths> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating output directory {}", out_dir.display()), e))?;
    let steps_csv = out_dir.join("steps.csv");
    write_steps_csv(&steps_csv, &output.reports, config.geometry.sector_count)?;

    let summary_json = out_dir.join("summary.json");
    let summary = summary_file(output, config);
    let json =
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    std::fs::write(&summary_json, json)
        .map_err(|e| Error::io(format!("writing {}", summary_json.display()), e))?;

    let plot_svg = if with_plots {
        let path = out_dir.join("temperatures.svg");
        let svg = plot::temperature_svg(&output.reports, config.geometry.sector_count);
        std::fs::write(&path, svg)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Some(path)
    } else {
        None
    };

    Ok(ResultPaths {
        steps_csv,
        summary_json,
        plot_svg,
    })
}

/// Reads a `steps.csv` back as raw strings: `(headers, rows)`.
pub fn read_steps_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("opening {}", path.display()), io),
        other => Error::validation(format!("opening {}: {other:?}", path.display())),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::validation(format!("reading CSV header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::validation(format!("reading CSV row: {e}")))?;
        rows.push(record.iter().map(|s| s.to_string()).collect());
    }
    Ok((headers, rows))
}

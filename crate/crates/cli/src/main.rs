//! `solartank` — simulate a solar hot-water system with a stratified
//! storage tank charged through immersed serpentine coils.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use solartank::correlations::CorrelationChoice;
use solartank::engine::{run, SimulationConfig};
use solartank::error::Error;
use solartank::io::{self, results};
use solartank::properties::PropertyModel;
use solartank::serpentine::Placement;
use solartank::sweep::{run_sweep, SweepAxes, VariantSummary};
use solartank::weather::WeatherSeries;

/// Exit code for validation failures (bad config, weather, or arguments).
const EXIT_VALIDATION: u8 = 1;
/// Exit code for solver convergence failures.
const EXIT_CONVERGENCE: u8 = 2;
/// Exit code for file-system failures.
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "solartank",
    version,
    about = "Solar hot-water storage simulation: stratified tank, serpentine coils, flat-plate collector"
)]
struct Cli {
    /// Use constant water density and specific heat for capacity terms
    /// (overrides the config's property model).
    #[arg(long, global = true)]
    constant_properties: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write result artifacts.
    Simulate {
        /// Configuration JSON ({} for the nominal rig).
        #[arg(long)]
        config: PathBuf,
        /// Weather CSV: t_seconds,q_s_w_per_m2,t_ambient_c.
        #[arg(long)]
        weather: PathBuf,
        /// Draw-off schedule JSON (defaults to 250 l/day, two peaks).
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Output directory for steps.csv / summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Also write temperatures.svg.
        #[arg(long)]
        plots: bool,
    },
    /// Run a parameter sweep and print one summary row per variant.
    Sweep {
        /// Configuration JSON used as the base for every variant.
        #[arg(long)]
        config: PathBuf,
        /// Weather CSV shared by every variant.
        #[arg(long)]
        weather: PathBuf,
        /// Draw-off schedule JSON.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Sweep axis, e.g. placement=bottom,top or flow=0.015,0.02 or
        /// correlation=laminar_turbulent,intensive_mixing. Repeatable.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// Optional CSV file for the summary rows.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a configuration and run a short self-check.
    Check {
        /// Configuration JSON to check.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Validation { .. } => EXIT_VALIDATION,
                Error::Convergence { .. } => EXIT_CONVERGENCE,
                Error::Io { .. } => EXIT_IO,
            })
        }
    }
}

fn dispatch(cli: Cli) -> solartank::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            weather,
            schedule,
            out,
            plots,
        } => simulate(
            &config,
            &weather,
            schedule.as_deref(),
            &out,
            plots,
            cli.constant_properties,
        ),
        Command::Sweep {
            config,
            weather,
            schedule,
            axes,
            out,
        } => sweep(
            &config,
            &weather,
            schedule.as_deref(),
            &axes,
            out.as_deref(),
            cli.constant_properties,
        ),
        Command::Check { config } => check(&config, cli.constant_properties),
    }
}

fn load_inputs(
    config_path: &std::path::Path,
    schedule_path: Option<&std::path::Path>,
    constant_properties: bool,
) -> solartank::Result<SimulationConfig> {
    let mut config = io::load_config(config_path)?;
    if let Some(path) = schedule_path {
        config.schedule = io::load_schedule(path)?;
    }
    if constant_properties {
        config.property_model = PropertyModel::ConstantDensityHeat;
    }
    Ok(config)
}

fn simulate(
    config_path: &std::path::Path,
    weather_path: &std::path::Path,
    schedule_path: Option<&std::path::Path>,
    out_dir: &std::path::Path,
    plots: bool,
    constant_properties: bool,
) -> solartank::Result<()> {
    let config = load_inputs(config_path, schedule_path, constant_properties)?;
    let weather = io::read_weather_csv(weather_path)?;
    let started = Instant::now();
    let output = run(&config, &weather)?;
    let elapsed = started.elapsed();
    let paths = results::write_results(&output, &config, out_dir, plots)?;
    println!(
        "simulated {} reported steps in {:.2} s",
        output.reports.len(),
        elapsed.as_secs_f64()
    );
    println!(
        "energy ledger: relative residual {:.3e} (worst step {:.3e})",
        output.audit.relative_residual, output.audit.max_step_relative_residual
    );
    println!("wrote {}", paths.steps_csv.display());
    println!("wrote {}", paths.summary_json.display());
    if let Some(svg) = paths.plot_svg {
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn parse_axes(entries: &[String]) -> solartank::Result<SweepAxes> {
    let mut axes = SweepAxes::default();
    let mut violations = Vec::new();
    for entry in entries {
        let Some((name, values)) = entry.split_once('=') else {
            violations.push(format!(
                "axis {entry:?} must look like name=value[,value...]"
            ));
            continue;
        };
        match name {
            "placement" => {
                if axes.placements.is_some() {
                    violations.push("placement axis given twice".to_string());
                    continue;
                }
                let mut parsed = Vec::new();
                for v in values.split(',').filter(|v| !v.is_empty()) {
                    match v.parse::<Placement>() {
                        Ok(p) => parsed.push(p),
                        Err(e) => violations.push(e.to_string()),
                    }
                }
                axes.placements = Some(parsed);
            }
            "flow" => {
                if axes.flow_rates.is_some() {
                    violations.push("flow axis given twice".to_string());
                    continue;
                }
                let mut parsed = Vec::new();
                for v in values.split(',').filter(|v| !v.is_empty()) {
                    match v.parse::<f64>() {
                        Ok(f) => parsed.push(f),
                        Err(_) => violations.push(format!("flow value {v:?} is not a number")),
                    }
                }
                axes.flow_rates = Some(parsed);
            }
            "correlation" => {
                if axes.correlations.is_some() {
                    violations.push("correlation axis given twice".to_string());
                    continue;
                }
                let mut parsed = Vec::new();
                for v in values.split(',').filter(|v| !v.is_empty()) {
                    match CorrelationChoice::ALL.iter().find(|c| c.name() == v) {
                        Some(&c) => parsed.push(c),
                        None => violations.push(format!(
                            "unknown correlation {v:?}: expected vertical_cylinder, \
                             laminar_turbulent, or intensive_mixing"
                        )),
                    }
                }
                axes.correlations = Some(parsed);
            }
            other => violations.push(format!(
                "unknown axis {other:?}: expected placement, flow, or correlation"
            )),
        }
    }
    if violations.is_empty() {
        Ok(axes)
    } else {
        Err(Error::validations(violations))
    }
}

fn sweep(
    config_path: &std::path::Path,
    weather_path: &std::path::Path,
    schedule_path: Option<&std::path::Path>,
    axis_entries: &[String],
    out_path: Option<&std::path::Path>,
    constant_properties: bool,
) -> solartank::Result<()> {
    let config = load_inputs(config_path, schedule_path, constant_properties)?;
    let weather = io::read_weather_csv(weather_path)?;
    let axes = parse_axes(axis_entries)?;
    let rows = run_sweep(&config, &axes, &weather)?;
    print_sweep_table(&rows);
    if let Some(path) = out_path {
        write_sweep_csv(path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_sweep_table(rows: &[VariantSummary]) {
    let width = rows
        .iter()
        .map(|r| r.variant.key().len())
        .chain(std::iter::once("variant".len()))
        .max()
        .unwrap_or(0);
    println!(
        "{:<width$} {:>14} {:>12} {:>10} {:>10}",
        "variant", "delivered_MJ", "efficiency", "strat_K", "mean_C"
    );
    for row in rows {
        match &row.outcome {
            Ok(m) => println!(
                "{:<width$} {:>14.3} {:>12.4} {:>10.3} {:>10.2}",
                row.variant.key(),
                m.delivered_energy_j / 1e6,
                m.mean_collector_efficiency,
                m.stratification_index_k,
                m.final_mean_temp_c
            ),
            Err(message) => println!("{:<width$} FAILED: {message}", row.variant.key()),
        }
    }
}

fn write_sweep_csv(path: &std::path::Path, rows: &[VariantSummary]) -> solartank::Result<()> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record([
            "placement",
            "flow_rate_kg_s",
            "correlation",
            "status",
            "delivered_energy_j",
            "mean_collector_efficiency",
            "stratification_index_k",
            "final_mean_temp_c",
            "message",
        ])
        .map_err(|e| Error::validation(format!("writing sweep CSV: {e}")))?;
    for row in rows {
        let v = &row.variant;
        let record = match &row.outcome {
            Ok(m) => vec![
                v.placement.to_string(),
                format!("{}", v.flow_rate_kg_s),
                v.correlation.to_string(),
                "ok".to_string(),
                format!("{:.6}", m.delivered_energy_j),
                format!("{:.6}", m.mean_collector_efficiency),
                format!("{:.6}", m.stratification_index_k),
                format!("{:.6}", m.final_mean_temp_c),
                String::new(),
            ],
            Err(message) => vec![
                v.placement.to_string(),
                format!("{}", v.flow_rate_kg_s),
                v.correlation.to_string(),
                "failed".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                message.clone(),
            ],
        };
        writer
            .write_record(&record)
            .map_err(|e| Error::validation(format!("writing sweep CSV: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn csv_writer(path: &std::path::Path) -> solartank::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("creating {}", path.display()), io),
        other => Error::validation(format!("creating {}: {other:?}", path.display())),
    })
}

fn check(config_path: &std::path::Path, constant_properties: bool) -> solartank::Result<()> {
    let config = load_inputs(config_path, None, constant_properties)?;
    println!("configuration: valid");

    // Self-check on two synthetic clear-sky days: one cold-start warm-up day
    // plus one reported day, with the configured draws.
    let mut probe = config.clone();
    probe.warmup_days = 1;
    probe.reported_days = 1;
    let weather = WeatherSeries::clear_sky(2, probe.dt_s, 800.0);

    // Energy-ledger thresholds are only meaningful under constant capacity,
    // where the splitting is exactly conservative; run that first.
    let mut audit_probe = probe.clone();
    audit_probe.property_model = PropertyModel::ConstantDensityHeat;
    let started = Instant::now();
    let audit_run = run(&audit_probe, &weather)?;
    let audit = audit_run.audit;
    println!(
        "constant-capacity ledger: relative residual {:.3e} (limit 1e-5), worst step {:.3e} (limit 1e-6)",
        audit.relative_residual, audit.max_step_relative_residual
    );
    let ledger_ok =
        audit.relative_residual <= 1e-5 && audit.max_step_relative_residual <= 1e-6;

    // Then the configured model, for iteration counts and telemetry.
    let output = run(&probe, &weather)?;
    let elapsed = started.elapsed();
    let worst_outer = output.reports.iter().map(|r| r.outer_iterations).max().unwrap_or(0);
    let worst_inner = output
        .reports
        .iter()
        .map(|r| r.max_inner_iterations)
        .max()
        .unwrap_or(0);
    let pump_steps = output.reports.iter().filter(|r| r.pump_on).count();
    println!(
        "configured model: {} steps, worst circulation passes {}, worst segment iterations {}, pump duty {:.1}%",
        output.reports.len(),
        worst_outer,
        worst_inner,
        100.0 * pump_steps as f64 / output.reports.len().max(1) as f64
    );
    println!("self-check runtime: {:.2} s", elapsed.as_secs_f64());

    if ledger_ok {
        println!("check: PASS");
        Ok(())
    } else {
        println!("check: FAIL");
        Err(Error::validation(
            "energy ledger exceeded its thresholds in the self-check",
        ))
    }
}

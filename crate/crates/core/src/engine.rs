//! Simulation engine: per-step operator splitting and multi-day runs.
//!
//! Each time step applies the physics in a fixed order — draw-off, solar
//! charging, axial conduction, envelope losses, buoyant mixing — each
//! operator consuming the state the previous one produced. The splitting
//! keeps every operator individually conservative and testable; the energy
//! ledger carried by [`StepReport`] and [`EnergyAudit`] makes the residual
//! of the composition observable instead of silently absorbed.
//!
//! A run consists of warm-up days (integrated but not reported) followed by
//! reported days, over a validated weather series sampled with zero-order
//! hold at the start of each step.

use crate::collector::{charge_loop, ChargeResult, CollectorParams, OuterLoopConfig, PumpControl};
use crate::correlations::CorrelationChoice;
use crate::error::{Error, Result};
use crate::properties::PropertyModel;
use crate::serpentine::{IterationConfig, Placement, SerpentineLayout, TubeSpec};
use crate::tank::{
    conduction_step, convection_step, discharge_step, loss_step, LossModel, TankGeometry,
    TankState,
};
use crate::weather::WeatherSeries;

const SECONDS_PER_DAY: f64 = 86_400.0;
const SECONDS_PER_HOUR: f64 = 3_600.0;

/// Hot-water draw-off pattern: a daily volume distributed over the hours of
/// the day, replaced by mains water at the net temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSchedule {
    /// Total volume drawn per day, litres.
    pub daily_volume_l: f64,
    /// Fraction of the daily volume drawn in each hour (must sum to 1).
    pub hourly_fractions: [f64; 24],
    /// Mains (make-up) water temperature, °C.
    pub net_water_temp_c: f64,
}

/// A two-peak residential profile: morning showers, evening bath time.
const DEFAULT_HOURLY_FRACTIONS: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05, 0.10, 0.10, 0.05, 0.02, 0.02, 0.03, 0.03, 0.02, 0.02,
    0.03, 0.05, 0.10, 0.12, 0.10, 0.08, 0.05, 0.03,
];

impl Default for ConsumptionSchedule {
    /// 250 l/day on a two-peak residential profile, 12 °C mains water.
    fn default() -> Self {
        ConsumptionSchedule {
            daily_volume_l: 250.0,
            hourly_fractions: DEFAULT_HOURLY_FRACTIONS,
            net_water_temp_c: 12.0,
        }
    }
}

impl ConsumptionSchedule {
    /// Checks the schedule; collects every violation.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.daily_volume_l >= 0.0) {
            violations.push(format!(
                "daily draw volume {} l must be non-negative",
                self.daily_volume_l
            ));
        }
        if !self.net_water_temp_c.is_finite() {
            violations.push("net water temperature must be finite".to_string());
        }
        for (hour, f) in self.hourly_fractions.iter().enumerate() {
            if !(*f >= 0.0) {
                violations.push(format!(
                    "hourly fraction for hour {hour} is {f}; fractions must be non-negative"
                ));
            }
        }
        let sum: f64 = self.hourly_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            violations.push(format!(
                "hourly fractions sum to {sum}; they must sum to 1 within 1e-9"
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Volume drawn during the step starting at `step_start_s`, m³.
    pub fn draw_volume_m3(&self, step_start_s: f64, dt_s: f64) -> f64 {
        let hour_of_day =
            ((step_start_s.rem_euclid(SECONDS_PER_DAY)) / SECONDS_PER_HOUR) as usize % 24;
        self.daily_volume_l / 1000.0 * self.hourly_fractions[hour_of_day] * dt_s
            / SECONDS_PER_HOUR
    }
}

/// How the tank starts the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialCondition {
    /// Uniform at the schedule's net (mains) water temperature — the state
    /// of a freshly filled tank.
    #[default]
    NetWaterTemperature,
    /// Uniform at the given temperature, °C.
    Uniform(f64),
    /// Explicit per-sector temperatures, bottom first, °C.
    Profile(Vec<f64>),
}

/// Everything a run needs. Construct via `Default` and override fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Tank geometry and insulation.
    pub geometry: TankGeometry,
    /// Which coil band(s) exchange heat.
    pub placement: Placement,
    /// Serpentine tube and coil dimensions.
    pub tube: TubeSpec,
    /// Flat-plate collector parameters.
    pub collector: CollectorParams,
    /// Pump controller.
    pub pump: PumpControl,
    /// Collector-loop mass flow, kg/s.
    pub flow_rate_kg_s: f64,
    /// Connecting-pipe loss per leg, W/K (0 for ideally insulated pipes).
    pub pipe_loss_w_per_k: f64,
    /// Time step, s.
    pub dt_s: f64,
    /// Integrated-but-unreported lead-in days.
    pub warmup_days: u32,
    /// Reported days following the warm-up.
    pub reported_days: u32,
    /// Inter-sector buoyant-mixing correlation.
    pub correlation: CorrelationChoice,
    /// Water property treatment for thermal-capacity terms.
    pub property_model: PropertyModel,
    /// Draw-off schedule.
    pub schedule: ConsumptionSchedule,
    /// Tank state at the start of the run.
    pub initial_condition: InitialCondition,
    /// Per-segment fixed-point controls.
    pub segment_iteration: IterationConfig,
    /// Collector-loop circulation controls.
    pub circulation: OuterLoopConfig,
}

impl Default for SimulationConfig {
    /// The nominal rig: 163 l tank, bottom coil, 2 m² collector,
    /// 0.02 kg/s, 10-minute steps, 5 warm-up + 5 reported days.
    fn default() -> Self {
        SimulationConfig {
            geometry: TankGeometry::default(),
            placement: Placement::Bottom,
            tube: TubeSpec::default(),
            collector: CollectorParams::default(),
            pump: PumpControl::default(),
            flow_rate_kg_s: 0.02,
            pipe_loss_w_per_k: 0.0,
            dt_s: 600.0,
            warmup_days: 5,
            reported_days: 5,
            correlation: CorrelationChoice::default(),
            property_model: PropertyModel::default(),
            schedule: ConsumptionSchedule::default(),
            initial_condition: InitialCondition::default(),
            segment_iteration: IterationConfig {
                tolerance_k: 1e-7,
                ..IterationConfig::default()
            },
            circulation: OuterLoopConfig::default(),
        }
    }
}

impl SimulationConfig {
    /// Builds the serpentine layout this configuration describes.
    pub fn build_layout(&self) -> Result<SerpentineLayout> {
        SerpentineLayout::from_placement(self.placement, &self.geometry, self.tube)
    }

    /// Builds the initial tank state this configuration describes.
    pub fn build_initial_state(&self) -> Result<TankState> {
        let n = self.geometry.sector_count;
        let state = match &self.initial_condition {
            InitialCondition::NetWaterTemperature => {
                TankState::uniform(n, self.schedule.net_water_temp_c)
            }
            InitialCondition::Uniform(t) => TankState::uniform(n, *t),
            InitialCondition::Profile(temps) => TankState {
                sector_temps_c: temps.clone(),
                timestamp_s: 0.0,
            },
        };
        state.validate(&self.geometry)?;
        Ok(state)
    }

    /// Checks the whole configuration; collects every violation across all
    /// sub-components so one round trip reports everything at once.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        let mut absorb = |result: Result<()>| {
            if let Err(e) = result {
                match e {
                    Error::Validation { violations: v } => violations.extend(v),
                    other => violations.push(other.to_string()),
                }
            }
        };
        absorb(self.collector.validate());
        absorb(self.pump.validate());
        absorb(self.schedule.validate());
        absorb(self.build_layout().map(|_| ()));
        absorb(self.build_initial_state().map(|_| ()));
        if !(self.flow_rate_kg_s > 0.0 && self.flow_rate_kg_s.is_finite()) {
            violations.push(format!(
                "collector-loop flow rate {} kg/s must be positive",
                self.flow_rate_kg_s
            ));
        }
        if !(self.pipe_loss_w_per_k >= 0.0) {
            violations.push(format!(
                "pipe loss coefficient {} W/K must be non-negative",
                self.pipe_loss_w_per_k
            ));
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            violations.push(format!("time step {} s must be positive", self.dt_s));
        }
        if self.reported_days == 0 {
            violations.push("reported days must be at least 1".to_string());
        }
        if !(self.segment_iteration.initial_effectiveness > 0.0
            && self.segment_iteration.initial_effectiveness < 1.0)
        {
            violations.push(format!(
                "initial effectiveness {} must lie in (0, 1)",
                self.segment_iteration.initial_effectiveness
            ));
        }
        if !(self.segment_iteration.wall_temp_blend >= 0.0) {
            violations.push(format!(
                "wall temperature blend {} must be non-negative",
                self.segment_iteration.wall_temp_blend
            ));
        }
        if !(self.segment_iteration.tolerance_k > 0.0) {
            violations.push(format!(
                "segment iteration tolerance {} K must be positive",
                self.segment_iteration.tolerance_k
            ));
        }
        if self.segment_iteration.max_iterations == 0 {
            violations.push("segment iteration budget must be at least 1".to_string());
        }
        if let Some(k) = self.segment_iteration.forced_overall_k {
            if !(k > 0.0) {
                violations.push(format!(
                    "forced overall transmission coefficient {k} W/(m²·K) must be positive"
                ));
            }
        }
        if !(self.circulation.tolerance_k > 0.0) {
            violations.push(format!(
                "circulation tolerance {} K must be positive",
                self.circulation.tolerance_k
            ));
        }
        if self.circulation.max_passes == 0 {
            violations.push("circulation pass budget must be at least 1".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Steps per simulated day under this configuration.
    pub fn steps_per_day(&self) -> u64 {
        (SECONDS_PER_DAY / self.dt_s - 1e-9).ceil() as u64
    }
}

/// Full accounting of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Step start, seconds since the start of the run (warm-up included).
    pub timestamp_s: f64,
    /// Irradiance held over the step, W/m².
    pub q_s_w_per_m2: f64,
    /// Ambient temperature held over the step, °C.
    pub t_ambient_c: f64,
    /// Whether the collector pump ran.
    pub pump_on: bool,
    /// Volume drawn during the step, m³.
    pub draw_volume_m3: f64,
    /// Volume-weighted temperature of the drawn water, °C (absent when no
    /// water was drawn).
    pub draw_temp_c: Option<f64>,
    /// Collector useful gain, W (0 when the pump is off).
    pub q_solar_useful_w: f64,
    /// Converged collector inlet, °C (absent when the pump is off).
    pub collector_in_c: Option<f64>,
    /// Collector outlet, °C (absent when the pump is off).
    pub collector_out_c: Option<f64>,
    /// Serpentine exit temperature, °C (absent when the pump is off).
    pub serpentine_out_c: Option<f64>,
    /// Heat delivered to the tank by the serpentine, W.
    pub heat_to_tank_w: f64,
    /// Connecting-pipe losses, W.
    pub pipe_loss_w: f64,
    /// Envelope losses, W.
    pub q_lost_w: f64,
    /// Enthalpy removed by draws (relative to mains water), W.
    pub q_drawn_w: f64,
    /// Circulation passes used (0 when the pump is off).
    pub outer_iterations: u32,
    /// Worst segment iteration count (0 when the pump is off).
    pub max_inner_iterations: u32,
    /// Buoyant-mixing sweeps used.
    pub convection_sweeps: u32,
    /// Sector temperatures after the draw operator, °C.
    pub temps_after_discharge: Vec<f64>,
    /// Sector temperatures after the charging operator, °C.
    pub temps_after_charge: Vec<f64>,
    /// Sector temperatures after axial conduction, °C.
    pub temps_after_conduction: Vec<f64>,
    /// Sector temperatures after envelope losses, °C.
    pub temps_after_losses: Vec<f64>,
    /// Sector temperatures at the end of the step, °C.
    pub temps_end: Vec<f64>,
    /// Step energy-ledger residual, J.
    pub energy_residual_j: f64,
    /// Residual relative to the step's energy throughput.
    pub relative_residual: f64,
}

/// Whole-run energy ledger over the full horizon (warm-up included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    /// Tank energy content at the start, J.
    pub initial_energy_j: f64,
    /// Tank energy content at the end, J.
    pub final_energy_j: f64,
    /// Integrated collector useful gain, J.
    pub solar_useful_j: f64,
    /// Integrated draw-off enthalpy (relative to mains water), J.
    pub drawn_j: f64,
    /// Integrated envelope losses, J.
    pub lost_j: f64,
    /// Integrated connecting-pipe losses, J.
    pub pipe_loss_j: f64,
    /// Ledger residual ΔE − (gain − drawn − lost − pipe), J.
    pub residual_j: f64,
    /// Residual relative to the total energy throughput.
    pub relative_residual: f64,
    /// Worst per-step relative residual.
    pub max_step_relative_residual: f64,
}

/// Result of [`run`]: reported-period step reports plus the audit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// One report per step of the reported period, in time order.
    pub reports: Vec<StepReport>,
    /// Energy ledger over the full horizon.
    pub audit: EnergyAudit,
    /// Tank state at the end of the run.
    pub final_state: TankState,
}

/// Tank energy content Σ ρc_p·V·T under the given property treatment, J.
pub fn tank_energy_j(state: &TankState, geometry: &TankGeometry, model: PropertyModel) -> f64 {
    let v = geometry.sector_volume_m3();
    state
        .sector_temps_c
        .iter()
        .map(|&t| model.volumetric_heat_capacity(t) * v * t)
        .sum()
}

/// A stepping simulation: owns the evolving tank state and pump latch.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    layout: SerpentineLayout,
    /// Current tank state; `timestamp_s` tracks elapsed run time.
    pub state: TankState,
    pump_running: bool,
}

impl Simulation {
    /// Validates the configuration and prepares the initial state.
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.build_layout()?;
        let state = config.build_initial_state()?;
        Ok(Simulation {
            config,
            layout,
            state,
            pump_running: false,
        })
    }

    /// The configuration this simulation runs under.
    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// Elapsed run time, s.
    pub fn elapsed_s(&self) -> f64 {
        self.state.timestamp_s
    }

    /// Advances one step under the given weather sample (held constant over
    /// the step) and returns the step's full accounting.
    ///
    /// # Errors
    ///
    /// Propagates charging convergence failures, tagged with the step time.
    pub fn step(&mut self, q_s_w_per_m2: f64, t_ambient_c: f64) -> Result<StepReport> {
        let cfg = &self.config;
        let geometry = &cfg.geometry;
        let model = cfg.property_model;
        let dt = cfg.dt_s;
        let step_start_s = self.state.timestamp_s;
        let sector_volume = geometry.sector_volume_m3();
        let energy_before = tank_energy_j(&self.state, geometry, model);

        // 1. Draw-off, split so no single draw exceeds one sector volume
        //    (the plug-displacement operator's exact range).
        let draw_volume = cfg.schedule.draw_volume_m3(step_start_s, dt);
        let mut state = self.state.clone();
        let mut drawn_j = 0.0;
        let mut draw_temp_volume_weighted = 0.0;
        if draw_volume > 0.0 {
            let sub_draws = ((draw_volume / sector_volume - 1e-12).ceil()).max(1.0) as usize;
            let sub_volume = draw_volume / sub_draws as f64;
            for _ in 0..sub_draws {
                let (next, outflow_temp) = discharge_step(
                    &state,
                    sub_volume,
                    cfg.schedule.net_water_temp_c,
                    geometry,
                )?;
                drawn_j += model.volumetric_heat_capacity(outflow_temp)
                    * sub_volume
                    * (outflow_temp - cfg.schedule.net_water_temp_c);
                draw_temp_volume_weighted += outflow_temp * sub_volume;
                state = next;
            }
        }
        let temps_after_discharge = state.sector_temps_c.clone();

        // 2. Pump decision and solar charging.
        let reference_sector = self
            .layout
            .lowest_active_sector()
            .expect("validated: at least one active segment");
        let pump_on = cfg.pump.should_run(
            q_s_w_per_m2,
            t_ambient_c,
            state.sector_temps_c[reference_sector],
            self.pump_running,
            &cfg.collector,
        );
        self.pump_running = pump_on;
        let charge: Option<ChargeResult> = if pump_on {
            let result = charge_loop(
                &state,
                &self.layout,
                &cfg.collector,
                q_s_w_per_m2,
                t_ambient_c,
                cfg.flow_rate_kg_s,
                dt,
                sector_volume,
                &cfg.segment_iteration,
                &cfg.circulation,
                cfg.pipe_loss_w_per_k,
                model,
            )
            .map_err(|e| match e {
                Error::Convergence {
                    context,
                    iterations,
                    history,
                } => Error::Convergence {
                    context: format!("{context} at t = {step_start_s} s"),
                    iterations,
                    history,
                },
                other => other,
            })?;
            state = result.state.clone();
            Some(result)
        } else {
            None
        };
        let temps_after_charge = state.sector_temps_c.clone();

        // 3. Axial conduction.
        state = conduction_step(&state, dt, geometry, model);
        let temps_after_conduction = state.sector_temps_c.clone();

        // 4. Envelope losses to the current ambient.
        let loss = LossModel {
            loss_coeff: geometry.insulation_loss_coeff,
            ambient_temp_c: t_ambient_c,
        };
        let (after_losses, q_lost_w) = loss_step(&state, dt, loss, geometry, model);
        state = after_losses;
        let temps_after_losses = state.sector_temps_c.clone();

        // 5. Buoyant mixing of unstable layers.
        let (mixed, sweeps) = convection_step(&state, dt, geometry, cfg.correlation, model);
        state = mixed;
        state.timestamp_s = step_start_s + dt;

        // Energy ledger for the step.
        let q_solar_useful_w = charge.as_ref().map_or(0.0, |c| c.q_useful_w);
        let pipe_loss_w = charge.as_ref().map_or(0.0, |c| c.pipe_loss_w);
        let heat_to_tank_w = charge.as_ref().map_or(0.0, |c| c.heat_to_tank_w);
        let energy_after = tank_energy_j(&state, geometry, model);
        let supplied_j = (q_solar_useful_w - pipe_loss_w - q_lost_w) * dt - drawn_j;
        let energy_residual_j = (energy_after - energy_before) - supplied_j;
        let throughput_j = (q_solar_useful_w.abs() + pipe_loss_w.abs() + q_lost_w.abs()) * dt
            + drawn_j.abs();
        let relative_residual = energy_residual_j.abs() / throughput_j.max(1.0);

        let report = StepReport {
            timestamp_s: step_start_s,
            q_s_w_per_m2,
            t_ambient_c,
            pump_on,
            draw_volume_m3: draw_volume,
            draw_temp_c: (draw_volume > 0.0).then(|| draw_temp_volume_weighted / draw_volume),
            q_solar_useful_w,
            collector_in_c: charge.as_ref().map(|c| c.collector_in_c),
            collector_out_c: charge.as_ref().map(|c| c.collector_out_c),
            serpentine_out_c: charge.as_ref().map(|c| c.serpentine_out_c),
            heat_to_tank_w,
            pipe_loss_w,
            q_lost_w,
            q_drawn_w: drawn_j / dt,
            outer_iterations: charge.as_ref().map_or(0, |c| c.outer_iterations),
            max_inner_iterations: charge.as_ref().map_or(0, |c| c.max_inner_iterations),
            convection_sweeps: sweeps as u32,
            temps_after_discharge,
            temps_after_charge,
            temps_after_conduction,
            temps_after_losses,
            temps_end: state.sector_temps_c.clone(),
            energy_residual_j,
            relative_residual,
        };
        self.state = state;
        Ok(report)
    }
}

/// Runs the configured horizon over the weather series and returns the
/// reported-period step reports plus the whole-run energy audit.
///
/// # Errors
///
/// Fails fast on configuration or weather-coverage violations, and
/// propagates convergence failures from any step.
pub fn run(config: &SimulationConfig, weather: &WeatherSeries) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone())?;
    let steps_per_day = config.steps_per_day();
    let total_steps = steps_per_day * u64::from(config.warmup_days + config.reported_days);
    let warmup_steps = steps_per_day * u64::from(config.warmup_days);
    let last_sample_s = (total_steps.saturating_sub(1)) as f64 * config.dt_s;
    weather.check_coverage(0.0, last_sample_s)?;
    let max_gap_s = weather.max_gap_s();
    if max_gap_s > config.dt_s {
        log::warn!(
            "weather cadence is coarser than the time step (widest gap {max_gap_s:.0} s vs \
             dt = {:.0} s): each sample is held constant until the next one",
            config.dt_s
        );
    }

    let model = config.property_model;
    let initial_energy_j = tank_energy_j(&sim.state, &config.geometry, model);
    let mut reports = Vec::with_capacity((total_steps - warmup_steps) as usize);
    let mut solar_useful_j = 0.0;
    let mut drawn_j = 0.0;
    let mut lost_j = 0.0;
    let mut pipe_loss_j = 0.0;
    let mut throughput_j = 0.0;
    let mut max_step_relative_residual: f64 = 0.0;
    for k in 0..total_steps {
        let sample = weather.sample(k as f64 * config.dt_s);
        let report = sim.step(sample.q_s_w_per_m2, sample.t_ambient_c)?;
        solar_useful_j += report.q_solar_useful_w * config.dt_s;
        drawn_j += report.q_drawn_w * config.dt_s;
        lost_j += report.q_lost_w * config.dt_s;
        pipe_loss_j += report.pipe_loss_w * config.dt_s;
        throughput_j += (report.q_solar_useful_w.abs()
            + report.pipe_loss_w.abs()
            + report.q_lost_w.abs()
            + report.q_drawn_w.abs())
            * config.dt_s;
        max_step_relative_residual = max_step_relative_residual.max(report.relative_residual);
        if k >= warmup_steps {
            reports.push(report);
        }
    }
    let final_energy_j = tank_energy_j(&sim.state, &config.geometry, model);
    let residual_j =
        (final_energy_j - initial_energy_j) - (solar_useful_j - drawn_j - lost_j - pipe_loss_j);
    let audit = EnergyAudit {
        initial_energy_j,
        final_energy_j,
        solar_useful_j,
        drawn_j,
        lost_j,
        pipe_loss_j,
        residual_j,
        relative_residual: residual_j.abs() / throughput_j.max(1.0),
        max_step_relative_residual,
    };
    Ok(RunOutput {
        reports,
        audit,
        final_state: sim.state,
    })
}

//! Flat-plate collector model, pump control, and the closed charging loop.
//!
//! The collector follows the classic linear efficiency model: useful gain
//! Q_u = A·F_R·(q_s·τα − U_L·(T_in − T_a)), clamped at zero (the pump's
//! check valve prevents the collector from cooling the loop). The charging
//! loop couples that gain to the serpentine chain through an implicit
//! balance: the fluid temperature entering the collector must equal the
//! temperature returned by the serpentine for the same step. [`charge_loop`]
//! resolves that circulation fixed point by Newton iteration on the
//! collector inlet temperature — every stage of the loop has an analytic
//! slope — re-running the serpentine chain from the same pre-step tank state
//! each pass so converged passes are exactly self-consistent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::properties::PropertyModel;
use crate::serpentine::{chain_pass, IterationConfig, SerpentineLayout};
use crate::tank::TankState;

/// Flat-plate collector parameters for the linear efficiency model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectorParams {
    /// Aperture area, m².
    pub area_m2: f64,
    /// Heat-removal factor F_R (dimensionless, 0–1).
    pub heat_removal_factor: f64,
    /// Effective transmittance–absorptance product τα (dimensionless, 0–1).
    pub transmittance_absorptance: f64,
    /// Overall loss coefficient U_L, W/(m²·K).
    pub loss_coeff: f64,
}

impl Default for CollectorParams {
    /// A common 2 m² single-glazed flat plate.
    fn default() -> Self {
        CollectorParams {
            area_m2: 2.0,
            heat_removal_factor: 0.9,
            transmittance_absorptance: 0.8,
            loss_coeff: 5.0,
        }
    }
}

impl CollectorParams {
    /// Checks physical plausibility; collects every violation.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.area_m2 > 0.0) {
            violations.push(format!("collector area {} m² must be positive", self.area_m2));
        }
        if !(self.heat_removal_factor > 0.0 && self.heat_removal_factor <= 1.0) {
            violations.push(format!(
                "heat removal factor {} must lie in (0, 1]",
                self.heat_removal_factor
            ));
        }
        if !(self.transmittance_absorptance > 0.0 && self.transmittance_absorptance <= 1.0)
        {
            violations.push(format!(
                "transmittance-absorptance product {} must lie in (0, 1]",
                self.transmittance_absorptance
            ));
        }
        if !(self.loss_coeff >= 0.0) {
            violations.push(format!(
                "collector loss coefficient {} W/(m²·K) must be non-negative",
                self.loss_coeff
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }
}

/// Pump controller: decides whether the collector loop circulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PumpControl {
    /// Run whenever solar irradiance exceeds the threshold.
    RadiationThreshold {
        /// Irradiance threshold, W/m²; the pump runs for q_s strictly above.
        w_per_m2: f64,
    },
    /// Classic differential thermostat with hysteresis: compares an
    /// estimated stagnation plate temperature against the tank's reference
    /// (lowest charged) sector. Switches on above `on_delta_k`, off below
    /// `off_delta_k`, and holds its previous state in between.
    DifferentialOnOff {
        /// Plate-minus-tank difference that switches the pump on, K.
        on_delta_k: f64,
        /// Plate-minus-tank difference that switches the pump off, K.
        off_delta_k: f64,
    },
}

impl Default for PumpControl {
    /// Run whenever the sun is up at all.
    fn default() -> Self {
        PumpControl::RadiationThreshold { w_per_m2: 0.0 }
    }
}

impl PumpControl {
    /// Checks controller parameters; collects every violation.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        match *self {
            PumpControl::RadiationThreshold { w_per_m2 } => {
                if !(w_per_m2 >= 0.0) {
                    violations.push(format!(
                        "pump radiation threshold {w_per_m2} W/m² must be non-negative"
                    ));
                }
            }
            PumpControl::DifferentialOnOff {
                on_delta_k,
                off_delta_k,
            } => {
                if !(off_delta_k >= 0.0) {
                    violations.push(format!(
                        "pump off-delta {off_delta_k} K must be non-negative"
                    ));
                }
                if !(on_delta_k > off_delta_k) {
                    violations.push(format!(
                        "pump on-delta {on_delta_k} K must exceed off-delta {off_delta_k} K"
                    ));
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Decides the pump state for the coming step.
    ///
    /// `reference_temp_c` is the tank temperature the differential
    /// controller compares against (the lowest actively charged sector).
    /// The plate temperature is estimated from its stagnation balance
    /// T_plate = T_a + q_s·τα/U_L — the temperature an idle plate settles
    /// at, which is what a plate sensor reads before flow starts.
    pub fn should_run(
        &self,
        q_s_w_per_m2: f64,
        ambient_temp_c: f64,
        reference_temp_c: f64,
        was_running: bool,
        collector: &CollectorParams,
    ) -> bool {
        match *self {
            PumpControl::RadiationThreshold { w_per_m2 } => q_s_w_per_m2 > w_per_m2,
            PumpControl::DifferentialOnOff {
                on_delta_k,
                off_delta_k,
            } => {
                let plate_temp = if collector.loss_coeff > 0.0 {
                    ambient_temp_c
                        + q_s_w_per_m2 * collector.transmittance_absorptance
                            / collector.loss_coeff
                } else {
                    // A lossless plate has no finite stagnation temperature;
                    // treat any sunshine as a demand to run.
                    return q_s_w_per_m2 > 0.0;
                };
                let delta = plate_temp - reference_temp_c;
                if delta >= on_delta_k {
                    true
                } else if delta <= off_delta_k {
                    false
                } else {
                    was_running
                }
            }
        }
    }
}

/// Controls for the circulation fixed-point (outer) iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterLoopConfig {
    /// Convergence threshold on the collector-inlet temperature, K.
    pub tolerance_k: f64,
    /// Pass budget before a convergence error.
    pub max_passes: u32,
}

impl Default for OuterLoopConfig {
    fn default() -> Self {
        OuterLoopConfig {
            tolerance_k: 1e-6,
            max_passes: 25,
        }
    }
}

/// Collector outlet temperature and useful gain for a given inlet.
///
/// Returns `(outlet_temp_c, q_useful_w)`; the gain is clamped at zero, so at
/// night or with a hot inlet the fluid passes through unchanged.
pub fn collector_outlet(
    inlet_temp_c: f64,
    q_s_w_per_m2: f64,
    ambient_temp_c: f64,
    params: &CollectorParams,
    flow_rate_kg_s: f64,
    fluid_specific_heat: f64,
) -> (f64, f64) {
    let q_useful = (params.area_m2
        * params.heat_removal_factor
        * (q_s_w_per_m2 * params.transmittance_absorptance
            - params.loss_coeff * (inlet_temp_c - ambient_temp_c)))
        .max(0.0);
    let outlet = inlet_temp_c + q_useful / (flow_rate_kg_s * fluid_specific_heat);
    (outlet, q_useful)
}

/// Everything the engine needs from one converged charging step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeResult {
    /// Tank state after the serpentine exchange.
    pub state: TankState,
    /// Collector useful gain, W.
    pub q_useful_w: f64,
    /// Converged collector inlet temperature, °C.
    pub collector_in_c: f64,
    /// Collector outlet temperature, °C.
    pub collector_out_c: f64,
    /// Fluid temperature at the serpentine exit (before the return pipe), °C.
    pub serpentine_out_c: f64,
    /// Heat delivered to the tank by the serpentine, W.
    pub heat_to_tank_w: f64,
    /// Heat lost from the connecting pipes (both legs), W.
    pub pipe_loss_w: f64,
    /// Outer (circulation) passes used.
    pub outer_iterations: u32,
    /// Worst per-segment iteration count across the converged pass.
    pub max_inner_iterations: u32,
}

/// Resolves one charging step: collector → hot pipe → serpentine chain →
/// return pipe → collector, iterated until the loop temperature closes.
///
/// Each pass evaluates the serpentine chain from the same pre-step tank
/// state, so the pass that meets the tolerance is exactly self-consistent
/// and its chain state is committed. `pipe_loss_w_per_k` applies to each
/// connecting leg: a leg at temperature T loses
/// `pipe_loss_w_per_k · (T − T_a)` W.
///
/// # Errors
///
/// Propagates segment convergence failures and reports its own convergence
/// error (with the residual history) if the circulation temperature does not
/// close within `outer.max_passes`.
#[allow(clippy::too_many_arguments)]
pub fn charge_loop(
    state: &TankState,
    layout: &SerpentineLayout,
    params: &CollectorParams,
    q_s_w_per_m2: f64,
    ambient_temp_c: f64,
    flow_rate_kg_s: f64,
    dt_s: f64,
    sector_volume_m3: f64,
    inner: &IterationConfig,
    outer: &OuterLoopConfig,
    pipe_loss_w_per_k: f64,
    model: PropertyModel,
) -> Result<ChargeResult> {
    let lowest_active = layout.lowest_active_sector().ok_or_else(|| {
        Error::validation("charging requires at least one active serpentine segment")
    })?;
    // One consistent fluid c_p per step, taken at the coolest loop water
    // (the bottom sector), keeps collector, pipes, and every segment on the
    // same enthalpy scale so the loop balance closes exactly.
    let fluid_cp = model.specific_heat(state.sector_temps_c[0]);
    let mcp = flow_rate_kg_s * fluid_cp;

    let mut guess = state.sector_temps_c[lowest_active] + 1.5;
    let mut prev_guess = f64::NAN;
    let mut prev_residual = f64::NAN;
    let mut residual_history = Vec::new();
    for pass in 1..=outer.max_passes {
        let (collector_out, q_useful) = collector_outlet(
            guess,
            q_s_w_per_m2,
            ambient_temp_c,
            params,
            flow_rate_kg_s,
            fluid_cp,
        );
        let hot_leg_drop = pipe_loss_w_per_k * (collector_out - ambient_temp_c) / mcp;
        let serpentine_in = collector_out - hot_leg_drop;
        let chain = chain_pass(
            serpentine_in,
            layout,
            state,
            flow_rate_kg_s,
            dt_s,
            sector_volume_m3,
            fluid_cp,
            inner,
            model,
        )?;
        let return_leg_drop =
            pipe_loss_w_per_k * (chain.outlet_temp_c - ambient_temp_c) / mcp;
        let returned = chain.outlet_temp_c - return_leg_drop;
        let residual = returned - guess;
        residual_history.push(residual);
        if residual.abs() < outer.tolerance_k {
            return Ok(ChargeResult {
                state: chain.state,
                q_useful_w: q_useful,
                collector_in_c: guess,
                collector_out_c: collector_out,
                serpentine_out_c: chain.outlet_temp_c,
                heat_to_tank_w: chain.heat_to_tank_w,
                pipe_loss_w: (hot_leg_drop + return_leg_drop) * mcp,
                outer_iterations: pass,
                max_inner_iterations: chain.max_inner_iterations,
            });
        }
        // First update: Newton on the circulation residual. Every stage of
        // the loop has a known derivative with respect to the inlet guess —
        // the collector outlet slope (1 − A·F_R·U_L/ṁc_p while it produces
        // heat, 1 when clamped dark), 1 − pipe_loss/ṁc_p per pipe leg, and
        // the chain's converged outlet sensitivity — so the loop gain g puts
        // the fixed point near guess + residual/(1 − g). Later updates use
        // the secant on the evaluated iterates, whose measured slope also
        // captures what the analytic one linearizes away; seeded by the
        // Newton step it starts close enough to finish quadratically.
        let collector_slope = if q_useful > 0.0 {
            1.0 - params.area_m2 * params.heat_removal_factor * params.loss_coeff / mcp
        } else {
            1.0
        };
        let leg_slope = 1.0 - pipe_loss_w_per_k / mcp;
        let loop_gain = collector_slope * leg_slope * leg_slope * chain.outlet_sensitivity;
        let newton = if 1.0 - loop_gain >= 0.25 {
            guess + residual / (1.0 - loop_gain)
        } else {
            // Pathological gain (tiny flow or extreme pipe loss): fall back
            // to direct substitution, which at least follows the map.
            returned
        };
        let next = if pass == 1 {
            newton
        } else {
            let denom = residual - prev_residual;
            if denom.abs() > 1e-12 {
                guess - residual * (guess - prev_guess) / denom
            } else {
                newton
            }
        };
        prev_guess = guess;
        prev_residual = residual;
        guess = next;
    }
    Err(Error::Convergence {
        context: "collector loop circulation temperature".into(),
        iterations: outer.max_passes as usize,
        history: residual_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serpentine::{Placement, TubeSpec};
    use crate::tank::TankGeometry;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const FLOW: f64 = 0.02;

    fn bottom_layout() -> SerpentineLayout {
        SerpentineLayout::from_placement(
            Placement::Bottom,
            &TankGeometry::default(),
            TubeSpec::default(),
        )
        .unwrap()
    }

    fn engine_inner() -> IterationConfig {
        IterationConfig {
            tolerance_k: 1e-7,
            ..IterationConfig::default()
        }
    }

    #[test]
    fn gain_and_outlet_match_hand_calculation() {
        // A·F_R·(q_s·τα − U_L·ΔT) = 2·0.9·(800·0.8 − 5·20) = 972 W,
        // raising 0.02 kg/s of water by 972/(0.02·4182) ≈ 11.62 K.
        let (outlet, q_useful) = collector_outlet(
            40.0,
            800.0,
            20.0,
            &CollectorParams::default(),
            FLOW,
            4182.0,
        );
        assert_abs_diff_eq!(q_useful, 972.0, epsilon = 1e-9);
        assert_relative_eq!(outlet, 51.62, max_relative = 1e-3);
    }

    #[test]
    fn dark_collector_at_ambient_passes_fluid_through() {
        let (outlet, q_useful) =
            collector_outlet(20.0, 0.0, 20.0, &CollectorParams::default(), FLOW, 4182.0);
        assert_eq!(q_useful, 0.0);
        assert_eq!(outlet, 20.0);
    }

    #[test]
    fn gain_is_clamped_when_losses_would_exceed_absorption() {
        let (outlet, q_useful) = collector_outlet(
            90.0,
            100.0,
            10.0,
            &CollectorParams::default(),
            FLOW,
            4182.0,
        );
        assert_eq!(q_useful, 0.0);
        assert_eq!(outlet, 90.0);
    }

    #[test]
    fn lossless_collector_gain_is_linear_in_irradiance() {
        let params = CollectorParams {
            loss_coeff: 0.0,
            ..CollectorParams::default()
        };
        let (_, q1) = collector_outlet(50.0, 300.0, 10.0, &params, FLOW, 4182.0);
        let (_, q2) = collector_outlet(50.0, 600.0, 10.0, &params, FLOW, 4182.0);
        assert_relative_eq!(q2, 2.0 * q1, max_relative = 1e-12);
    }

    #[test]
    fn efficiency_never_exceeds_optical_limit_for_warm_inlet() {
        let params = CollectorParams::default();
        let limit = params.heat_removal_factor * params.transmittance_absorptance;
        for q_s in [100.0, 400.0, 900.0] {
            for inlet in [20.0, 40.0, 70.0] {
                let (_, q_useful) = collector_outlet(inlet, q_s, 20.0, &params, FLOW, 4182.0);
                assert!(q_useful / (params.area_m2 * q_s) <= limit + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_collector_parameters_are_all_reported() {
        let params = CollectorParams {
            area_m2: -1.0,
            heat_removal_factor: 1.5,
            transmittance_absorptance: 0.0,
            loss_coeff: -2.0,
        };
        let err = params.validate().unwrap_err();
        assert!(err.to_string().contains("4 validation errors"));
    }

    #[test]
    fn radiation_threshold_pump_follows_the_sun() {
        let control = PumpControl::default();
        let params = CollectorParams::default();
        assert!(control.should_run(1.0, 20.0, 50.0, false, &params));
        assert!(!control.should_run(0.0, 20.0, 10.0, true, &params));
    }

    #[test]
    fn differential_pump_has_hysteresis() {
        let control = PumpControl::DifferentialOnOff {
            on_delta_k: 6.0,
            off_delta_k: 2.0,
        };
        let params = CollectorParams::default();
        // Stagnation plate estimate: 20 + q_s·0.8/5 = 20 + 0.16·q_s.
        // q_s = 500 → plate 100 °C.
        assert!(control.should_run(500.0, 20.0, 90.0, false, &params)); // Δ=10 ≥ 6
        assert!(!control.should_run(500.0, 20.0, 99.0, true, &params)); // Δ=1 ≤ 2
        // Δ = 4 lies inside the band: previous state holds.
        assert!(control.should_run(500.0, 20.0, 96.0, true, &params));
        assert!(!control.should_run(500.0, 20.0, 96.0, false, &params));
    }

    #[test]
    fn differential_pump_rejects_inverted_band() {
        let control = PumpControl::DifferentialOnOff {
            on_delta_k: 2.0,
            off_delta_k: 6.0,
        };
        assert!(control.validate().is_err());
    }

    #[test]
    fn charge_converges_quickly_from_a_cold_start() {
        let state = TankState::uniform(12, 20.0);
        let result = charge_loop(
            &state,
            &bottom_layout(),
            &CollectorParams::default(),
            800.0,
            20.0,
            FLOW,
            600.0,
            TankGeometry::default().sector_volume_m3(),
            &engine_inner(),
            &OuterLoopConfig::default(),
            0.0,
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert!(result.outer_iterations <= 5, "{} passes", result.outer_iterations);
        assert!(result.max_inner_iterations <= 10);
        assert!(result.q_useful_w > 0.0);
        assert!(result.collector_out_c > result.collector_in_c);
        // Only the active (bottom) sectors warmed.
        for (i, (after, before)) in result
            .state
            .sector_temps_c
            .iter()
            .zip(&state.sector_temps_c)
            .enumerate()
        {
            if i < 4 {
                assert!(after > before);
            } else {
                assert_eq!(after, before);
            }
        }
    }

    #[test]
    fn dark_loop_settles_to_the_tank_temperature() {
        // With no sun and the tank at ambient there is nothing to exchange:
        // the circulation temperature relaxes onto the tank's and the step
        // leaves the state untouched to within the loop tolerance.
        let state = TankState::uniform(12, 20.0);
        let result = charge_loop(
            &state,
            &bottom_layout(),
            &CollectorParams::default(),
            0.0,
            20.0,
            FLOW,
            600.0,
            TankGeometry::default().sector_volume_m3(),
            &engine_inner(),
            &OuterLoopConfig::default(),
            0.0,
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        // The converged inlet may sit a few ulps below ambient, where the
        // collector legitimately picks up a rounding-scale gain from the air.
        assert!(result.q_useful_w.abs() < 1e-9, "{}", result.q_useful_w);
        assert!(result.heat_to_tank_w.abs() < 1e-3);
        for (after, before) in result.state.sector_temps_c.iter().zip(&state.sector_temps_c) {
            assert_abs_diff_eq!(after, before, epsilon = 1e-6);
        }
    }

    #[test]
    fn circulation_residuals_contract_after_the_second_pass() {
        // Force exhaustion to harvest the residual history, then check the
        // Newton iteration contracts until it reaches rounding noise.
        let state = TankState::uniform(12, 25.0);
        let outer = OuterLoopConfig {
            tolerance_k: 0.0,
            max_passes: 12,
        };
        let err = charge_loop(
            &state,
            &bottom_layout(),
            &CollectorParams::default(),
            700.0,
            18.0,
            FLOW,
            600.0,
            TankGeometry::default().sector_volume_m3(),
            &engine_inner(),
            &outer,
            0.0,
            PropertyModel::TemperatureDependent,
        )
        .unwrap_err();
        match err {
            Error::Convergence { history, .. } => {
                assert_eq!(history.len(), 12);
                for pair in history[1..].windows(2) {
                    if pair[0].abs() > 1e-8 {
                        assert!(
                            pair[1].abs() < pair[0].abs(),
                            "residuals must contract: {history:?}"
                        );
                    }
                }
            }
            other => panic!("expected convergence error, got {other}"),
        }
    }

    #[test]
    fn loop_energy_closes_to_the_circulation_tolerance() {
        let state = TankState::uniform(12, 15.0);
        let model = PropertyModel::ConstantDensityHeat;
        let result = charge_loop(
            &state,
            &bottom_layout(),
            &CollectorParams::default(),
            850.0,
            22.0,
            FLOW,
            600.0,
            TankGeometry::default().sector_volume_m3(),
            &engine_inner(),
            &OuterLoopConfig::default(),
            1.5,
            model,
        )
        .unwrap();
        // Collector gain splits exactly into pipe losses, tank heating, and
        // the (tolerance-sized) circulation residual ṁ·c_p·(returned − guess).
        let mcp = FLOW * model.specific_heat(15.0);
        let residual =
            result.q_useful_w - result.pipe_loss_w - result.heat_to_tank_w;
        assert!(
            residual.abs() <= mcp * OuterLoopConfig::default().tolerance_k * 1.01,
            "unbalanced loop: {residual} W"
        );
        assert!(result.pipe_loss_w > 0.0);
    }

    #[test]
    fn uniform_temperature_offsets_shift_the_loop_rigidly() {
        // With constant capacity and a fixed transmission coefficient the
        // whole loop is affine in temperature, so shifting tank and ambient
        // together must shift every loop temperature by the same offset and
        // leave the gain unchanged.
        let inner = IterationConfig {
            forced_overall_k: Some(600.0),
            tolerance_k: 1e-9,
            ..IterationConfig::default()
        };
        let outer = OuterLoopConfig {
            tolerance_k: 1e-9,
            ..OuterLoopConfig::default()
        };
        let run = |offset: f64| {
            charge_loop(
                &TankState::uniform(12, 20.0 + offset),
                &bottom_layout(),
                &CollectorParams::default(),
                600.0,
                15.0 + offset,
                FLOW,
                600.0,
                TankGeometry::default().sector_volume_m3(),
                &inner,
                &outer,
                0.0,
                PropertyModel::ConstantDensityHeat,
            )
            .unwrap()
        };
        let base = run(0.0);
        for offset in [1.0, 2.0] {
            let shifted = run(offset);
            assert_relative_eq!(shifted.q_useful_w, base.q_useful_w, max_relative = 1e-5);
            assert_abs_diff_eq!(
                shifted.collector_in_c,
                base.collector_in_c + offset,
                epsilon = 1e-5
            );
            for (s, b) in shifted
                .state
                .sector_temps_c
                .iter()
                .zip(&base.state.sector_temps_c)
            {
                assert_abs_diff_eq!(s - offset, *b, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn all_inactive_layout_cannot_charge() {
        let layout = SerpentineLayout::from_placement(
            Placement::Bottom,
            &TankGeometry::default(),
            TubeSpec::default(),
        )
        .unwrap();
        // Rebuild with every valve closed.
        let layout =
            SerpentineLayout::new(layout.segments().to_vec(), vec![false; 12]).unwrap();
        let err = charge_loop(
            &TankState::uniform(12, 20.0),
            &layout,
            &CollectorParams::default(),
            500.0,
            20.0,
            FLOW,
            600.0,
            TankGeometry::default().sector_volume_m3(),
            &engine_inner(),
            &OuterLoopConfig::default(),
            0.0,
            PropertyModel::TemperatureDependent,
        )
        .unwrap_err();
        assert!(err.to_string().contains("active serpentine segment"));
    }
}

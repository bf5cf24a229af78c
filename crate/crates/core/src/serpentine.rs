//! Immersed serpentine heat-exchanger segments and the top-to-bottom chain.
//!
//! The collector's working fluid enters a serpentine coil near the top of
//! the tank and flows downward, so the chain is evaluated top sector first;
//! each segment's outlet temperature feeds the next (lower) segment. Within
//! one sector, [`segment_exchange`] resolves the coupled segment/sector
//! exchange over a time step by fixed-point iteration:
//!
//! * the fluid side follows a single-stream effectiveness relation
//!   ε = 1 − exp(−K·F/(ṁ·c_p)) against the sector water as the bath,
//! * the bath temperature itself is the implicit end-of-step value, so the
//!   sector update T_end = (T_start + a·ε·T_in)/(1 + a·ε) with
//!   a = ṁ·c_p·dt/(ρ·V·c_p,sector) is energy-consistent by construction,
//! * the overall coefficient K combines forced convection inside the tube,
//!   conduction through the wall, and free convection from the outside
//!   surface, re-evaluated from the current iterate's temperatures.
//!
//! The fluid-side outlet is always `T_in − q/(ṁ·c_p)` — the form that closes
//! the energy balance exactly (fluid heat released = sector heat absorbed).

use serde::{Deserialize, Serialize};

use crate::correlations;
use crate::error::{Error, Result};
use crate::properties::{self, PropertyModel};
use crate::tank::{TankGeometry, TankState};

/// Floor on the film temperature difference driving free convection, K.
///
/// The free-convection correlation scales as Gr^0.2, whose derivative blows
/// up as the wall–water difference approaches zero. Near the collector
/// loop's zero-gain equilibrium that cusp destroys the outer loop's
/// superlinear convergence. Flooring the film ΔT at 0.1 K makes the segment
/// map locally affine in that neighbourhood while perturbing the film
/// coefficient only where the exchanged heat is already negligible.
const FILM_DELTA_T_MIN_K: f64 = 0.1;

/// One serpentine element immersed in one tank sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerpentineSegment {
    /// Index of the tank sector this segment sits in (0 = bottom).
    pub sector_index: usize,
    /// Developed tube length within the sector, m.
    pub length_m: f64,
    /// Tube inner diameter, m.
    pub inner_diameter_m: f64,
    /// Tube outer diameter, m.
    pub outer_diameter_m: f64,
    /// Tube wall conductivity, W/(m·K).
    pub wall_conductivity: f64,
}

impl SerpentineSegment {
    /// Tube wall thickness (d_o − d_i)/2, m.
    pub fn wall_thickness_m(&self) -> f64 {
        (self.outer_diameter_m - self.inner_diameter_m) / 2.0
    }

    /// Outside exchange surface π·d_o·length, m².
    pub fn exchange_area_m2(&self) -> f64 {
        std::f64::consts::PI * self.outer_diameter_m * self.length_m
    }

    fn validate(&self, violations: &mut Vec<String>) {
        let i = self.sector_index;
        if !(self.inner_diameter_m > 0.0) {
            violations.push(format!(
                "segment at sector {i}: inner diameter {} m must be positive",
                self.inner_diameter_m
            ));
        }
        if !(self.outer_diameter_m > self.inner_diameter_m) {
            violations.push(format!(
                "segment at sector {i}: outer diameter {} m must exceed inner diameter {} m",
                self.outer_diameter_m, self.inner_diameter_m
            ));
        }
        if !(self.length_m >= 0.0) {
            violations.push(format!(
                "segment at sector {i}: length {} m must be non-negative",
                self.length_m
            ));
        }
        if !(self.wall_conductivity > 0.0) {
            violations.push(format!(
                "segment at sector {i}: wall conductivity {} W/(m·K) must be positive",
                self.wall_conductivity
            ));
        }
    }
}

/// Tube and coil parameters shared by all segments of a layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    /// Inner diameter, m.
    pub inner_diameter_m: f64,
    /// Outer diameter, m.
    pub outer_diameter_m: f64,
    /// Wall conductivity, W/(m·K).
    pub wall_conductivity: f64,
    /// Developed length of one coil (one placement band), m.
    pub coil_length_m: f64,
}

impl Default for TubeSpec {
    /// Copper tube, 16/18 mm, 10 m of coil per band.
    fn default() -> Self {
        TubeSpec {
            inner_diameter_m: 0.016,
            outer_diameter_m: 0.018,
            wall_conductivity: 380.0,
            coil_length_m: 10.0,
        }
    }
}

/// Named coil placements: which third(s) of the tank carry an active coil.
///
/// The rig has three switchable 10 m coils, one per band of sectors; these
/// names select which of them exchange heat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Placement {
    /// Lowest band only.
    #[default]
    #[serde(rename = "bottom")]
    Bottom,
    /// Middle band only.
    #[serde(rename = "middle")]
    Middle,
    /// Top band only.
    #[serde(rename = "top")]
    Top,
    /// Lowest and top bands together.
    #[serde(rename = "bottom+top")]
    BottomAndTop,
    /// All three bands.
    #[serde(rename = "all")]
    All,
}

impl Placement {
    /// All placements, in a stable order (useful for sweeps).
    pub const ALL: [Placement; 5] = [
        Placement::Bottom,
        Placement::Middle,
        Placement::Top,
        Placement::BottomAndTop,
        Placement::All,
    ];

    /// The sector indices whose coil is active under this placement, for a
    /// tank of `sector_count` sectors split into three bands.
    pub fn active_sectors(self, sector_count: usize) -> Vec<usize> {
        let b1 = sector_count / 3;
        let b2 = 2 * sector_count / 3;
        match self {
            Placement::Bottom => (0..b1).collect(),
            Placement::Middle => (b1..b2).collect(),
            Placement::Top => (b2..sector_count).collect(),
            Placement::BottomAndTop => (0..b1).chain(b2..sector_count).collect(),
            Placement::All => (0..sector_count).collect(),
        }
    }
}

impl std::fmt::Display for Placement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Placement::Bottom => "bottom",
            Placement::Middle => "middle",
            Placement::Top => "top",
            Placement::BottomAndTop => "bottom+top",
            Placement::All => "all",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottom" => Ok(Placement::Bottom),
            "middle" => Ok(Placement::Middle),
            "top" => Ok(Placement::Top),
            "bottom+top" => Ok(Placement::BottomAndTop),
            "all" => Ok(Placement::All),
            other => Err(Error::validation(format!(
                "unknown placement {other:?}: expected one of bottom, middle, top, \
                 bottom+top, all"
            ))),
        }
    }
}

/// The full serpentine chain: segments in flow order (top sector first) with
/// per-segment active flags (the rig's valves).
#[derive(Debug, Clone, PartialEq)]
pub struct SerpentineLayout {
    segments: Vec<SerpentineSegment>,
    active: Vec<bool>,
}

impl SerpentineLayout {
    /// Builds a layout from explicit segments (must be in flow order:
    /// strictly decreasing sector indices) and matching active flags.
    pub fn new(segments: Vec<SerpentineSegment>, active: Vec<bool>) -> Result<Self> {
        let mut violations = Vec::new();
        if active.len() != segments.len() {
            violations.push(format!(
                "active flag count {} must equal segment count {}",
                active.len(),
                segments.len()
            ));
        }
        for pair in segments.windows(2) {
            if pair[1].sector_index >= pair[0].sector_index {
                violations.push(format!(
                    "segments must be in flow order (strictly decreasing sector \
                     indices): sector {} follows sector {}",
                    pair[1].sector_index, pair[0].sector_index
                ));
            }
        }
        for s in &segments {
            s.validate(&mut violations);
        }
        if violations.is_empty() {
            Ok(SerpentineLayout { segments, active })
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Builds the three-coil layout for a tank: every sector carries a
    /// segment of its band's coil (coil length / band size), and a segment
    /// is active when `placement` includes its band.
    pub fn from_placement(
        placement: Placement,
        geometry: &TankGeometry,
        tube: TubeSpec,
    ) -> Result<Self> {
        let n = geometry.sector_count;
        if n < 3 {
            return Err(Error::validation(format!(
                "placement bands need at least 3 sectors, got {n}"
            )));
        }
        let b1 = n / 3;
        let b2 = 2 * n / 3;
        let band_size = |i: usize| -> usize {
            if i < b1 {
                b1
            } else if i < b2 {
                b2 - b1
            } else {
                n - b2
            }
        };
        let active_set = placement.active_sectors(n);
        let segments: Vec<SerpentineSegment> = (0..n)
            .rev()
            .map(|i| SerpentineSegment {
                sector_index: i,
                length_m: tube.coil_length_m / band_size(i) as f64,
                inner_diameter_m: tube.inner_diameter_m,
                outer_diameter_m: tube.outer_diameter_m,
                wall_conductivity: tube.wall_conductivity,
            })
            .collect();
        let active = segments
            .iter()
            .map(|s| active_set.contains(&s.sector_index))
            .collect();
        SerpentineLayout::new(segments, active)
    }

    /// Segments in flow order (top first).
    pub fn segments(&self) -> &[SerpentineSegment] {
        &self.segments
    }

    /// Active flags aligned with [`Self::segments`].
    pub fn active_flags(&self) -> &[bool] {
        &self.active
    }

    /// Active segments in flow order.
    pub fn active_segments(&self) -> impl Iterator<Item = &SerpentineSegment> {
        self.segments
            .iter()
            .zip(&self.active)
            .filter_map(|(s, &on)| on.then_some(s))
    }

    /// Lowest sector index that carries an active segment, if any.
    pub fn lowest_active_sector(&self) -> Option<usize> {
        self.active_segments().map(|s| s.sector_index).min()
    }

    /// Largest sector index referenced by any segment (for validation
    /// against a geometry).
    pub fn max_sector_index(&self) -> Option<usize> {
        self.segments.iter().map(|s| s.sector_index).max()
    }
}

/// Controls for the per-segment fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    /// Starting guess for the exchange effectiveness (0.5–0.7 is sensible;
    /// the fixed point does not depend on it).
    pub initial_effectiveness: f64,
    /// Blend coefficient for the wall-temperature estimate
    /// T_wall = T_av + blend·(T_av − T_sector).
    pub wall_temp_blend: f64,
    /// Convergence threshold on the outlet and sector iterates, K.
    pub tolerance_k: f64,
    /// Iteration budget before a convergence error.
    pub max_iterations: u32,
    /// Test hook: bypass the correlation stack and use this constant overall
    /// transmission coefficient, W/(m²·K).
    pub forced_overall_k: Option<f64>,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            initial_effectiveness: 0.6,
            wall_temp_blend: 0.2,
            tolerance_k: 0.01,
            max_iterations: 50,
            forced_overall_k: None,
        }
    }
}

/// Outcome of one segment over one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentResult {
    /// Fluid temperature leaving the segment, °C.
    pub outlet_temp_c: f64,
    /// Heat transferred from fluid to sector, W (negative when the fluid is
    /// colder than the sector).
    pub heat_flux_w: f64,
    /// Sector temperature at the end of the step, °C.
    pub new_sector_temp_c: f64,
    /// Fixed-point iterations used.
    pub iterations_used: u32,
    /// Final wall-temperature estimate, °C.
    pub wall_temp_estimate_c: f64,
    /// Converged exchange effectiveness, in [0, 1].
    pub effectiveness: f64,
    /// Derivative of the outlet temperature with respect to the inlet
    /// temperature at the converged state, in [0, 1]. The circulation loop
    /// chains these into its Newton update.
    pub outlet_sensitivity: f64,
}

/// Resolves one serpentine segment against its sector over one time step.
///
/// `fluid_specific_heat` is the working-fluid c_p used on the fluid side; the
/// charging loop freezes it once per step (at the loop's reference
/// temperature) so that collector, pipes, and all segments close their energy
/// balance with a single consistent value.
///
/// # Errors
///
/// Returns a convergence error (carrying the last two iterate pairs) when
/// the fixed point is not reached within `cfg.max_iterations`.
#[allow(clippy::too_many_arguments)]
pub fn segment_exchange(
    inlet_temp_c: f64,
    sector_temp_c: f64,
    segment: &SerpentineSegment,
    flow_rate_kg_s: f64,
    dt_s: f64,
    sector_volume_m3: f64,
    fluid_specific_heat: f64,
    cfg: &IterationConfig,
    model: PropertyModel,
) -> Result<SegmentResult> {
    debug_assert!(flow_rate_kg_s > 0.0 && dt_s > 0.0 && sector_volume_m3 > 0.0);
    let mcp = flow_rate_kg_s * fluid_specific_heat;
    let sector_capacity = model.volumetric_heat_capacity(sector_temp_c) * sector_volume_m3;
    // Ratio of the fluid's per-step thermal mass to the sector's: governs
    // how far the implicit end-of-step bath temperature moves.
    let a = mcp * dt_s / sector_capacity;
    let area = segment.exchange_area_m2();
    let d_i = segment.inner_diameter_m;
    let d_o = segment.outer_diameter_m;

    let mut t_out = inlet_temp_c - cfg.initial_effectiveness * (inlet_temp_c - sector_temp_c);
    let mut t_end = sector_temp_c;
    let mut prev = (t_out, t_end);
    for iteration in 1..=cfg.max_iterations {
        let t_av = 0.5 * (inlet_temp_c + t_out);
        let wall_temp = t_av + cfg.wall_temp_blend * (t_av - t_end);
        let overall_k = match cfg.forced_overall_k {
            Some(k) => k,
            None => {
                // Forced convection inside the tube at the bulk temperature.
                let volumetric_flow = flow_rate_kg_s / properties::density(t_av);
                let velocity = volumetric_flow / (std::f64::consts::PI * d_i * d_i / 4.0);
                let re = velocity * d_i / properties::kinematic_viscosity(t_av);
                let h_forced = correlations::h_from_nu(
                    correlations::nu_forced_serpentine(
                        re,
                        properties::prandtl(t_av),
                        properties::prandtl(wall_temp),
                    ),
                    properties::conductivity(t_av),
                    d_i,
                );
                // Free convection outside, at film conditions between the
                // wall and the (end-of-step) sector water.
                let t_film = 0.5 * (wall_temp + t_end);
                let film_props = properties::bundle(t_film);
                let film_delta_t = (wall_temp - t_end).abs().max(FILM_DELTA_T_MIN_K);
                let gr = correlations::grashof_from_delta(d_o, film_delta_t, film_props);
                let h_free = correlations::h_from_nu(
                    correlations::nu_free_serpentine(gr, film_props.prandtl),
                    film_props.conductivity,
                    d_o,
                );
                correlations::overall_k(
                    h_forced,
                    segment.wall_thickness_m(),
                    segment.wall_conductivity,
                    h_free,
                )
            }
        };
        let effectiveness = 1.0 - (-overall_k * area / mcp).exp();
        // Implicit bath: the sector ends the step at the balance point of
        // its own capacity against the fluid stream.
        let t_end_new = (sector_temp_c + a * effectiveness * inlet_temp_c)
            / (1.0 + a * effectiveness);
        let t_out_new = inlet_temp_c - effectiveness * (inlet_temp_c - t_end_new);
        let change = (t_out_new - t_out).abs().max((t_end_new - t_end).abs());
        prev = (t_out, t_end);
        t_out = t_out_new;
        t_end = t_end_new;
        if change < cfg.tolerance_k {
            // Differentiate the converged pair of update equations with the
            // effectiveness held fixed: ∂t_end/∂t_in = aε/(1+aε) and
            // ∂t_out/∂t_in = (1−ε) + ε·∂t_end/∂t_in.
            let ae = a * effectiveness;
            let outlet_sensitivity =
                (1.0 - effectiveness) + effectiveness * ae / (1.0 + ae);
            return Ok(SegmentResult {
                outlet_temp_c: t_out,
                heat_flux_w: mcp * (inlet_temp_c - t_out),
                new_sector_temp_c: t_end,
                iterations_used: iteration,
                wall_temp_estimate_c: wall_temp,
                effectiveness,
                outlet_sensitivity,
            });
        }
    }
    Err(Error::Convergence {
        context: "serpentine segment heat exchange".into(),
        iterations: cfg.max_iterations as usize,
        history: vec![prev.0, prev.1, t_out, t_end],
    })
}

/// Result of passing the working fluid through every active segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    /// Tank state with all touched sectors updated.
    pub state: TankState,
    /// Fluid temperature leaving the lowest active segment, °C.
    pub outlet_temp_c: f64,
    /// Total heat delivered to the tank, W.
    pub heat_to_tank_w: f64,
    /// Worst per-segment iteration count in this pass.
    pub max_inner_iterations: u32,
    /// Derivative of the chain outlet temperature with respect to the chain
    /// inlet temperature: the product of the segment sensitivities.
    pub outlet_sensitivity: f64,
}

/// Feeds `inlet_temp_c` through the active segments from the top down;
/// each segment's outlet becomes the next segment's inlet.
///
/// Inactive segments pass the fluid through untouched. With no active
/// segments the state is returned unchanged and the outlet equals the inlet.
#[allow(clippy::too_many_arguments)]
pub fn chain_pass(
    inlet_temp_c: f64,
    layout: &SerpentineLayout,
    state: &TankState,
    flow_rate_kg_s: f64,
    dt_s: f64,
    sector_volume_m3: f64,
    fluid_specific_heat: f64,
    cfg: &IterationConfig,
    model: PropertyModel,
) -> Result<ChainOutcome> {
    let mut temps = state.sector_temps_c.clone();
    let mut fluid_temp = inlet_temp_c;
    let mut heat_to_tank_w = 0.0;
    let mut max_inner = 0;
    let mut outlet_sensitivity = 1.0;
    for segment in layout.active_segments() {
        let result = segment_exchange(
            fluid_temp,
            temps[segment.sector_index],
            segment,
            flow_rate_kg_s,
            dt_s,
            sector_volume_m3,
            fluid_specific_heat,
            cfg,
            model,
        )
        .map_err(|e| match e {
            Error::Convergence {
                context,
                iterations,
                history,
            } => Error::Convergence {
                context: format!("{context} (segment at sector {})", segment.sector_index),
                iterations,
                history,
            },
            other => other,
        })?;
        temps[segment.sector_index] = result.new_sector_temp_c;
        fluid_temp = result.outlet_temp_c;
        heat_to_tank_w += result.heat_flux_w;
        max_inner = max_inner.max(result.iterations_used);
        outlet_sensitivity *= result.outlet_sensitivity;
    }
    Ok(ChainOutcome {
        state: TankState {
            sector_temps_c: temps,
            timestamp_s: state.timestamp_s,
        },
        outlet_temp_c: fluid_temp,
        heat_to_tank_w,
        max_inner_iterations: max_inner,
        outlet_sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn nominal_segment() -> SerpentineSegment {
        SerpentineSegment {
            sector_index: 0,
            length_m: 2.5,
            inner_diameter_m: 0.016,
            outer_diameter_m: 0.018,
            wall_conductivity: 380.0,
        }
    }

    fn sector_volume() -> f64 {
        TankGeometry::default().sector_volume_m3()
    }

    const FLOW: f64 = 0.02;
    const CP: f64 = 4182.0;

    fn engine_cfg() -> IterationConfig {
        IterationConfig {
            tolerance_k: 1e-7,
            ..IterationConfig::default()
        }
    }

    #[test]
    fn zero_delta_t_exchanges_nothing() {
        let r = segment_exchange(
            50.0,
            50.0,
            &nominal_segment(),
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &engine_cfg(),
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert_abs_diff_eq!(r.outlet_temp_c, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.new_sector_temp_c, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.heat_flux_w, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_area_segment_is_identity() {
        let segment = SerpentineSegment {
            length_m: 0.0,
            ..nominal_segment()
        };
        let r = segment_exchange(
            70.0,
            20.0,
            &segment,
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &engine_cfg(),
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert_eq!(r.outlet_temp_c, 70.0);
        assert_eq!(r.new_sector_temp_c, 20.0);
        assert_eq!(r.heat_flux_w, 0.0);
        assert_eq!(r.effectiveness, 0.0);
    }

    #[test]
    fn forced_k_outlet_matches_closed_form_exponential() {
        // With an effectively infinite sector (the bath temperature cannot
        // move), the converged outlet must be the single-stream solution
        // T_out = T_bath + (T_in − T_bath)·exp(−K·F/(ṁ·c_p)).
        let segment = nominal_segment();
        let area = segment.exchange_area_m2();
        let mcp = FLOW * 4186.0;
        for ntu in [0.1, 1.0, 5.0] {
            let k = ntu * mcp / area;
            let cfg = IterationConfig {
                forced_overall_k: Some(k),
                tolerance_k: 1e-9,
                ..IterationConfig::default()
            };
            let r = segment_exchange(
                80.0,
                20.0,
                &segment,
                FLOW,
                600.0,
                1e9,
                4186.0,
                &cfg,
                PropertyModel::ConstantDensityHeat,
            )
            .unwrap();
            let expected = 20.0 + 60.0 * (-ntu).exp();
            assert_relative_eq!(r.outlet_temp_c - 20.0, expected - 20.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn cold_stream_reverses_the_flux_sign() {
        let r = segment_exchange(
            15.0,
            60.0,
            &nominal_segment(),
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &engine_cfg(),
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert!(r.heat_flux_w < 0.0);
        assert!(r.new_sector_temp_c < 60.0);
        assert!(r.outlet_temp_c > 15.0);
        assert!(r.outlet_temp_c < 60.0);
    }

    #[test]
    fn outlet_never_overshoots_equilibrium() {
        let r = segment_exchange(
            80.0,
            20.0,
            &nominal_segment(),
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &engine_cfg(),
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert!(r.outlet_temp_c > 20.0 && r.outlet_temp_c < 80.0);
        assert!(r.new_sector_temp_c > 20.0 && r.new_sector_temp_c < 80.0);
        assert!(r.outlet_temp_c >= r.new_sector_temp_c);
        assert!((0.0..=1.0).contains(&r.effectiveness));
    }

    #[test]
    fn iteration_budget_is_modest_under_nominal_conditions() {
        for delta in [1.0, 5.0, 20.0, 40.0, 60.0] {
            let r = segment_exchange(
                20.0 + delta,
                20.0,
                &nominal_segment(),
                FLOW,
                600.0,
                sector_volume(),
                CP,
                &engine_cfg(),
                PropertyModel::TemperatureDependent,
            )
            .unwrap();
            assert!(
                r.iterations_used <= 10,
                "ΔT = {delta}: {} iterations",
                r.iterations_used
            );
        }
    }

    #[test]
    fn fixed_point_is_independent_of_initial_effectiveness() {
        let run = |eps0: f64| {
            segment_exchange(
                70.0,
                25.0,
                &nominal_segment(),
                FLOW,
                600.0,
                sector_volume(),
                CP,
                &IterationConfig {
                    initial_effectiveness: eps0,
                    tolerance_k: 1e-9,
                    ..IterationConfig::default()
                },
                PropertyModel::TemperatureDependent,
            )
            .unwrap()
        };
        let mid = run(0.6);
        for eps0 in [0.5, 0.7] {
            let r = run(eps0);
            assert_abs_diff_eq!(r.outlet_temp_c, mid.outlet_temp_c, epsilon = 1e-6);
            assert_abs_diff_eq!(r.new_sector_temp_c, mid.new_sector_temp_c, epsilon = 1e-6);
        }
    }

    #[test]
    fn exhausted_iteration_budget_reports_last_iterates() {
        let cfg = IterationConfig {
            tolerance_k: 0.0,
            max_iterations: 3,
            ..IterationConfig::default()
        };
        let err = segment_exchange(
            70.0,
            20.0,
            &nominal_segment(),
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &cfg,
            PropertyModel::TemperatureDependent,
        )
        .unwrap_err();
        match err {
            Error::Convergence {
                iterations,
                history,
                ..
            } => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("expected convergence error, got {other}"),
        }
    }

    proptest! {
        #[test]
        fn longer_segments_never_exchange_less(
            t_in in 30.0..90.0f64,
            t_sec in 10.0..29.0f64,
            len in 0.5..5.0f64,
            factor in 1.0..3.0f64,
        ) {
            let base = SerpentineSegment { length_m: len, ..nominal_segment() };
            let longer = SerpentineSegment { length_m: len * factor, ..nominal_segment() };
            let cfg = engine_cfg();
            let v = sector_volume();
            let q_base = segment_exchange(
                t_in, t_sec, &base, FLOW, 600.0, v, CP, &cfg,
                PropertyModel::TemperatureDependent,
            ).unwrap().heat_flux_w;
            let q_longer = segment_exchange(
                t_in, t_sec, &longer, FLOW, 600.0, v, CP, &cfg,
                PropertyModel::TemperatureDependent,
            ).unwrap().heat_flux_w;
            prop_assert!(q_longer.abs() >= q_base.abs() - 1e-9);
        }

        #[test]
        fn segment_outcome_stays_bracketed(
            t_in in 5.0..95.0f64,
            t_sec in 5.0..95.0f64,
        ) {
            let r = segment_exchange(
                t_in, t_sec, &nominal_segment(), FLOW, 600.0, sector_volume(), CP,
                &engine_cfg(), PropertyModel::TemperatureDependent,
            ).unwrap();
            let lo = t_in.min(t_sec) - 1e-9;
            let hi = t_in.max(t_sec) + 1e-9;
            prop_assert!(r.outlet_temp_c >= lo && r.outlet_temp_c <= hi);
            prop_assert!(r.new_sector_temp_c >= lo && r.new_sector_temp_c <= hi);
            prop_assert!((0.0..=1.0).contains(&r.effectiveness));
            // Flux sign follows the driving difference.
            if t_in > t_sec {
                prop_assert!(r.heat_flux_w >= 0.0);
            } else if t_in < t_sec {
                prop_assert!(r.heat_flux_w <= 0.0);
            }
        }
    }

    fn bottom_layout() -> SerpentineLayout {
        SerpentineLayout::from_placement(
            Placement::Bottom,
            &TankGeometry::default(),
            TubeSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn placement_bands_map_to_sector_thirds() {
        assert_eq!(Placement::Bottom.active_sectors(12), vec![0, 1, 2, 3]);
        assert_eq!(Placement::Middle.active_sectors(12), vec![4, 5, 6, 7]);
        assert_eq!(Placement::Top.active_sectors(12), vec![8, 9, 10, 11]);
        assert_eq!(
            Placement::BottomAndTop.active_sectors(12),
            vec![0, 1, 2, 3, 8, 9, 10, 11]
        );
        assert_eq!(Placement::All.active_sectors(12).len(), 12);
    }

    #[test]
    fn placement_round_trips_through_strings() {
        for p in Placement::ALL {
            let parsed: Placement = p.to_string().parse().unwrap();
            assert_eq!(parsed, p);
        }
        assert!("sideways".parse::<Placement>().is_err());
    }

    #[test]
    fn layout_from_placement_is_in_flow_order_with_band_lengths() {
        let layout = bottom_layout();
        assert_eq!(layout.segments().len(), 12);
        let indices: Vec<usize> = layout.segments().iter().map(|s| s.sector_index).collect();
        assert_eq!(indices, (0..12).rev().collect::<Vec<_>>());
        for s in layout.segments() {
            assert_relative_eq!(s.length_m, 2.5, max_relative = 1e-12);
        }
        assert_eq!(layout.lowest_active_sector(), Some(0));
        let active: Vec<usize> = layout.active_segments().map(|s| s.sector_index).collect();
        assert_eq!(active, vec![3, 2, 1, 0]);
    }

    #[test]
    fn layout_rejects_out_of_order_segments() {
        let a = SerpentineSegment {
            sector_index: 2,
            ..nominal_segment()
        };
        let b = SerpentineSegment {
            sector_index: 5,
            ..nominal_segment()
        };
        let err = SerpentineLayout::new(vec![a, b], vec![true, true]).unwrap_err();
        assert!(err.to_string().contains("flow order"));
    }

    #[test]
    fn inactive_chain_is_identity() {
        let layout = SerpentineLayout::new(
            vec![nominal_segment()],
            vec![false],
        )
        .unwrap();
        let state = TankState::uniform(12, 25.0);
        let out = chain_pass(
            80.0,
            &layout,
            &state,
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &engine_cfg(),
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert_eq!(out.state.sector_temps_c, state.sector_temps_c);
        assert_eq!(out.outlet_temp_c, 80.0);
        assert_eq!(out.heat_to_tank_w, 0.0);
    }

    #[test]
    fn single_segment_chain_equals_one_exchange() {
        let segment = SerpentineSegment {
            sector_index: 4,
            ..nominal_segment()
        };
        let layout = SerpentineLayout::new(vec![segment], vec![true]).unwrap();
        let state = TankState::uniform(12, 22.0);
        let cfg = engine_cfg();
        let chain = chain_pass(
            75.0,
            &layout,
            &state,
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &cfg,
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        let single = segment_exchange(
            75.0,
            22.0,
            &segment,
            FLOW,
            600.0,
            sector_volume(),
            CP,
            &cfg,
            PropertyModel::TemperatureDependent,
        )
        .unwrap();
        assert_eq!(chain.outlet_temp_c, single.outlet_temp_c);
        assert_eq!(chain.state.sector_temps_c[4], single.new_sector_temp_c);
        assert_eq!(chain.heat_to_tank_w, single.heat_flux_w);
    }

    #[test]
    fn chain_outlets_decrease_along_the_flow_path() {
        let layout = bottom_layout();
        let state = TankState::uniform(12, 15.0);
        let mut inlet = 70.0;
        let mut temps = state.sector_temps_c.clone();
        let cfg = engine_cfg();
        let mut outlets = Vec::new();
        for segment in layout.active_segments() {
            let r = segment_exchange(
                inlet,
                temps[segment.sector_index],
                segment,
                FLOW,
                600.0,
                sector_volume(),
                CP,
                &cfg,
                PropertyModel::TemperatureDependent,
            )
            .unwrap();
            temps[segment.sector_index] = r.new_sector_temp_c;
            outlets.push(r.outlet_temp_c);
            inlet = r.outlet_temp_c;
        }
        for pair in outlets.windows(2) {
            assert!(pair[1] < pair[0], "outlets must strictly decrease: {outlets:?}");
        }
    }

    #[test]
    fn chain_energy_closes_between_fluid_and_tank() {
        // Constant capacity makes the balance exact: fluid enthalpy drop
        // over the step equals the summed sector enthalpy gains.
        let model = PropertyModel::ConstantDensityHeat;
        let cp = 4186.0;
        let layout = bottom_layout();
        let state = TankState::uniform(12, 18.0);
        let dt = 600.0;
        let v = sector_volume();
        let out = chain_pass(
            65.0, &layout, &state, FLOW, dt, v, cp,
            &engine_cfg(), model,
        )
        .unwrap();
        let fluid_side = FLOW * cp * (65.0 - out.outlet_temp_c) * dt;
        let tank_side: f64 = out
            .state
            .sector_temps_c
            .iter()
            .zip(&state.sector_temps_c)
            .map(|(after, before)| model.volumetric_heat_capacity(0.0) * v * (after - before))
            .sum();
        assert_relative_eq!(fluid_side, tank_side, max_relative = 1e-6);
        assert_relative_eq!(out.heat_to_tank_w * dt, fluid_side, max_relative = 1e-9);
    }
}

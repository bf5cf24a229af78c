//! JSON configuration files.
//!
//! The schema is strict (unknown fields are errors, so typos cannot silently
//! fall back to defaults) but every field is optional: `{}` is the complete
//! nominal rig. Sections mirror the physical system — `tank`, `serpentine`,
//! `collector`, `pump`, `loop`, `simulation`, `iteration`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collector::{CollectorParams, OuterLoopConfig, PumpControl};
use crate::correlations::CorrelationChoice;
use crate::engine::{ConsumptionSchedule, InitialCondition, SimulationConfig};
use crate::error::{Error, Result};
use crate::properties::PropertyModel;
use crate::serpentine::{IterationConfig, Placement, TubeSpec};
use crate::tank::TankGeometry;

/// Top-level configuration file. Every section defaults to the nominal rig.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    /// Storage tank geometry and insulation.
    pub tank: TankSection,
    /// Serpentine coil dimensions and placement.
    pub serpentine: SerpentineSection,
    /// Flat-plate collector parameters.
    pub collector: CollectorSection,
    /// Pump controller.
    pub pump: PumpControl,
    /// Collector-loop hydraulics.
    #[serde(rename = "loop")]
    pub collector_loop: LoopSection,
    /// Horizon, stepping, and model choices.
    pub simulation: SimulationSection,
    /// Solver iteration controls.
    pub iteration: IterationSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from(&SimulationConfig::default())
    }
}

/// `tank` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TankSection {
    /// Internal height, m.
    pub height_m: f64,
    /// Internal diameter, m.
    pub diameter_m: f64,
    /// Number of vertical sectors.
    pub sector_count: usize,
    /// Envelope loss coefficient, W/(m²·K).
    pub loss_coeff_w_per_m2_k: f64,
}

impl Default for TankSection {
    fn default() -> Self {
        let g = TankGeometry::default();
        TankSection {
            height_m: g.height_m,
            diameter_m: g.internal_diameter_m,
            sector_count: g.sector_count,
            loss_coeff_w_per_m2_k: g.insulation_loss_coeff,
        }
    }
}

/// `serpentine` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SerpentineSection {
    /// Which coil band(s) are active.
    pub placement: Placement,
    /// Tube inner diameter, m.
    pub inner_diameter_m: f64,
    /// Tube outer diameter, m.
    pub outer_diameter_m: f64,
    /// Tube wall conductivity, W/(m·K).
    pub wall_conductivity_w_per_m_k: f64,
    /// Developed coil length per band, m.
    pub coil_length_m: f64,
}

impl Default for SerpentineSection {
    fn default() -> Self {
        let t = TubeSpec::default();
        SerpentineSection {
            placement: Placement::default(),
            inner_diameter_m: t.inner_diameter_m,
            outer_diameter_m: t.outer_diameter_m,
            wall_conductivity_w_per_m_k: t.wall_conductivity,
            coil_length_m: t.coil_length_m,
        }
    }
}

/// `collector` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectorSection {
    /// Aperture area, m².
    pub area_m2: f64,
    /// Heat-removal factor F_R.
    pub heat_removal_factor: f64,
    /// Transmittance–absorptance product τα.
    pub transmittance_absorptance: f64,
    /// Loss coefficient U_L, W/(m²·K).
    pub loss_coeff_w_per_m2_k: f64,
}

impl Default for CollectorSection {
    fn default() -> Self {
        let c = CollectorParams::default();
        CollectorSection {
            area_m2: c.area_m2,
            heat_removal_factor: c.heat_removal_factor,
            transmittance_absorptance: c.transmittance_absorptance,
            loss_coeff_w_per_m2_k: c.loss_coeff,
        }
    }
}

/// `loop` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSection {
    /// Mass flow, kg/s.
    pub flow_rate_kg_s: f64,
    /// Connecting-pipe loss per leg, W/K.
    pub pipe_loss_w_per_k: f64,
}

impl Default for LoopSection {
    fn default() -> Self {
        let c = SimulationConfig::default();
        LoopSection {
            flow_rate_kg_s: c.flow_rate_kg_s,
            pipe_loss_w_per_k: c.pipe_loss_w_per_k,
        }
    }
}

/// `simulation.initial_condition` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConditionValue {
    /// Uniform at the mains water temperature.
    NetWater,
    /// Uniform at the given temperature, °C.
    Uniform(f64),
    /// Per-sector temperatures, bottom first, °C.
    Profile(Vec<f64>),
}

impl From<&InitialCondition> for InitialConditionValue {
    fn from(ic: &InitialCondition) -> Self {
        match ic {
            InitialCondition::NetWaterTemperature => InitialConditionValue::NetWater,
            InitialCondition::Uniform(t) => InitialConditionValue::Uniform(*t),
            InitialCondition::Profile(v) => InitialConditionValue::Profile(v.clone()),
        }
    }
}

impl From<InitialConditionValue> for InitialCondition {
    fn from(v: InitialConditionValue) -> Self {
        match v {
            InitialConditionValue::NetWater => InitialCondition::NetWaterTemperature,
            InitialConditionValue::Uniform(t) => InitialCondition::Uniform(t),
            InitialConditionValue::Profile(p) => InitialCondition::Profile(p),
        }
    }
}

/// `simulation` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Time step, s.
    pub dt_s: f64,
    /// Lead-in days integrated but not reported.
    pub warmup_days: u32,
    /// Reported days.
    pub reported_days: u32,
    /// Inter-layer mixing correlation.
    pub correlation: CorrelationChoice,
    /// Water property treatment for capacity terms.
    pub property_model: PropertyModel,
    /// Tank state at the start of the run.
    pub initial_condition: InitialConditionValue,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let c = SimulationConfig::default();
        SimulationSection {
            dt_s: c.dt_s,
            warmup_days: c.warmup_days,
            reported_days: c.reported_days,
            correlation: c.correlation,
            property_model: c.property_model,
            initial_condition: (&c.initial_condition).into(),
        }
    }
}

/// `iteration` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationSection {
    /// Starting guess for the segment exchange effectiveness.
    pub initial_effectiveness: f64,
    /// Wall-temperature blend coefficient.
    pub wall_temp_blend: f64,
    /// Segment fixed-point tolerance, K.
    pub segment_tolerance_k: f64,
    /// Segment iteration budget.
    pub segment_max_iterations: u32,
    /// Circulation fixed-point tolerance, K.
    pub circulation_tolerance_k: f64,
    /// Circulation pass budget.
    pub circulation_max_passes: u32,
}

impl Default for IterationSection {
    fn default() -> Self {
        let c = SimulationConfig::default();
        IterationSection {
            initial_effectiveness: c.segment_iteration.initial_effectiveness,
            wall_temp_blend: c.segment_iteration.wall_temp_blend,
            segment_tolerance_k: c.segment_iteration.tolerance_k,
            segment_max_iterations: c.segment_iteration.max_iterations,
            circulation_tolerance_k: c.circulation.tolerance_k,
            circulation_max_passes: c.circulation.max_passes,
        }
    }
}

impl ConfigFile {
    /// Converts the file into a validated [`SimulationConfig`], collecting
    /// every violation (geometry, collector, pump, solver controls) into one
    /// error.
    pub fn into_simulation(&self) -> Result<SimulationConfig> {
        let mut violations = Vec::new();
        let geometry = match TankGeometry::new(
            self.tank.height_m,
            self.tank.diameter_m,
            self.tank.sector_count,
            self.tank.loss_coeff_w_per_m2_k,
        ) {
            Ok(g) => g,
            Err(e) => {
                absorb(&mut violations, e);
                // Continue with the nominal tank so the remaining sections
                // still get checked; the collected violations fail the call.
                TankGeometry::default()
            }
        };
        let config = SimulationConfig {
            geometry,
            placement: self.serpentine.placement,
            tube: TubeSpec {
                inner_diameter_m: self.serpentine.inner_diameter_m,
                outer_diameter_m: self.serpentine.outer_diameter_m,
                wall_conductivity: self.serpentine.wall_conductivity_w_per_m_k,
                coil_length_m: self.serpentine.coil_length_m,
            },
            collector: CollectorParams {
                area_m2: self.collector.area_m2,
                heat_removal_factor: self.collector.heat_removal_factor,
                transmittance_absorptance: self.collector.transmittance_absorptance,
                loss_coeff: self.collector.loss_coeff_w_per_m2_k,
            },
            pump: self.pump,
            flow_rate_kg_s: self.collector_loop.flow_rate_kg_s,
            pipe_loss_w_per_k: self.collector_loop.pipe_loss_w_per_k,
            dt_s: self.simulation.dt_s,
            warmup_days: self.simulation.warmup_days,
            reported_days: self.simulation.reported_days,
            correlation: self.simulation.correlation,
            property_model: self.simulation.property_model,
            schedule: ConsumptionSchedule::default(),
            initial_condition: self.simulation.initial_condition.clone().into(),
            segment_iteration: IterationConfig {
                initial_effectiveness: self.iteration.initial_effectiveness,
                wall_temp_blend: self.iteration.wall_temp_blend,
                tolerance_k: self.iteration.segment_tolerance_k,
                max_iterations: self.iteration.segment_max_iterations,
                forced_overall_k: None,
            },
            circulation: OuterLoopConfig {
                tolerance_k: self.iteration.circulation_tolerance_k,
                max_passes: self.iteration.circulation_max_passes,
            },
        };
        if let Err(e) = config.validate() {
            absorb(&mut violations, e);
        }
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(Error::validations(violations))
        }
    }
}

impl From<&SimulationConfig> for ConfigFile {
    fn from(c: &SimulationConfig) -> Self {
        ConfigFile {
            tank: TankSection {
                height_m: c.geometry.height_m,
                diameter_m: c.geometry.internal_diameter_m,
                sector_count: c.geometry.sector_count,
                loss_coeff_w_per_m2_k: c.geometry.insulation_loss_coeff,
            },
            serpentine: SerpentineSection {
                placement: c.placement,
                inner_diameter_m: c.tube.inner_diameter_m,
                outer_diameter_m: c.tube.outer_diameter_m,
                wall_conductivity_w_per_m_k: c.tube.wall_conductivity,
                coil_length_m: c.tube.coil_length_m,
            },
            collector: CollectorSection {
                area_m2: c.collector.area_m2,
                heat_removal_factor: c.collector.heat_removal_factor,
                transmittance_absorptance: c.collector.transmittance_absorptance,
                loss_coeff_w_per_m2_k: c.collector.loss_coeff,
            },
            pump: c.pump,
            collector_loop: LoopSection {
                flow_rate_kg_s: c.flow_rate_kg_s,
                pipe_loss_w_per_k: c.pipe_loss_w_per_k,
            },
            simulation: SimulationSection {
                dt_s: c.dt_s,
                warmup_days: c.warmup_days,
                reported_days: c.reported_days,
                correlation: c.correlation,
                property_model: c.property_model,
                initial_condition: (&c.initial_condition).into(),
            },
            iteration: IterationSection {
                initial_effectiveness: c.segment_iteration.initial_effectiveness,
                wall_temp_blend: c.segment_iteration.wall_temp_blend,
                segment_tolerance_k: c.segment_iteration.tolerance_k,
                segment_max_iterations: c.segment_iteration.max_iterations,
                circulation_tolerance_k: c.circulation.tolerance_k,
                circulation_max_passes: c.circulation.max_passes,
            },
        }
    }
}

fn absorb(violations: &mut Vec<String>, e: Error) {
    match e {
        Error::Validation { violations: v } => violations.extend(v),
        other => violations.push(other.to_string()),
    }
}

/// Parses a configuration from JSON text. `{}` is the nominal rig.
pub fn parse_config(json: &str) -> Result<SimulationConfig> {
    let file: ConfigFile = serde_json::from_str(json)
        .map_err(|e| Error::validation(format!("config parse error: {e}")))?;
    file.into_simulation()
}

/// Loads a configuration from a JSON file.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading config file {}", path.display()), e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Validation { violations } => Error::validations(
            violations
                .into_iter()
                .map(|v| format!("config file {}: {v}", path.display()))
                .collect(),
        ),
        other => other,
    })
}

/// The nominal configuration as pretty JSON.
pub fn default_config_json() -> String {
    serde_json::to_string_pretty(&ConfigFile::default()).expect("default config serializes")
}

/// Serializes a configuration as pretty JSON.
pub fn config_to_json(config: &SimulationConfig) -> String {
    serde_json::to_string_pretty(&ConfigFile::from(config)).expect("config serializes")
}

/// Writes the nominal configuration to a JSON file.
pub fn write_default_config(path: &Path) -> Result<()> {
    std::fs::write(path, default_config_json() + "\n")
        .map_err(|e| Error::io(format!("writing config file {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_nominal_rig() {
        let config = parse_config("{}").unwrap();
        assert_eq!(config, SimulationConfig::default());
    }

    #[test]
    fn default_json_round_trips_exactly() {
        let json = default_config_json();
        let config = parse_config(&json).unwrap();
        assert_eq!(config, SimulationConfig::default());
        assert_eq!(config_to_json(&config), json);
    }

    #[test]
    fn unknown_fields_are_rejected_by_name() {
        let err = parse_config(r#"{"tank": {"hieght_m": 2.0}}"#).unwrap_err();
        assert!(err.to_string().contains("hieght_m"), "{err}");
    }

    #[test]
    fn partial_overrides_keep_the_rest_default() {
        let config =
            parse_config(r#"{"simulation": {"reported_days": 2}, "loop": {"flow_rate_kg_s": 0.03}}"#)
                .unwrap();
        assert_eq!(config.reported_days, 2);
        assert_eq!(config.flow_rate_kg_s, 0.03);
        assert_eq!(config.warmup_days, 5);
        assert_eq!(config.geometry, SimulationConfig::default().geometry);
    }

    #[test]
    fn every_violation_is_listed_at_once() {
        let err = parse_config(
            r#"{
                "tank": {"height_m": -1.0},
                "collector": {"area_m2": 0.0},
                "loop": {"flow_rate_kg_s": -0.02}
            }"#,
        )
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("height"), "{text}");
        assert!(text.contains("collector area"), "{text}");
        assert!(text.contains("flow rate"), "{text}");
    }

    #[test]
    fn pump_and_placement_variants_parse() {
        let config = parse_config(
            r#"{
                "pump": {"differential_on_off": {"on_delta_k": 8.0, "off_delta_k": 3.0}},
                "serpentine": {"placement": "bottom+top"}
            }"#,
        )
        .unwrap();
        assert_eq!(
            config.pump,
            PumpControl::DifferentialOnOff {
                on_delta_k: 8.0,
                off_delta_k: 3.0
            }
        );
        assert_eq!(config.placement, Placement::BottomAndTop);
    }

    #[test]
    fn initial_condition_variants_parse() {
        let uniform =
            parse_config(r#"{"simulation": {"initial_condition": {"uniform": 30.0}}}"#).unwrap();
        assert_eq!(uniform.initial_condition, InitialCondition::Uniform(30.0));
        let profile = parse_config(
            r#"{"simulation": {"initial_condition": {"profile":
                [12,12,12,12,12,12,12,12,12,12,12,40]}}}"#,
        )
        .unwrap();
        assert!(matches!(profile.initial_condition, InitialCondition::Profile(_)));
        let net = parse_config(r#"{"simulation": {"initial_condition": "net_water"}}"#).unwrap();
        assert_eq!(net.initial_condition, InitialCondition::NetWaterTemperature);
    }

    #[test]
    fn file_round_trip_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        write_default_config(&path).unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config, SimulationConfig::default());
        let err = load_config(&dir.path().join("missing.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

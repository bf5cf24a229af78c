//! Thermophysical properties of liquid water.
//!
//! All correlations in this library need density, specific heat, thermal
//! conductivity, kinematic viscosity, thermal expansion coefficient, and the
//! Prandtl number as smooth functions of temperature. This module provides
//! them as polynomial fits to standard reference tables for saturated liquid
//! water at atmospheric pressure, valid over 0–100 °C with fit errors well
//! under 2% at every tabulated point.
//!
//! The collector working fluid is modeled as pure water: antifreeze mixtures
//! are an extension point (see [`FluidKind::WorkingFluid`]) but no glycol
//! property data is bundled, so a non-zero glycol fraction is rejected.
//!
//! Everything here is pure and deterministic: the same inputs always produce
//! bit-identical outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of the supported temperature range, °C.
pub const MIN_TEMPERATURE_C: f64 = 0.0;
/// Upper bound of the supported temperature range, °C.
pub const MAX_TEMPERATURE_C: f64 = 100.0;

/// Liquid water crosses its density maximum near 4 °C, where the thermal
/// expansion coefficient changes sign. Buoyancy correlations break down with
/// β ≤ 0, so expansion-coefficient evaluation is clamped to this floor.
const MIN_EXPANSION_TEMPERATURE_C: f64 = 5.0;

/// Density rational fit, numerator coefficients, highest degree first.
/// ρ(t) = num(t) / (1 + DENSITY_DEN_SLOPE·t) with t in °C, ρ in kg/m³.
const DENSITY_NUM: [f64; 6] = [
    -280.54253e-12,
    105.56302e-9,
    -46.170461e-6,
    -7.9870401e-3,
    16.945176,
    999.83952,
];
const DENSITY_DEN_SLOPE: f64 = 16.87985e-3;

/// Specific heat quartic fit, J/(kg·K), highest degree first.
const SPECIFIC_HEAT: [f64; 5] = [
    3.347732269526e-06,
    -8.213004546295e-04,
    7.876423407586e-02,
    -3.011809892346e+00,
    4.216687031809e+03,
];

/// Thermal conductivity cubic fit, W/(m·K), highest degree first.
const CONDUCTIVITY: [f64; 4] = [
    -1.010871491420e-08,
    -7.939664708544e-06,
    2.073423655758e-03,
    5.605000188218e-01,
];

/// Kinematic viscosity quintic fit of ln(ν/(m²/s)), highest degree first.
const LN_KINEMATIC_VISCOSITY: [f64; 6] = [
    -5.057375598408e-11,
    1.818807007573e-08,
    -2.966135683050e-06,
    3.296166507039e-04,
    -3.450832381271e-02,
    -1.323250930816e+01,
];

/// Property bundle for liquid water at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    /// Density ρ, kg/m³.
    pub density: f64,
    /// Specific heat capacity c_p, J/(kg·K).
    pub specific_heat: f64,
    /// Thermal conductivity λ, W/(m·K).
    pub conductivity: f64,
    /// Kinematic viscosity ν, m²/s.
    pub kinematic_viscosity: f64,
    /// Volumetric thermal expansion coefficient β, 1/K.
    pub expansion_coeff: f64,
    /// Prandtl number ν·ρ·c_p/λ, dimensionless.
    pub prandtl: f64,
}

/// Which circuit a fluid sample belongs to.
///
/// Both variants currently evaluate as pure water; the glycol fraction exists
/// so that an antifreeze working fluid can be added later without an API
/// break.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum FluidKind {
    /// Water stored in the tank.
    #[default]
    TankWater,
    /// Fluid circulating through the collector loop.
    WorkingFluid {
        /// Glycol mass fraction in [0, 1]. Only 0 (pure water) is supported.
        glycol_fraction: f64,
    },
}

impl FluidKind {
    /// Collector working fluid with the default (pure water) composition.
    pub fn working_fluid() -> Self {
        FluidKind::WorkingFluid {
            glycol_fraction: 0.0,
        }
    }
}

/// Evaluates the full property bundle at a temperature.
///
/// # Errors
///
/// Returns a validation error when the temperature lies outside 0–100 °C or
/// when `kind` carries a non-zero glycol fraction (no mixture data is
/// bundled).
pub fn eval_properties(kind: FluidKind, temperature_c: f64) -> Result<FluidProperties> {
    let mut violations = Vec::new();
    if let FluidKind::WorkingFluid { glycol_fraction } = kind {
        if glycol_fraction != 0.0 {
            violations.push(format!(
                "glycol_fraction {glycol_fraction} is not supported: no glycol property data \
                 is bundled, set glycol_fraction = 0 for pure water"
            ));
        }
    }
    if !(MIN_TEMPERATURE_C..=MAX_TEMPERATURE_C).contains(&temperature_c) {
        violations.push(format!(
            "temperature {temperature_c} °C is outside the supported range \
             {MIN_TEMPERATURE_C}–{MAX_TEMPERATURE_C} °C"
        ));
    }
    if !violations.is_empty() {
        return Err(Error::validations(violations));
    }
    Ok(bundle(temperature_c))
}

/// Evaluates all six properties at once, clamping into the supported range.
pub(crate) fn bundle(temperature_c: f64) -> FluidProperties {
    FluidProperties {
        density: density(temperature_c),
        specific_heat: specific_heat(temperature_c),
        conductivity: conductivity(temperature_c),
        kinematic_viscosity: kinematic_viscosity(temperature_c),
        expansion_coeff: expansion_coeff(temperature_c),
        prandtl: prandtl(temperature_c),
    }
}

/// Density ρ(T), kg/m³.
pub(crate) fn density(temperature_c: f64) -> f64 {
    let t = clamp_range(temperature_c);
    poly(&DENSITY_NUM, t) / (1.0 + DENSITY_DEN_SLOPE * t)
}

/// Specific heat c_p(T), J/(kg·K).
pub(crate) fn specific_heat(temperature_c: f64) -> f64 {
    poly(&SPECIFIC_HEAT, clamp_range(temperature_c))
}

/// Thermal conductivity λ(T), W/(m·K).
pub(crate) fn conductivity(temperature_c: f64) -> f64 {
    poly(&CONDUCTIVITY, clamp_range(temperature_c))
}

/// Kinematic viscosity ν(T), m²/s.
pub(crate) fn kinematic_viscosity(temperature_c: f64) -> f64 {
    poly(&LN_KINEMATIC_VISCOSITY, clamp_range(temperature_c)).exp()
}

/// Thermal expansion coefficient β(T) = −ρ′(T)/ρ(T), 1/K.
///
/// Evaluation is clamped to ≥ 5 °C so the result stays strictly positive
/// (see [`MIN_EXPANSION_TEMPERATURE_C`]).
pub(crate) fn expansion_coeff(temperature_c: f64) -> f64 {
    let t = temperature_c.clamp(MIN_EXPANSION_TEMPERATURE_C, MAX_TEMPERATURE_C);
    let (num, num_prime) = poly_with_derivative(&DENSITY_NUM, t);
    let den = 1.0 + DENSITY_DEN_SLOPE * t;
    // ρ = num/den, so β = −ρ′/ρ = den′/den − num′/num.
    DENSITY_DEN_SLOPE / den - num_prime / num
}

/// Prandtl number Pr(T) = ν·ρ·c_p/λ, dimensionless.
pub(crate) fn prandtl(temperature_c: f64) -> f64 {
    let t = clamp_range(temperature_c);
    kinematic_viscosity(t) * density(t) * specific_heat(t) / conductivity(t)
}

fn clamp_range(temperature_c: f64) -> f64 {
    temperature_c.clamp(MIN_TEMPERATURE_C, MAX_TEMPERATURE_C)
}

/// Horner evaluation of a polynomial given coefficients highest degree first.
fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Simultaneous Horner evaluation of a polynomial and its derivative.
fn poly_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut derivative = 0.0;
    for &c in coeffs {
        derivative = derivative * x + value;
        value = value * x + c;
    }
    (value, derivative)
}

/// Selects between fully temperature-dependent properties and the
/// fixed-capacity variant used for energy-audit verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyModel {
    /// All six properties vary with temperature (the physical model).
    #[default]
    TemperatureDependent,
    /// Density and specific heat are frozen at 1000 kg/m³ and 4186 J/(kg·K)
    /// so that stored thermal energy is an exact linear functional of
    /// temperature; transport properties (λ, ν, β, Pr) remain
    /// temperature-dependent.
    ConstantDensityHeat,
}

impl PropertyModel {
    /// Density under this model, kg/m³.
    pub fn density(self, temperature_c: f64) -> f64 {
        match self {
            PropertyModel::TemperatureDependent => density(temperature_c),
            PropertyModel::ConstantDensityHeat => 1000.0,
        }
    }

    /// Specific heat under this model, J/(kg·K).
    pub fn specific_heat(self, temperature_c: f64) -> f64 {
        match self {
            PropertyModel::TemperatureDependent => specific_heat(temperature_c),
            PropertyModel::ConstantDensityHeat => 4186.0,
        }
    }

    /// Volumetric heat capacity ρ·c_p under this model, J/(m³·K).
    pub fn volumetric_heat_capacity(self, temperature_c: f64) -> f64 {
        self.density(temperature_c) * self.specific_heat(temperature_c)
    }
}

//! Dimensionless groups and Nusselt-number correlations.
//!
//! Four empirical correlations drive every heat-transfer coefficient in the
//! model: free convection around a horizontal serpentine tube, forced
//! convection inside the tube, and two alternatives (plus an
//! intensive-mixing variant) for buoyant exchange between stacked tank
//! layers. Each correlation is applied exactly as published; when inputs
//! fall outside a correlation's stated validity window the function logs a
//! warning and proceeds, because aborting mid-simulation would be worse than
//! an auditable extrapolation. Each such warning fires once per process —
//! see [`warn_once`].
//!
//! All functions are pure. Temperatures are °C, lengths are m.

use serde::{Deserialize, Serialize};

use crate::properties::FluidProperties;

/// Logs a validity warning for this call site only once per process.
///
/// The correlations run inside per-segment solver loops, so a single
/// out-of-window operating point (a cold start-up keeps tube flow below
/// Re = 2300, a nearly uniform tank drives layer Rayleigh numbers toward
/// zero) would otherwise repeat the same line thousands of times per
/// simulated day. The first occurrence carries sample values; the suffix
/// marks the suppression.
macro_rules! warn_once {
    ($($arg:tt)*) => {{
        static SITE: std::sync::Once = std::sync::Once::new();
        SITE.call_once(|| {
            log::warn!(
                "{} (repeats of this warning are suppressed)",
                format_args!($($arg)*)
            );
        });
    }};
}

/// Standard gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Reynolds number below which the forced-convection correlation is applied
/// outside its developed-turbulence range (logged, not fatal).
const FORCED_RE_FLOOR: f64 = 2300.0;

/// Bundle of the dimensionless numbers describing one heat-transfer site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessState {
    /// Grashof number, ≥ 0.
    pub grashof: f64,
    /// Prandtl number, ≥ 0.
    pub prandtl: f64,
    /// Reynolds number, ≥ 0 (0 when no forced flow is present).
    pub reynolds: f64,
    /// Rayleigh number; always exactly `grashof * prandtl`.
    pub rayleigh: f64,
}

impl DimensionlessState {
    /// Builds the bundle, deriving the Rayleigh number as Gr·Pr.
    pub fn new(grashof: f64, prandtl: f64, reynolds: f64) -> Self {
        DimensionlessState {
            grashof,
            prandtl,
            reynolds,
            rayleigh: grashof * prandtl,
        }
    }
}

/// Which layer-exchange correlation the tank convection step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationChoice {
    /// Turbulent free convection in a vertical water-filled cylinder:
    /// Nu = 0.0556·Ra^(1/3). Valid for Ra ∈ [10⁸, 2.26·10¹¹], Pr ∈ [5.7, 6.65].
    VerticalCylinder,
    /// Combined laminar/turbulent free convection:
    /// Nu = 0.11·Ra^0.33 + Ra^0.1. Valid for Ra ∈ [10⁻⁷, 10¹²]. The default:
    /// its validity window spans every regime the tank visits.
    #[default]
    LaminarTurbulent,
    /// Very intensive mixing between layers: Nu = 0.59·Ra^(1/3).
    IntensiveMixing,
}

impl CorrelationChoice {
    /// All supported choices, in a stable order (useful for sweeps).
    pub const ALL: [CorrelationChoice; 3] = [
        CorrelationChoice::VerticalCylinder,
        CorrelationChoice::LaminarTurbulent,
        CorrelationChoice::IntensiveMixing,
    ];

    /// Canonical snake_case spelling — the one config files, sweep axis
    /// arguments, and output tables all use.
    pub fn name(self) -> &'static str {
        match self {
            CorrelationChoice::VerticalCylinder => "vertical_cylinder",
            CorrelationChoice::LaminarTurbulent => "laminar_turbulent",
            CorrelationChoice::IntensiveMixing => "intensive_mixing",
        }
    }
}

impl std::fmt::Display for CorrelationChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Grashof number β·g·L³·|T_wall − T_bulk|/ν² for buoyancy driven by the
/// temperature difference between a surface and the surrounding fluid.
///
/// Uses the magnitude of the temperature difference; the caller decides from
/// the sign whether convection is active (a stable gradient means "no
/// convection", not a negative Grashof number).
pub fn grashof(
    char_length_m: f64,
    wall_temp_c: f64,
    bulk_temp_c: f64,
    props: FluidProperties,
) -> f64 {
    grashof_from_delta(char_length_m, (wall_temp_c - bulk_temp_c).abs(), props)
}

/// Grashof number with the driving temperature difference given directly.
pub(crate) fn grashof_from_delta(char_length_m: f64, delta_t_k: f64, props: FluidProperties) -> f64 {
    debug_assert!(char_length_m > 0.0);
    props.expansion_coeff * GRAVITY * char_length_m.powi(3) * delta_t_k.abs()
        / (props.kinematic_viscosity * props.kinematic_viscosity)
}

/// Free convection from the outside of a serpentine tube into still water:
/// Nu = 0.394·Gr^0.2·Pr^0.25.
pub fn nu_free_serpentine(gr: f64, pr: f64) -> f64 {
    debug_assert!(gr >= 0.0 && pr > 0.0);
    0.394 * gr.powf(0.2) * pr.powf(0.25)
}

/// Forced convection inside a tube:
/// Nu = 0.021·Re^0.8·Pr_f^0.43·(Pr_f/Pr_wall)^0.25.
///
/// `pr_fluid` is evaluated at the bulk fluid temperature, `pr_wall` at the
/// wall temperature. Logs a warning (once per process) when Re < 2300,
/// where the correlation is extrapolated below its developed-turbulence
/// range (no laminar branch is part of the model).
pub fn nu_forced_serpentine(re: f64, pr_fluid: f64, pr_wall: f64) -> f64 {
    debug_assert!(re > 0.0 && pr_fluid > 0.0 && pr_wall > 0.0);
    if re < FORCED_RE_FLOOR {
        warn_once!(
            "forced-convection correlation evaluated at Re = {re:.0} (< {FORCED_RE_FLOOR}): \
             outside its developed-turbulence validity range"
        );
    }
    0.021 * re.powf(0.8) * pr_fluid.powf(0.43) * (pr_fluid / pr_wall).powf(0.25)
}

/// Nusselt number for buoyant exchange between adjacent tank layers.
///
/// `pr` only participates in validity checking (the correlations themselves
/// are functions of Ra alone). Out-of-window inputs log a warning (once per
/// process) and the correlation is still evaluated.
pub fn nu_layer(choice: CorrelationChoice, rayleigh: f64, pr: f64) -> f64 {
    debug_assert!(rayleigh >= 0.0);
    match choice {
        CorrelationChoice::VerticalCylinder => {
            if !(1e8..=2.26e11).contains(&rayleigh) {
                warn_once!(
                    "vertical-cylinder layer correlation evaluated at Ra = {rayleigh:.3e}: \
                     outside its validity window [1e8, 2.26e11]"
                );
            }
            if !(5.7..=6.65).contains(&pr) {
                warn_once!(
                    "vertical-cylinder layer correlation evaluated at Pr = {pr:.3}: \
                     outside its validity window [5.7, 6.65]"
                );
            }
            0.0556 * rayleigh.powf(1.0 / 3.0)
        }
        CorrelationChoice::LaminarTurbulent => {
            if !(1e-7..=1e12).contains(&rayleigh) {
                warn_once!(
                    "laminar-turbulent layer correlation evaluated at Ra = {rayleigh:.3e}: \
                     outside its validity window [1e-7, 1e12]"
                );
            }
            if rayleigh == 0.0 {
                // Ra^0.1 → define 0^0.1 as 0: no driving force, no exchange.
                0.0
            } else {
                0.11 * rayleigh.powf(0.33) + rayleigh.powf(0.1)
            }
        }
        CorrelationChoice::IntensiveMixing => 0.59 * rayleigh.powf(1.0 / 3.0),
    }
}

/// Heat-transfer coefficient from a Nusselt number: h = Nu·λ/L.
pub fn h_from_nu(nu: f64, conductivity: f64, char_length_m: f64) -> f64 {
    debug_assert!(char_length_m > 0.0);
    nu * conductivity / char_length_m
}

/// Overall transmission coefficient of a wall between two convective films:
/// K = 1/(1/h_inner + δ/λ_wall + 1/h_outer).
pub fn overall_k(
    h_inner: f64,
    wall_thickness_m: f64,
    wall_conductivity: f64,
    h_outer: f64,
) -> f64 {
    debug_assert!(h_inner > 0.0 && wall_thickness_m >= 0.0 && wall_conductivity > 0.0 && h_outer > 0.0);
    1.0 / (1.0 / h_inner + wall_thickness_m / wall_conductivity + 1.0 / h_outer)
}

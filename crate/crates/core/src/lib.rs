//! Simulation of a solar domestic hot-water system with a stratified
//! vertical storage tank charged through immersed serpentine coils.
//!
//! The tank is resolved as a one-dimensional column of well-mixed sectors.
//! Each time step applies, in order: hot-water draw-off with mains make-up,
//! solar charging through the serpentine chain coupled to a flat-plate
//! collector, axial conduction, envelope losses, and buoyancy-driven mixing
//! of unstable layers. Water properties are smooth fits evaluated at local
//! temperatures; heat-transfer coefficients come from engineering
//! correlations for forced flow in tubes, free convection around immersed
//! cylinders, and inter-layer natural convection.
//!
//! Entry points:
//!
//! * [`engine::run`] — multi-day simulation over a weather series.
//! * [`engine::Simulation`] — step-by-step integration.
//! * [`sweep::run_sweep`] — parameter studies over placement, flow rate,
//!   and mixing correlation.
//! * [`io`] — weather CSV, JSON configs, result CSV/JSON/SVG artifacts.

// Validation code writes `!(x > 0.0)` on purpose: the negation is true for
// NaN, so non-finite inputs fail validation instead of slipping through the
// `x <= 0.0` rewrite clippy would suggest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collector;
pub mod correlations;
pub mod engine;
pub mod error;
pub mod io;
pub mod properties;
pub mod serpentine;
pub mod sweep;
pub mod tank;
pub mod weather;

pub use collector::{CollectorParams, OuterLoopConfig, PumpControl};
pub use correlations::CorrelationChoice;
pub use engine::{
    run, ConsumptionSchedule, EnergyAudit, InitialCondition, RunOutput, Simulation,
    SimulationConfig, StepReport,
};
pub use error::{Error, Result};
pub use properties::{eval_properties, FluidKind, FluidProperties, PropertyModel};
pub use serpentine::{IterationConfig, Placement, SerpentineLayout, SerpentineSegment, TubeSpec};
pub use tank::{TankGeometry, TankState};
pub use weather::{WeatherRecord, WeatherSeries};

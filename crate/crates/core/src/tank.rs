//! Stratified-tank state and the tank-local transport processes.
//!
//! The tank is a vertical cylinder divided into equal-volume horizontal
//! sectors, numbered from the bottom (index 0) to the top. Four pure
//! state→state operations act on it, one per physical mechanism:
//!
//! * [`discharge_step`] — plug-flow draw-off: hot water leaves at the top,
//!   net water enters at the bottom, every sector receives its lower
//!   neighbour's (pre-step) water.
//! * [`conduction_step`] — 1-D vertical heat conduction between sectors,
//!   Crank–Nicolson with insulated (zero-flux) ends.
//! * [`loss_step`] — explicit heat loss through the insulated wall to
//!   ambient.
//! * [`convection_step`] — buoyancy-driven mixing wherever a lower sector
//!   is warmer than the one above it.
//!
//! All operations are deterministic and conserve the volume-weighted mean
//! temperature (exactly, for the ones with no external exchange).

use crate::correlations::{self, CorrelationChoice};
use crate::error::{Error, Result};
use crate::properties::{self, PropertyModel};

/// Upper bound on buoyant-mixing sweeps within one convection step.
const MAX_CONVECTION_SWEEPS: usize = 200;
/// A convection step stops once the worst remaining inversion is below this.
const INVERSION_STOP_K: f64 = 1e-3;
/// ... or once no pair moved by more than this in a full sweep.
const PROGRESS_STOP_K: f64 = 1e-5;

/// Cylindrical-tank geometry and per-sector external loss areas.
#[derive(Debug, Clone, PartialEq)]
pub struct TankGeometry {
    /// Total tank height, m.
    pub height_m: f64,
    /// Internal diameter, m.
    pub internal_diameter_m: f64,
    /// Number of equal-volume horizontal sectors (≥ 2).
    pub sector_count: usize,
    /// Insulation loss coefficient U, W/(m²·K).
    pub insulation_loss_coeff: f64,
    /// External heat-loss area per sector, m² (side wall, plus the end cap
    /// for the bottom and top sectors).
    external_areas_m2: Vec<f64>,
}

impl TankGeometry {
    /// Builds a tank geometry, deriving per-sector external areas from the
    /// cylinder dimensions (side wall per sector, end caps added to the
    /// bottom and top sectors).
    ///
    /// # Errors
    ///
    /// Returns a validation error listing every violated constraint:
    /// positive dimensions, height ≥ diameter (the 1-D stratification
    /// premise), at least 2 sectors, non-negative loss coefficient.
    pub fn new(
        height_m: f64,
        internal_diameter_m: f64,
        sector_count: usize,
        insulation_loss_coeff: f64,
    ) -> Result<Self> {
        let mut violations = Vec::new();
        if !(height_m > 0.0) {
            violations.push(format!("tank height {height_m} m must be positive"));
        }
        if !(internal_diameter_m > 0.0) {
            violations.push(format!(
                "tank diameter {internal_diameter_m} m must be positive"
            ));
        }
        if height_m > 0.0 && internal_diameter_m > 0.0 && height_m < internal_diameter_m {
            violations.push(format!(
                "tank height {height_m} m must be at least the diameter \
                 {internal_diameter_m} m (1-D stratified-column premise)"
            ));
        }
        if sector_count < 2 {
            violations.push(format!("sector_count {sector_count} must be at least 2"));
        }
        if !(insulation_loss_coeff >= 0.0) {
            violations.push(format!(
                "insulation_loss_coeff {insulation_loss_coeff} W/(m²·K) must be non-negative"
            ));
        }
        if !violations.is_empty() {
            return Err(Error::validations(violations));
        }

        let side_per_sector =
            std::f64::consts::PI * internal_diameter_m * height_m / sector_count as f64;
        let cap = std::f64::consts::PI * (internal_diameter_m / 2.0).powi(2);
        let external_areas_m2 = (0..sector_count)
            .map(|i| {
                let caps = if i == 0 || i == sector_count - 1 {
                    cap
                } else {
                    0.0
                };
                side_per_sector + caps
            })
            .collect();
        Ok(TankGeometry {
            height_m,
            internal_diameter_m,
            sector_count,
            insulation_loss_coeff,
            external_areas_m2,
        })
    }

    /// Replaces the derived per-sector external areas with explicit values
    /// (e.g. to model extra fittings on one sector).
    pub fn with_external_areas(mut self, areas_m2: Vec<f64>) -> Result<Self> {
        let mut violations = Vec::new();
        if areas_m2.len() != self.sector_count {
            violations.push(format!(
                "external area count {} must equal sector_count {}",
                areas_m2.len(),
                self.sector_count
            ));
        }
        for (i, a) in areas_m2.iter().enumerate() {
            if !(*a >= 0.0) {
                violations.push(format!("external area {a} m² of sector {i} must be ≥ 0"));
            }
        }
        if !violations.is_empty() {
            return Err(Error::validations(violations));
        }
        self.external_areas_m2 = areas_m2;
        Ok(self)
    }

    /// Horizontal cross-section area, m².
    pub fn cross_section_area_m2(&self) -> f64 {
        std::f64::consts::PI * (self.internal_diameter_m / 2.0).powi(2)
    }

    /// Height of one sector (layer), m.
    pub fn layer_height_m(&self) -> f64 {
        self.height_m / self.sector_count as f64
    }

    /// Volume of one sector, m³.
    pub fn sector_volume_m3(&self) -> f64 {
        self.cross_section_area_m2() * self.layer_height_m()
    }

    /// Total water volume, m³.
    pub fn total_volume_m3(&self) -> f64 {
        self.cross_section_area_m2() * self.height_m
    }

    /// External loss area of each sector, m².
    pub fn external_areas_m2(&self) -> &[f64] {
        &self.external_areas_m2
    }
}

impl Default for TankGeometry {
    /// The reference apparatus: 1.7 m tall, 0.35 m diameter (≈ 164 l),
    /// 12 sectors, U = 0.5 W/(m²·K).
    fn default() -> Self {
        TankGeometry::new(1.7, 0.35, 12, 0.5).expect("default geometry is valid")
    }
}

/// Instantaneous tank state: one temperature per sector, bottom first.
#[derive(Debug, Clone, PartialEq)]
pub struct TankState {
    /// Sector temperatures, °C; index 0 is the bottom sector.
    pub sector_temps_c: Vec<f64>,
    /// Simulation time this state belongs to, s.
    pub timestamp_s: f64,
}

impl TankState {
    /// A tank uniformly at one temperature, at time zero.
    pub fn uniform(sector_count: usize, temperature_c: f64) -> Self {
        TankState {
            sector_temps_c: vec![temperature_c; sector_count],
            timestamp_s: 0.0,
        }
    }

    /// Checks structural invariants against a geometry: matching sector
    /// count and every temperature within the supported 0–100 °C range.
    pub fn validate(&self, geometry: &TankGeometry) -> Result<()> {
        let mut violations = Vec::new();
        if self.sector_temps_c.len() != geometry.sector_count {
            violations.push(format!(
                "state has {} sector temperatures but the geometry has {} sectors",
                self.sector_temps_c.len(),
                geometry.sector_count
            ));
        }
        for (i, t) in self.sector_temps_c.iter().enumerate() {
            if !(properties::MIN_TEMPERATURE_C..=properties::MAX_TEMPERATURE_C).contains(t) {
                violations.push(format!(
                    "sector {i} temperature {t} °C is outside the supported range 0–100 °C"
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Volume-weighted mean temperature (sectors have equal volume), °C.
    pub fn mean_temp_c(&self) -> f64 {
        self.sector_temps_c.iter().sum::<f64>() / self.sector_temps_c.len() as f64
    }
}

/// Ambient-loss parameters for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    /// Loss coefficient U, W/(m²·K); ≥ 0.
    pub loss_coeff: f64,
    /// Ambient temperature, °C.
    pub ambient_temp_c: f64,
}

/// Draws `draw_volume_m3` of hot water from the top while the same volume of
/// net water at `net_water_temp_c` enters at the bottom, with plug-flow
/// mixing: each sector ends at the volume-weighted blend of its own and its
/// lower neighbour's pre-step water.
///
/// Returns the new state and the temperature of the drawn (top-sector,
/// pre-step) water.
///
/// The draw must not exceed one sector volume — the engine splits larger
/// draws into sub-draws; a violation is a validation error.
pub fn discharge_step(
    state: &TankState,
    draw_volume_m3: f64,
    net_water_temp_c: f64,
    geometry: &TankGeometry,
) -> Result<(TankState, f64)> {
    let v = geometry.sector_volume_m3();
    if !(draw_volume_m3 >= 0.0) {
        return Err(Error::validation(format!(
            "draw volume {draw_volume_m3} m³ must be non-negative"
        )));
    }
    if draw_volume_m3 > v * (1.0 + 1e-9) {
        return Err(Error::validation(format!(
            "draw volume {draw_volume_m3} m³ exceeds one sector volume {v} m³: \
             the caller must split such draws into sub-draws"
        )));
    }

    let old = &state.sector_temps_c;
    let n = old.len();
    let outflow_temp_c = old[n - 1];
    if draw_volume_m3 == 0.0 {
        // Exact identity: the mix formula below would round-trip each
        // temperature through (v·t)/v and can flip the last bit.
        return Ok((state.clone(), outflow_temp_c));
    }
    let mut new_temps = Vec::with_capacity(n);
    if draw_volume_m3 >= v {
        // A full-sector draw is a pure one-sector upward shift.
        new_temps.push(net_water_temp_c);
        new_temps.extend_from_slice(&old[..n - 1]);
    } else {
        for i in 0..n {
            let below = if i == 0 { net_water_temp_c } else { old[i - 1] };
            new_temps.push(((v - draw_volume_m3) * old[i] + draw_volume_m3 * below) / v);
        }
    }
    Ok((
        TankState {
            sector_temps_c: new_temps,
            timestamp_s: state.timestamp_s,
        },
        outflow_temp_c,
    ))
}

/// Advances vertical conduction between sectors over `dt_s`.
///
/// Crank–Nicolson on the sector-center grid with zero-flux boundaries at
/// both ends; the diffusivity a = λ/(ρ·c_p) is evaluated once per step at
/// the volume-mean temperature and held constant within the step. The
/// scheme is unconditionally stable and preserves the mean temperature.
pub fn conduction_step(
    state: &TankState,
    dt_s: f64,
    geometry: &TankGeometry,
    model: PropertyModel,
) -> TankState {
    debug_assert!(dt_s > 0.0);
    let temps = &state.sector_temps_c;
    let n = temps.len();
    let mean = state.mean_temp_c();
    let diffusivity =
        properties::conductivity(mean) / model.volumetric_heat_capacity(mean);
    let h = geometry.layer_height_m();
    // Half the mesh ratio: Crank–Nicolson weighs old and new Laplacians 1:1.
    let lc = diffusivity * dt_s / (2.0 * h * h);

    // Tridiagonal system (sub, diag, super) and right-hand side; the
    // zero-flux boundary is a mirror condition, expressed by dropping the
    // outward-pointing coupling on the first and last rows.
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let lo = if i > 0 { lc } else { 0.0 };
        let hi = if i < n - 1 { lc } else { 0.0 };
        sub[i] = -lo;
        diag[i] = 1.0 + lo + hi;
        sup[i] = -hi;
        rhs[i] = temps[i] * (1.0 - lo - hi)
            + if i > 0 { temps[i - 1] * lo } else { 0.0 }
            + if i < n - 1 { temps[i + 1] * hi } else { 0.0 };
    }

    // Thomas algorithm (the matrix is strictly diagonally dominant).
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = sup[0] / diag[0];
    d_prime[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c_prime[i - 1];
        c_prime[i] = sup[i] / m;
        d_prime[i] = (rhs[i] - sub[i] * d_prime[i - 1]) / m;
    }
    let mut new_temps = vec![0.0; n];
    new_temps[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        new_temps[i] = d_prime[i] - c_prime[i] * new_temps[i + 1];
    }

    TankState {
        sector_temps_c: new_temps,
        timestamp_s: state.timestamp_s,
    }
}

/// Applies explicit ambient heat loss over `dt_s`.
///
/// Each sector loses Q_i = U·F_i·(T_i − T_ambient); its temperature drops by
/// Q_i·dt/(ρ·V·c_p). Gains are allowed when ambient is warmer. Returns the
/// new state and the total loss power ΣQ_i in W (negative when the tank is
/// gaining heat).
pub fn loss_step(
    state: &TankState,
    dt_s: f64,
    loss: LossModel,
    geometry: &TankGeometry,
    model: PropertyModel,
) -> (TankState, f64) {
    debug_assert!(dt_s > 0.0 && loss.loss_coeff >= 0.0);
    let v = geometry.sector_volume_m3();
    let mut q_total_w = 0.0;
    let new_temps = state
        .sector_temps_c
        .iter()
        .zip(geometry.external_areas_m2())
        .map(|(&t, &area)| {
            let q = loss.loss_coeff * area * (t - loss.ambient_temp_c);
            q_total_w += q;
            t - q * dt_s / (model.volumetric_heat_capacity(t) * v)
        })
        .collect();
    (
        TankState {
            sector_temps_c: new_temps,
            timestamp_s: state.timestamp_s,
        },
        q_total_w,
    )
}

/// Equilibrates unstable stratification (a warmer sector below a colder
/// one) by buoyant exchange over `dt_s`.
///
/// Sector pairs are swept from the bottom up. For each inverted pair the
/// Rayleigh number is formed from the pair's temperature difference at the
/// layer height, the chosen correlation yields Nu, α = Nu·λ/h_layer, and the
/// flux Q = α·F_cross·ΔT moves heat upward — the lower sector cools and the
/// upper one warms by the same amount, clamped so the pair cannot overshoot
/// its mean. Sweeps repeat (up to an internal cap) until the worst remaining
/// inversion is negligible or progress stalls, so one call equilibrates the
/// step no matter how strong the inversion was.
///
/// Returns the new state and the number of sweeps used.
pub fn convection_step(
    state: &TankState,
    dt_s: f64,
    geometry: &TankGeometry,
    choice: CorrelationChoice,
    model: PropertyModel,
) -> (TankState, usize) {
    debug_assert!(dt_s > 0.0);
    let mut temps = state.sector_temps_c.clone();
    let n = temps.len();
    let h_layer = geometry.layer_height_m();
    let a_cross = geometry.cross_section_area_m2();
    let v = geometry.sector_volume_m3();

    let mut sweeps_used = 0;
    for _ in 0..MAX_CONVECTION_SWEEPS {
        sweeps_used += 1;
        let mut max_move = 0.0f64;
        for i in 0..n.saturating_sub(1) {
            let delta_t = temps[i] - temps[i + 1];
            if delta_t <= 0.0 {
                continue;
            }
            let t_pair = 0.5 * (temps[i] + temps[i + 1]);
            let props = properties::bundle(t_pair);
            let rayleigh =
                correlations::grashof_from_delta(h_layer, delta_t, props) * props.prandtl;
            let nu = correlations::nu_layer(choice, rayleigh, props.prandtl);
            let alpha = correlations::h_from_nu(nu, props.conductivity, h_layer);
            let q_w = alpha * a_cross * delta_t;
            let capacity = model.volumetric_heat_capacity(t_pair) * v;
            // Clamp at half the difference: the pair equilibrates to its
            // mean at most, never crossing.
            let move_k = (q_w * dt_s / capacity).min(0.5 * delta_t);
            temps[i] -= move_k;
            temps[i + 1] += move_k;
            max_move = max_move.max(move_k);
        }
        let worst_inversion = (0..n.saturating_sub(1))
            .map(|i| temps[i] - temps[i + 1])
            .fold(0.0f64, f64::max);
        if worst_inversion < INVERSION_STOP_K || max_move < PROGRESS_STOP_K {
            break;
        }
    }

    (
        TankState {
            sector_temps_c: temps,
            timestamp_s: state.timestamp_s,
        },
        sweeps_used,
    )
}

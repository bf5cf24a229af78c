//! Parameter sweeps over coil placement, loop flow rate, and mixing
//! correlation.
//!
//! A sweep expands the requested axes into their cartesian product, runs
//! each variant independently over the same weather series, and reduces each
//! run to a comparable summary row. Variants are fully independent, so the
//! sweep is embarrassingly parallel; with the `parallel` feature (on by
//! default) the variants run on a work-stealing thread pool. A failing
//! variant (for example a flow rate that fails validation) is reported in
//! its row rather than aborting the sweep.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::correlations::CorrelationChoice;
use crate::engine::{run, RunOutput, SimulationConfig};
use crate::error::{Error, Result};
use crate::serpentine::Placement;
use crate::weather::WeatherSeries;

/// Which of the three sweep axes to vary; `None` keeps the base
/// configuration's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    /// Coil placements to try.
    pub placements: Option<Vec<Placement>>,
    /// Collector-loop flow rates to try, kg/s.
    pub flow_rates: Option<Vec<f64>>,
    /// Mixing correlations to try.
    pub correlations: Option<Vec<CorrelationChoice>>,
}

impl SweepAxes {
    /// Checks that no axis is present but empty; collects every violation.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if matches!(&self.placements, Some(v) if v.is_empty()) {
            violations.push("placement axis is empty".to_string());
        }
        if matches!(&self.flow_rates, Some(v) if v.is_empty()) {
            violations.push("flow-rate axis is empty".to_string());
        }
        if matches!(&self.correlations, Some(v) if v.is_empty()) {
            violations.push("correlation axis is empty".to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::validations(violations))
        }
    }

    /// Expands the axes against a base configuration into the cartesian
    /// product of variants, in a deterministic order (placements outermost,
    /// correlations innermost).
    pub fn expand(&self, base: &SimulationConfig) -> Result<Vec<SweepVariant>> {
        self.validate()?;
        let placements = self
            .placements
            .clone()
            .unwrap_or_else(|| vec![base.placement]);
        let flow_rates = self
            .flow_rates
            .clone()
            .unwrap_or_else(|| vec![base.flow_rate_kg_s]);
        let correlations = self
            .correlations
            .clone()
            .unwrap_or_else(|| vec![base.correlation]);
        let mut variants = Vec::new();
        for &placement in &placements {
            for &flow_rate_kg_s in &flow_rates {
                for &correlation in &correlations {
                    variants.push(SweepVariant {
                        placement,
                        flow_rate_kg_s,
                        correlation,
                    });
                }
            }
        }
        Ok(variants)
    }
}

/// One point of the cartesian product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepVariant {
    /// Coil placement for this variant.
    pub placement: Placement,
    /// Collector-loop flow rate, kg/s.
    pub flow_rate_kg_s: f64,
    /// Mixing correlation.
    pub correlation: CorrelationChoice,
}

impl SweepVariant {
    /// Stable human-readable key, e.g.
    /// `placement=bottom,flow=0.02,correlation=laminar_turbulent`.
    pub fn key(&self) -> String {
        format!(
            "placement={},flow={},correlation={}",
            self.placement, self.flow_rate_kg_s, self.correlation
        )
    }

    fn apply(&self, base: &SimulationConfig) -> SimulationConfig {
        SimulationConfig {
            placement: self.placement,
            flow_rate_kg_s: self.flow_rate_kg_s,
            correlation: self.correlation,
            ..base.clone()
        }
    }
}

/// Reduced metrics for one successful variant, over the reported period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantMetrics {
    /// Draw-off enthalpy delivered above mains temperature, J.
    pub delivered_energy_j: f64,
    /// Collector useful gain divided by incident irradiation (sunlit steps).
    pub mean_collector_efficiency: f64,
    /// Mean top-minus-bottom sector temperature difference, K.
    pub stratification_index_k: f64,
    /// Mean tank temperature at the end of the run, °C.
    pub final_mean_temp_c: f64,
}

/// One sweep row: the variant plus its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    /// The parameter combination.
    pub variant: SweepVariant,
    /// Metrics on success, or the failure message.
    pub outcome: std::result::Result<VariantMetrics, String>,
}

/// Reduces a finished run to sweep metrics.
pub fn metrics_from_run(output: &RunOutput, config: &SimulationConfig) -> VariantMetrics {
    let dt = config.dt_s;
    let area = config.collector.area_m2;
    let mut delivered_energy_j = 0.0;
    let mut useful_j = 0.0;
    let mut incident_j = 0.0;
    let mut delta_sum = 0.0;
    for report in &output.reports {
        delivered_energy_j += report.q_drawn_w * dt;
        if report.q_s_w_per_m2 > 0.0 {
            useful_j += report.q_solar_useful_w * dt;
            incident_j += area * report.q_s_w_per_m2 * dt;
        }
        let temps = &report.temps_end;
        delta_sum += temps[temps.len() - 1] - temps[0];
    }
    VariantMetrics {
        delivered_energy_j,
        mean_collector_efficiency: if incident_j > 0.0 {
            useful_j / incident_j
        } else {
            0.0
        },
        stratification_index_k: if output.reports.is_empty() {
            0.0
        } else {
            delta_sum / output.reports.len() as f64
        },
        final_mean_temp_c: output.final_state.mean_temp_c(),
    }
}

fn run_variant(
    variant: SweepVariant,
    base: &SimulationConfig,
    weather: &WeatherSeries,
) -> VariantSummary {
    let config = variant.apply(base);
    let outcome = run(&config, weather)
        .map(|output| metrics_from_run(&output, &config))
        .map_err(|e| e.to_string());
    VariantSummary { variant, outcome }
}

/// Runs the sweep on the current thread, one variant after another.
pub fn run_sweep_sequential(
    base: &SimulationConfig,
    axes: &SweepAxes,
    weather: &WeatherSeries,
) -> Result<Vec<VariantSummary>> {
    let variants = axes.expand(base)?;
    Ok(variants
        .into_iter()
        .map(|v| run_variant(v, base, weather))
        .collect())
}

/// Runs the sweep, using all available cores when the `parallel` feature is
/// enabled. Row order is the deterministic expansion order either way.
pub fn run_sweep(
    base: &SimulationConfig,
    axes: &SweepAxes,
    weather: &WeatherSeries,
) -> Result<Vec<VariantSummary>> {
    let variants = axes.expand(base)?;
    #[cfg(feature = "parallel")]
    {
        Ok(variants
            .into_par_iter()
            .map(|v| run_variant(v, base, weather))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(variants
            .into_iter()
            .map(|v| run_variant(v, base, weather))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ConsumptionSchedule;
    use approx::assert_relative_eq;

    fn one_day_base() -> SimulationConfig {
        SimulationConfig {
            warmup_days: 0,
            reported_days: 1,
            schedule: ConsumptionSchedule {
                daily_volume_l: 0.0,
                ..ConsumptionSchedule::default()
            },
            ..SimulationConfig::default()
        }
    }

    fn one_day_weather() -> WeatherSeries {
        WeatherSeries::clear_sky(1, 600.0, 700.0)
    }

    #[test]
    fn empty_axes_are_rejected() {
        let axes = SweepAxes {
            placements: Some(vec![]),
            flow_rates: Some(vec![]),
            ..SweepAxes::default()
        };
        let err = axes.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("placement axis"));
        assert!(text.contains("flow-rate axis"));
    }

    #[test]
    fn expansion_is_a_deterministic_cartesian_product() {
        let axes = SweepAxes {
            placements: Some(vec![Placement::Bottom, Placement::Top]),
            flow_rates: Some(vec![0.02, 0.03]),
            correlations: None,
        };
        let variants = axes.expand(&one_day_base()).unwrap();
        assert_eq!(variants.len(), 4);
        assert_eq!(variants[0].key(), "placement=bottom,flow=0.02,correlation=laminar_turbulent");
        assert_eq!(variants[3].key(), "placement=top,flow=0.03,correlation=laminar_turbulent");
    }

    #[test]
    fn default_axes_reproduce_the_base_run() {
        let base = one_day_base();
        let weather = one_day_weather();
        let rows = run_sweep_sequential(&base, &SweepAxes::default(), &weather).unwrap();
        assert_eq!(rows.len(), 1);
        let metrics = rows[0].outcome.as_ref().unwrap();
        let direct = run(&base, &weather).unwrap();
        let expected = metrics_from_run(&direct, &base);
        assert_eq!(*metrics, expected);
    }

    #[test]
    fn failed_variants_are_rows_not_errors() {
        let axes = SweepAxes {
            flow_rates: Some(vec![0.02, -1.0]),
            ..SweepAxes::default()
        };
        let rows = run_sweep_sequential(&one_day_base(), &axes, &one_day_weather()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].outcome.is_ok());
        let message = rows[1].outcome.as_ref().unwrap_err();
        assert!(message.contains("flow rate"), "{message}");
    }

    #[test]
    fn bottom_coil_collects_more_but_stratifies_less_than_top() {
        let axes = SweepAxes {
            placements: Some(vec![Placement::Bottom, Placement::Top]),
            ..SweepAxes::default()
        };
        let rows = run_sweep_sequential(&one_day_base(), &axes, &one_day_weather()).unwrap();
        let bottom = rows[0].outcome.as_ref().unwrap();
        let top = rows[1].outcome.as_ref().unwrap();
        assert!(
            bottom.mean_collector_efficiency > top.mean_collector_efficiency,
            "bottom {} vs top {}",
            bottom.mean_collector_efficiency,
            top.mean_collector_efficiency
        );
        assert!(
            top.stratification_index_k > bottom.stratification_index_k,
            "top {} vs bottom {}",
            top.stratification_index_k,
            bottom.stratification_index_k
        );
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_sweeps_agree_exactly() {
        let axes = SweepAxes {
            placements: Some(vec![Placement::Bottom, Placement::Middle, Placement::Top]),
            flow_rates: Some(vec![0.015, 0.02]),
            correlations: None,
        };
        let base = one_day_base();
        let weather = one_day_weather();
        let sequential = run_sweep_sequential(&base, &axes, &weather).unwrap();
        let parallel = run_sweep(&base, &axes, &weather).unwrap();
        assert_eq!(sequential, parallel);
        // Spot-check a metric against a standalone run of the same variant.
        let m = sequential[0].outcome.as_ref().unwrap();
        let standalone = sequential[0].variant.apply(&base);
        assert_relative_eq!(
            m.final_mean_temp_c,
            run(&standalone, &weather).unwrap().final_state.mean_temp_c(),
            max_relative = 1e-12
        );
    }
}

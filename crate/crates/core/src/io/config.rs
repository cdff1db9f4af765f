//! TOML run configuration. Every key is optional; missing keys take the
//! baseline values, unknown keys are rejected.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::demand::OcUsageRates;
use crate::des::{ChainConfig, PolicyMode, TransportStrategy};
use crate::epi::{self, EpiParameters, LosBounds};
use crate::error::{Error, Result};
use crate::network::TransportConstants;
use crate::scenario::{ContactScaling, DemandScenario, ScenarioModifiers, ScenarioSpec, Strategy};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub scenario: ScenarioConfig,
    pub epi: EpiConfig,
    pub oc: OcUsageRates,
    pub transport: TransportConfig,
    pub inventory: InventoryConfig,
    pub output: OutputConfig,
}

/// Input files. Relative paths resolve against the config file's directory;
/// unset paths fall back to the bundled data set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub nodes: Option<PathBuf>,
    pub bom: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub contacts: Option<PathBuf>,
    pub actuals: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub demand_scenario: DemandScenario,
    pub inventory_strategy: PolicyMode,
    pub transport_strategy: TransportStrategy,
    /// `MM-DD`.
    pub start_date: String,
    /// `MM-DD`; the first date after `start_date` with this month and day.
    pub end_date: String,
    /// Days to simulate; overrides the date span when set.
    pub horizon: Option<u32>,
    pub seed: u64,
    pub replications: u32,
    pub contact_scaling: ContactScaling,
    pub contact_uplift: f64,
    pub usage_factor: f64,
    pub surge_inventory_rate: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let m = ScenarioModifiers::default();
        Self {
            demand_scenario: DemandScenario::Baseline,
            inventory_strategy: PolicyMode::Static,
            transport_strategy: TransportStrategy::GroundOnly,
            start_date: "11-20".into(),
            end_date: "3-21".into(),
            horizon: None,
            seed: 2020,
            replications: 1,
            contact_scaling: m.contact_scaling,
            contact_uplift: m.contact_uplift,
            usage_factor: m.usage_factor,
            surge_inventory_rate: m.surge_inventory_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpiConfig {
    pub illness_duration: u32,
    pub hospitalization_rate: f64,
    pub los_min: u32,
    pub los_max: u32,
    pub overflow_los_min: u32,
    pub overflow_los_max: u32,
    pub immunity_duration: u32,
    pub infectivity: f64,
    pub hospital_mortality_rate: f64,
    pub community_mortality_rate: f64,
    pub workforce_share: f64,
}

impl Default for EpiConfig {
    fn default() -> Self {
        Self {
            illness_duration: epi::DEFAULT_ILLNESS_DURATION,
            hospitalization_rate: epi::DEFAULT_HOSPITALIZATION_RATE,
            los_min: epi::DEFAULT_LOS_MIN,
            los_max: epi::DEFAULT_LOS_MAX,
            overflow_los_min: epi::DEFAULT_OVERFLOW_LOS_MIN,
            overflow_los_max: epi::DEFAULT_OVERFLOW_LOS_MAX,
            immunity_duration: epi::DEFAULT_IMMUNITY_DURATION,
            infectivity: epi::DEFAULT_INFECTIVITY,
            hospital_mortality_rate: epi::DEFAULT_HOSPITAL_MORTALITY_RATE,
            community_mortality_rate: epi::DEFAULT_COMMUNITY_MORTALITY_RATE,
            workforce_share: epi::DEFAULT_WORKFORCE_SHARE,
        }
    }
}

impl EpiConfig {
    pub fn parameters(&self, contact_schedule: Vec<f64>) -> EpiParameters {
        EpiParameters {
            illness_duration: self.illness_duration,
            hospitalization_rate: self.hospitalization_rate,
            los: LosBounds {
                min: self.los_min,
                max: self.los_max,
            },
            overflow_los: LosBounds {
                min: self.overflow_los_min,
                max: self.overflow_los_max,
            },
            immunity_duration: self.immunity_duration,
            infectivity: self.infectivity,
            contact_schedule,
            hospital_mortality_rate: self.hospital_mortality_rate,
            community_mortality_rate: self.community_mortality_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub ground_speed: f64,
    pub ground_handling: f64,
    pub air_speed: f64,
    pub air_handling: f64,
    pub air_threshold_miles: f64,
    pub lead_time_cv: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        let k = TransportConstants::default();
        Self {
            ground_speed: k.ground_speed,
            ground_handling: k.ground_handling,
            air_speed: k.air_speed,
            air_handling: k.air_handling,
            air_threshold_miles: k.air_threshold_miles,
            lead_time_cv: ChainConfig::default().lead_time_cv,
        }
    }
}

impl TransportConfig {
    pub fn constants(&self) -> TransportConstants {
        TransportConstants {
            ground_speed: self.ground_speed,
            ground_handling: self.ground_handling,
            air_speed: self.air_speed,
            air_handling: self.air_handling,
            air_threshold_miles: self.air_threshold_miles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventoryConfig {
    pub service_level: f64,
    pub cycle_days: f64,
    pub review_days: f64,
    pub utilization: f64,
}

impl Default for InventoryConfig {
    fn default() -> Self {
        let c = ChainConfig::default();
        Self {
            service_level: c.service_level,
            cycle_days: c.cycle_days,
            review_days: c.review_days,
            utilization: c.utilization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Check the inventory identity after every event.
    pub audit: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            audit: false,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Day offset of `MM-DD` `to` counted from `MM-DD` `from`, rolling into the
/// next year when `to` falls earlier in the calendar.
pub fn day_offset(from: &str, to: &str) -> Result<u32> {
    let parse = |s: &str, year: i32| {
        NaiveDate::parse_from_str(&format!("{year}-{s}"), "%Y-%m-%d")
            .map_err(|_| Error::Config(format!("date `{s}` is not MM-DD")))
    };
    // a leap year, so 02-29 parses as a start or same-year end
    let start = parse(from, 2020)?;
    let mut end = parse(to, 2020)?;
    if end < start {
        end = parse(to, 2021)?;
    }
    Ok((end - start).num_days() as u32)
}

impl RunConfig {
    /// Reads and validates a config file, returning it with the directory
    /// relative paths resolve against.
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf)> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = parse_config(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.replications == 0 {
            return Err(Error::Config("scenario.replications must be >= 1".into()));
        }
        if self.horizon()? == 0 {
            return Err(Error::Config("horizon must be >= 1 day".into()));
        }
        self.oc.validate()?;
        self.epi.parameters(Vec::new()).validate()?;
        let t = &self.transport;
        for (k, v) in [
            ("transport.ground_speed", t.ground_speed),
            ("transport.air_speed", t.air_speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be > 0")));
            }
        }
        for (k, v) in [
            ("transport.ground_handling", t.ground_handling),
            ("transport.air_handling", t.air_handling),
            ("transport.air_threshold_miles", t.air_threshold_miles),
            ("transport.lead_time_cv", t.lead_time_cv),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be >= 0")));
            }
        }
        let inv = &self.inventory;
        if !(0.5..1.0).contains(&inv.service_level) {
            return Err(Error::Config("inventory.service_level must be in [0.5, 1)".into()));
        }
        if !(inv.cycle_days > 0.0 && inv.review_days > 0.0) {
            return Err(Error::Config("inventory cycle and review days must be > 0".into()));
        }
        if !(inv.utilization > 0.0 && inv.utilization <= 1.0) {
            return Err(Error::Config("inventory.utilization must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epi.workforce_share) {
            return Err(Error::Config("epi.workforce_share must be in [0, 1]".into()));
        }
        let s = &self.scenario;
        if !(s.usage_factor > 0.0 && s.contact_uplift.is_finite()) {
            return Err(Error::Config(
                "usage_factor must be > 0 and contact_uplift finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&s.surge_inventory_rate) {
            return Err(Error::Config("surge_inventory_rate must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> Result<u32> {
        match self.scenario.horizon {
            Some(h) => Ok(h),
            None => day_offset(&self.scenario.start_date, &self.scenario.end_date),
        }
    }

    pub fn strategy(&self) -> Strategy {
        Strategy::from_parts(self.scenario.inventory_strategy, self.scenario.transport_strategy)
    }

    pub fn spec(&self) -> Result<ScenarioSpec> {
        Ok(ScenarioSpec {
            demand_scenario: self.scenario.demand_scenario,
            strategy: self.strategy(),
            horizon: self.horizon()?,
            seed: self.scenario.seed,
            replications: self.scenario.replications,
        })
    }

    pub fn modifiers(&self) -> ScenarioModifiers {
        ScenarioModifiers {
            contact_uplift: self.scenario.contact_uplift,
            contact_scaling: self.scenario.contact_scaling,
            usage_factor: self.scenario.usage_factor,
            surge_inventory_rate: self.scenario.surge_inventory_rate,
        }
    }

    pub fn chain(&self) -> ChainConfig {
        ChainConfig {
            inventory: self.scenario.inventory_strategy,
            transport: self.scenario.transport_strategy,
            constants: self.transport.constants(),
            service_level: self.inventory.service_level,
            cycle_days: self.inventory.cycle_days,
            review_days: self.inventory.review_days,
            lead_time_cv: self.transport.lead_time_cv,
            utilization: self.inventory.utilization,
        }
    }
}

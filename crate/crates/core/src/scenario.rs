//! Experiment matrix: demand scenario x mitigation strategy, replicated.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{generate_signals, BaselineShare, DemandSignal, OcUsageRates};
use crate::des::{
    self, build_chain, customer_orders, ChainConfig, DesOptions, DesResult, OrderClass, PolicyMode, RegionDemandRate,
    StockKind, TransportStrategy,
};
use crate::epi::{run_epidemic, EpiDailyOutput, EpiParameters, RegionProfile};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::SeedBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandScenario {
    PreCovid,
    Baseline,
    IncreasedContact,
    IncreasedUsage,
}

impl DemandScenario {
    pub const ALL: [DemandScenario; 4] = [
        DemandScenario::PreCovid,
        DemandScenario::Baseline,
        DemandScenario::IncreasedContact,
        DemandScenario::IncreasedUsage,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DemandScenario::PreCovid => "pre_covid",
            DemandScenario::Baseline => "baseline",
            DemandScenario::IncreasedContact => "increased_contact",
            DemandScenario::IncreasedUsage => "increased_usage",
        }
    }
}

impl std::str::FromStr for DemandScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown demand scenario `{s}`")))
    }
}

/// The three mitigation strategies compared side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    StaticGround,
    DynamicGround,
    DynamicAir,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::StaticGround, Strategy::DynamicGround, Strategy::DynamicAir];

    pub fn inventory(&self) -> PolicyMode {
        match self {
            Strategy::StaticGround => PolicyMode::Static,
            _ => PolicyMode::Dynamic,
        }
    }

    pub fn transport(&self) -> TransportStrategy {
        match self {
            Strategy::DynamicAir => TransportStrategy::AirOver500,
            _ => TransportStrategy::GroundOnly,
        }
    }

    pub fn from_parts(inventory: PolicyMode, transport: TransportStrategy) -> Self {
        match (inventory, transport) {
            (PolicyMode::Static, _) => Strategy::StaticGround,
            (PolicyMode::Dynamic, TransportStrategy::GroundOnly) => Strategy::DynamicGround,
            (PolicyMode::Dynamic, TransportStrategy::AirOver500) => Strategy::DynamicAir,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::StaticGround => "static_ground",
            Strategy::DynamicGround => "dynamic_ground",
            Strategy::DynamicAir => "dynamic_air",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::StaticGround => "Static + Ground",
            Strategy::DynamicGround => "Dynamic + Ground",
            Strategy::DynamicAir => "Dynamic + Air",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactScaling {
    /// Multiply every contact rate by `1 + uplift`.
    Relative,
    /// Add `uplift` to every contact rate.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioModifiers {
    pub contact_uplift: f64,
    pub contact_scaling: ContactScaling,
    pub usage_factor: f64,
    pub surge_inventory_rate: f64,
}

impl Default for ScenarioModifiers {
    fn default() -> Self {
        Self {
            contact_uplift: 0.001,
            contact_scaling: ContactScaling::Relative,
            usage_factor: 2.0,
            surge_inventory_rate: 0.15,
        }
    }
}

pub fn scale_contacts(schedule: &[f64], m: &ScenarioModifiers) -> Vec<f64> {
    schedule
        .iter()
        .map(|&c| match m.contact_scaling {
            ContactScaling::Relative => c * (1.0 + m.contact_uplift),
            ContactScaling::Absolute => c + m.contact_uplift,
        })
        .collect()
}

/// Scales the three COVID usage rates and raises the hospital inventory rate.
pub fn increase_usage(rates: &OcUsageRates, m: &ScenarioModifiers) -> OcUsageRates {
    OcUsageRates {
        hospital_covid_usage: rates.hospital_covid_usage * m.usage_factor,
        discharge_usage: rates.discharge_usage * m.usage_factor,
        overflow_discharge_usage: rates.overflow_discharge_usage * m.usage_factor,
        inventory_rate: m.surge_inventory_rate,
        ..rates.clone()
    }
}

/// Undoes [`increase_usage`] given the inventory rate it replaced.
pub fn revert_usage(rates: &OcUsageRates, m: &ScenarioModifiers, inventory_rate: f64) -> OcUsageRates {
    OcUsageRates {
        hospital_covid_usage: rates.hospital_covid_usage / m.usage_factor,
        discharge_usage: rates.discharge_usage / m.usage_factor,
        overflow_discharge_usage: rates.overflow_discharge_usage / m.usage_factor,
        inventory_rate,
        ..rates.clone()
    }
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub demand_scenario: DemandScenario,
    pub strategy: Strategy,
    pub horizon: u32,
    pub seed: u64,
    pub replications: u32,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed of replication `k`.
    pub fn replication_seed(&self, k: u32) -> u64 {
        self.seed.wrapping_add(u64::from(k))
    }
}

/// Everything a scenario run needs besides the spec.
#[derive(Debug, Clone)]
pub struct StudyInputs {
    pub network: Network,
    pub regions: Vec<RegionProfile>,
    pub epi: EpiParameters,
    /// Per-region contact schedules; regions not listed use `epi.contact_schedule`.
    pub region_contacts: BTreeMap<String, Vec<f64>>,
    pub rates: OcUsageRates,
    pub chain: ChainConfig,
    pub modifiers: ScenarioModifiers,
    pub audit: bool,
}

impl StudyInputs {
    pub fn new(network: Network, regions: Vec<RegionProfile>, epi: EpiParameters) -> Self {
        Self {
            network,
            regions,
            epi,
            region_contacts: BTreeMap::new(),
            rates: OcUsageRates::default(),
            chain: ChainConfig::default(),
            modifiers: ScenarioModifiers::default(),
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::Config("no regions configured".into()));
        }
        for r in &self.regions {
            r.validate()?;
        }
        self.epi.validate()?;
        self.rates.validate()
    }

    pub fn baselines(&self) -> Vec<BaselineShare> {
        let pops: Vec<u64> = self.regions.iter().map(|r| r.population).collect();
        BaselineShare::apportion(&self.rates, &pops)
    }

    pub fn planning_rates(&self) -> Vec<RegionDemandRate> {
        self.regions
            .iter()
            .zip(self.baselines())
            .map(|(r, b)| RegionDemandRate {
                region_id: r.region_id.clone(),
                mean_daily: (b.hospital + b.home) as f64,
            })
            .collect()
    }

    fn region_params(&self, region: &str, scenario: DemandScenario) -> EpiParameters {
        let mut p = self.epi.clone();
        if let Some(s) = self.region_contacts.get(region) {
            p.contact_schedule = s.clone();
        }
        if scenario == DemandScenario::IncreasedContact {
            p.contact_schedule = scale_contacts(&p.contact_schedule, &self.modifiers);
        }
        p
    }

    fn scenario_rates(&self, scenario: DemandScenario) -> OcUsageRates {
        if scenario == DemandScenario::IncreasedUsage {
            increase_usage(&self.rates, &self.modifiers)
        } else {
            self.rates.clone()
        }
    }
}

/// Epidemic and demand outputs of every region, ordered by region then day.
#[derive(Debug, Clone)]
pub struct DemandRun {
    pub epidemic: Vec<EpiDailyOutput>,
    pub signals: Vec<DemandSignal>,
}

/// Runs the epidemic (skipped for pre-COVID) and the OC demand generator.
pub fn generate_demand(inputs: &StudyInputs, scenario: DemandScenario, horizon: u32, seed: u64) -> Result<DemandRun> {
    let seeds = SeedBank::new(seed);
    let rates = inputs.scenario_rates(scenario);
    let mut regions: Vec<(usize, &RegionProfile)> = inputs.regions.iter().enumerate().collect();
    regions.sort_by(|a, b| a.1.region_id.cmp(&b.1.region_id));
    let baselines = inputs.baselines();
    let mut epidemic = Vec::new();
    let mut signals = Vec::new();
    for (i, profile) in regions {
        let epi = if scenario == DemandScenario::PreCovid {
            (0..horizon)
                .map(|d| EpiDailyOutput::disease_free(&profile.region_id, d))
                .collect()
        } else {
            let params = inputs.region_params(&profile.region_id, scenario);
            run_epidemic(profile, &params, horizon, &seeds)?
        };
        signals.extend(generate_signals(
            &profile.region_id,
            profile.hospital_capacity,
            &epi,
            &rates,
            baselines[i],
            &seeds,
        ));
        epidemic.extend(epi);
    }
    Ok(DemandRun { epidemic, signals })
}

fn workforce_series(signals: &[DemandSignal]) -> HashMap<String, Vec<f64>> {
    let mut out: HashMap<String, Vec<f64>> = HashMap::new();
    for s in signals {
        let v = out.entry(s.region_id.clone()).or_default();
        let d = s.day as usize;
        if v.len() <= d {
            v.resize(d + 1, 0.0);
        }
        v[d] = s.workforce_out_fraction;
    }
    out
}

/// Runs the supply chain for one replication's demand.
pub fn run_supply_chain(
    inputs: &StudyInputs,
    demand: &DemandRun,
    strategy: Strategy,
    horizon: u32,
    seed: u64,
) -> Result<DesResult> {
    let cfg = ChainConfig {
        inventory: strategy.inventory(),
        transport: strategy.transport(),
        ..inputs.chain.clone()
    };
    let chain = build_chain(&inputs.network, &inputs.planning_rates(), &cfg)?;
    let seeds = SeedBank::new(seed);
    let orders = customer_orders(&demand.signals, &seeds);
    let mut opts = DesOptions::new(seed, f64::from(horizon));
    opts.transport = cfg.constants;
    opts.lead_time_cv = cfg.lead_time_cv;
    opts.review_days = cfg.review_days;
    opts.audit = inputs.audit;
    let result = des::run(chain, &orders, &workforce_series(&demand.signals), &opts)?;
    if result.audit.violations > 0 {
        return Err(Error::Invariant(format!(
            "{} inventory identity violations; first: {}",
            result.audit.violations,
            result.audit.first_violation.clone().unwrap_or_default()
        )));
    }
    Ok(result)
}

/// Nearest-rank percentile: the smallest value with at least `p`% of the
/// sample at or below it.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Data("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    Ok(v[rank.clamp(1, v.len()) - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub completed: usize,
    /// Orders still unfilled at the horizon, excluded from the percentiles.
    pub open: usize,
    pub median: Option<f64>,
    pub p90: Option<f64>,
}

impl ClassStats {
    pub fn from_times(times: &[f64], open: usize) -> Self {
        Self {
            completed: times.len(),
            open,
            median: percentile(times, 50.0).ok(),
            p90: percentile(times, 90.0).ok(),
        }
    }
}

/// Aggregated result of one scenario cell, pooled over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub demand_scenario: DemandScenario,
    pub strategy: Strategy,
    pub horizon: u32,
    pub seed: u64,
    pub replications: u32,
    /// National demand signal per day: every region's hospital and home
    /// units, which the distributors pass up to the assembly plant. Depends
    /// on the demand scenario only.
    pub mean_daily_manufacturer_demand: f64,
    /// Distributor replenishment units ordered per day. Depends on the
    /// strategy and moves in whole lots.
    pub mean_daily_replenishment_qty: f64,
    pub customer: ClassStats,
    pub distributor: ClassStats,
    pub parts: ClassStats,
    /// National demand signal by day, mean over replications.
    pub manufacturer_demand_series: Vec<f64>,
    /// Replenishment units ordered by day, mean over replications.
    pub replenishment_series: Vec<f64>,
    /// Backlogged units by facility and day, mean over replications.
    pub backlog_series: BTreeMap<String, Vec<f64>>,
    /// Distributor on-hand by region and day, mean over replications.
    pub availability_series: BTreeMap<String, Vec<f64>>,
    /// Customer units ordered by region and day, mean over replications.
    pub customer_demand_series: BTreeMap<String, Vec<f64>>,
}

impl MetricsReport {
    pub fn class(&self, class: OrderClass) -> &ClassStats {
        match class {
            OrderClass::Customer => &self.customer,
            OrderClass::DistributorReplenishment => &self.distributor,
            OrderClass::AssemblyParts => &self.parts,
        }
    }
}

/// Pools replications into one report.
pub fn aggregate(spec: &ScenarioSpec, runs: &[(&DemandRun, &DesResult)]) -> Result<MetricsReport> {
    let h = spec.horizon as usize;
    let n = runs.len() as f64;
    if runs.is_empty() {
        return Err(Error::Config("no replications to aggregate".into()));
    }
    let mut times: BTreeMap<OrderClass, (Vec<f64>, usize)> = BTreeMap::new();
    let mut mfr = vec![0.0; h];
    let mut repl = vec![0.0; h];
    let mut backlog: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut avail: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cust: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (demand, des) in runs {
        for o in &des.orders {
            let e = times.entry(o.class).or_default();
            match o.fulfillment_time() {
                Some(t) => e.0.push(t),
                None => e.1 += 1,
            }
            if o.class == OrderClass::DistributorReplenishment {
                let d = o.placed_at.floor() as usize;
                if d < h {
                    repl[d] += o.qty as f64 / n;
                }
            }
        }
        let distributors: HashMap<&str, &str> = des
            .facilities
            .iter()
            .filter(|f| f.kind == StockKind::Distributor)
            .filter_map(|f| Some((f.name.as_str(), f.region.as_deref()?)))
            .collect();
        for row in &des.inventory {
            let d = row.day as usize;
            backlog.entry(row.facility.clone()).or_insert_with(|| vec![0.0; h])[d] += row.backlog as f64 / n;
            if let Some(region) = distributors.get(row.facility.as_str()) {
                avail.entry(region.to_string()).or_insert_with(|| vec![0.0; h])[d] += row.on_hand as f64 / n;
            }
        }
        for s in &demand.signals {
            let d = s.day as usize;
            if d < h {
                let q = s.total_qty() as f64;
                cust.entry(s.region_id.clone()).or_insert_with(|| vec![0.0; h])[d] += q / n;
                mfr[d] += q / n;
            }
        }
    }
    let stats = |c: OrderClass| {
        let (t, open) = times.get(&c).cloned().unwrap_or_default();
        ClassStats::from_times(&t, open)
    };
    let hf = f64::from(spec.horizon);
    Ok(MetricsReport {
        demand_scenario: spec.demand_scenario,
        strategy: spec.strategy,
        horizon: spec.horizon,
        seed: spec.seed,
        replications: spec.replications,
        mean_daily_manufacturer_demand: mfr.iter().sum::<f64>() / hf,
        mean_daily_replenishment_qty: repl.iter().sum::<f64>() / hf,
        customer: stats(OrderClass::Customer),
        distributor: stats(OrderClass::DistributorReplenishment),
        parts: stats(OrderClass::AssemblyParts),
        manufacturer_demand_series: mfr,
        replenishment_series: repl,
        backlog_series: backlog,
        availability_series: avail,
        customer_demand_series: cust,
    })
}

/// Raw artifacts of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationOutput {
    pub seed: u64,
    pub demand: DemandRun,
    pub des: DesResult,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: MetricsReport,
    pub replications: Vec<ReplicationOutput>,
}

/// Runs one cell end to end, replications in parallel.
pub fn run_scenario(spec: &ScenarioSpec, inputs: &StudyInputs) -> Result<ScenarioRun> {
    spec.validate()?;
    inputs.validate()?;
    let reps: Vec<ReplicationOutput> = (0..spec.replications)
        .into_par_iter()
        .map(|k| {
            let seed = spec.replication_seed(k);
            let demand = generate_demand(inputs, spec.demand_scenario, spec.horizon, seed)?;
            let des = run_supply_chain(inputs, &demand, spec.strategy, spec.horizon, seed)?;
            Ok(ReplicationOutput { seed, demand, des })
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<_> = reps.iter().map(|r| (&r.demand, &r.des)).collect();
    let report = aggregate(spec, &pairs)?;
    Ok(ScenarioRun {
        report,
        replications: reps,
    })
}

/// Runs every (scenario, strategy) pair. Demand is generated once per
/// (scenario, replication) and shared by all strategies, so strategies are
/// compared on identical customer orders.
pub fn run_matrix(
    inputs: &StudyInputs,
    scenarios: &[DemandScenario],
    strategies: &[Strategy],
    horizon: u32,
    seed: u64,
    replications: u32,
) -> Result<Vec<MetricsReport>> {
    inputs.validate()?;
    let base = ScenarioSpec {
        demand_scenario: DemandScenario::PreCovid,
        strategy: Strategy::StaticGround,
        horizon,
        seed,
        replications,
    };
    base.validate()?;
    let demand_cells: Vec<(DemandScenario, u32)> = scenarios
        .iter()
        .flat_map(|&s| (0..replications).map(move |k| (s, k)))
        .collect();
    let demands: Vec<DemandRun> = demand_cells
        .par_iter()
        .map(|&(s, k)| generate_demand(inputs, s, horizon, base.replication_seed(k)))
        .collect::<Result<_>>()?;
    let des_cells: Vec<(usize, Strategy)> = (0..demand_cells.len())
        .flat_map(|i| strategies.iter().map(move |&st| (i, st)))
        .collect();
    let results: Vec<DesResult> = des_cells
        .par_iter()
        .map(|&(i, st)| {
            let (_, k) = demand_cells[i];
            run_supply_chain(inputs, &demands[i], st, horizon, base.replication_seed(k))
        })
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for &scenario in scenarios {
        for &strategy in strategies {
            let spec = ScenarioSpec {
                demand_scenario: scenario,
                strategy,
                ..base.clone()
            };
            let pairs: Vec<_> = des_cells
                .iter()
                .zip(&results)
                .filter(|((i, st), _)| demand_cells[*i].0 == scenario && *st == strategy)
                .map(|((i, _), r)| (&demands[*i], r))
                .collect();
            reports.push(aggregate(&spec, &pairs)?);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub customer_median: Option<f64>,
    pub customer_p90: Option<f64>,
    pub distributor_median: Option<f64>,
    pub distributor_p90: Option<f64>,
    /// Differences from the first row, in the same column order.
    pub delta: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub demand_scenario: DemandScenario,
    pub rows: Vec<ComparisonRow>,
}

/// Lines up strategies for one demand scenario against the first report.
pub fn compare_strategies(reports: &[MetricsReport]) -> Result<ComparisonTable> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("no reports to compare".into()))?;
    if reports.iter().any(|r| r.demand_scenario != first.demand_scenario) {
        return Err(Error::Config("reports mix demand scenarios".into()));
    }
    let cols = |r: &MetricsReport| {
        [
            r.customer.median,
            r.customer.p90,
            r.distributor.median,
            r.distributor.p90,
        ]
    };
    let reference = cols(first);
    let rows = reports
        .iter()
        .map(|r| {
            let c = cols(r);
            let mut delta = [None; 4];
            for i in 0..4 {
                delta[i] = c[i].zip(reference[i]).map(|(a, b)| a - b);
            }
            ComparisonRow {
                strategy: r.strategy,
                customer_median: c[0],
                customer_p90: c[1],
                distributor_median: c[2],
                distributor_p90: c[3],
                delta,
            }
        })
        .collect();
    Ok(ComparisonTable {
        demand_scenario: first.demand_scenario,
        rows,
    })
}

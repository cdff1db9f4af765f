//! Oxygen concentrator demand derived from the daily epidemic output.
//!
//! Each region keeps a hospital OC pool. New COVID admissions may need a
//! unit, which they hold until they leave hospital. Idle units are scrapped
//! at a daily rate, and the pool is topped up by a blanket rule: once the
//! units required exceed `1 - inventory_rate` of what is on hand, the
//! hospitals order `inventory_rate` of the requirement. Home demand comes
//! from discharges plus a pre-COVID baseline.
//!
//! Coupling is one way: the units ordered by hospitals are credited to the
//! pool immediately and also emitted as demand on the supply chain.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epi::{largest_remainder, EpiDailyOutput};
use crate::error::{Error, Result};
use crate::rng::{region_key, SeedBank, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcUsageRates {
    /// Share of COVID admissions needing an OC.
    pub hospital_covid_usage: f64,
    /// Share of regular discharges needing a home OC.
    pub discharge_usage: f64,
    /// Share of overflow discharges needing a home OC.
    pub overflow_discharge_usage: f64,
    pub inventory_rate: f64,
    /// Share of idle hospital units scrapped per day.
    pub scrap_rate: f64,
    pub units_per_bed: f64,
    /// National pre-COVID hospital demand, units/day.
    pub precovid_hospital_demand: f64,
    /// National pre-COVID home demand, units/day.
    pub precovid_home_demand: f64,
}

impl Default for OcUsageRates {
    fn default() -> Self {
        Self {
            hospital_covid_usage: 0.065,
            discharge_usage: 0.01,
            overflow_discharge_usage: 0.02,
            inventory_rate: 0.10,
            scrap_rate: 0.01,
            units_per_bed: 0.1,
            precovid_hospital_demand: 171.0,
            precovid_home_demand: 545.0,
        }
    }
}

impl OcUsageRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hospital_covid_usage", self.hospital_covid_usage),
            ("discharge_usage", self.discharge_usage),
            ("overflow_discharge_usage", self.overflow_discharge_usage),
            ("inventory_rate", self.inventory_rate),
            ("scrap_rate", self.scrap_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("oc.{name} = {v} outside [0,1]")));
            }
        }
        for (name, v) in [
            ("units_per_bed", self.units_per_bed),
            ("precovid_hospital_demand", self.precovid_hospital_demand),
            ("precovid_home_demand", self.precovid_home_demand),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("oc.{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// A region's share of the national pre-COVID baselines, in units/day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BaselineShare {
    pub hospital: u64,
    pub home: u64,
}

impl BaselineShare {
    /// Splits the national baselines over regions by population. The
    /// per-region values sum exactly to the (rounded) national totals.
    pub fn apportion(rates: &OcUsageRates, populations: &[u64]) -> Vec<BaselineShare> {
        let hosp = largest_remainder(rates.precovid_hospital_demand.round() as u64, populations);
        let home = largest_remainder(rates.precovid_home_demand.round() as u64, populations);
        hosp.into_iter()
            .zip(home)
            .map(|(hospital, home)| BaselineShare { hospital, home })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HospitalOcState {
    pub region_id: String,
    pub on_hand: u64,
    pub in_use: u64,
    pub scrapped_cumulative: u64,
    /// Units attached to patients, keyed by the day the patients leave.
    pub holdings: BTreeMap<u32, u64>,
}

impl HospitalOcState {
    pub fn new(region_id: impl Into<String>, on_hand: u64) -> Self {
        Self {
            region_id: region_id.into(),
            on_hand,
            in_use: 0,
            scrapped_cumulative: 0,
            holdings: BTreeMap::new(),
        }
    }

    pub fn idle(&self) -> u64 {
        self.on_hand - self.in_use
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttachOutcome {
    pub released: u64,
    pub needed: u64,
    pub attached: u64,
    /// Patients who needed a unit but found none idle.
    pub unmet: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandSignal {
    pub region_id: String,
    pub day: u32,
    pub hospital_baseline_qty: u64,
    pub hospital_trigger_qty: u64,
    /// `hospital_baseline_qty + hospital_trigger_qty`.
    pub hospital_order_qty: u64,
    pub home_order_qty: u64,
    pub covid_patients: u64,
    pub oc_in_use: u64,
    pub oc_on_hand: u64,
    pub oc_scrapped_today: u64,
    pub oc_shortfall: u64,
    pub workforce_out_fraction: f64,
}

impl DemandSignal {
    pub fn total_qty(&self) -> u64 {
        self.hospital_order_qty + self.home_order_qty
    }
}

/// Units held by a region's hospitals at the start.
pub fn initial_stock(hospital_capacity: u64, rates: &OcUsageRates) -> u64 {
    (rates.units_per_bed * hospital_capacity as f64).round() as u64
}

/// Frees units of patients leaving today, then lets each new admission draw
/// whether it needs a unit. Admissions are visited in the order of
/// `epi_out.admissions` with one uniform draw per person, so a higher usage
/// rate on the same stream needs a superset of the same patients.
pub fn attach_and_release<R: Rng + ?Sized>(
    epi_out: &EpiDailyOutput,
    state: &mut HospitalOcState,
    rates: &OcUsageRates,
    rng: &mut R,
) -> AttachOutcome {
    let mut out = AttachOutcome::default();
    let due: Vec<u32> = state.holdings.range(..=epi_out.day).map(|(d, _)| *d).collect();
    for d in due {
        out.released += state.holdings.remove(&d).unwrap_or(0);
    }
    state.in_use -= out.released;

    for adm in &epi_out.admissions {
        let need = (0..adm.count)
            .filter(|_| rng.random::<f64>() < rates.hospital_covid_usage)
            .count() as u64;
        let take = need.min(state.idle());
        if take > 0 {
            state.in_use += take;
            *state.holdings.entry(adm.discharge_day).or_insert(0) += take;
        }
        out.needed += need;
        out.attached += take;
        out.unmet += need - take;
    }
    out
}

/// Scraps `round(scrap_rate * on_hand)` units, never touching units in use.
pub fn daily_scrap(state: &mut HospitalOcState, rates: &OcUsageRates) -> u64 {
    let target = (rates.scrap_rate * state.on_hand as f64).round() as u64;
    let n = target.min(state.idle());
    state.on_hand -= n;
    state.scrapped_cumulative += n;
    n
}

/// Blanket hospital reorder: fires when `in_use + requirement` exceeds
/// `(1 - inventory_rate) * on_hand` and then orders
/// `ceil(inventory_rate * (in_use + requirement))`.
pub fn hospital_replenishment_trigger(state: &HospitalOcState, current_requirement: u64, rates: &OcUsageRates) -> u64 {
    let total = (state.in_use + current_requirement) as f64;
    if total > (1.0 - rates.inventory_rate) * state.on_hand as f64 {
        ceil_units(rates.inventory_rate * total)
    } else {
        0
    }
}

/// Home units needed today, including the region's pre-COVID share.
pub fn home_demand(epi_out: &EpiDailyOutput, rates: &OcUsageRates, baseline: &BaselineShare) -> u64 {
    (rates.discharge_usage * epi_out.new_discharges as f64).round() as u64
        + (rates.overflow_discharge_usage * epi_out.new_overflow_discharges as f64).round() as u64
        + baseline.home
}

pub fn emit_signal(
    epi_out: &EpiDailyOutput,
    state: &HospitalOcState,
    baseline: &BaselineShare,
    trigger_qty: u64,
    home_qty: u64,
    scrapped_today: u64,
    shortfall: u64,
) -> DemandSignal {
    DemandSignal {
        region_id: state.region_id.clone(),
        day: epi_out.day,
        hospital_baseline_qty: baseline.hospital,
        hospital_trigger_qty: trigger_qty,
        hospital_order_qty: baseline.hospital + trigger_qty,
        home_order_qty: home_qty,
        covid_patients: epi_out.hospitalized_count,
        oc_in_use: state.in_use,
        oc_on_hand: state.on_hand,
        oc_scrapped_today: scrapped_today,
        oc_shortfall: shortfall,
        workforce_out_fraction: epi_out.workforce_out_fraction,
    }
}

/// Per-region daily demand generator.
#[derive(Debug, Clone)]
pub struct RegionDemand {
    pub rates: OcUsageRates,
    pub baseline: BaselineShare,
    pub state: HospitalOcState,
}

impl RegionDemand {
    pub fn new(region_id: &str, hospital_capacity: u64, rates: OcUsageRates, baseline: BaselineShare) -> Self {
        let stock = initial_stock(hospital_capacity, &rates);
        Self {
            state: HospitalOcState::new(region_id, stock),
            rates,
            baseline,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, epi_out: &EpiDailyOutput, rng: &mut R) -> DemandSignal {
        let attach = attach_and_release(epi_out, &mut self.state, &self.rates, rng);
        let trigger = hospital_replenishment_trigger(&self.state, attach.unmet, &self.rates);
        self.state.on_hand += trigger;
        let scrapped = daily_scrap(&mut self.state, &self.rates);
        let home = home_demand(epi_out, &self.rates, &self.baseline);
        emit_signal(
            epi_out,
            &self.state,
            &self.baseline,
            trigger,
            home,
            scrapped,
            attach.unmet,
        )
    }
}

/// Runs the demand generator over a whole epidemic series.
pub fn generate_signals(
    region_id: &str,
    hospital_capacity: u64,
    epi: &[EpiDailyOutput],
    rates: &OcUsageRates,
    baseline: BaselineShare,
    seeds: &SeedBank,
) -> Vec<DemandSignal> {
    let key = region_key(region_id);
    let mut model = RegionDemand::new(region_id, hospital_capacity, rates.clone(), baseline);
    epi.iter()
        .map(|o| {
            let mut rng = seeds.stream(Stream::OcAttachment, &[key, u64::from(o.day)]);
            model.step(o, &mut rng)
        })
        .collect()
}

/// `ceil` that ignores float noise just above an integer.
pub(crate) fn ceil_units(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epi::Admission;

    fn epi_day(day: u32) -> EpiDailyOutput {
        EpiDailyOutput::disease_free("AZ", day)
    }

    fn rng(k: u64) -> crate::rng::SimRng {
        SeedBank::new(11).stream(Stream::OcAttachment, &[k])
    }

    #[test]
    fn initial_stock_examples() {
        let r = OcUsageRates::default();
        assert_eq!(initial_stock(14_000, &r), 1_400);
        assert_eq!(initial_stock(0, &r), 0);
        assert_eq!(initial_stock(57, &r), 6);
    }

    #[test]
    fn no_admissions_leaves_in_use_unchanged() {
        let mut s = HospitalOcState::new("AZ", 100);
        s.in_use = 7;
        s.holdings.insert(50, 7);
        let out = attach_and_release(&epi_day(3), &mut s, &OcUsageRates::default(), &mut rng(0));
        assert_eq!(s.in_use, 7);
        assert_eq!(out, AttachOutcome::default());
    }

    #[test]
    fn attachment_rate_matches_binomial_mean() {
        // E[attachments] = 1000 * 0.065 = 65
        let rates = OcUsageRates::default();
        let mut o = epi_day(0);
        o.admissions = vec![Admission {
            admission_day: 0,
            discharge_day: 10,
            overflow: false,
            count: 1_000,
        }];
        let trials = 10_000;
        let mut total = 0;
        let mut r = rng(1);
        for _ in 0..trials {
            let mut s = HospitalOcState::new("AZ", 10_000);
            total += attach_and_release(&o, &mut s, &rates, &mut r).attached;
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 65.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn discharge_releases_unit_to_stock() {
        let mut s = HospitalOcState::new("AZ", 10);
        s.in_use = 1;
        s.holdings.insert(4, 1);
        let out = attach_and_release(&epi_day(4), &mut s, &OcUsageRates::default(), &mut rng(2));
        assert_eq!(out.released, 1);
        assert_eq!(s.in_use, 0);
        assert_eq!(s.on_hand, 10);
    }

    #[test]
    fn attachments_limited_to_idle_units() {
        let rates = OcUsageRates {
            hospital_covid_usage: 1.0,
            ..OcUsageRates::default()
        };
        let mut o = epi_day(0);
        o.admissions = vec![Admission {
            admission_day: 0,
            discharge_day: 9,
            overflow: false,
            count: 5,
        }];
        let mut s = HospitalOcState::new("AZ", 3);
        let out = attach_and_release(&o, &mut s, &rates, &mut rng(3));
        assert_eq!((out.needed, out.attached, out.unmet), (5, 3, 2));
        assert_eq!(s.in_use, 3);
        assert_eq!(s.holdings.get(&9), Some(&3));
    }

    #[test]
    fn scrap_examples() {
        let r = OcUsageRates::default();
        let mut s = HospitalOcState::new("AZ", 0);
        assert_eq!(daily_scrap(&mut s, &r), 0);
        let mut s = HospitalOcState::new("AZ", 1_400);
        assert_eq!(daily_scrap(&mut s, &r), 14);
        assert_eq!(s.on_hand, 1_386);
        let mut s = HospitalOcState::new("AZ", 100);
        s.in_use = 99;
        assert_eq!(daily_scrap(&mut s, &r), 1);
        let mut s = HospitalOcState::new("AZ", 500);
        s.in_use = 500;
        assert_eq!(daily_scrap(&mut s, &r), 0);
        assert_eq!(s.scrapped_cumulative, 0);
    }

    #[test]
    fn trigger_examples() {
        let r = OcUsageRates::default();
        let mut s = HospitalOcState::new("AZ", 1_000);
        s.in_use = 800;
        assert_eq!(hospital_replenishment_trigger(&s, 50, &r), 0);
        assert_eq!(hospital_replenishment_trigger(&s, 100, &r), 0);
        assert_eq!(hospital_replenishment_trigger(&s, 150, &r), 95);
    }

    /// Integer form of the trigger rule for rates expressed in percent.
    fn trigger_oracle(on_hand: u64, in_use: u64, req: u64, rate_pct: u64) -> u64 {
        let total = in_use + req;
        if 100 * total > (100 - rate_pct) * on_hand {
            (rate_pct * total).div_ceil(100)
        } else {
            0
        }
    }

    #[test]
    fn trigger_matches_integer_oracle_on_grid() {
        for (rate, pct) in [(0.10, 10), (0.15, 15), (0.05, 5)] {
            let rates = OcUsageRates {
                inventory_rate: rate,
                ..OcUsageRates::default()
            };
            for on_hand in (0..=400).step_by(7) {
                for in_use in 0..=on_hand.min(300) {
                    for req in [0, 1, 2, 3, 5, 8, 13, 40, 120] {
                        let mut s = HospitalOcState::new("X", on_hand);
                        s.in_use = in_use;
                        assert_eq!(
                            hospital_replenishment_trigger(&s, req, &rates),
                            trigger_oracle(on_hand, in_use, req, pct),
                            "on_hand {on_hand} in_use {in_use} req {req} rate {rate}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn home_demand_examples() {
        let r = OcUsageRates::default();
        let zero = BaselineShare::default();
        assert_eq!(home_demand(&epi_day(0), &r, &zero), 0);
        let mut o = epi_day(0);
        o.new_overflow_discharges = 200;
        assert_eq!(home_demand(&o, &r, &zero), 4);
    }

    #[test]
    fn baselines_apportion_exactly() {
        let r = OcUsageRates::default();
        let shares = BaselineShare::apportion(&r, &[731_545, 7_278_717, 39_512_223, 623_989]);
        assert_eq!(shares.iter().map(|s| s.hospital).sum::<u64>(), 171);
        assert_eq!(shares.iter().map(|s| s.home).sum::<u64>(), 545);
        assert!(shares[2].home > shares[1].home);
    }

    #[test]
    fn disease_free_day_with_zero_baseline_is_all_zero() {
        let r = OcUsageRates::default();
        let mut m = RegionDemand::new("VT", 0, r, BaselineShare::default());
        let s = m.step(&epi_day(0), &mut rng(4));
        assert_eq!(s.total_qty(), 0);
        assert_eq!(
            (s.oc_in_use, s.oc_on_hand, s.oc_scrapped_today, s.covid_patients),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn ceil_units_ignores_float_noise() {
        assert_eq!(ceil_units(0.1 * 950.0), 95);
        assert_eq!(ceil_units(95.2), 96);
        assert_eq!(ceil_units(0.0), 0);
        assert_eq!(ceil_units(58.800000000000004), 59);
    }
}

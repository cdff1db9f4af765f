//! Per-region modified SIR dynamics.
//!
//! Five integer stocks (susceptible, infectious, hospitalized, deceased,
//! recovered) advance one day at a time. Aggregate flows are rounded to
//! whole persons; hospital admissions are individual agents that each draw
//! their own length of stay. Infection and recovery cohorts are kept as
//! dated ledgers so that recovery and loss of immunity happen after fixed
//! delays rather than at exponential rates.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{region_key, SeedBank, Stream};

/// Baseline parameter values.
pub const DEFAULT_ILLNESS_DURATION: u32 = 15;
pub const DEFAULT_HOSPITALIZATION_RATE: f64 = 0.01;
pub const DEFAULT_LOS_MIN: u32 = 8;
pub const DEFAULT_LOS_MAX: u32 = 15;
pub const DEFAULT_IMMUNITY_DURATION: u32 = 30;
pub const DEFAULT_WORKFORCE_SHARE: f64 = 0.5;

pub const DEFAULT_OVERFLOW_LOS_MIN: u32 = 4;
pub const DEFAULT_OVERFLOW_LOS_MAX: u32 = 8;
pub const DEFAULT_INFECTIVITY: f64 = 0.05;
pub const DEFAULT_HOSPITAL_MORTALITY_RATE: f64 = 0.02;
pub const DEFAULT_COMMUNITY_MORTALITY_RATE: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionProfile {
    pub region_id: String,
    pub population: u64,
    pub hospital_capacity: u64,
    pub initial_infected: u64,
    pub workforce_share: f64,
}

impl RegionProfile {
    pub fn new(region_id: impl Into<String>, population: u64, hospital_capacity: u64, initial_infected: u64) -> Self {
        Self {
            region_id: region_id.into(),
            population,
            hospital_capacity,
            initial_infected,
            workforce_share: DEFAULT_WORKFORCE_SHARE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::Data(format!(
                "region {}: population must be > 0",
                self.region_id
            )));
        }
        if self.initial_infected > self.population {
            return Err(Error::Data(format!(
                "region {}: initial_infected {} exceeds population {}",
                self.region_id, self.initial_infected, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.workforce_share) {
            return Err(Error::Data(format!(
                "region {}: workforce_share {} outside [0,1]",
                self.region_id, self.workforce_share
            )));
        }
        Ok(())
    }
}

/// Inclusive integer bounds of a uniform length-of-stay distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LosBounds {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiParameters {
    pub illness_duration: u32,
    pub hospitalization_rate: f64,
    pub los: LosBounds,
    /// Stay drawn when the hospital is at or over capacity.
    pub overflow_los: LosBounds,
    pub immunity_duration: u32,
    pub infectivity: f64,
    /// Contacts per person per day, indexed by day.
    pub contact_schedule: Vec<f64>,
    pub hospital_mortality_rate: f64,
    pub community_mortality_rate: f64,
}

impl EpiParameters {
    /// Baseline parameters with the given contact schedule.
    pub fn baseline(contact_schedule: Vec<f64>) -> Self {
        Self {
            illness_duration: DEFAULT_ILLNESS_DURATION,
            hospitalization_rate: DEFAULT_HOSPITALIZATION_RATE,
            los: LosBounds {
                min: DEFAULT_LOS_MIN,
                max: DEFAULT_LOS_MAX,
            },
            overflow_los: LosBounds {
                min: DEFAULT_OVERFLOW_LOS_MIN,
                max: DEFAULT_OVERFLOW_LOS_MAX,
            },
            immunity_duration: DEFAULT_IMMUNITY_DURATION,
            infectivity: DEFAULT_INFECTIVITY,
            contact_schedule,
            hospital_mortality_rate: DEFAULT_HOSPITAL_MORTALITY_RATE,
            community_mortality_rate: DEFAULT_COMMUNITY_MORTALITY_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.illness_duration == 0 {
            return bad("illness_duration must be > 0".into());
        }
        if self.immunity_duration == 0 {
            return bad("immunity_duration must be > 0".into());
        }
        for (name, b) in [("los", self.los), ("overflow_los", self.overflow_los)] {
            if b.min == 0 || b.min > b.max {
                return bad(format!("{name} bounds [{}, {}] invalid", b.min, b.max));
            }
        }
        for (name, v) in [
            ("hospitalization_rate", self.hospitalization_rate),
            ("infectivity", self.infectivity),
            ("hospital_mortality_rate", self.hospital_mortality_rate),
            ("community_mortality_rate", self.community_mortality_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0,1]"));
            }
        }
        if let Some(c) = self.contact_schedule.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return bad(format!("contact rate {c} must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn contact_rate(&self, day: u32) -> Result<f64> {
        self.contact_schedule.get(day as usize).copied().ok_or(Error::Horizon {
            day,
            len: self.contact_schedule.len(),
        })
    }
}

/// A group of people who entered a stock on the same day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cohort {
    pub day: u32,
    pub count: u64,
}

/// Hospital admissions sharing an admission day, discharge day and regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admission {
    pub admission_day: u32,
    pub discharge_day: u32,
    pub overflow: bool,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiState {
    /// Next day to simulate.
    pub day: u32,
    pub susceptible: u64,
    pub infectious: u64,
    pub hospitalized: u64,
    pub deceased: u64,
    pub recovered: u64,
    pub infection_cohorts: VecDeque<Cohort>,
    pub admission_ledger: Vec<Admission>,
    pub recovery_cohorts: VecDeque<Cohort>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiDailyOutput {
    pub region_id: String,
    pub day: u32,
    pub new_infections: u64,
    pub new_admissions: u64,
    /// Non-overflow patients leaving hospital alive.
    pub new_discharges: u64,
    /// Overflow patients leaving hospital alive.
    pub new_overflow_discharges: u64,
    /// Community recoveries (I -> R) after the illness period.
    pub new_recoveries: u64,
    pub new_deaths: u64,
    pub returns_to_susceptible: u64,
    pub infectious_count: u64,
    pub hospitalized_count: u64,
    pub workforce_out_fraction: f64,
    /// Today's admissions grouped by discharge day and regime.
    pub admissions: Vec<Admission>,
}

impl EpiDailyOutput {
    /// Output of a day with no disease activity at all.
    pub fn disease_free(region_id: &str, day: u32) -> Self {
        Self {
            region_id: region_id.to_string(),
            day,
            new_infections: 0,
            new_admissions: 0,
            new_discharges: 0,
            new_overflow_discharges: 0,
            new_recoveries: 0,
            new_deaths: 0,
            returns_to_susceptible: 0,
            infectious_count: 0,
            hospitalized_count: 0,
            workforce_out_fraction: 0.0,
            admissions: Vec::new(),
        }
    }
}

pub fn init_region(profile: &RegionProfile, params: &EpiParameters) -> Result<EpiState> {
    profile.validate()?;
    params.validate()?;
    let mut infection_cohorts = VecDeque::new();
    if profile.initial_infected > 0 {
        infection_cohorts.push_back(Cohort {
            day: 0,
            count: profile.initial_infected,
        });
    }
    Ok(EpiState {
        day: 0,
        susceptible: profile.population - profile.initial_infected,
        infectious: profile.initial_infected,
        hospitalized: 0,
        deceased: 0,
        recovered: 0,
        infection_cohorts,
        admission_ledger: Vec::new(),
        recovery_cohorts: VecDeque::new(),
    })
}

/// Frequency-dependent incidence `c * p * S * I / N`, rounded and clamped to `[0, S]`.
pub fn infection_flow(state: &EpiState, contact_rate: f64, infectivity: f64) -> u64 {
    let n = state.population();
    if n == 0 || state.susceptible == 0 || state.infectious == 0 {
        return 0;
    }
    let raw = contact_rate * infectivity * state.susceptible as f64 * state.infectious as f64 / n as f64;
    round_clamped(raw, state.susceptible)
}

/// Length of stay for one admission.
pub fn sample_los<R: Rng + ?Sized>(rng: &mut R, at_capacity: bool, params: &EpiParameters) -> u32 {
    let b = if at_capacity { params.overflow_los } else { params.los };
    rng.random_range(b.min..=b.max)
}

impl EpiState {
    pub fn population(&self) -> u64 {
        self.susceptible + self.infectious + self.hospitalized + self.deceased + self.recovered
    }

    /// Advances one day, applying the six flows in order:
    /// infection, hospitalization, cohort recovery, hospital discharge,
    /// community death and loss of immunity.
    pub fn step_day<R: Rng + ?Sized>(
        &mut self,
        profile: &RegionProfile,
        params: &EpiParameters,
        rng: &mut R,
    ) -> Result<EpiDailyOutput> {
        let d = self.day;
        let contact = params.contact_rate(d)?;

        // (1) S -> I
        let new_infections = infection_flow(self, contact, params.infectivity);
        self.susceptible -= new_infections;
        self.infectious += new_infections;
        if new_infections > 0 {
            self.infection_cohorts.push_back(Cohort {
                day: d,
                count: new_infections,
            });
        }

        // (2) I -> H, one agent at a time
        let new_admissions = round_clamped(params.hospitalization_rate * self.infectious as f64, self.infectious);
        take_from_cohorts(&mut self.infection_cohorts, new_admissions);
        self.infectious -= new_admissions;
        let span = params.los.max.max(params.overflow_los.max) as usize + 1;
        let mut by_los = vec![[0u64; 2]; span];
        for _ in 0..new_admissions {
            let overflow = self.hospitalized >= profile.hospital_capacity;
            let los = sample_los(rng, overflow, params);
            by_los[los as usize][overflow as usize] += 1;
            self.hospitalized += 1;
        }
        let mut admissions = Vec::new();
        for (los, counts) in by_los.iter().enumerate() {
            for (regime, &count) in counts.iter().enumerate() {
                if count > 0 {
                    admissions.push(Admission {
                        admission_day: d,
                        discharge_day: d + los as u32,
                        overflow: regime == 1,
                        count,
                    });
                }
            }
        }
        self.admission_ledger.extend_from_slice(&admissions);

        // (3) I -> R for cohorts that reached the end of the illness
        let mut new_recoveries = 0;
        while let Some(front) = self.infection_cohorts.front() {
            if front.day + params.illness_duration > d {
                break;
            }
            new_recoveries += front.count;
            self.infection_cohorts.pop_front();
        }
        self.infectious -= new_recoveries;

        // (4) H -> R / H -> D for ledger entries due today
        let (due, kept): (Vec<Admission>, Vec<Admission>) =
            self.admission_ledger.iter().partition(|a| a.discharge_day <= d);
        self.admission_ledger = kept;
        let leaving: u64 = due.iter().map(|a| a.count).sum();
        let hospital_deaths = round_clamped(params.hospital_mortality_rate * leaving as f64, leaving);
        let weights: Vec<u64> = due.iter().map(|a| a.count).collect();
        let deaths_by_entry = largest_remainder(hospital_deaths, &weights);
        let mut new_discharges = 0;
        let mut new_overflow_discharges = 0;
        for (a, dead) in due.iter().zip(&deaths_by_entry) {
            let alive = a.count - dead;
            if a.overflow {
                new_overflow_discharges += alive;
            } else {
                new_discharges += alive;
            }
        }
        self.hospitalized -= leaving;
        self.deceased += hospital_deaths;

        // (5) I -> D
        let community_deaths = round_clamped(
            params.community_mortality_rate * self.infectious as f64,
            self.infectious,
        );
        take_from_cohorts(&mut self.infection_cohorts, community_deaths);
        self.infectious -= community_deaths;
        self.deceased += community_deaths;

        let recovered_today = new_recoveries + new_discharges + new_overflow_discharges;
        self.recovered += recovered_today;
        if recovered_today > 0 {
            self.recovery_cohorts.push_back(Cohort {
                day: d,
                count: recovered_today,
            });
        }

        // (6) R -> S after the immunity period
        let mut returns = 0;
        while let Some(front) = self.recovery_cohorts.front() {
            if front.day + params.immunity_duration > d {
                break;
            }
            returns += front.count;
            self.recovery_cohorts.pop_front();
        }
        self.recovered -= returns;
        self.susceptible += returns;

        debug_assert_eq!(self.population(), profile.population);
        debug_assert_eq!(
            self.infectious,
            self.infection_cohorts.iter().map(|c| c.count).sum::<u64>()
        );
        if self.population() != profile.population {
            return Err(Error::Invariant(format!(
                "region {} day {d}: stocks sum to {} but population is {}",
                profile.region_id,
                self.population(),
                profile.population
            )));
        }

        self.day += 1;
        Ok(EpiDailyOutput {
            region_id: profile.region_id.clone(),
            day: d,
            new_infections,
            new_admissions,
            new_discharges,
            new_overflow_discharges,
            new_recoveries,
            new_deaths: hospital_deaths + community_deaths,
            returns_to_susceptible: returns,
            infectious_count: self.infectious,
            hospitalized_count: self.hospitalized,
            workforce_out_fraction: self.infectious as f64 / profile.population as f64,
            admissions,
        })
    }
}

/// Infected workers implied by the current infectious stock.
pub fn infected_workers(profile: &RegionProfile, infectious: u64) -> f64 {
    infectious as f64 * profile.workforce_share
}

/// Runs `horizon` days. Length-of-stay draws come from a per-(region, day)
/// substream of `seeds`.
pub fn run_epidemic(
    profile: &RegionProfile,
    params: &EpiParameters,
    horizon: u32,
    seeds: &SeedBank,
) -> Result<Vec<EpiDailyOutput>> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    let mut state = init_region(profile, params)?;
    let key = region_key(&profile.region_id);
    let mut out = Vec::with_capacity(horizon as usize);
    for day in 0..horizon {
        let mut rng = seeds.stream(Stream::LengthOfStay, &[key, u64::from(day)]);
        out.push(state.step_day(profile, params, &mut rng)?);
    }
    Ok(out)
}

fn round_clamped(x: f64, max: u64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    let r = x.round();
    if r >= max as f64 {
        max
    } else {
        r as u64
    }
}

/// Splits `total` over `weights` proportionally, whole units only, handing
/// the leftover units to the largest fractional remainders (earliest index
/// wins ties). When `total <= sum(weights)` no share exceeds its weight.
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if total == 0 || sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    let mut assigned = 0u64;
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        let q = (num / sum) as u64;
        shares.push(q);
        rems.push((num % sum, i));
        assigned += q;
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take((total - assigned) as usize) {
        shares[i] += 1;
    }
    shares
}

fn take_from_cohorts(cohorts: &mut VecDeque<Cohort>, total: u64) {
    if total == 0 {
        return;
    }
    let weights: Vec<u64> = cohorts.iter().map(|c| c.count).collect();
    let shares = largest_remainder(total, &weights);
    for (c, s) in cohorts.iter_mut().zip(shares) {
        c.count -= s;
    }
    cohorts.retain(|c| c.count > 0);
}

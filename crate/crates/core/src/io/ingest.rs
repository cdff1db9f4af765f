//! Readers for the region, contact-schedule and case-count tables.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::epi::{RegionProfile, DEFAULT_WORKFORCE_SHARE};
use crate::error::{Error, Result};

pub const REGIONS_HEADER: [&str; 4] = ["region_id", "population", "hospital_capacity", "initial_infected"];
pub const CONTACTS_HEADER: [&str; 3] = ["region_id", "day", "contact_rate"];
pub const ACTUALS_HEADER: [&str; 3] = ["region_id", "day", "cases"];

/// Region id in the contact table that applies to every region.
pub const ALL_REGIONS: &str = "ALL";

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, source: &str, expected: &[&str], optional: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{source}: {e}")))?
        .clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    let ok = got.len() >= expected.len()
        && got[..expected.len()] == *expected
        && got[expected.len()..].iter().all(|c| optional.contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "{source}: header must be `{}` (optional: {}), found `{}`",
            expected.join(","),
            if optional.is_empty() {
                "none".to_string()
            } else {
                optional.join(",")
            },
            got.join(",")
        )))
    }
}

#[derive(Deserialize)]
struct RegionRow {
    region_id: String,
    population: String,
    hospital_capacity: String,
    initial_infected: String,
    #[serde(default)]
    workforce_share: Option<String>,
}

fn count(field: &str, value: &str, line: u64, source: &str) -> Result<u64> {
    let v: i64 = value
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("{source} line {line}: {field} `{value}` is not an integer")))?;
    u64::try_from(v).map_err(|_| Error::Data(format!("{source} line {line}: {field} must be >= 0, got {v}")))
}

/// Parses and validates a region table.
pub fn ingest_regions<R: Read>(reader: R, source: &str) -> Result<Vec<RegionProfile>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, source, &REGIONS_HEADER, &["workforce_share"])?;
    let mut out: Vec<RegionProfile> = Vec::new();
    for (i, row) in rdr.deserialize::<RegionRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::Data(format!("{source} line {line}: {e}")))?;
        if row.region_id.is_empty() || row.region_id == ALL_REGIONS {
            return Err(Error::Data(format!(
                "{source} line {line}: invalid region id `{}`",
                row.region_id
            )));
        }
        if out.iter().any(|r| r.region_id == row.region_id) {
            return Err(Error::Data(format!(
                "{source} line {line}: duplicate region {}",
                row.region_id
            )));
        }
        let mut p = RegionProfile::new(
            row.region_id,
            count("population", &row.population, line, source)?,
            count("hospital_capacity", &row.hospital_capacity, line, source)?,
            count("initial_infected", &row.initial_infected, line, source)?,
        );
        p.workforce_share = match row.workforce_share.as_deref().map(str::trim) {
            None | Some("") => DEFAULT_WORKFORCE_SHARE,
            Some(s) => s
                .parse()
                .map_err(|_| Error::Data(format!("{source} line {line}: workforce_share `{s}` is not a number")))?,
        };
        p.validate().map_err(|e| {
            Error::Data(format!(
                "{source} line {line}: {}",
                e.to_string().trim_start_matches("data validation error: ")
            ))
        })?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{source}: no regions")));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ContactRow {
    region_id: String,
    day: u32,
    contact_rate: f64,
}

/// Expands a step-function contact table into one daily schedule per region.
///
/// Each row sets the rate from `day` onward. A region with rows of its own
/// uses only those; other regions use the `ALL` rows. Every schedule must
/// start at day 0.
pub fn ingest_contacts<R: Read>(
    reader: R,
    source: &str,
    regions: &[String],
    horizon: u32,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, source, &CONTACTS_HEADER, &[])?;
    let mut steps: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<ContactRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Data(format!("{source} line {line}: {e}")))?;
        if !(row.contact_rate >= 0.0 && row.contact_rate.is_finite()) {
            return Err(Error::Data(format!("{source} line {line}: contact_rate must be >= 0")));
        }
        if row.region_id != ALL_REGIONS && !regions.contains(&row.region_id) {
            return Err(Error::Data(format!(
                "{source} line {line}: unknown region {}",
                row.region_id
            )));
        }
        if steps
            .entry(row.region_id.clone())
            .or_default()
            .insert(row.day, row.contact_rate)
            .is_some()
        {
            return Err(Error::Data(format!(
                "{source} line {line}: duplicate day {} for {}",
                row.day, row.region_id
            )));
        }
    }
    let mut out = BTreeMap::new();
    for region in regions {
        let table = steps
            .get(region)
            .or_else(|| steps.get(ALL_REGIONS))
            .ok_or_else(|| Error::Data(format!("{source}: no contact rates for {region}")))?;
        if !table.contains_key(&0) {
            return Err(Error::Data(format!(
                "{source}: schedule for {region} must start at day 0"
            )));
        }
        let schedule = (0..horizon)
            .map(|d| *table.range(..=d).next_back().expect("day 0 present").1)
            .collect();
        out.insert(region.clone(), schedule);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ActualRow {
    region_id: String,
    day: u32,
    cases: f64,
}

/// Reported case counts by region and day offset.
pub fn read_actuals<R: Read>(reader: R, source: &str) -> Result<BTreeMap<String, BTreeMap<u32, f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, source, &ACTUALS_HEADER, &[])?;
    let mut out: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<ActualRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Data(format!("{source} line {line}: {e}")))?;
        if !(row.cases >= 0.0 && row.cases.is_finite()) {
            return Err(Error::Data(format!("{source} line {line}: cases must be >= 0")));
        }
        if out
            .entry(row.region_id)
            .or_default()
            .insert(row.day, row.cases)
            .is_some()
        {
            return Err(Error::Data(format!("{source} line {line}: duplicate day {}", row.day)));
        }
    }
    Ok(out)
}

//! Checks modeled infectious counts against a case file. The "reported"
//! cases here are synthetic: the model's own curve shifted by five days and
//! scaled down, so the fit statistics have a known shape.
//!
//! cargo run --example validate_actuals

use std::collections::BTreeMap;
use std::fmt::Write;

use ocsim::epi::{run_epidemic, EpiParameters, RegionProfile};
use ocsim::io::{read_actuals, validate_against_actuals};
use ocsim::rng::SeedBank;

fn main() -> ocsim::Result<()> {
    let schedule: Vec<f64> = (0..120).map(|d| if d < 60 { 2.1 } else { 1.3 }).collect();
    let params = EpiParameters::baseline(schedule);
    let seeds = SeedBank::new(3);
    let mut model = BTreeMap::new();
    for profile in [
        RegionProfile::new("GA", 10_617_423, 25_000, 10_617),
        RegionProfile::new("MA", 6_892_503, 16_000, 6_893),
    ] {
        let days = run_epidemic(&profile, &params, 120, &seeds)?;
        model.insert(
            profile.region_id,
            days.iter().map(|d| d.infectious_count as f64).collect::<Vec<_>>(),
        );
    }

    let mut csv = String::from("region_id,day,cases\n");
    for (region, series) in &model {
        for day in 5..series.len() {
            writeln!(csv, "{region},{day},{:.0}", 0.9 * series[day - 5]).expect("writing to a String");
        }
    }
    let actual = read_actuals(csv.as_bytes(), "synthetic cases")?;

    println!(
        "{:<6} {:>5} {:>9} {:>12} {:>6}",
        "state", "days", "MAPE %", "RMSE", "peak"
    );
    for fit in validate_against_actuals(&model, &actual)? {
        println!(
            "{:<6} {:>5} {:>9.2} {:>12.0} {:>+6}",
            fit.region_id,
            fit.days,
            fit.mape.unwrap_or(f64::NAN),
            fit.rmse,
            fit.peak_day_offset
        );
    }
    Ok(())
}

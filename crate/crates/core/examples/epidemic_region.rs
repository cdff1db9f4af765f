//! One state through a 150-day wave: weekly compartment sizes, the
//! hospital peak and whether capacity was exceeded.
//!
//! cargo run --example epidemic_region

use ocsim::epi::{run_epidemic, EpiParameters, RegionProfile};
use ocsim::rng::SeedBank;

fn main() -> ocsim::Result<()> {
    let az = RegionProfile::new("AZ", 7_278_717, 14_000, 7_279);
    let schedule: Vec<f64> = (0..150).map(|d| if d < 60 { 2.1 } else { 1.3 }).collect();
    let params = EpiParameters::baseline(schedule);
    let days = run_epidemic(&az, &params, 150, &SeedBank::new(2020))?;

    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>8}",
        "day", "new inf", "infectious", "in hosp", "deaths"
    );
    let mut deaths = 0;
    for d in &days {
        deaths += d.new_deaths;
        if d.day % 7 == 0 {
            println!(
                "{:>4} {:>10} {:>10} {:>10} {:>8}",
                d.day, d.new_infections, d.infectious_count, d.hospitalized_count, deaths
            );
        }
    }
    let peak = days.iter().max_by_key(|d| d.hospitalized_count).expect("non-empty run");
    println!(
        "\nhospital peak {} on day {} against {} beds",
        peak.hospitalized_count, peak.day, az.hospital_capacity
    );
    let overflow: u64 = days.iter().map(|d| d.new_overflow_discharges).sum();
    println!("patients discharged early because beds ran out: {overflow}");
    Ok(())
}

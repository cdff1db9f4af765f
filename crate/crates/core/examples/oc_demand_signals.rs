//! Daily oxygen concentrator orders for one state under the baseline and
//! doubled-usage rates, including the bulk orders placed when the
//! hospitals' own stock runs short.
//!
//! cargo run --example oc_demand_signals

use ocsim::demand::{generate_signals, BaselineShare, OcUsageRates};
use ocsim::epi::{run_epidemic, EpiParameters, RegionProfile};
use ocsim::rng::SeedBank;
use ocsim::scenario::{increase_usage, ScenarioModifiers};

fn main() -> ocsim::Result<()> {
    let seeds = SeedBank::new(11);
    let az = RegionProfile::new("AZ", 7_278_717, 14_000, 7_279);
    let schedule: Vec<f64> = (0..150).map(|d| if d < 60 { 2.1 } else { 1.3 }).collect();
    let epi = run_epidemic(&az, &EpiParameters::baseline(schedule), 150, &seeds)?;

    // AZ's slice of the national pre-pandemic baseline, ten-state split
    let pops = [
        731_545, 7_278_717, 39_512_223, 10_617_423, 12_671_821, 6_892_503, 884_659, 623_989, 5_822_434, 578_759,
    ];
    let baseline = OcUsageRates::default();
    let share = BaselineShare::apportion(&baseline, &pops)[1];
    println!(
        "AZ baseline: {} hospital + {} home units/day",
        share.hospital, share.home
    );

    let surge = increase_usage(&baseline, &ScenarioModifiers::default());
    for (label, rates) in [("baseline usage", &baseline), ("doubled usage", &surge)] {
        let signals = generate_signals("AZ", az.hospital_capacity, &epi, rates, share, &seeds);
        let total: u64 = signals.iter().map(|s| s.total_qty()).sum();
        let bulk: Vec<(u32, u64)> = signals
            .iter()
            .filter(|s| s.hospital_trigger_qty > 0)
            .map(|s| (s.day, s.hospital_trigger_qty))
            .collect();
        let short = signals.iter().filter(|s| s.oc_shortfall > 0).count();
        println!("\n{label}: {total} units over {} days", signals.len());
        println!("  bulk hospital orders (day, units): {bulk:?}");
        println!("  days with patients short of a unit: {short}");
    }
    Ok(())
}

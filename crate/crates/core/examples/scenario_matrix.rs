//! The full experiment: four demand scenarios by three mitigation
//! strategies on the bundled ten-state instance, followed by a per-scenario
//! comparison against static inventory with ground freight.
//!
//! cargo run --release --example scenario_matrix [replications]

use std::path::Path;

use ocsim::io::{load_inputs, render_table, ReportRow, RunConfig};
use ocsim::scenario::{compare_strategies, run_matrix, DemandScenario, Strategy};

fn main() -> ocsim::Result<()> {
    let replications: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let mut cfg = RunConfig::default();
    cfg.scenario.horizon = Some(150);
    let inputs = load_inputs(&cfg, Path::new("."))?;

    let started = std::time::Instant::now();
    let reports = run_matrix(&inputs, &DemandScenario::ALL, &Strategy::ALL, 150, 2020, replications)?;
    println!("{} cells in {:.1?}\n", reports.len(), started.elapsed());

    let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from).collect();
    print!("{}", render_table(&rows));

    let pre = reports[0].mean_daily_manufacturer_demand;
    println!("mean daily manufacturer demand");
    for r in reports.iter().filter(|r| r.strategy == Strategy::StaticGround) {
        let uplift = 100.0 * (r.mean_daily_manufacturer_demand / pre - 1.0);
        println!(
            "  {:<18} {:>8.1}  ({uplift:+.1}%)",
            r.demand_scenario.as_str(),
            r.mean_daily_manufacturer_demand
        );
    }

    for chunk in reports.chunks(Strategy::ALL.len()) {
        let table = compare_strategies(chunk)?;
        println!(
            "\n{}: change in customer / distributor p90 vs static ground",
            table.demand_scenario.as_str()
        );
        for row in &table.rows {
            let fmt = |d: Option<f64>| d.map_or("-".to_string(), |v| format!("{v:+.2}"));
            println!(
                "  {:<18} {:>8} {:>8}",
                row.strategy.label(),
                fmt(row.delta[1]),
                fmt(row.delta[3])
            );
        }
    }
    Ok(())
}

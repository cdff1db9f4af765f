//! A hand-built two-echelon chain: one regional distributor restocked by
//! ground from a plant warehouse. Shows order timing, FIFO backlog and the
//! accounting audit.
//!
//! cargo run --example supply_chain_des

use std::collections::HashMap;

use ocsim::des::{
    run, CustomerDemand, CustomerKind, DesOptions, InventoryPolicy, OrderClass, PolicyMode, StockKind, StockPointSpec,
    SupplyChain,
};
use ocsim::network::TransportMode;

fn main() -> ocsim::Result<()> {
    let mut chain = SupplyChain::new();
    let plant = chain.add_stock_point(StockPointSpec {
        name: "PLANT".into(),
        node_id: "PLANT".into(),
        region: None,
        kind: StockKind::FinishedGoods,
        policy: InventoryPolicy::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.95, PolicyMode::Static)?,
        initial_on_hand: 500,
    });
    let policy = InventoryPolicy::new(6.0, 2.0, 7.0, 1.5, 0.15, 0.95, PolicyMode::Static)?;
    println!("distributor policy: Q={} R={}", policy.q, policy.r);
    let dc = chain.add_stock_point(StockPointSpec {
        name: "DC-AZ".into(),
        node_id: "DC-AZ".into(),
        region: Some("AZ".into()),
        kind: StockKind::Distributor,
        policy,
        initial_on_hand: 20,
    });
    chain.ship_from(
        dc,
        plant,
        620.0,
        TransportMode::Ground,
        OrderClass::DistributorReplenishment,
    )?;
    chain.serve_region("AZ", dc)?;

    // a quiet week followed by a spike
    let demand: Vec<CustomerDemand> = (0..30)
        .map(|i| CustomerDemand {
            time: f64::from(i) * 0.5 + 0.1,
            region: "AZ".into(),
            kind: if i % 5 == 0 {
                CustomerKind::Hospital
            } else {
                CustomerKind::Home
            },
            qty: if (14..18).contains(&i) { 12 } else { 3 },
        })
        .collect();

    let mut options = DesOptions::new(5, 20.0);
    options.audit = true;
    let result = run(chain, &demand, &HashMap::new(), &options)?;

    println!("\nreplenishment orders");
    for o in result.orders_of(OrderClass::DistributorReplenishment) {
        let arrived = o
            .fulfilled_at
            .map_or_else(|| "still in transit".to_string(), |t| format!("arrived {t:.2}"));
        println!(
            "  #{:<3} {:>3} units placed {:>6.2} {arrived}",
            o.order_id, o.qty, o.placed_at
        );
    }
    let waits: Vec<f64> = result
        .orders_of(OrderClass::Customer)
        .filter_map(|o| o.fulfillment_time())
        .collect();
    let worst = waits.iter().copied().fold(0.0, f64::max);
    println!("\n{} customer orders, longest wait {worst:.2} days", waits.len());
    println!(
        "{} events, {} audited, {} stock-point checks, {} violations",
        result.events_processed, result.audit.events, result.audit.checks, result.audit.violations
    );
    Ok(())
}

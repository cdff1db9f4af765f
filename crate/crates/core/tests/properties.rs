use std::collections::HashMap;

use proptest::prelude::*;

use ocsim::des::{
    self, CustomerDemand, CustomerKind, DesOptions, InventoryPolicy, OrderClass, PolicyMode, StockKind, StockPointSpec,
    SupplyChain,
};
use ocsim::epi::{run_epidemic, EpiParameters, RegionProfile};
use ocsim::network::TransportMode;
use ocsim::rng::SeedBank;
use ocsim::scenario::percentile;

fn chain(initial: u64, cycle: f64, mode: PolicyMode) -> SupplyChain {
    let mut c = SupplyChain::new();
    let plant = c.add_stock_point(StockPointSpec {
        name: "F".into(),
        node_id: "F".into(),
        region: None,
        kind: StockKind::FinishedGoods,
        policy: InventoryPolicy::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.95, PolicyMode::Static).unwrap(),
        initial_on_hand: 1_000_000,
    });
    for (i, region) in ["A", "B"].iter().enumerate() {
        let d = c.add_stock_point(StockPointSpec {
            name: format!("D{region}"),
            node_id: format!("D{region}"),
            region: Some(region.to_string()),
            kind: StockKind::Distributor,
            policy: InventoryPolicy::new(8.0, 3.0, cycle, 1.0, 0.1, 0.9, mode).unwrap(),
            initial_on_hand: initial,
        });
        c.ship_from(
            d,
            plant,
            300.0 * (i + 1) as f64,
            TransportMode::Ground,
            OrderClass::DistributorReplenishment,
        )
        .unwrap();
        c.serve_region(*region, d).unwrap();
    }
    c
}

fn demand_strategy() -> impl Strategy<Value = Vec<CustomerDemand>> {
    prop::collection::vec((0.0..30.0f64, prop::bool::ANY, 1u64..12), 0..200).prop_map(|raw| {
        raw.into_iter()
            .map(|(time, a, qty)| CustomerDemand {
                time,
                region: if a { "A" } else { "B" }.into(),
                kind: CustomerKind::Home,
                qty,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn des_keeps_the_books(
        demand in demand_strategy(),
        initial in 0u64..40,
        cycle in 0.2..5.0f64,
        dynamic in prop::bool::ANY,
        seed in 0u64..1000,
    ) {
        let mode = if dynamic { PolicyMode::Dynamic } else { PolicyMode::Static };
        let mut opts = DesOptions::new(seed, 30.0);
        opts.audit = true;
        let r = des::run(chain(initial, cycle, mode), &demand, &HashMap::new(), &opts).unwrap();
        prop_assert_eq!(r.audit.violations, 0);
        prop_assert_eq!(r.audit.events, r.events_processed);
        for f in &r.facilities {
            prop_assert!(f.conservation_residual() == 0, "{} residual {}", f.name, f.conservation_residual());
        }
        // fills never precede placement, and every customer order is recorded once
        prop_assert_eq!(r.orders_of(OrderClass::Customer).count(), demand.len());
        for o in &r.orders {
            if let Some(t) = o.fulfillment_time() {
                prop_assert!(t >= 0.0);
            }
        }
        // same inputs, same outputs
        let again = des::run(chain(initial, cycle, mode), &demand, &HashMap::new(), &opts).unwrap();
        prop_assert_eq!(&r.orders, &again.orders);
    }

    #[test]
    fn customer_fifo_per_region(demand in demand_strategy(), initial in 0u64..20) {
        let r = des::run(chain(initial, 1.0, PolicyMode::Static), &demand, &HashMap::new(), &DesOptions::new(1, 30.0)).unwrap();
        for dc in ["DA", "DB"] {
            let mut placed: Vec<_> = r.orders_of(OrderClass::Customer).filter(|o| o.destination == dc).collect();
            placed.sort_by(|a, b| a.placed_at.total_cmp(&b.placed_at).then(a.order_id.cmp(&b.order_id)));
            let fills: Vec<f64> = placed.iter().map(|o| o.fulfilled_at.unwrap_or(f64::INFINITY)).collect();
            prop_assert!(fills.windows(2).all(|w| w[0] <= w[1]), "{dc} filled out of order: {fills:?}");
        }
    }

    #[test]
    fn epidemic_output_matches_population(
        pop in 1_000u64..2_000_000,
        frac in 0.0001..0.05f64,
        contact in 0.2..4.0f64,
        seed in 0u64..100,
    ) {
        let infected = ((pop as f64 * frac) as u64).max(1);
        let profile = RegionProfile::new("R", pop, pop / 500, infected);
        let params = EpiParameters::baseline(vec![contact; 120]);
        let days = run_epidemic(&profile, &params, 120, &SeedBank::new(seed)).unwrap();
        let infections: u64 = days.iter().map(|d| d.new_infections).sum();
        let returned: u64 = days.iter().map(|d| d.returns_to_susceptible).sum();
        prop_assert!(infections <= pop - infected + returned);
        prop_assert!(days.iter().all(|d| d.infectious_count + d.hospitalized_count <= pop));
        prop_assert!(days.iter().all(|d| (0.0..=1.0).contains(&d.workforce_out_fraction)));
    }

    #[test]
    fn percentile_is_a_member_within_bounds(mut xs in prop::collection::vec(-1e6..1e6f64, 1..300), p in 0.0..=100.0f64) {
        let v = percentile(&xs, p).unwrap();
        xs.sort_by(f64::total_cmp);
        prop_assert!(xs.contains(&v));
        let rank = xs.iter().filter(|&&x| x <= v).count();
        prop_assert!(rank as f64 >= p / 100.0 * xs.len() as f64);
    }
}

//! Assembles a [`SupplyChain`] from a facility network.

use crate::demand::DemandSignal;
use crate::error::{Error, Result};
use crate::network::{transit_days, Network, Role, TransportConstants, TransportMode};
use crate::rng::{region_key, SeedBank, Stream};

use super::policy::{InventoryPolicy, PolicyMode};
use super::sim::{
    select_mode, CustomerDemand, CustomerKind, OrderClass, StockKind, StockPointSpec, SupplyChain, TransportStrategy,
};

use rand::Rng;

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub inventory: PolicyMode,
    pub transport: TransportStrategy,
    pub constants: TransportConstants,
    pub service_level: f64,
    pub cycle_days: f64,
    /// Interval between dynamic policy reviews.
    pub review_days: f64,
    pub lead_time_cv: f64,
    /// Share of assembly capacity used by pre-pandemic demand.
    pub utilization: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            inventory: PolicyMode::Static,
            transport: TransportStrategy::GroundOnly,
            constants: TransportConstants::default(),
            service_level: 0.95,
            cycle_days: 7.0,
            review_days: 7.0,
            lead_time_cv: 0.1,
            utilization: 0.5,
        }
    }
}

/// Planning demand rate for one region's distributor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDemandRate {
    pub region_id: String,
    pub mean_daily: f64,
}

/// Name of the parts buffer for `part` at the assembly plant.
pub fn parts_stock_name(assembly: &str, part: &str) -> String {
    format!("{assembly}/{part}")
}

/// Builds distributors for `regions`, the assembly plant's finished-goods
/// and parts buffers, and one output buffer per sub-assembly producer.
///
/// Policies are sized from the planning rates: a distributor plans on its
/// region's rate with Poisson-like spread; upstream tiers plan on the sum of
/// what they feed, with variance inflated by downstream batch sizes.
/// Suppliers feeding the sub-assembly plants are treated as uncapacitated.
pub fn build_chain(network: &Network, regions: &[RegionDemandRate], cfg: &ChainConfig) -> Result<SupplyChain> {
    if !(cfg.utilization > 0.0 && cfg.utilization <= 1.0) {
        return Err(Error::Config(format!("utilization {} outside (0, 1]", cfg.utilization)));
    }
    let mut chain = SupplyChain::new();
    let asm = network.assembly();
    let k = &cfg.constants;
    let policy = |mu: f64, sigma: f64, lt: f64, sigma_lt: f64, mode: PolicyMode| {
        InventoryPolicy::new(mu, sigma, cfg.cycle_days, lt, sigma_lt, cfg.service_level, mode)
    };

    struct Dist {
        node: String,
        region: String,
        distance: f64,
        mode: TransportMode,
        policy: InventoryPolicy,
    }
    let mut dists = Vec::with_capacity(regions.len());
    for r in regions {
        let node = network
            .distributor_for_region(&r.region_id)
            .ok_or_else(|| Error::Data(format!("no distributor for region {}", r.region_id)))?;
        let route = network.route(&asm.node_id, &node.node_id).expect("both nodes exist");
        let mode = select_mode(route.distance_miles, cfg.transport, k);
        let lt = transit_days(route.distance_miles, mode, k);
        let p = policy(
            r.mean_daily,
            r.mean_daily.sqrt(),
            lt,
            cfg.lead_time_cv * lt,
            cfg.inventory,
        )?;
        dists.push(Dist {
            node: node.node_id.clone(),
            region: r.region_id.clone(),
            distance: route.distance_miles,
            mode,
            policy: p,
        });
    }

    let mu_fg: f64 = regions.iter().map(|r| r.mean_daily).sum();
    let var_fg: f64 = dists.iter().map(|d| d.policy.mu_d * d.policy.q as f64).sum();
    let asm_rate = match asm.capacity {
        Some(c) => c,
        None => (mu_fg / cfg.utilization).max(1.0),
    };
    let q_fg = InventoryPolicy::new(mu_fg, 0.0, cfg.cycle_days, 0.0, 0.0, cfg.service_level, cfg.inventory)?.q;
    let fg_policy = policy(mu_fg, var_fg.sqrt(), q_fg as f64 / asm_rate, 0.0, cfg.inventory)?;
    let fg = chain.add_stock_point(StockPointSpec {
        name: asm.node_id.clone(),
        node_id: asm.node_id.clone(),
        region: asm.region_id.clone(),
        kind: StockKind::FinishedGoods,
        initial_on_hand: fg_policy.order_up_to(),
        policy: fg_policy,
    });

    for d in dists {
        let id = chain.add_stock_point(StockPointSpec {
            name: d.node.clone(),
            node_id: d.node,
            region: Some(d.region.clone()),
            kind: StockKind::Distributor,
            initial_on_hand: d.policy.order_up_to(),
            policy: d.policy,
        });
        chain.ship_from(id, fg, d.distance, d.mode, OrderClass::DistributorReplenishment)?;
        chain.serve_region(d.region, id)?;
    }

    let mut inputs = Vec::new();
    for step in &network.bom.steps {
        let per = step.qty_per_unit;
        let mu_p = mu_fg * f64::from(per);
        let var_p = mu_p * q_fg as f64 * f64::from(per);
        let producer_id = step
            .producers
            .first()
            .ok_or_else(|| Error::Data(format!("no producer for {}", step.part_type)))?;
        let producer = network
            .node(producer_id)
            .filter(|n| n.role == Role::Subassembly)
            .ok_or_else(|| Error::Data(format!("unknown sub-assembly site {producer_id}")))?;
        let sub_rate = producer.capacity.unwrap_or((mu_p / cfg.utilization).max(1.0));
        let q_parts = InventoryPolicy::new(
            mu_p,
            0.0,
            cfg.cycle_days,
            0.0,
            0.0,
            cfg.service_level,
            PolicyMode::Static,
        )?
        .q;
        let sub_policy = policy(
            mu_p,
            (mu_p * q_parts as f64).sqrt(),
            q_parts as f64 / sub_rate,
            0.0,
            PolicyMode::Static,
        )?;
        let sub = chain.add_stock_point(StockPointSpec {
            name: producer.node_id.clone(),
            node_id: producer.node_id.clone(),
            region: producer.region_id.clone(),
            kind: StockKind::SubassemblyOutput,
            initial_on_hand: sub_policy.order_up_to(),
            policy: sub_policy,
        });
        chain.add_line(
            format!("{} line", producer.node_id),
            producer.region_id.clone(),
            sub_rate,
            sub,
            Vec::new(),
        )?;

        let distance = network
            .route(&producer.node_id, &asm.node_id)
            .expect("nodes exist")
            .distance_miles;
        let lt = transit_days(distance, TransportMode::Ground, k);
        let parts_policy = policy(mu_p, var_p.sqrt(), lt, cfg.lead_time_cv * lt, PolicyMode::Static)?;
        let parts = chain.add_stock_point(StockPointSpec {
            name: parts_stock_name(&asm.node_id, &step.part_type),
            node_id: asm.node_id.clone(),
            region: asm.region_id.clone(),
            kind: StockKind::Parts,
            initial_on_hand: parts_policy.order_up_to().max(q_fg * u64::from(per)),
            policy: parts_policy,
        });
        chain.ship_from(parts, sub, distance, TransportMode::Ground, OrderClass::AssemblyParts)?;
        inputs.push((parts, per));
    }
    chain.add_line(
        format!("{} line", asm.node_id),
        asm.region_id.clone(),
        asm_rate,
        fg,
        inputs,
    )?;
    Ok(chain)
}

/// Turns daily signals into individual customer orders.
///
/// Each region-day yields one hospital order for the baseline quantity, one
/// bulk order for any hospital trigger, and single-unit home orders, each at
/// a uniformly random time within the day.
pub fn customer_orders(signals: &[DemandSignal], seeds: &SeedBank) -> Vec<CustomerDemand> {
    let mut out = Vec::new();
    for s in signals {
        let mut rng = seeds.stream(Stream::OrderArrivals, &[region_key(&s.region_id), u64::from(s.day)]);
        let day = f64::from(s.day);
        let mut push = |rng: &mut crate::rng::SimRng, kind, qty| {
            out.push(CustomerDemand {
                time: day + rng.random::<f64>(),
                region: s.region_id.clone(),
                kind,
                qty,
            })
        };
        if s.hospital_baseline_qty > 0 {
            push(&mut rng, CustomerKind::Hospital, s.hospital_baseline_qty);
        }
        if s.hospital_trigger_qty > 0 {
            push(&mut rng, CustomerKind::Hospital, s.hospital_trigger_qty);
        }
        for _ in 0..s.home_order_qty {
            push(&mut rng, CustomerKind::Home, 1);
        }
    }
    out
}

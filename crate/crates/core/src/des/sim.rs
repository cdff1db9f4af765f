//! Event loop and entity behaviour for the multi-echelon chain.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::policy::{dynamic_policy_update, reorder_check, InventoryPolicy, PolicyMode};
use super::queue::EventQueue;
use crate::error::{Error, Result};
use crate::network::{transit_days, TransportConstants, TransportMode};
use crate::rng::{region_key, SeedBank, Stream};

pub type StockPointId = usize;
pub type LineId = usize;
pub type OrderId = usize;
pub type JobId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderClass {
    Customer,
    DistributorReplenishment,
    AssemblyParts,
}

impl OrderClass {
    pub const ALL: [OrderClass; 3] = [
        OrderClass::Customer,
        OrderClass::DistributorReplenishment,
        OrderClass::AssemblyParts,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OrderClass::Customer => "customer",
            OrderClass::DistributorReplenishment => "distributor_replenishment",
            OrderClass::AssemblyParts => "assembly_parts",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub order_id: OrderId,
    pub class: OrderClass,
    /// Who asked: `hospital:<region>`, `home:<region>` or a stock point name.
    pub origin: String,
    /// Stock point that fills the order.
    pub destination: String,
    pub qty: u64,
    pub placed_at: f64,
    pub fulfilled_at: Option<f64>,
    pub mode: Option<TransportMode>,
    filler: StockPointId,
    requester: Option<StockPointId>,
}

impl Order {
    pub fn fulfillment_time(&self) -> Option<f64> {
        self.fulfilled_at.map(|f| f - self.placed_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CustomerKind {
    Hospital,
    Home,
}

impl CustomerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CustomerKind::Hospital => "hospital",
            CustomerKind::Home => "home",
        }
    }
}

/// One customer order to be placed at a region's distributor.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerDemand {
    pub time: f64,
    pub region: String,
    pub kind: CustomerKind,
    pub qty: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    DemandSignalTick { day: u32 },
    CustomerOrderArrival { order: OrderId },
    ReplenishmentOrderArrival { order: OrderId },
    ShipmentDeparture { order: OrderId },
    ShipmentArrival { order: OrderId },
    AssemblyJobComplete { job: JobId },
    PolicyReview,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::DemandSignalTick { .. } => "demand_signal_tick",
            EventKind::CustomerOrderArrival { .. } => "customer_order_arrival",
            EventKind::ReplenishmentOrderArrival { .. } => "replenishment_order_arrival",
            EventKind::ShipmentDeparture { .. } => "shipment_departure",
            EventKind::ShipmentArrival { .. } => "shipment_arrival",
            EventKind::AssemblyJobComplete { .. } => "assembly_job_complete",
            EventKind::PolicyReview => "policy_review",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StockKind {
    Distributor,
    FinishedGoods,
    Parts,
    SubassemblyOutput,
}

/// How a stock point is replenished.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Never replenished.
    None,
    Ship {
        from: StockPointId,
        distance_miles: f64,
        mode: TransportMode,
        class: OrderClass,
    },
    Produce {
        line: LineId,
    },
}

#[derive(Debug, Clone)]
pub struct StockPointSpec {
    pub name: String,
    pub node_id: String,
    pub region: Option<String>,
    pub kind: StockKind,
    pub policy: InventoryPolicy,
    pub initial_on_hand: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    Order(OrderId),
    Job(JobId),
}

#[derive(Debug, Clone)]
pub struct StockPoint {
    pub name: String,
    pub node_id: String,
    pub region: Option<String>,
    pub kind: StockKind,
    pub policy: InventoryPolicy,
    pub source: Source,
    pub initial_on_hand: u64,
    on_hand: u64,
    on_order: u64,
    backlog_qty: u64,
    reserved: u64,
    position: i64,
    backlog: VecDeque<OrderId>,
    consumers: Vec<LineId>,
    pending: BTreeSet<Pending>,
    daily_demand: Vec<u64>,
    received: u64,
    shipped: u64,
    shipments: u64,
}

impl StockPoint {
    pub fn on_hand(&self) -> u64 {
        self.on_hand
    }

    pub fn on_order(&self) -> u64 {
        self.on_order
    }

    /// Backlogged orders plus parts reserved by queued production jobs.
    pub fn backlog(&self) -> u64 {
        self.backlog_qty + self.reserved
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn backlog_orders(&self) -> impl Iterator<Item = OrderId> + '_ {
        self.backlog.iter().copied()
    }
}

#[derive(Debug, Clone)]
pub struct ProductionLine {
    pub name: String,
    pub region: Option<String>,
    /// Units per day with the full workforce present.
    pub base_rate: f64,
    pub output: StockPointId,
    pub inputs: Vec<(StockPointId, u32)>,
    queue: VecDeque<JobId>,
    busy: Option<JobId>,
    busy_days: f64,
    jobs_completed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub job_id: JobId,
    pub line: LineId,
    pub qty: u64,
    pub created_at: f64,
    pub started_at: Option<f64>,
    pub completed_at: Option<f64>,
}

/// Static description of the chain plus its initial state.
#[derive(Debug, Clone, Default)]
pub struct SupplyChain {
    stock_points: Vec<StockPoint>,
    lines: Vec<ProductionLine>,
    region_index: HashMap<String, StockPointId>,
}

impl SupplyChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_stock_point(&mut self, spec: StockPointSpec) -> StockPointId {
        let initial = i64::try_from(spec.initial_on_hand).unwrap_or(i64::MAX);
        self.stock_points.push(StockPoint {
            name: spec.name,
            node_id: spec.node_id,
            region: spec.region,
            kind: spec.kind,
            policy: spec.policy,
            source: Source::None,
            initial_on_hand: spec.initial_on_hand,
            on_hand: spec.initial_on_hand,
            on_order: 0,
            backlog_qty: 0,
            reserved: 0,
            position: initial,
            backlog: VecDeque::new(),
            consumers: Vec::new(),
            pending: BTreeSet::new(),
            daily_demand: Vec::new(),
            received: 0,
            shipped: 0,
            shipments: 0,
        });
        self.stock_points.len() - 1
    }

    /// Adds a production line feeding `output` and makes it that stock
    /// point's source.
    pub fn add_line(
        &mut self,
        name: impl Into<String>,
        region: Option<String>,
        base_rate: f64,
        output: StockPointId,
        inputs: Vec<(StockPointId, u32)>,
    ) -> Result<LineId> {
        if !(base_rate > 0.0 && base_rate.is_finite()) {
            return Err(Error::Config(format!("production rate {base_rate} must be positive")));
        }
        self.check_id(output)?;
        for &(i, per) in &inputs {
            self.check_id(i)?;
            if per == 0 {
                return Err(Error::Config("bill-of-material quantity must be >= 1".into()));
            }
        }
        let id = self.lines.len();
        for &(i, _) in &inputs {
            self.stock_points[i].consumers.push(id);
        }
        self.stock_points[output].source = Source::Produce { line: id };
        self.lines.push(ProductionLine {
            name: name.into(),
            region,
            base_rate,
            output,
            inputs,
            queue: VecDeque::new(),
            busy: None,
            busy_days: 0.0,
            jobs_completed: 0,
        });
        Ok(id)
    }

    pub fn ship_from(
        &mut self,
        dest: StockPointId,
        from: StockPointId,
        distance_miles: f64,
        mode: TransportMode,
        class: OrderClass,
    ) -> Result<()> {
        self.check_id(dest)?;
        self.check_id(from)?;
        if dest == from || distance_miles.is_nan() || distance_miles < 0.0 {
            return Err(Error::Config(format!(
                "invalid shipping lane {} -> {}",
                self.stock_points[from].name, self.stock_points[dest].name
            )));
        }
        self.stock_points[dest].source = Source::Ship {
            from,
            distance_miles,
            mode,
            class,
        };
        Ok(())
    }

    /// Routes customer orders of `region` to `stock_point`.
    pub fn serve_region(&mut self, region: impl Into<String>, stock_point: StockPointId) -> Result<()> {
        self.check_id(stock_point)?;
        self.region_index.insert(region.into(), stock_point);
        Ok(())
    }

    pub fn stock_points(&self) -> &[StockPoint] {
        &self.stock_points
    }

    pub fn lines(&self) -> &[ProductionLine] {
        &self.lines
    }

    pub fn find(&self, name: &str) -> Option<StockPointId> {
        self.stock_points.iter().position(|s| s.name == name)
    }

    pub fn stock_point_for_region(&self, region: &str) -> Option<StockPointId> {
        self.region_index.get(region).copied()
    }

    fn check_id(&self, id: StockPointId) -> Result<()> {
        if id < self.stock_points.len() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown stock point index {id}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesOptions {
    pub seeds: SeedBank,
    pub horizon_days: f64,
    pub transport: TransportConstants,
    /// Transit time coefficient of variation (std / mean).
    pub lead_time_cv: f64,
    /// Interval between policy reviews for dynamic policies.
    pub review_days: f64,
    /// Recompute the position identity after every event.
    pub audit: bool,
    pub record_events: bool,
}

impl DesOptions {
    pub fn new(seed: u64, horizon_days: f64) -> Self {
        Self {
            seeds: SeedBank::new(seed),
            horizon_days,
            transport: TransportConstants::default(),
            lead_time_cv: 0.1,
            review_days: 7.0,
            audit: cfg!(debug_assertions),
            record_events: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryRow {
    pub facility: String,
    pub day: u32,
    pub on_hand: u64,
    pub position: i64,
    pub backlog: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacilitySummary {
    pub name: String,
    pub kind: StockKind,
    pub region: Option<String>,
    pub initial_on_hand: u64,
    pub final_on_hand: u64,
    pub received: u64,
    pub shipped: u64,
    pub final_q: u64,
    pub final_r: u64,
}

impl FacilitySummary {
    /// `received - shipped - (final - initial)`; zero when units are conserved.
    pub fn conservation_residual(&self) -> i128 {
        self.received as i128 - self.shipped as i128 - (self.final_on_hand as i128 - self.initial_on_hand as i128)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSummary {
    pub name: String,
    pub jobs_completed: u64,
    pub busy_days: f64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyChange {
    pub time: f64,
    pub facility: String,
    pub q: u64,
    pub r: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    /// Events after which the audit ran.
    pub events: u64,
    /// Stock-point checks; an event checks every stock point it changed,
    /// and each daily tick checks all of them.
    pub checks: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DesResult {
    pub orders: Vec<Order>,
    pub jobs: Vec<Job>,
    pub inventory: Vec<InventoryRow>,
    pub events: Vec<SimEvent>,
    pub events_processed: u64,
    pub audit: AuditReport,
    pub facilities: Vec<FacilitySummary>,
    pub lines: Vec<LineSummary>,
    pub policy_changes: Vec<PolicyChange>,
    pub horizon_days: f64,
}

impl DesResult {
    pub fn orders_of(&self, class: OrderClass) -> impl Iterator<Item = &Order> {
        self.orders.iter().filter(move |o| o.class == class)
    }
}

/// Transport choice for a lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransportStrategy {
    #[serde(rename = "ground_only")]
    GroundOnly,
    #[serde(rename = "air_over_500")]
    AirOver500,
}

/// Air iff the strategy allows it and the lane is strictly longer than the
/// threshold.
pub fn select_mode(distance_miles: f64, strategy: TransportStrategy, k: &TransportConstants) -> TransportMode {
    match strategy {
        TransportStrategy::AirOver500 if distance_miles > k.air_threshold_miles => TransportMode::Air,
        _ => TransportMode::Ground,
    }
}

/// Production rate after removing the absent share of the workforce.
pub fn effective_rate(base_rate: f64, workforce_out_fraction: f64) -> f64 {
    base_rate * (1.0 - workforce_out_fraction.clamp(0.0, 1.0))
}

/// Runs the chain over `[0, horizon)`.
///
/// `workforce` maps a region to its daily absent-workforce fraction; missing
/// regions or days count as fully staffed.
pub fn run(
    chain: SupplyChain,
    demand: &[CustomerDemand],
    workforce: &HashMap<String, Vec<f64>>,
    options: &DesOptions,
) -> Result<DesResult> {
    Sim::new(chain, demand, workforce, options)?.run()
}

struct Sim<'a> {
    sps: Vec<StockPoint>,
    lines: Vec<ProductionLine>,
    region_index: HashMap<String, StockPointId>,
    orders: Vec<Order>,
    jobs: Vec<Job>,
    queue: EventQueue<EventKind>,
    days: Vec<Vec<&'a CustomerDemand>>,
    workforce: &'a HashMap<String, Vec<f64>>,
    opts: &'a DesOptions,
    inventory: Vec<InventoryRow>,
    events: Vec<SimEvent>,
    policy_changes: Vec<PolicyChange>,
    audit: AuditReport,
    touched: Vec<StockPointId>,
    n_days: usize,
}

impl<'a> Sim<'a> {
    fn new(
        chain: SupplyChain,
        demand: &'a [CustomerDemand],
        workforce: &'a HashMap<String, Vec<f64>>,
        opts: &'a DesOptions,
    ) -> Result<Self> {
        let h = opts.horizon_days;
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("horizon {h} must be finite and >= 0")));
        }
        if !(opts.lead_time_cv >= 0.0 && opts.review_days > 0.0) {
            return Err(Error::Config(
                "lead-time cv must be >= 0 and review interval > 0".into(),
            ));
        }
        let n_days = h.ceil() as usize;
        let mut days: Vec<Vec<&CustomerDemand>> = vec![Vec::new(); n_days];
        for d in demand {
            if !chain.region_index.contains_key(&d.region) {
                return Err(Error::Data(format!("no distributor serves region {}", d.region)));
            }
            if d.qty == 0 || d.time.is_nan() || d.time < 0.0 {
                return Err(Error::Data(format!("bad customer demand {d:?}")));
            }
            if d.time < h {
                days[d.time.floor() as usize].push(d);
            }
        }
        for bucket in &mut days {
            bucket.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        let mut sps = chain.stock_points;
        for sp in &mut sps {
            sp.daily_demand = vec![0; n_days + 1];
        }
        Ok(Self {
            sps,
            lines: chain.lines,
            region_index: chain.region_index,
            orders: Vec::new(),
            jobs: Vec::new(),
            queue: EventQueue::new(),
            days,
            workforce,
            opts,
            inventory: Vec::new(),
            events: Vec::new(),
            policy_changes: Vec::new(),
            audit: AuditReport::default(),
            touched: Vec::new(),
            n_days,
        })
    }

    fn run(mut self) -> Result<DesResult> {
        let horizon = self.opts.horizon_days;
        for day in 0..self.n_days {
            self.queue
                .schedule(day as f64, EventKind::DemandSignalTick { day: day as u32 });
        }
        if self.sps.iter().any(|s| s.policy.mode == PolicyMode::Dynamic) {
            let mut t = self.opts.review_days;
            while t < horizon {
                self.queue.schedule(t, EventKind::PolicyReview);
                t += self.opts.review_days;
            }
        }
        let mut processed = 0u64;
        while let Some(ev) = self.queue.pop() {
            if ev.time >= horizon {
                break;
            }
            processed += 1;
            if self.opts.record_events {
                self.events.push(SimEvent {
                    time: ev.time,
                    seq: ev.seq,
                    kind: ev.event,
                });
            }
            self.touched.clear();
            self.handle(ev.event)?;
            if self.opts.audit {
                self.run_audit();
            }
        }
        let facilities = self
            .sps
            .iter()
            .map(|s| FacilitySummary {
                name: s.name.clone(),
                kind: s.kind,
                region: s.region.clone(),
                initial_on_hand: s.initial_on_hand,
                final_on_hand: s.on_hand,
                received: s.received,
                shipped: s.shipped,
                final_q: s.policy.q,
                final_r: s.policy.r,
            })
            .collect();
        let lines = self
            .lines
            .iter()
            .map(|l| LineSummary {
                name: l.name.clone(),
                jobs_completed: l.jobs_completed,
                busy_days: l.busy_days,
                utilization: if horizon > 0.0 {
                    (l.busy_days / horizon).min(1.0)
                } else {
                    0.0
                },
            })
            .collect();
        Ok(DesResult {
            orders: self.orders,
            jobs: self.jobs,
            inventory: self.inventory,
            events: self.events,
            events_processed: processed,
            audit: self.audit,
            facilities,
            lines,
            policy_changes: self.policy_changes,
            horizon_days: horizon,
        })
    }

    fn now(&self) -> f64 {
        self.queue.now()
    }

    fn day_index(&self) -> usize {
        (self.now().floor() as usize).min(self.n_days)
    }

    fn handle(&mut self, ev: EventKind) -> Result<()> {
        match ev {
            EventKind::DemandSignalTick { day } => self.on_tick(day),
            EventKind::CustomerOrderArrival { order } | EventKind::ReplenishmentOrderArrival { order } => {
                self.on_demand(self.orders[order].filler, order)
            }
            EventKind::ShipmentDeparture { order } => self.on_departure(order),
            EventKind::ShipmentArrival { order } => self.on_arrival(order),
            EventKind::AssemblyJobComplete { job } => self.on_job_complete(job),
            EventKind::PolicyReview => self.on_review(),
        }
    }

    fn on_tick(&mut self, day: u32) -> Result<()> {
        for sp in 0..self.sps.len() {
            self.touch(sp);
        }
        for sp in &self.sps {
            self.inventory.push(InventoryRow {
                facility: sp.name.clone(),
                day,
                on_hand: sp.on_hand,
                position: sp.position,
                backlog: sp.backlog(),
            });
        }
        let bucket = std::mem::take(&mut self.days[day as usize]);
        for d in bucket {
            let sp = self.region_index[&d.region];
            let id = self.orders.len();
            self.orders.push(Order {
                order_id: id,
                class: OrderClass::Customer,
                origin: format!("{}:{}", d.kind.as_str(), d.region),
                destination: self.sps[sp].name.clone(),
                qty: d.qty,
                placed_at: d.time,
                fulfilled_at: None,
                mode: None,
                filler: sp,
                requester: None,
            });
            self.queue
                .schedule(d.time, EventKind::CustomerOrderArrival { order: id });
        }
        Ok(())
    }

    /// An order arrives at `sp`: fill it if nothing is queued ahead and stock
    /// covers it in full, otherwise join the back of the queue.
    fn on_demand(&mut self, sp: StockPointId, order: OrderId) -> Result<()> {
        let qty = self.orders[order].qty;
        let day = self.day_index();
        self.touch(sp);
        let s = &mut self.sps[sp];
        s.daily_demand[day] += qty;
        s.position -= qty as i64;
        if s.backlog.is_empty() && s.on_hand >= qty {
            self.fill(sp, order)?;
        } else {
            s.backlog.push_back(order);
            s.backlog_qty += qty;
        }
        self.reorder(sp)
    }

    // Removes stock for an order whose demand is already reflected in the
    // position.
    fn fill(&mut self, sp: StockPointId, order: OrderId) -> Result<()> {
        let now = self.now();
        let qty = self.orders[order].qty;
        let s = &mut self.sps[sp];
        s.on_hand = s
            .on_hand
            .checked_sub(qty)
            .ok_or_else(|| Error::Invariant(format!("negative on-hand at {}", s.name)))?;
        s.shipped += qty;
        match self.orders[order].class {
            OrderClass::Customer => self.stamp(order, now)?,
            _ => {
                self.queue.schedule(now, EventKind::ShipmentDeparture { order });
            }
        }
        Ok(())
    }

    fn stamp(&mut self, order: OrderId, at: f64) -> Result<()> {
        let o = &mut self.orders[order];
        if at < o.placed_at {
            return Err(Error::Invariant(format!(
                "order {} fulfilled before placement",
                o.order_id
            )));
        }
        o.fulfilled_at = Some(at);
        Ok(())
    }

    fn drain(&mut self, sp: StockPointId) -> Result<()> {
        while let Some(&head) = self.sps[sp].backlog.front() {
            let qty = self.orders[head].qty;
            if self.sps[sp].on_hand < qty {
                break;
            }
            let s = &mut self.sps[sp];
            s.backlog.pop_front();
            s.backlog_qty -= qty;
            self.fill(sp, head)?;
        }
        Ok(())
    }

    fn reorder(&mut self, sp: StockPointId) -> Result<()> {
        let s = &self.sps[sp];
        if matches!(s.source, Source::None) {
            return Ok(());
        }
        let Some(q) = reorder_check(s.position, &s.policy) else {
            return Ok(());
        };
        let now = self.now();
        let s = &mut self.sps[sp];
        s.on_order += q;
        s.position += q as i64;
        match s.source.clone() {
            Source::None => unreachable!(),
            Source::Ship { from, mode, class, .. } => {
                let id = self.orders.len();
                self.sps[sp].pending.insert(Pending::Order(id));
                self.orders.push(Order {
                    order_id: id,
                    class,
                    origin: self.sps[sp].name.clone(),
                    destination: self.sps[from].name.clone(),
                    qty: q,
                    placed_at: now,
                    fulfilled_at: None,
                    mode: Some(mode),
                    filler: from,
                    requester: Some(sp),
                });
                self.queue
                    .schedule(now, EventKind::ReplenishmentOrderArrival { order: id });
            }
            Source::Produce { line } => {
                let id = self.jobs.len();
                self.sps[sp].pending.insert(Pending::Job(id));
                self.jobs.push(Job {
                    job_id: id,
                    line,
                    qty: q,
                    created_at: now,
                    started_at: None,
                    completed_at: None,
                });
                self.lines[line].queue.push_back(id);
                let day = self.day_index();
                for (input, per) in self.lines[line].inputs.clone() {
                    let need = q * u64::from(per);
                    self.touch(input);
                    let p = &mut self.sps[input];
                    p.reserved += need;
                    p.position -= need as i64;
                    p.daily_demand[day] += need;
                    self.reorder(input)?;
                }
                self.try_start(line)?;
            }
        }
        Ok(())
    }

    fn try_start(&mut self, line: LineId) -> Result<()> {
        let l = &self.lines[line];
        if l.busy.is_some() {
            return Ok(());
        }
        let Some(&job) = l.queue.front() else {
            return Ok(());
        };
        let qty = self.jobs[job].qty;
        let ready = l
            .inputs
            .iter()
            .all(|&(i, per)| self.sps[i].on_hand >= qty * u64::from(per));
        if !ready {
            return Ok(());
        }
        for (input, per) in self.lines[line].inputs.clone() {
            let need = qty * u64::from(per);
            self.touch(input);
            let p = &mut self.sps[input];
            p.on_hand -= need;
            p.reserved -= need;
            p.shipped += need;
        }
        let now = self.now();
        let l = &mut self.lines[line];
        l.queue.pop_front();
        l.busy = Some(job);
        let wf = l
            .region
            .as_ref()
            .and_then(|r| self.workforce.get(r))
            .and_then(|series| series.get(now.floor() as usize))
            .copied()
            .unwrap_or(0.0);
        let rate = effective_rate(l.base_rate, wf);
        self.jobs[job].started_at = Some(now);
        if rate > 0.0 {
            let done = now + qty as f64 / rate;
            self.queue.schedule(done, EventKind::AssemblyJobComplete { job });
        }
        Ok(())
    }

    fn on_job_complete(&mut self, job: JobId) -> Result<()> {
        let now = self.now();
        let line = self.jobs[job].line;
        let qty = self.jobs[job].qty;
        self.jobs[job].completed_at = Some(now);
        let started = self.jobs[job].started_at.unwrap_or(now);
        let l = &mut self.lines[line];
        l.busy = None;
        l.busy_days += now - started;
        l.jobs_completed += 1;
        let out = l.output;
        self.touch(out);
        let s = &mut self.sps[out];
        s.pending.remove(&Pending::Job(job));
        s.on_order -= qty;
        s.on_hand += qty;
        s.received += qty;
        self.drain(out)?;
        self.reorder(out)?;
        self.try_start(line)
    }

    fn on_departure(&mut self, order: OrderId) -> Result<()> {
        let requester = self.orders[order].requester.expect("shipment without requester");
        let Source::Ship {
            distance_miles, mode, ..
        } = self.sps[requester].source
        else {
            unreachable!()
        };
        let k = &self.opts.transport;
        let mean = transit_days(distance_miles, mode, k);
        let floor = match mode {
            TransportMode::Ground => k.ground_handling,
            TransportMode::Air => k.air_handling,
        };
        let s = &mut self.sps[requester];
        let n = s.shipments;
        s.shipments += 1;
        let transit = if self.opts.lead_time_cv > 0.0 && mean > 0.0 {
            let mut rng = self.opts.seeds.stream(Stream::LeadTime, &[region_key(&s.name), n]);
            let dist = Normal::new(mean, self.opts.lead_time_cv * mean)
                .map_err(|e| Error::Config(format!("lead-time distribution: {e}")))?;
            dist.sample(&mut rng).max(floor)
        } else {
            mean
        };
        self.queue
            .schedule(self.now() + transit, EventKind::ShipmentArrival { order });
        Ok(())
    }

    fn on_arrival(&mut self, order: OrderId) -> Result<()> {
        let now = self.now();
        let sp = self.orders[order].requester.expect("shipment without requester");
        let qty = self.orders[order].qty;
        self.stamp(order, now)?;
        self.touch(sp);
        let s = &mut self.sps[sp];
        s.pending.remove(&Pending::Order(order));
        s.on_order -= qty;
        s.on_hand += qty;
        s.received += qty;
        self.drain(sp)?;
        for line in self.sps[sp].consumers.clone() {
            self.try_start(line)?;
        }
        self.reorder(sp)
    }

    fn on_review(&mut self) -> Result<()> {
        let now = self.now();
        let end = (now.floor() as usize).min(self.n_days);
        let start = end.saturating_sub(self.opts.review_days.round() as usize);
        for sp in 0..self.sps.len() {
            if self.sps[sp].policy.mode != PolicyMode::Dynamic {
                continue;
            }
            let trailing = self.sps[sp].daily_demand[start..end].to_vec();
            let updated = dynamic_policy_update(&self.sps[sp].policy, &trailing)?;
            if updated.q != self.sps[sp].policy.q || updated.r != self.sps[sp].policy.r {
                self.policy_changes.push(PolicyChange {
                    time: now,
                    facility: self.sps[sp].name.clone(),
                    q: updated.q,
                    r: updated.r,
                });
            }
            self.sps[sp].policy = updated;
            self.touch(sp);
            self.reorder(sp)?;
        }
        Ok(())
    }

    fn touch(&mut self, sp: StockPointId) {
        if self.opts.audit && !self.touched.contains(&sp) {
            self.touched.push(sp);
        }
    }

    // Recomputes on-order and backlog from the underlying records rather than
    // the running counters.
    fn run_audit(&mut self) {
        self.audit.events += 1;
        for &sp in &self.touched {
            let s = &self.sps[sp];
            let on_order: u64 = s
                .pending
                .iter()
                .map(|p| match *p {
                    Pending::Order(o) => self.orders[o].qty,
                    Pending::Job(j) => self.jobs[j].qty,
                })
                .sum();
            let queued: u64 = s.backlog.iter().map(|&o| self.orders[o].qty).sum();
            let reserved: u64 = s
                .consumers
                .iter()
                .map(|&l| {
                    let line = &self.lines[l];
                    let per = line
                        .inputs
                        .iter()
                        .find(|(i, _)| *i == sp)
                        .map_or(0, |&(_, p)| u64::from(p));
                    line.queue.iter().map(|&j| self.jobs[j].qty * per).sum::<u64>()
                })
                .sum();
            let expected = s.on_hand as i128 + on_order as i128 - queued as i128 - reserved as i128;
            self.audit.checks += 1;
            let ok = expected == s.position as i128
                && on_order == s.on_order
                && queued == s.backlog_qty
                && reserved == s.reserved;
            if !ok {
                self.audit.violations += 1;
                if self.audit.first_violation.is_none() {
                    self.audit.first_violation = Some(format!(
                        "{} at t={}: position {} but on_hand {} + on_order {} - backlog {}",
                        s.name,
                        self.queue.now(),
                        s.position,
                        s.on_hand,
                        on_order,
                        queued + reserved
                    ));
                }
            }
        }
    }
}

//! Discrete-event model of the distribution, assembly and sub-assembly tiers.

mod build;
mod policy;
mod queue;
mod sim;

pub use build::{build_chain, customer_orders, parts_stock_name, ChainConfig, RegionDemandRate};
pub use policy::{
    dynamic_policy_update, qr_parameters, reorder_check, z_for_service_level, InventoryPolicy, PolicyMode,
};
pub use queue::{EventQueue, Scheduled};
pub use sim::{
    effective_rate, run, select_mode, AuditReport, CustomerDemand, CustomerKind, DesOptions, DesResult, EventKind,
    FacilitySummary, InventoryRow, Job, JobId, LineId, LineSummary, Order, OrderClass, OrderId, PolicyChange,
    ProductionLine, SimEvent, Source, StockKind, StockPoint, StockPointId, StockPointSpec, SupplyChain,
    TransportStrategy,
};

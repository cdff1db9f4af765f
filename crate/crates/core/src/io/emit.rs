//! CSV outputs. Floats are rounded to six decimals so files are stable
//! byte for byte under a fixed seed; rows are sorted by region or facility,
//! then day.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demand::DemandSignal;
use crate::des::DesResult;
use crate::epi::EpiDailyOutput;
use crate::error::{Error, Result};
use crate::scenario::{DemandScenario, MetricsReport, ReplicationOutput, ScenarioRun, Strategy};

use super::validate::RegionFit;

pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0 // drop the sign of -0.0
    } else {
        r
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.display().to_string(),
        source: e,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |e| Error::Csv {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = writer(path)?;
    let mut any = false;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
        any = true;
    }
    if !any {
        // serde writes headers only with the first row
        return write_header_only::<T>(path);
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_header_only<T>(path: &Path) -> Result<()> {
    let name = std::any::type_name::<T>();
    let header = HEADERS
        .iter()
        .find(|(t, _)| name.ends_with(t))
        .map(|(_, h)| *h)
        .ok_or_else(|| Error::Invariant(format!("no header registered for {name}")))?;
    fs::write(path, format!("{header}\n")).map_err(|e| Error::io(path, e))
}

const HEADERS: &[(&str, &str)] = &[
    ("SignalRow", "region_id,day,hospital_order_qty,home_order_qty,covid_patients,oc_in_use,oc_on_hand,oc_scrapped_today,hospital_baseline_qty,hospital_trigger_qty,oc_shortfall,workforce_out_fraction"),
    ("EpidemicRow", "region_id,day,new_infections,new_admissions,new_discharges,new_overflow_discharges,new_recoveries,new_deaths,returns_to_susceptible,infectious,hospitalized"),
    ("OrderRow", "order_id,class,origin,destination,qty,placed_at,fulfilled_at,mode"),
    ("InventoryCsvRow", "facility,day,on_hand,position,backlog"),
    ("ReportRow", "demand_scenario,strategy,seed,replications,horizon,mean_daily_manufacturer_demand,mean_daily_replenishment_qty,customer_completed,customer_open,customer_median,customer_p90,distributor_completed,distributor_open,distributor_median,distributor_p90,parts_median,parts_p90"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub region_id: String,
    pub day: u32,
    pub hospital_order_qty: u64,
    pub home_order_qty: u64,
    pub covid_patients: u64,
    pub oc_in_use: u64,
    pub oc_on_hand: u64,
    pub oc_scrapped_today: u64,
    pub hospital_baseline_qty: u64,
    pub hospital_trigger_qty: u64,
    pub oc_shortfall: u64,
    pub workforce_out_fraction: f64,
}

impl From<&DemandSignal> for SignalRow {
    fn from(s: &DemandSignal) -> Self {
        Self {
            region_id: s.region_id.clone(),
            day: s.day,
            hospital_order_qty: s.hospital_order_qty,
            home_order_qty: s.home_order_qty,
            covid_patients: s.covid_patients,
            oc_in_use: s.oc_in_use,
            oc_on_hand: s.oc_on_hand,
            oc_scrapped_today: s.oc_scrapped_today,
            hospital_baseline_qty: s.hospital_baseline_qty,
            hospital_trigger_qty: s.hospital_trigger_qty,
            oc_shortfall: s.oc_shortfall,
            workforce_out_fraction: round6(s.workforce_out_fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicRow {
    pub region_id: String,
    pub day: u32,
    pub new_infections: u64,
    pub new_admissions: u64,
    pub new_discharges: u64,
    pub new_overflow_discharges: u64,
    pub new_recoveries: u64,
    pub new_deaths: u64,
    pub returns_to_susceptible: u64,
    pub infectious: u64,
    pub hospitalized: u64,
}

impl From<&EpiDailyOutput> for EpidemicRow {
    fn from(e: &EpiDailyOutput) -> Self {
        Self {
            region_id: e.region_id.clone(),
            day: e.day,
            new_infections: e.new_infections,
            new_admissions: e.new_admissions,
            new_discharges: e.new_discharges,
            new_overflow_discharges: e.new_overflow_discharges,
            new_recoveries: e.new_recoveries,
            new_deaths: e.new_deaths,
            returns_to_susceptible: e.returns_to_susceptible,
            infectious: e.infectious_count,
            hospitalized: e.hospitalized_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub order_id: usize,
    pub class: String,
    pub origin: String,
    pub destination: String,
    pub qty: u64,
    pub placed_at: f64,
    pub fulfilled_at: Option<f64>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryCsvRow {
    pub facility: String,
    pub day: u32,
    pub on_hand: u64,
    pub position: i64,
    pub backlog: u64,
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub demand_scenario: DemandScenario,
    pub strategy: Strategy,
    pub seed: u64,
    pub replications: u32,
    pub horizon: u32,
    pub mean_daily_manufacturer_demand: f64,
    pub mean_daily_replenishment_qty: f64,
    pub customer_completed: usize,
    pub customer_open: usize,
    pub customer_median: Option<f64>,
    pub customer_p90: Option<f64>,
    pub distributor_completed: usize,
    pub distributor_open: usize,
    pub distributor_median: Option<f64>,
    pub distributor_p90: Option<f64>,
    pub parts_median: Option<f64>,
    pub parts_p90: Option<f64>,
}

impl From<&MetricsReport> for ReportRow {
    fn from(r: &MetricsReport) -> Self {
        let o = |x: Option<f64>| x.map(round6);
        Self {
            demand_scenario: r.demand_scenario,
            strategy: r.strategy,
            seed: r.seed,
            replications: r.replications,
            horizon: r.horizon,
            mean_daily_manufacturer_demand: round6(r.mean_daily_manufacturer_demand),
            mean_daily_replenishment_qty: round6(r.mean_daily_replenishment_qty),
            customer_completed: r.customer.completed,
            customer_open: r.customer.open,
            customer_median: o(r.customer.median),
            customer_p90: o(r.customer.p90),
            distributor_completed: r.distributor.completed,
            distributor_open: r.distributor.open,
            distributor_median: o(r.distributor.median),
            distributor_p90: o(r.distributor.p90),
            parts_median: o(r.parts.median),
            parts_p90: o(r.parts.p90),
        }
    }
}

pub fn write_signals(path: &Path, signals: &[DemandSignal]) -> Result<()> {
    let mut rows: Vec<SignalRow> = signals.iter().map(SignalRow::from).collect();
    rows.sort_by(|a, b| (&a.region_id, a.day).cmp(&(&b.region_id, b.day)));
    write_rows(path, rows)
}

pub fn write_epidemic(path: &Path, epidemic: &[EpiDailyOutput]) -> Result<()> {
    let mut rows: Vec<EpidemicRow> = epidemic.iter().map(EpidemicRow::from).collect();
    rows.sort_by(|a, b| (&a.region_id, a.day).cmp(&(&b.region_id, b.day)));
    write_rows(path, rows)
}

pub fn write_orders(path: &Path, des: &DesResult) -> Result<()> {
    write_rows(
        path,
        des.orders.iter().map(|o| OrderRow {
            order_id: o.order_id,
            class: o.class.as_str().to_string(),
            origin: o.origin.clone(),
            destination: o.destination.clone(),
            qty: o.qty,
            placed_at: round6(o.placed_at),
            fulfilled_at: o.fulfilled_at.map(round6),
            mode: o.mode.map(|m| m.as_str().to_string()),
        }),
    )
}

pub fn write_inventory(path: &Path, des: &DesResult) -> Result<()> {
    let mut rows: Vec<InventoryCsvRow> = des
        .inventory
        .iter()
        .map(|r| InventoryCsvRow {
            facility: r.facility.clone(),
            day: r.day,
            on_hand: r.on_hand,
            position: r.position,
            backlog: r.backlog,
        })
        .collect();
    rows.sort_by(|a, b| (&a.facility, a.day).cmp(&(&b.facility, b.day)));
    write_rows(path, rows)
}

pub fn write_report(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    write_rows(path, reports.iter().map(ReportRow::from))
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    read_rows(path)
}

pub fn read_orders(path: &Path) -> Result<Vec<OrderRow>> {
    read_rows(path)
}

pub fn read_signals(path: &Path) -> Result<Vec<SignalRow>> {
    read_rows(path)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |e| Error::Csv {
        path: path.display().to_string(),
        source: e,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

/// Writes the daily series of every report under `dir`.
pub fn write_timeseries(dir: &Path, reports: &[MetricsReport]) -> Result<()> {
    #[derive(Serialize)]
    struct Daily<'a> {
        demand_scenario: DemandScenario,
        strategy: Strategy,
        key: &'a str,
        day: usize,
        value: f64,
    }
    let keyed = |pick: fn(&MetricsReport) -> &std::collections::BTreeMap<String, Vec<f64>>| {
        let mut rows = Vec::new();
        for r in reports {
            for (k, series) in pick(r) {
                for (day, v) in series.iter().enumerate() {
                    rows.push(Daily {
                        demand_scenario: r.demand_scenario,
                        strategy: r.strategy,
                        key: k,
                        day,
                        value: round6(*v),
                    });
                }
            }
        }
        rows
    };
    let write = |path: &Path, key: &str, rows: Vec<Daily>| -> Result<()> {
        let mut w = writer(path)?;
        let csv_err = |e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        };
        w.write_record(["demand_scenario", "strategy", key, "day", "value"])
            .map_err(csv_err)?;
        for r in rows {
            w.write_record([
                r.demand_scenario.as_str(),
                r.strategy.as_str(),
                r.key,
                &r.day.to_string(),
                &r.value.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    };
    write(&dir.join("backlog.csv"), "facility", keyed(|r| &r.backlog_series))?;
    write(
        &dir.join("availability.csv"),
        "region",
        keyed(|r| &r.availability_series),
    )?;
    write(
        &dir.join("customer_demand.csv"),
        "region",
        keyed(|r| &r.customer_demand_series),
    )?;
    let mfr: Vec<Daily> = reports
        .iter()
        .flat_map(|r| {
            let series = [
                ("demand", &r.manufacturer_demand_series),
                ("replenishment", &r.replenishment_series),
            ];
            series.into_iter().flat_map(move |(key, s)| {
                s.iter().enumerate().map(move |(day, v)| Daily {
                    demand_scenario: r.demand_scenario,
                    strategy: r.strategy,
                    key,
                    day,
                    value: round6(*v),
                })
            })
        })
        .collect();
    write(&dir.join("manufacturer_demand.csv"), "series", mfr)
}

/// Writes one replication's signals, epidemic, orders and inventory.
pub fn write_replication(dir: &Path, rep: &ReplicationOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_signals(&dir.join("signals.csv"), &rep.demand.signals)?;
    write_epidemic(&dir.join("epidemic.csv"), &rep.demand.epidemic)?;
    write_orders(&dir.join("orders.csv"), &rep.des)?;
    write_inventory(&dir.join("inventory.csv"), &rep.des)
}

/// Replication 0 goes to `out_dir` itself, replication k to
/// `out_dir/replication_k`.
pub fn emit_outputs(out_dir: &Path, run: &ScenarioRun) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for (k, rep) in run.replications.iter().enumerate() {
        let dir = if k == 0 {
            out_dir.to_path_buf()
        } else {
            out_dir.join(format!("replication_{k}"))
        };
        write_replication(&dir, rep)?;
        dirs.push(dir);
    }
    write_report(&out_dir.join("report.csv"), std::slice::from_ref(&run.report))?;
    write_timeseries(&out_dir.join("timeseries"), std::slice::from_ref(&run.report))?;
    Ok(dirs)
}

pub fn emit_sweep(out_dir: &Path, reports: &[MetricsReport]) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_report(&out_dir.join("report.csv"), reports)?;
    write_timeseries(&out_dir.join("timeseries"), reports)
}

pub fn write_fit(path: &Path, fits: &[RegionFit]) -> Result<()> {
    #[derive(Serialize)]
    struct FitRow<'a> {
        region_id: &'a str,
        days: usize,
        mape_pct: Option<f64>,
        rmse: f64,
        peak_day_offset: i64,
    }
    let rows: Vec<FitRow> = fits
        .iter()
        .map(|f| FitRow {
            region_id: &f.region_id,
            days: f.days,
            mape_pct: f.mape.map(round6),
            rmse: round6(f.rmse),
            peak_day_offset: f.peak_day_offset,
        })
        .collect();
    let mut w = writer(path)?;
    let csv_err = |e| Error::Csv {
        path: path.display().to_string(),
        source: e,
    };
    if rows.is_empty() {
        w.write_record(["region_id", "days", "mape_pct", "rmse", "peak_day_offset"])
            .map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Plain-text rendering of report rows: p90 fulfillment days by
/// strategy (rows) and demand scenario (columns), one block per order class.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut scenarios: Vec<DemandScenario> = rows.iter().map(|r| r.demand_scenario).collect();
    scenarios.sort();
    scenarios.dedup();
    let mut strategies: Vec<Strategy> = rows.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    let mut out = String::new();
    type Column = fn(&ReportRow) -> Option<f64>;
    let blocks: [(&str, Column); 2] = [
        ("customer orders, p90 fulfillment (days)", |r| r.customer_p90),
        ("distributor replenishment, p90 fulfillment (days)", |r| {
            r.distributor_p90
        }),
    ];
    for (title, pick) in blocks {
        out.push_str(title);
        out.push('\n');
        out.push_str(&format!("{:<18}", ""));
        for s in &scenarios {
            out.push_str(&format!("{:>19}", s.as_str()));
        }
        out.push('\n');
        for st in &strategies {
            out.push_str(&format!("{:<18}", st.label()));
            for s in &scenarios {
                let cell = rows
                    .iter()
                    .find(|r| r.strategy == *st && r.demand_scenario == *s)
                    .and_then(pick)
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
                out.push_str(&format!("{cell:>19}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

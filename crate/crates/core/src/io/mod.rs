//! Configuration, input ingestion, fit against reported cases and CSV
//! outputs.

mod config;
mod emit;
mod ingest;
mod validate;

use std::fs::File;
use std::path::Path;

pub use config::{
    day_offset, parse_config, EpiConfig, InventoryConfig, OutputConfig, PathsConfig, RunConfig, ScenarioConfig,
    TransportConfig,
};
pub use emit::{
    emit_outputs, emit_sweep, read_orders, read_report, read_signals, render_table, round6, write_epidemic, write_fit,
    write_inventory, write_orders, write_replication, write_report, write_signals, write_timeseries, EpidemicRow,
    InventoryCsvRow, OrderRow, ReportRow, SignalRow,
};
pub use ingest::{
    ingest_contacts, ingest_regions, read_actuals, ACTUALS_HEADER, ALL_REGIONS, CONTACTS_HEADER, REGIONS_HEADER,
};
pub use validate::{validate_against_actuals, RegionFit};

use crate::error::Result;
use crate::network::{bundled_network, load_network_files};
use crate::scenario::StudyInputs;

const BUNDLED_REGIONS: &str = include_str!("../../data/regions.csv");
const BUNDLED_CONTACTS: &str = include_str!("../../data/contacts.csv");

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| crate::Error::io(path, e))
}

/// Builds the study inputs a config describes. Relative paths resolve
/// against `base`; missing paths use the bundled data.
pub fn load_inputs(cfg: &RunConfig, base: &Path) -> Result<StudyInputs> {
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let horizon = cfg.horizon()?;
    let network = match (&cfg.paths.nodes, &cfg.paths.bom) {
        (None, None) => bundled_network(),
        (Some(n), Some(b)) => load_network_files(&resolve(n), &resolve(b))?,
        _ => {
            return Err(crate::Error::Config(
                "paths.nodes and paths.bom must be set together".into(),
            ))
        }
    };
    let regions = match &cfg.paths.regions {
        Some(p) => {
            let p = resolve(p);
            ingest_regions(open(&p)?, &p.display().to_string())?
        }
        None => ingest_regions(BUNDLED_REGIONS.as_bytes(), "bundled regions.csv")?,
    };
    let ids: Vec<String> = regions.iter().map(|r| r.region_id.clone()).collect();
    let contacts = match &cfg.paths.contacts {
        Some(p) => {
            let p = resolve(p);
            ingest_contacts(open(&p)?, &p.display().to_string(), &ids, horizon)?
        }
        None => ingest_contacts(BUNDLED_CONTACTS.as_bytes(), "bundled contacts.csv", &ids, horizon)?,
    };
    let default_schedule = contacts.values().next().cloned().unwrap_or_default();
    let mut inputs = StudyInputs::new(network, regions, cfg.epi.parameters(default_schedule));
    inputs.region_contacts = contacts;
    inputs.rates = cfg.oc.clone();
    inputs.chain = cfg.chain();
    inputs.modifiers = cfg.modifiers();
    inputs.audit = cfg.output.audit;
    inputs.validate()?;
    Ok(inputs)
}

/// Reported cases named by `paths.actuals`, or by `override_path` when given.
pub fn load_actuals(
    cfg: &RunConfig,
    base: &Path,
    override_path: Option<&Path>,
) -> Result<std::collections::BTreeMap<String, std::collections::BTreeMap<u32, f64>>> {
    let path = match (override_path, &cfg.paths.actuals) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) if p.is_absolute() => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => return Err(crate::Error::Config("no actuals file given".into())),
    };
    read_actuals(open(&path)?, &path.display().to_string())
}

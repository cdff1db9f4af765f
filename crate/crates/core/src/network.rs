//! Static supply chain graph: suppliers, sub-assembly sites, the assembly
//! plant and regional distributors, plus the four-step bill of materials.
//!
//! `nodes.csv` columns: `node_id,role,lat,lon,region_id,capacity`.
//! `bom.csv` columns: `step,part_type,qty_per_unit,producer_id`. A part type
//! lists its sub-assembly producer(s) and the suppliers feeding them; the
//! first sub-assembly row for a part is the one that receives orders.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::error::{Error, Result};

pub const EARTH_RADIUS_MILES: f64 = 3958.8;

pub const NODES_HEADER: [&str; 6] = ["node_id", "role", "lat", "lon", "region_id", "capacity"];
pub const BOM_HEADER: [&str; 4] = ["step", "part_type", "qty_per_unit", "producer_id"];

/// Number of main assembly steps in the bill of materials.
pub const ASSEMBLY_STEPS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("{file}: header must be `{expected}`, found `{found}`")]
    Header {
        file: &'static str,
        expected: String,
        found: String,
    },
    #[error("{file} row {row}: {msg}")]
    Row {
        file: &'static str,
        row: usize,
        msg: String,
    },
    #[error("duplicate node_id `{0}`")]
    DuplicateNode(String),
    #[error("no assembly facility")]
    NoAssembly,
    #[error("multiple assembly facilities: {0:?}")]
    MultipleAssembly(Vec<String>),
    #[error("node `{node}` has invalid coordinates ({lat}, {lon})")]
    Coordinates { node: String, lat: f64, lon: f64 },
    #[error("distributor `{0}` has no region_id")]
    DistributorWithoutRegion(String),
    #[error("region `{region}` served by more than one distributor: {first}, {second}")]
    DuplicateRegion {
        region: String,
        first: String,
        second: String,
    },
    #[error("bom references unknown node `{producer}` for part `{part}`")]
    DanglingReference { part: String, producer: String },
    #[error("bom producer `{producer}` for part `{part}` is a {role}, not a supplier or sub-assembly")]
    BadProducerRole { part: String, producer: String, role: Role },
    #[error("bom: {0}")]
    Bom(String),
}

impl From<NetworkError> for Error {
    fn from(e: NetworkError) -> Self {
        Error::Data(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Supplier,
    Subassembly,
    Assembly,
    Distributor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Supplier => "supplier",
            Role::Subassembly => "subassembly",
            Role::Assembly => "assembly",
            Role::Distributor => "distributor",
        })
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "supplier" => Ok(Role::Supplier),
            "subassembly" => Ok(Role::Subassembly),
            "assembly" => Ok(Role::Assembly),
            "distributor" => Ok(Role::Distributor),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacilityNode {
    pub node_id: String,
    pub role: Role,
    pub lat: f64,
    pub lon: f64,
    pub region_id: Option<String>,
    /// Production rate in units/day for assembly and sub-assembly sites.
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyStep {
    pub step: u8,
    pub part_type: String,
    pub qty_per_unit: u32,
    /// Sub-assembly sites making this part, order as in the file.
    pub producers: Vec<String>,
    pub suppliers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BillOfMaterials {
    pub steps: Vec<AssemblyStep>,
}

impl BillOfMaterials {
    pub fn step_for_part(&self, part: &str) -> Option<&AssemblyStep> {
        self.steps.iter().find(|s| s.part_type == part)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<FacilityNode>,
    index: HashMap<String, usize>,
    assembly: usize,
    pub bom: BillOfMaterials,
}

impl Network {
    pub fn nodes(&self) -> &[FacilityNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&FacilityNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn assembly(&self) -> &FacilityNode {
        &self.nodes[self.assembly]
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &FacilityNode> {
        self.nodes.iter().filter(move |n| n.role == role)
    }

    pub fn count(&self, role: Role) -> usize {
        self.with_role(role).count()
    }

    pub fn distributor_for_region(&self, region: &str) -> Option<&FacilityNode> {
        self.with_role(Role::Distributor)
            .find(|n| n.region_id.as_deref() == Some(region))
    }

    /// Upstream tier of a node: suppliers feed sub-assembly sites, which
    /// feed the assembly plant, which feeds every distributor.
    pub fn upstream_of(&self, id: &str) -> Vec<&FacilityNode> {
        let Some(node) = self.node(id) else {
            return Vec::new();
        };
        match node.role {
            Role::Distributor => vec![self.assembly()],
            Role::Assembly => self
                .bom
                .steps
                .iter()
                .flat_map(|s| s.producers.iter())
                .filter_map(|p| self.node(p))
                .collect(),
            Role::Subassembly => self
                .bom
                .steps
                .iter()
                .filter(|s| s.producers.iter().any(|p| p == id))
                .flat_map(|s| s.suppliers.iter())
                .filter_map(|p| self.node(p))
                .collect(),
            Role::Supplier => Vec::new(),
        }
    }

    pub fn route(&self, origin: &str, destination: &str) -> Option<Route> {
        let a = self.node(origin)?;
        let b = self.node(destination)?;
        Some(Route {
            origin: origin.to_string(),
            destination: destination.to_string(),
            distance_miles: distance(a, b),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub origin: String,
    pub destination: String,
    pub distance_miles: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportMode {
    Ground,
    Air,
}

impl TransportMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransportMode::Ground => "ground",
            TransportMode::Air => "air",
        }
    }
}

/// Speeds in miles/day and fixed handling time in days per shipment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportConstants {
    pub ground_speed: f64,
    pub ground_handling: f64,
    pub air_speed: f64,
    pub air_handling: f64,
    /// Air freight is allowed only for routes strictly longer than this.
    pub air_threshold_miles: f64,
}

impl Default for TransportConstants {
    fn default() -> Self {
        Self {
            ground_speed: 500.0,
            ground_handling: 0.25,
            air_speed: 3000.0,
            air_handling: 0.5,
            air_threshold_miles: 500.0,
        }
    }
}

/// Great-circle (haversine) distance in miles.
pub fn haversine_miles(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * a.sqrt().min(1.0).asin()
}

pub fn distance(a: &FacilityNode, b: &FacilityNode) -> f64 {
    haversine_miles(a.lat, a.lon, b.lat, b.lon)
}

/// Door-to-door days for a route: handling plus distance over speed.
pub fn transit_time(route: &Route, mode: TransportMode, k: &TransportConstants) -> f64 {
    transit_days(route.distance_miles, mode, k)
}

pub fn transit_days(distance_miles: f64, mode: TransportMode, k: &TransportConstants) -> f64 {
    match mode {
        TransportMode::Ground => k.ground_handling + distance_miles / k.ground_speed,
        TransportMode::Air => k.air_handling + distance_miles / k.air_speed,
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    node_id: String,
    role: String,
    lat: f64,
    lon: f64,
    region_id: String,
    capacity: String,
}

#[derive(Debug, Deserialize)]
struct BomRow {
    step: u8,
    part_type: String,
    qty_per_unit: u32,
    producer_id: String,
}

fn check_header(file: &'static str, found: &csv::StringRecord, expected: &[&str]) -> Result<(), NetworkError> {
    if found.iter().map(str::trim).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(NetworkError::Header {
            file,
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        })
    }
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(
    file: &'static str,
    reader: R,
    header: &[&str],
) -> Result<Vec<T>, NetworkError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| NetworkError::Row {
        file,
        row: 1,
        msg: e.to_string(),
    })?;
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    check_header(file, headers, header)?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| NetworkError::Row {
                file,
                row: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Parses and validates a network from CSV readers.
pub fn load_network<N: Read, B: Read>(nodes_csv: N, bom_csv: B) -> Result<Network, NetworkError> {
    let rows: Vec<NodeRow> = read_rows("nodes.csv", nodes_csv, &NODES_HEADER)?;
    let mut nodes = Vec::with_capacity(rows.len());
    let mut index = HashMap::new();
    for (i, r) in rows.into_iter().enumerate() {
        let row = i + 2;
        let role: Role = r.role.parse().map_err(|msg| NetworkError::Row {
            file: "nodes.csv",
            row,
            msg,
        })?;
        if !(r.lat.abs() <= 90.0 && r.lon.abs() <= 180.0) {
            return Err(NetworkError::Coordinates {
                node: r.node_id,
                lat: r.lat,
                lon: r.lon,
            });
        }
        let capacity = if r.capacity.is_empty() {
            None
        } else {
            let c: f64 = r.capacity.parse().map_err(|_| NetworkError::Row {
                file: "nodes.csv",
                row,
                msg: format!("capacity `{}` is not a number", r.capacity),
            })?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(NetworkError::Row {
                    file: "nodes.csv",
                    row,
                    msg: format!("capacity {c} must be > 0"),
                });
            }
            Some(c)
        };
        if index.insert(r.node_id.clone(), nodes.len()).is_some() {
            return Err(NetworkError::DuplicateNode(r.node_id));
        }
        nodes.push(FacilityNode {
            node_id: r.node_id,
            role,
            lat: r.lat,
            lon: r.lon,
            region_id: (!r.region_id.is_empty()).then_some(r.region_id),
            capacity,
        });
    }

    let assemblies: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].role == Role::Assembly).collect();
    let assembly = match assemblies.as_slice() {
        [] => return Err(NetworkError::NoAssembly),
        [one] => *one,
        many => {
            return Err(NetworkError::MultipleAssembly(
                many.iter().map(|&i| nodes[i].node_id.clone()).collect(),
            ))
        }
    };

    let mut regions: HashMap<&str, &str> = HashMap::new();
    for n in nodes.iter().filter(|n| n.role == Role::Distributor) {
        let region = n
            .region_id
            .as_deref()
            .ok_or_else(|| NetworkError::DistributorWithoutRegion(n.node_id.clone()))?;
        if let Some(first) = regions.insert(region, &n.node_id) {
            return Err(NetworkError::DuplicateRegion {
                region: region.to_string(),
                first: first.to_string(),
                second: n.node_id.clone(),
            });
        }
    }

    let bom = build_bom(read_rows("bom.csv", bom_csv, &BOM_HEADER)?, &nodes, &index)?;
    Ok(Network {
        nodes,
        index,
        assembly,
        bom,
    })
}

fn build_bom(
    rows: Vec<BomRow>,
    nodes: &[FacilityNode],
    index: &HashMap<String, usize>,
) -> Result<BillOfMaterials, NetworkError> {
    let mut steps: Vec<AssemblyStep> = Vec::new();
    for r in rows {
        if r.qty_per_unit == 0 {
            return Err(NetworkError::Bom(format!("part `{}` has qty_per_unit 0", r.part_type)));
        }
        let node = index
            .get(&r.producer_id)
            .map(|&i| &nodes[i])
            .ok_or_else(|| NetworkError::DanglingReference {
                part: r.part_type.clone(),
                producer: r.producer_id.clone(),
            })?;
        let pos = match steps.iter().position(|s| s.step == r.step) {
            Some(p) => {
                let s = &steps[p];
                if s.part_type != r.part_type || s.qty_per_unit != r.qty_per_unit {
                    return Err(NetworkError::Bom(format!(
                        "step {} lists both {}x`{}` and {}x`{}`",
                        r.step, s.qty_per_unit, s.part_type, r.qty_per_unit, r.part_type
                    )));
                }
                p
            }
            None => {
                if steps.iter().any(|s| s.part_type == r.part_type) {
                    return Err(NetworkError::Bom(format!(
                        "part `{}` used by more than one step",
                        r.part_type
                    )));
                }
                steps.push(AssemblyStep {
                    step: r.step,
                    part_type: r.part_type.clone(),
                    qty_per_unit: r.qty_per_unit,
                    producers: Vec::new(),
                    suppliers: Vec::new(),
                });
                steps.len() - 1
            }
        };
        let s = &mut steps[pos];
        match node.role {
            Role::Subassembly => s.producers.push(r.producer_id),
            Role::Supplier => s.suppliers.push(r.producer_id),
            role => {
                return Err(NetworkError::BadProducerRole {
                    part: r.part_type,
                    producer: r.producer_id,
                    role,
                })
            }
        }
    }
    steps.sort_by_key(|s| s.step);
    let numbers: Vec<u8> = steps.iter().map(|s| s.step).collect();
    let expected: Vec<u8> = (1..=ASSEMBLY_STEPS as u8).collect();
    if numbers != expected {
        return Err(NetworkError::Bom(format!(
            "expected steps {expected:?}, found {numbers:?}"
        )));
    }
    for s in &steps {
        if s.producers.is_empty() {
            return Err(NetworkError::Bom(format!(
                "part `{}` has no sub-assembly producer",
                s.part_type
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = s.suppliers.iter().find(|x| !seen.insert(*x)) {
            return Err(NetworkError::Bom(format!(
                "supplier `{dup}` listed twice for `{}`",
                s.part_type
            )));
        }
    }
    Ok(BillOfMaterials { steps })
}

pub fn load_network_files(nodes: &Path, bom: &Path) -> Result<Network> {
    let n = std::fs::File::open(nodes).map_err(|e| Error::io(nodes, e))?;
    let b = std::fs::File::open(bom).map_err(|e| Error::io(bom, e))?;
    Ok(load_network(n, b)?)
}

const BUNDLED_NODES: &str = include_str!("../data/nodes.csv");
const BUNDLED_BOM: &str = include_str!("../data/bom.csv");

/// Synthetic network shipped with the crate: 278 suppliers in four part
/// families, four sub-assembly sites, one assembly plant near Chicago and
/// one distributor per state, DC and Puerto Rico.
pub fn bundled_network() -> Network {
    load_network(BUNDLED_NODES.as_bytes(), BUNDLED_BOM.as_bytes()).expect("bundled network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: &str = "node_id,role,lat,lon,region_id,capacity\n\
        A,assembly,40,-90,IL,\n\
        S1,subassembly,41,-85,,100\n\
        P1,supplier,30,120,,\n\
        D1,distributor,33.75,-84.39,GA,\n";

    fn bom(parts: &[(&str, &str)]) -> String {
        let mut s = String::from("step,part_type,qty_per_unit,producer_id\n");
        for (i, (part, producer)) in parts.iter().enumerate() {
            s.push_str(&format!("{},{part},1,{producer}\n", i + 1));
        }
        s
    }

    fn four_parts() -> String {
        bom(&[("a", "S1"), ("b", "S1"), ("c", "S1"), ("d", "S1")])
    }

    #[test]
    fn bundled_counts() {
        let net = bundled_network();
        assert_eq!(net.count(Role::Supplier), 278);
        assert_eq!(net.count(Role::Distributor), 52);
        assert_eq!(net.count(Role::Assembly), 1);
        assert_eq!(net.count(Role::Subassembly), 4);
        assert_eq!(net.bom.steps.len(), 4);
        let per_family: Vec<usize> = net.bom.steps.iter().map(|s| s.suppliers.len()).collect();
        assert_eq!(per_family, vec![70, 70, 69, 69]);
    }

    #[test]
    fn bundled_is_referentially_closed() {
        let net = bundled_network();
        for n in net.nodes() {
            for up in net.upstream_of(&n.node_id) {
                assert!(net.node(&up.node_id).is_some());
            }
        }
        assert_eq!(net.upstream_of("DIST-AZ")[0].node_id, "ASM-IL");
        assert_eq!(net.upstream_of("ASM-IL").len(), 4);
        assert_eq!(net.upstream_of("SUB-CMP").len(), 70);
        assert!(net.upstream_of("SUP-001").is_empty());
    }

    #[test]
    fn empty_node_file_has_no_assembly() {
        assert_eq!(
            load_network("".as_bytes(), "".as_bytes()).unwrap_err(),
            NetworkError::NoAssembly
        );
        assert_eq!(
            load_network("node_id,role,lat,lon,region_id,capacity\n".as_bytes(), "".as_bytes()).unwrap_err(),
            NetworkError::NoAssembly
        );
    }

    #[test]
    fn dangling_bom_reference() {
        let b = bom(&[("a", "S1"), ("b", "NOPE"), ("c", "S1"), ("d", "S1")]);
        assert!(matches!(
            load_network(NODES.as_bytes(), b.as_bytes()),
            Err(NetworkError::DanglingReference { .. })
        ));
    }

    #[test]
    fn duplicate_and_multiple_assembly() {
        let dup = format!("{NODES}S1,supplier,1,1,,\n");
        assert_eq!(
            load_network(dup.as_bytes(), four_parts().as_bytes()).unwrap_err(),
            NetworkError::DuplicateNode("S1".into())
        );
        let two = format!("{NODES}A2,assembly,1,1,,\n");
        assert!(matches!(
            load_network(two.as_bytes(), four_parts().as_bytes()),
            Err(NetworkError::MultipleAssembly(_))
        ));
    }

    #[test]
    fn strict_headers_and_step_count() {
        let bad = NODES.replace("capacity", "cap");
        assert!(matches!(
            load_network(bad.as_bytes(), four_parts().as_bytes()),
            Err(NetworkError::Header { .. })
        ));
        let three = bom(&[("a", "S1"), ("b", "S1"), ("c", "S1")]);
        assert!(matches!(
            load_network(NODES.as_bytes(), three.as_bytes()),
            Err(NetworkError::Bom(_))
        ));
        let supplier_only = bom(&[("a", "S1"), ("b", "S1"), ("c", "S1"), ("d", "P1")]);
        assert!(matches!(
            load_network(NODES.as_bytes(), supplier_only.as_bytes()),
            Err(NetworkError::Bom(_))
        ));
        let by_distributor = bom(&[("a", "S1"), ("b", "S1"), ("c", "S1"), ("d", "D1")]);
        assert!(matches!(
            load_network(NODES.as_bytes(), by_distributor.as_bytes()),
            Err(NetworkError::BadProducerRole { .. })
        ));
    }

    #[test]
    fn bad_coordinates_and_regions() {
        let n = NODES.replace("30,120", "95,120");
        assert!(matches!(
            load_network(n.as_bytes(), four_parts().as_bytes()),
            Err(NetworkError::Coordinates { .. })
        ));
        let n = format!("{NODES}D2,distributor,1,1,GA,\n");
        assert!(matches!(
            load_network(n.as_bytes(), four_parts().as_bytes()),
            Err(NetworkError::DuplicateRegion { .. })
        ));
        let n = format!("{NODES}D3,distributor,1,1,,\n");
        assert!(matches!(
            load_network(n.as_bytes(), four_parts().as_bytes()),
            Err(NetworkError::DistributorWithoutRegion(_))
        ));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(haversine_miles(33.75, -84.39, 33.75, -84.39), 0.0);
        let half = std::f64::consts::PI * EARTH_RADIUS_MILES;
        assert!((haversine_miles(0.0, 0.0, 0.0, 180.0) - half).abs() < 1e-6);
        assert!((haversine_miles(45.0, 10.0, -45.0, -170.0) - half).abs() < 1e-6);
        let atl_bos = haversine_miles(33.75, -84.39, 42.36, -71.06);
        assert!((936.0..=950.0).contains(&atl_bos), "{atl_bos}");
    }

    #[test]
    fn transit_examples() {
        let k = TransportConstants::default();
        let r = |d: f64| Route {
            origin: "a".into(),
            destination: "b".into(),
            distance_miles: d,
        };
        assert_eq!(transit_time(&r(0.0), TransportMode::Ground, &k), 0.25);
        assert!((transit_time(&r(1000.0), TransportMode::Ground, &k) - 2.25).abs() < 1e-12);
        let air = transit_time(&r(1000.0), TransportMode::Air, &k);
        assert!((air - (0.5 + 1000.0 / 3000.0)).abs() < 1e-12);
        assert!(air < 2.25);
    }
}

//! The bundled facility network: tiers, great-circle distances from the
//! assembly plant and the transit time each transport strategy implies.
//!
//! cargo run --example network_geometry

use ocsim::des::{select_mode, TransportStrategy};
use ocsim::network::{bundled_network, transit_days, Role, TransportConstants};

fn main() {
    let net = bundled_network();
    for role in [Role::Supplier, Role::Subassembly, Role::Assembly, Role::Distributor] {
        println!("{role:>12}: {}", net.count(role));
    }
    let plant = net.assembly();
    let k = TransportConstants::default();
    println!("\nfrom {} to selected distributors", plant.node_id);
    println!("{:<8} {:>8} {:>10} {:>12}", "state", "miles", "ground d", "air>500 d");
    for state in ["IL", "WI", "GA", "AZ", "CA", "MA", "AK"] {
        let Some(dist) = net.distributor_for_region(state) else {
            continue;
        };
        let route = net
            .route(&plant.node_id, &dist.node_id)
            .expect("plant reaches every distributor");
        let ground = transit_days(
            route.distance_miles,
            select_mode(route.distance_miles, TransportStrategy::GroundOnly, &k),
            &k,
        );
        let air = transit_days(
            route.distance_miles,
            select_mode(route.distance_miles, TransportStrategy::AirOver500, &k),
            &k,
        );
        println!("{state:<8} {:>8.0} {ground:>10.2} {air:>12.2}", route.distance_miles);
    }
    let far = net
        .with_role(Role::Supplier)
        .map(|s| (s, ocsim::network::distance(s, plant)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("suppliers exist");
    println!(
        "\nfarthest supplier {} is {:.0} miles from the plant",
        far.0.node_id, far.1
    );
}

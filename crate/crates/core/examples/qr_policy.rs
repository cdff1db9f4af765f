//! Continuous-review (Q, R) parameters, the reorder decision and the weekly
//! re-estimation used by the dynamic policy.
//!
//! cargo run --example qr_policy

use ocsim::des::{
    dynamic_policy_update, qr_parameters, reorder_check, z_for_service_level, InventoryPolicy, PolicyMode,
};

fn main() -> ocsim::Result<()> {
    let (q, r) = qr_parameters(10.0, 3.0, 7.0, 2.0, 0.5, 0.95)?;
    println!("mu_D=10 sigma_D=3 T=7 mu_LT=2 sigma_LT=0.5 alpha=0.95 -> Q={q} R={r}");
    for alpha in [0.5, 0.9, 0.95, 0.99] {
        println!("  z({alpha}) = {:.5}", z_for_service_level(alpha)?);
    }

    let policy = InventoryPolicy::new(10.0, 3.0, 7.0, 2.0, 0.5, 0.95, PolicyMode::Dynamic)?;
    for position in [40, 31, 30, 5, -20] {
        match reorder_check(position, &policy) {
            Some(qty) => println!("position {position:>3}: order {qty}"),
            None => println!("position {position:>3}: hold"),
        }
    }

    // a surge week: the dynamic policy resizes both the lot and the trigger
    let week = [12, 18, 25, 31, 40, 44, 52];
    let updated = dynamic_policy_update(&policy, &week)?;
    println!(
        "after week {week:?}: mu_D={:.1} sigma_D={:.1} Q={} R={} (was Q={} R={})",
        updated.mu_d, updated.sigma_d, updated.q, updated.r, policy.q, policy.r
    );
    Ok(())
}

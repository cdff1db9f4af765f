//! Continuous-review (Q, R) inventory policy.
//!
//! `Q = ceil(mu_D * T)` and
//! `R = ceil(mu_D * mu_LT + z_alpha * sqrt(mu_LT * sigma_D^2 + mu_D^2 * sigma_LT^2))`,
//! with demand in units/day and times in days.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::demand::ceil_units;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryPolicy {
    pub mu_d: f64,
    pub sigma_d: f64,
    pub cycle_days: f64,
    pub mu_lt: f64,
    pub sigma_lt: f64,
    pub service_level: f64,
    pub z_alpha: f64,
    pub q: u64,
    pub r: u64,
    pub mode: PolicyMode,
}

/// Standard normal quantile for a service level in `[0.5, 1)`.
pub fn z_for_service_level(alpha: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::Config(format!("service level {alpha} outside [0.5, 1)")));
    }
    Ok(Normal::standard().inverse_cdf(alpha))
}

pub fn qr_parameters(
    mu_d: f64,
    sigma_d: f64,
    cycle_days: f64,
    mu_lt: f64,
    sigma_lt: f64,
    alpha: f64,
) -> Result<(u64, u64)> {
    let z = z_for_service_level(alpha)?;
    qr_with_z(mu_d, sigma_d, cycle_days, mu_lt, sigma_lt, z)
}

fn qr_with_z(mu_d: f64, sigma_d: f64, cycle_days: f64, mu_lt: f64, sigma_lt: f64, z: f64) -> Result<(u64, u64)> {
    for (name, v) in [
        ("mu_D", mu_d),
        ("sigma_D", sigma_d),
        ("T", cycle_days),
        ("mu_LT", mu_lt),
        ("sigma_LT", sigma_lt),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    let q = ceil_units(mu_d * cycle_days).max(1);
    let safety = z * (mu_lt * sigma_d * sigma_d + mu_d * mu_d * sigma_lt * sigma_lt).sqrt();
    let r = ceil_units(mu_d * mu_lt + safety);
    Ok((q, r))
}

impl InventoryPolicy {
    pub fn new(
        mu_d: f64,
        sigma_d: f64,
        cycle_days: f64,
        mu_lt: f64,
        sigma_lt: f64,
        service_level: f64,
        mode: PolicyMode,
    ) -> Result<Self> {
        let z_alpha = z_for_service_level(service_level)?;
        let (q, r) = qr_with_z(mu_d, sigma_d, cycle_days, mu_lt, sigma_lt, z_alpha)?;
        Ok(Self {
            mu_d,
            sigma_d,
            cycle_days,
            mu_lt,
            sigma_lt,
            service_level,
            z_alpha,
            q,
            r,
            mode,
        })
    }

    /// Order-up-to level `R + Q`.
    pub fn order_up_to(&self) -> u64 {
        self.r + self.q
    }
}

/// Orders exactly `Q` when the inventory position is strictly below `R`.
pub fn reorder_check(position: i64, policy: &InventoryPolicy) -> Option<u64> {
    (position < policy.r as i64).then_some(policy.q)
}

/// Re-estimates demand from the trailing daily totals and recomputes
/// `(Q, R)`. Static policies are returned unchanged.
pub fn dynamic_policy_update(policy: &InventoryPolicy, trailing: &[u64]) -> Result<InventoryPolicy> {
    if policy.mode == PolicyMode::Static || trailing.is_empty() {
        return Ok(policy.clone());
    }
    let n = trailing.len() as f64;
    let mean = trailing.iter().sum::<u64>() as f64 / n;
    let var = if trailing.len() > 1 {
        trailing.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let (q, r) = qr_with_z(
        mean,
        var.sqrt(),
        policy.cycle_days,
        policy.mu_lt,
        policy.sigma_lt,
        policy.z_alpha,
    )?;
    Ok(InventoryPolicy {
        mu_d: mean,
        sigma_d: var.sqrt(),
        q,
        r,
        ..policy.clone()
    })
}

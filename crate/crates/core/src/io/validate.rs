//! Goodness of fit between modeled and reported case series. Nothing is
//! fitted; the numbers only describe the gap.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RegionFit {
    pub region_id: String,
    /// Days present in both series.
    pub days: usize,
    /// Mean absolute percentage error over days with non-zero actuals, in %.
    pub mape: Option<f64>,
    pub rmse: f64,
    /// Modeled peak day minus reported peak day (earliest day on ties).
    pub peak_day_offset: i64,
}

/// Compares `model[region][day]` with reported cases for every region that
/// appears in `actual`.
pub fn validate_against_actuals(
    model: &BTreeMap<String, Vec<f64>>,
    actual: &BTreeMap<String, BTreeMap<u32, f64>>,
) -> Result<Vec<RegionFit>> {
    let mut out = Vec::new();
    for (region, cases) in actual {
        let series = model
            .get(region)
            .ok_or_else(|| Error::Data(format!("actuals mention region {region} which was not simulated")))?;
        let pairs: Vec<(u32, f64, f64)> = cases
            .iter()
            .filter_map(|(&d, &a)| series.get(d as usize).map(|&m| (d, m, a)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::Data(format!(
                "actuals for {region} do not overlap the simulated days"
            )));
        }
        let n = pairs.len() as f64;
        let rmse = (pairs.iter().map(|(_, m, a)| (m - a).powi(2)).sum::<f64>() / n).sqrt();
        let pct: Vec<f64> = pairs
            .iter()
            .filter(|(_, _, a)| *a != 0.0)
            .map(|(_, m, a)| ((m - a) / a).abs())
            .collect();
        let mape = (!pct.is_empty()).then(|| 100.0 * pct.iter().sum::<f64>() / pct.len() as f64);
        let peak = |pick: fn(&(u32, f64, f64)) -> f64| {
            pairs
                .iter()
                .fold((0u32, f64::NEG_INFINITY), |best, p| {
                    if pick(p) > best.1 {
                        (p.0, pick(p))
                    } else {
                        best
                    }
                })
                .0
        };
        out.push(RegionFit {
            region_id: region.clone(),
            days: pairs.len(),
            mape,
            rmse,
            peak_day_offset: i64::from(peak(|p| p.1)) - i64::from(peak(|p| p.2)),
        });
    }
    Ok(out)
}

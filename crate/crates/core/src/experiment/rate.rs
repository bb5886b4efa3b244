use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Least-squares line through `(log λ, log err)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return invalid(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        ));
    }
    if let Some(p) = points
        .iter()
        .find(|(l, e)| !(*l > 0.0 && *e > 0.0 && l.is_finite() && e.is_finite()))
    {
        return invalid(format!("rate fit needs positive finite values, got {p:?}"));
    }
    let mut logs: Vec<(f64, f64)> = points.iter().map(|(l, e)| (l.ln(), e.ln())).collect();
    // order-independent summation
    logs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("rate fit needs at least two distinct λ values");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: logs.len(),
    })
}

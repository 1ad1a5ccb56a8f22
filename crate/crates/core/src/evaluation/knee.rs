use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances closer than this count as a tie (the smaller k wins).
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeResult {
    pub candidate_ks: Vec<usize>,
    pub sse_curve: Vec<f64>,
    pub chosen_k: usize,
    /// Normalized distance of each point to the end-to-end chord.
    pub distances: Vec<f64>,
    /// Set when the curve rises somewhere.
    pub non_monotonic: bool,
}

/// Picks the interior `k` farthest from the chord joining the first and last
/// points of the curve, after scaling both axes to `[0, 1]`.
pub fn knee_select_k(candidate_ks: &[usize], sse_curve: &[f64]) -> Result<KneeResult> {
    if candidate_ks.len() != sse_curve.len() {
        return Err(Error::DimensionMismatch {
            expected: candidate_ks.len(),
            actual: sse_curve.len(),
        });
    }
    if candidate_ks.len() < 3 {
        return Err(Error::InsufficientData("knee selection needs at least 3 points".into()));
    }
    if candidate_ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("candidate ks must be strictly increasing"));
    }
    if sse_curve.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("SSE curve must be finite"));
    }

    let k0 = candidate_ks[0] as f64;
    let kspan = *candidate_ks.last().unwrap() as f64 - k0;
    let lo = sse_curve.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sse_curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let yspan = hi - lo;
    let pts: Vec<(f64, f64)> = candidate_ks
        .iter()
        .zip(sse_curve)
        .map(|(&k, &s)| {
            let y = if yspan > 0.0 { (s - lo) / yspan } else { 0.0 };
            ((k as f64 - k0) / kspan, y)
        })
        .collect();

    let (x1, y1) = pts[0];
    let (x2, y2) = *pts.last().unwrap();
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len = (dx * dx + dy * dy).sqrt();
    let distances: Vec<f64> = pts
        .iter()
        .map(|&(x, y)| ((dy * (x - x1) - dx * (y - y1)) / len).abs())
        .collect();

    let last = pts.len() - 1;
    let mut best = 1;
    for i in 2..last {
        if distances[i] > distances[best] + TIE_TOL {
            best = i;
        }
    }
    Ok(KneeResult {
        candidate_ks: candidate_ks.to_vec(),
        sse_curve: sse_curve.to_vec(),
        chosen_k: candidate_ks[best],
        distances,
        non_monotonic: sse_curve.windows(2).any(|w| w[1] > w[0]),
    })
}

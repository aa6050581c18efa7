//! Piecewise-linear approximation of `ln z` on `[epsilon, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform breakpoints `I` and their logarithms `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwlCurve {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// `I_m = eps + (m-1)/(n-1) * (1 - eps)` for `m = 1..=n`, `V_m = ln I_m`.
/// The last breakpoint is set to exactly 1.
pub fn pwl_breakpoints(epsilon: f64, n_intervals: usize) -> Result<PwlCurve> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n_intervals < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 breakpoints, got {n_intervals}"
        )));
    }
    let last = (n_intervals - 1) as f64;
    let mut breakpoints: Vec<f64> = (0..n_intervals)
        .map(|m| epsilon + (m as f64 / last) * (1.0 - epsilon))
        .collect();
    breakpoints[0] = epsilon;
    breakpoints[n_intervals - 1] = 1.0;
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "{n_intervals} breakpoints are not distinct at epsilon {epsilon}"
        )));
    }
    let values = breakpoints.iter().map(|v| v.ln()).collect();
    Ok(PwlCurve { breakpoints, values })
}

impl PwlCurve {
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Index `m` of the interval `[I_m, I_{m+1}]` holding `z` (clamped).
    pub fn interval(&self, z: f64) -> usize {
        let n = self.breakpoints.len();
        match self.breakpoints.partition_point(|&b| b <= z) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    /// Linear interpolation, clamped to the domain. Exact at breakpoints.
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.breakpoints.len();
        if z <= self.breakpoints[0] {
            return self.values[0];
        }
        if z >= self.breakpoints[n - 1] {
            return self.values[n - 1];
        }
        let m = self.interval(z);
        let (x0, x1) = (self.breakpoints[m], self.breakpoints[m + 1]);
        if z == x0 {
            return self.values[m];
        }
        let t = (z - x0) / (x1 - x0);
        self.values[m] + t * (self.values[m + 1] - self.values[m])
    }

    /// Largest `ln z - pwl(z)` over the domain, with its location. Each chord
    /// of the concave log is furthest below it where the tangent slope `1/z`
    /// equals the chord slope.
    pub fn max_chord_error(&self) -> (f64, f64) {
        let mut best = (0.0, self.breakpoints[0]);
        for m in 0..self.len() - 1 {
            let (x0, x1) = (self.breakpoints[m], self.breakpoints[m + 1]);
            let slope = (self.values[m + 1] - self.values[m]) / (x1 - x0);
            let z = (1.0 / slope).clamp(x0, x1);
            let err = z.ln() - (self.values[m] + slope * (z - x0));
            if err > best.0 {
                best = (err, z);
            }
        }
        best
    }
}

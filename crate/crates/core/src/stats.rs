//! Disorder statistics with a fixed summation order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation across realizations (n − 1 denominator).
    pub sigma: f64,
    /// `sigma / √n`.
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, sigma: f64::NAN, stderr: f64::NAN, n };
        }
        let mut sum = 0.0;
        for v in values {
            sum += v;
        }
        let mean = sum / n as f64;
        let sigma = if n > 1 {
            let mut ss = 0.0;
            for v in values {
                ss += (v - mean) * (v - mean);
            }
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sigma, stderr: sigma / (n as f64).sqrt(), n }
    }
}

/// Element-wise summaries of equally long per-realization series.
pub fn summarize_columns(rows: &[Vec<f64>]) -> Vec<Summary> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|k| Summary::of(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect()
}

/// Vertex of the parabola through the discrete maximum and its neighbours.
///
/// Returns `(location, value)`; at the grid edge the discrete maximum is returned.
pub fn quadratic_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty());
    let mut k = 0;
    for i in 1..y.len() {
        if y[i] > y[k] {
            k = i;
        }
    }
    if k == 0 || k + 1 == y.len() {
        return (x[k], y[k]);
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let a = (d1 - d0) / (x2 - x0);
    if a >= 0.0 {
        return (x1, y1);
    }
    let b = d0 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let c = y1 - a * x1 * x1 - b * x1;
    (xv, a * xv * xv + b * xv + c)
}

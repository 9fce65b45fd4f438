use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-tailed Student-t critical values for df = 1..=30 at 90/95/99%.
// df = 11 at 99% really is 2.718
#[allow(clippy::approx_constant)]
const T_CRITICAL: [[f64; 3]; 30] = [
    [3.078, 6.314, 31.821],
    [1.886, 2.920, 6.965],
    [1.638, 2.353, 4.541],
    [1.533, 2.132, 3.747],
    [1.476, 2.015, 3.365],
    [1.440, 1.943, 3.143],
    [1.415, 1.895, 2.998],
    [1.397, 1.860, 2.896],
    [1.383, 1.833, 2.821],
    [1.372, 1.812, 2.764],
    [1.363, 1.796, 2.718],
    [1.356, 1.782, 2.681],
    [1.350, 1.771, 2.650],
    [1.345, 1.761, 2.624],
    [1.341, 1.753, 2.602],
    [1.337, 1.746, 2.583],
    [1.333, 1.740, 2.567],
    [1.330, 1.734, 2.552],
    [1.328, 1.729, 2.539],
    [1.325, 1.725, 2.528],
    [1.323, 1.721, 2.518],
    [1.321, 1.717, 2.508],
    [1.319, 1.714, 2.500],
    [1.318, 1.711, 2.492],
    [1.316, 1.708, 2.485],
    [1.315, 1.706, 2.479],
    [1.314, 1.703, 2.473],
    [1.313, 1.701, 2.467],
    [1.311, 1.699, 2.462],
    [1.310, 1.697, 2.457],
];

/// Standard normal quantiles used above df 30.
const Z_CRITICAL: [f64; 3] = [1.282, 1.645, 2.326];

/// Confidence levels matching the columns of the critical-value table.
pub const CONFIDENCE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

/// One-tailed critical values at 90, 95 and 99% for `df` degrees of freedom.
pub fn t_critical(df: usize) -> [f64; 3] {
    match df {
        0 => [f64::INFINITY; 3],
        1..=30 => T_CRITICAL[df - 1],
        _ => Z_CRITICAL,
    }
}

/// Outcome of a one-tailed paired t-test of `a` against `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub t: f64,
    pub df: usize,
    pub mean_difference: f64,
    /// `significant[i]`: `|t|` exceeds the critical value at `CONFIDENCE_LEVELS[i]`.
    pub significant: [bool; 3],
}

impl TTestReport {
    /// `+`, `++`, `+++` when `a` is significantly better at 90/95/99%,
    /// `-`, `--`, `---` when worse, empty otherwise.
    pub fn marker(&self) -> &'static str {
        let level = self.significant.iter().filter(|&&s| s).count();
        match (self.t > 0.0, level) {
            (_, 0) => "",
            (true, 1) => "+",
            (true, 2) => "++",
            (true, _) => "+++",
            (false, 1) => "-",
            (false, 2) => "--",
            (false, _) => "---",
        }
    }
}

/// One-tailed paired t-test on `d = a − b`.
///
/// With zero spread, a nonzero mean gives an infinite statistic with every
/// level flagged and an all-zero difference gives `t = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let k = a.len();
    if k < 2 {
        return Err(Error::TooFewValues { needed: 2, found: k });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / k as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let sd = var.sqrt();
    let df = k - 1;
    // differences identical up to rounding count as zero spread
    let spread_is_zero = sd <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE);
    let t = if spread_is_zero {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean)
        }
    } else {
        mean / (sd / (k as f64).sqrt())
    };
    let crit = t_critical(df);
    let significant = [t.abs() > crit[0], t.abs() > crit[1], t.abs() > crit[2]];
    Ok(TTestReport {
        t,
        df,
        mean_difference: mean,
        significant,
    })
}

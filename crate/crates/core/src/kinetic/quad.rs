//! Gauss-Kronrod 7/15 quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Rule {
    /// Global adaptive bisection driven by the largest local error.
    Adaptive,
    /// Uniform panels, no refinement.
    FixedNode { panels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Cutoff {
    /// Scan outward until the integrand drops below `tolerance * peak`.
    Auto,
    Fixed {
        c: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub rel_tol: f64,
    /// Maximum number of subintervals.
    pub node_budget: usize,
    pub cutoff: Cutoff,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: Rule::Adaptive,
            rel_tol: 1e-12,
            node_budget: 2000,
            cutoff: Cutoff::Auto,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::Param(format!(
                "quadrature tolerance must lie in (0, 1e-4], got {}",
                self.rel_tol
            )));
        }
        if self.node_budget == 0 {
            return Err(Error::Param(
                "quadrature node budget must be positive".into(),
            ));
        }
        if let Rule::FixedNode { panels } = self.rule {
            if panels == 0 || panels > self.node_budget {
                return Err(Error::Param(format!(
                    "fixed-node panels must lie in 1..={}, got {panels}",
                    self.node_budget
                )));
            }
        }
        if let Cutoff::Fixed { c } = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Param(format!("cutoff must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integral of `|f|` over the segment.
    magnitude: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut pairs = [(0.0, 0.0); 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    for (j, pair) in pairs.iter_mut().enumerate() {
        let dx = half * XGK[j];
        *pair = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (pair.0 + pair.1);
        abs_sum += WGK[j] * (pair.0.abs() + pair.1.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (pair.0 + pair.1);
        }
    }
    // QUADPACK qk15 error model
    let mean = 0.5 * kronrod;
    let mut spread = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in pairs.iter().enumerate() {
        spread += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let spread = spread * half.abs();
    let res_abs = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if spread != 0.0 && error != 0.0 {
        error = spread * (200.0 * error / spread).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error,
        magnitude: res_abs,
    }
}

/// Error estimates at or below this multiple of `eps * int |f|` are pure
/// roundoff; refinement cannot reduce them, so integration stops there even
/// when the signed value has cancelled below the relative target.
const ROUNDOFF_LIMIT: f64 = 100.0 * f64::EPSILON;

fn converged(value: f64, error: f64, magnitude: f64, rel_tol: f64) -> bool {
    error <= rel_tol * value.abs() || error <= ROUNDOFF_LIMIT * magnitude
}

/// Result of a finite-interval integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
}

/// Integrates `f` over `[a, b]` under `spec`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    match spec.rule {
        Rule::FixedNode { panels } => {
            let width = (b - a) / panels as f64;
            let (mut value, mut error, mut magnitude) = (0.0, 0.0, 0.0);
            for i in 0..panels {
                let seg = gk15(&mut f, a + i as f64 * width, a + (i + 1) as f64 * width);
                value += seg.value;
                error += seg.error;
                magnitude += seg.magnitude;
            }
            if !value.is_finite() || !converged(value, error, magnitude, spec.rel_tol) {
                return Err(Error::Accuracy {
                    tolerance: spec.rel_tol,
                    estimate: error / value.abs().max(f64::MIN_POSITIVE),
                    budget: panels,
                });
            }
            Ok(Integral {
                value,
                error,
                segments: panels,
            })
        }
        Rule::Adaptive => {
            let mut heap = BinaryHeap::new();
            let first = gk15(&mut f, a, b);
            let (mut value, mut error, mut magnitude) = (first.value, first.error, first.magnitude);
            heap.push(first);
            loop {
                if !value.is_finite() {
                    return Err(Error::Accuracy {
                        tolerance: spec.rel_tol,
                        estimate: f64::INFINITY,
                        budget: spec.node_budget,
                    });
                }
                if converged(value, error, magnitude, spec.rel_tol) {
                    return Ok(Integral {
                        value,
                        error,
                        segments: heap.len(),
                    });
                }
                if heap.len() >= spec.node_budget {
                    return Err(Error::Accuracy {
                        tolerance: spec.rel_tol,
                        estimate: error / value.abs().max(f64::MIN_POSITIVE),
                        budget: spec.node_budget,
                    });
                }
                let worst = heap.pop().expect("heap is never empty");
                let mid = 0.5 * (worst.a + worst.b);
                let left = gk15(&mut f, worst.a, mid);
                let right = gk15(&mut f, mid, worst.b);
                value += left.value + right.value - worst.value;
                error += left.error + right.error - worst.error;
                magnitude += left.magnitude + right.magnitude - worst.magnitude;
                heap.push(left);
                heap.push(right);
                // resum to keep cancellation in the running totals from drifting
                if heap.len() % 64 == 0 {
                    value = heap.iter().map(|s| s.value).sum();
                    error = heap.iter().map(|s| s.error).sum();
                    magnitude = heap.iter().map(|s| s.magnitude).sum();
                }
            }
        }
    }
}

//! Closed-form coefficient expressions and the `eta` product.

use serde::{Deserialize, Serialize};

use super::family::GeneratingFamily;
use super::hierarchy::{EquilibriumPoint, Monomial};
use crate::error::{Error, Result};

/// `lo * (lo+2) * ... * hi`; `1` when `hi < lo`. Bounds must share parity.
pub fn eta_product(lo: i64, hi: i64) -> Result<f64> {
    if (lo - hi).rem_euclid(2) != 0 {
        return Err(Error::EtaParity { lo, hi });
    }
    let mut acc = 1.0;
    let mut k = lo;
    while k <= hi {
        acc *= k as f64;
        k += 2;
    }
    Ok(acc)
}

/// The `eta` convention that multiplies the bounds when `hi < lo` instead of
/// returning the empty product. Kept only to document where the two differ.
pub fn eta_literal(lo: i64, hi: i64) -> Result<f64> {
    if hi < lo {
        if (lo - hi).rem_euclid(2) != 0 {
            return Err(Error::EtaParity { lo, hi });
        }
        return Ok((lo * hi) as f64);
    }
    eta_product(lo, hi)
}

/// Direct closed form for `k_{p,q}`, one branch per parity pair of `(p, q)`.
pub fn k_pq_closed_monomial(p: usize, q: usize) -> Monomial {
    let n = (p + q) as f64;
    let (coef, a, b, c) = match (p % 2, q % 2) {
        (0, 0) => (
            3f64.powi(((p + q) / 2) as i32) / (n + 1.0),
            p / 2,
            (p + q) / 2,
            q / 2,
        ),
        (1, 1) => (
            3f64.powi(((p + q - 2) / 2) as i32) / (n + 1.0),
            p.div_ceil(2),
            (p + q - 2) / 2,
            q.div_ceil(2),
        ),
        (0, 1) => (
            3f64.powi(((p + q - 1) / 2) as i32) / (n + 2.0),
            p / 2,
            (p + q - 1) / 2,
            q.div_ceil(2),
        ),
        _ => (
            3f64.powi((p + q).div_ceil(2) as i32) / (n + 2.0),
            (p - 1) / 2,
            (p + q).div_ceil(2),
            q / 2,
        ),
    };
    Monomial { coef, a, b, c }
}

/// First-row closed form: `k_{0,q}` as `d_L^m d_Q^n k_00`.
pub fn k0q_from_k00_monomial(q: usize) -> Monomial {
    let n = q as f64;
    if q.is_multiple_of(2) {
        Monomial {
            coef: 3f64.powi((q / 2) as i32) / (n + 1.0),
            a: 0,
            b: q / 2,
            c: q / 2,
        }
    } else {
        Monomial {
            coef: 3f64.powi(((q - 1) / 2) as i32) / (n + 2.0),
            a: 0,
            b: (q - 1) / 2,
            c: q.div_ceil(2),
        }
    }
}

/// Which `eta` convention [`k0q_closed`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaConvention {
    EmptyProduct,
    Literal,
}

fn eta(conv: EtaConvention, lo: i64, hi: i64) -> Result<f64> {
    match conv {
        EtaConvention::EmptyProduct => eta_product(lo, hi),
        EtaConvention::Literal => eta_literal(lo, hi),
    }
}

/// Explicit first-row series
/// `k_{0,q} = sum_j C_q eta_q(j) L^{-e_q(j)} k~_{c_q+j} Q^j / j!`
/// with `j <= s_trunc`.
pub fn k0q_closed(
    f: &GeneratingFamily,
    q: usize,
    point: &EquilibriumPoint,
    s_trunc: usize,
    conv: EtaConvention,
) -> Result<f64> {
    point.validate()?;
    let (lambda, l, qq) = (point.lambda, point.lambda_ll, point.lambda_ppqq);
    let qi = q as i64;
    let (c0, prefactor) = if q.is_multiple_of(2) {
        (q / 2, (-1.5f64).powi((q / 2) as i32) / (q as f64 + 1.0))
    } else {
        (
            q.div_ceil(2),
            (-1.5f64).powi(((q - 1) / 2) as i32) / (q as f64 + 2.0),
        )
    };
    if c0 + s_trunc > f.s_max() {
        return Err(Error::Truncation {
            needed: c0 + s_trunc,
            available: f.s_max(),
        });
    }
    let mut sum = 0.0;
    let mut q_pow = 1.0;
    for j in 0..=s_trunc {
        let ji = j as i64;
        let (eta_v, exponent) = if q.is_multiple_of(2) {
            (
                eta(conv, 3 + 4 * ji + 2 * qi, 3 * qi + 1 + 4 * ji)?,
                (3.0 + 4.0 * j as f64 + 3.0 * q as f64) / 2.0,
            )
        } else {
            (
                eta(conv, 7 + 4 * ji + 2 * qi - 2, 3 * qi + 2 + 4 * ji)?,
                (3.0 + 4.0 * j as f64 + 3.0 * q as f64 + 1.0) / 2.0,
            )
        };
        sum += eta_v * l.powf(-exponent) * f.ktilde(c0 + j, lambda)? * q_pow;
        q_pow *= qq / (j + 1) as f64;
    }
    Ok(prefactor * sum)
}

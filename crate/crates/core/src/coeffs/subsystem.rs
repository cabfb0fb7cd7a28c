//! Reduced single-variable subsystem and the two defining constraints.

use serde::{Deserialize, Serialize};

use super::closed::eta_product;
use super::family::{ladder_factor_f64, relative, GeneratingFamily};
use super::hierarchy::{EquilibriumPoint, Monomial};
use crate::error::{Error, Result};

/// `alpha_q = (-3/2)^{q/2} eta(2q+3, 3q+1) / (q+1)`, even `q`.
pub fn subsystem_alpha(q: usize) -> Result<f64> {
    if q % 2 == 1 {
        return Err(Error::Param(format!(
            "subsystem index must be even, got {q}"
        )));
    }
    let qi = q as i64;
    Ok((-1.5f64).powi((q / 2) as i32) * eta_product(2 * qi + 3, 3 * qi + 1)? / (q as f64 + 1.0))
}

/// Factor `R_q` in `dI_{q+2}/d lambda = R_q I_q`.
pub fn subsystem_ratio(q: usize) -> Result<f64> {
    Ok(subsystem_alpha(q + 2)? / subsystem_alpha(q)? * ladder_factor_f64(q / 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemEntry {
    pub q: usize,
    pub value: f64,
    /// Integration constant; zero for every kinetic family.
    pub c_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemTable {
    pub lambda: f64,
    pub entries: Vec<SubsystemEntry>,
}

/// `I_q(lambda) = alpha_q k~_{q/2}(lambda)` for even `q <= q_max`.
pub fn reduce_to_13(f: &GeneratingFamily, q_max: usize, lambda: f64) -> Result<SubsystemTable> {
    if q_max % 2 == 1 {
        return Err(Error::Param(format!("q_max must be even, got {q_max}")));
    }
    if q_max / 2 > f.s_max() {
        return Err(Error::Truncation {
            needed: q_max / 2,
            available: f.s_max(),
        });
    }
    let entries = (0..=q_max)
        .step_by(2)
        .map(|q| {
            Ok(SubsystemEntry {
                q,
                value: subsystem_alpha(q)? * f.ktilde(q / 2, lambda)?,
                c_q: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SubsystemTable { lambda, entries })
}

/// Relative residual of `dI_{q+2}/d lambda = R_q I_q` from the family's
/// derivative oracle.
pub fn subsystem_residual(f: &GeneratingFamily, q: usize, lambda: f64) -> Result<f64> {
    let lhs = subsystem_alpha(q + 2)? * f.ktilde_derivative(q / 2 + 1, 1, lambda)?;
    let rhs = subsystem_ratio(q)? * subsystem_alpha(q)? * f.ktilde(q / 2, lambda)?;
    Ok(relative(lhs - rhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `9 d_L^2 k_00 = d_lambda d_Q k_00`, compared order by order in `Q`.
    pub exchange: f64,
    /// `3 k_00 + 2 L d_L k_00 + 4 Q d_Q k_00 = 0` on the truncated series.
    pub scaling: f64,
}

/// Residuals of the two constraints defining `k_00`. The exchange relation
/// compares both sides as order-`S` coefficient functions and needs
/// `k~_{S+1}`.
pub fn constraint_residuals(
    f: &GeneratingFamily,
    point: &EquilibriumPoint,
    s_trunc: usize,
) -> Result<ConstraintResiduals> {
    let k = Monomial::K00;
    let lhs = 9.0 * k.shifted(0, 2, 0).eval(f, point, s_trunc)?;
    let rhs = k.shifted(1, 0, 1).eval(f, point, s_trunc)?;
    let exchange = relative(lhs - rhs, lhs.abs().max(rhs.abs()));

    let l = point.lambda_ll;
    let q = point.lambda_ppqq;
    let t0 = 3.0 * k.eval(f, point, s_trunc)?;
    let t1 = 2.0 * l * k.eval_derivative(f, point, s_trunc, 0, 1, 0)?;
    let t2 = 4.0 * q * k.eval_derivative(f, point, s_trunc, 0, 0, 1)?;
    let scale = t0.abs().max(t1.abs()).max(t2.abs());
    let scaling = relative(t0 + t1 + t2, scale);
    Ok(ConstraintResiduals { exchange, scaling })
}

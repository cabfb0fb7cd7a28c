//! Generating families `k~_s(lambda)`.
//!
//! Every scalar coefficient of the closure is reconstructed from one family of
//! single-variable functions tied together by the ladder
//! `d k~_{s+1} / d lambda = (9/4)(3+4s)(5+4s) k~_s`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator floor for relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

/// Construction gate threshold on the ladder residual.
pub const LADDER_GATE: f64 = 1e-6;

pub const DEFAULT_S_MAX: usize = 16;
pub const DEFAULT_N_MAX: usize = 24;

/// `(9/4)(3+4s)(5+4s)`.
pub fn ladder_factor(s: usize) -> Ratio<i64> {
    let s = s as i64;
    Ratio::new(9 * (3 + 4 * s) * (5 + 4 * s), 4)
}

pub fn ladder_factor_f64(s: usize) -> f64 {
    let r = ladder_factor(s);
    *r.numer() as f64 / *r.denom() as f64
}

pub(crate) fn relative(diff: f64, reference: f64) -> f64 {
    diff.abs() / reference.abs().max(RESIDUAL_FLOOR)
}

/// `Gamma(k + 1/2)`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    let mut g = PI.sqrt();
    for i in 0..k {
        g *= i as f64 + 0.5;
    }
    g
}

/// `int_0^inf exp(-eta^2/3) eta^m d eta` for even `m`.
pub(crate) fn gaussian_moment(m: usize) -> f64 {
    debug_assert!(m.is_multiple_of(2));
    let half = m / 2;
    0.5 * 3f64.powi(half as i32) * 3f64.sqrt() * gamma_half(half)
}

/// Derivative oracle of a family: `d^n k~_s / d lambda^n`.
pub trait FamilyMembers: Send + Sync + fmt::Debug {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64>;
}

/// Serializable description of a family, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Kinetic solution for `F(x) = amplitude * exp(-x)`, in closed form.
    Exponential {
        amplitude: f64,
    },
    /// Kinetic solution for `F(x) = P(x) exp(-x)`, `P` given by ascending
    /// coefficients, in closed form.
    PolyExp {
        coeffs: Vec<f64>,
    },
    /// A base family plus the polynomial corrections generated by ladder
    /// integration constants `c_1, c_2, ...`.
    LadderConstants {
        base: Box<FamilyKind>,
        constants: Vec<f64>,
    },
    /// Quadrature-backed family from a kinetic kernel.
    Kinetic {
        kernel: String,
    },
    /// `k~_s` shifted by a constant; breaks the ladder at `s`. Test fixture.
    Perturbed {
        base: Box<FamilyKind>,
        s: usize,
        delta: f64,
    },
    Custom {
        name: String,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ExponentialMembers {
    pub amplitude: f64,
}

impl FamilyMembers for ExponentialMembers {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        let sign = if (s + n).is_multiple_of(2) { 1.0 } else { -1.0 };
        // 2 pi (-1)^s e^{-lambda} 3^{2s+3/2} Gamma(2s+3/2)
        let pow3 = 3f64.powi(2 * s as i32 + 1) * 3f64.sqrt();
        Ok(self.amplitude * sign * 2.0 * PI * (-lambda).exp() * pow3 * gamma_half(2 * s + 1))
    }
}

/// Closed-form kinetic family of `F(x) = P(x) e^{-x}`.
#[derive(Debug, Clone)]
pub struct PolyExpMembers {
    // derivs[k] = ascending coefficients of R_k, F^{(k)} = R_k e^{-x}
    derivs: Vec<Vec<f64>>,
}

impl PolyExpMembers {
    pub fn new(coeffs: &[f64], max_order: usize) -> Self {
        let mut derivs = Vec::with_capacity(max_order + 1);
        let mut r = coeffs.to_vec();
        for _ in 0..=max_order {
            let next: Vec<f64> = (0..r.len())
                .map(|i| {
                    let dr = if i + 1 < r.len() {
                        (i + 1) as f64 * r[i + 1]
                    } else {
                        0.0
                    };
                    dr - r[i]
                })
                .collect();
            derivs.push(r);
            r = next;
        }
        Self { derivs }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FamilyMembers for PolyExpMembers {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        let k = s + n;
        let r = self.derivs.get(k).ok_or(Error::DerivativeOrder {
            requested: k,
            limit: self.derivs.len() - 1,
        })?;
        // int R_k(lambda + eta^2/3) e^{-eta^2/3} eta^{4s+2} d eta, binomially expanded
        let mut acc = 0.0;
        for (i, ri) in r.iter().enumerate() {
            if *ri == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for t in 0..=i {
                inner += binomial(i, t)
                    * lambda.powi((i - t) as i32)
                    * 3f64.powi(-(t as i32))
                    * gaussian_moment(4 * s + 2 + 2 * t);
            }
            acc += ri * inner;
        }
        Ok(4.0 * PI * (-lambda).exp() * acc)
    }
}

/// Base family plus ladder-integration polynomials:
/// `P_0 = 0`, `P_{s+1}(x) = c_{s+1} + ladder(s) * int_0^x P_s`.
#[derive(Debug, Clone)]
pub struct LadderConstantMembers {
    base: Arc<dyn FamilyMembers>,
    polys: Vec<Vec<f64>>,
}

impl LadderConstantMembers {
    pub fn new(base: Arc<dyn FamilyMembers>, constants: &[f64], s_max: usize) -> Self {
        let mut polys = vec![vec![0.0]];
        for s in 0..s_max {
            let prev = &polys[s];
            let factor = ladder_factor_f64(s);
            let mut next = vec![constants.get(s).copied().unwrap_or(0.0)];
            next.extend(
                prev.iter()
                    .enumerate()
                    .map(|(i, c)| factor * c / (i + 1) as f64),
            );
            polys.push(next);
        }
        Self { base, polys }
    }
}

/// `n`-th derivative of the ascending-coefficient polynomial `c` at `x`.
fn poly_derivative(c: &[f64], n: usize, x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(n)
        .rev()
        .fold(0.0, |acc, (i, ci)| {
            let ff: f64 = (0..n).map(|k| (i - k) as f64).product();
            acc * x + ci * ff
        })
}

impl FamilyMembers for LadderConstantMembers {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        let extra = self
            .polys
            .get(s)
            .map_or(0.0, |p| poly_derivative(p, n, lambda));
        Ok(self.base.derivative(s, n, lambda)? + extra)
    }
}

#[derive(Debug, Clone)]
pub struct PerturbedMembers {
    pub base: Arc<dyn FamilyMembers>,
    pub s: usize,
    pub delta: f64,
}

impl FamilyMembers for PerturbedMembers {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        let v = self.base.derivative(s, n, lambda)?;
        Ok(if s == self.s && n == 0 {
            v + self.delta
        } else {
            v
        })
    }
}

/// Options for the construction gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    pub s_max: usize,
    pub n_max: usize,
    /// Lambda values where the ladder gate is evaluated.
    pub gate_grid: Vec<f64>,
    pub gate_tolerance: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            s_max: DEFAULT_S_MAX,
            n_max: DEFAULT_N_MAX,
            gate_grid: (0..9).map(|i| -1.0 + 0.25 * i as f64).collect(),
            gate_tolerance: LADDER_GATE,
        }
    }
}

/// Immutable, gate-checked family `k~_s`, `s <= s_max`.
#[derive(Debug, Clone)]
pub struct GeneratingFamily {
    kind: FamilyKind,
    members: Arc<dyn FamilyMembers>,
    s_max: usize,
    n_max: usize,
}

impl GeneratingFamily {
    /// Wraps `members` and rejects it unless the ladder holds on the gate grid
    /// for every `s < s_max`.
    pub fn new(
        kind: FamilyKind,
        members: Arc<dyn FamilyMembers>,
        options: &FamilyOptions,
    ) -> Result<Self> {
        let family = Self::new_unchecked(kind, members, options.s_max, options.n_max);
        for s in 0..family.s_max {
            for &lambda in &options.gate_grid {
                let residual = ladder_residual(&family, s, lambda)?;
                if residual.is_nan() || residual > options.gate_tolerance {
                    return Err(Error::Ladder {
                        s,
                        lambda,
                        residual,
                    });
                }
            }
        }
        Ok(family)
    }

    /// Skips the ladder gate. Only meant for fault-injection fixtures.
    pub fn new_unchecked(
        kind: FamilyKind,
        members: Arc<dyn FamilyMembers>,
        s_max: usize,
        n_max: usize,
    ) -> Self {
        Self {
            kind,
            members,
            s_max,
            n_max,
        }
    }

    pub fn exponential(amplitude: f64) -> Result<Self> {
        make_family(
            &FamilyKind::Exponential { amplitude },
            &FamilyOptions::default(),
        )
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn members(&self) -> &Arc<dyn FamilyMembers> {
        &self.members
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn ktilde(&self, s: usize, lambda: f64) -> Result<f64> {
        self.ktilde_derivative(s, 0, lambda)
    }

    pub fn ktilde_derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        if s > self.s_max {
            return Err(Error::Truncation {
                needed: s,
                available: self.s_max,
            });
        }
        if n > self.n_max {
            return Err(Error::DerivativeOrder {
                requested: n,
                limit: self.n_max,
            });
        }
        if !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        self.members.derivative(s, n, lambda)
    }
}

fn members_for(kind: &FamilyKind, options: &FamilyOptions) -> Result<Arc<dyn FamilyMembers>> {
    let order = options.s_max + options.n_max;
    Ok(match kind {
        FamilyKind::Exponential { amplitude } => {
            if !amplitude.is_finite() || *amplitude == 0.0 {
                return Err(Error::Param(format!(
                    "amplitude must be finite and nonzero, got {amplitude}"
                )));
            }
            Arc::new(ExponentialMembers {
                amplitude: *amplitude,
            })
        }
        FamilyKind::PolyExp { coeffs } => {
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Param(
                    "poly-exp needs finite, non-empty coefficients".into(),
                ));
            }
            Arc::new(PolyExpMembers::new(coeffs, order))
        }
        FamilyKind::LadderConstants { base, constants } => Arc::new(LadderConstantMembers::new(
            members_for(base, options)?,
            constants,
            options.s_max,
        )),
        FamilyKind::Perturbed { base, s, delta } => Arc::new(PerturbedMembers {
            base: members_for(base, options)?,
            s: *s,
            delta: *delta,
        }),
        FamilyKind::Kinetic { .. } | FamilyKind::Custom { .. } => {
            return Err(Error::Param(
                "kinetic and custom families are built from their own constructors".into(),
            ))
        }
    })
}

/// Builds a closed-form family. `Perturbed` families bypass the gate so the
/// fault can be observed downstream; everything else must pass it.
pub fn make_family(kind: &FamilyKind, options: &FamilyOptions) -> Result<GeneratingFamily> {
    let members = members_for(kind, options)?;
    if matches!(kind, FamilyKind::Perturbed { .. }) {
        return Ok(GeneratingFamily::new_unchecked(
            kind.clone(),
            members,
            options.s_max,
            options.n_max,
        ));
    }
    GeneratingFamily::new(kind.clone(), members, options)
}

/// `|k~'_{s+1} - ladder(s) k~_s| / max(|ladder(s) k~_s|, floor)` from the
/// family's own derivative oracle.
pub fn ladder_residual(f: &GeneratingFamily, s: usize, lambda: f64) -> Result<f64> {
    let lhs = f.ktilde_derivative(s + 1, 1, lambda)?;
    let rhs = ladder_factor_f64(s) * f.ktilde(s, lambda)?;
    Ok(relative(lhs - rhs, rhs))
}

//! Scalar coefficients `k_{p,q}`, `h_{pqr}`, `phi_{pqr}` as derivatives of `k_{00}`.
//!
//! Each coefficient is a single monomial `coef * d_lambda^a d_L^b d_Q^c k_00`.
//! Expanding `k_00 = sum_s L^{-(3+4s)/2} k~_s Q^s / s!`, the monomial evaluated
//! at truncation order `S` keeps the terms `Q^j`, `j <= S`, of its own Taylor
//! expansion in `Q`.

use serde::{Deserialize, Serialize};

use super::family::GeneratingFamily;
use crate::error::{Error, Result};

/// Equilibrium-frame scalars `(lambda, L = lambda_ll, Q = lambda_ppqq)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub lambda: f64,
    pub lambda_ll: f64,
    pub lambda_ppqq: f64,
}

impl EquilibriumPoint {
    pub fn new(lambda: f64, lambda_ll: f64, lambda_ppqq: f64) -> Result<Self> {
        let p = Self {
            lambda,
            lambda_ll,
            lambda_ppqq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda_ll.is_finite() && self.lambda_ppqq.is_finite())
        {
            return Err(Error::Domain(format!(
                "non-finite equilibrium point {self:?}"
            )));
        }
        if self.lambda_ll <= 0.0 {
            return Err(Error::Domain(format!(
                "lambda_ll must be positive, got {}",
                self.lambda_ll
            )));
        }
        Ok(())
    }
}

/// A single move in the `(p, q)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// `(p, q) -> (p+1, q)`.
    P,
    /// `(p, q) -> (p, q+1)`.
    Q,
}

/// `coef * d_lambda^a d_L^b d_Q^c k_00`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Monomial {
    pub const K00: Monomial = Monomial {
        coef: 1.0,
        a: 0,
        b: 0,
        c: 0,
    };

    pub fn shifted(self, da: usize, db: usize, dc: usize) -> Self {
        Self {
            coef: self.coef,
            a: self.a + da,
            b: self.b + db,
            c: self.c + dc,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            coef: self.coef * factor,
            ..self
        }
    }

    /// Value at `point`, keeping `Q^j` for `j <= s_trunc`.
    pub fn eval(
        &self,
        f: &GeneratingFamily,
        point: &EquilibriumPoint,
        s_trunc: usize,
    ) -> Result<f64> {
        point.validate()?;
        let top = self.c + s_trunc;
        if top > f.s_max() {
            return Err(Error::Truncation {
                needed: top,
                available: f.s_max(),
            });
        }
        if self.coef == 0.0 {
            return Ok(0.0);
        }
        let (lambda, l, q) = (point.lambda, point.lambda_ll, point.lambda_ppqq);
        let mut sum = 0.0;
        let mut q_pow = 1.0;
        for j in 0..=s_trunc {
            let s = self.c + j;
            let x = -(3.0 + 4.0 * s as f64) / 2.0;
            let falling: f64 = (0..self.b).map(|i| x - i as f64).product();
            let kt = f.ktilde_derivative(s, self.a, lambda)?;
            sum += kt * falling * l.powf(x - self.b as f64) * q_pow;
            q_pow *= q / (j + 1) as f64;
        }
        Ok(self.coef * sum)
    }

    /// Derivative of the order-`s_trunc` truncation itself: a `Q`-derivative
    /// lowers the order, `d_lambda` and `d_L` do not. Zero once the order is
    /// exhausted.
    pub fn eval_derivative(
        &self,
        f: &GeneratingFamily,
        point: &EquilibriumPoint,
        s_trunc: usize,
        d_lambda: usize,
        d_l: usize,
        d_q: usize,
    ) -> Result<f64> {
        if d_q > s_trunc {
            point.validate()?;
            return Ok(0.0);
        }
        self.shifted(d_lambda, d_l, d_q)
            .eval(f, point, s_trunc - d_q)
    }
}

/// Applies one step from `(p, q)` to `m`.
pub fn apply_step(m: Monomial, p: usize, q: usize, step: Step) -> Monomial {
    let n = (p + q) as f64;
    let odd = (p + q) % 2 == 1;
    match (step, odd) {
        (Step::P, true) => m.shifted(1, 0, 0),
        (Step::P, false) => m.shifted(0, 1, 0).scaled(3.0 * (n + 1.0) / (n + 3.0)),
        (Step::Q, true) => m.shifted(0, 1, 0).scaled(3.0),
        (Step::Q, false) => m.shifted(0, 0, 1).scaled((n + 1.0) / (n + 3.0)),
    }
}

/// All `Q` steps first, then all `P` steps.
pub fn canonical_path(p: usize, q: usize) -> Vec<Step> {
    std::iter::repeat_n(Step::Q, q)
        .chain(std::iter::repeat_n(Step::P, p))
        .collect()
}

/// Monomial for the coefficient reached by walking `path` from `(0, 0)`.
pub fn path_monomial(path: &[Step]) -> (usize, usize, Monomial) {
    let (mut p, mut q, mut m) = (0, 0, Monomial::K00);
    for &step in path {
        m = apply_step(m, p, q, step);
        match step {
            Step::P => p += 1,
            Step::Q => q += 1,
        }
    }
    (p, q, m)
}

pub fn k_pq_monomial(p: usize, q: usize) -> Monomial {
    path_monomial(&canonical_path(p, q)).2
}

/// `k_s = L^{-(3+4s)/2} k~_s(lambda)`.
pub fn k_s_value(f: &GeneratingFamily, s: usize, point: &EquilibriumPoint) -> Result<f64> {
    point.validate()?;
    let x = -(3.0 + 4.0 * s as f64) / 2.0;
    Ok(point.lambda_ll.powf(x) * f.ktilde(s, point.lambda)?)
}

pub fn k00(f: &GeneratingFamily, point: &EquilibriumPoint, s_trunc: usize) -> Result<f64> {
    Monomial::K00.eval(f, point, s_trunc)
}

pub fn k_pq(
    f: &GeneratingFamily,
    p: usize,
    q: usize,
    point: &EquilibriumPoint,
    s_trunc: usize,
) -> Result<f64> {
    k_pq_monomial(p, q).eval(f, point, s_trunc)
}

/// `k_{p,q}` reached along an explicit path; must end at `(p, q)`.
pub fn k_pq_along(
    f: &GeneratingFamily,
    path: &[Step],
    point: &EquilibriumPoint,
    s_trunc: usize,
) -> Result<f64> {
    path_monomial(path).2.eval(f, point, s_trunc)
}

/// Index triple of a tensor coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoefficientRequest {
    pub p: usize,
    pub q: usize,
    pub r: usize,
}

impl CoefficientRequest {
    pub fn new(p: usize, q: usize, r: usize) -> Self {
        Self { p, q, r }
    }
}

/// Monomial of `h_{pqr}`, `None` when `p+q` is odd (identically zero).
pub fn h_monomial(req: CoefficientRequest) -> Option<Monomial> {
    let CoefficientRequest { p, q, r } = req;
    if (p + q) % 2 == 1 {
        return None;
    }
    let n = (p + q) as f64;
    let factor = 3f64.powi(r as i32) * (n + 1.0) / (n + 2.0 * r as f64 + 1.0);
    Some(k_pq_monomial(p, q).shifted(0, r, 0).scaled(factor))
}

/// Monomial of `phi_{pqr}`, `None` when `p+q` is even (identically zero).
pub fn phi_monomial(req: CoefficientRequest) -> Option<Monomial> {
    let CoefficientRequest { p, q, r } = req;
    if (p + q) % 2 == 0 {
        return None;
    }
    let n = (p + q) as f64;
    let factor = 3f64.powi(r as i32) * (n + 2.0) / (n + 2.0 * r as f64 + 2.0);
    Some(k_pq_monomial(p, q).shifted(0, r, 0).scaled(factor))
}

pub fn h_pqr(
    f: &GeneratingFamily,
    req: CoefficientRequest,
    point: &EquilibriumPoint,
    s_trunc: usize,
) -> Result<f64> {
    match h_monomial(req) {
        Some(m) => m.eval(f, point, s_trunc),
        None => point.validate().map(|_| 0.0),
    }
}

pub fn phi_pqr(
    f: &GeneratingFamily,
    req: CoefficientRequest,
    point: &EquilibriumPoint,
    s_trunc: usize,
) -> Result<f64> {
    match phi_monomial(req) {
        Some(m) => m.eval(f, point, s_trunc),
        None => point.validate().map(|_| 0.0),
    }
}

/// Which tensor coefficient a [`CoefficientSource`] is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefficientKind {
    H,
    Phi,
}

/// Orders of derivatives of the truncated coefficient with respect to
/// `lambda` and `lambda_ppqq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DerivativeOrders {
    pub lambda: usize,
    pub series: usize,
}

/// Provider of the tensor coefficients used by the potential evaluators.
pub trait CoefficientSource {
    fn coefficient(
        &self,
        kind: CoefficientKind,
        req: CoefficientRequest,
        point: &EquilibriumPoint,
        s_trunc: usize,
        orders: DerivativeOrders,
    ) -> Result<f64>;
}

impl CoefficientSource for GeneratingFamily {
    fn coefficient(
        &self,
        kind: CoefficientKind,
        req: CoefficientRequest,
        point: &EquilibriumPoint,
        s_trunc: usize,
        orders: DerivativeOrders,
    ) -> Result<f64> {
        let m = match kind {
            CoefficientKind::H => h_monomial(req),
            CoefficientKind::Phi => phi_monomial(req),
        };
        match m {
            Some(m) => m.eval_derivative(self, point, s_trunc, orders.lambda, 0, orders.series),
            None => point.validate().map(|_| 0.0),
        }
    }
}

/// Multiplies one coefficient of an inner source by `factor`. Fault fixture.
#[derive(Debug, Clone, Copy)]
pub struct ScaledCoefficient<'a, C: CoefficientSource + ?Sized> {
    pub inner: &'a C,
    pub kind: CoefficientKind,
    pub req: CoefficientRequest,
    pub factor: f64,
}

impl<C: CoefficientSource + ?Sized> CoefficientSource for ScaledCoefficient<'_, C> {
    fn coefficient(
        &self,
        kind: CoefficientKind,
        req: CoefficientRequest,
        point: &EquilibriumPoint,
        s_trunc: usize,
        orders: DerivativeOrders,
    ) -> Result<f64> {
        let v = self.inner.coefficient(kind, req, point, s_trunc, orders)?;
        Ok(if kind == self.kind && req == self.req {
            v * self.factor
        } else {
            v
        })
    }
}

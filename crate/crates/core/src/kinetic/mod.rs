//! Kinetic particular solution by quadrature. Independent of the coefficient
//! engine and used to cross-check it.

pub mod quad;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::family::FamilyMembers;
use crate::coeffs::{EquilibriumPoint, FamilyKind, FamilyOptions, GeneratingFamily};
use crate::error::{Error, Result};
pub use quad::{integrate, Cutoff, QuadratureSpec, Rule};

/// Scalar kernel `F` with derivatives `F^{(n)}`.
pub trait KineticKernel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn derivative(&self, n: usize, x: f64) -> f64;
}

/// `amplitude * e^{-x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel {
    pub amplitude: f64,
}

impl KineticKernel for ExpKernel {
    fn name(&self) -> String {
        "exp".into()
    }
    fn derivative(&self, n: usize, x: f64) -> f64 {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.amplitude * (-x).exp()
    }
}

/// `P(x) e^{-x}` with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyExpKernel {
    pub coeffs: Vec<f64>,
}

impl KineticKernel for PolyExpKernel {
    fn name(&self) -> String {
        format!("polyexp{:?}", self.coeffs)
    }
    fn derivative(&self, n: usize, x: f64) -> f64 {
        // (P e^{-x})^{(n)} = e^{-x} sum_j C(n, j) (-1)^{n-j} P^{(j)}
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=n {
            let sign = if (n - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += binom * sign * poly_derivative(&self.coeffs, j, x);
            binom *= (n - j) as f64 / (j + 1) as f64;
        }
        acc * (-x).exp()
    }
}

/// Pure polynomial `P(x)`; violates the decay requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialKernel {
    pub coeffs: Vec<f64>,
}

impl KineticKernel for PolynomialKernel {
    fn name(&self) -> String {
        format!("poly{:?}", self.coeffs)
    }
    fn derivative(&self, n: usize, x: f64) -> f64 {
        poly_derivative(&self.coeffs, n, x)
    }
}

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

/// Largest `c` scanned for decay.
const SCAN_LIMIT: f64 = 1.0e3;
const SCAN_STEP: f64 = 0.25;

/// Argument `lambda + a c^2 + b c^4` of the kernel along the ray.
#[derive(Debug, Clone, Copy)]
struct Ray {
    lambda: f64,
    a: f64,
    b: f64,
}

impl Ray {
    fn at(&self, c: f64) -> f64 {
        let c2 = c * c;
        self.lambda + self.a * c2 + self.b * c2 * c2
    }
}

/// `int_0^inf F^{(n)}(ray(c)) c^m dc`.
fn ray_integral(
    kernel: &dyn KineticKernel,
    n: usize,
    m: usize,
    ray: Ray,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let g = |c: f64| kernel.derivative(n, ray.at(c)) * c.powi(m as i32);
    let upper = match spec.cutoff {
        Cutoff::Fixed { c } => c,
        Cutoff::Auto => scan_cutoff(&g, kernel, ray, spec.rel_tol)?,
    };
    Ok(integrate(g, 0.0, upper, spec)?.value)
}

/// First `c` past the integrand's peak where it stays below
/// `tol * 1e-3 * peak` for a few more steps.
fn scan_cutoff(
    g: &impl Fn(f64) -> f64,
    kernel: &dyn KineticKernel,
    ray: Ray,
    tol: f64,
) -> Result<f64> {
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    let mut c = SCAN_STEP;
    while c <= SCAN_LIMIT {
        let v = g(c).abs();
        if !v.is_finite() {
            break;
        }
        peak = peak.max(v);
        if peak > 0.0 && v <= tol * 1e-3 * peak {
            quiet += 1;
            if quiet >= 4 && c >= 1.0 {
                return Ok(c);
            }
        } else {
            quiet = 0;
        }
        c += SCAN_STEP;
    }
    let c = c.min(SCAN_LIMIT);
    Err(Error::Decay {
        c,
        boundary: (kernel.derivative(0, ray.at(c)) * c.powi(3)).abs(),
    })
}

/// Boundary term `|F(ray(c)) c^3|` at the decay cutoff. Errors with the
/// estimate when the kernel does not decay.
pub fn decay_certificate(
    kernel: &dyn KineticKernel,
    point: &EquilibriumPoint,
    tol: f64,
) -> Result<f64> {
    let ray = Ray {
        lambda: point.lambda,
        a: point.lambda_ll / 3.0,
        b: point.lambda_ppqq,
    };
    let g = |c: f64| kernel.derivative(0, ray.at(c)) * c.powi(3);
    let c = scan_cutoff(&g, kernel, ray, tol)?;
    Ok(g(c).abs())
}

fn check_point(point: &EquilibriumPoint) -> Result<()> {
    point.validate()?;
    if point.lambda_ppqq < 0.0 {
        return Err(Error::Domain(format!(
            "kinetic integrals diverge for lambda_ppqq < 0, got {}",
            point.lambda_ppqq
        )));
    }
    Ok(())
}

/// `d^n k~_s / d lambda^n = 4 pi int F^{(s+n)}(lambda + eta^2/3) eta^{4s+2} d eta`.
pub fn kinetic_ktilde_derivative(
    kernel: &dyn KineticKernel,
    s: usize,
    n: usize,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let ray = Ray {
        lambda,
        a: 1.0 / 3.0,
        b: 0.0,
    };
    Ok(4.0 * PI * ray_integral(kernel, s + n, 4 * s + 2, ray, spec)?)
}

pub fn kinetic_ktilde(
    kernel: &dyn KineticKernel,
    s: usize,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    kinetic_ktilde_derivative(kernel, s, 0, lambda, spec)
}

fn full_ray(point: &EquilibriumPoint) -> Ray {
    Ray {
        lambda: point.lambda,
        a: point.lambda_ll / 3.0,
        b: point.lambda_ppqq,
    }
}

/// `k_{p,q}` directly from the kinetic integral.
pub fn kinetic_kpq(
    kernel: &dyn KineticKernel,
    p: usize,
    q: usize,
    point: &EquilibriumPoint,
    spec: &QuadratureSpec,
) -> Result<f64> {
    kinetic_hpqr_or_phi(kernel, p, q, 0, point, spec)
}

/// `h_{pqr}` (`p+q` even) or `phi_{pqr}` (`p+q` odd) from the kinetic integral.
pub fn kinetic_hpqr_or_phi(
    kernel: &dyn KineticKernel,
    p: usize,
    q: usize,
    r: usize,
    point: &EquilibriumPoint,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_point(point)?;
    let n = p + q + 2 * r;
    let (divisor, power) = if (p + q).is_multiple_of(2) {
        (n + 1, p + 3 * q + 2 * r + 2)
    } else {
        (n + 2, p + 3 * q + 2 * r + 3)
    };
    let integral = ray_integral(kernel, p + q + r, power, full_ray(point), spec)?;
    Ok(4.0 * PI / divisor as f64 * integral)
}

/// `s`-th coefficient of the `lambda_ppqq` series of `k_00`:
/// `4 pi int F^{(s)}(lambda + L c^2/3) c^{4s+2} dc`.
pub fn kinetic_series_coefficient(
    kernel: &dyn KineticKernel,
    s: usize,
    point: &EquilibriumPoint,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_point(point)?;
    let ray = Ray {
        lambda: point.lambda,
        a: point.lambda_ll / 3.0,
        b: 0.0,
    };
    Ok(4.0 * PI * ray_integral(kernel, s, 4 * s + 2, ray, spec)?)
}

#[derive(Debug, Clone)]
struct KineticMembers {
    kernel: Arc<dyn KineticKernel>,
    spec: QuadratureSpec,
}

impl FamilyMembers for KineticMembers {
    fn derivative(&self, s: usize, n: usize, lambda: f64) -> Result<f64> {
        kinetic_ktilde_derivative(self.kernel.as_ref(), s, n, lambda, &self.spec)
    }
}

/// Quadrature-backed family; must pass the decay certificate and the ladder
/// gate.
pub fn make_kinetic_family(
    kernel: Arc<dyn KineticKernel>,
    options: &FamilyOptions,
    spec: &QuadratureSpec,
) -> Result<GeneratingFamily> {
    spec.validate()?;
    for &lambda in &options.gate_grid {
        decay_certificate(
            kernel.as_ref(),
            &EquilibriumPoint::new(lambda, 1.0, 0.0)?,
            spec.rel_tol,
        )?;
    }
    let kind = FamilyKind::Kinetic {
        kernel: kernel.name(),
    };
    GeneratingFamily::new(
        kind,
        Arc::new(KineticMembers {
            kernel,
            spec: *spec,
        }),
        options,
    )
}

/// Outcome of the integration-by-parts identity
/// `0 = 3 int F c^2 + (2/3) L int F' c^4 + 4 Q int F' c^6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByPartsReport {
    pub terms: [f64; 3],
    /// Relative to the largest term; infinite when the kernel does not decay.
    pub residual: f64,
    /// `|F c^3|` at the cutoff, the dropped boundary term.
    pub boundary: f64,
    pub decays: bool,
}

pub fn f1_by_parts_check(
    kernel: &dyn KineticKernel,
    point: &EquilibriumPoint,
    spec: &QuadratureSpec,
) -> Result<ByPartsReport> {
    check_point(point)?;
    let boundary = match decay_certificate(kernel, point, spec.rel_tol) {
        Ok(b) => b,
        Err(Error::Decay { boundary, .. }) => {
            return Ok(ByPartsReport {
                terms: [f64::NAN; 3],
                residual: f64::INFINITY,
                boundary,
                decays: false,
            })
        }
        Err(e) => return Err(e),
    };
    let ray = full_ray(point);
    let t0 = 3.0 * ray_integral(kernel, 0, 2, ray, spec)?;
    let t1 = 2.0 / 3.0 * point.lambda_ll * ray_integral(kernel, 1, 4, ray, spec)?;
    let t2 = if point.lambda_ppqq == 0.0 {
        0.0
    } else {
        4.0 * point.lambda_ppqq * ray_integral(kernel, 1, 6, ray, spec)?
    };
    let scale = t0.abs().max(t1.abs()).max(t2.abs()).max(f64::MIN_POSITIVE);
    Ok(ByPartsReport {
        terms: [t0, t1, t2],
        residual: (t0 + t1 + t2).abs() / scale,
        boundary,
        decays: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{k_pq, ladder_residual};

    fn exp() -> Arc<dyn KineticKernel> {
        Arc::new(ExpKernel { amplitude: 1.0 })
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn ktilde_examples() {
        let k = exp();
        let v0 = kinetic_ktilde(k.as_ref(), 0, 0.0, &spec()).unwrap();
        assert!((v0 - 28.933_881_011_162_245).abs() < 1e-10);
        let v1 = kinetic_ktilde(k.as_ref(), 1, 0.0, &spec()).unwrap();
        assert!((v1 + 976.518_484_126_725_8).abs() < 1e-8);
        let shifted = kinetic_ktilde(k.as_ref(), 2, 0.7, &spec()).unwrap();
        let base = kinetic_ktilde(k.as_ref(), 2, 0.0, &spec()).unwrap();
        assert!(((shifted - (-0.7f64).exp() * base) / shifted).abs() < 1e-11);
    }

    #[test]
    fn kpq_examples() {
        let k = exp();
        let at = EquilibriumPoint::new(0.0, 1.0, 0.0).unwrap();
        let k00 = kinetic_kpq(k.as_ref(), 0, 0, &at, &spec()).unwrap();
        assert!((k00 - 28.933_881_011_162_245).abs() < 1e-10);
        let k10 = kinetic_kpq(k.as_ref(), 1, 0, &at, &spec()).unwrap();
        assert!((k10 + 43.400_821_516_743_37).abs() < 1e-10);
        let at4 = EquilibriumPoint::new(0.0, 4.0, 0.0).unwrap();
        let v = kinetic_kpq(k.as_ref(), 0, 0, &at4, &spec()).unwrap();
        assert!((v - 3.616_735_126_395_280_6).abs() < 1e-11);
    }

    #[test]
    fn negative_quartic_rejected() {
        let at = EquilibriumPoint::new(0.0, 1.0, -0.1).unwrap();
        assert!(matches!(
            kinetic_kpq(exp().as_ref(), 0, 0, &at, &spec()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn matches_closed_form_hierarchy() {
        let k = exp();
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let at = EquilibriumPoint::new(0.2, 1.7, 0.0).unwrap();
        for p in 0..=4 {
            for q in 0..=(6 - p) {
                let a = kinetic_kpq(k.as_ref(), p, q, &at, &spec()).unwrap();
                let b = k_pq(&f, p, q, &at, 0).unwrap();
                assert!(((a - b) / b).abs() < 1e-9, "({p},{q}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn kinetic_family_passes_gate() {
        let fam = make_kinetic_family(exp(), &FamilyOptions::default(), &spec()).unwrap();
        let e = GeneratingFamily::exponential(1.0).unwrap();
        for s in 0..5 {
            let (a, b) = (fam.ktilde(s, -0.5).unwrap(), e.ktilde(s, -0.5).unwrap());
            assert!(((a - b) / b).abs() < 1e-8);
        }
        let xexp: Arc<dyn KineticKernel> = Arc::new(PolyExpKernel {
            coeffs: vec![0.0, 1.0],
        });
        let fam = make_kinetic_family(xexp, &FamilyOptions::default(), &spec()).unwrap();
        assert!(ladder_residual(&fam, 3, 0.1).unwrap() < 1e-6);
    }

    #[test]
    fn growing_kernel_fails_decay() {
        let k: Arc<dyn KineticKernel> = Arc::new(PolynomialKernel {
            coeffs: vec![1.0, 0.0, 1.0],
        });
        let err = make_kinetic_family(k.clone(), &FamilyOptions::default(), &spec()).unwrap_err();
        assert!(matches!(err, Error::Decay { .. }), "{err}");
        let at = EquilibriumPoint::new(0.0, 1.0, 0.0).unwrap();
        let r = f1_by_parts_check(k.as_ref(), &at, &spec()).unwrap();
        assert!(!r.decays && r.boundary > 1.0);
    }

    #[test]
    fn by_parts_identity() {
        for q in [0.0, 0.1] {
            let at = EquilibriumPoint::new(0.0, 1.0, q).unwrap();
            let r = f1_by_parts_check(exp().as_ref(), &at, &spec()).unwrap();
            assert!(r.residual < 1e-8, "{r:?}");
            assert!(r.decays && r.boundary < 1e-10);
        }
    }

    #[test]
    fn fixed_node_rule() {
        let s = QuadratureSpec {
            rule: Rule::FixedNode { panels: 32 },
            cutoff: Cutoff::Fixed { c: 30.0 },
            ..spec()
        };
        let v = kinetic_ktilde(exp().as_ref(), 1, 0.0, &s).unwrap();
        assert!((v + 976.518_484_126_725_8).abs() < 1e-8);
    }
}

//! Scalar identity chain, the two constraints on `k_00`, and the closed-form
//! cross-checks.

use super::points::point_coords;
use super::report::{relative_to_larger, Record, ReportMetadata, VerificationReport};
use crate::coeffs::hierarchy::{h_monomial, k_pq_monomial};
use crate::coeffs::{
    constraint_residuals, k0q_closed, k0q_from_k00_monomial, k_pq, k_pq_closed_monomial,
    CoefficientRequest, EquilibriumPoint, EtaConvention, GeneratingFamily, Monomial,
};
use crate::error::Result;

const ANCHOR_EQ: &str = "0 = (p+3q+3) k_pq + 2 L d_L k_pq + 4 Q d_Q k_pq";
const ANCHOR_PRECURSOR: &str =
    "0 = (n+1) h_pqr + (2/3) L h_pq(r+1) + (n+1)/(n+3) (2q h_pqr + 4 Q d_Q h_pqr)";
const ANCHOR_ROW_EVEN: &str = "9 (q+1)/(q+3) d_L^2 k_0q = d_lambda k_0(q+1)";
const ANCHOR_ROW_ODD: &str = "d_Q d_lambda k_0q = 3 d_L k_0(q+1)";
const ANCHOR_EXCHANGE: &str = "9 d_L^2 k_00 = d_lambda d_Q k_00";
const ANCHOR_SCALING: &str = "0 = 3 k_00 + 2 L d_L k_00 + 4 Q d_Q k_00";

pub const READING_CHAIN: &str = "the scaling identities hold for any family because they only express homogeneity in L; first-row relations are added to the chain to localize ladder faults, evaluated at lambda_ppqq = 0 so that each tests exactly one k~_s";

/// Sum of signed terms, relative to the largest term.
fn balance(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    relative_to_larger(sum, scale, 0.0)
}

fn eq_residual(
    f: &GeneratingFamily,
    p: usize,
    q: usize,
    at: &EquilibriumPoint,
    s: usize,
) -> Result<f64> {
    let m = k_pq_monomial(p, q);
    let k = m.eval_derivative(f, at, s, 0, 0, 0)?;
    let dl = m.eval_derivative(f, at, s, 0, 1, 0)?;
    let dq = m.eval_derivative(f, at, s, 0, 0, 1)?;
    Ok(balance(&[
        (p + 3 * q + 3) as f64 * k,
        2.0 * at.lambda_ll * dl,
        4.0 * at.lambda_ppqq * dq,
    ]))
}

fn precursor_residual(
    f: &GeneratingFamily,
    req: CoefficientRequest,
    at: &EquilibriumPoint,
    s: usize,
) -> Result<f64> {
    let (h, h_next) = match (
        h_monomial(req),
        h_monomial(CoefficientRequest::new(req.p, req.q, req.r + 1)),
    ) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(0.0),
    };
    let n = (req.p + req.q + 2 * req.r) as f64;
    let ratio = (n + 1.0) / (n + 3.0);
    let hv = h.eval_derivative(f, at, s, 0, 0, 0)?;
    Ok(balance(&[
        (n + 1.0) * hv,
        2.0 / 3.0 * at.lambda_ll * h_next.eval_derivative(f, at, s, 0, 0, 0)?,
        ratio * 2.0 * req.q as f64 * hv,
        ratio * 4.0 * at.lambda_ppqq * h.eval_derivative(f, at, s, 0, 0, 1)?,
    ]))
}

/// Lowest `k~` index carried by `k_{0,q}`.
fn first_row_index(q: usize) -> usize {
    q.div_ceil(2)
}

/// First-row relation linking `k_{0,q}` and `k_{0,q+1}` at `lambda_ppqq = 0`,
/// where it reduces to the ladder between `k~_s` and `k~_{s+1}`, `s` from
/// [`first_row_index`].
fn first_row_residual(f: &GeneratingFamily, q: usize, at: &EquilibriumPoint) -> Result<f64> {
    let at = EquilibriumPoint::new(at.lambda, at.lambda_ll, 0.0)?;
    let here = k_pq_monomial(0, q);
    let next = k_pq_monomial(0, q + 1);
    let (lhs, rhs) = if q.is_multiple_of(2) {
        let qf = q as f64;
        (
            9.0 * (qf + 1.0) / (qf + 3.0) * here.shifted(0, 2, 0).eval(f, &at, 0)?,
            next.shifted(1, 0, 0).eval(f, &at, 0)?,
        )
    } else {
        (
            here.shifted(1, 0, 1).eval(f, &at, 0)?,
            3.0 * next.shifted(0, 1, 0).eval(f, &at, 0)?,
        )
    };
    Ok(relative_to_larger(lhs - rhs, lhs, rhs))
}

/// Scaling identities for every `p + q` even up to the bounds, their tensor
/// precursors for `r <= r_max`, and the first-row relations that localize a
/// broken ladder at the smallest affected `s`.
pub fn check_scalar_identity_chain(
    f: &GeneratingFamily,
    p_max: usize,
    q_max: usize,
    r_max: usize,
    points: &[EquilibriumPoint],
    s_trunc: usize,
    tolerance: f64,
) -> VerificationReport {
    let mut records = Vec::new();
    for (idx, at) in points.iter().enumerate() {
        let coords = point_coords(at);
        for p in 0..=p_max {
            for q in (0..=q_max).filter(|q| (p + q) % 2 == 0) {
                records.push(Record::from_result(
                    format!("identity.eq[p={p},q={q}]"),
                    ANCHOR_EQ,
                    idx,
                    coords.clone(),
                    eq_residual(f, p, q, at, s_trunc),
                    tolerance,
                ));
                for r in 0..=r_max {
                    records.push(Record::from_result(
                        format!("identity.precursor[p={p},q={q},r={r}]"),
                        ANCHOR_PRECURSOR,
                        idx,
                        coords.clone(),
                        precursor_residual(f, CoefficientRequest::new(p, q, r), at, s_trunc),
                        tolerance,
                    ));
                }
            }
        }
        for q in 0..q_max {
            let anchor = if q % 2 == 0 {
                ANCHOR_ROW_EVEN
            } else {
                ANCHOR_ROW_ODD
            };
            let s = first_row_index(q);
            records.push(
                Record::from_result(
                    format!("identity.first_row[s={s},q={q}]"),
                    anchor,
                    idx,
                    coords.clone(),
                    first_row_residual(f, q, at),
                    tolerance,
                )
                .with_note(format!("tests d k~_{}/d lambda against k~_{s}", s + 1)),
            );
        }
    }
    VerificationReport::from_records(
        ReportMetadata {
            family: Some(f.kind().clone()),
            s_trunc,
            point_count: points.len(),
            notes: vec![READING_CHAIN.into()],
            ..ReportMetadata::default()
        },
        records,
    )
}

/// The exchange and scaling constraints on `k_00`.
pub fn check_constraints(
    f: &GeneratingFamily,
    points: &[EquilibriumPoint],
    s_trunc: usize,
    tolerance: f64,
) -> VerificationReport {
    let mut records = Vec::new();
    for (idx, at) in points.iter().enumerate() {
        let coords = point_coords(at);
        match constraint_residuals(f, at, s_trunc) {
            Ok(c) => {
                records.push(Record::measured(
                    "constraint.exchange",
                    ANCHOR_EXCHANGE,
                    idx,
                    coords.clone(),
                    c.exchange,
                    tolerance,
                ));
                records.push(Record::measured(
                    "constraint.scaling",
                    ANCHOR_SCALING,
                    idx,
                    coords,
                    c.scaling,
                    tolerance,
                ));
            }
            Err(e) => {
                for (id, anchor) in [
                    ("constraint.exchange", ANCHOR_EXCHANGE),
                    ("constraint.scaling", ANCHOR_SCALING),
                ] {
                    records.push(Record::errored(
                        id,
                        anchor,
                        idx,
                        coords.clone(),
                        tolerance,
                        &e,
                    ));
                }
            }
        }
    }
    VerificationReport::from_records(
        ReportMetadata {
            family: Some(f.kind().clone()),
            s_trunc,
            point_count: points.len(),
            notes: vec![
                "the exchange constraint compares both sides as order-S coefficient functions and needs k~_(S+1)".into(),
            ],
            ..ReportMetadata::default()
        },
        records,
    )
}

fn monomial_agreement(
    f: &GeneratingFamily,
    closed: Monomial,
    p: usize,
    q: usize,
    at: &EquilibriumPoint,
    s: usize,
) -> Result<f64> {
    let a = closed.eval(f, at, s)?;
    let b = k_pq(f, p, q, at, s)?;
    Ok(relative_to_larger(a - b, a, b))
}

/// Documented factors between the literal and empty-product `eta` readings.
pub const LITERAL_ETA_FACTORS: [(usize, f64); 2] = [(0, 3.0), (1, 35.0)];

/// Stepwise `k_pq` against the explicit formulas: the four-branch closed form
/// for `p, q <= p_max, q_max`, the first-row reduction to `k_00`, and the
/// first-row series with both `eta` readings at `lambda_ppqq = 0`.
pub fn check_closed_forms(
    f: &GeneratingFamily,
    p_max: usize,
    q_max: usize,
    points: &[EquilibriumPoint],
    s_trunc: usize,
    tolerance: f64,
) -> VerificationReport {
    let mut records = Vec::new();
    for (idx, at) in points.iter().enumerate() {
        let coords = point_coords(at);
        for p in 0..=p_max {
            for q in 0..=q_max {
                records.push(Record::from_result(
                    format!("closed.pq[p={p},q={q}]"),
                    "k_pq stepwise = k_pq closed form, four parity branches",
                    idx,
                    coords.clone(),
                    monomial_agreement(f, k_pq_closed_monomial(p, q), p, q, at, s_trunc),
                    tolerance,
                ));
            }
        }
        let at0 = EquilibriumPoint {
            lambda_ppqq: 0.0,
            ..*at
        };
        let coords0 = point_coords(&at0);
        for q in 0..=q_max {
            records.push(Record::from_result(
                format!("closed.first_row[q={q}]"),
                "k_0q = 3^m/(q+1 or q+2) d^q k_00 / d L^a d Q^b",
                idx,
                coords.clone(),
                monomial_agreement(f, k0q_from_k00_monomial(q), 0, q, at, s_trunc),
                tolerance,
            ));
            let series =
                k0q_closed(f, q, &at0, s_trunc, EtaConvention::EmptyProduct).and_then(|a| {
                    let b = k_pq(f, 0, q, &at0, s_trunc)?;
                    Ok(relative_to_larger(a - b, a, b))
                });
            records.push(Record::from_result(
                format!("closed.series[q={q}]"),
                "k_0q = C_q eta L^-e k~_(c_q), eta empty product when hi < lo",
                idx,
                coords0.clone(),
                series,
                tolerance,
            ));
        }
        for (q, expected) in LITERAL_ETA_FACTORS.into_iter().filter(|(q, _)| *q <= q_max) {
            let factor = k0q_closed(f, q, &at0, s_trunc, EtaConvention::Literal).and_then(|lit| {
                Ok(lit / k0q_closed(f, q, &at0, s_trunc, EtaConvention::EmptyProduct)?)
            });
            let rec = match factor {
                Ok(x) => Record::measured(
                    format!("closed.literal_eta[q={q}]"),
                    "literal eta(lo, hi) with hi < lo read as lo * hi",
                    idx,
                    coords0.clone(),
                    relative_to_larger(x - expected, expected, 0.0),
                    tolerance,
                )
                .with_note(format!("measured factor {x:.12}, documented {expected}"))
                .expected_deviation(),
                Err(e) => Record::errored(
                    format!("closed.literal_eta[q={q}]"),
                    "literal eta(lo, hi) with hi < lo read as lo * hi",
                    idx,
                    coords0.clone(),
                    tolerance,
                    &e,
                ),
            };
            records.push(rec);
        }
    }
    VerificationReport::from_records(
        ReportMetadata {
            family: Some(f.kind().clone()),
            s_trunc,
            point_count: points.len(),
            notes: vec![
                "eta(lo, hi) with hi < lo is the empty product 1; the literal product reading is reported as an expected deviation".into(),
            ],
            ..ReportMetadata::default()
        },
        records,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_family, FamilyKind, FamilyOptions};
    use crate::verify::{Status, TestPointSet};

    fn points(n: usize) -> Vec<EquilibriumPoint> {
        TestPointSet {
            count: n,
            ..TestPointSet::default()
        }
        .scalar_points()
    }

    #[test]
    fn chain_holds_for_exponential_family() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let rep = check_scalar_identity_chain(&f, 6, 6, 2, &points(4), 4, 1e-9);
        assert!(rep.all_passed(), "{}", rep.to_table());
    }

    #[test]
    fn broken_ladder_is_localized() {
        let kind = FamilyKind::Perturbed {
            base: Box::new(FamilyKind::Exponential { amplitude: 1.0 }),
            s: 1,
            delta: 50.0,
        };
        let f = make_family(&kind, &FamilyOptions::default()).unwrap();
        let rep = check_scalar_identity_chain(&f, 2, 4, 0, &points(2), 3, 1e-9);
        let failing = rep.failing_conditions();
        assert!(
            failing
                .iter()
                .all(|c| c.starts_with("identity.first_row[s=1")),
            "{failing:?}"
        );
        assert!(!failing.is_empty());
        // homogeneity in L cannot see the fault
        assert!(rep.records_for("identity.eq").all(|r| r.pass));
    }

    #[test]
    fn constraints_hold() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let rep = check_constraints(&f, &points(20), 4, 1e-9);
        assert!(rep.all_passed(), "{}", rep.to_table());
        assert_eq!(rep.records.len(), 40);
    }

    #[test]
    fn closed_forms_agree_and_literal_eta_is_flagged() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let rep = check_closed_forms(&f, 5, 5, &points(3), 4, 1e-9);
        assert!(rep.all_passed(), "{}", rep.to_table());
        let lit: Vec<_> = rep.records_for("closed.literal_eta").collect();
        assert_eq!(lit.len(), 6);
        assert!(lit.iter().all(|r| r.status == Status::ExpectedDeviation));
    }
}

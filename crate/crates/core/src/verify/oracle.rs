//! Checks against independent evaluations: the ladder by finite differences,
//! the kinetic quadrature, the reduced subsystem, and tensor structure.

use std::collections::BTreeMap;

use super::points::{point_coords, Coords};
use super::report::{relative_to_larger, Record};
use crate::coeffs::subsystem::subsystem_ratio;
use crate::coeffs::{
    k0q_closed, k_pq, k_s_value, ladder_factor, reduce_to_13, CoefficientKind, CoefficientRequest,
    CoefficientSource, DerivativeOrders, EquilibriumPoint, EtaConvention, GeneratingFamily,
};
use crate::error::{Error, Result};
use crate::fd::derivative;
use crate::kinetic::{kinetic_kpq, kinetic_series_coefficient, KineticKernel, QuadratureSpec};
use crate::symtensor::{deviator, sym_delta, SymMatrix};

const ANCHOR_LADDER: &str = "d k~_(s+1)/d lambda = (9/4)(3+4s)(5+4s) k~_s";

fn lambda_coords(lambda: f64) -> Coords {
    BTreeMap::from([("lambda".to_string(), lambda)])
}

fn ladder_fd_residual(f: &GeneratingFamily, s: usize, lambda: f64) -> Result<f64> {
    let d = derivative(|x| f.ktilde(s + 1, x), lambda)?;
    let factor = ladder_factor(s);
    let rhs = *factor.numer() as f64 / *factor.denom() as f64 * f.ktilde(s, lambda)?;
    Ok(relative_to_larger(d - rhs, d, rhs))
}

/// Ladder residual by fourth-order differences of `k~_(s+1)`, `s <= s_max`,
/// at each grid point. `label` distinguishes families in one report.
pub fn check_ladder(
    f: &GeneratingFamily,
    label: &str,
    grid: &[f64],
    s_max: usize,
    tolerance: f64,
) -> Vec<Record> {
    let mut out = Vec::new();
    for (idx, &lambda) in grid.iter().enumerate() {
        for s in 0..=s_max {
            out.push(Record::from_result(
                format!("ladder.{label}[s={s}]"),
                ANCHOR_LADDER,
                idx,
                lambda_coords(lambda),
                ladder_fd_residual(f, s, lambda),
                tolerance,
            ));
        }
    }
    out
}

/// Coefficients against the kinetic integrals: `k_pq` for `p + q <= pq_max`
/// and the series coefficients `k_s` for `s <= s_max`. Points must have
/// `lambda_ppqq = 0`.
pub fn check_kinetic_equivalence(
    f: &GeneratingFamily,
    kernel: &dyn KineticKernel,
    points: &[EquilibriumPoint],
    pq_max: usize,
    s_max: usize,
    spec: &QuadratureSpec,
    tolerance: f64,
) -> Vec<Record> {
    let mut out = Vec::new();
    for (idx, at) in points.iter().enumerate() {
        let coords = point_coords(at);
        if at.lambda_ppqq != 0.0 {
            out.push(Record::errored(
                "kinetic.kpq",
                "k_pq = kinetic integral",
                idx,
                coords,
                tolerance,
                &Error::Param("kinetic equivalence is checked at lambda_ppqq = 0".into()),
            ));
            continue;
        }
        for p in 0..=pq_max {
            for q in 0..=pq_max - p {
                let res = k_pq(f, p, q, at, 0).and_then(|a| {
                    let b = kinetic_kpq(kernel, p, q, at, spec)?;
                    Ok(relative_to_larger(a - b, a, b))
                });
                out.push(Record::from_result(
                    format!("kinetic.kpq[p={p},q={q}]"),
                    "k_pq = 4 pi/(n+1 or n+2) int F^(p+q) c^(p+3q+2 or +3) dc",
                    idx,
                    coords.clone(),
                    res,
                    tolerance,
                ));
            }
        }
        for s in 0..=s_max {
            let res = k_s_value(f, s, at).and_then(|a| {
                let b = kinetic_series_coefficient(kernel, s, at, spec)?;
                Ok(relative_to_larger(a - b, a, b))
            });
            out.push(Record::from_result(
                format!("kinetic.series[s={s}]"),
                "k_s = 4 pi int F^(s)(lambda + L c^2/3) c^(4s+2) dc",
                idx,
                coords.clone(),
                res,
                tolerance,
            ));
        }
    }
    out
}

/// `I_q(lambda)` from the reduction.
fn subsystem_value(f: &GeneratingFamily, q: usize, lambda: f64) -> Result<f64> {
    let table = reduce_to_13(f, q, lambda)?;
    Ok(table.entries.last().map_or(0.0, |e| e.value))
}

/// Reduced subsystem: `I_q` against the explicit first row at unit trace,
/// vanishing integration constants, and `dI_(q+2)/d lambda = R_q I_q` by
/// finite differences.
pub fn check_subsystem(
    f: &GeneratingFamily,
    lambdas: &[f64],
    q_max: usize,
    value_tolerance: f64,
    derivative_tolerance: f64,
) -> Vec<Record> {
    let mut out = Vec::new();
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let coords = lambda_coords(lambda);
        let table = match reduce_to_13(f, q_max, lambda) {
            Ok(t) => t,
            Err(e) => {
                out.push(Record::errored(
                    "subsystem.value",
                    "I_q = k_0q at L = 1, Q = 0",
                    idx,
                    coords,
                    value_tolerance,
                    &e,
                ));
                continue;
            }
        };
        for e in &table.entries {
            let q = e.q;
            let res = EquilibriumPoint::new(lambda, 1.0, 0.0).and_then(|at| {
                let b = k0q_closed(f, q, &at, 0, EtaConvention::EmptyProduct)?;
                let c = k_pq(f, 0, q, &at, 0)?;
                Ok(
                    relative_to_larger(e.value - b, e.value, b).max(relative_to_larger(
                        e.value - c,
                        e.value,
                        c,
                    )),
                )
            });
            out.push(Record::from_result(
                format!("subsystem.value[q={q}]"),
                "I_q = k_0q at L = 1, Q = 0",
                idx,
                coords.clone(),
                res,
                value_tolerance,
            ));
            out.push(Record::measured(
                format!("subsystem.constant[q={q}]"),
                "c_q = 0",
                idx,
                coords.clone(),
                e.c_q.abs(),
                0.0,
            ));
        }
        for q in (0..q_max.saturating_sub(1)).step_by(2) {
            let res = (|| {
                let lhs = derivative(|x| subsystem_value(f, q + 2, x), lambda)?;
                let rhs = subsystem_ratio(q)? * subsystem_value(f, q, lambda)?;
                Ok(relative_to_larger(lhs - rhs, lhs, rhs))
            })();
            out.push(Record::from_result(
                format!("subsystem.derivative[q={q}]"),
                "d I_(q+2)/d lambda = R_q I_q",
                idx,
                coords.clone(),
                res,
                derivative_tolerance,
            ));
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    heap(n, &mut current, &mut out);
    out
}

/// Largest deviation of `sym_delta(rank)` from the average of delta products
/// over all slot permutations.
fn sym_delta_brute_force_residual(rank: usize) -> Result<f64> {
    let delta = sym_delta(rank)?;
    let perms = permutations(rank);
    let mut idx = vec![0usize; rank];
    let total = 3usize.pow(rank as u32);
    let mut worst = 0.0f64;
    for flat in 0..total {
        let mut x = flat;
        for slot in idx.iter_mut() {
            *slot = x % 3;
            x /= 3;
        }
        let hits = perms
            .iter()
            .filter(|p| p.chunks(2).all(|pair| idx[pair[0]] == idx[pair[1]]))
            .count();
        let brute = hits as f64 / perms.len() as f64;
        worst = worst.max((brute - delta.tensor().get(&idx)).abs());
    }
    Ok(worst)
}

/// Exact parity zeros, the symmetrized delta against brute force for even
/// ranks up to `delta_rank_max`, and deviator traces.
pub fn check_structure<C: CoefficientSource + ?Sized>(
    src: &C,
    at: &EquilibriumPoint,
    index_max: usize,
    delta_rank_max: usize,
    matrices: &[SymMatrix],
    s_trunc: usize,
) -> Vec<Record> {
    let mut out = Vec::new();
    let coords = point_coords(at);
    let mut worst_parity = Ok(0.0f64);
    'outer: for p in 0..=index_max {
        for q in 0..=index_max {
            for r in 0..=index_max {
                let kind = if (p + q) % 2 == 1 {
                    CoefficientKind::H
                } else {
                    CoefficientKind::Phi
                };
                match src.coefficient(
                    kind,
                    CoefficientRequest::new(p, q, r),
                    at,
                    s_trunc,
                    DerivativeOrders::default(),
                ) {
                    Ok(v) => {
                        worst_parity = worst_parity.map(|w| w.max(v.abs()));
                    }
                    Err(e) => {
                        worst_parity = Err(e);
                        break 'outer;
                    }
                }
            }
        }
    }
    out.push(Record::from_result(
        "structure.parity",
        "h_pqr = 0 for p+q odd, phi_pqr = 0 for p+q even",
        0,
        coords,
        worst_parity,
        0.0,
    ));
    for rank in (0..=delta_rank_max).step_by(2) {
        out.push(Record::from_result(
            format!("structure.sym_delta[rank={rank}]"),
            "delta^(i1 i2 ... i_(n-1) i_n) = permutation average of delta products",
            0,
            Coords::new(),
            sym_delta_brute_force_residual(rank),
            1e-15,
        ));
    }
    out.push(Record::measured(
        "structure.sym_delta_odd",
        "odd ranks are rejected",
        0,
        Coords::new(),
        if matches!(sym_delta(3), Err(Error::OddRank(3))) {
            0.0
        } else {
            1.0
        },
        0.0,
    ));
    for (idx, m) in matrices.iter().enumerate() {
        out.push(Record::measured(
            "structure.deviator_trace",
            "tr A_<ij> = 0",
            idx,
            Coords::new(),
            deviator(m).trace().abs(),
            1e-15,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_family, FamilyKind, FamilyOptions};
    use crate::kinetic::{make_kinetic_family, ExpKernel};
    use std::sync::Arc;

    fn all_pass(r: &[Record]) -> bool {
        r.iter().all(|r| r.pass)
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        let mut p = permutations(3);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn ladder_for_closed_form_and_quadrature_families() {
        let grid = FamilyOptions::default().gate_grid;
        let f = GeneratingFamily::exponential(1.0).unwrap();
        assert!(all_pass(&check_ladder(&f, "closed_form", &grid, 4, 1e-6)));
        let kf = make_kinetic_family(
            Arc::new(ExpKernel { amplitude: 1.0 }),
            &FamilyOptions::default(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let recs = check_ladder(&kf, "quadrature", &grid, 4, 1e-6);
        assert!(all_pass(&recs), "{recs:?}");
    }

    #[test]
    fn ladder_fault_is_caught() {
        let kind = FamilyKind::Perturbed {
            base: Box::new(FamilyKind::Exponential { amplitude: 1.0 }),
            s: 2,
            delta: 1.0,
        };
        let f = make_family(&kind, &FamilyOptions::default()).unwrap();
        let recs = check_ladder(&f, "closed_form", &[0.0], 4, 1e-6);
        let failing: Vec<_> = recs
            .iter()
            .filter(|r| !r.pass)
            .map(|r| &r.condition)
            .collect();
        assert_eq!(failing, vec!["ladder.closed_form[s=2]"]);
    }

    #[test]
    fn kinetic_and_subsystem() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let at = EquilibriumPoint::new(0.3, 1.7, 0.0).unwrap();
        let recs = check_kinetic_equivalence(
            &f,
            &ExpKernel { amplitude: 1.0 },
            &[at],
            6,
            4,
            &QuadratureSpec::default(),
            1e-7,
        );
        assert_eq!(recs.len(), 28 + 5);
        assert!(all_pass(&recs), "{recs:?}");
        let recs = check_subsystem(&f, &[-0.5, 0.5], 6, 1e-9, 1e-6);
        assert!(all_pass(&recs), "{recs:?}");
        assert_eq!(
            recs.iter()
                .filter(|r| r.condition.starts_with("subsystem.derivative"))
                .count(),
            6
        );
    }

    #[test]
    fn structure_checks() {
        let f = GeneratingFamily::exponential(1.0).unwrap();
        let at = EquilibriumPoint::new(0.1, 1.2, 0.02).unwrap();
        let m = SymMatrix::from_components([0.3, -1.2, 2.5, 0.7, 0.1, -0.4]);
        let recs = check_structure(&f, &at, 4, 6, &[m], 3);
        assert!(all_pass(&recs), "{recs:?}");
    }
}

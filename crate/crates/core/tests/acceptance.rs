//! One line per acceptance criterion; exits nonzero when any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use closure14::coeffs::{
    make_family, reduce_to_13, EquilibriumPoint, FamilyKind, FamilyOptions, GeneratingFamily,
};
use closure14::kinetic::{make_kinetic_family, ExpKernel, QuadratureSpec};
use closure14::verify::{
    check_closed_forms, check_compatibility, check_constraints, check_kinetic_equivalence,
    check_ladder, check_scalar_identity_chain, check_structure, check_subsystem,
    check_velocity_independence, run_all, Record, Status, TestPointSet, VelocityStudy,
    VerificationReport, VerifyConfig,
};

struct Line {
    passed: bool,
    detail: String,
}

fn worst(records: &[Record]) -> f64 {
    records
        .iter()
        .filter_map(|r| r.residual)
        .fold(0.0f64, f64::max)
}

fn no_failures(records: &[Record]) -> bool {
    !records.is_empty()
        && records
            .iter()
            .all(|r| matches!(r.status, Status::Pass | Status::ExpectedDeviation))
}

fn exp_family() -> GeneratingFamily {
    GeneratingFamily::exponential(1.0).unwrap()
}

fn polyexp_family() -> GeneratingFamily {
    make_family(
        &FamilyKind::PolyExp {
            coeffs: vec![1.0, 0.5],
        },
        &FamilyOptions::default(),
    )
    .unwrap()
}

fn scalar_points(count: usize, zero_q: bool) -> Vec<EquilibriumPoint> {
    let mut set = TestPointSet {
        count,
        ..TestPointSet::default()
    };
    if zero_q {
        set.lambda_ppqq_range = (0.0, 0.0);
    }
    set.scalar_points()
}

fn kinetic_oracle() -> Line {
    let start = Instant::now();
    let records = check_kinetic_equivalence(
        &exp_family(),
        &ExpKernel { amplitude: 1.0 },
        &scalar_points(5, true),
        6,
        4,
        &QuadratureSpec::default(),
        1e-7,
    );
    let secs = start.elapsed().as_secs_f64();
    let kpq = records
        .iter()
        .filter(|r| r.condition.starts_with("kinetic.kpq"))
        .count();
    let series = records
        .iter()
        .filter(|r| r.condition.starts_with("kinetic.series"))
        .count();
    Line {
        passed: no_failures(&records) && kpq == 5 * 28 && series == 5 * 5 && secs <= 10.0,
        detail: format!(
            "{kpq} k_pq and {series} series comparisons, max relative deviation {:.2e} (tol 1e-7), {secs:.2} s (limit 10 s)",
            worst(&records)
        ),
    }
}

fn ladder() -> Line {
    let options = FamilyOptions::default();
    let quad = make_kinetic_family(
        Arc::new(ExpKernel { amplitude: 1.0 }),
        &options,
        &QuadratureSpec::default(),
    )
    .unwrap();
    let mut records = check_ladder(&exp_family(), "closed_form", &options.gate_grid, 4, 1e-6);
    records.extend(check_ladder(
        &quad,
        "quadrature",
        &options.gate_grid,
        4,
        1e-6,
    ));
    Line {
        passed: no_failures(&records) && records.len() == 2 * 9 * 5,
        detail: format!(
            "s = 0..4 on {} grid points, closed-form and quadrature families, max residual {:.2e} (tol 1e-6)",
            options.gate_grid.len(),
            worst(&records)
        ),
    }
}

fn compatibility() -> Line {
    let points = TestPointSet::default();
    let report = check_compatibility(&exp_family(), &points, 1e-5);
    let relations = [
        "compat.vector",
        "compat.matrix",
        "compat.trace3",
        "compat.sym_kij",
        "compat.scalar4",
        "compat.sym_kill",
    ];
    let complete = relations.iter().all(|id| {
        report
            .records_for(id)
            .filter(|r| r.status == Status::Pass)
            .count()
            == points.count
    });
    Line {
        passed: report.all_passed() && complete,
        detail: format!(
            "six relations at {} hatted states, epsilon {}, N = {}, S = {}, max residual {:.2e} (tol 1e-5)",
            points.count,
            points.epsilon,
            points.n_trunc,
            points.s_trunc,
            worst(&report.records)
        ),
    }
}

fn velocity() -> Line {
    let labs = TestPointSet {
        count: 3,
        ..TestPointSet::default()
    }
    .lab_states();
    let mut passed = true;
    let mut parts = Vec::new();
    for n in [2, 4] {
        let rep =
            check_velocity_independence(&exp_family(), &labs, &VelocityStudy::default(), n, 4);
        let order: Vec<&Record> = rep.records_for("velocity.h.order").collect();
        let zero: Vec<&Record> = rep.records_for("velocity.h.zero").collect();
        let ok = order.len() == labs.len()
            && zero.len() == labs.len()
            && order.iter().chain(&zero).all(|r| r.status == Status::Pass);
        passed &= ok;
        // residual of an order record is the shortfall (N - 0.5) - order
        let min_order = order
            .iter()
            .filter_map(|r| r.residual)
            .map(|s| n as f64 - 0.5 - s)
            .fold(f64::INFINITY, f64::min);
        parts.push(format!(
            "N = {n}: min order {min_order:.2} (need {}), v = 0 residual {:.1e}",
            n as f64 - 0.5,
            worst(&zero.into_iter().cloned().collect::<Vec<_>>())
        ));
    }
    Line {
        passed,
        detail: parts.join("; "),
    }
}

fn constraints() -> Line {
    let points = scalar_points(20, false);
    let mut records = Vec::new();
    for f in [exp_family(), polyexp_family()] {
        records.extend(check_constraints(&f, &points, 4, 1e-9).records);
        let chain = check_scalar_identity_chain(&f, 6, 6, 2, &points, 4, 1e-9);
        records.extend(
            chain
                .records
                .into_iter()
                .filter(|r| r.condition.starts_with("identity.eq")),
        );
    }
    let eq = records
        .iter()
        .filter(|r| r.condition.starts_with("identity.eq"))
        .count();
    Line {
        passed: no_failures(&records) && eq > 0,
        detail: format!(
            "(C), (f1) and {eq} (eq) records at 20 points for exponential and poly-exp families, max residual {:.2e} (tol 1e-9)",
            worst(&records)
        ),
    }
}

fn closed_forms() -> Line {
    let rep = check_closed_forms(&exp_family(), 5, 5, &scalar_points(20, false), 4, 1e-9);
    let factor = |q: usize| -> Option<String> {
        let id = format!("closed.literal_eta[q={q}]");
        let recs: Vec<&Record> = rep.records_for(&id).collect();
        let flagged =
            !recs.is_empty() && recs.iter().all(|r| r.status == Status::ExpectedDeviation);
        flagged.then(|| recs[0].note.clone().unwrap_or_default())
    };
    let (f0, f1) = (factor(0), factor(1));
    let others: Vec<Record> = rep
        .records
        .iter()
        .filter(|r| !r.condition.starts_with("closed.literal_eta"))
        .cloned()
        .collect();
    let flagged = matches!((&f0, &f1), (Some(a), Some(b)) if a.contains("factor 3.0") && b.contains("factor 35.0"));
    Line {
        passed: rep.all_passed() && flagged,
        detail: format!(
            "p, q <= 5 max residual {:.2e} (tol 1e-9); literal eta q=0: {}; q=1: {}",
            worst(&others),
            f0.unwrap_or_else(|| "not flagged".into()),
            f1.unwrap_or_else(|| "not flagged".into())
        ),
    }
}

fn structure() -> Line {
    let points = TestPointSet::default();
    let matrices: Vec<_> = points.hatted_states().iter().map(|s| s.lambda_ij).collect();
    let at = scalar_points(1, false)[0];
    let records = check_structure(&exp_family(), &at, 4, 6, &matrices, 4);
    let parity_exact = records
        .iter()
        .filter(|r| r.condition == "structure.parity")
        .all(|r| r.residual == Some(0.0));
    let sym = records
        .iter()
        .filter(|r| r.condition.starts_with("structure.sym_delta["))
        .count();
    let dev: Vec<Record> = records
        .iter()
        .filter(|r| r.condition == "structure.deviator_trace")
        .cloned()
        .collect();
    Line {
        passed: no_failures(&records) && parity_exact && sym == 4,
        detail: format!(
            "parity zeros exact: {parity_exact}; sym_delta brute force for ranks 0..6 even; deviator trace max {:.1e} (tol 1e-15)",
            worst(&dev)
        ),
    }
}

fn subsystem() -> Line {
    let f = exp_family();
    let lambdas: Vec<f64> = scalar_points(20, false).iter().map(|p| p.lambda).collect();
    let records = check_subsystem(&f, &lambdas, 6, 1e-9, 1e-6);
    let constants_zero = lambdas.iter().all(|&l| {
        reduce_to_13(&f, 6, l)
            .map(|t| t.entries.iter().all(|e| e.c_q == 0.0))
            .unwrap_or(false)
    });
    let value: Vec<Record> = records
        .iter()
        .filter(|r| r.condition.starts_with("subsystem.value"))
        .cloned()
        .collect();
    let deriv: Vec<Record> = records
        .iter()
        .filter(|r| r.condition.starts_with("subsystem.derivative"))
        .cloned()
        .collect();
    Line {
        passed: no_failures(&records) && constants_zero,
        detail: format!(
            "I_q for q <= 6 even: value residual {:.2e} (tol 1e-9), derivative residual {:.2e} (tol 1e-6), c_q = 0: {constants_zero}",
            worst(&value),
            worst(&deriv)
        ),
    }
}

fn determinism() -> Line {
    let f = exp_family();
    let config = VerifyConfig::default();
    let start = Instant::now();
    let a: VerificationReport = run_all(&f, &config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let b = run_all(&f, &config).unwrap();
    let identical = a.to_json() == b.to_json();
    Line {
        passed: identical && a.all_passed() && secs < 60.0,
        detail: format!(
            "{} records, {} failed, byte-identical rerun: {identical}, {secs:.2} s (limit 60 s)",
            a.summary.total, a.summary.failed
        ),
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Line);
    let criteria: [Criterion; 9] = [
        ("kinetic oracle equivalence", kinetic_oracle),
        ("ladder", ladder),
        ("compatibility", compatibility),
        ("Galilean velocity independence", velocity),
        ("constraints and identity chain", constraints),
        ("closed-form cross-checks", closed_forms),
        ("structure", structure),
        ("subsystem", subsystem),
        ("determinism and runtime", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let line = run();
        let tag = if line.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!line.passed);
        println!("acceptance {} [{tag}] {name}: {}", i + 1, line.detail);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::compat::{check_compatibility, check_compatibility_at, Differencing};
use super::identities::{check_closed_forms, check_constraints, check_scalar_identity_chain};
use super::oracle::{check_kinetic_equivalence, check_ladder, check_structure, check_subsystem};
use super::points::{Coords, TestPointSet};
use super::report::{Record, ReportMetadata, VerificationReport};
use super::velocity::{check_velocity_independence, VelocityStudy};
use crate::coeffs::{FamilyKind, FamilyOptions, GeneratingFamily};
use crate::error::{Error, Result};
use crate::kinetic::{
    make_kinetic_family, ExpKernel, KineticKernel, PolyExpKernel, QuadratureSpec,
};
use crate::symtensor::HARD_MAX_RANK;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub compat: f64,
    pub compat_equilibrium: f64,
    pub identity: f64,
    pub constraint: f64,
    pub closed_form: f64,
    pub ladder: f64,
    pub kinetic: f64,
    pub subsystem_value: f64,
    pub subsystem_derivative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            compat: 1e-5,
            compat_equilibrium: 1e-9,
            identity: 1e-9,
            constraint: 1e-9,
            closed_form: 1e-9,
            ladder: 1e-6,
            kinetic: 1e-7,
            subsystem_value: 1e-9,
            subsystem_derivative: 1e-6,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("compat", self.compat),
            ("compat_equilibrium", self.compat_equilibrium),
            ("identity", self.identity),
            ("constraint", self.constraint),
            ("closed_form", self.closed_form),
            ("ladder", self.ladder),
            ("kinetic", self.kinetic),
            ("subsystem_value", self.subsystem_value),
            ("subsystem_derivative", self.subsystem_derivative),
        ];
        for (name, t) in all {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Param(format!(
                    "tolerances.{name} must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Everything [`run_all`] needs besides the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Hatted states for the compatibility relations, and the truncations.
    pub points: TestPointSet,
    /// Scalar points for identities, constraints and closed forms.
    pub scalar_count: usize,
    pub kinetic_count: usize,
    pub velocity_count: usize,
    pub velocity: VelocityStudy,
    /// Difference scheme for the equilibrium compatibility set.
    pub equilibrium_differencing: Differencing,
    /// Largest `p` and `q` in the identity chain.
    pub chain_max: usize,
    pub closed_form_max: usize,
    pub tolerances: Tolerances,
    pub quadrature: QuadratureSpec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            points: TestPointSet::default(),
            scalar_count: 20,
            kinetic_count: 5,
            velocity_count: 3,
            velocity: VelocityStudy::default(),
            equilibrium_differencing: Differencing {
                step_scale: 0.25,
                extrapolate: true,
            },
            chain_max: 6,
            closed_form_max: 5,
            tolerances: Tolerances::default(),
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.points.validate()?;
        self.velocity.validate()?;
        self.tolerances.validate()?;
        self.quadrature.validate()?;
        // compatibility evaluates phi^ at rank N + 3
        if self.points.n_trunc + 3 > HARD_MAX_RANK {
            return Err(Error::RankTooLarge {
                rank: self.points.n_trunc + 3,
                max: HARD_MAX_RANK,
            });
        }
        let scale = self.equilibrium_differencing.step_scale;
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Param(format!(
                "equilibrium_differencing.step_scale must lie in (0, 1], got {scale}"
            )));
        }
        for (name, n) in [
            ("scalar_count", self.scalar_count),
            ("kinetic_count", self.kinetic_count),
            ("velocity_count", self.velocity_count),
        ] {
            if n == 0 {
                return Err(Error::Param(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Kinetic kernel a family kind was built from, when there is one.
pub fn kernel_for(kind: &FamilyKind) -> Option<Arc<dyn KineticKernel>> {
    match kind {
        FamilyKind::Exponential { amplitude } => Some(Arc::new(ExpKernel {
            amplitude: *amplitude,
        })),
        FamilyKind::PolyExp { coeffs } => Some(Arc::new(PolyExpKernel {
            coeffs: coeffs.clone(),
        })),
        FamilyKind::Perturbed { base, .. } => kernel_for(base),
        _ => None,
    }
}

/// [`run_all_with_kernel`] with the kernel implied by the family kind.
pub fn run_all(f: &GeneratingFamily, config: &VerifyConfig) -> Result<VerificationReport> {
    run_all_with_kernel(f, kernel_for(f.kind()), config)
}

/// Every check in the harness. Kinetic checks are skipped when no kernel is
/// available.
pub fn run_all_with_kernel(
    f: &GeneratingFamily,
    kernel: Option<Arc<dyn KineticKernel>>,
    config: &VerifyConfig,
) -> Result<VerificationReport> {
    config.validate()?;
    let pts = &config.points;
    let (n, s) = (pts.n_trunc, pts.s_trunc);
    let tol = &config.tolerances;
    let mut report = VerificationReport::new(ReportMetadata {
        family: Some(f.kind().clone()),
        n_trunc: n,
        s_trunc: s,
        seed: pts.seed,
        point_count: pts.count,
        notes: Vec::new(),
    });

    report.merge(check_compatibility(f, pts, tol.compat));
    let mut eq = VerificationReport {
        records: check_compatibility_at(
            f,
            &pts.equilibrium_states(),
            n,
            s,
            config.equilibrium_differencing,
            tol.compat_equilibrium,
            "equilibrium.",
        ),
        ..VerificationReport::default()
    };
    eq.metadata.notes.push(format!(
        "equilibrium.compat differences with {:?}; the h^4 error along lambda^_ill grows as the trace shrinks and reaches 1e-6 at the default step",
        config.equilibrium_differencing
    ));
    report.merge(eq);

    let labs = TestPointSet {
        count: config.velocity_count,
        ..pts.clone()
    }
    .lab_states();
    report.merge(check_velocity_independence(
        f,
        &labs,
        &config.velocity,
        n,
        s,
    ));

    let scalars = TestPointSet {
        count: config.scalar_count,
        ..pts.clone()
    }
    .scalar_points();
    let m = config.chain_max;
    report.merge(check_scalar_identity_chain(
        f,
        m,
        m,
        2,
        &scalars,
        s,
        tol.identity,
    ));
    report.merge(check_constraints(f, &scalars, s, tol.constraint));
    let c = config.closed_form_max;
    report.merge(check_closed_forms(f, c, c, &scalars, s, tol.closed_form));

    let options = FamilyOptions::default();
    let mut oracle = check_ladder(f, "closed_form", &options.gate_grid, 4, tol.ladder);
    match &kernel {
        Some(k) => {
            match make_kinetic_family(k.clone(), &options, &config.quadrature) {
                Ok(kf) => oracle.extend(check_ladder(
                    &kf,
                    "quadrature",
                    &options.gate_grid,
                    4,
                    tol.ladder,
                )),
                Err(e) => oracle.push(Record::errored(
                    "ladder.quadrature",
                    "quadrature-built family passes the ladder gate",
                    0,
                    Coords::new(),
                    tol.ladder,
                    &e,
                )),
            }
            let kpts = TestPointSet {
                count: config.kinetic_count,
                lambda_ppqq_range: (0.0, 0.0),
                ..pts.clone()
            }
            .scalar_points();
            oracle.extend(check_kinetic_equivalence(
                f,
                k.as_ref(),
                &kpts,
                6,
                4,
                &config.quadrature,
                tol.kinetic,
            ));
        }
        None => {
            for id in ["ladder.quadrature", "kinetic.kpq"] {
                oracle.push(Record::skipped(
                    id,
                    "kinetic oracle",
                    0,
                    Coords::new(),
                    "family has no kinetic kernel",
                ));
            }
        }
    }
    let lambdas: Vec<f64> = scalars.iter().map(|p| p.lambda).collect();
    oracle.extend(check_subsystem(
        f,
        &lambdas,
        6,
        tol.subsystem_value,
        tol.subsystem_derivative,
    ));
    let matrices: Vec<_> = pts.hatted_states().iter().map(|st| st.lambda_ij).collect();
    oracle.extend(check_structure(f, &scalars[0], 4, 6, &matrices, s));
    report.merge(VerificationReport {
        records: oracle,
        ..VerificationReport::default()
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::make_family;

    #[test]
    fn config_round_trips_and_fills_defaults() {
        let c: VerifyConfig = serde_json::from_str(r#"{"points": {"seed": 5, "count": 2, "lambda_range": [-1, 1], "lambda_ll_range": [0.5, 4], "epsilon": 0.1, "lambda_ppqq_range": [0, 0.05], "n_trunc": 4, "s_trunc": 3}}"#).unwrap();
        assert_eq!(c.scalar_count, 20);
        assert_eq!(c.points.seed, 5);
        let back: VerifyConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = VerifyConfig::default();
        c.tolerances.kinetic = 0.0;
        let f = GeneratingFamily::exponential(1.0).unwrap();
        assert!(matches!(run_all(&f, &c), Err(Error::Param(_))));
    }

    #[test]
    fn non_kinetic_family_skips_kinetic_checks() {
        let kind = FamilyKind::LadderConstants {
            base: Box::new(FamilyKind::Exponential { amplitude: 1.0 }),
            constants: vec![0.5],
        };
        assert!(kernel_for(&kind).is_none());
        let f = make_family(&kind, &FamilyOptions::default()).unwrap();
        let config = VerifyConfig {
            points: TestPointSet {
                count: 1,
                n_trunc: 2,
                s_trunc: 2,
                ..TestPointSet::default()
            },
            scalar_count: 2,
            kinetic_count: 1,
            velocity_count: 1,
            chain_max: 2,
            closed_form_max: 2,
            ..VerifyConfig::default()
        };
        let rep = run_all(&f, &config).unwrap();
        for id in ["ladder.quadrature", "kinetic.kpq"] {
            let r: Vec<_> = rep.records_for(id).collect();
            assert_eq!(r.len(), 1);
            assert_eq!(r[0].status, super::super::Status::Skipped);
        }
    }
}

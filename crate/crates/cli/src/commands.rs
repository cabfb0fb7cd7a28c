use serde::Serialize;

use closure14::coeffs::{k_pq, reduce_to_13, FamilyKind, GeneratingFamily, SubsystemTable};
use closure14::potentials::{
    eval_h_hat, eval_phi_hat, hat_multipliers, lab_moments_from_rest, lab_potentials,
    moments_from_potentials, BoostVelocity, Frame, MomentSet, MultiplierState, PotentialPair,
};
use closure14::symtensor::Vec3;
use closure14::verify::{
    check_kinetic_equivalence, run_all_with_kernel, Record, Status, TestPointSet,
    VerificationReport,
};

use crate::config::{Format, RunConfig};
use crate::fail::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Table of k_pq at the configured point.
    Coeffs,
    /// Potentials and moments at the configured hatted state.
    Eval,
    /// Lab potentials and moments for a boosted lab state.
    Boost,
    /// Full verification suite; exit 1 when any check fails.
    Verify,
    /// Closed-form coefficients against kinetic quadrature.
    Kinetic,
    /// Reduction to the 13-moment subsystem.
    Subsystem,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Coeffs => "coeffs",
            Self::Eval => "eval",
            Self::Boost => "boost",
            Self::Verify => "verify",
            Self::Kinetic => "kinetic",
            Self::Subsystem => "subsystem",
        }
    }
}

/// Rendered output plus the conditions that failed, if any.
pub struct Outcome {
    pub body: String,
    pub failing: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'static str,
    family: &'a FamilyKind,
    config: &'a RunConfig,
    result: T,
}

struct Context<'a> {
    command: Command,
    config: &'a RunConfig,
    family: GeneratingFamily,
}

impl Context<'_> {
    fn json<T: Serialize>(&self, result: T) -> Result<String, Failure> {
        let env = Envelope {
            command: self.command.name(),
            family: self.family.kind(),
            config: self.config,
            result,
        };
        serde_json::to_string_pretty(&env)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Failure::Io(format!("serializing output: {e}")))
    }

    /// Trailing `#` lines so CSV tables carry the same provenance as JSON.
    fn csv_footer(&self) -> Result<String, Failure> {
        let kind = serde_json::to_string(self.family.kind())
            .map_err(|e| Failure::Io(format!("serializing family: {e}")))?;
        Ok(format!(
            "# command={}\n# family={kind}\n# n_trunc={}\n# s_trunc={}\n# seed={}\n",
            self.command.name(),
            self.config.n_trunc,
            self.config.s_trunc,
            self.config.seed
        ))
    }

    fn csv_unsupported(&self) -> Failure {
        Failure::Config(format!(
            "format: csv is not available for {}; use json",
            self.command.name()
        ))
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(command: Command, config: &RunConfig) -> Result<Outcome, Failure> {
    let quadrature = config.kinetic.quadrature;
    let family = config.family.build(&quadrature)?;
    let cx = Context {
        command,
        config,
        family,
    };
    match command {
        Command::Coeffs => coeffs(&cx),
        Command::Eval => eval(&cx),
        Command::Boost => boost(&cx),
        Command::Verify => verify(&cx),
        Command::Kinetic => kinetic(&cx),
        Command::Subsystem => subsystem(&cx),
    }
}

#[derive(Serialize)]
struct CoeffRow {
    p: usize,
    q: usize,
    value: f64,
}

fn coeffs(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    let point = c.point.point()?;
    let mut rows = Vec::new();
    for p in 0..=c.coeffs.p_max {
        for q in 0..=c.coeffs.q_max {
            let value = k_pq(&cx.family, p, q, &point, c.s_trunc)
                .map_err(|e| Failure::from_core(&format!("coeffs k_{{{p},{q}}}"), e))?;
            rows.push(CoeffRow { p, q, value });
        }
    }
    let body = match c.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Table<'a> {
                point: closure14::coeffs::EquilibriumPoint,
                s_trunc: usize,
                rows: &'a [CoeffRow],
            }
            cx.json(Table {
                point,
                s_trunc: c.s_trunc,
                rows: &rows,
            })?
        }
        Format::Csv => {
            let mut s = String::from("p,q,S,lambda,lambda_ll,lambda_ppqq,value\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.p,
                    r.q,
                    c.s_trunc,
                    num(point.lambda),
                    num(point.lambda_ll),
                    num(point.lambda_ppqq),
                    num(r.value)
                ));
            }
            s + &cx.csv_footer()?
        }
    };
    Ok(Outcome {
        body,
        failing: Vec::new(),
    })
}

fn eval(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    if c.format == Format::Csv {
        return Err(cx.csv_unsupported());
    }
    let state = &c.state;
    if state.frame != Frame::Hatted {
        return Err(Failure::Config(
            "state.frame: eval needs a hatted state; use boost for lab states".into(),
        ));
    }
    let err = |e| Failure::from_core("state", e);
    #[derive(Serialize)]
    struct Eval<'a> {
        state: &'a MultiplierState,
        h: f64,
        phi: Vec3,
        moments: MomentSet,
    }
    let result = Eval {
        state,
        h: eval_h_hat(&cx.family, state, c.n_trunc, c.s_trunc).map_err(err)?,
        phi: eval_phi_hat(&cx.family, state, c.n_trunc, c.s_trunc).map_err(err)?,
        moments: moments_from_potentials(&cx.family, state, c.n_trunc, c.s_trunc).map_err(err)?,
    };
    Ok(Outcome {
        body: cx.json(result)?,
        failing: Vec::new(),
    })
}

fn boost(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    if c.format == Format::Csv {
        return Err(cx.csv_unsupported());
    }
    let lab = &c.boost.state;
    if lab.frame != Frame::Lab {
        return Err(Failure::Config(
            "boost.state.frame: boost needs a lab state".into(),
        ));
    }
    let v = BoostVelocity::new(c.boost.velocity)
        .map_err(|e| Failure::from_core("boost.velocity", e))?;
    let err = |e| Failure::from_core("boost.state", e);
    let hatted = hat_multipliers(lab, &v).map_err(err)?;
    let rest = moments_from_potentials(&cx.family, &hatted, c.n_trunc, c.s_trunc).map_err(err)?;
    #[derive(Serialize)]
    struct Boost<'a> {
        lab_state: &'a MultiplierState,
        velocity: Vec3,
        hatted_state: MultiplierState,
        potentials: PotentialPair,
        rest_moments: MomentSet,
        lab_moments: MomentSet,
    }
    let result = Boost {
        lab_state: lab,
        velocity: v.v,
        hatted_state: hatted,
        potentials: lab_potentials(&cx.family, lab, &v, c.n_trunc, c.s_trunc).map_err(err)?,
        rest_moments: rest,
        lab_moments: lab_moments_from_rest(&rest, &v),
    };
    Ok(Outcome {
        body: cx.json(result)?,
        failing: Vec::new(),
    })
}

fn records_csv(records: &[Record]) -> String {
    let mut s = String::from("condition,point_index,status,residual,tolerance\n");
    for r in records {
        let status = serde_json::to_value(r.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.condition,
            r.point_index,
            status,
            r.residual.map(num).unwrap_or_default(),
            num(r.tolerance)
        ));
    }
    s
}

fn failing(records: &[Record]) -> Vec<String> {
    let mut ids: Vec<String> = records
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.condition.clone())
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

fn verify(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    let report = run_all_with_kernel(&cx.family, Some(c.family.kernel()), &c.verify)
        .map_err(|e| Failure::from_core("verify", e))?;
    let body = match c.format {
        Format::Json => cx.json(&report)?,
        Format::Csv => records_csv(&report.records) + &cx.csv_footer()?,
    };
    Ok(Outcome {
        body,
        failing: report
            .failing_conditions()
            .into_iter()
            .map(str::to_owned)
            .collect(),
    })
}

fn kinetic(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    let k = &c.kinetic;
    if k.count == 0 || k.tolerance.is_nan() || k.tolerance <= 0.0 {
        return Err(Failure::Config(
            "kinetic: count and tolerance must be positive".into(),
        ));
    }
    let points = TestPointSet {
        count: k.count,
        lambda_ppqq_range: (0.0, 0.0),
        ..c.verify.points.clone()
    };
    points
        .validate()
        .map_err(|e| Failure::from_core("verify.points", e))?;
    let kernel = c.family.kernel();
    let records = check_kinetic_equivalence(
        &cx.family,
        kernel.as_ref(),
        &points.scalar_points(),
        k.pq_max,
        k.s_max,
        &k.quadrature,
        k.tolerance,
    );
    let max = records
        .iter()
        .filter_map(|r| r.residual)
        .fold(0.0f64, f64::max);
    let body = match c.format {
        Format::Json => {
            let mut report = VerificationReport {
                records: records.clone(),
                ..VerificationReport::default()
            };
            report.finalize();
            #[derive(Serialize)]
            struct Compare<'a> {
                kernel: String,
                max_relative_deviation: f64,
                tolerance: f64,
                report: &'a VerificationReport,
            }
            cx.json(Compare {
                kernel: kernel.name(),
                max_relative_deviation: max,
                tolerance: k.tolerance,
                report: &report,
            })?
        }
        Format::Csv => records_csv(&records) + &cx.csv_footer()?,
    };
    eprintln!(
        "max relative deviation {max:e} (tolerance {:e})",
        k.tolerance
    );
    Ok(Outcome {
        body,
        failing: failing(&records),
    })
}

fn subsystem(cx: &Context) -> Result<Outcome, Failure> {
    let c = cx.config;
    let tables = c
        .subsystem
        .lambdas
        .iter()
        .map(|&lambda| reduce_to_13(&cx.family, c.subsystem.q_max, lambda))
        .collect::<closure14::Result<Vec<SubsystemTable>>>()
        .map_err(|e| Failure::from_core("subsystem", e))?;
    let body = match c.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Reduction {
                note: &'static str,
                tables: Vec<SubsystemTable>,
            }
            cx.json(Reduction {
                note:
                    "I_q = alpha_q k~_{q/2}; integration constants c_q vanish for kinetic families",
                tables,
            })?
        }
        Format::Csv => {
            let mut s = String::from("lambda,q,value,c_q\n");
            for t in &tables {
                for e in &t.entries {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        num(t.lambda),
                        e.q,
                        num(e.value),
                        num(e.c_q)
                    ));
                }
            }
            s + &cx.csv_footer()?
        }
    };
    Ok(Outcome {
        body,
        failing: Vec::new(),
    })
}

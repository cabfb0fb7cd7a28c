use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use closure14::coeffs::{
    make_family, EquilibriumPoint, FamilyKind, FamilyOptions, GeneratingFamily,
};
use closure14::kinetic::{
    make_kinetic_family, ExpKernel, KineticKernel, PolyExpKernel, QuadratureSpec,
};
use closure14::potentials::{Frame, MultiplierState};
use closure14::symtensor::Vec3;
use closure14::verify::VerifyConfig;

use crate::fail::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Exponential,
    Polyexp,
    KineticExp,
    KineticXexp,
    FaultLadder,
}

fn one() -> f64 {
    1.0
}

fn default_poly() -> Vec<f64> {
    vec![1.0, 0.5]
}

fn fault_s() -> usize {
    1
}

fn fault_delta() -> f64 {
    50.0
}

/// Family selection. Closed-form families carry their kernel so the kinetic
/// oracle can be run against them; `fault-ladder` shifts one member of the
/// exponential family and skips the construction gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Exponential {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Polyexp {
        #[serde(default = "default_poly")]
        coeffs: Vec<f64>,
    },
    KineticExp {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Quadrature family for `F(x) = x e^{-x}`.
    KineticXexp,
    FaultLadder {
        #[serde(default = "fault_s")]
        s: usize,
        #[serde(default = "fault_delta")]
        delta: f64,
    },
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self::Exponential { amplitude: 1.0 }
    }
}

impl FamilySpec {
    pub fn name(&self) -> FamilyName {
        match self {
            Self::Exponential { .. } => FamilyName::Exponential,
            Self::Polyexp { .. } => FamilyName::Polyexp,
            Self::KineticExp { .. } => FamilyName::KineticExp,
            Self::KineticXexp => FamilyName::KineticXexp,
            Self::FaultLadder { .. } => FamilyName::FaultLadder,
        }
    }

    pub fn from_name(name: FamilyName) -> Self {
        match name {
            FamilyName::Exponential => Self::Exponential { amplitude: 1.0 },
            FamilyName::Polyexp => Self::Polyexp {
                coeffs: default_poly(),
            },
            FamilyName::KineticExp => Self::KineticExp { amplitude: 1.0 },
            FamilyName::KineticXexp => Self::KineticXexp,
            FamilyName::FaultLadder => Self::FaultLadder {
                s: fault_s(),
                delta: fault_delta(),
            },
        }
    }

    pub fn kernel(&self) -> Arc<dyn KineticKernel> {
        match self {
            Self::Exponential { amplitude } | Self::KineticExp { amplitude } => {
                Arc::new(ExpKernel {
                    amplitude: *amplitude,
                })
            }
            Self::Polyexp { coeffs } => Arc::new(PolyExpKernel {
                coeffs: coeffs.clone(),
            }),
            Self::KineticXexp => Arc::new(PolyExpKernel {
                coeffs: vec![0.0, 1.0],
            }),
            Self::FaultLadder { .. } => Arc::new(ExpKernel { amplitude: 1.0 }),
        }
    }

    pub fn build(&self, quadrature: &QuadratureSpec) -> Result<GeneratingFamily, Failure> {
        let options = FamilyOptions::default();
        let family = match self {
            Self::Exponential { amplitude } => make_family(
                &FamilyKind::Exponential {
                    amplitude: *amplitude,
                },
                &options,
            ),
            Self::Polyexp { coeffs } => make_family(
                &FamilyKind::PolyExp {
                    coeffs: coeffs.clone(),
                },
                &options,
            ),
            Self::KineticExp { .. } | Self::KineticXexp => {
                make_kinetic_family(self.kernel(), &options, quadrature)
            }
            Self::FaultLadder { s, delta } => make_family(
                &FamilyKind::Perturbed {
                    base: Box::new(FamilyKind::Exponential { amplitude: 1.0 }),
                    s: *s,
                    delta: *delta,
                },
                &options,
            ),
        };
        family.map_err(|e| Failure::from_core("family", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointConfig {
    pub lambda: f64,
    pub lambda_ll: f64,
    pub lambda_ppqq: f64,
}

impl Default for PointConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            lambda_ll: 1.0,
            lambda_ppqq: 0.0,
        }
    }
}

impl PointConfig {
    pub fn point(&self) -> Result<EquilibriumPoint, Failure> {
        EquilibriumPoint::new(self.lambda, self.lambda_ll, self.lambda_ppqq)
            .map_err(|e| Failure::from_core("point", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub p_max: usize,
    pub q_max: usize,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { p_max: 6, q_max: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    /// Lab-frame multipliers.
    pub state: MultiplierState,
    pub velocity: Vec3,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            state: MultiplierState::equilibrium(0.0, 1.0).with_frame(Frame::Lab),
            velocity: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticConfig {
    pub count: usize,
    /// Largest `p + q` compared.
    pub pq_max: usize,
    /// Largest series index compared.
    pub s_max: usize,
    pub tolerance: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for KineticConfig {
    fn default() -> Self {
        Self {
            count: 5,
            pq_max: 6,
            s_max: 4,
            tolerance: 1e-7,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsystemConfig {
    pub q_max: usize,
    pub lambdas: Vec<f64>,
}

impl Default for SubsystemConfig {
    fn default() -> Self {
        Self {
            q_max: 6,
            lambdas: vec![-0.5, 0.0, 0.5],
        }
    }
}

/// Resolved run configuration, embedded in every JSON output. The top-level
/// `n_trunc`, `s_trunc` and `seed` override the ones inside `verify.points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub n_trunc: usize,
    pub s_trunc: usize,
    pub seed: u64,
    pub format: Format,
    pub point: PointConfig,
    /// Hatted multipliers for `eval`.
    pub state: MultiplierState,
    pub coeffs: CoeffsConfig,
    pub boost: BoostConfig,
    pub kinetic: KineticConfig,
    pub subsystem: SubsystemConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilySpec::default(),
            n_trunc: 6,
            s_trunc: 4,
            seed: 0,
            format: Format::Json,
            point: PointConfig::default(),
            state: MultiplierState::equilibrium(0.0, 1.0),
            coeffs: CoeffsConfig::default(),
            boost: BoostConfig::default(),
            kinetic: KineticConfig::default(),
            subsystem: SubsystemConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub family: Option<FamilyName>,
    pub n_trunc: Option<usize>,
    pub s_trunc: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self, Failure> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Failure::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(de).map_err(|e| {
                    Failure::Config(format!(
                        "config {}: {}: {}",
                        p.display(),
                        e.path(),
                        e.inner()
                    ))
                })?
            }
            None => Self::default(),
        };
        if let Some(name) = flags.family {
            if config.family.name() != name {
                config.family = FamilySpec::from_name(name);
            }
        }
        if let Some(n) = flags.n_trunc {
            config.n_trunc = n;
        }
        if let Some(s) = flags.s_trunc {
            config.s_trunc = s;
        }
        if let Some(seed) = flags.seed {
            config.seed = seed;
        }
        if let Some(format) = flags.format {
            config.format = format;
        }
        config.verify.points.n_trunc = config.n_trunc;
        config.verify.points.s_trunc = config.s_trunc;
        config.verify.points.seed = config.seed;
        Ok(config)
    }
}

/// Rejects an output path that would overwrite the config file.
pub fn check_output(out: Option<&Path>, config: Option<&Path>) -> Result<(), Failure> {
    let (Some(out), Some(config)) = (out, config) else {
        return Ok(());
    };
    let canon = |p: &Path| -> Option<PathBuf> { std::fs::canonicalize(p).ok() };
    if canon(out).is_some() && canon(out) == canon(config) {
        return Err(Failure::Config(format!(
            "--out {} would overwrite the config file",
            out.display()
        )));
    }
    Ok(())
}

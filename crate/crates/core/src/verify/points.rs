use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::EquilibriumPoint;
use crate::error::{Error, Result};
use crate::potentials::{Frame, MultiplierState};
use crate::symtensor::{deviator, SymMatrix, Vec3};

/// Seeded sample of multiplier states. Every accessor reseeds, so the same
/// spec always yields the same points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestPointSet {
    pub seed: u64,
    pub count: usize,
    pub lambda_range: (f64, f64),
    pub lambda_ll_range: (f64, f64),
    /// Bound on every nonequilibrium component.
    pub epsilon: f64,
    pub lambda_ppqq_range: (f64, f64),
    pub n_trunc: usize,
    pub s_trunc: usize,
}

impl Default for TestPointSet {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 10,
            lambda_range: (-1.0, 1.0),
            lambda_ll_range: (0.5, 4.0),
            epsilon: 0.1,
            lambda_ppqq_range: (0.0, 0.05),
            n_trunc: 6,
            s_trunc: 4,
        }
    }
}

// independent streams so that adding a check never shifts another's points
const STREAM_HATTED: u64 = 1;
const STREAM_SCALAR: u64 = 2;
const STREAM_LAB: u64 = 3;

fn range_ok(r: (f64, f64)) -> bool {
    r.0.is_finite() && r.1.is_finite() && r.0 <= r.1
}

impl TestPointSet {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("lambda_range", self.lambda_range),
            ("lambda_ll_range", self.lambda_ll_range),
            ("lambda_ppqq_range", self.lambda_ppqq_range),
        ] {
            if !range_ok(r) {
                return Err(Error::Param(format!(
                    "{name} must be a finite, ordered interval, got {r:?}"
                )));
            }
        }
        if self.lambda_ll_range.0 <= 0.0 {
            return Err(Error::Domain(format!(
                "lambda_ll_range must lie in lambda_ll > 0, got {:?}",
                self.lambda_ll_range
            )));
        }
        if self.lambda_ppqq_range.0 < 0.0 {
            return Err(Error::Domain(format!(
                "lambda_ppqq_range must be nonnegative, got {:?}",
                self.lambda_ppqq_range
            )));
        }
        if !(0.0..=0.1).contains(&self.epsilon) {
            return Err(Error::Param(format!(
                "epsilon must lie in [0, 0.1], got {}",
                self.epsilon
            )));
        }
        if self.count == 0 {
            return Err(Error::Param("count must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn scalars(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let pick = |rng: &mut ChaCha8Rng, r: (f64, f64)| {
            if r.0 == r.1 {
                r.0
            } else {
                rng.gen_range(r.0..r.1)
            }
        };
        (
            pick(rng, self.lambda_range),
            pick(rng, self.lambda_ll_range),
            pick(rng, self.lambda_ppqq_range),
        )
    }

    fn small_vec(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let e = self.epsilon;
        if e == 0.0 {
            return [0.0; 3];
        }
        [(); 3].map(|_| rng.gen_range(-e..e))
    }

    /// Hatted states with every nonequilibrium component bounded by `epsilon`.
    pub fn hatted_states(&self) -> Vec<MultiplierState> {
        let mut rng = self.rng(STREAM_HATTED);
        (0..self.count)
            .map(|_| {
                let (lambda, l, q) = self.scalars(&mut rng);
                let lambda_i = self.small_vec(&mut rng);
                let lambda_ill = self.small_vec(&mut rng);
                let raw = if self.epsilon == 0.0 {
                    SymMatrix::zero()
                } else {
                    let e = self.epsilon;
                    SymMatrix::from_components([(); 6].map(|_| rng.gen_range(-e..e)))
                };
                MultiplierState {
                    frame: Frame::Hatted,
                    lambda,
                    lambda_i,
                    lambda_ij: SymMatrix::identity().scale(l / 3.0).add(&deviator(&raw)),
                    lambda_ill,
                    lambda_iill: q,
                }
            })
            .collect()
    }

    /// Equilibrium states at the same scalar ranges.
    pub fn equilibrium_states(&self) -> Vec<MultiplierState> {
        self.scalar_points()
            .into_iter()
            .map(|p| {
                let mut s = MultiplierState::equilibrium(p.lambda, p.lambda_ll);
                s.lambda_iill = p.lambda_ppqq;
                s
            })
            .collect()
    }

    /// Scalar arguments `(lambda, lambda_ll, lambda_ppqq)`.
    pub fn scalar_points(&self) -> Vec<EquilibriumPoint> {
        let mut rng = self.rng(STREAM_SCALAR);
        (0..self.count)
            .map(|_| {
                let (lambda, lambda_ll, lambda_ppqq) = self.scalars(&mut rng);
                EquilibriumPoint {
                    lambda,
                    lambda_ll,
                    lambda_ppqq,
                }
            })
            .collect()
    }

    /// Equilibrium-shaped lab states with `lambda_ppqq = 0`, the only shape the
    /// boost keeps inside a rank truncation.
    pub fn lab_states(&self) -> Vec<MultiplierState> {
        let mut rng = self.rng(STREAM_LAB);
        (0..self.count)
            .map(|_| {
                let (lambda, l, _) = self.scalars(&mut rng);
                MultiplierState::equilibrium(lambda, l).with_frame(Frame::Lab)
            })
            .collect()
    }
}

/// Coordinates of a sample as they appear in a report.
pub type Coords = BTreeMap<String, f64>;

pub fn point_coords(p: &EquilibriumPoint) -> Coords {
    [
        ("lambda", p.lambda),
        ("lambda_ll", p.lambda_ll),
        ("lambda_ppqq", p.lambda_ppqq),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn state_coords(s: &MultiplierState) -> Coords {
    let mut c = Coords::new();
    c.insert("lambda".into(), s.lambda);
    for (i, x) in s.lambda_i.iter().enumerate() {
        c.insert(format!("lambda_i[{i}]"), *x);
    }
    for (k, &(i, j)) in crate::symtensor::SYM_PAIRS.iter().enumerate() {
        c.insert(format!("lambda_ij[{i}{j}]"), s.lambda_ij.components()[k]);
    }
    for (i, x) in s.lambda_ill.iter().enumerate() {
        c.insert(format!("lambda_ill[{i}]"), *x);
    }
    c.insert("lambda_iill".into(), s.lambda_iill);
    c
}

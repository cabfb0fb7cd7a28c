//! Potentials `h'`, `phi'^k`, their Galilean transformation, and the moments
//! they generate.

mod boost;
mod eval;
mod moments;

pub use boost::{hat_multipliers, lab_moments_from_rest, lab_potentials, lab_potentials_with};
pub use eval::{eval_h_hat, eval_h_with, eval_phi_hat, eval_phi_with, PotentialArgs};
pub use moments::{moments_from_potentials, moments_with, moments_with_step};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symtensor::{SymMatrix, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Hatted,
}

/// Main field `(lambda, lambda_i, lambda_ij, lambda_ill, lambda_iill)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierState {
    pub frame: Frame,
    pub lambda: f64,
    pub lambda_i: Vec3,
    pub lambda_ij: SymMatrix,
    pub lambda_ill: Vec3,
    pub lambda_iill: f64,
}

impl MultiplierState {
    /// Hatted state whose only nonzero components are `lambda` and the
    /// isotropic `lambda_ij = (lambda_ll / 3) I`.
    pub fn equilibrium(lambda: f64, lambda_ll: f64) -> Self {
        Self {
            frame: Frame::Hatted,
            lambda,
            lambda_i: [0.0; 3],
            lambda_ij: SymMatrix::identity().scale(lambda_ll / 3.0),
            lambda_ill: [0.0; 3],
            lambda_iill: 0.0,
        }
    }

    pub fn with_frame(self, frame: Frame) -> Self {
        Self { frame, ..self }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda.is_finite()
            && self.lambda_iill.is_finite()
            && self.lambda_ij.is_finite()
            && self
                .lambda_i
                .iter()
                .chain(&self.lambda_ill)
                .all(|x| x.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Domain(
                "multiplier state has non-finite components".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame != frame {
            return Err(Error::Param(format!(
                "expected a {frame:?} multiplier state, got {:?}",
                self.frame
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentFrame {
    Rest,
    Lab,
}

/// Densities and fluxes. Flux blocks put the flux index `k` first:
/// `m_ki[k][i]`, `m_kij[k]` (symmetric in `(i, j)`), `m_kill[k][i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub frame: MomentFrame,
    pub m: f64,
    pub m_i: Vec3,
    pub m_ij: SymMatrix,
    pub m_ill: Vec3,
    pub m_iill: f64,
    pub m_k: Vec3,
    pub m_ki: [[f64; 3]; 3],
    pub m_kij: [SymMatrix; 3],
    pub m_kill: [[f64; 3]; 3],
    pub m_kiill: Vec3,
}

impl MomentSet {
    pub fn zero(frame: MomentFrame) -> Self {
        Self {
            frame,
            m: 0.0,
            m_i: [0.0; 3],
            m_ij: SymMatrix::zero(),
            m_ill: [0.0; 3],
            m_iill: 0.0,
            m_k: [0.0; 3],
            m_ki: [[0.0; 3]; 3],
            m_kij: [SymMatrix::zero(); 3],
            m_kill: [[0.0; 3]; 3],
            m_kiill: [0.0; 3],
        }
    }

    /// `m_kll`, the trace of the rank-3 flux over its last two indices.
    pub fn m_kll(&self) -> Vec3 {
        [
            self.m_kij[0].trace(),
            self.m_kij[1].trace(),
            self.m_kij[2].trace(),
        ]
    }

    /// Entry `(k, i, j)` of the rank-3 flux.
    pub fn m_kij_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.m_kij[k].get(i, j)
    }

    /// Largest violation of `m_ki = m_ik`.
    pub fn rank2_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                worst = worst.max((self.m_ki[k][i] - self.m_ki[i][k]).abs());
            }
        }
        worst
    }

    /// Largest violation of full symmetry of the rank-3 flux.
    pub fn rank3_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((self.m_kij_at(k, i, j) - self.m_kij_at(i, k, j)).abs());
                }
            }
        }
        worst
    }
}

/// Lab-frame potentials with their truncation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub h: f64,
    pub phi: Vec3,
    pub n_trunc: usize,
    pub s_trunc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostVelocity {
    pub v: Vec3,
}

impl BoostVelocity {
    pub fn new(v: Vec3) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!(
                "boost velocity must be finite, got {v:?}"
            )));
        }
        Ok(Self { v })
    }

    pub fn zero() -> Self {
        Self { v: [0.0; 3] }
    }
}

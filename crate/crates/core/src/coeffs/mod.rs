//! Scalar coefficient hierarchy built from a generating family.

pub mod closed;
pub mod family;
pub mod hierarchy;
pub mod subsystem;

pub use closed::{
    eta_literal, eta_product, k0q_closed, k0q_from_k00_monomial, k_pq_closed_monomial,
    EtaConvention,
};
pub use family::{
    ladder_factor, ladder_residual, make_family, FamilyKind, FamilyMembers, FamilyOptions,
    GeneratingFamily,
};
pub use hierarchy::{
    canonical_path, h_pqr, k00, k_pq, k_pq_along, k_s_value, phi_pqr, CoefficientKind,
    CoefficientRequest, CoefficientSource, DerivativeOrders, EquilibriumPoint, Monomial,
    ScaledCoefficient, Step,
};
pub use subsystem::{constraint_residuals, reduce_to_13, ConstraintResiduals, SubsystemTable};

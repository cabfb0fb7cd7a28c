//! Numerical verification of the closure conditions.

mod compat;
mod identities;
mod oracle;
mod points;
mod report;
mod run;
mod velocity;

pub use compat::{check_compatibility, check_compatibility_at, Differencing};
pub use identities::{
    check_closed_forms, check_constraints, check_scalar_identity_chain, LITERAL_ETA_FACTORS,
};
pub use oracle::{check_kinetic_equivalence, check_ladder, check_structure, check_subsystem};
pub use points::{point_coords, state_coords, Coords, TestPointSet};
pub use report::{
    relative_max, relative_max_above, relative_to_larger, Record, ReportMetadata, Status, Summary,
    VerificationReport, DERIVATIVE_FLOOR,
};
pub use run::{kernel_for, run_all, run_all_with_kernel, Tolerances, VerifyConfig};
pub use velocity::{check_velocity_independence, VelocityStudy};

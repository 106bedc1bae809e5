//! Agent vector fields, the switched-system integrator and the cone-condition validator.

mod feasibility;
mod integrate;
mod linear;
mod protocol;
mod vicsek;

pub use feasibility::{
    check_agent, check_state, local_box, validate_feasibility, AgentCheck, Assumption,
    FeasibilityReport, FeasibilityViolation, ValidationSettings, ViolationReason,
};
pub use integrate::{sample_times, simulate, SimulationConfig, Trajectory, DEFAULT_STEP};
pub use linear::{expm, linear_oracle_for, linear_oracle_solution, DenseMatrix};
pub use protocol::{
    consensus_field, rotated_field, signed_field, CustomField, ProtocolKind, ProtocolSpec, Rotation,
};
pub use vicsek::{heading_spread, normalize_angle, vicsek_step, NeighborRule, VicsekState};
